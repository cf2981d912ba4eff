//! Sinc interpolation on transformed grids.

pub mod adaptive;
pub mod pade;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::ConformalTransform;

/// `sin(πa)` with exact zeros at the integers.
pub(crate) fn sin_pi(a: f64) -> f64 {
    if a.fract() == 0.0 {
        return 0.0;
    }
    let r = a - 2.0 * (0.5 * a).round();
    (PI * r).sin()
}

/// `cos(πa)` with exact values `±1` at the integers.
#[cfg(test)]
pub(crate) fn cos_pi(a: f64) -> f64 {
    if a.fract() == 0.0 {
        return if (a * 0.5).fract() == 0.0 { 1.0 } else { -1.0 };
    }
    let r = a - 2.0 * (0.5 * a).round();
    (PI * r).cos()
}

/// `S(j,h)(x) = sin(π(x/h − j)) / (π(x/h − j))`.
pub fn sinc_basis(j: i64, step: f64, x: f64) -> f64 {
    let a = x / step - j as f64;
    if a == 0.0 {
        return 1.0;
    }
    sin_pi(a) / (PI * a)
}

/// `Σ_j y_j S(j,h)(φ⁻¹(x))` over `j = −n..n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SincExpansion {
    /// `y_{−n}, …, y_{n}`.
    pub coefficients: Vec<f64>,
    pub step: f64,
    pub transform: ConformalTransform,
}

impl SincExpansion {
    pub fn new(coefficients: Vec<f64>, step: f64, transform: ConformalTransform) -> Result<Self> {
        if coefficients.len() % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "expansion needs 2n+1 coefficients, got {}",
                coefficients.len()
            )));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
        }
        Ok(Self {
            coefficients,
            step,
            transform,
        })
    }

    /// Interpolant of `f` at the nodes `φ(kh)`, `|k| ≤ n`.
    pub fn interpolate<F: Fn(f64) -> f64>(
        f: F,
        transform: ConformalTransform,
        n: usize,
        step: f64,
    ) -> Result<Self> {
        let coefficients = (-(n as i64)..=n as i64)
            .map(|k| f(transform.forward(k as f64 * step)))
            .collect();
        Self::new(coefficients, step, transform)
    }

    pub fn n(&self) -> usize {
        self.coefficients.len() / 2
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n() as i64;
        (-n..=n)
            .map(|k| self.transform.forward(k as f64 * self.step))
            .collect()
    }

    /// Value at the grid coordinate `t` (i.e. at `x = φ(t)`).
    pub fn eval_at_t(&self, t: f64) -> f64 {
        let n = self.n() as i64;
        let u = t / self.step;
        let k = u.round();
        if (u - k).abs() <= 4.0 * f64::EPSILON * k.abs().max(1.0) && k.abs() <= n as f64 {
            return self.coefficients[(k as i64 + n) as usize];
        }
        let s = sin_pi(u);
        let mut acc = 0.0;
        for (i, &y) in self.coefficients.iter().enumerate() {
            let j = i as i64 - n;
            let a = u - j as f64;
            // sin(π(u−j)) = (−1)^j sin(πu)
            let sj = if j % 2 == 0 { s } else { -s };
            acc += y * sj / (PI * a);
        }
        acc
    }

    /// Value at `x`, which must lie strictly inside the target interval.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let n = self.n() as i64;
        let t = self.transform.inverse(x)?;
        let k = (t / self.step).round();
        if k.abs() <= n as f64 && self.transform.forward(k * self.step) == x {
            return Ok(self.coefficients[(k as i64 + n) as usize]);
        }
        Ok(self.eval_at_t(t))
    }
}
