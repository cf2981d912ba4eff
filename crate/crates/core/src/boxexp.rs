//! Exponential box expectations `⟨e^{−κ|r|}⟩` over `[0,1]^m`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{optimal_step, CompensatedSum, DecayParams, LabeledTransform};
use crate::transform::{ConformalTransform, OuterMapKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxProblem {
    pub m: usize,
    pub kappa: f64,
}

impl BoxProblem {
    pub fn new(m: usize, kappa: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { m, kappa })
    }
}

pub const MAX_GAMMA_ORDER: usize = 20;
pub const MAX_TENSOR_DIM: usize = 5;

pub fn erf_value(u: f64) -> f64 {
    libm::erf(u)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `γ(m,a) = (m−1)! − e^{−a} Σ_j C(m−1,j)·j!·a^{m−1−j}`.
pub fn lower_incomplete_gamma_sum(m: usize, a: f64) -> Result<f64> {
    if m == 0 || m > MAX_GAMMA_ORDER {
        return Err(Error::Range(format!("order m = {m} outside 1..={MAX_GAMMA_ORDER}")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("argument must be positive, got {a}")));
    }
    let fm = factorial(m - 1);
    // C(m−1,j)·j! = (m−1)!/(m−1−j)!
    let tail: f64 = (0..m).map(|j| fm / factorial(m - 1 - j) * a.powi((m - 1 - j) as i32)).sum();
    Ok(fm - (-a).exp() * tail)
}

/// `γ(m,a)/a^m = ∫₀¹ x^{m−1} e^{−ax} dx`, without cancellation for small `a`.
pub fn scaled_incomplete_gamma(m: usize, a: f64) -> f64 {
    if a < 30.0 {
        let mut term = 1.0 / m as f64;
        let mut acc = CompensatedSum::default();
        acc.add(term);
        let mut k = 1;
        while term > 1e-17 * acc.value() {
            term *= a / (m + k) as f64;
            acc.add(term);
            k += 1;
        }
        (-a).exp() * acc.value()
    } else {
        let fm = factorial(m - 1);
        let tail: f64 = (0..m).map(|j| fm / factorial(j) / a.powi(m as i32 - j as i32)).sum();
        fm / a.powi(m as i32) - (-a).exp() * tail
    }
}

/// One-dimensional reduction `(1/2)(π/(2κ))^{(m−1)/2} ∫₀^∞ t^{(m−1)/2} e^{−κt/2} erf^m(√(κ/(2t))) dt`.
pub fn box_expectation_reduced(p: BoxProblem, n: usize) -> Result<f64> {
    let BoxProblem { m, kappa } = BoxProblem::new(p.m, p.kappa)?;
    let half = (m as f64 - 1.0) / 2.0;
    let f = move |t: f64| {
        if !(t > 0.0) || !t.is_finite() {
            return 0.0;
        }
        let e = erf_value((kappa / (2.0 * t)).sqrt());
        (half * t.ln() - 0.5 * kappa * t).exp() * e.powi(m as i32)
    };
    let lt = LabeledTransform::new(
        "de",
        ConformalTransform::double_exponential(OuterMapKind::SemiInfExp),
        DecayParams::double(1.0, FRAC_PI_2, FRAC_PI_4)?,
    );
    let integral = lt.integrate(&f, n)?;
    Ok(0.5 * (PI / (2.0 * kappa)).powf(half) * integral)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorVariant {
    Single,
    Double,
    Optimized,
}

impl TensorVariant {
    pub fn params(self) -> Result<DecayParams> {
        match self {
            TensorVariant::Single => DecayParams::single(1.0, 1.0, FRAC_PI_2),
            TensorVariant::Double => DecayParams::double(1.0, FRAC_PI_2, FRAC_PI_6),
            TensorVariant::Optimized => DecayParams::double(1.0, FRAC_PI_4, FRAC_PI_2),
        }
    }

    /// Node `(φ, φ′)` at `t` given `s = Σ_{j<ℓ} φ_j² + 1`.
    fn node(self, t: f64, s: f64) -> (f64, f64) {
        let (z, dz) = match self {
            TensorVariant::Single => (0.5 * t, 0.5),
            TensorVariant::Double => (FRAC_PI_2 * t.sinh(), FRAC_PI_2 * t.cosh()),
            TensorVariant::Optimized => {
                let u = s.sqrt().atan();
                (u * t.sinh(), u * t.cosh())
            }
        };
        let sech = 2.0 / (z.exp() + (-z).exp());
        (z.tanh(), dz * sech * sech)
    }

    fn depends_on_inner(self) -> bool {
        self == TensorVariant::Optimized
    }
}

impl fmt::Display for TensorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TensorVariant::Single => "single",
            TensorVariant::Double => "double",
            TensorVariant::Optimized => "optimized",
        })
    }
}

impl FromStr for TensorVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(TensorVariant::Single),
            "double" => Ok(TensorVariant::Double),
            "optimized" => Ok(TensorVariant::Optimized),
            _ => Err(Error::Config(format!("unknown tensor variant '{s}'"))),
        }
    }
}

struct Tensor {
    m: usize,
    kappa: f64,
    variant: TensorVariant,
    ts: Vec<f64>,
    /// Nodes for `s = 1` (all dimensions of the fixed maps, first of the optimized one).
    fixed: Vec<(f64, f64)>,
}

impl Tensor {
    fn integrand(&self, s: f64) -> f64 {
        let r = s.sqrt();
        scaled_incomplete_gamma(self.m, self.kappa * r)
    }

    /// Sum over dimensions `level..m−1` given the running `s` and weight.
    fn sweep(&self, level: usize, s: f64, weight: f64, acc: &mut CompensatedSum) {
        if level == self.m - 1 {
            acc.add(weight * self.integrand(s));
            return;
        }
        for (i, &t) in self.ts.iter().enumerate() {
            let (x, w) = if self.variant.depends_on_inner() {
                self.variant.node(t, s)
            } else {
                self.fixed[i]
            };
            if w == 0.0 {
                continue;
            }
            self.sweep(level + 1, s + x * x, weight * w, acc);
        }
    }
}

/// Tensor-product trapezoidal rule over `[−1,1]^{m−1}`.
pub fn box_expectation_tensor(p: BoxProblem, n: usize, variant: TensorVariant) -> Result<f64> {
    let BoxProblem { m, kappa } = BoxProblem::new(p.m, p.kappa)?;
    if !(2..=MAX_TENSOR_DIM).contains(&m) {
        return Err(Error::Range(format!("tensor rule supports 2 <= m <= {MAX_TENSOR_DIM}, got {m}")));
    }
    let step = optimal_step(&variant.params()?, n, false)?;
    let ts: Vec<f64> = (-(n as i64)..=n as i64).map(|k| k as f64 * step).collect();
    let fixed = ts.iter().map(|&t| variant.node(t, 1.0)).collect();
    let tensor = Tensor {
        m,
        kappa,
        variant,
        ts,
        fixed,
    };
    let slabs: Vec<f64> = (0..tensor.ts.len())
        .into_par_iter()
        .map(|i| {
            let (x, w) = tensor.fixed[i];
            let mut acc = CompensatedSum::default();
            if w != 0.0 {
                tensor.sweep(1, 1.0 + x * x, w, &mut acc);
            }
            acc.value()
        })
        .collect();
    let total: CompensatedSum = slabs.into_iter().collect();
    let h = step.powi(m as i32 - 1);
    Ok(m as f64 / 2f64.powi(m as i32 - 1) * h * total.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: [(usize, f64); 4] = [
        (2, 0.48499938727299484128),
        (3, 0.39822045268832304659),
        (4, 0.33843808769484390404),
        (5, 0.29379808187600761424),
    ];

    #[test]
    fn erf_examples() {
        assert_eq!(erf_value(0.0), 0.0);
        assert!((erf_value(10.0) - 1.0).abs() <= 1e-15);
        let series: f64 = (0..40)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / (factorial(k) * (2 * k + 1) as f64)
            })
            .sum::<f64>()
            * 2.0
            / PI.sqrt();
        assert!(((erf_value(1.0) - series) / series).abs() <= 1e-15);
        assert!((erf_value(1.0) - 0.84270079294971).abs() < 1e-14);
    }

    #[test]
    fn incomplete_gamma_examples() {
        let a = 0.7;
        assert!((lower_incomplete_gamma_sum(1, a).unwrap() - (1.0 - (-a).exp())).abs() < 1e-15);
        assert!((lower_incomplete_gamma_sum(2, 1.0).unwrap() - (1.0 - 2.0 / 1f64.exp())).abs() < 1e-15);
        assert!((lower_incomplete_gamma_sum(2, 1.0).unwrap() - 0.264241117657115).abs() < 1e-14);
        assert!((lower_incomplete_gamma_sum(5, 200.0).unwrap() - 24.0).abs() < 1e-12);
        assert!(lower_incomplete_gamma_sum(21, 1.0).is_err());
        assert!(lower_incomplete_gamma_sum(0, 1.0).is_err());
    }

    #[test]
    fn scaled_gamma_agrees_with_closed_form() {
        for m in 1..=6 {
            for a in [0.25_f64, 0.5, 1.0] {
                let taylor: f64 = (0..30)
                    .map(|k| (-a).powi(k) / (factorial(k as usize) * (m + k as usize) as f64))
                    .sum();
                let fused = scaled_incomplete_gamma(m, a);
                assert!(((taylor - fused) / taylor).abs() < 1e-14, "m={m} a={a}: {taylor} {fused}");
            }
            for a in [3.0, 12.0, 29.0, 31.0, 80.0] {
                let closed = lower_incomplete_gamma_sum(m, a).unwrap() / a.powi(m as i32);
                let fused = scaled_incomplete_gamma(m, a);
                assert!(((closed - fused) / closed).abs() < 1e-13, "m={m} a={a}: {closed} {fused}");
            }
        }
        // tiny a: ∫₀¹ x^{m−1} dx = 1/m
        assert!((scaled_incomplete_gamma(3, 1e-12) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_matches_table() {
        for (m, v) in TABLE {
            let r = box_expectation_reduced(BoxProblem::new(m, 1.0).unwrap(), 64).unwrap();
            assert!((r - v).abs() < 1e-12, "m={m}: {r} vs {v}");
        }
    }

    #[test]
    fn reduced_small_kappa_limit() {
        let r = box_expectation_reduced(BoxProblem::new(3, 1e-6).unwrap(), 64).unwrap();
        assert!((r - 1.0).abs() < 1e-5, "{r}");
    }

    #[test]
    fn optimized_first_map() {
        let (x, w) = TensorVariant::Optimized.node(0.3, 1.0);
        let z = FRAC_PI_4 * 0.3f64.sinh();
        assert!((x - z.tanh()).abs() < 1e-16);
        assert!((w - FRAC_PI_4 * 0.3f64.cosh() / z.cosh().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn tensor_m2_matches_reduced() {
        let p = BoxProblem::new(2, 1.0).unwrap();
        let r = box_expectation_tensor(p, 24, TensorVariant::Optimized).unwrap();
        assert!((r - TABLE[0].1).abs() < 1e-10, "{r}");
    }

    #[test]
    fn tensor_variants_order_for_m3() {
        let p = BoxProblem::new(3, 1.0).unwrap();
        let exact = TABLE[1].1;
        for n in [4, 8, 12, 16] {
            let e_opt = ((box_expectation_tensor(p, n, TensorVariant::Optimized).unwrap() - exact) / exact).abs();
            let e_de = ((box_expectation_tensor(p, n, TensorVariant::Double).unwrap() - exact) / exact).abs();
            assert!(e_opt <= e_de || e_de < 1e-14, "n={n}: {e_opt} vs {e_de}");
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(box_expectation_tensor(BoxProblem::new(6, 1.0).unwrap(), 4, TensorVariant::Single).is_err());
        assert!(box_expectation_tensor(BoxProblem::new(1, 1.0).unwrap(), 4, TensorVariant::Single).is_err());
        assert!(BoxProblem::new(0, 1.0).is_err());
        assert!(BoxProblem::new(2, -1.0).is_err());
    }
}
