//! Variable transformations `φ = ψ ∘ h` from the real line onto the canonical
//! integration domains.
//!
//! The outer map `ψ` is one of the four elementary maps that appear in every
//! classical double-exponential rule (tanh, sinh, log(eᶻ+1), exp). The inner
//! map `h` is usually a [`SinhPolyMap`], `u0·sinh t + u1 + u2·t + …`, which
//! reduces to the textbook `(π/2)·sinh t` when the polynomial part is empty.
//! Single-exponential rules and one literature map use the other
//! [`InnerMap`] variants.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outer map `ψ` of a double-exponential transformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterMapKind {
    /// `((b−a)/2)·tanh(z) + (b+a)/2`, onto `(a, b)`.
    FiniteTanh { a: f64, b: f64 },
    /// `sinh(z)`, onto `(−∞, ∞)`.
    InfiniteSinh,
    /// `log(eᶻ + 1)`, onto `(0, ∞)`.
    SemiInfLog,
    /// `exp(z)`, onto `(0, ∞)`.
    SemiInfExp,
}

/// A point of the target interval together with its distances to the two
/// endpoints, each computed without cancellation.
///
/// Integrands with endpoint singularities (`log(1−x)`, `1/√(1+x)`) should use
/// the gaps rather than forming `1 − x` themselves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Abscissa {
    pub x: f64,
    /// `x − a`; `+∞` for an infinite lower end.
    pub lower_gap: f64,
    /// `b − x`; `+∞` for an infinite upper end.
    pub upper_gap: f64,
}

impl Abscissa {
    pub fn interior(x: f64) -> Self {
        Self {
            x,
            lower_gap: f64::INFINITY,
            upper_gap: f64::INFINITY,
        }
    }
}

fn ctanh(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        let w = (-2.0 * z).exp();
        (1.0 - w) / (1.0 + w)
    } else {
        let w = (2.0 * z).exp();
        (w - 1.0) / (w + 1.0)
    }
}

fn csech2(z: Complex64) -> Complex64 {
    let w = if z.re >= 0.0 {
        (-2.0 * z).exp()
    } else {
        (2.0 * z).exp()
    };
    4.0 * w / ((1.0 + w) * (1.0 + w))
}

fn cexpm1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    Complex64::new(
        z.re.exp_m1() * c - 2.0 * half * half,
        z.re.exp() * s,
    )
}

fn domain<T>(msg: String) -> Result<T> {
    Err(Error::Domain(msg))
}

impl OuterMapKind {
    pub fn finite(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "finite interval requires a < b, got ({a}, {b})"
            )));
        }
        Ok(OuterMapKind::FiniteTanh { a, b })
    }

    /// Endpoints of the target interval.
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            OuterMapKind::FiniteTanh { a, b } => (a, b),
            OuterMapKind::InfiniteSinh => (f64::NEG_INFINITY, f64::INFINITY),
            OuterMapKind::SemiInfLog | OuterMapKind::SemiInfExp => (0.0, f64::INFINITY),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.interval();
        a < x && x < b
    }

    /// `ψ(z)`.
    pub fn forward(&self, z: Complex64) -> Complex64 {
        match *self {
            OuterMapKind::FiniteTanh { a, b } => 0.5 * (b - a) * ctanh(z) + 0.5 * (b + a),
            OuterMapKind::InfiniteSinh => z.sinh(),
            OuterMapKind::SemiInfLog => {
                if z.re > 0.0 {
                    z + (1.0 + (-z).exp()).ln()
                } else {
                    (1.0 + z.exp()).ln()
                }
            }
            OuterMapKind::SemiInfExp => z.exp(),
        }
    }

    /// `ψ′(z)`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        match *self {
            OuterMapKind::FiniteTanh { a, b } => 0.5 * (b - a) * csech2(z),
            OuterMapKind::InfiniteSinh => z.cosh(),
            OuterMapKind::SemiInfLog => 1.0 / (1.0 + (-z).exp()),
            OuterMapKind::SemiInfExp => z.exp(),
        }
    }

    /// Principal branch of `ψ⁻¹(w)`.
    pub fn inverse(&self, w: Complex64) -> Result<Complex64> {
        match *self {
            OuterMapKind::FiniteTanh { a, b } => {
                let zeta = (2.0 * w - (a + b)) / (b - a);
                if zeta.im == 0.0 && zeta.re.abs() >= 1.0 {
                    return domain(format!("{w} lies on the branch cut of atanh"));
                }
                Ok(0.5 * ((1.0 + zeta) / (1.0 - zeta)).ln())
            }
            OuterMapKind::InfiniteSinh => {
                if w.re == 0.0 && w.im.abs() > 1.0 {
                    return domain(format!("{w} lies on the branch cut of asinh"));
                }
                Ok(w.asinh())
            }
            OuterMapKind::SemiInfLog => {
                if w.re > 30.0 {
                    // log(eʷ − 1) = w + log(1 − e⁻ʷ)
                    return Ok(w + (1.0 - (-w).exp()).ln());
                }
                let v = cexpm1(w);
                if v.im == 0.0 && v.re <= 0.0 {
                    return domain(format!("{w} lies on the branch cut of log(e^w - 1)"));
                }
                Ok(v.ln())
            }
            OuterMapKind::SemiInfExp => {
                if w.im == 0.0 && w.re <= 0.0 {
                    return domain(format!("{w} lies on the branch cut of log"));
                }
                Ok(w.ln())
            }
        }
    }

    /// Real `ψ(y)` with endpoint gaps.
    pub fn forward_real(&self, y: f64) -> Abscissa {
        match *self {
            OuterMapKind::FiniteTanh { a, b } => {
                let len = b - a;
                let e = (-2.0 * y.abs()).exp();
                let (near, far) = (len * e / (1.0 + e), len / (1.0 + e));
                if y >= 0.0 {
                    Abscissa {
                        x: b - near,
                        lower_gap: far,
                        upper_gap: near,
                    }
                } else {
                    Abscissa {
                        x: a + near,
                        lower_gap: near,
                        upper_gap: far,
                    }
                }
            }
            OuterMapKind::InfiniteSinh => Abscissa::interior(y.sinh()),
            OuterMapKind::SemiInfLog => {
                let x = if y > 0.0 {
                    y + (-y).exp().ln_1p()
                } else {
                    y.exp().ln_1p()
                };
                Abscissa {
                    x,
                    lower_gap: x,
                    upper_gap: f64::INFINITY,
                }
            }
            OuterMapKind::SemiInfExp => {
                let x = y.exp();
                Abscissa {
                    x,
                    lower_gap: x,
                    upper_gap: f64::INFINITY,
                }
            }
        }
    }

    /// Real `ψ′(y)`.
    pub fn derivative_real(&self, y: f64) -> f64 {
        match *self {
            OuterMapKind::FiniteTanh { a, b } => {
                let e = (-2.0 * y.abs()).exp();
                0.5 * (b - a) * 4.0 * e / ((1.0 + e) * (1.0 + e))
            }
            OuterMapKind::InfiniteSinh => y.cosh(),
            OuterMapKind::SemiInfLog => 1.0 / (1.0 + (-y).exp()),
            OuterMapKind::SemiInfExp => y.exp(),
        }
    }

    /// Real `ψ⁻¹(x)` for `x` strictly inside the interval.
    pub fn inverse_real(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            return domain(format!("{x} is outside the open interval {:?}", self.interval()));
        }
        Ok(match *self {
            OuterMapKind::FiniteTanh { a, b } => 0.5 * ((x - a) / (b - x)).ln(),
            OuterMapKind::InfiniteSinh => x.asinh(),
            OuterMapKind::SemiInfLog => {
                if x > 30.0 {
                    x + (-(-x).exp()).ln_1p()
                } else {
                    x.exp_m1().ln()
                }
            }
            OuterMapKind::SemiInfExp => x.ln(),
        })
    }

    /// Scale relating `u0` to the lower decay constant `β₂` of the composed map.
    pub fn beta_factor(&self) -> f64 {
        match self {
            OuterMapKind::FiniteTanh { .. } => 0.5,
            _ => 1.0,
        }
    }
}

/// `h(t) = u0·sinh(t) + Σⱼ uⱼ·t^(j−1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinhPolyMap {
    pub u0: f64,
    /// Polynomial coefficients `u1, u2, …` (constant term first).
    pub u: Vec<f64>,
    /// Real parts `x_k` of the strip-boundary points `x_k + iπ/2` that the
    /// parameter program pinned to singularity pre-images.
    #[serde(default)]
    pub abscissas: Vec<f64>,
}

impl SinhPolyMap {
    pub fn new(u0: f64, u: Vec<f64>) -> Result<Self> {
        if !(u0 > 0.0) || !u0.is_finite() {
            return Err(Error::InvalidParameter(format!("u0 must be positive, got {u0}")));
        }
        Ok(Self {
            u0,
            u,
            abscissas: Vec::new(),
        })
    }

    /// The classical `(π/2)·sinh t`.
    pub fn plain() -> Self {
        Self {
            u0: FRAC_PI_2,
            u: Vec::new(),
            abscissas: Vec::new(),
        }
    }

    fn poly(&self, t: Complex64) -> Complex64 {
        self.u
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c)
    }

    fn poly_deriv(&self, t: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &c) in self.u.iter().enumerate().skip(1).rev() {
            acc = acc * t + c * j as f64;
        }
        acc
    }

    pub fn eval(&self, t: Complex64) -> Complex64 {
        self.u0 * t.sinh() + self.poly(t)
    }

    pub fn deriv(&self, t: Complex64) -> Complex64 {
        self.u0 * t.cosh() + self.poly_deriv(t)
    }

    pub fn second_deriv(&self, t: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &c) in self.u.iter().enumerate().skip(2).rev() {
            acc = acc * t + c * (j * (j - 1)) as f64;
        }
        self.u0 * t.sinh() + acc
    }

    pub fn eval_real(&self, t: f64) -> f64 {
        self.u0 * t.sinh() + self.u.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn deriv_real(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &c) in self.u.iter().enumerate().skip(1).rev() {
            acc = acc * t + c * j as f64;
        }
        self.u0 * t.cosh() + acc
    }
}

/// Inner map `h` of a composed transformation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerMap {
    SinhPoly(SinhPolyMap),
    /// `scale·t`; single-exponential rules.
    Linear { scale: f64 },
    /// `rate·t − damping·e^(−t)`.
    ExpLinear { rate: f64, damping: f64 },
}

impl InnerMap {
    pub fn eval(&self, t: Complex64) -> Complex64 {
        match self {
            InnerMap::SinhPoly(m) => m.eval(t),
            InnerMap::Linear { scale } => *scale * t,
            InnerMap::ExpLinear { rate, damping } => *rate * t - *damping * (-t).exp(),
        }
    }

    pub fn deriv(&self, t: Complex64) -> Complex64 {
        match self {
            InnerMap::SinhPoly(m) => m.deriv(t),
            InnerMap::Linear { scale } => Complex64::new(*scale, 0.0),
            InnerMap::ExpLinear { rate, damping } => *rate + *damping * (-t).exp(),
        }
    }

    pub fn eval_real(&self, t: f64) -> f64 {
        match self {
            InnerMap::SinhPoly(m) => m.eval_real(t),
            InnerMap::Linear { scale } => scale * t,
            InnerMap::ExpLinear { rate, damping } => rate * t - damping * (-t).exp(),
        }
    }

    pub fn deriv_real(&self, t: f64) -> f64 {
        match self {
            InnerMap::SinhPoly(m) => m.deriv_real(t),
            InnerMap::Linear { scale } => *scale,
            InnerMap::ExpLinear { rate, damping } => rate + damping * (-t).exp(),
        }
    }

    /// Solves `h(t) = y` for real `y`; `h` must be increasing.
    pub fn inverse_real(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return domain(format!("cannot invert the inner map at {y}"));
        }
        if let InnerMap::Linear { scale } = self {
            return Ok(y / scale);
        }
        solve_increasing(|t| self.eval_real(t) - y, |t| self.deriv_real(t), 0.0)
    }
}

/// Root of an increasing function by Newton's method with a bisection
/// safeguard on a geometrically grown bracket.
pub(crate) fn solve_increasing<F, D>(f: F, df: D, start: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let f0 = f(start);
    if f0 == 0.0 {
        return Ok(start);
    }
    let (mut lo, mut hi) = (start, start);
    let mut width = 1.0;
    if f0 < 0.0 {
        hi = start + width;
        while f(hi) < 0.0 {
            lo = hi;
            width *= 2.0;
            hi = start + width;
            if width > 1e6 {
                return domain("failed to bracket the inverse".into());
            }
        }
    } else {
        lo = start - width;
        while f(lo) > 0.0 {
            hi = lo;
            width *= 2.0;
            lo = start - width;
            if width > 1e6 {
                return domain("failed to bracket the inverse".into());
            }
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let ft = f(t);
        if ft == 0.0 {
            return Ok(t);
        }
        if ft < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let slope = df(t);
        let newton = t - ft / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0) || hi - lo <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// Quadrature node: transformed abscissa and weight `φ′(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub t: f64,
    pub point: Abscissa,
    pub weight: f64,
}

/// `φ(t) = ψ(h(t))`; without an outer map `φ = h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalTransform {
    pub outer: Option<OuterMapKind>,
    pub inner: InnerMap,
}

impl ConformalTransform {
    pub fn new(outer: OuterMapKind, inner: InnerMap) -> Self {
        Self {
            outer: Some(outer),
            inner,
        }
    }

    /// Classical double-exponential rule: `ψ((π/2)·sinh t)`.
    pub fn double_exponential(outer: OuterMapKind) -> Self {
        Self::new(outer, InnerMap::SinhPoly(SinhPolyMap::plain()))
    }

    /// Single-exponential rule of the same family (`tanh(t/2)`, `sinh t`,
    /// `log(eᵗ+1)`, `eᵗ`).
    pub fn single_exponential(outer: OuterMapKind) -> Self {
        let scale = match outer {
            OuterMapKind::FiniteTanh { .. } => 0.5,
            _ => 1.0,
        };
        Self::new(outer, InnerMap::Linear { scale })
    }

    pub fn optimized(outer: OuterMapKind, map: SinhPolyMap) -> Self {
        Self::new(outer, InnerMap::SinhPoly(map))
    }

    /// `φ(t) = t`, the unmapped Sinc grid on the real line.
    pub fn identity() -> Self {
        Self {
            outer: None,
            inner: InnerMap::Linear { scale: 1.0 },
        }
    }

    pub fn sinh_poly(&self) -> Option<&SinhPolyMap> {
        match &self.inner {
            InnerMap::SinhPoly(m) => Some(m),
            _ => None,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        self.outer
            .map(|o| o.interval())
            .unwrap_or((f64::NEG_INFINITY, f64::INFINITY))
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.interval();
        a < x && x < b
    }

    pub fn node(&self, t: f64) -> Node {
        let y = self.inner.eval_real(t);
        let dy = self.inner.deriv_real(t);
        match &self.outer {
            Some(o) => Node {
                t,
                point: o.forward_real(y),
                weight: o.derivative_real(y) * dy,
            },
            None => Node {
                t,
                point: Abscissa::interior(y),
                weight: dy,
            },
        }
    }

    pub fn forward(&self, t: f64) -> f64 {
        self.node(t).point.x
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.node(t).weight
    }

    pub fn forward_complex(&self, t: Complex64) -> Complex64 {
        let y = self.inner.eval(t);
        match &self.outer {
            Some(o) => o.forward(y),
            None => y,
        }
    }

    pub fn derivative_complex(&self, t: Complex64) -> Complex64 {
        let dy = self.inner.deriv(t);
        match &self.outer {
            Some(o) => o.derivative(self.inner.eval(t)) * dy,
            None => dy,
        }
    }

    /// `φ⁻¹(x)` for `x` strictly inside the target interval.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            return domain(format!(
                "{x} is outside the open interval {:?}",
                self.interval()
            ));
        }
        let y = match &self.outer {
            Some(o) => o.inverse_real(x)?,
            None => x,
        };
        self.inner.inverse_real(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn outer_forward_examples() {
        let unit = OuterMapKind::finite(0.0, 1.0).unwrap();
        assert_eq!(unit.forward(c(0.0, 0.0)), c(0.5, 0.0));
        let w = OuterMapKind::InfiniteSinh.forward(c(0.0, FRAC_PI_2));
        assert!((w - c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(OuterMapKind::SemiInfExp.forward(c(0.0, 0.0)), c(1.0, 0.0));
    }

    #[test]
    fn outer_inverse_examples() {
        let sym = OuterMapKind::finite(-1.0, 1.0).unwrap();
        assert!((sym.inverse(c(0.0, 1.0)).unwrap() - c(0.0, FRAC_PI_4)).norm() < 1e-15);
        let unit = OuterMapKind::finite(0.0, 1.0).unwrap();
        assert!((unit.inverse(c(0.5, 0.5)).unwrap() - c(0.0, FRAC_PI_4)).norm() < 1e-15);
        assert_eq!(OuterMapKind::SemiInfExp.inverse(c(1.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn branch_cuts_are_domain_errors() {
        let sym = OuterMapKind::finite(-1.0, 1.0).unwrap();
        assert!(matches!(sym.inverse(c(2.0, 0.0)), Err(Error::Domain(_))));
        assert!(OuterMapKind::InfiniteSinh.inverse(c(0.0, 2.0)).is_err());
        assert!(OuterMapKind::SemiInfExp.inverse(c(-1.0, 0.0)).is_err());
        assert!(OuterMapKind::SemiInfLog.inverse(c(-1.0, 0.0)).is_err());
        assert!(OuterMapKind::finite(1.0, 1.0).is_err());
    }

    #[test]
    fn outer_round_trip_on_strip() {
        let kinds = [
            OuterMapKind::finite(-2.0, 3.0).unwrap(),
            OuterMapKind::InfiniteSinh,
            OuterMapKind::SemiInfLog,
            OuterMapKind::SemiInfExp,
        ];
        for kind in kinds {
            let far = if matches!(kind, OuterMapKind::FiniteTanh { .. }) { 8.0 } else { 40.0 };
            for &z in &[c(0.3, 0.4), c(-1.2, 1.1), c(2.0, -0.7), c(far, 0.3)] {
                let back = kind.inverse(kind.forward(z)).unwrap();
                assert!((back - z).norm() < 1e-10 * z.norm().max(1.0), "{kind:?} {z} {back}");
            }
        }
    }

    #[test]
    fn complex_derivative_matches_difference() {
        let kinds = [
            OuterMapKind::finite(0.0, 1.0).unwrap(),
            OuterMapKind::InfiniteSinh,
            OuterMapKind::SemiInfLog,
            OuterMapKind::SemiInfExp,
        ];
        let z = c(0.4, 0.9);
        let dz = 1e-6;
        for kind in kinds {
            let fd = (kind.forward(z + dz) - kind.forward(z - dz)) / (2.0 * dz);
            assert!((fd - kind.derivative(z)).norm() < 1e-8, "{kind:?}");
        }
    }

    #[test]
    fn map_eval_examples() {
        let m = SinhPolyMap::new(FRAC_PI_4, vec![]).unwrap();
        assert_eq!(m.eval(c(0.0, 0.0)), c(0.0, 0.0));
        let m = SinhPolyMap::new(1.0, vec![]).unwrap();
        let x = 0.8;
        assert!((m.eval(c(x, FRAC_PI_2)) - c(0.0, x.cosh())).norm() < 1e-15);
        let m = SinhPolyMap::new(0.13912, vec![0.19081, 0.21938]).unwrap();
        let expect = 0.13912 * 1f64.sinh() + 0.19081 + 0.21938;
        assert_abs_diff_eq!(m.eval(c(1.0, 0.0)).re, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(m.eval_real(1.0), expect, epsilon = 1e-15);
    }

    #[test]
    fn map_derivatives() {
        let m = SinhPolyMap::new(0.3, vec![0.1, -0.2, 0.05, 0.01]).unwrap();
        let t = c(0.7, 0.2);
        let d = 1e-6;
        let fd = (m.eval(t + d) - m.eval(t - d)) / (2.0 * d);
        assert!((fd - m.deriv(t)).norm() < 1e-9);
        let fd2 = (m.deriv(t + d) - m.deriv(t - d)) / (2.0 * d);
        assert!((fd2 - m.second_deriv(t)).norm() < 1e-8);
        assert_abs_diff_eq!(m.deriv_real(0.7), m.deriv(c(0.7, 0.0)).re, epsilon = 1e-14);
        assert!(SinhPolyMap::new(0.0, vec![]).is_err());
    }

    #[test]
    fn strip_identity() {
        let m = SinhPolyMap::new(0.4, vec![0.2, -0.3, 0.07]).unwrap();
        for &x in &[-2.0, -0.5, 0.0, 1.3, 3.0] {
            let z = c(x, FRAC_PI_2);
            let assembled = c(0.0, m.u0 * f64::cosh(x))
                + m.u.iter().enumerate().map(|(j, &u)| u * z.powi(j as i32)).sum::<Complex64>();
            assert!((m.eval(z) - assembled).norm() < 1e-14);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let t = ConformalTransform::double_exponential(OuterMapKind::finite(0.0, 1.0).unwrap());
        let x = 0.7;
        let back = t.forward(t.inverse(x).unwrap());
        assert_abs_diff_eq!(back, x, epsilon = 1e-12);
        let sinh = ConformalTransform::double_exponential(OuterMapKind::InfiniteSinh);
        assert_eq!(sinh.inverse(0.0).unwrap(), 0.0);
        assert!(t.inverse(1.0).is_err());
        assert!(t.inverse(-0.1).is_err());
    }

    #[test]
    fn inverse_near_endpoint_matches_bisection() {
        let t = ConformalTransform::optimized(
            OuterMapKind::finite(-1.0, 1.0).unwrap(),
            SinhPolyMap::new(0.13912, vec![0.19081, 0.21938]).unwrap(),
        );
        let x = 1.0 - 1e-12;
        let s = t.inverse(x).unwrap();
        // bisection oracle on the monotone map
        let (mut lo, mut hi) = (-50.0f64, 50.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if t.node(mid).point.upper_gap > 1e-12 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((s - lo).abs() < 1e-3, "{s} vs {lo}");
        assert!((t.forward(s) - x).abs() <= 1e-14);
    }

    #[test]
    fn endpoint_gaps_are_accurate() {
        let t = ConformalTransform::double_exponential(OuterMapKind::finite(-1.0, 1.0).unwrap());
        let node = t.node(4.0);
        let y = FRAC_PI_2 * 4f64.sinh();
        let expect = 2.0 / ((2.0 * y).exp() + 1.0);
        assert!(((node.point.upper_gap - expect) / expect).abs() < 1e-13);
        assert_eq!(node.point.x, 1.0);
    }

    #[test]
    fn single_exponential_maps() {
        let t = ConformalTransform::single_exponential(OuterMapKind::finite(-1.0, 1.0).unwrap());
        assert_abs_diff_eq!(t.forward(1.0), (0.5f64).tanh(), epsilon = 1e-15);
        let t = ConformalTransform::single_exponential(OuterMapKind::SemiInfLog);
        assert_abs_diff_eq!(t.forward(0.3), (0.3f64.exp() + 1.0).ln(), epsilon = 1e-15);
        let id = ConformalTransform::identity();
        assert_eq!(id.forward(PI), PI);
        assert_eq!(id.inverse(-2.5).unwrap(), -2.5);
    }
}
