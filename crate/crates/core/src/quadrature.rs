//! Trapezoidal rule under a variable transformation, with the step sizes
//! prescribed by the single- and double-exponential convergence theorems.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{Abscissa, ConformalTransform};

/// Decay description of a transformed integrand.
///
/// Single-exponential: `|ω(x)| ~ exp(−β|x|^ρ)`; double-exponential:
/// `|ω(x)| ≤ α exp(−β₂ e^(γ|x|))`. `d` is the half-width of the strip of
/// analyticity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// `ρ` (single-exponential) or `γ` (double-exponential).
    pub rate: f64,
    /// `β` or `β₂`.
    pub beta: f64,
    pub d: f64,
    pub double_exponential: bool,
}

impl DecayParams {
    pub fn single(rho: f64, beta: f64, d: f64) -> Result<Self> {
        Self {
            rate: rho,
            beta,
            d,
            double_exponential: false,
        }
        .validated()
    }

    pub fn double(gamma: f64, beta2: f64, d: f64) -> Result<Self> {
        Self {
            rate: gamma,
            beta: beta2,
            d,
            double_exponential: true,
        }
        .validated()
    }

    /// `γ = 1`, `d = π/2`: the widest strip allowed for a sinh-type map.
    pub fn optimal(beta2: f64) -> Result<Self> {
        Self::double(1.0, beta2, PI / 2.0)
    }

    pub fn validated(self) -> Result<Self> {
        let positive = self.rate > 0.0 && self.beta > 0.0 && self.d > 0.0;
        if !positive || !self.rate.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "decay parameters must be positive: {self:?}"
            )));
        }
        if self.double_exponential && self.d * self.rate > PI / 2.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "d·γ = {} exceeds π/2",
                self.d * self.rate
            )));
        }
        if !self.double_exponential && self.rate < 1.0 {
            return Err(Error::InvalidParameter(format!("ρ = {} < 1", self.rate)));
        }
        Ok(self)
    }
}

/// `N = 2n+1` nodes at spacing `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub n: usize,
    pub step: f64,
}

impl RuleConfig {
    pub fn new(n: usize, step: f64) -> Result<Self> {
        if n == 0 || !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rule needs n >= 1 and a positive step, got n = {n}, step = {step}"
            )));
        }
        Ok(Self { n, step })
    }

    pub fn auto(params: &DecayParams, n: usize) -> Result<Self> {
        Self::new(n, optimal_step(params, n, false)?)
    }

    pub fn nodes(&self) -> usize {
        2 * self.n + 1
    }
}

/// Mesh size minimizing the error bound for `N = 2n+1` points.
///
/// Quadrature: `(2πd)^(1/(ρ+1)) (βn)^(−ρ/(ρ+1))` or `log(2πdγn/β₂)/(γn)`;
/// Sinc approximation: the same with `2πd` replaced by `πd`.
pub fn optimal_step(params: &DecayParams, n: usize, for_sinc: bool) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let p = params.validated()?;
    let nf = n as f64;
    let width = if for_sinc { PI * p.d } else { 2.0 * PI * p.d };
    if p.double_exponential {
        let argument = width * p.rate * nf / p.beta;
        if argument <= 1.0 {
            return Err(Error::DegenerateStep { n, argument });
        }
        Ok(argument.ln() / (p.rate * nf))
    } else {
        let rho = p.rate;
        Ok(width.powf(1.0 / (rho + 1.0)) * (p.beta * nf).powf(-rho / (rho + 1.0)))
    }
}

/// Integrand evaluated at transformed nodes.
pub trait Integrand: Sync {
    fn value(&self, p: &Abscissa) -> f64;

    /// `f(φ(t))·φ′(t)`. Endpoint-singular integrands override this so that
    /// an underflowed weight meeting a blown-up value yields its limit.
    fn weighted(&self, p: &Abscissa, weight: f64) -> f64 {
        match self.value(p) {
            v if v == 0.0 => 0.0,
            v => v * weight,
        }
    }
}

impl<F> Integrand for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn value(&self, p: &Abscissa) -> f64 {
        self(p.x)
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Weighted samples `f(φ(kh))φ′(kh)` for `k = −n..n`, in ascending `k`.
pub fn weighted_samples<F: Integrand + ?Sized>(
    f: &F,
    transform: &ConformalTransform,
    cfg: &RuleConfig,
) -> Result<Vec<f64>> {
    let n = cfg.n as i64;
    let values: Vec<f64> = (-n..=n)
        .into_par_iter()
        .map(|k| {
            let node = transform.node(k as f64 * cfg.step);
            if node.weight == 0.0 {
                return 0.0;
            }
            f.weighted(&node.point, node.weight)
        })
        .collect();
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            let k = i as i64 - n;
            return Err(Error::Evaluation {
                index: k,
                x: transform.forward(k as f64 * cfg.step),
                value: *v,
            });
        }
    }
    Ok(values)
}

/// `h Σ_{k=−n}^{n} f(φ(kh)) φ′(kh)`.
///
/// Nodes may be evaluated in parallel; the reduction is sequential in
/// ascending `k`, so results do not depend on the worker count.
pub fn trapezoid<F: Integrand + ?Sized>(
    f: &F,
    transform: &ConformalTransform,
    cfg: &RuleConfig,
) -> Result<f64> {
    let samples = weighted_samples(f, transform, cfg)?;
    Ok(cfg.step * samples.into_iter().collect::<CompensatedSum>().value())
}

/// A transformation together with the decay parameters used to pick its step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTransform {
    pub label: String,
    pub transform: ConformalTransform,
    pub params: DecayParams,
}

impl LabeledTransform {
    pub fn new(label: impl Into<String>, transform: ConformalTransform, params: DecayParams) -> Self {
        Self {
            label: label.into(),
            transform,
            params,
        }
    }

    pub fn integrate<F: Integrand + ?Sized>(&self, f: &F, n: usize) -> Result<f64> {
        trapezoid(f, &self.transform, &RuleConfig::auto(&self.params, n)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub transform: String,
    pub n: usize,
    pub evaluations: usize,
    pub value: f64,
    pub rel_error: f64,
}

/// Relative error of the trapezoidal rule for every transform and every `n`.
pub fn convergence_study<F: Integrand + ?Sized>(
    f: &F,
    reference: Option<f64>,
    transforms: &[LabeledTransform],
    n_values: &[usize],
) -> Result<Vec<StudyRow>> {
    let reference =
        reference.ok_or_else(|| Error::Config("convergence study needs a reference value".into()))?;
    let mut rows = Vec::with_capacity(transforms.len() * n_values.len());
    for lt in transforms {
        for &n in n_values {
            let value = lt.integrate(f, n)?;
            rows.push(StudyRow {
                transform: lt.label.clone(),
                n,
                evaluations: 2 * n + 1,
                value,
                rel_error: ((value - reference) / reference).abs(),
            });
        }
    }
    Ok(rows)
}

/// CSV with header `transform,n,evaluations,value,rel_error`; floats are
/// printed in shortest round-trip form.
pub fn study_to_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("transform,n,evaluations,value,rel_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:?},{:?}\n",
            r.transform, r.n, r.evaluations, r.value, r.rel_error
        ));
    }
    out
}
