//! Problem descriptions: user expressions and the built-in test integrals.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::optimizer::{beta2_of, optimize_map, OptimizerOptions, SingularitySet};
use crate::quadrature::{DecayParams, Integrand, LabeledTransform};
use crate::transform::{Abscissa, ConformalTransform, InnerMap, OuterMapKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogId {
    /// Endpoint singularities on `[−1, 1]` plus two conjugate pairs.
    Example1,
    /// Four conjugate pairs on the real line.
    Example2,
    /// `x/(1 + x⁶ sinh²x)` on `(0, ∞)`.
    Example3,
    /// Pole and branch-point pairs on `(0, ∞)`.
    Example4,
    /// `x(1−x)e^(−x)/((1/2)² + (x−1/2)²)` on `[0, 1]`.
    Example5,
    /// `tanh x/(x(1+x²))` on the real line.
    TanhIntegral,
    /// Three-Lorentzian traveling wave of the forced Benjamin-Ono equation.
    BenjaminOno,
}

impl CatalogId {
    pub const ALL: [CatalogId; 7] = [
        CatalogId::Example1,
        CatalogId::Example2,
        CatalogId::Example3,
        CatalogId::Example4,
        CatalogId::Example5,
        CatalogId::TanhIntegral,
        CatalogId::BenjaminOno,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CatalogId::Example1 => "ex1",
            CatalogId::Example2 => "ex2",
            CatalogId::Example3 => "ex3",
            CatalogId::Example4 => "ex4",
            CatalogId::Example5 => "ex5",
            CatalogId::TanhIntegral => "tanh",
            CatalogId::BenjaminOno => "bo",
        }
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CatalogId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CatalogId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown catalog entry '{s}'")))
    }
}

fn lorentz(x: f64, delta: f64, eps: f64) -> f64 {
    let d = x - delta;
    eps * eps + d * d
}

/// Built-in integrand, evaluated directly from endpoint gaps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatalogIntegrand(pub CatalogId);

impl CatalogIntegrand {
    /// Value without the `1/√(1+x)` factor of Example 1, which is folded
    /// into the weight.
    fn regular_part(&self, p: &Abscissa) -> f64 {
        let x = p.x;
        match self.0 {
            CatalogId::Example1 => {
                (1.0 / lorentz(x, -0.5, 1.0)).exp() * p.upper_gap.ln() / lorentz(x, 0.5, 0.5)
            }
            CatalogId::Example2 => {
                if !x.is_finite() {
                    return 0.0;
                }
                (10.0 / lorentz(x, -2.0, 1.0)).exp() * (10.0 / lorentz(x, -1.0, 0.5)).cos()
                    / (lorentz(x, 1.0, 0.25) * lorentz(x, 2.0, 1.0).sqrt())
            }
            CatalogId::Example3 => {
                if !x.is_finite() || x > 700.0 {
                    return 0.0;
                }
                let s = x.sinh();
                x / (1.0 + x.powi(6) * s * s)
            }
            CatalogId::Example4 => {
                if !x.is_finite() {
                    return 0.0;
                }
                x / (lorentz(x, 1.0, 1.0).sqrt()
                    * lorentz(x, 2.0, 0.5)
                    * lorentz(x, 3.0, 1.0 / 3.0))
            }
            CatalogId::Example5 => {
                p.lower_gap * p.upper_gap * (-x).exp() / lorentz(x, 0.5, 0.5)
            }
            CatalogId::TanhIntegral => {
                if !x.is_finite() {
                    return 0.0;
                }
                let r = if x == 0.0 { 1.0 } else { x.tanh() / x };
                r / (1.0 + x * x)
            }
            CatalogId::BenjaminOno => bo_solution(x),
        }
    }
}

impl Integrand for CatalogIntegrand {
    fn value(&self, p: &Abscissa) -> f64 {
        let v = self.regular_part(p);
        match self.0 {
            CatalogId::Example1 => v / p.lower_gap.sqrt(),
            _ => v,
        }
    }

    fn weighted(&self, p: &Abscissa, weight: f64) -> f64 {
        let v = self.regular_part(p);
        if v == 0.0 || weight == 0.0 {
            return 0.0;
        }
        match self.0 {
            CatalogId::Example1 => v * (weight / p.lower_gap.sqrt()),
            _ => v * weight,
        }
    }
}

/// Lorentzian triples `(δ, ε)` of the Benjamin-Ono traveling wave.
pub const BO_LORENTZIANS: [(f64, f64); 3] = [(-1.0, 0.3), (0.0, 0.1), (1.0, 0.2)];
/// Wave speed of the Benjamin-Ono configuration.
pub const BO_WAVE_SPEED: f64 = 1.0;

fn bo_solution(x: f64) -> f64 {
    BO_LORENTZIANS
        .iter()
        .map(|&(d, e)| e * e / lorentz(x, d, e))
        .sum()
}

/// Integrand source of a [`ProblemSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    Catalog { catalog: CatalogId },
    Expression(Expr),
}

impl Integrand for Source {
    fn value(&self, p: &Abscissa) -> f64 {
        match self {
            Source::Catalog { catalog } => CatalogIntegrand(*catalog).value(p),
            Source::Expression(e) => e.eval(p.x),
        }
    }

    fn weighted(&self, p: &Abscissa, weight: f64) -> f64 {
        match self {
            Source::Catalog { catalog } => CatalogIntegrand(*catalog).weighted(p, weight),
            Source::Expression(e) => e.eval(p.x) * weight,
        }
    }
}

/// An integral to evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub integrand: Source,
    pub domain: OuterMapKind,
    pub singularities: Option<SingularitySet>,
    pub reference: Option<f64>,
    /// The integrand combines endpoint factors with `φ′` itself.
    pub fused_weight: bool,
}

fn pts(v: &[(f64, f64)]) -> SingularitySet {
    SingularitySet::new(v.iter().map(|&(r, i)| Complex64::new(r, i)))
        .expect("catalog singularities lie off the real axis")
}

impl ProblemSpec {
    pub fn catalog(id: CatalogId) -> ProblemSpec {
        let (domain, singular, reference): (OuterMapKind, &[(f64, f64)], Option<f64>) = match id {
            CatalogId::Example1 => (
                OuterMapKind::FiniteTanh { a: -1.0, b: 1.0 },
                &[(-0.5, 1.0), (0.5, 0.5)],
                Some(-2.046450811606947486904),
            ),
            CatalogId::Example2 => (
                OuterMapKind::InfiniteSinh,
                &[(-2.0, 1.0), (-1.0, 0.5), (1.0, 0.25), (2.0, 1.0)],
                Some(15.013361987606277010103),
            ),
            // Nearest zeros of 1 + x⁶ sinh²x in the upper half plane.
            CatalogId::Example3 => (
                OuterMapKind::SemiInfLog,
                &[
                    (0.90654846, 0.34901653),
                    (-0.90654846, 0.34901653),
                    (0.03219525, 3.14258209),
                ],
                Some(0.503686664239138510865),
            ),
            CatalogId::Example4 => (
                OuterMapKind::SemiInfExp,
                &[(1.0, 1.0), (2.0, 0.5), (3.0, 1.0 / 3.0)],
                Some(12.556127264957145752407),
            ),
            CatalogId::Example5 => (
                OuterMapKind::FiniteTanh { a: 0.0, b: 1.0 },
                &[(0.5, 0.5)],
                Some(0.353533443018969270527),
            ),
            // Poles on the imaginary axis; no finite pre-image set.
            CatalogId::TanhIntegral => (
                OuterMapKind::InfiniteSinh,
                &[],
                Some(2.079754700120171489682),
            ),
            // ∫ y = π Σ ε
            CatalogId::BenjaminOno => (
                OuterMapKind::InfiniteSinh,
                &[(-1.0, 0.3), (0.0, 0.1), (1.0, 0.2)],
                Some(0.6 * PI),
            ),
        };
        ProblemSpec {
            integrand: Source::Catalog { catalog: id },
            domain,
            singularities: (!singular.is_empty()).then(|| pts(singular)),
            reference,
            fused_weight: matches!(id, CatalogId::Example1),
        }
    }

    pub fn from_expression(src: &str, domain: OuterMapKind) -> Result<ProblemSpec> {
        Ok(ProblemSpec {
            integrand: Source::Expression(crate::expr::parse(src)?),
            domain,
            singularities: None,
            reference: None,
            fused_weight: false,
        })
    }

    pub fn catalog_id(&self) -> Option<CatalogId> {
        match self.integrand {
            Source::Catalog { catalog } => Some(catalog),
            Source::Expression(_) => None,
        }
    }

    /// Optimized transformation for the declared singularities.
    pub fn optimized_transform(&self, opts: &OptimizerOptions) -> Result<LabeledTransform> {
        let s = self.singularities.as_ref().ok_or_else(|| {
            Error::Config("the optimized map needs declared singularities".into())
        })?;
        let sol = optimize_map(s, &self.domain, opts)?;
        let beta2 = beta2_of(&sol.map, &self.domain);
        Ok(LabeledTransform::new(
            "opt",
            ConformalTransform::optimized(self.domain, sol.map),
            DecayParams::optimal(beta2)?,
        ))
    }

    /// Classical single-exponential transformation with its decay parameters.
    pub fn single_exponential(&self) -> Result<LabeledTransform> {
        let (beta, d) = match self.catalog_id() {
            Some(CatalogId::Example1) => (0.5, 1.10715),
            Some(CatalogId::Example2) => (2.0, 0.35260),
            Some(CatalogId::Example3) => (2.0, 1.13615),
            Some(CatalogId::Example4) => (2.0, 0.11066),
            _ => {
                let scale = match self.domain {
                    OuterMapKind::FiniteTanh { .. } => 2.0,
                    _ => 1.0,
                };
                let d = match &self.singularities {
                    Some(s) => crate::optimizer::preimages(s, &self.domain)?
                        .points
                        .iter()
                        .map(|w| scale * w.im)
                        .fold(FRAC_PI_2, f64::min),
                    None => FRAC_PI_4,
                };
                (1.0, d)
            }
        };
        Ok(LabeledTransform::new(
            "se",
            ConformalTransform::single_exponential(self.domain),
            DecayParams::single(1.0, beta, d)?,
        ))
    }

    /// Classical double-exponential comparator with its decay parameters.
    ///
    /// For user problems the strip width is taken from the declared
    /// singularities when present, otherwise `π/4` is assumed.
    pub fn double_exponential(&self) -> Result<LabeledTransform> {
        let plain = |beta2: f64, d: f64| -> Result<LabeledTransform> {
            Ok(LabeledTransform::new(
                "de",
                ConformalTransform::double_exponential(self.domain),
                DecayParams::double(1.0, beta2, d)?,
            ))
        };
        match self.catalog_id() {
            Some(CatalogId::Example1) => plain(FRAC_PI_4, 0.34695),
            Some(CatalogId::Example2) => plain(FRAC_PI_2, 0.22640),
            Some(CatalogId::Example4) => plain(FRAC_PI_2, 0.05762),
            Some(CatalogId::Example5) => plain(FRAC_PI_4, FRAC_PI_6),
            Some(CatalogId::TanhIntegral) => plain(FRAC_PI_2, 0.81249),
            _ => {
                let beta2 = FRAC_PI_2 * self.domain.beta_factor();
                let d = match &self.singularities {
                    Some(s) => plain_strip_width(s, &self.domain)?,
                    None => FRAC_PI_4,
                };
                plain(beta2, d)
            }
        }
    }

    /// Published double-exponential map `exp(0.22t − 0.017e^(−t))` for
    /// Example 3.
    pub fn literature(&self) -> Option<LabeledTransform> {
        if self.catalog_id() != Some(CatalogId::Example3) {
            return None;
        }
        Some(LabeledTransform::new(
            "lit",
            ConformalTransform::new(
                OuterMapKind::SemiInfExp,
                InnerMap::ExpLinear {
                    rate: 0.22,
                    damping: 0.017,
                },
            ),
            DecayParams::double(0.22, 2.0, 1.58223).ok()?,
        ))
    }

    /// Transformation selected by label: `se`, `de`, `lit` or `opt`.
    pub fn transform(&self, label: &str, opts: &OptimizerOptions) -> Result<LabeledTransform> {
        match label {
            "se" => self.single_exponential(),
            "de" => self.double_exponential(),
            "opt" => self.optimized_transform(opts),
            "lit" => self
                .literature()
                .ok_or_else(|| Error::Config("no literature map for this problem".into())),
            other => Err(Error::Config(format!("unknown transform '{other}'"))),
        }
    }

    /// All transformations available for this problem.
    pub fn suite(&self, opts: &OptimizerOptions) -> Result<Vec<LabeledTransform>> {
        let mut out = Vec::new();
        if let Ok(se) = self.single_exponential() {
            out.push(se);
        }
        out.push(self.double_exponential()?);
        out.extend(self.literature());
        if self.singularities.is_some() {
            out.push(self.optimized_transform(opts)?);
        }
        Ok(out)
    }
}

/// Problem file: `{integrand, domain: {kind, a?, b?}, singularities?: [{re, im}], reference?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub integrand: String,
    pub domain: DomainSpec,
    #[serde(default)]
    pub singularities: Vec<PointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Finite { a: f64, b: f64 },
    Infinite,
    SemiLog,
    SemiExp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub re: f64,
    pub im: f64,
}

impl DomainSpec {
    pub fn outer(self) -> Result<OuterMapKind> {
        match self {
            DomainSpec::Finite { a, b } => OuterMapKind::finite(a, b),
            DomainSpec::Infinite => Ok(OuterMapKind::InfiniteSinh),
            DomainSpec::SemiLog => Ok(OuterMapKind::SemiInfLog),
            DomainSpec::SemiExp => Ok(OuterMapKind::SemiInfExp),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = Error;
    /// `finite:a,b`, `infinite`, `semi_log`, `semi_exp`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infinite" => Ok(DomainSpec::Infinite),
            "semi_log" => Ok(DomainSpec::SemiLog),
            "semi_exp" => Ok(DomainSpec::SemiExp),
            _ => {
                let ends = s
                    .strip_prefix("finite:")
                    .and_then(|r| r.split_once(','))
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
                match ends {
                    Some((a, b)) => Ok(DomainSpec::Finite { a, b }),
                    None => Err(Error::Config(format!(
                        "domain '{s}' is not one of finite:a,b | infinite | semi_log | semi_exp"
                    ))),
                }
            }
        }
    }
}

impl ProblemFile {
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::Config(format!("problem file: {e}")))
    }

    pub fn into_spec(self) -> Result<ProblemSpec> {
        let mut spec = ProblemSpec::from_expression(&self.integrand, self.domain.outer()?)?;
        if !self.singularities.is_empty() {
            spec.singularities = Some(SingularitySet::new(
                self.singularities.iter().map(|p| Complex64::new(p.re, p.im)),
            )?);
        }
        spec.reference = self.reference;
        Ok(spec)
    }
}

/// Largest `d` such that the plain map `ψ((π/2) sinh t)` is analytic on the
/// strip `|Im t| < d` as far as the declared singularities are concerned.
pub fn plain_strip_width(s: &SingularitySet, outer: &OuterMapKind) -> Result<f64> {
    let pre = crate::optimizer::preimages(s, outer)?;
    let mut d = FRAC_PI_2;
    for w in &pre.points {
        // (π/2) sinh t = w  ⇒  t = asinh(2w/π)
        let t = (w * (2.0 / PI)).asinh();
        d = d.min(t.im.abs());
    }
    Ok(d.max(1e-3))
}
