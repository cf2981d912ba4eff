//! Adaptive optimized integration: locate singularities from Sinc-Padé
//! poles, re-optimize the map, double `n`, repeat.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pade::{central_samples, degree_schedule, fit_sinc_pade, pade_poles};
use crate::error::{Error, Result};
use crate::optimizer::{beta2_of, optimize_map, OptimizerOptions, SingularitySet};
use crate::quadrature::{optimal_step, DecayParams, Integrand, LabeledTransform};
use crate::transform::{ConformalTransform, OuterMapKind, SinhPolyMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveOptions {
    /// Target for the successive-doubling error estimate.
    pub eps: f64,
    /// Estimate at which the first phase hands over to the second.
    pub switch: f64,
    /// Strip half-width assumed by the plain map of the first phase.
    pub initial_strip: f64,
    pub max_n: usize,
    /// Upper bound on the number of pole pairs passed to the optimizer.
    pub max_pairs: usize,
    pub optimizer: OptimizerOptions,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            eps: 1e-12,
            switch: 1e-3,
            initial_strip: FRAC_PI_2,
            max_n: 1 << 12,
            max_pairs: 3,
            optimizer: OptimizerOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveIteration {
    pub iteration: usize,
    pub phase: u8,
    pub n: usize,
    pub value: f64,
    /// `|A_n − A_{n/2}| / |A_n|`; `None` for the first value.
    pub estimate: Option<f64>,
    /// Map used for `A_n`.
    pub map: SinhPolyMap,
    /// Sinc-Padé poles from this iteration's samples.
    pub poles: Vec<Complex64>,
    /// Pole extraction or the parameter program failed at this iteration;
    /// the map was not updated.
    pub fallback: bool,
    /// Why the map was not updated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub value: f64,
    pub estimate: f64,
    pub n: usize,
    pub transform: LabeledTransform,
    pub iterations: Vec<AdaptiveIteration>,
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / new.abs().max(f64::MIN_POSITIVE)
}

fn plain(outer: OuterMapKind, d: f64) -> Result<LabeledTransform> {
    Ok(LabeledTransform::new(
        "de",
        ConformalTransform::double_exponential(outer),
        DecayParams::double(1.0, FRAC_PI_2 * outer.beta_factor(), d)?,
    ))
}

/// Map re-optimized from the Sinc-Padé poles of `f` sampled on the grid of
/// `current` at size `n`.
pub fn adapt_map<F: Integrand + ?Sized>(
    f: &F,
    outer: OuterMapKind,
    current: &LabeledTransform,
    n: usize,
    opts: &AdaptiveOptions,
) -> Result<(LabeledTransform, Vec<Complex64>)> {
    let step = optimal_step(&current.params, n, false)?;
    let (r, s) = degree_schedule(n)?;
    let samples = central_samples(f, &current.transform, step, r, s);
    let fit = fit_sinc_pade(&samples, r, s)?;
    let poles = pade_poles(&fit, opts.max_pairs)?;
    if poles.pairs.is_empty() {
        return Err(Error::Domain("no off-axis poles found".into()));
    }
    let set = SingularitySet::new(poles.pairs.iter().copied())?;
    let sol = optimize_map(&set, &outer, &opts.optimizer)?;
    let beta2 = beta2_of(&sol.map, &outer);
    let lt = LabeledTransform::new(
        "adaptive",
        ConformalTransform::optimized(outer, sol.map),
        DecayParams::optimal(beta2)?,
    );
    Ok((lt, poles.pairs))
}

/// Two-phase adaptive integration over the domain of `outer`.
pub fn adaptive_integrate<F: Integrand + ?Sized>(
    f: &F,
    outer: OuterMapKind,
    opts: &AdaptiveOptions,
) -> Result<AdaptiveResult> {
    if !(opts.eps > 1e-14) {
        return Err(Error::InvalidParameter(format!(
            "eps = {} is below the double-precision floor",
            opts.eps
        )));
    }
    let mut current = plain(outer, opts.initial_strip)?;
    let map_of = |lt: &LabeledTransform| lt.transform.sinh_poly().cloned().unwrap_or_else(SinhPolyMap::plain);
    let mut iterations = Vec::new();
    let mut n = 1;
    let mut value = current.integrate(f, n)?;
    iterations.push(AdaptiveIteration {
        iteration: 0,
        phase: 1,
        n,
        value,
        estimate: None,
        map: map_of(&current),
        poles: vec![],
        fallback: false,
        note: None,
    });
    let mut estimate = f64::INFINITY;
    while estimate >= opts.switch && estimate >= opts.eps {
        n *= 2;
        if n > opts.max_n {
            return Err(nonconvergence(&iterations, estimate));
        }
        let next = current.integrate(f, n)?;
        estimate = relative_change(next, value);
        value = next;
        iterations.push(AdaptiveIteration {
            iteration: iterations.len(),
            phase: 1,
            n,
            value,
            estimate: Some(estimate),
            map: map_of(&current),
            poles: vec![],
            fallback: false,
            note: None,
        });
    }
    while estimate >= opts.eps {
        let adapted = adapt_map(f, outer, &current, n.max(4), opts);
        let last = iterations.len() - 1;
        match adapted {
            Ok((lt, poles)) => {
                iterations[last].poles = poles;
                current = lt;
            }
            Err(e) => {
                log::warn!("adaptive step at n = {n} kept the previous map: {e}");
                iterations[last].fallback = true;
                iterations[last].note = Some(e.to_string());
            }
        }
        n *= 2;
        if n > opts.max_n {
            return Err(nonconvergence(&iterations, estimate));
        }
        let next = current.integrate(f, n)?;
        estimate = relative_change(next, value);
        value = next;
        iterations.push(AdaptiveIteration {
            iteration: iterations.len(),
            phase: 2,
            n,
            value,
            estimate: Some(estimate),
            map: map_of(&current),
            poles: vec![],
            fallback: false,
            note: None,
        });
    }
    if iterations.last().is_some_and(|i| i.phase == 2) {
        if let Ok((_, poles)) = adapt_map(f, outer, &current, n, opts) {
            iterations.last_mut().expect("nonempty").poles = poles;
        }
    }
    Ok(AdaptiveResult {
        value,
        estimate,
        n,
        transform: current,
        iterations,
    })
}

fn nonconvergence(iterations: &[AdaptiveIteration], estimate: f64) -> Error {
    Error::NonConvergence {
        iterations: iterations.len(),
        residual: estimate,
        last: iterations.last().map(|i| vec![i.value]).unwrap_or_default(),
    }
}
