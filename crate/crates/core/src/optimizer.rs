//! Parameter program for the sinh-polynomial map.
//!
//! Given singularity pre-images `δ̃ₖ + iε̃ₖ` (k = 1..n), find
//! `h(t) = u0·sinh t + Σ uⱼ t^(j−1)` and abscissas `xₖ` with
//! `h(xₖ + iπ/2) = δ̃ₖ + iε̃ₖ`, maximizing `u0`. There are `2n` real equations
//! in `2n+1` unknowns; the spare direction is spent on `u0`.
//!
//! The program is solved by Newton's method on the KKT conditions, tracked
//! along a homotopy that starts from the collinear problem `{δ̄ + iε̃ₖ}`
//! (solved exactly by `ε̄·sinh t + δ̄`) and moves the real parts linearly to
//! their targets.

use std::f64::consts::FRAC_PI_2;

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{OuterMapKind, SinhPolyMap};

/// Singularities `δₖ + iεₖ` of an integrand, upper representatives only.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularitySet {
    pub points: Vec<Complex64>,
}

impl SingularitySet {
    /// Lower-half representatives are conjugated; real points are rejected.
    pub fn new(points: impl IntoIterator<Item = Complex64>) -> Result<Self> {
        let mut out = Vec::new();
        for p in points {
            if !(p.re.is_finite() && p.im.is_finite()) || p.im == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "singularity {p} must lie off the real axis"
                )));
            }
            out.push(if p.im < 0.0 { p.conj() } else { p });
        }
        Ok(Self { points: out })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Pre-images `ψ⁻¹(δₖ + iεₖ)` in the upper half plane, sorted by real part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageSet {
    pub points: Vec<Complex64>,
}

impl PreimageSet {
    /// Sorts by real part and separates exact ties by 1e-9.
    pub fn new(mut points: Vec<Complex64>) -> Result<Self> {
        if points.iter().any(|p| !(p.im > 0.0) || !p.re.is_finite()) {
            return Err(Error::InvalidParameter(
                "pre-images must have positive imaginary part".into(),
            ));
        }
        points.sort_by(|a, b| a.re.total_cmp(&b.re));
        for k in 1..points.len() {
            if points[k].re <= points[k - 1].re {
                warn!(
                    "pre-images {} and {} share a real part; separating by 1e-9",
                    points[k - 1],
                    points[k]
                );
                points[k].re = points[k - 1].re + 1e-9;
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn preimages(s: &SingularitySet, outer: &OuterMapKind) -> Result<PreimageSet> {
    let mut pts = Vec::with_capacity(s.len());
    for &p in &s.points {
        let w = outer.inverse(p)?;
        let w = if w.im < 0.0 { w.conj() } else { w };
        if !(w.im > 0.0) {
            return Err(Error::Domain(format!(
                "singularity {p} maps onto the real axis"
            )));
        }
        pts.push(w);
    }
    PreimageSet::new(pts)
}

/// Optimized map and solver diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSolution {
    pub map: SinhPolyMap,
    /// `max_k |h(x_k + iπ/2) − (δ̃ₖ + iε̃ₖ)|`.
    pub constraint_residual: f64,
    /// Equal to `u0`.
    pub objective: f64,
    pub homotopy_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerOptions {
    /// Bound on `|x_1 + x_n|`.
    pub xbar: f64,
    /// Initial number of homotopy increments; doubled on failure.
    pub steps: usize,
    pub max_steps: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            xbar: 20.0,
            steps: 16,
            max_steps: 256,
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

fn strip_point(x: f64) -> Complex64 {
    Complex64::new(x, FRAC_PI_2)
}

/// Index of the pre-image with the smallest imaginary part.
fn lowest(p: &PreimageSet) -> usize {
    p.points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.im.total_cmp(&b.1.im))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Exact solution `ε̄·sinh t + δ̄` of the collinear problem `{δ̄ + iε̃ₖ}`.
pub fn initial_guess(p: &PreimageSet) -> Result<ParameterSolution> {
    if p.is_empty() {
        return Err(Error::InvalidParameter("empty pre-image set".into()));
    }
    let n = p.len();
    let low = lowest(p);
    let (delta, eps) = (p.points[low].re, p.points[low].im);
    let mut u = vec![0.0; n];
    u[0] = delta;
    let abscissas = p
        .points
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let x = (q.im / eps).acosh();
            match k.cmp(&low) {
                std::cmp::Ordering::Less => -x,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => x,
            }
        })
        .collect();
    Ok(ParameterSolution {
        map: SinhPolyMap {
            u0: eps,
            u,
            abscissas,
        },
        constraint_residual: 0.0,
        objective: eps,
        homotopy_steps: 0,
    })
}

/// `max_k |h(x_k + iπ/2) − target_k|`.
pub fn constraint_residual(map: &SinhPolyMap, targets: &[Complex64]) -> f64 {
    map.abscissas
        .iter()
        .zip(targets)
        .map(|(&x, &w)| (map.eval(strip_point(x)) - w).norm())
        .fold(0.0, f64::max)
}

/// The summed-constraint quotient
/// `Σₖ (ε̃ₖ − Im Σⱼ uⱼ (xₖ + iπ/2)^(j−1)) / Σₖ cosh xₖ`.
pub fn objective_quotient(p: &PreimageSet, map: &SinhPolyMap) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (q, &x) in p.points.iter().zip(&map.abscissas) {
        let z = strip_point(x);
        let poly: Complex64 = map
            .u
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        num += q.im - poly.im;
        den += x.cosh();
    }
    num / den
}

/// Lower double-exponential decay constant of `ψ(h(t))`.
pub fn beta2_of(map: &SinhPolyMap, outer: &OuterMapKind) -> f64 {
    map.u0 * outer.beta_factor()
}

/// Layout of the unknown vector: `[u0, u1..un, x1..xn]`.
struct Kkt<'a> {
    targets: &'a [Complex64],
    n: usize,
    /// Extra linear equality `x_1 + x_n = s`.
    pinned_sum: Option<f64>,
}

impl Kkt<'_> {
    fn dim(&self) -> usize {
        2 * self.n + 1
    }

    fn constraints(&self) -> usize {
        2 * self.n + usize::from(self.pinned_sum.is_some())
    }

    fn unpack(&self, v: &DVector<f64>) -> SinhPolyMap {
        let n = self.n;
        SinhPolyMap {
            u0: v[0],
            u: v.rows(1, n).iter().copied().collect(),
            abscissas: v.rows(n + 1, n).iter().copied().collect(),
        }
    }

    fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        let map = self.unpack(v);
        let mut c = DVector::zeros(self.constraints());
        for k in 0..self.n {
            let w = map.eval(strip_point(map.abscissas[k])) - self.targets[k];
            c[2 * k] = w.re;
            c[2 * k + 1] = w.im;
        }
        if let Some(s) = self.pinned_sum {
            c[2 * self.n] = map.abscissas[0] + map.abscissas[self.n - 1] - s;
        }
        c
    }

    fn jacobian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        let map = self.unpack(v);
        let mut jac = DMatrix::zeros(self.constraints(), self.dim());
        for k in 0..n {
            let z = strip_point(map.abscissas[k]);
            let cols = std::iter::once(z.sinh())
                .chain((0..n).map(|j| z.powi(j as i32)))
                .enumerate();
            for (col, d) in cols {
                jac[(2 * k, col)] = d.re;
                jac[(2 * k + 1, col)] = d.im;
            }
            let dx = map.deriv(z);
            jac[(2 * k, n + 1 + k)] = dx.re;
            jac[(2 * k + 1, n + 1 + k)] = dx.im;
        }
        if self.pinned_sum.is_some() {
            jac[(2 * n, n + 1)] += 1.0;
            jac[(2 * n, 2 * n)] += 1.0;
        }
        jac
    }

    /// `Σᵢ λᵢ ∇²cᵢ`; only entries touching some `x_k` are nonzero.
    fn hessian(&self, v: &DVector<f64>, lambda: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        let map = self.unpack(v);
        let mut hess = DMatrix::zeros(self.dim(), self.dim());
        for k in 0..n {
            let z = strip_point(map.abscissas[k]);
            let (lr, li) = (lambda[2 * k], lambda[2 * k + 1]);
            let xk = n + 1 + k;
            let dot = |c: Complex64| lr * c.re + li * c.im;
            hess[(xk, xk)] += dot(map.second_deriv(z));
            let cross_u0 = dot(z.cosh());
            hess[(xk, 0)] += cross_u0;
            hess[(0, xk)] += cross_u0;
            for j in 1..n {
                let c = dot(z.powi(j as i32 - 1) * j as f64);
                hess[(xk, 1 + j)] += c;
                hess[(1 + j, xk)] += c;
            }
        }
        hess
    }

    /// Gradient of `−u0 + λ·c`.
    fn stationarity(&self, jac: &DMatrix<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        let mut g = jac.transpose() * lambda;
        g[0] -= 1.0;
        g
    }

    fn multipliers(&self, v: &DVector<f64>) -> DVector<f64> {
        let jac = self.jacobian(v);
        let mut e0 = DVector::zeros(self.dim());
        e0[0] = 1.0;
        let jt = jac.transpose();
        let svd = jt.svd(true, true);
        svd.solve(&e0, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(self.constraints()))
    }

    fn kkt_norm(&self, v: &DVector<f64>, lambda: &DVector<f64>) -> (f64, f64) {
        let c = self.residual(v).amax();
        let g = self.stationarity(&self.jacobian(v), lambda).amax();
        (c, g)
    }

    /// Newton's method on the KKT system with a backtracking line search on
    /// the KKT residual norm.
    fn solve(
        &self,
        v: &mut DVector<f64>,
        lambda: &mut DVector<f64>,
        opts: &OptimizerOptions,
    ) -> bool {
        let (nv, nc) = (self.dim(), self.constraints());
        let merit = |v: &DVector<f64>, l: &DVector<f64>| {
            let c = self.residual(v);
            let g = self.stationarity(&self.jacobian(v), l);
            c.norm_squared() + g.norm_squared()
        };
        for _ in 0..opts.max_iterations {
            let (cres, gres) = self.kkt_norm(v, lambda);
            if cres <= opts.tolerance * 1e-2 && gres <= 1e-10 {
                return v[0] > 0.0;
            }
            let jac = self.jacobian(v);
            let mut m = DMatrix::zeros(nv + nc, nv + nc);
            m.view_mut((0, 0), (nv, nv)).copy_from(&self.hessian(v, lambda));
            m.view_mut((0, nv), (nv, nc)).copy_from(&jac.transpose());
            m.view_mut((nv, 0), (nc, nv)).copy_from(&jac);
            let mut rhs = DVector::zeros(nv + nc);
            rhs.rows_mut(0, nv).copy_from(&(-self.stationarity(&jac, lambda)));
            rhs.rows_mut(nv, nc).copy_from(&(-self.residual(v)));
            let Some(step) = m.full_piv_lu().solve(&rhs) else {
                return false;
            };
            if step.iter().any(|s| !s.is_finite()) {
                return false;
            }
            let base = merit(v, lambda);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial_v = &*v + alpha * step.rows(0, nv);
                let trial_l = &*lambda + alpha * step.rows(nv, nc);
                let value = merit(&trial_v, &trial_l);
                if value.is_finite() && (value < base || alpha < 1e-3 && value <= base * 1.5) {
                    *v = trial_v;
                    *lambda = trial_l;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                let (cres, gres) = self.kkt_norm(v, lambda);
                return cres <= opts.tolerance && gres <= 1e-8 && v[0] > 0.0;
            }
        }
        let (cres, gres) = self.kkt_norm(v, lambda);
        cres <= opts.tolerance && gres <= 1e-8 && v[0] > 0.0
    }
}

fn targets_at(p: &PreimageSet, delta_bar: f64, tau: f64) -> Vec<Complex64> {
    p.points
        .iter()
        .map(|q| Complex64::new(delta_bar + tau * (q.re - delta_bar), q.im))
        .collect()
}

fn pack(map: &SinhPolyMap) -> DVector<f64> {
    DVector::from_iterator(
        1 + map.u.len() + map.abscissas.len(),
        std::iter::once(map.u0)
            .chain(map.u.iter().copied())
            .chain(map.abscissas.iter().copied()),
    )
}

/// Solves the program at one homotopy parameter, enforcing `|x1+xn| ≤ x̄`
/// by pinning the sum to the violated bound.
fn solve_at(
    targets: &[Complex64],
    start: &DVector<f64>,
    opts: &OptimizerOptions,
) -> Option<DVector<f64>> {
    let n = targets.len();
    let free = Kkt {
        targets,
        n,
        pinned_sum: None,
    };
    let mut v = start.clone();
    let mut lambda = free.multipliers(&v);
    let ok = free.solve(&mut v, &mut lambda, opts);
    let sum = v[n + 1] + v[2 * n];
    if ok && sum.abs() <= opts.xbar {
        return Some(v);
    }
    let bound = if ok {
        opts.xbar.copysign(sum)
    } else {
        let s0 = start[n + 1] + start[2 * n];
        if s0.abs() < opts.xbar * (1.0 - 1e-12) {
            return None;
        }
        opts.xbar.copysign(s0)
    };
    let pinned = Kkt {
        targets,
        n,
        pinned_sum: Some(bound),
    };
    let mut v = start.clone();
    let mut lambda = pinned.multipliers(&v);
    pinned.solve(&mut v, &mut lambda, opts).then_some(v)
}

fn monotonicity_guard(map: &SinhPolyMap) -> Result<()> {
    for i in 0..=3000 {
        let t = -15.0 + i as f64 * 0.01;
        let slope = map.deriv_real(t);
        if !(slope > 0.0) {
            return Err(Error::NonMonotoneMap { t, slope });
        }
    }
    Ok(())
}

fn run_homotopy(
    p: &PreimageSet,
    start: &SinhPolyMap,
    delta_bar: f64,
    steps: usize,
    opts: &OptimizerOptions,
) -> std::result::Result<DVector<f64>, (f64, f64)> {
    let mut v = pack(start);
    for i in 1..=steps {
        let tau = i as f64 / steps as f64;
        let targets = targets_at(p, delta_bar, tau);
        match solve_at(&targets, &v, opts) {
            Some(next) => v = next,
            None => {
                let kkt = Kkt {
                    targets: &targets,
                    n: p.len(),
                    pinned_sum: None,
                };
                return Err((tau, kkt.residual(&v).amax()));
            }
        }
    }
    Ok(v)
}

/// Maximizes `u0` subject to `h(x_k + iπ/2) = δ̃ₖ + iε̃ₖ`.
pub fn solve_parameter_problem(
    p: &PreimageSet,
    opts: &OptimizerOptions,
) -> Result<ParameterSolution> {
    if !(opts.xbar > 0.0) {
        return Err(Error::InvalidParameter("xbar must be positive".into()));
    }
    let mut guess = initial_guess(p)?;
    let n = p.len();
    if n == 1 {
        return Ok(guess);
    }
    let delta_bar = guess.map.u[0];
    let mut steps = opts.steps.max(1);
    let mut failure = (0.0, f64::INFINITY);
    while steps <= opts.max_steps.max(opts.steps) {
        match run_homotopy(p, &guess.map, delta_bar, steps, opts) {
            Ok(v) => {
                let kkt = Kkt {
                    targets: &p.points,
                    n,
                    pinned_sum: None,
                };
                let map = kkt.unpack(&v);
                let residual = constraint_residual(&map, &p.points);
                monotonicity_guard(&map)?;
                guess = ParameterSolution {
                    objective: map.u0,
                    map,
                    constraint_residual: residual,
                    homotopy_steps: steps,
                };
                return Ok(guess);
            }
            Err(f) => {
                failure = f;
                steps *= 2;
            }
        }
    }
    Err(Error::Optimization {
        tau: failure.0,
        residual: failure.1,
    })
}

/// Pre-images followed by the parameter program.
pub fn optimize_map(
    s: &SingularitySet,
    outer: &OuterMapKind,
    opts: &OptimizerOptions,
) -> Result<ParameterSolution> {
    solve_parameter_problem(&preimages(s, outer)?, opts)
}
