//! Sinc approximation of the Hilbert transform `(1/π) PV∫ y(s)/(s−x) ds`
//! and traveling waves of the forced Benjamin-Ono equation
//! `−c·y + y²/2 + H y′ = f`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::BO_LORENTZIANS;
use crate::error::{Error, Result};
use crate::optimizer::{optimize_map, OptimizerOptions, SingularitySet};
use crate::quadrature::{optimal_step, DecayParams, LabeledTransform};
use crate::sinc::{sin_pi, SincExpansion};
use crate::transform::{ConformalTransform, OuterMapKind};

/// `W[l,j] = S′(j,h)(lh)`, indexed from `−n`.
pub fn sinc_derivative_weights(n: usize, step: f64) -> DMatrix<f64> {
    let m = 2 * n + 1;
    DMatrix::from_fn(m, m, |l, j| {
        if l == j {
            return 0.0;
        }
        let a = l as f64 - j as f64;
        let sign = if (l + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign / (step * a)
    })
}

/// `cos(πa) − 1` without cancellation near even integers.
fn cos_pi_minus_one(a: f64) -> f64 {
    let s = sin_pi(0.5 * a);
    -2.0 * s * s
}

/// Kernel row `(h/π)·[cos(π(φ⁻¹(x)/h − l)) − 1] / (x − φ(lh))`, `l = −n..n`.
/// The self term at a node is its removable limit 0.
pub fn hilbert_kernel(transform: &ConformalTransform, n: usize, step: f64, x: f64) -> Result<Vec<f64>> {
    let u = transform.inverse(x)? / step;
    let n = n as i64;
    Ok((-n..=n)
        .map(|l| {
            let xl = transform.forward(l as f64 * step);
            if xl == x {
                return 0.0;
            }
            step / PI * cos_pi_minus_one(u - l as f64) / (x - xl)
        })
        .collect())
}

/// Kernel matrix at the nodes, `K[k,l] = (h/π)[(−1)^{k−l} − 1]/(x_k − x_l)`.
fn node_kernel(transform: &ConformalTransform, n: usize, step: f64) -> DMatrix<f64> {
    let m = 2 * n + 1;
    let nodes: Vec<f64> = (0..m)
        .map(|i| transform.forward((i as f64 - n as f64) * step))
        .collect();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            (0..m)
                .map(|l| {
                    if (k + l) % 2 == 0 {
                        0.0
                    } else {
                        -2.0 * step / PI / (nodes[k] - nodes[l])
                    }
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(m, m, |k, l| rows[k][l])
}

/// Matrix `A` with `(A y)_k ≈ (H y′)(x_k)` for `y = Σ y_j S(j,h)∘φ⁻¹`.
pub fn hilbert_derivative_matrix(transform: &ConformalTransform, n: usize, step: f64) -> DMatrix<f64> {
    node_kernel(transform, n, step) * sinc_derivative_weights(n, step)
}

/// `(H y′)(x)` for the expansion `e`.
pub fn discrete_hilbert_of_derivative(e: &SincExpansion, x: f64) -> Result<f64> {
    let n = e.n();
    let kernel = hilbert_kernel(&e.transform, n, e.step, x)?;
    let w = sinc_derivative_weights(n, e.step);
    let dy = w * DVector::from_column_slice(&e.coefficients);
    Ok(kernel.iter().zip(dy.iter()).map(|(k, d)| k * d).sum())
}

/// `(H y)(x)` from samples `y(φ(lh))`, `l = −n..n`.
pub fn discrete_hilbert(transform: &ConformalTransform, step: f64, samples: &[f64], x: f64) -> Result<f64> {
    if samples.len() % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "expected 2n+1 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() / 2;
    let kernel = hilbert_kernel(transform, n, step, x)?;
    Ok(kernel
        .iter()
        .zip(samples)
        .enumerate()
        .map(|(i, (k, y))| {
            if *k == 0.0 {
                return 0.0;
            }
            k * y * transform.derivative((i as f64 - n as f64) * step)
        })
        .sum())
}

/// `y(x) = Σ ε²/((x−δ)²+ε²)` over `(δ, ε)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzianSum {
    pub terms: Vec<(f64, f64)>,
}

impl LorentzianSum {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(d, e)) = terms.iter().find(|&&(d, e)| !(e > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lorentzian ({d}, {e}) needs finite center and positive width"
            )));
        }
        Ok(Self { terms })
    }

    /// The three-term configuration with `c = 1`.
    pub fn reference() -> Self {
        Self {
            terms: BO_LORENTZIANS.to_vec(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(d, e)| e * e / ((x - d) * (x - d) + e * e))
            .sum()
    }

    /// Analytic `(H y′)(x)`.
    pub fn hilbert_derivative(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(d, e)| {
                let r2 = (x - d) * (x - d);
                let q = r2 + e * e;
                if !q.is_finite() {
                    return 0.0;
                }
                -e * (e * e - r2) / q / q
            })
            .sum()
    }

    /// Singularities `δ + iε` in the upper half plane.
    pub fn singularities(&self) -> Result<SingularitySet> {
        SingularitySet::new(
            self.terms
                .iter()
                .map(|&(d, e)| num_complex::Complex64::new(d, e)),
        )
    }
}

/// Forcing whose traveling wave at speed `c` is `sol`.
pub fn forcing_for(sol: &LorentzianSum, c: f64) -> impl Fn(f64) -> f64 + Sync + Clone {
    let sol = sol.clone();
    move |x| {
        if !x.is_finite() {
            return 0.0;
        }
        let y = sol.value(x);
        -c * y + 0.5 * y * y + sol.hilbert_derivative(x)
    }
}

#[derive(Clone, Debug)]
pub struct BoProblem<F> {
    pub wave_speed: f64,
    pub forcing: F,
    pub transform: ConformalTransform,
    pub n: usize,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoSolution {
    pub expansion: SincExpansion,
    pub newton_iterations: usize,
    pub residual: f64,
}

const MAX_NEWTON: usize = 60;
const MAX_HALVINGS: usize = 10;
const MAX_GROWTH: usize = 5;

impl<F: Fn(f64) -> f64 + Sync> BoProblem<F> {
    pub fn new(wave_speed: f64, forcing: F, transform: ConformalTransform, n: usize, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
        }
        if wave_speed == 0.0 || !wave_speed.is_finite() {
            return Err(Error::InvalidParameter(format!("wave speed {wave_speed} must be finite and nonzero")));
        }
        let p = Self {
            wave_speed,
            forcing,
            transform,
            n,
            step,
        };
        p.forcing_at_nodes()?;
        Ok(p)
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n as i64;
        (-n..=n)
            .map(|k| self.transform.forward(k as f64 * self.step))
            .collect()
    }

    fn forcing_at_nodes(&self) -> Result<DVector<f64>> {
        let values: Vec<f64> = self.nodes().iter().map(|&x| (self.forcing)(x)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                index: i as i64 - self.n as i64,
                x: self.nodes()[i],
                value: values[i],
            });
        }
        Ok(DVector::from_vec(values))
    }

    /// `y_k = −f(x_k)/c`.
    pub fn initial_guess(&self) -> Result<Vec<f64>> {
        let f = self.forcing_at_nodes()?;
        Ok(f.iter().map(|v| -v / self.wave_speed).collect())
    }

    /// `10⁻¹²·(1 + max|f(x_k)|)`.
    pub fn default_tolerance(&self) -> Result<f64> {
        let f = self.forcing_at_nodes()?;
        Ok(1e-12 * (1.0 + f.amax()))
    }

    /// Collocation residual `F_k` for coefficients `y`.
    pub fn residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        let a = hilbert_derivative_matrix(&self.transform, self.n, self.step);
        let f = self.forcing_at_nodes()?;
        let y = DVector::from_column_slice(y);
        Ok(residual(&a, &f, &y, self.wave_speed).iter().copied().collect())
    }
}

fn residual(a: &DMatrix<f64>, f: &DVector<f64>, y: &DVector<f64>, c: f64) -> DVector<f64> {
    let mut r = a * y - f;
    for (rk, yk) in r.iter_mut().zip(y.iter()) {
        *rk += -c * yk + 0.5 * yk * yk;
    }
    r
}

/// Jacobian `diag(−c + y) + A`.
pub fn collocation_jacobian(a: &DMatrix<f64>, y: &[f64], c: f64) -> DMatrix<f64> {
    let mut j = a.clone();
    for (k, yk) in y.iter().enumerate() {
        j[(k, k)] += -c + yk;
    }
    j
}

/// Damped Newton iteration for the collocation system.
pub fn solve_benjamin_ono<F: Fn(f64) -> f64 + Sync>(p: &BoProblem<F>, y0: &[f64], tol: f64) -> Result<BoSolution> {
    let m = 2 * p.n + 1;
    if y0.len() != m {
        return Err(Error::InvalidParameter(format!(
            "initial guess has {} entries, expected {m}",
            y0.len()
        )));
    }
    let c = p.wave_speed;
    let a = hilbert_derivative_matrix(&p.transform, p.n, p.step);
    let f = p.forcing_at_nodes()?;
    let mut y = DVector::from_column_slice(y0);
    let mut r = residual(&a, &f, &y, c);
    let mut norm = r.amax();
    let mut growth = 0;
    let fail = |iterations: usize, residual: f64, y: &DVector<f64>| Error::NonConvergence {
        iterations,
        residual,
        last: y.iter().copied().collect(),
    };
    for it in 0..=MAX_NEWTON {
        if norm <= tol {
            return Ok(BoSolution {
                expansion: SincExpansion::new(y.iter().copied().collect(), p.step, p.transform.clone())?,
                newton_iterations: it,
                residual: norm,
            });
        }
        if it == MAX_NEWTON {
            break;
        }
        let jac = collocation_jacobian(&a, y.as_slice(), c);
        let delta = jac
            .lu()
            .solve(&r)
            .ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        let mut lambda = 1.0;
        let mut trial = (y.clone(), r.clone(), f64::INFINITY);
        for _ in 0..=MAX_HALVINGS {
            let cand = &y - &delta * lambda;
            let rc = residual(&a, &f, &cand, c);
            let nc = rc.amax();
            trial = (cand, rc, nc);
            if nc < norm {
                break;
            }
            lambda *= 0.5;
        }
        if trial.2 < norm {
            growth = 0;
        } else {
            growth += 1;
            log::debug!("Newton step {it}: residual grew to {:e}", trial.2);
        }
        (y, r, norm) = trial;
        if !norm.is_finite() || growth >= MAX_GROWTH {
            return Err(fail(it + 1, norm, &y));
        }
    }
    Err(fail(MAX_NEWTON, norm, &y))
}

/// `101` equispaced points on `[−5, 5]`.
pub fn error_grid() -> Vec<f64> {
    (0..=100).map(|i| -5.0 + 0.1 * i as f64).collect()
}

/// `max |(y(x) − e(x)) / y(x)|` over `points`.
pub fn sup_relative_error(e: &SincExpansion, exact: impl Fn(f64) -> f64, points: &[f64]) -> Result<f64> {
    points.iter().try_fold(0.0_f64, |acc, &x| {
        let y = exact(x);
        Ok(acc.max(((y - e.eval(x)?) / y).abs()))
    })
}

/// Single, double and optimized transforms for `sol` with Sinc decay
/// parameters, labeled `se`, `de`, `opt`.
pub fn benjamin_ono_transforms(sol: &LorentzianSum, opts: &OptimizerOptions) -> Result<Vec<LabeledTransform>> {
    let outer = OuterMapKind::InfiniteSinh;
    let d_se = sol
        .terms
        .iter()
        .map(|&(d, e)| num_complex::Complex64::new(d, e).asinh().im.abs())
        .fold(f64::INFINITY, f64::min);
    let d_de = crate::catalog::plain_strip_width(&sol.singularities()?, &outer)?;
    let map = optimize_map(&sol.singularities()?, &outer, opts)?.map;
    let u0 = map.u0;
    Ok(vec![
        LabeledTransform::new(
            "se",
            ConformalTransform::single_exponential(outer),
            DecayParams::single(1.0, 0.5, d_se)?,
        ),
        LabeledTransform::new(
            "de",
            ConformalTransform::double_exponential(outer),
            DecayParams::double(1.0, FRAC_PI_4, d_de)?,
        ),
        LabeledTransform::new(
            "opt",
            ConformalTransform::optimized(outer, map),
            DecayParams::double(1.0, 0.5 * u0, FRAC_PI_2)?,
        ),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoReport {
    pub transform: String,
    pub n: usize,
    pub sup_rel_error: f64,
    pub newton_iterations: usize,
    /// `false` when Newton stopped without reaching the tolerance; the
    /// solution then holds the last iterate.
    pub converged: bool,
    pub solution: BoSolution,
}

/// Solve the traveling-wave problem for `sol` at speed `c` on `lt` with
/// `n`, from the dominant-balance guess, and measure the grid error.
pub fn solve_lorentzian(sol: &LorentzianSum, c: f64, lt: &LabeledTransform, n: usize) -> Result<BoReport> {
    let step = optimal_step(&lt.params, n, true)?;
    let p = BoProblem::new(c, forcing_for(sol, c), lt.transform.clone(), n, step)?;
    let y0 = p.initial_guess()?;
    let (solution, converged) = match solve_benjamin_ono(&p, &y0, p.default_tolerance()?) {
        Ok(s) => (s, true),
        Err(Error::NonConvergence {
            iterations,
            residual,
            last,
        }) => {
            log::warn!("{} at n = {n}: Newton stopped at residual {residual:e}", lt.label);
            let expansion = SincExpansion::new(last, step, lt.transform.clone())?;
            let solution = BoSolution {
                expansion,
                newton_iterations: iterations,
                residual,
            };
            (solution, false)
        }
        Err(e) => return Err(e),
    };
    let sup_rel_error = sup_relative_error(&solution.expansion, |x| sol.value(x), &error_grid())?;
    Ok(BoReport {
        transform: lt.label.clone(),
        n,
        sup_rel_error,
        newton_iterations: solution.newton_iterations,
        converged,
        solution,
    })
}
