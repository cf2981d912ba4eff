//! Rational interpolation at central Sinc points and pole extraction.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Integrand;
use crate::transform::ConformalTransform;

/// Singular values below this fraction of the largest are discarded.
pub const RANK_TOLERANCE: f64 = 1e-13;

/// `{r/s}(x) = Σ pᵢ ξⁱ / (1 + Σ qⱼ ξʲ)` with `ξ = (x − center)/scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SincPadeApproximant {
    pub p: Vec<f64>,
    /// `q_1..q_s`.
    pub q: Vec<f64>,
    pub center: f64,
    pub scale: f64,
    /// Grid spacing of the samples, if they came from a Sinc grid.
    pub step: Option<f64>,
    /// Ratio of extreme singular values of the column-scaled system.
    pub condition: f64,
    /// Numerical rank; below `r+s+1` the minimum-norm solution is returned.
    pub rank: usize,
    /// `max_k |{r/s}(x_k) − f(x_k)|`.
    pub residual: f64,
}

fn horner(c: &[f64], x: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * x + a)
}

fn denominator(q: &[f64]) -> Vec<f64> {
    let mut d = Vec::with_capacity(q.len() + 1);
    d.push(1.0);
    d.extend_from_slice(q);
    d
}

/// Coefficients of `Σ cᵢ ((x − c)/w)ⁱ` in powers of `x`.
fn to_monomials(coef: &[f64], c: f64, w: f64) -> Vec<f64> {
    let mut out = vec![0.0; coef.len()];
    // (x − c)^i expanded by repeated multiplication.
    let mut power = vec![1.0];
    for (i, &a) in coef.iter().enumerate() {
        let f = a / w.powi(i as i32);
        for (k, &b) in power.iter().enumerate() {
            out[k] += f * b;
        }
        let mut next = vec![0.0; power.len() + 1];
        for (k, &b) in power.iter().enumerate() {
            next[k + 1] += b;
            next[k] -= c * b;
        }
        power = next;
    }
    out
}

impl SincPadeApproximant {
    pub fn r(&self) -> usize {
        self.p.len() - 1
    }

    pub fn s(&self) -> usize {
        self.q.len()
    }

    fn xi(&self, x: Complex64) -> Complex64 {
        (x - self.center) / self.scale
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        let z = self.xi(x);
        horner(&self.p, z) / horner(&denominator(&self.q), z)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_complex(Complex64::new(x, 0.0)).re
    }

    /// `(p, q)` in powers of `x`, normalized so that the denominator's
    /// constant term is 1.
    pub fn monomial_coefficients(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = to_monomials(&self.p, self.center, self.scale);
        let d = to_monomials(&denominator(&self.q), self.center, self.scale);
        let d0 = d[0];
        if d0 == 0.0 {
            return Err(Error::Domain(
                "denominator vanishes at x = 0; no monomial normalization".into(),
            ));
        }
        Ok((
            p.iter().map(|v| v / d0).collect(),
            d[1..].iter().map(|v| v / d0).collect(),
        ))
    }

    /// All roots of the denominator.
    pub fn denominator_roots(&self) -> Result<Vec<Complex64>> {
        let mut d = denominator(&self.q);
        let big = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        while d.len() > 1 && d.last().is_some_and(|v| v.abs() <= 1e-14 * big) {
            d.pop();
        }
        let roots = polynomial_roots(&d)?;
        Ok(roots
            .into_iter()
            .map(|z| self.center + self.scale * z)
            .collect())
    }
}

/// Roots of `Σ cᵢ zⁱ` from the eigenvalues of the balanced companion matrix.
pub fn polynomial_roots(c: &[f64]) -> Result<Vec<Complex64>> {
    let m = c.len().saturating_sub(1);
    if m == 0 {
        return Ok(Vec::new());
    }
    let lead = c[m];
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::InvalidParameter("leading coefficient must be nonzero".into()));
    }
    let mut comp = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..m {
        comp[(i, m - 1)] = -c[i] / lead;
    }
    if comp.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned {
            condition: f64::INFINITY,
        });
    }
    balance_parlett_reinsch(&mut comp);
    let eig = comp.complex_eigenvalues();
    Ok(eig.iter().copied().collect())
}

/// Solves `Σ pᵢ ξₖⁱ − f_k Σ qⱼ ξₖʲ = f_k` at `r+s+1` samples.
///
/// Columns are scaled to unit norm and the system is solved by truncated
/// SVD. A rank-deficient system is accepted only if the minimum-norm
/// solution still interpolates the samples.
pub fn fit_sinc_pade(samples: &[(f64, f64)], r: usize, s: usize) -> Result<SincPadeApproximant> {
    let m = r + s + 1;
    if samples.len() != m {
        return Err(Error::InvalidParameter(format!(
            "need r+s+1 = {m} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(x, f)| !x.is_finite() || !f.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| (a.min(x), b.max(x)));
    let center = 0.5 * (lo + hi);
    let scale = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };

    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (k, &(x, f)) in samples.iter().enumerate() {
        let xi = (x - center) / scale;
        let mut pw = 1.0;
        for i in 0..=r.max(s) {
            if i <= r {
                a[(k, i)] = pw;
            }
            if i >= 1 && i <= s {
                a[(k, r + i)] = -f * pw;
            }
            pw *= xi;
        }
        rhs[k] = f;
    }
    let norms: Vec<f64> = (0..m)
        .map(|j| {
            let n = a.column(j).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    for (j, &n) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let cutoff = RANK_TOLERANCE * smax;
    let rank = svd.singular_values.iter().filter(|&&v| v > cutoff).count();
    let sol = svd
        .solve(&rhs, cutoff)
        .map_err(|_| Error::IllConditioned { condition })?;
    let coef: Vec<f64> = sol.iter().zip(&norms).map(|(v, n)| v / n).collect();
    let mut approx = SincPadeApproximant {
        p: coef[..=r].to_vec(),
        q: coef[r + 1..].to_vec(),
        center,
        scale,
        step: None,
        condition,
        rank,
        residual: 0.0,
    };
    approx.residual = samples
        .iter()
        .map(|&(x, f)| (approx.eval(x) - f).abs())
        .fold(0.0, f64::max);
    let fmax = samples.iter().fold(0.0f64, |m, &(_, f)| m.max(f.abs()));
    if rank < m && !(approx.residual <= 1e-8 * fmax.max(f64::MIN_POSITIVE)) {
        return Err(Error::IllConditioned { condition });
    }
    Ok(approx)
}

/// Degrees `(log₂n − 2, log₂n + 2)` for `n = 2ᵏ`; `r` is clamped at 0.
pub fn degree_schedule(n: usize) -> Result<(usize, usize)> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("n = {n} is not a power of two")));
    }
    let k = n.trailing_zeros() as usize;
    Ok((k.saturating_sub(2), k + 2))
}

/// The `r+s+1` central samples `(φ(kh), f(φ(kh)))`,
/// `k = −⌊(r+s)/2⌋..⌈(r+s)/2⌉`.
pub fn central_samples<F: Integrand + ?Sized>(
    f: &F,
    transform: &ConformalTransform,
    step: f64,
    r: usize,
    s: usize,
) -> Vec<(f64, f64)> {
    let lo = -(((r + s) / 2) as i64);
    let hi = (r + s).div_ceil(2) as i64;
    (lo..=hi)
        .map(|k| {
            let p = transform.node(k as f64 * step).point;
            (p.x, f.value(&p))
        })
        .collect()
}

/// Conjugate pole pairs, represented by their upper half-plane members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleEstimate {
    /// Sorted by imaginary part, ascending.
    pub pairs: Vec<Complex64>,
    /// Fewer than the requested number of pairs were found.
    pub shortfall: bool,
}

impl PoleEstimate {
    /// Both members of every pair.
    pub fn all(&self) -> Vec<Complex64> {
        self.pairs.iter().flat_map(|&z| [z, z.conj()]).collect()
    }
}

/// The `count` off-axis denominator roots nearest the real axis.
pub fn pade_poles(a: &SincPadeApproximant, count: usize) -> Result<PoleEstimate> {
    if a.q.is_empty() {
        return Err(Error::InvalidParameter("denominator degree s must be >= 1".into()));
    }
    let roots = a.denominator_roots()?;
    let mut upper: Vec<Complex64> = roots
        .iter()
        .filter(|z| z.im.abs() > 1e-6 && z.is_finite())
        .map(|z| if z.im < 0.0 { z.conj() } else { *z })
        .collect();
    upper.sort_by(|u, v| u.im.total_cmp(&v.im).then(u.re.total_cmp(&v.re)));
    // Each conjugate pair appears twice; keep one member.
    let mut pairs: Vec<Complex64> = Vec::new();
    let mut used = vec![false; upper.len()];
    for i in 0..upper.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = upper[i];
        if let Some(j) = (i + 1..upper.len())
            .find(|&j| !used[j] && (upper[j] - z).norm() <= 1e-6 * (1.0 + z.norm()))
        {
            used[j] = true;
            pairs.push(0.5 * (z + upper[j]));
        } else {
            pairs.push(z);
        }
    }
    let shortfall = pairs.len() < count;
    pairs.truncate(count);
    Ok(PoleEstimate { pairs, shortfall })
}
