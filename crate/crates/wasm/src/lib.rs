//! Browser bindings for the demo page in `www/`.

use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use optde::boxexp::{box_expectation_reduced, box_expectation_tensor, BoxProblem, TensorVariant};
use optde::catalog::{CatalogId, DomainSpec, ProblemSpec};
use optde::optimizer::{optimize_map, OptimizerOptions, SingularitySet};
use optde::quadrature::convergence_study;
use optde::transform::ConformalTransform;

#[derive(Serialize)]
struct MapView {
    u0: f64,
    u: Vec<f64>,
    residual: f64,
    /// `(t, φ(t))` on the real line.
    curve: Vec<(f64, f64)>,
    /// `φ(t + iπ/2)` for the upper strip boundary.
    boundary: Vec<(f64, f64)>,
}

fn parse_points(src: &str) -> Result<Vec<Complex64>, String> {
    src.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (re, im) = s.split_once(',').ok_or_else(|| format!("expected re,im in '{s}'"))?;
            let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
            Ok(Complex64::new(p(re)?, p(im)?))
        })
        .collect()
}

/// Optimized map for `singularities` (`re,im;re,im;…`) on `domain`
/// (`finite:a,b`, `infinite`, `semi_log`, `semi_exp`), as JSON.
pub fn map_view(domain: &str, singularities: &str) -> Result<String, String> {
    let outer = domain.parse::<DomainSpec>().and_then(|d| d.outer()).map_err(|e| e.to_string())?;
    let set = SingularitySet::new(parse_points(singularities)?).map_err(|e| e.to_string())?;
    let sol = optimize_map(&set, &outer, &OptimizerOptions::default()).map_err(|e| e.to_string())?;
    let t = ConformalTransform::optimized(outer, sol.map.clone());
    let ts: Vec<f64> = (-120..=120).map(|i| i as f64 * 0.025).collect();
    let curve = ts.iter().map(|&s| (s, t.forward(s))).collect();
    let boundary = ts
        .iter()
        .map(|&s| t.forward_complex(Complex64::new(s, std::f64::consts::FRAC_PI_2)))
        .filter(|z| z.re.is_finite() && z.im.is_finite())
        .map(|z| (z.re, z.im))
        .collect();
    let view = MapView {
        u0: sol.map.u0,
        u: sol.map.u,
        residual: sol.constraint_residual,
        curve,
        boundary,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Convergence study of a built-in problem for `n = 4, 8, …, max_n`, as JSON rows.
pub fn convergence(catalog: &str, max_n: usize) -> Result<String, String> {
    let id: CatalogId = catalog.parse().map_err(|e: optde::Error| e.to_string())?;
    let spec = ProblemSpec::catalog(id);
    let transforms = spec.suite(&OptimizerOptions::default()).map_err(|e| e.to_string())?;
    let ns: Vec<usize> = std::iter::successors(Some(8usize), |n| Some(n * 2))
        .take_while(|&n| n <= max_n.clamp(8, 512))
        .collect();
    let rows = convergence_study(&spec.integrand, spec.reference, &transforms, &ns).map_err(|e| e.to_string())?;
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

/// `⟨e^{−κ|r|}⟩` over `[0,1]^m`; `method` is `reduced` or a tensor variant.
pub fn box_value(m: usize, kappa: f64, n: usize, method: &str) -> Result<f64, String> {
    let p = BoxProblem::new(m, kappa).map_err(|e| e.to_string())?;
    let r = if method == "reduced" {
        box_expectation_reduced(p, n)
    } else {
        let variant: TensorVariant = method.parse().map_err(|e: optde::Error| e.to_string())?;
        if m > 4 || n > 40 {
            return Err("the browser demo limits the tensor rule to m <= 4, n <= 40".into());
        }
        box_expectation_tensor(p, n, variant)
    };
    r.map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = mapView)]
pub fn map_view_js(domain: &str, singularities: &str) -> Result<String, JsValue> {
    map_view(domain, singularities).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = convergence)]
pub fn convergence_js(catalog: &str, max_n: usize) -> Result<String, JsValue> {
    convergence(catalog, max_n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = boxValue)]
pub fn box_value_js(m: usize, kappa: f64, n: usize, method: &str) -> Result<f64, JsValue> {
    box_value(m, kappa, n, method).map_err(|e| JsValue::from_str(&e))
}
