use optde_wasm::{box_value, convergence, map_view};

#[test]
fn map_view_single_pair() {
    let v: serde_json::Value = serde_json::from_str(&map_view("finite:0,1", "0.5,0.5").unwrap()).unwrap();
    assert!((v["u0"].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-8);
    let curve = v["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 241);
    let xs: Vec<f64> = curve.iter().map(|p| p[1].as_f64().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
    assert!(!v["boundary"].as_array().unwrap().is_empty());
}

#[test]
fn map_view_rejects_bad_input() {
    assert!(map_view("disk", "0.5,0.5").is_err());
    assert!(map_view("infinite", "1;2").is_err());
    assert!(map_view("infinite", "1,0").is_err());
}

#[test]
fn convergence_rows() {
    let rows: Vec<serde_json::Value> = serde_json::from_str(&convergence("ex5", 32).unwrap()).unwrap();
    assert_eq!(rows.len(), 3 * 3);
    assert!(convergence("nope", 32).is_err());
}

#[test]
fn box_values() {
    let r = box_value(2, 1.0, 64, "reduced").unwrap();
    let t = box_value(2, 1.0, 24, "optimized").unwrap();
    assert!((r - t).abs() < 1e-10);
    assert!(box_value(5, 1.0, 24, "double").is_err());
    assert!(box_value(2, 1.0, 24, "quad").is_err());
}
