use prp_web::{broadcast_pattern, delivery_curve, path_layout};
use serde_json::Value;

#[test]
fn layout_marks_infeasible_paths() {
    let v: Value = serde_json::from_str(&path_layout(0, 0, 5, 2, 10)).unwrap();
    let paths = v["paths"].as_array().unwrap();
    assert_eq!(paths.len(), 8);
    let feasible: Vec<u64> = paths
        .iter()
        .filter(|p| p["feasible"].as_bool().unwrap())
        .map(|p| p["index"].as_u64().unwrap())
        .collect();
    assert_eq!(feasible, [1, 2, 3]);
    assert_eq!(v["disjoint"], Value::Bool(true));
    assert_eq!(paths[0]["cells"][1], serde_json::json!([1, 1]));
}

#[test]
fn layout_errors_are_json() {
    let v: Value = serde_json::from_str(&path_layout(3, 3, 3, 3, 10)).unwrap();
    assert!(v["error"].as_str().unwrap().contains("same cell"));
    let v: Value = serde_json::from_str(&path_layout(0, 0, 10, 0, 10)).unwrap();
    assert!(v["error"].as_str().unwrap().contains("outside"));
}

#[test]
fn curve_orders_bounds() {
    let v: Value = serde_json::from_str(&delivery_curve(15.0, 0.1, 6.0)).unwrap();
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 60);
    for p in pts {
        assert!(p["mobile"].as_f64().unwrap() <= p["fixed"].as_f64().unwrap());
    }
    let last = &pts[59];
    assert!(last["fixed"].as_f64().unwrap() > 0.999);
    assert!(serde_json::from_str::<Value>(&delivery_curve(15.0, 2.0, 6.0)).unwrap()["error"].is_string());
}

#[test]
fn flood_forwards_from_about_half_the_cells() {
    let k = 8;
    let v: Value = serde_json::from_str(&broadcast_pattern(k, 3, 4, 1)).unwrap();
    let forwarders = v["forwarders"].as_array().unwrap();
    let half = (k * k) as usize / 2;
    assert!(forwarders.len().abs_diff(half) <= k as usize, "{}", forwarders.len());
    assert_eq!(v["reached"].as_u64().unwrap() + 1, v["nodes"].as_u64().unwrap());
    let cells: std::collections::HashSet<(i64, i64)> = forwarders
        .iter()
        .map(|f| (f[0].as_i64().unwrap(), f[1].as_i64().unwrap()))
        .collect();
    assert_eq!(cells.len(), forwarders.len(), "one forwarder per cell");
}
