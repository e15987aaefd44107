use serde_json::Value;
use snn_compress_web::{lif_trace_json, metrics_json, project_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn lif_trace_follows_the_update_rule() {
    // Hand trace with decay 0.25, threshold 0.2: u = 0.1, 0.125, 0.23125 fires, reset, 0.1.
    let v = parse(lif_trace_json(&[0.1, 0.1, 0.2, 0.1], 0.25, 0.2).unwrap());
    let u = floats(&v["u"]);
    let expect = [0.1, 0.125, 0.23125, 0.1];
    for (a, b) in u.iter().zip(expect) {
        assert!((a - b).abs() < 1e-12, "{u:?}");
    }
    assert_eq!(floats(&v["o"]), vec![0.0, 0.0, 1.0, 0.0]);
    assert_eq!(v["rate"].as_f64(), Some(0.25));
}

#[test]
fn lif_trace_rejects_bad_input() {
    assert!(lif_trace_json(&[f64::NAN], 0.25, 0.2).is_err());
    assert!(lif_trace_json(&[0.1], 1.5, 0.2).is_err());
}

#[test]
fn projection_prunes_and_quantizes() {
    let v = parse(project_json(&[0.6, 0.7, -0.4], 0.0, 2, 3).unwrap());
    let z = floats(&v["z"]);
    let alpha = 1.7 / 3.0;
    for (a, b) in z.iter().zip([alpha, alpha, -alpha]) {
        assert!((a - b).abs() < 1e-12, "{z:?}");
    }
    let v = parse(project_json(&[0.3, -0.9, 0.1, 0.5], 0.5, 0, 3).unwrap());
    assert_eq!(floats(&v["z"]), vec![0.0, -0.9, 0.0, 0.5]);
    assert!(v["alpha"].is_null());
    assert!(project_json(&[1.0], 1.0, 0, 3).is_err());
}

#[test]
fn metrics_match_the_reported_table_format() {
    let v = parse(metrics_json(0.75, 1, 32, 0.32, 0.18).unwrap());
    assert_eq!(v["r_mem_pct"].as_f64(), Some(0.78));
    assert_eq!(v["r_mem_x"].as_f64(), Some(128.21));
    assert!(metrics_json(0.0, 32, 32, 0.0, 0.1).is_err());
}
