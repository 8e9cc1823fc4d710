use lrtnet_web::{loss_curves, oracle_view, Playground};
use serde_json::Value;

fn json(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("call succeeds")).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn loss_curves_match_the_core_functions() {
    let v = json(loss_curves("cat_a_rational", 2.0, -2.0, 2.0, 5));
    assert_eq!(floats(&v["z"]), [-2.0, -1.0, 0.0, 1.0, 2.0]);
    let phi = lrtnet::loss::make_phi_rational(2.0).unwrap();
    for (z, p) in floats(&v["z"]).into_iter().zip(floats(&v["phi"])) {
        assert_eq!(p, phi.phi(z));
    }
    let b = json(loss_curves("cat_b_identity", f64::NAN, -3.0, 3.0, 7));
    assert!(floats(&b["omega"]).iter().all(|w| w.abs() < 1.0));
}

#[test]
fn loss_curves_reject_bad_input() {
    assert!(loss_curves("nope", 1.0, -1.0, 1.0, 10).is_err());
    assert!(loss_curves("cat_a_rational", 2.0, 1.0, -1.0, 10).is_err());
    assert!(loss_curves("cat_a_rational", 2.0, -1.0, 1.0, 1).is_err());
}

#[test]
fn oracle_view_of_the_default_pair() {
    let v = json(oracle_view("", 201));
    let e = &v["errors"];
    assert!((e["err1"].as_f64().unwrap() - 0.1933).abs() < 1e-3);
    assert!((e["err2"].as_f64().unwrap() - 0.3457).abs() < 1e-3);
    assert!((v["criterion_upper_bound"].as_f64().unwrap() - 0.460973).abs() < 1e-5);
    assert_eq!(floats(&v["x"]).len(), 201);
    assert_eq!(floats(&e["boundaries"]).len(), 2);
}

#[test]
fn oracle_view_of_a_custom_pair() {
    let pair = r#"{"p1": 0.5, "f1": [[1.0, -1.0, 1.0]], "f2": [[1.0, 1.0, 1.0]]}"#;
    let v = json(oracle_view(pair, 101));
    let b = floats(&v["errors"]["boundaries"]);
    assert_eq!(b.len(), 1);
    assert!(b[0].abs() < 1e-6);
    assert!(oracle_view(r#"{"p1": 1.5, "f1": [[1.0, 0.0, 1.0]], "f2": [[1.0, 1.0, 1.0]]}"#, 10).is_err());
    assert!(oracle_view("{", 10).is_err());
}

#[test]
fn playground_trains_and_is_deterministic() {
    let opts = r#"{"n_hidden": 10, "n_train_per_class": 300, "n_test_per_class": 1000, "mu": 0.01}"#;
    let mut a = Playground::new(opts).unwrap();
    let mut b = Playground::new(opts).unwrap();
    let start = json(a.status());
    assert_eq!(start["iteration"], 0);
    let after_a = a.step(300).unwrap();
    assert_eq!(after_a, b.step(300).unwrap());
    let v: Value = serde_json::from_str(&after_a).unwrap();
    assert_eq!(v["iteration"], 300);
    assert!(v["report"]["avg"].as_f64().unwrap() < 0.4, "{v}");

    let c = json(a.decision_curve(-6.0, 6.0, 50));
    assert_eq!(floats(&c["decision"]).len(), 50);
    assert_eq!(floats(&c["lrt_boundaries"]).len(), 2);
    assert!(json(a.lrt())["avg"].as_f64().unwrap() > 0.26);
}

#[test]
fn playground_accepts_the_hinge_and_rejects_bad_options() {
    let mut h = Playground::new(r#"{"phi_name": "hinge", "rho": null, "n_train_per_class": 50, "n_test_per_class": 50}"#)
        .unwrap();
    assert!(h.step(10).is_ok());
    assert!(Playground::new(r#"{"mu": -1.0}"#).is_err());
    assert!(Playground::new(r#"{"bogus": 1}"#).is_err());
    assert!(Playground::new(r#"{"n_hidden": 0}"#).is_err());
}
