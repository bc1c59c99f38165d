use hybridsim::scenario::{builtin_preset, set_path, Scenario, SweepBlock, PRESETS};
use hybridsim::Error;
use proptest::prelude::*;

fn preset_doc(name: &str) -> toml::Value {
    toml::from_str(builtin_preset(name).unwrap()).unwrap()
}

fn eval_with(
    name: &str,
    edits: &[(&str, f64)],
) -> Result<std::collections::BTreeMap<String, f64>, Error> {
    let mut doc = preset_doc(name);
    for (path, x) in edits {
        set_path(&mut doc, path, *x)?;
    }
    Ok(Scenario::from_value(doc)?.evaluate()?.quantities)
}

#[test]
fn fast_presets_pass_their_checks() {
    for (name, text) in PRESETS {
        // the condensate preset is covered by the cli acceptance target
        if *name == "bec_cantilever" {
            continue;
        }
        let s = Scenario::parse(text).unwrap();
        let ev = s.evaluate().unwrap();
        let verdicts = s.run_checks(&ev);
        assert!(!verdicts.is_empty(), "{name}");
        for v in verdicts {
            assert!(v.pass, "{name}: {v:?}");
        }
    }
}

#[test]
fn evaluation_is_repeatable() {
    let s = Scenario::parse(builtin_preset("lattice_membrane").unwrap()).unwrap();
    assert_eq!(s.evaluate().unwrap(), s.evaluate().unwrap());
}

#[test]
fn scheme_block_must_match_scheme() {
    let text = builtin_preset("ion_be9")
        .unwrap()
        .replace("scheme = \"ion\"", "scheme = \"lattice\"");
    assert!(matches!(Scenario::parse(&text), Err(Error::Config(_))));
}

#[test]
fn sweep_axis_grid_forms() {
    let g = SweepBlock::parse_cli("ion.distance_m=log:1e-6:1e-4:3")
        .unwrap()
        .grid()
        .unwrap();
    assert_eq!(g.len(), 3);
    assert!((g[1] - 1e-5).abs() < 1e-18);
    assert!(SweepBlock::parse_cli("ion.distance_m").is_err());
}

#[test]
fn unknown_path_is_config_error() {
    let mut doc = preset_doc("ion_be9");
    assert!(set_path(&mut doc, "nonexistent.distance_m", 1.0).is_err());
    set_path(&mut doc, "ion.distanse_m", 1.0).unwrap();
    assert!(matches!(Scenario::from_value(doc), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn required_voltage_ignores_applied_voltage(v in 1.0f64..500.0) {
        let q = eval_with("ion_be9", &[("ion.tip_voltage_v", v)]).unwrap();
        let base = eval_with("ion_be9", &[]).unwrap();
        let (a, b) = (q["required_voltage_v"], base["required_voltage_v"]);
        prop_assert!(((a - b) / b).abs() < 1e-12);
    }

    #[test]
    fn ion_epsilon_linear_in_voltage(v in 1.0f64..500.0) {
        let q = eval_with("ion_be9", &[("ion.tip_voltage_v", v)]).unwrap();
        let base = eval_with("ion_be9", &[]).unwrap();
        let ratio = (q["epsilon"] / v) / (base["epsilon"] / 90.0);
        prop_assert!((ratio - 1.0).abs() < 1e-9, "ratio {}", ratio);
    }

    #[test]
    fn collective_coupling_scales_as_sqrt_n(n in 1u32..5000) {
        let q = eval_with("cnt_collective", &[("cnt.n_atoms", n as f64)]).unwrap();
        let r = q["gN_hz"] / q["g0_hz"];
        prop_assert!((r / (n as f64).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_over_zero_point_amplitude(t in 0.01f64..400.0) {
        let q = eval_with("lattice_membrane", &[("environment.bath_temperature_k", t)]).unwrap();
        let ratio = (q["thermal_amplitude_m"] / q["zero_point_amplitude_m"]).powi(2);
        prop_assert!((ratio / (2.0 * q["n_th"]) - 1.0).abs() < 1e-9);
    }
}
