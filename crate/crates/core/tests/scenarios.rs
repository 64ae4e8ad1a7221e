use rough_weights::geometry::LinearMap;
use rough_weights::verify::{all_passed, run_scenario, ExperimentConfig, Scenario};
use rough_weights::Error;

fn passes(s: Scenario) {
    let rows = run_scenario(&ExperimentConfig::preset(s)).unwrap();
    assert!(!rows.is_empty());
    let failed: Vec<_> = rows.iter().filter(|r| r.failed()).map(|r| r.quantity.clone()).collect();
    assert!(all_passed(&rows), "{s}: {failed:?}");
}

#[test]
fn lattice_preset_passes() {
    passes(Scenario::LatticeCheck);
}

#[test]
fn identities_preset_passes() {
    passes(Scenario::Identities);
}

#[test]
fn comp_sparse_preset_passes() {
    passes(Scenario::CompSparse);
}

#[test]
fn weight_traces_preset_passes() {
    passes(Scenario::WeightTraces);
}

#[test]
fn appendix_preset_passes() {
    passes(Scenario::Appendix);
}

#[test]
fn weak_type_preset_passes() {
    passes(Scenario::WeakType);
}

#[test]
fn presets_validate_and_parse_back() {
    for s in Scenario::ALL {
        let c = ExperimentConfig::preset(s);
        c.validate().unwrap();
        let parsed = ExperimentConfig::parse(&format!("scenario = {s}\n"), None).unwrap();
        assert_eq!(parsed.scenario, s);
    }
}

#[test]
fn rejects_malformed_configs() {
    let bad = [
        "[grid]\nn = 1\n",
        "scenario = sparse\n[nowhere]\nx = 1\n",
        "scenario = sparse\n[grid]\nn = 3\n",
        "scenario = sparse\n[exponents]\np = 0.5\n",
        "scenario = sparse\n[matrices]\na2 = 1\n",
        "scenario = sparse\n[weight]\nrecipe = power\n",
    ];
    for text in bad {
        assert!(ExperimentConfig::parse(text, None).is_err(), "{text}");
    }
}

#[test]
fn scaling_without_an_inverse_pair_is_a_config_error() {
    let mut c = ExperimentConfig::preset(Scenario::Apart);
    c.matrices = vec![LinearMap::scalar(1, 2, 1).unwrap(), LinearMap::identity(1).unwrap()];
    assert!(matches!(run_scenario(&c), Err(Error::Config(_))));
}
