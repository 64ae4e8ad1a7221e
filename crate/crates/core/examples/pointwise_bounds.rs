//! Grand maximal truncations against their pointwise majorants, and the
//! endpoint level-set bound, on the seeded test suite.
use rough_weights::verify::{run_pointwise_lemmas, ExperimentConfig, Scenario};

fn main() -> rough_weights::Result<()> {
    let mut cfg = ExperimentConfig::preset(Scenario::Lemmas);
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse().map_err(|e| rough_weights::Error::Config(format!("seed: {e}")))?;
    }
    for r in run_pointwise_lemmas(&cfg)? {
        let target = r.target.map(|t| format!(" (target {t})")).unwrap_or_default();
        println!("{:<36} {:>12.5} {}{target}", r.quantity, r.value, r.status);
    }
    Ok(())
}
