//! Shared fixtures for the benchmarks.

use dfrc_secrecy::experiment::{builtin_config, into_nlos};
use dfrc_secrecy::scenario::sample_channels;
use dfrc_secrecy::{ChannelSet, ScenarioConfig};

/// A builtin scenario at power `power`, with its channel draw for `seed`.
pub fn instance(name: &str, power: f64, seed: u64, nlos: bool) -> (ScenarioConfig, ChannelSet) {
    let mut cfg = builtin_config(name).expect("builtin scenario");
    if nlos {
        cfg = into_nlos(cfg);
    }
    cfg.power_budget = power;
    cfg.rng_seed = seed;
    let ch = sample_channels(&cfg).expect("valid builtin");
    (cfg, ch)
}
