//! Monte-Carlo power sweeps over scenario variants.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bcd::{optimize, BcdOptions};
use crate::error::{Error, Result};
use crate::scenario::{sample_channels, PhaseVector, ScenarioConfig};

/// Column order of the per-trial CSV.
pub const TRIAL_HEADER: &str =
    "scenario,power,trial,secrecy_rate,lambda_sr,iterations,feasible,seed";
/// Column order of the per-group summary CSV.
pub const SUMMARY_HEADER: &str = "scenario,power,n_feasible,n_trials,mean_secrecy_rate,std_error";

pub const DEFAULT_POWERS: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
pub const DEFAULT_TRIALS: usize = 50;
pub const DEFAULT_SINR_THRESHOLD: f64 = 0.05;

pub const BUILTIN_NAMES: [&str; 2] = ["one-ed", "two-ed"];

/// The desk-scale configuration with one or two eavesdropping targets.
pub fn builtin_config(name: &str) -> Option<ScenarioConfig> {
    let (angles, views): (&[f64], &[f64]) = match name {
        "one-ed" => (&[72.0], &[-85.0]),
        "two-ed" => (&[72.0, 78.0], &[-85.0, -88.0]),
        _ => return None,
    };
    let k = angles.len();
    Some(ScenarioConfig {
        n_tx: 4,
        n_rx: 4,
        n_ed: 4,
        n_irs: 10,
        n_users: 2,
        n_targets: k,
        target_angles_deg: angles.to_vec(),
        ed_view_angles_deg: views.to_vec(),
        target_reflectivity: vec![Complex64::new(0.1, 0.0); k],
        ed_path_loss: vec![Complex64::new(0.1, 0.0); k],
        element_spacing_radar: 0.5,
        element_spacing_ed: 0.5,
        noise_radar: 1.0,
        noise_ed: vec![1.0; k],
        noise_user: vec![1.0; 2],
        power_budget: 1.0,
        sinr_thresholds: vec![DEFAULT_SINR_THRESHOLD; k],
        direct_targets: (0..k).collect(),
        indirect_targets: vec![],
        use_irs_comm_paths: false,
        rng_seed: 0,
    })
}

/// Moves every target to the IRS-assisted (non-line-of-sight) set.
pub fn into_nlos(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.indirect_targets = (0..cfg.n_targets).collect();
    cfg.direct_targets.clear();
    cfg
}

/// A named configuration, optionally with the IRS switched off.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVariant {
    pub name: String,
    pub config: ScenarioConfig,
    /// Zero every IRS channel and skip the phase block.
    pub disable_irs: bool,
}

/// Which IRS variants to generate per base scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IrsMode {
    #[default]
    Enabled,
    Disabled,
    Both,
}

/// Expands named base configurations into sweep variants. Names gain a
/// `-nlos` suffix when targets are moved behind the IRS and `-no-irs` for
/// IRS-disabled variants.
pub fn expand_variants(
    bases: &[(String, ScenarioConfig)],
    nlos: bool,
    irs: IrsMode,
) -> Vec<ScenarioVariant> {
    let mut out = Vec::new();
    for (name, cfg) in bases {
        let (name, cfg) = if nlos {
            (format!("{name}-nlos"), into_nlos(cfg.clone()))
        } else {
            (name.clone(), cfg.clone())
        };
        let flags: &[bool] = match irs {
            IrsMode::Enabled => &[false],
            IrsMode::Disabled => &[true],
            IrsMode::Both => &[false, true],
        };
        for &disable_irs in flags {
            let name = if disable_irs {
                format!("{name}-no-irs")
            } else {
                name.clone()
            };
            out.push(ScenarioVariant {
                name,
                config: cfg.clone(),
                disable_irs,
            });
        }
    }
    out
}

/// Both builtin scenarios, each with and without the IRS.
pub fn builtin_scenarios() -> Vec<ScenarioVariant> {
    let bases: Vec<_> = BUILTIN_NAMES
        .iter()
        .map(|n| (n.to_string(), builtin_config(n).expect("builtin")))
        .collect();
    expand_variants(&bases, false, IrsMode::Both)
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub powers: Vec<f64>,
    pub n_trials: usize,
    pub base_seed: u64,
    pub scenarios: Vec<ScenarioVariant>,
    pub workers: usize,
    pub bcd: BcdOptions,
}

impl SweepSpec {
    pub fn new(scenarios: Vec<ScenarioVariant>) -> Self {
        Self {
            powers: DEFAULT_POWERS.to_vec(),
            n_trials: DEFAULT_TRIALS,
            base_seed: 7,
            scenarios,
            workers: 1,
            bcd: BcdOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.powers.is_empty() {
            return bad("at least one power level is required".into());
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return bad("power levels must be positive and finite".into());
        }
        if self.powers.windows(2).any(|w| w[1] <= w[0]) {
            return bad("power levels must be strictly increasing".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.scenarios.is_empty() {
            return bad("no scenarios selected".into());
        }
        for (i, v) in self.scenarios.iter().enumerate() {
            if v.name.is_empty() || v.name.contains([',', '"', '\n', '\r']) {
                return bad(format!("scenario name {:?} is not CSV-safe", v.name));
            }
            if self.scenarios[..i].iter().any(|o| o.name == v.name) {
                return bad(format!("duplicate scenario name {:?}", v.name));
            }
            let mut cfg = v.config.clone();
            cfg.power_budget = self.powers[0];
            cfg.validate()?;
        }
        self.bcd.spsa_sched.validate()
    }
}

/// One row of the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub power: f64,
    pub trial: usize,
    pub secrecy_rate: f64,
    pub lambda_sr: f64,
    pub iterations: usize,
    pub feasible: bool,
    pub seed: u64,
    #[serde(skip)]
    pub spsa_iterations: usize,
    /// Final IRS phases; `None` when the IRS is disabled or the trial failed.
    #[serde(skip)]
    pub phases: Option<PhaseVector>,
}

/// Mean and standard error of the feasible trials of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub scenario: String,
    pub power: f64,
    pub n_feasible: usize,
    pub n_trials: usize,
    pub mean_secrecy_rate: Option<f64>,
    pub std_error: Option<f64>,
}

impl GroupSummary {
    pub fn from_rows(scenario: &str, power: f64, rows: &[TrialRecord]) -> Self {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.feasible)
            .map(|r| r.secrecy_rate)
            .collect();
        let n = values.len();
        let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
        let std_error = mean.map(|m| {
            if n < 2 {
                0.0
            } else {
                let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            }
        });
        Self {
            scenario: scenario.to_string(),
            power,
            n_feasible: n,
            n_trials: rows.len(),
            mean_secrecy_rate: mean,
            std_error,
        }
    }

    /// Mean with an all-infeasible group counted as zero secrecy.
    pub fn mean_or_zero(&self) -> f64 {
        self.mean_secrecy_rate.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<TrialRecord>,
    pub summaries: Vec<GroupSummary>,
}

impl SweepResult {
    pub fn summary(&self, scenario: &str, power: f64) -> Option<&GroupSummary> {
        self.summaries
            .iter()
            .find(|s| s.scenario == scenario && s.power == power)
    }
}

/// Runs one trial; infeasibility becomes a flagged row.
pub fn run_trial(
    variant: &ScenarioVariant,
    power: f64,
    trial: usize,
    base_seed: u64,
    bcd: &BcdOptions,
) -> Result<TrialRecord> {
    let seed = base_seed.wrapping_add(trial as u64);
    let mut cfg = variant.config.clone();
    cfg.power_budget = power;
    cfg.rng_seed = seed;
    let mut ch = sample_channels(&cfg)?;
    let mut opts = *bcd;
    if variant.disable_irs {
        ch = ch.without_irs();
        opts.optimize_phases = false;
    }
    let mut row = TrialRecord {
        scenario: variant.name.clone(),
        power,
        trial,
        secrecy_rate: 0.0,
        lambda_sr: 0.0,
        iterations: 0,
        feasible: false,
        seed,
        spsa_iterations: 0,
        phases: None,
    };
    match optimize(&cfg, &ch, &opts) {
        Ok(out) => {
            row.secrecy_rate = out.final_secrecy_rate();
            row.lambda_sr = out.final_lambda_sr();
            row.iterations = out.trace.len();
            row.feasible = true;
            row.spsa_iterations = out.trace.total_spsa_iterations();
            row.phases = (!variant.disable_irs).then_some(out.phases);
            Ok(row)
        }
        Err(Error::Infeasible { iteration, .. }) => {
            row.iterations = iteration.unwrap_or(0);
            Ok(row)
        }
        Err(e) => Err(e),
    }
}

/// Runs the sweep, writing trial rows to `trials` as each
/// `(power, scenario)` group completes and summary rows to `summary`.
///
/// Groups run power-major. Trials inside a group run on `workers` threads
/// and are written in trial order, so the output does not depend on the
/// worker count. Fails with [`Error::AllInfeasible`] after writing a power
/// level at which every trial of every scenario was infeasible.
pub fn run_sweep<W1: Write, W2: Write>(
    spec: &SweepSpec,
    trials: W1,
    summary: W2,
) -> Result<SweepResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let mut trial_out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(trials);
    let mut summary_out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(summary);
    trial_out.write_record(TRIAL_HEADER.split(','))?;
    summary_out.write_record(SUMMARY_HEADER.split(','))?;
    trial_out.flush()?;
    summary_out.flush()?;

    let mut result = SweepResult::default();
    for &power in &spec.powers {
        let mut any_feasible = false;
        for variant in &spec.scenarios {
            let rows: Vec<TrialRecord> = pool.install(|| {
                (0..spec.n_trials)
                    .into_par_iter()
                    .map(|t| run_trial(variant, power, t, spec.base_seed, &spec.bcd))
                    .collect::<Result<_>>()
            })?;
            for row in &rows {
                trial_out.serialize(row)?;
            }
            trial_out.flush()?;
            let s = GroupSummary::from_rows(&variant.name, power, &rows);
            any_feasible |= s.n_feasible > 0;
            summary_out.serialize(&s)?;
            summary_out.flush()?;
            result.summaries.push(s);
            result.rows.extend(rows);
        }
        if !any_feasible {
            return Err(Error::AllInfeasible { power });
        }
    }
    Ok(result)
}

/// `results.csv` → `results.summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

/// [`run_sweep`] into `out` and its sibling summary file.
pub fn run_sweep_to_path(spec: &SweepSpec, out: &Path) -> Result<SweepResult> {
    let trials = BufWriter::new(File::create(out)?);
    let summary = BufWriter::new(File::create(summary_path(out))?);
    run_sweep(spec, trials, summary)
}
