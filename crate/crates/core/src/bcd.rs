//! Outer block-coordinate loop: auxiliaries, precoders, IRS phases.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::precoder::{initial_precoders, solve_precoders, SolverOptions, OPTIMALITY_TOL};
use crate::rates::{min_sinr_margin, secrecy_rate, PrecoderPair};
use crate::scenario::{seeded_rng, ChannelSet, EffectiveChannels, PhaseVector, ScenarioConfig};
use crate::spsa::{optimize_phases, SpsaSchedule};
use crate::surrogate::update_auxiliaries;

/// RNG stream for the initial phase vector.
pub const PHASE_STREAM: u64 = 1;
/// RNG stream for SPSA perturbations.
pub const SPSA_STREAM: u64 = 2;
/// Largest tolerated drop of `λ_sr` between iterations.
pub const MONOTONICITY_SLACK: f64 = 10.0 * OPTIMALITY_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcdOptions {
    pub max_outer: usize,
    pub tol: f64,
    pub spsa_sched: SpsaSchedule,
    pub solver: SolverOptions,
    /// Run the phase block when there are indirect targets.
    pub optimize_phases: bool,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            max_outer: 50,
            tol: 1e-4,
            spsa_sched: SpsaSchedule::default(),
            solver: SolverOptions::default(),
            optimize_phases: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lambda_sr: f64,
    /// True secrecy rate after the iteration's updates.
    pub secrecy_rate: f64,
    pub power_used: f64,
    pub min_sinr_margin: f64,
    /// Worst indirect-target margin reached by SPSA; empty when skipped.
    pub spsa_best: Option<f64>,
    pub spsa_iterations: usize,
    /// Seconds since the start of the run.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerTrace {
    pub records: Vec<IterationRecord>,
}

impl OptimizerTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn total_spsa_iterations(&self) -> usize {
        self.records.iter().map(|r| r.spsa_iterations).sum()
    }

    /// One CSV row per iteration, header from the record field names.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.records.is_empty() {
            w.write_record([
                "iteration",
                "lambda_sr",
                "secrecy_rate",
                "power_used",
                "min_sinr_margin",
                "spsa_best",
                "spsa_iterations",
                "wall_time",
            ])?;
        }
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub precoders: PrecoderPair,
    pub phases: PhaseVector,
    pub trace: OptimizerTrace,
    /// True secrecy rate at the initial point.
    pub initial_secrecy_rate: f64,
}

impl BcdOutcome {
    pub fn final_secrecy_rate(&self) -> f64 {
        self.trace
            .last()
            .map_or(self.initial_secrecy_rate, |r| r.secrecy_rate)
    }

    pub fn final_lambda_sr(&self) -> f64 {
        self.trace
            .last()
            .map_or(self.initial_secrecy_rate, |r| r.lambda_sr)
    }
}

fn at_iteration(err: Error, iteration: usize) -> Error {
    match err {
        Error::Infeasible { target, .. } => Error::Infeasible {
            target,
            iteration: Some(iteration),
        },
        other => other,
    }
}

/// Runs the alternating optimization from the seeded initial point.
///
/// Stops when `λ_sr` changes by less than `tol` or after `max_outer`
/// iterations.
pub fn optimize(cfg: &ScenarioConfig, ch: &ChannelSet, opts: &BcdOptions) -> Result<BcdOutcome> {
    cfg.validate()?;
    opts.spsa_sched.validate()?;
    if opts.max_outer == 0 {
        return Err(Error::InvalidConfig("max_outer must be positive".into()));
    }
    let start = Instant::now();
    let mut phi = PhaseVector::random(cfg.n_irs, &mut seeded_rng(cfg.rng_seed, PHASE_STREAM));
    let mut spsa_rng = seeded_rng(cfg.rng_seed, SPSA_STREAM);
    let run_phases = opts.optimize_phases && !cfg.indirect_targets.is_empty() && cfg.n_irs > 0;
    let phase_independent = !run_phases || !cfg.use_irs_comm_paths;

    let mut eff = EffectiveChannels::new(cfg, ch, &phi)?;
    let mut pre = initial_precoders(cfg, &eff, &opts.solver).map_err(|e| at_iteration(e, 1))?;
    let initial_secrecy_rate = secrecy_rate(cfg, &eff, &pre)?;
    let mut previous = initial_secrecy_rate;
    let mut trace = OptimizerTrace::default();

    for iteration in 1..=opts.max_outer {
        let aux = update_auxiliaries(cfg, &eff, &pre)?;
        let sol = solve_precoders(cfg, &eff, &aux, &pre, &opts.solver)
            .map_err(|e| at_iteration(e, iteration))?;
        pre = sol.precoders;

        let (spsa_best, spsa_iterations) = if run_phases {
            let upd = optimize_phases(ch, &phi, &pre, cfg, &opts.spsa_sched, &mut spsa_rng)?;
            phi = upd.phases;
            eff = EffectiveChannels::new(cfg, ch, &phi)?;
            (Some(upd.best_margin), upd.iterations)
        } else {
            (None, 0)
        };

        let lambda_sr = sol.lambda_sr;
        trace.records.push(IterationRecord {
            iteration,
            lambda_sr,
            secrecy_rate: secrecy_rate(cfg, &eff, &pre)?,
            power_used: pre.power(),
            min_sinr_margin: min_sinr_margin(cfg, &eff, &pre)?,
            spsa_best,
            spsa_iterations,
            wall_time: start.elapsed().as_secs_f64(),
        });

        if phase_independent && lambda_sr < previous - MONOTONICITY_SLACK {
            return Err(Error::NonMonotone {
                iteration,
                previous,
                current: lambda_sr,
            });
        }
        let converged = (lambda_sr - previous).abs() < opts.tol;
        previous = lambda_sr;
        if converged {
            break;
        }
    }

    Ok(BcdOutcome {
        precoders: pre,
        phases: phi,
        trace,
        initial_secrecy_rate,
    })
}
