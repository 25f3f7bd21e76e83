//! IRS phase optimization by simultaneous perturbation stochastic
//! approximation (SPSA).

use rand::Rng;

use crate::error::{Error, Result};
use crate::rates::{radar_energy, PrecoderPair};
use crate::scenario::{indirect_channel, ChannelSet, PhaseVector, ScenarioConfig};

/// Improvement below this does not reset the patience counter.
pub const IMPROVEMENT_TOL: f64 = 1e-6;

/// Gains `a(t) = a0/(t + A_stab)^alpha` and `c(t) = c0/t^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsaSchedule {
    pub a0: f64,
    pub a_stab: f64,
    pub alpha: f64,
    pub c0: f64,
    pub gamma: f64,
    pub max_iters: usize,
    pub patience: usize,
}

impl Default for SpsaSchedule {
    fn default() -> Self {
        Self {
            a0: 0.2,
            a_stab: 50.0,
            alpha: 0.602,
            c0: 0.1,
            gamma: 0.101,
            max_iters: 500,
            patience: 200,
        }
    }
}

impl SpsaSchedule {
    /// Checks that the gain sequences decay, have divergent sums and
    /// square-summable ratio `a/c`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return bad(format!("a0 must be positive, got {}", self.a0));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return bad(format!("c0 must be positive, got {}", self.c0));
        }
        if !(self.a_stab >= 0.0 && self.a_stab.is_finite()) {
            return bad(format!("A_stab must be nonnegative, got {}", self.a_stab));
        }
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0.5, 1], got {}", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return bad(format!("gamma must lie in (0, 0.5), got {}", self.gamma));
        }
        if !(self.alpha - self.gamma > 0.5) {
            return bad(format!(
                "alpha - gamma must exceed 0.5, got {}",
                self.alpha - self.gamma
            ));
        }
        if self.max_iters == 0 || self.patience == 0 {
            return bad("max_iters and patience must be positive".into());
        }
        Ok(())
    }

    pub fn step_size(&self, t: usize) -> f64 {
        self.a0 / (t as f64 + self.a_stab).powf(self.alpha)
    }

    pub fn perturbation(&self, t: usize) -> f64 {
        self.c0 / (t as f64).powf(self.gamma)
    }
}

/// Worst indirect-target margin `min_{k∈I} ‖H_in,k w_k‖² + ‖H_in,k b_k‖² − γ_k`.
pub fn phase_objective(
    ch: &ChannelSet,
    phi: &PhaseVector,
    pre: &PrecoderPair,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    if cfg.indirect_targets.is_empty() {
        return Err(Error::EmptyIndirectSet);
    }
    let mut worst = f64::INFINITY;
    for &k in &cfg.indirect_targets {
        let h = indirect_channel(ch, phi, k)?;
        let e = radar_energy(&h, &pre.w_col(k), &pre.b_col(k))?;
        worst = worst.min(e - cfg.sinr_thresholds[k]);
    }
    Ok(worst)
}

fn rademacher<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn shifted(phi: &PhaseVector, delta: &[f64], c: f64) -> PhaseVector {
    PhaseVector::projected(phi.phases().iter().zip(delta).map(|(p, d)| p + c * d))
}

/// One SPSA ascent step at iteration `t ≥ 1`; exactly two objective calls.
pub fn spsa_step<F, R>(
    phi: &PhaseVector,
    t: usize,
    sched: &SpsaSchedule,
    objective: &mut F,
    rng: &mut R,
) -> PhaseVector
where
    F: FnMut(&PhaseVector) -> f64,
    R: Rng + ?Sized,
{
    let t = t.max(1);
    let c = sched.perturbation(t);
    let a = sched.step_size(t);
    let delta = rademacher(phi.len(), rng);
    let diff = objective(&shifted(phi, &delta, c)) - objective(&shifted(phi, &delta, -c));
    PhaseVector::projected(
        phi.phases()
            .iter()
            .zip(&delta)
            .map(|(p, d)| p + a * diff / (2.0 * c * d)),
    )
}

/// Two-point simultaneous-perturbation gradient estimate with half-width
/// `c`, perturbed points clamped to `[0, π]`.
pub fn estimate_gradient<F, R>(
    phi: &PhaseVector,
    c: f64,
    objective: &mut F,
    rng: &mut R,
) -> Vec<f64>
where
    F: FnMut(&PhaseVector) -> f64,
    R: Rng + ?Sized,
{
    let delta = rademacher(phi.len(), rng);
    let diff = objective(&shifted(phi, &delta, c)) - objective(&shifted(phi, &delta, -c));
    delta.iter().map(|d| diff / (2.0 * c * d)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpsaRun {
    /// Best iterate seen, `phi0` included.
    pub best: PhaseVector,
    pub best_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Maximizes `objective` over `[0, π]^N` starting from `phi0`.
///
/// Runs until `max_iters` or until the best observed value has not improved
/// by [`IMPROVEMENT_TOL`] for `patience` consecutive iterations.
pub fn maximize_spsa<F, R>(
    phi0: &PhaseVector,
    sched: &SpsaSchedule,
    mut objective: F,
    rng: &mut R,
) -> Result<SpsaRun>
where
    F: FnMut(&PhaseVector) -> f64,
    R: Rng + ?Sized,
{
    sched.validate()?;
    let mut best = phi0.clone();
    let mut best_value = objective(phi0);
    let mut evaluations = 1;
    let mut reference = best_value;
    let mut stale = 0;
    let mut phi = phi0.clone();
    let mut iterations = 0;
    for t in 1..=sched.max_iters {
        phi = spsa_step(&phi, t, sched, &mut objective, rng);
        let value = objective(&phi);
        evaluations += 3;
        iterations = t;
        if value > best_value {
            best_value = value;
            best = phi.clone();
        }
        if best_value > reference + IMPROVEMENT_TOL {
            reference = best_value;
            stale = 0;
        } else {
            stale += 1;
            if stale >= sched.patience {
                break;
            }
        }
    }
    Ok(SpsaRun {
        best,
        best_value,
        iterations,
        evaluations,
    })
}

/// Result of the phase block.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseUpdate {
    pub phases: PhaseVector,
    /// Worst indirect-target margin at `phases`.
    pub best_margin: f64,
    pub iterations: usize,
}

/// Maximizes the worst indirect-target SINR margin over the IRS phases with
/// `(W, B)` fixed. The objective is divided by the largest
/// `f_in,k(Φ0) + γ_k` so the SPSA gains act on an `O(1)` scale.
pub fn optimize_phases<R>(
    ch: &ChannelSet,
    phi0: &PhaseVector,
    pre: &PrecoderPair,
    cfg: &ScenarioConfig,
    sched: &SpsaSchedule,
    rng: &mut R,
) -> Result<PhaseUpdate>
where
    R: Rng + ?Sized,
{
    if cfg.indirect_targets.is_empty() {
        return Err(Error::EmptyIndirectSet);
    }
    sched.validate()?;
    let mut scale: f64 = 1e-12;
    for &k in &cfg.indirect_targets {
        let h = indirect_channel(ch, phi0, k)?;
        let e = radar_energy(&h, &pre.w_col(k), &pre.b_col(k))?;
        scale = scale.max(e + cfg.sinr_thresholds[k].max(0.0));
    }
    let mut failure = None;
    let run = maximize_spsa(
        phi0,
        sched,
        |phi| match phase_objective(ch, phi, pre, cfg) {
            Ok(v) => v / scale,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        rng,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(PhaseUpdate {
        best_margin: phase_objective(ch, &run.best, pre, cfg)?,
        phases: run.best,
        iterations: run.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::sinr_indirect;
    use crate::scenario::tests::small_config;
    use crate::scenario::{complex_gaussian_matrix, sample_channels, seeded_rng};
    use std::f64::consts::PI;

    #[test]
    fn validator_accepts_defaults_and_rejects_slow_decay() {
        assert!(SpsaSchedule::default().validate().is_ok());
        let bad = SpsaSchedule {
            a0: 1.0,
            alpha: 0.4,
            ..SpsaSchedule::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidSchedule(_))));
        let bad = SpsaSchedule {
            alpha: 0.6,
            gamma: 0.2,
            ..SpsaSchedule::default()
        };
        assert!(bad.validate().is_err());
        let bad = SpsaSchedule {
            patience: 0,
            ..SpsaSchedule::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn constant_objective_leaves_phases_unchanged() {
        let mut rng = seeded_rng(1, 2);
        let phi = PhaseVector::new(vec![0.3, 1.2, 2.9]).unwrap();
        let next = spsa_step(&phi, 1, &SpsaSchedule::default(), &mut |_| 4.0, &mut rng);
        assert_eq!(next, phi);
    }

    #[test]
    fn linear_objective_moves_by_step_size() {
        let sched = SpsaSchedule::default();
        let mut rng = seeded_rng(3, 2);
        let phi = PhaseVector::new(vec![1.5]).unwrap();
        for t in [1, 7, 40] {
            let next = spsa_step(&phi, t, &sched, &mut |p| p.phases()[0], &mut rng);
            assert!((next.phases()[0] - 1.5 - sched.step_size(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn step_makes_two_evaluations_and_stays_in_range() {
        let sched = SpsaSchedule {
            a0: 50.0,
            ..SpsaSchedule::default()
        };
        let mut rng = seeded_rng(4, 2);
        let mut phi = PhaseVector::new(vec![0.05; 12]).unwrap();
        for t in 1..50 {
            let mut calls = 0;
            phi = spsa_step(
                &phi,
                t,
                &sched,
                &mut |p| {
                    calls += 1;
                    p.phases()
                        .iter()
                        .enumerate()
                        .map(|(i, x)| x * (i as f64 - 5.0))
                        .sum()
                },
                &mut rng,
            );
            assert_eq!(calls, 2);
            assert!(phi.phases().iter().all(|p| (0.0..=PI).contains(p)));
        }
    }

    #[test]
    fn constant_objective_returns_start() {
        let mut rng = seeded_rng(5, 2);
        let phi0 = PhaseVector::new(vec![0.5, 0.7]).unwrap();
        let run = maximize_spsa(&phi0, &SpsaSchedule::default(), |_| 1.0, &mut rng).unwrap();
        assert_eq!(run.best, phi0);
        assert_eq!(run.iterations, SpsaSchedule::default().patience);
    }

    #[test]
    fn scalar_concave_maximizer() {
        let sched = SpsaSchedule {
            max_iters: 2000,
            ..SpsaSchedule::default()
        };
        let mut rng = seeded_rng(6, 2);
        let phi0 = PhaseVector::new(vec![0.2]).unwrap();
        let run = maximize_spsa(
            &phi0,
            &sched,
            |p| -(p.phases()[0] - PI / 2.0).powi(2),
            &mut rng,
        )
        .unwrap();
        assert!((run.best.phases()[0] - PI / 2.0).abs() <= 1e-2);
    }

    #[test]
    fn best_value_never_below_start() {
        let mut rng = seeded_rng(7, 2);
        let phi0 = PhaseVector::random(6, &mut rng);
        let f = |p: &PhaseVector| p.phases().iter().map(|x| (3.0 * x).sin()).sum::<f64>();
        let start = f(&phi0);
        let run = maximize_spsa(&phi0, &SpsaSchedule::default(), f, &mut rng).unwrap();
        assert!(run.best_value >= start);
        assert_eq!(run.best_value, f(&run.best));
        assert_eq!(run.evaluations, 1 + 3 * run.iterations);
    }

    #[test]
    fn deterministic_given_seed() {
        let phi0 = PhaseVector::new(vec![0.4; 5]).unwrap();
        let f = |p: &PhaseVector| -p.phases().iter().map(|x| (x - 1.0).powi(2)).sum::<f64>();
        let a = maximize_spsa(&phi0, &SpsaSchedule::default(), f, &mut seeded_rng(9, 2)).unwrap();
        let b = maximize_spsa(&phi0, &SpsaSchedule::default(), f, &mut seeded_rng(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    fn indirect_instance(indirect: Vec<usize>) -> (ScenarioConfig, ChannelSet, PrecoderPair) {
        let mut cfg = small_config();
        cfg.direct_targets = (0..cfg.n_targets)
            .filter(|k| !indirect.contains(k))
            .collect();
        cfg.indirect_targets = indirect;
        let ch = sample_channels(&cfg).unwrap();
        let mut rng = seeded_rng(11, 3);
        let pre = PrecoderPair::new(
            complex_gaussian_matrix(cfg.n_tx, cfg.n_targets, &mut rng),
            complex_gaussian_matrix(cfg.n_tx, cfg.n_targets, &mut rng),
        )
        .unwrap();
        (cfg, ch, pre)
    }

    #[test]
    fn phase_objective_requires_indirect_targets() {
        let (cfg, ch, pre) = indirect_instance(vec![]);
        let phi = PhaseVector::zeros(cfg.n_irs);
        assert!(matches!(
            phase_objective(&ch, &phi, &pre, &cfg),
            Err(Error::EmptyIndirectSet)
        ));
        let mut rng = seeded_rng(0, 2);
        assert!(matches!(
            optimize_phases(&ch, &phi, &pre, &cfg, &SpsaSchedule::default(), &mut rng),
            Err(Error::EmptyIndirectSet)
        ));
    }

    #[test]
    fn phase_objective_zero_channels() {
        let (cfg, ch, pre) = indirect_instance(vec![0, 1]);
        let ch = ch.without_irs();
        let phi = PhaseVector::zeros(cfg.n_irs);
        let max_gamma = cfg.sinr_thresholds.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(phase_objective(&ch, &phi, &pre, &cfg).unwrap(), -max_gamma);
    }

    #[test]
    fn phase_objective_single_target_is_sinr() {
        let (mut cfg, ch, pre) = indirect_instance(vec![1]);
        cfg.sinr_thresholds = vec![0.0, 0.0];
        let mut rng = seeded_rng(12, 2);
        let phi = PhaseVector::random(cfg.n_irs, &mut rng);
        let h = indirect_channel(&ch, &phi, 1).unwrap();
        let sinr = sinr_indirect(&h, &pre.w_col(1), &pre.b_col(1), cfg.noise_radar).unwrap();
        let value = phase_objective(&ch, &phi, &pre, &cfg).unwrap();
        assert!((value - cfg.noise_radar * sinr).abs() <= 1e-12 * value.abs().max(1.0));
    }

    #[test]
    fn phase_objective_is_min_of_targets() {
        let (cfg, ch, pre) = indirect_instance(vec![0, 1]);
        let mut rng = seeded_rng(13, 2);
        let phi = PhaseVector::random(cfg.n_irs, &mut rng);
        let per_target: Vec<f64> = (0..2)
            .map(|k| {
                let h = indirect_channel(&ch, &phi, k).unwrap();
                radar_energy(&h, &pre.w_col(k), &pre.b_col(k)).unwrap() - cfg.sinr_thresholds[k]
            })
            .collect();
        assert_eq!(
            phase_objective(&ch, &phi, &pre, &cfg).unwrap(),
            per_target[0].min(per_target[1])
        );
    }

    #[test]
    fn optimize_phases_improves_margin() {
        let (cfg, ch, pre) = indirect_instance(vec![0, 1]);
        let mut rng = seeded_rng(14, 2);
        let phi0 = PhaseVector::random(cfg.n_irs, &mut rng);
        let before = phase_objective(&ch, &phi0, &pre, &cfg).unwrap();
        let out =
            optimize_phases(&ch, &phi0, &pre, &cfg, &SpsaSchedule::default(), &mut rng).unwrap();
        assert!(out.best_margin >= before);
        assert_eq!(
            out.best_margin,
            phase_objective(&ch, &out.phases, &pre, &cfg).unwrap()
        );
    }
}
