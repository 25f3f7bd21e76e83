//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use dfrc_secrecy::bcd::{optimize, BcdOptions, BcdOutcome};
use dfrc_secrecy::experiment::{
    builtin_config, expand_variants, summary_path, IrsMode, SweepResult, SweepSpec, BUILTIN_NAMES,
    DEFAULT_POWERS,
};
use dfrc_secrecy::numerics::logdet_hpd;
use dfrc_secrecy::precoder::{linearize_sinr, solve_precoders, SolverOptions};
use dfrc_secrecy::rates::{
    eavesdropper_rate, min_sinr_margin, radar_energy, user_rate, PrecoderPair,
};
use dfrc_secrecy::scenario::{
    build_direct_target_channel, complex_gaussian_matrix, indirect_channel, sample_channels,
    seeded_rng, EffectiveChannels, PhaseVector, ScenarioConfig,
};
use dfrc_secrecy::spsa::{estimate_gradient, maximize_spsa, SpsaSchedule};
use dfrc_secrecy::surrogate::{
    mse_matrix_user, optimal_pair_aux, surrogate_secrecy, update_auxiliaries,
};
use dfrc_secrecy::{CMatrix, CVector};
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(outcome: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    let timely = elapsed <= limit;
    check(
        outcome.pass && timely,
        format!("{}; {:.2?} (limit {:?})", outcome.detail, elapsed, limit),
    )
}

fn random_pair(n_tx: usize, k: usize, rng: &mut impl Rng) -> PrecoderPair {
    PrecoderPair::new(
        complex_gaussian_matrix(n_tx, k, rng),
        complex_gaussian_matrix(n_tx, k, rng),
    )
    .unwrap()
}

fn mmse_rate_identity() -> Outcome {
    let (mut worst_user, mut worst_secrecy) = (0.0_f64, 0.0_f64);
    for seed in 0..100 {
        let mut rng = seeded_rng(seed, 11);
        let pre = random_pair(4, 2, &mut rng);
        let users: Vec<CMatrix> = (0..2)
            .map(|_| complex_gaussian_matrix(4, 4, &mut rng))
            .collect();
        let eds: Vec<CMatrix> = (0..2)
            .map(|_| complex_gaussian_matrix(4, 4, &mut rng))
            .collect();
        for f in &users {
            for g in &eds {
                let aux = optimal_pair_aux(f, g, &pre, 1.0, 1.0).unwrap();
                let e_b = mse_matrix_user(&aux.u_b, f, &pre, 1.0).unwrap();
                let r_u = user_rate(f, &pre, 1.0).unwrap();
                let r_e = eavesdropper_rate(g, &pre, 1.0).unwrap();
                worst_user = worst_user.max((-logdet_hpd(&e_b).unwrap() - r_u).abs());
                let s = surrogate_secrecy(&aux, f, g, &pre, 1.0, 1.0).unwrap();
                worst_secrecy = worst_secrecy.max((s - (r_u - r_e)).abs());
            }
        }
    }
    check(
        worst_user <= 1e-7 && worst_secrecy <= 1e-7,
        format!("max |−log det E_b − R_u| = {worst_user:.2e}, max |surrogate − (R_u − R_e)| = {worst_secrecy:.2e}"),
    )
}

/// Worst relative error between the analytic and central-difference
/// gradients over all real coordinates of `[w; b]`.
fn gradient_error(h: &CMatrix, w: &CVector, b: &CVector) -> f64 {
    let lin = linearize_sinr(h, w, b, 0.0).unwrap();
    let n = w.len();
    let eps = 1e-6;
    let energy = |d: &CVector| {
        radar_energy(h, &d.rows(0, n).into_owned(), &d.rows(n, n).into_owned()).unwrap()
    };
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for j in 0..2 * n {
        for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let mut e = CVector::zeros(2 * n);
            e[j] = unit;
            let plus = &lin.anchor_point + e.scale(eps);
            let minus = &lin.anchor_point - e.scale(eps);
            numeric.push((energy(&plus) - energy(&minus)) / (2.0 * eps));
            analytic.push((lin.gradient[j] * unit).re);
        }
    }
    let diff: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

fn gradient_correctness() -> Outcome {
    let (mut worst_dc, mut worst_in) = (0.0_f64, 0.0_f64);
    let mut cfg = builtin_config("two-ed").unwrap();
    cfg.direct_targets = vec![0];
    cfg.indirect_targets = vec![1];
    for seed in 0..100 {
        let mut rng = seeded_rng(seed, 12);
        cfg.rng_seed = seed;
        cfg.target_angles_deg[0] = rng.random_range(-90.0..90.0);
        cfg.target_reflectivity[0] =
            Complex64::new(rng.random_range(0.05..1.0), rng.random_range(-1.0..1.0));
        let pre = random_pair(cfg.n_tx, cfg.n_targets, &mut rng);
        let h_dc = build_direct_target_channel(&cfg, 0).unwrap();
        worst_dc = worst_dc.max(gradient_error(&h_dc, &pre.w_col(0), &pre.b_col(0)));
        let ch = sample_channels(&cfg).unwrap();
        let phi = PhaseVector::random(cfg.n_irs, &mut rng);
        let h_in = indirect_channel(&ch, &phi, 1).unwrap();
        worst_in = worst_in.max(gradient_error(&h_in, &pre.w_col(1), &pre.b_col(1)));
    }
    check(
        worst_dc <= 1e-4 && worst_in <= 1e-4,
        format!("max relative error f_dc {worst_dc:.2e}, f_in {worst_in:.2e}"),
    )
}

struct Run {
    cfg: ScenarioConfig,
    phases: PhaseVector,
    outcome: BcdOutcome,
}

fn bcd_runs(nlos: bool, seeds: std::ops::Range<u64>, powers: &[f64]) -> Vec<Run> {
    let mut runs = Vec::new();
    for (i, seed) in seeds.enumerate() {
        let mut cfg = builtin_config("two-ed").unwrap();
        if nlos {
            cfg = dfrc_secrecy::experiment::into_nlos(cfg);
        }
        cfg.rng_seed = seed;
        cfg.power_budget = powers[i % powers.len()];
        let ch = sample_channels(&cfg).unwrap();
        let outcome = optimize(&cfg, &ch, &BcdOptions::default()).unwrap();
        runs.push(Run {
            phases: outcome.phases.clone(),
            cfg,
            outcome,
        });
    }
    runs
}

fn monotonicity(runs: &[Run]) -> Outcome {
    let mut worst_drop = 0.0_f64;
    let mut worst_gain = f64::INFINITY;
    for run in runs {
        let mut prev = run.outcome.initial_secrecy_rate;
        for r in &run.outcome.trace.records {
            worst_drop = worst_drop.max(prev - r.lambda_sr);
            prev = r.lambda_sr;
        }
        worst_gain =
            worst_gain.min(run.outcome.final_secrecy_rate() - run.outcome.initial_secrecy_rate);
    }
    check(
        worst_drop <= 1e-4 && worst_gain >= 0.0,
        format!(
            "{} runs, largest λ_sr drop {worst_drop:.2e}, smallest final − initial secrecy {worst_gain:.4}",
            runs.len()
        ),
    )
}

fn constraint_satisfaction(runs: &[Run]) -> Outcome {
    let mut power_ok = true;
    let mut worst_margin = f64::INFINITY;
    for run in runs {
        let pre = &run.outcome.precoders;
        power_ok &= pre.power() <= run.cfg.power_budget;
        let ch = sample_channels(&run.cfg).unwrap();
        let eff = EffectiveChannels::new(&run.cfg, &ch, &run.phases).unwrap();
        worst_margin = worst_margin.min(min_sinr_margin(&run.cfg, &eff, pre).unwrap());
    }
    check(
        power_ok && worst_margin >= -1e-5,
        format!(
            "{} runs, power within budget: {power_ok}, worst true SINR margin {worst_margin:.3e}",
            runs.len()
        ),
    )
}

fn spsa_oracle() -> Outcome {
    let n = 10;
    let sched = SpsaSchedule {
        max_iters: 2000,
        ..SpsaSchedule::default()
    };
    let mut hits = 0;
    let mut errors = Vec::new();
    for seed in 0..10 {
        let mut rng = seeded_rng(seed, 13);
        let target: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..PI - 0.5)).collect();
        let phi0 = PhaseVector::random(n, &mut rng);
        let f = |p: &PhaseVector| -> f64 {
            -p.phases()
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        };
        let run = maximize_spsa(&phi0, &sched, f, &mut rng).unwrap();
        let err = run
            .best
            .phases()
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errors.push(err);
        if err <= 1e-2 {
            hits += 1;
        }
    }

    let mut rng = seeded_rng(100, 13);
    let target: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..PI - 0.5)).collect();
    let point =
        PhaseVector::new((0..n).map(|_| rng.random_range(0.5..PI - 0.5)).collect()).unwrap();
    let mut f = |p: &PhaseVector| -> f64 {
        -p.phases()
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
    };
    let truth: Vec<f64> = point
        .phases()
        .iter()
        .zip(&target)
        .map(|(x, t)| -2.0 * (x - t))
        .collect();
    let draws = 1000;
    let mut mean = vec![0.0; n];
    for _ in 0..draws {
        for (m, g) in mean.iter_mut().zip(estimate_gradient(
            &point,
            sched.perturbation(1),
            &mut f,
            &mut rng,
        )) {
            *m += g / draws as f64;
        }
    }
    let rel: Vec<f64> = mean
        .iter()
        .zip(&truth)
        .map(|(m, t)| ((m - t) / t).abs())
        .collect();
    let worst_rel = rel.iter().cloned().fold(0.0, f64::max);
    let within_5 = rel.iter().filter(|r| **r <= 0.05).count();
    let norm2: f64 = truth.iter().map(|t| t * t).sum();
    let worst_z = mean
        .iter()
        .zip(&truth)
        .map(|(m, t)| (m - t).abs() / ((norm2 - t * t) / draws as f64).sqrt())
        .fold(0.0, f64::max);
    check(
        hits >= 9 && worst_rel <= 0.05,
        format!(
            "{hits}/10 seeds reach ‖φ − φ*‖∞ ≤ 1e-2 (worst {:.2e}); mean gradient relative error worst {:.1}% ({within_5}/{n} components within 5%, worst deviation {worst_z:.2} standard errors)",
            errors.iter().cloned().fold(0.0, f64::max),
            100.0 * worst_rel
        ),
    )
}

fn scalar_config(power: f64, ed_gain: f64) -> ScenarioConfig {
    ScenarioConfig {
        n_tx: 1,
        n_rx: 1,
        n_ed: 1,
        n_irs: 1,
        n_users: 1,
        n_targets: 1,
        target_angles_deg: vec![0.0],
        ed_view_angles_deg: vec![0.0],
        target_reflectivity: vec![Complex64::new(0.0, 0.0)],
        ed_path_loss: vec![Complex64::new(ed_gain, 0.0)],
        element_spacing_radar: 0.5,
        element_spacing_ed: 0.5,
        noise_radar: 1.0,
        noise_ed: vec![1.0],
        noise_user: vec![1.0],
        power_budget: power,
        sinr_thresholds: vec![0.0],
        direct_targets: vec![0],
        indirect_targets: vec![],
        use_irs_comm_paths: false,
        rng_seed: 1,
    }
}

fn scalar(v: f64) -> CMatrix {
    CMatrix::from_element(1, 1, Complex64::new(v, 0.0))
}

fn subproblem_oracle() -> Outcome {
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for &power in &[0.5, 1.0, 4.0, 10.0] {
        for &(ed_gain, noise) in &[(0.0, false), (0.5, true)] {
            let cfg = scalar_config(power, ed_gain);
            let eff = EffectiveChannels {
                users: vec![scalar(1.0)],
                eds: vec![scalar(ed_gain)],
                targets: vec![scalar(0.0)],
            };
            let anchor = PrecoderPair::new(scalar(power.sqrt()), scalar(0.0)).unwrap();
            let aux = update_auxiliaries(&cfg, &eff, &anchor).unwrap();
            let opts = SolverOptions {
                artificial_noise: noise,
            };
            let sol = solve_precoders(&cfg, &eff, &aux, &anchor, &opts).unwrap();
            let expected = ((1.0 + power) / (1.0 + ed_gain * ed_gain * power)).log2();
            worst = worst.max((sol.lambda_sr - expected).abs());
            cases += 1;

            let mut ch = sample_channels(&cfg).unwrap();
            ch.f_user[0] = scalar(1.0);
            let out = optimize(&cfg, &ch, &BcdOptions::default()).unwrap();
            worst = worst.max((out.final_secrecy_rate() - expected).abs());
            cases += 1;
        }
    }
    check(
        worst <= 1e-3,
        format!("{cases} scalar cases against log₂((1+P)/(1+g²P)), max error {worst:.2e}"),
    )
}

fn trend_spec() -> SweepSpec {
    let bases: Vec<_> = BUILTIN_NAMES
        .iter()
        .map(|n| (n.to_string(), builtin_config(n).unwrap()))
        .collect();
    let mut variants = expand_variants(&bases, false, IrsMode::Both);
    variants.extend(expand_variants(&bases, true, IrsMode::Both));
    let mut spec = SweepSpec::new(variants);
    spec.workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    spec
}

fn mean(res: &SweepResult, scenario: &str, power: f64) -> (f64, f64) {
    let s = res.summary(scenario, power).expect("summary row");
    (s.mean_or_zero(), s.std_error.unwrap_or(0.0))
}

fn trend_reproduction(res: &SweepResult, spec: &SweepSpec) -> Outcome {
    let powers = &spec.powers;
    let mut notes = Vec::new();
    let mut monotone = true;
    for v in &spec.scenarios {
        for w in powers.windows(2) {
            let (lo, se_lo) = mean(res, &v.name, w[0]);
            let (hi, se_hi) = mean(res, &v.name, w[1]);
            if hi < lo - se_lo.max(se_hi) {
                monotone = false;
                notes.push(format!("{} drops {lo:.3}→{hi:.3} at P={}", v.name, w[1]));
            }
        }
    }
    let mut ordered = true;
    for (one, two) in [("one-ed", "two-ed"), ("one-ed-nlos", "two-ed-nlos")] {
        for &p in powers {
            let (a, _) = mean(res, one, p);
            let (b, _) = mean(res, two, p);
            if a < b {
                ordered = false;
                notes.push(format!("{one} {a:.3} < {two} {b:.3} at P={p}"));
            }
        }
    }
    let mut irs_helps = true;
    for name in ["one-ed-nlos", "two-ed-nlos"] {
        for &p in powers {
            let (a, _) = mean(res, name, p);
            let (b, _) = mean(res, &format!("{name}-no-irs"), p);
            if a < b {
                irs_helps = false;
                notes.push(format!("{name} {a:.3} < no-IRS {b:.3} at P={p}"));
            }
        }
    }
    let table: Vec<String> = [
        "one-ed",
        "two-ed",
        "one-ed-nlos",
        "two-ed-nlos",
        "two-ed-nlos-no-irs",
    ]
    .iter()
    .map(|n| {
        let vals: Vec<String> = powers
            .iter()
            .map(|&p| format!("{:.2}", mean(res, n, p).0))
            .collect();
        format!("{n} [{}]", vals.join(" "))
    })
    .collect();
    check(
        monotone && ordered && irs_helps,
        format!(
            "(a) non-decreasing in P: {monotone}; (b) one-ED ≥ two-ED: {ordered}; (c) IRS ≥ no-IRS (nlos): {irs_helps}; means {}{}",
            table.join(", "),
            if notes.is_empty() { String::new() } else { format!("; violations: {}", notes.join("; ")) }
        ),
    )
}

fn sweep_bytes(spec: &SweepSpec, dir: &Path, tag: &str) -> (Vec<u8>, Vec<u8>) {
    let out = dir.join(format!("{tag}.csv"));
    dfrc_secrecy::experiment::run_sweep_to_path(spec, &out).unwrap();
    (
        std::fs::read(&out).unwrap(),
        std::fs::read(summary_path(&out)).unwrap(),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let mut spec = trend_spec();
    spec.powers = vec![1.0, 8.0];
    spec.n_trials = 4;
    spec.workers = 1;
    let a = sweep_bytes(&spec, dir, "det-a");
    let b = sweep_bytes(&spec, dir, "det-b");
    spec.workers = 4;
    let c = sweep_bytes(&spec, dir, "det-c");
    let same = a == b && a == c;
    check(
        same && !a.0.is_empty(),
        format!(
            "{} variants × 2 powers × 4 trials: repeat identical {}, 1 vs 4 workers identical {}",
            spec.scenarios.len(),
            a == b,
            a == c
        ),
    )
}

fn main() {
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let timed = |f: &mut dyn FnMut() -> Outcome, limit: Option<Duration>| {
        let start = Instant::now();
        let o = f();
        match limit {
            Some(l) => within(o, start.elapsed(), l),
            None => o,
        }
    };

    results.push((
        1,
        "MMSE/rate identity",
        timed(&mut mmse_rate_identity, Some(Duration::from_secs(10))),
    ));
    results.push((
        2,
        "gradient correctness",
        timed(&mut gradient_correctness, Some(Duration::from_secs(5))),
    ));

    let start = Instant::now();
    let mut runs = bcd_runs(false, 0..20, &DEFAULT_POWERS);
    runs.extend(bcd_runs(true, 100..120, &DEFAULT_POWERS));
    let mono = within(
        monotonicity(&runs),
        start.elapsed(),
        Duration::from_secs(300),
    );
    results.push((3, "BCD monotonicity", mono));
    results.push((4, "constraint satisfaction", constraint_satisfaction(&runs)));

    results.push((
        5,
        "SPSA oracle",
        timed(&mut spsa_oracle, Some(Duration::from_secs(30))),
    ));
    results.push((
        6,
        "scalar subproblem oracle",
        timed(&mut subproblem_oracle, Some(Duration::from_secs(10))),
    ));

    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let spec = trend_spec();
    let trend_csv = dir.path().join("trend.csv");
    let trend = match dfrc_secrecy::experiment::run_sweep_to_path(&spec, &trend_csv) {
        Ok(res) => trend_reproduction(&res, &spec),
        Err(e) => check(false, format!("sweep failed: {e}")),
    };
    results.push((
        7,
        "trend reproduction",
        within(trend, start.elapsed(), Duration::from_secs(7200)),
    ));
    results.push((8, "determinism", determinism(dir.path())));

    let mut failed = 0;
    for (n, name, o) in &results {
        println!(
            "criterion {n} ({name}): {} | {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
