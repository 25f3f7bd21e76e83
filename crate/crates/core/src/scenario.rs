//! Problem instances and channel synthesis.
//!
//! Geometric channels (radar-target-radar and radar-ED) are outer products of
//! uniform-linear-array steering vectors; every other link is i.i.d. standard
//! circularly-symmetric complex Gaussian. Target indices are 0-based.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, CVector};

fn half_wavelength() -> f64 {
    0.5
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Radar transmit/receive antennas.
    pub n_tx: usize,
    /// Receive antennas per legitimate user.
    pub n_rx: usize,
    /// Receive antennas per eavesdropper.
    pub n_ed: usize,
    /// Reflecting elements on the IRS.
    pub n_irs: usize,
    pub n_users: usize,
    pub n_targets: usize,
    /// Azimuth of each target seen from the radar, degrees.
    pub target_angles_deg: Vec<f64>,
    /// Direction of the radar seen from each ED, degrees.
    pub ed_view_angles_deg: Vec<f64>,
    pub target_reflectivity: Vec<Complex64>,
    pub ed_path_loss: Vec<Complex64>,
    #[serde(default = "half_wavelength")]
    pub element_spacing_radar: f64,
    #[serde(default = "half_wavelength")]
    pub element_spacing_ed: f64,
    pub noise_radar: f64,
    pub noise_ed: Vec<f64>,
    pub noise_user: Vec<f64>,
    pub power_budget: f64,
    pub sinr_thresholds: Vec<f64>,
    pub direct_targets: Vec<usize>,
    pub indirect_targets: Vec<usize>,
    /// Add the IRS legs to the user and ED channels.
    #[serde(default)]
    pub use_irs_comm_paths: bool,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("n_ed", self.n_ed),
            ("n_irs", self.n_irs),
            ("n_users", self.n_users),
            ("n_targets", self.n_targets),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        let k = self.n_targets;
        for (name, len) in [
            ("target_angles_deg", self.target_angles_deg.len()),
            ("ed_view_angles_deg", self.ed_view_angles_deg.len()),
            ("target_reflectivity", self.target_reflectivity.len()),
            ("ed_path_loss", self.ed_path_loss.len()),
            ("noise_ed", self.noise_ed.len()),
            ("sinr_thresholds", self.sinr_thresholds.len()),
        ] {
            if len != k {
                return bad(format!(
                    "{name} has {len} entries, expected n_targets = {k}"
                ));
            }
        }
        if self.noise_user.len() != self.n_users {
            return bad(format!(
                "noise_user has {} entries, expected n_users = {}",
                self.noise_user.len(),
                self.n_users
            ));
        }
        if !(self.power_budget > 0.0 && self.power_budget.is_finite()) {
            return bad("power_budget must be positive and finite".into());
        }
        if !(self.noise_radar > 0.0) {
            return bad("noise_radar must be positive".into());
        }
        if self
            .noise_ed
            .iter()
            .chain(&self.noise_user)
            .any(|&s| !(s > 0.0))
        {
            return bad("noise variances must be positive".into());
        }
        if self
            .sinr_thresholds
            .iter()
            .any(|&g| !(g >= 0.0) || !g.is_finite())
        {
            return bad("sinr_thresholds must be finite and non-negative".into());
        }
        let mut seen = vec![false; k];
        for &t in self.direct_targets.iter().chain(&self.indirect_targets) {
            if t >= k {
                return bad(format!("target index {t} out of range for {k} targets"));
            }
            if seen[t] {
                return bad(format!(
                    "target {t} appears more than once in the D/I partition"
                ));
            }
            seen[t] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return bad(format!(
                "target {missing} is in neither the direct nor the indirect set"
            ));
        }
        Ok(())
    }

    pub fn is_indirect(&self, k: usize) -> bool {
        self.indirect_targets.contains(&k)
    }

    fn check_target(&self, k: usize) -> Result<()> {
        if k >= self.n_targets {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.n_targets,
            });
        }
        Ok(())
    }
}

/// All realized channel matrices for one Monte-Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Radar → target k → radar, `n_tx × n_tx`.
    pub h_rtr: Vec<CMatrix>,
    /// Radar → ED k, `n_ed × n_tx`.
    pub g_ed: Vec<CMatrix>,
    /// Radar → user l, `n_rx × n_tx`.
    pub f_user: Vec<CMatrix>,
    /// Radar → IRS, `n_irs × n_tx`.
    pub h_ri: CMatrix,
    /// IRS → radar, `n_tx × n_irs`.
    pub h_ir: CMatrix,
    /// Target k → IRS, `n_irs × 1`.
    pub h_ti: Vec<CMatrix>,
    /// IRS → target k, `1 × n_irs`.
    pub h_it: Vec<CMatrix>,
    /// IRS → ED k, `n_ed × n_irs`.
    pub h_ie: Vec<CMatrix>,
    /// IRS → user l, `n_rx × n_irs`.
    pub h_iu: Vec<CMatrix>,
}

impl ChannelSet {
    /// Same draw with every IRS link zeroed.
    pub fn without_irs(&self) -> Self {
        let zero = |m: &CMatrix| CMatrix::zeros(m.nrows(), m.ncols());
        Self {
            h_rtr: self.h_rtr.clone(),
            g_ed: self.g_ed.clone(),
            f_user: self.f_user.clone(),
            h_ri: zero(&self.h_ri),
            h_ir: zero(&self.h_ir),
            h_ti: self.h_ti.iter().map(zero).collect(),
            h_it: self.h_it.iter().map(zero).collect(),
            h_ie: self.h_ie.iter().map(zero).collect(),
            h_iu: self.h_iu.iter().map(zero).collect(),
        }
    }
}

/// IRS phase shifts, each in `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        for (index, &value) in phases.iter().enumerate() {
            if !(0.0..=PI).contains(&value) {
                return Err(Error::InvalidPhase { index, value });
            }
        }
        Ok(Self(phases))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Componentwise projection onto `[0, π]`. NaN maps to 0.
    pub fn projected(raw: impl IntoIterator<Item = f64>) -> Self {
        Self(
            raw.into_iter()
                .map(|p| if p.is_nan() { 0.0 } else { p.clamp(0.0, PI) })
                .collect(),
        )
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self((0..n).map(|_| rng.random_range(0.0..=PI)).collect())
    }

    pub fn phases(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Diagonal of the reflection matrix, `e^{jφ_i}`.
    pub fn reflection(&self) -> Vec<Complex64> {
        self.0
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect()
    }
}

/// ULA steering vector: entry `m` is `exp(j·2π·spacing·m·sin(angle))`.
pub fn steering_vector(angle_deg: f64, n_elems: usize, spacing_wavelengths: f64) -> CMatrix {
    let s = angle_deg.to_radians().sin();
    CMatrix::from_fn(n_elems, 1, |m, _| {
        Complex64::from_polar(1.0, 2.0 * PI * spacing_wavelengths * m as f64 * s)
    })
}

/// `β_k a_R(θ_k) a_T(θ_k)^T` (plain transpose).
pub fn build_direct_target_channel(cfg: &ScenarioConfig, k: usize) -> Result<CMatrix> {
    cfg.check_target(k)?;
    let a = steering_vector(
        cfg.target_angles_deg[k],
        cfg.n_tx,
        cfg.element_spacing_radar,
    );
    Ok((&a * a.transpose()) * cfg.target_reflectivity[k])
}

/// `α_k a_E(φ_k) a_T(θ_k)^T`.
pub fn build_ed_channel(cfg: &ScenarioConfig, k: usize) -> Result<CMatrix> {
    cfg.check_target(k)?;
    let a_e = steering_vector(cfg.ed_view_angles_deg[k], cfg.n_ed, cfg.element_spacing_ed);
    let a_t = steering_vector(
        cfg.target_angles_deg[k],
        cfg.n_tx,
        cfg.element_spacing_radar,
    );
    Ok((a_e * a_t.transpose()) * cfg.ed_path_loss[k])
}

/// `H_ir Φ H_ti,k H_it,k Φ H_ri` for a target in the indirect set.
pub fn build_composite_indirect_channel(
    cfg: &ScenarioConfig,
    ch: &ChannelSet,
    phi: &PhaseVector,
    k: usize,
) -> Result<CMatrix> {
    cfg.check_target(k)?;
    if !cfg.is_indirect(k) {
        return Err(Error::WrongPartition { target: k });
    }
    indirect_channel(ch, phi, k)
}

/// Composite IRS round-trip channel for target `k`, without partition checks.
///
/// The middle factor is rank one, so the product is the outer product of
/// `H_ir Φ h_ti` and `h_it Φ H_ri`; no `N × N` product is formed.
pub fn indirect_channel(ch: &ChannelSet, phi: &PhaseVector, k: usize) -> Result<CMatrix> {
    if k >= ch.h_ti.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: ch.h_ti.len(),
        });
    }
    let n = ch.h_ir.ncols();
    if phi.len() != n || ch.h_ri.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "phase vector has {} entries, IRS has {n}",
            phi.len()
        )));
    }
    let refl = phi.reflection();
    let ti = CVector::from_fn(n, |i, _| refl[i] * ch.h_ti[k][(i, 0)]);
    let it = CMatrix::from_fn(1, n, |_, i| ch.h_it[k][(0, i)] * refl[i]);
    let left = &ch.h_ir * ti;
    let right = it * &ch.h_ri;
    Ok(left * right)
}

/// `A + H Φ H_ri` where `H` is an IRS→receiver link.
fn add_irs_leg(
    direct: &CMatrix,
    irs_to_rx: &CMatrix,
    refl: &[Complex64],
    h_ri: &CMatrix,
) -> CMatrix {
    let mut scaled = irs_to_rx.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= refl[j];
    }
    direct + scaled * h_ri
}

/// Standard circularly-symmetric complex Gaussian matrix.
pub fn complex_gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// RNG stream for channel draws; other streams come from [`seeded_rng`].
pub const CHANNEL_STREAM: u64 = 0;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one channel realization. Deterministic in `cfg.rng_seed`.
///
/// Draw order puts every link whose count does not depend on `n_targets`
/// first, so scenarios differing only in the target list share user channels.
pub fn sample_channels(cfg: &ScenarioConfig) -> Result<ChannelSet> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.rng_seed, CHANNEL_STREAM);
    let mut f_user = Vec::with_capacity(cfg.n_users);
    let mut h_iu = Vec::with_capacity(cfg.n_users);
    for _ in 0..cfg.n_users {
        f_user.push(complex_gaussian_matrix(cfg.n_rx, cfg.n_tx, &mut rng));
        h_iu.push(complex_gaussian_matrix(cfg.n_rx, cfg.n_irs, &mut rng));
    }
    let h_ri = complex_gaussian_matrix(cfg.n_irs, cfg.n_tx, &mut rng);
    let h_ir = complex_gaussian_matrix(cfg.n_tx, cfg.n_irs, &mut rng);
    let (mut h_ti, mut h_it, mut h_ie) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..cfg.n_targets {
        h_ti.push(complex_gaussian_matrix(cfg.n_irs, 1, &mut rng));
        h_it.push(complex_gaussian_matrix(1, cfg.n_irs, &mut rng));
        h_ie.push(complex_gaussian_matrix(cfg.n_ed, cfg.n_irs, &mut rng));
    }
    let h_rtr = (0..cfg.n_targets)
        .map(|k| build_direct_target_channel(cfg, k))
        .collect::<Result<_>>()?;
    let g_ed = (0..cfg.n_targets)
        .map(|k| build_ed_channel(cfg, k))
        .collect::<Result<_>>()?;
    Ok(ChannelSet {
        h_rtr,
        g_ed,
        f_user,
        h_ri,
        h_ir,
        h_ti,
        h_it,
        h_ie,
        h_iu,
    })
}

/// The channels the optimizer actually sees for a fixed phase vector.
#[derive(Debug, Clone)]
pub struct EffectiveChannels {
    /// Per-user channel, with the IRS leg when `use_irs_comm_paths` is set.
    pub users: Vec<CMatrix>,
    /// Per-ED channel, likewise.
    pub eds: Vec<CMatrix>,
    /// Radar sensing channel per target: direct for D, IRS round trip for I.
    pub targets: Vec<CMatrix>,
}

impl EffectiveChannels {
    pub fn new(cfg: &ScenarioConfig, ch: &ChannelSet, phi: &PhaseVector) -> Result<Self> {
        let (users, eds) = if cfg.use_irs_comm_paths {
            let refl = phi.reflection();
            if refl.len() != ch.h_ri.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "phase vector has {} entries, IRS has {}",
                    refl.len(),
                    ch.h_ri.nrows()
                )));
            }
            let users = ch
                .f_user
                .iter()
                .zip(&ch.h_iu)
                .map(|(f, h)| add_irs_leg(f, h, &refl, &ch.h_ri))
                .collect();
            let eds = ch
                .g_ed
                .iter()
                .zip(&ch.h_ie)
                .map(|(g, h)| add_irs_leg(g, h, &refl, &ch.h_ri))
                .collect();
            (users, eds)
        } else {
            (ch.f_user.clone(), ch.g_ed.clone())
        };
        let targets = (0..cfg.n_targets)
            .map(|k| {
                if cfg.is_indirect(k) {
                    indirect_channel(ch, phi, k)
                } else {
                    Ok(ch.h_rtr[k].clone())
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            users,
            eds,
            targets,
        })
    }
}
