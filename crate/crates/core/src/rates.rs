//! Target SINRs, link rates and the multicast max-min secrecy objective.
//! All rates are in bits.

use crate::error::{Error, Result};
use crate::numerics::{frobenius, gram, identity, logdet_hpd, CMatrix, CVector};
use crate::scenario::{ChannelSet, EffectiveChannels, PhaseVector, ScenarioConfig};

/// Information precoder `w` and artificial-noise precoder `b`, both
/// `n_tx × n_targets`; column `k` serves target `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderPair {
    pub w: CMatrix,
    pub b: CMatrix,
}

impl PrecoderPair {
    pub fn new(w: CMatrix, b: CMatrix) -> Result<Self> {
        if w.shape() != b.shape() {
            return Err(Error::DimensionMismatch(format!(
                "W is {:?}, B is {:?}",
                w.shape(),
                b.shape()
            )));
        }
        Ok(Self { w, b })
    }

    pub fn zeros(n_tx: usize, n_targets: usize) -> Self {
        Self {
            w: CMatrix::zeros(n_tx, n_targets),
            b: CMatrix::zeros(n_tx, n_targets),
        }
    }

    /// `Tr(W W^H) + Tr(B B^H)`.
    pub fn power(&self) -> f64 {
        frobenius(&self.w).powi(2) + frobenius(&self.b).powi(2)
    }

    pub fn w_col(&self, k: usize) -> CVector {
        self.w.column(k).into_owned()
    }

    pub fn b_col(&self, k: usize) -> CVector {
        self.b.column(k).into_owned()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            w: self.w.scale(s),
            b: self.b.scale(s),
        }
    }
}

/// Radar return energy `‖H w_k‖² + ‖H b_k‖²` (the SINR numerator).
pub fn radar_energy(h: &CMatrix, w_k: &CVector, b_k: &CVector) -> Result<f64> {
    if h.ncols() != w_k.len() || h.ncols() != b_k.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} columns, beamformers have {} and {} entries",
            h.ncols(),
            w_k.len(),
            b_k.len()
        )));
    }
    Ok((h * w_k).norm_squared() + (h * b_k).norm_squared())
}

pub fn sinr_direct(h_dc: &CMatrix, w_k: &CVector, b_k: &CVector, noise_radar: f64) -> Result<f64> {
    Ok(radar_energy(h_dc, w_k, b_k)? / noise_radar)
}

pub fn sinr_indirect(
    h_in: &CMatrix,
    w_k: &CVector,
    b_k: &CVector,
    noise_radar: f64,
) -> Result<f64> {
    Ok(radar_energy(h_in, w_k, b_k)? / noise_radar)
}

/// `log₂det(σ²I + H(BB^H + WW^H)H^H) − log₂det(σ²I + HBB^HH^H)`.
fn link_rate(h: &CMatrix, pre: &PrecoderPair, noise: f64) -> Result<f64> {
    if h.ncols() != pre.w.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} columns, precoders have {} rows",
            h.ncols(),
            pre.w.nrows()
        )));
    }
    let interference = identity(h.nrows()).scale(noise) + gram(&(h * &pre.b));
    let total = &interference + gram(&(h * &pre.w));
    let rate = logdet_hpd(&total)? - logdet_hpd(&interference)?;
    Ok(rate.max(0.0))
}

pub fn eavesdropper_rate(g_k: &CMatrix, pre: &PrecoderPair, noise_ed: f64) -> Result<f64> {
    link_rate(g_k, pre, noise_ed)
}

pub fn user_rate(f_l: &CMatrix, pre: &PrecoderPair, noise_user: f64) -> Result<f64> {
    link_rate(f_l, pre, noise_user)
}

/// `R_u,l − R_e,k` for every pair, indexed `l * n_targets + k`.
pub fn secrecy_gaps(
    cfg: &ScenarioConfig,
    eff: &EffectiveChannels,
    pre: &PrecoderPair,
) -> Result<Vec<f64>> {
    let users = eff
        .users
        .iter()
        .zip(&cfg.noise_user)
        .map(|(f, &s)| user_rate(f, pre, s))
        .collect::<Result<Vec<_>>>()?;
    let eds = eff
        .eds
        .iter()
        .zip(&cfg.noise_ed)
        .map(|(g, &s)| eavesdropper_rate(g, pre, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(users
        .iter()
        .flat_map(|ru| eds.iter().map(move |re| ru - re))
        .collect())
}

/// `[min_{l,k} (R_u,l − R_e,k)]⁺` on precomputed effective channels.
pub fn secrecy_rate(
    cfg: &ScenarioConfig,
    eff: &EffectiveChannels,
    pre: &PrecoderPair,
) -> Result<f64> {
    let worst = secrecy_gaps(cfg, eff, pre)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(worst.max(0.0))
}

pub fn secrecy_objective(
    ch: &ChannelSet,
    phi: &PhaseVector,
    pre: &PrecoderPair,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    let eff = EffectiveChannels::new(cfg, ch, phi)?;
    secrecy_rate(cfg, &eff, pre)
}

/// `min_k (‖H_k w_k‖² + ‖H_k b_k‖² − γ_k)` over all targets, using each
/// target's sensing channel in `eff`.
pub fn min_sinr_margin(
    cfg: &ScenarioConfig,
    eff: &EffectiveChannels,
    pre: &PrecoderPair,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for (k, h) in eff.targets.iter().enumerate() {
        let e = radar_energy(h, &pre.w_col(k), &pre.b_col(k))?;
        worst = worst.min(e - cfg.sinr_thresholds[k]);
    }
    Ok(worst)
}
