//! Weighted-MMSE reformulation of the pairwise secrecy gap.
//!
//! For a user/ED pair `(l, k)` the gap `R_u,l − R_e,k` is the maximum over
//! auxiliary matrices `(U_b, W_b, U_e, W_e, W_z)` of
//!
//! ```text
//! Σ_x [ln det W_x − Tr(W_x E_x)] + 2K + N_E        (nats)
//! ```
//!
//! where `E_b`, `E_e` are the MSE matrices of the user link and of the
//! noise-only ED link, and `E_z = I + G(BB^H + WW^H)G^H/σ²`. For fixed
//! auxiliaries the expression is a concave quadratic in `(W, B)`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::numerics::{
    gram, hermitize, identity, inverse_hpd, logdet_hpd, solve_hpd, trace_product_re, trace_re,
    CMatrix,
};
use crate::rates::PrecoderPair;
use crate::scenario::{EffectiveChannels, ScenarioConfig};

/// Auxiliary matrices for one `(user, ED)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAux {
    /// `n_rx × K` receive filter of the user.
    pub u_b: CMatrix,
    /// `K × K` MSE weight of the user.
    pub w_b: CMatrix,
    /// `n_ed × K` receive filter for the ED artificial-noise term.
    pub u_e: CMatrix,
    pub w_e: CMatrix,
    /// `n_ed × n_ed` weight for the ED total-received-power term.
    pub w_z: CMatrix,
}

/// One [`PairAux`] per `(l, k)`, stored row-major in `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliarySet {
    pub n_users: usize,
    pub n_targets: usize,
    pub pairs: Vec<PairAux>,
}

impl AuxiliarySet {
    pub fn pair(&self, l: usize, k: usize) -> &PairAux {
        &self.pairs[l * self.n_targets + k]
    }
}

fn mismatch(what: &str) -> Error {
    Error::DimensionMismatch(what.to_string())
}

/// `E_b = (I − U^H F W)(I − U^H F W)^H + U^H(σ²I + F B B^H F^H)U`.
pub fn mse_matrix_user(
    u_b: &CMatrix,
    f_l: &CMatrix,
    pre: &PrecoderPair,
    noise_user: f64,
) -> Result<CMatrix> {
    if u_b.nrows() != f_l.nrows() || f_l.ncols() != pre.w.nrows() || u_b.ncols() != pre.w.ncols() {
        return Err(mismatch(
            "mse_matrix_user: U_b, F_l and W are not conformant",
        ));
    }
    let k = pre.w.ncols();
    let err = identity(k) - u_b.adjoint() * f_l * &pre.w;
    let cov = identity(f_l.nrows()).scale(noise_user) + gram(&(f_l * &pre.b));
    Ok(hermitize(
        &(&err * err.adjoint() + u_b.adjoint() * cov * u_b),
    ))
}

/// `E_e = (I − U^H G B/σ)(I − U^H G B/σ)^H + U^H U`.
pub fn mse_matrix_ed(u_e: &CMatrix, g_k: &CMatrix, b: &CMatrix, noise_ed: f64) -> Result<CMatrix> {
    if u_e.nrows() != g_k.nrows() || g_k.ncols() != b.nrows() || u_e.ncols() != b.ncols() {
        return Err(mismatch("mse_matrix_ed: U_e, G_k and B are not conformant"));
    }
    let err = identity(b.ncols()) - (u_e.adjoint() * g_k * b).unscale(noise_ed.sqrt());
    Ok(hermitize(&(&err * err.adjoint() + u_e.adjoint() * u_e)))
}

/// `E_z = I + G(BB^H + WW^H)G^H/σ²`.
pub fn mse_matrix_ed_total(g_k: &CMatrix, pre: &PrecoderPair, noise_ed: f64) -> Result<CMatrix> {
    if g_k.ncols() != pre.w.nrows() {
        return Err(mismatch(
            "mse_matrix_ed_total: G_k and W are not conformant",
        ));
    }
    let received = gram(&(g_k * &pre.b)) + gram(&(g_k * &pre.w));
    Ok(identity(g_k.nrows()) + received.unscale(noise_ed))
}

/// Closed-form optimal auxiliaries for one pair at fixed `(W, B)`.
pub fn optimal_pair_aux(
    f_l: &CMatrix,
    g_k: &CMatrix,
    pre: &PrecoderPair,
    noise_user: f64,
    noise_ed: f64,
) -> Result<PairAux> {
    let user_cov =
        identity(f_l.nrows()).scale(noise_user) + gram(&(f_l * &pre.b)) + gram(&(f_l * &pre.w));
    let u_b = solve_hpd(&user_cov, &(f_l * &pre.w))?;
    let w_b = inverse_hpd(&mse_matrix_user(&u_b, f_l, pre, noise_user)?)?;

    let gb = g_k * &pre.b;
    let ed_noise_cov = identity(g_k.nrows()) + gram(&gb).unscale(noise_ed);
    let u_e = solve_hpd(&ed_noise_cov, &gb.unscale(noise_ed.sqrt()))?;
    let w_e = inverse_hpd(&mse_matrix_ed(&u_e, g_k, &pre.b, noise_ed)?)?;

    let w_z = inverse_hpd(&mse_matrix_ed_total(g_k, pre, noise_ed)?)?;
    Ok(PairAux {
        u_b,
        w_b,
        u_e,
        w_e,
        w_z,
    })
}

pub fn update_auxiliaries(
    cfg: &ScenarioConfig,
    eff: &EffectiveChannels,
    pre: &PrecoderPair,
) -> Result<AuxiliarySet> {
    let mut pairs = Vec::with_capacity(cfg.n_users * cfg.n_targets);
    for (f, &su) in eff.users.iter().zip(&cfg.noise_user) {
        for (g, &se) in eff.eds.iter().zip(&cfg.noise_ed) {
            pairs.push(optimal_pair_aux(f, g, pre, su, se)?);
        }
    }
    Ok(AuxiliarySet {
        n_users: cfg.n_users,
        n_targets: cfg.n_targets,
        pairs,
    })
}

/// Additive constant of the variational form, in nats: the dimensions of
/// `W_b`, `W_e` and `W_z`.
fn dimension_constant(k: usize, n_ed: usize) -> f64 {
    (2 * k + n_ed) as f64
}

/// Part of the surrogate that depends only on the auxiliaries, in nats.
fn auxiliary_terms(aux: &PairAux, noise_user: f64) -> Result<f64> {
    let k = aux.w_b.nrows();
    let n_ed = aux.w_z.nrows();
    let logdets = (logdet_hpd(&aux.w_b)? + logdet_hpd(&aux.w_e)? + logdet_hpd(&aux.w_z)?) * LN_2;
    let traces = trace_re(&aux.w_b)
        + noise_user * trace_product_re(&aux.w_b, &(aux.u_b.adjoint() * &aux.u_b))
        + trace_re(&aux.w_e)
        + trace_product_re(&aux.w_e, &(aux.u_e.adjoint() * &aux.u_e))
        + trace_re(&aux.w_z);
    Ok(logdets - traces + dimension_constant(k, n_ed))
}

/// Surrogate of `R_u,l − R_e,k` in bits, written as the expanded trace terms
/// in `(W, B)` plus the auxiliary-only part. Tight at the closed-form
/// auxiliaries and a lower bound everywhere else.
pub fn surrogate_secrecy(
    aux: &PairAux,
    f_l: &CMatrix,
    g_k: &CMatrix,
    pre: &PrecoderPair,
    noise_user: f64,
    noise_ed: f64,
) -> Result<f64> {
    if aux.u_b.nrows() != f_l.nrows()
        || aux.u_e.nrows() != g_k.nrows()
        || aux.w_b.nrows() != pre.w.ncols()
    {
        return Err(mismatch(
            "surrogate_secrecy: auxiliaries not conformant with channels",
        ));
    }
    let (w, b) = (&pre.w, &pre.b);
    let inv_se = 1.0 / noise_ed.sqrt();
    let ub_h = aux.u_b.adjoint();
    let ue_h = aux.u_e.adjoint();
    let ufw = &ub_h * f_l * w;
    let ufb = &ub_h * f_l * b;
    let gw = g_k * w;
    let gb = g_k * b;
    let ugb = &ue_h * &gb;

    let t_user_linear = 2.0 * trace_product_re(&aux.w_b, &ufw);
    let t_user_w = -trace_product_re(&aux.w_b, &gram(&ufw));
    let t_ed_total_w = -trace_product_re(&aux.w_z, &gram(&gw)) / noise_ed;
    let t_ed_linear = 2.0 * inv_se * trace_product_re(&aux.w_e, &ugb);
    let t_user_b = -trace_product_re(&aux.w_b, &gram(&ufb));
    let t_ed_b = -trace_product_re(&aux.w_e, &gram(&ugb)) / noise_ed;
    let t_ed_total_b = -trace_product_re(&aux.w_z, &gram(&gb)) / noise_ed;

    let nats = t_user_linear
        + t_user_w
        + t_ed_total_w
        + t_ed_linear
        + t_user_b
        + t_ed_b
        + t_ed_total_b
        + auxiliary_terms(aux, noise_user)?;
    Ok(nats / LN_2)
}

/// The surrogate of one pair as an explicit concave quadratic, in bits:
///
/// `c − Σ_k w_k^H A_w w_k − Σ_k b_k^H A_b b_k + 2 Re Tr(C_w^H W) + 2 Re Tr(C_b^H B)`.
#[derive(Debug, Clone)]
pub struct SurrogateQuadratic {
    pub constant: f64,
    pub a_w: CMatrix,
    pub a_b: CMatrix,
    pub c_w: CMatrix,
    pub c_b: CMatrix,
}

impl SurrogateQuadratic {
    pub fn new(
        aux: &PairAux,
        f_l: &CMatrix,
        g_k: &CMatrix,
        noise_user: f64,
        noise_ed: f64,
    ) -> Result<Self> {
        let fu = f_l.adjoint() * &aux.u_b;
        let user = hermitize(&(&fu * &aux.w_b * fu.adjoint()));
        let ed_total = hermitize(&(g_k.adjoint() * &aux.w_z * g_k)).unscale(noise_ed);
        let gu = g_k.adjoint() * &aux.u_e;
        let ed_noise = hermitize(&(&gu * &aux.w_e * gu.adjoint())).unscale(noise_ed);
        let s = 1.0 / LN_2;
        Ok(Self {
            constant: auxiliary_terms(aux, noise_user)? * s,
            a_w: (&user + &ed_total).scale(s),
            a_b: (user + ed_noise + ed_total).scale(s),
            c_w: (fu * &aux.w_b).scale(s),
            c_b: (gu * &aux.w_e).scale(s / noise_ed.sqrt()),
        })
    }

    pub fn eval(&self, pre: &PrecoderPair) -> f64 {
        let quad = |a: &CMatrix, x: &CMatrix| trace_product_re(&x.adjoint(), &(a * x));
        let lin = |c: &CMatrix, x: &CMatrix| 2.0 * trace_product_re(&c.adjoint(), x);
        self.constant - quad(&self.a_w, &pre.w) - quad(&self.a_b, &pre.b)
            + lin(&self.c_w, &pre.w)
            + lin(&self.c_b, &pre.b)
    }
}
