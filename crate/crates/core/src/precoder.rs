//! The `(W, B)` block: maximize the worst pairwise surrogate subject to the
//! power budget and first-order (Taylor) inner approximations of the radar
//! SINR floors.
//!
//! With auxiliaries fixed, every pairwise surrogate is a concave quadratic in
//! the real coordinates of `(W, B)`, the power budget is a Euclidean ball and
//! the linearized SINR floors are half-spaces. The epigraph problem
//! `max t  s.t.  s_j(x) ≥ t` is solved with a log-barrier interior-point
//! method using dense Newton steps; the dimension is `4·n_tx·K + 1`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{hermitize, CMatrix, CVector};
use crate::rates::{radar_energy, PrecoderPair};
use crate::scenario::{ChannelSet, EffectiveChannels, PhaseVector, ScenarioConfig};
use crate::surrogate::{AuxiliarySet, SurrogateQuadratic};

/// Tolerance on constraint satisfaction of subproblem solutions.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Tolerance on the subproblem optimum value.
pub const OPTIMALITY_TOL: f64 = 1e-4;

/// Barrier path stops once the duality-gap bound `m/τ` falls below this.
const BARRIER_GAP: f64 = 1e-9;
const BARRIER_GROWTH: f64 = 16.0;
const MAX_NEWTON_STEPS: usize = 2_000;
/// Centering stops once the squared Newton decrement falls below this.
const NEWTON_TOL: f64 = 1e-10;

/// First-order model `f(d̃) + Re(∇^T (d − d̃)) ≥ γ` of the radar return
/// energy `f(d) = ‖H w‖² + ‖H b‖²`, with `d = [w; b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSinrConstraint {
    /// `2·conj(H^H H d̃)`, so that the directional derivative along `u`
    /// is `Re(∇^T u)`.
    pub gradient: CVector,
    pub anchor_value: f64,
    pub anchor_point: CVector,
    pub threshold: f64,
}

impl LinearizedSinrConstraint {
    pub fn evaluate(&self, d: &CVector) -> f64 {
        let delta = d - &self.anchor_point;
        let inner: Complex64 = self
            .gradient
            .iter()
            .zip(delta.iter())
            .map(|(g, x)| g * x)
            .sum();
        self.anchor_value + inner.re
    }

    pub fn margin(&self, d: &CVector) -> f64 {
        self.evaluate(d) - self.threshold
    }
}

fn stack(w: &CVector, b: &CVector) -> CVector {
    CVector::from_iterator(w.len() + b.len(), w.iter().chain(b.iter()).copied())
}

pub fn linearize_sinr(
    h: &CMatrix,
    w_tilde: &CVector,
    b_tilde: &CVector,
    gamma_k: f64,
) -> Result<LinearizedSinrConstraint> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(
            "linearize_sinr: channel must be square".into(),
        ));
    }
    let anchor_value = radar_energy(h, w_tilde, b_tilde)?;
    let hh = h.adjoint() * h;
    let gw = (&hh * w_tilde).map(|z| z.conj() * 2.0);
    let gb = (&hh * b_tilde).map(|z| z.conj() * 2.0);
    Ok(LinearizedSinrConstraint {
        gradient: stack(&gw, &gb),
        anchor_value,
        anchor_point: stack(w_tilde, b_tilde),
        threshold: gamma_k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// When false, `B` is pinned to zero and only `W` is optimized.
    pub artificial_noise: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            artificial_noise: true,
        }
    }
}

/// Real coordinates of `(W, B)`: one block of `2·n_tx` reals per column,
/// `[Re; Im]`, information columns first.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n_tx: usize,
    k: usize,
    noise: bool,
}

impl Layout {
    fn block_len(&self) -> usize {
        2 * self.n_tx
    }

    fn n_blocks(&self) -> usize {
        if self.noise {
            2 * self.k
        } else {
            self.k
        }
    }

    fn dim(&self) -> usize {
        self.n_blocks() * self.block_len()
    }

    fn w_block(&self, k: usize) -> usize {
        k * self.block_len()
    }

    fn b_block(&self, k: usize) -> Option<usize> {
        self.noise.then(|| (self.k + k) * self.block_len())
    }

    fn is_noise_block(&self, block: usize) -> bool {
        block >= self.k
    }

    fn write_column(&self, x: &mut DVector<f64>, offset: usize, col: &CVector) {
        for (i, z) in col.iter().enumerate() {
            x[offset + i] = z.re;
            x[offset + self.n_tx + i] = z.im;
        }
    }

    fn read_column(&self, x: &DVector<f64>, offset: usize) -> CVector {
        CVector::from_fn(self.n_tx, |i, _| {
            Complex64::new(x[offset + i], x[offset + self.n_tx + i])
        })
    }

    fn pack(&self, pre: &PrecoderPair) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for k in 0..self.k {
            self.write_column(&mut x, self.w_block(k), &pre.w_col(k));
            if let Some(off) = self.b_block(k) {
                self.write_column(&mut x, off, &pre.b_col(k));
            }
        }
        x
    }

    fn unpack(&self, x: &DVector<f64>) -> PrecoderPair {
        let mut pre = PrecoderPair::zeros(self.n_tx, self.k);
        for k in 0..self.k {
            pre.w.set_column(k, &self.read_column(x, self.w_block(k)));
            if let Some(off) = self.b_block(k) {
                pre.b.set_column(k, &self.read_column(x, off));
            }
        }
        pre
    }
}

/// `z^H A z = x^T Ã x` for `x = [Re z; Im z]`.
fn realify_hermitian(a: &CMatrix) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i, n + j)] = -z.im;
            out[(n + i, j)] = z.im;
            out[(n + i, n + j)] = z.re;
        }
    }
    out
}

/// `c + g^T x − x^T Q x` with `Q` block diagonal.
struct RealQuadratic {
    constant: f64,
    linear: DVector<f64>,
    q_w: DMatrix<f64>,
    q_b: DMatrix<f64>,
}

impl RealQuadratic {
    fn new(sq: &SurrogateQuadratic, layout: &Layout) -> Self {
        let mut linear = DVector::zeros(layout.dim());
        for k in 0..layout.k {
            let cw = sq.c_w.column(k).map(|z| z * 2.0);
            layout.write_column(&mut linear, layout.w_block(k), &cw);
            if let Some(off) = layout.b_block(k) {
                let cb = sq.c_b.column(k).map(|z| z * 2.0);
                layout.write_column(&mut linear, off, &cb);
            }
        }
        Self {
            constant: sq.constant,
            linear,
            q_w: realify_hermitian(&sq.a_w),
            q_b: realify_hermitian(&sq.a_b),
        }
    }

    fn block_q(&self, layout: &Layout, block: usize) -> &DMatrix<f64> {
        if layout.is_noise_block(block) {
            &self.q_b
        } else {
            &self.q_w
        }
    }

    /// `Q x`.
    fn apply(&self, layout: &Layout, x: &DVector<f64>) -> DVector<f64> {
        let bl = layout.block_len();
        let mut out = DVector::zeros(x.len());
        for block in 0..layout.n_blocks() {
            let off = block * bl;
            let q = self.block_q(layout, block);
            let seg = q * x.rows(off, bl);
            out.rows_mut(off, bl).copy_from(&seg);
        }
        out
    }

    fn value(&self, layout: &Layout, x: &DVector<f64>) -> f64 {
        self.constant + self.linear.dot(x) - x.dot(&self.apply(layout, x))
    }
}

struct Halfspace {
    target: usize,
    normal: DVector<f64>,
    offset: f64,
}

impl Halfspace {
    fn slack(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

/// Real half-space `a^T x ≥ b` equivalent to the linearized constraint.
fn halfspace(lin: &LinearizedSinrConstraint, layout: &Layout, target: usize) -> Halfspace {
    let n = layout.n_tx;
    let mut normal = DVector::zeros(layout.dim());
    let g = &lin.gradient;
    let put = |normal: &mut DVector<f64>, off: usize, from: usize| {
        for i in 0..n {
            normal[off + i] = g[from + i].re;
            normal[off + n + i] = -g[from + i].im;
        }
    };
    put(&mut normal, layout.w_block(target), 0);
    if let Some(off) = layout.b_block(target) {
        put(&mut normal, off, n);
    }
    let anchor_inner: f64 = g
        .iter()
        .zip(lin.anchor_point.iter())
        .map(|(a, b)| (a * b).re)
        .sum();
    Halfspace {
        target,
        normal,
        offset: lin.threshold - lin.anchor_value + anchor_inner,
    }
}

struct Barrier<'a> {
    layout: Layout,
    pairs: &'a [RealQuadratic],
    halfspaces: &'a [Halfspace],
    power: f64,
}

impl Barrier<'_> {
    fn n_constraints(&self) -> usize {
        self.pairs.len() + self.halfspaces.len() + 1
    }

    fn min_surrogate(&self, x: &DVector<f64>) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.value(&self.layout, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Barrier value, or `None` outside the strict interior.
    fn value(&self, x: &DVector<f64>, t: f64, tau: f64) -> Option<f64> {
        let mut acc = -tau * t;
        for p in self.pairs {
            let r = p.value(&self.layout, x) - t;
            if !(r > 0.0) {
                return None;
            }
            acc -= r.ln();
        }
        let r = self.power - x.norm_squared();
        if !(r > 0.0) {
            return None;
        }
        acc -= r.ln();
        for h in self.halfspaces {
            let r = h.slack(x);
            if !(r > 0.0) {
                return None;
            }
            acc -= r.ln();
        }
        Some(acc)
    }

    fn gradient_and_hessian(
        &self,
        x: &DVector<f64>,
        t: f64,
        tau: f64,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let bl = self.layout.block_len();
        let mut grad = DVector::zeros(n + 1);
        let mut hess = DMatrix::zeros(n + 1, n + 1);
        grad[n] = -tau;

        let add_rank_one =
            |grad: &mut DVector<f64>, hess: &mut DMatrix<f64>, d: &DVector<f64>, r: f64| {
                grad.axpy(-1.0 / r, d, 1.0);
                hess.ger(1.0 / (r * r), d, d, 1.0);
            };

        for p in self.pairs {
            let qx = p.apply(&self.layout, x);
            let r = p.linear.dot(x) - x.dot(&qx) + p.constant - t;
            let mut d = DVector::zeros(n + 1);
            d.rows_mut(0, n).copy_from(&(&p.linear - qx.scale(2.0)));
            d[n] = -1.0;
            add_rank_one(&mut grad, &mut hess, &d, r);
            for block in 0..self.layout.n_blocks() {
                let off = block * bl;
                let q = p.block_q(&self.layout, block);
                let mut view = hess.view_mut((off, off), (bl, bl));
                view += q * (2.0 / r);
            }
        }

        let r = self.power - x.norm_squared();
        let mut d = DVector::zeros(n + 1);
        d.rows_mut(0, n).copy_from(&x.scale(-2.0));
        add_rank_one(&mut grad, &mut hess, &d, r);
        for i in 0..n {
            hess[(i, i)] += 2.0 / r;
        }

        for h in self.halfspaces {
            let r = h.slack(x);
            let mut d = DVector::zeros(n + 1);
            d.rows_mut(0, n).copy_from(&h.normal);
            add_rank_one(&mut grad, &mut hess, &d, r);
        }
        (grad, hess)
    }

    fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> DVector<f64> {
        let scale = hess.diagonal().amax().max(1.0);
        let mut shift = 0.0;
        loop {
            let mut h = hess.clone();
            if shift > 0.0 {
                for i in 0..h.nrows() {
                    h[(i, i)] += shift;
                }
            }
            if let Some(chol) = Cholesky::new(h) {
                return -chol.solve(grad);
            }
            shift = if shift == 0.0 {
                1e-12 * scale
            } else {
                shift * 10.0
            };
        }
    }

    /// Follows the central path from a strictly feasible `(x, t)`.
    fn solve(&self, mut x: DVector<f64>, mut t: f64) -> DVector<f64> {
        let n = x.len();
        let m = self.n_constraints() as f64;
        let mut tau = 1.0;
        let mut steps = 0;
        loop {
            while let Some(current) = self.value(&x, t, tau) {
                let (grad, hess) = self.gradient_and_hessian(&x, t, tau);
                let dir = Self::newton_direction(&grad, hess);
                let decrement = -grad.dot(&dir);
                if !(decrement > NEWTON_TOL) {
                    break;
                }
                let mut s = 1.0;
                let mut moved = false;
                for _ in 0..60 {
                    let xn = &x + dir.rows(0, n).scale(s);
                    let tn = t + s * dir[n];
                    if let Some(v) = self.value(&xn, tn, tau) {
                        if v < current && v <= current - 0.25 * s * decrement {
                            x = xn;
                            t = tn;
                            moved = true;
                            break;
                        }
                    }
                    s *= 0.5;
                }
                steps += 1;
                if !moved || steps >= MAX_NEWTON_STEPS {
                    break;
                }
            }
            if m / tau < BARRIER_GAP || steps >= MAX_NEWTON_STEPS {
                return x;
            }
            tau *= BARRIER_GROWTH;
        }
    }
}

/// Builds the sensing-constraint half-spaces at `anchor`, skipping floors
/// with `γ_k ≤ 0` (always met by the nonnegative return energy).
fn sinr_halfspaces(
    cfg: &ScenarioConfig,
    eff: &EffectiveChannels,
    anchor: &PrecoderPair,
    layout: &Layout,
) -> Result<Vec<Halfspace>> {
    let mut out = Vec::new();
    for (k, h) in eff.targets.iter().enumerate() {
        let gamma = cfg.sinr_thresholds[k];
        if gamma <= 0.0 {
            continue;
        }
        let lin = linearize_sinr(h, &anchor.w_col(k), &anchor.b_col(k), gamma)?;
        out.push(halfspace(&lin, layout, k));
    }
    Ok(out)
}

/// A point strictly inside the power ball and every half-space, built from
/// the minimum-norm point of the half-spaces (they act on disjoint blocks).
fn interior_point(halfspaces: &[Halfspace], power: f64, dim: usize) -> Result<DVector<f64>> {
    let mut x = DVector::zeros(dim);
    let mut worst: Option<(usize, f64)> = None;
    for h in halfspaces {
        let nn = h.normal.norm_squared();
        if h.offset <= 0.0 {
            continue;
        }
        if nn == 0.0 {
            return Err(Error::Infeasible {
                target: h.target,
                iteration: None,
            });
        }
        let needed = h.offset * h.offset / nn;
        if worst.is_none_or(|(_, w)| needed > w) {
            worst = Some((h.target, needed));
        }
        x.axpy(h.offset / nn, &h.normal, 1.0);
    }
    let norm2 = x.norm_squared();
    if norm2 >= power {
        let target = worst.map_or(0, |(t, _)| t);
        return Err(Error::Infeasible {
            target,
            iteration: None,
        });
    }
    if norm2 > 0.0 {
        let rho = 0.5 * (1.0 + (power / norm2).sqrt());
        x *= rho;
    }
    Ok(x)
}

/// Result of one precoder subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub precoders: PrecoderPair,
    /// `[min_{l,k} surrogate]⁺` at the returned precoders.
    pub lambda_sr: f64,
    /// Unclamped worst pairwise surrogate.
    pub min_surrogate: f64,
}

/// Solves the convexified subproblem around `anchor` for fixed auxiliaries.
pub fn solve_precoders(
    cfg: &ScenarioConfig,
    eff: &EffectiveChannels,
    aux: &AuxiliarySet,
    anchor: &PrecoderPair,
    opts: &SolverOptions,
) -> Result<SubproblemSolution> {
    let layout = Layout {
        n_tx: cfg.n_tx,
        k: cfg.n_targets,
        noise: opts.artificial_noise,
    };
    if anchor.w.shape() != (cfg.n_tx, cfg.n_targets) {
        return Err(Error::DimensionMismatch(format!(
            "anchor precoder is {:?}, expected ({}, {})",
            anchor.w.shape(),
            cfg.n_tx,
            cfg.n_targets
        )));
    }
    let mut anchor = anchor.clone();
    if !opts.artificial_noise {
        anchor.b.fill(Complex64::new(0.0, 0.0));
    }

    let mut pairs = Vec::with_capacity(aux.pairs.len());
    for (l, (f, &su)) in eff.users.iter().zip(&cfg.noise_user).enumerate() {
        for (k, (g, &se)) in eff.eds.iter().zip(&cfg.noise_ed).enumerate() {
            let sq = SurrogateQuadratic::new(aux.pair(l, k), f, g, su, se)?;
            pairs.push(RealQuadratic::new(&sq, &layout));
        }
    }
    let halfspaces = sinr_halfspaces(cfg, eff, &anchor, &layout)?;
    let power = cfg.power_budget;
    let barrier = Barrier {
        layout,
        pairs: &pairs,
        halfspaces: &halfspaces,
        power,
    };

    let interior = interior_point(&halfspaces, power, layout.dim())?;
    let x_anchor = layout.pack(&anchor);
    let anchor_feasible =
        x_anchor.norm_squared() <= power && halfspaces.iter().all(|h| h.slack(&x_anchor) >= 0.0);
    let x0 = if anchor_feasible {
        (&x_anchor + &interior).scale(0.5)
    } else {
        interior
    };
    let t0 = barrier.min_surrogate(&x0) - 1.0;
    let mut x = barrier.solve(x0, t0);

    let mut best = barrier.min_surrogate(&x);
    if anchor_feasible {
        let at_anchor = barrier.min_surrogate(&x_anchor);
        if at_anchor > best {
            x = x_anchor;
            best = at_anchor;
        }
    }

    let mut precoders = layout.unpack(&x);
    let mut used = precoders.power();
    while used > power {
        precoders = precoders.scaled((power / used).sqrt() * (1.0 - 1e-15));
        used = precoders.power();
    }
    Ok(SubproblemSolution {
        precoders,
        lambda_sr: best.max(0.0),
        min_surrogate: best,
    })
}

/// Convenience wrapper taking raw channels and phases.
pub fn solve_precoders_for(
    ch: &ChannelSet,
    phi: &PhaseVector,
    aux: &AuxiliarySet,
    anchor: &PrecoderPair,
    cfg: &ScenarioConfig,
) -> Result<SubproblemSolution> {
    let eff = EffectiveChannels::new(cfg, ch, phi)?;
    solve_precoders(cfg, &eff, aux, anchor, &SolverOptions::default())
}

/// Principal right singular vector of `h` and the squared singular value.
fn principal_direction(h: &CMatrix) -> (CVector, f64) {
    let gram = hermitize(&(h.adjoint() * h));
    let eig = SymmetricEigen::new(gram);
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    (eig.eigenvectors.column(idx).into_owned(), val.max(0.0))
}

fn dft_column(n_tx: usize, col: usize) -> CVector {
    CVector::from_fn(n_tx, |m, _| {
        Complex64::from_polar(
            1.0,
            -2.0 * std::f64::consts::PI * (m * col) as f64 / n_tx as f64,
        )
    })
}

fn meets_floors(
    cfg: &ScenarioConfig,
    eff: &EffectiveChannels,
    pre: &PrecoderPair,
) -> Result<Option<usize>> {
    for (k, h) in eff.targets.iter().enumerate() {
        let gamma = cfg.sinr_thresholds[k];
        if gamma > 0.0 && radar_energy(h, &pre.w_col(k), &pre.b_col(k))? < gamma {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Initial precoders: equal-power DFT columns for `W` and `B`, using the
/// full budget. If that misses a radar SINR floor, the radar-carrying column
/// of each deficient target is steered along its principal direction, and
/// failing that the budget is reallocated to the minimum power each floor
/// needs.
pub fn initial_precoders(
    cfg: &ScenarioConfig,
    eff: &EffectiveChannels,
    opts: &SolverOptions,
) -> Result<PrecoderPair> {
    let (n, k) = (cfg.n_tx, cfg.n_targets);
    let power = cfg.power_budget;
    let mut pre = PrecoderPair::zeros(n, k);
    let streams = if opts.artificial_noise { 2 * k } else { k };
    let s = (power / (streams * n) as f64).sqrt();
    for col in 0..k {
        pre.w.set_column(col, &dft_column(n, col % n).scale(s));
        if opts.artificial_noise {
            pre.b
                .set_column(col, &dft_column(n, (k + col) % n).scale(s));
        }
    }
    if meets_floors(cfg, eff, &pre)?.is_none() {
        return Ok(pre);
    }

    let directions: Vec<(CVector, f64)> = eff.targets.iter().map(principal_direction).collect();
    let radar_column = |pre: &mut PrecoderPair, col: usize, v: CVector| {
        if opts.artificial_noise {
            pre.b.set_column(col, &v);
        } else {
            pre.w.set_column(col, &v);
        }
    };

    let mut steered = pre.clone();
    for (col, (dir, _)) in directions.iter().enumerate() {
        let current = if opts.artificial_noise {
            steered.b_col(col)
        } else {
            steered.w_col(col)
        };
        let h = &eff.targets[col];
        if cfg.sinr_thresholds[col] > 0.0
            && radar_energy(h, &steered.w_col(col), &steered.b_col(col))? < cfg.sinr_thresholds[col]
        {
            radar_column(&mut steered, col, dir.scale(current.norm()));
        }
    }
    if meets_floors(cfg, eff, &steered)?.is_none() {
        return Ok(steered);
    }

    let mut needed = vec![0.0; k];
    for (col, (_, gain)) in directions.iter().enumerate() {
        let gamma = cfg.sinr_thresholds[col];
        if gamma > 0.0 {
            if *gain <= 0.0 {
                return Err(Error::Infeasible {
                    target: col,
                    iteration: None,
                });
            }
            needed[col] = gamma / gain * (1.0 + 1e-3);
        }
    }
    let total: f64 = needed.iter().sum();
    if total >= power {
        let target = (0..k)
            .max_by(|&a, &b| needed[a].total_cmp(&needed[b]))
            .unwrap_or(0);
        return Err(Error::Infeasible {
            target,
            iteration: None,
        });
    }
    let spare = (power - total) / k as f64;
    let mut pre = PrecoderPair::zeros(n, k);
    for (col, (dir, _)) in directions.iter().enumerate() {
        if opts.artificial_noise {
            pre.b.set_column(col, &dir.scale(needed[col].sqrt()));
            pre.w.set_column(
                col,
                &dft_column(n, col % n).scale((spare / n as f64).sqrt()),
            );
        } else {
            pre.w
                .set_column(col, &dir.scale((needed[col] + spare).sqrt()));
        }
    }
    Ok(pre)
}
