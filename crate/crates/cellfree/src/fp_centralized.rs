//! Joint scheduling and power allocation for centralized operation.
//!
//! The weighted sum-rate problem is relaxed with a Lagrangian dual transform
//! plus quadratic transform, and the binary scheduling variables are replaced
//! by a reweighted l1-norm capacity constraint. One sweep updates, in order,
//! the auxiliary SINR variables gamma, the scaled MMSE receivers y, the
//! transmit beamformers v (with Lagrange multipliers from a bisection
//! heuristic), and the sparsity weights alpha.

use nalgebra::Cholesky;

use crate::channel::ChannelRealization;
use crate::fp_common::{
    accum_adjoint_mul, rel_change, threshold_schedule, unique_pairs, EffChannels, PairBlocks,
};
use crate::linalg::{cx, CMat, CVec, HermFactor};
use crate::model::SimConfig;
use crate::topology::NetworkTopology;
use crate::{Error, Result};

/// Iterate state of one FP run.
#[derive(Debug, Clone)]
pub struct AllocationState {
    /// Transmit beamformers, N x 1 per user.
    pub v: Vec<CVec>,
    /// Auxiliary SINR variables.
    pub gamma: Vec<f64>,
    /// Quadratic-transform auxiliaries, M|C_u| x 1 per user.
    pub y: Vec<CVec>,
    /// Reweighting weights of the capacity constraint.
    pub alpha: Vec<f64>,
    /// Capacity-constraint multiplier.
    pub lambda: f64,
    /// Per-user power-constraint multipliers.
    pub mu: Vec<f64>,
    /// Scheduling weights delta_u.
    pub delta: Vec<f64>,
    pub iter: usize,
}

impl AllocationState {
    /// Full-power initialization: ||v_u||^2 = P_T (dominant right singular
    /// direction of the cluster channel when N > 1), alpha_u = 1 / P_T.
    pub fn init_full_power(
        topo: &NetworkTopology,
        chan: &ChannelRealization,
        delta: &[f64],
        cfg: &SimConfig,
    ) -> Self {
        let n_users = topo.n_users();
        let p_t = cfg.p_t.mw();
        let v = (0..n_users)
            .map(|u| full_power_direction(topo, chan, u, cfg) * cx(p_t.sqrt()))
            .collect();
        let y = (0..n_users)
            .map(|u| CVec::zeros(cfg.m * topo.c_u[u].len()))
            .collect();
        AllocationState {
            v,
            gamma: vec![0.0; n_users],
            y,
            alpha: vec![1.0 / p_t; n_users],
            lambda: 0.0,
            mu: vec![0.0; n_users],
            delta: delta.to_vec(),
            iter: 0,
        }
    }
}

/// Unit-norm transmit direction used for initialization and baselines.
pub fn full_power_direction(
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    u: usize,
    cfg: &SimConfig,
) -> CVec {
    if cfg.n == 1 {
        return CVec::from_element(1, cx(1.0));
    }
    let h = crate::fp_common::stacked_channel(chan, &topo.c_u[u], u);
    let svd = h.svd(false, true);
    let v_t = svd.v_t.expect("svd of cluster channel");
    let dir: CVec = v_t.row(0).adjoint();
    let norm = dir.norm();
    if norm > 0.0 {
        dir / cx(norm)
    } else {
        CVec::from_element(cfg.n, cx(1.0 / (cfg.n as f64).sqrt()))
    }
}

/// Converged allocation plus the scheduling decision.
#[derive(Debug, Clone)]
pub struct AllocationResult {
    pub v: Vec<CVec>,
    /// Users that transmit.
    pub scheduled: Vec<bool>,
    /// Per-processor scheduling for distributed and semi-distributed modes,
    /// indexed [processor][user]; `None` for centralized operation.
    pub local_scheduled: Option<Vec<Vec<bool>>>,
    /// Surrogate objective after each sweep.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl AllocationResult {
    pub fn empty(n_users: usize) -> Self {
        AllocationResult {
            v: vec![CVec::zeros(1); n_users],
            scheduled: vec![false; n_users],
            local_scheduled: None,
            trace: Vec::new(),
            iterations: 0,
            converged: true,
        }
    }
}

/// Per-user quadratic systems of a beamformer update, shared by the
/// multiplier search: v_i(lambda, mu) = scale_i ((lambda alpha_i + mu) I +
/// quad_i)^{-1} rhs_i.
pub struct VSolveContext {
    pub quad: Vec<CMat>,
    pub rhs: Vec<CVec>,
    pub scale: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Right-hand side of the reweighted capacity constraint.
    pub capacity: f64,
}

impl VSolveContext {
    pub fn beamformer(&self, i: usize, lambda: f64, mu: f64) -> CVec {
        let n = self.rhs[i].len();
        if self.rhs[i].iter().all(|c| c.norm_sqr() == 0.0) {
            return CVec::zeros(n);
        }
        let shift = lambda * self.alpha[i] + mu;
        let mut a = self.quad[i].clone();
        for k in 0..n {
            a[(k, k)] += cx(shift);
        }
        let sol = match Cholesky::new(a.clone()) {
            Some(c) => c.solve(&self.rhs[i]),
            None => {
                // (lambda alpha + mu) = 0 with a singular quad term
                let mut b = a;
                for k in 0..n {
                    b[(k, k)] += cx(1e-12);
                }
                match Cholesky::new(b) {
                    Some(c) => c.solve(&self.rhs[i]),
                    None => CVec::zeros(n),
                }
            }
        };
        sol * cx(self.scale[i])
    }
}

/// Power bisection for one user at fixed lambda. Returns the multiplier and
/// the beamformer computed at it, always from the feasible side, so
/// ||v||^2 <= P_T holds exactly.
fn bisect_mu(
    ctx: &VSolveContext,
    i: usize,
    lambda: f64,
    cfg: &SimConfig,
) -> Result<(f64, CVec)> {
    let p_t = cfg.p_t.mw();
    let v0 = ctx.beamformer(i, lambda, 0.0);
    if v0.norm_squared() <= p_t {
        return Ok((0.0, v0));
    }
    // ||v(mu)|| <= scale ||rhs|| / mu, so this start is already feasible.
    let mut hi = (ctx.scale[i] * ctx.rhs[i].norm() / p_t.sqrt() - lambda * ctx.alpha[i]).max(1e-300);
    let mut v_hi = ctx.beamformer(i, lambda, hi);
    let mut doublings = 0;
    while v_hi.norm_squared() > p_t {
        hi *= 2.0;
        doublings += 1;
        if doublings > 100 {
            return Err(Error::Numerics(
                "power bisection found no feasible multiplier".into(),
            ));
        }
        v_hi = ctx.beamformer(i, lambda, hi);
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if v_hi.norm_squared() >= p_t * (1.0 - cfg.bisect_tol) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v_mid = ctx.beamformer(i, lambda, mid);
        if v_mid.norm_squared() > p_t {
            lo = mid;
        } else {
            hi = mid;
            v_hi = v_mid;
        }
    }
    Ok((hi, v_hi))
}

pub(crate) fn solve_multipliers_full(
    ctx: &VSolveContext,
    cfg: &SimConfig,
) -> Result<(f64, Vec<f64>, Vec<CVec>)> {
    let n = ctx.rhs.len();
    let attempt = |lambda: f64| -> Result<(Vec<f64>, Vec<CVec>)> {
        let mut mus = Vec::with_capacity(n);
        let mut vs = Vec::with_capacity(n);
        for i in 0..n {
            let (mu, v) = bisect_mu(ctx, i, lambda, cfg)?;
            mus.push(mu);
            vs.push(v);
        }
        Ok((mus, vs))
    };
    let (mus, vs) = attempt(0.0)?;
    let weighted: f64 = vs
        .iter()
        .zip(&ctx.alpha)
        .map(|(v, a)| a * v.norm_squared())
        .sum();
    if weighted <= ctx.capacity * (1.0 + 1e-12) {
        return Ok((0.0, mus, vs));
    }
    let lambda = cfg.lambda_init;
    let (mus, vs) = attempt(lambda)?;
    Ok((lambda, mus, vs))
}

/// Multiplier heuristic: try lambda = 0 with per-user power bisections; if
/// the reweighted capacity constraint is violated, set lambda to
/// `lambda_init` and redo the bisections.
pub fn solve_multipliers(ctx: &VSolveContext, cfg: &SimConfig) -> Result<(f64, Vec<f64>)> {
    let (lambda, mus, _) = solve_multipliers_full(ctx, cfg)?;
    Ok((lambda, mus))
}

fn check_clusters(topo: &NetworkTopology) -> Result<()> {
    if topo.c_u.len() != topo.n_users() {
        return Err(Error::Topology(
            "cluster sets not built; call build_clusters first".into(),
        ));
    }
    Ok(())
}

/// One fused gamma + y sweep: both closed forms share the full
/// interference-plus-noise matrix B_u = sigma^2 I + sum_{u'} a_{u'} a_{u'}^H,
/// with gamma_u = t / (1 - t) for t = a_u^H B_u^{-1} a_u and
/// y_u = sqrt(delta_u (1 + gamma_u)) B_u^{-1} a_u.
fn gamma_y_sweep(
    v: &[CVec],
    delta: &[f64],
    chan: &ChannelRealization,
    topo: &NetworkTopology,
    pairs: &[(usize, usize)],
) -> Result<(Vec<f64>, Vec<CVec>)> {
    let n_users = topo.n_users();
    let eff = EffChannels::from_v(chan, v);
    let blocks = PairBlocks::compute(&eff, pairs);
    let mut gamma = vec![0.0; n_users];
    let mut ys = Vec::with_capacity(n_users);
    for u in 0..n_users {
        let aps = topo.c_u[u].as_slice();
        let diag = vec![chan.sigma2; aps.len()];
        let b = blocks.assemble(aps, &diag);
        let f = HermFactor::new(b)?;
        let a = eff.stacked(aps, u);
        let x = f.solve(&a);
        let t = a.dotc(&x).re.clamp(0.0, 1.0 - 1e-12);
        gamma[u] = t / (1.0 - t);
        let s = (delta[u] * (1.0 + gamma[u])).sqrt();
        ys.push(x * cx(s));
    }
    Ok((gamma, ys))
}

/// Closed-form gamma update (block coordinate step at fixed V).
pub fn update_gamma_cent(
    state: &AllocationState,
    chan: &ChannelRealization,
    topo: &NetworkTopology,
) -> Result<Vec<f64>> {
    check_clusters(topo)?;
    let pairs = unique_pairs(topo.c_u.iter().map(|c| c.as_slice()));
    Ok(gamma_y_sweep(&state.v, &state.delta, chan, topo, &pairs)?.0)
}

/// Closed-form y update; uses the gamma currently held in the state.
pub fn update_y_cent(
    state: &AllocationState,
    chan: &ChannelRealization,
    topo: &NetworkTopology,
) -> Result<Vec<CVec>> {
    check_clusters(topo)?;
    let n_users = topo.n_users();
    let pairs = unique_pairs(topo.c_u.iter().map(|c| c.as_slice()));
    let eff = EffChannels::from_v(chan, &state.v);
    let blocks = PairBlocks::compute(&eff, &pairs);
    let mut ys = Vec::with_capacity(n_users);
    for u in 0..n_users {
        let aps = topo.c_u[u].as_slice();
        let diag = vec![chan.sigma2; aps.len()];
        let f = HermFactor::new(blocks.assemble(aps, &diag))?;
        let a = eff.stacked(aps, u);
        let s = (state.delta[u] * (1.0 + state.gamma[u])).sqrt();
        ys.push(f.solve(&a) * cx(s));
    }
    Ok(ys)
}

fn build_v_context(
    state: &AllocationState,
    chan: &ChannelRealization,
    topo: &NetworkTopology,
    capacity: f64,
) -> VSolveContext {
    let n_users = topo.n_users();
    let n = chan.n;
    let m = chan.m;
    let mut quad = vec![CMat::zeros(n, n); n_users];
    let mut rhs = vec![CVec::zeros(n); n_users];
    for u in 0..n_users {
        let mut g = CVec::zeros(n);
        for u_prime in 0..n_users {
            g.fill(cx(0.0));
            for (i, &r) in topo.c_u[u_prime].iter().enumerate() {
                accum_adjoint_mul(&mut g, chan.h(r, u), &state.y[u_prime], i * m);
            }
            quad[u].gerc(cx(1.0), &g, &g, cx(1.0));
            if u_prime == u {
                rhs[u].copy_from(&g);
            }
        }
    }
    let scale = (0..n_users)
        .map(|u| (state.delta[u] * (1.0 + state.gamma[u])).sqrt())
        .collect();
    VSolveContext {
        quad,
        rhs,
        scale,
        alpha: state.alpha.clone(),
        capacity,
    }
}

/// Beamformer update with the multipliers produced by [`solve_multipliers`].
pub fn update_v_cent(
    state: &AllocationState,
    chan: &ChannelRealization,
    topo: &NetworkTopology,
    cfg: &SimConfig,
) -> Result<(Vec<CVec>, f64, Vec<f64>)> {
    check_clusters(topo)?;
    let capacity = (topo.n_aps() * cfg.m) as f64;
    let ctx = build_v_context(state, chan, topo, capacity);
    let (lambda, mus, vs) = solve_multipliers_full(&ctx, cfg)?;
    Ok((vs, lambda, mus))
}

/// Reweighting step: alpha_u = 1 / (||v_u||^2 + epsilon).
pub fn update_alpha(state: &AllocationState, cfg: &SimConfig) -> Vec<f64> {
    state
        .v
        .iter()
        .map(|v| 1.0 / (v.norm_squared() + cfg.epsilon_cs))
        .collect()
}

/// Sum of delta_u ln(1 + gamma_u); the convergence metric.
pub fn weighted_rate_objective(delta: &[f64], gamma: &[f64]) -> f64 {
    delta
        .iter()
        .zip(gamma)
        .map(|(d, g)| d * (1.0 + g).ln())
        .sum()
}

/// The quadratic surrogate f_q(V, Gamma, Y); exposed for convergence
/// diagnostics and the monotonicity checks.
pub fn quadratic_surrogate(
    state: &AllocationState,
    chan: &ChannelRealization,
    topo: &NetworkTopology,
) -> f64 {
    let n_users = topo.n_users();
    let pairs = unique_pairs(topo.c_u.iter().map(|c| c.as_slice()));
    let eff = EffChannels::from_v(chan, &state.v);
    let blocks = PairBlocks::compute(&eff, &pairs);
    let mut total = 0.0;
    for u in 0..n_users {
        let g = state.gamma[u];
        total += state.delta[u] * ((1.0 + g).ln() - g);
        let aps = topo.c_u[u].as_slice();
        let diag = vec![chan.sigma2; aps.len()];
        let b = blocks.assemble(aps, &diag);
        let a = eff.stacked(aps, u);
        let s = (state.delta[u] * (1.0 + g)).sqrt();
        let lin = 2.0 * s * state.y[u].dotc(&a).re;
        let quad = state.y[u].dotc(&(&b * &state.y[u])).re;
        total += lin - quad;
    }
    total
}

/// Resource allocation for centralized operation: full-power
/// initialization, FP sweeps until the relative change of the surrogate
/// objective drops below `fp_rel_tol`, then scheduling extraction by power
/// threshold with the RM capacity cap.
pub fn run_centralized(
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    delta: &[f64],
    cfg: &SimConfig,
) -> Result<AllocationResult> {
    cfg.validate()?;
    check_clusters(topo)?;
    let n_users = topo.n_users();
    if n_users == 0 {
        return Ok(AllocationResult::empty(0));
    }
    let pairs = unique_pairs(topo.c_u.iter().map(|c| c.as_slice()));
    let capacity = (topo.n_aps() * cfg.m) as f64;
    let mut state = AllocationState::init_full_power(topo, chan, delta, cfg);
    let mut trace = Vec::new();
    let mut converged = false;
    for iter in 1..=cfg.fp_max_iters {
        let (gamma, y) = gamma_y_sweep(&state.v, &state.delta, chan, topo, &pairs)?;
        state.gamma = gamma;
        state.y = y;
        let obj = weighted_rate_objective(&state.delta, &state.gamma);

        let ctx = build_v_context(&state, chan, topo, capacity);
        let (lambda, mus, vs) = solve_multipliers_full(&ctx, cfg)?;
        state.v = vs;
        state.lambda = lambda;
        state.mu = mus;
        state.alpha = update_alpha(&state, cfg);
        state.iter = iter;

        let done = trace
            .last()
            .is_some_and(|&prev| rel_change(prev, obj) < cfg.fp_rel_tol);
        trace.push(obj);
        if done {
            converged = true;
            break;
        }
    }

    let norms: Vec<f64> = state.v.iter().map(|v| v.norm_squared()).collect();
    let scheduled = threshold_schedule(
        &norms,
        cfg.p_t.mw(),
        cfg.power_threshold_frac,
        capacity as usize,
    );
    Ok(AllocationResult {
        v: state.v,
        scheduled,
        local_scheduled: None,
        trace: trace.clone(),
        iterations: trace.len(),
        converged,
    })
}
