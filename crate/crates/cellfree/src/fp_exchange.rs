//! FP allocation for distributed (per-AP) and semi-distributed (per-CPU)
//! operation with inter-processor exchange of auxiliary variables.
//!
//! Each processor optimizes a local metric SINR_pu over its own decisions
//! tau_pu while the interference terms use the globally shared transmit
//! beamformers v. After every sweep each user's v becomes the local decision
//! with the largest power. A processor is one AP (distributed, capacity M)
//! or one CPU with the per-user AP stack C_qu (semi-distributed, capacity
//! |B_q| M).

use crate::channel::ChannelRealization;
use crate::fp_centralized::{
    full_power_direction, solve_multipliers_full, AllocationResult, VSolveContext,
};
use crate::fp_common::{
    accum_adjoint_mul, rel_change, threshold_schedule, unique_pairs, EffChannels, PairBlocks,
};
use crate::linalg::{cx, CMat, CVec, HermFactor};
use crate::model::SimConfig;
use crate::topology::NetworkTopology;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcKind {
    PerAp,
    PerCpu,
}

/// One local processor: its user set E_p and, per local user, the AP stack
/// its channels span.
#[derive(Debug, Clone)]
pub struct Processor {
    pub id: usize,
    /// E_p, ascending user index.
    pub users: Vec<usize>,
    /// Per local user: the stacked AP list ([r] for an AP, C_qu for a CPU).
    pub user_aps: Vec<Vec<usize>>,
    /// Right-hand side of the local reweighted capacity constraint.
    pub capacity: f64,
}

impl Processor {
    pub fn local_index(&self, u: usize) -> Option<usize> {
        self.users.binary_search(&u).ok()
    }
}

#[derive(Debug, Clone)]
pub struct ProcessorSet {
    pub kind: ProcKind,
    pub procs: Vec<Processor>,
}

/// One processor per AP; capacity M.
pub fn ap_processors(topo: &NetworkTopology, cfg: &SimConfig) -> ProcessorSet {
    let procs = (0..topo.n_aps())
        .map(|r| Processor {
            id: r,
            users: topo.e_r[r].clone(),
            user_aps: topo.e_r[r].iter().map(|_| vec![r]).collect(),
            capacity: cfg.m as f64,
        })
        .collect();
    ProcessorSet {
        kind: ProcKind::PerAp,
        procs,
    }
}

/// One processor per CPU; channels stack over C_qu, capacity |B_q| M.
pub fn cpu_processors(topo: &NetworkTopology, cfg: &SimConfig) -> ProcessorSet {
    let procs = (0..topo.n_cpus)
        .map(|q| Processor {
            id: q,
            users: topo.e_q[q].clone(),
            user_aps: topo.e_q[q]
                .iter()
                .map(|&u| topo.c_qu[q][u].clone())
                .collect(),
            capacity: (topo.b_q[q].len() * cfg.m) as f64,
        })
        .collect();
    ProcessorSet {
        kind: ProcKind::PerCpu,
        procs,
    }
}

/// Per-processor local decisions plus the shared transmit beamformers.
///
/// tau_pu is implicitly zero for users outside E_p; v_u always equals one of
/// the taus (selection, never recombination).
#[derive(Debug, Clone)]
pub struct LocalDecisionSet {
    pub tau: Vec<Vec<CVec>>,
    pub gamma: Vec<Vec<f64>>,
    pub y: Vec<Vec<CVec>>,
    pub alpha: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub v: Vec<CVec>,
    pub delta: Vec<f64>,
}

impl LocalDecisionSet {
    pub fn init_full_power(
        set: &ProcessorSet,
        topo: &NetworkTopology,
        chan: &ChannelRealization,
        delta: &[f64],
        cfg: &SimConfig,
    ) -> Self {
        let p_t = cfg.p_t.mw();
        let v: Vec<CVec> = (0..topo.n_users())
            .map(|u| full_power_direction(topo, chan, u, cfg) * cx(p_t.sqrt()))
            .collect();
        let tau: Vec<Vec<CVec>> = set
            .procs
            .iter()
            .map(|p| p.users.iter().map(|&u| v[u].clone()).collect())
            .collect();
        let y = set
            .procs
            .iter()
            .map(|p| {
                p.user_aps
                    .iter()
                    .map(|aps| CVec::zeros(cfg.m * aps.len()))
                    .collect()
            })
            .collect();
        LocalDecisionSet {
            gamma: set.procs.iter().map(|p| vec![0.0; p.users.len()]).collect(),
            alpha: set
                .procs
                .iter()
                .map(|p| vec![1.0 / p_t; p.users.len()])
                .collect(),
            lambda: vec![0.0; set.procs.len()],
            mu: set.procs.iter().map(|p| vec![0.0; p.users.len()]).collect(),
            tau,
            y,
            v,
            delta: delta.to_vec(),
        }
    }
}

/// tau pushed through the true channel: a = H_pu tau_pu stacked over `aps`.
fn stacked_tau_channel(chan: &ChannelRealization, aps: &[usize], u: usize, tau: &CVec) -> CVec {
    let m = chan.m;
    let mut out = CVec::zeros(m * aps.len());
    for (i, &r) in aps.iter().enumerate() {
        let e = chan.h(r, u) * tau;
        out.rows_mut(i * m, m).copy_from(&e);
    }
    out
}

/// Fused local gamma/y step for one (processor, user). Both closed forms
/// share M1 = sigma^2 I + sum_{u' != u} (H v_{u'})(H v_{u'})^H:
/// gamma = a^H M1^{-1} a and y = s (M1 + a a^H)^{-1} a for a = H tau.
fn local_gamma_y(
    blocks: &PairBlocks,
    eff_v: &EffChannels,
    chan: &ChannelRealization,
    aps: &[usize],
    u: usize,
    tau: &CVec,
    delta: f64,
) -> Result<(f64, CVec)> {
    let diag = vec![chan.sigma2; aps.len()];
    let mut m1 = blocks.assemble(aps, &diag);
    let b = eff_v.stacked(aps, u);
    m1.gerc(cx(-1.0), &b, &b, cx(1.0));
    let a = stacked_tau_channel(chan, aps, u, tau);
    let f1 = HermFactor::new(m1.clone())?;
    let gamma = f1.quad_form_inv(&a).max(0.0);
    m1.gerc(cx(1.0), &a, &a, cx(1.0));
    let f2 = HermFactor::new(m1)?;
    let s = (delta * (1.0 + gamma)).sqrt();
    let y = f2.solve(&a) * cx(s);
    Ok((gamma, y))
}

fn exchange_pairs(set: &ProcessorSet) -> Vec<(usize, usize)> {
    unique_pairs(
        set.procs
            .iter()
            .flat_map(|p| p.user_aps.iter().map(|aps| aps.as_slice())),
    )
}

/// Local SINR update for processor `p`: interference uses the exchanged
/// global beamformers v, the numerator the local decision tau_pu.
pub fn update_gamma_local(
    set: &ProcessorSet,
    p: usize,
    dec: &LocalDecisionSet,
    chan: &ChannelRealization,
) -> Result<Vec<f64>> {
    let pairs = exchange_pairs(set);
    let eff_v = EffChannels::from_v(chan, &dec.v);
    let blocks = PairBlocks::compute(&eff_v, &pairs);
    let proc = &set.procs[p];
    let mut out = Vec::with_capacity(proc.users.len());
    for (li, &u) in proc.users.iter().enumerate() {
        let (g, _) = local_gamma_y(
            &blocks,
            &eff_v,
            chan,
            &proc.user_aps[li],
            u,
            &dec.tau[p][li],
            dec.delta[u],
        )?;
        out.push(g);
    }
    Ok(out)
}

/// Local y update for processor `p`, using the gammas currently held.
pub fn update_y_local(
    set: &ProcessorSet,
    p: usize,
    dec: &LocalDecisionSet,
    chan: &ChannelRealization,
) -> Result<Vec<CVec>> {
    let pairs = exchange_pairs(set);
    let eff_v = EffChannels::from_v(chan, &dec.v);
    let blocks = PairBlocks::compute(&eff_v, &pairs);
    let proc = &set.procs[p];
    let mut out = Vec::with_capacity(proc.users.len());
    for (li, &u) in proc.users.iter().enumerate() {
        let aps = proc.user_aps[li].as_slice();
        let diag = vec![chan.sigma2; aps.len()];
        let mut m = blocks.assemble(aps, &diag);
        let b = eff_v.stacked(aps, u);
        m.gerc(cx(-1.0), &b, &b, cx(1.0));
        let a = stacked_tau_channel(chan, aps, u, &dec.tau[p][li]);
        m.gerc(cx(1.0), &a, &a, cx(1.0));
        let f = HermFactor::new(m)?;
        let s = (dec.delta[u] * (1.0 + dec.gamma[p][li])).sqrt();
        out.push(f.solve(&a) * cx(s));
    }
    Ok(out)
}

/// N x N cross-processor quadratic terms, one per target user:
/// sum_{p'} sum_{u' in E_p'} H_{p'u}^H y_{p'u'} y_{p'u'}^H H_{p'u},
/// where H_{p'u} stacks the target's channel over the (p', u') AP set.
/// Identical for every processor; only the right-hand sides differ.
fn build_global_quads(
    set: &ProcessorSet,
    ys: &[Vec<CVec>],
    chan: &ChannelRealization,
) -> Vec<CMat> {
    let n_users = chan.n_users();
    let n = chan.n;
    let m = chan.m;
    let mut quads = vec![CMat::zeros(n, n); n_users];
    let mut g = CVec::zeros(n);
    for (pi, proc) in set.procs.iter().enumerate() {
        for (li, _) in proc.users.iter().enumerate() {
            let y = &ys[pi][li];
            let aps = &proc.user_aps[li];
            for target in 0..n_users {
                g.fill(cx(0.0));
                for (bi, &r) in aps.iter().enumerate() {
                    accum_adjoint_mul(&mut g, chan.h(r, target), y, bi * m);
                }
                quads[target].gerc(cx(1.0), &g, &g, cx(1.0));
            }
        }
    }
    quads
}

fn tau_context_for(
    set: &ProcessorSet,
    p: usize,
    dec: &LocalDecisionSet,
    quads: &[CMat],
    chan: &ChannelRealization,
) -> VSolveContext {
    let proc = &set.procs[p];
    let m = chan.m;
    let n = chan.n;
    let mut rhs = Vec::with_capacity(proc.users.len());
    let mut quad = Vec::with_capacity(proc.users.len());
    let mut scale = Vec::with_capacity(proc.users.len());
    for (li, &u) in proc.users.iter().enumerate() {
        let mut g = CVec::zeros(n);
        for (bi, &r) in proc.user_aps[li].iter().enumerate() {
            accum_adjoint_mul(&mut g, chan.h(r, u), &dec.y[p][li], bi * m);
        }
        rhs.push(g);
        quad.push(quads[u].clone());
        scale.push((dec.delta[u] * (1.0 + dec.gamma[p][li])).sqrt());
    }
    VSolveContext {
        quad,
        rhs,
        scale,
        alpha: dec.alpha[p].clone(),
        capacity: proc.capacity,
    }
}

/// Local beamformer update for processor `p` with the cross-processor sum
/// over all exchanged y; multipliers via the same heuristic as the
/// centralized mode against the processor's capacity bound.
pub fn update_tau_local(
    set: &ProcessorSet,
    p: usize,
    dec: &LocalDecisionSet,
    chan: &ChannelRealization,
    cfg: &SimConfig,
) -> Result<(Vec<CVec>, f64, Vec<f64>)> {
    let quads = build_global_quads(set, &dec.y, chan);
    let ctx = tau_context_for(set, p, dec, &quads, chan);
    let (lambda, mus, taus) = solve_multipliers_full(&ctx, cfg)?;
    Ok((taus, lambda, mus))
}

/// v_u = tau of the processor allocating the largest power; exact ties go
/// to the lowest processor index.
pub fn select_v_max(set: &ProcessorSet, dec: &LocalDecisionSet) -> Vec<CVec> {
    let n = dec.v.first().map_or(1, |v| v.len());
    select_v_from_taus(set, &dec.tau, dec.v.len(), n)
}

pub(crate) fn select_v_from_taus(
    set: &ProcessorSet,
    taus: &[Vec<CVec>],
    n_users: usize,
    n: usize,
) -> Vec<CVec> {
    let mut best = vec![f64::NEG_INFINITY; n_users];
    let mut out = vec![CVec::zeros(n); n_users];
    for (pi, proc) in set.procs.iter().enumerate() {
        for (li, &u) in proc.users.iter().enumerate() {
            let norm = taus[pi][li].norm_squared();
            if norm > best[u] {
                best[u] = norm;
                out[u] = taus[pi][li].clone();
            }
        }
    }
    out
}

fn run_exchange(
    set: &ProcessorSet,
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    delta: &[f64],
    cfg: &SimConfig,
) -> Result<AllocationResult> {
    cfg.validate()?;
    if topo.c_u.len() != topo.n_users() {
        return Err(Error::Topology(
            "cluster sets not built; call build_clusters first".into(),
        ));
    }
    let n_users = topo.n_users();
    if n_users == 0 {
        let mut res = AllocationResult::empty(0);
        res.local_scheduled = Some(vec![Vec::new(); set.procs.len()]);
        return Ok(res);
    }
    let pairs = exchange_pairs(set);
    let mut dec = LocalDecisionSet::init_full_power(set, topo, chan, delta, cfg);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 1..=cfg.fp_max_iters {
        let eff_v = EffChannels::from_v(chan, &dec.v);
        let blocks = PairBlocks::compute(&eff_v, &pairs);
        let mut obj = 0.0;
        for (pi, proc) in set.procs.iter().enumerate() {
            for (li, &u) in proc.users.iter().enumerate() {
                let (g, y) = local_gamma_y(
                    &blocks,
                    &eff_v,
                    chan,
                    &proc.user_aps[li],
                    u,
                    &dec.tau[pi][li],
                    dec.delta[u],
                )?;
                obj += dec.delta[u] * (1.0 + g).ln();
                dec.gamma[pi][li] = g;
                dec.y[pi][li] = y;
            }
        }

        let quads = build_global_quads(set, &dec.y, chan);
        for pi in 0..set.procs.len() {
            let ctx = tau_context_for(set, pi, &dec, &quads, chan);
            let (lambda, mus, taus) = solve_multipliers_full(&ctx, cfg)?;
            dec.lambda[pi] = lambda;
            dec.mu[pi] = mus;
            dec.tau[pi] = taus;
        }
        dec.v = select_v_max(set, &dec);
        for pi in 0..set.procs.len() {
            for li in 0..set.procs[pi].users.len() {
                dec.alpha[pi][li] = 1.0 / (dec.tau[pi][li].norm_squared() + cfg.epsilon_cs);
            }
        }

        let done = trace
            .last()
            .is_some_and(|&prev| rel_change(prev, obj) < cfg.fp_rel_tol);
        trace.push(obj);
        if done {
            converged = true;
            break;
        }
    }

    let (scheduled, local) = extract_schedule(set, &dec.tau, n_users, cfg);
    let iterations = trace.len();
    Ok(AllocationResult {
        v: dec.v,
        scheduled,
        local_scheduled: Some(local),
        trace,
        iterations,
        converged,
    })
}

/// Per-processor threshold scheduling with the processor capacity cap;
/// a user transmits when scheduled by at least one processor.
pub(crate) fn extract_schedule(
    set: &ProcessorSet,
    taus: &[Vec<CVec>],
    n_users: usize,
    cfg: &SimConfig,
) -> (Vec<bool>, Vec<Vec<bool>>) {
    let mut scheduled = vec![false; n_users];
    let mut local = Vec::with_capacity(set.procs.len());
    for (pi, proc) in set.procs.iter().enumerate() {
        let norms: Vec<f64> = taus[pi].iter().map(|t| t.norm_squared()).collect();
        let flags = threshold_schedule(
            &norms,
            cfg.p_t.mw(),
            cfg.power_threshold_frac,
            proc.capacity as usize,
        );
        let mut global_flags = vec![false; n_users];
        for (li, &u) in proc.users.iter().enumerate() {
            if flags[li] {
                global_flags[u] = true;
                scheduled[u] = true;
            }
        }
        local.push(global_flags);
    }
    (scheduled, local)
}

/// Resource allocation with one processor per AP.
pub fn run_distributed(
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    delta: &[f64],
    cfg: &SimConfig,
) -> Result<AllocationResult> {
    run_exchange(&ap_processors(topo, cfg), topo, chan, delta, cfg)
}

/// Resource allocation with one processor per CPU over concatenated
/// C_qu channels.
pub fn run_semi_distributed(
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    delta: &[f64],
    cfg: &SimConfig,
) -> Result<AllocationResult> {
    run_exchange(&cpu_processors(topo, cfg), topo, chan, delta, cfg)
}
