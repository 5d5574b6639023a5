//! Physical-layer evaluation of converged allocations: true SINR and
//! spectral efficiency under each operation mode's signal model, fairness
//! statistics, proportional-fair weights, and the round-robin baseline.
//!
//! Centralized (and round-robin) evaluation jointly combines the cluster
//! signal at one processor. Distributed and semi-distributed evaluation
//! first forms local MMSE estimates per serving group (AP or CPU), then
//! fuses them with SINR-optimal combining weights. Only scheduled users
//! transmit; unscheduled users count as zero spectral efficiency.

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelRealization;
use crate::fp_centralized::{full_power_direction, AllocationResult};
use crate::fp_common::{unique_pairs, EffChannels, PairBlocks};
use crate::linalg::{cx, CMat, CVec, HermFactor};
use crate::model::SimConfig;
use crate::topology::NetworkTopology;
use crate::{Error, Result};

/// The five allocation schemes plus the scheduling baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Centralized,
    Distributed,
    SemiDistributed,
    DistDecentralized,
    SemiDecentralized,
    RoundRobin,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Centralized,
        Mode::Distributed,
        Mode::SemiDistributed,
        Mode::DistDecentralized,
        Mode::SemiDecentralized,
        Mode::RoundRobin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Centralized => "centralized",
            Mode::Distributed => "distributed",
            Mode::SemiDistributed => "semi",
            Mode::DistDecentralized => "dist-decentralized",
            Mode::SemiDecentralized => "semi-decentralized",
            Mode::RoundRobin => "round-robin",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centralized" => Ok(Mode::Centralized),
            "distributed" => Ok(Mode::Distributed),
            "semi" => Ok(Mode::SemiDistributed),
            "dist-decentralized" => Ok(Mode::DistDecentralized),
            "semi-decentralized" => Ok(Mode::SemiDecentralized),
            "round-robin" => Ok(Mode::RoundRobin),
            other => Err(Error::Config(format!("unknown mode: {other}"))),
        }
    }
}

/// Evaluated performance of one timeslot.
#[derive(Debug, Clone)]
pub struct TimeSlotResult {
    pub mode: Mode,
    pub timeslot: usize,
    pub sinr: Vec<f64>,
    /// log2(1 + SINR), zero for unscheduled users.
    pub se: Vec<f64>,
    pub scheduled: Vec<bool>,
    pub sum_se: f64,
    pub jain: f64,
}

/// Jain's fairness index (sum x)^2 / (n sum x^2); defined as 1 for an
/// all-zero input.
pub fn jains_index(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 1.0;
    }
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|x| x * x).sum();
    if sq == 0.0 {
        return 1.0;
    }
    sum * sum / (n as f64 * sq)
}

/// Long-term average rates driving the proportional-fair weights.
#[derive(Debug, Clone)]
pub struct FairnessState {
    pub rbar: Vec<f64>,
    pub eta: f64,
}

impl FairnessState {
    /// Averages start at 1 so the first slot uses uniform weights.
    pub fn new(n_users: usize, eta: f64) -> Self {
        FairnessState {
            rbar: vec![1.0; n_users],
            eta,
        }
    }

    /// delta_u = 1 / rbar_u.
    pub fn weights(&self) -> Vec<f64> {
        self.rbar.iter().map(|&r| 1.0 / r.max(1e-6)).collect()
    }
}

/// rbar <- eta * R + (1 - eta) * rbar, floored at 1e-6; returns the weights
/// for the next slot alongside the advanced state.
pub fn pf_update(mut state: FairnessState, slot: &TimeSlotResult) -> (Vec<f64>, FairnessState) {
    let eta = state.eta;
    for (rbar, &se) in state.rbar.iter_mut().zip(&slot.se) {
        *rbar = (eta * se + (1.0 - eta) * *rbar).max(1e-6);
    }
    let delta = state.weights();
    (delta, state)
}

/// Transmit beamformers masked to the scheduled set.
fn masked_v(v: &[CVec], scheduled: &[bool]) -> Vec<CVec> {
    v.iter()
        .zip(scheduled)
        .map(|(vu, &on)| {
            if on {
                vu.clone()
            } else {
                CVec::zeros(vu.len())
            }
        })
        .collect()
}

struct EvalCache {
    eff: EffChannels,
    blocks: PairBlocks,
}

fn eval_cache(
    v: &[CVec],
    scheduled: &[bool],
    chan: &ChannelRealization,
    clusters: &[Vec<usize>],
) -> EvalCache {
    let masked = masked_v(v, scheduled);
    let eff = EffChannels::from_v(chan, &masked);
    let pairs = unique_pairs(clusters.iter().map(|c| c.as_slice()));
    let blocks = PairBlocks::compute(&eff, &pairs);
    EvalCache { eff, blocks }
}

fn grouped_eval_clusters(topo: &NetworkTopology, grouping: Grouping) -> Vec<Vec<usize>> {
    match grouping {
        Grouping::PerAp => topo.c_u.clone(),
        Grouping::PerCpu => (0..topo.n_cpus)
            .flat_map(|q| (0..topo.n_users()).map(move |u2| (q, u2)))
            .map(|(q, u2)| topo.c_qu[q][u2].clone())
            .filter(|s| !s.is_empty())
            .collect(),
    }
}

/// MMSE receiver over the user's cluster with only scheduled users in the
/// covariance.
pub fn mmse_receiver_centralized(
    u: usize,
    v: &[CVec],
    scheduled: &[bool],
    chan: &ChannelRealization,
    topo: &NetworkTopology,
) -> Result<CVec> {
    let cache = eval_cache(v, scheduled, chan, &topo.c_u);
    let aps = topo.c_u[u].as_slice();
    let diag = vec![chan.sigma2; aps.len()];
    let f = HermFactor::new(cache.blocks.assemble(aps, &diag))?;
    let a = cache.eff.stacked(aps, u);
    Ok(f.solve(&a))
}

fn centralized_sinr_from_cache(
    cache: &EvalCache,
    u: usize,
    scheduled: &[bool],
    chan: &ChannelRealization,
    topo: &NetworkTopology,
) -> Result<f64> {
    if !scheduled[u] {
        return Ok(0.0);
    }
    let aps = topo.c_u[u].as_slice();
    let diag = vec![chan.sigma2; aps.len()];
    let f = HermFactor::new(cache.blocks.assemble(aps, &diag))?;
    let a = cache.eff.stacked(aps, u);
    let t = f.quad_form_inv(&a).clamp(0.0, 1.0 - 1e-12);
    Ok(t / (1.0 - t))
}

/// True SINR of the centralized signal model (scheduled users only in
/// signal and interference).
pub fn true_sinr_centralized(
    u: usize,
    v: &[CVec],
    scheduled: &[bool],
    chan: &ChannelRealization,
    topo: &NetworkTopology,
) -> Result<f64> {
    let cache = eval_cache(v, scheduled, chan, &topo.c_u);
    centralized_sinr_from_cache(&cache, u, scheduled, chan, topo)
}

/// Group structure of the two-stage (local estimate + combining) models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    PerAp,
    PerCpu,
}

/// Local receivers and combining weights for one user.
#[derive(Debug, Clone)]
pub struct LocalCombine {
    /// Group ids: the APs of C_u or the CPUs of D_u.
    pub groups: Vec<usize>,
    /// One local MMSE receiver per serving group; `None` where the user is
    /// not locally scheduled.
    pub receivers: Vec<Option<CVec>>,
    /// Combining weights, zero for groups not serving the user.
    pub a: CVec,
}

fn group_aps(topo: &NetworkTopology, grouping: Grouping, g: usize, u: usize) -> &[usize] {
    match grouping {
        Grouping::PerAp => topo.c_u[u]
            .iter()
            .find(|&&r| r == g)
            .map(std::slice::from_ref)
            .expect("group AP not in the user's cluster"),
        Grouping::PerCpu => topo.c_qu[g][u].as_slice(),
    }
}

fn user_groups(topo: &NetworkTopology, grouping: Grouping, u: usize) -> Vec<usize> {
    match grouping {
        Grouping::PerAp => topo.c_u[u].clone(),
        Grouping::PerCpu => topo.d_u[u].clone(),
    }
}

/// Per-group local MMSE receivers for the groups locally serving `u`, and
/// SINR-optimal combining weights a = (F + sum_{u' != u} g g^H)^{-1} g_uu.
pub fn local_receivers_and_combining(
    u: usize,
    v: &[CVec],
    scheduled: &[bool],
    local_scheduled: &[Vec<bool>],
    chan: &ChannelRealization,
    topo: &NetworkTopology,
    grouping: Grouping,
) -> Result<LocalCombine> {
    let clusters = grouped_eval_clusters(topo, grouping);
    let cache = eval_cache(v, scheduled, chan, &clusters);
    grouped_combine(&cache, u, scheduled, local_scheduled, chan, topo, grouping)
}

fn grouped_combine(
    cache: &EvalCache,
    u: usize,
    scheduled: &[bool],
    local_scheduled: &[Vec<bool>],
    chan: &ChannelRealization,
    topo: &NetworkTopology,
    grouping: Grouping,
) -> Result<LocalCombine> {
    let groups = user_groups(topo, grouping, u);
    let n_groups = groups.len();
    let mut receivers: Vec<Option<CVec>> = vec![None; n_groups];
    if scheduled[u] {
        for (gi, &g) in groups.iter().enumerate() {
            if !local_scheduled[g][u] {
                continue;
            }
            let aps = group_aps(topo, grouping, g, u);
            let diag = vec![chan.sigma2; aps.len()];
            let f = HermFactor::new(cache.blocks.assemble(aps, &diag))?;
            let a = cache.eff.stacked(aps, u);
            receivers[gi] = Some(f.solve(&a));
        }
    }

    let serving: Vec<usize> = (0..n_groups).filter(|&gi| receivers[gi].is_some()).collect();
    let mut a_full = CVec::zeros(n_groups.max(1));
    if serving.is_empty() {
        return Ok(LocalCombine {
            groups,
            receivers,
            a: a_full,
        });
    }

    let dim = serving.len();
    let g_vec = |u2: usize| -> CVec {
        let mut g = CVec::zeros(dim);
        for (si, &gi) in serving.iter().enumerate() {
            let w = receivers[gi].as_ref().unwrap();
            let aps = group_aps(topo, grouping, groups[gi], u);
            let e = cache.eff.stacked(aps, u2);
            g[si] = w.dotc(&e);
        }
        g
    };
    let mut denom = CMat::zeros(dim, dim);
    for (si, &gi) in serving.iter().enumerate() {
        let w = receivers[gi].as_ref().unwrap();
        denom[(si, si)] = cx(chan.sigma2 * w.norm_squared());
    }
    for u2 in 0..topo.n_users() {
        if u2 == u || !scheduled[u2] {
            continue;
        }
        let g = g_vec(u2);
        denom.gerc(cx(1.0), &g, &g, cx(1.0));
    }
    let g_own = g_vec(u);
    let f = HermFactor::new(denom)?;
    let a_serving = f.solve(&g_own);
    for (si, &gi) in serving.iter().enumerate() {
        a_full[gi] = a_serving[si];
    }
    Ok(LocalCombine {
        groups,
        receivers,
        a: a_full,
    })
}

fn grouped_sinr_from_combine(
    combine: &LocalCombine,
    cache: &EvalCache,
    u: usize,
    scheduled: &[bool],
    chan: &ChannelRealization,
    topo: &NetworkTopology,
    grouping: Grouping,
) -> f64 {
    let serving: Vec<usize> = (0..combine.groups.len())
        .filter(|&gi| combine.receivers[gi].is_some())
        .collect();
    if serving.is_empty() {
        return 0.0;
    }
    let a: CVec = CVec::from_iterator(serving.len(), serving.iter().map(|&gi| combine.a[gi]));
    let g_vec = |u2: usize| -> CVec {
        let mut g = CVec::zeros(serving.len());
        for (si, &gi) in serving.iter().enumerate() {
            let w = combine.receivers[gi].as_ref().unwrap();
            let aps = group_aps(topo, grouping, combine.groups[gi], u);
            let e = cache.eff.stacked(aps, u2);
            g[si] = w.dotc(&e);
        }
        g
    };
    let signal = a.dotc(&g_vec(u)).norm_sqr();
    let mut noise = 0.0;
    for (si, &gi) in serving.iter().enumerate() {
        let w = combine.receivers[gi].as_ref().unwrap();
        noise += chan.sigma2 * w.norm_squared() * a[si].norm_sqr();
    }
    let mut interference = 0.0;
    for u2 in 0..topo.n_users() {
        if u2 == u || !scheduled[u2] {
            continue;
        }
        interference += a.dotc(&g_vec(u2)).norm_sqr();
    }
    if noise + interference <= 0.0 {
        return 0.0;
    }
    signal / (noise + interference)
}

/// True SINR of the two-stage model: local MMSE estimates per serving
/// group fused by the combining weights.
pub fn true_sinr_distributed(
    u: usize,
    v: &[CVec],
    scheduled: &[bool],
    local_scheduled: &[Vec<bool>],
    chan: &ChannelRealization,
    topo: &NetworkTopology,
    grouping: Grouping,
) -> Result<f64> {
    if !scheduled[u] {
        return Ok(0.0);
    }
    let clusters = grouped_eval_clusters(topo, grouping);
    let cache = eval_cache(v, scheduled, chan, &clusters);
    let combine = grouped_combine(&cache, u, scheduled, local_scheduled, chan, topo, grouping)?;
    Ok(grouped_sinr_from_combine(
        &combine, &cache, u, scheduled, chan, topo, grouping,
    ))
}

fn slot_from_sinrs(
    mode: Mode,
    timeslot: usize,
    sinr: Vec<f64>,
    scheduled: Vec<bool>,
) -> TimeSlotResult {
    let se: Vec<f64> = sinr
        .iter()
        .zip(&scheduled)
        .map(|(&s, &on)| if on { (1.0 + s).log2() } else { 0.0 })
        .collect();
    let sum_se = se.iter().sum();
    let jain = jains_index(&se);
    TimeSlotResult {
        mode,
        timeslot,
        sinr,
        se,
        scheduled,
        sum_se,
        jain,
    }
}

/// Evaluate a converged allocation under the mode's physical signal model.
pub fn evaluate_allocation(
    mode: Mode,
    alloc: &AllocationResult,
    chan: &ChannelRealization,
    topo: &NetworkTopology,
    timeslot: usize,
) -> Result<TimeSlotResult> {
    let n_users = topo.n_users();
    let grouping = match mode {
        Mode::Centralized | Mode::RoundRobin => None,
        Mode::Distributed | Mode::DistDecentralized => Some(Grouping::PerAp),
        Mode::SemiDistributed | Mode::SemiDecentralized => Some(Grouping::PerCpu),
    };
    let mut sinr = vec![0.0; n_users];
    match grouping {
        None => {
            let cache = eval_cache(&alloc.v, &alloc.scheduled, chan, &topo.c_u);
            for (u, out) in sinr.iter_mut().enumerate() {
                *out = centralized_sinr_from_cache(&cache, u, &alloc.scheduled, chan, topo)?;
            }
        }
        Some(grouping) => {
            let local = alloc.local_scheduled.as_ref().ok_or_else(|| {
                Error::Numerics("grouped evaluation needs per-processor scheduling".into())
            })?;
            let clusters = grouped_eval_clusters(topo, grouping);
            let cache = eval_cache(&alloc.v, &alloc.scheduled, chan, &clusters);
            for (u, out) in sinr.iter_mut().enumerate() {
                if !alloc.scheduled[u] {
                    continue;
                }
                let combine =
                    grouped_combine(&cache, u, &alloc.scheduled, local, chan, topo, grouping)?;
                *out = grouped_sinr_from_combine(
                    &combine,
                    &cache,
                    u,
                    &alloc.scheduled,
                    chan,
                    topo,
                    grouping,
                );
            }
        }
    }
    Ok(slot_from_sinrs(mode, timeslot, sinr, alloc.scheduled.clone()))
}

/// Round-robin baseline: users split by index into `group_count` groups,
/// group (slot mod group_count) transmits at full power, centralized MMSE
/// evaluation.
pub fn round_robin_baseline(
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    cfg: &SimConfig,
    group_count: usize,
    timeslot: usize,
) -> Result<TimeSlotResult> {
    let n_users = topo.n_users();
    let group_count = group_count.max(1);
    let active = timeslot % group_count;
    let scheduled: Vec<bool> = (0..n_users).map(|u| u % group_count == active).collect();
    let p_t = cfg.p_t.mw();
    let v: Vec<CVec> = (0..n_users)
        .map(|u| full_power_direction(topo, chan, u, cfg) * cx(p_t.sqrt()))
        .collect();
    let cache = eval_cache(&v, &scheduled, chan, &topo.c_u);
    let mut sinr = vec![0.0; n_users];
    for (u, out) in sinr.iter_mut().enumerate() {
        *out = centralized_sinr_from_cache(&cache, u, &scheduled, chan, topo)?;
    }
    Ok(slot_from_sinrs(Mode::RoundRobin, timeslot, sinr, scheduled))
}
