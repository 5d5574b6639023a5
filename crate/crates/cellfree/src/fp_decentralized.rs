//! Fully decentralized allocation: per-processor FP loops against a
//! pseudo-SINR metric with no cross-processor exchange during iterations.
//!
//! Non-local interference, which a processor cannot observe, is replaced by
//! a static equivalent-noise term built from large-scale statistics and a
//! probabilistic scheduling weight: at AP r the term for each user u'
//! outside E_r is P_T p_{ru'} psi_{ru'} beta(d_{ru'}), where p_{ru'} sums
//! M / |E_{r'}| over the other APs of u''s cluster. The weights are used
//! verbatim even when they exceed one. Users the processor can observe stay
//! in the explicit local interference sum and are not double counted. The
//! only global step is the final selection of each user's transmit
//! beamformer after every processor has converged.

use crate::channel::{ChannelRealization, LargeScale};
use crate::fp_centralized::{
    full_power_direction, solve_multipliers_full, AllocationResult, VSolveContext,
};
use crate::fp_common::{accum_adjoint_mul, rel_change, unique_pairs, EffChannels, PairBlocks};
use crate::fp_exchange::{
    ap_processors, cpu_processors, extract_schedule, select_v_from_taus, ProcKind, Processor,
    ProcessorSet,
};
use crate::linalg::{cx, CMat, CVec, HermFactor};
use crate::model::SimConfig;
use crate::topology::NetworkTopology;
use crate::{Error, Result};

/// Static equivalent-noise diagonals: per processor, per local user, one
/// sigma~^2 value per stacked AP block (sigma^2 plus the kappa-scaled
/// non-local sum).
#[derive(Debug, Clone)]
pub struct NonLocalApprox {
    pub diag: Vec<Vec<Vec<f64>>>,
    pub kappa: f64,
}

/// Heuristic probability that user `u_prime` is scheduled by any processor
/// other than `p`. May exceed 1; used verbatim as a weight.
pub fn schedule_probability(
    set: &ProcessorSet,
    p: usize,
    u_prime: usize,
    topo: &NetworkTopology,
    cfg: &SimConfig,
) -> f64 {
    let m = cfg.m as f64;
    match set.kind {
        ProcKind::PerAp => {
            let r = set.procs[p].id;
            topo.c_u[u_prime]
                .iter()
                .filter(|&&r2| r2 != r)
                .map(|&r2| m / topo.e_r[r2].len() as f64)
                .sum()
        }
        ProcKind::PerCpu => {
            let q = set.procs[p].id;
            let own = (topo.b_q[q].len() as f64) * m;
            topo.d_u[u_prime]
                .iter()
                .filter(|&&q2| q2 != q)
                .map(|&q2| own / topo.e_q[q2].len() as f64)
                .sum()
        }
    }
}

/// kappa-scaled non-local interference for one (processor, user), one value
/// per AP block of the user's local stack (before sigma^2 is added). The
/// sum runs over the users the processor cannot observe (outside E_p).
pub fn nonlocal_interference(
    set: &ProcessorSet,
    p: usize,
    u: usize,
    topo: &NetworkTopology,
    ls: &LargeScale,
    cfg: &SimConfig,
) -> Vec<f64> {
    let proc = &set.procs[p];
    let li = proc
        .local_index(u)
        .expect("nonlocal_interference for a non-local user");
    let p_t = cfg.p_t.mw();
    proc.user_aps[li]
        .iter()
        .map(|&r| {
            let sum: f64 = (0..topo.n_users())
                .filter(|&u2| proc.local_index(u2).is_none())
                .map(|u2| p_t * schedule_probability(set, p, u2, topo, cfg) * ls.gain(r, u2))
                .sum();
            cfg.kappa * sum
        })
        .collect()
}

/// All equivalent-noise diagonals for a processor set; static over FP
/// iterations.
pub fn build_nonlocal(
    set: &ProcessorSet,
    topo: &NetworkTopology,
    ls: &LargeScale,
    cfg: &SimConfig,
) -> NonLocalApprox {
    let sigma2 = cfg.noise_power().mw();
    let p_t = cfg.p_t.mw();
    let n_users = topo.n_users();
    let diag = set
        .procs
        .iter()
        .enumerate()
        .map(|(pi, proc)| {
            let probs: Vec<f64> = (0..n_users)
                .map(|u2| schedule_probability(set, pi, u2, topo, cfg))
                .collect();
            // Per-AP totals over all users; each user's entry subtracts its
            // own term from the total.
            let mut totals: std::collections::HashMap<usize, f64> = Default::default();
            for aps in &proc.user_aps {
                for &r in aps {
                    totals.entry(r).or_insert_with(|| {
                        (0..n_users)
                            .filter(|u2| proc.local_index(*u2).is_none())
                            .map(|u2| p_t * probs[u2] * ls.gain(r, u2))
                            .sum()
                    });
                }
            }
            proc.users
                .iter()
                .zip(&proc.user_aps)
                .map(|(_, aps)| {
                    aps.iter()
                        .map(|&r| sigma2 + cfg.kappa * totals[&r])
                        .collect()
                })
                .collect()
        })
        .collect();
    NonLocalApprox {
        diag,
        kappa: cfg.kappa,
    }
}

fn stacked_tau_channel(chan: &ChannelRealization, aps: &[usize], u: usize, tau: &CVec) -> CVec {
    let m = chan.m;
    let mut out = CVec::zeros(m * aps.len());
    for (i, &r) in aps.iter().enumerate() {
        let e = chan.h(r, u) * tau;
        out.rows_mut(i * m, m).copy_from(&e);
    }
    out
}

/// Pseudo-SINR of one local user: local tau interference only, plus the
/// equivalent-noise diagonal. `taus` is indexed by the processor's local
/// user positions.
pub fn pseudo_sinr(
    set: &ProcessorSet,
    p: usize,
    u: usize,
    taus: &[CVec],
    chan: &ChannelRealization,
    nonlocal: &NonLocalApprox,
) -> f64 {
    let proc = &set.procs[p];
    let li = proc.local_index(u).expect("pseudo_sinr for a non-local user");
    let aps = proc.user_aps[li].as_slice();
    let m = chan.m;
    let dim = m * aps.len();
    let mut b = CMat::zeros(dim, dim);
    for (bi, &d) in nonlocal.diag[p][li].iter().enumerate() {
        for t in 0..m {
            b[(bi * m + t, bi * m + t)] = cx(d);
        }
    }
    for (lj, &u2) in proc.users.iter().enumerate() {
        if u2 == u {
            continue;
        }
        let a2 = stacked_tau_channel(chan, aps, u2, &taus[lj]);
        b.gerc(cx(1.0), &a2, &a2, cx(1.0));
    }
    let a = stacked_tau_channel(chan, aps, u, &taus[li]);
    match HermFactor::new(b) {
        Ok(f) => f.quad_form_inv(&a).max(0.0),
        Err(_) => 0.0,
    }
}

struct ProcOutcome {
    taus: Vec<CVec>,
    trace: Vec<f64>,
    converged: bool,
}

/// Effective local channels H_{ru'} tau_{pu'} for the processor's users,
/// one M x |E_p| matrix per AP the processor stacks; columns are indexed by
/// local user position.
fn local_eff(proc: &Processor, chan: &ChannelRealization, taus: &[CVec]) -> EffChannels {
    let m = chan.m;
    let mut per_ap = vec![CMat::zeros(0, 0); chan.n_aps()];
    let mut used: Vec<usize> = proc.user_aps.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    for &r in &used {
        let mut mat = CMat::zeros(m, proc.users.len());
        for (lj, &u2) in proc.users.iter().enumerate() {
            let e = chan.h(r, u2) * &taus[lj];
            mat.set_column(lj, &e);
        }
        per_ap[r] = mat;
    }
    EffChannels { per_ap, m }
}

/// Independent FP loop of a single processor; reads nothing produced by any
/// other processor.
fn solve_processor(
    proc: &Processor,
    diag: &[Vec<f64>],
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    delta: &[f64],
    cfg: &SimConfig,
) -> Result<ProcOutcome> {
    let n_local = proc.users.len();
    let m = chan.m;
    let n = chan.n;
    let p_t = cfg.p_t.mw();
    let mut taus: Vec<CVec> = proc
        .users
        .iter()
        .map(|&u| full_power_direction(topo, chan, u, cfg) * cx(p_t.sqrt()))
        .collect();
    let mut alpha = vec![1.0 / p_t; n_local];
    let mut gamma = vec![0.0; n_local];
    let mut ys: Vec<CVec> = proc
        .user_aps
        .iter()
        .map(|aps| CVec::zeros(m * aps.len()))
        .collect();
    let pairs = unique_pairs(proc.user_aps.iter().map(|a| a.as_slice()));
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = n_local == 0;

    for _ in 1..=cfg.fp_max_iters {
        // gamma and y share the full local matrix: the excluded own term in
        // the gamma denominator is the numerator vector itself.
        let eff = local_eff(proc, chan, &taus);
        let blocks = PairBlocks::compute(&eff, &pairs);
        let mut obj = 0.0;
        for li in 0..n_local {
            let aps = proc.user_aps[li].as_slice();
            let b = blocks.assemble(aps, &diag[li]);
            let f = HermFactor::new(b)?;
            let a = eff.stacked(aps, li);
            let x = f.solve(&a);
            let t = a.dotc(&x).re.clamp(0.0, 1.0 - 1e-12);
            gamma[li] = t / (1.0 - t);
            let s = (delta[proc.users[li]] * (1.0 + gamma[li])).sqrt();
            ys[li] = x * cx(s);
            obj += delta[proc.users[li]] * (1.0 + gamma[li]).ln();
        }

        // Local beamformer update; the quadratic sum runs over E_p only.
        let mut quad = Vec::with_capacity(n_local);
        let mut rhs = Vec::with_capacity(n_local);
        let mut scale = Vec::with_capacity(n_local);
        for li in 0..n_local {
            let u = proc.users[li];
            let mut q = CMat::zeros(n, n);
            let mut g_own = CVec::zeros(n);
            let mut g = CVec::zeros(n);
            for lj in 0..n_local {
                g.fill(cx(0.0));
                for (bi, &r) in proc.user_aps[lj].iter().enumerate() {
                    accum_adjoint_mul(&mut g, chan.h(r, u), &ys[lj], bi * m);
                }
                q.gerc(cx(1.0), &g, &g, cx(1.0));
                if lj == li {
                    g_own.copy_from(&g);
                }
            }
            quad.push(q);
            rhs.push(g_own);
            scale.push((delta[u] * (1.0 + gamma[li])).sqrt());
        }
        let ctx = VSolveContext {
            quad,
            rhs,
            scale,
            alpha: alpha.clone(),
            capacity: proc.capacity,
        };
        let (_, _, new_taus) = solve_multipliers_full(&ctx, cfg)?;
        taus = new_taus;
        for li in 0..n_local {
            alpha[li] = 1.0 / (taus[li].norm_squared() + cfg.epsilon_cs);
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
    Ok(ProcOutcome {
        taus,
        trace,
        converged,
    })
}

fn run_decentralized(
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
    let nonlocal = build_nonlocal(set, topo, &chan.large_scale, cfg);
    let mut outcomes = Vec::with_capacity(set.procs.len());
    for (pi, proc) in set.procs.iter().enumerate() {
        outcomes.push(solve_processor(
            proc,
            &nonlocal.diag[pi],
            topo,
            chan,
            delta,
            cfg,
        )?);
    }

    // The single global step: pick each user's strongest local decision.
    let taus: Vec<Vec<CVec>> = outcomes.iter().map(|o| o.taus.clone()).collect();
    let v = select_v_from_taus(set, &taus, n_users, chan.n);
    let (scheduled, local) = extract_schedule(set, &taus, n_users, cfg);

    let iterations = outcomes.iter().map(|o| o.trace.len()).max().unwrap_or(0);
    let mut trace = vec![0.0; iterations];
    for o in &outcomes {
        for (i, slot) in trace.iter_mut().enumerate() {
            *slot += o.trace.get(i).or(o.trace.last()).copied().unwrap_or(0.0);
        }
    }
    let converged = outcomes.iter().all(|o| o.converged);
    Ok(AllocationResult {
        v,
        scheduled,
        local_scheduled: Some(local),
        trace,
        iterations,
        converged,
    })
}

/// Decentralized allocation with per-AP processors (capacity M).
pub fn run_decentralized_distributed(
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    delta: &[f64],
    cfg: &SimConfig,
) -> Result<AllocationResult> {
    run_decentralized(&ap_processors(topo, cfg), topo, chan, delta, cfg)
}

/// Decentralized allocation with per-CPU processors over C_qu stacks
/// (capacity |B_q| M).
pub fn run_decentralized_semi(
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    delta: &[f64],
    cfg: &SimConfig,
) -> Result<AllocationResult> {
    run_decentralized(&cpu_processors(topo, cfg), topo, chan, delta, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp_centralized::run_centralized;
    use crate::fp_exchange::run_distributed;
    use crate::linalg::add_outer;
    use crate::testutil::toy;
    use crate::topology::{NetworkTopology, Pos};

    /// Hand-built 2-AP topology with explicit cluster sets: user 0 belongs
    /// to both APs, `fillers` extra users belong to AP 1 only.
    fn fixed_clusters(fillers: usize) -> (NetworkTopology, SimConfig) {
        let mut cfg = SimConfig::default();
        cfg.m = 2;
        cfg.n = 1;
        let n_users = 1 + fillers;
        let mut topo = NetworkTopology::from_parts(
            vec![Pos::new(0.0, 0.0), Pos::new(0.2, 0.0)],
            (0..n_users)
                .map(|i| Pos::new(0.05 + 0.01 * i as f64, 0.1))
                .collect(),
            vec![0, 1],
            2,
            0.5,
            1,
        );
        topo.c_u = vec![vec![0, 1]];
        topo.e_r = vec![vec![0], vec![0]];
        for u in 1..n_users {
            topo.c_u.push(vec![1]);
            topo.e_r[1].push(u);
        }
        topo.c_qu = vec![vec![Vec::new(); n_users]; 2];
        for (u, cluster) in topo.c_u.iter().enumerate() {
            for &r in cluster {
                topo.c_qu[r][u].push(r);
            }
        }
        topo.e_q = topo.e_r.clone();
        topo.d_u = (0..n_users)
            .map(|u| (0..2).filter(|&q| !topo.c_qu[q][u].is_empty()).collect())
            .collect();
        (topo, cfg)
    }

    #[test]
    fn schedule_probability_reference_cases() {
        // C_u' = {r} and p = r: empty sum.
        let (topo, cfg) = fixed_clusters(3);
        let set = ap_processors(&topo, &cfg);
        assert_eq!(schedule_probability(&set, 1, 1, &topo, &cfg), 0.0);

        // C_u' = {r, r'}, |E_{r'}| = 2M, p = r: M / 2M = 0.5.
        let (topo, cfg) = fixed_clusters(3); // |E_1| = 4 = 2M with M = 2
        let set = ap_processors(&topo, &cfg);
        assert_eq!(topo.e_r[1].len(), 4);
        let p = schedule_probability(&set, 0, 0, &topo, &cfg);
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn schedule_probability_matches_set_oracle() {
        let t = toy(41, 4, 2, 2, 1, 10, None);
        let m = t.cfg.m as f64;
        let set = ap_processors(&t.topo, &t.cfg);
        for p in 0..set.procs.len() {
            let r = set.procs[p].id;
            for u in 0..10 {
                let oracle: f64 = t.topo.c_u[u]
                    .iter()
                    .filter(|&&r2| r2 != r)
                    .map(|&r2| m / t.topo.e_r[r2].len() as f64)
                    .sum();
                let got = schedule_probability(&set, p, u, &t.topo, &t.cfg);
                assert!((got - oracle).abs() < 1e-15);
            }
        }
        let set = cpu_processors(&t.topo, &t.cfg);
        for p in 0..set.procs.len() {
            let q = set.procs[p].id;
            let own = t.topo.b_q[q].len() as f64 * m;
            for u in 0..10 {
                let oracle: f64 = t.topo.d_u[u]
                    .iter()
                    .filter(|&&q2| q2 != q)
                    .map(|&q2| own / t.topo.e_q[q2].len() as f64)
                    .sum();
                let got = schedule_probability(&set, p, u, &t.topo, &t.cfg);
                assert!((got - oracle).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nonlocal_sums_and_scaleout() {
        let sigma2 = SimConfig::default().noise_power().mw();

        // Single user: empty sum, sigma~2 = sigma2.
        let t = toy(42, 2, 1, 2, 1, 1, Some(50.0));
        let set = ap_processors(&t.topo, &t.cfg);
        let nl = build_nonlocal(&set, &t.topo, &t.ls, &t.cfg);
        for p in 0..set.procs.len() {
            for d in &nl.diag[p] {
                for &v in d {
                    assert!((v - sigma2).abs() <= 1e-15 * sigma2);
                }
            }
        }

        // kappa = 0 removes the non-local term entirely.
        let mut t = toy(43, 3, 1, 2, 1, 10, None);
        t.cfg.kappa = 0.0;
        let set = ap_processors(&t.topo, &t.cfg);
        let nl = build_nonlocal(&set, &t.topo, &t.ls, &t.cfg);
        for p in 0..set.procs.len() {
            for d in &nl.diag[p] {
                for &v in d {
                    assert_eq!(v, sigma2);
                }
            }
        }

        // Brute-force sum over non-local users on a 10-user instance.
        let t = toy(44, 3, 1, 2, 1, 10, None);
        let set = ap_processors(&t.topo, &t.cfg);
        let p_t = t.cfg.p_t.mw();
        let mut checked_nonzero = false;
        for p in 0..set.procs.len() {
            let r = set.procs[p].id;
            for &u in &set.procs[p].users {
                let brute: f64 = (0..10)
                    .filter(|&u2| !t.topo.e_r[r].contains(&u2))
                    .map(|u2| {
                        p_t * schedule_probability(&set, p, u2, &t.topo, &t.cfg)
                            * t.ls.gain(r, u2)
                    })
                    .sum();
                let got = nonlocal_interference(&set, p, u, &t.topo, &t.ls, &t.cfg);
                assert!((got[0] - t.cfg.kappa * brute).abs() <= 1e-9 * brute.max(1e-30));
                checked_nonzero |= brute > 0.0;
            }
        }
        assert!(checked_nonzero, "want at least one non-local contribution");
    }

    #[test]
    fn pseudo_sinr_cases() {
        // No local interferers, kappa = 0, scalar case: p |h|^2 / sigma^2.
        let mut t = toy(45, 1, 1, 1, 1, 1, None);
        t.cfg.kappa = 0.0;
        let set = ap_processors(&t.topo, &t.cfg);
        let nl = build_nonlocal(&set, &t.topo, &t.ls, &t.cfg);
        let p_t = t.cfg.p_t.mw();
        let tau = CVec::from_element(1, cx(p_t.sqrt()));
        let got = pseudo_sinr(&set, 0, 0, &[tau.clone()], &t.chan, &nl);
        let h = t.chan.h(0, 0)[(0, 0)];
        let expect = p_t * h.norm_sqr() / t.chan.sigma2;
        assert!((got - expect).abs() / expect < 1e-9);

        // Zero tau: zero pseudo-SINR.
        let got = pseudo_sinr(&set, 0, 0, &[CVec::zeros(1)], &t.chan, &nl);
        assert_eq!(got, 0.0);

        // Random multi-user instance against a dense oracle.
        let t = toy(46, 2, 1, 3, 1, 4, Some(50.0));
        let set = ap_processors(&t.topo, &t.cfg);
        let nl = build_nonlocal(&set, &t.topo, &t.ls, &t.cfg);
        let p = 0usize;
        let proc = &set.procs[p];
        let taus: Vec<CVec> = (0..proc.users.len())
            .map(|i| CVec::from_element(1, cx((1.0 + i as f64) * 0.4 * p_t.sqrt())))
            .collect();
        for (li, &u) in proc.users.iter().enumerate() {
            let m = t.cfg.m;
            let mut b = CMat::identity(m, m) * cx(nl.diag[p][li][0]);
            for (lj, &u2) in proc.users.iter().enumerate() {
                if u2 == u {
                    continue;
                }
                let a2 = t.chan.h(0, u2) * &taus[lj];
                add_outer(&mut b, 1.0, &a2, &a2);
            }
            let a = t.chan.h(0, u) * &taus[li];
            let oracle = a.dotc(&(b.try_inverse().unwrap() * &a)).re;
            let got = pseudo_sinr(&set, p, u, &taus, &t.chan, &nl);
            assert!((got - oracle).abs() / oracle.max(1e-12) < 1e-8);
        }
    }

    #[test]
    fn pseudo_sinr_decreases_with_kappa() {
        // Single local user with a non-empty network elsewhere.
        let t = toy(47, 2, 1, 2, 1, 6, None);
        let set = ap_processors(&t.topo, &t.cfg);
        let p = 0usize;
        let u = set.procs[p].users[0];
        let li = set.procs[p].local_index(u).unwrap();
        let taus: Vec<CVec> = (0..set.procs[p].users.len())
            .map(|i| {
                if i == li {
                    CVec::from_element(1, cx(t.cfg.p_t.mw().sqrt()))
                } else {
                    CVec::zeros(1)
                }
            })
            .collect();
        let mut prev = f64::INFINITY;
        for kappa in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let mut cfg = t.cfg.clone();
            cfg.kappa = kappa;
            let nl = build_nonlocal(&set, &t.topo, &t.ls, &cfg);
            let s = pseudo_sinr(&set, p, u, &taus, &t.chan, &nl);
            assert!(s < prev, "kappa {kappa}: {s} !< {prev}");
            prev = s;
        }
    }

    #[test]
    fn single_ap_kappa_zero_matches_exchange() {
        let mut t = toy(48, 1, 1, 2, 1, 5, Some(50.0));
        t.cfg.kappa = 0.0;
        let delta = vec![1.0; 5];
        let dec = run_decentralized_distributed(&t.topo, &t.chan, &delta, &t.cfg).unwrap();
        let exch = run_distributed(&t.topo, &t.chan, &delta, &t.cfg).unwrap();
        for (a, b) in dec.v.iter().zip(&exch.v) {
            assert!(
                (a.norm_squared() - b.norm_squared()).abs() <= 1e-6 * b.norm_squared().max(1e-9)
            );
        }
        assert_eq!(dec.scheduled, exch.scheduled);
    }

    #[test]
    fn processor_order_does_not_matter() {
        let t = toy(49, 3, 1, 2, 1, 8, None);
        let delta = vec![1.0; 8];
        let set = ap_processors(&t.topo, &t.cfg);
        let nl = build_nonlocal(&set, &t.topo, &t.ls, &t.cfg);
        let forward: Vec<Vec<CVec>> = (0..set.procs.len())
            .map(|p| {
                solve_processor(&set.procs[p], &nl.diag[p], &t.topo, &t.chan, &delta, &t.cfg)
                    .unwrap()
                    .taus
            })
            .collect();
        let backward: Vec<Vec<CVec>> = (0..set.procs.len())
            .rev()
            .map(|p| {
                solve_processor(&set.procs[p], &nl.diag[p], &t.topo, &t.chan, &delta, &t.cfg)
                    .unwrap()
                    .taus
            })
            .collect();
        for p in 0..set.procs.len() {
            let b = &backward[set.procs.len() - 1 - p];
            for (x, y) in forward[p].iter().zip(b) {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn semi_single_cpu_kappa_zero_matches_centralized() {
        let mut t = toy(50, 3, 3, 2, 1, 6, Some(50.0));
        t.cfg.kappa = 0.0;
        assert_eq!(t.topo.n_cpus, 1);
        let delta = vec![1.0; 6];
        let dec = run_decentralized_semi(&t.topo, &t.chan, &delta, &t.cfg).unwrap();
        let cent = run_centralized(&t.topo, &t.chan, &delta, &t.cfg).unwrap();
        for (a, b) in dec.v.iter().zip(&cent.v) {
            assert!(
                (a.norm_squared() - b.norm_squared()).abs() <= 1e-6 * b.norm_squared().max(1e-9)
            );
        }
        assert_eq!(dec.scheduled, cent.scheduled);
    }

    #[test]
    fn semi_one_ap_per_cpu_matches_distributed_decentralized() {
        let t = toy(51, 3, 1, 2, 1, 7, None);
        assert_eq!(t.topo.n_cpus, 3);
        let delta = vec![1.0; 7];
        let semi = run_decentralized_semi(&t.topo, &t.chan, &delta, &t.cfg).unwrap();
        let dist = run_decentralized_distributed(&t.topo, &t.chan, &delta, &t.cfg).unwrap();
        for (a, b) in semi.v.iter().zip(&dist.v) {
            assert!(
                (a.norm_squared() - b.norm_squared()).abs() <= 1e-6 * b.norm_squared().max(1e-9)
            );
        }
        assert_eq!(semi.scheduled, dist.scheduled);
    }

    #[test]
    fn no_users_gives_empty_schedule() {
        let t = toy(52, 2, 1, 2, 1, 0, None);
        let res = run_decentralized_distributed(&t.topo, &t.chan, &[], &t.cfg).unwrap();
        assert!(res.scheduled.is_empty());
        assert!(res.converged);
    }
}
