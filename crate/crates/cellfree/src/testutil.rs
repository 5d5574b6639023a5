//! Small synthetic networks for unit tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{draw_large_scale, draw_realization, ChannelRealization, LargeScale};
use crate::model::SimConfig;
use crate::topology::{build_clusters, NetworkTopology, Pos};

pub(crate) struct Toy {
    pub topo: NetworkTopology,
    pub chan: ChannelRealization,
    pub ls: LargeScale,
    pub cfg: SimConfig,
}

/// A random single-cell box layout: `n_aps` APs grouped `aps_per_cpu` per
/// CPU and `n_users` users in a 0.6 km square, clusters built with the
/// default (or overridden) boundary.
pub(crate) fn toy(
    seed: u64,
    n_aps: usize,
    aps_per_cpu: usize,
    m: usize,
    n: usize,
    n_users: usize,
    rho_km: Option<f64>,
) -> Toy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(17));
    let sample = |rng: &mut ChaCha8Rng| {
        Pos::new(
            0.6 * rng.random::<f64>() - 0.3,
            0.6 * rng.random::<f64>() - 0.3,
        )
    };
    let ap_positions: Vec<Pos> = (0..n_aps).map(|_| sample(&mut rng)).collect();
    let mut user_positions = Vec::with_capacity(n_users);
    while user_positions.len() < n_users {
        let p = sample(&mut rng);
        if ap_positions.iter().all(|&ap| ap.dist(p) >= 0.02) {
            user_positions.push(p);
        }
    }
    let cpu_of_ap: Vec<usize> = (0..n_aps).map(|r| r / aps_per_cpu).collect();
    let n_cpus = n_aps.div_ceil(aps_per_cpu);
    let mut topo =
        NetworkTopology::from_parts(ap_positions, user_positions, cpu_of_ap, n_cpus, 0.5, 1);

    let mut cfg = SimConfig::default();
    cfg.m = m;
    cfg.n = n;
    cfg.epsilon_cs = crate::model::default_epsilon(m, cfg.p_t);
    if let Some(rho) = rho_km {
        cfg.rho_km = rho;
    }

    let ls = draw_large_scale(&topo, &cfg, &mut rng);
    build_clusters(&mut topo, &ls, cfg.rho_km);
    let chan = draw_realization(&topo, &ls, &cfg, &mut rng);
    Toy {
        topo,
        chan,
        ls,
        cfg,
    }
}

impl Toy {
    /// Give user `to` exactly the channel of user `from` (all APs), and
    /// rebuild the clusters so both users are treated identically.
    pub(crate) fn duplicate_user_channel(&mut self, from: usize, to: usize) {
        for r in 0..self.topo.n_aps() {
            let g = self.ls.gain(r, from);
            self.ls.set_gain(r, to, g);
            self.chan.set_gain(r, to, g);
            self.chan.set_h(r, to, self.chan.h(r, from).clone());
        }
        build_clusters(&mut self.topo, &self.ls, self.cfg.rho_km);
    }
}
