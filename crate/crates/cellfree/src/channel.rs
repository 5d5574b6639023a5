//! Channel synthesis: COST231 Walfisch-Ikegami pathloss at 1800 MHz,
//! lognormal shadowing, Rayleigh small-scale fading, and the concatenated
//! cluster channels used by the SINR expressions.
//!
//! Shadowing is drawn once per topology (block fading); small-scale fading
//! is redrawn per timeslot.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::linalg::{vstack, CMat};
use crate::model::{db_to_lin, Decibel, SimConfig};
use crate::topology::{wrap_distance, NetworkTopology};
use crate::{Error, Result};

/// Lognormal shadowing standard deviation, dB.
pub const SHADOWING_STD_DB: f64 = 4.0;

/// COST231 Walfisch-Ikegami pathloss at 1800 MHz:
/// -112.4271 - 38 log10(d), d in km.
pub fn pathloss_db(d_km: f64) -> Result<Decibel> {
    if !(d_km > 0.0) {
        return Err(Error::Numerics(format!(
            "pathloss undefined for distance {d_km} km"
        )));
    }
    Ok(Decibel(-112.4271 - 38.0 * d_km.log10()))
}

/// One lognormal shadowing draw as a linear gain: 10^(X/10), X ~ N(0, 4 dB).
pub fn draw_shadowing(rng: &mut ChaCha8Rng) -> f64 {
    let normal = Normal::new(0.0, SHADOWING_STD_DB).unwrap();
    db_to_lin(Decibel(normal.sample(rng)))
}

/// Large-scale gains psi_ru * beta(d_ru) for every (AP, user) pair.
#[derive(Debug, Clone)]
pub struct LargeScale {
    n_aps: usize,
    n_users: usize,
    gains: Vec<f64>,
}

impl LargeScale {
    pub fn from_gains(n_aps: usize, n_users: usize, gains: Vec<f64>) -> Self {
        assert_eq!(gains.len(), n_aps * n_users);
        LargeScale {
            n_aps,
            n_users,
            gains,
        }
    }

    pub fn gain(&self, r: usize, u: usize) -> f64 {
        self.gains[r * self.n_users + u]
    }

    #[cfg(test)]
    pub(crate) fn set_gain(&mut self, r: usize, u: usize, g: f64) {
        self.gains[r * self.n_users + u] = g;
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }
}

/// Draw shadowed large-scale gains over wrap-around distances.
pub fn draw_large_scale(
    topo: &NetworkTopology,
    _cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> LargeScale {
    let n_aps = topo.n_aps();
    let n_users = topo.n_users();
    let mut gains = Vec::with_capacity(n_aps * n_users);
    for r in 0..n_aps {
        for u in 0..n_users {
            let d = wrap_distance(topo.ap_positions[r], topo.user_positions[u], topo);
            let beta = db_to_lin(pathloss_db(d).expect("exclusion zone keeps d > 0"));
            gains.push(draw_shadowing(rng) * beta);
        }
    }
    LargeScale::from_gains(n_aps, n_users, gains)
}

/// One small-scale fading realization: H_ru = sqrt(psi beta) G_ru with G_ru
/// i.i.d. circularly-symmetric complex Gaussian, unit variance per entry.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    h: Vec<CMat>,
    pub large_scale: LargeScale,
    /// Noise power per receive antenna, mW.
    pub sigma2: f64,
    pub m: usize,
    pub n: usize,
    n_users: usize,
}

impl ChannelRealization {
    pub fn h(&self, r: usize, u: usize) -> &CMat {
        &self.h[r * self.n_users + u]
    }

    #[cfg(test)]
    pub(crate) fn set_h(&mut self, r: usize, u: usize, block: CMat) {
        self.h[r * self.n_users + u] = block;
    }

    #[cfg(test)]
    pub(crate) fn set_gain(&mut self, r: usize, u: usize, g: f64) {
        self.large_scale.set_gain(r, u, g);
    }

    pub fn n_aps(&self) -> usize {
        self.large_scale.n_aps()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }
}

pub fn draw_realization(
    topo: &NetworkTopology,
    large_scale: &LargeScale,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> ChannelRealization {
    let n_aps = topo.n_aps();
    let n_users = topo.n_users();
    let per_comp = Normal::new(0.0, (0.5f64).sqrt()).unwrap();
    let mut h = Vec::with_capacity(n_aps * n_users);
    for r in 0..n_aps {
        for u in 0..n_users {
            let scale = large_scale.gain(r, u).sqrt();
            let block = CMat::from_fn(cfg.m, cfg.n, |_, _| {
                Complex64::new(per_comp.sample(rng), per_comp.sample(rng)) * scale
            });
            h.push(block);
        }
    }
    ChannelRealization {
        h,
        large_scale: large_scale.clone(),
        sigma2: cfg.noise_power().mw(),
        m: cfg.m,
        n: cfg.n,
        n_users,
    }
}

/// Vertical stack of H_{ru'} over the cluster, ascending AP index.
pub fn concat_cluster_channel(
    real: &ChannelRealization,
    cluster: &[usize],
    u_prime: usize,
) -> Result<CMat> {
    if cluster.is_empty() {
        return Err(Error::Numerics("empty cluster in channel stack".into()));
    }
    debug_assert!(cluster.windows(2).all(|w| w[0] < w[1]));
    let blocks: Vec<&CMat> = cluster.iter().map(|&r| real.h(r, u_prime)).collect();
    Ok(vstack(&blocks))
}
