//! Internal machinery shared by the three allocator families: effective
//! channel caches, per-AP-pair interference blocks, Gram assembly, and
//! scheduling extraction.
//!
//! All SINR denominators have the shape
//!   D + sum_{u'} (H_{.,u'} x_{u'})(H_{.,u'} x_{u'})^H
//! over stacked per-AP blocks. Caching the per-AP effective channels
//! e_{ru'} = H_{ru'} x_{u'} and the per-AP-pair sums
//! K_{rs} = sum_{u'} e_{ru'} e_{su'}^H lets every per-user matrix be
//! assembled by block copies instead of repeated rank-1 accumulation.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::linalg::{cx, CMat, CVec};

/// Per-AP effective channels: column u of `per_ap[r]` is H_ru * x_u.
pub(crate) struct EffChannels {
    pub per_ap: Vec<CMat>,
    pub m: usize,
}

impl EffChannels {
    /// Effective channels for the shared transmit beamformers.
    pub fn from_v(chan: &ChannelRealization, v: &[CVec]) -> Self {
        let m = chan.m;
        let n_users = chan.n_users();
        let per_ap = (0..chan.n_aps())
            .map(|r| {
                let mut mat = CMat::zeros(m, n_users);
                for u in 0..n_users {
                    let e = chan.h(r, u) * &v[u];
                    mat.set_column(u, &e);
                }
                mat
            })
            .collect();
        EffChannels { per_ap, m }
    }

    /// Stack of effective-channel columns for `u` over `aps`.
    pub fn stacked(&self, aps: &[usize], u: usize) -> CVec {
        let mut out = CVec::zeros(self.m * aps.len());
        for (i, &r) in aps.iter().enumerate() {
            out.rows_mut(i * self.m, self.m)
                .copy_from(&self.per_ap[r].column(u));
        }
        out
    }
}

/// K_{rs} = E_r E_s^H for a set of AP pairs (r <= s).
pub(crate) struct PairBlocks {
    blocks: HashMap<(usize, usize), CMat>,
    m: usize,
}

impl PairBlocks {
    pub fn compute(eff: &EffChannels, pairs: &[(usize, usize)]) -> Self {
        let blocks = pairs
            .iter()
            .map(|&(r, s)| ((r, s), &eff.per_ap[r] * eff.per_ap[s].adjoint()))
            .collect();
        PairBlocks { blocks, m: eff.m }
    }

    /// Assemble sum_{u'} a_{u'} a_{u'}^H over the stacked `aps`, adding
    /// `diag[i]` to the diagonal of block (i, i).
    pub fn assemble(&self, aps: &[usize], diag: &[f64]) -> CMat {
        let m = self.m;
        let dim = m * aps.len();
        let mut out = CMat::zeros(dim, dim);
        for (i, &r) in aps.iter().enumerate() {
            for (j, &s) in aps.iter().enumerate() {
                if r <= s {
                    let k = &self.blocks[&(r, s)];
                    out.view_mut((i * m, j * m), (m, m)).copy_from(k);
                } else {
                    let k = &self.blocks[&(s, r)];
                    out.view_mut((i * m, j * m), (m, m)).copy_from(&k.adjoint());
                }
            }
        }
        for (i, &d) in diag.iter().enumerate() {
            for t in 0..m {
                out[(i * m + t, i * m + t)] += cx(d);
            }
        }
        out
    }
}

/// Unique (r, s) pairs with r <= s occurring in any cluster.
pub(crate) fn unique_pairs<'a, I>(clusters: I) -> Vec<(usize, usize)>
where
    I: Iterator<Item = &'a [usize]>,
{
    let mut set = BTreeSet::new();
    for cluster in clusters {
        for (i, &r) in cluster.iter().enumerate() {
            for &s in &cluster[i..] {
                set.insert((r.min(s), r.max(s)));
            }
        }
    }
    set.into_iter().collect()
}

/// Stack of true channels H_{ru} over `aps` (M|aps| x N).
pub(crate) fn stacked_channel(chan: &ChannelRealization, aps: &[usize], u: usize) -> CMat {
    let m = chan.m;
    let mut out = CMat::zeros(m * aps.len(), chan.n);
    for (i, &r) in aps.iter().enumerate() {
        out.view_mut((i * m, 0), (m, chan.n)).copy_from(chan.h(r, u));
    }
    out
}

/// g += H^H y_block for an M x N channel block; avoids temporaries.
pub(crate) fn accum_adjoint_mul(g: &mut CVec, h: &CMat, y_block: &CVec, offset: usize) {
    let m = h.nrows();
    for k in 0..h.ncols() {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..m {
            acc += h[(t, k)].conj() * y_block[offset + t];
        }
        g[k] += acc;
    }
}

/// Relative change between successive objective values.
pub(crate) fn rel_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / prev.abs().max(1e-12)
}

/// Threshold scheduling with a capacity cap: flag powers above
/// `frac * p_t`, then keep the `cap` largest (ties to the lowest index).
pub(crate) fn threshold_schedule(
    norms_sq: &[f64],
    p_t: f64,
    frac: f64,
    cap: usize,
) -> Vec<bool> {
    let thr = frac * p_t;
    let mut flagged: Vec<usize> = (0..norms_sq.len())
        .filter(|&i| norms_sq[i] > thr)
        .collect();
    if flagged.len() > cap {
        flagged.sort_by(|&a, &b| {
            norms_sq[b]
                .partial_cmp(&norms_sq[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        flagged.truncate(cap);
    }
    let mut out = vec![false; norms_sq.len()];
    for i in flagged {
        out[i] = true;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_threshold_and_cap() {
        let norms = [0.5, 0.001, 0.3, 0.3, 0.2];
        let s = threshold_schedule(&norms, 1.0, 0.01, 3);
        assert_eq!(s, vec![true, false, true, true, false]);
        // Cap of 2 keeps the largest, ties broken by lowest index.
        let s = threshold_schedule(&norms, 1.0, 0.01, 2);
        assert_eq!(s, vec![true, false, true, false, false]);
    }

    #[test]
    fn pair_enumeration() {
        let clusters: Vec<Vec<usize>> = vec![vec![0, 2], vec![2], vec![1, 2]];
        let pairs = unique_pairs(clusters.iter().map(|c| c.as_slice()));
        assert_eq!(pairs, vec![(0, 0), (0, 2), (1, 1), (1, 2), (2, 2)]);
    }
}
