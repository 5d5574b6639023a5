//! Batch experiment driver: configuration files, Monte Carlo sweeps over
//! topologies and timeslots, mode comparison, CSV/CDF emission, kappa
//! sweeps, and overhead estimates.
//!
//! Seeds are derived per (density, AP count, trial, slot), so every mode
//! within one experiment sees identical topologies and channel draws and
//! mode deltas are paired. Trials run in parallel (override the worker
//! count with RAYON_NUM_THREADS); results are reduced in trial order, so
//! outputs are byte-identical regardless of thread count.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{draw_large_scale, draw_realization, ChannelRealization};
use crate::evaluation::{
    evaluate_allocation, pf_update, round_robin_baseline, FairnessState, Mode, TimeSlotResult,
};
use crate::fp_centralized::run_centralized;
use crate::fp_decentralized::{run_decentralized_distributed, run_decentralized_semi};
use crate::fp_exchange::{run_distributed, run_semi_distributed};
use crate::model::{dbm_to_mw, default_epsilon, Decibel, SimConfig};
use crate::topology::{build_clusters, generate_topology, NetworkTopology};
use crate::{Error, Result};

/// Default layout: the 7-cell flower with 500 m cells.
pub const DEFAULT_N_CELLS: usize = 7;
pub const DEFAULT_CELL_RADIUS_KM: f64 = 0.5;

/// What to run: modes, trial counts, and the parameter grid.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub modes: Vec<Mode>,
    pub n_topologies: usize,
    pub n_timeslots: usize,
    pub densities: Vec<f64>,
    pub aps_per_cell: Vec<usize>,
    /// kappa values for [`sweep_kappa`]; plain runs use `SimConfig::kappa`.
    pub kappas: Vec<f64>,
    pub rr_groups: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    /// Desk-scale profile: 7 cells, 2 APs/cell, density 50, 20 topologies,
    /// one timeslot, all modes.
    fn default() -> Self {
        ExperimentSpec {
            modes: Mode::ALL.to_vec(),
            n_topologies: 20,
            n_timeslots: 1,
            densities: vec![50.0],
            aps_per_cell: vec![2],
            kappas: vec![1.0],
            rr_groups: 2,
            out_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::Config("mode list must not be empty".into()));
        }
        if self.n_topologies == 0 {
            return Err(Error::Config("n_topologies must be >= 1".into()));
        }
        if self.n_timeslots == 0 {
            return Err(Error::Config("n_timeslots must be >= 1".into()));
        }
        if self.densities.is_empty() || self.aps_per_cell.is_empty() {
            return Err(Error::Config("parameter grid must not be empty".into()));
        }
        if self.kappas.is_empty() {
            return Err(Error::Config("kappa list must not be empty".into()));
        }
        if self.rr_groups == 0 {
            return Err(Error::Config("rr_groups must be >= 1".into()));
        }
        Ok(())
    }
}

/// All evaluated slots of one (mode, density, AP count, kappa) cell.
#[derive(Debug, Clone)]
pub struct AggregateCell {
    pub mode: Mode,
    pub density: f64,
    pub aps_per_cell: usize,
    pub kappa: f64,
    /// (topology index, slot result), ordered by (topology, timeslot).
    pub records: Vec<(usize, TimeSlotResult)>,
    pub mean_sum_se: f64,
    pub stderr_sum_se: f64,
    pub mean_jain: f64,
}

impl AggregateCell {
    fn finalize(&mut self) {
        let n = self.records.len();
        if n == 0 {
            return;
        }
        let sums: Vec<f64> = self.records.iter().map(|(_, r)| r.sum_se).collect();
        let mean = sums.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        self.mean_sum_se = mean;
        self.stderr_sum_se = (var / n as f64).sqrt();
        self.mean_jain =
            self.records.iter().map(|(_, r)| r.jain).sum::<f64>() / n as f64;
    }

    /// Per-trial sum SE, ordered by topology index (one timeslot per entry
    /// when n_timeslots = 1).
    pub fn sum_se_by_record(&self) -> Vec<f64> {
        self.records.iter().map(|(_, r)| r.sum_se).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct AggregateResult {
    pub cells: Vec<AggregateCell>,
}

impl AggregateResult {
    pub fn cell(&self, mode: Mode, density: f64, aps: usize, kappa: f64) -> Option<&AggregateCell> {
        self.cells.iter().find(|c| {
            c.mode == mode
                && (c.density - density).abs() < 1e-9
                && c.aps_per_cell == aps
                && (c.kappa - kappa).abs() < 1e-9
        })
    }
}

/// splitmix64-style combination of a base seed and a context path.
fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut x = base ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        x = x.wrapping_add(p).wrapping_add(0x9E37_79B9_7F4A_7C15);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}

/// Run one mode on one realization and evaluate it under its own signal
/// model.
pub fn run_mode(
    mode: Mode,
    topo: &NetworkTopology,
    chan: &ChannelRealization,
    delta: &[f64],
    cfg: &SimConfig,
    rr_groups: usize,
    timeslot: usize,
) -> Result<TimeSlotResult> {
    let alloc = match mode {
        Mode::Centralized => run_centralized(topo, chan, delta, cfg)?,
        Mode::Distributed => run_distributed(topo, chan, delta, cfg)?,
        Mode::SemiDistributed => run_semi_distributed(topo, chan, delta, cfg)?,
        Mode::DistDecentralized => run_decentralized_distributed(topo, chan, delta, cfg)?,
        Mode::SemiDecentralized => run_decentralized_semi(topo, chan, delta, cfg)?,
        Mode::RoundRobin => {
            return round_robin_baseline(topo, chan, cfg, rr_groups, timeslot);
        }
    };
    evaluate_allocation(mode, &alloc, chan, topo, timeslot)
}

struct TrialOutput {
    per_mode: Vec<Vec<TimeSlotResult>>,
}

fn run_trial(
    spec: &ExperimentSpec,
    cfg: &SimConfig,
    density: f64,
    aps_per_cell: usize,
    grid: (usize, usize),
    trial: usize,
) -> Result<TrialOutput> {
    let (di, ai) = grid;
    let topo_seed = derive_seed(cfg.seed, &[1, di as u64, ai as u64, trial as u64]);
    let mut topo = generate_topology(
        DEFAULT_N_CELLS,
        DEFAULT_CELL_RADIUS_KM,
        aps_per_cell,
        density,
        topo_seed,
    )?;
    let shadow_seed = derive_seed(cfg.seed, &[2, di as u64, ai as u64, trial as u64]);
    let ls = draw_large_scale(&topo, cfg, &mut ChaCha8Rng::seed_from_u64(shadow_seed));
    build_clusters(&mut topo, &ls, cfg.rho_km);

    let n_users = topo.n_users();
    let mut pf: Vec<FairnessState> = spec
        .modes
        .iter()
        .map(|_| FairnessState::new(n_users, cfg.eta))
        .collect();
    let mut deltas: Vec<Vec<f64>> = vec![vec![1.0; n_users]; spec.modes.len()];
    let mut per_mode: Vec<Vec<TimeSlotResult>> = vec![Vec::new(); spec.modes.len()];

    for slot in 0..spec.n_timeslots {
        let fade_seed = derive_seed(
            cfg.seed,
            &[3, di as u64, ai as u64, trial as u64, slot as u64],
        );
        let chan = draw_realization(&topo, &ls, cfg, &mut ChaCha8Rng::seed_from_u64(fade_seed));
        for (mi, &mode) in spec.modes.iter().enumerate() {
            let ts = run_mode(mode, &topo, &chan, &deltas[mi], cfg, spec.rr_groups, slot)?;
            let state = std::mem::replace(&mut pf[mi], FairnessState::new(0, cfg.eta));
            let (next_delta, state) = pf_update(state, &ts);
            deltas[mi] = next_delta;
            pf[mi] = state;
            per_mode[mi].push(ts);
        }
    }
    Ok(TrialOutput { per_mode })
}

/// Monte Carlo over the parameter grid. Per topology seed: generate the
/// layout and clusters, then per timeslot draw fading, run every requested
/// mode with its own proportional-fair weights, and evaluate the true SINR.
pub fn run_experiment(spec: &ExperimentSpec, cfg: &SimConfig) -> Result<AggregateResult> {
    cfg.validate()?;
    spec.validate()?;
    let mut cells = Vec::new();
    for (di, &density) in spec.densities.iter().enumerate() {
        for (ai, &aps) in spec.aps_per_cell.iter().enumerate() {
            let trials: Vec<Result<TrialOutput>> = (0..spec.n_topologies)
                .into_par_iter()
                .map(|t| run_trial(spec, cfg, density, aps, (di, ai), t))
                .collect();
            let mut per_mode: Vec<Vec<(usize, TimeSlotResult)>> =
                vec![Vec::new(); spec.modes.len()];
            for (t, out) in trials.into_iter().enumerate() {
                let out = out?;
                for (mi, slots) in out.per_mode.into_iter().enumerate() {
                    for ts in slots {
                        per_mode[mi].push((t, ts));
                    }
                }
            }
            for (mi, &mode) in spec.modes.iter().enumerate() {
                let mut cell = AggregateCell {
                    mode,
                    density,
                    aps_per_cell: aps,
                    kappa: cfg.kappa,
                    records: std::mem::take(&mut per_mode[mi]),
                    mean_sum_se: 0.0,
                    stderr_sum_se: 0.0,
                    mean_jain: 0.0,
                };
                cell.finalize();
                cells.push(cell);
            }
        }
    }
    Ok(AggregateResult { cells })
}

/// One aggregate per kappa with identical seeds across kappas, so the
/// comparison is paired. Only the decentralized modes react to kappa.
pub fn sweep_kappa(spec: &ExperimentSpec, cfg: &SimConfig) -> Result<AggregateResult> {
    let decentralized = [Mode::DistDecentralized, Mode::SemiDecentralized];
    if !spec.modes.iter().all(|m| decentralized.contains(m)) {
        return Err(Error::Config(
            "sweep-kappa expects only decentralized modes".into(),
        ));
    }
    let mut cells = Vec::new();
    for &kappa in &spec.kappas {
        let mut cfg_k = cfg.clone();
        cfg_k.kappa = kappa;
        cells.extend(run_experiment(spec, &cfg_k)?.cells);
    }
    Ok(AggregateResult { cells })
}

// --- configuration files -------------------------------------------------

fn parse_list<T: std::str::FromStr>(value: &str, line: usize) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|tok| {
            tok.trim().parse::<T>().map_err(|_| Error::ConfigParse {
                line,
                msg: format!("bad list element: {tok}"),
            })
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(value: &str, line: usize) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| Error::ConfigParse {
        line,
        msg: format!("bad value: {value}"),
    })
}

/// Parse the flat `key = value` format (one pair per line, `#` comments).
/// Unknown keys are rejected; missing keys keep the defaults.
pub fn parse_config(text: &str) -> Result<(ExperimentSpec, SimConfig)> {
    let mut spec = ExperimentSpec::default();
    let mut cfg = SimConfig::default();
    let mut epsilon_set = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            msg: "expected key = value".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "modes" => {
                spec.modes = value
                    .split(',')
                    .map(|tok| tok.trim().parse::<Mode>())
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::ConfigParse {
                        line: line_no,
                        msg: e.to_string(),
                    })?;
            }
            "topologies" => spec.n_topologies = parse_scalar(value, line_no)?,
            "timeslots" => spec.n_timeslots = parse_scalar(value, line_no)?,
            "densities" => spec.densities = parse_list(value, line_no)?,
            "aps_per_cell" => spec.aps_per_cell = parse_list(value, line_no)?,
            "kappas" => spec.kappas = parse_list(value, line_no)?,
            "rr_groups" => spec.rr_groups = parse_scalar(value, line_no)?,
            "out_dir" => spec.out_dir = Some(PathBuf::from(value)),
            "m" => cfg.m = parse_scalar(value, line_no)?,
            "n" => cfg.n = parse_scalar(value, line_no)?,
            "p_t_dbm" => cfg.p_t = dbm_to_mw(Decibel(parse_scalar(value, line_no)?)),
            "noise_psd_dbm_hz" => cfg.noise_psd_dbm_hz = parse_scalar(value, line_no)?,
            "noise_figure_db" => cfg.noise_figure_db = parse_scalar(value, line_no)?,
            "bandwidth_hz" => cfg.bandwidth_hz = parse_scalar(value, line_no)?,
            "eta" => cfg.eta = parse_scalar(value, line_no)?,
            "rho_km" => cfg.rho_km = parse_scalar(value, line_no)?,
            "epsilon" => {
                cfg.epsilon_cs = parse_scalar(value, line_no)?;
                epsilon_set = true;
            }
            "kappa" => cfg.kappa = parse_scalar(value, line_no)?,
            "fp_max_iters" => cfg.fp_max_iters = parse_scalar(value, line_no)?,
            "fp_rel_tol" => cfg.fp_rel_tol = parse_scalar(value, line_no)?,
            "bisect_tol" => cfg.bisect_tol = parse_scalar(value, line_no)?,
            "power_threshold_frac" => cfg.power_threshold_frac = parse_scalar(value, line_no)?,
            "lambda_init" => cfg.lambda_init = parse_scalar(value, line_no)?,
            "seed" => cfg.seed = parse_scalar(value, line_no)?,
            other => {
                return Err(Error::ConfigParse {
                    line: line_no,
                    msg: format!("unknown key: {other}"),
                })
            }
        }
    }
    if !epsilon_set {
        cfg.epsilon_cs = default_epsilon(cfg.m, cfg.p_t);
    }
    cfg.validate()?;
    spec.validate()?;
    Ok((spec, cfg))
}

pub fn load_config(path: &Path) -> Result<(ExperimentSpec, SimConfig)> {
    let mut text = String::new();
    File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?
        .read_to_string(&mut text)?;
    parse_config(&text)
}

// --- output files ---------------------------------------------------------

pub fn write_csv<W: Write>(result: &AggregateResult, w: &mut W) -> Result<()> {
    writeln!(w, "mode,density,aps,kappa,topology,timeslot,user,sinr,se,scheduled")?;
    for cell in &result.cells {
        let aps_total = cell.aps_per_cell * DEFAULT_N_CELLS;
        for (topo_idx, slot) in &cell.records {
            for u in 0..slot.se.len() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{:.9e},{:.9e},{}",
                    cell.mode,
                    cell.density,
                    aps_total,
                    cell.kappa,
                    topo_idx,
                    slot.timeslot,
                    u,
                    slot.sinr[u],
                    slot.se[u],
                    u8::from(slot.scheduled[u]),
                )?;
            }
        }
    }
    Ok(())
}

/// Per-mode empirical CDF of per-user SE pooled over the mode's cells;
/// rows ascending in SE, last cum_prob = 1.
pub fn write_cdf<W: Write>(result: &AggregateResult, w: &mut W) -> Result<()> {
    writeln!(w, "mode,se,cum_prob")?;
    let modes: BTreeSet<Mode> = result.cells.iter().map(|c| c.mode).collect();
    for mode in modes {
        let mut samples: Vec<f64> = result
            .cells
            .iter()
            .filter(|c| c.mode == mode)
            .flat_map(|c| c.records.iter().flat_map(|(_, r)| r.se.iter().copied()))
            .collect();
        if samples.is_empty() {
            continue;
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        for (i, se) in samples.iter().enumerate() {
            writeln!(w, "{},{:.9e},{:.9}", mode, se, (i + 1) as f64 / n)?;
        }
    }
    Ok(())
}

pub fn emit_csv(result: &AggregateResult, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(result, &mut w)
}

pub fn emit_cdf(result: &AggregateResult, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_cdf(result, &mut w)
}

// --- overhead estimates ----------------------------------------------------

/// Receiver-computation complexity (complex multiplications per user) and
/// iterative information exchange (complex scalars) of one operation mode.
#[derive(Debug, Clone)]
pub struct OverheadReport {
    pub mode: Mode,
    pub per_user_complexity: Vec<f64>,
    pub mean_complexity: f64,
    pub info_exchange: f64,
    pub n_iter: usize,
}

/// Overhead table entries for one mode on a built topology. `n_iter`
/// defaults to the allocator's realized iteration count when the caller has
/// one, else use `cfg.fp_max_iters`.
pub fn estimate_overhead(
    topo: &NetworkTopology,
    cfg: &SimConfig,
    mode: Mode,
    n_iter: usize,
) -> OverheadReport {
    let m = cfg.m as f64;
    let n = cfg.n as f64;
    let n_aps = topo.n_aps() as f64;
    let m3 = m * m * m;
    let per_user_c = |u: usize| {
        let c = topo.c_u[u].len() as f64;
        m3 * c * c * n_aps + m3 * c * c * c
    };
    let per_user_d = |u: usize| {
        let c = topo.c_u[u].len() as f64;
        m3 * c * n_aps + m3 * c
    };
    let per_user_sd = |u: usize| {
        topo.d_u[u]
            .iter()
            .map(|&q| {
                let c = topo.c_qu[q][u].len() as f64;
                m3 * c * c * n_aps + m3 * c * c * c
            })
            .sum::<f64>()
    };
    let exchange_d = || {
        let mut total = 0.0;
        for r in 0..topo.n_aps() {
            for r2 in 0..topo.n_aps() {
                if r2 == r {
                    continue;
                }
                total += m * n * topo.e_r[r].len() as f64
                    + n_iter as f64 * (m + n) * topo.e_r[r2].len() as f64;
            }
        }
        total
    };
    let exchange_sd = || {
        let mut total = 0.0;
        for q in 0..topo.n_cpus {
            for r2 in 0..topo.n_aps() {
                if topo.cpu_of_ap[r2] == q {
                    continue;
                }
                total += m * n * topo.e_q[q].len() as f64
                    + n_iter as f64 * (m + n) * topo.e_r[r2].len() as f64;
            }
        }
        total
    };

    let n_users = topo.n_users();
    let (per_user, info_exchange): (Vec<f64>, f64) = match mode {
        Mode::Centralized | Mode::RoundRobin => ((0..n_users).map(per_user_c).collect(), 0.0),
        Mode::Distributed => ((0..n_users).map(per_user_d).collect(), exchange_d()),
        Mode::SemiDistributed => ((0..n_users).map(per_user_sd).collect(), exchange_sd()),
        Mode::DistDecentralized => ((0..n_users).map(per_user_d).collect(), 0.0),
        Mode::SemiDecentralized => ((0..n_users).map(per_user_sd).collect(), 0.0),
    };
    let mean_complexity = if per_user.is_empty() {
        0.0
    } else {
        per_user.iter().sum::<f64>() / per_user.len() as f64
    };
    OverheadReport {
        mode,
        per_user_complexity: per_user,
        mean_complexity,
        info_exchange,
        n_iter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LargeScale;
    use crate::model::mw_to_dbm;
    use crate::topology::Pos;

    #[test]
    fn empty_config_gives_table_defaults() {
        let (spec, cfg) = parse_config("").unwrap();
        assert_eq!(cfg.m, 8);
        assert_eq!(cfg.n, 1);
        assert!((mw_to_dbm(cfg.p_t).0 - 23.0).abs() < 1e-12);
        assert_eq!(cfg.eta, 0.2);
        assert_eq!(cfg.rho_km, 0.4);
        assert_eq!(spec.n_topologies, 20);
        assert_eq!(spec.densities, vec![50.0]);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(parse_config("eta = 1.5").is_err());
        match parse_config("bogus_key = 3") {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        match parse_config("m = 8\nnot a pair") {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_sets_values_and_recomputes_epsilon() {
        let (_, cfg) = parse_config("kappa = 2").unwrap();
        assert_eq!(cfg.kappa, 2.0);

        // epsilon default follows m unless set explicitly.
        let (_, cfg) = parse_config("m = 4").unwrap();
        assert!((cfg.epsilon_cs - 4.0 / (0.9 * cfg.p_t.mw())).abs() < 1e-15);
        let (_, cfg) = parse_config("m = 4\nepsilon = 0.5").unwrap();
        assert_eq!(cfg.epsilon_cs, 0.5);

        let (spec, _) = parse_config("modes = centralized, round-robin\n# comment\n").unwrap();
        assert_eq!(spec.modes, vec![Mode::Centralized, Mode::RoundRobin]);
    }

    #[test]
    fn csv_and_cdf_shapes() {
        let empty = AggregateResult::default();
        let mut buf = Vec::new();
        write_csv(&empty, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "mode,density,aps,kappa,topology,timeslot,user,sinr,se,scheduled\n"
        );
        let mut buf = Vec::new();
        write_cdf(&empty, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "mode,se,cum_prob\n");
    }

    fn tiny_spec() -> (ExperimentSpec, SimConfig) {
        let mut spec = ExperimentSpec::default();
        spec.modes = vec![Mode::Centralized, Mode::DistDecentralized, Mode::RoundRobin];
        spec.n_topologies = 2;
        spec.n_timeslots = 2;
        spec.densities = vec![5.0];
        spec.aps_per_cell = vec![1];
        let mut cfg = SimConfig::default();
        cfg.m = 2;
        cfg.epsilon_cs = default_epsilon(2, cfg.p_t);
        cfg.seed = 11;
        (spec, cfg)
    }

    #[test]
    fn experiment_is_deterministic() {
        let (spec, cfg) = tiny_spec();
        let a = run_experiment(&spec, &cfg).unwrap();
        let b = run_experiment(&spec, &cfg).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_csv(&a, &mut csv_a).unwrap();
        write_csv(&b, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        let mut cdf = Vec::new();
        write_cdf(&a, &mut cdf).unwrap();
        let text = String::from_utf8(cdf).unwrap();
        let last = text.lines().last().unwrap();
        assert!(last.ends_with("1.000000000"), "{last}");
    }

    #[test]
    fn sweep_kappa_matches_plain_run_at_single_kappa() {
        let (mut spec, cfg) = tiny_spec();
        spec.modes = vec![Mode::DistDecentralized];
        spec.kappas = vec![1.0];
        let swept = sweep_kappa(&spec, &cfg).unwrap();
        let plain = run_experiment(&spec, &cfg).unwrap();
        assert_eq!(swept.cells.len(), plain.cells.len());
        for (a, b) in swept.cells.iter().zip(&plain.cells) {
            assert_eq!(a.mean_sum_se, b.mean_sum_se);
        }

        let mut bad = spec.clone();
        bad.modes = vec![Mode::Centralized];
        assert!(sweep_kappa(&bad, &cfg).is_err());
    }

    /// Fixed topology with hand-set clusters for the overhead formulas.
    fn overhead_topo(n_cpus: usize, aps_per_cpu: usize, cluster: &[usize]) -> NetworkTopology {
        let n_aps = n_cpus * aps_per_cpu;
        let ap_positions = (0..n_aps).map(|i| Pos::new(0.1 * i as f64, 0.0)).collect();
        let cpu_of_ap = (0..n_aps).map(|r| r / aps_per_cpu).collect();
        let mut topo = NetworkTopology::from_parts(
            ap_positions,
            vec![Pos::new(0.0, 0.1)],
            cpu_of_ap,
            n_cpus,
            0.5,
            1,
        );
        // Gains above threshold exactly on the requested cluster.
        let mut gains = vec![1e-12; n_aps];
        for &r in cluster {
            gains[r] = 1.0;
        }
        let ls = LargeScale::from_gains(n_aps, 1, gains);
        build_clusters(&mut topo, &ls, 0.4);
        assert_eq!(topo.c_u[0], cluster);
        topo
    }

    #[test]
    fn overhead_reference_points() {
        let cfg = SimConfig::default();
        let m3 = (cfg.m as f64).powi(3);

        // |C_u| = 1, |B| = 1: centralized complexity is 2 M^3.
        let topo = overhead_topo(1, 1, &[0]);
        let rep = estimate_overhead(&topo, &cfg, Mode::Centralized, 10);
        assert_eq!(rep.per_user_complexity[0], 2.0 * m3);
        assert_eq!(rep.info_exchange, 0.0);

        // Single CPU owning the whole cluster: semi equals centralized.
        let topo = overhead_topo(1, 3, &[0, 1, 2]);
        let c = estimate_overhead(&topo, &cfg, Mode::Centralized, 10);
        let sd = estimate_overhead(&topo, &cfg, Mode::SemiDistributed, 10);
        assert_eq!(c.per_user_complexity[0], sd.per_user_complexity[0]);

        // Cluster split across 2 CPUs: semi strictly below centralized.
        let topo = overhead_topo(2, 2, &[0, 1, 2, 3]);
        let c = estimate_overhead(&topo, &cfg, Mode::Centralized, 10);
        let sd = estimate_overhead(&topo, &cfg, Mode::SemiDistributed, 10);
        assert!(sd.per_user_complexity[0] < c.per_user_complexity[0]);

        // Decentralized modes report zero exchange; exchange grows with
        // iterations for the exchange-based modes.
        let d5 = estimate_overhead(&topo, &cfg, Mode::Distributed, 5);
        let d9 = estimate_overhead(&topo, &cfg, Mode::Distributed, 9);
        assert!(d9.info_exchange > d5.info_exchange);
        let dd = estimate_overhead(&topo, &cfg, Mode::DistDecentralized, 9);
        assert_eq!(dd.info_exchange, 0.0);
        assert_eq!(dd.per_user_complexity, d9.per_user_complexity);
    }
}
