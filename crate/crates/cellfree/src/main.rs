//! Batch CLI for the cell-free uplink resource-allocation simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cellfree::evaluation::Mode;
use cellfree::harness::{
    emit_cdf, emit_csv, estimate_overhead, load_config, run_experiment, sweep_kappa,
    AggregateResult, ExperimentSpec, DEFAULT_CELL_RADIUS_KM, DEFAULT_N_CELLS,
};
use cellfree::model::SimConfig;
use cellfree::topology::{build_clusters, generate_topology};
use cellfree::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cellfree",
    about = "Uplink resource-allocation experiments for user-centric cell-free MIMO networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the Monte Carlo experiment and write results.csv / cdf.csv.
    Run(CommonArgs),
    /// Sweep the non-local interference scale over the decentralized modes.
    SweepKappa(SweepArgs),
    /// Print per-mode computation and information-exchange estimates.
    Overhead(OverheadArgs),
    /// Run two or more modes and print pairwise mean sum-SE deltas.
    Compare(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Modes to run (repeatable); overrides the config.
    #[arg(long = "mode", value_name = "MODE")]
    modes: Vec<String>,
    /// Number of random topologies.
    #[arg(long)]
    topologies: Option<usize>,
    /// Timeslots per topology.
    #[arg(long)]
    timeslots: Option<usize>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// User densities per km^2 (repeatable).
    #[arg(long = "density", value_name = "D")]
    densities: Vec<f64>,
    /// APs per virtual cell (repeatable).
    #[arg(long = "aps-per-cell", value_name = "A")]
    aps_per_cell: Vec<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// kappa values (repeatable); overrides the config.
    #[arg(long = "kappa", value_name = "K")]
    kappas: Vec<f64>,
}

#[derive(Args)]
struct OverheadArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100.0)]
    density: f64,
    #[arg(long = "aps-per-cell", default_value_t = 4)]
    aps_per_cell: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration count used for exchange accounting (default: fp_max_iters).
    #[arg(long)]
    iters: Option<usize>,
}

fn load_or_default(config: &Option<PathBuf>) -> Result<(ExperimentSpec, SimConfig)> {
    match config {
        Some(path) => load_config(path),
        None => Ok((ExperimentSpec::default(), SimConfig::default())),
    }
}

fn apply_overrides(
    spec: &mut ExperimentSpec,
    cfg: &mut SimConfig,
    args: &CommonArgs,
) -> Result<()> {
    if !args.modes.is_empty() {
        spec.modes = args
            .modes
            .iter()
            .map(|s| s.parse::<Mode>())
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(t) = args.topologies {
        spec.n_topologies = t;
    }
    if let Some(t) = args.timeslots {
        spec.n_timeslots = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(out) = &args.out {
        spec.out_dir = Some(out.clone());
    }
    if !args.densities.is_empty() {
        spec.densities = args.densities.clone();
    }
    if !args.aps_per_cell.is_empty() {
        spec.aps_per_cell = args.aps_per_cell.clone();
    }
    spec.validate()?;
    cfg.validate()?;
    Ok(())
}

fn print_summary(result: &AggregateResult) {
    for cell in &result.cells {
        println!(
            "mode={} density={} aps={} kappa={} slots={} mean_sum_se={:.4} stderr={:.4} mean_jain={:.4}",
            cell.mode,
            cell.density,
            cell.aps_per_cell * DEFAULT_N_CELLS,
            cell.kappa,
            cell.records.len(),
            cell.mean_sum_se,
            cell.stderr_sum_se,
            cell.mean_jain,
        );
    }
}

fn write_outputs(result: &AggregateResult, spec: &ExperimentSpec) -> Result<()> {
    let dir = spec.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("results.csv");
    let cdf = dir.join("cdf.csv");
    emit_csv(result, &csv)?;
    emit_cdf(result, &cdf)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", cdf.display());
    Ok(())
}

fn cmd_run(args: &CommonArgs) -> Result<()> {
    let (mut spec, mut cfg) = load_or_default(&args.config)?;
    apply_overrides(&mut spec, &mut cfg, args)?;
    let result = run_experiment(&spec, &cfg)?;
    print_summary(&result);
    write_outputs(&result, &spec)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let (mut spec, mut cfg) = load_or_default(&args.common.config)?;
    if args.common.modes.is_empty() {
        spec.modes = vec![Mode::DistDecentralized, Mode::SemiDecentralized];
    }
    apply_overrides(&mut spec, &mut cfg, &args.common)?;
    if !args.kappas.is_empty() {
        spec.kappas = args.kappas.clone();
    }
    let result = sweep_kappa(&spec, &cfg)?;
    print_summary(&result);
    write_outputs(&result, &spec)
}

fn cmd_overhead(args: &OverheadArgs) -> Result<()> {
    let (_, mut cfg) = load_or_default(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let mut topo = generate_topology(
        DEFAULT_N_CELLS,
        DEFAULT_CELL_RADIUS_KM,
        args.aps_per_cell,
        args.density,
        cfg.seed,
    )?;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed ^ 0x5eed);
    let ls = cellfree::channel::draw_large_scale(&topo, &cfg, &mut rng);
    build_clusters(&mut topo, &ls, cfg.rho_km);
    let n_iter = args.iters.unwrap_or(cfg.fp_max_iters);
    println!(
        "topology: {} APs, {} users, {} CPUs, n_iter={}",
        topo.n_aps(),
        topo.n_users(),
        topo.n_cpus,
        n_iter
    );
    println!("mode,mean_complexity,info_exchange");
    for mode in Mode::ALL {
        if mode == Mode::RoundRobin {
            continue;
        }
        let rep = estimate_overhead(&topo, &cfg, mode, n_iter);
        println!("{},{:.4e},{:.4e}", mode, rep.mean_complexity, rep.info_exchange);
    }
    Ok(())
}

fn cmd_compare(args: &CommonArgs) -> Result<()> {
    let (mut spec, mut cfg) = load_or_default(&args.config)?;
    apply_overrides(&mut spec, &mut cfg, args)?;
    if spec.modes.len() < 2 {
        return Err(Error::Config("compare needs at least two modes".into()));
    }
    let result = run_experiment(&spec, &cfg)?;
    print_summary(&result);
    for i in 0..spec.modes.len() {
        for j in (i + 1)..spec.modes.len() {
            for cell_a in result.cells.iter().filter(|c| c.mode == spec.modes[i]) {
                let Some(cell_b) = result.cell(
                    spec.modes[j],
                    cell_a.density,
                    cell_a.aps_per_cell,
                    cell_a.kappa,
                ) else {
                    continue;
                };
                let a = cell_a.mean_sum_se;
                let b = cell_b.mean_sum_se;
                let delta = if a != 0.0 { 100.0 * (b - a) / a } else { 0.0 };
                println!(
                    "density={} aps={}: {} {:.4} vs {} {:.4} bits/s/Hz ({:+.2}% vs {})",
                    cell_a.density,
                    cell_a.aps_per_cell * DEFAULT_N_CELLS,
                    spec.modes[i],
                    a,
                    spec.modes[j],
                    b,
                    delta,
                    spec.modes[i],
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::SweepKappa(args) => cmd_sweep(args),
        Cmd::Overhead(args) => cmd_overhead(args),
        Cmd::Compare(args) => cmd_compare(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config(_) | Error::ConfigParse { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
