//! Command-line driver: composes mesh generation, partitioning, solvers,
//! transport, NN inference and I/O benchmarks. Exit codes: 0 success,
//! 1 usage error, 2 runtime failure.

use clap::{Args, Parser, Subcommand};
use mcfv::config::{load_config, RunConfig};
use mcfv::fvm::{
    advance_scalar_transport, assemble_laplacian, build_face_schedule, BoundaryCondition,
    CellSource, FaceSchedule, ScalarField, StepReport, TransportConfig,
};
use mcfv::io::{
    build_index, parse_read_strategy, write_collated, write_mesh_collated, DType, Grouped, IoStats,
};
use mcfv::mesh::{
    build_box_mesh, compute_geometry, mesh_to_graph, refine_uniform, refined_cell_count,
    MeshGeometry, UnstructuredMesh,
};
use mcfv::metrics::{aggregate_steps, flops_rate, time_to_solution, write_step_csv};
use mcfv::nn::{load_model, save_model, MlpModel, ScalarSourceModel};
use mcfv::partition::{
    partition_stats, renumber_mesh, two_level_decompose, write_partition, IndexBlocks,
    Partitioner, TwoLevelPartition, PARTITIONERS,
};
use mcfv::sparse::{build_block_map, parse_preconditioner, pcg_solve, refresh_values};
use mcfv::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

#[derive(Parser)]
#[command(name = "mcfv", about = "Many-core finite-volume benchmark driver", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a mesh (plus an initial field) as collated files.
    Generate(GenerateArgs),
    /// Two-level decomposition statistics and export.
    Partition(PartitionArgs),
    /// Assemble an SPD diffusion system and solve it with PCG.
    Solve(SolveArgs),
    /// Implicit scalar transport with optional NN source.
    Simulate(SimulateArgs),
    /// MLP inference throughput and precision comparison.
    InferBench(InferBenchArgs),
    /// Collated-file read strategy benchmark.
    IoBench(IoBenchArgs),
    /// Per-phase breakdown of a simulate run.
    Breakdown(BreakdownArgs),
    /// Strong-scaling sweep over thread counts.
    Scaling(ScalingArgs),
}

/// Flags shared by config-driven subcommands; any flag set here wins over
/// the config file value.
#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mesh dims as nx,ny,nz.
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    refine_levels: Option<u32>,
    #[arg(long)]
    ranks: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    partitioner: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    preconditioner: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Uniform velocity as ux,uy,uz.
    #[arg(long)]
    velocity: Option<String>,
    #[arg(long)]
    diffusivity: Option<f64>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    flow_cycle: Option<f64>,
}

fn parse_triple<T: std::str::FromStr + Copy>(s: &str, what: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("{what} needs three comma-separated values")));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("bad {what} component {p:?}")))?,
        );
    }
    Ok([out[0], out[1], out[2]])
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.mesh {
            cfg.mesh = parse_triple(m, "mesh")?;
        }
        if let Some(v) = &self.velocity {
            cfg.velocity = parse_triple(v, "velocity")?;
        }
        macro_rules! over {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v.into(); })*
            };
        }
        over!(refine_levels, ranks, threads, partitioner, seed, tol, max_iter, preconditioner);
        over!(dt, steps, diffusivity, scheme, precision, activation, flow_cycle);
        if let Some(m) = &self.model {
            cfg.model = Some(m.display().to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Problem {
    mesh: UnstructuredMesh,
    geom: MeshGeometry,
    schedule: FaceSchedule,
    partition: TwoLevelPartition,
}

fn make_partitioner(name: &str) -> Result<Box<dyn Partitioner>> {
    PARTITIONERS.create(name)
}

/// Build, refine, decompose and renumber the configured box mesh.
fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let coarse = build_box_mesh(cfg.mesh[0], cfg.mesh[1], cfg.mesh[2], cfg.lengths)?;
    let cells = refined_cell_count(coarse.n_cells as u64, cfg.refine_levels)?;
    if cells > cfg.cell_budget {
        return Err(Error::MemoryBudgetExceeded {
            cells,
            budget: cfg.cell_budget,
        });
    }
    let mesh0 = refine_uniform(&coarse, cfg.refine_levels)?;
    let partitioner = make_partitioner(&cfg.partitioner)?;
    let partition =
        two_level_decompose(&mesh0, cfg.ranks, cfg.threads, partitioner.as_ref(), cfg.seed)?;
    let mesh = renumber_mesh(&mesh0, &partition);
    let geom = compute_geometry(&mesh)?;
    let schedule = build_face_schedule(&mesh, &partition.part_ranges())?;
    Ok(Problem {
        mesh,
        geom,
        schedule,
        partition,
    })
}

fn initial_field(mesh: &UnstructuredMesh, geom: &MeshGeometry) -> ScalarField {
    let mut field = ScalarField::uniform(mesh, 0.0, BoundaryCondition::ZeroGradient);
    for c in 0..mesh.n_cells {
        let [x, y, z] = geom.cell_centroids[c];
        let r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) + (z - 0.5) * (z - 0.5);
        field.values[c] = (-r2 / 0.05).exp();
    }
    field
}

fn write_report(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| Error::io(p.display().to_string(), e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

// ---- generate ----

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory for mesh.dfc / psi.dfc and their indexes.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let p = build_problem(&cfg)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;

    let mesh_path = args.out.join("mesh.dfc");
    write_mesh_collated(&mesh_path, &p.mesh)?;
    build_index(&mesh_path)?;

    // Initial scalar field, collated per rank over the renumbered cell
    // ordering (rank regions are contiguous after renumbering).
    let field = initial_field(&p.mesh, &p.geom);
    let mut payloads: Vec<Vec<u8>> = Vec::with_capacity(cfg.ranks);
    let ranges = p.partition.part_ranges();
    for r in 0..cfg.ranks {
        let mut bytes = Vec::new();
        for j in 0..cfg.threads {
            for c in ranges[r * cfg.threads + j].clone() {
                bytes.extend_from_slice(&field.values[c].to_le_bytes());
            }
        }
        payloads.push(bytes);
    }
    let psi_path = args.out.join("psi.dfc");
    write_collated(&psi_path, "psi", DType::F64, &payloads)?;
    build_index(&psi_path)?;

    println!(
        "wrote {} ({} cells) and {} ({} ranks)",
        mesh_path.display(),
        p.mesh.n_cells,
        psi_path.display(),
        cfg.ranks
    );
    Ok(())
}

// ---- partition ----

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Optional export path for the per-cell (rank, thread, new index) table.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn cmd_partition(args: &PartitionArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let coarse = build_box_mesh(cfg.mesh[0], cfg.mesh[1], cfg.mesh[2], cfg.lengths)?;
    let mesh = refine_uniform(&coarse, cfg.refine_levels)?;
    let partitioner = make_partitioner(&cfg.partitioner)?;
    let partition =
        two_level_decompose(&mesh, cfg.ranks, cfg.threads, partitioner.as_ref(), cfg.seed)?;
    let parts = partition.n_parts();

    let stats = partition_stats(&mesh, &partition.flat_parts(), parts);
    let naive = IndexBlocks.partition(&mesh_to_graph(&mesh), parts, None, cfg.seed)?;
    let naive_stats = partition_stats(&mesh, &naive, parts);
    let reduction = 1.0 - stats.offdiag_fraction / naive_stats.offdiag_fraction;

    if let Some(out) = &args.out {
        write_partition(out, &partition)?;
    }
    let mut csv = String::from(
        "parts,edge_cut,offdiag_fraction,naive_offdiag_fraction,reduction,balance_max_over_mean\n",
    );
    csv.push_str(&format!(
        "{},{},{:.6},{:.6},{:.4},{:.4}\n",
        parts,
        stats.edge_cut,
        stats.offdiag_fraction,
        naive_stats.offdiag_fraction,
        reduction,
        stats.cells_max as f64 / stats.cells_mean
    ));
    write_report(args.report.as_deref(), &csv)
}

// ---- solve ----

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let p = build_problem(&cfg)?;
    let mut bcs = vec![BoundaryCondition::ZeroGradient; p.mesh.patches.len()];
    bcs[0] = BoundaryCondition::FixedValue(1.0); // pins the SPD system
    let gamma = vec![cfg.diffusivity; p.mesh.n_faces()];
    let (ldu, rhs) = assemble_laplacian(&p.mesh, &p.geom, &gamma, &bcs, &p.schedule)?;

    let (mut mat, map) = build_block_map(&ldu, &p.schedule.ranges)?;
    refresh_values(&ldu, &map, &mut mat)?;
    let precond = parse_preconditioner(&cfg.preconditioner)?;
    let x0 = vec![0.0; p.mesh.n_cells];
    let t0 = Instant::now();
    let res = pcg_solve(&mat, &rhs, &x0, cfg.tol, cfg.max_iter, precond.as_ref())?;
    let seconds = t0.elapsed().as_secs_f64();

    let mut csv = String::from("cells,preconditioner,iterations,converged,final_residual,flops,seconds\n");
    csv.push_str(&format!(
        "{},{},{},{},{:.3e},{},{:.6}\n",
        p.mesh.n_cells,
        precond.name(),
        res.iterations,
        res.converged,
        res.final_residual,
        res.flops,
        seconds
    ));
    write_report(args.report.as_deref(), &csv)?;
    if !res.converged {
        return Err(Error::SolverDiverged(res.iterations));
    }
    Ok(())
}

// ---- simulate / breakdown ----

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Per-step phase CSV output path (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
}

fn run_simulation(cfg: &RunConfig) -> Result<(Problem, Vec<StepReport>)> {
    let p = build_problem(cfg)?;
    let field = initial_field(&p.mesh, &p.geom);
    let tc = TransportConfig {
        dt: cfg.dt,
        steps: cfg.steps,
        velocity: cfg.velocity,
        diffusivity: cfg.diffusivity,
        scheme: cfg.div_scheme(),
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let source: Option<ScalarSourceModel> = match &cfg.model {
        Some(path) => Some(ScalarSourceModel(load_model(
            Path::new(path),
            cfg.nn_activation(),
        )?)),
        None => None,
    };
    let src_ref: Option<&dyn CellSource> = source.as_ref().map(|s| s as &dyn CellSource);
    let (_, reports) = advance_scalar_transport(&p.mesh, &p.geom, &p.schedule, &field, &tc, src_ref)?;
    Ok((p, reports))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let (p, reports) = run_simulation(&cfg)?;
    let mut buf = Vec::new();
    write_step_csv(&mut buf, &reports).map_err(|e| Error::io("report", e))?;
    write_report(args.report.as_deref(), &String::from_utf8(buf).unwrap())?;

    let run = aggregate_steps(&reports, p.mesh.n_cells as u64, cfg.flow_cycle)?;
    eprintln!(
        "cells={} steps={} time_to_solution={:.3e} s/DoF/cycle flops_rate={:.3e} Flop/s",
        p.mesh.n_cells,
        reports.len(),
        time_to_solution(&run)?,
        flops_rate(&run)?
    );
    Ok(())
}

#[derive(Args)]
struct BreakdownArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn cmd_breakdown(args: &BreakdownArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let (_, reports) = run_simulation(&cfg)?;
    let total: f64 = reports
        .iter()
        .map(|r| r.construction_s + r.solving_s + r.dnn_s + r.other_s)
        .sum();
    let mut csv = String::from("phase,seconds,share\n");
    for (name, t) in [
        ("dnn", reports.iter().map(|r| r.dnn_s).sum::<f64>()),
        ("construction", reports.iter().map(|r| r.construction_s).sum()),
        ("solving", reports.iter().map(|r| r.solving_s).sum()),
        ("other", reports.iter().map(|r| r.other_s).sum()),
    ] {
        csv.push_str(&format!("{name},{:.9},{:.4}\n", t, if total > 0.0 { t / total } else { 0.0 }));
    }
    write_report(args.report.as_deref(), &csv)
}

// ---- infer-bench ----

#[derive(Args)]
struct InferBenchArgs {
    /// Saved model; a seeded random model of `--dims` is used if absent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Comma-separated layer widths for the random model.
    #[arg(long, default_value = "20,256,256,17")]
    dims: String,
    #[arg(long, default_value_t = 1024)]
    batch: usize,
    #[arg(long, default_value = "fp32")]
    precision: String,
    #[arg(long, default_value = "table")]
    activation: String,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Save the generated random model here.
    #[arg(long)]
    save: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn cmd_infer_bench(args: &InferBenchArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    cfg.precision = args.precision.clone();
    cfg.activation = args.activation.clone();
    cfg.validate()?;
    if args.batch == 0 || args.repeat == 0 {
        return Err(Error::Config("batch and repeat must be >= 1".into()));
    }
    let model = match &args.model {
        Some(path) => load_model(path, cfg.nn_activation())?,
        None => {
            let dims: Vec<usize> = args
                .dims
                .split(',')
                .map(|d| {
                    d.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad dim {d:?}")))
                })
                .collect::<Result<_>>()?;
            MlpModel::random(&dims, args.seed, cfg.nn_precision(), cfg.nn_activation())?
        }
    };
    if let Some(path) = &args.save {
        save_model(&model, path)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5eed);
    let d0 = model.input_dim();
    let inputs: Vec<f32> = (0..args.batch * d0)
        .map(|i| {
            let f = i % d0;
            model.norm_mean[f] + model.norm_std[f] * rng.gen_range(-1.7320508f32..1.7320508)
        })
        .collect();

    let t0 = Instant::now();
    let mut checksum = 0.0f64;
    for _ in 0..args.repeat {
        let out = model.infer(&inputs)?;
        checksum += out.iter().map(|v| *v as f64).sum::<f64>();
    }
    let seconds = t0.elapsed().as_secs_f64();
    let flops = model.flops_per_sample() * (args.batch * args.repeat) as u64;

    let mut csv = String::from("precision,activation,batch,repeat,flops,seconds,flops_rate,checksum\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{:.6},{:.3e},{:.6e}\n",
        args.precision,
        args.activation,
        args.batch,
        args.repeat,
        flops,
        seconds,
        flops as f64 / seconds.max(1e-12),
        checksum
    ));
    write_report(args.report.as_deref(), &csv)
}

// ---- io-bench ----

#[derive(Args)]
struct IoBenchArgs {
    #[arg(long, default_value_t = 16)]
    ranks: usize,
    /// master | parallel | grouped
    #[arg(long, default_value = "grouped")]
    strategy: String,
    /// Group count for grouped reads; defaults to round(sqrt(P)).
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long, default_value_t = 65536)]
    bytes_per_rank: usize,
    #[arg(long, default_value_t = 0)]
    inject_open_latency_ms: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn cmd_io_bench(args: &IoBenchArgs) -> Result<()> {
    if args.ranks == 0 {
        return Err(Error::Config("ranks must be >= 1".into()));
    }
    let strategy = match (args.strategy.as_str(), args.group_size) {
        ("grouped", Some(g)) => {
            if g == 0 {
                return Err(Error::Config("group size must be >= 1".into()));
            }
            Box::new(Grouped { groups: Some(g) })
        }
        _ => parse_read_strategy(&args.strategy)?,
    };
    let dir = std::env::temp_dir().join(format!("mcfv-iobench-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let path = dir.join("bench.dfc");
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let payloads: Vec<Vec<u8>> = (0..args.ranks)
        .map(|_| (0..args.bytes_per_rank).map(|_| rng.gen()).collect())
        .collect();
    write_collated(&path, "bench", DType::Bytes, &payloads)?;
    let index = build_index(&path)?;

    let stats = IoStats::new(Duration::from_millis(args.inject_open_latency_ms));
    let t0 = Instant::now();
    let got = strategy.read(&path, &index, &stats)?;
    let seconds = t0.elapsed().as_secs_f64();
    if got != payloads {
        return Err(Error::format(path.display().to_string(), "payload mismatch"));
    }

    let mut csv =
        String::from("strategy,ranks,opens,max_concurrent_opens,scattered_bytes,seconds\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{:.6}\n",
        args.strategy,
        args.ranks,
        stats.opens(),
        stats.max_concurrent_opens(),
        stats.scattered_bytes(),
        seconds
    ));
    let _ = std::fs::remove_dir_all(&dir);
    write_report(args.report.as_deref(), &csv)
}

// ---- scaling ----

#[derive(Args)]
struct ScalingArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated thread counts, e.g. 1,2,4.
    #[arg(long, default_value = "1,2,4")]
    thread_list: String,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn cmd_scaling(args: &ScalingArgs) -> Result<()> {
    let base = args.common.resolve()?;
    let threads: Vec<usize> = args
        .thread_list
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad thread count {t:?}")))
        })
        .collect::<Result<_>>()?;
    if threads.is_empty() || threads.contains(&0) {
        return Err(Error::Config("thread list must be non-empty and positive".into()));
    }

    let mut rows: Vec<(usize, u64, f64)> = Vec::new();
    for &t in &threads {
        let mut cfg = base.clone();
        cfg.threads = t;
        let (p, reports) = run_simulation(&cfg)?;
        let run = aggregate_steps(&reports, p.mesh.n_cells as u64, cfg.flow_cycle)?;
        rows.push((t, run.dof, run.loop_time_s));
    }
    // Strong scaling: efficiency normalized to the smallest thread count.
    let &(t0, _, base_time) = rows.iter().min_by_key(|r| r.0).unwrap();
    let mut csv = String::from("threads,dof,loop_time_s,efficiency_pct\n");
    for &(t, dof, time) in &rows {
        let eff = 100.0 * (base_time * t0 as f64) / (time * t as f64);
        csv.push_str(&format!("{t},{dof},{time:.9},{eff:.2}\n"));
    }
    write_report(args.report.as_deref(), &csv)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Partition(a) => cmd_partition(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::InferBench(a) => cmd_infer_bench(a),
        Cmd::IoBench(a) => cmd_io_bench(a),
        Cmd::Breakdown(a) => cmd_breakdown(a),
        Cmd::Scaling(a) => cmd_scaling(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success; bad flags are usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = match e {
            Error::Config(_) | Error::UnknownStrategy { .. } => 1,
            _ => 2,
        };
        std::process::exit(code);
    }
}
