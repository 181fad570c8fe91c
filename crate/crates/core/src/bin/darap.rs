use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use darap::darap::{deform, retarget_lambda, DeformConfig};
use darap::io::{load_mask, load_normals, save_normals, save_rotations};
use darap::mesh::{load_obj, save_obj, validate, Mesh};
use darap::ops::{build_operators, Pin, SurfaceOperators};
use darap::style::{
    cubify_targets, optimize, trace_csv, External, GuidanceSchedule, GuidanceSource, NormalMatch, OptimizeConfig,
    VertexMatch,
};
use darap::{metrics, Error};

#[derive(Parser)]
#[command(name = "darap", version, about = "Normal-driven as-rigid-as-possible mesh deformation")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deform a mesh towards per-vertex target normals.
    Deform(DeformArgs),
    /// Optimize target normals against a guidance source.
    Stylize(StylizeArgs),
    /// Re-apply saved target normals with another strength.
    Retarget(DeformArgs),
    /// Evaluation metrics.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Time the local step and both Poisson solves.
    Bench(BenchArgs),
    /// Print a validation report.
    Check(CheckArgs),
}

#[derive(Args)]
struct DeformArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// CSV with one `nx,ny,nz` row per vertex.
    #[arg(long)]
    normals: PathBuf,
    #[arg(long, default_value_t = 8.0)]
    lambda: f64,
    #[arg(long)]
    out: PathBuf,
    /// One 0/1 per vertex; 0 keeps the identity rotation.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    no_restore_bbox: bool,
    /// Also write the rotation field (9 values per row).
    #[arg(long)]
    rotations: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Driver {
    Cubify,
    Field,
    VertexMatch,
    External,
}

#[derive(Args)]
struct StylizeArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, value_enum, default_value_t = Driver::Cubify)]
    driver: Driver,
    /// Shell command speaking the guidance protocol (external driver).
    #[arg(long)]
    external_cmd: Option<String>,
    /// Seconds to wait for each guidance reply.
    #[arg(long, default_value_t = 120.0)]
    timeout: f64,
    /// Target normals CSV (field driver).
    #[arg(long)]
    target_normals: Option<PathBuf>,
    /// Target OBJ with the same vertex order (vertex-match driver).
    #[arg(long)]
    target_mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 8.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.002)]
    lr: f64,
    #[arg(long, default_value_t = 2500)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    updates_per_epoch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    no_restore_bbox: bool,
    #[arg(long)]
    save_normals: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// Per-face deformed/source area ratio statistics.
    AreaRatio(AreaRatioArgs),
}

#[derive(Args)]
struct AreaRatioArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    deformed: PathBuf,
    #[arg(long, default_value_t = metrics::DEFAULT_BINS)]
    bins: usize,
    /// Print the stats row and histogram as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the report as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Print issues as CSV.
    #[arg(long)]
    csv: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::InvalidMesh(_)
        | Error::NonManifold(_)
        | Error::InvalidInput(_)
        | Error::ShapeMismatch { .. } => 2,
        Error::Factorization(_) | Error::Numerical(_) => 3,
        Error::Guidance { .. } | Error::Protocol(_) => 4,
    }
}

fn operators(mesh: &Mesh) -> darap::Result<SurfaceOperators> {
    build_operators(mesh, Pin::First)
}

fn write_text(path: &Path, text: &str) -> darap::Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_deform(args: &DeformArgs, retarget: bool) -> darap::Result<()> {
    let mesh = load_obj(&args.mesh)?;
    let ops = operators(&mesh)?;
    let targets = load_normals(&args.normals, mesh.n_vertices())?;
    let config = DeformConfig {
        lambda: args.lambda,
        mask: args.mask.as_ref().map(|p| load_mask(p, mesh.n_vertices())).transpose()?,
        centroid_target: None,
        restore_bbox: !args.no_restore_bbox,
    };
    let out = if retarget && args.rotations.is_none() {
        retarget_lambda(&ops, &targets, args.lambda, &config)?
    } else {
        let (out, rotations) = deform(&ops, &targets, &config)?;
        if let Some(p) = &args.rotations {
            save_rotations(p, &rotations)?;
        }
        out
    };
    save_obj(&out, &args.out)?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

fn run_stylize(args: &StylizeArgs) -> darap::Result<()> {
    let mesh = load_obj(&args.mesh)?;
    let ops = operators(&mesh)?;
    let n = mesh.n_vertices();
    let config = OptimizeConfig {
        lambda: args.lambda,
        learning_rate: args.lr,
        epochs: args.epochs,
        updates_per_epoch: args.updates_per_epoch,
        mask: args.mask.as_ref().map(|p| load_mask(p, n)).transpose()?,
        seed: args.seed,
        restore_bbox: !args.no_restore_bbox,
        ..Default::default()
    };
    let masses = ops.vertex_masses().to_vec();
    let source: Box<dyn GuidanceSource> = match args.driver {
        Driver::Cubify => Box::new(NormalMatch::new(
            "cubify",
            cubify_targets(ops.source_normals()).into_inner(),
            masses,
        )?),
        Driver::Field => {
            let path = args
                .target_normals
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("--driver field needs --target-normals".into()))?;
            let t = load_normals(path, n)?;
            let unit = t
                .values()
                .iter()
                .map(|v| {
                    let len = v.norm();
                    if len > 1e-12 {
                        Ok(v / len)
                    } else {
                        Err(Error::InvalidInput("zero target normal".into()))
                    }
                })
                .collect::<darap::Result<Vec<_>>>()?;
            Box::new(NormalMatch::new("field", unit, masses)?)
        }
        Driver::VertexMatch => {
            let path = args
                .target_mesh
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("--driver vertex-match needs --target-mesh".into()))?;
            let target = load_obj(path)?;
            if target.n_vertices() != n {
                return Err(Error::ShapeMismatch {
                    what: "target mesh vertices",
                    expected: n,
                    actual: target.n_vertices(),
                });
            }
            Box::new(VertexMatch::new("vertex-match", target.vertices().to_vec()))
        }
        Driver::External => {
            let cmd = args
                .external_cmd
                .as_deref()
                .ok_or_else(|| Error::InvalidInput("--driver external needs --external-cmd".into()))?;
            if !(args.timeout > 0.0) {
                return Err(Error::InvalidInput("--timeout must be positive".into()));
            }
            let meta = serde_json::json!({"lambda": args.lambda, "seed": args.seed});
            Box::new(External::spawn(
                "external",
                cmd,
                &mesh,
                meta,
                Duration::from_secs_f64(args.timeout),
            )?)
        }
    };
    let schedule = GuidanceSchedule::uniform(&[source.name()]);
    let mut sources = vec![source];
    let result = optimize(&ops, &mut sources, &config, &schedule)?;
    save_obj(&result.mesh, &args.out)?;
    if let Some(p) = &args.save_normals {
        save_normals(p, result.targets.values())?;
    }
    if let Some(p) = &args.trace {
        write_text(p, &trace_csv(&result.trace))?;
    }
    let losses = result.total_losses();
    println!(
        "initial_loss={:.6e} final_loss={:.6e} epochs={}",
        losses[0],
        losses[losses.len() - 1],
        args.epochs
    );
    Ok(())
}

fn run_area_ratio(args: &AreaRatioArgs) -> darap::Result<()> {
    let source = load_obj(&args.source)?;
    let deformed = load_obj(&args.deformed)?;
    let stats = metrics::area_ratio_stats(&source, &deformed, args.bins)?;
    if args.csv {
        print!("{}", stats.stats_csv());
        print!("{}", stats.histogram_csv());
    } else {
        println!("mean={:.6} std={:.6}", stats.mean, stats.std_dev);
    }
    Ok(())
}

fn run_bench(args: &BenchArgs) -> darap::Result<()> {
    let mesh = load_obj(&args.mesh)?;
    let id = args
        .mesh
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into());
    let report = darap::bench::bench_solves(&id, &mesh, args.repeats, args.seed)?;
    if args.csv {
        print!("{}", report.to_csv());
    } else {
        println!(
            "{}: V={} F={} F/V={:.3} repeats={}",
            report.mesh_id,
            report.n_vertices,
            report.n_faces,
            report.n_faces as f64 / report.n_vertices as f64,
            report.repeats
        );
        for s in &report.stages {
            println!("  {:<13} mean {:.6}s  min {:.6}s  std {:.6}s", s.stage, s.mean_s, s.min_s, s.std_s);
        }
    }
    Ok(())
}

fn run_check(args: &CheckArgs) -> darap::Result<()> {
    let mesh = load_obj(&args.mesh)?;
    let report = validate(&mesh);
    if args.csv {
        print!("{}", report.to_csv());
    } else {
        print!("{report}");
    }
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidMesh(format!("{} issue(s)", report.issues.len())))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Deform(a) => run_deform(a, false),
        Command::Retarget(a) => run_deform(a, true),
        Command::Stylize(a) => run_stylize(a),
        Command::Metrics(MetricsCommand::AreaRatio(a)) => run_area_ratio(a),
        Command::Bench(a) => run_bench(a),
        Command::Check(a) => run_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
