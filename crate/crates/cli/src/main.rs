//! `occprior` command-line tool: dataset generation, training, inference,
//! baselines, leave-one-out evaluation and heatmap rendering.

use std::fs::File;
use std::io::BufWriter;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use occprior::io::{load_map, load_occupancy, load_theta, save_occupancy, save_theta};
use occprior::render::save_pgm;
use occprior::synth::MANIFEST_NAME;
use occprior::{
    baseline_class_prior, baseline_uniform, baseline_uniform_walkable, build_dataset, initial_model, iocmm_infer,
    leave_one_out, load_dataset, train_iocmm, EndpointStrategy, EvalConfig, Exec, GeneratorSpec, IocmmHyper, Manifest,
    Method,
};

#[derive(Parser)]
#[command(
    name = "occprior",
    version,
    about = "Occupancy priors for walking pedestrians on semantic grid maps"
)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with oracle demonstrations.
    Gen(GenArgs),
    /// Learn class costs from a dataset.
    Train(TrainArgs),
    /// Predict occupancy on a map with a trained model.
    Infer(InferArgs),
    /// Predict occupancy with a baseline.
    Baseline(BaselineArgs),
    /// Leave-one-out evaluation, one CSV row per map and method.
    Eval(EvalArgs),
    /// Render an occupancy grid as a PGM image.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    maps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
    /// Demonstrations per map.
    #[arg(long, default_value_t = 30)]
    trajs: usize,
    #[arg(long, default_value_t = 1)]
    roads: usize,
    #[arg(long, default_value_t = 0.3)]
    obstacle_density: f64,
}

#[derive(Args, Clone)]
struct HyperArgs {
    /// Trajectories per map in a batch.
    #[arg(long, default_value_t = 10)]
    bt: usize,
    /// Maps per batch.
    #[arg(long, default_value_t = 7)]
    bm: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    r0: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
    #[arg(long, default_value_t = 8)]
    rollouts: usize,
    #[arg(long, default_value_t = 300.0)]
    cost_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl HyperArgs {
    fn hyper(&self, exec: Exec) -> IocmmHyper {
        IocmmHyper {
            traj_batch: self.bt,
            map_batch: self.bm,
            alpha: self.alpha,
            lambda: self.lambda,
            r0: self.r0,
            epsilon: self.eps,
            max_iters: self.max_iters,
            rollouts_per_traj: self.rollouts,
            cost_scale: self.cost_scale,
            seed: self.seed,
            exec,
            ..IocmmHyper::u4()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    ntraj: usize,
    #[arg(long, default_value = "learned")]
    strategy: EndpointStrategy,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 300.0)]
    cost_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Uniform,
    Walkable,
    Classprior,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    kind: BaselineKind,
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Training manifest, required for `classprior`.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Methods to score; repeat or comma-separate. Defaults to all.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    ntraj: usize,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    occ: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Draw unwalkable cells of this map in mid-gray.
    #[arg(long)]
    map: Option<PathBuf>,
}

type CmdResult = Result<(), Box<dyn std::error::Error>>;

fn manifest_at(path: &Path) -> occprior::Result<Manifest> {
    if path.is_dir() {
        Manifest::load(path.join(MANIFEST_NAME))
    } else {
        Manifest::load(path)
    }
}

fn gen(args: GenArgs) -> CmdResult {
    let spec = GeneratorSpec {
        width: args.width,
        height: args.height,
        seed: args.seed,
        road_count: args.roads,
        obstacle_density: args.obstacle_density,
        trajectories_per_map: args.trajs,
        ..GeneratorSpec::default()
    };
    build_dataset(args.maps, &spec, &args.out)?;
    println!("{}", args.out.join(MANIFEST_NAME).display());
    Ok(())
}

fn train(args: TrainArgs, exec: Exec) -> CmdResult {
    let data = load_dataset(&manifest_at(&args.data)?)?;
    let hyper = args.hyper.hyper(exec);
    hyper.validate()?;
    if hyper.lambda == 0.0 {
        log::warn!("lambda is 0: no learning, weights stay at their initial values");
    }
    let trained = train_iocmm(&data, &hyper, initial_model(&data, &hyper)?)?;
    save_theta(&trained.model, &args.out)?;
    let log = &trained.log;
    println!(
        "iterations: {} ({})",
        log.iterations.len(),
        if log.converged { "converged" } else { "not converged" }
    );
    println!("final gradient norm: {:.3e}", log.final_grad_norm().unwrap_or(f64::NAN));
    for (name, t) in trained.model.classes().iter().zip(trained.model.theta()) {
        println!("theta[{name}] = {t:.6}");
    }
    Ok(())
}

fn infer(args: InferArgs, exec: Exec) -> CmdResult {
    let map = load_map(&args.map)?;
    let model = load_theta(&args.model)?;
    let hyper = IocmmHyper {
        alpha: args.alpha,
        r0: model.r0(),
        cost_scale: args.cost_scale,
        seed: args.seed,
        exec,
        ..IocmmHyper::u4()
    };
    let result = iocmm_infer(&map, &model, &hyper, args.strategy, args.tau, args.ntraj)?;
    save_occupancy(&result.occ, &args.out)?;
    Ok(())
}

fn baseline(args: BaselineArgs) -> CmdResult {
    let map = load_map(&args.map)?;
    let occ = match args.kind {
        BaselineKind::Uniform => baseline_uniform(&map),
        BaselineKind::Walkable => baseline_uniform_walkable(&map)?,
        BaselineKind::Classprior => {
            let data = args.data.ok_or("--data is required for the class prior")?;
            baseline_class_prior(&load_dataset(&manifest_at(&data)?)?, &map)?
        }
    };
    save_occupancy(&occ, &args.out)?;
    Ok(())
}

fn eval(args: EvalArgs, exec: Exec) -> CmdResult {
    let data = load_dataset(&manifest_at(&args.data)?)?;
    let cfg = EvalConfig {
        hyper: args.hyper.hyper(exec),
        methods: if args.method.is_empty() {
            Method::ALL.to_vec()
        } else {
            args.method
        },
        n_traj: args.ntraj,
        tau: args.tau,
        exec,
        ..EvalConfig::default()
    };
    let report = leave_one_out(&data, &cfg)?;
    let file = File::create(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    report.write_csv(BufWriter::new(file))?;
    print!("{}", report.summary_text());
    Ok(())
}

fn render(args: RenderArgs) -> CmdResult {
    let occ = load_occupancy(&args.occ)?;
    let map = args.map.as_deref().map(load_map).transpose()?;
    save_pgm(&occ, map.as_ref(), &args.out)?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a, exec),
        Command::Infer(a) => infer(a, exec),
        Command::Baseline(a) => baseline(a),
        Command::Eval(a) => eval(a, exec),
        Command::Render(a) => render(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match panic::catch_unwind(AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("internal error");
            ExitCode::from(2)
        }
    }
}
