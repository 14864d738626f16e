use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rnss::arith::{add, Dealer, Simulator};
use rnss::experiment::{
    accuracy_sweep, kalman_rows, kalman_simulated, kalman_tcp, log_spaced, mi_sweep, to_csv,
    write_atomic, AccuracyConfig, CsvRow, MiSweepConfig,
};
use rnss::kalman::PrivateSession;
use rnss::runtime::{run_tcp_party, RunConfig, TcpOptions};
use rnss::{grid_points, recon, share, EvaluationDomain, Execution, ShareSet, SharingParams};

#[derive(Parser)]
#[command(
    name = "rnss",
    version,
    about = "Secret sharing over the reals: experiments and demos"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruction error of recon, add, mult and inv across noise variances.
    Accuracy(AccuracyArgs),
    /// Empirical mutual information against the closed-form bounds.
    Mi(MiArgs),
    /// Private Kalman filter against the plain filter.
    Kalman(KalmanArgs),
    /// One-shot operations on the simulated engine.
    Demo {
        #[command(subcommand)]
        op: DemoOp,
    },
    /// Runs a single party of a TCP Kalman session.
    Serve(ServeArgs),
}

#[derive(Args, Clone)]
struct DomainArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    /// `grid` or a comma list of distinct nonzero points.
    #[arg(long)]
    points: Option<String>,
}

#[derive(Args)]
struct AccuracyArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// Comma list, or `start:stop:count` for a log-spaced sweep.
    #[arg(long = "sigma2-y")]
    sigma2_y: Option<String>,
    #[arg(long = "sigma2-r")]
    sigma2_r: Option<f64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct MiArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long = "sigma2-y")]
    sigma2_y: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Sim,
    Tcp,
}

#[derive(Args)]
struct KalmanArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Transport::Sim)]
    transport: Transport,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long = "sigma2-y")]
    sigma2_y: Option<f64>,
    #[arg(long = "sigma2-r")]
    sigma2_r: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    party: usize,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct DemoArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long = "sigma2-y", default_value_t = 1000.0)]
    sigma2_y: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum DemoOp {
    /// Shares a secret and prints every party's share.
    Share {
        secret: f64,
        #[command(flatten)]
        common: DemoArgs,
    },
    /// Reconstructs from a comma list of shares, one per party.
    Recon {
        shares: String,
        #[command(flatten)]
        common: DemoArgs,
    },
    Add {
        a: f64,
        b: f64,
        #[command(flatten)]
        common: DemoArgs,
    },
    Mult {
        a: f64,
        b: f64,
        #[command(flatten)]
        common: DemoArgs,
    },
    Inv {
        a: f64,
        #[command(flatten)]
        common: DemoArgs,
    },
}

fn parse_list(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("'{s}' is not a number"))
        })
        .collect()
}

fn parse_points(
    domain: &DomainArgs,
    default_n: usize,
    default_t: usize,
) -> anyhow::Result<(usize, usize, Option<Vec<f64>>)> {
    let points = match domain.points.as_deref() {
        None | Some("grid") => None,
        Some(list) => Some(parse_list(list).map_err(config_error)?),
    };
    let n = match (&points, domain.n) {
        (Some(p), Some(n)) if p.len() != n => {
            return Err(config_error(anyhow!(
                "--n {n} but {} points given",
                p.len()
            )));
        }
        (Some(p), _) => p.len(),
        (None, n) => n.unwrap_or(default_n),
    };
    Ok((n, domain.t.unwrap_or(default_t), points))
}

fn parse_sigma_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let start: f64 = start.trim().parse().context("bad start")?;
            let stop: f64 = stop.trim().parse().context("bad stop")?;
            let count: usize = count.trim().parse().context("bad count")?;
            Ok(log_spaced(start, stop, count)?)
        }
        [_] => parse_list(text),
        _ => bail!("expected a comma list or start:stop:count"),
    }
}

fn config_error(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(rnss::Error::Config(format!("{e:#}")))
}

fn emit<T: CsvRow>(rows: &[T], out: Option<&Path>) -> anyhow::Result<()> {
    let csv = to_csv(rows);
    match out {
        Some(path) => {
            write_atomic(path, &csv).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::available()
            .pop()
            .unwrap_or(Execution::Sequential)
    }
}

fn run_accuracy(args: AccuracyArgs) -> anyhow::Result<()> {
    let defaults = AccuracyConfig::default();
    let (n, t, points) = parse_points(&args.domain, defaults.n, defaults.t)?;
    let sigma2_y = match &args.sigma2_y {
        Some(s) => parse_sigma_grid(s).map_err(config_error)?,
        None => defaults.sigma2_y.clone(),
    };
    let cfg = AccuracyConfig {
        n,
        t,
        points,
        sigma2_y,
        sigma2_r: args.sigma2_r,
        trials: args.trials,
        seed: args.seed,
        ..defaults
    };
    let rows = accuracy_sweep(&cfg, execution(args.sequential))?;
    emit(&rows, args.out.as_deref())
}

fn run_mi(args: MiArgs) -> anyhow::Result<()> {
    let defaults = MiSweepConfig::default();
    let (n, t, points) = parse_points(&args.domain, defaults.n, defaults.t)?;
    let sigma2_y = match &args.sigma2_y {
        Some(s) => parse_sigma_grid(s).map_err(config_error)?,
        None => defaults.sigma2_y.clone(),
    };
    let cfg = MiSweepConfig {
        n,
        t,
        points,
        sigma2_y,
        samples: args.samples,
        seed: args.seed,
        ..defaults
    };
    let rows = mi_sweep(&cfg, execution(args.sequential))?;
    emit(&rows, args.out.as_deref())
}

fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    match path {
        Some(p) => Ok(RunConfig::from_file(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn run_kalman(args: KalmanArgs) -> anyhow::Result<()> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(steps) = args.steps {
        config.steps = steps;
    }
    if let Some(v) = args.sigma2_y {
        config.sigma2_y = v;
    }
    if args.sigma2_r.is_some() {
        config.sigma2_r = args.sigma2_r;
    }
    config.validate()?;
    let rows = match args.transport {
        Transport::Sim => kalman_simulated(&config)?,
        Transport::Tcp => kalman_tcp(&config)?,
    };
    emit(&rows, args.out.as_deref())
}

fn run_serve(args: ServeArgs) -> anyhow::Result<()> {
    let config = RunConfig::from_file(&args.config)?;
    if config.listen.len() != config.n {
        return Err(rnss::Error::Config(format!(
            "serve needs {} listen addresses, config has {}",
            config.n,
            config.listen.len()
        ))
        .into());
    }
    if args.party >= config.n {
        return Err(rnss::Error::Config(format!(
            "party {} out of range for n = {}",
            args.party, config.n
        ))
        .into());
    }
    let session = PrivateSession::prepare(&config)?;
    let listener = TcpListener::bind(config.listen[args.party])
        .with_context(|| format!("binding {}", config.listen[args.party]))?;
    let mut options = TcpOptions::new(config.seed, config.hash());
    options.timeout = config.timeout;
    let (records, _, _) = run_tcp_party(
        session.domain(),
        args.party,
        listener,
        &config.listen,
        options,
        |p| session.run_party(p),
    )?;
    let rows = kalman_rows(&session, &records)?;
    emit(&rows, args.out.as_deref())
}

fn demo_domain(common: &DemoArgs) -> anyhow::Result<Arc<EvaluationDomain>> {
    let (n, t, points) = parse_points(&common.domain, 3, 1)?;
    let points = points.unwrap_or_else(|| grid_points(n));
    Ok(Arc::new(EvaluationDomain::new(points, t)?))
}

fn print_shares(label: &str, shares: &ShareSet) {
    let domain = shares.domain();
    for (i, v) in shares.iter() {
        println!("{label}[{i}] @ {:?} = {v:?}", domain.point(i));
    }
}

fn run_demo(op: DemoOp) -> anyhow::Result<()> {
    match op {
        DemoOp::Share { secret, common } => {
            let domain = demo_domain(&common)?;
            let (x, _) = share(
                secret,
                &domain,
                &SharingParams::new(0.0, common.sigma2_y, common.seed)?,
            )?;
            print_shares("share", &x);
        }
        DemoOp::Recon { shares, common } => {
            let domain = demo_domain(&common)?;
            let values = parse_list(&shares).map_err(config_error)?;
            let x = ShareSet::from_values(domain, values)?;
            println!("secret = {:?}", recon(&x)?);
        }
        DemoOp::Add { a, b, common } => {
            let domain = demo_domain(&common)?;
            let x = share(
                a,
                &domain,
                &SharingParams::new(0.0, common.sigma2_y, common.seed)?,
            )?
            .0;
            let y = share(
                b,
                &domain,
                &SharingParams::new(0.0, common.sigma2_y, common.seed ^ 1)?,
            )?
            .0;
            let z = add(&x, &y)?;
            print_shares("sum", &z);
            println!("opened = {:?}", recon(&z)?);
            println!("io = 0");
        }
        DemoOp::Mult { a, b, common } => {
            let domain = demo_domain(&common)?;
            let params = SharingParams::new(0.0, common.sigma2_y, common.seed)?;
            let x = share(a, &domain, &params)?.0;
            let y = share(
                b,
                &domain,
                &SharingParams::new(0.0, common.sigma2_y, common.seed ^ 1)?,
            )?
            .0;
            let mut dealer = Dealer::new(domain.clone(), &params)?;
            let mut sim = Simulator::new(domain.clone(), common.seed)?;
            let (z, opened) = sim.mult(&x, &y, &dealer.triple()?)?;
            println!("d = {:?}", opened.d);
            println!("e = {:?}", opened.e);
            print_shares("product", &z);
            println!("opened = {:?}", sim.open(&z)?);
            println!("io = {}", sim.io().opens());
        }
        DemoOp::Inv { a, common } => {
            let domain = demo_domain(&common)?;
            let params = SharingParams::new(0.0, common.sigma2_y, common.seed)?;
            let x = share(a, &domain, &params)?.0;
            let mut dealer = Dealer::new(domain.clone(), &params)?;
            let mut sim = Simulator::new(domain.clone(), common.seed)?;
            let (r, _) = sim.joint_random(common.sigma2_y, 0.0, common.sigma2_y)?;
            let (z, opened) = sim.inv(&x, &r, &dealer.triple()?)?;
            println!("d = {:?}", opened.d);
            println!("e = {:?}", opened.e);
            if let Some(sr) = opened.sr {
                println!("sr = {sr:?}");
            }
            print_shares("inverse", &z);
            println!("opened = {:?}", sim.open(&z)?);
            println!("io = {}", sim.io().opens());
        }
    }
    Ok(())
}

/// 2 for protocol failures, 3 for bad configuration, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<rnss::Error>().map(rnss::Error::root) {
        Some(rnss::Error::ProtocolAbort { .. } | rnss::Error::ConfigMismatch { .. }) => 2,
        Some(
            rnss::Error::Config(_) | rnss::Error::InvalidDomain(_) | rnss::Error::InvalidParams(_),
        ) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Accuracy(a) => run_accuracy(a),
        Command::Mi(a) => run_mi(a),
        Command::Kalman(a) => run_kalman(a),
        Command::Demo { op } => run_demo(op),
        Command::Serve(a) => run_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
