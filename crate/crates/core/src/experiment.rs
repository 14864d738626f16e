//! Reproducible experiments behind the command-line tool: accuracy and
//! leakage sweeps over the noise variance, and the private Kalman run.
//! Results are plain rows with a fixed CSV rendering.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::arith::{add, Dealer, Simulator};
use crate::domain::{grid_points, EvaluationDomain, SharingParams};
use crate::error::{Error, Result};
use crate::kalman::{PrivateSession, StepRecord};
use crate::par::Execution;
use crate::privacy::{empirical_mi, Quantity, SampleSpec, WorstCaseSearch};
use crate::runtime::{run_simulated, run_tcp, RunConfig, SimOptions, TcpOptions};
use crate::sharing::{recon, share};

/// `1, 21, 41, ..., 981`.
pub fn default_sigma_grid() -> Vec<f64> {
    (0..50).map(|k| 1.0 + 20.0 * k as f64).collect()
}

/// `count` values spaced evenly in log scale from `start` to `stop`.
pub fn log_spaced(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > 0.0) || count == 0 {
        return Err(Error::Config(
            "log spacing needs positive bounds and a nonzero count".into(),
        ));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = (start.ln(), stop.ln());
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                stop
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Median of a non-empty list; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn derived_seed(seed: u64, label: &str) -> u64 {
    crate::rng::stream(seed, crate::rng::HARNESS, label).random()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Recon,
    Add,
    Mult,
    Inv,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Recon, Op::Add, Op::Mult, Op::Inv];

    pub fn name(self) -> &'static str {
        match self {
            Op::Recon => "recon",
            Op::Add => "add",
            Op::Mult => "mult",
            Op::Inv => "inv",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AccuracyConfig {
    pub n: usize,
    pub t: usize,
    pub points: Option<Vec<f64>>,
    pub sigma2_y: Vec<f64>,
    /// Mask variance for triples and joint randomness; `None` follows `sigma2_y`.
    pub sigma2_r: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub secrets: (f64, f64),
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        Self {
            n: 11,
            t: 5,
            points: None,
            sigma2_y: default_sigma_grid(),
            sigma2_r: None,
            trials: 100,
            seed: 0,
            secrets: (5.5, 34.7),
        }
    }
}

fn domain_for(n: usize, t: usize, points: &Option<Vec<f64>>) -> Result<Arc<EvaluationDomain>> {
    let points = points.clone().unwrap_or_else(|| grid_points(n));
    if points.len() != n {
        return Err(Error::Config(format!(
            "n = {n} but {} points given",
            points.len()
        )));
    }
    Ok(Arc::new(EvaluationDomain::new(points, t)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub sigma2_y: f64,
    pub op: Op,
    pub rse_median: f64,
    pub rse_max: f64,
    pub trials: usize,
}

fn accuracy_trial(
    domain: &Arc<EvaluationDomain>,
    cfg: &AccuracyConfig,
    sigma2_y: f64,
    seed: u64,
) -> Result<[f64; 4]> {
    let (s1, s2) = cfg.secrets;
    let mask = cfg.sigma2_r.unwrap_or(sigma2_y);
    let params = |label: &str| SharingParams::new(0.0, sigma2_y, derived_seed(seed, label));
    let (x1, _) = share(s1, domain, &params("s1")?)?;
    let (x2, _) = share(s2, domain, &params("s2")?)?;
    let mut dealer = Dealer::with_mask_variance(domain.clone(), &params("dealer")?, mask)?;
    let mut sim = Simulator::new(domain.clone(), derived_seed(seed, "parties"))?;

    let recon_err = (recon(&x1)? - s1).abs();
    let add_err = (recon(&add(&x1, &x2)?)? - (s1 + s2)).abs();
    let (prod, _) = sim.mult(&x1, &x2, &dealer.triple()?)?;
    let mult_err = (recon(&prod)? - s1 * s2).abs();
    let (r, _) = sim.joint_random(mask, 0.0, sigma2_y)?;
    let (inverse, _) = sim.inv(&x1, &r, &dealer.triple()?)?;
    let inv_err = (recon(&inverse)? - 1.0 / s1).abs();
    Ok([recon_err, add_err, mult_err, inv_err])
}

/// Root square error of `recon`, `add`, `mult` and `inv` on the two secrets,
/// summarised over independent trials at every noise variance.
pub fn accuracy_sweep(cfg: &AccuracyConfig, exec: Execution) -> Result<Vec<AccuracyRow>> {
    if cfg.trials == 0 || cfg.sigma2_y.is_empty() {
        return Err(Error::Config(
            "need at least one trial and one variance".into(),
        ));
    }
    let domain = domain_for(cfg.n, cfg.t, &cfg.points)?;
    let jobs = cfg.sigma2_y.len() * cfg.trials;
    let results = exec.map_indexed(jobs, |job| {
        let (si, trial) = (job / cfg.trials, job % cfg.trials);
        accuracy_trial(
            &domain,
            cfg,
            cfg.sigma2_y[si],
            derived_seed(cfg.seed, &format!("accuracy/{si}/{trial}")),
        )
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cfg.sigma2_y.len() * 4);
    for (si, &sigma2_y) in cfg.sigma2_y.iter().enumerate() {
        let block = &results[si * cfg.trials..(si + 1) * cfg.trials];
        for (k, op) in Op::ALL.into_iter().enumerate() {
            let errs: Vec<f64> = block.iter().map(|r| r[k]).collect();
            rows.push(AccuracyRow {
                sigma2_y,
                op,
                rse_median: median(&errs),
                rse_max: errs.iter().copied().fold(0.0, f64::max),
                trials: cfg.trials,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct MiSweepConfig {
    pub n: usize,
    pub t: usize,
    pub points: Option<Vec<f64>>,
    pub sigma2_y: Vec<f64>,
    pub sigma2_s: f64,
    pub samples: usize,
    pub seed: u64,
    pub quantities: Vec<Quantity>,
    /// Anchor sets examined per bound before sampling takes over.
    pub max_witnesses: usize,
}

impl Default for MiSweepConfig {
    fn default() -> Self {
        Self {
            n: 11,
            t: 5,
            points: None,
            sigma2_y: default_sigma_grid(),
            sigma2_s: 1.0,
            samples: 100_000,
            seed: 0,
            quantities: vec![
                Quantity::SingleShare,
                Quantity::TShares,
                Quantity::TSharesPlusMask,
            ],
            max_witnesses: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiRow {
    pub sigma2_y: f64,
    pub quantity: Quantity,
    pub mi_estimate_bits: f64,
    /// Largest closed-form bound over anchor sets for the same view.
    pub mi_bound_bits: f64,
    pub samples: usize,
}

/// Plug-in estimate and worst-case bound for each quantity at each
/// variance. Estimates use fresh anchors per sample, as real sharings do.
pub fn mi_sweep(cfg: &MiSweepConfig, exec: Execution) -> Result<Vec<MiRow>> {
    if cfg.sigma2_y.is_empty() || cfg.quantities.is_empty() {
        return Err(Error::Config(
            "need at least one variance and one quantity".into(),
        ));
    }
    let domain = domain_for(cfg.n, cfg.t, &cfg.points)?;
    let mut rows = Vec::new();
    for (si, &sigma2_y) in cfg.sigma2_y.iter().enumerate() {
        for &quantity in &cfg.quantities {
            let mut spec = SampleSpec::new(domain.clone(), sigma2_y, quantity);
            spec.sigma2_s = cfg.sigma2_s;
            spec.samples = cfg.samples;
            spec.seed = derived_seed(cfg.seed, &format!("mi/{si}/{}", quantity.name()));
            let est = empirical_mi(&spec, exec)?;
            let mut search = WorstCaseSearch::new(domain.clone(), sigma2_y, cfg.sigma2_s, quantity);
            search.observed = Some(spec.observed.clone());
            search.max_witnesses = cfg.max_witnesses;
            search.seed = spec.seed;
            let bound = search.run(exec)?;
            rows.push(MiRow {
                sigma2_y,
                quantity,
                mi_estimate_bits: est.bits,
                mi_bound_bits: bound.bits,
                samples: cfg.samples,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanRow {
    pub k: usize,
    pub rse: f64,
    pub io_cumulative: u64,
}

/// Rows from one party's revealed estimates.
pub fn kalman_rows(session: &PrivateSession, records: &[StepRecord]) -> Result<Vec<KalmanRow>> {
    let rse = session.rse(records)?;
    Ok(records
        .iter()
        .zip(rse)
        .map(|(r, rse)| KalmanRow {
            k: r.k,
            rse,
            io_cumulative: r.io_cumulative,
        })
        .collect())
}

fn agreed_rows(session: &PrivateSession, outputs: &[Vec<StepRecord>]) -> Result<Vec<KalmanRow>> {
    if outputs.iter().any(|o| o != &outputs[0]) {
        return Err(Error::Config("parties revealed different estimates".into()));
    }
    kalman_rows(session, &outputs[0])
}

/// The private Kalman run with every party in this process.
pub fn kalman_simulated(config: &RunConfig) -> Result<Vec<KalmanRow>> {
    let session = PrivateSession::prepare(config)?;
    let mut opts = SimOptions::new(config.seed);
    opts.timeout = config.timeout;
    let run = run_simulated(session.domain(), opts, |p| session.run_party(p))?;
    agreed_rows(&session, &run.outputs)
}

/// The private Kalman run over localhost TCP, one thread per party. Uses
/// the configured listen addresses, or free ports when none are set.
pub fn kalman_tcp(config: &RunConfig) -> Result<Vec<KalmanRow>> {
    let session = PrivateSession::prepare(config)?;
    let listen: Vec<SocketAddr> = if config.listen.is_empty() {
        vec![SocketAddr::from(([127, 0, 0, 1], 0)); config.n]
    } else {
        config.listen.clone()
    };
    let mut opts = TcpOptions::new(config.seed, config.hash());
    opts.timeout = config.timeout;
    let run = run_tcp(session.domain(), &listen, opts, |p| session.run_party(p))?;
    agreed_rows(&session, &run.outputs)
}

/// Rows with a fixed CSV layout.
pub trait CsvRow {
    const HEADER: &'static str;
    fn write_line(&self, out: &mut String);
}

impl CsvRow for AccuracyRow {
    const HEADER: &'static str = "sigma2_y,op,rse_median,rse_max,trials";
    fn write_line(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{:?},{},{:?},{:?},{}",
            self.sigma2_y,
            self.op.name(),
            self.rse_median,
            self.rse_max,
            self.trials
        );
    }
}

impl CsvRow for MiRow {
    const HEADER: &'static str = "sigma2_y,quantity,mi_estimate_bits,mi_bound_bits,N";
    fn write_line(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{:?},{},{:?},{:?},{}",
            self.sigma2_y,
            self.quantity.name(),
            self.mi_estimate_bits,
            self.mi_bound_bits,
            self.samples
        );
    }
}

impl CsvRow for KalmanRow {
    const HEADER: &'static str = "k,rse,io_cumulative";
    fn write_line(&self, out: &mut String) {
        let _ = writeln!(out, "{},{:?},{}", self.k, self.rse, self.io_cumulative);
    }
}

/// Renders rows with a header line. Reals use the shortest representation
/// that reads back to the same double.
pub fn to_csv<T: CsvRow>(rows: &[T]) -> String {
    let mut out = String::from(T::HEADER);
    out.push('\n');
    for r in rows {
        r.write_line(&mut out);
    }
    out
}

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}
