//! Plain-text run configuration shared by every party of a session.
//!
//! ```text
//! # comments start with '#'
//! n = 3
//! t = 1
//! points = grid            # or a comma list: 1, 2, 3
//! sigma2_y = 1000
//! seed = 7
//! listen = 127.0.0.1:7000, 127.0.0.1:7001, 127.0.0.1:7002
//! A = 1, 1; 0, 1           # rows separated by ';', entries by ','
//! ```

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::Path;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::domain::{grid_points, EvaluationDomain};
use crate::error::{Error, Result};
use crate::kalman::KalmanModel;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub t: usize,
    pub points: Vec<f64>,
    pub mu_y: f64,
    pub sigma2_y: f64,
    /// Mask variance for triples and inversion randomness. Defaults to `sigma2_y`.
    pub sigma2_r: Option<f64>,
    pub seed: u64,
    pub listen: Vec<SocketAddr>,
    pub steps: usize,
    pub timeout: Duration,
    pub model: KalmanModel,
    pub x0: DVector<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = KalmanModel::constant_velocity(1.0);
        Self {
            n: 3,
            t: 1,
            points: grid_points(3),
            mu_y: 0.0,
            sigma2_y: 1000.0,
            sigma2_r: None,
            seed: 0,
            listen: Vec::new(),
            steps: 50,
            timeout: Duration::from_secs(30),
            x0: DVector::zeros(model.state_dim()),
            model,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut points: Option<Vec<f64>> = None;
        let mut n_given = false;
        let mut x0_given = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: String| Error::Config(format!("line {}: {key}: {e}", lineno + 1));
            match key {
                "n" => {
                    cfg.n = parse_num(value).map_err(ctx)?;
                    n_given = true;
                }
                "t" => cfg.t = parse_num(value).map_err(ctx)?,
                "points" => {
                    if value != "grid" {
                        points = Some(parse_list(value).map_err(ctx)?);
                    }
                }
                "mu_y" => cfg.mu_y = parse_num(value).map_err(ctx)?,
                "sigma2_y" => cfg.sigma2_y = parse_num(value).map_err(ctx)?,
                "sigma2_r" => cfg.sigma2_r = Some(parse_num(value).map_err(ctx)?),
                "seed" => cfg.seed = parse_num(value).map_err(ctx)?,
                "steps" => cfg.steps = parse_num(value).map_err(ctx)?,
                "timeout_ms" => cfg.timeout = Duration::from_millis(parse_num(value).map_err(ctx)?),
                "listen" => {
                    cfg.listen = value
                        .split(',')
                        .map(|s| {
                            s.trim()
                                .parse::<SocketAddr>()
                                .map_err(|e| ctx(format!("{s}: {e}")))
                        })
                        .collect::<Result<_>>()?;
                }
                "A" => cfg.model.a = parse_matrix(value).map_err(ctx)?,
                "B" => cfg.model.b = parse_matrix(value).map_err(ctx)?,
                "H" => cfg.model.h = parse_matrix(value).map_err(ctx)?,
                "Q" => cfg.model.q = parse_matrix(value).map_err(ctx)?,
                "R" => cfg.model.r = parse_matrix(value).map_err(ctx)?,
                "x0" => {
                    cfg.x0 = DVector::from_vec(parse_list(value).map_err(ctx)?);
                    x0_given = true;
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.points = match points {
            Some(p) => {
                if n_given && p.len() != cfg.n {
                    return Err(Error::Config(format!(
                        "n = {} but {} points listed",
                        cfg.n,
                        p.len()
                    )));
                }
                cfg.n = p.len();
                p
            }
            None => grid_points(cfg.n),
        };
        if !x0_given {
            cfg.x0 = DVector::zeros(cfg.model.state_dim());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        EvaluationDomain::new(self.points.clone(), self.t).map_err(wrap)?;
        if self.points.len() != self.n {
            return Err(Error::Config(format!(
                "n = {} but {} points",
                self.n,
                self.points.len()
            )));
        }
        if !(self.sigma2_y >= 0.0) || !self.sigma2_y.is_finite() {
            return Err(Error::Config(
                "sigma2_y must be a finite nonnegative number".into(),
            ));
        }
        if let Some(r) = self.sigma2_r {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Config(
                    "sigma2_r must be a finite nonnegative number".into(),
                ));
            }
        }
        if !self.listen.is_empty() && self.listen.len() != self.n {
            return Err(Error::Config(format!(
                "{} listen addresses for {} parties",
                self.listen.len(),
                self.n
            )));
        }
        self.model.validate().map_err(wrap)?;
        if self.x0.len() != self.model.state_dim() {
            return Err(Error::Config(format!(
                "x0 has {} entries, the model has {} states",
                self.x0.len(),
                self.model.state_dim()
            )));
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<EvaluationDomain> {
        EvaluationDomain::new(self.points.clone(), self.t)
    }

    pub fn mask_sigma2(&self) -> f64 {
        self.sigma2_r.unwrap_or(self.sigma2_y)
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "t = {}", self.t);
        let _ = writeln!(s, "points = {}", list(&self.points));
        let _ = writeln!(s, "mu_y = {:?}", self.mu_y);
        let _ = writeln!(s, "sigma2_y = {:?}", self.sigma2_y);
        if let Some(r) = self.sigma2_r {
            let _ = writeln!(s, "sigma2_r = {r:?}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "steps = {}", self.steps);
        for (key, m) in [
            ("A", &self.model.a),
            ("B", &self.model.b),
            ("H", &self.model.h),
            ("Q", &self.model.q),
            ("R", &self.model.r),
        ] {
            let rows: Vec<String> = m
                .row_iter()
                .map(|r| {
                    r.iter()
                        .map(|x| format!("{x:?}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                })
                .collect();
            let _ = writeln!(s, "{key} = {}", rows.join("; "));
        }
        let _ = writeln!(s, "x0 = {}", list(self.x0.as_slice()));
        s
    }

    /// Hash of everything that affects protocol behaviour. Listen addresses
    /// and timeouts are deployment details and are excluded.
    pub fn hash(&self) -> u64 {
        let digest = Sha256::digest(self.to_canonical().as_bytes());
        u64::from_be_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("'{s}': {e}"))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(|x| parse_num::<f64>(x.trim())).collect()
}

fn parse_matrix(s: &str) -> std::result::Result<DMatrix<f64>, String> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(parse_list)
        .collect::<std::result::Result<_, _>>()?;
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err("rows have different lengths".into());
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.into_iter().flatten(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reproduction_setup() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!((cfg.n, cfg.t, cfg.steps), (3, 1, 50));
        assert_eq!(cfg.sigma2_y, 1000.0);
        assert_eq!(cfg.model, KalmanModel::constant_velocity(1.0));
        assert_eq!(cfg.mask_sigma2(), 1000.0);
    }

    #[test]
    fn parses_every_key() {
        let text = "
            # three parties
            n = 3
            t = 1
            points = 1, 2, 3
            sigma2_y = 10   # noise
            sigma2_r = 5
            seed = 42
            steps = 7
            timeout_ms = 1500
            listen = 127.0.0.1:7000, 127.0.0.1:7001, 127.0.0.1:7002
            A = 1, 0.5; 0, 1
            B = 0; 1
            H = 1, 0
            Q = 0.1, 0; 0, 0.1
            R = 2
            x0 = 1, -1
        ";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.points, vec![1.0, 2.0, 3.0]);
        assert_eq!(cfg.sigma2_r, Some(5.0));
        assert_eq!(cfg.timeout, Duration::from_millis(1500));
        assert_eq!(cfg.listen[2].port(), 7002);
        assert_eq!(cfg.model.a[(0, 1)], 0.5);
        assert_eq!(cfg.model.b.shape(), (2, 1));
        assert_eq!(cfg.x0[1], -1.0);
    }

    #[test]
    fn canonical_form_roundtrips_and_hash_ignores_deployment() {
        let cfg = RunConfig::parse("n = 5\nt = 2\nsigma2_y = 0.1\nlisten = 127.0.0.1:1, 127.0.0.1:2, 127.0.0.1:3, 127.0.0.1:4, 127.0.0.1:5").unwrap();
        let mut back = RunConfig::parse(&cfg.to_canonical()).unwrap();
        back.listen = cfg.listen.clone();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let other = RunConfig::parse("n = 5\nt = 2\nsigma2_y = 0.2").unwrap();
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "n = 3\npoints = 1, 2",
            "t = 3",
            "bogus = 1",
            "n three",
            "sigma2_y = -1",
            "A = 1, 2; 3",
            "x0 = 1, 2, 3",
            "points = 0, 1, 2",
            "listen = 127.0.0.1:1",
        ] {
            assert!(
                matches!(RunConfig::parse(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }
}
