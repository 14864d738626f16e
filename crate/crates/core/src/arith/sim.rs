use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::dealer::{BeaverTriple, MatrixTriple, TripleShare};
use super::local::{
    apply_inverse, beaver_combine, check_triple_shape, joint_contribution, joint_sum,
};
use super::matrix::SharedMatrix;
use super::MaskedOpening;
use crate::domain::EvaluationDomain;
use crate::error::{Error, Result};
use crate::poly::Interpolator;
use crate::runtime::{IoCounter, OpenMode};
use crate::sharing::ShareSet;

/// Full-view engine: holds every party's shares at once and performs each
/// party's local step itself. Openings reconstruct from the same parties and
/// in the same order as the networked runtime, so results agree bit for bit.
pub struct Simulator {
    domain: Arc<EvaluationDomain>,
    seed: u64,
    io: IoCounter,
    used: HashSet<u64>,
    contributors: Vec<usize>,
    interp: Interpolator,
    joint_calls: u64,
}

impl Simulator {
    pub fn new(domain: Arc<EvaluationDomain>, seed: u64) -> Result<Self> {
        Self::with_open_mode(domain, seed, OpenMode::default())
    }

    pub fn with_open_mode(
        domain: Arc<EvaluationDomain>,
        seed: u64,
        mode: OpenMode,
    ) -> Result<Self> {
        let contributors: Vec<usize> = match mode {
            OpenMode::LowestIndices => (0..=domain.t()).collect(),
            OpenMode::All => (0..domain.n()).collect(),
        };
        let interp = Interpolator::new(contributors.iter().map(|&i| domain.point(i)).collect())?;
        Ok(Self {
            domain,
            seed,
            io: IoCounter::default(),
            used: HashSet::new(),
            contributors,
            interp,
            joint_calls: 0,
        })
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        &self.domain
    }

    pub fn io(&self) -> IoCounter {
        self.io
    }

    fn consume(&mut self, id: u64) -> Result<()> {
        if self.used.insert(id) {
            Ok(())
        } else {
            Err(Error::TripleReused(id))
        }
    }

    fn check_domain(&self, other: &Arc<EvaluationDomain>) -> Result<()> {
        if Arc::ptr_eq(&self.domain, other) || *self.domain == **other {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    fn open_parts(&mut self, parts: &[DMatrix<f64>]) -> DMatrix<f64> {
        let (rows, cols) = parts[0].shape();
        let mut row = vec![0.0; self.contributors.len()];
        let mut out = DMatrix::zeros(rows, cols);
        for (k, slot) in out.iter_mut().enumerate() {
            for (r, &c) in row.iter_mut().zip(&self.contributors) {
                *r = parts[c][k];
            }
            *slot = self.interp.eval(0.0, &row);
        }
        self.io.record();
        out
    }

    /// Opens a shared value. One interactive operation.
    pub fn open(&mut self, x: &ShareSet) -> Result<f64> {
        Ok(self.open_matrix(&SharedMatrix::from_scalar(x)?)?[(0, 0)])
    }

    pub fn open_matrix(&mut self, x: &SharedMatrix) -> Result<DMatrix<f64>> {
        self.check_domain(x.domain())?;
        Ok(self.open_parts(x.parts()))
    }

    fn mult_parts(
        &mut self,
        x: &SharedMatrix,
        y: &SharedMatrix,
        triple: &[TripleShare],
    ) -> Result<(SharedMatrix, MaskedOpening<DMatrix<f64>>)> {
        self.check_domain(x.domain())?;
        x.check_compatible(y)?;
        check_triple_shape(x.part(0), y.part(0), &triple[0])?;
        self.consume(triple[0].id)?;
        let d_parts: Vec<_> = x
            .parts()
            .iter()
            .zip(triple)
            .map(|(xp, t)| xp - &t.r1)
            .collect();
        let e_parts: Vec<_> = y
            .parts()
            .iter()
            .zip(triple)
            .map(|(yp, t)| yp - &t.r2)
            .collect();
        let d = self.open_parts(&d_parts);
        let e = self.open_parts(&e_parts);
        let z = triple.iter().map(|t| beaver_combine(&d, &e, t)).collect();
        Ok((
            SharedMatrix::from_parts(self.domain.clone(), z)?,
            MaskedOpening { d, e, sr: None },
        ))
    }

    fn inv_parts(
        &mut self,
        x: &SharedMatrix,
        r: &SharedMatrix,
        triple: &[TripleShare],
    ) -> Result<(SharedMatrix, MaskedOpening<DMatrix<f64>>)> {
        let (sr_shared, mut opening) = self.mult_parts(x, r, triple)?;
        let sr = self.open_parts(sr_shared.parts());
        let out = r
            .parts()
            .iter()
            .map(|rp| apply_inverse(rp, &sr))
            .collect::<Result<Vec<_>>>()?;
        opening.sr = Some(sr);
        Ok((SharedMatrix::from_parts(self.domain.clone(), out)?, opening))
    }

    /// Beaver multiplication. Two interactive operations.
    pub fn mult(
        &mut self,
        x: &ShareSet,
        y: &ShareSet,
        triple: &BeaverTriple,
    ) -> Result<(ShareSet, MaskedOpening)> {
        x.check_same_domain(y)?;
        let shares = self.triple_parts(triple)?;
        let (z, op) = self.mult_parts(
            &SharedMatrix::from_scalar(x)?,
            &SharedMatrix::from_scalar(y)?,
            &shares,
        )?;
        Ok((z.to_scalar()?, op.scalar()))
    }

    /// Masked inversion with the shared random `r`. Three interactive operations.
    pub fn inv(
        &mut self,
        x: &ShareSet,
        r: &ShareSet,
        triple: &BeaverTriple,
    ) -> Result<(ShareSet, MaskedOpening)> {
        x.check_same_domain(r)?;
        let shares = self.triple_parts(triple)?;
        let (z, op) = self.inv_parts(
            &SharedMatrix::from_scalar(x)?,
            &SharedMatrix::from_scalar(r)?,
            &shares,
        )?;
        Ok((z.to_scalar()?, op.scalar()))
    }

    pub fn mat_mult(
        &mut self,
        x: &SharedMatrix,
        y: &SharedMatrix,
        triple: &MatrixTriple,
    ) -> Result<(SharedMatrix, MaskedOpening<DMatrix<f64>>)> {
        let shares: Vec<_> = (0..self.domain.n()).map(|p| triple.for_party(p)).collect();
        self.mult_parts(x, y, &shares)
    }

    /// Matrix inversion `R (SR)^-1` with a shared random square mask `r`.
    pub fn mat_inv(
        &mut self,
        x: &SharedMatrix,
        r: &SharedMatrix,
        triple: &MatrixTriple,
    ) -> Result<(SharedMatrix, MaskedOpening<DMatrix<f64>>)> {
        let shares: Vec<_> = (0..self.domain.n()).map(|p| triple.for_party(p)).collect();
        self.inv_parts(x, r, &shares)
    }

    /// Joint randomness from per-party draws. Returns the shared sum and,
    /// for oracle checks, each party's hidden draw.
    pub fn joint_random(
        &mut self,
        mask_sigma2: f64,
        mu_y: f64,
        sigma2_y: f64,
    ) -> Result<(ShareSet, Vec<f64>)> {
        let (m, draws) = self.joint_random_matrix(1, 1, mask_sigma2, mu_y, sigma2_y)?;
        Ok((
            m.to_scalar()?,
            draws.into_iter().map(|d| d[(0, 0)]).collect(),
        ))
    }

    /// Party `p` draws from its stream labelled `joint-random/<call>`, as a
    /// networked party calling [`super::local::joint_random`] with that label would.
    pub fn joint_random_matrix(
        &mut self,
        rows: usize,
        cols: usize,
        mask_sigma2: f64,
        mu_y: f64,
        sigma2_y: f64,
    ) -> Result<(SharedMatrix, Vec<DMatrix<f64>>)> {
        let label = format!("joint-random/{}", self.joint_calls);
        self.joint_calls += 1;
        let n = self.domain.n();
        let mut draws = Vec::with_capacity(n);
        let mut inbox: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n); n];
        for p in 0..n {
            let mut rng = crate::rng::stream(self.seed, p as u64, &label);
            let (draw, outgoing) = joint_contribution(
                &mut rng,
                &self.domain,
                rows,
                cols,
                mask_sigma2,
                mu_y,
                sigma2_y,
            )?;
            draws.push(draw);
            for (to, payload) in outgoing.into_iter().enumerate() {
                inbox[to].push(payload);
            }
        }
        let parts = inbox
            .iter()
            .map(|incoming| joint_sum(rows, cols, incoming))
            .collect();
        Ok((SharedMatrix::from_parts(self.domain.clone(), parts)?, draws))
    }

    fn triple_parts(&self, triple: &BeaverTriple) -> Result<Vec<TripleShare>> {
        (0..self.domain.n()).map(|p| triple.for_party(p)).collect()
    }
}
