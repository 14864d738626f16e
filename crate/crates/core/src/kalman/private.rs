use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{plain_filter, rse_series, simulate, KalmanModel, Trajectory};
use crate::arith::{local, Dealer, MatrixTriple, SharedMatrix, TripleShare};
use crate::domain::{EvaluationDomain, SharingParams};
use crate::error::{Error, Result};
use crate::runtime::{Party, RunConfig};

/// Multiplications per step, counting the one inside the inversion.
pub const TRIPLES_PER_STEP: usize = 13;

/// `(m, k, l)` for each multiplication site of a step, in execution order.
fn triple_shapes(s: usize, m: usize, u: usize) -> [(usize, usize, usize); TRIPLES_PER_STEP] {
    [
        (s, s, 1), // A x
        (s, u, 1), // B u
        (s, s, s), // P A^T
        (s, s, s), // A (P A^T)
        (s, s, m), // P~ H^T
        (m, s, m), // H (P~ H^T)
        (s, s, m), // P~ H^T, recomputed for the gain
        (m, m, m), // S R inside the inversion
        (s, m, m), // (P~ H^T) S^-1
        (m, s, 1), // H x~
        (s, m, 1), // K y
        (m, s, s), // H P~
        (s, m, s), // K (H P~)
    ]
}

/// Offline material for one private step: the triples and the inversion mask.
#[derive(Debug, Clone)]
pub struct StepMaterial {
    pub triples: Vec<MatrixTriple>,
    pub mask: SharedMatrix,
}

impl StepMaterial {
    pub fn generate(dealer: &mut Dealer, model: &KalmanModel) -> Result<Self> {
        let (s, m, u) = (
            model.state_dim(),
            model.measurement_dim(),
            model.control_dim(),
        );
        let triples = triple_shapes(s, m, u)
            .iter()
            .map(|&(a, b, c)| dealer.matrix_triple(a, b, c))
            .collect::<Result<Vec<_>>>()?;
        let mask = dealer.mask(m, m)?;
        Ok(Self { triples, mask })
    }

    pub fn for_party(&self, party: usize) -> PartyMaterial {
        PartyMaterial {
            triples: self.triples.iter().map(|t| t.for_party(party)).collect(),
            mask: self.mask.part(party).clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartyMaterial {
    pub triples: Vec<TripleShare>,
    pub mask: DMatrix<f64>,
}

/// One party's shares of the model matrices.
#[derive(Debug, Clone)]
pub struct PartyModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

/// One party's shares of the estimate and its covariance.
#[derive(Debug, Clone)]
pub struct PartyState {
    pub x_hat: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

/// One filter step on shares: twelve multiplications and one inversion.
pub fn private_step(
    party: &mut Party,
    model: &PartyModel,
    state: &PartyState,
    u: &DMatrix<f64>,
    z: &DMatrix<f64>,
    material: &PartyMaterial,
) -> Result<PartyState> {
    if material.triples.len() != TRIPLES_PER_STEP {
        return Err(Error::DimensionMismatch(format!(
            "a step needs {TRIPLES_PER_STEP} triples, got {}",
            material.triples.len()
        )));
    }
    let mut triples = material.triples.iter();
    let mut mult = |party: &mut Party, x: &DMatrix<f64>, y: &DMatrix<f64>| {
        let triple = triples.next().expect("length checked");
        local::mult(party, x, y, triple).map(|(z, _)| z)
    };
    let h_t = model.h.transpose();

    let x_pred = mult(party, &model.a, &state.x_hat)? + mult(party, &model.b, u)?;
    let pa = mult(party, &state.p, &model.a.transpose())?;
    let p_pred = mult(party, &model.a, &pa)? + &model.q;
    let ph = mult(party, &p_pred, &h_t)?;
    let s = mult(party, &model.h, &ph)? + &model.r;
    let ph_gain = mult(party, &p_pred, &h_t)?;

    let inv_triple = triples.next().expect("length checked");
    let (s_inv, _) = local::inv(party, &s, &material.mask, inv_triple).map_err(|e| match e {
        Error::SingularMask { detail } => Error::SingularMask {
            detail: format!("{detail}; rerun the step with fresh offline material"),
        },
        other => other,
    })?;
    let mut mult = |party: &mut Party, x: &DMatrix<f64>, y: &DMatrix<f64>| {
        let triple = triples.next().expect("length checked");
        local::mult(party, x, y, triple).map(|(z, _)| z)
    };

    let gain = mult(party, &ph_gain, &s_inv)?;
    let innovation = z - mult(party, &model.h, &x_pred)?;
    let x_hat = &x_pred + mult(party, &gain, &innovation)?;
    let hp = mult(party, &model.h, &p_pred)?;
    let p = &p_pred - mult(party, &gain, &hp)?;
    Ok(PartyState {
        x_hat,
        p: super::symmetrize(&p),
    })
}

/// Estimate revealed after step `k` and the openings performed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub x_hat: DVector<f64>,
    pub io_cumulative: u64,
}

/// Everything a private filtering run needs, derived deterministically from
/// a [`RunConfig`]: the simulated plant, the plain reference estimates, the
/// shared inputs and the dealer's offline material. Every party process can
/// rebuild it independently and keep only its own slice.
pub struct PrivateSession {
    domain: Arc<EvaluationDomain>,
    trajectory: Trajectory,
    plain: Vec<DVector<f64>>,
    model: [SharedMatrix; 5],
    x0: SharedMatrix,
    p0: SharedMatrix,
    controls: Vec<SharedMatrix>,
    measurements: Vec<SharedMatrix>,
    material: Vec<StepMaterial>,
}

impl PrivateSession {
    pub fn prepare(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let domain = Arc::new(config.domain()?);
        let model = &config.model;
        let trajectory = simulate(model, &config.x0, config.steps, config.seed)?;
        let plain = plain_filter(
            model,
            &config.x0,
            &trajectory.controls,
            &trajectory.measurements,
        )?;

        let mut rng = crate::rng::stream(config.seed, crate::rng::HARNESS, "inputs");
        let mut share = |m: &DMatrix<f64>| {
            SharedMatrix::share(m, &domain, config.mu_y, config.sigma2_y, &mut rng)
        };
        let shared_model = [
            share(&model.a)?,
            share(&model.b)?,
            share(&model.h)?,
            share(&model.q)?,
            share(&model.r)?,
        ];
        let column = |v: &DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
        let x0 = share(&column(&config.x0))?;
        let s = model.state_dim();
        let p0 = share(&DMatrix::identity(s, s))?;
        let controls = trajectory
            .controls
            .iter()
            .map(|u| share(&column(u)))
            .collect::<Result<Vec<_>>>()?;
        let measurements = trajectory
            .measurements
            .iter()
            .map(|z| share(&column(z)))
            .collect::<Result<Vec<_>>>()?;

        let params = SharingParams::new(config.mu_y, config.sigma2_y, config.seed)?;
        let mut dealer = Dealer::with_mask_variance(domain.clone(), &params, config.mask_sigma2())?;
        let material = (0..config.steps)
            .map(|_| StepMaterial::generate(&mut dealer, model))
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            domain,
            trajectory,
            plain,
            model: shared_model,
            x0,
            p0,
            controls,
            measurements,
            material,
        })
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        &self.domain
    }

    pub fn steps(&self) -> usize {
        self.material.len()
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn plain_estimates(&self) -> &[DVector<f64>] {
        &self.plain
    }

    /// This party's shares of the model.
    pub fn party_model(&self, party: usize) -> PartyModel {
        let [a, b, h, q, r] = &self.model;
        PartyModel {
            a: a.part(party).clone(),
            b: b.part(party).clone(),
            h: h.part(party).clone(),
            q: q.part(party).clone(),
            r: r.part(party).clone(),
        }
    }

    /// Runs every step as `party`, revealing the estimate after each one.
    pub fn run_party(&self, party: &mut Party) -> Result<Vec<StepRecord>> {
        let me = party.index();
        let model = self.party_model(me);
        let mut state = PartyState {
            x_hat: self.x0.part(me).clone(),
            p: self.p0.part(me).clone(),
        };
        let mut records = Vec::with_capacity(self.steps());
        for k in 0..self.steps() {
            state = private_step(
                party,
                &model,
                &state,
                self.controls[k].part(me),
                self.measurements[k].part(me),
                &self.material[k].for_party(me),
            )?;
            let x_hat = party.reveal(state.x_hat.as_slice())?;
            records.push(StepRecord {
                k,
                x_hat: DVector::from_vec(x_hat),
                io_cumulative: party.io().opens(),
            });
        }
        Ok(records)
    }

    /// Per-step distance between revealed private estimates and the plain filter.
    pub fn rse(&self, records: &[StepRecord]) -> Result<Vec<f64>> {
        let private: Vec<DVector<f64>> = records.iter().map(|r| r.x_hat.clone()).collect();
        rse_series(&private, &self.plain[..records.len()])
    }
}
