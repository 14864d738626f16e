//! Plain Kalman filtering and its secret-shared counterpart.

mod private;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

pub use private::{
    private_step, PartyMaterial, PartyModel, PartyState, PrivateSession, StepMaterial, StepRecord,
    TRIPLES_PER_STEP,
};

use crate::error::{Error, Result};

/// Linear plant `x' = A x + B u + w`, `z = H x + v` with `w ~ N(0, Q)` and
/// `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl KalmanModel {
    /// Two-state position/velocity tracker observing position only.
    pub fn constant_velocity(dt: f64) -> Self {
        Self {
            a: DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]),
            b: DMatrix::zeros(2, 1),
            h: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            q: DMatrix::identity(2, 2) * 0.01,
            r: DMatrix::from_element(1, 1, 1.0),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn measurement_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.state_dim();
        let m = self.measurement_dim();
        let shape_err = |name: &str, got: (usize, usize), want: String| {
            Error::DimensionMismatch(format!("{name} is {}x{}, expected {want}", got.0, got.1))
        };
        if self.a.shape() != (s, s) || s == 0 {
            return Err(shape_err("A", self.a.shape(), "square".into()));
        }
        if self.b.nrows() != s || self.b.ncols() == 0 {
            return Err(shape_err("B", self.b.shape(), format!("{s}xu")));
        }
        if self.h.ncols() != s || m == 0 {
            return Err(shape_err("H", self.h.shape(), format!("mx{s}")));
        }
        if self.q.shape() != (s, s) {
            return Err(shape_err("Q", self.q.shape(), format!("{s}x{s}")));
        }
        if self.r.shape() != (m, m) {
            return Err(shape_err("R", self.r.shape(), format!("{m}x{m}")));
        }
        for (name, c) in [("Q", &self.q), ("R", &self.r)] {
            check_covariance(name, c)?;
        }
        Ok(())
    }
}

fn check_covariance(name: &str, c: &DMatrix<f64>) -> Result<()> {
    let scale = c.amax().max(1.0);
    if (c - c.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidParams(format!("{name} is not symmetric")));
    }
    let min = c.clone().symmetric_eigenvalues().min();
    if min < -1e-12 * scale {
        return Err(Error::InvalidParams(format!(
            "{name} is not positive semidefinite"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub x_hat: DVector<f64>,
    pub p: DMatrix<f64>,
    pub k: usize,
}

impl KalmanState {
    /// Estimate `x0` with identity covariance.
    pub fn initial(x0: DVector<f64>) -> Self {
        let s = x0.len();
        Self {
            x_hat: x0,
            p: DMatrix::identity(s, s),
            k: 0,
        }
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// One predict/update cycle.
pub fn plain_step(
    model: &KalmanModel,
    state: &KalmanState,
    u: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<KalmanState> {
    let x_pred = &model.a * &state.x_hat + &model.b * u;
    let p_pred = &model.a * &state.p * model.a.transpose() + &model.q;
    let ph = &p_pred * model.h.transpose();
    let s = &model.h * &ph + &model.r;
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    if s_inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    let gain = ph * s_inv;
    let x_hat = &x_pred + &gain * (z - &model.h * &x_pred);
    let p = &p_pred - &gain * &model.h * &p_pred;
    Ok(KalmanState {
        x_hat,
        p: symmetrize(&p),
        k: state.k + 1,
    })
}

/// Runs the plain filter over a measurement sequence, returning the
/// estimate after each step.
pub fn plain_filter(
    model: &KalmanModel,
    x0: &DVector<f64>,
    controls: &[DVector<f64>],
    measurements: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    let mut state = KalmanState::initial(x0.clone());
    let mut out = Vec::with_capacity(measurements.len());
    for (u, z) in controls.iter().zip(measurements) {
        state = plain_step(model, &state, u, z)?;
        out.push(state.x_hat.clone());
    }
    Ok(out)
}

/// A simulated plant run. `measurements[k]` observes `states[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
}

/// Square-root factor `L` with `L L^T = c` for a PSD matrix.
fn psd_factor(c: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = c.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

fn gaussian_vector<R: rand::Rng + ?Sized>(factor: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(factor.ncols(), |_, _| StandardNormal.sample(rng));
    factor * z
}

/// Simulates the plant with zero control input.
pub fn simulate(
    model: &KalmanModel,
    x0: &DVector<f64>,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    model.validate()?;
    if x0.len() != model.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "x0 has {} entries for {} states",
            x0.len(),
            model.state_dim()
        )));
    }
    let mut rng = crate::rng::stream(seed, crate::rng::HARNESS, "plant");
    let wq = psd_factor(&model.q);
    let vr = psd_factor(&model.r);
    let mut x = x0.clone();
    let mut traj = Trajectory {
        states: Vec::with_capacity(steps),
        measurements: Vec::with_capacity(steps),
        controls: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let u = DVector::zeros(model.control_dim());
        let v = gaussian_vector(&vr, &mut rng);
        traj.measurements.push(&model.h * &x + v);
        let w = gaussian_vector(&wq, &mut rng);
        let next = &model.a * &x + &model.b * &u + w;
        traj.states.push(std::mem::replace(&mut x, next));
        traj.controls.push(u);
    }
    Ok(traj)
}

/// Per-step Euclidean distance between two estimate sequences.
pub fn rse_series(private: &[DVector<f64>], plain: &[DVector<f64>]) -> Result<Vec<f64>> {
    if private.len() != plain.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} private vs {} plain estimates",
            private.len(),
            plain.len()
        )));
    }
    private
        .iter()
        .zip(plain)
        .map(|(a, b)| {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch("estimate lengths differ".into()));
            }
            Ok((a - b).norm())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn default_model_is_valid() {
        let m = KalmanModel::constant_velocity(1.0);
        m.validate().unwrap();
        assert_eq!(
            (m.state_dim(), m.control_dim(), m.measurement_dim()),
            (2, 1, 1)
        );
    }

    #[test]
    fn asymmetric_noise_is_rejected() {
        let mut m = KalmanModel::constant_velocity(1.0);
        m.q[(0, 1)] = 0.5;
        assert!(m.validate().is_err());
        let mut m = KalmanModel::constant_velocity(1.0);
        m.r[(0, 0)] = -1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn perfect_measurement_is_trusted() {
        let mut m = KalmanModel::constant_velocity(1.0);
        m.h = DMatrix::identity(2, 2);
        m.r = DMatrix::identity(2, 2) * 1e-12;
        let s = KalmanState::initial(dvector![0.0, 0.0]);
        let z = dvector![3.0, -2.0];
        let next = plain_step(&m, &s, &dvector![0.0], &z).unwrap();
        assert!((next.x_hat - z).amax() < 1e-9);
    }

    #[test]
    fn useless_measurement_is_ignored() {
        let mut m = KalmanModel::constant_velocity(1.0);
        m.r = DMatrix::from_element(1, 1, 1e12);
        let s = KalmanState::initial(dvector![1.0, 2.0]);
        let next = plain_step(&m, &s, &dvector![0.0], &dvector![1e3]).unwrap();
        let predicted = &m.a * &s.x_hat;
        assert!((next.x_hat - predicted).amax() < 1e-6);
    }

    #[test]
    fn singular_innovation_is_reported() {
        let mut m = KalmanModel::constant_velocity(1.0);
        m.h = DMatrix::zeros(1, 2);
        m.r = DMatrix::zeros(1, 1);
        let s = KalmanState::initial(dvector![0.0, 0.0]);
        assert_eq!(
            plain_step(&m, &s, &dvector![0.0], &dvector![1.0]),
            Err(Error::SingularInnovation)
        );
    }

    #[test]
    fn rse_of_known_offset() {
        let a = vec![dvector![1.0, 1.0]; 4];
        let b = vec![dvector![1.3, 1.4]; 4];
        assert!(rse_series(&a, &b)
            .unwrap()
            .iter()
            .all(|&r| (r - 0.5).abs() < 1e-12));
        assert!(rse_series(&a, &a).unwrap().iter().all(|&r| r == 0.0));
        assert!(rse_series(&a, &b[..3]).is_err());
    }
}
