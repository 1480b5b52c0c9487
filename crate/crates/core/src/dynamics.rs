//! Ground-truth kinematics of the UAV network.
//!
//! Each UAV moves by `u_{k+1} = u_k + dt * v_k + d_k`, where `v_k` is the
//! nominal velocity and `d_k` a position increment caused by unknown
//! disturbances. Stacking all UAVs gives `X_{k+1} = X_k + B_T W_k` with the
//! lumped input `W_k = V_k + B_T^{-1} Lambda_k`, and the central UAV sees
//! `Y_k = X_k + D W_k`.

use std::f64::consts::PI;

use nalgebra::{DVector, Vector2};

use crate::error::{Error, Result};
use crate::numkernel::RealMatrix;

/// Circular-orbit scenario around a hovering central UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct UavScenario {
    pub radii: Vec<f64>,
    /// Angular rate of the nominal orbit, rad/s.
    pub omega: f64,
    pub phases: Vec<f64>,
    /// Position of the central UAV, metres.
    pub center: [f64; 2],
    /// Position update interval per UAV, seconds.
    pub dt: Vec<f64>,
    /// Perturbation amplitude as a fraction of `R_i * omega`.
    pub perturbation_ratio: f64,
    /// Perturbation frequency as a multiple of `omega`.
    pub perturbation_rate_multiple: f64,
}

impl UavScenario {
    /// Four UAVs on 100/150/200/250 m orbits, `omega = 0.5` rad/s, 0.15 s updates.
    pub fn reference() -> Self {
        Self::evenly_phased(vec![100.0, 150.0, 200.0, 250.0], 0.5, 0.15)
    }

    /// Phases `2 pi (i - 1) / N`, common update interval, default perturbation.
    pub fn evenly_phased(radii: Vec<f64>, omega: f64, dt: f64) -> Self {
        let n = radii.len();
        Self {
            phases: default_phases(n),
            dt: vec![dt; n],
            radii,
            omega,
            center: [0.0, 0.0],
            perturbation_ratio: 0.2,
            perturbation_rate_multiple: 10.0,
        }
    }

    pub fn n_uav(&self) -> usize {
        self.radii.len()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.n_uav()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_uav();
        if n == 0 {
            return Err(Error::validation("scenario.radii", "need at least one UAV"));
        }
        if self.phases.len() != n {
            return Err(Error::validation(
                "scenario.phases",
                format!("expected {n} entries, got {}", self.phases.len()),
            ));
        }
        if self.dt.len() != n {
            return Err(Error::validation(
                "scenario.dt",
                format!("expected {n} entries, got {}", self.dt.len()),
            ));
        }
        if let Some(r) = self.radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::validation("scenario.radii", format!("radius {r} must be > 0")));
        }
        if let Some(dt) = self.dt.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::validation("scenario.dt", format!("interval {dt} must be > 0")));
        }
        if !self.omega.is_finite() {
            return Err(Error::validation("scenario.omega", "must be finite"));
        }
        if !(self.perturbation_ratio.is_finite() && self.perturbation_ratio >= 0.0) {
            return Err(Error::validation(
                "scenario.perturbation_ratio",
                "must be finite and >= 0",
            ));
        }
        if !self.perturbation_rate_multiple.is_finite() {
            return Err(Error::validation(
                "scenario.perturbation_rate_multiple",
                "must be finite",
            ));
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n_uav() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_uav(),
            })
        }
    }

    /// `B_T = diag(dt_1, dt_1, ..., dt_N, dt_N)`.
    pub fn sampling_matrix(&self) -> RealMatrix {
        let diag: Vec<f64> = self.dt.iter().flat_map(|&t| [t, t]).collect();
        RealMatrix::from_diagonal(&DVector::from_vec(diag))
    }

    /// Starting positions `u_p + R_i [sin phi_i, cos phi_i]`: the point on the
    /// orbit whose tangent matches the nominal velocity at `k = 0`.
    pub fn initial_state(&self) -> NetworkState {
        let x = DVector::from_iterator(
            self.state_dim(),
            self.radii.iter().zip(&self.phases).flat_map(|(&r, &phi)| {
                [
                    self.center[0] + r * phi.sin(),
                    self.center[1] + r * phi.cos(),
                ]
            }),
        );
        NetworkState { x, k: 0 }
    }
}

pub fn default_phases(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Stacked positions `[x_1, y_1, ..., x_N, y_N]` at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub x: DVector<f64>,
    pub k: usize,
}

impl NetworkState {
    pub fn position(&self, i: usize) -> Vector2<f64> {
        Vector2::new(self.x[2 * i], self.x[2 * i + 1])
    }
}

/// Lumped unknown input and its components.
#[derive(Debug, Clone, PartialEq)]
pub struct UnknownInput {
    /// `W = V + B_T^{-1} Lambda`, m/s.
    pub w: DVector<f64>,
    /// Nominal velocities, m/s.
    pub v: DVector<f64>,
    /// Per-step position perturbations, m.
    pub lambda: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub d: RealMatrix,
}

impl MeasurementModel {
    pub fn scaled_identity(state_dim: usize, scale: f64) -> Self {
        Self {
            d: RealMatrix::identity(state_dim, state_dim) * scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: DVector<f64>,
    pub k: usize,
}

/// `R_i omega [cos(omega dt k + phi_i), -sin(omega dt k + phi_i)]`.
pub fn nominal_velocity(scenario: &UavScenario, i: usize, k: usize) -> Result<Vector2<f64>> {
    scenario.check_index(i)?;
    let r = scenario.radii[i];
    let w = scenario.omega;
    let arg = w * scenario.dt[i] * k as f64 + scenario.phases[i];
    Ok(Vector2::new(r * w * arg.cos(), -r * w * arg.sin()))
}

/// Sinusoidal position perturbation, amplitude `ratio * R_i * omega`, rate
/// `multiple * omega`.
pub fn perturbation(scenario: &UavScenario, i: usize, k: usize) -> Result<Vector2<f64>> {
    scenario.check_index(i)?;
    let amp = scenario.perturbation_ratio * scenario.radii[i] * scenario.omega;
    let arg = scenario.perturbation_rate_multiple * scenario.omega * scenario.dt[i] * k as f64
        + scenario.phases[i];
    Ok(Vector2::new(amp * arg.cos(), -amp * arg.sin()))
}

/// Stacked `V_k` and `Lambda_k` for the scenario's sinusoidal inputs.
pub fn scenario_inputs(
    scenario: &UavScenario,
    k: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = scenario.n_uav();
    let mut v = DVector::zeros(2 * n);
    let mut lambda = DVector::zeros(2 * n);
    for i in 0..n {
        let vi = nominal_velocity(scenario, i, k)?;
        let di = perturbation(scenario, i, k)?;
        v.fixed_rows_mut::<2>(2 * i).copy_from(&vi);
        lambda.fixed_rows_mut::<2>(2 * i).copy_from(&di);
    }
    Ok((v, lambda))
}

/// Lumps `V` and `Lambda` into `W = V + B_T^{-1} Lambda`.
pub fn lump_input(scenario: &UavScenario, v: DVector<f64>, lambda: DVector<f64>) -> Result<UnknownInput> {
    let dim = scenario.state_dim();
    if v.len() != dim || lambda.len() != dim {
        return Err(Error::shape(
            "unknown input",
            format!("expected length {dim}, got v={} lambda={}", v.len(), lambda.len()),
        ));
    }
    let w = DVector::from_fn(dim, |r, _| v[r] + lambda[r] / scenario.dt[r / 2]);
    Ok(UnknownInput { w, v, lambda })
}

/// Advances the truth with explicit inputs: `X' = X + B_T V + Lambda`.
pub fn step_with_inputs(
    state: &NetworkState,
    scenario: &UavScenario,
    v: DVector<f64>,
    lambda: DVector<f64>,
) -> Result<(NetworkState, UnknownInput)> {
    if state.x.len() != scenario.state_dim() {
        return Err(Error::shape(
            "truth step",
            format!(
                "state has length {}, scenario needs {}",
                state.x.len(),
                scenario.state_dim()
            ),
        ));
    }
    let input = lump_input(scenario, v, lambda)?;
    let x = DVector::from_fn(state.x.len(), |r, _| {
        state.x[r] + scenario.dt[r / 2] * input.v[r] + input.lambda[r]
    });
    Ok((NetworkState { x, k: state.k + 1 }, input))
}

/// One truth step at the state's own index with the scenario's sinusoidal inputs.
pub fn step_truth(state: &NetworkState, scenario: &UavScenario) -> Result<(NetworkState, UnknownInput)> {
    let (v, lambda) = scenario_inputs(scenario, state.k)?;
    step_with_inputs(state, scenario, v, lambda)
}

/// `Y = X + D W`.
pub fn measure(
    state: &NetworkState,
    input: &UnknownInput,
    model: &MeasurementModel,
) -> Result<Measurement> {
    let dim = state.x.len();
    if model.d.shape() != (dim, dim) || input.w.len() != dim {
        return Err(Error::shape(
            "measurement",
            format!(
                "state {dim}, D {}x{}, W {}",
                model.d.nrows(),
                model.d.ncols(),
                input.w.len()
            ),
        ));
    }
    Ok(Measurement {
        y: &state.x + &model.d * &input.w,
        k: state.k,
    })
}
