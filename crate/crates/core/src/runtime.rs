//! Online observer: prediction, unknown-input reconstruction, performance
//! output and empirical bound monitors.

use nalgebra::DVector;

use crate::design::ObserverGains;
use crate::dynamics::Measurement;
use crate::error::{Error, Result};
use crate::numkernel::{pinv_full_col_rank, RealMatrix};

/// Steps discarded before the steady-state bounds are checked.
pub const DEFAULT_TRANSIENT_CUTOFF: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub xhat: DVector<f64>,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverInit {
    /// `Xhat_0 = Y_0`.
    FirstMeasurement,
    /// `Xhat_0 = 0`.
    Zero,
}

impl ObserverState {
    pub fn initial(init: ObserverInit, y0: &Measurement) -> Self {
        let xhat = match init {
            ObserverInit::FirstMeasurement => y0.y.clone(),
            ObserverInit::Zero => DVector::zeros(y0.y.len()),
        };
        Self { xhat, k: y0.k }
    }
}

/// `Xhat_{k+1} = Q Xhat_k + L Y_k`.
pub fn predict(obs: &ObserverState, gains: &ObserverGains, y: &Measurement) -> Result<ObserverState> {
    let dim = gains.dim();
    if obs.xhat.len() != dim || y.y.len() != dim {
        return Err(Error::shape(
            "prediction",
            format!("gains {dim}, xhat {}, y {}", obs.xhat.len(), y.y.len()),
        ));
    }
    if obs.k != y.k {
        return Err(Error::shape(
            "prediction",
            format!("observer at k={} but measurement at k={}", obs.k, y.k),
        ));
    }
    Ok(ObserverState {
        xhat: &gains.q * &obs.xhat + &gains.l * &y.y,
        k: obs.k + 1,
    })
}

/// Unknown-input estimator built around `G = [B_T; 0]` and its pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct InputEstimator {
    pub g: RealMatrix,
    pub g_pinv: RealMatrix,
}

impl InputEstimator {
    pub fn new(sampling: &RealMatrix) -> Result<Self> {
        let n = sampling.nrows();
        if !sampling.is_square() {
            return Err(Error::shape("input estimator", "B_T must be square"));
        }
        let mut g = RealMatrix::zeros(2 * n, n);
        g.view_mut((0, 0), (n, n)).copy_from(sampling);
        let g_pinv = pinv_full_col_rank(&g)?;
        Ok(Self { g, g_pinv })
    }

    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    /// `What_k = G^+ [Xhat_{k+1} - Xhat_k; Y_k - Xhat_k]`.
    pub fn estimate(
        &self,
        xhat_next: &DVector<f64>,
        xhat: &DVector<f64>,
        y: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n = self.dim();
        if xhat_next.len() != n || xhat.len() != n || y.len() != n {
            return Err(Error::shape(
                "input estimation",
                format!(
                    "expected length {n}, got {}/{}/{}",
                    xhat_next.len(),
                    xhat.len(),
                    y.len()
                ),
            ));
        }
        let mut stacked = DVector::zeros(2 * n);
        stacked.rows_mut(0, n).copy_from(&(xhat_next - xhat));
        stacked.rows_mut(n, n).copy_from(&(y - xhat));
        Ok(&self.g_pinv * stacked)
    }
}

pub fn estimate_input(
    est: &InputEstimator,
    xhat_next: &DVector<f64>,
    xhat: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    est.estimate(xhat_next, xhat, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceOutput {
    /// `E = Xhat - X`.
    pub error: DVector<f64>,
    /// `Zhat = H E`.
    pub zhat: DVector<f64>,
}

pub fn performance_output(
    gains: &ObserverGains,
    xhat: &DVector<f64>,
    x_true: &DVector<f64>,
) -> Result<PerformanceOutput> {
    if xhat.len() != x_true.len() || gains.h.ncols() != xhat.len() {
        return Err(Error::shape(
            "performance output",
            format!("xhat {}, x {}, H {:?}", xhat.len(), x_true.len(), gains.h.shape()),
        ));
    }
    let error = xhat - x_true;
    let zhat = &gains.h * &error;
    Ok(PerformanceOutput { error, zhat })
}

/// Tracks the steady-state `l_inf` bounds `||Zhat|| <= gamma gamma_W` and
/// `||What - W|| <= 3 gamma gamma_W`, with `gamma_W` the running supremum of
/// `||W_k||`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMonitor {
    pub gamma: f64,
    pub gamma_w: f64,
    pub transient_cutoff: usize,
    pub worst_state_err: f64,
    pub worst_input_err: f64,
    /// Largest `||Zhat_k|| - gamma gamma_W(k)` seen after the cutoff.
    pub worst_state_margin: f64,
    pub worst_input_margin: f64,
    pub checked_steps: usize,
    last_k: Option<usize>,
}

impl BoundMonitor {
    pub fn new(gamma: f64, transient_cutoff: usize) -> Self {
        Self {
            gamma,
            gamma_w: 0.0,
            transient_cutoff,
            worst_state_err: 0.0,
            worst_input_err: 0.0,
            worst_state_margin: f64::NEG_INFINITY,
            worst_input_margin: f64::NEG_INFINITY,
            checked_steps: 0,
            last_k: None,
        }
    }

    pub fn state_threshold(&self) -> f64 {
        self.gamma * self.gamma_w
    }

    pub fn input_threshold(&self) -> f64 {
        3.0 * self.gamma * self.gamma_w
    }

    /// Each post-cutoff step was within its running threshold.
    pub fn state_bound_holds(&self) -> bool {
        self.worst_state_margin <= 0.0
    }

    pub fn input_bound_holds(&self) -> bool {
        self.worst_input_margin <= 0.0
    }

    pub fn observe(
        &mut self,
        perf: &PerformanceOutput,
        w_true: &DVector<f64>,
        w_hat: &DVector<f64>,
        k: usize,
    ) {
        if let Some(prev) = self.last_k {
            assert!(k > prev, "monitor steps must increase: {prev} then {k}");
        }
        self.last_k = Some(k);
        self.gamma_w = self.gamma_w.max(w_true.norm());
        if k < self.transient_cutoff {
            return;
        }
        let state_err = perf.zhat.norm();
        let input_err = (w_hat - w_true).norm();
        self.worst_state_err = self.worst_state_err.max(state_err);
        self.worst_input_err = self.worst_input_err.max(input_err);
        self.worst_state_margin = self.worst_state_margin.max(state_err - self.state_threshold());
        self.worst_input_margin = self.worst_input_margin.max(input_err - self.input_threshold());
        self.checked_steps += 1;
    }
}

pub fn monitor_bounds(
    mut mon: BoundMonitor,
    perf: &PerformanceOutput,
    w_true: &DVector<f64>,
    w_hat: &DVector<f64>,
    k: usize,
) -> BoundMonitor {
    mon.observe(perf, w_true, w_hat, k);
    mon
}

/// One observer step's outputs. `w_hat` belongs to step `k` but needs
/// `Xhat_{k+1}`, so it is available one step late.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub xhat: DVector<f64>,
    pub xhat_next: DVector<f64>,
    pub w_hat: DVector<f64>,
    pub perf: PerformanceOutput,
}

/// Observer runtime: gains, estimator and current prediction.
#[derive(Debug, Clone)]
pub struct Observer {
    pub gains: ObserverGains,
    pub estimator: InputEstimator,
    state: Option<ObserverState>,
    init: ObserverInit,
}

impl Observer {
    pub fn new(gains: ObserverGains, sampling: &RealMatrix, init: ObserverInit) -> Result<Self> {
        let estimator = InputEstimator::new(sampling)?;
        if estimator.dim() != gains.dim() {
            return Err(Error::shape(
                "observer",
                format!("B_T is {}, gains are {}", estimator.dim(), gains.dim()),
            ));
        }
        Ok(Self {
            gains,
            estimator,
            state: None,
            init,
        })
    }

    /// Current prediction `Xhat_k`, if the first measurement has arrived.
    pub fn prediction(&self) -> Option<&ObserverState> {
        self.state.as_ref()
    }

    /// Consumes `Y_k`, advances to `Xhat_{k+1}` and reports step `k`.
    pub fn step(&mut self, y: &Measurement, x_true: &DVector<f64>) -> Result<StepRecord> {
        let current = match self.state.take() {
            Some(s) => s,
            None => ObserverState::initial(self.init, y),
        };
        let next = predict(&current, &self.gains, y)?;
        let w_hat = self.estimator.estimate(&next.xhat, &current.xhat, &y.y)?;
        let perf = performance_output(&self.gains, &current.xhat, x_true)?;
        let record = StepRecord {
            k: current.k,
            xhat: current.xhat,
            xhat_next: next.xhat.clone(),
            w_hat,
            perf,
        };
        self.state = Some(next);
        Ok(record)
    }
}
