//! Uniform-linear-array steering, zero-forcing precoding, line-of-sight link
//! evaluation and beam patterns.
//!
//! Conventions:
//! - The steering vector has entries `exp(j k d m sin(theta))`, `m = 0..count`.
//! - The precoder zero-forces against `A^T`, so the effective transmit row
//!   toward a UAV at azimuth `theta` is `a(theta)^T`. With exact angles this
//!   gives `row_i f_j = delta_ij`, i.e. no inter-stream leakage.
//! - UAV `i` combines with the unit-norm matched vector `b(theta_hat_i) / sqrt(N_U)`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numkernel::{solve_hermitian, ComplexMatrix};

pub type C64 = Complex<f64>;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum `|sin(theta_i) - sin(theta_j)|` for a zero-forcing precoder.
pub const SIN_SEPARATION_MIN: f64 = 1e-3;

/// Gains below this (relative to the beam peak) are floored before taking dB.
pub const PATTERN_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    /// Antennas on the central UAV.
    pub m_ce: usize,
    /// Antennas per moving UAV.
    pub n_u: usize,
    pub wavelength: f64,
    pub spacing: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
}

impl ArrayConfig {
    pub fn from_carrier(m_ce: usize, n_u: usize, carrier_hz: f64, spacing_wavelengths: f64) -> Self {
        let wavelength = SPEED_OF_LIGHT / carrier_hz;
        Self {
            m_ce,
            n_u,
            wavelength,
            spacing: spacing_wavelengths * wavelength,
            carrier_hz,
            bandwidth_hz: 50e6,
        }
    }

    /// 64 x 4 half-wavelength arrays at 30 GHz, 50 MHz bandwidth.
    pub fn reference() -> Self {
        Self::from_carrier(64, 4, 30e9, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_ce == 0 {
            return Err(Error::validation("array.m_ce", "must be >= 1"));
        }
        if self.n_u == 0 || self.n_u > self.m_ce {
            return Err(Error::validation("array.n_u", format!("must be in 1..={}", self.m_ce)));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::validation("array.carrier_hz", "wavelength must be > 0"));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::validation("array.spacing_wavelengths", "must be > 0"));
        }
        Ok(())
    }

    /// Inter-element phase per unit `sin(theta)`: `2 pi d / lambda`.
    pub fn phase_step(&self) -> f64 {
        2.0 * PI * self.spacing / self.wavelength
    }
}

pub fn steering_vector(cfg: &ArrayConfig, theta: f64, count: usize) -> DVector<C64> {
    let step = cfg.phase_step() * theta.sin();
    DVector::from_fn(count, |m, _| C64::from_polar(1.0, step * m as f64))
}

/// `A(theta) = [a(theta_1), ..., a(theta_N)]` on the central array.
pub fn steering_matrix(cfg: &ArrayConfig, angles: &[f64]) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(cfg.m_ce, angles.len());
    for (j, &theta) in angles.iter().enumerate() {
        a.set_column(j, &steering_vector(cfg, theta, cfg.m_ce));
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerMatrix {
    /// `F = A^* (A^T A^*)^{-1}`, `M_CE x N`.
    pub f: ComplexMatrix,
    pub a: ComplexMatrix,
    pub angles: Vec<f64>,
}

impl BeamformerMatrix {
    /// `max |(A^T F - I)_ij|`.
    pub fn zf_residual(&self) -> f64 {
        let n = self.angles.len();
        let prod = self.a.transpose() * &self.f;
        (prod - ComplexMatrix::identity(n, n))
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    pub fn streams(&self) -> usize {
        self.angles.len()
    }
}

/// Zero-forcing precoder toward the estimated azimuths.
pub fn beamformer(cfg: &ArrayConfig, angles: &[f64]) -> Result<BeamformerMatrix> {
    if angles.is_empty() {
        return Err(Error::shape("beamformer", "need at least one angle"));
    }
    if angles.len() > cfg.m_ce {
        return Err(Error::shape(
            "beamformer",
            format!("{} streams exceed {} antennas", angles.len(), cfg.m_ce),
        ));
    }
    for i in 0..angles.len() {
        for j in (i + 1)..angles.len() {
            let gap = (angles[i].sin() - angles[j].sin()).abs();
            if gap < SIN_SEPARATION_MIN {
                return Err(Error::Conditioning {
                    i,
                    j,
                    sin_gap: gap,
                    threshold: SIN_SEPARATION_MIN,
                });
            }
        }
    }
    let a = steering_matrix(cfg, angles);
    let a_conj = a.conjugate();
    let gram = a.transpose() * &a_conj;
    let n = angles.len();
    let gram_inv = solve_hermitian(&gram, &ComplexMatrix::identity(n, n))?;
    Ok(BeamformerMatrix {
        f: a_conj * gram_inv,
        a,
        angles: angles.to_vec(),
    })
}

/// Diagonally loaded precoder `F = A^* (A^T A^* + loading M_CE I)^{-1}`.
/// Defined for any angle set, including coincident ones; `A^T F` is only
/// approximately the identity.
pub fn regularized_beamformer(cfg: &ArrayConfig, angles: &[f64], loading: f64) -> Result<BeamformerMatrix> {
    if angles.is_empty() || angles.len() > cfg.m_ce {
        return Err(Error::shape(
            "regularized beamformer",
            format!("{} streams for {} antennas", angles.len(), cfg.m_ce),
        ));
    }
    if !(loading.is_finite() && loading > 0.0) {
        return Err(Error::shape("regularized beamformer", "loading must be > 0"));
    }
    let a = steering_matrix(cfg, angles);
    let a_conj = a.conjugate();
    let n = angles.len();
    let gram = a.transpose() * &a_conj
        + ComplexMatrix::identity(n, n) * C64::new(loading * cfg.m_ce as f64, 0.0);
    let gram_inv = solve_hermitian(&gram, &ComplexMatrix::identity(n, n))?;
    Ok(BeamformerMatrix {
        f: a_conj * gram_inv,
        a,
        angles: angles.to_vec(),
    })
}

fn check_distinct(u: &Vector2<f64>, center: &Vector2<f64>) -> Result<Vector2<f64>> {
    let rel = u - center;
    if rel.norm() == 0.0 || !rel.norm().is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "UAV at {:?} coincides with the central UAV",
            u.as_slice()
        )));
    }
    Ok(rel)
}

/// `arccos((x - x_p) / ||u - u_p||)`, in `[0, pi]`. Cannot tell UAVs above
/// the x-axis from their mirror images below it.
pub fn angular_position(u: &Vector2<f64>, center: &Vector2<f64>) -> Result<f64> {
    let rel = check_distinct(u, center)?;
    Ok((rel.x / rel.norm()).clamp(-1.0, 1.0).acos())
}

/// Quadrant-aware azimuth `atan2(y - y_p, x - x_p)`, in `(-pi, pi]`.
pub fn signed_angular_position(u: &Vector2<f64>, center: &Vector2<f64>) -> Result<f64> {
    let rel = check_distinct(u, center)?;
    Ok(rel.y.atan2(rel.x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleForm {
    Signed,
    Arccos,
}

impl AngleForm {
    pub fn angle(self, u: &Vector2<f64>, center: &Vector2<f64>) -> Result<f64> {
        match self {
            AngleForm::Signed => signed_angular_position(u, center),
            AngleForm::Arccos => angular_position(u, center),
        }
    }
}

/// Per-step line-of-sight channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<C64>,
    /// Noise power per receive antenna.
    pub noise_power: f64,
    /// True azimuths.
    pub theta: Vec<f64>,
    pub range: Vec<f64>,
}

impl ChannelRealization {
    /// Free-space coefficients `h_i = lambda / (4 pi r_i) exp(j phi_i)`.
    pub fn line_of_sight(
        cfg: &ArrayConfig,
        positions: &[Vector2<f64>],
        center: &Vector2<f64>,
        phases: &[f64],
        noise_power: f64,
    ) -> Result<Self> {
        if phases.len() != positions.len() {
            return Err(Error::shape("channel", "one phase per UAV required"));
        }
        let mut theta = Vec::with_capacity(positions.len());
        let mut range = Vec::with_capacity(positions.len());
        let mut h = Vec::with_capacity(positions.len());
        for (u, &phase) in positions.iter().zip(phases) {
            let r = (u - center).norm();
            theta.push(signed_angular_position(u, center)?);
            range.push(r);
            h.push(C64::from_polar(free_space_amplitude(cfg, r), phase));
        }
        Ok(Self {
            h,
            noise_power,
            theta,
            range,
        })
    }

    pub fn uavs(&self) -> usize {
        self.h.len()
    }
}

pub fn free_space_amplitude(cfg: &ArrayConfig, range: f64) -> f64 {
    cfg.wavelength / (4.0 * PI * range)
}

/// Per-stream transmit powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(pub Vec<f64>);

impl PowerAllocation {
    /// Equal `p_j` with `sum_j p_j ||f_j||^2 = total`.
    pub fn equal(bf: &BeamformerMatrix, total: f64) -> Self {
        let norms: f64 = bf.f.column_iter().map(|c| c.norm_squared()).sum();
        Self(vec![total / norms; bf.streams()])
    }

    pub fn uniform(streams: usize, p: f64) -> Self {
        Self(vec![p; streams])
    }
}

fn check_link_dims(chan: &ChannelRealization, bf: &BeamformerMatrix, power: &PowerAllocation) -> Result<()> {
    let n = bf.streams();
    if chan.uavs() != n || power.0.len() != n {
        return Err(Error::shape(
            "link",
            format!("{} UAVs, {n} streams, {} powers", chan.uavs(), power.0.len()),
        ));
    }
    Ok(())
}

fn norm_factor(cfg: &ArrayConfig) -> f64 {
    1.0 / ((cfg.m_ce * cfg.n_u) as f64).sqrt()
}

/// Received vectors `r_i = h_i b(theta_i) row_i F diag(sqrt p) s / sqrt(M N_U) + nu_i`.
pub fn apply_channel<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    chan: &ChannelRealization,
    bf: &BeamformerMatrix,
    power: &PowerAllocation,
    symbols: &[C64],
    rng: &mut R,
) -> Result<Vec<DVector<C64>>> {
    check_link_dims(chan, bf, power)?;
    if symbols.len() != bf.streams() {
        return Err(Error::shape("channel", "one symbol per stream required"));
    }
    let scaled = DVector::from_fn(symbols.len(), |j, _| symbols[j] * power.0[j].sqrt());
    let tx = &bf.f * scaled;
    let scale = norm_factor(cfg);
    let sigma = (chan.noise_power / 2.0).sqrt();
    Ok((0..chan.uavs())
        .map(|i| {
            let row = steering_vector(cfg, chan.theta[i], cfg.m_ce);
            let through = row.transpose() * &tx;
            let b = steering_vector(cfg, chan.theta[i], cfg.n_u);
            let clean = b * (chan.h[i] * through[(0, 0)] * scale);
            clean.map(|v| v + complex_gaussian(rng, sigma))
        })
        .collect())
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * sigma, im * sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub sinr: Vec<f64>,
    pub sinr_db: Vec<f64>,
    /// `log2(1 + SINR)`, bit/s/Hz.
    pub se: Vec<f64>,
    /// Post-combining amplitude `g_ij` from stream `j` at UAV `i`.
    pub gains: DMatrix<C64>,
}

impl LinkReport {
    fn from_sinr(sinr: Vec<f64>, gains: DMatrix<C64>) -> Self {
        Self {
            sinr_db: sinr.iter().map(|s| 10.0 * s.log10()).collect(),
            se: sinr.iter().map(|s| (1.0 + s).log2()).collect(),
            sinr,
            gains,
        }
    }

    pub fn mean_se(&self) -> f64 {
        self.se.iter().sum::<f64>() / self.se.len() as f64
    }
}

/// `g_ij` for the matched combiner at the estimated angle.
pub fn combined_gains(
    cfg: &ArrayConfig,
    chan: &ChannelRealization,
    bf: &BeamformerMatrix,
    power: &PowerAllocation,
) -> Result<DMatrix<C64>> {
    check_link_dims(chan, bf, power)?;
    let n = bf.streams();
    let scale = norm_factor(cfg);
    let sqrt_nu = (cfg.n_u as f64).sqrt();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        let row = steering_vector(cfg, chan.theta[i], cfg.m_ce).transpose();
        let leak = &row * &bf.f;
        let b_true = steering_vector(cfg, chan.theta[i], cfg.n_u);
        let b_est = steering_vector(cfg, bf.angles[i], cfg.n_u);
        let combine = b_est.dotc(&b_true) / sqrt_nu;
        for j in 0..n {
            g[(i, j)] = chan.h[i] * combine * leak[(0, j)] * power.0[j].sqrt() * scale;
        }
    }
    Ok(g)
}

/// Analytic SINR and spectral efficiency:
/// `SINR_i = |g_ii|^2 / (sum_{j != i} |g_ij|^2 + sigma^2)`.
pub fn link_report(
    cfg: &ArrayConfig,
    chan: &ChannelRealization,
    bf: &BeamformerMatrix,
    power: &PowerAllocation,
) -> Result<LinkReport> {
    let g = combined_gains(cfg, chan, bf, power)?;
    let n = g.nrows();
    let sinr = (0..n)
        .map(|i| {
            let interference: f64 = (0..n).filter(|&j| j != i).map(|j| g[(i, j)].norm_sqr()).sum();
            g[(i, i)].norm_sqr() / (interference + chan.noise_power)
        })
        .collect();
    Ok(LinkReport::from_sinr(sinr, g))
}

/// SINR measured from `symbols` noisy pilot transmissions: the desired part
/// `g_ii s_i` is subtracted from the combiner output and the remaining power
/// is taken as interference plus noise.
pub fn measured_link_report<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    chan: &ChannelRealization,
    bf: &BeamformerMatrix,
    power: &PowerAllocation,
    symbols: usize,
    rng: &mut R,
) -> Result<LinkReport> {
    let g = combined_gains(cfg, chan, bf, power)?;
    let n = bf.streams();
    let sqrt_nu = (cfg.n_u as f64).sqrt();
    let combiners: Vec<DVector<C64>> = bf
        .angles
        .iter()
        .map(|&t| steering_vector(cfg, t, cfg.n_u) / C64::new(sqrt_nu, 0.0))
        .collect();
    let mut residual = vec![0.0; n];
    for _ in 0..symbols.max(1) {
        let s: Vec<C64> = (0..n)
            .map(|_| C64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI))
            .collect();
        let received = apply_channel(cfg, chan, bf, power, &s, rng)?;
        for i in 0..n {
            let y = combiners[i].dotc(&received[i]);
            residual[i] += (y - g[(i, i)] * s[i]).norm_sqr();
        }
    }
    let count = symbols.max(1) as f64;
    let sinr = (0..n)
        .map(|i| g[(i, i)].norm_sqr() / (residual[i] / count))
        .collect();
    Ok(LinkReport::from_sinr(sinr, g))
}

/// Per-beam array response over an azimuth grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub theta: Vec<f64>,
    /// `gain[i][g]`: `|a(theta_g)^T f_i|` divided by its grid maximum.
    pub gain: Vec<Vec<f64>>,
}

impl BeamPattern {
    pub fn gain_db(&self, beam: usize) -> Vec<f64> {
        self.gain[beam]
            .iter()
            .map(|g| 20.0 * g.max(PATTERN_FLOOR).log10())
            .collect()
    }
}

/// Unnormalised `|a(theta)^T f|`.
pub fn array_response(cfg: &ArrayConfig, f: &DVector<C64>, theta: f64) -> f64 {
    steering_vector(cfg, theta, cfg.m_ce).dot(f).norm()
}

/// `n` evenly spaced cell centres covering `(-pi/2, pi/2)`.
pub fn azimuth_grid(n: usize) -> Vec<f64> {
    let step = PI / n as f64;
    (0..n).map(|g| -PI / 2.0 + step * (g as f64 + 0.5)).collect()
}

pub fn beam_pattern(cfg: &ArrayConfig, bf: &BeamformerMatrix, grid: &[f64]) -> BeamPattern {
    let gain = bf
        .f
        .column_iter()
        .map(|col| {
            let f = col.into_owned();
            let raw: Vec<f64> = grid.iter().map(|&t| array_response(cfg, &f, t)).collect();
            let peak = raw.iter().copied().fold(0.0_f64, f64::max);
            raw.into_iter()
                .map(|v| if peak > 0.0 { v / peak } else { 0.0 })
                .collect()
        })
        .collect();
    BeamPattern {
        theta: grid.to_vec(),
        gain,
    }
}

/// Half-power (-3 dB) width in radians of the lobe of `f` that peaks near `center`.
pub fn main_lobe_width_3db(cfg: &ArrayConfig, f: &DVector<C64>, center: f64) -> f64 {
    // Local peak: a few refinement passes around the nominal direction.
    let resp = |t: f64| array_response(cfg, f, t);
    let mut peak_at = center;
    let mut step = PI / (8.0 * cfg.m_ce as f64);
    for _ in 0..40 {
        let (l, c, r) = (resp(peak_at - step), resp(peak_at), resp(peak_at + step));
        if l > c && l >= r {
            peak_at -= step;
        } else if r > c {
            peak_at += step;
        } else {
            step *= 0.5;
        }
    }
    let half = resp(peak_at) / 2.0_f64.sqrt();
    let edge = |dir: f64| {
        let walk = PI / (64.0 * cfg.m_ce as f64);
        let mut inside = peak_at;
        let mut outside = peak_at + dir * walk;
        while resp(outside) > half {
            inside = outside;
            outside += dir * walk;
            if outside.abs() >= PI / 2.0 {
                return outside.clamp(-PI / 2.0, PI / 2.0);
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if resp(mid) > half {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    edge(1.0) - edge(-1.0)
}

/// Time windows in seconds, `[start, end)`, during which echo sensing is blocked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockageWindows(pub Vec<(f64, f64)>);

impl BlockageWindows {
    pub fn contains(&self, t: f64) -> bool {
        self.0.iter().any(|&(a, b)| t >= a && t < b)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleMode {
    /// Azimuths of the observer's predicted positions.
    Uio,
    /// True azimuths, frozen at their last pre-blockage value inside windows.
    EchoBaseline,
    Truth,
}

impl AngleMode {
    pub fn label(self) -> &'static str {
        match self {
            AngleMode::Uio => "uio",
            AngleMode::EchoBaseline => "echo_baseline",
            AngleMode::Truth => "truth",
        }
    }
}

/// Supplies the beamformer's angles step by step.
#[derive(Debug, Clone)]
pub struct AngleProvider {
    pub mode: AngleMode,
    pub windows: BlockageWindows,
    last_echo: Option<Vec<f64>>,
}

impl AngleProvider {
    pub fn new(mode: AngleMode, windows: BlockageWindows) -> Self {
        Self {
            mode,
            windows,
            last_echo: None,
        }
    }

    /// Angles for time `t`. `truth` and `predicted` are the current true and
    /// observer-derived azimuths.
    pub fn angles(&mut self, t: f64, truth: &[f64], predicted: &[f64]) -> Vec<f64> {
        match self.mode {
            AngleMode::Truth => truth.to_vec(),
            AngleMode::Uio => predicted.to_vec(),
            AngleMode::EchoBaseline => {
                if self.windows.contains(t) {
                    self.last_echo.get_or_insert_with(|| truth.to_vec()).clone()
                } else {
                    self.last_echo = Some(truth.to_vec());
                    truth.to_vec()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_wave(m: usize) -> ArrayConfig {
        ArrayConfig::from_carrier(m, 4.min(m), 30e9, 0.5)
    }

    #[test]
    fn steering_examples() {
        let cfg = half_wave(8);
        let v = steering_vector(&cfg, 0.0, 5);
        assert!(v.iter().all(|e| (e - C64::new(1.0, 0.0)).norm() < 1e-15));

        let v = steering_vector(&cfg, PI / 2.0, 2);
        assert!((v[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);

        let v = steering_vector(&cfg, PI / 6.0, 4);
        for (m, e) in v.iter().enumerate() {
            let expected = C64::from_polar(1.0, m as f64 * PI / 2.0);
            assert!((e - expected).norm() < 1e-12);
            assert!((e.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_stream_is_matched_filter() {
        let cfg = half_wave(64);
        let bf = beamformer(&cfg, &[0.3]).unwrap();
        let expected = steering_vector(&cfg, 0.3, 64).conjugate() / C64::new(64.0, 0.0);
        assert!((bf.f.column(0) - expected).camax() < 1e-12);
    }

    #[test]
    fn zero_forcing_identity_and_collisions() {
        let cfg = half_wave(64);
        let bf = beamformer(&cfg, &[-0.9, -0.2, 0.35, 1.1]).unwrap();
        assert!(bf.zf_residual() <= 1e-9);

        match beamformer(&cfg, &[0.4, 0.1, PI - 0.4]) {
            Err(Error::Conditioning { i, j, .. }) => assert_eq!((i, j), (0, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn angular_position_examples() {
        let o = Vector2::zeros();
        assert_eq!(angular_position(&Vector2::new(1.0, 0.0), &o).unwrap(), 0.0);
        assert!((angular_position(&Vector2::new(0.0, 1.0), &o).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((angular_position(&Vector2::new(-1.0, 0.0), &o).unwrap() - PI).abs() < 1e-15);
        // arccos folds the lower half-plane, the signed form does not
        let below = Vector2::new(0.0, -2.0);
        assert!((angular_position(&below, &o).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((signed_angular_position(&below, &o).unwrap() + PI / 2.0).abs() < 1e-15);
        assert!(matches!(
            angular_position(&o, &o),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    fn one_uav_channel(theta: f64, noise: f64) -> ChannelRealization {
        ChannelRealization {
            h: vec![C64::new(1.0, 0.0)],
            noise_power: noise,
            theta: vec![theta],
            range: vec![1.0],
        }
    }

    #[test]
    fn noiseless_single_stream_channel() {
        let cfg = half_wave(64);
        let chan = one_uav_channel(0.25, 0.0);
        let bf = beamformer(&cfg, &[0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = C64::new(0.6, -0.8);
        let r = apply_channel(&cfg, &chan, &bf, &PowerAllocation::uniform(1, 1.0), &[s], &mut rng)
            .unwrap();
        let expected = steering_vector(&cfg, 0.25, 4) * (s / C64::new((64.0_f64 * 4.0).sqrt(), 0.0));
        assert!((&r[0] - expected).camax() < 1e-12);

        let r = apply_channel(
            &cfg,
            &ChannelRealization {
                h: vec![C64::new(0.0, 0.0)],
                ..chan.clone()
            },
            &bf,
            &PowerAllocation::uniform(1, 1.0),
            &[s],
            &mut rng,
        )
        .unwrap();
        assert!(r[0].camax() == 0.0);
    }

    #[test]
    fn se_decreases_with_noise() {
        let cfg = half_wave(64);
        let bf = beamformer(&cfg, &[0.1]).unwrap();
        let mut last = f64::INFINITY;
        for noise in [1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e6] {
            let chan = one_uav_channel(0.1, noise);
            let rep = link_report(&cfg, &chan, &bf, &PowerAllocation::uniform(1, 1.0)).unwrap();
            assert!(rep.se[0] < last);
            last = rep.se[0];
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn echo_provider_freezes_inside_windows() {
        let truth_at = |t: f64| vec![t, -t];
        let mut free = AngleProvider::new(AngleMode::EchoBaseline, BlockageWindows::default());
        for k in 0..5 {
            let t = k as f64;
            assert_eq!(free.angles(t, &truth_at(t), &[9.0, 9.0]), truth_at(t));
        }

        let mut blocked = AngleProvider::new(AngleMode::EchoBaseline, BlockageWindows(vec![(0.0, 100.0)]));
        for k in 0..5 {
            let t = k as f64;
            assert_eq!(blocked.angles(t, &truth_at(t), &[9.0, 9.0]), truth_at(0.0));
        }

        let mut mid = AngleProvider::new(AngleMode::EchoBaseline, BlockageWindows(vec![(2.0, 4.0)]));
        let got: Vec<Vec<f64>> = (0..6).map(|k| mid.angles(k as f64, &truth_at(k as f64), &[])).collect();
        assert_eq!(got[2], truth_at(1.0));
        assert_eq!(got[3], truth_at(1.0));
        assert_eq!(got[4], truth_at(4.0));

        let mut uio = AngleProvider::new(AngleMode::Uio, BlockageWindows(vec![(0.0, 10.0)]));
        assert_eq!(uio.angles(1.0, &[0.0], &[0.5]), vec![0.5]);
    }

    #[test]
    fn regularized_handles_coincident_angles() {
        let cfg = half_wave(64);
        let bf = regularized_beamformer(&cfg, &[0.2, 0.2, -0.5], 1e-2).unwrap();
        assert!(bf.f.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        // Well-separated angles: close to zero forcing.
        let reg = regularized_beamformer(&cfg, &[-0.6, 0.0, 0.7], 1e-6).unwrap();
        assert!(reg.zf_residual() < 1e-5);
    }

    #[test]
    fn pattern_nulls_and_peaks() {
        let cfg = half_wave(64);
        let angles = [-0.9, -0.2, 0.35, 1.1];
        let bf = beamformer(&cfg, &angles).unwrap();
        let grid = azimuth_grid(1440);
        let step = grid[1] - grid[0];
        let pattern = beam_pattern(&cfg, &bf, &grid);
        for i in 0..4 {
            let f = bf.f.column(i).into_owned();
            let main = array_response(&cfg, &f, angles[i]);
            for j in (0..4).filter(|&j| j != i) {
                assert!(array_response(&cfg, &f, angles[j]) <= 1e-12 * main);
            }
            let peak = (0..grid.len())
                .max_by(|&a, &b| pattern.gain[i][a].total_cmp(&pattern.gain[i][b]))
                .unwrap();
            assert!((grid[peak] - angles[i]).abs() <= step, "beam {i}");
        }
    }

    #[test]
    fn single_beam_is_dirichlet_kernel() {
        let cfg = half_wave(64);
        let target = 0.4_f64;
        let bf = beamformer(&cfg, &[target]).unwrap();
        let f = bf.f.column(0).into_owned();
        let m = 64.0;
        for theta in azimuth_grid(97) {
            let x = PI * cfg.spacing / cfg.wavelength * (theta.sin() - target.sin());
            let kernel = if x.sin().abs() < 1e-12 { 1.0 } else { ((m * x).sin() / (m * x.sin())).abs() };
            assert!((array_response(&cfg, &f, theta) - kernel).abs() < 1e-12, "theta {theta}");
        }
    }

    fn spread_channel(cfg: &ArrayConfig) -> ChannelRealization {
        let positions = [
            Vector2::new(70.0, 70.0),
            Vector2::new(150.0, -20.0),
            Vector2::new(-60.0, -190.0),
            Vector2::new(-240.0, 60.0),
        ];
        let h = free_space_amplitude(cfg, 250.0);
        ChannelRealization::line_of_sight(cfg, &positions, &Vector2::zeros(), &[0.0; 4], h * h / 40.0)
            .unwrap()
    }

    #[test]
    fn perfect_angles_have_no_leakage() {
        let cfg = half_wave(64);
        let chan = spread_channel(&cfg);
        let bf = beamformer(&cfg, &chan.theta).unwrap();
        let g = combined_gains(&cfg, &chan, &bf, &PowerAllocation::equal(&bf, 1.0)).unwrap();
        for i in 0..4 {
            for j in (0..4).filter(|&j| j != i) {
                assert!(g[(i, j)].norm() <= 1e-10 * g[(i, i)].norm());
            }
        }
    }

    #[test]
    fn stale_angle_hurts_only_its_uav() {
        let cfg = half_wave(64);
        let chan = spread_channel(&cfg);
        let report = |angles: &[f64]| {
            let bf = beamformer(&cfg, angles).unwrap();
            link_report(&cfg, &chan, &bf, &PowerAllocation::equal(&bf, 1.0)).unwrap()
        };
        let exact = report(&chan.theta);
        let mut stale = chan.theta.clone();
        stale[0] += 0.01;
        let off = report(&stale);
        assert!(off.se[0] < exact.se[0]);
        for i in 1..4 {
            assert!((off.se[i] - exact.se[i]).abs() < 0.05 * exact.se[i], "UAV {i}");
        }
    }

    #[test]
    fn se_falls_with_pointing_error() {
        let cfg = half_wave(64);
        let chan = one_uav_channel(0.3, 1e-3);
        let mut last = f64::INFINITY;
        for step in 0..40 {
            let est = 0.3 + step as f64 * 2e-4;
            let bf = beamformer(&cfg, &[est]).unwrap();
            let se = link_report(&cfg, &chan, &bf, &PowerAllocation::uniform(1, 1.0)).unwrap().se[0];
            assert!(se <= last + 1e-12);
            last = se;
        }
    }
}
