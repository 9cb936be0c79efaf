//! Synthetic wrist motion and strain-wristband response.
//!
//! Produces the same two replay streams the hardware would: 4-channel divider
//! voltages every strain frame and IMU angle triples at a faster rate, on a
//! shared zero-based clock. All kinematic constants here are conventions of
//! the simulator, not measured properties of a real wristband.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    format_imu_line, format_strain_line, voltage_from_resistance, CircuitConfig, ImuFrame,
    StrainFrame,
};
use crate::error::{Error, Result};
use crate::seed::{self, derive_seed};

/// Off-axis (θx, θz) amplitude during the random calibration motion, degrees.
const CALIB_OFF_AXIS_AMPLITUDE: f64 = 20.0;
/// Off-axis wobble amplitude during flexion/extension cycles, degrees.
const CYCLE_OFF_AXIS_AMPLITUDE: f64 = 2.0;
const CALIB_COMPONENTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub duration_s: f64,
    /// One flexion → neutral → extension → flexion cycle.
    pub cycle_period_s: f64,
    pub flexion_peak_deg: f64,
    pub extension_peak_deg: f64,
    /// Leading window of random wrist rotation.
    pub calibration_span_s: f64,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            duration_s: 180.0,
            cycle_period_s: 8.5,
            flexion_peak_deg: 60.0,
            extension_peak_deg: -60.0,
            calibration_span_s: 10.0,
            seed: 0,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.calibration_span_s >= 0.0 && self.duration_s > self.calibration_span_s) {
            return Err(Error::InvalidConfig(format!(
                "trajectory.duration_s ({}) must exceed calibration_span_s ({})",
                self.duration_s, self.calibration_span_s
            )));
        }
        if !(self.cycle_period_s > 0.0 && self.cycle_period_s.is_finite()) {
            return Err(Error::InvalidConfig("trajectory.cycle_period_s must be > 0".into()));
        }
        if !(self.flexion_peak_deg > 0.0 && self.flexion_peak_deg <= 90.0)
            || !(self.extension_peak_deg < 0.0 && self.extension_peak_deg >= -90.0)
        {
            return Err(Error::InvalidConfig(
                "trajectory peaks must satisfy 0 < flexion <= 90 and -90 <= extension < 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorResponseModel {
    /// Unstrained resistance (Ω).
    pub r0: f64,
    /// Gauge factor below the knee.
    pub gf_low: f64,
    /// Gauge factor above the knee.
    pub gf_high: f64,
    /// Strain at which the gauge factor changes.
    pub knee: f64,
    pub max_strain: f64,
    /// Additive voltage noise standard deviation (V).
    pub noise_sd: f64,
    /// Multiplicative resistance decay per second.
    pub drift_rate: f64,
    /// First-order relaxation time constant (s); 0 follows strain instantly.
    pub relaxation_tau: f64,
    /// Round each voltage to the nearest ADC code.
    pub adc_quantize: bool,
    /// Strain per unit `sin` of the joint angle, per sensor.
    pub placement_gain: Vec<f64>,
    /// Angular offset (rad) of each sensor's neutral point.
    pub placement_phase: Vec<f64>,
}

impl Default for SensorResponseModel {
    fn default() -> Self {
        Self {
            r0: 50_000.0,
            gf_low: 10.3,
            gf_high: 3.3,
            knee: 0.06,
            max_strain: 0.60,
            noise_sd: 0.005,
            drift_rate: 0.0002,
            relaxation_tau: 0.8,
            adc_quantize: true,
            placement_gain: vec![0.45, 0.35, 0.45, 0.35],
            placement_phase: vec![0.0, 0.12, 0.0, -0.12],
        }
    }
}

impl SensorResponseModel {
    /// Same geometry with every imperfection switched off.
    pub fn ideal() -> Self {
        Self {
            noise_sd: 0.0,
            drift_rate: 0.0,
            relaxation_tau: 0.0,
            adc_quantize: false,
            ..Self::default()
        }
    }

    /// Shifts the band on the wrist: perturbed gains and neutral points.
    pub fn misaligned(mut self) -> Self {
        self.placement_gain = vec![0.32, 0.50, 0.40, 0.26];
        self.placement_phase = vec![0.22, -0.05, 0.26, 0.08];
        self
    }

    pub fn n_sensors(&self) -> usize {
        self.placement_gain.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.r0.is_nan() || self.r0 <= 0.0 {
            return bad(format!("sensor.r0 must be > 0, got {}", self.r0));
        }
        if !(self.gf_low > 0.0 && self.gf_high > 0.0) {
            return bad("sensor gauge factors must be > 0".into());
        }
        if !(self.knee > 0.0 && self.knee < self.max_strain) {
            return bad(format!(
                "sensor.knee must lie in (0, max_strain), got {} vs {}",
                self.knee, self.max_strain
            ));
        }
        if !(self.noise_sd >= 0.0 && self.drift_rate >= 0.0 && self.relaxation_tau >= 0.0) {
            return bad("sensor noise_sd, drift_rate and relaxation_tau must be >= 0".into());
        }
        if self.placement_gain.is_empty() || self.placement_gain.len() != self.placement_phase.len() {
            return bad("sensor.placement_gain and placement_phase need one entry per sensor".into());
        }
        if self.placement_gain.iter().any(|g| g.is_nan() || *g < 0.0) {
            return bad("sensor.placement_gain entries must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamTiming {
    /// One full sweep of the strain sensors (4 × 50 ms).
    pub strain_frame_period_ms: u64,
    pub imu_period_ms: u64,
    /// Instant, relative to a strain frame's timestamp, at which the wrist
    /// pose is sampled for that frame's readings. Mid-frame puts it at the
    /// centroid of the IMU frames later averaged into the frame.
    pub strain_sample_offset_ms: u64,
}

impl Default for StreamTiming {
    fn default() -> Self {
        Self {
            strain_frame_period_ms: 200,
            imu_period_ms: 30,
            strain_sample_offset_ms: 100,
        }
    }
}

impl StreamTiming {
    pub fn validate(&self) -> Result<()> {
        if self.imu_period_ms == 0 || self.imu_period_ms >= self.strain_frame_period_ms {
            return Err(Error::InvalidConfig(format!(
                "timing: need 0 < imu_period_ms ({}) < strain_frame_period_ms ({})",
                self.imu_period_ms, self.strain_frame_period_ms
            )));
        }
        if self.strain_sample_offset_ms >= self.strain_frame_period_ms {
            return Err(Error::InvalidConfig(format!(
                "timing: strain_sample_offset_ms ({}) must be below strain_frame_period_ms ({})",
                self.strain_sample_offset_ms, self.strain_frame_period_ms
            )));
        }
        Ok(())
    }
}

/// Everything needed to regenerate one pair of replay files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub label: String,
    pub trajectory: TrajectoryConfig,
    pub sensor: SensorResponseModel,
    pub timing: StreamTiming,
    pub circuit: CircuitConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            label: "nominal".into(),
            trajectory: TrajectoryConfig::default(),
            sensor: SensorResponseModel::default(),
            timing: StreamTiming::default(),
            circuit: CircuitConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Default geometry with noise, drift, relaxation and quantization off.
    pub fn clean() -> Self {
        Self {
            label: "clean".into(),
            sensor: SensorResponseModel::ideal(),
            ..Self::default()
        }
    }

    /// Default imperfections with the band shifted on the wrist.
    pub fn misaligned() -> Self {
        Self {
            label: "misaligned".into(),
            sensor: SensorResponseModel::default().misaligned(),
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "nominal" => Ok(Self::default()),
            "clean" => Ok(Self::clean()),
            "misaligned" => Ok(Self::misaligned()),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset `{other}` (expected nominal, clean or misaligned)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trajectory.validate()?;
        self.sensor.validate()?;
        self.timing.validate()?;
        self.circuit.validate()?;
        if self.sensor.n_sensors() != self.circuit.m_sensors {
            return Err(Error::InvalidConfig(format!(
                "sensor placement lists {} sensors but circuit.m_sensors is {}",
                self.sensor.n_sensors(),
                self.circuit.m_sensors
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Component {
    amplitude: f64,
    freq_hz: f64,
    phase: f64,
}

fn random_components<R: Rng>(rng: &mut R, n: usize, total_amplitude: f64, f_lo: f64, f_hi: f64) -> Vec<Component> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| Component {
            amplitude: total_amplitude * w / sum,
            freq_hz: rng.random_range(f_lo..f_hi),
            phase: rng.random_range(0.0..2.0 * PI),
        })
        .collect()
}

fn superpose(components: &[Component], t_s: f64) -> f64 {
    components
        .iter()
        .map(|c| c.amplitude * (2.0 * PI * c.freq_hz * t_s + c.phase).sin())
        .sum()
}

/// A deterministic continuous-time angle trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    cfg: TrajectoryConfig,
    calib: [Vec<Component>; 3],
    wobble: [Vec<Component>; 2],
}

/// Builds the trajectory: random band-limited rotation on all axes during the
/// calibration window, then periodic flexion/extension on θy with small
/// off-axis wobble.
pub fn gen_trajectory(cfg: &TrajectoryConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut rng = seed::rng(derive_seed(cfg.seed, "trajectory"));
    let y_amp = 0.95 * cfg.flexion_peak_deg.min(-cfg.extension_peak_deg);
    let calib = [
        random_components(&mut rng, CALIB_COMPONENTS, CALIB_OFF_AXIS_AMPLITUDE, 0.1, 0.6),
        random_components(&mut rng, CALIB_COMPONENTS, y_amp, 0.1, 0.6),
        random_components(&mut rng, CALIB_COMPONENTS, CALIB_OFF_AXIS_AMPLITUDE, 0.1, 0.6),
    ];
    let wobble = [
        random_components(&mut rng, 3, CYCLE_OFF_AXIS_AMPLITUDE, 0.05, 0.5),
        random_components(&mut rng, 3, CYCLE_OFF_AXIS_AMPLITUDE, 0.05, 0.5),
    ];
    Ok(Trajectory {
        cfg: cfg.clone(),
        calib,
        wobble,
    })
}

impl Trajectory {
    pub fn config(&self) -> &TrajectoryConfig {
        &self.cfg
    }

    /// (θx, θy, θz) in degrees at `t_s` seconds.
    pub fn at(&self, t_s: f64) -> [f64; 3] {
        let span = self.cfg.calibration_span_s;
        if t_s < span {
            // Tapered so the motion starts and ends at neutral.
            let w = (PI * t_s / span).sin();
            return [
                w * superpose(&self.calib[0], t_s),
                w * superpose(&self.calib[1], t_s),
                w * superpose(&self.calib[2], t_s),
            ];
        }
        let tau = t_s - span;
        let s = (2.0 * PI * tau / self.cfg.cycle_period_s).sin();
        let y = if s >= 0.0 {
            self.cfg.flexion_peak_deg * s
        } else {
            -self.cfg.extension_peak_deg * s
        };
        [superpose(&self.wobble[0], tau), y, superpose(&self.wobble[1], tau)]
    }

    /// Samples `[0, duration)` every `period_ms`.
    pub fn series(&self, period_ms: u64) -> Vec<(u64, [f64; 3])> {
        let end_ms = (self.cfg.duration_s * 1000.0).round() as u64;
        (0..)
            .map(|k| k * period_ms)
            .take_while(|&t| t < end_ms)
            .map(|t| (t, self.at(t as f64 / 1000.0)))
            .collect()
    }
}

/// Whether sensor `index` sits on the dorsal side (stretched in flexion).
/// The first half of the band is dorsal, the second half palmar.
pub fn is_dorsal(index: usize, n_sensors: usize) -> bool {
    index < n_sensors.div_ceil(2)
}

/// Strain of sensor `index` at wrist angle `theta_y_deg`.
pub fn strain_from_angle(theta_y_deg: f64, index: usize, model: &SensorResponseModel) -> f64 {
    let side = if is_dorsal(index, model.n_sensors()) { 1.0 } else { -1.0 };
    let gain = model.placement_gain[index];
    let phase = model.placement_phase[index];
    let stretch = (side * (theta_y_deg.to_radians() + phase).sin()).max(0.0);
    (gain * stretch).clamp(0.0, model.max_strain)
}

/// Piecewise-linear gauge response: `R = R0 (1 + ΔR/R0)`.
pub fn resistance_from_strain(strain: f64, model: &SensorResponseModel) -> Result<f64> {
    if !(0.0..=model.max_strain).contains(&strain) {
        return Err(Error::StrainOutOfRange {
            strain,
            max: model.max_strain,
        });
    }
    Ok(model.r0 * (1.0 + relative_change(strain, model)))
}

/// `ΔR/R0` for a strain inside `[0, max_strain]`.
pub fn relative_change(strain: f64, model: &SensorResponseModel) -> f64 {
    if strain <= model.knee {
        model.gf_low * strain
    } else {
        model.gf_low * model.knee + model.gf_high * (strain - model.knee)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStreams {
    pub strain: Vec<StrainFrame>,
    pub imu: Vec<ImuFrame>,
}

impl SimulatedStreams {
    pub fn write<W1: Write, W2: Write>(&self, mut strain_sink: W1, mut imu_sink: W2) -> Result<()> {
        for f in &self.strain {
            writeln!(strain_sink, "{}", format_strain_line(f))?;
        }
        for f in &self.imu {
            writeln!(imu_sink, "{}", format_imu_line(f))?;
        }
        strain_sink.flush()?;
        imu_sink.flush()?;
        Ok(())
    }
}

/// Generates both replay streams for a scenario.
pub fn emit_streams(scenario: &ScenarioConfig) -> Result<SimulatedStreams> {
    scenario.validate()?;
    let trajectory = gen_trajectory(&scenario.trajectory)?;
    let model = &scenario.sensor;
    let circuit = &scenario.circuit;
    let timing = &scenario.timing;

    let imu = trajectory
        .series(timing.imu_period_ms)
        .into_iter()
        .map(|(t, theta)| ImuFrame { t, theta })
        .collect();

    let mut noise_rng = seed::rng(derive_seed(scenario.trajectory.seed, "sensor-noise"));
    let noise = if model.noise_sd > 0.0 {
        Some(Normal::new(0.0, model.noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    } else {
        None
    };
    let dt = timing.strain_frame_period_ms as f64 / 1000.0;
    let alpha = if model.relaxation_tau > 0.0 {
        1.0 - (-dt / model.relaxation_tau).exp()
    } else {
        1.0
    };
    // Keep the reading strictly below the divider's saturation point.
    let v_ceiling = circuit.vcc * (1.0 - 1e-9);

    let mut lagged: Option<Vec<f64>> = None;
    let mut strain = Vec::new();
    let end_ms = (scenario.trajectory.duration_s * 1000.0).round() as u64;
    let frames = (0..)
        .map(|k| k * timing.strain_frame_period_ms)
        .take_while(|&t| t < end_ms);
    for t in frames {
        let t_s = t as f64 / 1000.0;
        let theta_y = trajectory.at((t + timing.strain_sample_offset_ms) as f64 / 1000.0)[1];
        let target = (0..model.n_sensors())
            .map(|i| resistance_from_strain(strain_from_angle(theta_y, i, model), model))
            .collect::<Result<Vec<f64>>>()?;
        let current = match lagged.take() {
            None => target,
            Some(prev) => prev
                .iter()
                .zip(&target)
                .map(|(p, r)| p + alpha * (r - p))
                .collect(),
        };
        let drift = (-model.drift_rate * t_s).exp();
        let mut voltages = Vec::with_capacity(current.len());
        for r in &current {
            let mut v = voltage_from_resistance(r * drift, circuit)?;
            if let Some(n) = &noise {
                v += n.sample(&mut noise_rng);
            }
            if model.adc_quantize {
                v = circuit.quantize(v);
            }
            voltages.push(v.clamp(0.0, v_ceiling));
        }
        lagged = Some(current);
        strain.push(StrainFrame { t, voltages });
    }
    Ok(SimulatedStreams { strain, imu })
}
