//! Voltage-divider circuit model and the line-oriented replay formats for the
//! strain wristband and the IMU.
//!
//! Strain line: `t_ms,v1,...,vm` (volts). IMU line: `t_ms,theta_x,theta_y,theta_z`
//! (degrees). No header; blank lines and lines starting with `#` are skipped.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitConfig {
    /// Supply voltage (V).
    pub vcc: f64,
    /// Reference resistor in series with each sensor (Ω).
    pub r_f: f64,
    /// Full-scale ADC count.
    pub adc_max_count: u32,
    /// Number of strain sensors per frame.
    pub m_sensors: usize,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            vcc: 3.3,
            r_f: 50_000.0,
            adc_max_count: 1023,
            m_sensors: 4,
        }
    }
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.vcc > 0.0 && self.vcc.is_finite()) {
            return Err(Error::InvalidConfig(format!("circuit.vcc must be > 0, got {}", self.vcc)));
        }
        if !(self.r_f > 0.0 && self.r_f.is_finite()) {
            return Err(Error::InvalidConfig(format!("circuit.r_f must be > 0, got {}", self.r_f)));
        }
        if self.adc_max_count == 0 {
            return Err(Error::InvalidConfig("circuit.adc_max_count must be > 0".into()));
        }
        if self.m_sensors == 0 {
            return Err(Error::InvalidConfig("circuit.m_sensors must be > 0".into()));
        }
        Ok(())
    }

    /// Rounds a voltage to the nearest ADC code and back.
    pub fn quantize(&self, v: f64) -> f64 {
        let full = f64::from(self.adc_max_count);
        let code = (v / self.vcc * full).round().clamp(0.0, full);
        code * self.vcc / full
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrainFrame {
    pub t: u64,
    pub voltages: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuFrame {
    pub t: u64,
    pub theta: [f64; 3],
}

/// Divided voltage across the sensor: `VCC · R_s / (R_s + R_f)`.
pub fn voltage_from_resistance(r_s: f64, cfg: &CircuitConfig) -> Result<f64> {
    if r_s.is_nan() || r_s < 0.0 {
        return Err(Error::NegativeResistance(r_s));
    }
    if r_s.is_infinite() {
        return Ok(cfg.vcc);
    }
    Ok(cfg.vcc * r_s / (r_s + cfg.r_f))
}

/// Sensor resistance from the divided voltage: `R_f · v / (VCC − v)`.
pub fn resistance_from_voltage(v_adc: f64, cfg: &CircuitConfig) -> Result<f64> {
    if !(v_adc >= 0.0 && v_adc < cfg.vcc) {
        return Err(Error::VoltageOutOfRange { v: v_adc, vcc: cfg.vcc });
    }
    Ok(cfg.r_f * v_adc / (cfg.vcc - v_adc))
}

fn fields(line: &str) -> Vec<&str> {
    line.trim().split(',').map(str::trim).collect()
}

fn parse_t(tok: &str, line_no: usize) -> Result<u64> {
    tok.parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("timestamp `{tok}` is not a non-negative integer"),
    })
}

fn parse_f(tok: &str, line_no: usize, what: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("{what} `{tok}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line: line_no,
            message: format!("{what} `{tok}` is not finite"),
        });
    }
    Ok(v)
}

/// Number of voltage fields on a strain line (field count minus the timestamp).
pub fn strain_line_width(line: &str) -> usize {
    fields(line).len().saturating_sub(1)
}

pub fn parse_strain_line(line: &str, line_no: usize, cfg: &CircuitConfig) -> Result<StrainFrame> {
    let f = fields(line);
    if f.len() != cfg.m_sensors + 1 {
        return Err(Error::Parse {
            line: line_no,
            message: format!(
                "expected {} fields (t_ms + {} voltages), found {}",
                cfg.m_sensors + 1,
                cfg.m_sensors,
                f.len()
            ),
        });
    }
    let t = parse_t(f[0], line_no)?;
    let mut voltages = Vec::with_capacity(cfg.m_sensors);
    for tok in &f[1..] {
        let v = parse_f(tok, line_no, "voltage")?;
        if !(0.0..=cfg.vcc).contains(&v) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("voltage {v} outside [0, {}]", cfg.vcc),
            });
        }
        voltages.push(v);
    }
    Ok(StrainFrame { t, voltages })
}

pub fn parse_imu_line(line: &str, line_no: usize) -> Result<ImuFrame> {
    let f = fields(line);
    if f.len() != 4 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected 4 fields (t_ms,theta_x,theta_y,theta_z), found {}", f.len()),
        });
    }
    let t = parse_t(f[0], line_no)?;
    let mut theta = [0.0; 3];
    for (slot, tok) in theta.iter_mut().zip(&f[1..]) {
        let a = parse_f(tok, line_no, "angle")?;
        if !(-180.0..=180.0).contains(&a) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("angle {a} outside [-180, 180]"),
            });
        }
        *slot = a;
    }
    Ok(ImuFrame { t, theta })
}

pub fn format_strain_line(frame: &StrainFrame) -> String {
    let mut s = frame.t.to_string();
    for v in &frame.voltages {
        s.push_str(&format!(",{v:.10}"));
    }
    s
}

pub fn format_imu_line(frame: &ImuFrame) -> String {
    format!(
        "{},{:.6},{:.6},{:.6}",
        frame.t, frame.theta[0], frame.theta[1], frame.theta[2]
    )
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('#') => None,
            Ok(l) => Some(Ok((i + 1, l))),
        })
}

/// Reads a whole strain replay stream, enforcing non-decreasing timestamps.
pub fn read_strain_stream<R: BufRead>(reader: R, cfg: &CircuitConfig) -> Result<Vec<StrainFrame>> {
    let mut out: Vec<StrainFrame> = Vec::new();
    for item in data_lines(reader) {
        let (no, line) = item?;
        let frame = parse_strain_line(&line, no, cfg)?;
        if let Some(prev) = out.last() {
            if frame.t < prev.t {
                return Err(Error::Parse {
                    line: no,
                    message: format!("timestamp {} precedes previous {}", frame.t, prev.t),
                });
            }
        }
        out.push(frame);
    }
    Ok(out)
}

pub fn read_imu_stream<R: BufRead>(reader: R) -> Result<Vec<ImuFrame>> {
    let mut out: Vec<ImuFrame> = Vec::new();
    for item in data_lines(reader) {
        let (no, line) = item?;
        let frame = parse_imu_line(&line, no)?;
        if let Some(prev) = out.last() {
            if frame.t < prev.t {
                return Err(Error::Parse {
                    line: no,
                    message: format!("timestamp {} precedes previous {}", frame.t, prev.t),
                });
            }
        }
        out.push(frame);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_divider_is_half_supply() {
        let cfg = CircuitConfig::default();
        assert_eq!(voltage_from_resistance(50_000.0, &cfg).unwrap(), 1.65);
        assert_eq!(voltage_from_resistance(0.0, &cfg).unwrap(), 0.0);
        let v = voltage_from_resistance(150_000.0, &cfg).unwrap();
        assert!((v - 2.475).abs() < 1e-12);
    }

    #[test]
    fn negative_resistance_rejected() {
        let cfg = CircuitConfig::default();
        assert!(matches!(
            voltage_from_resistance(-1.0, &cfg),
            Err(Error::NegativeResistance(_))
        ));
    }

    #[test]
    fn inverse_at_symmetry_point() {
        let cfg = CircuitConfig::default();
        assert_eq!(resistance_from_voltage(1.65, &cfg).unwrap(), 50_000.0);
        assert_eq!(resistance_from_voltage(0.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn saturated_or_negative_voltage_rejected() {
        let cfg = CircuitConfig::default();
        assert!(resistance_from_voltage(3.3, &cfg).is_err());
        assert!(resistance_from_voltage(4.0, &cfg).is_err());
        assert!(resistance_from_voltage(-0.1, &cfg).is_err());
    }

    #[test]
    fn roundtrip_across_decades() {
        let cfg = CircuitConfig::default();
        for e in 2..=7 {
            let r = 10f64.powi(e);
            let back = resistance_from_voltage(voltage_from_resistance(r, &cfg).unwrap(), &cfg).unwrap();
            assert!(((back - r) / r).abs() < 1e-9, "r={r} back={back}");
        }
    }

    proptest! {
        #[test]
        fn divider_monotone_and_bounded(a in 0.0f64..1e8, b in 0.0f64..1e8) {
            let cfg = CircuitConfig::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let vlo = voltage_from_resistance(lo, &cfg).unwrap();
            let vhi = voltage_from_resistance(hi, &cfg).unwrap();
            prop_assert!(vlo <= vhi);
            if hi > lo * (1.0 + 1e-9) { prop_assert!(vlo < vhi); }
            prop_assert!(vhi < cfg.vcc);
        }

        #[test]
        fn divider_inverse_identity(r in 1.0f64..1e8) {
            let cfg = CircuitConfig::default();
            let back = resistance_from_voltage(voltage_from_resistance(r, &cfg).unwrap(), &cfg).unwrap();
            prop_assert!(((back - r) / r).abs() < 1e-9);
        }

        #[test]
        fn parsed_frames_respect_invariants(line in "[0-9,.\\- e]{0,40}") {
            let cfg = CircuitConfig::default();
            if let Ok(f) = parse_strain_line(&line, 1, &cfg) {
                prop_assert_eq!(f.voltages.len(), 4);
                prop_assert!(f.voltages.iter().all(|v| (0.0..=cfg.vcc).contains(v)));
            }
            if let Ok(f) = parse_imu_line(&line, 1) {
                prop_assert!(f.theta.iter().all(|a| a.is_finite() && a.abs() <= 180.0));
            }
        }
    }

    #[test]
    fn parses_strain_line() {
        let f = parse_strain_line("120,1.6500,1.7012,1.5500,1.6000", 1, &CircuitConfig::default())
            .unwrap();
        assert_eq!(f.t, 120);
        assert_eq!(f.voltages, vec![1.65, 1.7012, 1.55, 1.60]);
    }

    #[test]
    fn short_strain_line_is_field_count_error() {
        let err = parse_strain_line("120,1.65", 9, &CircuitConfig::default()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 9);
                assert!(message.contains("fields"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strain_out_of_range_and_garbage() {
        let cfg = CircuitConfig::default();
        assert!(parse_strain_line("1,1,1,1,3.4", 1, &cfg).is_err());
        assert!(parse_strain_line("1,1,x,1,1", 1, &cfg).is_err());
        assert!(parse_strain_line("-5,1,1,1,1", 1, &cfg).is_err());
        assert!(parse_strain_line("1,1,NaN,1,1", 1, &cfg).is_err());
    }

    #[test]
    fn parses_imu_line() {
        let f = parse_imu_line("117,-3.25,41.70,1.02", 1).unwrap();
        assert_eq!(f.t, 117);
        assert_eq!(f.theta, [-3.25, 41.70, 1.02]);
        assert!(parse_imu_line("117,-3.25,191.0,1.02", 1).is_err());
        assert!(parse_imu_line("117,-3.25,1.0", 1).is_err());
    }

    #[test]
    fn stream_reader_skips_comments_and_checks_order() {
        let text = "# replay\n0,1,1,1,1\n\n200,1.1,1,1,1\n";
        let frames = read_strain_stream(text.as_bytes(), &CircuitConfig::default()).unwrap();
        assert_eq!(frames.len(), 2);
        let bad = "200,1,1,1,1\n0,1,1,1,1\n";
        assert!(matches!(
            read_strain_stream(bad.as_bytes(), &CircuitConfig::default()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn format_then_parse() {
        let f = StrainFrame { t: 400, voltages: vec![1.2345678901, 0.0, 3.3, 2.0] };
        let back = parse_strain_line(&format_strain_line(&f), 1, &CircuitConfig::default()).unwrap();
        assert_eq!(back, f);
        let i = ImuFrame { t: 30, theta: [-1.5, 60.0, 0.25] };
        assert_eq!(parse_imu_line(&format_imu_line(&i), 1).unwrap(), i);
    }

    #[test]
    fn quantize_snaps_to_codes() {
        let cfg = CircuitConfig::default();
        let step = cfg.vcc / 1023.0;
        let q = cfg.quantize(1.0);
        assert!(((q / step).round() - q / step).abs() < 1e-9);
        assert!((q - 1.0).abs() <= step / 2.0);
    }
}
