//! Accuracy metrics on the flexion/extension angle θy and plot-ready reports.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};

/// Index of θy inside an angle triple.
pub const THETA_Y: usize = 1;

fn check_lengths(truth: &[f64], est: &[f64], min: usize) -> Result<()> {
    if truth.len() != est.len() {
        return Err(Error::DimensionMismatch {
            context: "metric series length",
            expected: truth.len(),
            actual: est.len(),
        });
    }
    if truth.len() < min {
        return Err(Error::InsufficientData {
            what: "metric",
            required: min,
            available: truth.len(),
        });
    }
    Ok(())
}

/// Coefficient of determination `1 − Σ(v − v̂)² / Σ(v − v̄)²`. May be negative.
pub fn r_squared(truth: &[f64], est: &[f64]) -> Result<f64> {
    check_lengths(truth, est, 2)?;
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantTruth);
    }
    let ss_res: f64 = truth.iter().zip(est).map(|(v, e)| (v - e).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean absolute error, in the units of the inputs.
pub fn mean_error(truth: &[f64], est: &[f64]) -> Result<f64> {
    check_lengths(truth, est, 1)?;
    Ok(truth.iter().zip(est).map(|(v, e)| (v - e).abs()).sum::<f64>() / truth.len() as f64)
}

/// One ground-truth/estimate pair at a strain timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub t: u64,
    pub truth: [f64; 3],
    pub est: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scenario: String,
    pub r_squared: f64,
    pub mean_error_deg: f64,
    pub n_samples: usize,
    pub points: Vec<EvalPoint>,
}

impl EvalReport {
    /// Scores θy over `points`.
    pub fn new(scenario: impl Into<String>, points: Vec<EvalPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::NoEstimates);
        }
        let truth: Vec<f64> = points.iter().map(|p| p.truth[THETA_Y]).collect();
        let est: Vec<f64> = points.iter().map(|p| p.est[THETA_Y]).collect();
        Ok(Self {
            scenario: scenario.into(),
            r_squared: r_squared(&truth, &est)?,
            mean_error_deg: mean_error(&truth, &est)?,
            n_samples: points.len(),
            points,
        })
    }

    /// θy residuals `truth − estimate`.
    pub fn residuals(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.points
            .iter()
            .map(|p| (p.t, p.truth[THETA_Y] - p.est[THETA_Y]))
    }

    /// `key=value` lines: scenario, r_squared, mean_error_deg, n_samples.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "scenario={}", self.scenario).unwrap();
        writeln!(s, "r_squared={:.12}", self.r_squared).unwrap();
        writeln!(s, "mean_error_deg={:.12}", self.mean_error_deg).unwrap();
        writeln!(s, "n_samples={}", self.n_samples).unwrap();
        s
    }

    /// Truth/estimate overlay; θy first, θx and θz as unscored extras.
    pub fn write_overlay_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "t_ms,truth_theta_y,est_theta_y,truth_theta_x,est_theta_x,truth_theta_z,est_theta_z"
        )?;
        for p in &self.points {
            writeln!(
                w,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                p.t, p.truth[1], p.est[1], p.truth[0], p.est[0], p.truth[2], p.est[2]
            )?;
        }
        Ok(())
    }

    pub fn write_residual_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_ms,residual_theta_y")?;
        for (t, r) in self.residuals() {
            writeln!(w, "{t},{r:.6}")?;
        }
        Ok(())
    }
}
