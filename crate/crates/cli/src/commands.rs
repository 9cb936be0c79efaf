//! The four pipeline commands.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use wristband_core::acquisition::{read_imu_stream, read_strain_stream, strain_line_width};
use wristband_core::evaluation::THETA_Y;
use wristband_core::oselm::{to_triple, training_cutoff};
use wristband_core::{
    align_streams, emit_streams, load_model, mean_error, r_squared, save_model, CircuitConfig, EvalPoint,
    EvalReport, Error as CoreError, ImuFrame, StrainFrame,
};

use crate::config::{load_run_config, load_scenario, to_toml};
use crate::error::{CliError, CliResult};
use crate::{EstimateArgs, EvaluateArgs, SimulateArgs, TrainArgs};

pub const STRAIN_FILE: &str = "strain.csv";
pub const IMU_FILE: &str = "imu.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const MODEL_FILE: &str = "model.bin";
pub const TRAIN_LOG_FILE: &str = "train_log.txt";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const OVERLAY_FILE: &str = "overlay.csv";
pub const RESIDUALS_FILE: &str = "residuals.csv";

pub const ESTIMATES_HEADER: &str = "t_ms,theta_x,theta_y,theta_z";

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn in_file(path: &Path) -> impl FnOnce(CoreError) -> CliError + '_ {
    move |e| match e {
        CoreError::Io(io) => CliError::io(path, io),
        other => CliError::core(path.display().to_string(), other),
    }
}

fn read_strain(path: &Path, circuit: &CircuitConfig) -> CliResult<Vec<StrainFrame>> {
    read_strain_stream(open(path)?, circuit).map_err(in_file(path))
}

fn read_imu(path: &Path) -> CliResult<Vec<ImuFrame>> {
    read_imu_stream(open(path)?).map_err(in_file(path))
}

/// Field count of the first data line of a strain file, minus the timestamp.
fn first_strain_width(path: &Path) -> CliResult<Option<usize>> {
    for line in open(path)?.lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        return Ok(Some(strain_line_width(trimmed)));
    }
    Ok(None)
}

fn format_estimate(t: u64, theta: &[f64; 3]) -> String {
    format!("{t},{:.9},{:.9},{:.9}", theta[0], theta[1], theta[2])
}

fn write_estimates<'a>(path: &Path, rows: impl Iterator<Item = (u64, &'a [f64; 3])>) -> CliResult<usize> {
    let mut w = create(path)?;
    let mut n = 0;
    let mut put = |line: &str| writeln!(w, "{line}").map_err(|e| CliError::io(path, e));
    put(ESTIMATES_HEADER)?;
    for (t, theta) in rows {
        put(&format_estimate(t, theta))?;
        n += 1;
    }
    finish(w, path)?;
    Ok(n)
}

/// Reads an estimates CSV: optional `t_ms,...` header, then
/// `t_ms,theta_x,theta_y,theta_z` rows with strictly increasing timestamps.
pub fn read_estimates(path: &Path) -> CliResult<Vec<(u64, [f64; 3])>> {
    let parse_err = |line: usize, message: String| CliError::core(path.display().to_string(), CoreError::Parse { line, message });
    let mut out: Vec<(u64, [f64; 3])> = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || (i == 0 && trimmed.starts_with("t_ms")) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(i + 1, format!("expected 4 fields, found {}", fields.len())));
        }
        let t: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("timestamp `{}` is not a non-negative integer", fields[0])))?;
        let mut theta = [0.0; 3];
        for (slot, tok) in theta.iter_mut().zip(&fields[1..]) {
            *slot = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(i + 1, format!("angle `{tok}` is not a finite number")))?;
        }
        if let Some(&(prev, _)) = out.last() {
            if t <= prev {
                return Err(parse_err(i + 1, format!("timestamp {t} does not follow {prev}")));
            }
        }
        out.push((t, theta));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub out: PathBuf,
    pub strain_frames: usize,
    pub imu_frames: usize,
}

impl fmt::Display for SimulateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "wrote {} strain frames and {} imu frames to {}",
            self.strain_frames,
            self.imu_frames,
            self.out.display()
        )
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<SimulateSummary> {
    let mut scenario = load_scenario(args.config.as_deref(), args.preset.as_deref())?;
    if let Some(seed) = args.seed {
        scenario.trajectory.seed = seed;
    }
    let streams = emit_streams(&scenario).map_err(|e| CliError::core("simulate", e))?;
    let manifest = to_toml(&scenario).map_err(|message| CliError::Config {
        path: args.out.join(MANIFEST_FILE),
        message,
    })?;

    out_dir(&args.out)?;
    let strain_path = args.out.join(STRAIN_FILE);
    let imu_path = args.out.join(IMU_FILE);
    let manifest_path = args.out.join(MANIFEST_FILE);
    streams
        .write(create(&strain_path)?, create(&imu_path)?)
        .map_err(|e| CliError::core("writing replay files", e))?;
    fs::write(&manifest_path, manifest).map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(SimulateSummary {
        out: args.out.clone(),
        strain_frames: streams.strain.len(),
        imu_frames: streams.imu.len(),
    })
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub out: PathBuf,
    pub n_hidden: usize,
    pub training_samples: usize,
    pub held_out: usize,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trained N={} on {} samples; {} held-out estimates in {}",
            self.n_hidden,
            self.training_samples,
            self.held_out,
            self.out.display()
        )
    }
}

pub fn train(args: &TrainArgs) -> CliResult<TrainSummary> {
    let mut cfg = load_run_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError::core("run config", e))?;
    let strain = read_strain(&args.strain, &cfg.circuit)?;
    let imu = read_imu(&args.imu)?;
    let mut aligned = align_streams(&strain, &imu).map_err(|e| CliError::core("aligning streams", e))?;

    // Held-out truth is withheld from training and only used for the log.
    let cutoff = training_cutoff(aligned.len(), cfg.training_fraction);
    let held_truth: Vec<[f64; 3]> = aligned[cutoff..].iter().map(|s| s.theta_avg).collect();
    for s in &mut aligned[cutoff..] {
        s.theta_avg = [f64::NAN; 3];
    }

    let online = cfg.online();
    let run = wristband_core::run_online(&aligned, &online).map_err(|e| CliError::core("training", e))?;
    debug_assert_eq!(run.cutoff, cutoff);

    out_dir(&args.out)?;
    let model_path = args.out.join(MODEL_FILE);
    fs::write(&model_path, save_model(&run.model)).map_err(|e| CliError::io(&model_path, e))?;
    let est_path = args.out.join(ESTIMATES_FILE);
    write_estimates(&est_path, run.estimates.iter().map(|e| (e.t, &e.theta)))?;

    let mut log = String::new();
    let mut kv = |k: &str, v: String| {
        log.push_str(k);
        log.push('=');
        log.push_str(&v);
        log.push('\n');
    };
    kv("seed", cfg.seed.to_string());
    kv("hidden_seed", run.hidden_seed.to_string());
    kv("strain_frames", strain.len().to_string());
    kv("imu_frames", imu.len().to_string());
    kv("aligned_samples", aligned.len().to_string());
    kv("imputed_samples", aligned.iter().filter(|s| s.imputed).count().to_string());
    kv("calibration_samples", run.calibration_samples.to_string());
    kv("pso_bounds", format!("{},{}", run.pso_bounds.0, run.pso_bounds.1));
    kv("pso_evaluations", run.pso.evaluated.len().to_string());
    kv(
        "pso_trace",
        run.pso.trace.iter().map(|f| format!("{f:.9}")).collect::<Vec<_>>().join(","),
    );
    kv("pso_best_fitness", format!("{:.9}", run.pso.best_fitness));
    kv("n_hidden", run.n_hidden().to_string());
    kv("activation", format!("{:?}", cfg.activation).to_lowercase());
    kv("training_samples", cutoff.to_string());
    kv("initial_block", run.initial_block.to_string());
    kv("chunk_size", cfg.chunk_size.to_string());
    kv("update_chunks", run.update_chunks().to_string());
    kv("held_out_samples", run.estimates.len().to_string());
    if run.estimates.len() >= 2 {
        let truth: Vec<f64> = held_truth.iter().map(|t| t[THETA_Y]).collect();
        let est: Vec<f64> = run.estimates.iter().map(|e| e.theta[THETA_Y]).collect();
        if let Ok(r2) = r_squared(&truth, &est) {
            kv("held_out_r_squared", format!("{r2:.9}"));
        }
        if let Ok(mae) = mean_error(&truth, &est) {
            kv("held_out_mean_error_deg", format!("{mae:.9}"));
        }
    }
    let log_path = args.out.join(TRAIN_LOG_FILE);
    fs::write(&log_path, log).map_err(|e| CliError::io(&log_path, e))?;

    Ok(TrainSummary {
        out: args.out.clone(),
        n_hidden: run.n_hidden(),
        training_samples: cutoff,
        held_out: run.estimates.len(),
    })
}

#[derive(Debug, Clone)]
pub struct EstimateSummary {
    pub out: PathBuf,
    pub rows: usize,
}

impl fmt::Display for EstimateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "wrote {} estimates to {}", self.rows, self.out.display())
    }
}

pub fn estimate(args: &EstimateArgs) -> CliResult<EstimateSummary> {
    let cfg = load_run_config(args.config.as_deref())?;
    let bytes = fs::read(&args.model).map_err(|e| CliError::io(&args.model, e))?;
    let model = load_model(&bytes).map_err(in_file(&args.model))?;

    let width = first_strain_width(&args.strain)?.unwrap_or(model.n_inputs());
    if width != model.n_inputs() {
        return Err(CliError::core(
            args.strain.display().to_string(),
            CoreError::ModelMismatch {
                expected: model.n_inputs(),
                actual: width,
            },
        ));
    }
    let circuit = CircuitConfig {
        m_sensors: width,
        ..cfg.circuit
    };
    circuit.validate().map_err(|e| CliError::core("circuit", e))?;
    let strain = read_strain(&args.strain, &circuit)?;

    let mut rows = Vec::with_capacity(strain.len());
    for frame in &strain {
        let out = model
            .predict(&frame.voltages)
            .map_err(|e| CliError::core(format!("frame at {} ms", frame.t), e))?;
        rows.push((frame.t, to_triple(&out)));
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    let n = write_estimates(&args.out, rows.iter().map(|(t, th)| (*t, th)))?;
    Ok(EstimateSummary {
        out: args.out.clone(),
        rows: n,
    })
}

#[derive(Debug, Clone)]
pub struct EvaluateSummary {
    pub out: PathBuf,
    pub report: EvalReport,
}

impl fmt::Display for EvaluateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: r_squared={:.4} mean_error_deg={:.3} n_samples={} ({})",
            self.report.scenario,
            self.report.r_squared,
            self.report.mean_error_deg,
            self.report.n_samples,
            self.out.display()
        )
    }
}

/// Pairs each estimate with the mean IMU angle over `[t_i, t_{i+1})`.
///
/// The last interval is closed one estimate period after its start so a long
/// IMU tail does not fold into it. Intervals without IMU frames are skipped.
pub fn truth_at_estimates(estimates: &[(u64, [f64; 3])], imu: &[ImuFrame]) -> wristband_core::Result<Vec<EvalPoint>> {
    let frames: Vec<StrainFrame> = estimates
        .iter()
        .map(|(t, theta)| StrainFrame {
            t: *t,
            voltages: theta.to_vec(),
        })
        .collect();
    let end = match estimates {
        [.., (a, _), (b, _)] => b + (b - a),
        [(a, _)] => a + 1,
        [] => return Err(CoreError::NoEstimates),
    };
    let cut = imu.partition_point(|f| f.t < end);
    let aligned = align_streams(&frames, &imu[..cut])?;
    let points: Vec<EvalPoint> = aligned
        .into_iter()
        .filter(|s| s.imu_count > 0)
        .map(|s| EvalPoint {
            t: s.t,
            truth: s.theta_avg,
            est: [s.voltages[0], s.voltages[1], s.voltages[2]],
        })
        .collect();
    if points.is_empty() {
        return Err(CoreError::NoOverlap);
    }
    Ok(points)
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<EvaluateSummary> {
    let estimates = read_estimates(&args.estimates)?;
    let imu = read_imu(&args.imu)?;
    let points = truth_at_estimates(&estimates, &imu).map_err(|e| CliError::core("evaluate", e))?;
    let report = EvalReport::new(args.scenario.clone(), points).map_err(|e| CliError::core("evaluate", e))?;

    out_dir(&args.out)?;
    let report_path = args.out.join(REPORT_FILE);
    fs::write(&report_path, report.to_text()).map_err(|e| CliError::io(&report_path, e))?;
    let overlay_path = args.out.join(OVERLAY_FILE);
    let mut w = create(&overlay_path)?;
    report.write_overlay_csv(&mut w).map_err(in_file(&overlay_path))?;
    finish(w, &overlay_path)?;
    let residual_path = args.out.join(RESIDUALS_FILE);
    let mut w = create(&residual_path)?;
    report.write_residual_csv(&mut w).map_err(in_file(&residual_path))?;
    finish(w, &residual_path)?;

    Ok(EvaluateSummary {
        out: args.out.clone(),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn imu(t: u64, y: f64) -> ImuFrame {
        ImuFrame { t, theta: [0.0, y, 0.0] }
    }

    #[test]
    fn truth_is_interval_mean() {
        let est = vec![(100, [0.0, 1.0, 0.0]), (300, [0.0, 2.0, 0.0])];
        let frames = [imu(90, 50.0), imu(100, 2.0), imu(200, 4.0), imu(300, 10.0), imu(499, 20.0), imu(500, 99.0)];
        let points = truth_at_estimates(&est, &frames).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].truth[1], 3.0);
        assert_eq!(points[1].truth[1], 15.0);
        assert_eq!(points[1].est[1], 2.0);
    }

    #[test]
    fn disjoint_ranges_do_not_overlap() {
        let est = vec![(1000, [0.0; 3]), (1200, [0.0; 3])];
        assert!(matches!(truth_at_estimates(&est, &[imu(0, 1.0), imu(30, 2.0)]), Err(CoreError::NoOverlap)));
        assert!(matches!(truth_at_estimates(&est, &[imu(5000, 1.0)]), Err(CoreError::NoOverlap)));
        assert!(matches!(truth_at_estimates(&[], &[imu(5000, 1.0)]), Err(CoreError::NoEstimates)));
    }

    #[test]
    fn empty_intervals_are_not_scored() {
        let est = vec![(0, [0.0; 3]), (200, [0.0; 3]), (400, [0.0; 3])];
        let points = truth_at_estimates(&est, &[imu(10, 1.0), imu(450, 2.0)]).unwrap();
        let ts: Vec<u64> = points.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![0, 400]);
    }

    #[test]
    fn estimate_rows_use_nine_decimals() {
        assert_eq!(format_estimate(5, &[1.0, -0.5, 1.0 / 3.0]), "5,1.000000000,-0.500000000,0.333333333");
    }
}
