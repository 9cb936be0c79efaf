//! Dual-rate stream alignment.
//!
//! Strain frames define the time base. A strain frame at `t_i` owns every IMU
//! frame with `t_i <= t < t_{i+1}`; the mean of those angles becomes the target
//! for that frame. An interval closes when the next strain frame arrives, or
//! on [`AlignQueue::flush`] at end of stream.

use std::collections::VecDeque;
use std::sync::Mutex;

use crate::acquisition::{ImuFrame, StrainFrame};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSample {
    /// Timestamp of the owning strain frame (ms).
    pub t: u64,
    pub voltages: Vec<f64>,
    /// Mean (θx, θy, θz) over the interval, degrees.
    pub theta_avg: [f64; 3],
    /// The interval held no IMU frames and `theta_avg` was carried forward.
    pub imputed: bool,
    /// Number of IMU frames averaged into `theta_avg`.
    pub imu_count: usize,
}

#[derive(Debug, Default)]
struct QueueState {
    strain: VecDeque<StrainFrame>,
    imu: VecDeque<ImuFrame>,
    last_strain_t: Option<u64>,
    last_imu_t: Option<u64>,
    prev_avg: Option<[f64; 3]>,
    // IMU frames stamped before this have already been consumed.
    closed_until: Option<u64>,
    dropped_imu: usize,
}

/// Thread-safe alignment queue: two producers (strain, IMU), one consumer.
#[derive(Debug, Default)]
pub struct AlignQueue {
    state: Mutex<QueueState>,
}

impl AlignQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Buffers a strain frame. Strain timestamps must strictly increase.
    pub fn push_strain(&self, frame: StrainFrame) -> Result<()> {
        let mut s = self.state.lock().expect("align queue poisoned");
        if let Some(prev) = s.last_strain_t {
            if frame.t <= prev {
                return Err(Error::Ordering {
                    stream: "strain",
                    previous: prev,
                    current: frame.t,
                });
            }
        }
        s.last_strain_t = Some(frame.t);
        s.strain.push_back(frame);
        Ok(())
    }

    /// Buffers an IMU frame. IMU timestamps must not decrease, and a frame may
    /// not land in an interval that was already emitted.
    pub fn push_imu(&self, frame: ImuFrame) -> Result<()> {
        let mut s = self.state.lock().expect("align queue poisoned");
        if let Some(prev) = s.last_imu_t {
            if frame.t < prev {
                return Err(Error::Ordering {
                    stream: "imu",
                    previous: prev,
                    current: frame.t,
                });
            }
        }
        if let Some(boundary) = s.closed_until {
            if frame.t < boundary {
                return Err(Error::LateFrame {
                    t: frame.t,
                    boundary,
                });
            }
        }
        s.last_imu_t = Some(frame.t);
        s.imu.push_back(frame);
        Ok(())
    }

    /// Emits one sample per strain frame whose interval has been closed by the
    /// arrival of the next strain frame.
    pub fn drain(&self) -> Vec<AlignedSample> {
        let mut s = self.state.lock().expect("align queue poisoned");
        let mut out = Vec::new();
        while s.strain.len() >= 2 {
            let frame = s.strain.pop_front().unwrap();
            let end = s.strain.front().unwrap().t;
            s.close_interval(frame, Some(end), &mut out);
        }
        out
    }

    /// Drains, then closes the final open interval with every remaining IMU
    /// frame. Ends the stream: later IMU frames are rejected as late.
    pub fn flush(&self) -> Vec<AlignedSample> {
        let mut out = self.drain();
        let mut s = self.state.lock().expect("align queue poisoned");
        if let Some(frame) = s.strain.pop_front() {
            s.close_interval(frame, None, &mut out);
        }
        s.dropped_imu += s.imu.len();
        s.imu.clear();
        s.closed_until = Some(u64::MAX);
        out
    }

    /// IMU frames that fell before the first strain frame (or after flush).
    pub fn dropped_imu(&self) -> usize {
        self.state.lock().expect("align queue poisoned").dropped_imu
    }
}

impl QueueState {
    fn close_interval(&mut self, frame: StrainFrame, end: Option<u64>, out: &mut Vec<AlignedSample>) {
        while self.imu.front().is_some_and(|f| f.t < frame.t) {
            self.imu.pop_front();
            self.dropped_imu += 1;
        }
        let mut sum = [0.0; 3];
        let mut count = 0usize;
        while let Some(f) = self.imu.front() {
            if end.is_some_and(|e| f.t >= e) {
                break;
            }
            for (acc, a) in sum.iter_mut().zip(f.theta) {
                *acc += a;
            }
            count += 1;
            self.imu.pop_front();
        }
        self.closed_until = Some(end.unwrap_or(u64::MAX));

        let (theta_avg, imputed) = if count > 0 {
            let avg = sum.map(|x| x / count as f64);
            self.prev_avg = Some(avg);
            (avg, false)
        } else if let Some(prev) = self.prev_avg {
            (prev, true)
        } else {
            // Nothing to carry forward yet.
            return;
        };
        out.push(AlignedSample {
            t: frame.t,
            voltages: frame.voltages,
            theta_avg,
            imputed,
            imu_count: count,
        });
    }
}

/// Aligns two complete replay streams, pushing frames in timestamp order and
/// flushing at the end.
pub fn align_streams(strain: &[StrainFrame], imu: &[ImuFrame]) -> Result<Vec<AlignedSample>> {
    let q = AlignQueue::new();
    let mut out = Vec::with_capacity(strain.len());
    let (mut i, mut j) = (0, 0);
    while i < strain.len() || j < imu.len() {
        // IMU first on ties so a frame stamped exactly at t_i joins interval i.
        let take_imu = j < imu.len() && (i >= strain.len() || imu[j].t <= strain[i].t);
        if take_imu {
            q.push_imu(imu[j])?;
            j += 1;
        } else {
            q.push_strain(strain[i].clone())?;
            i += 1;
            out.extend(q.drain());
        }
    }
    out.extend(q.flush());
    Ok(out)
}

pub fn format_aligned_line(s: &AlignedSample) -> String {
    let mut line = s.t.to_string();
    for v in &s.voltages {
        line.push_str(&format!(",{v:.10}"));
    }
    for a in s.theta_avg {
        line.push_str(&format!(",{a:.6}"));
    }
    line.push_str(if s.imputed { ",1" } else { ",0" });
    line
}
