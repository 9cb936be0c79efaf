//! Particle swarm search over the hidden-node count.
//!
//! Particles move on a continuous relaxation of the integer interval; every
//! position is rounded to the nearest integer before its fitness is looked up,
//! and fitness values are memoized per integer.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::AlignedSample;
use crate::elm::{Activation, HiddenParams};
use crate::error::{Error, Result};
use crate::evaluation::THETA_Y;
use crate::oselm::{default_initial_block, OselmState};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    /// Inertia weight `w`.
    pub inertia: f64,
    /// Cognitive coefficient `c1`.
    pub cognitive: f64,
    /// Social coefficient `c2`.
    pub social: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Not read from config files; pipelines derive it from their run seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 10,
            iterations: 15,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            n_min: 5,
            n_max: 60,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::InvalidConfig("pso.swarm_size must be >= 2".into()));
        }
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "pso bounds [{}, {}] must satisfy 1 <= n_min <= n_max",
                self.n_min, self.n_max
            )));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("pso.{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: f64,
    pub velocity: f64,
    pub best_position: f64,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub best_n: usize,
    pub best_fitness: f64,
    /// Global-best fitness after initialization and after each iteration.
    pub trace: Vec<f64>,
    /// Every distinct integer evaluated, with its fitness.
    pub evaluated: BTreeMap<usize, f64>,
    /// Per-particle fitness lookups, cache hits included.
    pub lookups: usize,
}

struct Memo<F> {
    fitness: F,
    cache: BTreeMap<usize, f64>,
    lookups: usize,
}

impl<F: FnMut(usize) -> Result<f64>> Memo<F> {
    fn eval(&mut self, n: usize) -> Result<f64> {
        self.lookups += 1;
        if let Some(&f) = self.cache.get(&n) {
            return Ok(f);
        }
        let f = (self.fitness)(n)?;
        let f = if f.is_nan() { f64::INFINITY } else { f };
        self.cache.insert(n, f);
        Ok(f)
    }
}

fn to_count(x: f64, lo: usize, hi: usize) -> usize {
    (x.round() as usize).clamp(lo, hi)
}

/// Global-best PSO minimizing `fitness` over `[n_min, n_max]`.
///
/// The global best is refreshed once per sweep, after every particle has
/// moved and been evaluated; ties keep the earlier particle.
pub fn pso_search<F>(fitness: F, config: &PsoConfig) -> Result<PsoOutcome>
where
    F: FnMut(usize) -> Result<f64>,
{
    config.validate()?;
    let (lo_n, hi_n) = (config.n_min, config.n_max);
    let (lo, hi) = (lo_n as f64, hi_n as f64);
    let vmax = 0.5 * (hi - lo);
    let mut rng = seed::rng(config.seed);
    let mut memo = Memo {
        fitness,
        cache: BTreeMap::new(),
        lookups: 0,
    };

    let mut swarm = Vec::with_capacity(config.swarm_size);
    for _ in 0..config.swarm_size {
        let position = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let velocity = if vmax > 0.0 { rng.random_range(-vmax..=vmax) } else { 0.0 };
        let f = memo.eval(to_count(position, lo_n, hi_n))?;
        swarm.push(Particle {
            position,
            velocity,
            best_position: position,
            best_fitness: f,
        });
    }

    let mut g = best_of(&swarm);
    let mut trace = vec![g.1];

    for _ in 0..config.iterations {
        for p in swarm.iter_mut() {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let v = config.inertia * p.velocity
                + config.cognitive * r1 * (p.best_position - p.position)
                + config.social * r2 * (g.0 - p.position);
            p.velocity = v.clamp(-vmax, vmax);
            p.position = (p.position + p.velocity).clamp(lo, hi);
            let f = memo.eval(to_count(p.position, lo_n, hi_n))?;
            if f < p.best_fitness {
                p.best_fitness = f;
                p.best_position = p.position;
            }
        }
        let candidate = best_of(&swarm);
        if candidate.1 < g.1 {
            g = candidate;
        }
        trace.push(g.1);
    }

    Ok(PsoOutcome {
        best_n: to_count(g.0, lo_n, hi_n),
        best_fitness: g.1,
        trace,
        evaluated: memo.cache,
        lookups: memo.lookups,
    })
}

fn best_of(swarm: &[Particle]) -> (f64, f64) {
    let mut best = (swarm[0].best_position, swarm[0].best_fitness);
    for p in &swarm[1..] {
        if p.best_fitness < best.1 {
            best = (p.best_position, p.best_fitness);
        }
    }
    best
}

/// Smallest calibration window that leaves `n` samples for training after an
/// 80/20 split and at least one for validation.
pub fn min_calibration_samples(n: usize) -> usize {
    let mut len = n.max(1);
    while len * 4 / 5 < n || len - len * 4 / 5 < 1 {
        len += 1;
    }
    len
}

/// Validation RMSE (degrees) of θy for an `n`-node network trained online on
/// the first 80% of `calib` and scored on the last 20%.
pub fn fitness_node_count(
    calib: &[AlignedSample],
    n: usize,
    seed: u64,
    activation: Activation,
    ridge: f64,
) -> Result<f64> {
    let required = min_calibration_samples(n);
    if calib.len() < required {
        return Err(Error::InsufficientData {
            what: "PSO calibration window",
            required,
            available: calib.len(),
        });
    }
    let split = calib.len() * 4 / 5;
    let m = calib[0].voltages.len();
    let inputs = DMatrix::from_fn(calib.len(), m, |i, j| calib[i].voltages[j]);
    let targets = DMatrix::from_fn(calib.len(), 1, |i, _| calib[i].theta_avg[THETA_Y]);

    let hidden = HiddenParams::random(n, m, activation, seed)?;
    let n0 = default_initial_block(n).min(split);
    let mut state = OselmState::init(
        hidden,
        &inputs.rows(0, n0).into_owned(),
        &targets.rows(0, n0).into_owned(),
        ridge,
    )?;
    state.update_chunked(
        &inputs.rows(n0, split - n0).into_owned(),
        &targets.rows(n0, split - n0).into_owned(),
        1,
    )?;

    let val = calib.len() - split;
    let pred = state.model().predict_batch(&inputs.rows(split, val).into_owned())?;
    let sse: f64 = (0..val)
        .map(|i| (pred[(i, 0)] - targets[(split + i, 0)]).powi(2))
        .sum();
    Ok((sse / val as f64).sqrt())
}
