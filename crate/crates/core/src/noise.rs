//! Compensated Poisson jump noise: mark sampling, the compensated integral,
//! and the semigroup-filtered stochastic convolution that drives the mild
//! formulation.
//!
//! Only finite total intensity is supported: jump times are sampled exactly
//! from exponential inter-arrivals. Truncating an infinite-activity intensity
//! down to finitely many marks is the caller's responsibility.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::norms::TrajectoryRecord;
use crate::semigroup::semigroup_in_place;
use crate::state::MhdState;

/// Deterministic time modulation of a mark's amplitude field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Modulation {
    /// Amplitude constant in time.
    Constant,
    /// Amplitude scaled by cos(omega t).
    Cosine { omega: f64 },
}

impl Modulation {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Modulation::Constant => 1.0,
            Modulation::Cosine { omega } => (omega * t).cos(),
        }
    }
}

/// One jump mark: an identifier, a rate, an amplitude field, and its
/// time modulation.
#[derive(Clone, Debug)]
pub struct Mark {
    pub name: String,
    pub intensity: f64,
    pub amplitude: MhdState,
    pub modulation: Modulation,
}

/// Discretized mark space with per-mark intensities and amplitude fields.
#[derive(Clone, Debug)]
pub struct JumpNoiseSpec {
    marks: Vec<Mark>,
    seed: u64,
    /// Global time shift applied to modulations, used by the solver's
    /// interval-to-interval continuation.
    time_offset: f64,
}

const AMPLITUDE_DIVFREE_TOL: f64 = 1e-8;

impl JumpNoiseSpec {
    pub fn new(marks: Vec<Mark>, seed: u64) -> Result<Self> {
        if let Some(first) = marks.first() {
            let grid = first.amplitude.grid().clone();
            for mark in &marks {
                if !(mark.intensity > 0.0) || !mark.intensity.is_finite() {
                    return Err(Error::InvalidNoise(format!(
                        "mark '{}' needs a positive finite intensity, got {}",
                        mark.name, mark.intensity
                    )));
                }
                if mark.amplitude.grid() != &grid {
                    return Err(Error::InvalidNoise(format!(
                        "mark '{}' amplitude lives on a different grid",
                        mark.name
                    )));
                }
                let residual = mark.amplitude.divergence_residual();
                if residual > AMPLITUDE_DIVFREE_TOL {
                    return Err(Error::InvalidNoise(format!(
                        "mark '{}' amplitude is not divergence-free (residual {residual:.3e})",
                        mark.name
                    )));
                }
                if mark.amplitude.mean_mode_magnitude() > 1e-12 {
                    return Err(Error::InvalidNoise(format!(
                        "mark '{}' amplitude carries a mean mode",
                        mark.name
                    )));
                }
            }
        }
        Ok(JumpNoiseSpec {
            marks,
            seed,
            time_offset: 0.0,
        })
    }

    /// Noise with no marks: zero total intensity.
    pub fn silent(seed: u64) -> Self {
        JumpNoiseSpec {
            marks: Vec::new(),
            seed,
            time_offset: 0.0,
        }
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_silent(&self) -> bool {
        self.marks.is_empty()
    }

    /// Total intensity of the mark space.
    pub fn total_intensity(&self) -> f64 {
        self.marks.iter().map(|m| m.intensity).sum()
    }

    /// Spec with all modulations advanced by `tau`, pairing with a shifted
    /// path in the continuation construction.
    pub fn with_time_offset(&self, tau: f64) -> Self {
        let mut out = self.clone();
        out.time_offset += tau;
        out
    }

    /// Amplitude of a mark at absolute time t (modulation included).
    pub fn amplitude_at(&self, t: f64, mark: usize) -> MhdState {
        let m = &self.marks[mark];
        m.amplitude
            .scaled(m.modulation.value(t + self.time_offset))
    }

    /// Compensator drift field sum_z nu(z) xi(t, z).
    pub fn drift_at(&self, t: f64) -> Option<MhdState> {
        let first = self.marks.first()?;
        let mut acc = MhdState::zero(first.amplitude.grid());
        for m in &self.marks {
            let c = m.modulation.value(t + self.time_offset);
            acc.axpy(m.intensity * c, &m.amplitude)
                .expect("amplitudes share one grid");
        }
        Some(acc)
    }

    /// Time-independent drift when every mark is unmodulated; the midpoint
    /// compensator quadrature is then exact in closed form.
    fn constant_drift(&self) -> Option<MhdState> {
        if self.marks.is_empty()
            || self
                .marks
                .iter()
                .any(|m| m.modulation != Modulation::Constant)
        {
            return None;
        }
        self.drift_at(-self.time_offset)
    }

    /// Integrability summary sum_z |xi(z)|_r^2 nu(z) at modulation peak,
    /// the quantity required finite by the driving-noise assumption.
    pub fn integrability(&self, r: f64) -> Result<f64> {
        let mut total = 0.0;
        for m in &self.marks {
            let n = crate::norms::lp_norm(&m.amplitude, r)?;
            total += n * n * m.intensity;
        }
        Ok(total)
    }

    /// Second-moment target T * sum_z |xi(z)|_2^2 nu(z) for constant
    /// modulations (the isometry oracle).
    pub fn isometry_target(&self, horizon: f64) -> f64 {
        horizon
            * self
                .marks
                .iter()
                .map(|m| {
                    let n = m.amplitude.l2_norm();
                    n * n * m.intensity
                })
                .sum::<f64>()
    }
}

/// Time-ordered jump events over a finite horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpPath {
    pub events: Vec<(f64, usize)>,
    pub horizon: f64,
}

impl JumpPath {
    pub fn empty(horizon: f64) -> Self {
        JumpPath {
            events: Vec::new(),
            horizon,
        }
    }

    pub fn count(&self) -> usize {
        self.events.len()
    }

    /// Shifted path: events after tau, clock restarted at tau.
    pub fn shift(&self, tau: f64) -> Result<JumpPath> {
        if !(0.0..=self.horizon).contains(&tau) {
            return Err(Error::EventOutOfRange {
                time: tau,
                horizon: self.horizon,
            });
        }
        Ok(JumpPath {
            events: self
                .events
                .iter()
                .filter(|(t, _)| *t > tau)
                .map(|&(t, z)| (t - tau, z))
                .collect(),
            horizon: self.horizon - tau,
        })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn path_rng(spec_seed: u64, path_seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(spec_seed) ^ splitmix64(path_seed.wrapping_mul(0x9e37_79b9)))
}

/// Sample a jump path on [0, T]: exponential inter-arrivals at the total
/// intensity, marks i.i.d. proportional to their rates. Deterministic in
/// (spec seed, path seed).
pub fn sample_path(spec: &JumpNoiseSpec, horizon: f64, path_seed: u64) -> Result<JumpPath> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let lambda = spec.total_intensity();
    if lambda == 0.0 {
        return Ok(JumpPath::empty(horizon));
    }
    let mut rng = path_rng(spec.seed, path_seed);
    let exp = Exp::new(lambda)
        .map_err(|e| Error::InvalidNoise(format!("invalid total intensity: {e}")))?;
    let weights = WeightedIndex::new(spec.marks.iter().map(|m| m.intensity))
        .map_err(|e| Error::InvalidNoise(format!("invalid mark weights: {e}")))?;

    let mut events = Vec::new();
    let mut t = 0.0f64;
    loop {
        t += rng.sample(exp);
        if t > horizon {
            break;
        }
        let mark = rng.sample(&weights);
        events.push((t, mark));
    }
    Ok(JumpPath { events, horizon })
}

/// Compensated-integral state at time T:
/// sum of event amplitudes minus the compensator integral
/// (composite midpoint with at least 64 subintervals per unit time).
pub fn compensated_integral(
    spec: &JumpNoiseSpec,
    path: &JumpPath,
    horizon: f64,
) -> Result<MhdState> {
    for &(t, _) in &path.events {
        if t < 0.0 || t > horizon {
            return Err(Error::EventOutOfRange { time: t, horizon });
        }
    }
    let Some(first) = spec.marks.first() else {
        return Err(Error::InvalidNoise(
            "compensated integral needs at least one mark (use a silent spec upstream)".into(),
        ));
    };
    let mut acc = MhdState::zero(first.amplitude.grid());
    for &(t, mark) in &path.events {
        acc.axpy(1.0, &spec.amplitude_at(t, mark))?;
    }
    if let Some(drift) = spec.constant_drift() {
        acc.axpy(-horizon, &drift)?;
    } else {
        let nsub = ((64.0 * horizon).ceil() as usize).max(1);
        let h = horizon / nsub as f64;
        for j in 0..nsub {
            let s = (j as f64 + 0.5) * h;
            if let Some(drift) = spec.drift_at(s) {
                acc.axpy(-h, &drift)?;
            }
        }
    }
    Ok(acc)
}

/// Semigroup-filtered noise accumulation evaluated on a time grid:
/// Z(t) = sum_{t_i <= t} S(t - t_i) xi(t_i, z_i)
///      - integral_0^t S(t - s) [sum_z nu(z) xi(s, z)] ds.
///
/// Evaluated incrementally — the semigroup property lets each grid step
/// evolve the previous value exactly, insert the step's events, and apply a
/// midpoint compensator correction with at least 64 subintervals per unit
/// time.
pub fn stochastic_convolution(
    spec: &JumpNoiseSpec,
    path: &JumpPath,
    t_grid: &[f64],
) -> Result<TrajectoryRecord> {
    if t_grid.is_empty() {
        return Err(Error::EmptyRecord);
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "convolution time grid must be strictly increasing".into(),
        ));
    }
    if t_grid[0] < 0.0 || *t_grid.last().unwrap() > path.horizon + 1e-12 {
        return Err(Error::EventOutOfRange {
            time: *t_grid.last().unwrap(),
            horizon: path.horizon,
        });
    }
    let grid = match spec.marks.first() {
        Some(m) => m.amplitude.grid().clone(),
        None => {
            return Err(Error::InvalidNoise(
                "stochastic convolution needs at least one mark".into(),
            ))
        }
    };

    let mut states = Vec::with_capacity(t_grid.len());
    let mut z = MhdState::zero(&grid);
    let mut prev_t = 0.0f64;
    let silent_drift = spec.total_intensity() == 0.0;
    let const_drift = spec.constant_drift();

    for &t in t_grid {
        let dt = t - prev_t;
        if dt > 0.0 {
            semigroup_in_place(&grid, dt, &mut z);
            // Events in (prev_t, t] enter damped by their elapsed time.
            for &(te, mark) in &path.events {
                if te > prev_t && te <= t {
                    let mut xi = spec.amplitude_at(te, mark);
                    semigroup_in_place(&grid, t - te, &mut xi);
                    z.axpy(1.0, &xi)?;
                }
            }
            if !silent_drift {
                let nsub = ((64.0 * dt).ceil() as usize).max(1);
                let h = dt / nsub as f64;
                for j in 0..nsub {
                    let s = prev_t + (j as f64 + 0.5) * h;
                    let drift = match &const_drift {
                        Some(d) => Some(d.clone()),
                        None => spec.drift_at(s),
                    };
                    if let Some(mut drift) = drift {
                        semigroup_in_place(&grid, t - s, &mut drift);
                        z.axpy(-h, &drift)?;
                    }
                }
            }
        }
        states.push(z.clone());
        prev_t = t;
    }
    TrajectoryRecord::new(t_grid.to_vec(), states, splitmix64(spec.seed))
}
