//! Spatial L^p norms, trajectory (Bochner) norms, weak-L^q seminorms, and
//! the scaling-exponent bookkeeping that ties them together.

use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::state::MhdState;

/// Exponent set (d, r, p, q) with 1/q = (1/r - 1/p) * d/2. Under this
/// relation the trajectory norm has zero scaling dimension with respect to
/// the parabolic rescaling u(x,t) -> lambda u(lambda x, lambda^2 t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentTriple {
    pub d: usize,
    pub r: f64,
    pub p: f64,
    pub q: f64,
    /// r equals the space dimension: the critical initial-data class.
    pub marginal: bool,
}

/// Compute q from (d, r, p) and flag the marginal case r = d.
pub fn make_exponents(d: usize, r: f64, p: f64) -> Result<ExponentTriple> {
    if d != 2 && d != 3 {
        return Err(Error::InvalidParameter(format!("d must be 2 or 3, got {d}")));
    }
    if !(r > 1.0) || !(p > r) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exponents must satisfy 1 < r < p < inf, got r={r}, p={p}"
        )));
    }
    let q = 1.0 / ((1.0 / r - 1.0 / p) * d as f64 / 2.0);
    Ok(ExponentTriple {
        d,
        r,
        p,
        q,
        marginal: (r - d as f64).abs() < 1e-12,
    })
}

/// Spatial L^p norm of a single vector field by grid quadrature:
/// (sum |f(x)|^p * cell_volume)^(1/p), |f(x)| the pointwise Euclidean norm.
pub fn lp_norm_field(f: &SpectralVectorField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let grid = f.grid();
    let samples = f.to_samples();
    let points = grid.points();
    let dim = grid.dim();
    let mut acc = 0.0;
    for flat in 0..points {
        let mut sq = 0.0;
        for c in 0..dim {
            let v = samples[c * points + flat];
            sq += v * v;
        }
        acc += sq.sqrt().powf(p);
    }
    Ok((acc * grid.cell_volume()).powf(1.0 / p))
}

/// Joint L^p norm of a state: (integral of |v|^p + |H|^p)^(1/p).
pub fn lp_norm(u: &MhdState, p: f64) -> Result<f64> {
    let nv = lp_norm_field(&u.velocity, p)?;
    let nh = lp_norm_field(&u.magnetic, p)?;
    Ok((nv.powf(p) + nh.powf(p)).powf(1.0 / p))
}

/// Time-stamped sequence of states for Bochner-norm evaluation.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<MhdState>,
    /// Hash of the run configuration that produced the record.
    pub metadata: u64,
}

impl TrajectoryRecord {
    pub fn new(times: Vec<f64>, states: Vec<MhdState>, metadata: u64) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::EmptyRecord);
        }
        if times.windows(2).any(|w| w[1] <= w[0]) && times.len() > 1 {
            return Err(Error::InvalidParameter(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        Ok(TrajectoryRecord {
            times,
            states,
            metadata,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn last_state(&self) -> &MhdState {
        self.states.last().expect("record is non-empty")
    }

    /// Pointwise state difference; grids and time grids must agree.
    pub fn difference(&self, other: &Self) -> Result<TrajectoryRecord> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(other.times.iter())
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::GridMismatch);
        }
        let states = self
            .states
            .iter()
            .zip(other.states.iter())
            .map(|(a, b)| a.difference(b))
            .collect::<Result<Vec<_>>>()?;
        TrajectoryRecord::new(self.times.clone(), states, self.metadata)
    }
}

/// Scalar curve t -> value, for norm traces and probe outputs.
#[derive(Clone, Debug)]
pub struct NormCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Trajectory Bochner norm (integral of |u(t)|_p^q dt)^(1/q) by trapezoidal
/// quadrature over the record's own time grid.
pub fn bochner_norm(rec: &TrajectoryRecord, exps: &ExponentTriple) -> Result<f64> {
    if rec.is_empty() {
        return Err(Error::EmptyRecord);
    }
    let values = rec
        .states
        .iter()
        .map(|u| lp_norm(u, exps.p))
        .collect::<Result<Vec<_>>>()?;
    Ok(bochner_norm_curve(
        &NormCurve {
            times: rec.times.clone(),
            values,
        },
        exps.q,
    ))
}

/// Same quadrature applied to a precomputed |u(t)|_p curve.
pub fn bochner_norm_curve(curve: &NormCurve, q: f64) -> f64 {
    if curve.times.len() < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..curve.times.len() - 1 {
        let dt = curve.times[i + 1] - curve.times[i];
        let a = curve.values[i].powf(q);
        let b = curve.values[i + 1].powf(q);
        acc += 0.5 * (a + b) * dt;
    }
    acc.powf(1.0 / q)
}

/// Weak-L^q (Marcinkiewicz) seminorm of sampled values on a uniform grid of
/// (0, T): sup over a level sweep of lambda * mu(|f| > lambda)^(1/q), with
/// the measure approximated by counting * step. 200 logarithmically spaced
/// levels between min and max of |f| cover the range where the sup lives.
pub fn weak_lq_seminorm(samples: &[f64], step: f64, q: f64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q must be in [1, inf), got {q}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    let mut magnitudes: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    magnitudes.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let hi = *magnitudes.last().unwrap_or(&0.0);
    if hi == 0.0 {
        return Ok(0.0);
    }
    let lo = magnitudes
        .iter()
        .find(|&&m| m > 0.0)
        .copied()
        .unwrap_or(hi)
        .max(hi * 1e-8);

    const LEVELS: usize = 200;
    let ratio = (hi / lo).max(1.0);
    let mut best: f64 = 0.0;
    for j in 0..LEVELS {
        let lambda = lo * ratio.powf(j as f64 / (LEVELS - 1).max(1) as f64);
        // Evaluate just below the level so plateaus of |f| are counted.
        let level = lambda * (1.0 - 1e-9);
        let above = magnitudes.len() - magnitudes.partition_point(|&m| m <= level);
        if above == 0 {
            continue;
        }
        let measure = above as f64 * step;
        best = best.max(level * measure.powf(1.0 / q));
    }
    Ok(best)
}
