//! The viscous/resistive block operator, its analytic semigroup, and
//! fractional powers, all realized as exact Fourier multipliers on
//! divergence-free mean-zero fields.
//!
//! On the torus the double curl restricted to divergence-free fields equals
//! the (negative) Laplacian, so every diagonal block reduces to the
//! multiplier |k|^2; the curl-curl kind nevertheless applies the literal
//! |k|^2 I - k k^T formula so the identity is exercised rather than assumed.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::grid::Grid;
use crate::norms::NormCurve;
use crate::state::MhdState;

const DIVFREE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    /// Projected Laplacian acting on the velocity block.
    Stokes,
    /// Double curl acting on the magnetic block.
    CurlCurl,
    /// Diagonal pair (Stokes, CurlCurl).
    Block,
}

#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub grid: Grid,
    pub kind: OperatorKind,
}

impl OperatorSpec {
    pub fn block(grid: &Grid) -> Self {
        OperatorSpec {
            grid: grid.clone(),
            kind: OperatorKind::Block,
        }
    }
}

fn check_grid(spec: &OperatorSpec, u: &MhdState) -> Result<()> {
    if &spec.grid != u.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn stokes_apply(f: &SpectralVectorField) -> SpectralVectorField {
    // -P Laplacian: multiplier |k|^2 followed by the projection.
    let mut out = f.clone();
    let grid = f.grid().clone();
    out.apply_multiplier(|flat| grid.k_sq(flat));
    crate::field::leray_project_in_place(&mut out);
    out
}

fn curl_curl_apply(f: &SpectralVectorField) -> SpectralVectorField {
    // curl curl: |k|^2 I - k k^T per mode.
    let grid = f.grid().clone();
    let mut out = SpectralVectorField::zero(&grid);
    for flat in 0..grid.points() {
        let k = grid.k_vec(flat);
        let ksq = grid.k_sq(flat);
        let mut dot = Complex64::default();
        for c in 0..f.dim() {
            dot += k[c] * f.component(c)[flat];
        }
        for c in 0..f.dim() {
            out.component_mut(c)[flat] = ksq * f.component(c)[flat] - k[c] * dot;
        }
    }
    out
}

/// Apply the operator itself (multiplier |k|^2 on divergence-free fields).
pub fn apply_operator(spec: &OperatorSpec, u: &MhdState) -> Result<MhdState> {
    check_grid(spec, u)?;
    let residual = u.divergence_residual();
    if residual > DIVFREE_TOL {
        return Err(Error::NotDivergenceFree { residual });
    }
    let out = match spec.kind {
        OperatorKind::Stokes => MhdState::new(stokes_apply(&u.velocity), stokes_apply(&u.magnetic))?,
        OperatorKind::CurlCurl => MhdState::new(
            curl_curl_apply(&u.velocity),
            curl_curl_apply(&u.magnetic),
        )?,
        OperatorKind::Block => MhdState::new(
            stokes_apply(&u.velocity),
            curl_curl_apply(&u.magnetic),
        )?,
    };
    Ok(out)
}

/// Semigroup action: multiplier exp(-|k|^2 t).
pub fn apply_semigroup(spec: &OperatorSpec, t: f64, u: &MhdState) -> Result<MhdState> {
    check_grid(spec, u)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "semigroup time must be nonnegative, got {t}"
        )));
    }
    let mut out = u.clone();
    semigroup_in_place(&spec.grid, t, &mut out);
    Ok(out)
}

/// In-place semigroup multiplier, shared with the solver's hot path.
pub(crate) fn semigroup_in_place(grid: &Grid, t: f64, u: &mut MhdState) {
    if t == 0.0 {
        return;
    }
    let grid = grid.clone();
    u.apply_multiplier(move |flat| (-grid.k_sq(flat) * t).exp());
}

/// Fractional power: multiplier |k|^(2 alpha), zero on the mean mode for
/// alpha > 0, identity for alpha = 0, and rejected for alpha < 0 when the
/// mean mode carries a coefficient (the multiplier is singular there).
pub fn apply_fractional(spec: &OperatorSpec, alpha: f64, u: &MhdState) -> Result<MhdState> {
    check_grid(spec, u)?;
    if alpha < 0.0 {
        let magnitude = u.mean_mode_magnitude();
        if magnitude > 1e-13 {
            return Err(Error::SingularMeanMode { magnitude });
        }
    }
    let mut out = u.clone();
    if alpha == 0.0 {
        return Ok(out);
    }
    let grid = spec.grid.clone();
    out.apply_multiplier(move |flat| {
        let ksq = grid.k_sq(flat);
        if ksq == 0.0 {
            0.0
        } else {
            ksq.powf(alpha)
        }
    });
    Ok(out)
}

/// Norm decay curve t -> |S(t) u0|_p for the smoothing estimate probe.
/// Requires 1 < r <= p < inf; r only gates the admissible exponent range,
/// the curve itself is a pure function of (p, u0, t).
pub fn smoothing_probe(
    spec: &OperatorSpec,
    r: f64,
    p: f64,
    u0: &MhdState,
    t_list: &[f64],
) -> Result<NormCurve> {
    if !(r > 1.0) || !(p >= r) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "smoothing probe needs 1 < r <= p < inf, got r={r}, p={p}"
        )));
    }
    let mut times = Vec::with_capacity(t_list.len());
    let mut values = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let ut = apply_semigroup(spec, t, u0)?;
        times.push(t);
        values.push(crate::norms::lp_norm(&ut, p)?);
    }
    Ok(NormCurve { times, values })
}

/// Least-squares slope of log(value) against log(t) over a time window.
pub fn loglog_slope(curve: &NormCurve, t_min: f64, t_max: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(curve.values.iter())
        .filter(|(&t, &v)| t >= t_min && t <= t_max && v > 0.0)
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Logarithmically spaced sample times, inclusive of both endpoints.
pub fn log_spaced(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && t_min > 0.0 && t_max > t_min);
    (0..count)
        .map(|i| t_min * (t_max / t_min).powf(i as f64 / (count - 1) as f64))
        .collect()
}
