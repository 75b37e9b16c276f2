//! Mild-solution time integration: the Duhamel fixed-point map, Picard
//! iteration with the smallness gate and contraction reporting, exponential
//! Euler stepping with exact jump insertion, 2D continuation over chained
//! local intervals, and the energy/Gronwall diagnostics.
//!
//! The Picard fixed point of the left-endpoint Duhamel quadrature and the
//! exponential-Euler recursion coincide on a shared time grid, so the local
//! existence construction and the stepping integrator are one algorithm seen
//! from two sides.

use crate::error::{Error, Result};
use crate::field::leray_project_in_place;
use crate::noise::{sample_path, stochastic_convolution, JumpNoiseSpec, JumpPath};
use crate::nonlinearity::{bilinear, trilinear_form};
use crate::norms::{bochner_norm, lp_norm, ExponentTriple, TrajectoryRecord};
use crate::semigroup::semigroup_in_place;
use crate::state::MhdState;

const BLOWUP_NORM: f64 = 1e12;
const DIVFREE_TOL: f64 = 1e-8;

/// Solver configuration. `ball_constant_k1` is the measured bilinear bound
/// constant from the verification report; the smallness gate applies an
/// additional 2x safety factor on top of it.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub exps: ExponentTriple,
    pub dt: f64,
    pub horizon: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub ball_constant_k1: f64,
    pub defensive_projection: bool,
}

impl SolverConfig {
    pub fn new(exps: ExponentTriple, dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0) || !(horizon > 0.0) || dt > horizon {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt <= horizon, got dt={dt}, horizon={horizon}"
            )));
        }
        Ok(SolverConfig {
            exps,
            dt,
            horizon,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            ball_constant_k1: 0.0,
            defensive_projection: true,
        })
    }

    pub fn with_ball_constant(mut self, k1: f64) -> Self {
        self.ball_constant_k1 = k1;
        self
    }

    /// FNV-1a hash of the configuration, stored as record metadata.
    pub fn config_hash(&self) -> u64 {
        let text = format!(
            "d={} r={} p={} q={} dt={} T={} tol={} iter={} k1={} proj={}",
            self.exps.d,
            self.exps.r,
            self.exps.p,
            self.exps.q,
            self.dt,
            self.horizon,
            self.picard_tol,
            self.picard_max_iter,
            self.ball_constant_k1,
            self.defensive_projection
        );
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        h
    }
}

/// Outcome of one local solve.
#[derive(Clone, Debug)]
pub struct LocalSolveReport {
    /// Realized local interval length (a grid point).
    pub tau: f64,
    /// The ball radius datum: |S(.)u0| + |Z| in the trajectory norm on [0, tau].
    pub n_tau: f64,
    /// Gate bound (10 tau^theta 2 K1)^-1 that n_tau satisfied.
    pub gate_bound: f64,
    /// Successive-difference contraction ratios per Picard sweep.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest defensive-projection correction applied to the bilinear term.
    pub projection_correction: f64,
}

/// Uniform time grid on [0, horizon] with jump times inserted as grid points,
/// so no step straddles a jump.
pub fn build_time_grid(horizon: f64, dt: f64, jump_times: &[f64]) -> Vec<f64> {
    let steps = (horizon / dt).round().max(1.0) as usize;
    let mut times: Vec<f64> = (0..=steps).map(|i| i as f64 * horizon / steps as f64).collect();
    for &tj in jump_times {
        if tj > 0.0 && tj < horizon {
            times.push(tj);
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    times
}

fn validate_initial(u0: &MhdState) -> Result<MhdState> {
    let residual = u0.divergence_residual();
    if residual > DIVFREE_TOL {
        return Err(Error::NotDivergenceFree { residual });
    }
    let mut u = u0.clone();
    u.zero_mean_mode();
    Ok(u)
}

fn check_blowup(u: &MhdState, t: f64) -> Result<()> {
    let n = u.l2_norm();
    if !n.is_finite() || n > BLOWUP_NORM {
        return Err(Error::BlowUp { time: t, norm: n });
    }
    Ok(())
}

/// Bilinear right-hand side with optional defensive projection; returns the
/// correction magnitude removed by the projection.
fn rhs_bilinear(w: &MhdState, defensive: bool) -> Result<(MhdState, f64)> {
    let mut b = bilinear(w, w)?.value;
    let mut correction = 0.0;
    if defensive {
        let before = b.clone();
        b.for_each_field_mut(leray_project_in_place);
        correction = b.difference(&before).map(|d| d.l2_norm()).unwrap_or(0.0);
    }
    Ok((b, correction))
}

/// The mild-solution map applied to a trajectory:
/// t -> S(t) u0 + integral_0^t S(t-s) B(Y+Z, Y+Z)(s) ds,
/// with the integral evaluated by left-endpoint semigroup quadrature on the
/// shared time grid of Y and Z.
pub fn duhamel_map(
    y: &TrajectoryRecord,
    z: &TrajectoryRecord,
    u0: &MhdState,
    cfg: &SolverConfig,
) -> Result<TrajectoryRecord> {
    duhamel_map_logged(y, z, u0, cfg).map(|(rec, _)| rec)
}

fn duhamel_map_logged(
    y: &TrajectoryRecord,
    z: &TrajectoryRecord,
    u0: &MhdState,
    cfg: &SolverConfig,
) -> Result<(TrajectoryRecord, f64)> {
    if y.times.len() != z.times.len()
        || y.times
            .iter()
            .zip(z.times.iter())
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::GridMismatch);
    }
    if y.times[0].abs() > 1e-14 {
        return Err(Error::InvalidParameter(
            "the Duhamel map needs a time grid starting at 0".into(),
        ));
    }
    let grid = u0.grid().clone();
    let mut states = Vec::with_capacity(y.times.len());
    let mut g = u0.clone();
    states.push(g.clone());
    let mut worst_correction = 0.0f64;
    for j in 0..y.times.len() - 1 {
        let dt = y.times[j + 1] - y.times[j];
        let mut w = y.states[j].clone();
        w.axpy(1.0, &z.states[j])?;
        let (b, correction) = rhs_bilinear(&w, cfg.defensive_projection)?;
        worst_correction = worst_correction.max(correction);
        g.axpy(dt, &b)?;
        semigroup_in_place(&grid, dt, &mut g);
        check_blowup(&g, y.times[j + 1])?;
        states.push(g.clone());
    }
    Ok((
        TrajectoryRecord::new(y.times.clone(), states, cfg.config_hash())?,
        worst_correction,
    ))
}

/// Linear part t -> S(t) u0 on a time grid, evaluated incrementally.
pub fn semigroup_trajectory(
    u0: &MhdState,
    times: &[f64],
    metadata: u64,
) -> Result<TrajectoryRecord> {
    let grid = u0.grid().clone();
    let mut states = Vec::with_capacity(times.len());
    let mut g = u0.clone();
    let mut prev = times[0];
    if prev.abs() > 1e-14 {
        semigroup_in_place(&grid, prev, &mut g);
    }
    states.push(g.clone());
    for &t in &times[1..] {
        semigroup_in_place(&grid, t - prev, &mut g);
        states.push(g.clone());
        prev = t;
    }
    TrajectoryRecord::new(times.to_vec(), states, metadata)
}

fn prefix_record(rec: &TrajectoryRecord, len: usize) -> TrajectoryRecord {
    TrajectoryRecord {
        times: rec.times[..len].to_vec(),
        states: rec.states[..len].to_vec(),
        metadata: rec.metadata,
    }
}

/// Initial guess for the Picard iteration. Any admissible start converges
/// to the same fixed point; offering two makes the uniqueness check direct.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PicardStart {
    Zero,
    /// Y_0(t) = S(t) u0, the linear part of the solution.
    LinearPart,
}

/// Picard iteration for the local mild solution on a prefix of Z's grid.
///
/// The local interval starts at the full grid and halves until
/// |S(.)u0| + |Z| < (10 tau^(1/2 - d/2r) * 2 K1)^-1 in the trajectory norm
/// (the measured ball constant with a 2x safety factor). Iterates
/// Y_{n+1} = Gamma(Y_n) from Y_0 = 0 until the successive trajectory-norm
/// difference drops below `picard_tol`, recording contraction ratios.
/// Returns the solution u = Y + Z on [0, tau] and the solve report.
pub fn picard_solve(
    u0: &MhdState,
    z: &TrajectoryRecord,
    cfg: &SolverConfig,
) -> Result<(TrajectoryRecord, LocalSolveReport)> {
    picard_solve_from(u0, z, cfg, PicardStart::Zero)
}

/// [`picard_solve`] with an explicit starting guess.
pub fn picard_solve_from(
    u0: &MhdState,
    z: &TrajectoryRecord,
    cfg: &SolverConfig,
    start: PicardStart,
) -> Result<(TrajectoryRecord, LocalSolveReport)> {
    if cfg.ball_constant_k1 <= 0.0 {
        return Err(Error::InvalidParameter(
            "ball_constant_k1 must be positive: measure it with the bilinear probe first".into(),
        ));
    }
    if z.times.is_empty() || z.times[0].abs() > 1e-14 {
        return Err(Error::InvalidParameter(
            "the noise record must start at t = 0".into(),
        ));
    }
    let u0 = validate_initial(u0)?;
    let linear = semigroup_trajectory(&u0, &z.times, cfg.config_hash())?;

    let theta = 0.5 - cfg.exps.d as f64 / (2.0 * cfg.exps.r);
    let k_eff = 2.0 * cfg.ball_constant_k1;

    // Halve the candidate interval until the smallness gate passes.
    let mut len = z.times.len();
    let (tau, n_tau, bound) = loop {
        if len < 3 {
            let tau = z.times[len - 1];
            let n_tau = bochner_norm(&prefix_record(&linear, len), &cfg.exps)?
                + bochner_norm(&prefix_record(z, len), &cfg.exps)?;
            let bound = (10.0 * tau.powf(theta) * k_eff).recip();
            return Err(Error::SmallnessGate { tau, n_tau, bound });
        }
        let tau = z.times[len - 1];
        let n_tau = bochner_norm(&prefix_record(&linear, len), &cfg.exps)?
            + bochner_norm(&prefix_record(z, len), &cfg.exps)?;
        let bound = (10.0 * tau.powf(theta) * k_eff).recip();
        if n_tau < bound {
            break (tau, n_tau, bound);
        }
        let half = tau / 2.0;
        let new_len = z.times[..len].partition_point(|&t| t <= half + 1e-14);
        len = new_len.min(len - 1).max(2);
    };

    let z_local = prefix_record(z, len);
    let times = z_local.times.clone();
    let mut y = match start {
        PicardStart::Zero => TrajectoryRecord::new(
            times,
            vec![MhdState::zero(u0.grid()); z_local.times.len()],
            cfg.config_hash(),
        )?,
        PicardStart::LinearPart => prefix_record(&linear, len),
    };

    let mut ratios = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut worst_correction = 0.0f64;
    for sweep in 1..=cfg.picard_max_iter {
        let (next, correction) = duhamel_map_logged(&y, &z_local, &u0, cfg)?;
        worst_correction = worst_correction.max(correction);
        let diff = bochner_norm(&next.difference(&y)?, &cfg.exps)?;
        if let Some(prev) = prev_diff {
            if prev > 10.0 * cfg.picard_tol {
                ratios.push(diff / prev);
            }
        }
        y = next;
        if diff < cfg.picard_tol {
            let mut u = y.clone();
            for (s, zs) in u.states.iter_mut().zip(z_local.states.iter()) {
                s.axpy(1.0, zs)?;
            }
            let report = LocalSolveReport {
                tau,
                n_tau,
                gate_bound: bound,
                contraction_ratios: ratios,
                converged: true,
                iterations: sweep,
                projection_correction: worst_correction,
            };
            return Ok((u, report));
        }
        prev_diff = Some(diff);
    }
    Err(Error::PicardDiverged {
        iterations: cfg.picard_max_iter,
        last_diff: prev_diff.unwrap_or(f64::NAN),
    })
}

/// One exponential-Euler step:
/// u <- S(dt) (u + dt B(u,u) - dt drift) followed by adding the amplitudes
/// of jumps that land exactly on the step boundary. Returns the stepped
/// state and the defensive-projection correction magnitude.
pub fn step_exponential_euler(
    u: &MhdState,
    dt: f64,
    drift: Option<&MhdState>,
    jumps: &[MhdState],
    defensive_projection: bool,
) -> Result<(MhdState, f64)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let grid = u.grid().clone();
    let (b, correction) = rhs_bilinear(u, defensive_projection)?;
    let mut next = u.clone();
    next.axpy(dt, &b)?;
    if let Some(d) = drift {
        next.axpy(-dt, d)?;
    }
    semigroup_in_place(&grid, dt, &mut next);
    for xi in jumps {
        next.axpy(1.0, xi)?;
    }
    check_blowup(&next, dt)?;
    Ok((next, correction))
}

/// Deterministic (noise-free) trajectory by exponential-Euler stepping.
/// Identical to the Picard fixed point on the same grid.
pub fn solve_deterministic(u0: &MhdState, cfg: &SolverConfig) -> Result<TrajectoryRecord> {
    let u0 = validate_initial(u0)?;
    let times = build_time_grid(cfg.horizon, cfg.dt, &[]);
    let mut states = Vec::with_capacity(times.len());
    let mut u = u0;
    states.push(u.clone());
    for j in 0..times.len() - 1 {
        let dt = times[j + 1] - times[j];
        let (next, _) = step_exponential_euler(&u, dt, None, &[], cfg.defensive_projection)?;
        u = next;
        check_blowup(&u, times[j + 1])?;
        states.push(u.clone());
    }
    TrajectoryRecord::new(times, states, cfg.config_hash())
}

/// Result of the chained 2D global solve.
#[derive(Clone, Debug)]
pub struct GlobalSolveResult {
    /// The solution u on the full grid of [0, T].
    pub trajectory: TrajectoryRecord,
    /// The stochastic convolution Z on the same grid, assembled across
    /// intervals through the splitting Z(tau + s) = S(s) Z(tau) + Z_shifted(s).
    pub noise_trajectory: TrajectoryRecord,
    /// One report per chained local interval.
    pub reports: Vec<LocalSolveReport>,
    /// Flags marking grid times that carry a jump event.
    pub jump_flags: Vec<bool>,
    /// The sampled jump path.
    pub path: JumpPath,
}

/// Global 2D solve on [0, T]: chains local Picard solves, restarting from
/// the terminal state with the time-shifted jump measure after each
/// realized interval.
pub fn solve_global_2d(
    u0: &MhdState,
    noise: &JumpNoiseSpec,
    path_seed: u64,
    cfg: &SolverConfig,
) -> Result<GlobalSolveResult> {
    if cfg.exps.d != 2 || u0.grid().dim() != 2 {
        return Err(Error::InvalidParameter(
            "the global solve is only available in dimension 2".into(),
        ));
    }
    if (cfg.exps.r - 2.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(
            "the global solve uses the marginal exponents r = 2".into(),
        ));
    }
    let grid = u0.grid().clone();
    let path = if noise.is_silent() {
        JumpPath::empty(cfg.horizon)
    } else {
        sample_path(noise, cfg.horizon, path_seed)?
    };
    let jump_times: Vec<f64> = path.events.iter().map(|e| e.0).collect();
    let times = build_time_grid(cfg.horizon, cfg.dt, &jump_times);

    let mut u_states: Vec<MhdState> = Vec::with_capacity(times.len());
    let mut z_states: Vec<MhdState> = Vec::with_capacity(times.len());
    let mut reports = Vec::new();

    let mut start_idx = 0usize;
    let mut current_u0 = u0.clone();
    let mut z_start = MhdState::zero(&grid);

    while start_idx < times.len() - 1 {
        let offset = times[start_idx];
        let local_times: Vec<f64> = times[start_idx..].iter().map(|t| t - offset).collect();
        let local_z = if noise.is_silent() {
            TrajectoryRecord::new(
                local_times.clone(),
                vec![MhdState::zero(&grid); local_times.len()],
                cfg.config_hash(),
            )?
        } else {
            let shifted_path = path.shift(offset)?;
            let shifted_spec = noise.with_time_offset(offset);
            stochastic_convolution(&shifted_spec, &shifted_path, &local_times)?
        };

        let mut local_cfg = cfg.clone();
        local_cfg.horizon = *local_times.last().unwrap();
        let (local_u, report) = picard_solve(&current_u0, &local_z, &local_cfg)?;
        let local_len = local_u.times.len();

        // Append, skipping the duplicated interval start except at t = 0.
        let skip = usize::from(start_idx > 0);
        let mut z_evolved = z_start.clone();
        for j in 0..local_len {
            if j > 0 {
                let dt = local_u.times[j] - local_u.times[j - 1];
                semigroup_in_place(&grid, dt, &mut z_evolved);
            }
            if j >= skip {
                let mut z_here = z_evolved.clone();
                z_here.axpy(1.0, &local_z.states[j])?;
                z_states.push(z_here);
                u_states.push(local_u.states[j].clone());
            }
        }

        current_u0 = local_u.last_state().clone();
        semigroup_in_place(
            &grid,
            local_u.horizon() - local_u.times[0],
            &mut z_start,
        );
        z_start.axpy(1.0, local_z.last_state())?;
        reports.push(report);
        start_idx += local_len - 1;
    }

    let jump_flags = times
        .iter()
        .map(|&t| jump_times.iter().any(|&tj| (tj - t).abs() < 1e-12))
        .collect();
    Ok(GlobalSolveResult {
        trajectory: TrajectoryRecord::new(times.clone(), u_states, cfg.config_hash())?,
        noise_trajectory: TrajectoryRecord::new(times, z_states, cfg.config_hash())?,
        reports,
        jump_flags,
        path,
    })
}

/// Gronwall fit over an energy trace: smallest constants (c1, c2) with
/// dE/dt <= c1 a(t) E + c2 a(t) pointwise, a(t) = |Z(t)|_4^4, plus the
/// discrete product-form majorant they generate.
#[derive(Clone, Debug)]
pub struct GronwallFit {
    pub c1: f64,
    pub c2: f64,
    /// Max over time of the discrete majorant curve.
    pub majorant_sup: f64,
    /// Continuum exponential-integral form of the same majorant.
    pub continuum_majorant: f64,
    pub feasible: bool,
}

/// Energy diagnostics of a 2D trajectory against its noise convolution.
#[derive(Clone, Debug)]
pub struct EnergyDiagnostics {
    pub times: Vec<f64>,
    /// |Y(t)|_2^2 with Y = u - Z.
    pub energy: Vec<f64>,
    /// |grad Y(t)|_2^2.
    pub grad_energy: Vec<f64>,
    /// The four trilinear coupling terms per step (summed).
    pub coupling: Vec<f64>,
    /// Discrete energy-balance residual per step.
    pub residuals: Vec<f64>,
    pub sup_energy: f64,
    pub gronwall: GronwallFit,
    /// sup E <= majorant held along the trajectory.
    pub bounded_by_majorant: bool,
    /// Energy nonincreasing (meaningful for zero-noise runs).
    pub nonincreasing: bool,
}

/// Evaluate the 2D energy identity and fit its Gronwall majorant.
pub fn energy_diagnostics(
    rec: &TrajectoryRecord,
    z: &TrajectoryRecord,
) -> Result<EnergyDiagnostics> {
    if rec.times.len() != z.times.len() {
        return Err(Error::GridMismatch);
    }
    let grid = rec.states[0].grid().clone();
    if grid.dim() != 2 {
        return Err(Error::InvalidParameter(
            "energy diagnostics are defined for 2D runs".into(),
        ));
    }
    let n = rec.times.len();
    let mut energy = Vec::with_capacity(n);
    let mut grad_energy = Vec::with_capacity(n);
    let mut coupling = Vec::with_capacity(n);
    let mut a_values = Vec::with_capacity(n);

    let noise_present = z.states.iter().any(|s| s.l2_norm() > 0.0);
    for j in 0..n {
        let y = rec.states[j].difference(&z.states[j])?;
        let e = y.l2_norm();
        energy.push(e * e);
        let gr = y.grad_l2_norm();
        grad_energy.push(gr * gr);
        let a4 = if noise_present {
            lp_norm(&z.states[j], 4.0)?.powi(4)
        } else {
            0.0
        };
        a_values.push(a4);

        if noise_present {
            // Chain rule for |Y|^2 against the mild dynamics: the forcing is
            // -b(W1,Z1,Y1) + b(W2,Z2,Y1) - b(W1,Z2,Y2) + b(W2,Z1,Y2),
            // advectors W = u = Y + Z.
            let w1 = &rec.states[j].velocity;
            let w2 = &rec.states[j].magnetic;
            let z1 = &z.states[j].velocity;
            let z2 = &z.states[j].magnetic;
            let y1 = &y.velocity;
            let y2 = &y.magnetic;
            let t1 = -trilinear_form(w1, z1, y1)?;
            let t2 = trilinear_form(w2, z2, y1)?;
            let t3 = -trilinear_form(w1, z2, y2)?;
            let t4 = trilinear_form(w2, z1, y2)?;
            coupling.push(t1 + t2 + t3 + t4);
        } else {
            coupling.push(0.0);
        }
    }

    let mut residuals = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n - 1 {
        let dt = rec.times[j + 1] - rec.times[j];
        let dedt = (energy[j + 1] - energy[j]) / dt;
        residuals.push(0.5 * dedt + grad_energy[j] - coupling[j]);
    }

    let sup_energy = energy.iter().copied().fold(0.0, f64::max);
    let gronwall = fit_gronwall(&rec.times, &energy, &a_values);
    let bounded = gronwall.feasible && sup_energy <= gronwall.majorant_sup * (1.0 + 1e-9);
    let scale = sup_energy.max(1e-30);
    let nonincreasing = energy.windows(2).all(|w| w[1] <= w[0] + 1e-10 * scale);

    Ok(EnergyDiagnostics {
        times: rec.times.clone(),
        energy,
        grad_energy,
        coupling,
        residuals,
        sup_energy,
        gronwall,
        bounded_by_majorant: bounded,
        nonincreasing,
    })
}

fn fit_gronwall(times: &[f64], energy: &[f64], a: &[f64]) -> GronwallFit {
    let n = times.len();
    let scale = energy.iter().copied().fold(0.0, f64::max).max(1e-30);
    let a_floor = 1e-14 * a.iter().copied().fold(0.0, f64::max).max(1e-30);

    // Steps where the noise term vanishes must be dissipative on their own.
    let mut quiet_ok = true;
    let mut active = Vec::new();
    for j in 0..n - 1 {
        let dt = times[j + 1] - times[j];
        let dedt = (energy[j + 1] - energy[j]) / dt;
        if a[j] <= a_floor {
            if dedt > 1e-8 * scale {
                quiet_ok = false;
            }
        } else {
            active.push((dedt, a[j], energy[j]));
        }
    }

    let candidates: Vec<f64> = std::iter::once(0.0)
        .chain((0..36).map(|i| 1e-3 * (1e7f64).powf(i as f64 / 35.0)))
        .collect();
    let mut best: Option<GronwallFit> = None;
    for &c1 in &candidates {
        let mut c2 = 0.0f64;
        for &(dedt, aj, ej) in &active {
            c2 = c2.max((dedt - c1 * aj * ej) / aj);
        }
        let c2 = c2.max(0.0);
        if c2 > 1e9 {
            continue;
        }
        // Discrete product-form majorant: m_{j+1} = m_j (1 + dt c1 a_j) + dt c2 a_j.
        let mut m = energy[0];
        let mut m_sup = m;
        for j in 0..n - 1 {
            let dt = times[j + 1] - times[j];
            m = m * (1.0 + dt * c1 * a[j]) + dt * c2 * a[j];
            m_sup = m_sup.max(m);
        }
        let fit = GronwallFit {
            c1,
            c2,
            majorant_sup: m_sup,
            continuum_majorant: continuum_majorant(times, energy[0], a, c1, c2),
            feasible: quiet_ok,
        };
        if best.as_ref().map_or(true, |b| fit.majorant_sup < b.majorant_sup) {
            best = Some(fit);
        }
    }
    best.unwrap_or(GronwallFit {
        c1: f64::NAN,
        c2: f64::NAN,
        majorant_sup: f64::INFINITY,
        continuum_majorant: f64::INFINITY,
        feasible: false,
    })
}

/// exp(c1 A(T)) E0 + c2 * integral_0^T exp(c1 (A(T) - A(s))) a(s) ds with
/// A the left-rule cumulative of a.
fn continuum_majorant(times: &[f64], e0: f64, a: &[f64], c1: f64, c2: f64) -> f64 {
    let n = times.len();
    let mut cum = vec![0.0f64; n];
    for j in 0..n - 1 {
        cum[j + 1] = cum[j] + (times[j + 1] - times[j]) * a[j];
    }
    let total = cum[n - 1];
    let mut integral = 0.0;
    for j in 0..n - 1 {
        let dt = times[j + 1] - times[j];
        integral += (c1 * (total - cum[j])).exp() * a[j] * dt;
    }
    (c1 * total).exp() * e0 + c2 * integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::noise::{Mark, Modulation};
    use crate::norms::make_exponents;
    use crate::semigroup::{apply_semigroup, OperatorSpec};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn grid2(n: usize) -> Grid {
        Grid::new(2, n, 2.0 * PI).unwrap()
    }

    fn small_cfg(grid_horizon: f64, dt: f64) -> SolverConfig {
        let exps = make_exponents(2, 2.0, 4.0).unwrap();
        SolverConfig::new(exps, dt, grid_horizon)
            .unwrap()
            .with_ball_constant(0.5)
    }

    fn zero_record(grid: &Grid, times: &[f64]) -> TrajectoryRecord {
        TrajectoryRecord::new(
            times.to_vec(),
            vec![MhdState::zero(grid); times.len()],
            0,
        )
        .unwrap()
    }

    #[test]
    fn time_grid_aligns_jumps() {
        let times = build_time_grid(1.0, 0.25, &[0.3, 0.75]);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!(times.iter().any(|&t| (t - 0.3).abs() < 1e-15));
        assert!(times.iter().any(|&t| (t - 0.75).abs() < 1e-15));
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 1.0);
    }

    #[test]
    fn duhamel_zero_input_reproduces_semigroup_decay() {
        let g = grid2(16);
        let u0 = MhdState::taylor_green_2d(&g, 0.1, 0.05).unwrap();
        let cfg = small_cfg(0.5, 0.05);
        let times = build_time_grid(0.5, 0.05, &[]);
        let y = zero_record(&g, &times);
        let z = zero_record(&g, &times);
        let gamma = duhamel_map(&y, &z, &u0, &cfg).unwrap();
        let spec = OperatorSpec::block(&g);
        for (j, &t) in times.iter().enumerate() {
            let expect = apply_semigroup(&spec, t, &u0).unwrap();
            let diff = gamma.states[j].difference(&expect).unwrap();
            assert!(diff.l2_norm() < 1e-12 * u0.l2_norm());
        }
    }

    #[test]
    fn duhamel_constant_forcing_matches_closed_form() {
        // u0 = 0 and a time-constant W with beta = B(W,W) fixed: the exact
        // integral has per-mode multiplier (1 - exp(-|k|^2 t)) / |k|^2.
        // Left-endpoint quadrature converges at first order.
        let g = grid2(32);
        let w = MhdState::taylor_green_2d(&g, 0.3, 0.0).unwrap();
        let beta = bilinear(&w, &w).unwrap().value;
        let u0 = MhdState::zero(&g);

        let mut errors = Vec::new();
        for &dt in &[2e-3, 1e-3] {
            let cfg = small_cfg(0.5, dt);
            let times = build_time_grid(0.5, dt, &[]);
            let y = TrajectoryRecord::new(
                times.clone(),
                vec![w.clone(); times.len()],
                0,
            )
            .unwrap();
            let z = zero_record(&g, &times);
            let gamma = duhamel_map(&y, &z, &u0, &cfg).unwrap();

            let mut exact = beta.clone();
            let t_end = 0.5;
            let grid = g.clone();
            exact.apply_multiplier(move |flat| {
                let ksq = grid.k_sq(flat);
                if ksq == 0.0 {
                    t_end
                } else {
                    (1.0 - (-ksq * t_end).exp()) / ksq
                }
            });
            let diff = gamma.last_state().difference(&exact).unwrap();
            errors.push(diff.l2_norm() / exact.l2_norm());
        }
        assert!(errors[1] < 5e-3, "relative error {} too large", errors[1]);
        let order = (errors[0] / errors[1]).log2();
        assert!(order > 0.8, "left-endpoint quadrature should be first order, got {order}");
    }

    #[test]
    fn picard_zero_data_trivial_fixed_point() {
        let g = grid2(16);
        let u0 = MhdState::zero(&g);
        let cfg = small_cfg(0.25, 0.05);
        let times = build_time_grid(0.25, 0.05, &[]);
        let z = zero_record(&g, &times);
        let (u, report) = picard_solve(&u0, &z, &cfg).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert!(u.states.iter().all(|s| s.l2_norm() == 0.0));
    }

    #[test]
    fn picard_small_data_contracts_and_matches_stepping() {
        let g = grid2(32);
        let u0 = MhdState::taylor_green_2d(&g, 0.05, 0.025).unwrap();
        let cfg = small_cfg(0.5, 0.01);
        let times = build_time_grid(0.5, 0.01, &[]);
        let z = zero_record(&g, &times);
        let (u, report) = picard_solve(&u0, &z, &cfg).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 20);
        assert!(
            report.contraction_ratios.iter().all(|&r| r < 0.65),
            "ratios {:?}",
            report.contraction_ratios
        );
        // Fixed point equals the exponential-Euler recursion.
        let det = solve_deterministic(&u0, &cfg).unwrap();
        let diff = u.difference(&det).unwrap();
        let worst = diff
            .states
            .iter()
            .map(|s| s.l2_norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "picard vs stepping deviation {worst}");
    }

    #[test]
    fn picard_gate_fails_for_huge_data() {
        let g = grid2(16);
        let u0 = MhdState::taylor_green_2d(&g, 50.0, 25.0).unwrap();
        let exps = make_exponents(2, 2.0, 4.0).unwrap();
        let cfg = SolverConfig::new(exps, 0.05, 0.2)
            .unwrap()
            .with_ball_constant(0.5);
        let times = build_time_grid(0.2, 0.05, &[]);
        let z = zero_record(&g, &times);
        assert!(matches!(
            picard_solve(&u0, &z, &cfg),
            Err(Error::SmallnessGate { .. })
        ));
    }

    #[test]
    fn picard_requires_measured_constant() {
        let g = grid2(16);
        let u0 = MhdState::zero(&g);
        let exps = make_exponents(2, 2.0, 4.0).unwrap();
        let cfg = SolverConfig::new(exps, 0.05, 0.2).unwrap();
        let times = build_time_grid(0.2, 0.05, &[]);
        let z = zero_record(&g, &times);
        assert!(picard_solve(&u0, &z, &cfg).is_err());
    }

    #[test]
    fn exponential_euler_linear_case_is_exact() {
        let g = grid2(16);
        let mut u0 = MhdState::zero(&g);
        // single mode k=(1,0), div-free direction (0,1)
        u0.velocity.set_coeff(1, &[1, 0], Complex64::new(0.5, 0.0));
        u0.velocity.set_coeff(1, &[-1, 0], Complex64::new(0.5, 0.0));
        // B(u0,u0) = 0 for a single-mode field advecting itself along its
        // own invariance direction: (v . grad) v has v orthogonal to k.
        let (next, _) = step_exponential_euler(&u0, 0.3, None, &[], true).unwrap();
        let expect = u0.scaled((-0.3f64).exp());
        let diff = next.difference(&expect).unwrap();
        assert!(diff.l2_norm() < 1e-13);
    }

    #[test]
    fn jump_insertion_is_exact_at_boundary() {
        let g = grid2(16);
        let u0 = MhdState::zero(&g);
        let xi = MhdState::random(&g, 3, |k| (1.0 + k).powf(-2.0), Some(3));
        let (next, _) = step_exponential_euler(&u0, 0.1, None, &[xi.clone()], true).unwrap();
        let diff = next.difference(&xi).unwrap();
        assert!(diff.l2_norm() < 1e-14, "jump amplitude must land unmodified");
    }

    #[test]
    fn blowup_is_detected() {
        let g = grid2(16);
        let huge = MhdState::taylor_green_2d(&g, 1e13, 0.0).unwrap();
        assert!(matches!(
            step_exponential_euler(&huge, 0.01, None, &[], false),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn global_zero_noise_matches_single_shot() {
        let g = grid2(32);
        let u0 = MhdState::taylor_green_2d(&g, 0.05, 0.02).unwrap();
        let cfg = small_cfg(0.5, 0.01);
        let noise = JumpNoiseSpec::silent(1);
        let result = solve_global_2d(&u0, &noise, 0, &cfg).unwrap();
        let det = solve_deterministic(&u0, &cfg).unwrap();
        assert_eq!(result.trajectory.times.len(), det.times.len());
        let worst = result
            .trajectory
            .difference(&det)
            .unwrap()
            .states
            .iter()
            .map(|s| s.l2_norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "global vs single-shot deviation {worst}");
    }

    #[test]
    fn global_zero_everything_is_zero() {
        let g = grid2(16);
        let u0 = MhdState::zero(&g);
        let cfg = small_cfg(0.25, 0.05);
        let result = solve_global_2d(&u0, &JumpNoiseSpec::silent(0), 0, &cfg).unwrap();
        assert!(result
            .trajectory
            .states
            .iter()
            .all(|s| s.l2_norm() == 0.0));
    }

    #[test]
    fn global_with_jumps_completes_and_diagnoses() {
        let g = grid2(32);
        let u0 = MhdState::taylor_green_2d(&g, 0.04, 0.02).unwrap();
        let xi1 = MhdState::random(&g, 41, |k| (1.0 + k).powf(-2.5), Some(4)).scaled(0.2);
        let xi2 = MhdState::random(&g, 42, |k| (1.0 + k).powf(-2.5), Some(4)).scaled(0.15);
        let noise = JumpNoiseSpec::new(
            vec![
                Mark {
                    name: "a".into(),
                    intensity: 3.0,
                    amplitude: xi1,
                    modulation: Modulation::Constant,
                },
                Mark {
                    name: "b".into(),
                    intensity: 2.0,
                    amplitude: xi2,
                    modulation: Modulation::Constant,
                },
            ],
            7,
        )
        .unwrap();
        let cfg = small_cfg(0.5, 0.02);
        let result = solve_global_2d(&u0, &noise, 11, &cfg).unwrap();
        assert!((result.trajectory.horizon() - 0.5).abs() < 1e-12);
        assert!(!result.reports.is_empty());
        assert!(result.reports.iter().all(|r| r.converged));
        // Y = u - Z stays divergence-free and finite; energy diagnostics run.
        let diag = energy_diagnostics(&result.trajectory, &result.noise_trajectory).unwrap();
        assert!(diag.gronwall.feasible);
        assert!(diag.bounded_by_majorant);
        let max_div = result
            .trajectory
            .states
            .iter()
            .map(|s| s.divergence_residual())
            .fold(0.0, f64::max);
        assert!(max_div < 1e-10);
    }

    #[test]
    fn energy_monotone_without_noise() {
        let g = grid2(32);
        let u0 = MhdState::taylor_green_2d(&g, 0.2, 0.1).unwrap();
        let cfg = small_cfg(0.5, 0.01);
        let det = solve_deterministic(&u0, &cfg).unwrap();
        let z = zero_record(&g, &det.times);
        let diag = energy_diagnostics(&det, &z).unwrap();
        assert!(diag.nonincreasing, "zero-noise energy must decay");
        assert!(diag.bounded_by_majorant);
    }

    #[test]
    fn energy_residual_shrinks_with_dt() {
        let g = grid2(32);
        let u0 = MhdState::taylor_green_2d(&g, 0.2, 0.1).unwrap();
        let mut maxres = Vec::new();
        for &dt in &[0.02, 0.01] {
            let cfg = small_cfg(0.2, dt);
            let det = solve_deterministic(&u0, &cfg).unwrap();
            let z = zero_record(&g, &det.times);
            let diag = energy_diagnostics(&det, &z).unwrap();
            maxres.push(
                diag.residuals
                    .iter()
                    .map(|r| r.abs())
                    .fold(0.0, f64::max),
            );
        }
        let ratio = maxres[0] / maxres[1];
        assert!(
            ratio > 1.5,
            "residual should scale like O(dt): {maxres:?} ratio {ratio}"
        );
    }
}
