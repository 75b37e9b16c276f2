//! The coupled velocity/magnetic state, the unknown of the abstract
//! evolution equation.

use crate::error::{Error, Result};
use crate::field::{random_divfree_field, SpectralVectorField};
use crate::grid::Grid;

/// Velocity/magnetic pair sharing one grid. Both components are kept
/// divergence-free and mean-zero by every constructor and solver step.
#[derive(Clone, Debug)]
pub struct MhdState {
    pub velocity: SpectralVectorField,
    pub magnetic: SpectralVectorField,
}

impl MhdState {
    pub fn new(velocity: SpectralVectorField, magnetic: SpectralVectorField) -> Result<Self> {
        if velocity.grid() != magnetic.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(MhdState { velocity, magnetic })
    }

    pub fn zero(grid: &Grid) -> Self {
        MhdState {
            velocity: SpectralVectorField::zero(grid),
            magnetic: SpectralVectorField::zero(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.velocity.grid()
    }

    pub fn fields(&self) -> [&SpectralVectorField; 2] {
        [&self.velocity, &self.magnetic]
    }

    pub fn for_each_field_mut(&mut self, mut f: impl FnMut(&mut SpectralVectorField)) {
        f(&mut self.velocity);
        f(&mut self.magnetic);
    }

    /// Worst divergence residual of the two components.
    pub fn divergence_residual(&self) -> f64 {
        self.velocity
            .divergence_residual()
            .max(self.magnetic.divergence_residual())
    }

    pub fn mean_mode_magnitude(&self) -> f64 {
        self.velocity
            .mean_mode_magnitude()
            .max(self.magnetic.mean_mode_magnitude())
    }

    pub fn zero_mean_mode(&mut self) {
        self.velocity.zero_mean_mode();
        self.magnetic.zero_mean_mode();
    }

    /// Joint L2 norm sqrt(|v|_2^2 + |H|_2^2).
    pub fn l2_norm(&self) -> f64 {
        let v = self.velocity.l2_norm();
        let h = self.magnetic.l2_norm();
        (v * v + h * h).sqrt()
    }

    /// Joint H1 seminorm sqrt(|grad v|_2^2 + |grad H|_2^2).
    pub fn grad_l2_norm(&self) -> f64 {
        let v = self.velocity.grad_l2_norm();
        let h = self.magnetic.grad_l2_norm();
        (v * v + h * h).sqrt()
    }

    /// Joint L2 inner product.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        Ok(self.velocity.inner_product(&other.velocity)?
            + self.magnetic.inner_product(&other.magnetic)?)
    }

    pub fn scale(&mut self, factor: f64) {
        self.velocity.scale(factor);
        self.magnetic.scale(factor);
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.velocity.axpy(alpha, &other.velocity)?;
        self.magnetic.axpy(alpha, &other.magnetic)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn apply_multiplier(&mut self, m: impl Fn(usize) -> f64 + Copy) {
        self.velocity.apply_multiplier(m);
        self.magnetic.apply_multiplier(m);
    }

    pub fn dealias(&mut self) {
        self.velocity.dealias();
        self.magnetic.dealias();
    }

    /// Random divergence-free mean-zero state; velocity and magnetic
    /// components draw from disjoint hash streams of the same seed.
    pub fn random(
        grid: &Grid,
        seed: u64,
        spectrum: impl Fn(f64) -> f64 + Copy,
        max_mode: Option<i64>,
    ) -> Self {
        MhdState {
            velocity: random_divfree_field(grid, seed.wrapping_mul(2).wrapping_add(1), spectrum, max_mode),
            magnetic: random_divfree_field(grid, seed.wrapping_mul(2).wrapping_add(2), spectrum, max_mode),
        }
    }

    /// Marginally-integrable probe state: coefficient magnitude
    /// |k|^(-d/r - eps) so the field sits in L^r but barely, making the
    /// semigroup smoothing exponent observable.
    pub fn rough(grid: &Grid, seed: u64, r: f64) -> Self {
        let beta = grid.dim() as f64 / r + 0.01;
        MhdState::random(grid, seed, move |k| k.max(1.0).powf(-beta), None)
    }

    /// 2D Taylor-Green state: v = amp*(-cos x1 sin x2, sin x1 cos x2),
    /// H = magnetic_ratio * v. Exactly divergence-free.
    pub fn taylor_green_2d(grid: &Grid, amp: f64, magnetic_ratio: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::InvalidParameter(
                "Taylor-Green initial data requires a 2D grid".into(),
            ));
        }
        let scale = 2.0 * std::f64::consts::PI / grid.box_length();
        let velocity = SpectralVectorField::from_fn(grid, |c, x| {
            let (x1, x2) = (scale * x[0], scale * x[1]);
            amp * if c == 0 {
                -x1.cos() * x2.sin()
            } else {
                x1.sin() * x2.cos()
            }
        });
        let mut magnetic = velocity.clone();
        magnetic.scale(magnetic_ratio);
        Ok(MhdState { velocity, magnetic })
    }
}
