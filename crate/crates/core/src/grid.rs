//! Periodic-torus grids and the multi-dimensional FFT machinery behind all
//! spectral operators.
//!
//! Wavenumbers per axis are the integers {-n/2+1, ..., n/2} in FFT storage
//! order, scaled by 2*pi/L. The forward transform carries the 1/N
//! normalization so the k=0 coefficient of a constant field c equals c.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic torus [0, L)^d with n points per axis.
///
/// Cheap to clone; the FFT plans and wavenumber tables live behind an `Arc`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    box_length: f64,
    /// Integer wavenumber for each storage index along one axis.
    k_int: Vec<i64>,
    /// Physical |k|^2 for every flat index.
    k_sq: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Lazily built 2x-refined grid for alias-free cubic quadrature.
    refined: OnceLock<Grid>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.dim == other.inner.dim
            && self.inner.n == other.inner.n
            && self.inner.box_length == other.inner.box_length
    }
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("box_length", &self.inner.box_length)
            .finish()
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, box_length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {n}"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }

        let k_int: Vec<i64> = (0..n)
            .map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();

        let points = n.pow(dim as u32);
        let k0 = 2.0 * std::f64::consts::PI / box_length;
        let mut k_sq = vec![0.0; points];
        for (flat, ksq) in k_sq.iter_mut().enumerate() {
            let idx = decompose(flat, n, dim);
            let mut s = 0i64;
            for a in 0..dim {
                let k = k_int[idx[a]];
                s += k * k;
            }
            *ksq = k0 * k0 * s as f64;
        }

        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);

        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                n,
                box_length,
                k_int,
                k_sq,
                fwd,
                inv,
                refined: OnceLock::new(),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.n
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    /// Total number of grid points n^dim.
    pub fn points(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    /// Cell volume (L/n)^dim, the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        (self.inner.box_length / self.inner.n as f64).powi(self.inner.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.inner.box_length.powi(self.inner.dim as i32)
    }

    /// Fundamental wavenumber 2*pi/L.
    pub fn k_fundamental(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.inner.box_length
    }

    /// Integer wavenumbers of a flat spectral index, one per axis.
    pub fn k_int(&self, flat: usize) -> [i64; 3] {
        let idx = decompose(flat, self.inner.n, self.inner.dim);
        let mut out = [0i64; 3];
        for a in 0..self.inner.dim {
            out[a] = self.inner.k_int[idx[a]];
        }
        out
    }

    /// Physical wavevector (2*pi/L scaled) of a flat spectral index.
    pub fn k_vec(&self, flat: usize) -> [f64; 3] {
        let ki = self.k_int(flat);
        let k0 = self.k_fundamental();
        [k0 * ki[0] as f64, k0 * ki[1] as f64, k0 * ki[2] as f64]
    }

    /// Physical |k|^2 of a flat spectral index (table lookup).
    pub fn k_sq(&self, flat: usize) -> f64 {
        self.inner.k_sq[flat]
    }

    pub fn k_sq_table(&self) -> &[f64] {
        &self.inner.k_sq
    }

    /// Largest integer wavenumber magnitude representable per axis (n/2).
    pub fn max_mode(&self) -> i64 {
        (self.inner.n / 2) as i64
    }

    /// Flat spectral index of a set of integer wavenumbers (mod n per axis).
    pub fn flat_of_modes(&self, k: &[i64]) -> usize {
        let n = self.inner.n as i64;
        let mut flat = 0usize;
        for a in 0..self.inner.dim {
            let i = k[a].rem_euclid(n) as usize;
            flat = flat * self.inner.n + i;
        }
        flat
    }

    /// Physical coordinates of a flat grid index.
    pub fn node(&self, flat: usize) -> [f64; 3] {
        let idx = decompose(flat, self.inner.n, self.inner.dim);
        let h = self.inner.box_length / self.inner.n as f64;
        let mut x = [0.0; 3];
        for a in 0..self.inner.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Flat index of the coefficient conjugate-paired with `flat` (k -> -k).
    pub fn conj_index(&self, flat: usize) -> usize {
        let n = self.inner.n;
        let idx = decompose(flat, n, self.inner.dim);
        let mut out = 0usize;
        for a in 0..self.inner.dim {
            out = out * n + (n - idx[a]) % n;
        }
        out
    }

    /// Grid with the same box and twice the resolution, for alias-free
    /// evaluation of cubic products. Built once and cached.
    pub fn refined(&self) -> Grid {
        self.inner
            .refined
            .get_or_init(|| {
                Grid::new(self.inner.dim, 2 * self.inner.n, self.inner.box_length)
                    .expect("refined grid parameters are valid by construction")
            })
            .clone()
    }

    /// In-place unnormalized FFT along every axis.
    pub(crate) fn fft_all_axes(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.points());
        let n = self.inner.n;
        let dim = self.inner.dim;
        let plan = if inverse { &self.inner.inv } else { &self.inner.fwd };

        // Last axis is contiguous: one batched call.
        plan.process(data);

        // Remaining axes: gather strided lanes into a scratch buffer.
        let mut scratch = vec![Complex64::default(); n];
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            let blocks = data.len() / block;
            for b in 0..blocks {
                for inner in 0..stride {
                    let base = b * block + inner;
                    for j in 0..n {
                        scratch[j] = data[base + j * stride];
                    }
                    plan.process(&mut scratch);
                    for j in 0..n {
                        data[base + j * stride] = scratch[j];
                    }
                }
            }
        }
    }

    /// Forward transform with 1/N normalization: physical samples -> coefficients.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.fft_all_axes(data, false);
        let scale = 1.0 / self.points() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// Inverse transform (no scaling): coefficients -> physical samples.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.fft_all_axes(data, true);
    }
}

/// Decompose a row-major flat index into per-axis indices (last axis fastest).
pub(crate) fn decompose(flat: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut idx = [0usize; 3];
    let mut rem = flat;
    for a in (0..dim).rev() {
        idx[a] = rem % n;
        rem /= n;
    }
    idx
}

/// Convenience constructor mirroring the library's public entry point.
pub fn make_grid(dim: usize, n: usize, box_length: f64) -> Result<Grid> {
    Grid::new(dim, n, box_length)
}
