//! Vector and scalar fields stored as Fourier coefficients, the
//! real<->spectral transforms, and the exact-multiplier differential
//! operators (divergence, curl, gradient, Leray-Helmholtz projection).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// d-component real vector field stored as complex Fourier coefficients,
/// component-major (all of component 0, then component 1, ...).
#[derive(Clone, Debug)]
pub struct SpectralVectorField {
    grid: Grid,
    data: Vec<Complex64>,
}

/// Scalar field in spectral storage (divergence outputs, stream functions).
#[derive(Clone, Debug)]
pub struct SpectralScalarField {
    grid: Grid,
    data: Vec<Complex64>,
}

impl SpectralScalarField {
    pub fn zero(grid: &Grid) -> Self {
        SpectralScalarField {
            grid: grid.clone(),
            data: vec![Complex64::default(); grid.points()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.data
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Largest coefficient modulus.
    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Physical samples at the grid nodes.
    pub fn to_samples(&self) -> Vec<f64> {
        let mut buf = self.data.clone();
        self.grid.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    pub fn from_samples(grid: &Grid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.points() {
            return Err(Error::ShapeMismatch {
                expected: grid.points(),
                got: samples.len(),
            });
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        grid.forward(&mut buf);
        Ok(SpectralScalarField {
            grid: grid.clone(),
            data: buf,
        })
    }
}

impl SpectralVectorField {
    pub fn zero(grid: &Grid) -> Self {
        SpectralVectorField {
            grid: grid.clone(),
            data: vec![Complex64::default(); grid.dim() * grid.points()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let p = self.grid.points();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let p = self.grid.points();
        &mut self.data[c * p..(c + 1) * p]
    }

    /// Coefficient of component `c` at integer wavevector `k`.
    pub fn coeff(&self, c: usize, k: &[i64]) -> Complex64 {
        let flat = self.grid.flat_of_modes(k);
        self.component(c)[flat]
    }

    pub fn set_coeff(&mut self, c: usize, k: &[i64], value: Complex64) {
        let flat = self.grid.flat_of_modes(k);
        self.component_mut(c)[flat] = value;
    }

    /// Build a field from real physical samples, component-major.
    pub fn from_samples(grid: &Grid, samples: &[f64]) -> Result<Self> {
        let expected = grid.dim() * grid.points();
        if samples.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: samples.len(),
            });
        }
        let mut field = SpectralVectorField::zero(grid);
        let p = grid.points();
        for c in 0..grid.dim() {
            let mut buf: Vec<Complex64> = samples[c * p..(c + 1) * p]
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect();
            grid.forward(&mut buf);
            field.component_mut(c).copy_from_slice(&buf);
        }
        Ok(field)
    }

    /// Evaluate `f(component, node)` at every grid node and transform.
    pub fn from_fn(grid: &Grid, f: impl Fn(usize, &[f64; 3]) -> f64) -> Self {
        let p = grid.points();
        let mut samples = vec![0.0; grid.dim() * p];
        for c in 0..grid.dim() {
            for flat in 0..p {
                let x = grid.node(flat);
                samples[c * p + flat] = f(c, &x);
            }
        }
        SpectralVectorField::from_samples(grid, &samples).expect("sample shape by construction")
    }

    /// Physical samples at the grid nodes, component-major.
    pub fn to_samples(&self) -> Vec<f64> {
        let p = self.grid.points();
        let mut samples = vec![0.0; self.dim() * p];
        let mut buf = vec![Complex64::default(); p];
        for c in 0..self.dim() {
            buf.copy_from_slice(self.component(c));
            self.grid.inverse(&mut buf);
            for (s, v) in samples[c * p..(c + 1) * p].iter_mut().zip(buf.iter()) {
                *s = v.re;
            }
        }
        samples
    }

    /// Max residual of the Hermitian symmetry coeffs(-k) = conj(coeffs(k)).
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.dim() {
            let comp = self.component(c);
            for flat in 0..self.grid.points() {
                let other = self.grid.conj_index(flat);
                let r = (comp[other] - comp[flat].conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Max modulus of i k . f_hat(k), i.e. the spectral divergence residual.
    pub fn divergence_max(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for flat in 0..self.grid.points() {
            let k = self.grid.k_vec(flat);
            let mut dot = Complex64::default();
            for c in 0..self.dim() {
                dot += Complex64::new(0.0, k[c]) * self.component(c)[flat];
            }
            worst = worst.max(dot.norm());
        }
        worst
    }

    /// Divergence residual relative to the gradient scale max |k||f_hat|.
    pub fn divergence_residual(&self) -> f64 {
        let mut scale: f64 = 0.0;
        for flat in 0..self.grid.points() {
            let kn = self.grid.k_sq(flat).sqrt();
            for c in 0..self.dim() {
                scale = scale.max(kn * self.component(c)[flat].norm());
            }
        }
        if scale == 0.0 {
            return 0.0;
        }
        self.divergence_max() / scale
    }

    pub fn is_divergence_free(&self, tol: f64) -> bool {
        self.divergence_residual() <= tol
    }

    /// Mean mode magnitude (k = 0 coefficient, largest component).
    pub fn mean_mode_magnitude(&self) -> f64 {
        (0..self.dim())
            .map(|c| self.component(c)[0].norm())
            .fold(0.0, f64::max)
    }

    pub fn zero_mean_mode(&mut self) {
        for c in 0..self.dim() {
            self.component_mut(c)[0] = Complex64::default();
        }
    }

    /// L2 norm via Parseval: sqrt(L^d * sum |f_hat|^2).
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.volume() * s).sqrt()
    }

    /// H1 seminorm via Parseval: sqrt(L^d * sum |k|^2 |f_hat|^2).
    pub fn grad_l2_norm(&self) -> f64 {
        let p = self.grid.points();
        let ksq = self.grid.k_sq_table();
        let mut s = 0.0;
        for c in 0..self.dim() {
            let comp = self.component(c);
            for flat in 0..p {
                s += ksq[flat] * comp[flat].norm_sqr();
            }
        }
        (self.grid.volume() * s).sqrt()
    }

    /// L2 inner product via Parseval.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: f64 = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(self.grid.volume() * s)
    }

    pub fn scale(&mut self, factor: f64) {
        for c in self.data.iter_mut() {
            *c *= factor;
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// Multiply every coefficient by `m(flat index)`.
    pub fn apply_multiplier(&mut self, m: impl Fn(usize) -> f64) {
        let p = self.grid.points();
        for c in 0..self.dim() {
            let comp = self.component_mut(c);
            for flat in 0..p {
                comp[flat] *= m(flat);
            }
        }
    }

    /// Zero every coefficient with an axis wavenumber beyond the two-thirds
    /// cutoff (3|k_axis| > n).
    pub fn dealias(&mut self) {
        let n = self.grid.points_per_axis() as i64;
        let p = self.grid.points();
        for flat in 0..p {
            let k = self.grid.k_int(flat);
            let cut = (0..self.grid.dim()).any(|a| 3 * k[a].abs() > n);
            if cut {
                for c in 0..self.dim() {
                    self.component_mut(c)[flat] = Complex64::default();
                }
            }
        }
    }

    /// Zero every coefficient with |k_axis| > max_mode on any axis.
    pub fn band_limit(&mut self, max_mode: i64) {
        let p = self.grid.points();
        for flat in 0..p {
            let k = self.grid.k_int(flat);
            let cut = (0..self.grid.dim()).any(|a| k[a].abs() > max_mode);
            if cut {
                for c in 0..self.dim() {
                    self.component_mut(c)[flat] = Complex64::default();
                }
            }
        }
    }

    /// Spectral embedding into a finer grid with the same box.
    pub fn embed_into(&self, fine: &Grid) -> Result<SpectralVectorField> {
        if fine.dim() != self.grid.dim()
            || fine.box_length() != self.grid.box_length()
            || fine.points_per_axis() < self.grid.points_per_axis()
        {
            return Err(Error::GridMismatch);
        }
        let mut out = SpectralVectorField::zero(fine);
        for flat in 0..self.grid.points() {
            let k = self.grid.k_int(flat);
            let tgt = fine.flat_of_modes(&k);
            for c in 0..self.dim() {
                out.component_mut(c)[tgt] = self.component(c)[flat];
            }
        }
        Ok(out)
    }
}

/// Spectral divergence: coefficient at k is i k . f_hat(k).
pub fn divergence(f: &SpectralVectorField) -> SpectralScalarField {
    let grid = f.grid().clone();
    let mut out = SpectralScalarField::zero(&grid);
    for flat in 0..grid.points() {
        let k = grid.k_vec(flat);
        let mut dot = Complex64::default();
        for c in 0..f.dim() {
            dot += Complex64::new(0.0, k[c]) * f.component(c)[flat];
        }
        out.data[flat] = dot;
    }
    out
}

/// Spectral gradient of a scalar field: component c at k is i k_c phi_hat(k).
pub fn gradient(phi: &SpectralScalarField) -> SpectralVectorField {
    let grid = phi.grid.clone();
    let mut out = SpectralVectorField::zero(&grid);
    for flat in 0..grid.points() {
        let k = grid.k_vec(flat);
        for c in 0..grid.dim() {
            out.component_mut(c)[flat] = Complex64::new(0.0, k[c]) * phi.data[flat];
        }
    }
    out
}

/// 2D perpendicular gradient (curl of a stream function):
/// v = (d_2 psi, -d_1 psi), always divergence-free.
pub fn perp_gradient_2d(psi: &SpectralScalarField) -> Result<SpectralVectorField> {
    if psi.grid.dim() != 2 {
        return Err(Error::InvalidParameter(
            "stream functions require a 2D grid".into(),
        ));
    }
    let grid = psi.grid.clone();
    let mut out = SpectralVectorField::zero(&grid);
    for flat in 0..grid.points() {
        let k = grid.k_vec(flat);
        out.component_mut(0)[flat] = Complex64::new(0.0, k[1]) * psi.data[flat];
        out.component_mut(1)[flat] = Complex64::new(0.0, -k[0]) * psi.data[flat];
    }
    Ok(out)
}

/// Curl output: a scalar vorticity in 2D, a vector field in 3D.
pub enum CurlOutput {
    Scalar(SpectralScalarField),
    Vector(SpectralVectorField),
}

/// Spectral curl: i k x f_hat (3D), i(k_1 f_2 - k_2 f_1) (2D).
pub fn curl(f: &SpectralVectorField) -> CurlOutput {
    let grid = f.grid().clone();
    match grid.dim() {
        2 => {
            let mut out = SpectralScalarField::zero(&grid);
            for flat in 0..grid.points() {
                let k = grid.k_vec(flat);
                out.data[flat] = Complex64::new(0.0, k[0]) * f.component(1)[flat]
                    - Complex64::new(0.0, k[1]) * f.component(0)[flat];
            }
            CurlOutput::Scalar(out)
        }
        _ => {
            let mut out = SpectralVectorField::zero(&grid);
            for flat in 0..grid.points() {
                let k = grid.k_vec(flat);
                let i = Complex64::new(0.0, 1.0);
                let fx = f.component(0)[flat];
                let fy = f.component(1)[flat];
                let fz = f.component(2)[flat];
                out.component_mut(0)[flat] = i * (k[1] * fz - k[2] * fy);
                out.component_mut(1)[flat] = i * (k[2] * fx - k[0] * fz);
                out.component_mut(2)[flat] = i * (k[0] * fy - k[1] * fx);
            }
            CurlOutput::Vector(out)
        }
    }
}

/// Leray-Helmholtz projection: f_hat -> (I - k k^T / |k|^2) f_hat for k != 0,
/// identity on the mean mode.
pub fn leray_project(f: &SpectralVectorField) -> SpectralVectorField {
    let mut out = f.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place(f: &mut SpectralVectorField) {
    let grid = f.grid().clone();
    for flat in 0..grid.points() {
        let ksq = grid.k_sq(flat);
        if ksq == 0.0 {
            continue;
        }
        let k = grid.k_vec(flat);
        let mut dot = Complex64::default();
        for c in 0..f.dim() {
            dot += k[c] * f.component(c)[flat];
        }
        let scale = dot / ksq;
        for c in 0..f.dim() {
            f.component_mut(c)[flat] -= k[c] * scale;
        }
    }
}

// ---------------------------------------------------------------------------
// Deterministic random fields
// ---------------------------------------------------------------------------

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mode_hash(seed: u64, comp: usize, k: &[i64; 3]) -> u64 {
    let mut s = seed ^ 0x6a09_e667_f3bc_c909;
    let _ = splitmix64(&mut s);
    s ^= comp as u64;
    let _ = splitmix64(&mut s);
    for a in 0..3 {
        s ^= (k[a] as u64).wrapping_mul(0x2545_f491_4f6c_dd1d);
        let _ = splitmix64(&mut s);
    }
    splitmix64(&mut s)
}

fn unit_uniform(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Hermitian random field with coefficient magnitude `spectrum(|k_int|)` and
/// mode-hashed phases. Coefficients are a deterministic function of the
/// integer wavevector, so a field at n=32 is the spectral truncation of the
/// same field at n=64. Mean mode and Nyquist planes are zero.
pub fn random_vector_field(
    grid: &Grid,
    seed: u64,
    spectrum: impl Fn(f64) -> f64,
) -> SpectralVectorField {
    let mut out = SpectralVectorField::zero(grid);
    let nyq = grid.max_mode();
    for flat in 0..grid.points() {
        let k = grid.k_int(flat);
        if k.iter().all(|&ki| ki == 0) {
            continue;
        }
        if (0..grid.dim()).any(|a| k[a].abs() >= nyq) {
            continue;
        }
        // Canonical representative: first nonzero wavenumber positive.
        let mut kc = k;
        let mut conjugate = false;
        for a in 0..grid.dim() {
            if kc[a] != 0 {
                if kc[a] < 0 {
                    for b in 0..grid.dim() {
                        kc[b] = -kc[b];
                    }
                    conjugate = true;
                }
                break;
            }
        }
        let knorm = ((0..grid.dim()).map(|a| (k[a] * k[a]) as f64).sum::<f64>()).sqrt();
        let mag = spectrum(knorm);
        for c in 0..grid.dim() {
            let h = mode_hash(seed, c, &kc);
            let phase = 2.0 * std::f64::consts::PI * unit_uniform(h);
            let mut value = Complex64::from_polar(mag, phase);
            if conjugate {
                value = value.conj();
            }
            out.component_mut(c)[flat] = value;
        }
    }
    out
}

/// Random divergence-free mean-zero field (Leray projection of
/// [`random_vector_field`]), optionally band-limited.
pub fn random_divfree_field(
    grid: &Grid,
    seed: u64,
    spectrum: impl Fn(f64) -> f64,
    max_mode: Option<i64>,
) -> SpectralVectorField {
    let mut f = random_vector_field(grid, seed, spectrum);
    if let Some(m) = max_mode {
        f.band_limit(m);
    }
    leray_project_in_place(&mut f);
    f.zero_mean_mode();
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid2(n: usize) -> Grid {
        Grid::new(2, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn constant_field_has_only_dc_mode() {
        let g = grid2(16);
        let f = SpectralVectorField::from_fn(&g, |c, _| if c == 0 { 3.5 } else { -1.25 });
        assert!((f.coeff(0, &[0, 0]) - Complex64::new(3.5, 0.0)).norm() < 1e-13);
        assert!((f.coeff(1, &[0, 0]) - Complex64::new(-1.25, 0.0)).norm() < 1e-13);
        let off: f64 = (0..g.points())
            .filter(|&i| i != 0)
            .map(|i| f.component(0)[i].norm() + f.component(1)[i].norm())
            .fold(0.0, f64::max);
        assert!(off < 1e-13);
    }

    #[test]
    fn sine_mode_coefficients() {
        let g = grid2(16);
        let f = SpectralVectorField::from_fn(&g, |c, x| if c == 0 { x[0].sin() } else { 0.0 });
        // sin(x) = -i/2 e^{ix} + i/2 e^{-ix}
        assert!((f.coeff(0, &[1, 0]) - Complex64::new(0.0, -0.5)).norm() < 1e-13);
        assert!((f.coeff(0, &[-1, 0]) - Complex64::new(0.0, 0.5)).norm() < 1e-13);
    }

    #[test]
    fn round_trip_random_samples() {
        let g = Grid::new(3, 8, 1.7).unwrap();
        let mut state = 12345u64;
        let samples: Vec<f64> = (0..g.dim() * g.points())
            .map(|_| unit_uniform(splitmix64(&mut state)) - 0.5)
            .collect();
        let f = SpectralVectorField::from_samples(&g, &samples).unwrap();
        let back = f.to_samples();
        let max_err = samples
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = samples.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(max_err < 1e-12 * scale.max(1.0), "round trip error {max_err}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let g = grid2(8);
        let samples = vec![0.0; 17];
        assert!(matches!(
            SpectralVectorField::from_samples(&g, &samples),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn divergence_of_sine_field() {
        let g = grid2(16);
        // f = (sin x1, 0) -> div f = cos x1
        let f = SpectralVectorField::from_fn(&g, |c, x| if c == 0 { x[0].sin() } else { 0.0 });
        let d = divergence(&f);
        let samples = d.to_samples();
        for flat in 0..g.points() {
            let x = g.node(flat);
            assert!((samples[flat] - x[0].cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_stream_function_curl_is_zero() {
        let g = grid2(16);
        let psi = SpectralScalarField::from_samples(
            &g,
            &(0..g.points())
                .map(|i| {
                    let x = g.node(i);
                    (x[0].sin() * (2.0 * x[1]).cos()) + 0.3 * (x[1] - x[0]).sin()
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let v = perp_gradient_2d(&psi).unwrap();
        assert!(divergence(&v).max_modulus() < 1e-12);
    }

    #[test]
    fn divergence_of_zero_is_zero() {
        let g = grid2(8);
        let f = SpectralVectorField::zero(&g);
        assert_eq!(divergence(&f).max_modulus(), 0.0);
    }

    #[test]
    fn leray_annihilates_gradients() {
        let g = grid2(16);
        let phi = SpectralScalarField::from_samples(
            &g,
            &(0..g.points())
                .map(|i| g.node(i)[0].sin())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let gphi = gradient(&phi);
        let proj = leray_project(&gphi);
        let worst: f64 = (0..g.points())
            .map(|i| proj.component(0)[i].norm() + proj.component(1)[i].norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-13);
    }

    #[test]
    fn leray_fixes_divfree_and_is_idempotent() {
        let g = grid2(32);
        let f = random_divfree_field(&g, 7, |k| (1.0 + k).powf(-1.5), None);
        let once = leray_project(&f);
        let mut diff: f64 = 0.0;
        for c in 0..2 {
            for i in 0..g.points() {
                diff = diff.max((once.component(c)[i] - f.component(c)[i]).norm());
            }
        }
        assert!(diff < 1e-12 * f.l2_norm().max(1.0));
        assert!(once.divergence_residual() < 1e-12);
    }

    #[test]
    fn leray_single_mode_direct_value() {
        // k = (1,1), f_hat = (1,0): projection is (1/2, -1/2).
        let g = grid2(16);
        let mut f = SpectralVectorField::zero(&g);
        f.set_coeff(0, &[1, 1], Complex64::new(1.0, 0.0));
        f.set_coeff(0, &[-1, -1], Complex64::new(1.0, 0.0));
        let p = leray_project(&f);
        assert!((p.coeff(0, &[1, 1]) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((p.coeff(1, &[1, 1]) - Complex64::new(-0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = Grid::new(3, 8, 2.0 * PI).unwrap();
        let phi = SpectralScalarField::from_samples(
            &g,
            &(0..g.points())
                .map(|i| {
                    let x = g.node(i);
                    x[0].sin() * x[1].cos() + x[2].sin()
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let gphi = gradient(&phi);
        match curl(&gphi) {
            CurlOutput::Vector(c) => {
                let worst: f64 = (0..3)
                    .flat_map(|comp| c.component(comp).iter().map(|z| z.norm()))
                    .fold(0.0, f64::max);
                assert!(worst < 1e-12);
            }
            CurlOutput::Scalar(_) => panic!("3D curl must be a vector"),
        }
    }

    #[test]
    fn curl_3d_symbolic_case() {
        // f = (0, sin x1, 0) -> curl f = (0, 0, cos x1)
        let g = Grid::new(3, 8, 2.0 * PI).unwrap();
        let f = SpectralVectorField::from_fn(&g, |c, x| if c == 1 { x[0].sin() } else { 0.0 });
        match curl(&f) {
            CurlOutput::Vector(cf) => {
                let samples = cf.to_samples();
                let p = g.points();
                for flat in 0..p {
                    let x = g.node(flat);
                    assert!(samples[flat].abs() < 1e-12);
                    assert!(samples[p + flat].abs() < 1e-12);
                    assert!((samples[2 * p + flat] - x[0].cos()).abs() < 1e-12);
                }
            }
            CurlOutput::Scalar(_) => panic!("3D curl must be a vector"),
        }
    }

    #[test]
    fn divergence_of_curl_vanishes_3d() {
        let g = Grid::new(3, 8, 2.0 * PI).unwrap();
        let f = random_vector_field(&g, 99, |k| (1.0 + k * k).recip());
        match curl(&f) {
            CurlOutput::Vector(c) => assert!(divergence(&c).max_modulus() < 1e-12),
            CurlOutput::Scalar(_) => unreachable!(),
        }
    }

    #[test]
    fn projection_is_self_adjoint() {
        let g = grid2(16);
        let f = random_vector_field(&g, 3, |k| (1.0 + k).powf(-1.2));
        let h = random_vector_field(&g, 4, |k| (1.0 + k).powf(-1.4));
        let lhs = leray_project(&f).inner_product(&h).unwrap();
        let rhs = f.inner_product(&leray_project(&h)).unwrap();
        let scale = f.l2_norm() * h.l2_norm();
        assert!((lhs - rhs).abs() <= 1e-10 * scale);
    }

    #[test]
    fn parseval_l2_matches_quadrature() {
        let g = grid2(16);
        let f = random_vector_field(&g, 11, |k| (1.0 + k).powf(-2.0));
        let samples = f.to_samples();
        let quad: f64 = samples.iter().map(|x| x * x).sum::<f64>() * g.cell_volume();
        assert!((quad.sqrt() - f.l2_norm()).abs() < 1e-10 * f.l2_norm());
    }

    #[test]
    fn random_fields_are_real_and_refinement_consistent() {
        let g32 = grid2(32);
        let g64 = grid2(64);
        let spectrum = |k: f64| (1.0 + k).powf(-1.01);
        let a = random_vector_field(&g32, 5, spectrum);
        let b = random_vector_field(&g64, 5, spectrum);
        assert!(a.hermitian_residual() < 1e-13);
        for k in [[1i64, 2, 0], [-3, 5, 0], [7, -7, 0], [0, 9, 0]] {
            for c in 0..2 {
                assert!(
                    (a.coeff(c, &k[..2].to_vec()) - b.coeff(c, &k[..2].to_vec())).norm() < 1e-15,
                    "mode {k:?} must agree across resolutions"
                );
            }
        }
    }

    #[test]
    fn dealias_keeps_low_band_and_kills_nyquist() {
        let g = grid2(16);
        let mut f = SpectralVectorField::zero(&g);
        f.set_coeff(0, &[5, 0], Complex64::new(1.0, 0.0));
        f.set_coeff(0, &[-5, 0], Complex64::new(1.0, 0.0));
        f.set_coeff(1, &[8, 0], Complex64::new(1.0, 0.0));
        f.dealias();
        assert!((f.coeff(0, &[5, 0]).norm() - 1.0).abs() < 1e-15);
        assert_eq!(f.coeff(1, &[8, 0]).norm(), 0.0);
        let mut g6 = SpectralVectorField::zero(&g);
        g6.set_coeff(0, &[6, 0], Complex64::new(1.0, 0.0));
        g6.dealias();
        assert_eq!(g6.coeff(0, &[6, 0]).norm(), 0.0, "3*6 > 16 is cut");
    }
}
