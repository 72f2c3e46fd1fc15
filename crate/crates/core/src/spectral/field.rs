use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::fft::Transform;
use super::grid::{default_resolution, Freq, GridSpec, ModeTable};
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

/// Band-limited field stored by its Fourier coefficients.
///
/// The represented function is `sum_k c_k e^{2πi (k + offset)·x / L}` over the
/// grid's mode table.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: GridSpec,
    modes: Arc<ModeTable>,
    coeffs: Vec<Complex64>,
    mean_zero: bool,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.mean_zero == other.mean_zero && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, mean_zero: bool) -> Self {
        let modes = grid.modes();
        let coeffs = vec![Complex64::default(); modes.len()];
        SpectralField {
            grid,
            modes,
            coeffs,
            mean_zero,
        }
    }

    /// Wraps a coefficient vector ordered like `grid.modes()`.
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>, mean_zero: bool) -> Result<Self> {
        grid.validate()?;
        let modes = grid.modes();
        if coeffs.len() != modes.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                modes.len(),
                coeffs.len()
            )));
        }
        let mut field = SpectralField {
            grid,
            modes,
            coeffs,
            mean_zero,
        };
        if mean_zero {
            if let Some(z) = field.modes.zero_position() {
                if field.coeffs[z] != Complex64::default() {
                    return Err(Error::Domain(
                        "mean-zero field with a nonzero n = 0 coefficient".into(),
                    ));
                }
                field.coeffs[z] = Complex64::default();
            }
        }
        Ok(field)
    }

    /// Builds coefficients from `f(k, xi)` where `xi = (k + offset)/L`.
    pub fn from_fn<F>(grid: GridSpec, mean_zero: bool, mut f: F) -> Self
    where
        F: FnMut(&Freq, [f64; 3]) -> Complex64,
    {
        let mut field = Self::zeros(grid, mean_zero);
        for i in 0..field.coeffs.len() {
            let k = field.modes.indices[i];
            let xi = field.xi(i);
            field.coeffs[i] = f(&k, xi);
        }
        field.enforce_mean_zero();
        field
    }

    /// Builds a field from sparse `(k, c)` pairs; unknown frequencies are rejected.
    pub fn from_modes<I>(grid: GridSpec, mean_zero: bool, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Freq, Complex64)>,
    {
        let mut field = Self::zeros(grid, mean_zero);
        for (k, c) in entries {
            field.set(&k, c)?;
        }
        Ok(field)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn modes(&self) -> &Arc<ModeTable> {
        &self.modes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: &Freq) -> Complex64 {
        self.modes
            .position(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    pub fn set(&mut self, k: &Freq, c: Complex64) -> Result<()> {
        let i = self
            .modes
            .position(k)
            .ok_or_else(|| Error::Config(format!("frequency {k:?} outside the cutoff ball")))?;
        if self.mean_zero && Some(i) == self.modes.zero_position() && c != Complex64::default() {
            return Err(Error::Domain("cannot set n = 0 on a mean-zero field".into()));
        }
        self.coeffs[i] = c;
        Ok(())
    }

    /// Applies `f(index, coefficient)` to every coefficient.
    pub fn map_coeffs<F>(&self, mut f: F) -> Self
    where
        F: FnMut(usize, Complex64) -> Complex64,
    {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c = f(i, *c);
        }
        out.enforce_mean_zero();
        out
    }

    fn enforce_mean_zero(&mut self) {
        if self.mean_zero {
            if let Some(z) = self.modes.zero_position() {
                self.coeffs[z] = Complex64::default();
            }
        }
    }

    /// Physical frequency `(k + offset)/L` of coefficient `i`.
    pub fn xi(&self, i: usize) -> [f64; 3] {
        let mut v = self.modes.shifted(i);
        for x in v.iter_mut() {
            *x /= self.grid.length;
        }
        v
    }

    /// `|xi|` of coefficient `i`.
    pub fn xi_norm(&self, i: usize) -> f64 {
        self.modes.radii[i] / self.grid.length
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_coeffs(|_, c| c * a)
    }

    /// `self + a * other`; grids must agree.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<Self> {
        self.check_same_grid(other)?;
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * a;
        }
        out.mean_zero = self.mean_zero && other.mean_zero;
        Ok(out)
    }

    fn check_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Config(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// `L^2` inner product `∫ conj(self)·other`.
    pub fn inner(&self, other: &SpectralField) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let re: Vec<f64> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a.conj() * b).re)
            .collect();
        let im: Vec<f64> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a.conj() * b).im)
            .collect();
        Ok(Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) * self.grid.volume())
    }

    pub fn transform(&self, m: usize) -> Transform {
        Transform::new(&self.grid, &self.modes, m)
    }

    /// Samples on the grid's own `M^d` points.
    pub fn to_physical(&self) -> Vec<Complex64> {
        self.to_physical_on(self.grid.m)
    }

    /// Samples on an `m^d` grid; `m` must still exceed `2N + 1`.
    pub fn to_physical_on(&self, m: usize) -> Vec<Complex64> {
        self.transform(m).to_physical(&self.coeffs)
    }

    /// Inverse of `to_physical` for samples on the grid's `M^d` points.
    pub fn from_physical(grid: GridSpec, samples: &[Complex64], mean_zero: bool) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.points() {
            return Err(Error::Config(format!(
                "expected {} samples, got {}",
                grid.points(),
                samples.len()
            )));
        }
        let modes = grid.modes();
        let coeffs = Transform::new(&grid, &modes, grid.m).to_spectral(samples);
        let mut field = SpectralField {
            grid,
            modes,
            coeffs,
            mean_zero,
        };
        field.enforce_mean_zero();
        Ok(field)
    }

    /// Zeroes every coefficient with `|k + offset| > cutoff`.
    pub fn project_freq(&self, cutoff: f64) -> Self {
        let radii = &self.modes.radii;
        self.map_coeffs(|i, c| if radii[i] <= cutoff + 1e-12 { c } else { Complex64::default() })
    }

    /// Zeroes every coefficient with `|xi| > radius`.
    pub fn ball_multiplier(&self, radius: f64) -> Self {
        let radii = &self.modes.radii;
        let length = self.grid.length;
        self.map_coeffs(|i, c| {
            if radii[i] / length <= radius + 1e-12 {
                c
            } else {
                Complex64::default()
            }
        })
    }

    /// Restricts (or zero-extends) to a different cutoff on the same cell.
    pub fn with_cutoff(&self, n_cut: usize, m: usize) -> Result<Self> {
        let grid = GridSpec::new(self.grid.d, n_cut, m, self.grid.length, self.grid.lattice)?;
        let mut out = Self::zeros(grid, self.mean_zero);
        for (i, k) in out.modes.indices.clone().iter().enumerate() {
            out.coeffs[i] = self.get(k);
        }
        out.enforce_mean_zero();
        Ok(out)
    }

    /// Same coefficients on a cell of a different side length.
    pub fn relabel_length(&self, length: f64) -> Result<Self> {
        let grid = self.grid.with_length(length)?;
        Ok(SpectralField {
            grid,
            modes: self.modes.clone(),
            coeffs: self.coeffs.clone(),
            mean_zero: self.mean_zero,
        })
    }

    /// Multiplies coefficient `k` by `(2π|xi|)^order`.
    pub fn riesz_apply(&self, order: f64) -> Result<Self> {
        if order == 0.0 {
            return Ok(self.clone());
        }
        if order < 0.0 {
            if let Some(z) = self.modes.zero_position() {
                if self.coeffs[z] != Complex64::default() {
                    return Err(Error::Domain(
                        "negative-order Riesz potential of a field with nonzero mean".into(),
                    ));
                }
            }
        }
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let r = self.modes.radii[i];
            *c = if r == 0.0 {
                Complex64::default()
            } else {
                *c * (2.0 * PI * r / self.grid.length).powf(order)
            };
        }
        Ok(out)
    }

    /// `L^d sum_k w(|xi_k|) |c_k|^2`.
    pub fn weighted_norm_sq<W: Fn(f64) -> f64>(&self, weight: W) -> f64 {
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| weight(self.xi_norm(i)) * c.norm_sqr())
            .collect();
        pairwise_sum(&terms) * self.grid.volume()
    }

    /// Homogeneous Sobolev norm squared, `L^d sum (2π|xi|)^{2s} |c|^2`.
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        self.weighted_norm_sq(|xi| {
            if s == 0.0 {
                1.0
            } else {
                (2.0 * PI * xi).powf(2.0 * s)
            }
        })
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.sobolev_norm_sq(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Grid used for `L^p` quadrature: the field's own `M`, raised so that
    /// `|u|^p` is resolved.
    pub fn quadrature_resolution(&self, p: f64) -> usize {
        self.grid.m.max(default_resolution(self.grid.n_cut, p))
    }

    /// `∫ |u|^p` by the periodic trapezoidal rule.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let m = self.quadrature_resolution(p);
        let samples = self.to_physical_on(m);
        lp_pow_of_samples(&samples, p, self.grid.volume())
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norm_pow(p).powf(1.0 / p)
    }

    /// Largest `|u|` on the cell boundary divided by the largest `|u|` overall.
    pub fn boundary_ratio(&self) -> f64 {
        let m = self.grid.m;
        let d = self.grid.d;
        let samples = self.to_physical();
        let mut peak: f64 = 0.0;
        let mut edge: f64 = 0.0;
        for (idx, u) in samples.iter().enumerate() {
            let a = u.norm();
            peak = peak.max(a);
            let mut rest = idx;
            let mut on_edge = false;
            for _ in 0..d {
                on_edge |= rest % m == m / 2;
                rest /= m;
            }
            if on_edge {
                edge = edge.max(a);
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }
}

/// `volume / points · sum |u_j|^p`.
pub fn lp_pow_of_samples(samples: &[Complex64], p: f64, volume: f64) -> f64 {
    let terms: Vec<f64> = samples.iter().map(|u| abs_pow(u.norm_sqr(), p)).collect();
    pairwise_sum(&terms) * volume / samples.len() as f64
}

/// `|u|^p` from `|u|^2`, with integer powers taken exactly for even `p`.
#[inline]
pub fn abs_pow(a2: f64, p: f64) -> f64 {
    let half = 0.5 * p;
    if half == half.trunc() && half.abs() < 64.0 {
        a2.powi(half as i32)
    } else {
        a2.powf(half)
    }
}
