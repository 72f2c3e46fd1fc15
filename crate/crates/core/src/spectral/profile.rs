//! Profiles on `R^d` described by their continuous Fourier transform
//! `F(f)(xi) = ∫ f(x) e^{-2πi x·xi} dx`.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::{default_resolution, GridSpec};
use crate::error::{Error, Result};

pub trait Profile: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn fourier(&self, xi: &[f64; 3]) -> Complex64;
    /// Radius outside which the transform is negligible.
    fn band_radius(&self) -> f64;
    fn l2_norm(&self) -> f64;
    fn label(&self) -> String;
}

fn norm3(xi: &[f64; 3], d: usize) -> f64 {
    xi.iter().take(d).map(|x| x * x).sum::<f64>().sqrt()
}

/// `f(x) = e^{-π|x|^2}`, its own Fourier transform.
#[derive(Debug, Clone, Copy)]
pub struct GaussianProfile {
    pub d: usize,
}

impl Profile for GaussianProfile {
    fn dim(&self) -> usize {
        self.d
    }

    fn fourier(&self, xi: &[f64; 3]) -> Complex64 {
        let r = norm3(xi, self.d);
        Complex64::new((-PI * r * r).exp(), 0.0)
    }

    fn band_radius(&self) -> f64 {
        // e^{-π r^2} < 1e-17
        (17.0 * std::f64::consts::LN_10 / PI).sqrt()
    }

    fn l2_norm(&self) -> f64 {
        2f64.powf(-(self.d as f64) / 4.0)
    }

    fn label(&self) -> String {
        "gaussian".into()
    }
}

fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// `|S^{d-1}| ∫_0^R g(r)^2 r^{d-1} dr` by composite Simpson.
fn radial_l2_sq<G: Fn(f64) -> f64>(d: usize, radius: f64, g: G) -> f64 {
    let n = 20_000;
    let h = radius / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let r = i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = g(r);
        acc += w * v * v * r.powi(d as i32 - 1);
    }
    sphere_area(d) * acc * h / 3.0
}

/// Radial `F(f)(xi) = c |xi| exp(-1/(1 - |xi|^2))` on the unit ball, unit `L^2` norm.
#[derive(Debug, Clone, Copy)]
pub struct BumpProfile {
    pub d: usize,
    amplitude: f64,
}

impl BumpProfile {
    pub fn new(d: usize) -> Self {
        let raw = radial_l2_sq(d, 1.0, Self::shape);
        BumpProfile {
            d,
            amplitude: 1.0 / raw.sqrt(),
        }
    }

    fn shape(r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            r * (-1.0 / (1.0 - r * r)).exp()
        }
    }
}

impl Profile for BumpProfile {
    fn dim(&self) -> usize {
        self.d
    }

    fn fourier(&self, xi: &[f64; 3]) -> Complex64 {
        Complex64::new(self.amplitude * Self::shape(norm3(xi, self.d)), 0.0)
    }

    fn band_radius(&self) -> f64 {
        1.0
    }

    fn l2_norm(&self) -> f64 {
        1.0
    }

    fn label(&self) -> String {
        "bump".into()
    }
}

/// Zero extension to `R^d` of a field living on a centred box `[-L/2, L/2)^d`.
#[derive(Debug, Clone)]
pub struct BoxProfile {
    field: SpectralField,
    band: f64,
    name: String,
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-12 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

impl BoxProfile {
    pub fn new(field: SpectralField, name: impl Into<String>) -> Self {
        let band = field
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, _)| field.xi_norm(i))
            .fold(0.0, f64::max);
        BoxProfile {
            field,
            band,
            name: name.into(),
        }
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }
}

impl Profile for BoxProfile {
    fn dim(&self) -> usize {
        self.field.grid().d
    }

    fn fourier(&self, xi: &[f64; 3]) -> Complex64 {
        let grid = self.field.grid();
        let d = grid.d;
        let length = grid.length;
        let off = grid.lattice.offset();
        // On the lattice itself the sinc sum collapses to one coefficient.
        let mut lattice_hit = [0i32; 3];
        let mut on_lattice = true;
        for axis in 0..d {
            let t = length * xi[axis] - off;
            let r = t.round();
            if (t - r).abs() > 1e-12 {
                on_lattice = false;
                break;
            }
            lattice_hit[axis] = r as i32;
        }
        let volume = grid.volume();
        if on_lattice {
            return self.field.get(&lattice_hit) * volume;
        }
        let modes = self.field.modes();
        let mut acc = Complex64::default();
        for (i, c) in self.field.coeffs().iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let nu = modes.shifted(i);
            let weight: f64 = (0..d).map(|a| sinc(nu[a] - length * xi[a])).product();
            acc += c * weight;
        }
        acc * volume
    }

    fn band_radius(&self) -> f64 {
        self.band
    }

    fn l2_norm(&self) -> f64 {
        self.field.l2_norm()
    }

    fn label(&self) -> String {
        self.name.clone()
    }
}

/// Multiplies a profile's transform by `1 - e^{-|xi|^2/δ^2}` and restores unit norm,
/// removing the zero-frequency component.
#[derive(Debug, Clone)]
pub struct NotchedProfile {
    inner: Arc<dyn Profile>,
    delta: f64,
    scale: f64,
}

impl NotchedProfile {
    pub fn new(inner: Arc<dyn Profile>, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!("notch width {delta} must be positive")));
        }
        let d = inner.dim();
        // Only the neighbourhood of the origin changes; integrate the lost mass there.
        let pts = 64usize;
        let half = 8.0 * delta;
        let h = 2.0 * half / pts as f64;
        let mut lost = 0.0;
        let total = pts.pow(d as u32);
        for idx in 0..total {
            let mut xi = [0.0; 3];
            let mut rest = idx;
            for slot in xi.iter_mut().take(d) {
                *slot = -half + (rest % pts) as f64 * h + 0.5 * h;
                rest /= pts;
            }
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            let g = (-r2 / (delta * delta)).exp();
            lost += inner.fourier(&xi).norm_sqr() * (2.0 * g - g * g);
        }
        lost *= h.powi(d as i32);
        let kept = inner.l2_norm().powi(2) - lost;
        if !(kept > 0.0) {
            return Err(Error::Domain("notch removes the whole profile".into()));
        }
        Ok(NotchedProfile {
            inner,
            delta,
            scale: 1.0 / kept.sqrt(),
        })
    }
}

impl Profile for NotchedProfile {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn fourier(&self, xi: &[f64; 3]) -> Complex64 {
        let r2: f64 = xi.iter().take(self.dim()).map(|x| x * x).sum();
        self.inner.fourier(xi) * ((1.0 - (-r2 / (self.delta * self.delta)).exp()) * self.scale)
    }

    fn band_radius(&self) -> f64 {
        self.inner.band_radius()
    }

    fn l2_norm(&self) -> f64 {
        1.0
    }

    fn label(&self) -> String {
        format!("{}-notched", self.inner.label())
    }
}

/// Checks unit norm, vanishing mean and Fourier support in the unit ball.
pub fn check_class_a(profile: &dyn Profile, tol: f64) -> Result<()> {
    let norm = profile.l2_norm();
    if (norm - 1.0).abs() > tol {
        return Err(Error::Precondition(format!(
            "profile {} has L2 norm {norm}, expected 1",
            profile.label()
        )));
    }
    let zero = profile.fourier(&[0.0; 3]).norm();
    if zero > tol {
        return Err(Error::Precondition(format!(
            "profile {} has zero-frequency transform {zero:e}",
            profile.label()
        )));
    }
    if profile.band_radius() > 1.0 + tol {
        return Err(Error::Precondition(format!(
            "profile {} has Fourier support up to {}",
            profile.label(),
            profile.band_radius()
        )));
    }
    Ok(())
}

/// Periodized rescaling `f_eps^per` on `T^d`: coefficient `eps^{d/2} F(f)(eps n)`.
pub fn periodize_rescale(profile: &dyn Profile, eps: f64) -> Result<SpectralField> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Config(format!("eps = {eps} outside (0, 1]")));
    }
    let d = profile.dim();
    let reach = profile.band_radius() / eps;
    if !(reach < 1e6) {
        return Err(Error::Config(format!(
            "eps = {eps} needs frequencies up to {reach:.3e}"
        )));
    }
    let n_cut = reach.ceil() as usize;
    let grid = GridSpec::torus(d, n_cut, default_resolution(n_cut, 2.0)).map_err(|e| {
        Error::Config(format!("eps = {eps} exceeds the representable frequency range: {e}"))
    })?;
    let amp = eps.powf(d as f64 / 2.0);
    let mean_zero = profile.fourier(&[0.0; 3]).norm() == 0.0;
    Ok(SpectralField::from_fn(grid, mean_zero, |k, _| {
        let xi = [eps * k[0] as f64, eps * k[1] as f64, eps * k[2] as f64];
        profile.fourier(&xi) * amp
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Lattice;

    #[test]
    fn bump_is_class_a() {
        for d in 1..=3 {
            let b = BumpProfile::new(d);
            check_class_a(&b, 1e-6).unwrap();
        }
        assert!(check_class_a(&GaussianProfile { d: 1 }, 1e-6).is_err());
    }

    #[test]
    fn periodization_matches_transform() {
        let g = GaussianProfile { d: 1 };
        let f = periodize_rescale(&g, 0.25).unwrap();
        assert!(!f.is_mean_zero());
        for k in -6..=6 {
            let want = 0.5 * (-PI * (0.25 * k as f64).powi(2)).exp();
            let got = f.get(&[k, 0, 0]).re;
            assert!((got - want).abs() <= 1e-10 * want);
        }
        assert!(periodize_rescale(&g, 0.0).is_err());
        assert!(periodize_rescale(&g, 1e-9).is_err());
    }

    #[test]
    fn box_profile_reproduces_lattice_values() {
        let grid = GridSpec::new(1, 4, 16, 4.0, Lattice::HalfShifted).unwrap();
        let field = SpectralField::from_fn(grid, false, |k, _| Complex64::new(1.0 / (1.0 + (k[0] * k[0]) as f64), 0.0));
        let prof = BoxProfile::new(field.clone(), "test");
        // xi = (k + 1/2)/L hits coefficient k
        let v = prof.fourier(&[(1.0 + 0.5) / 4.0, 0.0, 0.0]);
        assert!((v - field.get(&[1, 0, 0]) * 4.0).norm() < 1e-12);
        // an off-lattice point goes through the sinc sum; compare with a midpoint quadrature
        let xi = 0.3;
        let phys = field.to_physical_on(4096);
        let h = 4.0 / 4096.0;
        let mut quad = Complex64::default();
        for (j, u) in phys.iter().enumerate() {
            let x = if j < 2048 { j as f64 * h } else { (j as f64 - 4096.0) * h };
            quad += u * Complex64::from_polar(h, -2.0 * PI * x * xi);
        }
        // trapezoid on a jump: O(h) accuracy
        assert!((prof.fourier(&[xi, 0.0, 0.0]) - quad).norm() < 5e-3);
    }

    #[test]
    fn notch_kills_zero_frequency() {
        let n = NotchedProfile::new(Arc::new(GaussianProfile { d: 1 }), 0.05).unwrap();
        assert_eq!(n.fourier(&[0.0; 3]).norm(), 0.0);
        // norm by brute-force quadrature of |F|^2
        let h = 1e-4;
        let mut acc = 0.0;
        let mut x = -4.0 + 0.5 * h;
        while x < 4.0 {
            acc += n.fourier(&[x, 0.0, 0.0]).norm_sqr() * h;
            x += h;
        }
        assert!((acc - 1.0).abs() < 1e-8);
    }
}
