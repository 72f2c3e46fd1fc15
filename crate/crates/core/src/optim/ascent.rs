use std::f64::consts::PI;

use num_complex::Complex64;

use super::OptimResult;
use crate::spectral::{abs_pow, GridSpec, SpectralField, Transform};
use crate::stats::pairwise_sum;

/// Maximization of `E(v) = A·||u||^p_{L^p} − B·||u||^2_{H^s}` over unit-`L^2`
/// fields supported on a mode mask.
///
/// The search variable is `v = L^{d/2} c`, so that `||u||_{L^2} = |v|`.
#[derive(Debug, Clone)]
pub struct SphereProblem {
    pub grid: GridSpec,
    pub p: f64,
    /// Coefficient of `||u||^p_{L^p}`.
    pub lp_weight: f64,
    /// Coefficient of `||u||^2_{H^s}`.
    pub energy_weight: f64,
    mask: Vec<bool>,
    sym_sq: Vec<f64>,
    transform: Transform,
    root_volume: f64,
}

impl SphereProblem {
    /// `allow(xi_norm, radius_index)` decides which modes are free.
    pub fn new<A>(grid: GridSpec, s: f64, p: f64, lp_weight: f64, energy_weight: f64, allow: A) -> Self
    where
        A: Fn(f64, f64) -> bool,
    {
        let probe = SpectralField::zeros(grid, false);
        let modes = probe.modes().clone();
        let mask = (0..modes.len())
            .map(|i| allow(probe.xi_norm(i), modes.radii[i]))
            .collect();
        let sym_sq = (0..modes.len())
            .map(|i| {
                let xi = probe.xi_norm(i);
                if xi == 0.0 {
                    0.0
                } else {
                    (2.0 * PI * xi).powf(2.0 * s)
                }
            })
            .collect();
        let m_eval = probe.quadrature_resolution(p);
        SphereProblem {
            grid,
            p,
            lp_weight,
            energy_weight,
            mask,
            sym_sq,
            transform: Transform::new(&grid, &modes, m_eval),
            root_volume: grid.volume().sqrt(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn project(&self, v: &mut [Complex64]) {
        for (x, keep) in v.iter_mut().zip(&self.mask) {
            if !keep {
                *x = Complex64::default();
            }
        }
    }

    /// Objective and its gradient for the real inner product `Re <a, b>`.
    pub fn eval(&self, v: &[Complex64]) -> (f64, Vec<Complex64>) {
        let c: Vec<Complex64> = v.iter().map(|x| x / self.root_volume).collect();
        let u = self.transform.to_physical(&c);
        let p = self.p;
        let pows: Vec<f64> = u.iter().map(|z| abs_pow(z.norm_sqr(), p)).collect();
        let lp = pairwise_sum(&pows) * self.grid.volume() / u.len() as f64;
        let w: Vec<Complex64> = u
            .iter()
            .zip(&pows)
            .map(|(z, pw)| if *pw == 0.0 { Complex64::default() } else { z * (pw / z.norm_sqr()) })
            .collect();
        let w_hat = self.transform.to_spectral(&w);
        let energy_terms: Vec<f64> = v.iter().zip(&self.sym_sq).map(|(x, s2)| s2 * x.norm_sqr()).collect();
        let energy = pairwise_sum(&energy_terms);
        let value = self.lp_weight * lp - self.energy_weight * energy;
        let grad = w_hat
            .iter()
            .zip(v)
            .zip(self.sym_sq.iter().zip(&self.mask))
            .map(|((wh, x), (s2, keep))| {
                if *keep {
                    wh * (self.lp_weight * p * self.root_volume) - x * (2.0 * self.energy_weight * s2)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        (value, grad)
    }

    pub fn value(&self, v: &[Complex64]) -> f64 {
        self.eval(v).0
    }

    pub fn to_field(&self, v: &[Complex64], mean_zero: bool) -> SpectralField {
        let c = v.iter().map(|x| x / self.root_volume).collect();
        SpectralField::from_coeffs(self.grid, c, mean_zero).expect("coefficients match the grid")
    }

    pub fn from_field(&self, f: &SpectralField) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = f.coeffs().iter().map(|x| x * self.root_volume).collect();
        self.project(&mut v);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub shrink: f64,
    pub initial_step: f64,
    /// Relative objective change required over `window` iterations.
    pub stall_tol: f64,
    pub window: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            tol: 1e-8,
            max_iter: 20_000,
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
            stall_tol: 1e-10,
            window: 10,
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    let t: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).collect();
    pairwise_sum(&t)
}

fn normalize(v: &mut [Complex64]) -> bool {
    let n = dot(v, v).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Tangential part of `g` at the unit vector `v`, and its relative norm.
fn tangent(v: &[Complex64], g: &[Complex64]) -> (Vec<Complex64>, f64) {
    let radial = dot(v, g);
    let t: Vec<Complex64> = g.iter().zip(v).map(|(gi, vi)| gi - vi * radial).collect();
    let scale = dot(g, g).sqrt().max(1.0);
    let n = dot(&t, &t).sqrt();
    (t, n / scale)
}

/// Projected gradient ascent on the unit sphere with Armijo backtracking.
///
/// The trial step starts from the Barzilai–Borwein estimate of the previous
/// iteration, capped at `initial_step`.
pub fn sphere_ascent(problem: &SphereProblem, start: Vec<Complex64>, cfg: &AscentConfig) -> OptimResult {
    let mut v = start;
    problem.project(&mut v);
    let mut warnings = Vec::new();
    if !normalize(&mut v) {
        warnings.push("start vector vanished on the admissible modes".into());
        return OptimResult {
            field: problem.to_field(&v, true),
            value: f64::NAN,
            iterations: 0,
            converged: false,
            grad_norm: f64::NAN,
            trace: Vec::new(),
            start: 0,
            warnings,
        };
    }
    let (mut f, g) = problem.eval(&v);
    let (mut gt, mut gnorm) = tangent(&v, &g);
    let mut trace = vec![f];
    let mut step = cfg.initial_step;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let window_done = trace.len() > cfg.window && {
            let old = trace[trace.len() - 1 - cfg.window];
            (f - old).abs() <= cfg.stall_tol * f.abs().max(1e-300)
        };
        if gnorm <= cfg.tol && (window_done || gnorm == 0.0) {
            converged = true;
            break;
        }
        let slope = dot(&gt, &gt);
        let mut tau = step.min(cfg.initial_step);
        let accepted = loop {
            let mut trial: Vec<Complex64> = v.iter().zip(&gt).map(|(x, d)| x + d * tau).collect();
            if normalize(&mut trial) {
                let (ft, gtr) = problem.eval(&trial);
                if ft >= f + cfg.armijo * tau * slope {
                    break Some((trial, ft, gtr));
                }
            }
            tau *= cfg.shrink;
            if tau < 1e-18 {
                break None;
            }
        };
        let Some((trial, ft, g_new)) = accepted else {
            warnings.push(format!("line search stalled at iteration {iterations}"));
            break;
        };
        let (gt_new, gn_new) = tangent(&trial, &g_new);
        let s: Vec<Complex64> = trial.iter().zip(&v).map(|(a, b)| a - b).collect();
        let y: Vec<Complex64> = gt_new.iter().zip(&gt).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y).abs();
        step = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * tau };
        v = trial;
        f = ft;
        gt = gt_new;
        gnorm = gn_new;
        trace.push(f);
        iterations += 1;
    }
    if !converged && gnorm <= cfg.tol {
        converged = true;
    }
    if !converged && iterations >= cfg.max_iter {
        warnings.push(format!("iteration budget {} exhausted", cfg.max_iter));
    }
    OptimResult {
        field: problem.to_field(&v, false),
        value: f,
        iterations,
        converged,
        grad_norm: gnorm,
        trace,
        start: 0,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, plain_stream, StreamTag};

    fn problem() -> SphereProblem {
        let grid = GridSpec::torus_for(1, 6, 6.0).unwrap();
        SphereProblem::new(grid, 1.0, 6.0, 3.0, 0.02, |_, r| r > 0.0)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let prob = problem();
        let mut rng = plain_stream(4, 0, StreamTag::Init);
        let mut v: Vec<Complex64> = (0..prob.dim()).map(|_| complex_normal(&mut rng)).collect();
        prob.project(&mut v);
        let (_, g) = prob.eval(&v);
        for trial in 0..20 {
            let mut dir: Vec<Complex64> = (0..prob.dim()).map(|_| complex_normal(&mut rng)).collect();
            prob.project(&mut dir);
            let h = 1e-5;
            let plus: Vec<Complex64> = v.iter().zip(&dir).map(|(a, b)| a + b * h).collect();
            let minus: Vec<Complex64> = v.iter().zip(&dir).map(|(a, b)| a - b * h).collect();
            let fd = (prob.value(&plus) - prob.value(&minus)) / (2.0 * h);
            let an = dot(&g, &dir);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "direction {trial}: {fd} vs {an}");
        }
    }

    #[test]
    fn ascent_is_monotone_and_stays_on_sphere() {
        let prob = problem();
        let mut rng = plain_stream(5, 0, StreamTag::Init);
        let v: Vec<Complex64> = (0..prob.dim()).map(|_| complex_normal(&mut rng)).collect();
        let res = sphere_ascent(&prob, v, &AscentConfig::default());
        assert!(res.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!((res.field.l2_norm() - 1.0).abs() < 1e-12);
        assert!(res.converged, "{res:?}");
        assert_eq!(res.field.get(&[0, 0, 0]), Complex64::default());
    }
}
