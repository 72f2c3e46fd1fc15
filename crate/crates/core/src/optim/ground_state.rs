use num_complex::Complex64;

use super::decay_warning;
use crate::error::{Error, Result};
use crate::spectral::{abs_pow, GridSpec, Lattice, SpectralField, Transform};
use crate::stats::pairwise_sum;

/// Minimizer of the Weinstein quotient, rescaled so that
/// `||Q||_{L^2} = ||Q||_{H^s}` and `||Q||^2_{H^s} = (2/p)||Q||^p_{L^p}`.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub q: SpectralField,
    pub mass_q: f64,
    pub c_gns: f64,
    /// `||∇ log J(Q)||_{L^2} · ||Q||_{L^2}`.
    pub residual: f64,
    pub j_min: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Width of the initial Gaussian `e^{-π|x|^2/σ^2}`.
    pub initial_width: f64,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        GroundStateConfig {
            tol: 1e-8,
            max_iter: 20_000,
            initial_width: 1.5,
        }
    }
}

impl GroundState {
    /// Periodic cell used by default: side 48 with 1024 points in one dimension.
    pub fn default_cell(d: usize) -> Result<GridSpec> {
        let (length, m) = match d {
            1 => (48.0, 1024),
            2 => (32.0, 256),
            _ => (24.0, 64),
        };
        GridSpec::new(d, m / 2 - 1, m, length, Lattice::Integer)
    }
}

/// Exponents `(a, b)` with `J(u) = ||u||_{H^s}^a ||u||_{L^2}^b / ||u||^p_{L^p}`.
fn exponents(d: usize, s: f64, p: f64) -> (f64, f64) {
    let a = (p - 2.0) * d as f64 / (2.0 * s);
    (a, p - a)
}

/// Weinstein quotient `J(u)`; its infimum is `1/C_GNS`.
pub fn weinstein_functional(u: &SpectralField, s: f64, p: f64) -> f64 {
    let (a, b) = exponents(u.grid().d, s, p);
    let h = u.sobolev_norm_sq(s);
    let m = u.l2_norm_sq();
    h.powf(0.5 * a) * m.powf(0.5 * b) / u.lp_norm_pow(p)
}

struct Quotient {
    grid: GridSpec,
    p: f64,
    a: f64,
    b: f64,
    sym_sq: Vec<f64>,
    eval_tf: Transform,
    grid_tf: Transform,
}

impl Quotient {
    fn new(grid: GridSpec, s: f64, p: f64) -> Self {
        let probe = SpectralField::zeros(grid, false);
        let sym_sq = (0..probe.len())
            .map(|i| {
                let xi = probe.xi_norm(i);
                if xi == 0.0 {
                    0.0
                } else {
                    (2.0 * std::f64::consts::PI * xi).powf(2.0 * s)
                }
            })
            .collect();
        let (a, b) = exponents(grid.d, s, p);
        Quotient {
            grid,
            p,
            a,
            b,
            sym_sq,
            eval_tf: probe.transform(probe.quadrature_resolution(p)),
            grid_tf: probe.transform(grid.m),
        }
    }

    fn sum(&self, f: impl Fn(usize) -> f64, n: usize) -> f64 {
        pairwise_sum(&(0..n).map(f).collect::<Vec<_>>())
    }

    /// `log J` and its `L^2` gradient in coefficient form.
    fn eval(&self, c: &[Complex64]) -> (f64, Vec<Complex64>) {
        let vol = self.grid.volume();
        let n = c.len();
        let h = vol * self.sum(|i| self.sym_sq[i] * c[i].norm_sqr(), n);
        let m = vol * self.sum(|i| c[i].norm_sqr(), n);
        let u = self.eval_tf.to_physical(c);
        let pows: Vec<f64> = u.iter().map(|z| abs_pow(z.norm_sqr(), self.p)).collect();
        let lp = pairwise_sum(&pows) * vol / u.len() as f64;
        let w: Vec<Complex64> = u
            .iter()
            .zip(&pows)
            .map(|(z, pw)| if *pw == 0.0 { Complex64::default() } else { z * (pw / z.norm_sqr()) })
            .collect();
        let w_hat = self.eval_tf.to_spectral(&w);
        let value = 0.5 * self.a * h.ln() + 0.5 * self.b * m.ln() - lp.ln();
        let grad = (0..n)
            .map(|i| c[i] * (self.a * self.sym_sq[i] / h + self.b / m) - w_hat[i] * (self.p / lp))
            .collect();
        (value, grad)
    }

    fn inner(&self, x: &[Complex64], y: &[Complex64]) -> f64 {
        self.grid.volume() * self.sum(|i| (x[i].conj() * y[i]).re, x.len())
    }

    /// Unit generator of dilations `x·∇u`, orthogonalized against `u`.
    fn dilation(&self, c: &[Complex64]) -> Option<Vec<Complex64>> {
        let d = self.grid.d;
        let m = self.grid_tf.m;
        let probe = SpectralField::zeros(self.grid, false);
        let h = self.grid.length / m as f64;
        let mut acc = vec![Complex64::default(); self.grid_tf.points()];
        for axis in 0..d {
            let deriv: Vec<Complex64> = (0..c.len())
                .map(|i| c[i] * Complex64::new(0.0, 2.0 * std::f64::consts::PI * probe.xi(i)[axis]))
                .collect();
            let du = self.grid_tf.to_physical(&deriv);
            let stride = m.pow((d - 1 - axis) as u32);
            for (idx, v) in du.iter().enumerate() {
                let j = (idx / stride) % m;
                let x = if 2 * j < m { j as f64 } else { j as f64 - m as f64 } * h;
                acc[idx] += v * x;
            }
        }
        let mut e = self.grid_tf.to_spectral(&acc);
        let along = self.inner(c, &e) / self.inner(c, c);
        e.iter_mut().zip(c).for_each(|(ei, ci)| *ei -= ci * along);
        let n = self.inner(&e, &e).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return None;
        }
        e.iter_mut().for_each(|ei| *ei /= n);
        Some(e)
    }

    /// Removes the component along the unit vector `e`.
    fn remove(&self, x: &mut [Complex64], e: &[Complex64]) {
        let along = self.inner(e, x);
        x.iter_mut().zip(e).for_each(|(xi, ei)| *xi -= ei * along);
    }

    /// Real part in physical space, `|·|` if it changed sign, then unit `L^2` norm.
    fn project(&self, c: &[Complex64]) -> Option<Vec<Complex64>> {
        let mut u = self.grid_tf.to_physical(c);
        let peak = u.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let negative = u.iter().any(|z| z.re < -1e-12 * peak); 
        u.iter_mut()
            .for_each(|z| *z = Complex64::new(if negative { z.re.abs() } else { z.re }, 0.0));
        let mut out = self.grid_tf.to_spectral(&u);
        let norm = self.inner(&out, &out).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        out.iter_mut().for_each(|z| *z /= norm);
        Some(out)
    }
}

/// Minimizes the Weinstein quotient by preconditioned descent with a
/// positivity projection, then rescales to the normalized ground state.
pub fn gns_ground_state(d: usize, s: f64, p: f64, cell: &GridSpec, cfg: &GroundStateConfig) -> Result<GroundState> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::Precondition(format!("p = {p} must exceed 2")));
    }
    if !(s > 0.0) {
        return Err(Error::Precondition(format!("s = {s} must be positive")));
    }
    let df = d as f64;
    if df > 2.0 * s {
        let limit = 2.0 * df / (df - 2.0 * s);
        if p >= limit {
            return Err(Error::Precondition(format!(
                "p = {p} is not below the Sobolev exponent 2d/(d-2s) = {limit}"
            )));
        }
    }
    if cell.d != d || cell.lattice != Lattice::Integer {
        return Err(Error::Config("ground state needs an integer-lattice cell of dimension d".into()));
    }
    cell.validate()?;
    let quot = Quotient::new(*cell, s, p);
    let sigma = cfg.initial_width;
    let start = SpectralField::from_fn(*cell, false, |_, xi| {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        Complex64::new(sigma.powi(d as i32) * (-std::f64::consts::PI * sigma * sigma * r2).exp(), 0.0)
    });
    let mut c = quot
        .project(start.coeffs())
        .ok_or_else(|| Error::Internal("initial guess vanished".into()))?;
    let (mut f, mut g) = quot.eval(&c);
    let mut trace = vec![f];
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut warnings = Vec::new();
    // Dilations leave J unchanged on R^d; on the grid they only see
    // discretization error, so they are excluded from steps and from the
    // convergence test.
    let symmetric_part = |c: &[Complex64], g: &[Complex64]| -> (Vec<Complex64>, Option<Vec<Complex64>>) {
        let mut g = g.to_vec();
        let e = quot.dilation(c);
        if let Some(e) = &e {
            quot.remove(&mut g, e);
        }
        (g, e)
    };
    let (mut g_perp, mut e_dil) = symmetric_part(&c, &g);
    let mut grad_norm = quot.inner(&g_perp, &g_perp).sqrt();
    while iterations < cfg.max_iter {
        let settled = trace.len() > 10 && (f - trace[trace.len() - 11]).abs() <= 1e-10 * f.abs().max(1.0);
        if grad_norm <= cfg.tol && settled {
            converged = true;
            break;
        }
        // inverse diagonal of the quadratic part of the Hessian of log J
        let h = quot.grid.volume() * quot.sum(|i| quot.sym_sq[i] * c[i].norm_sqr(), c.len());
        let m = quot.inner(&c, &c);
        let mut dir: Vec<Complex64> = g_perp
            .iter()
            .zip(&quot.sym_sq)
            .map(|(gi, s2)| gi / (quot.a * s2 / h + quot.b / m))
            .collect();
        if let Some(e) = &e_dil {
            quot.remove(&mut dir, e);
        }
        let slope = quot.inner(&g, &dir);
        let mut tau = (2.0 * step).min(1.0);
        let accepted = loop {
            let trial: Vec<Complex64> = c.iter().zip(&dir).map(|(x, dx)| x - dx * tau).collect();
            if let Some(trial) = quot.project(&trial) {
                let (ft, gt) = quot.eval(&trial);
                // Armijo with roundoff slack: near the minimum the predicted
                // decrease drops below the resolution of log J.
                if ft <= f - 1e-4 * tau * slope + 1e-14 * f.abs().max(1.0) {
                    break Some((trial, ft, gt));
                }
            }
            tau *= 0.5;
            if tau < 1e-18 {
                break None;
            }
        };
        let Some((trial, ft, gt)) = accepted else {
            break;
        };
        step = tau;
        c = trial;
        f = ft;
        g = gt;
        (g_perp, e_dil) = symmetric_part(&c, &g);
        grad_norm = quot.inner(&g_perp, &g_perp).sqrt();
        trace.push(f);
        iterations += 1;
    }
    if !converged && grad_norm <= cfg.tol {
        converged = true;
    }
    if !converged {
        warnings.push(format!(
            "descent stopped after {iterations} iterations with gradient norm {grad_norm:.3e}"
        ));
    }

    // cQ(bx): b^{2s} = m/a, c^{p-2} = (p/2) m / P, realized by shrinking the cell.
    let raw = SpectralField::from_coeffs(*cell, c, false)?;
    let m = raw.l2_norm_sq();
    let a = raw.sobolev_norm_sq(s);
    let lp = raw.lp_norm_pow(p);
    let b = (m / a).powf(1.0 / (2.0 * s));
    let amp = (0.5 * p * m / lp).powf(1.0 / (p - 2.0));
    let q = raw.scale(amp).relabel_length(cell.length / b)?;
    warnings.extend(decay_warning(&q));
    let mass_q = q.l2_norm();
    let (_, grad_q) = Quotient::new(*q.grid(), s, p).eval(q.coeffs());
    let residual = quot.inner(&grad_q, &grad_q).sqrt() * (q.grid().volume() / cell.volume()).sqrt() * mass_q;
    Ok(GroundState {
        j_min: weinstein_functional(&q, s, p),
        c_gns: 0.5 * p * mass_q.powf(2.0 - p),
        q,
        mass_q,
        residual,
        iterations,
        converged,
        grad_norm,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_balance_homogeneity() {
        let (a, b) = exponents(1, 1.0, 6.0);
        assert_eq!((a, b), (2.0, 4.0));
        let (a, b) = exponents(3, 2.0, 5.0);
        assert!((a + b - 5.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_sobolev_supercritical() {
        let cell = GroundState::default_cell(3).unwrap();
        let r = gns_ground_state(3, 1.0, 6.0, &cell, &GroundStateConfig::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn small_quintic_ground_state() {
        let cell = GroundState::default_cell(1).unwrap();
        let gs = gns_ground_state(1, 1.0, 6.0, &cell, &GroundStateConfig::default()).unwrap();
        assert!(gs.converged, "{:?}", gs.warnings);
        let want = 3f64.sqrt() * std::f64::consts::PI / 2.0;
        assert!((gs.mass_q.powi(2) - want).abs() < 1e-3 * want, "{}", gs.mass_q.powi(2));
        let h = gs.q.sobolev_norm_sq(1.0);
        assert!((gs.q.l2_norm_sq() - h).abs() < 1e-10 * h);
        assert!((h - gs.q.lp_norm_pow(6.0) / 3.0).abs() < 1e-10 * h);
    }
}
