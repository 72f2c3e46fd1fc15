use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::ascent::{sphere_ascent, AscentConfig, SphereProblem};
use super::{decay_warning, OptimResult};
use crate::error::{Error, Result};
use crate::params::{Criticality, ModelParams};
use crate::rng::{complex_normal, plain_stream, StreamTag};
use crate::spectral::{GridSpec, SpectralField};

pub const DEFAULT_STARTS: usize = 8;
/// Random wave packets screened for the starting set.
const CANDIDATES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub ascent: AscentConfig,
    pub seed: u64,
    pub starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            ascent: AscentConfig::default(),
            seed: 0,
            starts: DEFAULT_STARTS,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.ascent.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }
}

/// Gaussian packets in frequency with random centre, width and roughness.
fn candidate(problem: &SphereProblem, seed: u64, index: usize) -> Vec<Complex64> {
    let mut rng = plain_stream(seed, index as u64, StreamTag::Init);
    let probe = SpectralField::zeros(problem.grid, false);
    let d = problem.grid.d;
    let xi_max = (0..problem.dim())
        .filter(|i| problem.mask()[*i])
        .map(|i| probe.xi_norm(i))
        .fold(0.0, f64::max)
        .max(1e-12);
    let width = xi_max * (0.15 + 0.85 * rng.random::<f64>());
    let mut centre = [0.0; 3];
    for c in centre.iter_mut().take(d) {
        *c = 0.3 * xi_max * (2.0 * rng.random::<f64>() - 1.0);
    }
    let roughness = 0.5 * rng.random::<f64>();
    (0..problem.dim())
        .map(|i| {
            let xi = probe.xi(i);
            let r2: f64 = (0..d).map(|a| (xi[a] - centre[a]).powi(2)).sum();
            let noise = complex_normal(&mut rng) * roughness;
            (Complex64::new(1.0, 0.0) + noise) * (-0.5 * r2 / (width * width)).exp()
        })
        .collect()
}

/// Ranks candidates by `L^p` norm and climbs from the best `starts` of them.
fn multi_start(problem: &SphereProblem, opts: &SolverOptions) -> Result<OptimResult> {
    let ranking = SphereProblem::new(problem.grid, 1.0, problem.p, 1.0, 0.0, |_, _| true);
    let mut scored: Vec<(f64, usize, Vec<Complex64>)> = (0..CANDIDATES)
        .into_par_iter()
        .map(|i| {
            let mut v = candidate(problem, opts.seed, i);
            problem.project(&mut v);
            let n: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let score = if n > 0.0 {
                let unit: Vec<Complex64> = v.iter().map(|x| x / n).collect();
                ranking.value(&unit)
            } else {
                f64::NEG_INFINITY
            };
            (score, i, v)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let starts = opts.starts.max(1).min(scored.len());
    let results: Vec<OptimResult> = scored
        .into_iter()
        .take(starts)
        .collect::<Vec<_>>()
        .into_par_iter()
        .enumerate()
        .map(|(rank, (_, _, v))| {
            let mut r = sphere_ascent(problem, v, &opts.ascent);
            r.start = rank;
            r
        })
        .collect();
    let best = results
        .into_iter()
        .filter(|r| r.value.is_finite())
        .reduce(|best, r| if r.value > best.value { r } else { best });
    best.ok_or_else(|| Error::Internal("every start produced a non-finite objective".into()))
}

fn require_critical(params: &ModelParams) -> Result<()> {
    params.validate()?;
    match params.criticality() {
        Criticality::Critical => Ok(()),
        other => Err(Error::Precondition(format!(
            "p = {} is {other} for d = {}, s = {}; the constrained supremum needs p = 4s/d + 2",
            params.p, params.d, params.s
        ))),
    }
}

/// Sign label of `K` relative to `||Q||_{L^2}`.
pub fn threshold_label(k: f64, mass_q: f64) -> &'static str {
    if (k - mass_q).abs() <= 1e-12 * mass_q {
        "threshold"
    } else if k > mass_q {
        "above"
    } else {
        "below"
    }
}

fn band_limited(radius: f64) -> impl Fn(f64, f64) -> bool {
    move |xi, _| xi <= radius + 1e-12
}

/// `sup { (K^p/p)||u||^p − (K^2/2)||u||^2_{H^s} : ||u||_2 = 1, supp û ⊂ B_1 }` on a box.
pub fn ck_supremum(params: &ModelParams, cell: &GridSpec, opts: &SolverOptions) -> Result<OptimResult> {
    require_critical(params)?;
    cell.validate()?;
    let (k, p) = (params.k, params.p);
    let problem = SphereProblem::new(*cell, params.s, p, k.powf(p) / p, 0.5 * k * k, band_limited(1.0));
    let mut res = multi_start(&problem, opts)?;
    res.warnings.extend(decay_warning(&res.field));
    Ok(res)
}

/// Same functional over mean-zero fields on `T^d` with `|n| <= N`, any `p > 2`.
pub fn ek_torus_supremum(params: &ModelParams, n_cut: usize, opts: &SolverOptions) -> Result<OptimResult> {
    params.validate()?;
    if n_cut == 0 {
        return Err(Error::Precondition("cutoff N must be at least 1".into()));
    }
    let grid = GridSpec::torus_for(params.d, n_cut, params.p)?;
    let (k, p) = (params.k, params.p);
    let problem = SphereProblem::new(grid, params.s, p, k.powf(p) / p, 0.5 * k * k, |_, r| r > 0.0);
    let mut res = multi_start(&problem, opts)?;
    res.field = SpectralField::from_coeffs(grid, res.field.coeffs().to_vec(), true)?;
    Ok(res)
}

/// Finite-`N` torus analogue `C_{K,N}` of the constrained supremum.
pub fn ckn_torus_supremum(params: &ModelParams, n_cut: usize, opts: &SolverOptions) -> Result<OptimResult> {
    require_critical(params)?;
    ek_torus_supremum(params, n_cut, opts)
}

/// Optimal constant in `||Pf||^p_{L^p} <= C_B ||f||^p_{L^2}` with `P` the unit ball multiplier.
pub fn cb_bernstein(d: usize, p: f64, cell: &GridSpec, opts: &SolverOptions) -> Result<OptimResult> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Precondition(format!("p = {p} must be at least 2")));
    }
    if cell.d != d {
        return Err(Error::Config(format!("cell dimension {} differs from d = {d}", cell.d)));
    }
    cell.validate()?;
    let problem = SphereProblem::new(*cell, 1.0, p, 1.0, 0.0, band_limited(1.0));
    let mut res = multi_start(&problem, opts)?;
    res.warnings.extend(decay_warning(&res.field));
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn criticality_is_enforced() {
        let p = ModelParams::new(1, 1.0, 8.0, 2.0).unwrap();
        let cell = GridSpec::band_limited_box(1, 8.0, 8.0).unwrap();
        assert!(matches!(ck_supremum(&p, &cell, &SolverOptions::default()), Err(Error::Precondition(_))));
        assert!(ckn_torus_supremum(&p, 4, &SolverOptions::default()).is_err());
        assert!(ek_torus_supremum(&p, 4, &SolverOptions::default().with_starts(1)).is_ok());
    }

    #[test]
    fn bernstein_p2_is_one() {
        let cell = GridSpec::band_limited_box(1, 8.0, 2.0).unwrap();
        let r = cb_bernstein(1, 2.0, &cell, &SolverOptions::default().with_starts(2)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn ckn_at_n1_matches_two_mode_sweep() {
        // On the two-mode sphere a e^{2πix} + b e^{-2πix}, |a|^2 + |b|^2 = 1, only
        // the split angle matters; relative phases shift x.
        let params = ModelParams::new(1, 1.0, 6.0, 1.8).unwrap();
        let k = params.k;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=200_000 {
            let th = 0.5 * PI * i as f64 / 200_000.0;
            let e = k.powi(6) / 6.0 * (1.0 + 1.5 * (2.0 * th).sin().powi(2)) - 2.0 * PI * PI * k * k;
            best = best.max(e);
        }
        let r = ckn_torus_supremum(&params, 1, &SolverOptions::default()).unwrap();
        assert!((r.value - best).abs() <= 1e-4 * best.abs().max(1.0), "{} vs {best}", r.value);
    }

    #[test]
    fn labels() {
        assert_eq!(threshold_label(1.0, 1.0), "threshold");
        assert_eq!(threshold_label(1.1, 1.0), "above");
        assert_eq!(threshold_label(0.9, 1.0), "below");
    }
}
