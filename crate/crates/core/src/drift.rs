//! The explicit drift behind the variational lower bound: the OU-type
//! approximation `ζ_N` of `Y_N`, the rescaled profile `F_N`, and Monte Carlo
//! estimation of the resulting bound and its error terms.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::sampler::{field_grid, BrownianModes, IncrementStream, DEFAULT_STEPS};
use crate::spectral::{abs_pow, check_class_a, periodize_rescale, ModeTable, Profile, SpectralField};
use crate::stats::{mean_estimate, pairwise_sum, MeanEstimate};

/// Pilot draws use a seed derived from, but disjoint from, the main seed.
const PILOT_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

fn mode_weight(params: &ModelParams, r: f64) -> Option<f64> {
    if r == 0.0 && !params.includes_zero_mode() {
        None
    } else {
        Some(params.symbol(r))
    }
}

/// Relaxation rate `λ_n = N^{d/2} / symbol(|n|)`.
pub fn relax_rate(params: &ModelParams, n_cut: usize, r: f64) -> f64 {
    (n_cut as f64).powf(params.d as f64 / 2.0) / params.symbol(r)
}

#[derive(Debug, Clone)]
pub struct ZetaPath {
    pub n_cut: usize,
    pub steps: usize,
    pub modes: Arc<ModeTable>,
    /// Zero for modes that carry no Gaussian coordinate.
    pub rates: Vec<f64>,
    /// `paths[i][j] = ζ_N(j/T, n_i)`.
    pub paths: Vec<Vec<Complex64>>,
}

impl ZetaPath {
    /// Integrates `dζ = λ(Y − ζ)dt` with forcing `forcing(i, j) = Y(t_j, n_i)` held
    /// at the left endpoint of each step.
    pub fn from_forcing<F>(params: &ModelParams, n_cut: usize, steps: usize, mut forcing: F) -> Self
    where
        F: FnMut(usize, usize) -> Complex64,
    {
        let modes = ModeTable::shared(params.d, n_cut, crate::spectral::Lattice::Integer);
        let dt = 1.0 / steps as f64;
        let mut rates = Vec::with_capacity(modes.len());
        let mut paths = Vec::with_capacity(modes.len());
        for (i, r) in modes.radii.iter().enumerate() {
            let mut path = vec![Complex64::default(); steps + 1];
            if mode_weight(params, *r).is_none() {
                rates.push(0.0);
                paths.push(path);
                continue;
            }
            let lambda = relax_rate(params, n_cut, *r);
            let decay = (-lambda * dt).exp();
            for j in 0..steps {
                path[j + 1] = path[j] * decay + forcing(i, j) * (1.0 - decay);
            }
            rates.push(lambda);
            paths.push(path);
        }
        ZetaPath {
            n_cut,
            steps,
            modes,
            rates,
            paths,
        }
    }

    /// Terminal value `ζ_N(1)` on the model's field grid.
    pub fn terminal(&self, params: &ModelParams) -> Result<SpectralField> {
        let grid = field_grid(params, self.n_cut)?;
        Ok(SpectralField::from_fn(grid, !params.includes_zero_mode(), |k, _| {
            let i = self.modes.position(k).expect("same mode table");
            self.paths[i][self.steps]
        }))
    }
}

pub fn zeta_evolve(b: &BrownianModes, params: &ModelParams, n_cut: usize) -> Result<ZetaPath> {
    if b.d != params.d || b.n_cut != n_cut {
        return Err(Error::Config(format!(
            "Brownian modes (d = {}, N = {}) do not match d = {}, N = {n_cut}",
            b.d, b.n_cut, params.d
        )));
    }
    Ok(ZetaPath::from_forcing(params, n_cut, b.steps, |i, j| {
        let r = b.modes.radii[i];
        b.paths[i][j] / params.symbol(r)
    }))
}

/// `sum_j ||Δζ_j / δ||^2_{H^s} δ` with weight `(2π|n|)^{2s}`.
pub fn zeta_kinetic_cost(z: &ZetaPath, s: f64) -> f64 {
    let dt = 1.0 / z.steps as f64;
    let per_mode: Vec<f64> = z
        .paths
        .iter()
        .zip(&z.radii_weights(s))
        .map(|(path, w)| {
            let sq: Vec<f64> = path.windows(2).map(|p| (p[1] - p[0]).norm_sqr()).collect();
            w * pairwise_sum(&sq) / dt
        })
        .collect();
    pairwise_sum(&per_mode)
}

impl ZetaPath {
    fn radii_weights(&self, s: f64) -> Vec<f64> {
        self.modes
            .radii
            .iter()
            .map(|r| {
                if *r == 0.0 {
                    0.0
                } else {
                    (2.0 * std::f64::consts::PI * r).powf(2.0 * s)
                }
            })
            .collect()
    }
}

/// One sampled path reduced to what the lower bound needs.
#[derive(Debug, Clone)]
pub struct PathSummary {
    pub y: SpectralField,
    pub zeta: SpectralField,
    /// `sum_j ||Δζ_j/δ||^2 δ` in the model's energy norm.
    pub kinetic: f64,
}

/// Simulates `Y_N` and `ζ_N` for sample `index` without storing the paths.
///
/// Uses the same per-mode streams and arithmetic as
/// `sample_brownian` followed by `zeta_evolve`.
pub fn simulate_path(params: &ModelParams, n_cut: usize, steps: usize, seed: u64, index: u64) -> Result<PathSummary> {
    let grid = field_grid(params, n_cut)?;
    let modes = grid.modes();
    let dt = 1.0 / steps as f64;
    let mut y = vec![Complex64::default(); modes.len()];
    let mut zeta = vec![Complex64::default(); modes.len()];
    let mut kinetic = Vec::with_capacity(modes.len());
    for (i, (k, r)) in modes.indices.iter().zip(&modes.radii).enumerate() {
        let Some(sym) = mode_weight(params, *r) else {
            continue;
        };
        let decay = (-relax_rate(params, n_cut, *r) * dt).exp();
        let mut stream = IncrementStream::new(seed, index, k, steps);
        let mut b = Complex64::default();
        let mut z = Complex64::default();
        let mut sq = Vec::with_capacity(steps);
        for _ in 0..steps {
            let next = z * decay + b / sym * (1.0 - decay);
            sq.push((next - z).norm_sqr());
            z = next;
            b += stream.next_increment();
        }
        y[i] = b / sym;
        zeta[i] = z;
        kinetic.push(sym * sym * pairwise_sum(&sq) / dt);
    }
    let mean_zero = !params.includes_zero_mode();
    Ok(PathSummary {
        y: SpectralField::from_coeffs(grid, y, mean_zero)?,
        zeta: SpectralField::from_coeffs(grid, zeta, mean_zero)?,
        kinetic: pairwise_sum(&kinetic),
    })
}

/// Statistics of `||ζ_N(1) − Y_N||^2_{L^2}` and the kinetic cost over many paths.
#[derive(Debug, Clone, Copy)]
pub struct ZetaStats {
    pub n_cut: usize,
    pub gap: MeanEstimate,
    pub kinetic: MeanEstimate,
}

pub fn zeta_statistics(params: &ModelParams, n_cut: usize, steps: usize, nsamples: usize, seed: u64) -> Result<ZetaStats> {
    if nsamples == 0 {
        return Err(Error::Precondition("nsamples must be at least 1".into()));
    }
    let rows: Vec<(f64, f64)> = (0..nsamples as u64)
        .into_par_iter()
        .map(|index| {
            let path = simulate_path(params, n_cut, steps, seed, index)?;
            let gap = path.zeta.axpy(-1.0, &path.y)?.l2_norm_sq();
            Ok((gap, path.kinetic))
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let kin: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(ZetaStats {
        n_cut,
        gap: mean_estimate(&gaps),
        kinetic: mean_estimate(&kin),
    })
}

/// `F_N = N^{-d/2} sum_{0<|n|<=N} F(f)(n/N) e^{2πi n·x}` on the model's field grid.
pub fn build_fn(profile: &dyn Profile, n_cut: usize, params: &ModelParams) -> Result<SpectralField> {
    check_class_a(profile, 1e-6)?;
    if profile.dim() != params.d {
        return Err(Error::Precondition(format!(
            "profile dimension {} differs from d = {}",
            profile.dim(),
            params.d
        )));
    }
    let per = periodize_rescale(profile, 1.0 / n_cut as f64)?;
    let grid = field_grid(params, n_cut)?;
    Ok(SpectralField::from_fn(grid, true, |k, _| per.get(k)))
}

/// How the amplitude `α` in `Θ_N = −ζ_N + αF_N` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum AlphaRule {
    /// `α = K − N^{−β}`.
    PowerLaw { beta: f64 },
    Fixed { alpha: f64 },
    /// Maximizes the bound on independent pilot paths; the main estimate
    /// then uses fresh paths.
    Optimized { pilot: usize },
}

/// Midpoint of the admissible range `0 < β < min(s/2 − d/4, d/4)`.
pub fn default_beta(d: usize, s: f64) -> f64 {
    0.5 * beta_limit(d, s)
}

pub fn beta_limit(d: usize, s: f64) -> f64 {
    (s / 2.0 - d as f64 / 4.0).min(d as f64 / 4.0)
}

#[derive(Debug, Clone)]
pub struct DriftProfile {
    pub field: SpectralField,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub source: String,
}

impl DriftProfile {
    pub fn resolve(
        params: &ModelParams,
        n_cut: usize,
        field: SpectralField,
        source: &str,
        opts: &BoundOptions,
    ) -> Result<Self> {
        if field.coeffs().iter().zip(&field.modes().radii).any(|(c, r)| *r == 0.0 && c.norm() != 0.0) {
            return Err(Error::Precondition("F_N must have zero mean".into()));
        }
        let (alpha, beta) = resolve_alpha(params, n_cut, &field, opts.rule, opts.steps, opts.seed)?;
        Ok(DriftProfile {
            field,
            alpha,
            beta,
            source: source.to_string(),
        })
    }
}

/// Monte Carlo estimate of the lower bound and its parts.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    #[serde(rename = "N")]
    pub n_cut: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub source: String,
    pub main_term: f64,
    pub b1: f64,
    pub b1_stderr: f64,
    pub b2: f64,
    pub b2_stderr: f64,
    pub b3: f64,
    pub b3_stderr: f64,
    pub total: f64,
    pub total_stderr: f64,
    pub samples: usize,
    pub seed: u64,
    /// `||F_N||^p_{L^p}` and `||F_N||^2_{H^s}`.
    pub fn_lp_pow: f64,
    pub fn_energy: f64,
    /// Fraction of paths inside the `L^2` cutoff.
    pub acceptance: f64,
    /// Mean of `∫||θ||^2` and smallest per-path excess over `||Θ||^2_{H^s}`.
    pub drift_energy: f64,
    pub min_energy_margin: f64,
}

/// Energy norm squared `sum symbol(|n|)^2 |c_n|^2`.
fn energy_sq(field: &SpectralField, params: &ModelParams) -> f64 {
    field.weighted_norm_sq(|r| {
        if r == 0.0 && !params.includes_zero_mode() {
            0.0
        } else {
            params.symbol(r).powi(2)
        }
    })
}

fn energy_inner(a: &SpectralField, b: &SpectralField, params: &ModelParams) -> f64 {
    let modes = a.modes();
    let terms: Vec<f64> = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .zip(&modes.radii)
        .map(|((x, y), r)| match mode_weight(params, *r) {
            Some(sym) => sym * sym * (x.conj() * y).re,
            None => 0.0,
        })
        .collect();
    pairwise_sum(&terms)
}

/// Per-path quantities that do not depend on `α`.
struct PathParts {
    residual: Vec<Complex64>,
    residual_sq: f64,
    residual_dot_f: f64,
    kinetic: f64,
    cross: f64,
    zeta: SpectralField,
}

struct BoundSetup<'a> {
    params: &'a ModelParams,
    n_cut: usize,
    steps: usize,
    fn_field: &'a SpectralField,
    f_phys: Vec<Complex64>,
    m_eval: usize,
    f_lp: f64,
    f_energy: f64,
    f_l2: f64,
}

impl<'a> BoundSetup<'a> {
    fn new(params: &'a ModelParams, n_cut: usize, steps: usize, fn_field: &'a SpectralField) -> Self {
        let m_eval = fn_field.quadrature_resolution(params.p);
        BoundSetup {
            params,
            n_cut,
            steps,
            fn_field,
            f_phys: fn_field.to_physical_on(m_eval),
            m_eval,
            f_lp: fn_field.lp_norm_pow(params.p),
            f_energy: energy_sq(fn_field, params),
            f_l2: fn_field.l2_norm_sq(),
        }
    }

    fn parts(&self, seed: u64, index: u64) -> Result<PathParts> {
        let path = simulate_path(self.params, self.n_cut, self.steps, seed, index)?;
        let residual = path.y.axpy(-1.0, &path.zeta)?;
        let cross = energy_inner(&path.zeta, self.fn_field, self.params);
        let residual_dot_f = residual.inner(self.fn_field)?.re;
        Ok(PathParts {
            residual: residual.to_physical_on(self.m_eval),
            residual_sq: residual.l2_norm_sq(),
            residual_dot_f,
            kinetic: path.kinetic,
            cross,
            zeta: path.zeta,
        })
    }

    /// `(1/p)||X||_p^p 1{||X||_2 <= K}` and the `||X||_p^p`, `||X||_2^2` it uses.
    fn lp_of(&self, parts: &PathParts, alpha: f64) -> (f64, f64) {
        let x_sq = parts.residual_sq + 2.0 * alpha * parts.residual_dot_f + alpha * alpha * self.f_l2;
        let p = self.params.p;
        let terms: Vec<f64> = parts
            .residual
            .iter()
            .zip(&self.f_phys)
            .map(|(r, f)| abs_pow((r + f * alpha).norm_sqr(), p))
            .collect();
        let lp = pairwise_sum(&terms) / terms.len() as f64;
        (lp, x_sq)
    }

    fn objective(&self, parts: &PathParts, alpha: f64) -> f64 {
        let (lp, x_sq) = self.lp_of(parts, alpha);
        let k2 = self.params.k * self.params.k;
        let gain = if x_sq <= k2 { lp / self.params.p } else { 0.0 };
        gain - 0.5 * (parts.kinetic - 2.0 * alpha * parts.cross + alpha * alpha * self.f_energy)
    }
}

fn choose_alpha(setup: &BoundSetup, pilot: usize, seed: u64) -> Result<f64> {
    let k = setup.params.k;
    let pilot_seed = seed ^ PILOT_SEED_MIX;
    let parts: Vec<PathParts> = (0..pilot.max(1) as u64)
        .into_par_iter()
        .map(|i| setup.parts(pilot_seed, i))
        .collect::<Result<_>>()?;
    let mean_at = |alpha: f64| -> f64 {
        let v: Vec<f64> = parts.iter().map(|pp| setup.objective(pp, alpha)).collect();
        pairwise_sum(&v) / v.len() as f64
    };
    let grid = 64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for j in 1..=grid {
        let a = k * j as f64 / grid as f64;
        let v = mean_at(a);
        if v > best.0 {
            best = (v, a);
        }
    }
    // golden-section refinement on the bracketing cell
    let h = k / grid as f64;
    let (mut lo, mut hi) = ((best.1 - h).max(0.0), (best.1 + h).min(k));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (mean_at(x1), mean_at(x2));
    for _ in 0..30 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = mean_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = mean_at(x2);
        }
    }
    let (v, a) = if f1 >= f2 { (f1, x1) } else { (f2, x2) };
    Ok(if v > best.0 { a } else { best.1 })
}

/// Resolves `α` for a profile at cutoff `n_cut`.
pub fn resolve_alpha(
    params: &ModelParams,
    n_cut: usize,
    fn_field: &SpectralField,
    rule: AlphaRule,
    steps: usize,
    seed: u64,
) -> Result<(f64, Option<f64>)> {
    match rule {
        AlphaRule::PowerLaw { beta } => {
            let limit = beta_limit(params.d, params.s);
            if !(beta > 0.0 && beta < limit) {
                return Err(Error::Precondition(format!(
                    "beta = {beta} outside the admissible range (0, {limit})"
                )));
            }
            let alpha = params.k - (n_cut as f64).powf(-beta);
            if !(alpha > 0.0) {
                return Err(Error::Precondition(format!(
                    "alpha = K - N^-beta = {alpha} is not positive at N = {n_cut}"
                )));
            }
            Ok((alpha, Some(beta)))
        }
        AlphaRule::Fixed { alpha } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::Precondition(format!("alpha = {alpha} must be positive")));
            }
            Ok((alpha, None))
        }
        AlphaRule::Optimized { pilot } => {
            let setup = BoundSetup::new(params, n_cut, steps, fn_field);
            Ok((choose_alpha(&setup, pilot, seed)?, None))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    pub rule: AlphaRule,
    pub nsamples: usize,
    pub seed: u64,
    /// Brownian time steps on `[0, 1]`.
    pub steps: usize,
}

impl BoundOptions {
    pub fn new(rule: AlphaRule, nsamples: usize, seed: u64) -> Self {
        BoundOptions {
            rule,
            nsamples,
            seed,
            steps: DEFAULT_STEPS,
        }
    }

    pub fn steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }
}

/// Monte Carlo estimate of the lower bound for a given `F_N`.
pub fn lower_bound_estimate(
    params: &ModelParams,
    n_cut: usize,
    fn_field: &SpectralField,
    source: &str,
    opts: &BoundOptions,
) -> Result<LowerBoundReport> {
    let BoundOptions {
        nsamples,
        seed,
        steps,
        ..
    } = *opts;
    params.validate()?;
    if nsamples == 0 {
        return Err(Error::Precondition("nsamples must be at least 1".into()));
    }
    if steps == 0 {
        return Err(Error::Precondition("time grid needs at least one step".into()));
    }
    if *fn_field.grid() != field_grid(params, n_cut)? {
        return Err(Error::Config("F_N lives on a different grid than Y_N".into()));
    }
    let drift = DriftProfile::resolve(params, n_cut, fn_field.clone(), source, opts)?;
    let (alpha, beta) = (drift.alpha, drift.beta);
    let setup = BoundSetup::new(params, n_cut, steps, fn_field);
    let p = params.p;
    let k2 = params.k * params.k;
    let a_p = alpha.powf(p);
    let main_term = a_p / p * setup.f_lp - 0.5 * alpha * alpha * setup.f_energy;

    struct Row {
        b1: f64,
        b2: f64,
        b3: f64,
        inside: f64,
        energy: f64,
        margin: f64,
    }
    let rows: Vec<Row> = (0..nsamples as u64)
        .into_par_iter()
        .map(|index| {
            let parts = setup.parts(seed, index)?;
            let (x_lp, x_sq) = setup.lp_of(&parts, alpha);
            let inside = x_sq <= k2;
            let b1 = if inside { -(a_p * setup.f_lp - x_lp) / p } else { 0.0 };
            let b2 = if inside { 0.0 } else { -a_p / p * setup.f_lp };
            let b3 = -0.5 * (parts.kinetic - 2.0 * alpha * parts.cross);
            let energy = parts.kinetic - 2.0 * alpha * parts.cross + alpha * alpha * setup.f_energy;
            let theta = setup.fn_field.scale(alpha).axpy(-1.0, &parts.zeta)?;
            let theta_sq = energy_sq(&theta, params);
            Ok(Row {
                b1,
                b2,
                b3,
                inside: if inside { 1.0 } else { 0.0 },
                energy,
                margin: energy - theta_sq,
            })
        })
        .collect::<Result<_>>()?;

    let col = |f: &dyn Fn(&Row) -> f64| -> MeanEstimate {
        mean_estimate(&rows.iter().map(f).collect::<Vec<_>>())
    };
    let b1 = col(&|r| r.b1);
    let b2 = col(&|r| r.b2);
    let b3 = col(&|r| r.b3);
    let totals = col(&|r| main_term + r.b1 + r.b2 + r.b3);
    Ok(LowerBoundReport {
        n_cut,
        alpha,
        beta,
        source: source.to_string(),
        main_term,
        b1: b1.mean,
        b1_stderr: b1.stderr,
        b2: b2.mean,
        b2_stderr: b2.stderr,
        b3: b3.mean,
        b3_stderr: b3.stderr,
        total: main_term + b1.mean + b2.mean + b3.mean,
        total_stderr: totals.stderr,
        samples: nsamples,
        seed,
        fn_lp_pow: setup.f_lp,
        fn_energy: setup.f_energy,
        acceptance: col(&|r| r.inside).mean,
        drift_energy: col(&|r| r.energy).mean,
        min_energy_margin: rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_brownian, terminal_field};
    use crate::spectral::BumpProfile;

    fn params() -> ModelParams {
        ModelParams::new(1, 1.0, 6.0, 2.0).unwrap()
    }

    #[test]
    fn zero_input_gives_zero_path() {
        let b = BrownianModes::zero(1, 8, 16);
        let z = zeta_evolve(&b, &params(), 8).unwrap();
        assert!(z.paths.iter().flatten().all(|c| c.norm() == 0.0));
        assert_eq!(zeta_kinetic_cost(&z, 1.0), 0.0);
    }

    #[test]
    fn frozen_forcing_is_exact() {
        let c = Complex64::new(0.7, -0.2);
        let z = ZetaPath::from_forcing(&params(), 8, 64, |_, _| c);
        for (i, r) in z.modes.radii.iter().enumerate() {
            if *r == 0.0 {
                assert_eq!(z.paths[i][64], Complex64::default());
                continue;
            }
            let want = c * (1.0 - (-z.rates[i]).exp());
            assert!((z.paths[i][64] - want).norm() <= 1e-12 * want.norm());
        }
    }

    #[test]
    fn streaming_matches_stored_route() {
        let p = params();
        let b = sample_brownian(1, 6, 32, 9, 3).unwrap();
        let z = zeta_evolve(&b, &p, 6).unwrap();
        let s = simulate_path(&p, 6, 32, 9, 3).unwrap();
        assert_eq!(z.terminal(&p).unwrap(), s.zeta);
        assert_eq!(terminal_field(&b, &p, 6).unwrap(), s.y);
        let k = zeta_kinetic_cost(&z, 1.0);
        assert!((k - s.kinetic).abs() <= 1e-12 * k);
    }

    #[test]
    fn fn_has_no_mean_and_unit_mass() {
        let p = params();
        let f = build_fn(&BumpProfile::new(1), 64, &p).unwrap();
        assert_eq!(f.get(&[0, 0, 0]), Complex64::default());
        assert!((f.l2_norm() - 1.0).abs() < 0.05);
        let bad = crate::spectral::GaussianProfile { d: 1 };
        assert!(matches!(build_fn(&bad, 16, &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn report_terms_add_up_and_signs_hold() {
        let p = params();
        let f = build_fn(&BumpProfile::new(1), 8, &p).unwrap();
        let rule = AlphaRule::PowerLaw { beta: default_beta(1, 1.0) };
        assert!(lower_bound_estimate(&p, 8, &f, "bump", &BoundOptions::new(rule, 0, 1).steps(16)).is_err());
        let r = lower_bound_estimate(&p, 8, &f, "bump", &BoundOptions::new(rule, 24, 1).steps(16)).unwrap();
        assert!(r.total.is_finite());
        assert!((r.total - (r.main_term + r.b1 + r.b2 + r.b3)).abs() < 1e-12 * r.total.abs().max(1.0));
        assert!(r.b2 <= 0.0);
        assert!(r.min_energy_margin >= -1e-9 * r.drift_energy);
        let one = lower_bound_estimate(&p, 8, &f, "bump", &BoundOptions::new(rule, 1, 1).steps(16)).unwrap();
        assert!(one.total.is_finite());
    }

    #[test]
    fn beta_range_is_enforced() {
        let p = params();
        let f = build_fn(&BumpProfile::new(1), 8, &p).unwrap();
        let rule = AlphaRule::PowerLaw { beta: 0.3 };
        assert!(lower_bound_estimate(&p, 8, &f, "bump", &BoundOptions::new(rule, 4, 1).steps(8)).is_err());
    }
}
