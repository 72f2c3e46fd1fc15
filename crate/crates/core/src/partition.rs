//! Three estimates of `log Z_{K,N}` and the rate fits that compare them
//! with the predicted leading constants.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::{build_fn, lower_bound_estimate, BoundOptions, LowerBoundReport};
use crate::error::{Error, Result};
use crate::optim::{cb_bernstein, ck_supremum, ckn_torus_supremum, ek_torus_supremum, OptimResult, SolverOptions};
use crate::params::{Criticality, ModelParams};
use crate::sampler::sample_gff;
use crate::spectral::{BoxProfile, GridSpec, NotchedProfile, Profile};
use crate::stats::{mean_estimate, LinearFit};

/// Largest admissible log-scale of the direct Monte Carlo integrand.
pub const LOG_WEIGHT_CEILING: f64 = 200.0;
/// Coefficient of variation above which a direct estimate is not trusted.
pub const HEAVY_TAIL_CV: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DirectMc,
    DriftLower,
    CknUpper,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::DirectMc => "direct-mc",
            Method::DriftLower => "drift-lower",
            Method::CknUpper => "ckn-upper",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionEstimate {
    #[serde(rename = "N")]
    pub n_cut: usize,
    pub method: Method,
    /// Estimate of `log Z_{K,N}` or a bound on it.
    pub value: f64,
    /// Zero for deterministic bounds.
    pub stderr: f64,
    pub nsamples: usize,
    pub seed: u64,
    pub params: ModelParams,
    /// Fraction of draws inside the `L^2` cutoff (direct Monte Carlo only).
    pub acceptance: Option<f64>,
    /// Coefficient of variation of the integrand (direct Monte Carlo only).
    pub cv: Option<f64>,
    pub heavy_tailed: bool,
    pub converged: bool,
    pub note: String,
}

impl PartitionEstimate {
    fn new(params: &ModelParams, n_cut: usize, method: Method) -> Self {
        PartitionEstimate {
            n_cut,
            method,
            value: f64::NAN,
            stderr: 0.0,
            nsamples: 0,
            seed: 0,
            params: *params,
            acceptance: None,
            cv: None,
            heavy_tailed: false,
            converged: true,
            note: String::new(),
        }
    }
}

/// Crude but rigorous `C_B <= |B_1|^{(p-2)/2}` from `||Pf||_inf <= |B_1|^{1/2} ||f||_2`.
pub fn bernstein_upper(d: usize, p: f64) -> f64 {
    let ball = match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI / 3.0,
    };
    ball.powf((p - 2.0) / 2.0)
}

/// Largest `N` with `C_B K^p N^{dp/2-d} / p` below the ceiling, using [`bernstein_upper`]
/// for `C_B`; 0 if even `N = 1` is too large.
pub fn direct_mc_nmax(params: &ModelParams) -> usize {
    let e = params.divergence_exponent();
    let scale = bernstein_upper(params.d, params.p) * params.k.powf(params.p) / params.p;
    let fits = |n: usize| scale * (n as f64).powf(e) < LOG_WEIGHT_CEILING;
    if !fits(1) {
        return 0;
    }
    let mut n = ((LOG_WEIGHT_CEILING / scale).powf(1.0 / e).floor() as usize).max(1);
    while !fits(n) {
        n -= 1;
    }
    while fits(n + 1) {
        n += 1;
    }
    n
}

/// Plain Monte Carlo for `E[1{||Y_N||_2 <= K} exp(||Y_N||^p_p / p)]`.
#[allow(non_snake_case)]
pub fn direct_mc_logZ(params: &ModelParams, n_cut: usize, nsamples: usize, seed: u64) -> Result<PartitionEstimate> {
    params.validate()?;
    if nsamples == 0 {
        return Err(Error::Precondition("nsamples must be at least 1".into()));
    }
    let n_max = direct_mc_nmax(params);
    if n_cut > n_max {
        return Err(Error::Overflow(format!(
            "direct Monte Carlo at N = {n_cut} exceeds N_max = {n_max} for K = {}; \
             the integrand scale is not representable, use the drift-lower method",
            params.k
        )));
    }
    let k2 = params.k * params.k;
    let log_w: Vec<f64> = (0..nsamples as u64)
        .into_par_iter()
        .map(|i| {
            let u = sample_gff(params, n_cut, seed, i)?.field;
            Ok(if u.l2_norm_sq() <= k2 {
                u.lp_norm_pow(params.p) / params.p
            } else {
                f64::NEG_INFINITY
            })
        })
        .collect::<Result<_>>()?;
    let accepted = log_w.iter().filter(|v| v.is_finite()).count();
    let mut est = PartitionEstimate::new(params, n_cut, Method::DirectMc);
    est.nsamples = nsamples;
    est.seed = seed;
    est.acceptance = Some(accepted as f64 / nsamples as f64);
    if accepted == 0 {
        est.value = f64::NEG_INFINITY;
        est.stderr = f64::NAN;
        est.note = "no draw inside the cutoff".into();
        return Ok(est);
    }
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|v| (v - top).exp()).collect();
    let m = mean_estimate(&w);
    let cv = m.std_dev / m.mean;
    est.value = top + m.mean.ln();
    // delta method for the logarithm
    est.stderr = m.stderr / m.mean;
    est.cv = Some(cv);
    est.heavy_tailed = cv > HEAVY_TAIL_CV;
    if est.heavy_tailed {
        est.note = format!("heavy-tailed integrand (cv = {cv:.1}); excluded from fits");
    }
    Ok(est)
}

/// Where `F_N` comes from.
#[derive(Clone)]
pub enum ProfileChoice {
    /// A fixed class-A profile, periodized at scale `1/N`.
    Class(Arc<dyn Profile>),
    /// The maximizer of the constrained functional on the torus at each `N`.
    TorusOptimizer(SolverOptions),
}

impl fmt::Debug for ProfileChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileChoice::Class(p) => write!(f, "Class({})", p.label()),
            ProfileChoice::TorusOptimizer(o) => write!(f, "TorusOptimizer({o:?})"),
        }
    }
}

/// Box optimizer (the `C_K` maximizer when critical, the `C_B` one when
/// supercritical) turned into a class-A profile by a notch of width `notch`.
pub fn optimizer_profile(
    params: &ModelParams,
    cell: &GridSpec,
    notch: f64,
    solver: &SolverOptions,
) -> Result<(Arc<dyn Profile>, OptimResult)> {
    let (res, name) = match params.criticality() {
        Criticality::Critical => (ck_supremum(params, cell, solver)?, "ck-optimizer"),
        Criticality::Supercritical => (cb_bernstein(params.d, params.p, cell, solver)?, "cb-optimizer"),
        Criticality::Subcritical => return Err(subcritical(params)),
    };
    let boxed: Arc<dyn Profile> = Arc::new(BoxProfile::new(res.field.clone(), name));
    Ok((Arc::new(NotchedProfile::new(boxed, notch)?), res))
}

fn subcritical(params: &ModelParams) -> Error {
    Error::Precondition(format!(
        "p = {} is subcritical for d = {}, s = {}; the rate results need p >= 4s/d + 2",
        params.p, params.d, params.s
    ))
}

/// Drift lower bound on `log Z_{K,N}` with its term breakdown.
///
/// The reported value is the Monte Carlo bound itself; the `-1` inside the
/// logarithm is irrelevant once the bound is a few units large.
#[allow(non_snake_case)]
pub fn drift_lower_logZ(
    params: &ModelParams,
    n_cut: usize,
    choice: &ProfileChoice,
    opts: &BoundOptions,
) -> Result<(PartitionEstimate, LowerBoundReport)> {
    params.validate()?;
    if params.criticality() == Criticality::Subcritical {
        return Err(subcritical(params));
    }
    let mut warnings = Vec::new();
    let (field, source) = match choice {
        ProfileChoice::Class(profile) => (build_fn(profile.as_ref(), n_cut, params)?, profile.label()),
        ProfileChoice::TorusOptimizer(solver) => {
            let res = ek_torus_supremum(params, n_cut, solver)?;
            if !res.converged {
                warnings.push(format!("torus optimizer stopped at grad {:.2e}", res.grad_norm));
            }
            (res.field, "torus-optimizer".to_string())
        }
    };
    let report = lower_bound_estimate(params, n_cut, &field, &source, opts)?;
    let mut est = PartitionEstimate::new(params, n_cut, Method::DriftLower);
    est.value = report.total;
    est.stderr = report.total_stderr;
    est.nsamples = report.samples;
    est.seed = report.seed;
    est.acceptance = Some(report.acceptance);
    est.converged = warnings.is_empty();
    est.note = warnings.join("; ");
    Ok((est, report))
}

/// Runs [`drift_lower_logZ`] at every cutoff in `n_list`.
pub fn drift_lower_series(
    params: &ModelParams,
    n_list: &[usize],
    choice: &ProfileChoice,
    opts: &BoundOptions,
) -> Result<Vec<(PartitionEstimate, LowerBoundReport)>> {
    n_list
        .par_iter()
        .map(|n| drift_lower_logZ(params, *n, choice, opts))
        .collect()
}

/// Leading-order upper proxy `C_{K,N}` for `log Z_{K,N}` (critical case).
#[allow(non_snake_case)]
pub fn ckn_upper_logZ(params: &ModelParams, n_cut: usize, solver: &SolverOptions) -> Result<PartitionEstimate> {
    let res = ckn_torus_supremum(params, n_cut, solver)?;
    let mut est = PartitionEstimate::new(params, n_cut, Method::CknUpper);
    est.value = res.value;
    est.seed = solver.seed;
    est.converged = res.converged;
    est.note = "leading-order bound".into();
    if !res.converged {
        est.note.push_str(&format!("; solver stopped at grad {:.2e}", res.grad_norm));
    }
    Ok(est)
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSeries {
    pub points: Vec<PartitionEstimate>,
    pub exponent: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub slope_stderr: f64,
    pub predicted_slope: Option<f64>,
    /// `(slope - predicted) / |predicted|`.
    pub rel_gap: Option<f64>,
    /// Cutoffs left out of the fit (heavy-tailed or non-finite).
    pub excluded: Vec<usize>,
}

/// Growth exponent of `log Z_{K,N}` for the model's regime.
pub fn rate_exponent(params: &ModelParams) -> Result<f64> {
    match params.criticality() {
        Criticality::Critical => Ok(2.0 * params.s),
        Criticality::Supercritical => Ok(params.divergence_exponent()),
        Criticality::Subcritical => Err(subcritical(params)),
    }
}

/// Line through the two largest usable cutoffs of value against `N^exponent`
/// (intercept allowed); needs at least three usable cutoffs.
pub fn fit_rate(series: &[PartitionEstimate], params: &ModelParams, predicted: Option<f64>) -> Result<RateSeries> {
    fit_rate_with_exponent(series, rate_exponent(params)?, predicted)
}

pub fn fit_rate_with_exponent(
    series: &[PartitionEstimate],
    exponent: f64,
    predicted: Option<f64>,
) -> Result<RateSeries> {
    let (used, dropped): (Vec<&PartitionEstimate>, Vec<&PartitionEstimate>) =
        series.iter().partition(|e| !e.heavy_tailed && e.value.is_finite());
    let mut distinct: Vec<usize> = used.iter().map(|e| e.n_cut).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Precondition(format!(
            "rate fit needs at least 3 distinct usable N values, got {}",
            distinct.len()
        )));
    }
    // the slope comes from the two largest cutoffs only; the smaller ones
    // still enter the residual
    let at = |n: usize| {
        let pts: Vec<&&PartitionEstimate> = used.iter().filter(|e| e.n_cut == n).collect();
        let k = pts.len() as f64;
        let value = pts.iter().map(|e| e.value).sum::<f64>() / k;
        let var = pts.iter().map(|e| e.stderr * e.stderr).sum::<f64>() / (k * k);
        ((n as f64).powf(exponent), value, var)
    };
    let (x0, y0, v0) = at(distinct[distinct.len() - 2]);
    let (x1, y1, v1) = at(distinct[distinct.len() - 1]);
    let slope = (y1 - y0) / (x1 - x0);
    let intercept = y1 - slope * x1;
    let sq: f64 = used
        .iter()
        .map(|e| (e.value - intercept - slope * (e.n_cut as f64).powf(exponent)).powi(2))
        .sum();
    let fit = LinearFit {
        slope,
        intercept,
        residual: (sq / used.len() as f64).sqrt(),
        slope_stderr: (v0 + v1).sqrt() / (x1 - x0),
    };
    let rel_gap = predicted.map(|c| (fit.slope - c) / c.abs());
    Ok(RateSeries {
        points: series.to_vec(),
        exponent,
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        slope_stderr: fit.slope_stderr,
        predicted_slope: predicted,
        rel_gap,
        excluded: dropped.iter().map(|e| e.n_cut).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::AlphaRule;
    use crate::spectral::BumpProfile;
    use proptest::prelude::*;

    fn synthetic(params: &ModelParams, ns: &[usize], f: impl Fn(f64) -> f64) -> Vec<PartitionEstimate> {
        ns.iter()
            .map(|n| {
                let mut e = PartitionEstimate::new(params, *n, Method::DriftLower);
                e.value = f(*n as f64);
                e
            })
            .collect()
    }

    #[test]
    fn exact_rate_is_recovered() {
        let p = ModelParams::new(1, 1.0, 8.0, 1.0).unwrap();
        let s = synthetic(&p, &[16, 32, 64, 128], |n| 2.5 * n.powi(3));
        let r = fit_rate(&s, &p, Some(2.5)).unwrap();
        assert_eq!(r.exponent, 3.0);
        assert!((r.slope - 2.5).abs() < 1e-10);
        assert!(r.rel_gap.unwrap().abs() < 1e-10);
    }

    #[test]
    fn lower_order_terms_wash_out() {
        let p = ModelParams::new(1, 1.0, 6.0, 1.0).unwrap();
        let s = synthetic(&p, &[64, 128, 256, 512], |n| 2.5 * n * n + 7.0 * n);
        let r = fit_rate(&s, &p, None).unwrap();
        assert!((r.slope - 2.5).abs() < 0.05 * 2.5, "{}", r.slope);
    }

    #[test]
    fn slope_uses_two_largest_cutoffs() {
        let p = ModelParams::new(1, 1.0, 8.0, 1.0).unwrap();
        let mut s = synthetic(&p, &[16, 32, 64, 128], |n| 0.5 * n.powi(3) - 40.0);
        s[0].value = 1e6;
        let r = fit_rate(&s, &p, None).unwrap();
        assert!((r.slope - 0.5).abs() < 1e-12);
        assert!((r.intercept + 40.0).abs() < 1e-6);
        assert!(r.residual > 1e5);
    }

    #[test]
    fn fit_needs_three_usable_points() {
        let p = ModelParams::new(1, 1.0, 6.0, 1.0).unwrap();
        let mut s = synthetic(&p, &[4, 8, 16], |n| n * n);
        assert!(fit_rate(&s[..2], &p, None).is_err());
        s[0].heavy_tailed = true;
        assert!(fit_rate(&s, &p, None).is_err());
        let dup = synthetic(&p, &[4, 4, 8, 8], |n| n);
        assert!(fit_rate(&dup, &p, None).is_err());
        let sub = ModelParams::new(1, 1.0, 4.0, 1.0).unwrap();
        assert!(fit_rate(&s, &sub, None).is_err());
    }

    #[test]
    fn critical_exponents_coincide() {
        let p = ModelParams::new(1, 1.0, 6.0, 1.0).unwrap();
        let s = synthetic(&p, &[4, 8, 16, 32], |n| 0.3 * n * n + n.sqrt());
        let a = fit_rate_with_exponent(&s, 2.0 * p.s, None).unwrap();
        let b = fit_rate_with_exponent(&s, p.divergence_exponent(), None).unwrap();
        assert_eq!(a.slope, b.slope);
    }

    #[test]
    fn nmax_guard() {
        let p = ModelParams::new(1, 1.0, 6.0, 1.0).unwrap();
        let n = direct_mc_nmax(&p);
        let scale = |n: usize| 4.0 * (n as f64).powi(2) / 6.0;
        assert!(scale(n) < LOG_WEIGHT_CEILING && scale(n + 1) >= LOG_WEIGHT_CEILING);
        assert!(matches!(direct_mc_logZ(&p, n + 1, 4, 0), Err(Error::Overflow(_))));
        assert_eq!(direct_mc_nmax(&p.with_k(10.0)), 0);
    }

    #[test]
    fn tiny_ball_gives_nonpositive_estimate() {
        let p = ModelParams::new(1, 1.0, 6.0, 0.05).unwrap();
        let e = direct_mc_logZ(&p, 2, 400, 3).unwrap();
        assert!(e.value <= 0.0);
        assert!(e.acceptance.unwrap() < 1.0);
        let big = direct_mc_logZ(&p.with_k(0.2), 2, 400, 3).unwrap();
        assert!(big.value >= e.value);
    }

    #[test]
    fn direct_mc_is_seed_stable() {
        let p = ModelParams::new(1, 1.0, 6.0, 1.0).unwrap();
        let a = direct_mc_logZ(&p, 3, 64, 11).unwrap();
        let b = direct_mc_logZ(&p, 3, 64, 11).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn drift_lower_rejects_subcritical_and_bad_profiles() {
        let sub = ModelParams::new(1, 1.0, 4.0, 1.0).unwrap();
        let choice = ProfileChoice::Class(Arc::new(BumpProfile::new(1)));
        let opts = BoundOptions::new(AlphaRule::Fixed { alpha: 0.5 }, 4, 0).steps(8);
        assert!(drift_lower_logZ(&sub, 8, &choice, &opts).is_err());
        let p = ModelParams::new(1, 1.0, 6.0, 1.0).unwrap();
        let gauss = ProfileChoice::Class(Arc::new(crate::spectral::GaussianProfile { d: 1 }));
        assert!(matches!(drift_lower_logZ(&p, 8, &gauss, &opts), Err(Error::Precondition(_))));
        let (e, r) = drift_lower_logZ(&p, 8, &choice, &opts).unwrap();
        assert_eq!(e.value, r.total);
        assert_eq!(e.method, Method::DriftLower);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn direct_mc_monotone_in_k(k in 0.05f64..0.6, dk in 0.0f64..0.5, seed in 0u64..1000) {
            let p = ModelParams::new(1, 1.0, 6.0, k).unwrap();
            let lo = direct_mc_logZ(&p, 2, 32, seed).unwrap();
            let hi = direct_mc_logZ(&p.with_k(k + dk), 2, 32, seed).unwrap();
            prop_assert!(hi.value >= lo.value);
        }
    }
}
