use std::sync::Arc;

use gibbslab::drift::{AlphaRule, BoundOptions};
use gibbslab::optim::SolverOptions;
use gibbslab::partition::{
    ckn_upper_logZ, direct_mc_logZ, drift_lower_logZ, drift_lower_series, fit_rate, Method, ProfileChoice,
};
use gibbslab::spectral::BumpProfile;
use gibbslab::ModelParams;

fn quintic(k: f64) -> ModelParams {
    ModelParams::new(1, 1.0, 6.0, k).unwrap()
}

#[test]
fn drift_bound_sits_below_direct_mc() {
    let params = quintic(1.5);
    let n = 4;
    let mc = direct_mc_logZ(&params, n, 4000, 11).unwrap();
    assert_eq!(mc.method, Method::DirectMc);
    let opts = BoundOptions::new(AlphaRule::Optimized { pilot: 64 }, 400, 12).steps(64);
    let choice = ProfileChoice::TorusOptimizer(SolverOptions::default().with_seed(3));
    let (lower, report) = drift_lower_logZ(&params, n, &choice, &opts).unwrap();
    assert!(
        lower.value <= mc.value + 3.0 * (mc.stderr + lower.stderr),
        "lower {} vs mc {} ± {}",
        lower.value,
        mc.value,
        mc.stderr
    );
    assert_eq!(lower.value, report.total);
}

#[test]
fn ckn_upper_vanishes_below_threshold() {
    let est = ckn_upper_logZ(&quintic(1.0), 16, &SolverOptions::default()).unwrap();
    assert!(est.value <= 1e-6, "{}", est.value);
    assert_eq!(est.method, Method::CknUpper);
}

#[test]
fn subcritical_rate_is_refused() {
    let params = ModelParams::new(1, 1.0, 4.0, 1.0).unwrap();
    let opts = BoundOptions::new(AlphaRule::Fixed { alpha: 0.5 }, 8, 0);
    let choice = ProfileChoice::Class(Arc::new(BumpProfile::new(1)));
    assert!(drift_lower_series(&params, &[4, 8, 16], &choice, &opts).is_err());
}

#[test]
fn series_is_ordered_and_fittable() {
    let params = ModelParams::new(1, 1.0, 8.0, 1.0).unwrap();
    let opts = BoundOptions::new(AlphaRule::Fixed { alpha: 0.5 }, 32, 5).steps(32);
    let choice = ProfileChoice::Class(Arc::new(BumpProfile::new(1)));
    let series = drift_lower_series(&params, &[4, 8, 16], &choice, &opts).unwrap();
    let ns: Vec<usize> = series.iter().map(|(e, _)| e.n_cut).collect();
    assert_eq!(ns, vec![4, 8, 16]);
    let est: Vec<_> = series.into_iter().map(|(e, _)| e).collect();
    let fit = fit_rate(&est, &params, None).unwrap();
    assert_eq!(fit.exponent, 3.0);
    assert!(fit.slope.is_finite());
    assert!(fit_rate(&est[..2], &params, None).is_err());
}
