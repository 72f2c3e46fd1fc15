//! Dispatch of a resolved [`RunConfig`] to the library and CSV persistence.

use std::sync::Arc;

use gibbslab::csvio::{
    drift_rows, write_coefficients, write_records, zeta_rows, ConstantRow, DriftRow, FitRow, PartitionRow,
};
use gibbslab::drift::{zeta_statistics, BoundOptions};
use gibbslab::optim::{
    cb_bernstein, ck_supremum, ckn_torus_supremum, gns_ground_state, GroundState, GroundStateConfig, OptimResult,
    SolverOptions,
};
use gibbslab::partition::{direct_mc_logZ, drift_lower_series, fit_rate, optimizer_profile, ProfileChoice};
use gibbslab::sampler::sample_gff;
use gibbslab::spectral::BumpProfile;
use gibbslab::stats::log_log_slope;
use gibbslab::{Criticality, GridSpec};

use crate::config::{Command, ProfileKind, RunConfig};
use crate::CliError;

/// Relative tolerance of the rate comparison reported in the summary.
const RATE_TOL: f64 = 0.25;

fn status(converged: bool) -> &'static str {
    if converged {
        "converged"
    } else {
        "NOT converged"
    }
}

fn solver(cfg: &RunConfig) -> SolverOptions {
    SolverOptions::default()
        .with_tol(cfg.tol)
        .with_seed(cfg.seed)
        .with_starts(cfg.starts)
}

fn ground_state(cfg: &RunConfig, cell: Option<&GridSpec>) -> Result<GroundState, CliError> {
    let p = &cfg.params;
    let cell = match cell {
        Some(c) => *c,
        None => GroundState::default_cell(p.d)?,
    };
    let gcfg = GroundStateConfig {
        tol: cfg.tol,
        ..Default::default()
    };
    let gs = gns_ground_state(p.d, p.s, p.p, &cell, &gcfg)?;
    for w in &gs.warnings {
        eprintln!("warning: {w}");
    }
    Ok(gs)
}

fn constant_row(cfg: &RunConfig, name: &str, grid: &GridSpec, res: &OptimResult, with_k: bool) -> ConstantRow {
    ConstantRow {
        name: name.into(),
        d: cfg.params.d,
        s: Some(cfg.params.s),
        p: cfg.params.p,
        k: with_k.then_some(cfg.params.k),
        length: Some(grid.length),
        m: grid.m,
        n: grid.n_cut,
        value: res.value,
        grad_norm: res.grad_norm,
        iterations: res.iterations,
        seed: Some(cfg.seed),
    }
}

fn finish(summary: String, converged: bool) -> Result<String, CliError> {
    if converged {
        Ok(summary)
    } else {
        println!("{summary}");
        Err(CliError::NotConverged(summary))
    }
}

fn warn_all(res: &OptimResult) {
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
}

/// Runs one command; returns the summary line.
pub fn run(mut cfg: RunConfig) -> Result<String, CliError> {
    let mut mass_q = None;
    if let Some(f) = cfg.k_over_q {
        let gs = ground_state(&cfg, None)?;
        if !gs.converged {
            return Err(CliError::NotConverged(format!(
                "ground state for KQ stopped at grad {:.2e}",
                gs.grad_norm
            )));
        }
        cfg.params = cfg.params.with_k(f * gs.mass_q);
        mass_q = Some(gs.mass_q);
    }
    let cfg = cfg;
    match cfg.command {
        Command::Q => {
            let grid = cfg.grid.expect("q has a cell");
            let gs = ground_state(&cfg, Some(&grid))?;
            let row = |name: &str, value: f64| ConstantRow {
                name: name.into(),
                d: cfg.params.d,
                s: Some(cfg.params.s),
                p: cfg.params.p,
                k: None,
                length: Some(gs.q.grid().length),
                m: grid.m,
                n: grid.n_cut,
                value,
                grad_norm: gs.grad_norm,
                iterations: gs.iterations,
                seed: None,
            };
            let rows = vec![
                row("massQ", gs.mass_q),
                row("cGNS", gs.c_gns),
                row("jMin", gs.j_min),
                row("residual", gs.residual),
            ];
            write_records(&cfg.out, &cfg, &rows)?;
            write_coefficients(&cfg.sidecar("field"), &cfg, std::slice::from_ref(&gs.q))?;
            finish(
                format!(
                    "massQ = {:.10} cGNS = {:.10} gradNorm = {:.2e} ({})",
                    gs.mass_q,
                    gs.c_gns,
                    gs.grad_norm,
                    status(gs.converged)
                ),
                gs.converged,
            )
        }
        Command::Ck => {
            let grid = cfg.grid.expect("ck has a cell");
            let res = ck_supremum(&cfg.params, &grid, &solver(&cfg))?;
            warn_all(&res);
            let mut rows = vec![constant_row(&cfg, "C_K", &grid, &res, true)];
            if let Some(mq) = mass_q {
                rows.push(ConstantRow {
                    name: "massQ".into(),
                    value: mq,
                    ..rows[0].clone()
                });
            }
            write_records(&cfg.out, &cfg, &rows)?;
            write_coefficients(&cfg.sidecar("field"), &cfg, std::slice::from_ref(&res.field))?;
            finish(
                format!("C_K = {:.10} at K = {} ({})", res.value, cfg.params.k, status(res.converged)),
                res.converged,
            )
        }
        Command::Ckn => {
            let res = ckn_torus_supremum(&cfg.params, cfg.n_cut, &solver(&cfg))?;
            warn_all(&res);
            let grid = *res.field.grid();
            let rows = vec![constant_row(&cfg, "C_KN", &grid, &res, true)];
            write_records(&cfg.out, &cfg, &rows)?;
            write_coefficients(&cfg.sidecar("field"), &cfg, std::slice::from_ref(&res.field))?;
            let scaled = res.value / (cfg.n_cut as f64).powf(2.0 * cfg.params.s);
            finish(
                format!(
                    "C_KN = {:.10} (N^-2s C_KN = {:.10}) at K = {}, N = {} ({})",
                    res.value,
                    scaled,
                    cfg.params.k,
                    cfg.n_cut,
                    status(res.converged)
                ),
                res.converged,
            )
        }
        Command::Cb => {
            let grid = cfg.grid.expect("cb has a cell");
            let res = cb_bernstein(cfg.params.d, cfg.params.p, &grid, &solver(&cfg))?;
            warn_all(&res);
            let mut row = constant_row(&cfg, "C_B", &grid, &res, false);
            row.s = None;
            write_records(&cfg.out, &cfg, &[row])?;
            write_coefficients(&cfg.sidecar("field"), &cfg, std::slice::from_ref(&res.field))?;
            finish(
                format!("C_B = {:.10} ({})", res.value, status(res.converged)),
                res.converged,
            )
        }
        Command::Sample => {
            let fields = (0..cfg.nsamples as u64)
                .map(|i| sample_gff(&cfg.params, cfg.n_cut, cfg.seed, i).map(|s| s.field))
                .collect::<gibbslab::Result<Vec<_>>>()?;
            write_coefficients(&cfg.out, &cfg, &fields)?;
            let mean_l2: f64 = fields.iter().map(|f| f.l2_norm_sq()).sum::<f64>() / fields.len() as f64;
            Ok(format!(
                "sample: {} draws at N = {}, mean ||Y_N||^2 = {mean_l2:.6}",
                fields.len(),
                cfg.n_cut
            ))
        }
        Command::ZetaCheck => {
            let stats = cfg
                .n_list
                .iter()
                .map(|n| zeta_statistics(&cfg.params, *n, cfg.steps, cfg.nsamples, cfg.seed))
                .collect::<gibbslab::Result<Vec<_>>>()?;
            let rows: Vec<DriftRow> = stats.iter().flat_map(|z| zeta_rows(z, cfg.seed)).collect();
            write_records(&cfg.out, &cfg, &rows)?;
            let ns: Vec<f64> = cfg.n_list.iter().map(|n| *n as f64).collect();
            let gap: Vec<f64> = stats.iter().map(|z| z.gap.mean).collect();
            let kin: Vec<f64> = stats.iter().map(|z| z.kinetic.mean).collect();
            if ns.len() >= 2 {
                let g = log_log_slope(&ns, &gap)?;
                let k = log_log_slope(&ns, &kin)?;
                Ok(format!(
                    "zeta-check: gap slope = {:.4}, kinetic slope = {:.4} over N = {:?}",
                    g.slope, k.slope, cfg.n_list
                ))
            } else {
                Ok(format!("zeta-check: gap = {:.6e}, kinetic = {:.6e}", gap[0], kin[0]))
            }
        }
        Command::Lowerbound => {
            let choice = profile_choice(&cfg)?;
            let n_list = cutoffs(&cfg);
            let opts = BoundOptions::new(cfg.alpha_rule, cfg.nsamples, cfg.seed).steps(cfg.steps);
            let out = drift_lower_series(&cfg.params, &n_list, &choice, &opts)?;
            let rows: Vec<DriftRow> = out.iter().flat_map(|(_, r)| drift_rows(r)).collect();
            write_records(&cfg.out, &cfg, &rows)?;
            let (est, rep) = out.last().expect("non-empty cutoff list");
            let converged = out.iter().all(|(e, _)| e.converged);
            finish(
                format!(
                    "lowerbound = {:.6} ± {:.2e} at N = {} (alpha = {:.4}, acceptance = {:.3})",
                    est.value, est.stderr, est.n_cut, rep.alpha, rep.acceptance
                ),
                converged,
            )
        }
        Command::McZ => {
            let n_list = cutoffs(&cfg);
            let ests = n_list
                .iter()
                .map(|n| direct_mc_logZ(&cfg.params, *n, cfg.nsamples, cfg.seed))
                .collect::<gibbslab::Result<Vec<_>>>()?;
            let rows: Vec<PartitionRow> = ests.iter().map(PartitionRow::from).collect();
            write_records(&cfg.out, &cfg, &rows)?;
            for e in ests.iter().filter(|e| e.heavy_tailed) {
                eprintln!("warning: N = {}: {}", e.n_cut, e.note);
            }
            let last = ests.last().expect("non-empty cutoff list");
            Ok(format!(
                "logZ = {:.6} ± {:.2e} at N = {} (acceptance = {:.3})",
                last.value,
                last.stderr,
                last.n_cut,
                last.acceptance.unwrap_or(f64::NAN)
            ))
        }
        Command::Rate => {
            let choice = profile_choice(&cfg)?;
            let grid = cfg.grid.expect("rate has a cell");
            let (predicted, pred_res) = match cfg.params.criticality() {
                Criticality::Critical => {
                    let r = ck_supremum(&cfg.params, &grid, &solver(&cfg))?;
                    (r.value, r)
                }
                _ => {
                    let r = cb_bernstein(cfg.params.d, cfg.params.p, &grid, &solver(&cfg))?;
                    (r.value * cfg.params.k.powf(cfg.params.p) / cfg.params.p, r)
                }
            };
            let opts = BoundOptions::new(cfg.alpha_rule, cfg.nsamples, cfg.seed).steps(cfg.steps);
            let out = drift_lower_series(&cfg.params, &cfg.n_list, &choice, &opts)?;
            let ests: Vec<_> = out.iter().map(|(e, _)| e.clone()).collect();
            let fit = fit_rate(&ests, &cfg.params, Some(predicted))?;
            let points: Vec<PartitionRow> = ests.iter().map(PartitionRow::from).collect();
            write_records(&cfg.sidecar("points"), &cfg, &points)?;
            write_records(&cfg.out, &cfg, &[FitRow::from(&fit)])?;
            let gap = fit.rel_gap.unwrap_or(f64::NAN);
            let converged = pred_res.converged && ests.iter().all(|e| e.converged);
            finish(
                format!(
                    "slope = {:.6} predictedSlope = {:.6} relGap = {:+.3} ({} {:.0}%, exponent {})",
                    fit.slope,
                    predicted,
                    gap,
                    if gap.abs() <= RATE_TOL { "within" } else { "outside" },
                    100.0 * RATE_TOL,
                    fit.exponent
                ),
                converged,
            )
        }
    }
}

fn cutoffs(cfg: &RunConfig) -> Vec<usize> {
    if cfg.n_list_explicit() {
        cfg.n_list.clone()
    } else {
        vec![cfg.n_cut]
    }
}

fn profile_choice(cfg: &RunConfig) -> Result<ProfileChoice, CliError> {
    Ok(match cfg.profile {
        ProfileKind::Bump => ProfileChoice::Class(Arc::new(BumpProfile::new(cfg.params.d))),
        ProfileKind::TorusOptimizer => ProfileChoice::TorusOptimizer(solver(cfg)),
        ProfileKind::BoxOptimizer => {
            let grid = cfg.grid.expect("box optimizer needs a cell");
            let (profile, res) = optimizer_profile(&cfg.params, &grid, cfg.notch, &solver(cfg))?;
            if !res.converged {
                return Err(CliError::NotConverged(format!(
                    "box optimizer stopped at grad {:.2e}",
                    res.grad_norm
                )));
            }
            ProfileChoice::Class(profile)
        }
    })
}
