//! Monte Carlo experiment loops. Every trial is a pure function of a seed
//! derived from the master seed and the trial index, so reports are
//! identical for any worker count.

use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use recore::bounds::{
    c_bar, check_events, error_bounds_ds, error_bounds_lasso, sample_size_threshold,
};
use recore::cone::{normalize_sigma_half, random_cone_vector};
use recore::linalg::{norm1, norm2};
use recore::model::{
    sample_design, sample_noise, sample_sparse_signal, CovarianceKind, CovarianceModel,
    EnsembleKind, RecoveryInstance,
};
use recore::recert::{certify, re_constant, restricted_eigen_range, Budget, ReTarget};
use recore::rng::{derive_seed, Stream};
use recore::solvers::{dantzig, lasso, SolverResult, LASSO_DEFAULT_MAX_ITER, LASSO_DEFAULT_TOL};
use recore::width::{ell_star_phi_mc, ell_star_sparse_sphere_mc, ell_star_upsilon_mc};

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::report::{CertRow, GaussRow, RecoverRow, Report, SweepRow, VerifyRow, WidthRow};

const DS_TOL: f64 = 1e-8;

/// Seed for whole-run estimates (stream 0); trial t uses stream 1 + t.
fn global_seed(cfg: &ExperimentConfig) -> u64 {
    derive_seed(cfg.master_seed, 0)
}

fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    derive_seed(cfg.master_seed, 1 + trial as u64)
}

/// Run trials on a pool of the configured size; results come back ordered
/// by trial index regardless of scheduling.
fn run_trials<T, F>(trials: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool");
    pool.install(|| (0..trials).into_par_iter().map(|t| f(t)).collect())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Extreme values of ||X delta||_2 / sqrt(n) over sampled unit cone vectors
/// (unit in the ||Sigma^{1/2} delta|| norm).
fn sampled_ratio_range(
    x: &recore::linalg::Matrix,
    model: &CovarianceModel,
    s: usize,
    k0: f64,
    samples: usize,
    rng: &mut Stream,
) -> (f64, f64) {
    let sqrt_n = (x.rows as f64).sqrt();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..samples {
        let mut v = random_cone_vector(model.p, s, k0, rng);
        normalize_sigma_half(model, &mut v);
        let r = norm2(&x.matvec(&v)) / sqrt_n;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

fn column_norm_range(x: &recore::linalg::Matrix) -> (f64, f64) {
    let sqrt_n = (x.rows as f64).sqrt();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..x.cols {
        let c = norm2(&x.column(j)) / sqrt_n;
        lo = lo.min(c);
        hi = hi.max(c);
    }
    (lo, hi)
}

/// RE/RIP certification of the covariance target and of per-trial sampled
/// designs.
pub fn run_recert(cfg: &ExperimentConfig) -> Result<Report<CertRow>, ConfigError> {
    let model = cfg.build_model()?;
    let budget = Budget::default();
    let to_err = |e: recore::recert::ReError| ConfigError::Invalid(e.to_string());

    let start = Instant::now();
    let cov_cert = certify(
        &ReTarget::Covariance(&model.sigma),
        cfg.s,
        cfg.k0,
        cfg.m,
        &budget,
        global_seed(cfg),
    )
    .map_err(to_err)?;
    let mut rows = vec![CertRow {
        trial_index: 0,
        target: "covariance".to_string(),
        rho_min_2s: cov_cert.rho_min_2s,
        rho_max_s: cov_cert.rho_max_s,
        eigen_exact: cov_cert.eigen_exact,
        rip_theta: None,
        k_est: cov_cert.k_est,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    }];

    let design_rows: Vec<Result<CertRow, ConfigError>> = run_trials(cfg.trials, cfg.threads, |t| {
        let t0 = Instant::now();
        let seed = trial_seed(cfg, t);
        let design = sample_design(cfg.n, &model, cfg.ensemble, derive_seed(seed, 0));
        let cert = certify(
            &ReTarget::Design(&design.x),
            cfg.s,
            cfg.k0,
            cfg.m,
            &budget,
            derive_seed(seed, 1),
        )
        .map_err(to_err)?;
        Ok(CertRow {
            trial_index: 1 + t,
            target: "design".to_string(),
            rho_min_2s: cert.rho_min_2s,
            rho_max_s: cert.rho_max_s,
            eigen_exact: cert.eigen_exact,
            rip_theta: cert.rip_theta,
            k_est: cert.k_est,
            runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
        })
    });
    for row in design_rows {
        rows.push(row?);
    }

    let summary = json!({
        "covariance_k_est": cov_cert.k_est,
        "covariance_rho_min_2s": cov_cert.rho_min_2s,
        "covariance_rho_max_s": cov_cert.rho_max_s,
        "design_trials": cfg.trials,
    });
    Ok(Report::new(cfg, summary, rows))
}

/// Two-sided bound verification on sampled cone vectors and all design
/// columns.
pub fn run_re_verification(cfg: &ExperimentConfig) -> Result<Report<VerifyRow>, ConfigError> {
    let model = cfg.build_model()?;
    let lo_gate = 1.0 - cfg.theta;
    let hi_gate = 1.0 + cfg.theta;
    let rows: Vec<VerifyRow> = run_trials(cfg.trials, cfg.threads, |t| {
        let t0 = Instant::now();
        let seed = trial_seed(cfg, t);
        let design = sample_design(cfg.n, &model, cfg.ensemble, derive_seed(seed, 0));
        let mut rng = Stream::new(derive_seed(seed, 1));
        let (ratio_min, ratio_max) =
            sampled_ratio_range(&design.x, &model, cfg.s, cfg.k0, cfg.inner_samples, &mut rng);
        let (col_min, col_max) = column_norm_range(&design.x);
        let bounds_hold = ratio_min >= lo_gate
            && ratio_max <= hi_gate
            && col_min >= lo_gate
            && col_max <= hi_gate;
        VerifyRow {
            trial_index: t,
            ratio_min,
            ratio_max,
            col_min,
            col_max,
            bounds_hold,
            runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
        }
    });
    let successes = rows.iter().filter(|r| r.bounds_hold).count();
    let summary = json!({
        "trials": cfg.trials,
        "success_freq": successes as f64 / cfg.trials as f64,
        "lower_gate": lo_gate,
        "upper_gate": hi_gate,
    });
    Ok(Report::new(cfg, summary, rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Lasso,
    Ds,
}

impl Estimator {
    pub fn cone_k0(self) -> f64 {
        match self {
            Estimator::Lasso => 3.0,
            Estimator::Ds => 1.0,
        }
    }
}

/// Sparse recovery: generate, solve, and record raw errors, cone
/// quantities, events, and theoretical bounds per trial.
pub fn run_recovery(cfg: &ExperimentConfig) -> Result<Report<RecoverRow>, ConfigError> {
    let estimator = match cfg.experiment {
        Experiment::RecoverDs => Estimator::Ds,
        _ => Estimator::Lasso,
    };
    let model = cfg.build_model()?;
    let k0 = estimator.cone_k0();
    let k_hat = re_constant(
        &ReTarget::Covariance(&model.sigma),
        cfg.s,
        k0,
        &Budget::default(),
        global_seed(cfg),
    )
    .map_err(|e| ConfigError::Invalid(e.to_string()))?
    .k_lower_estimate();
    let lambda = cfg.lambda()?;
    let bounds = match estimator {
        Estimator::Lasso => error_bounds_lasso(cfg.s, lambda, k_hat, cfg.theta),
        Estimator::Ds => error_bounds_ds(cfg.s, lambda, k_hat, cfg.theta),
    };

    let rows: Vec<Result<RecoverRow, ConfigError>> = run_trials(cfg.trials, cfg.threads, |t| {
        let t0 = Instant::now();
        let seed = trial_seed(cfg, t);
        let design = sample_design(cfg.n, &model, cfg.ensemble, derive_seed(seed, 0));
        let signal = sample_sparse_signal(cfg.p, cfg.s, cfg.amplitude, derive_seed(seed, 1))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let noise = sample_noise(cfg.n, cfg.sigma, derive_seed(seed, 2));
        let instance = RecoveryInstance::assemble(design.x, signal, noise, cfg.sigma);
        let events = check_events(&instance.design, &instance.noise, cfg.theta, cfg.a, cfg.sigma)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let fit: SolverResult = match estimator {
            Estimator::Lasso => lasso(
                &instance.design,
                &instance.observed,
                lambda,
                LASSO_DEFAULT_TOL,
                LASSO_DEFAULT_MAX_ITER,
            ),
            Estimator::Ds => dantzig(&instance.design, &instance.observed, lambda, DS_TOL),
        };

        let upsilon: Vec<f64> = fit
            .beta_hat
            .iter()
            .zip(instance.signal.iter())
            .map(|(b, s)| b - s)
            .collect();
        let mut cone_support_l1 = 0.0;
        let mut cone_tail_l1 = 0.0;
        for (u, b) in upsilon.iter().zip(instance.signal.iter()) {
            if *b != 0.0 {
                cone_support_l1 += u.abs();
            } else {
                cone_tail_l1 += u.abs();
            }
        }
        let err_l2 = norm2(&upsilon);
        let err_l1 = norm1(&upsilon);
        Ok(RecoverRow {
            trial_index: t,
            f_theta: events.f_theta,
            t_a: events.t_a,
            converged: fit.converged,
            lambda,
            err_l2,
            err_l1,
            cone_tail_l1,
            cone_support_l1,
            cone_holds: cone_tail_l1 <= k0 * cone_support_l1 * (1.0 + 1e-9) + 1e-9,
            l2_bound: bounds.l2_bound,
            l1_bound: bounds.l1_bound,
            l2_within: err_l2 <= bounds.l2_bound,
            l1_within: err_l1 <= bounds.l1_bound,
            l1_dominated: norm1(&fit.beta_hat) <= norm1(&instance.signal) + 1e-9,
            runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
        })
    });
    let rows: Vec<RecoverRow> = rows.into_iter().collect::<Result<_, _>>()?;

    let event_rows: Vec<&RecoverRow> = rows.iter().filter(|r| r.f_theta && r.t_a).collect();
    fn frac<F: Fn(&RecoverRow) -> bool>(pred: F, set: &[&RecoverRow]) -> f64 {
        if set.is_empty() {
            f64::NAN
        } else {
            set.iter().filter(|r| pred(r)).count() as f64 / set.len() as f64
        }
    }
    let all: Vec<&RecoverRow> = rows.iter().collect();
    let summary = json!({
        "estimator": match estimator { Estimator::Lasso => "lasso", Estimator::Ds => "ds" },
        "lambda": lambda,
        "k_hat": k_hat,
        "b_constant": bounds.b,
        "trials": cfg.trials,
        "event_trials": event_rows.len(),
        "cone_rate": frac(|r: &RecoverRow| r.cone_holds, &all),
        "cone_rate_on_events": frac(|r: &RecoverRow| r.cone_holds, &event_rows),
        "l2_within_rate": frac(|r: &RecoverRow| r.l2_within, &all),
        "l2_within_rate_on_events": frac(|r: &RecoverRow| r.l2_within, &event_rows),
        "l1_within_rate_on_events": frac(|r: &RecoverRow| r.l1_within, &event_rows),
        "l1_dominated_rate_on_events": frac(|r: &RecoverRow| r.l1_dominated, &event_rows),
        "converged_rate": frac(|r: &RecoverRow| r.converged, &all),
    });
    Ok(Report::new(cfg, summary, rows))
}

/// Width estimates for the three set families with their theoretical
/// ceilings.
pub fn run_width(cfg: &ExperimentConfig) -> Result<Report<WidthRow>, ConfigError> {
    let model = cfg.build_model()?;
    let to_err = |e: recore::width::WidthError| ConfigError::Invalid(e.to_string());
    let re_err = |e: recore::recert::ReError| ConfigError::Invalid(e.to_string());
    let p = cfg.p;
    let mut rows = Vec::new();

    let phi = ell_star_phi_mc(&model, cfg.trials, derive_seed(cfg.master_seed, 1))
        .map_err(to_err)?;
    let phi_bound = 3.0 * (p as f64).ln().sqrt();
    rows.push(WidthRow {
        set: "columns".to_string(),
        m: None,
        estimate: phi.mean,
        std_error: phi.std_error,
        trials: phi.trials,
        bound: phi_bound,
        within_bound: phi.mean <= phi_bound,
    });

    let k_hat = re_constant(
        &ReTarget::Covariance(&model.sigma),
        cfg.s,
        cfg.k0,
        &Budget::default(),
        global_seed(cfg),
    )
    .map_err(re_err)?
    .k_lower_estimate();
    let rho_max_s = restricted_eigen_range(&model.sigma, cfg.s).map_err(re_err)?.rho_max;
    let c_bar_val = c_bar(cfg.k0, k_hat, rho_max_s);
    let ups = ell_star_upsilon_mc(
        &model,
        cfg.s,
        cfg.k0,
        cfg.inner_samples,
        cfg.trials,
        derive_seed(cfg.master_seed, 2),
    )
    .map_err(to_err)?;
    let ups_bound =
        c_bar_val * (cfg.s as f64 * (5.0 * core::f64::consts::E * p as f64 / cfg.s as f64).ln()).sqrt();
    rows.push(WidthRow {
        set: "cone-image".to_string(),
        m: None,
        estimate: ups.mean,
        std_error: ups.std_error,
        trials: ups.trials,
        bound: ups_bound,
        within_bound: ups.mean <= ups_bound,
    });

    for (i, &m) in cfg.width_m.iter().enumerate() {
        let est = ell_star_sparse_sphere_mc(
            &model,
            m,
            cfg.trials,
            derive_seed(cfg.master_seed, 3 + i as u64),
        )
        .map_err(to_err)?;
        let rho_max_m = restricted_eigen_range(&model.sigma, m).map_err(re_err)?.rho_max;
        let bound = 6.0
            * (m as f64 * (5.0 * core::f64::consts::E * p as f64 / m as f64).ln()).sqrt()
            * rho_max_m.sqrt();
        rows.push(WidthRow {
            set: "sparse-sphere".to_string(),
            m: Some(m),
            estimate: est.mean,
            std_error: est.std_error,
            trials: est.trials,
            bound,
            within_bound: est.mean <= bound,
        });
    }

    let violations = rows.iter().filter(|r| !r.within_bound).count();
    let summary = json!({
        "k_hat": k_hat,
        "c_bar": c_bar_val,
        "violations": violations,
    });
    Ok(Report::new(cfg, summary, rows))
}

/// Phase-map sweep: one verification + recovery summary per grid cell.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Report<SweepRow>, ConfigError> {
    if cfg.sweep.is_empty() {
        return Err(ConfigError::Invalid("sweep grid is empty".to_string()));
    }
    let mut rows = Vec::new();
    let mut cell_idx = 0u64;
    for &n in &cfg.sweep.n {
        for &p in &cfg.sweep.p {
            for &s in &cfg.sweep.s {
                for &rho in &cfg.sweep.rho {
                    let mut cell = cfg.clone();
                    cell.experiment = Experiment::ReVerify;
                    cell.n = n;
                    cell.p = p;
                    cell.s = s;
                    cell.model = CovarianceKind::Ar1 { rho };
                    cell.master_seed = derive_seed(cfg.master_seed, cell_idx);
                    cell_idx += 1;
                    rows.push(sweep_cell(cfg, &cell, n, p, s, rho));
                }
            }
        }
    }
    let summary = json!({
        "cells": rows.len(),
        "failed_cells": rows.iter().filter(|r| r.failed).count(),
    });
    Ok(Report::new(cfg, summary, rows))
}

fn sweep_cell(
    cfg: &ExperimentConfig,
    cell: &ExperimentConfig,
    n: usize,
    p: usize,
    s: usize,
    rho: f64,
) -> SweepRow {
    let failed_row = |threshold_n: f64| SweepRow {
        n,
        p,
        s,
        rho,
        trials: cfg.trials,
        success_freq: f64::NAN,
        err_l2_median: f64::NAN,
        err_l2_p90: f64::NAN,
        threshold_n,
        failed: true,
    };
    if cell.validate().is_err() {
        return failed_row(f64::NAN);
    }
    let Ok(model) = cell.build_model() else {
        return failed_row(f64::NAN);
    };
    let budget = Budget { restarts: 16, max_iters: 300 };
    let threshold_n = match re_constant(
        &ReTarget::Covariance(&model.sigma),
        s,
        cell.k0,
        &budget,
        global_seed(cell),
    ) {
        Ok(res) => {
            let rho_max_s = restricted_eigen_range(&model.sigma, s)
                .map(|r| r.rho_max)
                .unwrap_or(f64::NAN);
            let cb = c_bar(cell.k0, res.k_lower_estimate(), rho_max_s);
            sample_size_threshold(
                s,
                p,
                cell.theta,
                cell.theory.alpha_psi2,
                cb,
                cell.theory.c_prime,
            )
        }
        Err(_) => f64::NAN,
    };

    let Ok(verify) = run_re_verification(cell) else {
        return failed_row(threshold_n);
    };
    let success_freq = verify.summary["success_freq"].as_f64().unwrap_or(f64::NAN);

    let mut recover_cfg = cell.clone();
    recover_cfg.experiment = Experiment::RecoverLasso;
    recover_cfg.lambda_rule = crate::config::LambdaRule::PaperLasso;
    let Ok(recover) = run_recovery(&recover_cfg) else {
        return failed_row(threshold_n);
    };
    let mut errs: Vec<f64> = recover.rows.iter().map(|r| r.err_l2).collect();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    SweepRow {
        n,
        p,
        s,
        rho,
        trials: cfg.trials,
        success_freq,
        err_l2_median: quantile(&errs, 0.5),
        err_l2_p90: quantile(&errs, 0.9),
        threshold_n,
        failed: false,
    }
}

/// Gaussian-design check: slackened two-sided bound plus margin statistics
/// against the width-based lower prediction.
pub fn run_gauss_check(cfg: &ExperimentConfig) -> Result<Report<GaussRow>, ConfigError> {
    if cfg.ensemble != EnsembleKind::Gaussian {
        return Err(ConfigError::Invalid(
            "gauss-design requires the gaussian ensemble".to_string(),
        ));
    }
    let model = cfg.build_model()?;
    let re_err = |e: recore::recert::ReError| ConfigError::Invalid(e.to_string());
    let k_hat = re_constant(
        &ReTarget::Covariance(&model.sigma),
        cfg.s,
        cfg.k0,
        &Budget::default(),
        global_seed(cfg),
    )
    .map_err(re_err)?
    .k_lower_estimate();
    let rho_max_s = restricted_eigen_range(&model.sigma, cfg.s).map_err(re_err)?.rho_max;
    let c_bar_val = c_bar(cfg.k0, k_hat, rho_max_s);
    let p = cfg.p as f64;
    let sqrt_n = (cfg.n as f64).sqrt();
    let width_term = c_bar_val
        * (cfg.s as f64 * (5.0 * core::f64::consts::E * p / cfg.s as f64).ln()).sqrt()
        + (2.0 * cfg.theory.d * p.ln()).sqrt();
    let predicted_lower = 1.0 - width_term / sqrt_n;
    let lower_gate = 1.0 - cfg.theta - cfg.slack;
    let upper_gate = 1.0 + cfg.theta;

    let rows: Vec<GaussRow> = run_trials(cfg.trials, cfg.threads, |t| {
        let t0 = Instant::now();
        let seed = trial_seed(cfg, t);
        let design = sample_design(cfg.n, &model, EnsembleKind::Gaussian, derive_seed(seed, 0));
        let mut rng = Stream::new(derive_seed(seed, 1));
        let (ratio_min, ratio_max) =
            sampled_ratio_range(&design.x, &model, cfg.s, cfg.k0, cfg.inner_samples, &mut rng);
        GaussRow {
            trial_index: t,
            ratio_min,
            ratio_max,
            lower_gate,
            upper_gate,
            holds: ratio_min >= lower_gate && ratio_max <= upper_gate,
            predicted_lower,
            margin: ratio_min - predicted_lower,
            runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
        }
    });
    let holds = rows.iter().filter(|r| r.holds).count();
    let margins: Vec<f64> = rows.iter().map(|r| r.margin).collect();
    let mean_margin = margins.iter().sum::<f64>() / margins.len().max(1) as f64;
    let summary = json!({
        "trials": cfg.trials,
        "holds_freq": holds as f64 / cfg.trials as f64,
        "reference_prob": 1.0 - 4.0 / p.powf(cfg.theory.d),
        "predicted_lower": predicted_lower,
        "mean_margin": mean_margin,
    });
    Ok(Report::new(cfg, summary, rows))
}
