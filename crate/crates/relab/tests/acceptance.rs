//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line. Tolerances are pinned next to each check.

use std::sync::OnceLock;

use recore::bounds::{
    c_bar, check_events, error_bounds_ds, error_bounds_lasso, lambda_noise, noise_tail_prob,
    sample_size_threshold,
};
use recore::linalg::{dot, norm_inf, solve_dense, Matrix, SymMatrix};
use recore::model::{sample_design, CovarianceKind, CovarianceModel, EnsembleKind};
use recore::recert::{
    re_constant, restricted_eigen_range, verify_re_equivalences, Budget, ReTarget,
};
use recore::rng::Stream;
use recore::solvers::{dantzig, lasso};
use recore::width::{ell_star_phi_mc, ell_star_sparse_sphere_mc, ell_star_upsilon_mc};

use relab::config::{Experiment, ExperimentConfig, LambdaRule};
use relab::report::{RecoverRow, Report};
use relab::runner::{run_re_verification, run_recovery};

fn verdict(name: &str, result: Result<(), String>) {
    // write to the real stdout so the line survives libtest's capture
    use std::io::Write;
    match result {
        Ok(()) => writeln!(std::io::stdout(), "[PASS] {name}").unwrap(),
        Err(msg) => {
            writeln!(std::io::stdout(), "[FAIL] {name}: {msg}").unwrap();
            panic!("{name}: {msg}");
        }
    }
}

fn ensure(cond: bool, msg: impl Fn() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[test]
fn criterion_01_restricted_eigen_exactness() {
    verdict("restricted eigen range matches equicorrelation closed form", (|| {
        let model = CovarianceModel::new(8, CovarianceKind::Equicorrelation { rho: 0.5 })
            .map_err(|e| e.to_string())?;
        for m in [2usize, 3, 4] {
            let r = restricted_eigen_range(&model.sigma, m).map_err(|e| e.to_string())?;
            let want_min = 1.0 - 0.5;
            let want_max = 1.0 + (m as f64 - 1.0) * 0.5;
            ensure((r.rho_min - want_min).abs() < 1e-8, || {
                format!("m={m}: rho_min {} vs {want_min}", r.rho_min)
            })?;
            ensure((r.rho_max - want_max).abs() < 1e-8, || {
                format!("m={m}: rho_max {} vs {want_max}", r.rho_max)
            })?;
            ensure(r.exact, || format!("m={m}: enumeration not exact"))?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_02_re_identity_case() {
    verdict("RE constant is 1 on the identity covariance", (|| {
        let sigma = SymMatrix::identity(16);
        for (s, k0) in [(2usize, 1.0f64), (2, 3.0), (4, 1.0)] {
            let res = re_constant(
                &ReTarget::Covariance(&sigma),
                s,
                k0,
                &Budget::default(),
                17,
            )
            .map_err(|e| e.to_string())?;
            let k = res.k_lower_estimate();
            ensure((k - 1.0).abs() < 1e-6, || format!("s={s} k0={k0}: K={k}"))?;
        }
        Ok(())
    })());
}

/// Random unit-diagonal PSD matrix of dimension p.
fn random_correlation(p: usize, rng: &mut Stream) -> SymMatrix {
    let b = Matrix {
        rows: p + 4,
        cols: p,
        data: (0..(p + 4) * p).map(|_| rng.normal()).collect(),
    };
    let g = b.gram_scaled(1.0);
    let mut sigma = SymMatrix::identity(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let v = g.get(i, j) / (g.get(i, i) * g.get(j, j)).sqrt();
            sigma.set(i, j, v);
        }
    }
    sigma
}

#[test]
fn criterion_03_equivalence_bands() {
    verdict("RE variant chains hold on random correlation matrices", (|| {
        let mut rng = Stream::new(33);
        for trial in 0..20 {
            let sigma = random_correlation(8, &mut rng);
            for k0 in [1.0f64, 3.0] {
                let rep = verify_re_equivalences(
                    &ReTarget::Covariance(&sigma),
                    2,
                    2,
                    k0,
                    &Budget::default(),
                    1000 + trial,
                )
                .map_err(|e| e.to_string())?;
                ensure(rep.chain_ss_ok, || {
                    format!(
                        "trial {trial} k0={k0}: ss chain K={} K_ss={}",
                        rep.k_plain, rep.k_ss
                    )
                })?;
                ensure(rep.chain_sm_ok, || {
                    format!(
                        "trial {trial} k0={k0}: sm chain K={} K_sm={}",
                        rep.k_plain, rep.k_sm
                    )
                })?;
            }
        }
        Ok(())
    })());
}

fn soft(z: f64, lambda: f64) -> f64 {
    let m = z.abs() - lambda;
    if m <= 0.0 {
        0.0
    } else {
        z.signum() * m
    }
}

/// Minimal l1 over the feasible polytope by enumerating all vertices of the
/// split-variable LP (active-set enumeration, C(12, 6) systems at p = 3).
fn dantzig_vertex_oracle(g: &[f64], z: &[f64], lambda: f64) -> f64 {
    let p = 3usize;
    let nv = 2 * p;
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for i in 0..p {
        let mut row = vec![0.0; nv];
        for j in 0..p {
            row[j] = g[i * p + j];
            row[p + j] = -g[i * p + j];
        }
        a.push(row);
        b.push(z[i] + lambda);
    }
    for i in 0..p {
        let row: Vec<f64> = a[i].iter().map(|v| -v).collect();
        a.push(row);
        b.push(lambda - z[i]);
    }
    for i in 0..nv {
        let mut row = vec![0.0; nv];
        row[i] = -1.0;
        a.push(row);
        b.push(0.0);
    }
    let rows = a.len();
    let mut best = f64::INFINITY;
    let mut active = [0usize; 6];
    fn visit(
        start: usize,
        depth: usize,
        active: &mut [usize; 6],
        a: &[Vec<f64>],
        b: &[f64],
        best: &mut f64,
    ) {
        let nv = 6;
        if depth == nv {
            let mut sys = Matrix::zeros(nv, nv);
            let mut rhs = vec![0.0; nv];
            for (k, &r) in active.iter().enumerate() {
                for c in 0..nv {
                    sys.set(k, c, a[r][c]);
                }
                rhs[k] = b[r];
            }
            if let Ok(w) = solve_dense(&sys, &rhs) {
                if (0..a.len()).all(|r| dot(&a[r], &w) <= b[r] + 1e-8) {
                    let obj: f64 = w.iter().sum();
                    if obj < *best {
                        *best = obj;
                    }
                }
            }
            return;
        }
        for r in start..a.len() {
            active[depth] = r;
            visit(r + 1, depth + 1, active, a, b, best);
        }
    }
    visit(0, 0, &mut active, &a, &b, &mut best);
    let _ = rows;
    best
}

#[test]
fn criterion_04_solver_oracles() {
    verdict("solvers match closed-form and vertex-enumeration oracles", (|| {
        // orthogonal design: both estimators reduce to soft thresholding
        let (n, p) = (32usize, 8usize);
        let mut x = Matrix::zeros(n, p);
        for j in 0..p {
            x.set(j, j, (n as f64).sqrt());
        }
        let mut rng = Stream::new(44);
        let y: Vec<f64> = (0..n).map(|_| 2.0 * rng.normal()).collect();
        let z: Vec<f64> = x.matvec_t(&y).iter().map(|v| v / n as f64).collect();
        let lambda = 0.3;
        let la = lasso(&x, &y, lambda, 1e-12, 100_000);
        let ds = dantzig(&x, &y, lambda, 1e-9);
        for j in 0..p {
            let want = soft(z[j], lambda);
            ensure((la.beta_hat[j] - want).abs() < 1e-8, || {
                format!("lasso j={j}: {} vs {want}", la.beta_hat[j])
            })?;
            ensure((ds.beta_hat[j] - want).abs() < 1e-8, || {
                format!("dantzig j={j}: {} vs {want}", ds.beta_hat[j])
            })?;
        }

        // 50 random small instances against exhaustive vertex enumeration
        for trial in 0..50u64 {
            let mut rng = Stream::new(4000 + trial);
            let x = Matrix {
                rows: 4,
                cols: 3,
                data: (0..12).map(|_| rng.normal()).collect(),
            };
            let y: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let z: Vec<f64> = x.matvec_t(&y).iter().map(|v| v / 4.0).collect();
            let lambda = 0.3 * norm_inf(&z);
            let fit = dantzig(&x, &y, lambda, 1e-9);
            ensure(fit.converged, || format!("trial {trial}: not converged"))?;
            let g_sym = x.gram_scaled(4.0);
            let mut g = vec![0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    g[i * 3 + j] = g_sym.get(i, j);
                }
            }
            let oracle = dantzig_vertex_oracle(&g, &z, lambda);
            ensure((fit.objective_or_l1 - oracle).abs() < 1e-8, || {
                format!("trial {trial}: l1 {} vs oracle {oracle}", fit.objective_or_l1)
            })?;
        }
        Ok(())
    })());
}

fn recovery_config(experiment: Experiment, rule: LambdaRule) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment = experiment;
    cfg.lambda_rule = rule;
    cfg.n = 200;
    cfg.p = 64;
    cfg.s = 4;
    cfg.model = CovarianceKind::Ar1 { rho: 0.5 };
    cfg.ensemble = EnsembleKind::Gaussian;
    cfg.trials = 500;
    cfg.theta = 0.1;
    cfg.a = 1.0;
    cfg.sigma = 1.0;
    cfg.master_seed = 424242;
    cfg.sync_theory();
    cfg
}

fn recovery_reports() -> &'static (Report<RecoverRow>, Report<RecoverRow>) {
    static REPORTS: OnceLock<(Report<RecoverRow>, Report<RecoverRow>)> = OnceLock::new();
    REPORTS.get_or_init(|| {
        let lasso_cfg = recovery_config(Experiment::RecoverLasso, LambdaRule::PaperLasso);
        let ds_cfg = recovery_config(Experiment::RecoverDs, LambdaRule::PaperDs);
        (
            run_recovery(&lasso_cfg).expect("lasso recovery run"),
            run_recovery(&ds_cfg).expect("ds recovery run"),
        )
    })
}

fn event_rows(report: &Report<RecoverRow>) -> Vec<&RecoverRow> {
    report.rows.iter().filter(|r| r.f_theta && r.t_a).collect()
}

#[test]
fn criterion_05_cone_constraints() {
    verdict("cone constraints hold on all event-holding trials", (|| {
        let (lasso_rep, ds_rep) = recovery_reports();
        for (name, rep) in [("lasso", lasso_rep), ("ds", ds_rep)] {
            let events = event_rows(rep);
            ensure(!events.is_empty(), || format!("{name}: no event-holding trials"))?;
            let bad = events.iter().filter(|r| !r.cone_holds).count();
            ensure(bad == 0, || {
                format!("{name}: cone violated on {bad} of {} event trials", events.len())
            })?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_06_error_bounds() {
    verdict("error bounds hold on at least 99% of event-holding trials", (|| {
        let (lasso_rep, ds_rep) = recovery_reports();
        for (name, rep) in [("lasso", lasso_rep), ("ds", ds_rep)] {
            let events = event_rows(rep);
            ensure(!events.is_empty(), || format!("{name}: no event-holding trials"))?;
            let ok = events.iter().filter(|r| r.l2_within).count();
            let rate = ok as f64 / events.len() as f64;
            ensure(rate >= 0.99, || {
                format!("{name}: l2 bound rate {rate} over {} event trials", events.len())
            })?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_07_two_sided_bound() {
    verdict("two-sided design bound holds at n=400 and degrades at n=8", (|| {
        let combos = [
            (CovarianceKind::Identity, EnsembleKind::Gaussian),
            (CovarianceKind::Identity, EnsembleKind::Rademacher),
            (CovarianceKind::Ar1 { rho: 0.5 }, EnsembleKind::Gaussian),
            (CovarianceKind::Ar1 { rho: 0.5 }, EnsembleKind::Rademacher),
        ];
        for (model, ensemble) in combos {
            let mut cfg = ExperimentConfig::default();
            cfg.experiment = Experiment::ReVerify;
            cfg.model = model.clone();
            cfg.ensemble = ensemble;
            cfg.p = 64;
            cfg.s = 4;
            cfg.theta = 0.5;
            cfg.n = 400;
            cfg.trials = 200;
            cfg.inner_samples = 256;
            cfg.master_seed = 777;
            cfg.sync_theory();
            let big = run_re_verification(&cfg).map_err(|e| e.to_string())?;
            let freq_big = big.summary["success_freq"].as_f64().unwrap();
            ensure(freq_big >= 0.95, || {
                format!("{model:?}/{ensemble:?}: frequency {freq_big} at n=400")
            })?;

            cfg.n = 8;
            let small = run_re_verification(&cfg).map_err(|e| e.to_string())?;
            let freq_small = small.summary["success_freq"].as_f64().unwrap();
            ensure(freq_small < freq_big, || {
                format!("{model:?}/{ensemble:?}: {freq_small} not below {freq_big}")
            })?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_08_noise_event_probability() {
    verdict("noise event frequency beats its theoretical floor", (|| {
        let (p, n, a, theta) = (64usize, 200usize, 1.0f64, 0.1f64);
        let model = CovarianceModel::identity(p);
        let design = sample_design(n, &model, EnsembleKind::Gaussian, 808);
        let mut rng = Stream::new(809);
        let trials = 10_000;
        let mut holds = 0usize;
        for _ in 0..trials {
            let eps: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let flags = check_events(&design.x, &eps, theta, a, 1.0).map_err(|e| e.to_string())?;
            if flags.t_a {
                holds += 1;
            }
        }
        let freq = holds as f64 / trials as f64;
        let floor = noise_tail_prob(p, a).map_err(|e| e.to_string())? - 0.01;
        ensure(freq >= floor, || format!("frequency {freq} below floor {floor}"))
    })());
}

#[test]
fn criterion_09_width_bounds() {
    verdict("width estimates stay below their theoretical ceilings", (|| {
        for seed in 0..20u64 {
            for p in [4usize, 16, 64] {
                let model = CovarianceModel::identity(p);
                let est = ell_star_phi_mc(&model, 500, 900 + seed).map_err(|e| e.to_string())?;
                let bound = 3.0 * (p as f64).ln().sqrt();
                ensure(est.mean <= bound, || {
                    format!("seed {seed} p={p}: column width {} > {bound}", est.mean)
                })?;
            }

            let p = 32usize;
            let model = CovarianceModel::new(p, CovarianceKind::Ar1 { rho: 0.5 })
                .map_err(|e| e.to_string())?;
            for m in [1usize, 2, 4] {
                let est = ell_star_sparse_sphere_mc(&model, m, 500, 950 + seed)
                    .map_err(|e| e.to_string())?;
                let rho_max = restricted_eigen_range(&model.sigma, m)
                    .map_err(|e| e.to_string())?
                    .rho_max;
                let bound = 6.0
                    * (m as f64 * (5.0 * std::f64::consts::E * p as f64 / m as f64).ln()).sqrt()
                    * rho_max.sqrt();
                ensure(est.mean <= bound, || {
                    format!("seed {seed} m={m}: sphere width {} > {bound}", est.mean)
                })?;
            }

            let (s, k0) = (4usize, 3.0f64);
            let est = ell_star_upsilon_mc(&model, s, k0, 64, 300, 980 + seed)
                .map_err(|e| e.to_string())?;
            let k_hat = re_constant(
                &ReTarget::Covariance(&model.sigma),
                s,
                k0,
                &Budget::default(),
                990 + seed,
            )
            .map_err(|e| e.to_string())?
            .k_lower_estimate();
            let rho_max_s = restricted_eigen_range(&model.sigma, s)
                .map_err(|e| e.to_string())?
                .rho_max;
            let bound = c_bar(k0, k_hat, rho_max_s)
                * (s as f64 * (5.0 * std::f64::consts::E * p as f64 / s as f64).ln()).sqrt();
            ensure(est.mean <= bound, || {
                format!("seed {seed}: cone-image width {} > {bound}", est.mean)
            })?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_10_formula_regression() {
    verdict("closed-form quantities reproduce hand-computed values", (|| {
        let tol = 1e-12;
        let lam = lambda_noise(1.0, 0.0, 100, 100).map_err(|e| e.to_string())?;
        let want = (2.0 * 100.0f64.ln() / 100.0).sqrt();
        ensure((lam - want).abs() < tol, || format!("lambda {lam} vs {want}"))?;
        ensure((c_bar(3.0, 1.0, 1.0) - 15.0).abs() < tol, || "c_bar k0=3".to_string())?;
        ensure((c_bar(1.0, 1.0, 1.0) - 9.0).abs() < tol, || "c_bar k0=1".to_string())?;
        let thr = sample_size_threshold(1, 2, 0.5, 1.0, 1.0, 1.0);
        let want = 4.0 * f64::max((10.0 * std::f64::consts::E).ln(), 9.0 * 2.0f64.ln());
        ensure((thr - want).abs() < tol, || format!("threshold {thr} vs {want}"))?;
        let la = error_bounds_lasso(4, 0.1, 1.0, 0.5);
        ensure(
            (la.b - 16.0).abs() < tol
                && (la.l2_bound - 6.4).abs() < tol
                && (la.l1_bound - 6.4).abs() < tol,
            || format!("lasso bounds {:?}", (la.b, la.l2_bound, la.l1_bound)),
        )?;
        let ds = error_bounds_ds(4, 0.1, 1.0, 0.5);
        ensure(
            (ds.b - 16.0).abs() < tol
                && (ds.l2_bound - 9.6).abs() < tol
                && (ds.l1_bound - 12.8).abs() < tol,
            || format!("ds bounds {:?}", (ds.b, ds.l2_bound, ds.l1_bound)),
        )?;
        Ok(())
    })());
}

#[test]
fn criterion_11_determinism_across_thread_counts() {
    verdict("reports are identical for any worker count", (|| {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment = Experiment::ReVerify;
        cfg.p = 16;
        cfg.s = 2;
        cfg.n = 50;
        cfg.trials = 16;
        cfg.inner_samples = 32;
        cfg.master_seed = 1111;
        cfg.sync_theory();

        let mut verify_runs = Vec::new();
        for threads in [1usize, 2, 4] {
            let mut c = cfg.clone();
            c.threads = threads;
            verify_runs.push(run_re_verification(&c).map_err(|e| e.to_string())?);
        }
        for run in &verify_runs[1..] {
            for (a, b) in verify_runs[0].rows.iter().zip(run.rows.iter()) {
                let same = a.trial_index == b.trial_index
                    && a.ratio_min == b.ratio_min
                    && a.ratio_max == b.ratio_max
                    && a.col_min == b.col_min
                    && a.col_max == b.col_max
                    && a.bounds_hold == b.bounds_hold;
                ensure(same, || format!("verification trial {} differs", a.trial_index))?;
            }
        }

        let mut rec_cfg = recovery_config(Experiment::RecoverDs, LambdaRule::PaperDs);
        rec_cfg.trials = 12;
        rec_cfg.n = 60;
        rec_cfg.p = 16;
        rec_cfg.s = 2;
        let mut recover_runs = Vec::new();
        for threads in [1usize, 3] {
            let mut c = rec_cfg.clone();
            c.threads = threads;
            recover_runs.push(run_recovery(&c).map_err(|e| e.to_string())?);
        }
        for (a, b) in recover_runs[0].rows.iter().zip(recover_runs[1].rows.iter()) {
            let same = a.trial_index == b.trial_index
                && a.f_theta == b.f_theta
                && a.t_a == b.t_a
                && a.converged == b.converged
                && a.lambda == b.lambda
                && a.err_l2 == b.err_l2
                && a.err_l1 == b.err_l1
                && a.cone_tail_l1 == b.cone_tail_l1
                && a.cone_support_l1 == b.cone_support_l1
                && a.cone_holds == b.cone_holds;
            ensure(same, || format!("recovery trial {} differs", a.trial_index))?;
        }
        Ok(())
    })());
}
