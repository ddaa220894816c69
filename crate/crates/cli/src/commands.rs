//! One function per subcommand. Each appends rows to `Outputs` as it goes,
//! so a numerical failure still leaves the completed rows to be written.

use gef_core::chaos::{diagram_sum, wick_power};
use gef_core::covariance::{asymptotic_cov, cov_quadrature_chains, predict, TheoryPrediction};
use gef_core::field::GefSample;
use gef_core::geometry::{signed_length, DEFAULT_GEO_TOL};
use gef_core::harness::{
    check_normality, log_truncation_error, run_replicates, summarize_table, verify_variance, verify_wick, verify_zeros,
    ReplicateTable, SummaryRow, CERTIFICATION_MARGIN,
};
use gef_core::rng::{mix64, replicate_seed};
use gef_core::stats::mean_and_stderr;
use gef_core::Error;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{opt, real, Outputs};

const REPLICATE_HEADER: &[&str] = &["replicate", "chain_id", "R", "raw", "centered", "min_modulus", "warnings"];
const SUMMARY_HEADER: &[&str] = &[
    "chain_id",
    "R",
    "n",
    "mean",
    "mean_stderr",
    "variance",
    "variance_stderr",
    "skew",
    "ex_kurt",
    "ks",
    "quad_cov",
    "quad_bound",
    "asym_cov",
];

pub fn sample(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let exp = cfg.experiment()?;
    let rho = exp.certification_radius();
    let samples: Vec<GefSample> = (0..exp.replicates)
        .into_par_iter()
        .map(|k| GefSample::sample(replicate_seed(exp.seed, k as u64), rho, exp.tail_tol))
        .collect::<Result<_, _>>()?;
    let t = out.table("coefficients", &["replicate", "n", "re", "im"]);
    for (k, s) in samples.iter().enumerate() {
        for (n, c) in s.coeffs().iter().enumerate() {
            out.get(t).push(vec![k.to_string(), n.to_string(), real(c.re), real(c.im)]);
        }
    }
    Ok(())
}

fn replicate_table(cfg: &RunConfig, out: &mut Outputs) -> Result<ReplicateTable, CliError> {
    let table = run_replicates(&cfg.experiment()?)?;
    let t = out.table("replicates", REPLICATE_HEADER);
    for row in &table.rows {
        out.get(t).push(vec![
            row.replicate.to_string(),
            row.chain_id.clone(),
            real(row.r),
            real(row.raw),
            real(row.centered),
            real(row.min_modulus),
            row.warnings.clone(),
        ]);
    }
    if !table.dropped.is_empty() {
        let t = out.table("dropped", &["replicate", "reason"]);
        for d in &table.dropped {
            out.get(t).push(vec![d.replicate.to_string(), d.reason.clone()]);
        }
    }
    if table.flagged() {
        eprintln!(
            "warning: {} of {} replicates dropped; experiment flagged",
            table.dropped.len(),
            table.attempted
        );
    }
    Ok(table)
}

pub fn increment(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    replicate_table(cfg, out).map(|_| ())
}

pub fn mean(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    cfg.require_chains()?;
    let grid = cfg.r_grid()?;
    let t = out.table("mean", &["chain_id", "R", "mean"]);
    for c in &cfg.chains {
        for &r in grid {
            let m = c.chain.mean_increment(r);
            println!("{}\t{r:?}\t{m:?}", c.id);
            out.get(t).push(vec![c.id.clone(), real(r), real(m)]);
        }
    }
    Ok(())
}

pub fn signed_length_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let t = out.table("signed_length", &["chain_a", "chain_b", "value"]);
    for (a, b) in cfg.pairs(false)? {
        let v = signed_length(&a.chain, &b.chain, DEFAULT_GEO_TOL);
        println!("{}\t{}\t{v:?}", a.id, b.id);
        out.get(t).push(vec![a.id.clone(), b.id.clone(), real(v)]);
    }
    Ok(())
}

pub fn cov_quad(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let grid = cfg.r_grid()?.to_vec();
    let pairs = cfg.pairs(true)?;
    let t = out.table(
        "cov_quad",
        &["chain_a", "chain_b", "R", "value", "bound", "alpha_terms", "evaluations", "asym_cov"],
    );
    for (a, b) in pairs {
        for &r in &grid {
            let asym = real(asymptotic_cov(&a.chain, &b.chain, r));
            match cov_quadrature_chains(&a.chain, &b.chain, r, &cfg.num().cov) {
                Ok(e) => out.get(t).push(vec![
                    a.id.clone(),
                    b.id.clone(),
                    real(r),
                    real(e.value),
                    real(e.bound),
                    e.alpha_terms.to_string(),
                    e.evaluations.to_string(),
                    asym,
                ]),
                Err(err) => {
                    if let Error::Numerical { partial, .. } = &err {
                        let v = partial.map(real).unwrap_or_default();
                        out.get(t).push(vec![a.id.clone(), b.id.clone(), real(r), v, String::new(), String::new(), String::new(), asym]);
                    }
                    return Err(err.into());
                }
            }
        }
    }
    Ok(())
}

/// Theory per (chain, R), written as rows are completed.
fn theory(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<(String, TheoryPrediction)>, CliError> {
    let grid = cfg.r_grid()?.to_vec();
    let t = out.table(
        "theory",
        &["chain_id", "R", "mean", "quad_cov", "quad_bound", "asym_cov", "alpha_terms"],
    );
    let mut preds = Vec::new();
    for c in &cfg.chains {
        for &r in &grid {
            match predict(&c.chain, &c.chain, r, &cfg.num().cov) {
                Ok(p) => {
                    out.get(t).push(vec![
                        c.id.clone(),
                        real(r),
                        real(p.mean),
                        real(p.cov_finite_r),
                        real(p.cov_stderr_bound),
                        real(p.asymptotic_cov),
                        p.alpha_terms_used.to_string(),
                    ]);
                    preds.push((c.id.clone(), p));
                }
                Err(err) => {
                    if let Error::Numerical { partial, .. } = &err {
                        out.get(t).push(vec![
                            c.id.clone(),
                            real(r),
                            real(c.chain.mean_increment(r)),
                            partial.map(real).unwrap_or_default(),
                            String::new(),
                            real(asymptotic_cov(&c.chain, &c.chain, r)),
                            String::new(),
                        ]);
                    }
                    return Err(err.into());
                }
            }
        }
    }
    Ok(preds)
}

fn summaries(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<SummaryRow>, CliError> {
    let table = replicate_table(cfg, out)?;
    let preds = theory(cfg, out)?;
    let rows = summarize_table(&table, &preds)?;
    let t = out.table("summary", SUMMARY_HEADER);
    for s in &rows {
        let m = &s.summary;
        out.get(t).push(vec![
            s.chain_id.clone(),
            real(s.r),
            m.n.to_string(),
            real(m.mean),
            real(m.mean_stderr),
            real(m.variance),
            real(m.variance_stderr),
            real(m.skewness),
            real(m.excess_kurtosis),
            real(m.ks_statistic),
            real(s.theory.cov_finite_r),
            real(s.theory.cov_stderr_bound),
            real(s.theory.asymptotic_cov),
        ]);
    }
    Ok(rows)
}

pub fn variance_sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let rows = summaries(cfg, out)?;
    let t = out.table(
        "variance",
        &[
            "chain_id",
            "R",
            "mc_variance",
            "mc_stderr",
            "quad_cov",
            "quad_bound",
            "asym_cov",
            "ratio_mc_quad",
            "ratio_quad_asym",
        ],
    );
    for v in verify_variance(&rows) {
        out.get(t).push(vec![
            v.chain_id,
            real(v.r),
            real(v.mc_variance),
            real(v.mc_stderr),
            real(v.quad_cov),
            real(v.quad_bound),
            real(v.asym_cov),
            real(v.ratio_mc_quad),
            real(v.ratio_quad_asym),
        ]);
    }
    Ok(())
}

pub fn clt(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let rows = summaries(cfg, out)?;
    let t = out.table(
        "normality",
        &["chain_id", "R", "skew", "ex_kurt", "ks", "ks_critical", "skew_ok", "kurt_ok", "ks_ok", "pass"],
    );
    for s in &rows {
        let c = check_normality(&s.summary);
        out.get(t).push(vec![
            s.chain_id.clone(),
            real(s.r),
            real(c.skewness),
            real(c.excess_kurtosis),
            real(c.ks_statistic),
            real(c.ks_critical),
            c.skewness_ok.to_string(),
            c.kurtosis_ok.to_string(),
            c.ks_ok.to_string(),
            c.passed().to_string(),
        ]);
    }
    Ok(())
}

pub fn wick_check(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let exp = cfg.exp();
    if exp.draws < 2 {
        return Err(CliError::validation("experiment.draws", "need at least 2"));
    }
    let reports = verify_wick(cfg.seed(), exp.draws, &exp.theta_grid)?;
    let t = out.table("wick", &["theta", "quantity", "alpha", "beta", "estimate", "stderr", "theory"]);
    for rep in &reports {
        let mut push = |name: &str, a: Option<u32>, b: Option<u32>, e: &gef_core::harness::Estimate| {
            out.get(t).push(vec![
                real(rep.theta),
                name.to_string(),
                opt(a),
                opt(b),
                real(e.estimate),
                real(e.stderr),
                real(e.theory),
            ])
        };
        push("loglog_cov", None, None, &rep.loglog_cov);
        push("mean_log", None, None, &rep.mean_log);
        for (a, b, e) in &rep.pairs {
            push("wick_pair", Some(*a), Some(*b), e);
        }
        push("ratio_re", None, None, &rep.ratio_re);
        push("ratio_im", None, None, &rep.ratio_im);
    }
    let t = out.table("log_truncation", &["m", "estimate", "stderr", "theory"]);
    for &m in &exp.truncation_orders {
        let e = log_truncation_error(mix64(cfg.seed()), exp.draws, m)?;
        out.get(t).push(vec![m.to_string(), real(e.estimate), real(e.stderr), real(e.theory)]);
    }
    Ok(())
}

pub fn diagram_check(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let exp = cfg.exp();
    let grid = cfg.r_grid()?.to_vec();
    if exp.points.is_empty() {
        return Err(CliError::validation("experiment.points", "must list at least one point"));
    }
    if exp.alphas.is_empty() {
        return Err(CliError::validation("experiment.alphas", "must list at least one exponent vector"));
    }
    if exp.replicates < 2 {
        return Err(CliError::validation("experiment.replicates", "need at least 2"));
    }
    let points: Vec<Complex64> = exp.points.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    for (i, a) in exp.alphas.iter().enumerate() {
        if a.is_empty() || a.len() > points.len() {
            return Err(CliError::validation(
                format!("experiment.alphas[{i}]"),
                format!("needs between 1 and {} entries", points.len()),
            ));
        }
    }
    let extent = points.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !extent.is_finite() {
        return Err(CliError::validation("experiment.points", "coordinates must be finite"));
    }
    let r_max = grid[grid.len() - 1];
    let rho = (CERTIFICATION_MARGIN * extent * r_max).max(1e-3);

    let t = out.table(
        "diagram",
        &["R", "alphas", "diagram_re", "diagram_im", "mc_mean", "mc_stderr"],
    );
    let mut exact = Vec::new();
    for &r in &grid {
        for a in &exp.alphas {
            exact.push((r, a, diagram_sum(&points[..a.len()], a, r)?));
        }
    }
    // Monte Carlo estimate of the same moment from field samples.
    let per_replicate: Vec<Vec<f64>> = (0..exp.replicates)
        .into_par_iter()
        .map(|k| {
            let s = GefSample::sample(replicate_seed(cfg.seed(), k as u64), rho, cfg.num().tail_tol)?;
            exact
                .iter()
                .map(|(r, a, _)| {
                    a.iter().zip(&points).try_fold(1.0, |acc, (&alpha, z)| {
                        Ok(acc * wick_power(alpha, s.eval_hat(z * r)?.norm_sqr()))
                    })
                })
                .collect::<Result<Vec<f64>, Error>>()
        })
        .collect::<Result<_, _>>()?;
    for (i, (r, a, d)) in exact.iter().enumerate() {
        let column: Vec<f64> = per_replicate.iter().map(|v| v[i]).collect();
        let (m, se) = mean_and_stderr(&column);
        let label = a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        out.get(t).push(vec![real(*r), label, real(d.re), real(d.im), real(m), real(se)]);
    }
    Ok(())
}

pub fn zeros_check(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let exp = cfg.exp();
    let grid = cfg.r_grid()?.to_vec();
    let rows = out.table(
        "zeros",
        &["R", "replicate", "winding", "raw", "oracle", "near_boundary", "warnings"],
    );
    let summary = out.table(
        "zeros_summary",
        &[
            "R",
            "agreement",
            "unexplained",
            "max_quantization_residual",
            "mean_count",
            "mean_count_stderr",
            "expected_count",
        ],
    );
    for &r in &grid {
        let rep = verify_zeros(cfg.seed(), exp.replicates, r, exp.zero_radius, cfg.num().tail_tol, &cfg.num().increment)?;
        for z in &rep.rows {
            out.get(rows).push(vec![
                real(r),
                z.replicate.to_string(),
                opt(z.winding),
                z.raw.map(real).unwrap_or_default(),
                opt(z.oracle),
                z.near_boundary.to_string(),
                z.warnings.clone(),
            ]);
        }
        out.get(summary).push(vec![
            real(r),
            real(rep.agreement),
            rep.unexplained.to_string(),
            real(rep.max_quantization_residual),
            real(rep.mean_count.estimate),
            real(rep.mean_count.stderr),
            real(rep.mean_count.theory),
        ]);
    }
    Ok(())
}
