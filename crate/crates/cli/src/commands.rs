//! One function per experiment. Each returns its results, a CSV table and the declared checks.

use cusplab_core::analysis::{
    counterexample_report, inf_sup_study, korn_study, lifted_korn_transfer_check, LevelConstant,
};
use cusplab_core::bogovskii::BumpFunction;
use cusplab_core::cuspdiv::{hardy_check, solve_divergence_cusp, DivSolveReport, SolveParams};
use cusplab_core::quadrature;
use cusplab_core::weights::{admissible_beta_interval, is_muckenhoupt_ap};
use cusplab_core::{CuspDomain, Error, Point, QuadratureRule, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Density, Expect, Integrand, RunConfig};
use crate::report::{num, Check, Table};
use crate::CliError;

pub struct Outcome {
    pub results: Value,
    pub table: Table,
    pub checks: Vec<Check>,
}

/// Errors from the numerical core: invalid inputs are configuration errors, the rest are
/// numerical failures.
pub fn core_error(e: Error) -> CliError {
    match e {
        Error::Numerical(_)
        | Error::Evaluation { .. }
        | Error::Assembly(_)
        | Error::Weight(_)
        | Error::Stencil { .. }
        | Error::SingularPoint
        | Error::NotMeanZero { .. }
        | Error::ApViolation { .. } => CliError::Numerical(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn density(domain: &CuspDomain, kind: Density, rule: &QuadratureRule) -> Result<ScalarField, CliError> {
    let raw = match kind {
        Density::Linear => ScalarField::new(|p| p.x()),
        Density::Quadratic => ScalarField::new(|p| p.x() * p.x() + p.y()[0]),
        Density::OddBump => {
            let center = Point::new(0.65, &vec![0.0; domain.k()], &vec![0.5; domain.m()]);
            let radius = (0.6 * domain.boundary_clearance(&center)).min(0.15);
            let b = BumpFunction::new(center, radius).map_err(core_error)?;
            return Ok(ScalarField::new(move |p| b.gradient(p)[1]));
        }
    };
    quadrature::project_mean_zero(rule, &raw, 0.0).map_err(core_error)
}

pub fn divsolve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.cusp_domain()?;
    let c = &cfg.divsolve;
    let params = SolveParams {
        order: cfg.quadrature.order,
        grading: cfg.quadrature.grading,
        ref_grading: c.ref_grading,
        norm_order: c.norm_order,
        probes: c.probes,
        seed: c.seed,
        h_fd: c.h_fd,
    };
    let rule = QuadratureRule::new(&d, params.order, params.grading).map_err(core_error)?;
    let f = density(&d, c.density, &rule)?;
    let report = solve_divergence_cusp(&d, &f, c.beta, c.eta, c.p, &params).map_err(core_error)?.report;
    let mut table = Table::new(&DivSolveReport::csv_header().split(',').collect::<Vec<_>>());
    table.push(report.csv_row().split(',').map(str::to_string).collect());
    let checks = vec![
        Check::new(
            "divergence residual",
            report.residual_max <= cfg.tolerances.residual,
            format!("{:e} <= {:e}", report.residual_max, cfg.tolerances.residual),
        ),
        Check::new(
            "norm ratio finite",
            report.ratio.is_finite() && report.ratio > 0.0,
            format!("ratio {}", report.ratio),
        ),
    ];
    Ok(Outcome {
        results: report.to_json(),
        table,
        checks,
    })
}

/// Seeded interior bumps, each inside the domain with margin.
fn random_bumps(d: &CuspDomain, count: usize, seed: u64) -> Result<Vec<BumpFunction>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: f64 = rng.gen_range(0.4..0.85);
            let y: Vec<f64> = (0..d.k()).map(|_| rng.gen_range(-0.4..0.4) * d.cross_radius(x) / (d.k() as f64).sqrt()).collect();
            let z: Vec<f64> = (0..d.m()).map(|_| rng.gen_range(0.3..0.7)).collect();
            let c = Point::new(x, &y, &z);
            let r = rng.gen_range(0.4..0.8) * d.boundary_clearance(&c);
            BumpFunction::new(c, r).map_err(core_error)
        })
        .collect()
}

pub fn hardy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.cusp_domain()?;
    let rule = QuadratureRule::new(&d, cfg.quadrature.order, cfg.quadrature.grading).map_err(core_error)?;
    let slack = cfg.tolerances.hardy_slack;
    let mut table = Table::new(&["bump", "kappa", "p", "lhs", "rhs", "bound", "ratio", "status"]);
    let (mut cases, mut violations, mut degenerate) = (0usize, 0usize, 0usize);
    let mut worst: f64 = 0.0;
    for (i, b) in random_bumps(&d, cfg.hardy.bumps, cfg.hardy.seed)?.iter().enumerate() {
        let v = b.to_field();
        for &kappa in &cfg.hardy.kappa {
            for &p in &cfg.hardy.p {
                match hardy_check(&d, &v, kappa, p, &rule) {
                    Ok(h) => {
                        cases += 1;
                        let ok = h.lhs <= h.bound * h.rhs * (1.0 + slack);
                        violations += usize::from(!ok);
                        if h.rhs > 0.0 {
                            worst = worst.max(h.lhs / (h.bound * h.rhs));
                        }
                        table.push(vec![
                            i.to_string(),
                            num(kappa),
                            num(p),
                            num(h.lhs),
                            num(h.rhs),
                            num(h.bound),
                            num(h.ratio),
                            if ok { "ok" } else { "violated" }.into(),
                        ]);
                    }
                    Err(Error::DegenerateConstant { .. }) => {
                        degenerate += 1;
                        let nan = "nan".to_string();
                        table.push(vec![i.to_string(), num(kappa), num(p), nan.clone(), nan.clone(), nan.clone(), nan, "degenerate".into()]);
                    }
                    Err(e) => return Err(core_error(e)),
                }
            }
        }
    }
    let checks = vec![Check::new(
        "hardy bound",
        violations == 0,
        format!("{cases} cases, {violations} violations, worst lhs/(C rhs) {worst:.4}, {degenerate} degenerate pairs skipped"),
    )];
    Ok(Outcome {
        results: json!({ "cases": cases, "violations": violations, "degenerate": degenerate, "worst_ratio_to_bound": worst }),
        table,
        checks,
    })
}

fn level_table(rows: &[LevelConstant]) -> Table {
    let mut t = Table::new(&["level", "cells", "eps_mesh", "constant"]);
    for r in rows {
        t.push(vec![r.level.to_string(), r.cells.to_string(), num(r.eps_mesh), num(r.constant)]);
    }
    t
}

fn level_checks(rows: &[LevelConstant], expect: Expect, stability: f64) -> Vec<Check> {
    let v: Vec<f64> = rows.iter().map(|r| r.constant).collect();
    let mut checks = vec![Check::new(
        "constants positive",
        v.iter().all(|&c| c > 0.0 && c.is_finite()),
        format!("{v:?}"),
    )];
    let last = if v.len() >= 2 { v[v.len() - 1] / v[v.len() - 2] } else { 1.0 };
    match expect {
        Expect::Stable => checks.push(Check::new(
            "stable over last two levels",
            v.len() >= 2 && (last - 1.0).abs() <= stability,
            format!("ratio {last:.4}, allowed change {stability}"),
        )),
        Expect::Decreasing => checks.push(Check::new(
            "strictly decreasing",
            v.len() >= 2 && v.windows(2).all(|w| w[1] < w[0]),
            format!("{v:?}"),
        )),
        Expect::Increasing => checks.push(Check::new(
            "strictly increasing",
            v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]),
            format!("{v:?}"),
        )),
        Expect::Any => {}
    }
    checks
}

pub fn infsup(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.cusp_domain()?;
    let c = &cfg.infsup;
    let w = c.weight_exponent.unwrap_or(2.0 * (d.gamma() - 1.0));
    let report = inf_sup_study(&d, c.levels, w, &c.mesh).map_err(core_error)?;
    Ok(Outcome {
        table: level_table(&report.levels),
        checks: level_checks(&report.levels, c.expect, cfg.tolerances.stability),
        results: serde_json::to_value(&report).expect("report serializes"),
    })
}

pub fn korn(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.cusp_domain()?;
    let c = &cfg.korn;
    let report = korn_study(&d, c.levels, c.beta, &c.disk, c.weighting, &c.mesh).map_err(core_error)?;
    Ok(Outcome {
        table: level_table(&report.levels),
        checks: level_checks(&report.levels, c.expect, cfg.tolerances.stability),
        results: serde_json::to_value(&report).expect("report serializes"),
    })
}

pub fn counterexample(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.cusp_domain()?;
    let r = counterexample_report(&d, &cfg.counterexample).map_err(core_error)?;
    let t = &cfg.tolerances;
    let close = |name: &str, got: f64, want: f64, tol: f64| {
        Check::new(name, (got - want).abs() <= tol, format!("{got:.6} vs {want:.6} (tol {tol:e})"))
    };
    let checks = vec![
        close("int x^-2 = 2", r.integral_inv_x2, 2.0, t.singular_mass),
        close("||2y/x^3||^2 = 8/3", r.flux_l2_sq, 8.0 / 3.0, t.oracle),
        close("||p||^2 with weight |x|^2 = 592/315", r.weighted_l2_sq, 592.0 / 315.0, t.oracle),
        Check::new(
            "truncated L2 norm grows at least 5x from eps=1e-2 to 1e-3",
            r.truncated_growth >= 5.0,
            format!("x{:.3}", r.truncated_growth),
        ),
        Check::new(
            "weak derivative identity",
            r.weak_identity_max_rel <= t.weak_identity,
            format!("{:e} <= {:e}", r.weak_identity_max_rel, t.weak_identity),
        ),
        close("r0 = 6/5", r.r0, 1.2, t.identity),
        Check::new(
            "int |p|^r finite under refinement",
            r.lr_fine.is_finite() && r.lr_rel_change <= t.oracle,
            format!("{:.6} / {:.6} / {:.6}", r.lr_coarse, r.lr_mid, r.lr_fine),
        ),
    ];
    let results = serde_json::to_value(&r).expect("report serializes");
    let mut table = Table::new(&["quantity", "value"]);
    for (k, v) in results.as_object().expect("object") {
        table.push(vec![k.clone(), num(v.as_f64().unwrap_or(f64::NAN))]);
    }
    Ok(Outcome { results, table, checks })
}

pub fn apcheck(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.cusp_domain()?;
    let (n, m) = (d.n(), d.m());
    let c = &cfg.apcheck;
    let codim = (n - m) as f64;
    let mut table = Table::new(&["mu", "p", "n", "m", "in_ap"]);
    let (mut points, mut mismatches) = (0usize, 0usize);
    for &p in &c.p {
        let (lo, hi) = (-codim, codim * (p - 1.0));
        let grid = (0..c.mu_steps).map(|i| c.mu_min + (c.mu_max - c.mu_min) * i as f64 / (c.mu_steps - 1) as f64);
        for mu in grid.chain([lo, hi]) {
            let got = is_muckenhoupt_ap(mu, p, n, m).map_err(core_error)?;
            // d^mu and its dual weight d^(-mu/(p-1)) locally integrable
            let want = mu > -codim && -mu / (p - 1.0) > -codim;
            mismatches += usize::from(got != want);
            points += 1;
            table.push(vec![num(mu), num(p), n.to_string(), m.to_string(), got.to_string()]);
        }
    }
    Ok(Outcome {
        results: json!({ "points": points, "mismatches": mismatches, "n": n, "m": m }),
        table,
        checks: vec![Check::new(
            "classifier matches the interval, endpoints excluded",
            mismatches == 0,
            format!("{points} points, {mismatches} mismatches"),
        )],
    })
}

pub fn scan_beta(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.cusp_domain()?;
    let c = &cfg.scan_beta;
    let (lo, hi) = admissible_beta_interval(d.gamma(), c.p, d.n(), d.m()).map_err(core_error)?;
    if lo + c.delta >= hi - c.delta {
        return Err(CliError::Config(format!(
            "key `scan_beta.delta`: {} leaves no interior points in ({lo}, {hi})",
            c.delta
        )));
    }
    let params = SolveParams {
        order: c.order,
        grading: cfg.quadrature.grading,
        norm_order: c.norm_order,
        probes: cfg.divsolve.probes,
        seed: cfg.divsolve.seed,
        h_fd: cfg.divsolve.h_fd,
        ref_grading: cfg.divsolve.ref_grading,
    };
    let rule = QuadratureRule::new(&d, params.order, params.grading).map_err(core_error)?;
    let f = density(&d, c.density, &rule)?;
    let (a, b) = (lo + c.delta, hi - c.delta);
    let interior: Vec<f64> = if c.steps == 1 {
        vec![0.5 * (a + b)]
    } else {
        (0..c.steps).map(|i| a + (b - a) * i as f64 / (c.steps - 1) as f64).collect()
    };
    let mut table = Table::new(&["beta", "ratio", "residual", "status"]);
    let (mut finite, mut rejected) = (true, 0usize);
    let mut rows = Vec::new();
    for beta in std::iter::once(lo).chain(interior.iter().copied()).chain(std::iter::once(hi)) {
        let eta = beta + d.gamma() - 1.0;
        match solve_divergence_cusp(&d, &f, beta, eta, c.p, &params) {
            Ok(sol) => {
                let r = sol.report;
                finite &= r.ratio.is_finite();
                rows.push(json!({ "beta": beta, "ratio": r.ratio }));
                table.push(vec![num(beta), num(r.ratio), num(r.residual_max), "ok".into()]);
            }
            Err(Error::BetaOutOfRange { .. }) => {
                rejected += 1;
                table.push(vec![num(beta), "nan".into(), "nan".into(), "out_of_range".into()]);
            }
            Err(e) => return Err(core_error(e)),
        }
    }
    Ok(Outcome {
        results: json!({ "lo": lo, "hi": hi, "samples": rows, "endpoints_rejected": rejected }),
        table,
        checks: vec![
            Check::new("ratios finite inside the interval", finite && rows.len() == interior.len(), format!("{} samples", rows.len())),
            Check::new("endpoints rejected", rejected == 2, format!("{rejected} of 2")),
        ],
    })
}

pub fn lift_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.cusp_domain()?;
    let c = &cfg.lift_check;
    let g = match c.integrand {
        Integrand::One => ScalarField::constant(1.0),
        Integrand::Linear => ScalarField::new(|q| q.x() + q.y()[0]),
        Integrand::InvSqrt => ScalarField::new(|q| q.x().powf(-0.5)),
        Integrand::Oscillating => ScalarField::new(|q| (5.0 * q.x()).sin() - q.y()[0]),
    };
    let (lhs, rhs) = lifted_korn_transfer_check(&d, c.n_prime, c.s, c.p, &g, cfg.quadrature.order, cfg.quadrature.grading)
        .map_err(core_error)?;
    let gap = if rhs != 0.0 { (lhs - rhs).abs() / rhs.abs() } else { (lhs - rhs).abs() };
    let mut table = Table::new(&["n_prime", "s", "p", "lhs", "rhs", "rel_gap"]);
    table.push(vec![c.n_prime.to_string(), num(c.s), num(c.p), num(lhs), num(rhs), num(gap)]);
    Ok(Outcome {
        results: json!({ "lhs": lhs, "rhs": rhs, "rel_gap": gap }),
        table,
        checks: vec![Check::new(
            "lifted-measure identity",
            gap <= cfg.tolerances.lifted,
            format!("{gap:e} <= {:e}", cfg.tolerances.lifted),
        )],
    })
}
