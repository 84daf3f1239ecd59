//! Subcommand pipelines. Each returns the artifacts it produced and the
//! failures it recorded; completed artifacts are written even when some jobs
//! fail.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};
use sinhrobin_core::ansatz::{build_ansatz, star_norm, Params};
use sinhrobin_core::asymptotics::{find_theta0, h_profile, robin_expansion, v_profile};
use sinhrobin_core::green::{DiskSeries, GreenProvider, GreenSolver, HalfPlaneRobin};
use sinhrobin_core::hamiltonian::{
    boundary_gap, compute_masses, minimize, phi_m, ConcentrationConfig, FeasibleSet, MinimizeOptions, Minimum,
};
use sinhrobin_core::solver::{
    concentration_report, energy, reduced_energy_prediction, relative_energy_gap, residual, solve_with_continuation,
    NewtonOptions, NewtonOutcome, Peak, Status,
};
use sinhrobin_core::{Domain, Error, Grid, Point};

use crate::config::{DomainSpec, GreenSource, RunConfig};
use crate::output::{csv_document, json_document, num, write_artifact, Metadata};

/// Laguerre order for the half-plane calibration recorded in every header.
pub const CALIBRATION_ORDER: usize = 256;

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Numerical failures of individual jobs.
    pub failures: Vec<String>,
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub out_dir: &'a Path,
    pub meta: Metadata,
}

impl Context<'_> {
    fn write(&self, outcome: &mut Outcome, name: &str, contents: &str) -> Result<(), Error> {
        outcome.files.push(write_artifact(self.out_dir, name, contents)?);
        Ok(())
    }
}

/// Header values shared by all artifacts of a run.
pub fn metadata(config: &RunConfig, command: &str) -> Result<Metadata, Error> {
    let hp = HalfPlaneRobin::calibrated(CALIBRATION_ORDER)?;
    Ok(Metadata {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_hash: config.hash(),
        c_gamma: hp.c_gamma(),
        theta0: find_theta0()?.theta0,
        seed: config.seed,
    })
}

/// Runs `f` over `items` on up to `workers` threads and returns the results
/// in input order.
pub fn parallel_map<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| s.spawn(move || (w..items.len()).step_by(workers).map(|i| (i, f(&items[i]))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every item mapped")).collect()
}

fn grid_for(config: &RunConfig, domain: &Domain) -> Result<Arc<Grid>, Error> {
    let g = &config.grid;
    let grid = match g.grading {
        Some(q) => Grid::with_grading(domain.clone(), g.n_radial, g.n_angular, q)?,
        None => Grid::new(domain.clone(), g.n_radial, g.n_angular)?,
    };
    Ok(Arc::new(grid))
}

fn minimize_options(config: &RunConfig) -> MinimizeOptions {
    let o = &config.optimizer;
    MinimizeOptions {
        starts: o.starts,
        seed: config.seed,
        max_evals: o.max_evals,
        xtol: o.xtol,
        ftol: o.ftol,
        boundary_tol: o.boundary_tol,
    }
}

fn feasible_set(config: &RunConfig, domain: &Domain) -> Result<FeasibleSet, Error> {
    let constraint = config.constraint();
    let sep = config.concentration.separation.unwrap_or_else(|| FeasibleSet::default_separation(domain, &constraint));
    FeasibleSet::new(config.concentration.k, sep, constraint)
}

/// Concentration data at one `λ`.
pub struct Prepared {
    pub lambda: f64,
    pub solver: GreenSolver,
    pub config: ConcentrationConfig,
    pub phi: f64,
    pub minimum: Option<Minimum>,
}

fn run_minimizer(config: &RunConfig, domain: &Domain, solver: &GreenSolver) -> Result<Minimum, Error> {
    let spins = config.spins()?;
    let feasible = feasible_set(config, domain)?;
    let options = minimize_options(config);
    match (config.concentration.green, &config.domain) {
        (GreenSource::Series, DomainSpec::Disk { radius }) => {
            let series = DiskSeries::new(*radius, solver.lambda())?;
            minimize(&spins, &feasible, &series, &[], &options)
        }
        _ => minimize(&spins, &feasible, solver, &[], &options),
    }
}

/// Builds the Green solver at `lambda`, finds the concentration points and
/// computes masses.
pub fn prepare(config: &RunConfig, lambda: f64) -> Result<Prepared, Error> {
    let domain = config.domain.build()?;
    let solver = GreenSolver::new(grid_for(config, &domain)?, lambda)?;
    let spins = config.spins()?;
    let (points, minimum) = match &config.concentration.points {
        Some(p) => (p.iter().map(|q| Point::new(q[0], q[1])).collect(), None),
        None => {
            let m = run_minimizer(config, &domain, &solver)?;
            (m.points.clone(), Some(m))
        }
    };
    let cc = ConcentrationConfig::new(points, spins.clone(), lambda)?;
    cc.validate(&domain)?;
    let (cc, _) = compute_masses(&cc, &solver, config.concentration.mass_rule.into(), config.concentration.mass_bound)?;
    let phi = phi_m(&cc.points, &spins, &solver)?;
    Ok(Prepared { lambda, solver, config: cc, phi, minimum })
}

fn failure_text(context: &str, e: &Error) -> String {
    format!("{context}: {e}")
}

/// Splits job errors: configuration problems abort the run, numerical ones
/// are recorded.
fn record<T>(outcome: &mut Outcome, context: &str, r: Result<T, Error>) -> Result<Option<T>, Error> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_config() => Err(e),
        Err(e) => {
            outcome.failures.push(failure_text(context, &e));
            Ok(None)
        }
    }
}

pub fn theta0(ctx: &Context) -> Result<Outcome, Error> {
    let t = find_theta0()?;
    let mut out = Outcome::default();
    let data = json!({ "theta0": t.theta0, "h": t.h, "h_second": t.h_second });
    ctx.write(&mut out, "theta0.json", &json_document(&ctx.meta, data))?;
    Ok(out)
}

fn default_probes(domain: &Domain) -> Vec<Point> {
    let base = match domain {
        Domain::Annulus { inner, outer } => 0.5 * (inner + outer),
        _ => 0.5 * domain.outer_radius(0.0).min(domain.outer_radius(std::f64::consts::PI)),
    };
    [(0.0, 1.0), (2.0, 0.85), (4.1, 0.9), (5.3, 0.95)]
        .iter()
        .map(|&(phi, f): &(f64, f64)| Point::new(base * f * phi.cos(), base * f * phi.sin()))
        .collect()
}

pub fn green_table(ctx: &Context) -> Result<Outcome, Error> {
    let config = ctx.config;
    let domain = config.domain.build()?;
    let probes: Vec<Point> = if config.probes.is_empty() {
        default_probes(&domain)
    } else {
        config.probes.iter().map(|p| Point::new(p[0], p[1])).collect()
    };
    for p in &probes {
        domain.distance_to_boundary(*p)?;
    }
    let grid = grid_for(config, &domain)?;
    let jobs = parallel_map(config.workers, &config.lambda, |&lambda| -> Result<Vec<Vec<String>>, Error> {
        let solver = GreenSolver::new(grid.clone(), lambda)?;
        let mut rows = Vec::new();
        for (i, &src) in probes.iter().enumerate() {
            let gf = solver.solve(src)?;
            for (j, &x) in probes.iter().enumerate() {
                let green = if i == j { f64::NAN } else { gf.value(x)? };
                rows.push(vec![
                    num(lambda),
                    i.to_string(),
                    j.to_string(),
                    num(src.x),
                    num(src.y),
                    num(x.x),
                    num(x.y),
                    num(green),
                    num(gf.regular(x)?),
                ]);
            }
        }
        Ok(rows)
    });
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for (lambda, job) in config.lambda.iter().zip(jobs) {
        if let Some(r) = record(&mut out, &format!("green-table λ={lambda}"), job)? {
            rows.extend(r);
        }
    }
    let header = ["lambda", "source", "target", "source_x", "source_y", "target_x", "target_y", "green", "regular"];
    ctx.write(&mut out, "green_table.csv", &csv_document(&ctx.meta, &header, &rows)?)?;
    Ok(out)
}

pub fn robin_profile(ctx: &Context) -> Result<Outcome, Error> {
    let config = ctx.config;
    let domain = config.domain.build()?;
    let grid = grid_for(config, &domain)?;
    let b = domain.boundary_point(0, 0.0);
    let normal = domain.outward_normal(b)?;
    let kappa = domain.mean_curvature(b)?;
    let [lo, hi] = config.profile.lambda_d;
    let n = config.profile.samples;
    let jobs = parallel_map(config.workers, &config.lambda, |&lambda| -> Result<Vec<Vec<String>>, Error> {
        let solver = GreenSolver::new(grid.clone(), lambda)?;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let theta = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let d = theta / lambda;
            let x = b - normal * d;
            let robin = solver.solve(x)?.robin()?;
            let expansion = robin_expansion(lambda, d, kappa)?;
            rows.push(vec![
                num(lambda),
                num(theta),
                num(d),
                num(x.x),
                num(x.y),
                num(robin),
                num(expansion),
                num((robin - expansion).abs()),
                num(h_profile(theta)?),
                num(v_profile(theta)?),
            ]);
        }
        Ok(rows)
    });
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for (lambda, job) in config.lambda.iter().zip(jobs) {
        if let Some(r) = record(&mut out, &format!("robin-profile λ={lambda}"), job)? {
            rows.extend(r);
        }
    }
    let header = ["lambda", "lambda_d", "d", "x", "y", "robin", "expansion", "error", "h", "v"];
    ctx.write(&mut out, "robin_profile.csv", &csv_document(&ctx.meta, &header, &rows)?)?;
    Ok(out)
}

fn points_json(points: &[Point]) -> Value {
    Value::Array(points.iter().map(|p| json!([p.x, p.y])).collect())
}

pub fn hamiltonian_min(ctx: &Context) -> Result<Outcome, Error> {
    let config = ctx.config;
    let domain = config.domain.build()?;
    let theta0 = find_theta0()?.theta0;
    let spins = config.spins()?;
    let feasible = feasible_set(config, &domain)?;
    let grid = grid_for(config, &domain)?;
    let jobs = parallel_map(config.workers, &config.lambda, |&lambda| -> Result<(Minimum, f64), Error> {
        let solver = GreenSolver::new(grid.clone(), lambda)?;
        let m = run_minimizer(config, &domain, &solver)?;
        let gap =
            boundary_gap(&m.points, &spins, &feasible, &solver as &dyn GreenProvider, config.optimizer.gap_samples)?;
        Ok((m, gap))
    });
    let mut out = Outcome::default();
    let m_pts = spins.len();
    let mut header: Vec<String> =
        ["lambda", "start", "phi", "margin", "evaluations"].iter().map(|s| s.to_string()).collect();
    for j in 0..m_pts {
        header.extend([format!("x{j}"), format!("y{j}"), format!("lambda_d{j}")]);
    }
    let mut rows = Vec::new();
    let mut trace_rows = Vec::new();
    let mut summary = Vec::new();
    for (&lambda, job) in config.lambda.iter().zip(jobs) {
        let Some((m, gap)) = record(&mut out, &format!("hamiltonian-min λ={lambda}"), job)? else {
            continue;
        };
        let lds: Vec<f64> =
            m.points.iter().map(|p| lambda * domain.distance_to_boundary(*p).unwrap_or(f64::NAN)).collect();
        for s in &m.starts {
            let mut row = vec![num(lambda), s.start.to_string(), num(s.phi), num(s.margin), s.evaluations.to_string()];
            for p in &s.points {
                row.extend([num(p.x), num(p.y), num(lambda * domain.distance_to_boundary(*p).unwrap_or(f64::NAN))]);
            }
            rows.push(row);
        }
        for t in &m.trace {
            let mut row = vec![num(lambda), t.start.to_string(), t.iteration.to_string(), num(t.phi), num(t.margin)];
            for p in &t.points {
                row.extend([num(p.x), num(p.y)]);
            }
            trace_rows.push(row);
        }
        summary.push(json!({
            "lambda": lambda,
            "points": points_json(&m.points),
            "phi": m.phi,
            "margin": m.margin,
            "lambda_d": lds,
            "lambda_d_over_theta0": lds.iter().map(|v| v / theta0).collect::<Vec<_>>(),
            "boundary_gap_min": gap,
            "gap_exceeds_minimum": gap > m.phi,
            "best_start": m.best_start,
            "warnings": m.warnings,
        }));
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.write(&mut out, "hamiltonian_min.csv", &csv_document(&ctx.meta, &h, &rows)?)?;
    let mut th: Vec<String> = ["lambda", "start", "iteration", "phi", "margin"].iter().map(|s| s.to_string()).collect();
    for j in 0..m_pts {
        th.extend([format!("x{j}"), format!("y{j}")]);
    }
    let th: Vec<&str> = th.iter().map(String::as_str).collect();
    ctx.write(&mut out, "hamiltonian_trace.csv", &csv_document(&ctx.meta, &th, &trace_rows)?)?;
    ctx.write(&mut out, "hamiltonian_min.json", &json_document(&ctx.meta, Value::Array(summary)))?;
    Ok(out)
}

fn params(config: &RunConfig, eps: f64, lambda: f64) -> Result<Params, Error> {
    let r = &config.regime;
    Params::new(eps, lambda, r.alpha, r.eps0, r.allow_out_of_regime)
}

pub fn ansatz_check(ctx: &Context) -> Result<Outcome, Error> {
    let config = ctx.config;
    let jobs = parallel_map(config.workers, &config.lambda, |&lambda| -> Result<Vec<Vec<String>>, Error> {
        let prep = prepare(config, lambda)?;
        let mut rows = Vec::new();
        for &eps in &config.eps {
            let p = params(config, eps, lambda)?;
            let b = build_ansatz(&prep.solver, &prep.config, p)?;
            let star = b.residual_star_norm(config.sigma)?;
            let scale = eps * lambda.powi(7) * lambda.ln();
            rows.push(vec![
                num(eps),
                num(lambda),
                p.in_regime().to_string(),
                num(p.regime_margin()),
                num(star),
                num(star / scale),
                num(b.corrector_gap()),
                num(prep.phi),
            ]);
        }
        Ok(rows)
    });
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for (lambda, job) in config.lambda.iter().zip(jobs) {
        if let Some(r) = record(&mut out, &format!("ansatz-check λ={lambda}"), job)? {
            rows.extend(r);
        }
    }
    let header = ["eps", "lambda", "in_regime", "regime_margin", "residual_star", "ratio", "corrector_gap", "phi"];
    ctx.write(&mut out, "ansatz_check.csv", &csv_document(&ctx.meta, &header, &rows)?)?;
    Ok(out)
}

/// Everything reported about one solve.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub eps: f64,
    pub lambda: f64,
    pub outcome: NewtonOutcome,
    pub residual_star: f64,
    pub peaks: Result<Vec<Peak>, String>,
    pub energy: f64,
    pub ansatz_energy: f64,
    pub prediction: f64,
    pub energy_gap: f64,
    pub points: Vec<Point>,
    pub spins: Vec<f64>,
    pub grid: Arc<Grid>,
}

/// Solves at `(eps, prep.lambda)` seeded by the ansatz.
pub fn solve_one(config: &RunConfig, prep: &Prepared, eps: f64) -> Result<SolveSummary, Error> {
    let lambda = prep.lambda;
    let p = params(config, eps, lambda)?;
    let bundle = build_ansatz(&prep.solver, &prep.config, p)?;
    let options = NewtonOptions { tol: config.newton.tol, max_iter: config.newton.max_iter, ..Default::default() };
    let seed_at = |e: f64| -> Result<_, Error> {
        if e == eps {
            bundle.grid_seed()
        } else {
            let q = Params::new(e, lambda, config.regime.alpha, config.regime.eps0, true)?;
            build_ansatz(&prep.solver, &prep.config, q)?.grid_seed()
        }
    };
    let op = prep.solver.operator();
    let outcome = solve_with_continuation(op, eps, &seed_at, &options)?;
    let grid = op.grid();
    let rho = p.rho();
    let mut scaled = residual(op, eps, &outcome.solution).scaled(rho * rho);
    for &k in grid.boundary_index() {
        scaled[k] = 0.0;
    }
    let residual_star = star_norm(grid, &scaled, &prep.config.points, rho, config.sigma)?;
    let peaks = if outcome.converged() {
        concentration_report(grid, &outcome.solution, &prep.config).map_err(|e| e.to_string())
    } else {
        Err("not converged".into())
    };
    let m = prep.config.points.len();
    let ansatz_energy = bundle.energy()?;
    let prediction = reduced_energy_prediction(m, eps, prep.phi);
    Ok(SolveSummary {
        eps,
        lambda,
        residual_star,
        peaks,
        energy: energy(op, eps, &outcome.solution),
        ansatz_energy,
        prediction,
        energy_gap: relative_energy_gap(m, eps, ansatz_energy, prediction),
        points: prep.config.points.clone(),
        spins: prep.config.spins.values().iter().map(|&a| a as f64).collect(),
        grid: op.grid_arc(),
        outcome,
    })
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::Diverged => "diverged",
        Status::MaxIterations => "max_iterations",
    }
}

fn summary_json(s: &SolveSummary) -> Value {
    let o = &s.outcome;
    let peaks = match &s.peaks {
        Ok(p) => Value::Array(
            p.iter()
                .map(|q| {
                    json!({
                        "bubble": q.bubble,
                        "node": q.node,
                        "position": [q.position.x, q.position.y],
                        "value": q.value,
                        "lambda_d": q.lambda_d,
                        "offset": q.offset,
                        "offset_cells": q.cells,
                    })
                })
                .collect(),
        ),
        Err(e) => json!({ "error": e }),
    };
    json!({
        "eps": s.eps,
        "lambda": s.lambda,
        "points": points_json(&s.points),
        "spins": s.spins,
        "status": status_name(o.status),
        "converged": o.converged(),
        "iterations": o.iterations,
        "seed_residual_inf": o.seed_residual,
        "residual_inf": o.residual,
        "residual_star": s.residual_star,
        "continuation": o.continuation,
        "sup_abs_u": o.solution.sup_norm(),
        "peaks": peaks,
        "energy_solution": s.energy,
        "energy_ansatz": s.ansatz_energy,
        "prediction": s.prediction,
        "energy_gap": s.energy_gap,
        "trace": o.trace.iter().map(|t| json!([t.iteration, t.residual, t.step])).collect::<Vec<_>>(),
    })
}

fn solve_jobs(config: &RunConfig) -> Vec<Result<Vec<Result<SolveSummary, Error>>, Error>> {
    parallel_map(config.workers, &config.lambda, |&lambda| {
        let prep = prepare(config, lambda)?;
        Ok(config.eps.iter().map(|&eps| solve_one(config, &prep, eps)).collect())
    })
}

pub fn solve(ctx: &Context) -> Result<Outcome, Error> {
    let config = ctx.config;
    let mut out = Outcome::default();
    let jobs = solve_jobs(config);
    for (i, (lambda, job)) in config.lambda.iter().zip(jobs).enumerate() {
        let Some(list) = record(&mut out, &format!("solve λ={lambda}"), job)? else {
            continue;
        };
        for (j, (eps, r)) in config.eps.iter().zip(list).enumerate() {
            let Some(s) = record(&mut out, &format!("solve λ={lambda} ε={eps}"), r)? else {
                continue;
            };
            if !s.outcome.converged() {
                out.failures.push(format!("solve λ={lambda} ε={eps}: {}", status_name(s.outcome.status)));
            } else if let Err(e) = &s.peaks {
                out.failures.push(format!("solve λ={lambda} ε={eps}: {e}"));
            }
            ctx.write(&mut out, &format!("solve_{i}_{j}.json"), &json_document(&ctx.meta, summary_json(&s)))?;
            let rows: Vec<Vec<String>> = s
                .grid
                .nodes()
                .iter()
                .zip(s.outcome.solution.values())
                .map(|(x, u)| vec![num(x.x), num(x.y), num(*u)])
                .collect();
            ctx.write(&mut out, &format!("solution_{i}_{j}.csv"), &csv_document(&ctx.meta, &["x", "y", "u"], &rows)?)?;
        }
    }
    Ok(out)
}

pub fn sweep(ctx: &Context) -> Result<Outcome, Error> {
    let config = ctx.config;
    let mut out = Outcome::default();
    let jobs = solve_jobs(config);
    let mut rows = Vec::new();
    let blank = |eps: f64, lambda: f64, status: &str| {
        vec![
            num(eps),
            num(lambda),
            "false".into(),
            status.into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]
    };
    for (lambda, job) in config.lambda.iter().zip(jobs) {
        let list = match job {
            Ok(l) => l,
            Err(e) if e.is_config() => return Err(e),
            Err(e) => {
                out.failures.push(failure_text(&format!("sweep λ={lambda}"), &e));
                for &eps in &config.eps {
                    rows.push(blank(eps, *lambda, "error"));
                }
                continue;
            }
        };
        for (&eps, r) in config.eps.iter().zip(list) {
            let s = match r {
                Ok(s) => s,
                Err(e) if e.is_config() => return Err(e),
                Err(e) => {
                    out.failures.push(failure_text(&format!("sweep λ={lambda} ε={eps}"), &e));
                    rows.push(blank(eps, *lambda, "error"));
                    continue;
                }
            };
            let o = &s.outcome;
            let ok = o.converged() && s.peaks.is_ok();
            if !ok {
                out.failures.push(format!("sweep λ={lambda} ε={eps}: {}", status_name(o.status)));
            }
            let lds = match &s.peaks {
                Ok(p) => p.iter().map(|q| num(q.lambda_d)).collect::<Vec<_>>().join(";"),
                Err(_) => String::new(),
            };
            rows.push(vec![
                num(eps),
                num(*lambda),
                ok.to_string(),
                status_name(o.status).into(),
                o.iterations.to_string(),
                num(o.solution.sup_norm()),
                lds,
                num(s.energy),
                num(s.ansatz_energy),
                num(s.prediction),
                num(s.energy_gap),
            ]);
        }
    }
    let header = [
        "eps",
        "lambda",
        "converged",
        "status",
        "iterations",
        "sup_abs_u",
        "lambda_d_peaks",
        "energy_solution",
        "energy_ansatz",
        "prediction",
        "energy_gap",
    ];
    ctx.write(&mut out, "sweep.csv", &csv_document(&ctx.meta, &header, &rows)?)?;
    Ok(out)
}
