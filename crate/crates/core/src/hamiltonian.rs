//! Signed Hamiltonian `φ_m`, the mass rule and constrained minimization.
//!
//! `φ_m(ξ) = Σ_j [H(ξ_j, ξ_j) + Σ_{i≠j} a_i a_j G(ξ_i, ξ_j)]`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::find_theta0;
use crate::geometry::{Domain, Point};
use crate::green::{GreenProvider, InteractionTable};
use crate::{Error, Result};

/// Spins `a_j ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(values: &[i64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("at least one concentration point is required".into()));
        }
        let mut out = Vec::with_capacity(values.len());
        for &v in values {
            if v != 1 && v != -1 {
                return Err(Error::Config(format!("spin must be ±1, got {v}")));
            }
            out.push(v as i8);
        }
        Ok(SpinConfig(out))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn get(&self, j: usize) -> f64 {
        self.0[j] as f64
    }
    pub fn values(&self) -> &[i8] {
        &self.0
    }
}

/// Interaction weighting in the mass rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassRule {
    /// `log 8μ_j² = H(ξ_j,ξ_j) + Σ_{i≠j} a_i G(ξ_i,ξ_j) + 4 log λ`.
    #[default]
    AsWritten,
    /// The interaction weighted by `a_i a_j`, as in the energy pairing.
    SpinProduct,
}

/// Concentration points, spins and masses.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationConfig {
    pub points: Vec<Point>,
    pub spins: SpinConfig,
    pub lambda: f64,
    /// `μ_j`, present once computed.
    pub masses: Option<Vec<f64>>,
}

impl ConcentrationConfig {
    pub fn new(points: Vec<Point>, spins: SpinConfig, lambda: f64) -> Result<Self> {
        if points.len() != spins.len() {
            return Err(Error::Config(format!("{} points but {} spins", points.len(), spins.len())));
        }
        Ok(ConcentrationConfig { points, spins, lambda, masses: None })
    }

    /// Checks that the points are interior and pairwise distinct.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        for p in &self.points {
            if domain.distance_to_boundary(*p)? <= 0.0 {
                return Err(Error::OutsideDomain { x: p.x, y: p.y });
            }
        }
        for i in 0..self.points.len() {
            for j in 0..i {
                if self.points[i] == self.points[j] {
                    return Err(Error::Singularity("coincident concentration points"));
                }
            }
        }
        Ok(())
    }
}

fn check_points(provider: &dyn GreenProvider, points: &[Point]) -> Result<()> {
    for i in 0..points.len() {
        provider.domain().distance_to_boundary(points[i])?;
        for j in 0..i {
            if points[i] == points[j] {
                return Err(Error::Singularity("coincident concentration points"));
            }
        }
    }
    Ok(())
}

/// `φ_m` from a precomputed table.
pub fn phi_from_table(table: &InteractionTable, spins: &SpinConfig) -> f64 {
    let m = table.robin.len();
    let mut total = 0.0;
    for j in 0..m {
        total += table.robin[j];
        for i in 0..m {
            if i != j {
                total += spins.get(i) * spins.get(j) * table.green[i][j];
            }
        }
    }
    total
}

pub fn phi_m(points: &[Point], spins: &SpinConfig, provider: &dyn GreenProvider) -> Result<f64> {
    if points.len() != spins.len() {
        return Err(Error::Config(format!("{} points but {} spins", points.len(), spins.len())));
    }
    check_points(provider, points)?;
    Ok(phi_from_table(&provider.table(points)?, spins))
}

/// Masses together with the right-hand sides `log 8μ_j²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub masses: Vec<f64>,
    pub log_8mu2: Vec<f64>,
    /// Indices whose mass leaves `(1/C, C)`.
    pub out_of_bounds: Vec<usize>,
}

/// Largest admissible `log 8μ²` before the mass overflows.
const MASS_RHS_LIMIT: f64 = 700.0;

pub fn masses_from_table(
    table: &InteractionTable,
    spins: &SpinConfig,
    lambda: f64,
    rule: MassRule,
    bound: f64,
) -> Result<MassReport> {
    let m = table.robin.len();
    let mut masses = Vec::with_capacity(m);
    let mut rhs_all = Vec::with_capacity(m);
    let mut out = Vec::new();
    for j in 0..m {
        let mut rhs = table.robin[j] + 4.0 * lambda.ln();
        for i in 0..m {
            if i != j {
                let w = match rule {
                    MassRule::AsWritten => spins.get(i),
                    MassRule::SpinProduct => spins.get(i) * spins.get(j),
                };
                rhs += w * table.green[i][j];
            }
        }
        if !rhs.is_finite() || rhs > MASS_RHS_LIMIT {
            return Err(Error::MassOverflow { index: j, rhs });
        }
        let mu = (rhs.exp() / 8.0).sqrt();
        if !(mu > 1.0 / bound && mu < bound) {
            out.push(j);
        }
        masses.push(mu);
        rhs_all.push(rhs);
    }
    Ok(MassReport { masses, log_8mu2: rhs_all, out_of_bounds: out })
}

/// Applies the mass rule. `bound` is the constant `C` of `C⁻¹ ≤ μ_j ≤ C`.
pub fn compute_masses(
    config: &ConcentrationConfig,
    provider: &dyn GreenProvider,
    rule: MassRule,
    bound: f64,
) -> Result<(ConcentrationConfig, MassReport)> {
    check_points(provider, &config.points)?;
    let table = provider.table(&config.points)?;
    let report = masses_from_table(&table, &config.spins, config.lambda, rule, bound)?;
    let mut out = config.clone();
    out.masses = Some(report.masses.clone());
    Ok((out, report))
}

/// Central differences with step `10⁻³·d_min` per coordinate.
pub fn grad_phi_m(points: &[Point], spins: &SpinConfig, provider: &dyn GreenProvider) -> Result<Vec<Point>> {
    let domain = provider.domain();
    let mut d_min = f64::INFINITY;
    for p in points {
        d_min = d_min.min(domain.distance_to_boundary(*p)?);
    }
    let mut grad = Vec::with_capacity(points.len());
    for j in 0..points.len() {
        let mut g = [0.0; 2];
        for (c, gc) in g.iter_mut().enumerate() {
            let mut h = 1e-3 * d_min;
            loop {
                if h < 1e-8 {
                    return Err(Error::Resolution(format!("difference step below 1e-8 at point {j}")));
                }
                let e = if c == 0 { Point::new(h, 0.0) } else { Point::new(0.0, h) };
                let (mut plus, mut minus) = (points.to_vec(), points.to_vec());
                plus[j] = points[j] + e;
                minus[j] = points[j] - e;
                let inside = |q: Point| domain.distance_to_boundary(q).map(|d| d > 0.0).unwrap_or(false);
                if !inside(plus[j]) || !inside(minus[j]) {
                    h *= 0.5;
                    continue;
                }
                *gc = (phi_m(&plus, spins, provider)? - phi_m(&minus, spins, provider)?) / (2.0 * h);
                break;
            }
        }
        grad.push(Point::new(g[0], g[1]));
    }
    Ok(grad)
}

/// Structural constraint on the concentration points.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Free,
    /// All points on the x-axis.
    Axis,
    /// Point `j` must be closest to boundary component `components[j]`.
    PerComponent(Vec<usize>),
}

/// `{λd(ξ_j) ∈ (1/K, K), |ξ_i − ξ_j| > δ_sep}` with a structural constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    pub k: f64,
    pub separation: f64,
    pub constraint: Constraint,
}

impl FeasibleSet {
    pub fn new(k: f64, separation: f64, constraint: Constraint) -> Result<Self> {
        if !(k > 1.0 && k.is_finite()) {
            return Err(Error::Config(format!("feasibility constant K must exceed 1, got {k}")));
        }
        if !(separation >= 0.0 && separation.is_finite()) {
            return Err(Error::Config(format!("separation must be nonnegative, got {separation}")));
        }
        Ok(FeasibleSet { k, separation, constraint })
    }

    /// Default separation: a quarter of the axis chord in axis mode, a
    /// quarter of the smallest gap between boundary components otherwise.
    pub fn default_separation(domain: &Domain, constraint: &Constraint) -> f64 {
        match (constraint, domain) {
            (Constraint::Axis, _) => (domain.outer_radius(0.0) + domain.outer_radius(PI)) / 4.0,
            (_, Domain::Annulus { inner, outer }) => (outer - inner) / 4.0,
            _ => (domain.outer_radius(0.0) + domain.outer_radius(PI)) / 4.0,
        }
    }

    /// Number of free parameters for `m` points.
    pub fn dimension(&self, m: usize) -> usize {
        match self.constraint {
            Constraint::Axis => m,
            _ => 2 * m,
        }
    }

    pub fn decode(&self, params: &[f64]) -> Vec<Point> {
        match self.constraint {
            Constraint::Axis => params.iter().map(|&t| Point::new(t, 0.0)).collect(),
            _ => params.chunks(2).map(|c| Point::new(c[0], c[1])).collect(),
        }
    }

    pub fn encode(&self, points: &[Point]) -> Vec<f64> {
        match self.constraint {
            Constraint::Axis => points.iter().map(|p| p.x).collect(),
            _ => points.iter().flat_map(|p| [p.x, p.y]).collect(),
        }
    }

    /// Smallest logarithmic slack of the membership conditions; positive
    /// exactly on the open feasible set, `−∞` outside the domain.
    pub fn margin(&self, domain: &Domain, lambda: f64, points: &[Point]) -> f64 {
        let mut slack = f64::INFINITY;
        let lk = self.k.ln();
        for (j, p) in points.iter().enumerate() {
            if let Constraint::Axis = self.constraint {
                if p.y != 0.0 {
                    return f64::NEG_INFINITY;
                }
            }
            let proj = match domain.boundary_projection(*p) {
                Ok(proj) if proj.distance > 0.0 => proj,
                _ => return f64::NEG_INFINITY,
            };
            if let Constraint::PerComponent(c) = &self.constraint {
                if c.get(j) != Some(&proj.component) {
                    return f64::NEG_INFINITY;
                }
            }
            let t = (lambda * proj.distance).ln();
            slack = slack.min(t + lk).min(lk - t);
        }
        if self.separation > 0.0 {
            for i in 0..points.len() {
                for j in 0..i {
                    slack = slack.min((points[i].dist(points[j]) / self.separation).ln());
                }
            }
        }
        slack
    }

    pub fn contains(&self, domain: &Domain, lambda: f64, points: &[Point]) -> bool {
        self.margin(domain, lambda, points) > 0.0
    }
}

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_evals: usize,
    /// Convergence tolerance on the simplex size, relative to `1/λ`.
    pub xtol: f64,
    pub ftol: f64,
    /// Log-slack below which a minimizer counts as on the boundary.
    pub boundary_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { starts: 8, seed: 0, max_evals: 600, xtol: 1e-6, ftol: 1e-11, boundary_tol: 1e-3 }
    }
}

/// One accepted optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub start: usize,
    pub iteration: usize,
    pub points: Vec<Point>,
    pub phi: f64,
    pub margin: f64,
}

/// Result of one start.
#[derive(Debug, Clone, PartialEq)]
pub struct StartResult {
    pub start: usize,
    pub points: Vec<Point>,
    pub phi: f64,
    pub margin: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
}

/// Best of all starts with the merged trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub points: Vec<Point>,
    pub phi: f64,
    pub margin: f64,
    pub best_start: usize,
    pub trace: Vec<TraceEntry>,
    pub starts: Vec<StartResult>,
    pub warnings: Vec<String>,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Point at depth `depth` along the inward normal fiber of the boundary
/// point of `component` at polar angle `phi`.
fn fiber_point(domain: &Domain, component: usize, phi: f64, depth: f64) -> Result<Point> {
    let b = domain.boundary_point(component, phi);
    let n = domain.outward_normal(b)?;
    Ok(b - n * depth)
}

/// Point on the x-axis at distance `depth` from the boundary, near the end
/// at `x > 0` when `right`.
fn axis_point(domain: &Domain, right: bool, depth: f64) -> Result<Point> {
    let end = if right { domain.outer_radius(0.0) } else { -domain.outer_radius(PI) };
    let dir = if right { -1.0 } else { 1.0 };
    // distance grows along the axis until the nearest boundary point moves
    let (mut lo, mut hi) = (0.0, end.abs());
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let d = domain.distance_to_boundary(Point::new(end + dir * mid, 0.0))?;
        if d < depth {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Point::new(end + dir * 0.5 * (lo + hi), 0.0))
}

/// Multi-start seeds on normal fibers at `λd = θ₀`.
pub fn default_seeds(
    domain: &Domain,
    feasible: &FeasibleSet,
    lambda: f64,
    m: usize,
    options: &MinimizeOptions,
) -> Result<Vec<Vec<Point>>> {
    let theta0 = find_theta0()?.theta0;
    let depth = theta0 / lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut seeds = Vec::with_capacity(options.starts);
    for s in 0..options.starts {
        let jitter = if s == 0 { 0.0 } else { 1.0 };
        let mut pts = Vec::with_capacity(m);
        for j in 0..m {
            let scale = 1.0 + jitter * 0.2 * (uniform(&mut rng) - 0.5);
            match &feasible.constraint {
                Constraint::Axis => {
                    // alternate ends, and swap the pattern on odd starts
                    let right = (j + s) % 2 == 1;
                    pts.push(axis_point(domain, right, depth * scale)?);
                }
                Constraint::Free => {
                    let phi = TAU * (j as f64 / m as f64 + s as f64 / (options.starts * m) as f64)
                        + jitter * 0.1 * (uniform(&mut rng) - 0.5);
                    pts.push(fiber_point(domain, 0, phi, depth * scale)?);
                }
                Constraint::PerComponent(c) => {
                    let comp = *c
                        .get(j)
                        .ok_or_else(|| Error::Config(format!("no boundary component assigned to point {j}")))?;
                    let phi = TAU * s as f64 / options.starts as f64 + jitter * 0.1 * (uniform(&mut rng) - 0.5);
                    pts.push(fiber_point(domain, comp, phi, depth * scale)?);
                }
            }
        }
        seeds.push(pts);
    }
    Ok(seeds)
}

struct Objective<'a> {
    domain: &'a Domain,
    feasible: &'a FeasibleSet,
    spins: &'a SpinConfig,
    lambda: f64,
    provider: &'a dyn GreenProvider,
    evals: usize,
}

impl Objective<'_> {
    /// `φ` at a feasible parameter vector, `None` outside the feasible set.
    fn eval(&mut self, p: &[f64]) -> Result<Option<f64>> {
        let pts = self.feasible.decode(p);
        if !self.feasible.contains(self.domain, self.lambda, &pts) {
            return Ok(None);
        }
        self.evals += 1;
        phi_m(&pts, self.spins, self.provider).map(Some)
    }
}

/// Projected Nelder–Mead from one seed, followed by coordinate descent.
pub fn minimize_from(
    start: usize,
    seed: &[Point],
    spins: &SpinConfig,
    feasible: &FeasibleSet,
    provider: &dyn GreenProvider,
    options: &MinimizeOptions,
) -> Result<StartResult> {
    let domain = provider.domain();
    let lambda = provider.lambda();
    if seed.len() != spins.len() {
        return Err(Error::Config(format!("seed has {} points but there are {} spins", seed.len(), spins.len())));
    }
    if !feasible.contains(domain, lambda, seed) {
        return Err(Error::Config(format!("start {start} is outside the feasible set")));
    }
    let mut obj = Objective { domain, feasible, spins, lambda, provider, evals: 0 };
    let n = feasible.dimension(seed.len());
    let theta0 = find_theta0()?.theta0;
    let step = 0.3 * theta0 / lambda;
    let xtol = options.xtol / lambda;
    let mut trace = Vec::new();

    let x0 = feasible.encode(seed);
    let f0 = obj.eval(&x0)?.ok_or_else(|| Error::Config("seed infeasible".into()))?;
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), f0)];
    for i in 0..n {
        let mut x = x0.clone();
        let mut h = step;
        let mut val = None;
        for _ in 0..40 {
            x[i] = x0[i] + h;
            if let Some(v) = obj.eval(&x)? {
                val = Some(v);
                break;
            }
            h = if h > 0.0 { -h } else { -0.5 * h };
        }
        let v = val.ok_or_else(|| Error::Config(format!("start {start}: no feasible simplex vertex")))?;
        simplex.push((x, v));
    }

    // a trial point outside the set is pulled toward the best vertex
    let project = |obj: &mut Objective, best: &[f64], trial: Vec<f64>| -> Result<Option<(Vec<f64>, f64)>> {
        let mut x = trial;
        for _ in 0..40 {
            if let Some(v) = obj.eval(&x)? {
                return Ok(Some((x, v)));
            }
            for (xi, bi) in x.iter_mut().zip(best) {
                *xi = 0.5 * (*xi + bi);
            }
        }
        Ok(None)
    };

    let mut iteration = 0;
    let sort =
        |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
    sort(&mut simplex);
    let mut last_best = f64::INFINITY;
    while obj.evals < options.max_evals {
        let best = simplex[0].clone();
        if best.1 < last_best {
            last_best = best.1;
            let pts = feasible.decode(&best.0);
            trace.push(TraceEntry {
                start,
                iteration,
                margin: feasible.margin(domain, lambda, &pts),
                points: pts,
                phi: best.1,
            });
        }
        let worst = simplex[n].1;
        let size = simplex
            .iter()
            .map(|(x, _)| x.iter().zip(&best.0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0, f64::max);
        if size < xtol || (worst - best.1).abs() <= options.ftol * (1.0 + best.1.abs()) && size < 100.0 * xtol {
            break;
        }
        iteration += 1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let xw = simplex[n].0.clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&xw).map(|(c, w)| c + t * (c - w)).collect() };
        let reflected = project(&mut obj, &best.0, along(1.0))?;
        let mut replaced = false;
        if let Some((xr, fr)) = reflected.clone() {
            if fr < best.1 {
                let expanded = project(&mut obj, &best.0, along(2.0))?;
                simplex[n] = match expanded {
                    Some((xe, fe)) if fe < fr => (xe, fe),
                    _ => (xr, fr),
                };
                replaced = true;
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                replaced = true;
            }
        }
        if !replaced {
            let fr = reflected.as_ref().map(|r| r.1).unwrap_or(f64::INFINITY);
            let t = if fr < worst { 0.5 } else { -0.5 };
            if let Some((xc, fc)) = project(&mut obj, &best.0, along(t))? {
                if fc < worst.min(fr) {
                    simplex[n] = (xc, fc);
                    replaced = true;
                }
            }
        }
        if !replaced {
            // shrink toward the best vertex; convex combinations stay feasible
            // whenever the set is convex along the segment, else project
            for i in 1..=n {
                let x: Vec<f64> = simplex[i].0.iter().zip(&best.0).map(|(a, b)| 0.5 * (a + b)).collect();
                if let Some(v) = project(&mut obj, &best.0, x)? {
                    simplex[i] = v;
                }
            }
        }
        sort(&mut simplex);
    }

    // coordinate descent polish
    let (mut x, mut fx) = simplex[0].clone();
    let mut h = step * 0.1;
    while h > xtol && obj.evals < options.max_evals + 200 {
        let mut improved = false;
        for i in 0..n {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sgn * h;
                if let Some(v) = obj.eval(&y)? {
                    if v < fx {
                        x = y;
                        fx = v;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if improved {
            iteration += 1;
            let pts = feasible.decode(&x);
            trace.push(TraceEntry {
                start,
                iteration,
                margin: feasible.margin(domain, lambda, &pts),
                points: pts,
                phi: fx,
            });
        } else {
            h *= 0.5;
        }
    }
    let points = feasible.decode(&x);
    let margin = feasible.margin(domain, lambda, &points);
    Ok(StartResult { start, points, phi: fx, margin, evaluations: obj.evals, trace })
}

/// Picks the best start and merges traces in start order.
pub fn merge_starts(mut results: Vec<StartResult>, options: &MinimizeOptions) -> Result<Minimum> {
    if results.is_empty() {
        return Err(Error::Config("all starts are infeasible".into()));
    }
    results.sort_by_key(|r| r.start);
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.phi < results[best].phi {
            best = i;
        }
    }
    let b = &results[best];
    let mut warnings = Vec::new();
    if b.margin < options.boundary_tol {
        warnings.push(format!(
            "minimizer lies on the boundary of the feasible set (log slack {:.3e}); an interior minimum was expected",
            b.margin
        ));
    }
    let trace = results.iter().flat_map(|r| r.trace.iter().cloned()).collect();
    Ok(Minimum {
        points: b.points.clone(),
        phi: b.phi,
        margin: b.margin,
        best_start: b.start,
        trace,
        starts: results.clone(),
        warnings,
    })
}

/// Minimizes `φ_m` over the feasible set from the given seeds, or from
/// [`default_seeds`] when `seeds` is empty. Infeasible seeds are skipped.
pub fn minimize(
    spins: &SpinConfig,
    feasible: &FeasibleSet,
    provider: &dyn GreenProvider,
    seeds: &[Vec<Point>],
    options: &MinimizeOptions,
) -> Result<Minimum> {
    let domain = provider.domain();
    let lambda = provider.lambda();
    let seeds =
        if seeds.is_empty() { default_seeds(domain, feasible, lambda, spins.len(), options)? } else { seeds.to_vec() };
    let mut results = Vec::new();
    for (s, seed) in seeds.iter().enumerate() {
        if !feasible.contains(domain, lambda, seed) {
            continue;
        }
        results.push(minimize_from(s, seed, spins, feasible, provider, options)?);
    }
    merge_starts(results, options)
}

/// Smallest `φ_m` over sampled configurations on the boundary faces
/// `λd(ξ_j) ∈ {1/K, K}` of the feasible set.
///
/// Point `j` is put on a face along the normal fiber through its position in
/// `reference`, while the remaining points scan a log-spaced set of depths on
/// their own fibers.
pub fn boundary_gap(
    reference: &[Point],
    spins: &SpinConfig,
    feasible: &FeasibleSet,
    provider: &dyn GreenProvider,
    depth_samples: usize,
) -> Result<f64> {
    let domain = provider.domain();
    let lambda = provider.lambda();
    let m = reference.len();
    let projs = reference.iter().map(|p| domain.boundary_projection(*p)).collect::<Result<Vec<_>>>()?;
    let place = |j: usize, theta: f64| -> Result<Point> {
        match feasible.constraint {
            Constraint::Axis => axis_point(domain, reference[j].x > 0.0, theta / lambda),
            _ => {
                let b = projs[j].point;
                let n = domain.outward_normal(b)?;
                Ok(b - n * (theta / lambda))
            }
        }
    };
    let faces = [1.0 / feasible.k * (1.0 + 1e-9), feasible.k * (1.0 - 1e-9)];
    let lk = feasible.k.ln();
    let thetas: Vec<f64> =
        (0..depth_samples).map(|i| (-lk + 2.0 * lk * (i as f64 + 0.5) / depth_samples as f64).exp()).collect();
    let mut best = f64::INFINITY;
    for j in 0..m {
        for &face in &faces {
            // the other points take every depth combination when m = 2 and a
            // common depth otherwise
            for &t in &thetas {
                let mut pts = Vec::with_capacity(m);
                for i in 0..m {
                    pts.push(place(i, if i == j { face } else { t })?);
                }
                if pts.iter().enumerate().any(|(a, p)| pts[..a].contains(p)) {
                    continue;
                }
                // separation faces are not sampled; configurations that break
                // separation are skipped
                if feasible.separation > 0.0
                    && (0..m).any(|a| (0..a).any(|b| pts[a].dist(pts[b]) <= feasible.separation))
                {
                    continue;
                }
                best = best.min(phi_m(&pts, spins, provider)?);
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::Config("no admissible boundary sample of the feasible set".into()));
    }
    Ok(best)
}
