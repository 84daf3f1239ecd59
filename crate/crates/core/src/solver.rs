//! Damped Newton solves of `Δu + ε²(eᵘ − e⁻ᵘ) = 0` with the Robin condition,
//! energies and concentration reports.
//!
//! The discrete residual is `F(u) = −A u + 2ε² sinh u` in every row, which
//! is the finite-volume balance of each cell including the boundary half
//! cells. Exponentials are evaluated as `exp(2 log ε + u)` so that peak
//! values near `2|log ε|` stay finite.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::elliptic::{Field, RobinOperator};
use crate::geometry::{Grid, Point};
use crate::hamiltonian::ConcentrationConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence threshold relative to the seed residual.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    /// Consecutive accepted steps with rising residual that count as divergence.
    pub rise_limit: usize,
    /// Consecutive steps damped below `2⁻¹⁰` that count as a stall.
    pub stall_limit: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-9, max_iter: 50, armijo: 1e-4, max_halvings: 20, rise_limit: 5, stall_limit: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    Diverged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub status: Status,
    pub iterations: usize,
    pub seed_residual: f64,
    pub residual: f64,
    pub solution: Field,
    pub trace: Vec<NewtonStep>,
    /// ε values solved on the way when the direct solve failed.
    pub continuation: Vec<f64>,
}

impl NewtonOutcome {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

fn eps2_exp(log_eps2: f64, v: f64) -> f64 {
    (log_eps2 + v).exp()
}

/// `F(u) = −A u + 2ε² sinh u`.
pub fn residual(op: &RobinOperator, eps: f64, u: &Field) -> Field {
    let le = 2.0 * eps.ln();
    let mut f = op.apply(u);
    for (fk, &uk) in f.values_mut().iter_mut().zip(u.values()) {
        *fk = -*fk + eps2_exp(le, uk) - eps2_exp(le, -uk);
    }
    f
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Newton iteration with Armijo backtracking on `‖F‖_∞`.
pub fn newton_solve(op: &RobinOperator, eps: f64, seed: &Field, options: &NewtonOptions) -> Result<NewtonOutcome> {
    let n = op.grid().node_count();
    if seed.len() != n {
        return Err(Error::Parameter(format!("seed has {} values, grid has {n} nodes", seed.len())));
    }
    if !seed.all_finite() {
        return Err(Error::Parameter("seed contains non-finite values".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("ε must lie in (0, 1), got {eps}")));
    }
    let le = 2.0 * eps.ln();
    let mut u = seed.clone();
    let mut f = residual(op, eps, &u);
    let seed_res = sup(f.values());
    let target = options.tol * seed_res;
    let mut res = seed_res;
    let mut trace = vec![NewtonStep { iteration: 0, residual: res, step: 0.0 }];
    let mut rises = 0;
    let mut stalls = 0;
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    if res <= target || res == 0.0 {
        status = Status::Converged;
    }
    while status != Status::Converged && iterations < options.max_iter {
        iterations += 1;
        let shift: Vec<f64> = u.values().iter().map(|&uk| -(eps2_exp(le, uk) + eps2_exp(le, -uk))).collect();
        let (_, lu) = op.shifted_factor(&shift)?;
        let mut delta = f.values().to_vec();
        lu.solve_in_place(&mut delta);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Solver(format!("Newton step {iterations} is not finite")));
        }
        let mut t = 1.0;
        let mut trial;
        let mut trial_f;
        let mut trial_res;
        let mut halvings = 0;
        loop {
            trial = u.clone();
            trial.axpy(t, &Field::from_vec(delta.clone()));
            trial_f = residual(op, eps, &trial);
            trial_res = sup(trial_f.values());
            if trial_res.is_finite() && trial_res <= (1.0 - options.armijo * t) * res {
                break;
            }
            if halvings == options.max_halvings {
                break;
            }
            halvings += 1;
            t *= 0.5;
        }
        if !trial_res.is_finite() {
            status = Status::Diverged;
            break;
        }
        rises = if trial_res > res { rises + 1 } else { 0 };
        stalls = if t < 1.0 / 1024.0 { stalls + 1 } else { 0 };
        u = trial;
        f = trial_f;
        res = trial_res;
        trace.push(NewtonStep { iteration: iterations, residual: res, step: t });
        if res <= target {
            status = Status::Converged;
        } else if rises >= options.rise_limit || stalls >= options.stall_limit {
            status = Status::Diverged;
        }
    }
    Ok(NewtonOutcome {
        status,
        iterations,
        seed_residual: seed_res,
        residual: res,
        solution: u,
        trace,
        continuation: Vec::new(),
    })
}

/// Direct solve, falling back to ε-continuation from `2ε`, then from `4ε`
/// through `2ε`. `seed_at(ε')` builds the seed for the first rung; the final
/// tolerance is relative to the residual of the continued seed at `ε`.
pub fn solve_with_continuation(
    op: &RobinOperator,
    eps: f64,
    seed_at: &dyn Fn(f64) -> Result<Field>,
    options: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let direct = newton_solve(op, eps, &seed_at(eps)?, options)?;
    if direct.converged() {
        return Ok(direct);
    }
    let mut last = direct;
    for ladder in [&[2.0][..], &[4.0, 2.0][..]] {
        let first = ladder[0] * eps;
        if first >= 1.0 {
            break;
        }
        let mut outcome = newton_solve(op, first, &seed_at(first)?, options)?;
        let mut rungs = vec![first];
        for &factor in &ladder[1..] {
            if !outcome.converged() {
                break;
            }
            outcome = newton_solve(op, factor * eps, &outcome.solution, options)?;
            rungs.push(factor * eps);
        }
        if outcome.converged() {
            let mut fin = newton_solve(op, eps, &outcome.solution, options)?;
            fin.continuation = rungs;
            if fin.converged() {
                return Ok(fin);
            }
            last = fin;
        }
    }
    Ok(last)
}

/// Discrete `J(u) = ½∫|∇u|² − ε²∫(eᵘ + e⁻ᵘ) + (λ/2)∮u²`.
///
/// The finite-volume form `Σ|cell|·u·(A u)` already holds the Dirichlet
/// integral plus `λ∮u²`, so only the exponential term is added.
pub fn energy(op: &RobinOperator, eps: f64, u: &Field) -> f64 {
    let le = 2.0 * eps.ln();
    let au = op.apply(u);
    let area = op.grid().areas();
    let mut total = 0.0;
    for k in 0..u.len() {
        total += area[k] * (0.5 * u[k] * au[k] - eps2_exp(le, u[k]) - eps2_exp(le, -u[k]));
    }
    total
}

/// `−16πm + 8πm log 8 − 16πm log(ρλ²) − 4πφ` with `ρλ² = ε`.
pub fn reduced_energy_prediction(m: usize, eps: f64, phi: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let m = m as f64;
    -16.0 * PI * m + 8.0 * PI * m * 8f64.ln() - 16.0 * PI * m * eps.ln() - 4.0 * PI * phi
}

/// `|J − prediction| / (16πm |log ρλ²|)`.
pub fn relative_energy_gap(m: usize, eps: f64, energy: f64, prediction: f64) -> f64 {
    (energy - prediction).abs() / (16.0 * PI * m as f64 * eps.ln().abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub bubble: usize,
    pub node: usize,
    pub position: Point,
    pub value: f64,
    pub lambda_d: f64,
    pub offset: f64,
    /// `offset` in units of the local cell size.
    pub cells: f64,
}

/// Neighbours in polar index space, the ring above and below included.
fn neighbours(grid: &Grid, k: usize) -> Vec<usize> {
    let na = grid.n_angular();
    let nr = grid.n_radial();
    match grid.ring_angle(k) {
        None => (0..na).map(|j| grid.index(0, j)).collect(),
        Some((i, j)) => {
            let mut out = Vec::with_capacity(9);
            for di in [-1i64, 0, 1] {
                let ii = i as i64 + di;
                if ii >= nr as i64 {
                    continue;
                }
                if ii < 0 {
                    if grid.has_origin() {
                        if !out.contains(&0) {
                            out.push(0);
                        }
                    }
                    continue;
                }
                for dj in [na - 1, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    out.push(grid.index(ii as usize, j + dj));
                }
            }
            out
        }
    }
}

/// Distance to the farthest of the 4-neighbours.
fn cell_size(grid: &Grid, k: usize) -> f64 {
    let x = grid.nodes()[k];
    let na = grid.n_angular();
    let mut ids = Vec::new();
    match grid.ring_angle(k) {
        None => ids.push(grid.index(0, 0)),
        Some((i, j)) => {
            ids.push(grid.index(i, j + 1));
            ids.push(grid.index(i, j + na - 1));
            if i + 1 < grid.n_radial() {
                ids.push(grid.index(i + 1, j));
            }
            if i > 0 {
                ids.push(grid.index(i - 1, j));
            } else if grid.has_origin() {
                ids.push(0);
            }
        }
    }
    ids.iter().map(|&m| x.dist(grid.nodes()[m])).fold(0.0, f64::max)
}

/// Strict local extrema of `u` sharing the sign of `sign` with magnitude at
/// least a quarter of `sup|u|`.
pub fn extrema(grid: &Grid, u: &Field, sign: f64) -> Vec<usize> {
    let top = u.sup_norm();
    let mut out = Vec::new();
    for k in 0..grid.node_count() {
        let v = sign * u[k];
        if v < 0.25 * top || v <= 0.0 {
            continue;
        }
        if neighbours(grid, k).iter().all(|&m| sign * u[m] < v) {
            out.push(k);
        }
    }
    out
}

/// Matches extrema of `u` to the points of `config` by spin.
pub fn concentration_report(grid: &Grid, u: &Field, config: &ConcentrationConfig) -> Result<Vec<Peak>> {
    let domain = grid.domain();
    let mut peaks = Vec::with_capacity(config.points.len());
    for sign in [1.0, -1.0] {
        let wanted: Vec<usize> = (0..config.points.len()).filter(|&j| config.spins.get(j) == sign).collect();
        let found = extrema(grid, u, sign);
        if found.len() != wanted.len() {
            return Err(Error::Concentration(format!(
                "expected {} peaks of sign {sign:+}, found {}",
                wanted.len(),
                found.len()
            )));
        }
        let mut free = found;
        for &j in &wanted {
            let xi = config.points[j];
            let (pos, &k) = free
                .iter()
                .enumerate()
                .min_by(|a, b| grid.nodes()[*a.1].dist(xi).total_cmp(&grid.nodes()[*b.1].dist(xi)))
                .expect("counts match");
            free.remove(pos);
            let x = grid.nodes()[k];
            let offset = x.dist(xi);
            peaks.push(Peak {
                bubble: j,
                node: k,
                position: x,
                value: u[k],
                lambda_d: config.lambda * domain.distance_to_boundary(x)?,
                offset,
                cells: offset / cell_size(grid, k),
            });
        }
    }
    peaks.sort_by_key(|p| p.bubble);
    Ok(peaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use alloc::sync::Arc;

    fn disk_op(nr: usize, na: usize, lambda: f64) -> RobinOperator {
        let grid = Arc::new(Grid::new(Domain::disk(1.0).unwrap(), nr, na).unwrap());
        RobinOperator::assemble(grid, lambda).unwrap()
    }

    #[test]
    fn energy_of_constants() {
        let op = disk_op(16, 32, 3.0);
        let eps: f64 = 0.1;
        let area = op.grid().total_area();
        let arc = op.grid().total_arc();
        let e0 = energy(&op, eps, &Field::zeros(op.grid().node_count()));
        assert!((e0 + 2.0 * eps * eps * area).abs() < 1e-14);
        let c: f64 = 0.7;
        let u = Field::from_vec(vec![c; op.grid().node_count()]);
        let expect = -eps * eps * (c.exp() + (-c).exp()) * area + 0.5 * 3.0 * c * c * arc;
        assert!((energy(&op, eps, &u) - expect).abs() < 1e-10);
    }

    #[test]
    fn zero_seed_is_fixed() {
        let op = disk_op(16, 32, 5.0);
        let out = newton_solve(&op, 1e-2, &Field::zeros(op.grid().node_count()), &NewtonOptions::default()).unwrap();
        assert!(out.converged());
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn small_seed_converges_to_zero() {
        let op = disk_op(16, 32, 5.0);
        let seed = Field::from_fn(op.grid(), |x| 0.3 * x.x + 0.1);
        let out = newton_solve(&op, 0.1, &seed, &NewtonOptions::default()).unwrap();
        assert!(out.converged());
        assert!(out.solution.sup_norm() < 1e-8);
    }

    #[test]
    fn prediction_is_linear() {
        assert_eq!(reduced_energy_prediction(0, 1e-3, 5.0), 0.0);
        let a = reduced_energy_prediction(1, 1e-3, 2.0);
        let b = reduced_energy_prediction(2, 1e-3, 4.0);
        assert!((b - 2.0 * a).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn extrema_of_a_bump() {
        let grid = Grid::new(Domain::disk(1.0).unwrap(), 16, 32).unwrap();
        let c = Point::new(0.4, 0.0);
        let d = Point::new(-0.4, 0.0);
        let u = Field::from_fn(&grid, |x| (-20.0 * x.dist(c).powi(2)).exp() - (-20.0 * x.dist(d).powi(2)).exp());
        let plus = extrema(&grid, &u, 1.0);
        let minus = extrema(&grid, &u, -1.0);
        assert_eq!((plus.len(), minus.len()), (1, 1));
        assert!(grid.nodes()[plus[0]].dist(c) < 0.1);
        assert!(grid.nodes()[minus[0]].dist(d) < 0.1);
    }
}
