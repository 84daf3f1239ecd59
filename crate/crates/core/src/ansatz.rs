//! Multi-bubble ansatz `U = Σ a_j (w_j + H_j)` and its residual theory.
//!
//! Bubble cores have radius `μρ` with `ρ = ε/λ²`, far below any practical
//! grid spacing, so everything that touches a core is evaluated analytically:
//! the Laplacian of `w_j` is `−ε²e^{w_j}` exactly, core integrals have closed
//! forms, and the Newton seed carries each bubble as one node whose cell
//! holds the bubble mass.
//!
//! The corrector is split as `H_j = H(·, ξ_j) − c_j + K_j` with
//! `c_j = log 8μ_j² − 4 log λ`. `K_j` solves the Robin problem with data
//! `−ℛ(δw_j)`, `δw_j = w_j − Γ(· − ξ_j) − c_j = −2 log(1 + μ_j²ρ²/r²)`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::elliptic::{Field, RobinOperator};
use crate::geometry::{Grid, Point};
use crate::green::{GreenField, GreenSolver};
use crate::hamiltonian::{ConcentrationConfig, SpinConfig};
use crate::{Error, Result};

/// Scale parameters with `ρ = ε/λ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    eps: f64,
    lambda: f64,
    rho: f64,
    alpha: f64,
    eps0: f64,
}

impl Params {
    /// Checks `ε ∈ (0, 1)`, `λ > 1` and the regime `ελ^α ≤ ε₀` unless
    /// `allow_out_of_regime` is set.
    pub fn new(eps: f64, lambda: f64, alpha: f64, eps0: f64, allow_out_of_regime: bool) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Config(format!("ε must lie in (0, 1), got {eps}")));
        }
        if !(lambda > 1.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("λ must exceed 1, got {lambda}")));
        }
        let p = Params { eps, lambda, rho: eps / (lambda * lambda), alpha, eps0 };
        if !allow_out_of_regime && !p.in_regime() {
            return Err(Error::Config(format!(
                "(ε, λ) = ({eps}, {lambda}) violates ελ^α ≤ ε₀ with α = {alpha}, ε₀ = {eps0}; \
                 set allow_out_of_regime to run anyway"
            )));
        }
        Ok(p)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn regime_margin(&self) -> f64 {
        self.eps * self.lambda.powf(self.alpha)
    }
    pub fn in_regime(&self) -> bool {
        self.regime_margin() <= self.eps0
    }
}

/// `w(x) = log(8μ²/(μ²ρ² + |x−ξ|²)²) + 2 log(ρ/ε)`.
pub fn bubble(mu: f64, rho: f64, xi: Point, eps: f64, x: Point) -> f64 {
    let s = mu * mu * rho * rho + (x - xi).norm2();
    (8.0 * mu * mu).ln() - 2.0 * s.ln() + 2.0 * (rho / eps).ln()
}

/// `∇w(x) = −4(x−ξ)/(μ²ρ² + |x−ξ|²)`.
pub fn bubble_gradient(mu: f64, rho: f64, xi: Point, x: Point) -> Point {
    let d = x - xi;
    d * (-4.0 / (mu * mu * rho * rho + d.norm2()))
}

/// `ε²e^{w} = 8μ²ρ²/(μ²ρ² + |x−ξ|²)²`, which has total mass `8π` on `ℝ²`.
pub fn bubble_density(mu: f64, rho: f64, xi: Point, x: Point) -> f64 {
    let m2 = mu * mu * rho * rho;
    let s = m2 + (x - xi).norm2();
    8.0 * m2 / (s * s)
}

/// `W(y) = Σ 8μ_j²/(μ_j² + |y − ξ_j'|²)²` in scaled variables.
pub fn potential_w(masses: &[f64], scaled_centres: &[Point], y: Point) -> f64 {
    masses
        .iter()
        .zip(scaled_centres)
        .map(|(&mu, &c)| {
            let s = mu * mu + (y - c).norm2();
            8.0 * mu * mu / (s * s)
        })
        .sum()
}

/// Kernel functions of `Δ + W` for one bubble in scaled variables:
/// `Z₀ = (μ²−|z|²)/(μ²+|z|²)`, `Z_i = 4μ z_i/(μ²+|z|²)` with `z = y − ξ'`.
pub fn kernel_z(i: usize, mu: f64, centre: Point, y: Point) -> Result<f64> {
    let z = y - centre;
    let s = mu * mu + z.norm2();
    match i {
        0 => Ok((mu * mu - z.norm2()) / s),
        1 => Ok(4.0 * mu * z.x / s),
        2 => Ok(4.0 * mu * z.y / s),
        _ => Err(Error::Parameter(format!("kernel index must be 0, 1 or 2, got {i}"))),
    }
}

/// Sup of `|(Δ_h + W)Z_i|` for a single bubble of mass `mu` at the origin on
/// the box `[−L, L]²` with an `n × n` Cartesian 5-point stencil.
pub fn kernel_identity_residual(i: usize, mu: f64, half_width: f64, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(Error::Parameter(format!("box grid needs at least 4 cells, got {n}")));
    }
    let h = 2.0 * half_width / n as f64;
    let o = Point::new(0.0, 0.0);
    let mut values = vec![0.0; (n + 1) * (n + 1)];
    for a in 0..=n {
        for b in 0..=n {
            let y = Point::new(-half_width + a as f64 * h, -half_width + b as f64 * h);
            values[a * (n + 1) + b] = kernel_z(i, mu, o, y)?;
        }
    }
    let at = |a: usize, b: usize| values[a * (n + 1) + b];
    let mut worst: f64 = 0.0;
    for a in 1..n {
        for b in 1..n {
            let y = Point::new(-half_width + a as f64 * h, -half_width + b as f64 * h);
            let lap = (at(a + 1, b) + at(a - 1, b) + at(a, b + 1) + at(a, b - 1) - 4.0 * at(a, b)) / (h * h);
            worst = worst.max((lap + potential_w(&[mu], &[o], y) * at(a, b)).abs());
        }
    }
    Ok(worst)
}

/// Robin corrector solved directly with data `−ℛ(w)` on the boundary.
pub fn corrector(op: &RobinOperator, mu: f64, rho: f64, xi: Point, eps: f64) -> Result<Field> {
    let grid = op.grid();
    let data = grid
        .boundary_index()
        .iter()
        .map(|&k| {
            let x = grid.nodes()[k];
            let nu = grid.domain().outward_normal(x)?;
            Ok(-(bubble_gradient(mu, rho, xi, x).dot(nu) + op.lambda() * bubble(mu, rho, xi, eps, x)))
        })
        .collect::<Result<Vec<_>>>()?;
    op.solve(None, Some(&data))
}

/// `δw = −2 log(1 + μ²ρ²/r²)` and its gradient.
fn core_defect(mu: f64, rho: f64, xi: Point, x: Point) -> (f64, Point) {
    let d = x - xi;
    let r2 = d.norm2();
    let m2 = mu * mu * rho * rho;
    (-2.0 * (m2 / r2).ln_1p(), d * (4.0 * m2 / (r2 * (m2 + r2))))
}

/// One bubble with its corrector pieces.
#[derive(Debug, Clone)]
pub struct Bubble {
    pub centre: Point,
    pub mass: f64,
    pub spin: f64,
    /// `c_j = log 8μ_j² − 4 log λ`.
    pub shift: f64,
    pub green: GreenField,
    /// Corrector remainder `K_j`.
    pub defect: Field,
}

impl Bubble {
    /// `H_j(x)`.
    pub fn corrector_at(&self, x: Point) -> Result<f64> {
        let k = self.green.grid().interpolate(self.defect.values(), x)?;
        Ok(self.green.regular(x)? - self.shift + k)
    }
}

/// Ansatz fields on a grid.
#[derive(Debug, Clone)]
pub struct AnsatzBundle {
    params: Params,
    config: ConcentrationConfig,
    op: Arc<RobinOperator>,
    bubbles: Vec<Bubble>,
    w: Vec<Field>,
    h: Vec<Field>,
    u: Field,
    /// `A·P − b` for the discrete part `P = Σ a_j (H̃_j + K_j)`.
    grid_residual: Vec<f64>,
}

/// Builds `U` for a configuration with computed masses.
pub fn build_ansatz(solver: &GreenSolver, config: &ConcentrationConfig, params: Params) -> Result<AnsatzBundle> {
    let masses = config
        .masses
        .as_ref()
        .ok_or_else(|| Error::Config("masses must be computed before the ansatz is built".into()))?;
    if (config.lambda - params.lambda()).abs() > 1e-12 * params.lambda()
        || (solver.lambda() - params.lambda()).abs() > 1e-12 * params.lambda()
    {
        return Err(Error::Config("λ differs between configuration, parameters and Green solver".into()));
    }
    let op_arc = solver.operator_arc();
    let op: &RobinOperator = &op_arc;
    let grid = op.grid();
    let (eps, rho, lambda) = (params.eps(), params.rho(), params.lambda());
    let n = grid.node_count();
    let mut bubbles = Vec::with_capacity(masses.len());
    let mut w_fields = Vec::with_capacity(masses.len());
    let mut h_fields = Vec::with_capacity(masses.len());
    let mut u = Field::zeros(n);
    let mut discrete = vec![0.0; n];
    let mut rhs_total = vec![0.0; n];
    for (j, (&p, &mu)) in config.points.iter().zip(masses).enumerate() {
        let spin = config.spins.get(j);
        let green = solver.solve(p)?;
        let shift = (8.0 * mu * mu).ln() - 4.0 * lambda.ln();
        let data = grid
            .boundary_index()
            .iter()
            .map(|&k| {
                let x = grid.nodes()[k];
                let nu = grid.domain().outward_normal(x)?;
                let (v, g) = core_defect(mu, rho, p, x);
                Ok(-(g.dot(nu) + lambda * v))
            })
            .collect::<Result<Vec<_>>>()?;
        let b = op.rhs(None, Some(&data))?;
        let defect = op.solve_vector(b.clone())?;
        // rhs of the image remainder, rebuilt from the same boundary data
        let rem_b = op.apply(green.remainder());
        let w = Field::from_fn(grid, |x| bubble(mu, rho, p, eps, x));
        let mut hf = green.regular_part();
        for (k, v) in hf.values_mut().iter_mut().enumerate() {
            *v += defect[k] - shift;
        }
        for k in 0..n {
            u[k] += spin * (w[k] + hf[k]);
            discrete[k] += spin * (green.remainder()[k] + defect[k]);
            rhs_total[k] += spin * (rem_b[k] + b[k]);
        }
        w_fields.push(w);
        h_fields.push(hf);
        bubbles.push(Bubble { centre: p, mass: mu, spin, shift, green, defect });
    }
    // interior rows of the Green remainder carry no data, so A·P − b there is
    // the solver residual; boundary rows of the image remainder are exact by
    // construction and only K_j contributes a solve residual
    let ap = op.matrix().matvec(&discrete);
    let mut grid_residual = vec![0.0; n];
    for k in 0..n {
        grid_residual[k] = if grid.is_boundary(k) { ap[k] - rhs_total[k] } else { ap[k] };
    }
    Ok(AnsatzBundle {
        params,
        config: config.clone(),
        op: op_arc.clone(),
        bubbles,
        w: w_fields,
        h: h_fields,
        u,
        grid_residual,
    })
}

impl AnsatzBundle {
    pub fn params(&self) -> &Params {
        &self.params
    }
    pub fn config(&self) -> &ConcentrationConfig {
        &self.config
    }
    pub fn grid(&self) -> &Grid {
        self.op.grid()
    }
    pub fn operator(&self) -> &RobinOperator {
        &self.op
    }
    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }
    /// `U` sampled at the nodes.
    pub fn u(&self) -> &Field {
        &self.u
    }
    pub fn bubble_fields(&self) -> &[Field] {
        &self.w
    }
    pub fn corrector_fields(&self) -> &[Field] {
        &self.h
    }

    /// `U(x)` at an arbitrary point.
    pub fn value_at(&self, x: Point) -> Result<f64> {
        let (eps, rho) = (self.params.eps(), self.params.rho());
        let mut v = 0.0;
        for b in &self.bubbles {
            v += b.spin * (bubble(b.mass, rho, b.centre, eps, x) + b.corrector_at(x)?);
        }
        Ok(v)
    }

    /// `max_j sup|K_j|`, the deviation of `H_j` from `H(·,ξ_j) − log 8μ_j² + 4 log λ`.
    pub fn corrector_gap(&self) -> f64 {
        self.bubbles.iter().map(|b| b.defect.sup_norm()).fold(0.0, f64::max)
    }

    /// `max_j sup_{|x−ξ_j| ≥ δ} |U_j − G(·, ξ_j)|` over grid nodes.
    pub fn green_deviation(&self, delta: f64) -> f64 {
        let rho = self.params.rho();
        let grid = self.grid();
        let mut worst: f64 = 0.0;
        for b in &self.bubbles {
            for (k, &x) in grid.nodes().iter().enumerate() {
                if x.dist(b.centre) >= delta {
                    let (dw, _) = core_defect(b.mass, rho, b.centre, x);
                    worst = worst.max((dw + b.defect[k]).abs());
                }
            }
        }
        worst
    }

    /// `ε²e^{w_j}` at node `k` for every bubble, and the index of the largest.
    fn densities(&self, x: Point) -> (Vec<f64>, usize) {
        let rho = self.params.rho();
        let d: Vec<f64> = self.bubbles.iter().map(|b| bubble_density(b.mass, rho, b.centre, x)).collect();
        let mut best = 0;
        for j in 1..d.len() {
            if d[j] > d[best] {
                best = j;
            }
        }
        (d, best)
    }

    /// `ε²e^{v}` without overflow for moderate `ε²e^{v}`.
    fn eps2_exp(&self, v: f64) -> f64 {
        (2.0 * self.params.eps().ln() + v).exp()
    }

    /// `ε²(e^U − e^{−U}) − Σ a_j ε²e^{w_j}` at a node, with the dominant
    /// bubble handled by `expm1` so that the core cancellation is exact.
    fn nonlinear_defect(&self, k: usize) -> f64 {
        let x = self.grid().nodes()[k];
        let u = self.u[k];
        let (dens, j) = self.densities(x);
        let s = self.bubbles[j].spin;
        let e = s * u - self.w[j][k];
        let mut r = s * dens[j] * e.exp_m1();
        for (i, b) in self.bubbles.iter().enumerate() {
            if i != j {
                r -= b.spin * dens[i];
            }
        }
        r - s * self.eps2_exp(-s * u)
    }

    /// `ε²(e^U + e^{−U}) − Σ ε²e^{w_j}` at a node.
    fn linear_gap(&self, k: usize) -> f64 {
        let x = self.grid().nodes()[k];
        let u = self.u[k];
        let (dens, j) = self.densities(x);
        let s = self.bubbles[j].spin;
        let e = s * u - self.w[j][k];
        let mut r = dens[j] * e.exp_m1();
        for (i, d) in dens.iter().enumerate() {
            if i != j {
                r -= d;
            }
        }
        r + self.eps2_exp(-s * u)
    }

    /// `R = ΔU + ε²(e^U − e^{−U})` at interior nodes and the Robin defect of
    /// `U` at boundary nodes.
    pub fn residual(&self) -> Field {
        let grid = self.grid();
        let scale = self.op.boundary_scale();
        let mut r = Field::zeros(grid.node_count());
        for k in 0..grid.node_count() {
            r[k] = if grid.is_boundary(k) {
                self.grid_residual[k] / scale[k]
            } else {
                self.nonlinear_defect(k) - self.grid_residual[k]
            };
        }
        r
    }

    /// Interior residual in scaled variables, `ρ²R`.
    pub fn scaled_residual(&self) -> Field {
        let rho2 = self.params.rho() * self.params.rho();
        let grid = self.grid();
        let mut r = self.residual();
        for k in 0..grid.node_count() {
            r[k] = if grid.is_boundary(k) { 0.0 } else { rho2 * r[k] };
        }
        r
    }

    /// `‖ρ²R‖_⋆`.
    pub fn residual_star_norm(&self, sigma: f64) -> Result<f64> {
        star_norm(self.grid(), &self.scaled_residual(), &self.config.points, self.params.rho(), sigma)
    }

    /// `(Lφ, full linearization, Λφ)` in scaled variables at interior nodes,
    /// with `L = Δ_y + W`, full `= Δ_y + (ερ)²(e^V + e^{−V})` and
    /// `Λ = (ερ)²(e^V + e^{−V}) − W`.
    pub fn linearized_apply(&self, phi: &Field) -> Result<(Field, Field, Field)> {
        let grid = self.grid();
        let n = grid.node_count();
        if phi.len() != n {
            return Err(Error::Parameter(format!("field has {} values, grid has {n} nodes", phi.len())));
        }
        let rho2 = self.params.rho() * self.params.rho();
        let aphi = self.op.apply(phi);
        let (mut l, mut full, mut gap) = (Field::zeros(n), Field::zeros(n), Field::zeros(n));
        for k in 0..n {
            if grid.is_boundary(k) {
                continue;
            }
            let x = grid.nodes()[k];
            let (dens, _) = self.densities(x);
            let w: f64 = rho2 * dens.iter().sum::<f64>();
            let lam = rho2 * self.linear_gap(k);
            let lap = -rho2 * aphi[k];
            l[k] = lap + w * phi[k];
            gap[k] = lam * phi[k];
            full[k] = lap + (w + lam) * phi[k];
        }
        Ok((l, full, gap))
    }

    /// `N(φ) = (ερ)²[e^V(e^φ−φ−1) − e^{−V}(e^{−φ}+φ−1)]` at interior nodes.
    pub fn nonlinear_remainder(&self, phi: &Field) -> Result<Field> {
        let grid = self.grid();
        let n = grid.node_count();
        if phi.len() != n {
            return Err(Error::Parameter(format!("field has {} values, grid has {n} nodes", phi.len())));
        }
        let rho2 = self.params.rho() * self.params.rho();
        let mut out = Field::zeros(n);
        for k in 0..n {
            if grid.is_boundary(k) {
                continue;
            }
            let (u, p) = (self.u[k], phi[k]);
            let plus = self.eps2_exp(u) * (p.exp_m1() - p);
            let minus = self.eps2_exp(-u) * ((-p).exp_m1() + p);
            out[k] = rho2 * (plus - minus);
        }
        Ok(out)
    }

    /// Smooth part seen by bubble `j` near its centre:
    /// `a_j U − w_j = H_j + a_j Σ_{i≠j} a_i U_i`.
    fn smooth_part(&self, j: usize, x: Point) -> Result<f64> {
        let (eps, rho) = (self.params.eps(), self.params.rho());
        let bj = &self.bubbles[j];
        let mut v = bj.corrector_at(x)?;
        for (i, b) in self.bubbles.iter().enumerate() {
            if i != j {
                v += bj.spin * b.spin * (bubble(b.mass, rho, b.centre, eps, x) + b.corrector_at(x)?);
            }
        }
        Ok(v)
    }

    /// Newton seed: `U` at the nodes except that the node whose cell holds
    /// `ξ_j` carries the bubble mass, `ε²e^{a_j u_k}·|cell| = 8π e^{E_j}` with
    /// `E_j` the smooth part at `ξ_j`.
    pub fn grid_seed(&self) -> Result<Field> {
        let grid = self.grid();
        let eps = self.params.eps();
        let mut seed = self.u.clone();
        for (j, b) in self.bubbles.iter().enumerate() {
            let k = grid.nearest_node(b.centre)?;
            let e = self.smooth_part(j, b.centre)?;
            let area = grid.areas()[k];
            seed[k] = b.spin * ((8.0 * PI).ln() + e - 2.0 * eps.ln() - area.ln());
        }
        Ok(seed)
    }

    /// `J(U) = ½∫|∇U|² − ε²∫(e^U + e^{−U}) + (λ/2)∮U²`.
    ///
    /// Integrating by parts with `ℛU = 0` and `−ΔU = Σ a_j ε²e^{w_j}` gives
    /// `J = ½ Σ a_j ∫ε²e^{w_j}U − ε²∫(e^U + e^{−U})`. On the balls
    /// `B(ξ_j, d_j/2)` both integrals use closed forms in the scaled radius
    /// `t = |x−ξ_j|/(μ_jρ)`; the rest of the domain uses grid quadrature.
    pub fn energy(&self) -> Result<f64> {
        let grid = self.grid();
        let (eps, rho) = (self.params.eps(), self.params.rho());
        let domain = grid.domain();
        let radii = self
            .bubbles
            .iter()
            .map(|b| domain.distance_to_boundary(b.centre).map(|d| 0.5 * d))
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for (j, b) in self.bubbles.iter().enumerate() {
            let mr = b.mass * rho;
            let t2 = (radii[j] / mr).powi(2);
            let mass = 8.0 * PI * t2 / (1.0 + t2);
            let log_moment = -16.0 * PI * (1.0 - (1.0 + t2.ln_1p()) / (1.0 + t2));
            let second = 8.0 * PI * mr * mr * (t2.ln_1p() - t2 / (1.0 + t2));
            let base = 8.0f64.ln() - 2.0 * b.mass.ln() - 2.0 * rho.ln() - 2.0 * eps.ln();
            let e0 = self.smooth_part(j, b.centre)?;
            // gradient of the smooth part by central differences
            let h = 0.25 * radii[j];
            let ex = self.smooth_part(j, b.centre + Point::new(h, 0.0))?
                - self.smooth_part(j, b.centre - Point::new(h, 0.0))?;
            let ey = self.smooth_part(j, b.centre + Point::new(0.0, h))?
                - self.smooth_part(j, b.centre - Point::new(0.0, h))?;
            let grad2 = (ex * ex + ey * ey) / (4.0 * h * h);
            total += 0.5 * (base * mass + log_moment + e0 * mass);
            total -= e0.exp() * (mass + 0.25 * grad2 * second);
        }
        for (k, &x) in grid.nodes().iter().enumerate() {
            let inside = self.bubbles.iter().zip(&radii).any(|(b, &r)| x.dist(b.centre) < r);
            if inside {
                continue;
            }
            let a = grid.areas()[k];
            let (dens, _) = self.densities(x);
            let u = self.u[k];
            let mut v = 0.0;
            for (b, d) in self.bubbles.iter().zip(&dens) {
                v += 0.5 * b.spin * d * u;
            }
            v -= self.eps2_exp(u) + self.eps2_exp(-u);
            total += v * a;
        }
        Ok(total)
    }
}

/// `sup_k |f_k| / (Σ_j (1 + |x_k − ξ_j|/ρ)^{−2−σ} + ρ²)` over interior nodes.
pub fn star_norm(grid: &Grid, f: &Field, centres: &[Point], rho: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Parameter(format!("σ must lie in (0, 1), got {sigma}")));
    }
    if f.len() != grid.node_count() {
        return Err(Error::Parameter(format!("field has {} values, grid has {} nodes", f.len(), grid.node_count())));
    }
    let mut worst: f64 = 0.0;
    for (k, &x) in grid.nodes().iter().enumerate() {
        if grid.is_boundary(k) {
            continue;
        }
        let weight = star_weight(x, centres, rho, sigma);
        worst = worst.max(f[k].abs() / weight);
    }
    Ok(worst)
}

pub fn star_weight(x: Point, centres: &[Point], rho: f64, sigma: f64) -> f64 {
    centres.iter().map(|c| (1.0 + x.dist(*c) / rho).powf(-2.0 - sigma)).sum::<f64>() + rho * rho
}

/// Spins negated, used for sign-symmetry checks.
pub fn negated(spins: &SpinConfig) -> SpinConfig {
    let v: Vec<i64> = spins.values().iter().map(|&a| -(a as i64)).collect();
    SpinConfig::new(&v).expect("negated spins stay ±1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bubble_values() {
        let o = Point::new(0.0, 0.0);
        assert!((bubble(1.0, 1.0, o, 1.0, o) - 8f64.ln()).abs() < 1e-14);
        let (mu, rho, eps) = (1.3, 0.01, 0.2);
        let expect = (8.0 / (mu * mu * rho.powi(4))).ln() + 2.0 * (rho / eps).ln();
        assert!((bubble(mu, rho, o, eps, o) - expect).abs() < 1e-12);
    }

    #[test]
    fn bubble_solves_liouville() {
        // Δw + ε²e^w = 0 by a 5-point stencil, second order in h
        let (mu, rho, eps) = (1.1, 0.2, 0.3);
        let xi = Point::new(0.05, -0.1);
        let x = Point::new(0.3, 0.2);
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3] {
            let f = |p: Point| bubble(mu, rho, xi, eps, p);
            let lap = (f(x + Point::new(h, 0.0))
                + f(x - Point::new(h, 0.0))
                + f(x + Point::new(0.0, h))
                + f(x - Point::new(0.0, h))
                - 4.0 * f(x))
                / (h * h);
            errs.push((lap + eps * eps * f(x).exp()).abs());
        }
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
        let dens = bubble_density(mu, rho, xi, x);
        assert!((dens - eps * eps * bubble(mu, rho, xi, eps, x).exp()).abs() < 1e-12 * dens);
    }

    #[test]
    fn potential_and_kernels() {
        let c = Point::new(1.0, 2.0);
        assert!((potential_w(&[1.5], &[c], c) - 8.0 / 2.25).abs() < 1e-14);
        assert!((kernel_z(0, 1.5, c, c).unwrap() - 1.0).abs() < 1e-15);
        let y = Point::new(1.7, 2.3);
        let ym = Point::new(0.3, 2.3);
        assert!((kernel_z(1, 1.5, c, y).unwrap() + kernel_z(1, 1.5, c, ym).unwrap()).abs() < 1e-15);
        assert!(kernel_z(3, 1.0, c, y).is_err());
    }

    #[test]
    fn kernel_identity_is_second_order() {
        for i in 0..3 {
            let a = kernel_identity_residual(i, 1.0, 10.0, 64).unwrap();
            let b = kernel_identity_residual(i, 1.0, 10.0, 128).unwrap();
            let ratio = a / b;
            assert!((3.2..=4.8).contains(&ratio), "Z_{i}: ratio {ratio}");
        }
    }

    #[test]
    fn params_regime() {
        assert!(Params::new(1e-3, 10.0, 1.0, 0.05, false).is_ok());
        let e = Params::new(1e-2, 40.0, 1.0, 0.05, false).unwrap_err();
        assert!(e.is_config());
        assert!(Params::new(1e-2, 40.0, 1.0, 0.05, true).is_ok());
        let p = Params::new(1e-4, 20.0, 1.0, 0.05, false).unwrap();
        assert!((p.rho() * 400.0 - 1e-4).abs() < 1e-18);
    }
}
