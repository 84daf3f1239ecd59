//! Finite-volume Laplacian with a Robin boundary condition on polar grids.
//!
//! Each node owns a cell in the mapped coordinates `(s, φ)` with
//! `x = R(s, φ)(cos φ, sin φ)`. Fluxes through cell faces use the metric of
//! the map, including the cross terms of star-shaped domains. Boundary cells
//! are half cells whose outer face lies on `∂Ω`; there the flux is replaced by
//! `∫(g − λu) dl`, which eliminates the ghost value of the Robin condition
//! exactly along the analytic normal.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::ops::{Index, IndexMut};
use num_traits::Float;
use once_cell::race::OnceBox;

use crate::band::{BandLu, CsrMatrix};
use crate::geometry::{Domain, Grid};
use crate::{Error, Result};

/// Real-valued grid function in node order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field { values: vec![0.0; n] }
    }
    pub fn from_vec(values: Vec<f64>) -> Self {
        Field { values }
    }
    pub fn from_fn(grid: &Grid, f: impl Fn(crate::Point) -> f64) -> Self {
        Field { values: grid.nodes().iter().map(|&p| f(p)).collect() }
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
    /// `self += c·other`.
    pub fn axpy(&mut self, c: f64, other: &Field) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }
    pub fn scaled(&self, c: f64) -> Field {
        Field { values: self.values.iter().map(|v| c * v).collect() }
    }
}

impl Index<usize> for Field {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

impl IndexMut<usize> for Field {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.values[k]
    }
}

/// Discrete `−Δ` with the Robin condition `∂u/∂ν + λ̃u = g` folded into the
/// boundary rows.
///
/// Solving `A u = f + B g` gives `−Δu = f` in the interior and the Robin
/// condition with data `g` on the boundary, where `B` scales boundary data by
/// arc length over cell area.
pub struct RobinOperator {
    grid: Arc<Grid>,
    lambda: f64,
    matrix: CsrMatrix,
    boundary_scale: Vec<f64>,
    factor: OnceBox<core::result::Result<BandLu, Error>>,
}

impl core::fmt::Debug for RobinOperator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RobinOperator").field("nodes", &self.grid.node_count()).field("lambda", &self.lambda).finish()
    }
}

struct Metric {
    /// `J g^{ss}` at an s-face, per unit `φ`.
    ss: f64,
    /// `J g^{sφ}`.
    sphi: f64,
}

impl RobinOperator {
    pub fn assemble(grid: Arc<Grid>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!("Robin coefficient must be nonnegative, got {lambda}")));
        }
        let flux = assemble_flux(&grid);
        let n = grid.node_count();
        let area = grid.areas();
        let arc = grid.arc_weights();
        let mut triplets = Vec::with_capacity(flux.len() + n);
        for &(r, c, v) in &flux {
            triplets.push((r, c, -v / area[r]));
        }
        let mut boundary_scale = vec![0.0; n];
        for k in 0..n {
            if arc[k] > 0.0 {
                boundary_scale[k] = arc[k] / area[k];
                triplets.push((k, k, lambda * boundary_scale[k]));
            } else {
                triplets.push((k, k, 0.0));
            }
        }
        let matrix = CsrMatrix::from_triplets(n, triplets);
        Ok(RobinOperator { grid, lambda, matrix, boundary_scale, factor: OnceBox::new() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn grid_arc(&self) -> Arc<Grid> {
        self.grid.clone()
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
    /// Arc length over cell area at boundary nodes, zero elsewhere.
    pub fn boundary_scale(&self) -> &[f64] {
        &self.boundary_scale
    }

    pub fn apply(&self, f: &Field) -> Field {
        Field::from_vec(self.matrix.matvec(f.values()))
    }

    /// Right-hand side `f + B g` for interior source `f` and Robin data `g`
    /// given per boundary node in [`Grid::boundary_index`] order.
    pub fn rhs(&self, source: Option<&Field>, boundary_data: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.grid.node_count();
        let mut b = match source {
            Some(f) => {
                if f.len() != n {
                    return Err(Error::Parameter(format!("source has {} values, grid has {n} nodes", f.len())));
                }
                f.values().to_vec()
            }
            None => vec![0.0; n],
        };
        if let Some(g) = boundary_data {
            let idx = self.grid.boundary_index();
            if g.len() != idx.len() {
                return Err(Error::Parameter(format!(
                    "boundary data has {} values, grid has {} boundary nodes",
                    g.len(),
                    idx.len()
                )));
            }
            for (&k, &gv) in idx.iter().zip(g) {
                b[k] += self.boundary_scale[k] * gv;
            }
        }
        Ok(b)
    }

    fn factorization(&self) -> Result<&BandLu> {
        let stored = self.factor.get_or_init(|| {
            let pivot = !self.matrix.is_z_matrix();
            alloc::boxed::Box::new(BandLu::factor(&self.matrix, pivot))
        });
        match stored {
            Ok(lu) => Ok(lu),
            Err(e) => {
                if self.lambda == 0.0 {
                    Err(Error::Solver(format!(
                        "pure Neumann operator is singular; solutions exist only for data with zero \
                         weighted mean and are not unique ({e})"
                    )))
                } else {
                    Err(e.clone())
                }
            }
        }
    }

    /// Solves `−Δu = source`, `∂u/∂ν + λ̃u = boundary_data`.
    pub fn solve(&self, source: Option<&Field>, boundary_data: Option<&[f64]>) -> Result<Field> {
        let b = self.rhs(source, boundary_data)?;
        self.solve_vector(b)
    }

    /// Solves `A x = b` with up to three steps of iterative refinement.
    pub fn solve_vector(&self, b: Vec<f64>) -> Result<Field> {
        if self.lambda == 0.0 {
            let total: f64 = b.iter().zip(self.grid.areas()).map(|(v, a)| v * a).sum();
            let scale: f64 = b.iter().zip(self.grid.areas()).map(|(v, a)| (v * a).abs()).sum();
            if total.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Solver(format!(
                    "pure Neumann problem violates the compatibility condition: ∫f + ∮g = {total:e} ≠ 0"
                )));
            }
        }
        let lu = self.factorization()?;
        let norm_b = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        if norm_b == 0.0 {
            return Ok(Field::from_vec(x));
        }
        let mut r = vec![0.0; b.len()];
        for _ in 0..3 {
            self.matrix.matvec_into(&x, &mut r);
            let mut res = 0.0f64;
            for (ri, bi) in r.iter_mut().zip(&b) {
                *ri = bi - *ri;
                res = res.max(ri.abs());
            }
            if res <= 1e-11 * norm_b {
                return Ok(Field::from_vec(x));
            }
            lu.solve_in_place(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
        }
        self.matrix.matvec_into(&x, &mut r);
        let res = r.iter().zip(&b).fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        if res <= 1e-10 * norm_b {
            Ok(Field::from_vec(x))
        } else {
            Err(Error::Solver(format!("residual {res:e} exceeds 1e-10·‖b‖ = {:e}", 1e-10 * norm_b)))
        }
    }

    /// Factorization of `A + diag(shift)` with partial pivoting.
    pub fn shifted_factor(&self, shift: &[f64]) -> Result<(CsrMatrix, BandLu)> {
        let m = self.matrix.with_diagonal_shift(shift);
        let lu = BandLu::factor(&m, true)?;
        Ok((m, lu))
    }
}

/// Outward flux coefficients `(cell, node, c)`: the flux out of `cell` is
/// `Σ c·u_node`. Each interior face is written once for each adjacent cell.
fn assemble_flux(grid: &Grid) -> Vec<(usize, usize, f64)> {
    let na = grid.n_angular();
    let nr = grid.n_radial();
    let s = grid.ring_s();
    let dphi = TAU / na as f64;
    let prof = grid.angular_profile();
    let prof_half = grid.angular_profile_half();
    let domain = grid.domain();
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(grid.node_count() * 20);

    let metric = |sv: f64, (r, r1): (f64, f64)| -> Metric {
        match domain {
            Domain::Annulus { inner, outer } => {
                let l = outer - inner;
                Metric { ss: (inner + sv * l) / l, sphi: 0.0 }
            }
            _ => Metric { ss: sv * (r * r + r1 * r1) / (r * r), sphi: -r1 / r },
        }
    };
    // ∫ J g^{φφ} ds over [a, b]; the midpoint form at the node keeps
    // linear functions exact next to the origin
    let phiphi = |a: f64, b: f64, sv: f64| -> f64 {
        match domain {
            Domain::Annulus { inner, outer } => {
                let l = outer - inner;
                ((inner + b * l) / (inner + a * l)).ln()
            }
            _ => (b - a) / sv,
        }
    };

    // writes flux F = Σ c u out of `a` into `b`, conservatively
    let mut face = |a: usize, b: usize, terms: &[(usize, f64)]| {
        for &(k, c) in terms {
            if c != 0.0 {
                out.push((a, k, c));
                out.push((b, k, -c));
            }
        }
    };

    // s-faces between ring i and i+1
    for i in 0..nr.saturating_sub(1) {
        let sp = 0.5 * (s[i] + s[i + 1]);
        let ds = s[i + 1] - s[i];
        for j in 0..na {
            let m = metric(sp, prof[j]);
            let a = grid.index(i, j);
            let b = grid.index(i + 1, j);
            let jp = (j + 1) % na;
            let jm = (j + na - 1) % na;
            let cross = dphi * m.sphi / (4.0 * dphi);
            let c = dphi * m.ss / ds;
            face(
                a,
                b,
                &[
                    (b, c),
                    (a, -c),
                    (grid.index(i, jp), cross),
                    (grid.index(i, jm), -cross),
                    (grid.index(i + 1, jp), cross),
                    (grid.index(i + 1, jm), -cross),
                ],
            );
        }
    }
    // origin cell faces
    if grid.has_origin() {
        let sh = 0.5 * s[0];
        for j in 0..na {
            let m = metric(sh, prof[j]);
            let b = grid.index(0, j);
            let c = dphi * m.ss / s[0];
            let cross = dphi * m.sphi * 0.5 / (2.0 * dphi);
            face(
                0,
                b,
                &[(b, c), (0, -c), (grid.index(0, (j + 1) % na), cross), (grid.index(0, (j + na - 1) % na), -cross)],
            );
        }
    }
    // φ-faces between angles j and j+1 on ring i
    for i in 0..nr {
        let (lo, hi) = grid.cell_s_range(i);
        let w = phiphi(lo, hi, s[i]);
        for j in 0..na {
            let jp = (j + 1) % na;
            let a = grid.index(i, j);
            let b = grid.index(i, jp);
            let c = w / dphi;
            let sphi = metric(0.5 * (lo + hi), prof_half[j]).sphi;
            let mut terms = vec![(b, c), (a, -c)];
            if sphi != 0.0 {
                // u(hi) − u(lo) along the face, from face-midpoint averages
                let mut add = |k: usize, wgt: f64| terms.push((k, sphi * wgt));
                if i + 1 < nr {
                    for &k in &[a, b, grid.index(i + 1, j), grid.index(i + 1, jp)] {
                        add(k, 0.25);
                    }
                } else {
                    add(a, 0.5);
                    add(b, 0.5);
                }
                if i > 0 {
                    for &k in &[a, b, grid.index(i - 1, j), grid.index(i - 1, jp)] {
                        add(k, -0.25);
                    }
                } else if grid.has_origin() {
                    add(a, -0.25);
                    add(b, -0.25);
                    add(0, -0.5);
                } else {
                    add(a, -0.5);
                    add(b, -0.5);
                }
            }
            face(a, b, &terms);
        }
    }
    out
}
