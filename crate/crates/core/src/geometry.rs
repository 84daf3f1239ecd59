//! Analytic domains and their polar-structured grids.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::ops::{Add, Mul, Neg, Sub};
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }
    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
    /// Reflection across the x-axis.
    pub fn mirror(self) -> Point {
        Point::new(self.x, -self.y)
    }
    /// Polar angle in `[0, 2π)`.
    pub fn angle(self) -> f64 {
        let a = self.y.atan2(self.x);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}
impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}
impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}
impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Radius profile `r(φ) = Σ c_k cos(kφ)` of an x-symmetric star-shaped domain.
#[derive(Debug, Clone, PartialEq)]
pub struct StarProfile {
    coeffs: Vec<f64>,
}

impl StarProfile {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("star profile needs finite cosine coefficients".into()));
        }
        let p = StarProfile { coeffs };
        let n = 4096;
        for i in 0..n {
            let r = p.radius(TAU * i as f64 / n as f64);
            if !(r > 0.0) {
                return Err(Error::Parameter(format!("star radius profile not positive (r = {r})")));
            }
        }
        Ok(p)
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn radius(&self, phi: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(k, c)| c * (k as f64 * phi).cos()).sum()
    }
    pub fn d1(&self, phi: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(k, c)| -c * k as f64 * (k as f64 * phi).sin()).sum()
    }
    pub fn d2(&self, phi: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(k, c)| -c * (k * k) as f64 * (k as f64 * phi).cos()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Star(StarProfile),
}

/// Nearest boundary point of an interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: Point,
    /// Boundary component: 0 is the outer boundary, 1 the inner circle of an annulus.
    pub component: usize,
    /// Polar angle of the projection in `[0, 2π)`.
    pub angle: f64,
    pub distance: f64,
    /// More than one nearest boundary point exists.
    pub tie: bool,
}

const ON_BOUNDARY_TOL: f64 = 1e-9;

impl Domain {
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Domain::Disk { radius })
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::Parameter(format!("annulus needs 0 < r_in < r_out, got ({inner}, {outer})")));
        }
        Ok(Domain::Annulus { inner, outer })
    }

    pub fn star(coeffs: Vec<f64>) -> Result<Self> {
        Ok(Domain::Star(StarProfile::new(coeffs)?))
    }

    pub fn component_count(&self) -> usize {
        match self {
            Domain::Annulus { .. } => 2,
            _ => 1,
        }
    }

    /// Outer radius at polar angle `phi`.
    pub fn outer_radius(&self, phi: f64) -> f64 {
        match self {
            Domain::Disk { radius } => *radius,
            Domain::Annulus { outer, .. } => *outer,
            Domain::Star(p) => p.radius(phi),
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        let r = x.norm();
        match self {
            Domain::Disk { radius } => r <= *radius * (1.0 + 1e-14),
            Domain::Annulus { inner, outer } => r >= *inner * (1.0 - 1e-14) && r <= *outer * (1.0 + 1e-14),
            Domain::Star(p) => r <= p.radius(x.angle()) * (1.0 + 1e-14),
        }
    }

    fn require_inside(&self, x: Point) -> Result<()> {
        if x.is_finite() && self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { x: x.x, y: x.y })
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::Disk { radius } => PI * radius * radius,
            Domain::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            Domain::Star(p) => {
                let c = p.coeffs();
                PI * (c[0] * c[0] + 0.5 * c[1..].iter().map(|v| v * v).sum::<f64>())
            }
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Domain::Disk { radius } => TAU * radius,
            Domain::Annulus { inner, outer } => TAU * (inner + outer),
            Domain::Star(p) => {
                let n = 8192;
                let h = TAU / n as f64;
                (0..n)
                    .map(|i| {
                        let phi = i as f64 * h;
                        p.radius(phi).hypot(p.d1(phi)) * h
                    })
                    .sum()
            }
        }
    }

    /// Boundary point of `component` at polar angle `phi`.
    pub fn boundary_point(&self, component: usize, phi: f64) -> Point {
        let r = match (self, component) {
            (Domain::Annulus { inner, .. }, 1) => *inner,
            _ => self.outer_radius(phi),
        };
        Point::new(r * phi.cos(), r * phi.sin())
    }

    /// `d(x) = dist(x, ∂Ω)`.
    pub fn distance_to_boundary(&self, x: Point) -> Result<f64> {
        self.require_inside(x)?;
        let r = x.norm();
        Ok(match self {
            Domain::Disk { radius } => (radius - r).max(0.0),
            Domain::Annulus { inner, outer } => (r - inner).min(outer - r).max(0.0),
            Domain::Star(p) => star_nearest(p, x).0.distance,
        })
    }

    /// Nearest boundary point; ties resolve to the smallest polar angle, then
    /// to the outer component.
    pub fn boundary_projection(&self, x: Point) -> Result<Projection> {
        self.require_inside(x)?;
        let r = x.norm();
        let centre = r <= 1e-14;
        let angle = if centre { 0.0 } else { x.angle() };
        let unit = Point::new(angle.cos(), angle.sin());
        Ok(match self {
            Domain::Disk { radius } => {
                Projection { point: unit * *radius, component: 0, angle, distance: (radius - r).max(0.0), tie: centre }
            }
            Domain::Annulus { inner, outer } => {
                let d_in = r - inner;
                let d_out = outer - r;
                let tie = (d_in - d_out).abs() <= 1e-14 * outer;
                if d_out <= d_in {
                    Projection { point: unit * *outer, component: 0, angle, distance: d_out.max(0.0), tie }
                } else {
                    Projection { point: unit * *inner, component: 1, angle, distance: d_in.max(0.0), tie }
                }
            }
            Domain::Star(p) => star_nearest(p, x).0,
        })
    }

    /// Component index and polar angle of a boundary point.
    fn locate_boundary(&self, b: Point) -> Result<(usize, f64)> {
        let r = b.norm();
        let phi = b.angle();
        let scale = self.outer_radius(phi);
        let tol = ON_BOUNDARY_TOL * scale.max(1.0);
        match self {
            Domain::Annulus { inner, .. } if (r - inner).abs() <= tol => return Ok((1, phi)),
            _ => {}
        }
        if (r - scale).abs() <= tol {
            Ok((0, phi))
        } else {
            Err(Error::NotOnBoundary { x: b.x, y: b.y })
        }
    }

    /// Exterior unit normal at a boundary point.
    pub fn outward_normal(&self, b: Point) -> Result<Point> {
        let (component, phi) = self.locate_boundary(b)?;
        let radial = Point::new(phi.cos(), phi.sin());
        Ok(match self {
            Domain::Disk { .. } => radial,
            Domain::Annulus { .. } => {
                if component == 1 {
                    -radial
                } else {
                    radial
                }
            }
            Domain::Star(p) => star_normal(p, phi),
        })
    }

    /// Signed curvature, positive on convex parts of the outer boundary and
    /// `−1/r_in` on the hole of an annulus.
    pub fn mean_curvature(&self, b: Point) -> Result<f64> {
        let (component, phi) = self.locate_boundary(b)?;
        Ok(match self {
            Domain::Disk { radius } => 1.0 / radius,
            Domain::Annulus { inner, outer } => {
                if component == 1 {
                    -1.0 / inner
                } else {
                    1.0 / outer
                }
            }
            Domain::Star(p) => {
                let r = p.radius(phi);
                let r1 = p.d1(phi);
                let r2 = p.d2(phi);
                (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
            }
        })
    }

    /// Every boundary point has nonnegative curvature.
    pub fn is_convex(&self) -> bool {
        match self {
            Domain::Disk { .. } => true,
            Domain::Annulus { .. } => false,
            Domain::Star(p) => (0..2048).all(|i| {
                let phi = TAU * i as f64 / 2048.0;
                let r = p.radius(phi);
                let r1 = p.d1(phi);
                r * r + 2.0 * r1 * r1 - r * p.d2(phi) >= 0.0
            }),
        }
    }
}

fn star_normal(p: &StarProfile, phi: f64) -> Point {
    let (s, c) = phi.sin_cos();
    let r = p.radius(phi);
    let r1 = p.d1(phi);
    // tangent r′e_r + r e_φ rotated clockwise
    let t = Point::new(r1 * c - r * s, r1 * s + r * c);
    Point::new(t.y, -t.x) * (1.0 / t.norm())
}

/// Nearest point on a star boundary by a dense angular scan followed by
/// golden-section and Newton refinement of each local minimum.
fn star_nearest(p: &StarProfile, x: Point) -> (Projection, usize) {
    let n = 1440;
    let dist2 = |phi: f64| {
        let r = p.radius(phi);
        let b = Point::new(r * phi.cos(), r * phi.sin());
        (x - b).norm2()
    };
    let samples: Vec<f64> = (0..n).map(|i| dist2(TAU * i as f64 / n as f64)).collect();
    let h = TAU / n as f64;
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        let prev = samples[(i + n - 1) % n];
        let next = samples[(i + 1) % n];
        if samples[i] <= prev && samples[i] <= next {
            let mut lo = (i as f64 - 1.0) * h;
            let mut hi = (i as f64 + 1.0) * h;
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let mut c = hi - g * (hi - lo);
            let mut d = lo + g * (hi - lo);
            let (mut fc, mut fd) = (dist2(c), dist2(d));
            for _ in 0..60 {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - g * (hi - lo);
                    fc = dist2(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + g * (hi - lo);
                    fd = dist2(d);
                }
            }
            let mut phi = 0.5 * (lo + hi);
            // Newton on the derivative of |x − b(φ)|²
            for _ in 0..4 {
                let e = 1e-5;
                let f1 = (dist2(phi + e) - dist2(phi - e)) / (2.0 * e);
                let f2 = (dist2(phi + e) - 2.0 * dist2(phi) + dist2(phi - e)) / (e * e);
                if f2 > 0.0 {
                    let step = f1 / f2;
                    if step.abs() < h {
                        let trial = phi - step;
                        if dist2(trial) <= dist2(phi) {
                            phi = trial;
                        }
                    }
                }
            }
            let phi = wrap_angle(phi);
            candidates.push((dist2(phi), phi));
        }
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    let best = candidates[0];
    let best_d = best.0.sqrt();
    let mut tie = false;
    let mut chosen = best;
    for c in &candidates[1..] {
        let d = c.0.sqrt();
        let separate = (wrap_angle(c.1 - best.1 + PI) - PI).abs() > 4.0 * h;
        if separate && (d - best_d).abs() <= 1e-10 * best_d.max(1e-300) {
            tie = true;
            if c.1 < chosen.1 {
                chosen = *c;
            }
        }
    }
    let phi = chosen.1;
    let r = p.radius(phi);
    let point = Point::new(r * phi.cos(), r * phi.sin());
    (Projection { point, component: 0, angle: phi, distance: chosen.0.sqrt(), tie }, candidates.len())
}

/// Radial node distribution in the mapped coordinate `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Stretch {
    /// Fine toward `s = 1`.
    Outer { beta: f64 },
    /// Fine toward both `s = 0` and `s = 1`.
    Both { beta: f64 },
}

impl Stretch {
    fn map(self, xi: f64) -> f64 {
        match self {
            Stretch::Outer { beta } => {
                if beta == 0.0 {
                    xi
                } else {
                    1.0 - (beta * (1.0 - xi)).exp_m1() / beta.exp_m1()
                }
            }
            Stretch::Both { beta } => {
                if beta == 0.0 {
                    xi
                } else {
                    0.5 + 0.5 * (beta * (2.0 * xi - 1.0)).tanh() / beta.tanh()
                }
            }
        }
    }
    fn inverse(self, s: f64) -> f64 {
        match self {
            Stretch::Outer { beta } => {
                if beta == 0.0 {
                    s
                } else {
                    1.0 - ((1.0 - s) * beta.exp_m1()).ln_1p() / beta
                }
            }
            Stretch::Both { beta } => {
                if beta == 0.0 {
                    s
                } else {
                    let a = ((2.0 * s - 1.0) * beta.tanh()).clamp(-1.0 + 1e-16, 1.0 - 1e-16);
                    0.5 + a.atanh() / (2.0 * beta)
                }
            }
        }
    }
}

/// Default boundary grading factor.
pub const DEFAULT_GRADING: f64 = 1.15;

/// Polar-structured grid over a [`Domain`].
///
/// Node order: for disk and star domains the origin comes first, then rings
/// from the centre outward; each ring lists angles `φ_j = 2πj/n_angular`.
/// The last ring lies on the boundary. Annulus rings run from the inner circle
/// (ring 0) to the outer circle.
#[derive(Debug, Clone)]
pub struct Grid {
    domain: Domain,
    n_radial: usize,
    n_angular: usize,
    grading: f64,
    stretch: Stretch,
    origin: bool,
    ring_s: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    nodes: Vec<Point>,
    area: Vec<f64>,
    arc: Vec<f64>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    boundary_component: Vec<usize>,
}

/// Up to four grid nodes and weights reproducing bilinear interpolation.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub nodes: [usize; 4],
    pub weights: [f64; 4],
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        (0..4).map(|k| self.weights[k] * values[self.nodes[k]]).sum()
    }
}

impl Grid {
    pub fn new(domain: Domain, n_radial: usize, n_angular: usize) -> Result<Self> {
        Self::with_grading(domain, n_radial, n_angular, DEFAULT_GRADING)
    }

    /// `grading` is the ratio of neighbouring radial spacings near the boundary
    /// at the reference resolution of 16 rings; the stretch keeps its shape
    /// under refinement so that all spacings halve when `n_radial` doubles.
    pub fn with_grading(domain: Domain, n_radial: usize, n_angular: usize, grading: f64) -> Result<Self> {
        if n_radial < 8 || n_angular < 16 {
            return Err(Error::Resolution(format!(
                "grid needs n_radial ≥ 8 and n_angular ≥ 16, got {n_radial}×{n_angular}"
            )));
        }
        if !(grading >= 1.0 && grading <= 2.0) {
            return Err(Error::Parameter(format!("grading factor must lie in [1, 2], got {grading}")));
        }
        let beta_outer = 15.0 * grading.ln();
        let origin = !matches!(domain, Domain::Annulus { .. });
        let stretch = if origin {
            Stretch::Outer { beta: beta_outer }
        } else {
            // same coarse-to-fine spacing ratio e^β split over both ends
            Stretch::Both { beta: (0.5 * beta_outer).exp().acosh() }
        };
        let ring_xi: Vec<f64> = if origin {
            (0..n_radial).map(|i| (i + 1) as f64 / n_radial as f64).collect()
        } else {
            (0..n_radial).map(|i| i as f64 / (n_radial - 1) as f64).collect()
        };
        let mut ring_s: Vec<f64> = ring_xi.iter().map(|&xi| stretch.map(xi)).collect();
        *ring_s.last_mut().unwrap() = 1.0;
        if !origin {
            ring_s[0] = 0.0;
        }

        let (cos, sin) = angle_tables(n_angular);
        let dphi = TAU / n_angular as f64;
        let mut grid = Grid {
            domain,
            n_radial,
            n_angular,
            grading,
            stretch,
            origin,
            ring_s,
            cos,
            sin,
            nodes: Vec::new(),
            area: Vec::new(),
            arc: Vec::new(),
            interior: Vec::new(),
            boundary: Vec::new(),
            boundary_component: Vec::new(),
        };
        let total = grid.node_count();
        grid.nodes = vec![Point::default(); total];
        grid.area = vec![0.0; total];
        grid.arc = vec![0.0; total];
        let profile = grid.angular_profile();

        if origin {
            let sh = 0.5 * grid.ring_s[0];
            let mean_r2: f64 = profile.iter().map(|p| p.0 * p.0).sum::<f64>() * dphi;
            grid.area[0] = 0.5 * sh * sh * mean_r2;
            grid.interior.push(0);
        }
        for i in 0..n_radial {
            let (s_lo, s_hi) = grid.cell_s_range(i);
            for j in 0..n_angular {
                let k = grid.index(i, j);
                let s = grid.ring_s[i];
                let (rr, r1) = profile[j];
                let radius = grid.radial_position(s, rr);
                grid.nodes[k] = Point::new(radius * grid.cos[j], radius * grid.sin[j]);
                grid.area[k] = match &grid.domain {
                    Domain::Annulus { inner, outer } => {
                        let a = inner + s_lo * (outer - inner);
                        let b = inner + s_hi * (outer - inner);
                        0.5 * (b * b - a * a) * dphi
                    }
                    _ => 0.5 * (s_hi * s_hi - s_lo * s_lo) * rr * rr * dphi,
                };
                let on_outer = i == n_radial - 1;
                let on_inner = !origin && i == 0;
                if on_outer || on_inner {
                    grid.arc[k] = match &grid.domain {
                        Domain::Annulus { inner, outer } => (if on_inner { *inner } else { *outer }) * dphi,
                        _ => rr.hypot(r1) * dphi,
                    };
                    grid.boundary.push(k);
                    grid.boundary_component.push(if on_inner { 1 } else { 0 });
                } else {
                    grid.interior.push(k);
                }
            }
        }
        Ok(grid)
    }

    fn radial_position(&self, s: f64, outer_r: f64) -> f64 {
        match &self.domain {
            Domain::Annulus { inner, outer } => inner + s * (outer - inner),
            _ => s * outer_r,
        }
    }

    /// `(r(φ_j), r′(φ_j))` of the outer profile, mirror-exact in `j`.
    pub(crate) fn angular_profile(&self) -> Vec<(f64, f64)> {
        self.mirrored_table(
            |phi| match &self.domain {
                Domain::Star(p) => (p.radius(phi), p.d1(phi)),
                Domain::Disk { radius } => (*radius, 0.0),
                Domain::Annulus { outer, .. } => (*outer, 0.0),
            },
            0.0,
        )
    }

    /// Same as [`Self::angular_profile`] at the half angles `φ_{j+1/2}`.
    pub(crate) fn angular_profile_half(&self) -> Vec<(f64, f64)> {
        self.mirrored_table(
            |phi| match &self.domain {
                Domain::Star(p) => (p.radius(phi), p.d1(phi)),
                Domain::Disk { radius } => (*radius, 0.0),
                Domain::Annulus { outer, .. } => (*outer, 0.0),
            },
            0.5,
        )
    }

    /// Tabulates an (even, odd) pair of angular functions so that entries at
    /// `φ` and `−φ` agree bit for bit up to the sign of the odd part.
    fn mirrored_table<F: Fn(f64) -> (f64, f64)>(&self, f: F, shift: f64) -> Vec<(f64, f64)> {
        let n = self.n_angular;
        let mut out = vec![(0.0, 0.0); n];
        for j in 0..n {
            // φ_{j+shift} mirrors to φ_{m} with m + shift ≡ −(j + shift)
            let pos = j as f64 + shift;
            let mirror_pos = n as f64 - pos;
            if pos <= mirror_pos {
                let phi = TAU * pos / n as f64;
                out[j] = f(phi);
            }
        }
        for j in 0..n {
            let pos = j as f64 + shift;
            let mirror_pos = n as f64 - pos;
            if pos > mirror_pos {
                let m = (mirror_pos - shift).round() as usize % n;
                let (e, o) = out[m];
                out[j] = (e, -o);
            }
        }
        out
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn n_radial(&self) -> usize {
        self.n_radial
    }
    pub fn n_angular(&self) -> usize {
        self.n_angular
    }
    pub fn grading(&self) -> f64 {
        self.grading
    }
    pub fn has_origin(&self) -> bool {
        self.origin
    }
    pub fn node_count(&self) -> usize {
        self.n_radial * self.n_angular + usize::from(self.origin)
    }
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }
    pub fn areas(&self) -> &[f64] {
        &self.area
    }
    /// Boundary arc-length weight per node (zero for interior nodes).
    pub fn arc_weights(&self) -> &[f64] {
        &self.arc
    }
    pub fn interior_index(&self) -> &[usize] {
        &self.interior
    }
    pub fn boundary_index(&self) -> &[usize] {
        &self.boundary
    }
    /// Component id parallel to [`Self::boundary_index`].
    pub fn boundary_component(&self) -> &[usize] {
        &self.boundary_component
    }
    pub fn ring_s(&self) -> &[f64] {
        &self.ring_s
    }
    pub fn is_boundary(&self, k: usize) -> bool {
        self.arc[k] > 0.0
    }
    pub fn cos_table(&self) -> &[f64] {
        &self.cos
    }
    pub fn sin_table(&self) -> &[f64] {
        &self.sin
    }

    /// Node index of ring `i`, angle `j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        usize::from(self.origin) + i * self.n_angular + (j % self.n_angular)
    }

    /// `(ring, angle)` of a node, `None` for the origin.
    pub fn ring_angle(&self, k: usize) -> Option<(usize, usize)> {
        if self.origin {
            if k == 0 {
                return None;
            }
            Some(((k - 1) / self.n_angular, (k - 1) % self.n_angular))
        } else {
            Some((k / self.n_angular, k % self.n_angular))
        }
    }

    /// Index of the node mirrored across the x-axis.
    pub fn mirror_index(&self, k: usize) -> usize {
        match self.ring_angle(k) {
            None => k,
            Some((i, j)) => self.index(i, (self.n_angular - j) % self.n_angular),
        }
    }

    /// Inclusive `s`-extent of the finite-volume cell of ring `i`.
    pub(crate) fn cell_s_range(&self, i: usize) -> (f64, f64) {
        let s = &self.ring_s;
        let lo = if i == 0 {
            if self.origin {
                0.5 * s[0]
            } else {
                0.0
            }
        } else {
            0.5 * (s[i - 1] + s[i])
        };
        let hi = if i + 1 == self.n_radial { 1.0 } else { 0.5 * (s[i] + s[i + 1]) };
        (lo, hi)
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }

    pub fn total_arc(&self) -> f64 {
        self.arc.iter().sum()
    }

    /// Largest radial gap between neighbouring rings in physical units.
    pub fn max_radial_spacing(&self) -> f64 {
        let scale = match &self.domain {
            Domain::Annulus { inner, outer } => outer - inner,
            Domain::Disk { radius } => *radius,
            Domain::Star(p) => (0..256).map(|i| p.radius(TAU * i as f64 / 256.0)).fold(0.0, f64::max),
        };
        let mut prev = if self.origin { 0.0 } else { self.ring_s[0] };
        let mut best: f64 = 0.0;
        for &s in &self.ring_s[usize::from(!self.origin)..] {
            best = best.max(s - prev);
            prev = s;
        }
        best * scale
    }

    /// Largest cell diameter (diagonal of the polar cell).
    pub fn max_cell_diameter(&self) -> f64 {
        let dphi = TAU / self.n_angular as f64;
        let mut best: f64 = 0.0;
        for i in 0..self.n_radial {
            let (lo, hi) = self.cell_s_range(i);
            for j in 0..self.n_angular {
                let phi = j as f64 * dphi;
                let r_out = self.domain.outer_radius(phi);
                let a = self.radial_position(lo, r_out);
                let b = self.radial_position(hi, r_out);
                let arc = b * dphi;
                best = best.max(((b - a) * (b - a) + arc * arc).sqrt());
            }
        }
        best
    }

    /// Number of rings within distance `dist` of the given boundary component
    /// measured along the rays.
    pub fn boundary_layers(&self, dist: f64) -> usize {
        let mut worst = usize::MAX;
        for component in 0..self.domain.component_count() {
            let mut count = 0;
            for j in 0..self.n_angular {
                let phi = TAU * j as f64 / self.n_angular as f64;
                let r_out = self.domain.outer_radius(phi);
                let c = self
                    .ring_s
                    .iter()
                    .filter(|&&s| {
                        let r = self.radial_position(s, r_out);
                        let d = if component == 1 {
                            match &self.domain {
                                Domain::Annulus { inner, .. } => r - inner,
                                _ => unreachable!(),
                            }
                        } else {
                            self.radial_position(1.0, r_out) - r
                        };
                        d > 0.0 && d <= dist
                    })
                    .count();
                count = if j == 0 { c } else { count.min(c) };
            }
            worst = worst.min(count);
        }
        worst
    }

    /// Fractional (ring, angle) coordinates of a point in the index chart.
    /// The ring coordinate is −1 at the origin of a disk-type grid.
    fn chart(&self, x: Point) -> Result<(f64, f64)> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain { x: x.x, y: x.y });
        }
        let r = x.norm();
        let phi = if r == 0.0 { 0.0 } else { x.angle() };
        let s = match &self.domain {
            Domain::Disk { radius } => r / radius,
            Domain::Annulus { inner, outer } => (r - inner) / (outer - inner),
            Domain::Star(p) => r / p.radius(phi),
        }
        .clamp(0.0, 1.0);
        let xi = self.stretch.inverse(s);
        let t = if self.origin { xi * self.n_radial as f64 - 1.0 } else { xi * (self.n_radial - 1) as f64 };
        Ok((t, phi / TAU * self.n_angular as f64))
    }

    /// Bilinear interpolation stencil in the polar index chart.
    pub fn stencil(&self, x: Point) -> Result<Stencil> {
        let (t, q) = self.chart(x)?;
        let na = self.n_angular;
        let qf = q.floor();
        let fq = q - qf;
        let j0 = (qf as i64).rem_euclid(na as i64) as usize;
        let j1 = (j0 + 1) % na;
        if self.origin && t < 0.0 {
            let w = (1.0 + t).clamp(0.0, 1.0);
            return Ok(Stencil {
                nodes: [0, self.index(0, j0), self.index(0, j1), 0],
                weights: [1.0 - w, w * (1.0 - fq), w * fq, 0.0],
            });
        }
        let last = self.n_radial - 1;
        let i0 = (t.floor().max(0.0) as usize).min(last - 1);
        let ft = (t - i0 as f64).clamp(0.0, 1.0);
        Ok(Stencil {
            nodes: [self.index(i0, j0), self.index(i0, j1), self.index(i0 + 1, j0), self.index(i0 + 1, j1)],
            weights: [(1.0 - ft) * (1.0 - fq), (1.0 - ft) * fq, ft * (1.0 - fq), ft * fq],
        })
    }

    pub fn interpolate(&self, values: &[f64], x: Point) -> Result<f64> {
        Ok(self.stencil(x)?.apply(values))
    }

    /// Node whose index-chart cell contains `x` (nearest in the chart).
    pub fn nearest_node(&self, x: Point) -> Result<usize> {
        let (t, q) = self.chart(x)?;
        let na = self.n_angular as i64;
        let j = (q.round() as i64).rem_euclid(na) as usize;
        if self.origin && t < -0.5 {
            return Ok(0);
        }
        let i = (t.round().max(0.0) as usize).min(self.n_radial - 1);
        Ok(self.index(i, j))
    }
}

/// Angle reduced to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a - TAU * (a / TAU).floor();
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn angle_tables(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cos = vec![0.0; n];
    let mut sin = vec![0.0; n];
    for j in 0..n {
        if 2 * j <= n {
            let phi = TAU * j as f64 / n as f64;
            cos[j] = phi.cos();
            sin[j] = phi.sin();
        }
    }
    for j in 0..n {
        if 2 * j > n {
            cos[j] = cos[n - j];
            sin[j] = -sin[n - j];
        }
    }
    if n % 2 == 0 {
        sin[n / 2] = 0.0;
    }
    (cos, sin)
}
