//! Exponential integral and Gauss–Laguerre rules.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Returns `(g, 1 − z·g)` with `g = e^z E₁(z)`, for `Re z > 0`.
///
/// The second component is formed without cancellation, which matters for
/// `∫₀^∞ e^{−as}/(s+Z)² ds = (1 − aZ·g(aZ))/Z` at large `|aZ|`.
pub fn exp_e1_pair(z: Complex64) -> (Complex64, Complex64) {
    let r = z.norm();
    if r > 1e8 {
        // asymptotic series; the next terms are below 24/|z|⁴
        let w = z.inv();
        let g = w * (Complex64::new(1.0, 0.0) - w * (Complex64::new(1.0, 0.0) - w * 2.0));
        let q = w * (Complex64::new(1.0, 0.0) - w * (Complex64::new(2.0, 0.0) - w * 6.0));
        return (g, q);
    }
    if r < 1.0 {
        let g = z.exp() * e1_series(z);
        (g, Complex64::new(1.0, 0.0) - z * g)
    } else {
        match cf_tail(z) {
            Some(t) => {
                let d = z + 1.0 - t;
                let one_minus_t = Complex64::new(1.0, 0.0) - t;
                (d.inv(), one_minus_t / d)
            }
            None => {
                let g = z.exp() * e1_series(z);
                (g, Complex64::new(1.0, 0.0) - z * g)
            }
        }
    }
}

/// `e^z E₁(z)` for `Re z > 0`.
pub fn exp_e1(z: Complex64) -> Complex64 {
    exp_e1_pair(z).0
}

/// `e^x E₁(x)` for real `x > 0`.
pub fn exp_e1_real(x: f64) -> f64 {
    exp_e1(Complex64::new(x, 0.0)).re
}

fn e1_series(z: Complex64) -> Complex64 {
    // E₁(z) = −γ − ln z − Σ_{k≥1} (−z)^k / (k·k!)
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..200 {
        let kf = k as f64;
        term = term * (-z) / kf;
        let add = term / kf;
        sum += add;
        if add.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    -Complex64::new(EULER_GAMMA, 0.0) - z.ln() - sum
}

/// Tail `T = 1/(z+3 − 4/(z+5 − 9/(z+7 − …)))` of the continued fraction
/// `e^z E₁(z) = 1/(z + 1 − T)`, by the modified Lentz method.
fn cf_tail(z: Complex64) -> Option<Complex64> {
    let tiny = Complex64::new(1e-150, 0.0);
    let mut f = tiny;
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..20_000usize {
        let kf = k as f64;
        let a = if k == 1 { 1.0 } else { -kf * kf };
        let b = z + (2.0 * kf + 1.0);
        d = b + d * a;
        if d.norm() < 1e-150 {
            d = tiny;
        }
        c = b + c.inv() * a;
        if c.norm() < 1e-150 {
            c = tiny;
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            return Some(f);
        }
    }
    None
}

/// Gauss–Laguerre rule for `∫₀^∞ e^{−t} f(t) dt`.
#[derive(Debug, Clone)]
pub struct LaguerreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LaguerreRule {
    /// Golub–Welsch eigenvalues polished by Newton steps on `L_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss–Laguerre order must be at least 2");
        let mut diag: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64).collect();
        let mut off: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut first = vec![0.0; n];
        first[0] = 1.0;
        tridiagonal_ql(&mut diag, &mut off, &mut first);
        let mut pairs: Vec<(f64, f64)> = diag.iter().copied().zip(first.iter().map(|v| v * v)).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (x0, w0) in pairs {
            let mut x = x0;
            for _ in 0..3 {
                let (ln, dln) = laguerre_with_derivative(n, x);
                if dln == 0.0 {
                    break;
                }
                let step = ln / dln;
                x -= step;
                if step.abs() <= 1e-15 * x.abs() {
                    break;
                }
            }
            let (_, dln) = laguerre_with_derivative(n, x);
            // w = 1 / (x L_n'(x)²)
            let w = 1.0 / (x * dln * dln);
            nodes.push(x);
            weights.push(if w.is_finite() && w > 0.0 { w } else { w0 });
        }
        LaguerreRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫₀^∞ e^{−as} f(s) ds` by the substitution `t = as`.
    pub fn integrate_scaled<F: FnMut(f64) -> f64>(&self, a: f64, mut f: F) -> f64 {
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(x / a);
        }
        sum / a
    }
}

fn laguerre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 - x) * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    // x L_n' = n (L_n − L_{n−1})
    (p1, nf * (p1 - p0) / x)
}

/// Implicit QL on a symmetric tridiagonal matrix. `off[i]` couples rows
/// `i−1` and `i`. `z` holds one row of the eigenvector matrix on exit.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
