//! Boundary-layer profiles `h`, `v`, their minimizer θ₀ and the expansion
//! of the Robin function near the boundary.
//!
//! Both profile integrals reduce to the exponential integral:
//!
//! ```text
//! ∫₀^∞ e^{−t} log(c+t) dt = log c + e^c E₁(c)
//! ∫₀^∞ e^{−as} (1+s)^{−2} ds = 1 − a e^a E₁(a)
//! ```
//!
//! so that with `g(x) = e^x E₁(x)`
//!
//! ```text
//! h(θ) = 4 log(2θ) + 8 g(2θ)
//! v(θ) = −6θ + 8θ² g(2θ)
//! ```

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use crate::special::exp_e1_real;
use crate::{Error, Result};

pub const THETA_MIN: f64 = 1e-3;
pub const THETA_MAX: f64 = 1e3;

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("profile argument must be positive, got {theta}")))
    }
}

/// `h(θ) = −4 log(2θ) + 8 ∫₀^∞ e^{−t} log(2θ+t) dt`.
pub fn h_profile(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(h_unchecked(theta))
}

fn h_unchecked(theta: f64) -> f64 {
    4.0 * (2.0 * theta).ln() + 8.0 * exp_e1_real(2.0 * theta)
}

/// First derivative of `h`.
pub fn h_prime(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(h_prime_unchecked(theta))
}

fn h_prime_unchecked(theta: f64) -> f64 {
    // d/dx [e^x E₁(x)] = e^x E₁(x) − 1/x
    16.0 * exp_e1_real(2.0 * theta) - 4.0 / theta
}

/// Second derivative of `h`.
pub fn h_second(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(32.0 * exp_e1_real(2.0 * theta) - 16.0 / theta + 4.0 / (theta * theta))
}

/// `v(θ) = −2θ − 4θ ∫₀^∞ e^{−2θs}/(1+s)² ds`.
pub fn v_profile(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(-6.0 * theta + 8.0 * theta * theta * exp_e1_real(2.0 * theta))
}

/// Location and value of the minimum of `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta0 {
    pub theta0: f64,
    pub h: f64,
    pub h_second: f64,
}

/// Minimizer of `h` on `[10⁻³, 10³]`.
///
/// A log-spaced scan brackets the minimum, golden-section search narrows the
/// bracket and bisection on `h′` finishes. More than one sign change of `h′`
/// along the scan is reported as an integrity failure.
pub fn find_theta0() -> Result<Theta0> {
    let n = 601;
    let ratio = (THETA_MAX / THETA_MIN).ln() / (n - 1) as f64;
    let thetas: Vec<f64> = (0..n).map(|i| THETA_MIN * (ratio * i as f64).exp()).collect();
    let slopes: Vec<f64> = thetas.iter().map(|&t| h_prime_unchecked(t)).collect();
    let changes = slopes.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
    if changes != 1 {
        return Err(Error::Integrity(format!("h′ changes sign {changes} times on the scan")));
    }
    let values: Vec<f64> = thetas.iter().map(|&t| h_unchecked(t)).collect();
    let mut best = 0;
    for i in 1..n {
        if values[i] < values[best] {
            best = i;
        }
    }
    let mut lo = thetas[best.saturating_sub(1)];
    let mut hi = thetas[(best + 1).min(n - 1)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (h_unchecked(c), h_unchecked(d));
    for _ in 0..20 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = h_unchecked(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = h_unchecked(d);
        }
    }
    // widen slightly so the root of h′ stays inside
    lo *= 0.99;
    hi *= 1.01;
    if h_prime_unchecked(lo) >= 0.0 || h_prime_unchecked(hi) <= 0.0 {
        return Err(Error::Integrity("golden-section bracket lost the root of h′".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h_prime_unchecked(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta0 = 0.5 * (lo + hi);
    let slope = h_prime_unchecked(theta0);
    if slope.abs() > 1e-8 {
        return Err(Error::Integrity(format!("|h′(θ₀)| = {slope:e} after refinement")));
    }
    Ok(Theta0 { theta0, h: h_unchecked(theta0), h_second: h_second(theta0)? })
}

/// Log-spaced tabulation of the profiles over `[10⁻³, 10³]`.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub theta: Vec<f64>,
    pub h: Vec<f64>,
    pub h_prime: Vec<f64>,
    pub h_second: Vec<f64>,
    pub v: Vec<f64>,
    pub minimum: Theta0,
}

impl ProfileTable {
    pub fn new(samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::Parameter("profile table needs at least two samples".into()));
        }
        let minimum = find_theta0()?;
        let ratio = (THETA_MAX / THETA_MIN).ln() / (samples - 1) as f64;
        let theta: Vec<f64> = (0..samples).map(|i| THETA_MIN * (ratio * i as f64).exp()).collect();
        let mut table = ProfileTable {
            h: Vec::with_capacity(samples),
            h_prime: Vec::with_capacity(samples),
            h_second: Vec::with_capacity(samples),
            v: Vec::with_capacity(samples),
            theta,
            minimum,
        };
        for &t in &table.theta {
            table.h.push(h_unchecked(t));
            table.h_prime.push(h_prime_unchecked(t));
            table.h_second.push(h_second(t)?);
            table.v.push(v_profile(t)?);
        }
        Ok(table)
    }
}

/// `−4 log λ + h(λd) + κ v(λd)/λ`.
pub fn robin_expansion(lambda: f64, d: f64, kappa: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("λ must be positive, got {lambda}")));
    }
    let theta = lambda * d;
    if !(THETA_MIN..=THETA_MAX).contains(&theta) {
        return Err(Error::Extrapolation(theta));
    }
    Ok(-4.0 * lambda.ln() + h_unchecked(theta) + kappa * v_profile(theta)? / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::adaptive_simpson;

    #[test]
    fn h_at_half_matches_simpson() {
        let f = |t: f64| (-t).exp() * (1.0 + t).ln();
        let oracle = 8.0 * adaptive_simpson(&f, 0.0, 60.0, 1e-14);
        assert!((h_profile(0.5).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn profiles_match_gauss_laguerre() {
        let rule = crate::special::LaguerreRule::new(128);
        for theta in [0.25, 0.5, 1.0, 3.0] {
            let h = -4.0 * (2.0 * theta).ln() + 8.0 * rule.integrate_scaled(1.0, |t| (2.0 * theta + t).ln());
            assert!((h_profile(theta).unwrap() - h).abs() < 1e-10, "h at {theta}");
            let v = -2.0 * theta - 4.0 * theta * rule.integrate_scaled(2.0 * theta, |s| 1.0 / ((1.0 + s) * (1.0 + s)));
            assert!((v_profile(theta).unwrap() - v).abs() < 1e-10, "v at {theta}");
        }
    }

    #[test]
    fn v_at_one_matches_trapezoid() {
        let n = 2_000_000;
        let hstep = 50.0 / n as f64;
        let f = |s: f64| (-2.0 * s).exp() / ((1.0 + s) * (1.0 + s));
        let mut sum = 0.5 * (f(0.0) + f(50.0));
        for i in 1..n {
            sum += f(i as f64 * hstep);
        }
        let oracle = -2.0 - 4.0 * sum * hstep;
        assert!((v_profile(1.0).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn profile_limits() {
        let t = 1e3;
        assert!((h_profile(t).unwrap() - 4.0 * t.ln()).abs() <= 10.0);
        let t = 1e-3;
        assert!((h_profile(t).unwrap() + 4.0 * t.ln()).abs() <= 10.0);
        assert!(v_profile(1e-9).unwrap().abs() < 1e-7);
        let t = 1e3;
        // tail integral ≈ 1/(2θ) − 2/(2θ)² so v + 2θ + 2 ≈ 4/(2θ)
        assert!((v_profile(t).unwrap() + 2.0 * t + 2.0).abs() < 1e-2);
    }

    #[test]
    fn theta0_properties() {
        let t = find_theta0().unwrap();
        assert!(t.h_second > 0.0);
        assert!(h_prime(t.theta0).unwrap().abs() <= 1e-8);
        assert!((t.theta0 - 0.305_028_9).abs() < 1e-6);
    }

    #[test]
    fn derivatives_match_differences() {
        for &t in &[0.01, 0.3, 1.0, 7.0] {
            let e = 1e-5 * t;
            let fd = (h_profile(t + e).unwrap() - h_profile(t - e).unwrap()) / (2.0 * e);
            assert!((fd - h_prime(t).unwrap()).abs() < 1e-6 * (1.0 + fd.abs()));
            let fd2 = (h_prime(t + e).unwrap() - h_prime(t - e).unwrap()) / (2.0 * e);
            assert!((fd2 - h_second(t).unwrap()).abs() < 1e-5 * (1.0 + fd2.abs()));
        }
    }

    #[test]
    fn expansion_range() {
        assert!(matches!(robin_expansion(10.0, 1e-5, 1.0), Err(Error::Extrapolation(_))));
        let plane = robin_expansion(20.0, 0.05, 0.0).unwrap();
        assert!((plane - (-4.0 * 20f64.ln() + h_profile(1.0).unwrap())).abs() < 1e-14);
    }
}
