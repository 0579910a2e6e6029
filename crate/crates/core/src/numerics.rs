//! Concave value functions and the bracketed scalar root finders used by the
//! planner and the designer.
//!
//! Every solver here is plain bisection on a sign-changing bracket. The
//! equations are all monotone on the brackets we hand them, so bisection
//! converges to the unique root down to adjacent floating point values and
//! stays bit-for-bit deterministic.

use std::fmt;

use crate::error::{Error, Result};

/// Default absolute tolerance on solver residuals.
pub const SOLVER_TOL: f64 = 1e-10;

/// Iteration cap for every bisection loop.
pub const MAX_ITERATIONS: usize = 200;

/// A risk-averse agent's valuation of monetary transfers.
///
/// Implementors must satisfy `v(0) = 0`, be strictly increasing and concave on
/// the nonnegative reals, and have `v(z) / z -> 0` as `z -> inf`.
pub trait ValueFunction: fmt::Debug + Send + Sync {
    fn eval(&self, z: f64) -> f64;

    /// Solves `v(z) = y` for `y >= 0`.
    fn inverse(&self, y: f64) -> f64;

    /// `v'(z)`; may be `+inf` at `z = 0`.
    fn derivative(&self, z: f64) -> f64;

    /// Solves `v'(z) = w` for `w > 0`.
    fn derivative_inverse(&self, w: f64) -> f64;

    /// Right derivative at zero, `d0`. `+inf` when the slope is unbounded.
    fn derivative_at_zero(&self) -> f64;
}

/// `v(z) = beta * z^alpha` with `0 < alpha < 1` and `beta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerValue {
    alpha: f64,
    beta: f64,
}

impl PowerValue {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidValueFunction(format!(
                "power exponent alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidValueFunction(format!(
                "power scale beta must be positive, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// `v(z) = sqrt(z)`.
    pub fn sqrt() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl ValueFunction for PowerValue {
    fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if self.alpha == 0.5 {
            self.beta * z.sqrt()
        } else {
            self.beta * z.powf(self.alpha)
        }
    }

    fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let u = y / self.beta;
        if self.alpha == 0.5 {
            u * u
        } else {
            u.powf(1.0 / self.alpha)
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return f64::INFINITY;
        }
        if self.alpha == 0.5 {
            0.5 * self.beta / z.sqrt()
        } else {
            self.alpha * self.beta * z.powf(self.alpha - 1.0)
        }
    }

    fn derivative_inverse(&self, w: f64) -> f64 {
        if w.is_infinite() {
            return 0.0;
        }
        (w / (self.alpha * self.beta)).powf(1.0 / (self.alpha - 1.0))
    }

    fn derivative_at_zero(&self) -> f64 {
        f64::INFINITY
    }
}

/// Finds the root of a monotone function on `[lo, hi]` by bisection.
///
/// `f` may be increasing or decreasing; only a sign change across the bracket
/// is required. Endpoint values may be infinite (only their sign is used), but
/// every interior evaluation must be finite. An endpoint whose residual is
/// already within `tol` is returned as is; otherwise bisection runs until the
/// bracket closes to adjacent floats or the iteration cap is hit.
pub fn solve_monotone<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::OutOfDomain {
            what: "bracket",
            value: if lo.is_finite() { hi } else { lo },
        });
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.is_nan() {
        return Err(Error::NonFinite { x: lo });
    }
    if f_hi.is_nan() {
        return Err(Error::NonFinite { x: hi });
    }
    if f_lo.abs() <= tol {
        return Ok(lo);
    }
    if f_hi.abs() <= tol {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }

    // Orient so that f(neg) < 0 < f(pos).
    let (mut neg, mut pos) = if f_lo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut mid = 0.5 * (neg + pos);
    for _ in 0..MAX_ITERATIONS {
        mid = 0.5 * (neg + pos);
        if mid == neg || mid == pos {
            break;
        }
        let f_mid = f(mid);
        if !f_mid.is_finite() {
            return Err(Error::NonFinite { x: mid });
        }
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid < 0.0 {
            neg = mid;
        } else {
            pos = mid;
        }
    }
    Ok(mid)
}

/// Solves `v(z) / z = target` for the unique `z > 0`.
///
/// `v(z)/z` decreases strictly from `d0` to 0, so a solution exists exactly
/// when `0 < target < d0`.
pub fn solve_v_ratio(v: &dyn ValueFunction, target: f64) -> Result<f64> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::NoSolution(format!(
            "ratio target must be positive, got {target}"
        )));
    }
    if target >= v.derivative_at_zero() {
        return Err(Error::NoSolution(format!(
            "ratio target {target} is not below the slope at zero {}",
            v.derivative_at_zero()
        )));
    }
    let g = |z: f64| v.eval(z) / z - target;

    // Bracket by doubling outward from z = 1.
    let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
    if g(1.0) > 0.0 {
        while g(hi) > 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NoSolution(format!(
                    "ratio target {target} not bracketed above"
                )));
            }
        }
        lo = hi / 2.0;
    } else {
        while g(lo) < 0.0 {
            lo /= 2.0;
            if lo == 0.0 {
                return Err(Error::NoSolution(format!(
                    "ratio target {target} not bracketed below"
                )));
            }
        }
        hi = lo * 2.0;
    }
    // Relative residual: the ratio itself can be large for small z.
    solve_monotone(|z| g(z) / target, lo, hi, SOLVER_TOL)
}

/// Solves `v(r - x) - x v'(r - x) = c` for `x` in `[0, r - v^{-1}(c)]`.
///
/// This is the tangency point of the line with slope `c` and the curve
/// `x v(r - x)`, which maximizes the Nash product along the frontier.
pub fn solve_tangent_np(v: &dyn ValueFunction, r: f64, c: f64) -> Result<f64> {
    let z_min = v.inverse(c);
    if r - z_min < -SOLVER_TOL * (1.0 + r) {
        return Err(Error::NoSolution(format!(
            "tangency requires r - v^-1(c) >= 0 (r = {r}, v^-1(c) = {z_min})"
        )));
    }
    // Solve in terms of the transfer z = r - x, where the residual increases.
    let z_lo = z_min.min(r);
    if z_lo >= r {
        return Ok(0.0);
    }
    let h = |z: f64| v.eval(z) - (r - z) * v.derivative(z) - c;
    let z = solve_monotone(h, z_lo, r, SOLVER_TOL)?;
    Ok((r - z).max(0.0))
}

/// Solves `x = v(r - x) - c` for the unique `x >= 0`.
pub fn solve_equal_split(v: &dyn ValueFunction, r: f64, c: f64) -> Result<f64> {
    if v.eval(r) - c < -SOLVER_TOL {
        return Err(Error::NoSolution(format!(
            "equal split requires v(r) - c >= 0 (r = {r}, c = {c})"
        )));
    }
    let phi = |x: f64| x - v.eval(r - x) + c;
    solve_monotone(phi, 0.0, r.max(0.0), SOLVER_TOL)
}
