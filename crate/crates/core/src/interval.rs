//! Closed real intervals with outward-widened arithmetic.
//!
//! Every operation returns an enclosure of all pointwise results computed by
//! the same floating point routines. Endpoints are nudged outward by a couple
//! of ulps after each rounded operation, so containment does not depend on the
//! rounding mode. Infinite endpoints are allowed; an empty interval is never
//! constructed.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

#[inline]
fn nudge<T: Scalar>(x: T) -> T {
    x.abs() * T::epsilon() * T::of(2.0) + T::min_positive_value()
}

#[inline]
fn down<T: Scalar>(x: T) -> T {
    if x.is_finite() {
        x - nudge(x)
    } else {
        x
    }
}

#[inline]
fn up<T: Scalar>(x: T) -> T {
    if x.is_finite() {
        x + nudge(x)
    } else {
        x
    }
}

/// Product with the convention `0 * inf = 0`, which is sound for endpoint
/// products since infinite endpoints are never attained.
#[inline]
fn emul<T: Scalar>(a: T, b: T) -> T {
    if a.is_zero() || b.is_zero() {
        T::zero()
    } else {
        a * b
    }
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::EmptyInterval {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: T) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn entire() -> Self {
        Interval {
            lo: T::neg_infinity(),
            hi: T::infinity(),
        }
    }

    /// Builds from already-ordered endpoints; a NaN endpoint widens to the
    /// whole line so the result stays sound.
    fn raw(lo: T, hi: T) -> Self {
        if lo.is_nan() || hi.is_nan() {
            Self::entire()
        } else {
            Interval { lo, hi }
        }
    }

    fn widened(lo: T, hi: T) -> Self {
        Self::raw(down(lo), up(hi))
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> T {
        if self.lo.is_finite() && self.hi.is_finite() {
            self.lo + (self.hi - self.lo) / T::of(2.0)
        } else {
            T::nan()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(T::zero())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: &Self) -> Self {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        if rhs.contains_zero() {
            return Err(Error::Domain { op: "division" });
        }
        let q = [self.lo / rhs.lo, self.lo / rhs.hi, self.hi / rhs.lo, self.hi / rhs.hi];
        Ok(Self::corners(q))
    }

    fn corners(c: [T; 4]) -> Self {
        let mut lo = c[0];
        let mut hi = c[0];
        for &v in &c[1..] {
            if v.is_nan() {
                return Self::entire();
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if c[0].is_nan() {
            return Self::entire();
        }
        Self::widened(lo, hi)
    }

    pub fn powi(self, n: i32) -> Result<Self> {
        if n == 0 {
            return Ok(Self::point(T::one()));
        }
        if n < 0 {
            let denom = self.powi(-n)?;
            return Self::point(T::one()).checked_div(denom);
        }
        let a = self.lo.powi(n);
        let b = self.hi.powi(n);
        if n % 2 == 1 {
            return Ok(Self::widened(a, b));
        }
        Ok(if self.lo >= T::zero() {
            Self::widened(a, b)
        } else if self.hi <= T::zero() {
            Self::widened(b, a)
        } else {
            Self::raw(T::zero(), up(a.max(b)))
        })
    }

    pub fn exp(self) -> Self {
        Self::raw(down(self.lo.exp()).max(T::zero()), up(self.hi.exp()))
    }

    pub fn ln(self) -> Result<Self> {
        if self.lo <= T::zero() {
            return Err(Error::Domain { op: "log" });
        }
        Ok(Self::widened(self.lo.ln(), self.hi.ln()))
    }

    pub fn sqrt(self) -> Result<Self> {
        if self.lo < T::zero() {
            return Err(Error::Domain { op: "sqrt" });
        }
        Ok(Self::raw(down(self.lo.sqrt()).max(T::zero()), up(self.hi.sqrt())))
    }

    pub fn sin(self) -> Self {
        // sin peaks at pi/2 and bottoms at 3pi/2 (mod 2pi)
        self.periodic(T::sin, T::FRAC_PI_2(), T::FRAC_PI_2() * T::of(3.0))
    }

    pub fn cos(self) -> Self {
        self.periodic(T::cos, T::zero(), T::PI())
    }

    fn periodic(self, f: fn(T) -> T, peak: T, trough: T) -> Self {
        let unit = Self::raw(-T::one(), T::one());
        if !self.is_finite() || self.width() >= T::TAU() {
            return unit;
        }
        let fa = f(self.lo);
        let fb = f(self.hi);
        let mut lo = down(down(fa.min(fb))).max(-T::one());
        let mut hi = up(up(fa.max(fb))).min(T::one());
        if hits_phase(self.lo, self.hi, peak) {
            hi = T::one();
        }
        if hits_phase(self.lo, self.hi, trough) {
            lo = -T::one();
        }
        Self::raw(lo, hi)
    }
}

/// Whether `[a, b]` (width < 2pi) contains `phase + 2*pi*k` for some integer
/// `k`. Errs on the side of reporting a hit near the boundaries.
fn hits_phase<T: Scalar>(a: T, b: T, phase: T) -> bool {
    let tau = T::TAU();
    let slack = T::of(1e-9) * (T::one() + a.abs() + b.abs());
    let k = ((a - phase) / tau).floor();
    (0..3).any(|j| {
        let p = phase + tau * (k + T::of(j as f64));
        p >= a - slack && p <= b + slack
    })
}

impl<T: Scalar> Add for Interval<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::widened(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl<T: Scalar> Sub for Interval<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::widened(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl<T: Scalar> Mul for Interval<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::corners([
            emul(self.lo, rhs.lo),
            emul(self.lo, rhs.hi),
            emul(self.hi, rhs.lo),
            emul(self.hi, rhs.hi),
        ])
    }
}

impl<T: Scalar> Neg for Interval<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}
