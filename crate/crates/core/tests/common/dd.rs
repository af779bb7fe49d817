//! Double-double arithmetic (about 32 significant digits) used as a
//! reference evaluator for the plasticity formulas. Shares no code with
//! the library.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// exp by halving into the Taylor region and squaring back up.
    pub fn exp(self) -> Dd {
        const HALVINGS: i32 = 12;
        let scale = 2f64.powi(-HALVINGS);
        let r = Dd {
            hi: self.hi * scale,
            lo: self.lo * scale,
        };
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for k in 1..30 {
            term = term * r / Dd::from(k as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-40 {
                break;
            }
        }
        for _ in 0..HALVINGS {
            sum = sum * sum;
        }
        sum
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

fn d(x: f64) -> Dd {
    Dd::from(x)
}

/// (w_max - w_min) / (1 - e^-v)
pub fn alpha(v: f64, w_min: f64, w_max: f64) -> Dd {
    (d(w_max) - d(w_min)) / (Dd::ONE - (-d(v)).exp())
}

/// Potentiation with the formula's own sign.
pub fn ltp(w: f64, gap: f64, bounds: (f64, f64), v: f64, beta: f64, window: f64) -> Dd {
    let (lo, hi) = bounds;
    let timing = d(window) / (d(gap) + Dd::ONE);
    let drive = alpha(v, lo, hi) + d(lo) - d(w);
    let shape = Dd::ONE - (-(d(beta) * d(v)) / d(256.0)).exp();
    timing * drive * shape
}

/// Depression with the formula's own sign.
pub fn ltd(w: f64, gap: f64, bounds: (f64, f64), v: f64, window: f64) -> Dd {
    let (lo, hi) = bounds;
    let timing = d(window) / (d(gap) + Dd::ONE);
    let drive = alpha(v, lo, hi) - d(hi) + d(w);
    let shape = Dd::ONE - (d(v) / d(256.0)).exp();
    -(timing * drive * shape)
}

