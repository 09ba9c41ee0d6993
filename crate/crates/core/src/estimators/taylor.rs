//! Remainder bounds for the second-order expansion of `A(x) = |x|^{2p}`.
//!
//! With `R(x, h) = |x+h|^{2p} − |x|^{2p} − 2p|x|^{2p−2}⟨x, h⟩` and
//! `D(x, h) = |x+h|^{2p} − |x|^{2p}` the checked inequalities are
//!
//! * (T1)  `|R| ≤ C1 (|x|^{2p−2} + |h|^{2p−2}) |h|²`
//! * (T2a) `D² ≤ 2 (4p² |x|^{4p−2} |h|² + C2 (|x|^{2p−2} + |h|^{2p−2})² |h|⁴)`
//! * (T2b) `D² ≤ 8p² |x|^{4p−2} |h|² + C3 |x|^{4p−4} |h|⁴ + C3 |h|^{4p}`
//!
//! All sides are homogeneous of the same degree and rotation invariant, so
//! the minimal constants are suprema over `|x| = 1`, `r = |h|` and the
//! cosine `c` of the angle between `x` and `h`, plus the `x = 0` case.

use serde::{Deserialize, Serialize};

use crate::spectral::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorConstants {
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Relative inflation applied to the computed suprema.
const INFLATION: f64 = 1e-6;

/// `(1 + z)^p − 1 − p z` without cancellation for small `z`.
fn expm1_minus_linear(z: f64, p: f64) -> f64 {
    (p * z.ln_1p()).exp_m1() - p * z
}

/// `(R, D)` at `|x| = 1`, `|h| = r`, cosine `c`.
fn reduced(p: f64, r: f64, c: f64) -> (f64, f64) {
    let z = 2.0 * r * c + r * r;
    let z = z.max(-1.0);
    let d = (p * z.ln_1p()).exp_m1();
    let rem = expm1_minus_linear(z, p) + p * r * r;
    (rem, d)
}

fn ratio_t1(p: f64, r: f64, c: f64) -> f64 {
    let (rem, _) = reduced(p, r, c);
    rem.abs() / ((1.0 + r.powf(2.0 * p - 2.0)) * r * r)
}

fn ratio_t2a(p: f64, r: f64, c: f64) -> f64 {
    let (_, d) = reduced(p, r, c);
    let excess = d * d - 8.0 * p * p * r * r;
    (excess / (2.0 * (1.0 + r.powf(2.0 * p - 2.0)).powi(2) * r.powi(4))).max(0.0)
}

fn ratio_t2b(p: f64, r: f64, c: f64) -> f64 {
    let (_, d) = reduced(p, r, c);
    let excess = d * d - 8.0 * p * p * r * r;
    (excess / (r.powi(4) + r.powf(4.0 * p))).max(0.0)
}

/// Grid scan over `(log r, c)` followed by compass refinement around the
/// best point.
fn supremum(f: impl Fn(f64, f64) -> f64) -> f64 {
    const NR: usize = 400;
    const NC: usize = 201;
    let (lr_lo, lr_hi) = (-6.0f64, 6.0f64);
    let eval = |lr: f64, c: f64| {
        let v = f(10f64.powf(lr), c.clamp(-1.0, 1.0));
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..NR {
        let lr = lr_lo + (lr_hi - lr_lo) * i as f64 / (NR - 1) as f64;
        for j in 0..NC {
            let c = -1.0 + 2.0 * j as f64 / (NC - 1) as f64;
            let v = eval(lr, c);
            if v > best.0 {
                best = (v, lr, c);
            }
        }
    }
    let (mut val, mut lr, mut c) = best;
    let (mut slr, mut sc) = ((lr_hi - lr_lo) / NR as f64, 2.0 / NC as f64);
    while slr > 1e-12 || sc > 1e-12 {
        let mut improved = false;
        for (dl, dc) in [(slr, 0.0), (-slr, 0.0), (0.0, sc), (0.0, -sc)] {
            let (nl, nc) = (lr + dl, (c + dc).clamp(-1.0, 1.0));
            let v = eval(nl, nc);
            if v > val {
                (val, lr, c) = (v, nl, nc);
                improved = true;
            }
        }
        if !improved {
            slr *= 0.5;
            sc *= 0.5;
        }
    }
    val
}

/// Minimal constants for `p ≥ 1`, inflated by a relative `1e-6`.
pub fn minimal_constants(p: f64) -> TaylorConstants {
    assert!(p >= 1.0, "Taylor constants need p >= 1");
    let mut c1 = supremum(|r, c| ratio_t1(p, r, c));
    let mut c2 = supremum(|r, c| ratio_t2a(p, r, c));
    let mut c3 = supremum(|r, c| ratio_t2b(p, r, c));
    if p > 1.0 {
        // r → 0 limit of T1 along c = ±1, and the x = 0 values, which are
        // the r → ∞ limits.
        c1 = c1.max(p * (2.0 * p - 1.0)).max(1.0);
        c2 = c2.max(0.5);
        c3 = c3.max(1.0);
    } else {
        c1 = c1.max(0.5);
        c2 = c2.max(0.125);
        c3 = c3.max(0.5);
    }
    let inflate = 1.0 + INFLATION;
    TaylorConstants {
        p,
        c1: c1 * inflate,
        c2: c2 * inflate,
        c3: c3 * inflate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub lhs: f64,
    pub rhs: f64,
}

impl Margin {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// Holds up to rounding relative to the larger side.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-12 * self.lhs.abs().max(self.rhs.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport {
    pub p: f64,
    pub first: Margin,
    pub second_a: Margin,
    pub second_b: Margin,
}

impl TaylorReport {
    pub fn holds(&self) -> bool {
        self.first.holds() && self.second_a.holds() && self.second_b.holds()
    }
}

/// Both sides of (T1), (T2a), (T2b) at a concrete `(x, h)`.
pub fn taylor_remainder_check(x: &[f64], h: &[f64], constants: &TaylorConstants) -> TaylorReport {
    assert_eq!(x.len(), h.len(), "x and h must have the same length");
    let p = constants.p;
    let nx = dot(x, x).sqrt();
    let nh = dot(h, h).sqrt();
    let xh = dot(x, h);

    // |x+h|² = |x|² + z with z formed without cancellation.
    let z = 2.0 * xh + nh * nh;
    let (d, rem) = if nx == 0.0 {
        let a = nh.powf(2.0 * p);
        (a, a)
    } else {
        let w = (z / (nx * nx)).max(-1.0);
        let scale = nx.powf(2.0 * p);
        (
            scale * (p * w.ln_1p()).exp_m1(),
            scale * expm1_minus_linear(w, p) + p * nx.powf(2.0 * p - 2.0) * nh * nh,
        )
    };
    let g = nx.powf(2.0 * p - 2.0) + nh.powf(2.0 * p - 2.0);
    let lead = 4.0 * p * p * nx.powf(4.0 * p - 2.0) * nh * nh;

    TaylorReport {
        p,
        first: Margin {
            lhs: rem.abs(),
            rhs: constants.c1 * g * nh * nh,
        },
        second_a: Margin {
            lhs: d * d,
            rhs: 2.0 * (lead + constants.c2 * g * g * nh.powi(4)),
        },
        second_b: Margin {
            lhs: d * d,
            rhs: 2.0 * lead + constants.c3 * nx.powf(4.0 * p - 4.0) * nh.powi(4) + constants.c3 * nh.powf(4.0 * p),
        },
    }
}
