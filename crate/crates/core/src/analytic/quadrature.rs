//! Globally adaptive Gauss–Legendre quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Points per panel.
const ORDER: usize = 20;

/// Default cap on the number of panels.
pub const MAX_PANELS: usize = 4_000;

fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        // Newton iteration on P_n from the Chebyshev-like initial guesses.
        let n = ORDER;
        let mut x = [0.0; ORDER];
        let mut w = [0.0; ORDER];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = rule();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..ORDER {
        s += w[i] * f(c + h * x[i]);
    }
    s * h
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    coarse_left: f64,
    coarse_right: f64,
    err: f64,
}

impl Segment {
    fn value(&self) -> f64 {
        self.coarse_left + self.coarse_right
    }
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn segment(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64) -> Segment {
    let m = 0.5 * (a + b);
    let l = panel(f, a, m);
    let r = panel(f, m, b);
    Segment {
        a,
        b,
        coarse_left: l,
        coarse_right: r,
        err: (whole - l - r).abs(),
    }
}

/// Integral value and an upper estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_bound: f64,
    pub panels: usize,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Each panel is compared against the sum of its two halves; the panel with
/// the largest discrepancy is split until the summed discrepancy is below
/// `tol` or `max_panels` is reached (then an error carries the bound).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<Quadrature> {
    if !(b > a) {
        return Ok(Quadrature {
            value: 0.0,
            error_bound: 0.0,
            panels: 0,
        });
    }
    let whole = panel(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(segment(&f, a, b, whole));
    let mut total_err = heap.peek().map(|s| s.err).unwrap_or(0.0);
    loop {
        if total_err <= tol {
            break;
        }
        if heap.len() >= max_panels {
            return Err(Error::Quadrature { tol, achieved: total_err });
        }
        let worst = heap.pop().expect("non-empty heap");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // Interval exhausted at machine precision.
            return Err(Error::Quadrature { tol, achieved: total_err });
        }
        let l = segment(&f, worst.a, m, worst.coarse_left);
        let r = segment(&f, m, worst.b, worst.coarse_right);
        total_err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        // Recompute occasionally to avoid drift in the running sum.
        if heap.len() % 64 == 0 {
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
    // Sum smallest first for accuracy.
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.value().abs().total_cmp(&y.value().abs()));
    let value = segs.iter().map(Segment::value).sum();
    let error_bound = segs.iter().map(|s| s.err).sum();
    Ok(Quadrature {
        value,
        error_bound,
        panels: segs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let q = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1e-14, 100).unwrap();
        assert!((q.value - (256.0 / 8.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_two() {
        let (x, w) = rule();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(x.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn steep_integrand() {
        // integral of s^(1/c) over [0,1] = c/(1+c), with c small and large.
        for c in [0.01, 0.3, 5.0, 40.0] {
            let q = integrate(|s: f64| s.powf(1.0 / c), 0.0, 1.0, 1e-12, MAX_PANELS).unwrap();
            assert!((q.value - c / (1.0 + c)).abs() < 1e-11, "c={c}: {}", q.value);
        }
    }

    #[test]
    fn budget_exhaustion_reports_bound() {
        let e = integrate(|s: f64| (1.0 / s).sin(), 0.0, 1.0, 1e-15, 8).unwrap_err();
        match e {
            Error::Quadrature { achieved, .. } => assert!(achieved > 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }
}
