//! Bivariate polynomials in `X` and `Y` with expectations taken from
//! time-average moments.

use std::ops::{Add, Mul, Sub};

use crate::observe::{Window, MAX_DEGREE};

const CAP: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly {
    c: [[f64; CAP]; CAP],
}

impl Poly {
    pub fn zero() -> Self {
        Poly { c: [[0.0; CAP]; CAP] }
    }

    pub fn constant(v: f64) -> Self {
        Poly::monomial(0, 0, v)
    }

    pub fn monomial(a: usize, b: usize, coef: f64) -> Self {
        let mut p = Poly::zero();
        p.c[a][b] = coef;
        p
    }

    pub fn x() -> Self {
        Poly::monomial(1, 0, 1.0)
    }

    pub fn y() -> Self {
        Poly::monomial(0, 1, 1.0)
    }

    pub fn scale(mut self, k: f64) -> Self {
        for row in self.c.iter_mut() {
            for v in row.iter_mut() {
                *v *= k;
            }
        }
        self
    }

    pub fn pow(self, n: u32) -> Self {
        (0..n).fold(Poly::constant(1.0), |acc, _| acc * self)
    }

    pub fn coef(&self, a: usize, b: usize) -> f64 {
        self.c[a][b]
    }

    /// Largest `a + b` with a nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        let mut d = None;
        for a in 0..CAP {
            for b in 0..CAP {
                if self.c[a][b] != 0.0 {
                    d = d.max(Some(a + b));
                }
            }
        }
        d
    }

    /// `E[p(X, Y)]` from the moments of `w`.
    ///
    /// Panics if the degree exceeds the tracked moment degree; identities are
    /// built from fixed formulas, so this is a construction error.
    pub fn expect(&self, w: &Window) -> f64 {
        let mut s = 0.0;
        for a in 0..CAP {
            for b in 0..CAP {
                let v = self.c[a][b];
                if v != 0.0 {
                    assert!(a + b <= MAX_DEGREE, "polynomial degree {} exceeds {MAX_DEGREE}", a + b);
                    s += v * w.moment(a, b);
                }
            }
        }
        s
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, o: Poly) -> Poly {
        for a in 0..CAP {
            for b in 0..CAP {
                self.c[a][b] += o.c[a][b];
            }
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, o: Poly) -> Poly {
        self + o.scale(-1.0)
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        let mut r = Poly::zero();
        for a in 0..CAP {
            for b in 0..CAP {
                let u = self.c[a][b];
                if u == 0.0 {
                    continue;
                }
                for i in 0..CAP - a {
                    for j in 0..CAP - b {
                        let v = o.c[i][j];
                        if v != 0.0 {
                            r.c[a + i][b + j] += u * v;
                        }
                    }
                }
            }
        }
        r
    }
}

/// Rates entering the stationary balance of `X^m Y^n` in the SIS reactor.
#[derive(Debug, Clone, Copy)]
pub struct RcpRates {
    pub lambda_p: f64,
    pub lambda_q: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// The balance of `X^m Y^n` as `(gain, loss)`: expected change from
/// arrivals, recoveries and infections against the expected decrease from
/// departures. Stationarity makes their expectations equal.
pub fn rcp(m: u32, n: u32, r: &RcpRates) -> (Poly, Poly) {
    let (x, y, one) = (Poly::x(), Poly::y(), Poly::constant(1.0));
    let xm = x.pow(m);
    let yn = y.pow(n);
    let target = xm * yn;
    let arr_i = (xm * ((y + one).pow(n) - yn)).scale(r.lambda_p);
    let arr_s = (((x + one).pow(m) - xm) * yn).scale(r.lambda_q);
    let rec = (y * ((x + one).pow(m) * (y - one).pow(n) - target)).scale(r.beta);
    let inf = (x * y * ((x - one).pow(m) * (y + one).pow(n) - target)).scale(r.alpha);
    let dep_s = (x * (xm - (x - one).pow(m)) * yn).scale(r.mu);
    let dep_i = (y * xm * (yn - (y - one).pow(n))).scale(r.mu);
    (arr_i + arr_s + rec + inf, dep_s + dep_i)
}
