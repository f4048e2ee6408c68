//! Stationary law of the SIS reactor on `x + y <= bound` by a dense solve of
//! the truncated generator. Arrivals that would exceed the bound are dropped.

use nalgebra::{DMatrix, DVector};

pub struct Rates {
    pub lambda: f64,
    pub p: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn states(bound: u32) -> Vec<(u32, u32)> {
    (0..=bound).flat_map(|n| (0..=n).map(move |y| (n - y, y))).collect()
}

/// `(state, probability)` pairs.
pub fn stationary(r: &Rates, bound: u32) -> Vec<((u32, u32), f64)> {
    let st = states(bound);
    let idx = |x: u32, y: u32| st.iter().position(|&s| s == (x, y)).unwrap();
    let n = st.len();
    let mut qt = DMatrix::<f64>::zeros(n, n);
    for (i, &(x, y)) in st.iter().enumerate() {
        let (xf, yf) = (f64::from(x), f64::from(y));
        let mut out = Vec::new();
        if x + y < bound {
            out.push((idx(x + 1, y), r.lambda * (1.0 - r.p)));
            out.push((idx(x, y + 1), r.lambda * r.p));
        }
        if x > 0 {
            out.push((idx(x - 1, y), r.mu * xf));
        }
        if y > 0 {
            out.push((idx(x, y - 1), r.mu * yf));
            out.push((idx(x + 1, y - 1), r.beta * yf));
        }
        if x > 0 && y > 0 {
            out.push((idx(x - 1, y + 1), r.alpha * xf * yf));
        }
        for (j, rate) in out {
            if rate > 0.0 {
                qt[(j, i)] += rate;
                qt[(i, i)] -= rate;
            }
        }
    }
    for j in 0..n {
        qt[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = qt.lu().solve(&b).expect("singular truncated generator");
    st.into_iter().zip(pi.iter().copied()).collect()
}

/// `E[x^a y^b]` for `a + b <= 4`, laid out as `[a][b]`.
pub fn moments(dist: &[((u32, u32), f64)]) -> [[f64; 5]; 5] {
    let mut t = [[0.0; 5]; 5];
    for &((x, y), w) in dist {
        for a in 0..5 {
            for b in 0..(5 - a) {
                t[a][b] += w * f64::from(x).powi(a as i32) * f64::from(y).powi(b as i32);
            }
        }
    }
    t
}

/// Probability of the states on the truncation boundary.
pub fn boundary_mass(dist: &[((u32, u32), f64)], bound: u32) -> f64 {
    dist.iter().filter(|((x, y), _)| x + y == bound).map(|(_, w)| w).sum()
}
