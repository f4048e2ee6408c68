//! Sweep grids: `lo:hi:logN`, `lo:hi:linN` or a comma-separated list.

use crate::error::{Error, Result};

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let bad = |why: &str| Error::invalid("grid", format!("{s:?}: {why}"));
    let pts: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, spec] = parts[..] else {
            return Err(bad("expected lo:hi:logN or lo:hi:linN"));
        };
        let lo: f64 = lo.parse().map_err(|_| bad("bad lower end"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("bad upper end"))?;
        let (log, n) = if let Some(n) = spec.strip_prefix("log") {
            (true, n)
        } else if let Some(n) = spec.strip_prefix("lin") {
            (false, n)
        } else {
            return Err(bad("spacing must be logN or linN"));
        };
        let n: usize = n.parse().map_err(|_| bad("bad point count"))?;
        if n == 0 {
            return Err(bad("need at least one point"));
        }
        if log && !(lo > 0.0) {
            return Err(bad("log spacing needs lo > 0"));
        }
        if n == 1 {
            vec![lo]
        } else {
            (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    if i == n - 1 {
                        hi
                    } else if log {
                        round_sig((lo.ln() + t * (hi.ln() - lo.ln())).exp())
                    } else {
                        lo + t * (hi - lo)
                    }
                })
                .collect()
        }
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad("bad list entry")))
            .collect::<Result<_>>()?
    };
    if pts.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite point"));
    }
    if pts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("grid must be strictly increasing"));
    }
    Ok(pts)
}

/// Drops float noise such as 1.9999999999999998 from log-spaced points.
fn round_sig(v: f64) -> f64 {
    format!("{v:.13e}").parse().unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_hits_ends() {
        let g = parse_grid("0.5:20:log9").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!((g[0], g[8]), (0.5, 20.0));
        let r = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
    }

    #[test]
    fn lin_and_list() {
        assert_eq!(parse_grid("0:1:lin5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.25:8:log6").unwrap(), vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0]);
        assert_eq!(parse_grid("0.25, 0.5,1").unwrap(), vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        for s in ["1:0:lin3", "0:1:log3", "1,1", "a:b:lin2", "0:1:cube3", "0:1:lin0"] {
            assert!(parse_grid(s).is_err(), "{s}");
        }
    }
}
