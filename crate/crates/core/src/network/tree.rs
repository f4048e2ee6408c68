//! Complete binary sum tree over nonnegative leaf weights.

#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    leaves: usize,
    base: usize,
    node: Vec<f64>,
}

impl SumTree {
    pub fn new(leaves: usize) -> Self {
        let base = leaves.next_power_of_two().max(1);
        SumTree {
            leaves,
            base,
            node: vec![0.0; 2 * base],
        }
    }

    pub fn total(&self) -> f64 {
        self.node[1]
    }

    /// Parents are recomputed from their children, so sums never drift.
    pub fn set(&mut self, i: usize, w: f64) {
        debug_assert!(i < self.leaves && w >= 0.0);
        let mut k = self.base + i;
        self.node[k] = w;
        while k > 1 {
            k /= 2;
            self.node[k] = self.node[2 * k] + self.node[2 * k + 1];
        }
    }

    /// Leaf `i` with `prefix(i) <= u < prefix(i) + w_i`; never returns a
    /// zero-weight leaf while the total is positive.
    pub fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.base {
            let l = self.node[2 * k];
            if (u < l && l > 0.0) || self.node[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= l;
                k = 2 * k + 1;
            }
        }
        (k - self.base).min(self.leaves - 1)
    }
}
