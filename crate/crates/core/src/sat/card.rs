//! Sequential weighted counter for `sum(w_i * x_i) <= k`.
//!
//! Counter variable `s[i][j]` is forced true whenever the weighted sum of
//! the first `i+1` inputs reaches `j+1`; sums beyond the cap saturate.
//! Only upward implications are emitted, so asserting `!geq(k+1)` admits
//! exactly the assignments with sum at most `k`.

use super::{ClauseSink, Lit};

#[derive(Clone, Debug)]
pub struct Counter {
    /// `geq[j]` is implied by a total of at least `j + 1`.
    geq: Vec<Lit>,
    cap: u64,
}

impl Counter {
    /// Literal to assert (as a unit or assumption) for `sum <= k`.
    /// `None` when the bound cannot be violated.
    ///
    /// Panics when `k + 1` exceeds the counter cap.
    pub fn at_most(&self, k: u64) -> Option<Lit> {
        if k as usize >= self.geq.len() {
            assert!(k < self.cap || self.geq.len() < self.cap as usize, "bound {k} beyond counter cap {}", self.cap);
            return None;
        }
        Some(!self.geq[k as usize])
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }
}

/// Counter over `(literal, weight)` pairs with outputs up to `cap`.
pub fn weighted_counter(sink: &mut impl ClauseSink, items: &[(Lit, u64)], cap: u64) -> Counter {
    let cap_len = cap as usize;
    let mut prev: Vec<Lit> = Vec::new();
    for &(x, w) in items {
        assert!(w > 0, "weights must be positive");
        let len = (prev.len() + w as usize).min(cap_len);
        let cur: Vec<Lit> = (0..len).map(|_| sink.new_var()).collect();
        for j in 0..(w as usize).min(len) {
            sink.add_clause(&[!x, cur[j]]);
        }
        for (j, &p) in prev.iter().enumerate() {
            sink.add_clause(&[!p, cur[j]]);
            let up = (j + w as usize).min(len - 1);
            sink.add_clause(&[!x, !p, cur[up]]);
        }
        prev = cur;
    }
    Counter { geq: prev, cap }
}

/// Hard constraint `sum(w_i * x_i) <= k`.
pub fn encode_size_bound(sink: &mut impl ClauseSink, items: &[(Lit, u64)], k: u64) {
    let counter = weighted_counter(sink, items, k + 1);
    if let Some(l) = counter.at_most(k) {
        sink.add_clause(&[l]);
    }
}
