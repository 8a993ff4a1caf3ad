//! Tabulated joint excursion probabilities
//! `Q_k(v, w, s) = P(V_k > v, S_k > s, R_k - S_k <= w)` and their
//! density-flavored companions
//! `Q'_k(v, w, s) = P(V_k > v, S_k = s, R_k - S_k <= w)`,
//! where `V_k = min(S_1..S_k)` and `R_k = max(0, S_1..S_k)`.
//!
//! `v` is fixed per table; values live on a 2-D `(w, s)` grid in lattice
//! units. The step recursion conditions on the last increment `x`:
//! the gap `R - S` shifts by `+x` and the end constraint by `-x`.

use super::dp::StepPmf;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QTable {
    pub k: usize,
    pub v: i64,
    pub w_lo: i64,
    pub w_hi: i64,
    pub s_lo: i64,
    pub s_hi: i64,
    q: Vec<f64>,
    q_prime: Vec<f64>,
}

impl QTable {
    fn zeros(k: usize, v: i64, w_lo: i64, w_hi: i64, s_lo: i64, s_hi: i64) -> Self {
        let len = ((w_hi - w_lo + 1) * (s_hi - s_lo + 1)) as usize;
        QTable {
            k,
            v,
            w_lo,
            w_hi,
            s_lo,
            s_hi,
            q: vec![0.0; len],
            q_prime: vec![0.0; len],
        }
    }

    fn idx(&self, w: i64, s: i64) -> usize {
        ((w - self.w_lo) * (self.s_hi - self.s_lo + 1) + (s - self.s_lo)) as usize
    }

    /// `Q_k(v, w, s)`. Reads below the `w` grid (in particular `w < 0`)
    /// are zero; reads below the `s` grid saturate to the lowest column,
    /// which is exact when the grid extends below the reachable values.
    pub fn q(&self, w: i64, s: i64) -> f64 {
        if w < self.w_lo {
            return 0.0;
        }
        let w = w.min(self.w_hi);
        if s > self.s_hi {
            return 0.0;
        }
        let s = s.max(self.s_lo);
        self.q[self.idx(w, s)]
    }

    /// `Q'_k(v, w, s)`: the atom of `S_k` at `s` jointly with the gap
    /// bound. Reads outside the grid are zero.
    pub fn q_prime(&self, w: i64, s: i64) -> f64 {
        if w < self.w_lo || s < self.s_lo || s > self.s_hi {
            return 0.0;
        }
        let w = w.min(self.w_hi);
        self.q_prime[self.idx(w, s)]
    }

    fn strict_read_q(&self, w: i64, s: i64) -> Result<f64> {
        if w < 0 {
            return Ok(0.0);
        }
        if w > self.w_hi {
            return Err(Error::GridOverflow(format!(
                "q read at w={w} beyond grid hi {}",
                self.w_hi
            )));
        }
        if s > self.s_hi || s < self.s_lo {
            return Err(Error::GridOverflow(format!(
                "q read at s={s} outside grid [{}, {}]",
                self.s_lo, self.s_hi
            )));
        }
        Ok(self.q[self.idx(w.max(self.w_lo), s)])
    }

    fn strict_read_q_prime(&self, w: i64, s: i64) -> Result<f64> {
        if w < 0 {
            return Ok(0.0);
        }
        if w > self.w_hi {
            return Err(Error::GridOverflow(format!(
                "q' read at w={w} beyond grid hi {}",
                self.w_hi
            )));
        }
        if s > self.s_hi || s < self.s_lo {
            // S_k = s unreachable outside the grid only when the grid
            // covers reachability; the builder guarantees that.
            return Err(Error::GridOverflow(format!(
                "q' read at s={s} outside grid [{}, {}]",
                self.s_lo, self.s_hi
            )));
        }
        Ok(self.q_prime[self.idx(w.max(self.w_lo), s)])
    }
}

/// Base table at `k = 1`:
/// `Q_1(v, w, s) = P(Y > max(v, s), Y >= -w) 1{w >= 0}` and
/// `Q'_1(v, w, s) = P(Y = s) 1{s > v} 1{w >= max(-s, 0)}`.
pub fn q_base(f1: &StepPmf, v: i64, w_grid: (i64, i64), s_grid: (i64, i64)) -> QTable {
    let (w_lo, w_hi) = w_grid;
    let (s_lo, s_hi) = s_grid;
    let mut t = QTable::zeros(1, v, w_lo.max(0), w_hi, s_lo, s_hi);
    for w in t.w_lo..=t.w_hi {
        for s in t.s_lo..=t.s_hi {
            let i = t.idx(w, s);
            let bound = v.max(s);
            t.q[i] = f1
                .iter()
                .filter(|(y, _)| *y > bound && *y >= -w)
                .map(|(_, p)| p)
                .sum();
            if s > v && w >= (-s).max(0) {
                t.q_prime[i] = f1
                    .iter()
                    .find(|(y, _)| *y == s)
                    .map(|(_, p)| p)
                    .unwrap_or(0.0);
            }
        }
    }
    t
}

/// One recursion step: the table at `k + 1` on the given grid, reading
/// the table at `k`. Errors when a read would leave the previous grid.
pub fn q_step(
    prev: &QTable,
    f_next: &StepPmf,
    w_grid: (i64, i64),
    s_grid: (i64, i64),
) -> Result<QTable> {
    let (w_lo, w_hi) = w_grid;
    let (s_lo, s_hi) = s_grid;
    let v = prev.v;
    let mut t = QTable::zeros(prev.k + 1, v, w_lo.max(0), w_hi, s_lo, s_hi);
    for w in t.w_lo..=t.w_hi {
        for s in t.s_lo..=t.s_hi {
            let i = t.idx(w, s);
            let mut acc = 0.0;
            for (x, p) in f_next.iter() {
                acc += p * prev.strict_read_q(w + x, s.max(v) - x)?;
            }
            t.q[i] = acc;
            if s > v {
                let mut acc = 0.0;
                for (x, p) in f_next.iter() {
                    acc += p * prev.strict_read_q_prime(w + x, s - x)?;
                }
                t.q_prime[i] = acc;
            }
        }
    }
    Ok(t)
}

/// Build the full ladder of tables for per-step distributions
/// `dists[0..k]`, widening intermediate grids so every recursion read
/// stays in range. The final table covers `w in [0, w_hi]` and
/// `s in [s_lo, s_hi]`; `s_lo` is additionally pushed below the lowest
/// reachable value so that `s -> -inf` queries saturate exactly.
pub fn q_tables(
    dists: &[&StepPmf],
    v: i64,
    w_hi: i64,
    s_bounds: (i64, i64),
) -> Result<Vec<QTable>> {
    let k = dists.len();
    assert!(k >= 1);
    let max_step = dists.iter().map(|d| d.max_offset()).max().unwrap().max(0);
    let min_step = dists.iter().map(|d| d.min_offset()).min().unwrap().min(0);
    let reach_lo: i64 = dists.iter().map(|d| d.min_offset().min(0)).sum();
    let (s_lo_final, s_hi_final) = s_bounds;
    let s_lo_final = s_lo_final.min(reach_lo - 1);

    let grid_at = |level: usize| {
        let depth = (k - level) as i64;
        let w = (0, w_hi + depth * max_step);
        let s = (
            s_lo_final.min(v) - depth * max_step,
            s_hi_final.max(v) + depth * (-min_step),
        );
        (w, s)
    };

    let (wg, sg) = grid_at(1);
    let mut tables = vec![q_base(dists[0], v, wg, sg)];
    for (i, d) in dists.iter().enumerate().skip(1) {
        let (wg, sg) = grid_at(i + 1);
        let next = q_step(tables.last().unwrap(), d, wg, sg)?;
        tables.push(next);
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactdist::dp::prev_max_end_runs;

    const V_NEG_INF: i64 = -1_000_000;

    fn pm_unit() -> StepPmf {
        StepPmf::new(vec![-1, 1], vec![0.8, 0.2]).unwrap()
    }

    #[test]
    fn base_case_examples() {
        // w < 0 is impossible for the gap.
        let point = StepPmf::new(vec![1], vec![1.0]).unwrap();
        let t = q_base(&point, V_NEG_INF, (-3, 3), (-3, 3));
        assert_eq!(t.q(-1, 0), 0.0);

        // Point mass at +1: the single step clears (0, 2].
        assert_eq!(t.q(2, 0), 1.0);

        // Symmetric two-point lattice, v = 0, s = -2, w = 3.
        let half = StepPmf::new(vec![-1, 1], vec![0.5, 0.5]).unwrap();
        let t = q_base(&half, 0, (0, 4), (-4, 4));
        assert!((t.q(3, -2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_zero_steps_make_q_constant_in_k() {
        let zero = StepPmf::new(vec![0], vec![1.0]).unwrap();
        let dists = vec![&zero; 5];
        let tables = q_tables(&dists, -10, 4, (-5, 5)).unwrap();
        for t in &tables[1..] {
            for w in 0..=4 {
                for s in -5..=5 {
                    assert_eq!(t.q(w, s), tables[0].q(w, s), "k={} w={w} s={s}", t.k);
                }
            }
        }
    }

    #[test]
    fn two_step_table_matches_enumeration() {
        // Enumerate the 4 paths of the +-1 walk and check
        // Q_2(0, w, s) = P(V_2 > 0, S_2 > s, R_2 - S_2 <= w).
        let pmf = pm_unit();
        let dists = vec![&pmf, &pmf];
        let tables = q_tables(&dists, 0, 6, (-4, 4)).unwrap();
        let t2 = &tables[1];
        let paths = [
            ([-1i64, -1i64], 0.64),
            ([-1, 1], 0.16),
            ([1, -1], 0.16),
            ([1, 1], 0.04),
        ];
        for w in 0..=4 {
            for s in -4..=4 {
                let mut expected = 0.0;
                for (steps, p) in &paths {
                    let s1 = steps[0];
                    let s2 = steps[0] + steps[1];
                    let v2 = s1.min(s2);
                    let r2 = 0.max(s1).max(s2);
                    if v2 > 0 && s2 > s && r2 - s2 <= w {
                        expected += p;
                    }
                }
                assert!(
                    (t2.q(w, s) - expected).abs() < 1e-12,
                    "w={w} s={s}: {} vs {expected}",
                    t2.q(w, s)
                );
            }
        }
    }

    #[test]
    fn q_is_monotone_in_w() {
        let pmf = StepPmf::new(vec![-2, 1], vec![0.6, 0.4]).unwrap();
        let dists = vec![&pmf; 4];
        let tables = q_tables(&dists, -3, 8, (-9, 5)).unwrap();
        for t in &tables {
            for s in t.s_lo..=t.s_hi {
                for w in t.w_lo..t.w_hi {
                    assert!(t.q(w + 1, s) >= t.q(w, s) - 1e-15);
                }
            }
        }
    }

    #[test]
    fn recursion_reproduces_direct_three_dimensional_dp() {
        // The (V, R, S) process is Markov; a direct DP over
        // (end value, previous maximum) must agree with the ladder.
        let pmf = StepPmf::new(vec![-1, 0, 2], vec![0.5, 0.2, 0.3]).unwrap();
        for v in [-1000i64, -2, 0] {
            let dists = vec![&pmf; 5];
            let tables = q_tables(&dists, v, 12, (-8, 12)).unwrap();
            for t in &tables {
                let runs = [(&pmf, t.k)];
                let direct = prev_max_end_runs(&runs, Some(v));
                for w in 0..=6 {
                    for s in -6..=8 {
                        let want: f64 = direct
                            .iter_nonzero()
                            .filter(|((e, m), _)| *e > s && m.max(e) - e <= w)
                            .map(|(_, p)| p)
                            .sum();
                        assert!(
                            (t.q(w, s) - want).abs() < 1e-12,
                            "k={} v={v} w={w} s={s}: {} vs {want}",
                            t.k,
                            t.q(w, s)
                        );
                        let want_atom: f64 = direct
                            .iter_nonzero()
                            .filter(|((e, m), _)| *e == s && m.max(e) - e <= w)
                            .map(|(_, p)| p)
                            .sum();
                        assert!(
                            (t.q_prime(w, s) - want_atom).abs() < 1e-12,
                            "atom k={} v={v} w={w} s={s}",
                            t.k
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn grid_overflow_is_reported() {
        let pmf = pm_unit();
        let base = q_base(&pmf, 0, (0, 1), (-1, 1));
        // The step needs reads at w + 1 = 2 beyond the base grid.
        assert!(matches!(
            q_step(&base, &pmf, (0, 1), (-1, 1)),
            Err(Error::GridOverflow(_))
        ));
    }
}
