//! Leftmost row minima of implicit totally monotone matrices.
//!
//! The divide-and-conquer scheme here touches O(rows + cols) entries instead
//! of all rows·cols, which is what makes the fast quantizer layer solve
//! possible. Matrices are implicit: entries are produced on demand by a
//! callback, and infeasible positions are a symbolic [`Entry::Upper`] that
//! compares greater than every finite value without ever entering float
//! arithmetic.
//!
//! Requirements on the matrix: for every pair of rows `i < i'` and columns
//! `j < j'`, `A[i][j] > A[i][j']` must imply `A[i'][j] > A[i'][j']`
//! (total monotonicity for leftmost minima). An inverse-Monge condition on
//! the finite entries plus an upper-right triangle of `Upper` sentinels is
//! sufficient.

use std::cell::Cell;
use std::cmp::Ordering;

/// An implicit-matrix entry: a finite cost, or a symbolic "+∞" used for
/// positions outside the feasible region. `Upper` compares greater than any
/// finite entry and equal to itself, so sentinels never contaminate float
/// arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry {
    Finite(f64),
    Upper,
}

impl Entry {
    pub fn finite(v: f64) -> Entry {
        debug_assert!(v.is_finite(), "matrix entries must be finite, got {v}");
        Entry::Finite(v)
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Entry::Finite(v) => Some(v),
            Entry::Upper => None,
        }
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Entry::Upper, Entry::Upper) => Some(Ordering::Equal),
            (Entry::Upper, Entry::Finite(_)) => Some(Ordering::Greater),
            (Entry::Finite(_), Entry::Upper) => Some(Ordering::Less),
            (Entry::Finite(a), Entry::Finite(b)) => a.partial_cmp(b),
        }
    }
}

fn lt(a: Entry, b: Entry) -> bool {
    matches!(a.partial_cmp(&b), Some(Ordering::Less))
}

/// An implicit matrix whose entries are computed on demand.
pub trait MinimaMatrix {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn entry(&self, row: usize, col: usize) -> Entry;
}

/// A [`MinimaMatrix`] backed by a closure, with a counter of how many
/// entries were actually evaluated.
pub struct LazyMatrix<F> {
    rows: usize,
    cols: usize,
    f: F,
    evals: Cell<u64>,
}

impl<F: Fn(usize, usize) -> Entry> LazyMatrix<F> {
    pub fn new(rows: usize, cols: usize, f: F) -> Self {
        LazyMatrix {
            rows,
            cols,
            f,
            evals: Cell::new(0),
        }
    }

    /// Number of entry evaluations so far.
    pub fn evals(&self) -> u64 {
        self.evals.get()
    }
}

impl<F: Fn(usize, usize) -> Entry> MinimaMatrix for LazyMatrix<F> {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn entry(&self, row: usize, col: usize) -> Entry {
        self.evals.set(self.evals.get() + 1);
        (self.f)(row, col)
    }
}

/// For each row, the smallest column index attaining the row minimum.
///
/// Every row must contain at least one finite entry.
pub fn leftmost_row_minima(matrix: &impl MinimaMatrix) -> Vec<usize> {
    let rows: Vec<usize> = (0..matrix.rows()).collect();
    let cols: Vec<usize> = (0..matrix.cols()).collect();
    let mut out = vec![usize::MAX; matrix.rows()];
    assert!(matrix.cols() > 0 || matrix.rows() == 0, "matrix has no columns");
    recurse(matrix, &rows, cols, &mut out);
    out
}

fn recurse(matrix: &impl MinimaMatrix, rows: &[usize], cols: Vec<usize>, out: &mut [usize]) {
    if rows.is_empty() {
        return;
    }

    // Reduce: drop columns that cannot host the leftmost minimum of any row.
    // The stack invariant keeps at most rows.len() survivors; a new column
    // pops the top while it strictly beats it in the row paired with the
    // top's stack depth (a tie keeps the older, further-left column).
    let mut stack: Vec<usize> = Vec::with_capacity(rows.len());
    for c in cols {
        while let Some(&top) = stack.last() {
            let r = rows[stack.len() - 1];
            if lt(matrix.entry(r, c), matrix.entry(r, top)) {
                stack.pop();
            } else {
                break;
            }
        }
        if stack.len() < rows.len() {
            stack.push(c);
        }
    }
    let cols = stack;

    let odd_rows: Vec<usize> = rows.iter().copied().skip(1).step_by(2).collect();
    recurse(matrix, &odd_rows, cols.clone(), out);

    // Interpolate the even rows: row k's minimum column lies between the
    // minima of its odd neighbours, so scan only that window.
    let mut c_idx = 0;
    for (k, &row) in rows.iter().enumerate().step_by(2) {
        let last_col = if k + 1 < rows.len() {
            out[rows[k + 1]]
        } else {
            *cols.last().expect("reduce keeps at least one column")
        };
        let mut best_col = cols[c_idx];
        let mut best = matrix.entry(row, best_col);
        while cols[c_idx] != last_col {
            c_idx += 1;
            let v = matrix.entry(row, cols[c_idx]);
            if lt(v, best) {
                best = v;
                best_col = cols[c_idx];
            }
        }
        debug_assert!(
            best != Entry::Upper,
            "row {row} has no finite entry among candidate columns"
        );
        out[row] = best_col;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference implementation: full scan with leftmost ties.
    fn brute_force(matrix: &impl MinimaMatrix) -> Vec<usize> {
        (0..matrix.rows())
            .map(|r| {
                let mut best_col = 0;
                let mut best = matrix.entry(r, 0);
                for c in 1..matrix.cols() {
                    let v = matrix.entry(r, c);
                    if lt(v, best) {
                        best = v;
                        best_col = c;
                    }
                }
                best_col
            })
            .collect()
    }

    /// Monge matrix from sorted points: A[i][j] = (a_i − b_j)².
    fn squared_distance_matrix(a: Vec<f64>, b: Vec<f64>) -> LazyMatrix<impl Fn(usize, usize) -> Entry> {
        let (rows, cols) = (a.len(), b.len());
        LazyMatrix::new(rows, cols, move |i, j| {
            Entry::finite((a[i] - b[j]) * (a[i] - b[j]))
        })
    }

    #[test]
    fn entry_ordering() {
        assert!(lt(Entry::finite(1.0), Entry::finite(2.0)));
        assert!(lt(Entry::finite(1.0), Entry::Upper));
        assert!(!lt(Entry::Upper, Entry::finite(-1e300)));
        assert!(!lt(Entry::Upper, Entry::Upper));
        assert!(!lt(Entry::finite(1.0), Entry::finite(1.0)));
    }

    #[test]
    fn single_row_and_column() {
        let m = squared_distance_matrix(vec![3.0], vec![0.0, 2.0, 5.0]);
        assert_eq!(leftmost_row_minima(&m), vec![1]);
        let m = squared_distance_matrix(vec![0.0, 1.0, 2.0], vec![7.0]);
        assert_eq!(leftmost_row_minima(&m), vec![0, 0, 0]);
    }

    #[test]
    fn leftmost_tie_breaking() {
        // Constant rows: every column ties; the answer must be column 0.
        let m = LazyMatrix::new(5, 7, |_i, _j| Entry::finite(1.25));
        assert_eq!(leftmost_row_minima(&m), vec![0; 5]);
        // Symmetric tie: a_i midway between two b's with equal squared
        // distance picks the left one.
        let m = squared_distance_matrix(vec![1.0], vec![0.0, 2.0]);
        assert_eq!(leftmost_row_minima(&m), vec![0]);
    }

    #[test]
    fn matches_brute_force_on_integer_ties() {
        // Integer-valued points make exact ties common.
        let a: Vec<f64> = (0..20).map(|i| (i % 7) as f64).collect();
        let mut a = a;
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let b: Vec<f64> = (0..15).map(|j| (j % 5) as f64).collect();
        let mut b = b;
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let m = squared_distance_matrix(a, b);
        assert_eq!(leftmost_row_minima(&m), brute_force(&m));
    }

    #[test]
    fn upper_triangle_sentinels() {
        // Lower-triangular feasible region (j ≤ i), Monge inside it. This is
        // exactly the shape the quantizer layer matrices have.
        let a: Vec<f64> = (0..12).map(|i| i as f64 * 0.7).collect();
        let b: Vec<f64> = (0..12).map(|j| j as f64 * 1.3 - 2.0).collect();
        let m = LazyMatrix::new(12, 12, move |i, j| {
            if j > i {
                Entry::Upper
            } else {
                Entry::finite((a[i] - b[j]) * (a[i] - b[j]))
            }
        });
        let got = leftmost_row_minima(&m);
        let want = brute_force(&m);
        assert_eq!(got, want);
        // Row 0 has only column 0 feasible.
        assert_eq!(got[0], 0);
    }

    #[test]
    fn near_linear_evaluation_count() {
        let n = 256;
        let a: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
        let b: Vec<f64> = (0..n).map(|j| j as f64 * 0.1).collect();
        let m = squared_distance_matrix(a, b);
        let _ = leftmost_row_minima(&m);
        let evals = m.evals();
        // Far below the n² a full scan needs; the constant is generous.
        assert!(
            evals < (20 * n) as u64,
            "expected near-linear entry evaluations, got {evals} for n = {n}"
        );
        assert!(evals < (n * n) as u64 / 4);
    }

    proptest! {
        #[test]
        fn matches_brute_force_on_random_monge(
            mut a in proptest::collection::vec(-50.0f64..50.0, 1..40),
            mut b in proptest::collection::vec(-50.0f64..50.0, 1..40),
        ) {
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let m = squared_distance_matrix(a, b);
            prop_assert_eq!(leftmost_row_minima(&m), brute_force(&m));
        }

        #[test]
        fn matches_brute_force_with_upper_triangle(
            mut a in proptest::collection::vec(-9.0f64..9.0, 1..30),
            shift in 0usize..3,
        ) {
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let n = a.len();
            let b: Vec<f64> = (0..n).map(|j| j as f64 - 4.0).collect();
            let m = LazyMatrix::new(n, n, move |i, j| {
                if j > i + shift {
                    Entry::Upper
                } else {
                    Entry::finite((a[i] - b[j]) * (a[i] - b[j]))
                }
            });
            prop_assert_eq!(leftmost_row_minima(&m), brute_force(&m));
        }
    }
}
