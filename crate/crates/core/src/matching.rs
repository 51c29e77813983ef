//! Maximum bipartite matching on the positivity pattern of a matrix.
//!
//! Rows are the left vertices, columns the right vertices, and `(i, j)` is an
//! edge iff the entry is positive. Augmenting paths (Kuhn) are plenty at the
//! sizes used here.

use crate::matrix::Matrix;

/// Adjacency lists of the positivity pattern with optional deleted rows/columns.
pub(crate) struct Pattern {
    adj: Vec<Vec<usize>>,
    n: usize,
}

impl Pattern {
    pub fn of(m: &Matrix) -> Self {
        let n = m.n();
        let adj = (0..n)
            .map(|i| (0..n).filter(|&j| m.get(i, j) > 0.0).collect())
            .collect();
        Pattern { adj, n }
    }

    /// Size of a maximum matching, ignoring `skip_row` and `skip_col` if given.
    pub fn max_matching(&self, skip_row: Option<usize>, skip_col: Option<usize>) -> usize {
        let mut col_match: Vec<Option<usize>> = vec![None; self.n];
        let mut size = 0;
        for i in 0..self.n {
            if Some(i) == skip_row {
                continue;
            }
            let mut seen = vec![false; self.n];
            if self.augment(i, skip_col, &mut seen, &mut col_match) {
                size += 1;
            }
        }
        size
    }

    fn augment(
        &self,
        i: usize,
        skip_col: Option<usize>,
        seen: &mut [bool],
        col_match: &mut [Option<usize>],
    ) -> bool {
        for &j in &self.adj[i] {
            if Some(j) == skip_col || seen[j] {
                continue;
            }
            seen[j] = true;
            let free = match col_match[j] {
                None => true,
                Some(k) => self.augment(k, skip_col, seen, col_match),
            };
            if free {
                col_match[j] = Some(i);
                return true;
            }
        }
        false
    }

    pub fn has_perfect_matching(&self) -> bool {
        self.max_matching(None, None) == self.n
    }

    /// A perfect matching as `row -> column`, if one exists.
    pub fn perfect_matching(&self) -> Option<Vec<usize>> {
        let mut col_match: Vec<Option<usize>> = vec![None; self.n];
        for i in 0..self.n {
            let mut seen = vec![false; self.n];
            if !self.augment(i, None, &mut seen, &mut col_match) {
                return None;
            }
        }
        let mut row_match = vec![0; self.n];
        for (j, i) in col_match.iter().enumerate() {
            row_match[i.expect("perfect matching covers every column")] = j;
        }
        Some(row_match)
    }

    /// Positive entries that lie on no perfect matching. With no perfect
    /// matching at all, that is every positive entry.
    ///
    /// Each candidate `(i, j)` is forced by deleting row `i` and column `j`
    /// from a known perfect matching and searching for the single augmenting
    /// path that repairs it.
    pub fn edges_off_perfect_matchings(&self) -> Vec<(usize, usize)> {
        let Some(row_match) = self.perfect_matching() else {
            return (0..self.n).flat_map(|i| self.adj[i].iter().map(move |&j| (i, j))).collect();
        };
        let mut col_match: Vec<Option<usize>> = vec![None; self.n];
        for (i, &j) in row_match.iter().enumerate() {
            col_match[j] = Some(i);
        }
        let mut offending = Vec::new();
        for i in 0..self.n {
            for &j in &self.adj[i] {
                if row_match[i] == j {
                    continue;
                }
                let q = col_match[j].expect("matched column");
                let p = row_match[i];
                let mut trial = col_match.clone();
                trial[j] = None;
                trial[p] = None;
                let mut seen = vec![false; self.n];
                seen[j] = true;
                if !self.augment(q, Some(j), &mut seen, &mut trial) {
                    offending.push((i, j));
                }
            }
        }
        offending
    }

    /// Whether some perfect matching uses the edge `(i, j)`.
    #[cfg(test)]
    pub fn edge_on_perfect_matching(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(&j) && self.max_matching(Some(i), Some(j)) == self.n - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_sizes() {
        let m = Matrix::from_rows(&[[1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(Pattern::of(&m).max_matching(None, None), 2);
        let m = Matrix::from_rows(&[[0.0, 1.0], [1.0, 1.0]]).unwrap();
        let p = Pattern::of(&m);
        assert!(p.has_perfect_matching());
        assert!(p.edge_on_perfect_matching(0, 1));
        assert!(!p.edge_on_perfect_matching(1, 1));
    }

    #[test]
    fn fast_offender_search_matches_delete_and_rematch() {
        let mut state = 99u64;
        for _ in 0..200 {
            let n = 1 + (state % 7) as usize;
            let m = Matrix::from_fn(n, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                if (state >> 33) % 3 == 0 { 0.0 } else { 1.0 }
            })
            .unwrap();
            let p = Pattern::of(&m);
            let mut slow = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if m.get(i, j) > 0.0 && !p.edge_on_perfect_matching(i, j) {
                        slow.push((i, j));
                    }
                }
            }
            assert_eq!(p.edges_off_perfect_matchings(), slow, "{m}");
        }
    }
}
