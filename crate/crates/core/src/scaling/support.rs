use serde::{Deserialize, Serialize};

use crate::matching::Pattern;
use crate::matrix::Matrix;

/// Which positive entries of a matrix lie on a perfect matching of its
/// positivity pattern. Indices are 0-based `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportReport {
    pub has_support: bool,
    pub has_total_support: bool,
    pub offending_entries: Vec<(usize, usize)>,
}

/// True iff the positivity pattern has a perfect matching, i.e. some
/// permutation picks only positive entries.
pub fn has_support(m: &Matrix) -> bool {
    Pattern::of(m).has_perfect_matching()
}

pub fn support_report(m: &Matrix) -> SupportReport {
    if m.min_entry() > 0.0 {
        return SupportReport { has_support: true, has_total_support: true, offending_entries: vec![] };
    }
    let pattern = Pattern::of(m);
    let has_support = pattern.has_perfect_matching();
    let offending_entries = pattern.edges_off_perfect_matchings();
    SupportReport {
        has_support,
        has_total_support: has_support && offending_entries.is_empty(),
        offending_entries,
    }
}
