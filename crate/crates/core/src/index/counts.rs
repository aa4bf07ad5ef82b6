//! Proximity counts over sorted position lists.
//!
//! Positions are 1-based and strictly ascending. A window of span `s`
//! covers `s` consecutive slots, so two positions `i`, `j` fall inside one
//! window iff `max(i, j) - min(i, j) + 1 <= s`.

/// Number of `i` with `i ∈ first` and `i + 1 ∈ second` (exact phrase count).
///
/// When both lists are the same term, overlapping occurrences count
/// separately: `a a a` holds the phrase `a a` twice.
pub fn ordered_pairs(first: &[u32], second: &[u32]) -> u32 {
    let mut count = 0;
    let mut j = 0;
    for &i in first {
        let target = i + 1;
        while j < second.len() && second[j] < target {
            j += 1;
        }
        if j == second.len() {
            break;
        }
        if second[j] == target {
            count += 1;
        }
    }
    count
}

/// Number of position pairs, one from each list, that fit in a window of
/// `span` slots, in either order.
///
/// For two distinct terms every `(i, j)` pair counts. When `same_term` is
/// true the lists are identical and each unordered pair of distinct
/// positions counts once.
pub fn window_pairs(first: &[u32], second: &[u32], span: u32, same_term: bool) -> u32 {
    debug_assert!(span >= 2);
    let reach = span - 1;
    if same_term {
        let positions = first;
        let mut count = 0u32;
        let mut hi = 0usize;
        for (a, &p) in positions.iter().enumerate() {
            if hi < a + 1 {
                hi = a + 1;
            }
            while hi < positions.len() && positions[hi] - p <= reach {
                hi += 1;
            }
            count += (hi - a - 1) as u32;
        }
        return count;
    }
    let mut count = 0u32;
    let (mut lo, mut hi) = (0usize, 0usize);
    for &i in first {
        let min = i.saturating_sub(reach);
        let max = i + reach;
        while lo < second.len() && second[lo] < min {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < second.len() && second[hi] <= max {
            hi += 1;
        }
        count += (hi - lo) as u32;
    }
    count
}

/// 1-based positions at which `term` occurs in `tokens`.
pub fn positions_of<T: PartialEq>(tokens: &[T], term: &T) -> Vec<u32> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| *t == term)
        .map(|(i, _)| i as u32 + 1)
        .collect()
}
