//! Gestalt pattern matching (Ratcliff–Obershelp) over arbitrary symbol
//! sequences.

/// Longest common contiguous block, leftmost in `a`, then leftmost in `b`.
fn longest_block<T: PartialEq>(a: &[T], b: &[T]) -> (usize, usize, usize) {
    let mut best = (0, 0, 0);
    // lengths of common suffixes ending at (i, j), one row at a time
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y { prev[j] + 1 } else { 0 };
            let len = curr[j + 1];
            if len > best.2 {
                best = (i + 1 - len, j + 1 - len, len);
            }
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    best
}

/// Number of symbols matched by recursively anchoring on the longest common
/// block and matching what lies to its left and right.
pub fn matching_symbols<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (i, j, len) = longest_block(a, b);
    if len == 0 {
        return 0;
    }
    len + matching_symbols(&a[..i], &b[..j]) + matching_symbols(&a[i + len..], &b[j + len..])
}

/// `2·M / (|a| + |b|)`; two empty sequences are identical.
///
/// The block tie-break makes `M` depend on argument order for some inputs,
/// so both orders are matched and the larger count is used.
pub fn similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    let m = matching_symbols(a, b).max(matching_symbols(b, a));
    2.0 * m as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Reference matcher: enumerates every block explicitly, scanning `a`
    /// start positions outermost so the leftmost longest block wins.
    fn reference(a: &[u8], b: &[u8]) -> usize {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..a.len() {
            for j in 0..b.len() {
                let mut k = 0;
                while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                    k += 1;
                }
                if k > 0 && best.is_none_or(|(_, _, l)| k > l) {
                    best = Some((i, j, k));
                }
            }
        }
        match best {
            None => 0,
            Some((i, j, k)) => {
                k + reference(&a[..i], &b[..j]) + reference(&a[i + k..], &b[j + k..])
            }
        }
    }

    fn oracle(a: &[u8], b: &[u8]) -> f64 {
        if a.is_empty() && b.is_empty() {
            1.0
        } else {
            let m = reference(a, b).max(reference(b, a));
            2.0 * m as f64 / (a.len() + b.len()) as f64
        }
    }

    #[test]
    fn examples() {
        let pick_transport_place = ["PICK", "TRANSPORT", "PLACE"];
        let pick_place = ["PICK", "PLACE"];
        let s = similarity(&pick_transport_place, &pick_place);
        assert!((s - oracle(&[1, 2, 3], &[1, 3])).abs() < 1e-12);
        assert!((s - 0.8).abs() < 1e-12);
        assert_eq!(similarity(&["A", "B"], &["A", "B"]), 1.0);
        assert_eq!(similarity(&["A", "B"], &["C", "D"]), 0.0);
        assert_eq!(similarity::<u8>(&[], &[]), 1.0);
        assert_eq!(similarity(&[1u8], &[]), 0.0);
    }

    #[test]
    fn order_dependent_blocks() {
        // the leftmost block differs with argument order
        let (a, b) = ([2u8, 1, 0], [0u8, 2, 0]);
        assert_eq!((matching_symbols(&a, &b), matching_symbols(&b, &a)), (2, 1));
        assert_eq!(similarity(&b, &a), 4.0 / 6.0);
    }

    #[test]
    fn classic_string_case() {
        // WIKIMEDIA vs WIKIMANIA: blocks WIKIM + IA -> 2*7/18
        let a = b"WIKIMEDIA";
        let b = b"WIKIMANIA";
        assert_eq!(matching_symbols(a, b), 7);
        assert!((similarity(a, b) - 14.0 / 18.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn agrees_with_reference(
            a in proptest::collection::vec(0u8..4, 0..10),
            b in proptest::collection::vec(0u8..4, 0..10),
        ) {
            prop_assert!((similarity(&a, &b) - oracle(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn symmetric_and_reflexive(
            a in proptest::collection::vec(0u8..5, 0..12),
            b in proptest::collection::vec(0u8..5, 0..12),
        ) {
            prop_assert!((similarity(&a, &b) - similarity(&b, &a)).abs() < 1e-12);
            prop_assert_eq!(similarity(&a, &a), 1.0);
            let s = similarity(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
