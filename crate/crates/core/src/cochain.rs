//! Integer-coefficient expansion of iterated coboundaries.
//!
//! Sign convention: on a k-index input,
//! `(dg)(u_0..u_k) = (-1)^(k+1) * sum_i (-1)^i g(u without u_i)`,
//! so `dg = g_b - g_a` on functions and `dh = h_13 - h_12 - h_23` on 2-increments.
//! Expanding `d^m` into distinct argument patterns before touching any value
//! makes cancellations exact: `dd` has no surviving pattern at all.

use std::collections::BTreeMap;

/// Argument patterns and coefficients of `m` coboundaries producing `len` indices.
///
/// Each pattern lists positions into the output tuple, in increasing order.
pub(crate) fn expansion(len: usize, m: usize) -> Vec<(Vec<usize>, i64)> {
    if m == 0 {
        return vec![((0..len).collect(), 1)];
    }
    let k = len - 1;
    let outer = if (k + 1) % 2 == 0 { 1i64 } else { -1 };
    let inner = expansion(len - 1, m - 1);
    let mut acc: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
    for i in 0..len {
        let sign = if i % 2 == 0 { outer } else { -outer };
        let kept: Vec<usize> = (0..len).filter(|&q| q != i).collect();
        for (pat, c) in &inner {
            let mapped: Vec<usize> = pat.iter().map(|&q| kept[q]).collect();
            *acc.entry(mapped).or_insert(0) += sign * c;
        }
    }
    acc.into_iter().filter(|(_, c)| *c != 0).collect()
}
