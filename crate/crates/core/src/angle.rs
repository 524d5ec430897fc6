//! Angles on the unit circle: reduction, circular distance, set distances.

use std::f64::consts::{PI, TAU};

/// Reduce an angle to `[0, 2π)`.
pub fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduce an angle to `(-π, π]`.
pub fn reduce_signed(x: f64) -> f64 {
    let r = reduce(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest distance between two angles along the circle, in `[0, π]`.
pub fn circ_dist(a: f64, b: f64) -> f64 {
    reduce_signed(a - b).abs()
}

/// Distance from `x` to the nearest element of a sorted (reduced) angle list.
fn dist_to_sorted(x: f64, sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return f64::INFINITY;
    }
    let x = reduce(x);
    let i = sorted.partition_point(|&v| v < x);
    let n = sorted.len();
    let a = sorted[i % n];
    let b = sorted[(i + n - 1) % n];
    circ_dist(x, a).min(circ_dist(x, b))
}

fn sorted_reduced(v: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = v.iter().map(|&x| reduce(x)).collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Hausdorff distance between two finite subsets of the circle.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let sa = sorted_reduced(a);
    let sb = sorted_reduced(b);
    let ab = a.iter().map(|&x| dist_to_sorted(x, &sb)).fold(0.0, f64::max);
    let ba = b.iter().map(|&x| dist_to_sorted(x, &sa)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Largest pointwise deviation between two angle multisets of equal size,
/// after sorting both and choosing the best cyclic alignment.
///
/// Returns `None` when the sizes differ.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(0.0);
    }
    let sa = sorted_reduced(a);
    let sb = sorted_reduced(b);
    let n = sa.len();
    // The optimal shift is near the one aligning the first elements; try the
    // few candidates around it, then fall back to a full search if needed.
    let start = sb.partition_point(|&v| v < sa[0]);
    let eval = |shift: usize| {
        (0..n)
            .map(|i| circ_dist(sa[i], sb[(i + shift) % n]))
            .fold(0.0, f64::max)
    };
    let mut best = f64::INFINITY;
    for d in 0..3usize {
        for s in [start + n - 1 + d, start + n + d] {
            best = best.min(eval(s % n));
        }
    }
    if best > 1e-6 && n <= 8192 {
        for s in 0..n {
            best = best.min(eval(s));
        }
    }
    Some(best)
}

/// Unwrap a sequence of angles so consecutive entries differ by less than π.
pub fn unwrap(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut prev: Option<f64> = None;
    for &a in angles {
        let v = match prev {
            None => a,
            Some(p) => p + reduce_signed(a - p),
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduce_edges() {
        assert_eq!(reduce(0.0), 0.0);
        assert_eq!(reduce(TAU), 0.0);
        assert!((reduce(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert!(reduce(-1e-300) < TAU);
    }

    #[test]
    fn hausdorff_simple() {
        let a = [0.0, 1.0];
        let b = [TAU - 0.1, 1.0];
        assert!((hausdorff(&a, &b) - 0.1).abs() < 1e-12);
        assert_eq!(hausdorff(&[], &[]), 0.0);
    }

    #[test]
    fn multiset_wraps() {
        let a = [0.01, 3.0, 6.27];
        let b = [6.27 + 1e-9, 0.01, 3.0];
        assert!(multiset_distance(&a, &b).unwrap() < 1e-8);
        assert!(multiset_distance(&a, &b[..2]).is_none());
    }

    proptest! {
        #[test]
        fn circ_dist_symmetric_bounded(a in -50.0..50.0f64, b in -50.0..50.0f64) {
            let d = circ_dist(a, b);
            prop_assert!((d - circ_dist(b, a)).abs() < 1e-12);
            prop_assert!((0.0..=PI + 1e-12).contains(&d));
            prop_assert!(circ_dist(a, a + TAU) < 1e-12);
        }

        #[test]
        fn unwrap_preserves_angles(v in proptest::collection::vec(-10.0..10.0f64, 1..20)) {
            let u = unwrap(&v);
            for (x, y) in v.iter().zip(&u) {
                prop_assert!(circ_dist(*x, *y) < 1e-9);
            }
            for w in u.windows(2) {
                prop_assert!((w[1] - w[0]).abs() <= PI + 1e-12);
            }
        }
    }
}
