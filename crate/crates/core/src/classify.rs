//! Classification of finite tridiagonal unitary matrices.
//!
//! A unitary tridiagonal matrix is either a (weighted) shift or a direct sum
//! of 1x1 and 2x2 blocks. On a finite window the shift only closes up with a
//! corner entry, so a cyclic shift is the one structure allowed to use the
//! corners.

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub start: usize,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    /// Every column maps to the next (or previous) site with a unimodular weight.
    ShiftLike { forward: bool },
    BlockDecomposition { blocks: Vec<Block> },
    NotTridiagonal,
    NotUnitary,
}

fn is_zero(z: C64, tol: f64) -> bool {
    z.norm() <= tol
}

fn unitary_within(m: &Mat<C64>, tol: f64) -> bool {
    let n = m.nrows();
    for a in 0..n {
        for b in a..n {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..n {
                s += m[(k, a)].conj() * m[(k, b)];
            }
            if a == b {
                s -= 1.0;
            }
            if s.norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Weighted cyclic shift `e_j -> w_j e_{j±1 mod n}` with `|w_j| = 1`.
fn is_cyclic_shift(m: &Mat<C64>, tol: f64, forward: bool) -> bool {
    let n = m.nrows();
    if n < 3 {
        return false;
    }
    (0..n).all(|j| {
        let target = if forward { (j + 1) % n } else { (j + n - 1) % n };
        (0..n).all(|i| {
            let v = m[(i, j)];
            if i == target {
                (v.norm() - 1.0).abs() <= tol
            } else {
                is_zero(v, tol)
            }
        })
    })
}

/// Classify a square matrix; `tol` bounds every zero test and the
/// unitarity check.
pub fn classify_tridiagonal(m: &Mat<C64>, tol: f64) -> Classification {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    if !unitary_within(m, tol.max(1e-14) * (n as f64).sqrt().max(1.0)) {
        return Classification::NotUnitary;
    }
    for forward in [true, false] {
        if is_cyclic_shift(m, tol, forward) {
            return Classification::ShiftLike { forward };
        }
    }
    for j in 0..n {
        for i in 0..n {
            if i.abs_diff(j) > 1 && !is_zero(m[(i, j)], tol) {
                return Classification::NotTridiagonal;
            }
        }
    }
    // split into connected runs along the off-diagonals
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 0..n {
        let coupled = i + 1 < n && (!is_zero(m[(i, i + 1)], tol) || !is_zero(m[(i + 1, i)], tol));
        if !coupled {
            let size = i + 1 - start;
            // a run of three or more sites would be a finite piece of a shift,
            // which cannot be unitary without a corner entry
            if size > 2 {
                return Classification::NotTridiagonal;
            }
            blocks.push(Block { start, size });
            start = i + 1;
        }
    }
    Classification::BlockDecomposition { blocks }
}
