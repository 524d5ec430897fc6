//! Small dense linear algebra: a 2x2 complex matrix type and a dense
//! eigensolver for unitary matrices.

use crate::error::{Error, Result};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Neg, Sub};

pub type Vec2 = [C64; 2];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `e^{i x}`.
#[inline]
pub fn cis(x: f64) -> C64 {
    let (s, c) = x.sin_cos();
    C64::new(c, s)
}

pub fn vec2_norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn vec2_scale(v: &Vec2, s: C64) -> Vec2 {
    [v[0] * s, v[1] * s]
}

/// Determinant of the 2x2 matrix with columns `u`, `v`.
pub fn det_cols(u: &Vec2, v: &Vec2) -> C64 {
    u[0] * v[1] - u[1] * v[0]
}

/// A 2x2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn zero() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, ZERO, ZERO, d)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// Closed-form inverse. Returns `None` for an exactly singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == ZERO {
            return None;
        }
        Some(self.inverse_with_det(d))
    }

    /// Inverse using a known determinant.
    pub fn inverse_with_det(&self, det: C64) -> Self {
        let m = &self.0;
        let inv = det.inv();
        Mat2::new(m[1][1] * inv, -m[0][1] * inv, -m[1][0] * inv, m[0][0] * inv)
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> (f64, f64) {
        let f = self.norm_fro().powi(2);
        let d = self.det().norm();
        let disc = (f * f - 4.0 * d * d).max(0.0).sqrt();
        let s1 = ((f + disc) / 2.0).sqrt();
        // recover the small one from the determinant to avoid cancellation
        let s2 = if s1 > 0.0 { d / s1 } else { 0.0 };
        (s1, s2)
    }

    /// Operator (spectral) norm.
    pub fn norm2(&self) -> f64 {
        self.singular_values().0
    }

    /// Eigenvalues `(e1, e2)` with `|e1| >= |e2|`.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let m = &self.0;
        let half_tr = (m[0][0] + m[1][1]) * 0.5;
        let half_diff = (m[0][0] - m[1][1]) * 0.5;
        let disc = (half_diff * half_diff + m[0][1] * m[1][0]).sqrt();
        let a = half_tr + disc;
        let b = half_tr - disc;
        // the larger root is accurate; derive the other from the determinant
        let (big, _) = if a.norm() >= b.norm() { (a, b) } else { (b, a) };
        if big == ZERO {
            return (ZERO, ZERO);
        }
        let small = self.det() / big;
        (big, small)
    }

    /// A unit eigenvector for eigenvalue `e`, pivot component real positive.
    pub fn eigenvector(&self, e: C64) -> Vec2 {
        let m = &self.0;
        let c1 = [m[0][1], e - m[0][0]];
        let c2 = [e - m[1][1], m[1][0]];
        let v = if vec2_norm(&c1) >= vec2_norm(&c2) { c1 } else { c2 };
        let n = vec2_norm(&v);
        if n == 0.0 {
            // scalar matrix: every vector is an eigenvector
            return [ONE, ZERO];
        }
        normalize_pivot(&v)
    }

    /// Eigen-decomposition of a Hermitian 2x2 matrix: eigenvalues ascending
    /// with unit eigenvectors.
    pub fn hermitian_eigen(&self) -> ([f64; 2], [Vec2; 2]) {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = self.0[0][1];
        let mean = 0.5 * (a + d);
        let half = 0.5 * (a - d);
        let r = (half * half + b.norm_sqr()).sqrt();
        let lo = mean - r;
        let hi = mean + r;
        let vec_for = |e: f64| -> Vec2 {
            let c1 = [b, C64::new(e - a, 0.0)];
            let c2 = [C64::new(e - d, 0.0), b.conj()];
            let v = if vec2_norm(&c1) >= vec2_norm(&c2) { c1 } else { c2 };
            if vec2_norm(&v) == 0.0 {
                if e == lo {
                    [ONE, ZERO]
                } else {
                    [ZERO, ONE]
                }
            } else {
                normalize_pivot(&v)
            }
        };
        let v_lo = vec_for(lo);
        let mut v_hi = vec_for(hi);
        if r == 0.0 {
            v_hi = [ZERO, ONE];
        }
        ([lo, hi], [v_lo, v_hi])
    }
}

/// Scale to unit norm with the largest-modulus component real and positive.
pub fn normalize_pivot(v: &Vec2) -> Vec2 {
    let n = vec2_norm(v);
    let p = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let phase = p.conj() / p.norm();
    [v[0] * phase / n, v[1] * phase / n]
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

/// Column-compressed nonzeros of a square matrix.
struct SparseCols {
    n: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

impl SparseCols {
    fn from_dense(m: &Mat<C64>) -> Self {
        let n = m.nrows();
        let cols = (0..n)
            .map(|j| {
                (0..n)
                    .filter_map(|i| {
                        let v = m[(i, j)];
                        (v != ZERO).then_some((i, v))
                    })
                    .collect()
            })
            .collect();
        SparseCols { n, cols }
    }

    /// `y = M x`
    fn mul(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.n];
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for &(i, v) in col {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `y = M^* x`
    fn mul_adj(&self, x: &[C64]) -> Vec<C64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(i, v)| v.conj() * x[i]).sum())
            .collect()
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Eigenpairs of a dense unitary matrix.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    /// Eigenvalues on the unit circle.
    pub values: Vec<C64>,
    /// Orthonormal eigenvectors stored column-wise, same order as `values`.
    pub vectors: Mat<C64>,
}

/// Gap below which eigenvalues of the Hermitian part are treated as one
/// cluster and separated through the skew-Hermitian part.
const CLUSTER_GAP: f64 = 1e-8;

/// Diagonalize a unitary matrix through its commuting Hermitian pair
/// `H = (U + U^*)/2` and `K = (U - U^*)/(2i)`.
///
/// The eigenvectors of `H` span the eigenspaces of `U` up to the pairing
/// `e^{iφ} ↔ e^{-iφ}`; each cluster of `H` is split by diagonalizing `K`
/// restricted to it. Results are accurate for matrices that are unitary to
/// rounding; the input is not checked.
pub fn unitary_eigen(u: &Mat<C64>) -> Result<UnitaryEigen> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    if n == 0 {
        return Ok(UnitaryEigen { values: vec![], vectors: Mat::zeros(0, 0) });
    }
    let sparse = SparseCols::from_dense(u);
    let h = Mat::<C64>::from_fn(n, n, |i, j| (u[(i, j)] + u[(j, i)].conj()) * 0.5);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let hvals: Vec<f64> = (0..n).map(|i| evd.S()[i].re).collect();
    let q = evd.U();

    let mut vectors = Mat::<C64>::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && hvals[end] - hvals[end - 1] < CLUSTER_GAP {
            end += 1;
        }
        let m = end - start;
        let cols: Vec<Vec<C64>> = (start..end).map(|j| (0..n).map(|i| q[(i, j)]).collect()).collect();
        // K applied to each basis vector of the cluster
        let kq: Vec<Vec<C64>> = cols
            .iter()
            .map(|c| {
                let a = sparse.mul(c);
                let b = sparse.mul_adj(c);
                a.iter().zip(&b).map(|(x, y)| (x - y) * C64::new(0.0, -0.5)).collect()
            })
            .collect();
        let rotated: Vec<Vec<C64>> = if m == 1 {
            cols
        } else {
            let kc = Mat::<C64>::from_fn(m, m, |a, b| dot(&cols[a], &kq[b]));
            let kc = Mat::<C64>::from_fn(m, m, |a, b| (kc[(a, b)] + kc[(b, a)].conj()) * 0.5);
            let sub = kc
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
            let w = sub.U();
            (0..m)
                .map(|b| {
                    let mut v = vec![ZERO; n];
                    for (a, c) in cols.iter().enumerate() {
                        let coef = w[(a, b)];
                        for i in 0..n {
                            v[i] += c[i] * coef;
                        }
                    }
                    v
                })
                .collect()
        };
        for v in rotated {
            let uv = sparse.mul(&v);
            let lam = dot(&v, &uv);
            let lam = lam / lam.norm();
            let col = values.len();
            for i in 0..n {
                vectors[(i, col)] = v[i];
            }
            values.push(lam);
        }
        start = end;
    }
    Ok(UnitaryEigen { values, vectors })
}

/// Eigenvalues of a general square matrix through the non-symmetric solver.
/// Slower than [`unitary_eigen`]; kept as an independent reference.
pub fn general_eigenvalues(m: &Mat<C64>) -> Result<Vec<C64>> {
    m.eigenvalues().map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// `max |(M^* M - I)_{ij}|`.
pub fn unitarity_defect(m: &Mat<C64>) -> f64 {
    let n = m.ncols();
    let sparse = SparseCols::from_dense(m);
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a..n {
            let mut s = ZERO;
            // columns of a band matrix overlap only near the diagonal
            let (ca, cb) = (&sparse.cols[a], &sparse.cols[b]);
            if ca.is_empty() || cb.is_empty() {
                if a == b {
                    worst = worst.max(1.0);
                }
                continue;
            }
            if ca.last().unwrap().0 < cb[0].0 || cb.last().unwrap().0 < ca[0].0 {
                continue;
            }
            let (mut i, mut j) = (0, 0);
            while i < ca.len() && j < cb.len() {
                match ca[i].0.cmp(&cb[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        s += ca[i].1.conj() * cb[j].1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            if a == b {
                s -= ONE;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_mat2(rng: &mut impl Rng) -> Mat2 {
        let mut z = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        Mat2::new(z(), z(), z(), z())
    }

    /// Random unitary via Gram-Schmidt of a random complex matrix.
    fn random_unitary(n: usize, rng: &mut impl Rng) -> Mat<C64> {
        let mut cols: Vec<Vec<C64>> = Vec::new();
        for _ in 0..n {
            let mut v: Vec<C64> =
                (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            for _ in 0..2 {
                for u in &cols {
                    let p = dot(u, &v);
                    for i in 0..n {
                        v[i] -= u[i] * p;
                    }
                }
            }
            let nrm = dot(&v, &v).re.sqrt();
            v.iter_mut().for_each(|x| *x /= nrm);
            cols.push(v);
        }
        Mat::from_fn(n, n, |i, j| cols[j][i])
    }

    #[test]
    fn inverse_and_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a = random_mat2(&mut rng);
            let p = a * a.inverse().unwrap();
            assert!((p - Mat2::identity()).max_abs() < 1e-10);
            let b = random_mat2(&mut rng);
            assert!(((a * b).det() - a.det() * b.det()).norm() < 1e-12);
        }
    }

    #[test]
    fn eigen_pairs_satisfy_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = random_mat2(&mut rng);
            let (e1, e2) = a.eigenvalues();
            assert!(e1.norm() >= e2.norm());
            assert!(((e1 + e2) - a.trace()).norm() < 1e-12);
            for e in [e1, e2] {
                let v = a.eigenvector(e);
                let r = a.apply(&v);
                assert!((r[0] - e * v[0]).norm() + (r[1] - e * v[1]).norm() < 1e-9);
                assert!((vec2_norm(&v) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_values_match_hermitian_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_mat2(&mut rng);
            let (s1, s2) = a.singular_values();
            let (ev, vecs) = (a.adjoint() * a).hermitian_eigen();
            assert!((s1 * s1 - ev[1]).abs() < 1e-12);
            assert!((s2 * s2 - ev[0]).abs() < 1e-12);
            let ata = a.adjoint() * a;
            for (k, v) in vecs.iter().enumerate() {
                let r = ata.apply(v);
                assert!((r[0] - v[0] * ev[k]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unitary_eigen_matches_general_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1, 2, 5, 17, 40] {
            let u = random_unitary(n, &mut rng);
            let ue = unitary_eigen(&u).unwrap();
            let reference = general_eigenvalues(&u).unwrap();
            let a: Vec<f64> = ue.values.iter().map(|z| z.arg()).collect();
            let b: Vec<f64> = reference.iter().map(|z| z.arg()).collect();
            assert!(crate::angle::multiset_distance(&a, &b).unwrap() < 1e-10, "n = {n}");
            // eigen-relation and orthonormality
            for j in 0..n {
                for i in 0..n {
                    let mut s = ZERO;
                    for k in 0..n {
                        s += u[(i, k)] * ue.vectors[(k, j)];
                    }
                    assert!((s - ue.values[j] * ue.vectors[(i, j)]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn unitary_eigen_degenerate_spectrum() {
        // diagonal with repeated values and a conjugate pair sharing cos
        let vals = [cis(0.3), cis(-0.3), cis(0.3), ONE, ONE, cis(2.0)];
        let n = vals.len();
        let u = Mat::from_fn(n, n, |i, j| if i == j { vals[i] } else { ZERO });
        let ue = unitary_eigen(&u).unwrap();
        let a: Vec<f64> = ue.values.iter().map(|z| z.arg()).collect();
        let b: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
        assert!(crate::angle::multiset_distance(&a, &b).unwrap() < 1e-14);
    }

    proptest! {
        #[test]
        fn det_of_inverse(re in proptest::collection::vec(-2.0..2.0f64, 8)) {
            let a = Mat2::new(c(re[0], re[1]), c(re[2], re[3]), c(re[4], re[5]), c(re[6], re[7]));
            prop_assume!(a.det().norm() > 1e-3);
            let inv = a.inverse().unwrap();
            prop_assert!((inv.det() * a.det() - ONE).norm() < 1e-9);
        }
    }
}
