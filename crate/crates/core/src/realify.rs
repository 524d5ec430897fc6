//! Real embeddings `ρ: ℂ² → ℝ⁴` and `τ: M₂(ℂ) → A₄(ℝ)`.
//!
//! `τ` sends each complex entry `a` to the 2x2 block `Re(a)·I + Im(a)·J` with
//! `J = [[0, 1], [-1, 0]]`, and `ρ(x, y) = (Re x, -Im x, Re y, -Im y)`, so that
//! `ρ(Tu) = τ(T) ρ(u)`.

use crate::linalg::{Mat2, Vec2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

pub type RealMat4 = [[f64; 4]; 4];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealVec4(pub [f64; 4]);

impl RealVec4 {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &RealVec4) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Inverse of [`rho`].
    pub fn to_complex(&self) -> Vec2 {
        let v = self.0;
        [C64::new(v[0], -v[1]), C64::new(v[2], -v[3])]
    }
}

/// Element of `A₄(ℝ)` stored by its four complex block coefficients, so the
/// block structure holds by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real4 {
    blocks: [[C64; 2]; 2],
}

impl Real4 {
    /// The 16 real entries.
    pub fn to_matrix(&self) -> RealMat4 {
        let mut m = [[0.0; 4]; 4];
        for bi in 0..2 {
            for bj in 0..2 {
                let z = self.blocks[bi][bj];
                m[2 * bi][2 * bj] = z.re;
                m[2 * bi][2 * bj + 1] = z.im;
                m[2 * bi + 1][2 * bj] = -z.im;
                m[2 * bi + 1][2 * bj + 1] = z.re;
            }
        }
        m
    }

    /// Recover the block coefficients of a dense matrix, or `None` if it
    /// leaves the sub-algebra by more than `tol`.
    pub fn from_matrix(m: &RealMat4, tol: f64) -> Option<Real4> {
        let mut blocks = [[C64::new(0.0, 0.0); 2]; 2];
        for bi in 0..2 {
            for bj in 0..2 {
                let (p, q, r, s) = (m[2 * bi][2 * bj], m[2 * bi][2 * bj + 1], m[2 * bi + 1][2 * bj], m[2 * bi + 1][2 * bj + 1]);
                if (p - s).abs() > tol || (q + r).abs() > tol {
                    return None;
                }
                blocks[bi][bj] = C64::new((p + s) / 2.0, (q - r) / 2.0);
            }
        }
        Some(Real4 { blocks })
    }

    /// The complex matrix this element represents.
    pub fn to_complex(&self) -> Mat2 {
        Mat2(self.blocks)
    }

    pub fn transpose(&self) -> Real4 {
        tau(&self.to_complex().adjoint())
    }

    pub fn apply(&self, v: &RealVec4) -> RealVec4 {
        RealVec4(mat_vec(&self.to_matrix(), &v.0))
    }

    pub fn norm_fro(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.to_complex().norm_fro()
    }

    pub fn det(&self) -> f64 {
        det4(&self.to_matrix())
    }
}

impl Mul for Real4 {
    type Output = Real4;
    fn mul(self, rhs: Real4) -> Real4 {
        tau(&(self.to_complex() * rhs.to_complex()))
    }
}

impl Add for Real4 {
    type Output = Real4;
    fn add(self, rhs: Real4) -> Real4 {
        tau(&(self.to_complex() + rhs.to_complex()))
    }
}

impl Sub for Real4 {
    type Output = Real4;
    fn sub(self, rhs: Real4) -> Real4 {
        tau(&(self.to_complex() - rhs.to_complex()))
    }
}

pub fn rho(u: &Vec2) -> RealVec4 {
    RealVec4([u[0].re, -u[0].im, u[1].re, -u[1].im])
}

pub fn tau(a: &Mat2) -> Real4 {
    Real4 { blocks: a.0 }
}

pub fn mat_vec(m: &RealMat4, v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, row) in m.iter().enumerate() {
        out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

pub fn mat_mul(a: &RealMat4, b: &RealMat4) -> RealMat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose4(a: &RealMat4) -> RealMat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn fro4(a: &RealMat4) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs_diff4(a: &RealMat4, b: &RealMat4) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Gauss-Jordan inverse with partial pivoting; `None` if singular.
pub fn inverse4(a: &RealMat4) -> Option<RealMat4> {
    let mut m = *a;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let piv = (col..4).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..4 {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..4 {
            if row != col {
                let f = m[row][col];
                for j in 0..4 {
                    m[row][j] -= f * m[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

/// Determinant by cofactor expansion.
pub fn det4(a: &RealMat4) -> f64 {
    let det3 = |r: [usize; 3], c: [usize; 3]| {
        a[r[0]][c[0]] * (a[r[1]][c[1]] * a[r[2]][c[2]] - a[r[1]][c[2]] * a[r[2]][c[1]])
            - a[r[0]][c[1]] * (a[r[1]][c[0]] * a[r[2]][c[2]] - a[r[1]][c[2]] * a[r[2]][c[0]])
            + a[r[0]][c[2]] * (a[r[1]][c[0]] * a[r[2]][c[1]] - a[r[1]][c[1]] * a[r[2]][c[0]])
    };
    let mut d = 0.0;
    for j in 0..4 {
        let cols: Vec<usize> = (0..4).filter(|&c| c != j).collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        d += sign * a[0][j] * det3([1, 2, 3], [cols[0], cols[1], cols[2]]);
    }
    d
}

/// Eigenvalues of a dense real 4x4 matrix, as complex numbers sorted by
/// decreasing modulus.
pub fn eigenvalues4(a: &RealMat4) -> Vec<C64> {
    let m = faer::Mat::<C64>::from_fn(4, 4, |i, j| C64::new(a[i][j], 0.0));
    let mut ev = crate::linalg::general_eigenvalues(&m).expect("4x4 eigensolve");
    ev.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    ev
}

/// Eigenvalues of a symmetric 4x4 matrix, ascending.
pub fn symmetric_eigenvalues4(a: &RealMat4) -> Vec<f64> {
    let m = faer::Mat::<f64>::from_fn(4, 4, |i, j| a[i][j]);
    let mut ev: Vec<f64> = m.self_adjoint_eigenvalues(faer::Side::Lower).expect("symmetric eigensolve");
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest deviation observed for each identity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgebraReport {
    pub samples: usize,
    pub seed: u64,
    pub additivity: f64,
    pub scalar: f64,
    pub multiplicativity: f64,
    pub adjoint: f64,
    pub inverse: f64,
    pub norm_identity: f64,
    pub intertwining: f64,
    pub rho_norm: f64,
    pub rho_orthogonality: f64,
    pub block_structure: f64,
    pub unimodular_det: f64,
    pub eigenvalue_doubling: f64,
}

impl AlgebraReport {
    pub fn max_deviation(&self) -> f64 {
        [
            self.additivity,
            self.scalar,
            self.multiplicativity,
            self.adjoint,
            self.inverse,
            self.norm_identity,
            self.intertwining,
            self.rho_norm,
            self.rho_orthogonality,
            self.block_structure,
            self.unimodular_det,
            self.eigenvalue_doubling,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation() < tol
    }
}

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_unit_mat(rng: &mut ChaCha8Rng) -> Mat2 {
    let a = Mat2::new(random_c(rng), random_c(rng), random_c(rng), random_c(rng));
    a.scale(C64::new(1.0 / a.norm_fro(), 0.0))
}

/// Check the algebraic and metric identities of `ρ`, `τ` on random samples.
/// Each side is evaluated independently: left sides through the complex
/// algebra, right sides through dense real 4x4 arithmetic.
pub fn verify_algebra(samples: usize, seed: u64) -> AlgebraReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = AlgebraReport { samples, seed, ..Default::default() };
    let upd = |slot: &mut f64, v: f64| *slot = slot.max(v);
    for _ in 0..samples.max(1) {
        let a = random_unit_mat(&mut rng);
        let b = random_unit_mat(&mut rng);
        let s = C64::new(rng.random_range(-2.0..2.0), 0.0);
        let u = [random_c(&mut rng), random_c(&mut rng)];
        let (ta, tb) = (tau(&a).to_matrix(), tau(&b).to_matrix());

        let mut sum = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                sum[i][j] = ta[i][j] + tb[i][j];
            }
        }
        upd(&mut rep.additivity, max_abs_diff4(&tau(&(a + b)).to_matrix(), &sum));
        let scaled = ta.map(|row| row.map(|x| x * s.re));
        upd(&mut rep.scalar, max_abs_diff4(&tau(&a.scale(s)).to_matrix(), &scaled));
        upd(&mut rep.multiplicativity, max_abs_diff4(&tau(&(a * b)).to_matrix(), &mat_mul(&ta, &tb)));
        upd(&mut rep.adjoint, max_abs_diff4(&tau(&a.adjoint()).to_matrix(), &transpose4(&ta)));
        if let (Some(ai), Some(ti)) = (a.inverse(), inverse4(&ta)) {
            let scale = fro4(&ti).max(1.0);
            upd(&mut rep.inverse, max_abs_diff4(&tau(&ai).to_matrix(), &ti) / scale);
        }
        upd(&mut rep.norm_identity, (fro4(&ta) - std::f64::consts::SQRT_2 * a.norm_fro()).abs());
        let lhs = rho(&a.apply(&u)).0;
        let rhs = mat_vec(&ta, &rho(&u).0);
        upd(&mut rep.intertwining, lhs.iter().zip(&rhs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        let un = crate::linalg::vec2_norm(&u);
        upd(&mut rep.rho_norm, (rho(&u).norm() - un).abs());
        let iu = [u[0] * crate::linalg::I, u[1] * crate::linalg::I];
        upd(&mut rep.rho_orthogonality, rho(&iu).dot(&rho(&u)).abs());
        upd(&mut rep.block_structure, if Real4::from_matrix(&ta, 1e-15).is_some() { 0.0 } else { 1.0 });

        // unimodular source: det τ(A) = |det A|² = 1
        let d = a.det();
        if d.norm() > 1e-3 {
            let unimodular = a.scale(d.sqrt().inv());
            upd(&mut rep.unimodular_det, (tau(&unimodular).det() - 1.0).abs());
        }

        // self-adjoint source: eigenvalues of τ(H) are those of H, doubled
        let h = a + a.adjoint();
        let (e, _) = h.hermitian_eigen();
        let mut want = [e[0], e[0], e[1], e[1]];
        want.sort_by(f64::total_cmp);
        let th = tau(&h).to_matrix();
        let sym = max_abs_diff4(&th, &transpose4(&th));
        let got = symmetric_eigenvalues4(&th);
        let dev = got.iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(sym, f64::max);
        upd(&mut rep.eigenvalue_doubling, dev);
    }
    rep
}
