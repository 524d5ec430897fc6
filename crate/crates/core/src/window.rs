//! Scattering blocks, finite windows of `U = U_o U_e`, and the banded stencil.

use crate::error::{Error, Result};
use crate::linalg::{cis, unitarity_defect, I, ONE, ZERO};
use crate::model::{CouplingPair, PhaseModel, PhaseTriple};
use faer::Mat;
use num_complex::Complex64 as C64;

/// `e^{-iθ} [[r e^{-iα}, i t e^{iγ}], [i t e^{-iγ}, r e^{iα}]]`.
pub fn scattering_block(p: &PhaseTriple, c: &CouplingPair) -> [[C64; 2]; 2] {
    let g = cis(-p.theta);
    let (r, t) = (c.r(), c.t());
    [
        [g * cis(-p.alpha) * r, g * I * cis(p.gamma) * t],
        [g * I * cis(-p.gamma) * t, g * cis(p.alpha) * r],
    ]
}

/// How a block cut by the window boundary is replaced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCompletion {
    /// A 1x1 identity entry, i.e. `t = 0` on the cut bond.
    Identity,
    /// The phase `e^{-iθ}` of the cut block: the half-line convention.
    BlockPhase,
}

/// A finite square section of the monodromy operator on consecutive sites.
#[derive(Clone, Debug)]
pub struct BandWindow {
    pub first_site: i64,
    pub matrix: Mat<C64>,
    pub near_edge: EdgeCompletion,
    pub far_edge: EdgeCompletion,
}

impl BandWindow {
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn last_site(&self) -> i64 {
        self.first_site + self.len() as i64 - 1
    }

    /// Position of a lattice site inside the window.
    pub fn index(&self, site: i64) -> Option<usize> {
        let i = site - self.first_site;
        (0..self.len() as i64).contains(&i).then_some(i as usize)
    }

    /// `max |(U^*U - I)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    /// Largest `|i - j|` over nonzero entries.
    pub fn bandwidth(&self) -> usize {
        let n = self.len();
        let mut w = 0;
        for j in 0..n {
            for i in 0..n {
                if self.matrix[(i, j)] != ZERO {
                    w = w.max(i.abs_diff(j));
                }
            }
        }
        w
    }

    /// Matrix-vector product with the dense window.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.len();
        let mut out = vec![ZERO; n];
        for j in 0..n {
            let x = v[j];
            if x == ZERO {
                continue;
            }
            let lo = j.saturating_sub(3);
            let hi = (j + 3).min(n - 1);
            for i in lo..=hi {
                out[i] += self.matrix[(i, j)] * x;
            }
        }
        out
    }
}

/// Entries of one block-diagonal factor acting on site `m`: the image of
/// `φ_m` under the factor whose blocks start on sites of the given parity.
fn factor_column(
    model: &PhaseModel,
    parity: i64,
    m: i64,
    first: i64,
    last: i64,
    near: EdgeCompletion,
    far: EdgeCompletion,
) -> [(i64, C64); 2] {
    let j = if (m - parity).rem_euclid(2) == 0 { m } else { m - 1 };
    if j < first || j + 1 > last {
        let edge = if j < first { near } else { far };
        let v = match edge {
            EdgeCompletion::Identity => ONE,
            EdgeCompletion::BlockPhase => cis(-model.theta(j)),
        };
        return [(m, v), (m, ZERO)];
    }
    let s = scattering_block(&model.phases(j), &model.coupling_at(j));
    let c = (m - j) as usize;
    [(j, s[0][c]), (j + 1, s[1][c])]
}

/// Assemble `U_o U_e` on sites `first ..= first + n - 1`, closing each block
/// cut by the boundary according to `near` and `far`.
pub fn assemble(model: &PhaseModel, first: i64, n: usize, near: EdgeCompletion, far: EdgeCompletion) -> BandWindow {
    let last = first + n as i64 - 1;
    let mut u = Mat::<C64>::zeros(n, n);
    for col in 0..n {
        let m = first + col as i64;
        for (site, v) in factor_column(model, 0, m, first, last, near, far) {
            if v == ZERO {
                continue;
            }
            for (row, w) in factor_column(model, 1, site, first, last, near, far) {
                if w != ZERO {
                    u[((row - first) as usize, col)] += w * v;
                }
            }
        }
    }
    BandWindow { first_site: first, matrix: u, near_edge: near, far_edge: far }
}

/// Window of `K` pairs of sites starting at site `2·offset`, closed with
/// identity entries on both cut bonds.
pub fn build_windowed_unitary(model: &PhaseModel, blocks: usize, offset: i64) -> Result<BandWindow> {
    if blocks < 2 {
        return Err(Error::WindowTooSmall { min: 2, got: blocks });
    }
    Ok(assemble(model, 2 * offset, 2 * blocks, EdgeCompletion::Identity, EdgeCompletion::Identity))
}

/// The four nonzero entries `(row, value)` of column `m` of the infinite
/// operator, written out term by term.
pub fn column_image(model: &PhaseModel, m: i64) -> [(i64, C64); 4] {
    let k = m.div_euclid(2);
    let e = 2 * k;
    let p = |j: i64| model.phases(j);
    let c = |j: i64| model.coupling_at(j);
    let (pm, p0, pp) = (p(e - 1), p(e), p(e + 1));
    let (cm, c0, cp) = (c(e - 1), c(e), c(e + 1));
    let left = cis(-(p0.theta + pm.theta));
    let right = cis(-(p0.theta + pp.theta));
    if m == e {
        [
            (e - 1, I * c0.r() * cm.t() * left * cis(-(p0.alpha - pm.gamma))),
            (e, c0.r() * cm.r() * left * cis(-(p0.alpha - pm.alpha))),
            (e + 1, I * cp.r() * c0.t() * right * cis(-(p0.gamma + pp.alpha))),
            (e + 2, -c0.t() * cp.t() * right * cis(-(p0.gamma + pp.gamma))),
        ]
    } else {
        [
            (e - 1, -c0.t() * cm.t() * left * cis(p0.gamma + pm.gamma)),
            (e, I * c0.t() * cm.r() * left * cis(p0.gamma + pm.alpha)),
            (e + 1, c0.r() * cp.r() * right * cis(p0.alpha - pp.alpha)),
            (e + 2, I * c0.r() * cp.t() * right * cis(p0.alpha - pp.gamma)),
        ]
    }
}

/// `U_{row, col}` of the infinite operator.
pub fn matrix_element(model: &PhaseModel, row: i64, col: i64) -> C64 {
    column_image(model, col)
        .iter()
        .find(|(r, _)| *r == row)
        .map_or(ZERO, |(_, v)| *v)
}

/// Result of applying the stencil to a finitely supported vector.
#[derive(Clone, Debug)]
pub struct MonodromyImage {
    pub first_site: i64,
    pub values: Vec<C64>,
    /// Sites whose full stencil lies inside the input support.
    pub trusted: std::ops::RangeInclusive<i64>,
}

impl MonodromyImage {
    /// Sites near the edges where truncation of the stencil may matter.
    pub fn untrusted_sites(&self) -> Vec<i64> {
        let last = self.first_site + self.values.len() as i64 - 1;
        (self.first_site..=last).filter(|s| !self.trusted.contains(s)).collect()
    }
}

/// Apply the infinite operator to `coeffs` supported on
/// `first_site .. first_site + len`, keeping the output on the same sites.
pub fn apply_monodromy(coeffs: &[C64], first_site: i64, model: &PhaseModel) -> Result<MonodromyImage> {
    let n = coeffs.len();
    if n < 5 {
        return Err(Error::WindowTooSmall { min: 5, got: n });
    }
    let last = first_site + n as i64 - 1;
    let mut out = vec![ZERO; n];
    for (j, &x) in coeffs.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        for (row, v) in column_image(model, first_site + j as i64) {
            if (first_site..=last).contains(&row) {
                out[(row - first_site) as usize] += v * x;
            }
        }
    }
    Ok(MonodromyImage { first_site, values: out, trusted: first_site + 2..=last - 2 })
}

/// `ζ` with `ζ_0 = 0` and `ζ_j = ζ_{j-1} - γ_{j-1}`; conjugating by
/// `diag(e^{iζ})` removes the `γ` phases.
pub fn gauge_phases(gammas: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(gammas.len());
    let mut acc = 0.0;
    for (j, _) in gammas.iter().enumerate() {
        if j > 0 {
            acc -= gammas[j - 1];
        }
        z.push(acc);
    }
    z
}

/// `diag(e^{-iζ}) U diag(e^{iζ})`.
pub fn gauge_conjugate(w: &BandWindow, zeta: &[f64]) -> BandWindow {
    let n = w.len();
    let m = Mat::<C64>::from_fn(n, n, |i, j| {
        let v = w.matrix[(i, j)];
        if v == ZERO {
            v
        } else {
            cis(zeta[j] - zeta[i]) * v
        }
    });
    BandWindow { matrix: m, ..w.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::multiset_distance;
    use crate::linalg::unitary_eigen;
    use crate::model::{GaugeRule, PhaseModel};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn block_defect(s: &[[C64; 2]; 2]) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let mut v = ZERO;
                for k in 0..2 {
                    v += s[k][a].conj() * s[k][b];
                }
                if a == b {
                    v -= ONE;
                }
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    #[test]
    fn block_special_cases() {
        let z = PhaseTriple::zero();
        let id = scattering_block(&z, &CouplingPair::new(0.0).unwrap());
        assert_eq!(id, [[ONE, ZERO], [ZERO, ONE]]);
        let sw = scattering_block(&z, &CouplingPair::new(1.0).unwrap());
        assert!((sw[0][1] - I).norm() < 1e-16 && (sw[1][0] - I).norm() < 1e-16);
        assert!(sw[0][0].norm() < 1e-16 && sw[1][1].norm() < 1e-16);
    }

    #[test]
    fn random_blocks_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = PhaseTriple::new(rng.random::<f64>() * 7.0, rng.random::<f64>() * 7.0, rng.random::<f64>() * 7.0);
            let c = CouplingPair::new(rng.random()).unwrap();
            assert!(block_defect(&scattering_block(&p, &c)) < 1e-13);
        }
    }

    #[test]
    fn window_too_small() {
        let m = PhaseModel::random(1, 0.5).unwrap();
        assert!(matches!(build_windowed_unitary(&m, 1, 0), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn t_zero_window_is_block_diagonal() {
        let m = PhaseModel::random(3, 0.0).unwrap();
        let w = build_windowed_unitary(&m, 4, 0).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i / 2 != j / 2 {
                    assert_eq!(w.matrix[(i, j)], ZERO);
                }
            }
        }
        let e = unitary_eigen(&w.matrix).unwrap();
        for v in e.values {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn t_one_window_is_a_pair_of_shifts() {
        // even sites move two steps right, odd sites two steps left
        let m = PhaseModel::two_valued(0.0, 0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let w = build_windowed_unitary(&m, 8, 0).unwrap();
        for i in 2..14 {
            let nz: Vec<usize> = (0..16).filter(|&j| w.matrix[(i, j)].norm() > 1e-15).collect();
            let from = if i % 2 == 0 { i - 2 } else { i + 2 };
            assert_eq!(nz, vec![from], "row {i}");
            assert!((w.matrix[(i, from)] + C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn windows_unitary_and_banded() {
        for (seed, k) in [(1u64, 2usize), (2, 3), (3, 16), (4, 64)] {
            let m = PhaseModel::random(seed, 0.37).unwrap().with_gauge(GaugeRule::Drawn { seed });
            let w = build_windowed_unitary(&m, k, -(k as i64) / 2).unwrap();
            assert!(w.unitarity_defect() < 1e-12);
            assert!(w.bandwidth() <= 2);
        }
    }

    /// Independent route: dense block-diagonal factors multiplied in full.
    fn dense_product(model: &PhaseModel, first: i64, n: usize) -> Mat<C64> {
        let mut ue = Mat::<C64>::identity(n, n);
        let mut uo = Mat::<C64>::identity(n, n);
        for i in 0..n - 1 {
            let j = first + i as i64;
            let s = scattering_block(&model.phases(j), &model.coupling_at(j));
            let f = if j.rem_euclid(2) == 0 { &mut ue } else { &mut uo };
            for a in 0..2 {
                for b in 0..2 {
                    f[(i + a, i + b)] = s[a][b];
                }
            }
        }
        &uo * &ue
    }

    #[test]
    fn assembly_matches_dense_product_and_stencil() {
        let m = PhaseModel::random(5, 0.6).unwrap().with_gauge(GaugeRule::Drawn { seed: 9 });
        let w = build_windowed_unitary(&m, 8, -3).unwrap();
        let d = dense_product(&m, w.first_site, w.len());
        for i in 0..16 {
            for j in 0..16 {
                assert!((w.matrix[(i, j)] - d[(i, j)]).norm() < 1e-15);
            }
        }
        // interior entries coincide with the term-by-term formula
        for i in 2..14 {
            for j in 0..16 {
                let e = matrix_element(&m, w.first_site + i as i64, w.first_site + j as i64);
                assert!((w.matrix[(i, j)] - e).norm() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn stencil_unit_vector_t_zero() {
        let m = PhaseModel::random(8, 0.0).unwrap();
        let mut v = vec![ZERO; 10];
        v[4] = ONE; // site 4 = 2k
        let out = apply_monodromy(&v, 0, &m).unwrap();
        assert_eq!(out.values[3], ZERO);
        assert!((out.values[4].norm() - 1.0).abs() < 1e-15);
        assert_eq!(out.untrusted_sites(), vec![0, 1, 8, 9]);
    }

    #[test]
    fn stencil_matches_dense_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..100u64 {
            let t = rng.random_range(0.05..0.95);
            let m = PhaseModel::random(seed, t).unwrap().with_gauge(GaugeRule::Drawn { seed: seed + 1 });
            let w = build_windowed_unitary(&m, 6, rng.random_range(-50..50)).unwrap();
            let v: Vec<C64> = (0..12).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let dense = w.apply(&v);
            let st = apply_monodromy(&v, w.first_site, &m).unwrap();
            for s in st.trusted.clone() {
                let i = (s - w.first_site) as usize;
                assert!((dense[i] - st.values[i]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn gauge_phases_examples() {
        assert_eq!(gauge_phases(&[0.0; 5]), vec![0.0; 5]);
        let z = gauge_phases(&[0.3; 6]);
        for (k, v) in z.iter().enumerate() {
            assert!((v + 0.3 * k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn gauge_conjugation_removes_gamma() {
        for seed in 0..10u64 {
            let base = PhaseModel::random(seed, 0.45).unwrap();
            let drawn = base.clone().with_gauge(GaugeRule::Drawn { seed: 100 + seed });
            let w = build_windowed_unitary(&drawn, 8, 2).unwrap();
            let w0 = build_windowed_unitary(&base, 8, 2).unwrap();
            let gam: Vec<f64> = (0..16).map(|i| drawn.gamma(w.first_site + i)).collect();
            let c = gauge_conjugate(&w, &gauge_phases(&gam));
            for i in 0..16 {
                for j in 0..16 {
                    assert!((c.matrix[(i, j)] - w0.matrix[(i, j)]).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn t_zero_spectrum_is_union_of_blocks() {
        // with t = 0 every block is diagonal, so U is diagonal with entries
        // (U_o)_{ss} (U_e)_{ss}
        let m = PhaseModel::random(12, 0.0).unwrap();
        let n = 12;
        let w = build_windowed_unitary(&m, n / 2, 0).unwrap();
        let block = |j: i64| scattering_block(&m.phases(j), &m.coupling_at(j));
        let mut expect = Vec::new();
        for s in 0..n as i64 {
            let e = block(s - s.rem_euclid(2))[(s % 2) as usize][(s % 2) as usize];
            let o = if s % 2 == 1 && s + 1 < n as i64 {
                block(s)[0][0]
            } else if s % 2 == 0 && s > 0 {
                block(s - 1)[1][1]
            } else {
                C64::new(1.0, 0.0)
            };
            expect.push((e * o).arg());
        }
        let got: Vec<f64> = unitary_eigen(&w.matrix).unwrap().values.iter().map(|z| z.arg()).collect();
        assert!(multiset_distance(&got, &expect).unwrap() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn stencil_is_linear(seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let m = PhaseModel::random(seed, 0.5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<C64> = (0..10).map(|_| C64::new(rng.random(), rng.random())).collect();
            let y: Vec<C64> = (0..10).map(|_| C64::new(rng.random(), rng.random())).collect();
            let comb: Vec<C64> = x.iter().zip(&y).map(|(p, q)| p * a + q * b).collect();
            let lhs = apply_monodromy(&comb, 0, &m).unwrap().values;
            let fx = apply_monodromy(&x, 0, &m).unwrap().values;
            let fy = apply_monodromy(&y, 0, &m).unwrap().values;
            for i in 0..10 {
                prop_assert!((lhs[i] - (fx[i] * a + fy[i] * b)).norm() < 1e-13);
            }
        }

        #[test]
        fn gauge_invariant_spectrum(seed in any::<u64>(), k in 2usize..12) {
            let base = PhaseModel::random(seed, 0.5).unwrap();
            let drawn = base.clone().with_gauge(GaugeRule::Drawn { seed: seed ^ 1 });
            let a = unitary_eigen(&build_windowed_unitary(&base, k, 0).unwrap().matrix).unwrap();
            let b = unitary_eigen(&build_windowed_unitary(&drawn, k, 0).unwrap().matrix).unwrap();
            let aa: Vec<f64> = a.values.iter().map(|z| z.arg()).collect();
            let bb: Vec<f64> = b.values.iter().map(|z| z.arg()).collect();
            prop_assert!(multiset_distance(&aa, &bb).unwrap() < 1e-11);
        }
    }
}
