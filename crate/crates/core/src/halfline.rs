//! The half-line operator `U⁺` on sites `1, 2, ...`, the one-period transfer
//! product `R(λ)`, the discriminant `|E₁(λ)|` and the boundary eigenvalue
//! condition for eventually periodic models.

use crate::angle::{circ_dist, reduce};
use crate::error::{Error, Result};
use crate::linalg::{cis, det_cols, normalize_pivot, vec2_norm, Mat2, Vec2, I, ZERO};
use crate::model::{GaugeRule, PhaseModel};
use crate::periodic::{golden_max, Arc, ArcSet};
use crate::transfer::transfer_general;
use crate::window::{assemble, matrix_element, BandWindow, EdgeCompletion};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

/// `|E₁| ≤ 1 + BAND_TOL` counts as spectrum.
pub const BAND_TOL: f64 = 1e-7;
/// `||E₁| - |E₂||` below this marks a near-degenerate pair.
pub const NEAR_BRANCH_SPLIT: f64 = 1e-6;
/// Exclusion radius around branch points and band edges.
pub const BRANCH_RADIUS: f64 = 1e-4;
/// Largest `|det(v₂; a)|` (unit vectors) accepted as a root.
pub const ROOT_RESIDUAL: f64 = 1e-8;

/// `U⁺` on sites `1..=sites`; the first column follows the cut block's phase
/// and the far edge is closed with an identity entry.
pub fn halfline_window(model: &PhaseModel, sites: usize) -> Result<BandWindow> {
    if sites < 4 {
        return Err(Error::WindowTooSmall { min: 4, got: sites });
    }
    Ok(assemble(model, 1, sites, EdgeCompletion::BlockPhase, EdgeCompletion::Identity))
}

/// Which product is used as the period matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodProduct {
    /// `T(k₀+N)···T(k₀+1)`.
    #[default]
    Period,
    /// `T(k₀+N+1)···T(k₀+1)`, one factor more.
    PlusOne,
}

#[derive(Clone, Copy, Debug)]
pub struct PeriodData {
    pub lambda: f64,
    pub r: Mat2,
    pub det_phase: f64,
    /// `|e1| >= |e2|`.
    pub e1: C64,
    pub e2: C64,
    /// Eigenvector of `e2`, largest component real positive.
    pub v2: Vec2,
    pub near_branch: bool,
}

impl PeriodData {
    /// `(Tr R)² - 4 det R`.
    pub fn discriminant(&self) -> C64 {
        let tr = self.r.trace();
        tr * tr - 4.0 * self.r.det()
    }

    pub fn in_gap(&self) -> bool {
        self.e1.norm() > 1.0 + BAND_TOL
    }
}

/// Transfer-matrix form of the boundary rows: `T̃⁻¹ d(1) = c₁ b(λ)`.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryData {
    pub t_tilde_inv: Mat2,
    pub b: Vec2,
}

impl BoundaryData {
    /// `T̃ b(λ)`, the direction of `d(1)` for `c₁ = 1`.
    pub fn initial_pair(&self) -> Result<Vec2> {
        let inv = self.t_tilde_inv.inverse().ok_or_else(|| Error::CheckFailed("boundary matrix is singular".into()))?;
        Ok(inv.apply(&self.b))
    }
}

/// Number of sites in one period of an eventually periodic model.
fn site_period(model: &PhaseModel) -> Result<usize> {
    model
        .site_period()
        .ok_or(Error::WrongVariant { expected: "periodic", found: model.variant.name() })
}

/// Smallest `k₀` such that `T(k)` for `k > k₀` sees no defect.
pub fn minimal_k0(model: &PhaseModel) -> i64 {
    model.defects.iter().map(|d| d.site.div_euclid(2) + 1).max().unwrap_or(1).max(1)
}

/// A half-line problem: the model in the alternating gauge and the index
/// `k₀` after which the transfer matrices are periodic.
#[derive(Clone, Debug)]
pub struct HalfLine {
    pub model: PhaseModel,
    pub k0: i64,
    pub period: usize,
    pub product: PeriodProduct,
}

impl HalfLine {
    pub fn new(model: &PhaseModel, k0: i64) -> Result<Self> {
        if k0 < 1 {
            return Err(Error::InvalidArgument(format!("k0 must be at least 1, got {k0}")));
        }
        let period = site_period(model)?;
        let model = model.clone().with_gauge(GaugeRule::Alternating);
        let c = model.constant_coupling().ok_or(Error::VaryingCoupling)?;
        if c.t() <= 0.0 {
            return Err(Error::DegenerateCoupling { t: c.t() });
        }
        Ok(HalfLine { model, k0, period, product: PeriodProduct::Period })
    }

    pub fn with_product(mut self, product: PeriodProduct) -> Self {
        self.product = product;
        self
    }

    fn factors(&self) -> usize {
        match self.product {
            PeriodProduct::Period => self.period,
            PeriodProduct::PlusOne => self.period + 1,
        }
    }

    pub fn period_matrix(&self, lambda: f64) -> Result<PeriodData> {
        let mut r = Mat2::identity();
        let mut det_phase = 0.0;
        for k in self.k0 + 1..=self.k0 + self.factors() as i64 {
            let t = transfer_general(k, lambda, &self.model)?;
            r = t.m * r;
            det_phase += t.det_phase;
        }
        let (e1, e2) = r.eigenvalues();
        let v2 = normalize_pivot(&r.eigenvector(e2));
        let near_branch = (e1.norm() - e2.norm()).abs() < NEAR_BRANCH_SPLIT;
        Ok(PeriodData { lambda, r, det_phase: reduce(det_phase), e1, e2, v2, near_branch })
    }

    /// Boundary matrices in the alternating gauge.
    pub fn boundary(&self, lambda: f64) -> BoundaryData {
        let m = &self.model;
        let c = m.coupling_at(1);
        let (r, t) = (c.r(), c.t());
        let (th0, th1, th2) = (m.theta(0), m.theta(1), m.theta(2));
        let (a1, a2) = (m.alpha(1), m.alpha(2));
        let z = cis(lambda);
        let g = cis(-(th1 + th2 + a2 - a1));
        let t_tilde_inv = Mat2::new(g * I * (r * t), g * (-t * t), g * (r * r) - z, g * I * (r * t));
        let h = cis(-(th0 + th1 + a1));
        let b = [z - h * r, -h * I * t];
        BoundaryData { t_tilde_inv, b }
    }

    /// `a(λ) = T(k₀)···T(2) T̃ b(λ)`.
    pub fn a_vector(&self, lambda: f64) -> Result<Vec2> {
        let mut a = self.boundary(lambda).initial_pair()?;
        for k in 2..=self.k0 {
            a = transfer_general(k, lambda, &self.model)?.m.apply(&a);
        }
        Ok(a)
    }

    /// `det(v₂(λ); a(λ))` with `v₂` normalized as requested and `a` scaled to
    /// unit length.
    pub fn eigenvalue_function_with(&self, lambda: f64, norm: V2Normalization) -> Result<C64> {
        let p = self.period_matrix(lambda)?;
        if p.near_branch {
            return Err(Error::NearBranch { lambda, radius: BRANCH_RADIUS });
        }
        if !p.in_gap() {
            return Err(Error::NotInGap { lambda });
        }
        let a = self.a_vector(lambda)?;
        let na = vec2_norm(&a);
        let a = [a[0] / na, a[1] / na];
        let v = match norm {
            V2Normalization::Pivot => p.v2,
            V2Normalization::SecondComponent => {
                if p.v2[1].norm() < 1e-3 {
                    p.v2
                } else {
                    [p.v2[0] / p.v2[1], ONE_C]
                }
            }
        };
        Ok(det_cols(&v, &a))
    }

    pub fn eigenvalue_function(&self, lambda: f64) -> Result<C64> {
        self.eigenvalue_function_with(lambda, V2Normalization::Pivot)
    }

    /// Sites `1..` of the candidate eigenvector at `λ`: the boundary rows
    /// fix `c₁ = 1` and `d(1)`, transfer matrices carry it to `d(k₀)`, and
    /// beyond `k₀` only the decaying component is kept at every period.
    pub fn decaying_vector(&self, lambda: f64, periods: usize) -> Result<Vec<C64>> {
        let p = self.period_matrix(lambda)?;
        let mut out = vec![ONE_C];
        let mut d = self.boundary(lambda).initial_pair()?;
        out.extend_from_slice(&d);
        for k in 2..=self.k0 {
            d = transfer_general(k, lambda, &self.model)?.m.apply(&d);
            out.extend_from_slice(&d);
        }
        // project onto v₂ along v₁
        let v1 = normalize_pivot(&p.r.eigenvector(p.e1));
        let project = |d: Vec2| -> Vec2 {
            let det = det_cols(&v1, &p.v2);
            let coef = det_cols(&v1, &d) / det;
            [p.v2[0] * coef, p.v2[1] * coef]
        };
        let mut k = self.k0;
        for _ in 0..periods {
            d = project(d);
            let last = out.len();
            out[last - 2] = d[0];
            out[last - 1] = d[1];
            for _ in 0..self.period {
                k += 1;
                d = transfer_general(k, lambda, &self.model)?.m.apply(&d);
                out.extend_from_slice(&d);
            }
        }
        Ok(out)
    }

    /// Relative eigen-equation residual of [`HalfLine::decaying_vector`] on
    /// the rows whose stencil lies inside the vector.
    pub fn validation_residual(&self, lambda: f64, periods: usize) -> Result<f64> {
        let v = self.decaying_vector(lambda, periods)?;
        let n = v.len();
        let w = halfline_window(&self.model, n)?;
        let img = w.apply(&v);
        let z = cis(lambda);
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let rows = n.saturating_sub(3);
        let res = (0..rows).map(|i| (img[i] - z * v[i]).norm_sqr()).sum::<f64>().sqrt();
        Ok(res / norm)
    }
}

const ONE_C: C64 = C64::new(1.0, 0.0);

/// Scaling of the decaying eigenvector in the eigenvalue function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V2Normalization {
    /// Unit length, largest component real positive.
    Pivot,
    /// Second component equal to one (falls back to the pivot form when it
    /// is small).
    SecondComponent,
}

pub fn period_matrix(lambda: f64, model: &PhaseModel, k0: i64) -> Result<PeriodData> {
    HalfLine::new(model, k0)?.period_matrix(lambda)
}

pub fn eigenvalue_function(lambda: f64, model: &PhaseModel, k0: i64) -> Result<C64> {
    HalfLine::new(model, k0)?.eigenvalue_function(lambda)
}

/// Sampled discriminant, band and gap arcs, and branch-point estimates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscriminantProfile {
    pub lambda: Vec<f64>,
    pub e1_abs: Vec<f64>,
    /// `|E₁E₂| - 1` per grid point.
    pub det_defect: Vec<f64>,
    /// `arg det R` per grid point.
    pub det_phase: Vec<f64>,
    pub bands: ArcSet,
    pub gaps: ArcSet,
    pub branch_points: Vec<f64>,
}

impl DiscriminantProfile {
    pub fn near_branch(&self, lambda: f64) -> bool {
        self.branch_points.iter().any(|&x| circ_dist(x, lambda) < BRANCH_RADIUS)
    }

    pub fn distance_to_band_edge(&self, lambda: f64) -> f64 {
        self.bands.arcs.iter().flat_map(|a| [a.lo, a.hi]).map(|e| circ_dist(e, lambda)).fold(f64::INFINITY, f64::min)
    }

    /// `λ, |E₁|, det_residual` rows; the residual is `|det(v₂; a)|` in gaps
    /// and empty elsewhere.
    pub fn write_csv<W: Write>(&self, w: W, hl: &HalfLine) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lambda", "e1_abs", "det_residual"])?;
        for (l, e) in self.lambda.iter().zip(&self.e1_abs) {
            let res = if self.near_branch(*l) { None } else { hl.eigenvalue_function_with(*l, V2Normalization::Pivot).ok().map(|f| f.norm()) };
            wr.write_record([l.to_string(), e.to_string(), res.map_or(String::new(), |r| r.to_string())])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn bisect_edge(hl: &HalfLine, mut inside: f64, mut outside: f64) -> Result<f64> {
    for _ in 0..64 {
        let mid = 0.5 * (inside + outside);
        if hl.period_matrix(mid)?.e1.norm() <= 1.0 + BAND_TOL {
            inside = mid;
        } else {
            outside = mid;
        }
        if (inside - outside).abs() < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (inside + outside))
}

/// Grid `λ_j` must be increasing in `[0, 2π)`; neighbours are taken
/// cyclically.
pub fn discriminant_profile(hl: &HalfLine, grid: &[f64]) -> Result<DiscriminantProfile> {
    if grid.len() < 8 {
        return Err(Error::InvalidArgument(format!("discriminant grid needs at least 8 points, got {}", grid.len())));
    }
    let data = grid.par_iter().map(|&l| hl.period_matrix(l)).collect::<Result<Vec<_>>>()?;
    let n = grid.len();
    let e1_abs: Vec<f64> = data.iter().map(|p| p.e1.norm()).collect();
    let det_defect = data.iter().map(|p| (p.e1 * p.e2).norm() - 1.0).collect();
    let det_phase = data.iter().map(|p| p.det_phase).collect();
    let in_band: Vec<bool> = e1_abs.iter().map(|&e| e <= 1.0 + BAND_TOL).collect();

    let bands = if in_band.iter().all(|&b| b) {
        ArcSet::full_circle()
    } else if !in_band.iter().any(|&b| b) {
        ArcSet::default()
    } else {
        let start = (0..n).find(|&i| !in_band[i]).unwrap();
        let mut arcs = Vec::new();
        let mut lo = None;
        for s in 1..=n {
            let i = (start + s) % n;
            let prev = (i + n - 1) % n;
            let gap_step = |a: f64, b: f64| if b < a { b + TAU } else { b };
            if in_band[i] && !in_band[prev] {
                let b = gap_step(grid[prev], grid[i]);
                lo = Some(bisect_edge(hl, b, grid[prev])?);
            }
            if !in_band[i] && in_band[prev] {
                let b = gap_step(grid[prev], grid[i]);
                let hi = bisect_edge(hl, grid[prev], b)?;
                if let Some(l) = lo.take() {
                    let hi = if hi < l { hi + TAU } else { hi };
                    arcs.push(Arc::new(l, hi));
                }
            }
        }
        ArcSet::from_arcs(arcs, vec![])
    };
    let gaps = complement(&bands);

    // branch points: local minima of |disc|/(|Tr R|² + 4)
    let score: Vec<f64> = data.iter().map(|p| p.discriminant().norm() / (p.r.trace().norm_sqr() + 4.0)).collect();
    let h = TAU / n as f64;
    let mut branch_points = Vec::new();
    for i in 0..n {
        let (a, b) = (score[(i + n - 1) % n], score[(i + 1) % n]);
        if score[i] <= a && score[i] <= b && score[i] < 0.05 {
            let f = |l: f64| -> f64 {
                hl.period_matrix(l).map_or(f64::INFINITY, |p| p.discriminant().norm() / (p.r.trace().norm_sqr() + 4.0))
            };
            let (x, v) = golden_max(|l| -f(l), grid[i] - h, grid[i] + h, 1e-13);
            if -v < 1e-8 {
                let x = reduce(x);
                if !branch_points.iter().any(|&y| circ_dist(x, y) < 1e-9) {
                    branch_points.push(x);
                }
            }
        }
    }
    branch_points.sort_by(f64::total_cmp);
    Ok(DiscriminantProfile { lambda: grid.to_vec(), e1_abs, det_defect, det_phase, bands, gaps, branch_points })
}

/// Closed complement of an arc union.
pub fn complement(set: &ArcSet) -> ArcSet {
    if set.arcs.is_empty() {
        return ArcSet::full_circle();
    }
    if set.is_full_circle() {
        return ArcSet::default();
    }
    let arcs = &set.arcs;
    let m = arcs.len();
    let gaps = (0..m).map(|i| {
        let next = &arcs[(i + 1) % m];
        let lo = arcs[i].hi;
        let mut hi = next.lo;
        while hi < lo {
            hi += TAU;
        }
        Arc::new(lo, hi)
    });
    ArcSet::from_arcs(gaps.filter(|a| a.len() > 0.0).collect::<Vec<_>>(), vec![])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenRoot {
    pub lambda: f64,
    /// `|det(v₂; a)|` with both vectors of unit length.
    pub residual: f64,
    pub gap_index: usize,
    pub e1_abs: f64,
    /// Relative eigen-equation residual of the reconstructed decaying vector.
    pub validation_residual: f64,
    pub validated: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenReport {
    pub k0: i64,
    pub bands: ArcSet,
    pub gaps: ArcSet,
    pub branch_points: Vec<f64>,
    pub eigenvalues: Vec<EigenRoot>,
}

impl EigenReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FindOptions {
    pub resolution: usize,
    pub tol: f64,
    pub grid: usize,
    pub normalization: V2Normalization,
    /// Periods used to reconstruct the decaying vector for validation.
    pub validation_periods: usize,
}

impl Default for FindOptions {
    fn default() -> Self {
        FindOptions { resolution: 400, tol: 1e-10, grid: 1024, normalization: V2Normalization::Pivot, validation_periods: 40 }
    }
}

pub fn find_eigenvalues(model: &PhaseModel, k0: i64, resolution: usize, tol: f64) -> Result<EigenReport> {
    find_eigenvalues_with(&HalfLine::new(model, k0)?, FindOptions { resolution, tol, ..FindOptions::default() })
}

pub fn find_eigenvalues_with(hl: &HalfLine, opts: FindOptions) -> Result<EigenReport> {
    let grid: Vec<f64> = (0..opts.grid).map(|j| TAU * j as f64 / opts.grid as f64).collect();
    let prof = discriminant_profile(hl, &grid)?;
    let abs_f = |l: f64| -> f64 {
        if prof.near_branch(l) {
            return f64::INFINITY;
        }
        hl.eigenvalue_function_with(l, opts.normalization).map_or(f64::INFINITY, |f| f.norm())
    };
    let mut roots: Vec<EigenRoot> = Vec::new();
    for (gi, gap) in prof.gaps.arcs.iter().enumerate() {
        let inner = gap.len() - 2.0 * BRANCH_RADIUS;
        if inner <= 0.0 {
            continue;
        }
        let m = opts.resolution.max(3);
        let xs: Vec<f64> = (0..m).map(|j| gap.lo + BRANCH_RADIUS + inner * j as f64 / (m - 1) as f64).collect();
        let vals: Vec<f64> = xs.par_iter().map(|&l| abs_f(l)).collect();
        let step = inner / (m - 1) as f64;
        for j in 0..m {
            let left = if j > 0 { vals[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < m { vals[j + 1] } else { f64::INFINITY };
            if !(vals[j].is_finite() && vals[j] <= left && vals[j] <= right) {
                continue;
            }
            let lo = (xs[j] - step).max(xs[0]);
            let hi = (xs[j] + step).min(xs[m - 1]);
            let (l, neg) = golden_max(|l| -abs_f(l), lo, hi, opts.tol);
            let (l, residual) = polish_root(hl, l, -neg, opts);
            if residual >= ROOT_RESIDUAL {
                continue;
            }
            let l = reduce(l);
            if prof.distance_to_band_edge(l) < BRANCH_RADIUS || prof.near_branch(l) {
                continue;
            }
            if roots.iter().any(|r| circ_dist(r.lambda, l) < 10.0 * opts.tol.max(1e-12)) {
                continue;
            }
            let p = hl.period_matrix(l)?;
            let validation_residual = hl.validation_residual(l, opts.validation_periods)?;
            roots.push(EigenRoot { lambda: l, residual, gap_index: gi, e1_abs: p.e1.norm(), validation_residual, validated: validation_residual < 1e-6 });
        }
    }
    roots.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(EigenReport { k0: hl.k0, bands: prof.bands, gaps: prof.gaps, branch_points: prof.branch_points, eigenvalues: roots })
}

/// Newton steps on the complex function with a real parameter: near a
/// simple zero `f(λ)/f'(λ)` is real to first order.
fn polish_root(hl: &HalfLine, mut lambda: f64, mut residual: f64, opts: FindOptions) -> (f64, f64) {
    let f = |l: f64| hl.eigenvalue_function_with(l, opts.normalization).ok();
    for _ in 0..6 {
        let h = 1e-7;
        let (Some(f0), Some(fp), Some(fm)) = (f(lambda), f(lambda + h), f(lambda - h)) else { break };
        let df = (fp - fm) / (2.0 * h);
        if df.norm() == 0.0 {
            break;
        }
        let step = (f0 / df).re;
        if step.abs() > opts.tol.max(1e-12) * 1e3 {
            break;
        }
        let next = lambda - step;
        match f(next) {
            Some(v) if v.norm() < residual => {
                lambda = next;
                residual = v.norm();
            }
            _ => break,
        }
    }
    (lambda, residual)
}

/// Entries `H[i][j]` (sites `i, j ≥ 1`) of the half-line operator without
/// building a window.
pub fn halfline_element(model: &PhaseModel, row: i64, col: i64) -> C64 {
    if col == 1 {
        let c = model.coupling_at(1);
        let p1 = model.phases(1);
        let g = cis(-(model.theta(0) + p1.theta));
        return match row {
            1 => g * cis(-p1.alpha) * c.r(),
            2 => g * I * cis(-p1.gamma) * c.t(),
            _ => ZERO,
        };
    }
    if row < 1 {
        return ZERO;
    }
    matrix_element(model, row, col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;
    use crate::model::{CouplingPair, Defect};
    use crate::periodic::two_periodic_closed_form;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn periodic_model(seed: u64, n: usize, t: f64) -> PhaseModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let th = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
        let pi = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
        PhaseModel::periodic(th, pi, 0.0, t).unwrap()
    }

    #[test]
    fn window_first_column() {
        let m = periodic_model(1, 3, 0.4);
        let w = halfline_window(&m, 8).unwrap();
        let c = m.coupling;
        let g = cis(-(m.theta(0) + m.theta(1)));
        assert!((w.matrix[(0, 0)] - g * cis(-m.alpha(1)) * c.r()).norm() < 1e-15);
        assert!((w.matrix[(1, 0)] - g * I * cis(-m.gamma(1)) * c.t()).norm() < 1e-15);
        for i in 0..8 {
            for j in 0..6 {
                assert!((w.matrix[(i, j)] - halfline_element(&m, i as i64 + 1, j as i64 + 1)).norm() < 1e-15);
            }
        }
        assert!(halfline_window(&m, 3).is_err());
    }

    #[test]
    fn window_unitary() {
        let m = PhaseModel::random(3, 0.5).unwrap();
        assert!(halfline_window(&m, 64).unwrap().unitarity_defect() < 1e-12);
        let z = PhaseModel::random(3, 0.0).unwrap();
        let w = halfline_window(&z, 10).unwrap();
        assert!(unitarity_defect(&w.matrix) < 1e-14);
        assert!(w.bandwidth() <= 1);
    }

    #[test]
    fn printed_boundary_matches_stencil() {
        let m = periodic_model(2, 4, 0.6);
        let hl = HalfLine::new(&m, 2).unwrap();
        let h = |i, j| halfline_element(&hl.model, i, j);
        for lambda in [0.3, 2.0, 4.4] {
            let z = cis(lambda);
            let bd = hl.boundary(lambda);
            let want = Mat2::new(h(1, 2), h(1, 3), h(2, 2) - z, h(2, 3));
            assert!((bd.t_tilde_inv - want).max_abs() < 1e-14);
            assert!((bd.b[0] - (z - h(1, 1))).norm() < 1e-14);
            assert!((bd.b[1] + h(2, 1)).norm() < 1e-14);
            // the determinant has modulus t², not one
            assert!((bd.t_tilde_inv.det().norm() - 0.36).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_period_at_zero() {
        let m = PhaseModel::two_valued(0.0, 0.0, 0.0, 0.0, 0.0, 0.5).unwrap();
        let hl = HalfLine { period: 1, ..HalfLine::new(&m, 1).unwrap() };
        let p = hl.period_matrix(0.0).unwrap();
        assert!((p.r - Mat2::identity().scale(C64::new(-1.0, 0.0))).max_abs() < 1e-14);
        assert!((p.e1 + 1.0).norm() < 1e-12 && (p.e2 + 1.0).norm() < 1e-12);
        assert!(p.near_branch);
    }

    #[test]
    fn det_r_unimodular_and_constant() {
        let m = periodic_model(4, 3, 0.6);
        let hl = HalfLine::new(&m, 1).unwrap();
        let grid: Vec<f64> = (0..256).map(|j| TAU * j as f64 / 256.0).collect();
        let prof = discriminant_profile(&hl, &grid).unwrap();
        for (d, e) in prof.det_defect.iter().zip(&prof.e1_abs) {
            // rounding in det R grows like ‖R‖²
            assert!(d.abs() < 1e-10 * e * e, "{d} {e}");
        }
        let d0 = prof.det_phase[0];
        for (l, ph) in grid.iter().zip(&prof.det_phase) {
            let p = hl.period_matrix(*l).unwrap();
            assert!((p.r.det() - cis(*ph)).norm() < 1e-10 * p.r.max_abs().powi(2).max(1.0));
            assert!(circ_dist(*ph, d0) < 1e-10);
        }
    }

    #[test]
    fn two_valued_bands_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..4 {
            let (te, to, ae, ao) = (rng.random::<f64>() * TAU, rng.random::<f64>() * TAU, rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
            let a = rng.random::<f64>() - 0.5;
            let t = rng.random_range(0.2..0.9);
            let m = PhaseModel::two_valued(te, to, ae, ao, a, t).unwrap();
            let hl = HalfLine::new(&m, 1).unwrap();
            let grid: Vec<f64> = (0..512).map(|j| TAU * j as f64 / 512.0).collect();
            let prof = discriminant_profile(&hl, &grid).unwrap();
            let closed = two_periodic_closed_form(ae - ao, te + to, a, &CouplingPair::new(t).unwrap()).unwrap();
            let d = prof.bands.endpoint_distance(&closed).unwrap_or(f64::INFINITY);
            assert!(d < 1e-6, "{d} {:?} {:?}", prof.bands, closed);
        }
    }

    #[test]
    fn transmitting_probe_is_all_band() {
        let m = periodic_model(5, 2, 1.0);
        let hl = HalfLine::new(&m, 1).unwrap();
        let grid: Vec<f64> = (0..64).map(|j| TAU * j as f64 / 64.0).collect();
        let prof = discriminant_profile(&hl, &grid).unwrap();
        assert!(prof.e1_abs.iter().all(|e| (e - 1.0).abs() < 1e-9));
        assert!(prof.bands.is_full_circle());
    }

    #[test]
    fn small_t_has_proper_band_set() {
        let m = periodic_model(6, 2, 0.1);
        let hl = HalfLine::new(&m, 1).unwrap();
        let grid: Vec<f64> = (0..512).map(|j| TAU * j as f64 / 512.0).collect();
        let prof = discriminant_profile(&hl, &grid).unwrap();
        assert!(!prof.bands.arcs.is_empty() && !prof.bands.is_full_circle());
    }

    #[test]
    fn gap_dichotomy() {
        let m = periodic_model(6, 2, 0.3);
        let hl = HalfLine::new(&m, 1).unwrap();
        let grid: Vec<f64> = (0..512).map(|j| TAU * j as f64 / 512.0).collect();
        // a moderate rate keeps the rounding error along v₁ below the decaying part
        let l = *grid.iter().find(|&&l| (1.05..2.0).contains(&hl.period_matrix(l).unwrap().e1.norm())).unwrap();
        let p = hl.period_matrix(l).unwrap();
        let rate = p.e1.norm().ln();
        let mut d = p.v2;
        let mut g = [C64::new(1.0, 0.0), C64::new(0.3, -0.2)];
        let (mut dl, mut gl) = (0.0, 0.0);
        for _ in 0..20 {
            let (d2, g2) = (p.r.apply(&d), p.r.apply(&g));
            dl = (vec2_norm(&d2) / vec2_norm(&d)).ln();
            gl = (vec2_norm(&g2) / vec2_norm(&g)).ln();
            d = d2;
            g = g2;
        }
        assert!((dl + rate).abs() < 0.1 * rate, "{dl} {rate}");
        assert!((gl - rate).abs() < 0.1 * rate, "{gl} {rate}");
    }

    #[test]
    fn near_branch_refused() {
        let m = PhaseModel::two_valued(0.0, 0.0, 0.0, 0.0, 0.0, 0.5).unwrap();
        assert!(matches!(eigenvalue_function(0.0, &m, 1), Err(Error::NearBranch { .. })));
    }

    fn defect_model() -> PhaseModel {
        periodic_model(11, 2, 0.4).with_defects(vec![
            Defect { site: 1, theta: Some(2.5), alpha: Some(1.0) },
            Defect { site: 2, theta: Some(0.4), alpha: Some(3.0) },
        ])
    }

    #[test]
    fn roots_stable_under_normalization_and_tolerance() {
        let m = defect_model();
        let k0 = minimal_k0(&m);
        let hl = HalfLine::new(&m, k0).unwrap();
        let a = find_eigenvalues_with(&hl, FindOptions { tol: 1e-10, ..FindOptions::default() }).unwrap();
        let b = find_eigenvalues_with(&hl, FindOptions { tol: 1e-8, ..FindOptions::default() }).unwrap();
        let c = find_eigenvalues_with(&hl, FindOptions { normalization: V2Normalization::SecondComponent, ..FindOptions::default() }).unwrap();
        assert_eq!(a.eigenvalues.len(), b.eigenvalues.len());
        assert_eq!(a.eigenvalues.len(), c.eigenvalues.len());
        for ((x, y), z) in a.eigenvalues.iter().zip(&b.eigenvalues).zip(&c.eigenvalues) {
            assert!(circ_dist(x.lambda, y.lambda) < 1e-6);
            assert!(circ_dist(x.lambda, z.lambda) < 1e-6);
        }
        for r in &a.eigenvalues {
            assert!(r.residual < ROOT_RESIDUAL);
            assert!(r.e1_abs > 1.0 + BAND_TOL);
            assert!(r.validated, "{r:?}");
        }
    }

    #[test]
    fn roots_match_truncated_window() {
        let m = defect_model();
        let k0 = minimal_k0(&m);
        let rep = find_eigenvalues(&m, k0, 400, 1e-10).unwrap();
        let w = halfline_window(&m, 400).unwrap();
        let ev: Vec<f64> = crate::linalg::unitary_eigen(&w.matrix).unwrap().values.iter().map(|z| z.arg()).collect();
        for r in &rep.eigenvalues {
            let best = ev.iter().map(|&e| circ_dist(e, r.lambda)).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-3, "{} {best}", r.lambda);
        }
    }

    #[test]
    fn eigenvalue_function_smooth_in_gap() {
        let m = defect_model();
        let hl = HalfLine::new(&m, minimal_k0(&m)).unwrap();
        let grid: Vec<f64> = (0..512).map(|j| TAU * j as f64 / 512.0).collect();
        let prof = discriminant_profile(&hl, &grid).unwrap();
        let gap = prof.gaps.arcs.iter().max_by(|a, b| a.len().total_cmp(&b.len())).unwrap();
        let h = 1e-5;
        let xs: Vec<f64> = (1..20).map(|j| gap.lo + gap.len() * j as f64 / 20.0).collect();
        for x in xs {
            let f = |l: f64| hl.eigenvalue_function(l).unwrap();
            let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
            let d2 = (f(x + 2.0 * h) - f(x - 2.0 * h)) / (4.0 * h);
            assert!(d1.norm() < 1e4);
            assert!((d1 - d2).norm() < 1e-3 * (1.0 + d1.norm()));
        }
    }

    #[test]
    fn complement_of_arcs() {
        let s = ArcSet::from_arcs([Arc::new(0.5, 1.0), Arc::new(3.0, 4.0)], vec![]);
        let c = complement(&s);
        assert_eq!(c.arcs.len(), 2);
        assert!((c.total_length() + s.total_length() - TAU).abs() < 1e-12);
        assert!(complement(&ArcSet::full_circle()).arcs.is_empty());
    }
}
