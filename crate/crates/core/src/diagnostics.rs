//! Finite-size spectral evidence: truncated spectra, localization of
//! eigenvectors, bulk-spectrum comparisons, growth scans and an empirical
//! independence test of the transfer angles.

use crate::angle::{hausdorff, reduce};
use crate::error::{Error, Result};
use crate::linalg::{unitary_eigen, Mat2, ZERO};
use crate::model::{Distribution, PhaseModel, Variant};
use crate::transfer::{eta, transfer_general, TransferStream};
use crate::window::{assemble, BandWindow, EdgeCompletion};
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

/// Dense eigensolve budget.
pub const MAX_SITES: usize = 4096;
/// Outer fraction of the window that counts as edge.
pub const EDGE_FRACTION: f64 = 0.05;
/// Vectors with more than this mass in the edge region are edge states.
pub const EDGE_MASS: f64 = 0.1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralCloud {
    pub first_site: i64,
    pub sites: usize,
    /// Eigenvalue angles in `[0, 2π)`, increasing.
    pub angles: Vec<f64>,
    /// Largest `||λ| - 1|` before projection to the circle.
    pub modulus_defect: f64,
    /// Eigenvectors column-wise, in the order of `angles`.
    #[serde(skip)]
    pub vectors: Option<Mat<C64>>,
}

/// Eigen-decomposition of an arbitrary window.
pub fn cloud_from_window(w: &BandWindow, with_vectors: bool) -> Result<SpectralCloud> {
    let n = w.len();
    if n > MAX_SITES {
        return Err(Error::BudgetExceeded { max: MAX_SITES, requested: n });
    }
    let eig = unitary_eigen(&w.matrix)?;
    // residual of the eigen-equation: a cheap modulus check
    let modulus_defect = (0..n)
        .map(|j| {
            let v: Vec<C64> = (0..n).map(|i| eig.vectors[(i, j)]).collect();
            let uv = w.apply(&v);
            let num: f64 = uv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (num / den - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    let ang: Vec<f64> = eig.values.iter().map(|z| reduce(z.arg())).collect();
    order.sort_by(|&a, &b| ang[a].total_cmp(&ang[b]));
    let angles = order.iter().map(|&j| ang[j]).collect();
    let vectors = with_vectors.then(|| Mat::<C64>::from_fn(n, n, |i, j| eig.vectors[(i, order[j])]));
    Ok(SpectralCloud { first_site: w.first_site, sites: n, angles, modulus_defect, vectors })
}

/// Dense spectrum of the window on sites `0..sites`, identity-completed.
pub fn truncated_spectrum(model: &PhaseModel, sites: usize, with_vectors: bool) -> Result<SpectralCloud> {
    if sites > MAX_SITES {
        return Err(Error::BudgetExceeded { max: MAX_SITES, requested: sites });
    }
    if sites < 2 {
        return Err(Error::WindowTooSmall { min: 2, got: sites });
    }
    cloud_from_window(&assemble(model, 0, sites, EdgeCompletion::Identity, EdgeCompletion::Identity), with_vectors)
}

impl SpectralCloud {
    fn vectors(&self) -> Result<&Mat<C64>> {
        self.vectors.as_ref().ok_or_else(|| Error::InvalidArgument("spectral cloud carries no eigenvectors".into()))
    }

    /// Indices of eigenvectors with at most `EDGE_MASS` in the outer
    /// `EDGE_FRACTION` of sites on either side.
    pub fn bulk_indices(&self) -> Result<Vec<usize>> {
        let v = self.vectors()?;
        let n = self.sites;
        let e = ((EDGE_FRACTION * n as f64).ceil() as usize).max(1);
        Ok((0..n)
            .filter(|&j| {
                let mass = |r: std::ops::Range<usize>| r.map(|i| v[(i, j)].norm_sqr()).sum::<f64>();
                mass(0..e) <= EDGE_MASS && mass(n - e..n) <= EDGE_MASS
            })
            .collect())
    }

    pub fn bulk_angles(&self) -> Result<Vec<f64>> {
        Ok(self.bulk_indices()?.into_iter().map(|j| self.angles[j]).collect())
    }

    pub fn vector(&self, j: usize) -> Result<Vec<C64>> {
        let v = self.vectors()?;
        Ok((0..self.sites).map(|i| v[(i, j)]).collect())
    }
}

/// Exponential decay of one eigenvector away from its peak.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VectorLocalization {
    pub angle: f64,
    pub peak_site: i64,
    /// Least-squares decay of `ln|ψ_n|` in nats per two sites (one transfer
    /// step), so it compares directly with the Lyapunov exponent.
    pub decay_rate: f64,
    pub participation: f64,
    pub bulk: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationProfile {
    pub sites: usize,
    pub vectors: Vec<VectorLocalization>,
}

/// Sites with `|ψ_n|` below this fraction of the peak are left out of the
/// fit; the dense solver's noise floor sits a few orders lower.
const FIT_FLOOR: f64 = 1e-8;

fn participation(v: &[C64]) -> f64 {
    let s2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let s4: f64 = v.iter().map(|z| z.norm_sqr().powi(2)).sum();
    s2 * s2 / s4
}

/// Slope of `ln|ψ_n| ~ c - s·|n - peak|`, returned as `2s`.
fn decay_rate(v: &[C64]) -> (usize, f64) {
    let peak = (0..v.len()).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
    let top = v[peak].norm();
    let pts: Vec<(f64, f64)> = v
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > FIT_FLOOR * top)
        .map(|(i, z)| (i.abs_diff(peak) as f64, z.norm().ln()))
        .collect();
    if pts.len() < 3 {
        return (peak, f64::NAN);
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    if sxx == 0.0 {
        return (peak, f64::NAN);
    }
    (peak, -2.0 * sxy / sxx)
}

pub fn localization_profile(cloud: &SpectralCloud) -> Result<LocalizationProfile> {
    let bulk = cloud.bulk_indices()?;
    let mut is_bulk = vec![false; cloud.sites];
    for j in bulk {
        is_bulk[j] = true;
    }
    let vectors = (0..cloud.sites)
        .into_par_iter()
        .map(|j| {
            let v = cloud.vector(j)?;
            let (peak, rate) = decay_rate(&v);
            Ok(VectorLocalization {
                angle: cloud.angles[j],
                peak_site: cloud.first_site + peak as i64,
                decay_rate: rate,
                participation: participation(&v),
                bulk: is_bulk[j],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalizationProfile { sites: cloud.sites, vectors })
}

impl LocalizationProfile {
    fn bulk(&self) -> impl Iterator<Item = &VectorLocalization> {
        self.vectors.iter().filter(|v| v.bulk)
    }

    pub fn median_bulk_rate(&self) -> Option<f64> {
        let mut r: Vec<f64> = self.bulk().map(|v| v.decay_rate).filter(|x| x.is_finite()).collect();
        if r.is_empty() {
            return None;
        }
        r.sort_by(f64::total_cmp);
        Some(r[r.len() / 2])
    }

    pub fn positive_fraction(&self) -> f64 {
        let (pos, all) = self.bulk().fold((0usize, 0usize), |a, v| (a.0 + usize::from(v.decay_rate > 0.0), a.1 + 1));
        if all == 0 {
            0.0
        } else {
            pos as f64 / all as f64
        }
    }

    pub fn median_participation(&self) -> f64 {
        let mut p: Vec<f64> = self.bulk().map(|v| v.participation).collect();
        if p.is_empty() {
            return f64::NAN;
        }
        p.sort_by(f64::total_cmp);
        p[p.len() / 2]
    }

    /// Index of the bulk vector with the median decay rate.
    pub fn median_vector(&self) -> Option<usize> {
        let mut idx: Vec<usize> = (0..self.vectors.len()).filter(|&j| self.vectors[j].bulk && self.vectors[j].decay_rate.is_finite()).collect();
        if idx.is_empty() {
            return None;
        }
        idx.sort_by(|&a, &b| self.vectors[a].decay_rate.total_cmp(&self.vectors[b].decay_rate));
        Some(idx[idx.len() / 2])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["angle", "peak_site", "decay_rate", "participation", "bulk"])?;
        for v in &self.vectors {
            wr.write_record([v.angle.to_string(), v.peak_site.to_string(), v.decay_rate.to_string(), v.participation.to_string(), v.bulk.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Hausdorff distance between the bulk (edge-trimmed) angle sets.
pub fn compare_clouds(a: &SpectralCloud, b: &SpectralCloud) -> Result<f64> {
    Ok(hausdorff(&a.bulk_angles()?, &b.bulk_angles()?))
}

pub fn essential_spectrum_compare(a: &PhaseModel, b: &PhaseModel, sites: usize) -> Result<f64> {
    let (ca, cb) = rayon::join(|| truncated_spectrum(a, sites, true), || truncated_spectrum(b, sites, true));
    compare_clouds(&ca?, &cb?)
}

/// Bonds `(k, k+1)` inside the window whose block has `t_k = 0`; the window
/// splits into independent pieces there.
pub fn decoupled_bonds(model: &PhaseModel, first: i64, sites: usize) -> Vec<i64> {
    (first..first + sites as i64 - 1).filter(|&k| model.coupling_at(k).t() == 0.0).collect()
}

/// For each eigenvector, the largest share of its mass inside one piece of
/// the window cut at `bonds`.
pub fn confinement(cloud: &SpectralCloud, bonds: &[i64]) -> Result<Vec<f64>> {
    let v = cloud.vectors()?;
    let mut cuts: Vec<usize> = bonds.iter().map(|&k| (k - cloud.first_site + 1) as usize).filter(|&c| c > 0 && c < cloud.sites).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut edges = vec![0];
    edges.extend(cuts);
    edges.push(cloud.sites);
    Ok((0..cloud.sites)
        .map(|j| edges.windows(2).map(|w| (w[0]..w[1]).map(|i| v[(i, j)].norm_sqr()).sum::<f64>()).fold(0.0, f64::max))
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub lambda: f64,
    /// `min_v max(forward, backward)` growth, nats per transfer step.
    pub exponent: f64,
    /// `ln σ_max` of the forward and backward products, per step.
    pub forward: f64,
    pub backward: f64,
}

/// Transfer product over `steps` factors as `(log scale, unit-scale matrix)`.
fn log_product(mut next: impl FnMut() -> Mat2, steps: usize) -> (f64, Mat2) {
    let mut m = Mat2::identity();
    let mut log = 0.0;
    for _ in 0..steps {
        m = next() * m;
        let s = m.max_abs();
        if !(1e-100..=1e100).contains(&s) || s == 0.0 {
            log += s.ln();
            m = m.scale(C64::new(1.0 / s, 0.0));
        }
    }
    let s = m.max_abs();
    (log + s.ln(), m.scale(C64::new(1.0 / s, 0.0)))
}

/// `(ln σ_max, Bloch vector of the top right singular vector)`.
fn top_direction(log: f64, m: &Mat2) -> (f64, [f64; 3]) {
    let g = m.adjoint() * *m;
    let (vals, vecs) = g.hermitian_eigen();
    let v = vecs[1];
    let ab = v[0].conj() * v[1];
    (log + 0.5 * vals[1].max(0.0).ln(), [2.0 * ab.re, 2.0 * ab.im, v[0].norm_sqr() - v[1].norm_sqr()])
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln ‖Φv‖` for a unit `v` with Bloch vector `n` when `|det Φ| = 1`.
fn log_growth(ls: f64, p: &[f64; 3], n: &[f64; 3]) -> f64 {
    let c = (p[0] * n[0] + p[1] * n[1] + p[2] * n[2]).clamp(-1.0, 1.0);
    0.5 * log_add(2.0 * ls + ((1.0 + c) / 2.0).ln(), -2.0 * ls + ((1.0 - c) / 2.0).ln())
}

/// Minimal two-sided growth of generalized eigenvectors over `span`
/// transfer steps on each side of site 0.
pub fn growth_scan(lambda_grid: &[f64], model: &PhaseModel, span: usize) -> Result<Vec<GrowthPoint>> {
    let c = model.constant_coupling().ok_or(Error::VaryingCoupling)?;
    if !(c.t() > 0.0 && c.t() < 1.0) {
        return Err(Error::DegenerateCoupling { t: c.t() });
    }
    if span == 0 {
        return Err(Error::InvalidArgument("span must be positive".into()));
    }
    lambda_grid
        .par_iter()
        .map(|&lambda| {
            let mut fwd = TransferStream::new(model, lambda, 1)?;
            let (lf, mf) = log_product(|| fwd.next_transfer().m, span);
            let mut k = 1i64;
            let mut err = None;
            let (lb, mb) = log_product(
                || {
                    k -= 1;
                    match transfer_general(k, lambda, model) {
                        Ok(t) => t.inverse().m,
                        Err(e) => {
                            err = Some(e);
                            Mat2::identity()
                        }
                    }
                },
                span,
            );
            if let Some(e) = err {
                return Err(e);
            }
            let (sf, pf) = top_direction(lf, &mf);
            let (sb, pb) = top_direction(lb, &mb);
            // the optimum lies on the great circle through both top directions
            let dot = pf[0] * pb[0] + pf[1] * pb[1] + pf[2] * pb[2];
            let e1 = pf;
            let mut e2 = [pb[0] - dot * pf[0], pb[1] - dot * pf[1], pb[2] - dot * pf[2]];
            let n2 = (e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]).sqrt();
            if n2 < 1e-15 {
                // parallel: any direction orthogonal to both will do
                e2 = if e1[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let d = e2[0] * e1[0] + e2[1] * e1[1] + e2[2] * e1[2];
                e2 = [e2[0] - d * e1[0], e2[1] - d * e1[1], e2[2] - d * e1[2]];
            }
            let n2 = (e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]).sqrt();
            let e2 = [e2[0] / n2, e2[1] / n2, e2[2] / n2];
            let f = |phi: f64| {
                let (s, c) = phi.sin_cos();
                let n = [c * e1[0] + s * e2[0], c * e1[1] + s * e2[1], c * e1[2] + s * e2[2]];
                log_growth(sf, &pf, &n).max(log_growth(sb, &pb, &n))
            };
            let samples = 720;
            let best = (0..samples).map(|j| TAU * j as f64 / samples as f64).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
            let h = TAU / samples as f64;
            let (_, v) = crate::periodic::golden_max(|x| -f(x), best - h, best + h, 1e-12);
            Ok(GrowthPoint { lambda, exponent: -v / span as f64, forward: sf / span as f64, backward: sb / span as f64 })
        })
        .collect()
}

/// Characteristic-function estimates of the transfer angles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub samples: usize,
    pub max_harmonic: i32,
    /// `max |Φ̂(n₁,n₂) - Φ̂(n₁,0)Φ̂(0,n₂)|` over `n₁n₂ ≠ 0`, for `δ_k`.
    pub within_pair: f64,
    /// `max |Φ̂(n,m) - Φ̂(n)Φ̂(m)|` over `n, m ≠ 0`, for `(δ_k, δ_{k+1})`.
    pub adjacent_pairs: f64,
    /// Root mean square of all factorization residuals.
    pub rms: f64,
    /// `max |Φ̂(n)|` over `n ≠ 0`: distance from the uniform law.
    pub uniformity: f64,
    /// `Φ̂(0, 0)`.
    pub at_zero: C64,
}

impl IndependenceReport {
    pub fn bound(&self) -> f64 {
        4.0 / (self.samples as f64).sqrt()
    }

    pub fn factorizes(&self) -> bool {
        self.within_pair.max(self.adjacent_pairs) < self.bound()
    }
}

pub fn empirical_independence(model: &PhaseModel, samples: usize, max_harmonic: i32) -> Result<IndependenceReport> {
    match &model.variant {
        Variant::Random { .. } => {}
        other => return Err(Error::WrongVariant { expected: "random", found: other.name() }),
    }
    if samples < 2 || max_harmonic < 1 {
        return Err(Error::InvalidArgument("need samples >= 2 and max_harmonic >= 1".into()));
    }
    let m = max_harmonic;
    let w = (2 * m + 1) as usize;
    // δ_k = (η_{2k}, η_{2k-1}) for k = 1..=samples+1
    let deltas: Vec<(f64, f64)> = (1..=samples as i64 + 1).map(|k| (eta(2 * k, 0.0, model), eta(2 * k - 1, 0.0, model))).collect();
    let powers = |x: f64| -> Vec<C64> { (-m..=m).map(|n| C64::from_polar(1.0, n as f64 * x)).collect() };
    let idx = |n: i32| (n + m) as usize;
    let harmonics: Vec<(i32, i32)> = (-m..=m).flat_map(|a| (-m..=m).map(move |b| (a, b))).collect();
    let nh = harmonics.len();

    // single-pair and adjacent-pair sums over fixed chunks, combined in
    // order so the result does not depend on the thread count
    const CHUNK: usize = 4096;
    let starts: Vec<usize> = (0..samples).step_by(CHUNK).collect();
    let partial: Vec<(Vec<C64>, Vec<C64>)> = starts
        .par_iter()
        .map(|&start| {
            let mut s = vec![ZERO; w * w];
            let mut j = vec![ZERO; nh * nh];
            for k in start..(start + CHUNK).min(samples) {
                let (pa, pb) = (powers(deltas[k].0), powers(deltas[k].1));
                let (qa, qb) = (powers(deltas[k + 1].0), powers(deltas[k + 1].1));
                let first: Vec<C64> = harmonics.iter().map(|&(a, b)| pa[idx(a)] * pb[idx(b)]).collect();
                let second: Vec<C64> = harmonics.iter().map(|&(a, b)| qa[idx(a)] * qb[idx(b)]).collect();
                for (h, v) in first.iter().enumerate() {
                    s[h] += v;
                    for (g, u) in second.iter().enumerate() {
                        j[h * nh + g] += v * u;
                    }
                }
            }
            (s, j)
        })
        .collect();
    let mut single = vec![ZERO; w * w];
    let mut joint = vec![ZERO; nh * nh];
    for (s, j) in partial {
        single.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        joint.iter_mut().zip(j).for_each(|(a, b)| *a += b);
    }
    let inv = 1.0 / samples as f64;
    let phi = |a: i32, b: i32| single[idx(a) * w + idx(b)] * inv;
    let mut within: f64 = 0.0;
    let mut uniform: f64 = 0.0;
    let mut sq = 0.0;
    let mut count = 0usize;
    for &(a, b) in &harmonics {
        if (a, b) != (0, 0) {
            uniform = uniform.max(phi(a, b).norm());
        }
        if a != 0 && b != 0 {
            let r = (phi(a, b) - phi(a, 0) * phi(0, b)).norm();
            within = within.max(r);
            sq += r * r;
            count += 1;
        }
    }
    let mut adjacent: f64 = 0.0;
    for (h, &(a, b)) in harmonics.iter().enumerate() {
        for (g, &(c, d)) in harmonics.iter().enumerate() {
            if (a, b) == (0, 0) || (c, d) == (0, 0) {
                continue;
            }
            let r = (joint[h * nh + g] * inv - phi(a, b) * phi(c, d)).norm();
            adjacent = adjacent.max(r);
            sq += r * r;
            count += 1;
        }
    }
    Ok(IndependenceReport {
        samples,
        max_harmonic,
        within_pair: within,
        adjacent_pairs: adjacent,
        rms: (sq / count as f64).sqrt(),
        uniformity: uniform,
        at_zero: phi(0, 0),
    })
}

/// A random model whose phases take finitely many values; independence of
/// the transfer angles fails for it.
pub fn atomic_counterexample(seed: u64, t: f64) -> Result<PhaseModel> {
    let base = PhaseModel::random(seed, t)?;
    Ok(PhaseModel { variant: Variant::Random { seed, distribution: Distribution::Atoms { values: vec![0.0, 1.0] } }, ..base })
}
