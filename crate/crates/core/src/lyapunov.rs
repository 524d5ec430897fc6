//! Lyapunov exponents of the transfer cocycle and the certificates behind
//! their positivity.

use crate::error::{Error, Result};
use crate::linalg::{vec2_norm, Mat2, Vec2};
use crate::model::{CouplingPair, PhaseModel};
use crate::realify::{self, mat_vec, tau, RealMat4, RealVec4};
use crate::transfer::{reduced_unchecked, transfer_general, CoefficientTrack, EtaPair, TransferStream};
use num_complex::Complex64 as C64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

pub const MIN_STEPS: usize = 1000;
pub const BATCHES: usize = 20;

/// Growth rate in nats per transfer step (two lattice sites).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    pub gamma_hat: f64,
    pub stderr: f64,
    pub steps: usize,
    pub seed: u64,
}

impl LyapunovEstimate {
    /// `γ̂ - z·stderr`.
    pub fn lower(&self, z: f64) -> f64 {
        self.gamma_hat - z * self.stderr
    }
}

/// Independent seed for task `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng.next_u64()
}

struct Start {
    offset: i64,
    direction: Vec2,
}

fn start_from_seed(seed: u64, model: &PhaseModel) -> Start {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = if model.is_random() { rng.random_range(-(1i64 << 40)..(1i64 << 40)) } else { rng.random_range(-(1i64 << 20)..(1i64 << 20)) };
    let a = rng.random::<f64>() * PI / 2.0;
    let p = rng.random::<f64>() * TAU;
    Start { offset, direction: [C64::new(a.cos(), 0.0), C64::from_polar(a.sin(), p)] }
}

fn check_inputs(model: &PhaseModel, steps: usize) -> Result<CouplingPair> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    let c = model.constant_coupling().ok_or(Error::VaryingCoupling)?;
    if c.t() <= 0.0 || c.t() >= 1.0 {
        return Err(Error::DegenerateCoupling { t: c.t() });
    }
    Ok(c)
}

/// Accumulates per-step log growth into equal batches.
struct BatchMeans {
    per_batch: usize,
    sums: Vec<f64>,
    total: f64,
    count: usize,
}

impl BatchMeans {
    fn new(steps: usize) -> Self {
        BatchMeans { per_batch: steps / BATCHES, sums: vec![0.0; BATCHES], total: 0.0, count: 0 }
    }

    fn push(&mut self, log_growth: f64) {
        let b = (self.count / self.per_batch).min(BATCHES - 1);
        self.sums[b] += log_growth;
        self.total += log_growth;
        self.count += 1;
    }

    fn finish(self, lambda: f64, seed: u64) -> LyapunovEstimate {
        let sizes: Vec<usize> = (0..BATCHES).map(|b| if b + 1 < BATCHES { self.per_batch } else { self.count - self.per_batch * (BATCHES - 1) }).collect();
        let means: Vec<f64> = self.sums.iter().zip(&sizes).map(|(s, n)| s / *n as f64).collect();
        let mu = means.iter().sum::<f64>() / BATCHES as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
        LyapunovEstimate { lambda, gamma_hat: self.total / self.count as f64, stderr: (var / BATCHES as f64).sqrt(), steps: self.count, seed }
    }
}

const BURN_IN: usize = 256;

/// Top Lyapunov exponent from `steps` renormalized products of `T(k)`
/// starting at a seed-determined offset and direction.
pub fn estimate_gamma(lambda: f64, model: &PhaseModel, steps: usize, seed: u64) -> Result<LyapunovEstimate> {
    check_inputs(model, steps)?;
    let start = start_from_seed(seed, model);
    let mut stream = TransferStream::new(model, lambda, start.offset)?;
    let mut v = start.direction;
    for _ in 0..BURN_IN {
        v = stream.next_transfer().m.apply(&v);
        let n = vec2_norm(&v);
        v = [v[0] / n, v[1] / n];
    }
    let mut acc = BatchMeans::new(steps);
    for _ in 0..steps {
        v = stream.next_transfer().m.apply(&v);
        let n = vec2_norm(&v);
        acc.push(n.ln());
        v = [v[0] / n, v[1] / n];
    }
    Ok(acc.finish(lambda, seed))
}

/// Same estimator applied to the real 4x4 cocycle `τ(T(k))`.
pub fn estimate_gamma_realified(lambda: f64, model: &PhaseModel, steps: usize, seed: u64) -> Result<LyapunovEstimate> {
    check_inputs(model, steps)?;
    let start = start_from_seed(seed, model);
    let mut stream = TransferStream::new(model, lambda, start.offset)?;
    let mut v = realify::rho(&start.direction);
    let mut step = |v: &mut RealVec4| {
        let m: RealMat4 = tau(&stream.next_transfer().m).to_matrix();
        *v = RealVec4(mat_vec(&m, &v.0));
        let n = v.norm();
        v.0.iter_mut().for_each(|x| *x /= n);
        n
    };
    for _ in 0..BURN_IN {
        step(&mut v);
    }
    let mut acc = BatchMeans::new(steps);
    for _ in 0..steps {
        acc.push(step(&mut v).ln());
    }
    Ok(acc.finish(lambda, seed))
}

/// Exponent of the backward products `T(k)^{-1} T(k+1)^{-1} ...` running
/// towards `-∞`.
pub fn estimate_gamma_backward(lambda: f64, model: &PhaseModel, steps: usize, seed: u64) -> Result<LyapunovEstimate> {
    check_inputs(model, steps)?;
    let start = start_from_seed(seed, model);
    let mut v = start.direction;
    let mut k = start.offset;
    let mut step = |v: &mut Vec2| -> Result<f64> {
        *v = transfer_general(k, lambda, model)?.inverse().m.apply(v);
        k -= 1;
        let n = vec2_norm(v);
        *v = [v[0] / n, v[1] / n];
        Ok(n)
    };
    for _ in 0..BURN_IN {
        step(&mut v)?;
    }
    let mut acc = BatchMeans::new(steps);
    for _ in 0..steps {
        acc.push(step(&mut v)?.ln());
    }
    Ok(acc.finish(lambda, seed))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GammaProfile {
    pub estimates: Vec<LyapunovEstimate>,
}

impl GammaProfile {
    pub fn grid(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.lambda).collect()
    }

    pub fn min_gamma(&self) -> Option<f64> {
        self.estimates.iter().map(|e| e.gamma_hat).reduce(f64::min)
    }

    /// Smallest `γ̂ - z·stderr` over the grid.
    pub fn min_lower(&self, z: f64) -> Option<f64> {
        self.estimates.iter().map(|e| e.lower(z)).reduce(f64::min)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for e in &self.estimates {
            wr.serialize(ProfileRow { lambda: e.lambda, gamma_hat: e.gamma_hat, stderr: e.stderr, steps: e.steps })?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut estimates = Vec::new();
        for row in rd.deserialize::<ProfileRow>() {
            let row = row?;
            estimates.push(LyapunovEstimate { lambda: row.lambda, gamma_hat: row.gamma_hat, stderr: row.stderr, steps: row.steps, seed: 0 });
        }
        Ok(GammaProfile { estimates })
    }
}

#[derive(Serialize, Deserialize)]
struct ProfileRow {
    lambda: f64,
    gamma_hat: f64,
    stderr: f64,
    steps: usize,
}

/// `n` equally spaced angles `2πj/n`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// Independent estimates over a strictly increasing grid in `[0, 2π)`.
pub fn gamma_profile(grid: &[f64], model: &PhaseModel, steps: usize, seed: u64) -> Result<GammaProfile> {
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|l| !(0.0..TAU).contains(l)) {
        return Err(Error::InvalidArgument("grid must be strictly increasing in [0, 2π)".into()));
    }
    let estimates = grid
        .par_iter()
        .enumerate()
        .map(|(i, &l)| estimate_gamma(l, model, steps, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaProfile { estimates })
}

/// Closed-form eigenvalues of `T_{(π,π)}` and the spectrum of its real image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoncompactWitness {
    pub t: f64,
    /// `((r-1)²/t², (r+1)²/t²)`.
    pub closed_form: [f64; 2],
    /// Eigenvalues of `τ(T_{(π,π)})`, decreasing modulus.
    pub realified: Vec<[f64; 2]>,
    pub deviation: f64,
}

pub fn noncompact_witness(coupling: &CouplingPair) -> Result<NoncompactWitness> {
    let (r, t) = (coupling.r(), coupling.t());
    if t <= 0.0 || t >= 1.0 {
        return Err(Error::DegenerateCoupling { t });
    }
    let lo = (r - 1.0).powi(2) / (t * t);
    let hi = (r + 1.0).powi(2) / (t * t);
    let m = reduced_unchecked(PI, PI, r, t).m;
    let ev = realify::eigenvalues4(&tau(&m).to_matrix());
    let want = [hi, hi, lo, lo];
    let deviation = ev.iter().zip(want).map(|(g, w)| (g - w).norm() / w.max(1.0)).fold(0.0, f64::max);
    let w = NoncompactWitness { t, closed_form: [lo, hi], realified: ev.iter().map(|z| [z.re, z.im]).collect(), deviation };
    if deviation > 1e-10 {
        return Err(Error::CheckFailed(format!("realified spectrum deviates from closed form by {deviation:e}")));
    }
    if hi <= 1.0 {
        return Err(Error::CheckFailed("largest eigenvalue does not exceed 1".into()));
    }
    Ok(w)
}

/// One linear relation `lhs = rhs` between the certificate's vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub name: String,
    pub deviation: f64,
    /// Deviation of the relation as printed when that form is known to be
    /// mistyped; `deviation` then refers to the corrected relation.
    pub printed_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanCheck {
    pub basis: Vec<usize>,
    /// Largest relative component of `G u` outside the span, over the
    /// generators `G` and basis vectors `u`.
    pub leak: f64,
    pub invariant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityCertificate {
    pub t: f64,
    /// Printed `M₀, M₁, M₂, N₁` against the Fourier coefficients of `τ(T)`.
    pub extraction_deviation: f64,
    pub relations: Vec<RelationCheck>,
    pub spans: Vec<SpanCheck>,
    /// Dimension of the real algebra generated by `M₀, M₁, N₁`; 8 means all
    /// of `A₄(ℝ)`, which acts irreducibly.
    pub algebra_dimension: usize,
    pub passed: bool,
}

const RELATION_TOL: f64 = 1e-11;
pub const A4_DIMENSION: usize = 8;
const INVARIANCE_TOL: f64 = 1e-9;

fn sub4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn scale4(a: &[f64; 4], s: f64) -> [f64; 4] {
    a.map(|x| x * s)
}

/// The printed generators at coupling `(r, t)`: `(M₀, M₁, M₂, N₁)`.
pub fn certificate_matrices(r: f64, t: f64) -> [RealMat4; 4] {
    let q = r / t;
    let s = 2.0 * r * r / (t * t);
    let n = (r * r + 1.0) / (t * t);
    let m0 = [[0.0, 0.0, 0.0, -q], [0.0, 0.0, q, 0.0], [0.0, q, s, 0.0], [-q, 0.0, 0.0, s]];
    let m1 = [[0.0, 1.0, q, 0.0], [-1.0, 0.0, 0.0, q], [-q, 0.0, 0.0, -1.0], [0.0, -q, 1.0, 0.0]];
    let mut m2 = m0.map(|row| row.map(|x| -x));
    for (i, row) in m2.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    let n1 = [[0.0, 1.0, q, 0.0], [-1.0, 0.0, 0.0, q], [-q, 0.0, 0.0, n], [0.0, -q, -n, 0.0]];
    [m0, m1, m2, n1]
}

/// The printed vectors `u₁..u₄`.
pub fn certificate_vectors(r: f64, t: f64) -> [[f64; 4]; 4] {
    [
        [1.0, 0.0, 0.0, -(r + 1.0) / t],
        [0.0, (1.0 - r) / t, 1.0, 0.0],
        [1.0, 0.0, 0.0, (1.0 - r) / t],
        [0.0, -(r + 1.0) / t, 1.0, 0.0],
    ]
}

/// Fourier extraction from the reduced transfer family:
/// `τ(T_{(x,x)}) = M₀ + sin x·M₁ + cos x·M₂` and `N₁` as the `sin x`
/// coefficient of `τ(T_{(x,-x)})`.
fn extract_generators(r: f64, t: f64) -> [RealMat4; 4] {
    // T_{(θ,η)} has η_odd = θ and η_even = η
    let f = |odd: f64, even: f64| tau(&reduced_unchecked(even, odd, r, t).m).to_matrix();
    let (f0, fpi, fhalf) = (f(0.0, 0.0), f(PI, PI), f(PI / 2.0, PI / 2.0));
    let mut m0 = [[0.0; 4]; 4];
    let mut m1 = [[0.0; 4]; 4];
    let mut m2 = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m0[i][j] = (f0[i][j] + fpi[i][j]) / 2.0;
            m2[i][j] = (f0[i][j] - fpi[i][j]) / 2.0;
            m1[i][j] = fhalf[i][j] - m0[i][j];
        }
    }
    const K: usize = 64;
    let mut n1 = [[0.0; 4]; 4];
    for j in 0..K {
        let x = TAU * j as f64 / K as f64;
        let m = f(x, -x);
        for a in 0..4 {
            for b in 0..4 {
                n1[a][b] += m[a][b] * x.sin() * 2.0 / K as f64;
            }
        }
    }
    [m0, m1, m2, n1]
}

/// Orthonormal basis (as rows) of the span of `vs`.
fn orthonormal(vs: &[[f64; 4]]) -> Vec<[f64; 4]> {
    let mut out: Vec<[f64; 4]> = Vec::new();
    for v in vs {
        let mut w = *v;
        for q in &out {
            let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
            for i in 0..4 {
                w[i] -= d * q[i];
            }
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            out.push(w.map(|x| x / n));
        }
    }
    out
}

fn leak_outside(span: &[[f64; 4]], v: &[f64; 4]) -> f64 {
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nv == 0.0 {
        return 0.0;
    }
    let mut w = *v;
    for q in span {
        let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
        for i in 0..4 {
            w[i] -= d * q[i];
        }
    }
    w.iter().map(|x| x * x).sum::<f64>().sqrt() / nv
}

/// Dimension of the unital real algebra generated by `gens`.
pub fn generated_algebra_dimension(gens: &[RealMat4]) -> usize {
    let flat = |m: &RealMat4| -> Vec<f64> { m.iter().flatten().copied().collect() };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mats: Vec<RealMat4> = Vec::new();
    let try_add = |m: RealMat4, basis: &mut Vec<Vec<f64>>, mats: &mut Vec<RealMat4>| {
        let mut w = flat(&m);
        let scale = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            return;
        }
        for q in basis.iter() {
            let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 * scale {
            basis.push(w.iter().map(|x| x / n).collect());
            mats.push(m);
        }
    };
    let mut id = [[0.0; 4]; 4];
    for (i, row) in id.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    try_add(id, &mut basis, &mut mats);
    for g in gens {
        try_add(*g, &mut basis, &mut mats);
    }
    let mut done = 0;
    while done < mats.len() && basis.len() < 16 {
        let m = mats[done];
        for g in gens {
            try_add(realify::mat_mul(&m, g), &mut basis, &mut mats);
        }
        done += 1;
    }
    basis.len()
}

/// Strong-irreducibility certificate for the reduced transfer family at
/// coupling `t ∈ (0, 1)`.
pub fn irreducibility_certificate(coupling: &CouplingPair) -> Result<IrreducibilityCertificate> {
    let (r, t) = (coupling.r(), coupling.t());
    if t <= 0.0 || t >= 1.0 {
        return Err(Error::DegenerateCoupling { t });
    }
    let [m0, m1, m2, n1] = certificate_matrices(r, t);
    let extracted = extract_generators(r, t);
    let extraction_deviation = [m0, m1, m2, n1].iter().zip(&extracted).map(|(a, b)| realify::max_abs_diff4(a, b)).fold(0.0, f64::max);

    let u = certificate_vectors(r, t);
    let mut relations = Vec::new();
    let mut rel = |name: &str, lhs: [f64; 4], rhs: [f64; 4]| relations.push(RelationCheck { name: name.into(), deviation: sub4(&lhs, &rhs), printed_deviation: None });

    let mut m0_plus = m0;
    for (i, row) in m0_plus.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    let m2_dev = realify::max_abs_diff4(&m2, &m0_plus.map(|row| row.map(|x| -x)));
    rel("M2 = -(M0 + I)", [m2_dev, 0.0, 0.0, 0.0], [0.0; 4]);
    let up = r * (r + 1.0) / (t * t);
    let down = r * (r - 1.0) / (t * t);
    for (i, l) in [(0, up), (1, up), (2, down), (3, down)] {
        rel(&format!("M0 u{} = {:.6} u{}", i + 1, l, i + 1), mat_vec(&m0, &u[i]), scale4(&u[i], l));
    }
    rel("M1 u1 = u4/t", mat_vec(&m1, &u[0]), scale4(&u[3], 1.0 / t));
    rel("M1 u2 = u3/t", mat_vec(&m1, &u[1]), scale4(&u[2], 1.0 / t));
    rel("M1 u3 = -u2/t", mat_vec(&m1, &u[2]), scale4(&u[1], -1.0 / t));
    rel("M1 u4 = -u1/t", mat_vec(&m1, &u[3]), scale4(&u[0], -1.0 / t));
    rel("N1 u1 = -(1+r)/(t(1-r)) u2", mat_vec(&n1, &u[0]), scale4(&u[1], -(1.0 + r) / (t * (1.0 - r))));
    rel("N1 u2 = u1/t", mat_vec(&n1, &u[1]), scale4(&u[0], 1.0 / t));
    rel("N1 u4 = -u3/t", mat_vec(&n1, &u[3]), scale4(&u[2], -1.0 / t));
    let n1u3 = mat_vec(&n1, &u[2]);
    let c = (1.0 - r) / (t * (1.0 + r));
    relations.push(RelationCheck {
        name: "N1 u3 = (1-r)/(t(1+r)) u4".into(),
        deviation: sub4(&n1u3, &scale4(&u[3], c)),
        printed_deviation: Some(sub4(&n1u3, &scale4(&u[1], c))),
    });

    let gens = [m0, m1, n1];
    let mut spans = Vec::new();
    let subsets: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).chain((0..4).flat_map(|i| (i + 1..4).map(move |j| vec![i, j]))).collect();
    for s in subsets {
        let vs: Vec<[f64; 4]> = s.iter().map(|&i| u[i]).collect();
        let q = orthonormal(&vs);
        let q = &q;
        let leak = gens.iter().flat_map(|g| vs.iter().map(move |v| leak_outside(q, &mat_vec(g, v)))).fold(0.0, f64::max);
        spans.push(SpanCheck { basis: s.iter().map(|i| i + 1).collect(), leak, invariant: leak < INVARIANCE_TOL });
    }
    let algebra_dimension = generated_algebra_dimension(&gens);
    let passed = extraction_deviation < 1e-10
        && relations.iter().all(|r| r.deviation < RELATION_TOL * (1.0 + 1.0 / (t * t)))
        && spans.iter().all(|s| !s.invariant)
        && algebra_dimension == A4_DIMENSION;
    Ok(IrreducibilityCertificate { t, extraction_deviation, relations, spans, algebra_dimension, passed })
}

/// Lower bound `ln(1/t²)` for almost periodic phases.
pub fn herman_bound(coupling: &CouplingPair) -> Result<f64> {
    let t = coupling.t();
    if t <= 0.0 || t >= 1.0 {
        return Err(Error::DegenerateCoupling { t });
    }
    Ok(-2.0 * t.ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermanCheck {
    pub beta: f64,
    pub lambda: f64,
    pub bound: f64,
    pub mean_gamma: f64,
    pub thetas: Vec<f64>,
    pub estimates: Vec<LyapunovEstimate>,
}

/// Average `γ̂` over seed-drawn `θ₀` for the almost periodic model.
pub fn herman_check(beta: f64, coupling: &CouplingPair, lambda: f64, theta_samples: usize, steps: usize, seed: u64) -> Result<HermanCheck> {
    let bound = herman_bound(coupling)?;
    if theta_samples == 0 {
        return Err(Error::InvalidArgument("need at least one theta sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thetas: Vec<f64> = (0..theta_samples).map(|_| rng.random::<f64>() * TAU).collect();
    let estimates = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &th)| {
            let m = PhaseModel::almost_periodic(beta, th, coupling.t())?;
            estimate_gamma(lambda, &m, steps, derive_seed(seed, i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_gamma = estimates.iter().map(|e| e.gamma_hat).sum::<f64>() / estimates.len() as f64;
    Ok(HermanCheck { beta, lambda, bound, mean_gamma, thetas, estimates })
}

/// Average over `points` values of `λ` of `(1/n) ln ‖T(n)···T(1)‖`.
/// The average over the circle bounds the exponent at almost every `λ` from
/// below, which is how the `ln(1/t²)` bound is reached.
pub fn subharmonic_average(model: &PhaseModel, n: usize, points: usize) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..points {
        let lambda = TAU * (j as f64 + 0.5) / points as f64;
        let mut stream = TransferStream::new(model, lambda, 1)?;
        let mut m = Mat2::identity();
        let mut log_scale = 0.0;
        for _ in 0..n {
            m = stream.next_transfer().m * m;
            let s = m.max_abs();
            m = m.scale(C64::new(1.0 / s, 0.0));
            log_scale += s.ln();
        }
        total += (log_scale + m.norm2().ln()) / n as f64;
    }
    Ok(total / points as f64)
}

/// Finite-window proxy for the Gordon limsup: the largest
/// `‖d(k)‖² / ‖d(0)‖²` over `1 ≤ |k| ≤ 2·period`.
pub fn gordon_ratio(track: &CoefficientTrack, period: usize) -> Result<f64> {
    let reach = 2 * period as i64;
    if track.k_start > -reach || track.k_end() < reach || period == 0 {
        let have = track.k_end().min(-track.k_start).max(0) as usize;
        return Err(Error::SpanTooShort { min: 2 * period.max(1), got: have });
    }
    let base = track.log_norm(0).ok_or(Error::ZeroInitialVector)?;
    let best = (1..=reach)
        .flat_map(|k| [k, -k])
        .map(|k| track.log_norm(k).expect("in range"))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((2.0 * (best - base)).exp())
}

/// Continued-fraction convergents `p/q` of `x ∈ (0, 1)` with `q ≤ max_q`.
pub fn convergents(x: f64, max_q: u64) -> Vec<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut y = x;
    let mut out = Vec::new();
    for _ in 0..64 {
        let a = y.floor();
        let ai = a as u64;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > max_q {
            break;
        }
        if p2 > 0 {
            out.push((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = y - a;
        if frac < 1e-12 {
            break;
        }
        y = 1.0 / frac;
    }
    out
}

/// `max_k ‖T_a(k) - T_b(k)‖` over `k ∈ range`: the measured constant in the
/// approximation hypothesis for two models at the same `λ`.
pub fn transfer_difference(a: &PhaseModel, b: &PhaseModel, lambda: f64, range: std::ops::RangeInclusive<i64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in range {
        let d = transfer_general(k, lambda, a)?.m - transfer_general(k, lambda, b)?.m;
        worst = worst.max(d.norm2());
    }
    Ok(worst)
}

/// `T_{(θ,η)}` in the notation of the certificate.
pub fn transfer_theta_eta(theta: f64, eta: f64, coupling: &CouplingPair) -> Result<Mat2> {
    Ok(crate::transfer::transfer_reduced(EtaPair::new(eta, theta), coupling)?.m)
}
