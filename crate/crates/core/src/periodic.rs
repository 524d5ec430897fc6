//! Periodic phases: the matrix symbol, its band functions, and the band arcs.

use crate::angle::{circ_dist, reduce, reduce_signed, unwrap};
use crate::error::{Error, Result};
use crate::linalg::{cis, unitary_eigen, I, ZERO};
use crate::model::{CouplingPair, PhaseModel, Variant};
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::{Read, Write};

/// `ν_k^± = θ_{2k} + θ_{2k±1} ∓ (π_{2k} - π_{2k±1})` for `k = 0..N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuPhases {
    pub nu_plus: Vec<f64>,
    pub nu_minus: Vec<f64>,
}

impl NuPhases {
    pub fn new(nu_plus: Vec<f64>, nu_minus: Vec<f64>) -> Result<Self> {
        if nu_plus.is_empty() || nu_plus.len() != nu_minus.len() {
            return Err(Error::InvalidArgument("nu arrays must be nonempty and of equal length".into()));
        }
        Ok(NuPhases { nu_plus: nu_plus.into_iter().map(reduce).collect(), nu_minus: nu_minus.into_iter().map(reduce).collect() })
    }

    /// Constant phases, `N = 1`.
    pub fn constant(nu_plus: f64, nu_minus: f64) -> Self {
        NuPhases { nu_plus: vec![reduce(nu_plus)], nu_minus: vec![reduce(nu_minus)] }
    }

    pub fn period(&self) -> usize {
        self.nu_plus.len()
    }
}

/// `ν^±` from site lists `θ_j`, `π_j` of period `len` (indices taken mod `len`).
pub fn nu_from_lists(theta: &[f64], pi: &[f64], n: usize) -> NuPhases {
    let m = theta.len() as i64;
    let at = |v: &[f64], j: i64| v[j.rem_euclid(m) as usize];
    let plus = (0..n as i64).map(|k| at(theta, 2 * k) + at(theta, 2 * k + 1) - (at(pi, 2 * k) - at(pi, 2 * k + 1))).collect();
    let minus = (0..n as i64).map(|k| at(theta, 2 * k) + at(theta, 2 * k - 1) + (at(pi, 2 * k) - at(pi, 2 * k - 1))).collect();
    NuPhases::new(plus, minus).expect("nonempty lists")
}

/// `ν^±` of a periodic model. Periodic lists of length `N` give `N` phases;
/// the two-valued model gives constant phases (`N = 1`).
pub fn nu_phases(model: &PhaseModel) -> Result<NuPhases> {
    match &model.variant {
        Variant::Periodic { theta, pi, .. } => Ok(nu_from_lists(theta, pi, theta.len())),
        Variant::TwoValued { theta_e, theta_o, alpha_e, alpha_o, .. } => Ok(nu_from_lists(&[*theta_e, *theta_o], &[*alpha_e, *alpha_o], 1)),
        other => Err(Error::WrongVariant { expected: "periodic", found: other.name() }),
    }
}

/// `Θ = θ_e + θ_o` and `Δ = α_e - α_o` of a two-valued model.
pub fn two_valued_parameters(model: &PhaseModel) -> Result<(f64, f64)> {
    match &model.variant {
        Variant::TwoValued { theta_e, theta_o, alpha_e, alpha_o, .. } => Ok((theta_e + theta_o, alpha_e - alpha_o)),
        other => Err(Error::WrongVariant { expected: "two_valued", found: other.name() }),
    }
}

/// Laurent coefficients `T_{-2}..T_2` of the `2N×2N` symbol.
#[derive(Clone, Debug)]
pub struct SymbolMatrix {
    n: usize,
    coeffs: [Mat<C64>; 5],
}

impl SymbolMatrix {
    pub fn new(nu: &NuPhases, coupling: &CouplingPair) -> Self {
        let n = nu.period();
        let (r, t) = (coupling.r(), coupling.t());
        let e = |x: f64| cis(-x);
        let mut dm = Mat::<C64>::zeros(n, n);
        let mut dp = Mat::<C64>::zeros(n, n);
        let mut wu = Mat::<C64>::zeros(n, n);
        let mut wl = Mat::<C64>::zeros(n, n);
        for i in 0..n {
            dm[(i, i)] = e(nu.nu_minus[i]);
            dp[(i, i)] = e(nu.nu_plus[i]);
        }
        for i in 0..n - 1 {
            wu[(i, i + 1)] = e(nu.nu_minus[i + 1]);
            wl[(i + 1, i)] = e(nu.nu_plus[i]);
        }
        wu[(n - 1, 0)] += e(nu.nu_minus[0]);
        wl[(0, n - 1)] += e(nu.nu_plus[n - 1]);

        // block layout [[upper-left, upper-right], [lower-left, lower-right]]
        let blocks = |s: C64, ul: Option<&Mat<C64>>, ur: Option<&Mat<C64>>, ll: Option<&Mat<C64>>, lr: Option<&Mat<C64>>| {
            Mat::<C64>::from_fn(2 * n, 2 * n, |i, j| {
                let b = match (i < n, j < n) {
                    (true, true) => ul,
                    (true, false) => ur,
                    (false, true) => ll,
                    (false, false) => lr,
                };
                b.map_or(ZERO, |m| m[(i % n, j % n)] * s)
            })
        };
        let irt = I * (r * t);
        let tt = C64::new(-t * t, 0.0);
        let rr = C64::new(r * r, 0.0);
        let coeffs = [
            blocks(tt, Some(&wl), None, None, None),
            blocks(irt, None, Some(&wl), Some(&dp), None),
            blocks(rr, Some(&dm), None, None, Some(&dp)),
            blocks(irt, None, Some(&dm), Some(&wu), None),
            blocks(tt, None, None, None, Some(&wu)),
        ];
        SymbolMatrix { n, coeffs }
    }

    pub fn period(&self) -> usize {
        self.n
    }

    /// `T_k` for `k ∈ -2..=2`.
    pub fn coefficient(&self, k: i32) -> &Mat<C64> {
        &self.coeffs[(k + 2) as usize]
    }

    /// `T(e^{ix}) = Σ e^{ikx} T_k`.
    pub fn eval(&self, x: f64) -> Mat<C64> {
        let w: Vec<C64> = (-2..=2).map(|k| cis(k as f64 * x)).collect();
        let m = 2 * self.n;
        Mat::<C64>::from_fn(m, m, |i, j| (0..5).map(|k| self.coeffs[k][(i, j)] * w[k]).sum())
    }

    pub fn eigenvalues(&self, x: f64) -> Result<Vec<C64>> {
        Ok(unitary_eigen(&self.eval(x))?.values)
    }
}

pub fn symbol(x: f64, nu: &NuPhases, coupling: &CouplingPair) -> Mat<C64> {
    SymbolMatrix::new(nu, coupling).eval(x)
}

/// Eigenvalue tracks of the symbol over an `x` grid.
#[derive(Clone, Debug)]
pub struct BandFunctions {
    pub x: Vec<f64>,
    /// `tracks[j][i]` is track `j` at `x[i]`.
    pub tracks: Vec<Vec<C64>>,
    /// Grid indices where the overlap matching was not clear-cut.
    pub ambiguous: Vec<usize>,
    nu: NuPhases,
    coupling: CouplingPair,
}

/// Overlap below which a match between consecutive grid points is flagged.
const MATCH_OVERLAP: f64 = 0.9;

pub fn band_functions(nu: &NuPhases, coupling: &CouplingPair, x_grid: &[f64]) -> Result<BandFunctions> {
    let n = nu.period();
    if x_grid.len() < 4 * n {
        return Err(Error::InvalidArgument(format!("grid needs at least {} points, got {}", 4 * n, x_grid.len())));
    }
    let sym = SymbolMatrix::new(nu, coupling);
    let eigs = x_grid.par_iter().map(|&x| unitary_eigen(&sym.eval(x))).collect::<Result<Vec<_>>>()?;
    let m = 2 * n;
    let mut order: Vec<usize> = (0..m).collect();
    let mut tracks = vec![Vec::with_capacity(x_grid.len()); m];
    let mut ambiguous = Vec::new();
    for (i, e) in eigs.iter().enumerate() {
        if i > 0 {
            let prev = &eigs[i - 1];
            let overlap = |a: usize, b: usize| -> f64 { (0..m).map(|r| prev.vectors[(r, a)].conj() * e.vectors[(r, b)]).sum::<C64>().norm() };
            let mut taken = vec![false; m];
            let mut next = vec![0; m];
            let mut unclear = false;
            // greedy: strongest overlaps first
            let mut pairs: Vec<(f64, usize, usize)> = (0..m).flat_map(|j| (0..m).map(move |b| (j, b))).map(|(j, b)| (overlap(order[j], b), j, b)).collect();
            pairs.sort_by(|p, q| q.0.total_cmp(&p.0));
            let mut assigned = vec![false; m];
            for (ov, j, b) in pairs {
                if assigned[j] || taken[b] {
                    continue;
                }
                assigned[j] = true;
                taken[b] = true;
                next[j] = b;
                if ov < MATCH_OVERLAP {
                    unclear = true;
                }
            }
            order = next;
            if unclear {
                ambiguous.push(i);
            }
        }
        for j in 0..m {
            tracks[j].push(e.values[order[j]]);
        }
    }
    Ok(BandFunctions { x: x_grid.to_vec(), tracks, ambiguous, nu: nu.clone(), coupling: *coupling })
}

impl BandFunctions {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["x".to_string()];
        for j in 0..self.tracks.len() {
            header.push(format!("re_{j}"));
            header.push(format!("im_{j}"));
        }
        wr.write_record(&header)?;
        for (i, x) in self.x.iter().enumerate() {
            let mut row = vec![x.to_string()];
            for t in &self.tracks {
                row.push(t[i].re.to_string());
                row.push(t[i].im.to_string());
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read `x` and the tracks back from CSV.
    pub fn read_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        let mut rd = csv::Reader::from_reader(r);
        let width = rd.headers()?.len();
        if width < 3 || width % 2 == 0 {
            return Err(Error::InvalidArgument(format!("band table has {width} columns; expected x and re/im pairs")));
        }
        let m = (width - 1) / 2;
        let mut xs = Vec::new();
        let mut tracks = vec![Vec::new(); m];
        for rec in rd.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> { rec[i].trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("column {i}: {e}"))) };
            xs.push(num(0)?);
            for (j, t) in tracks.iter_mut().enumerate() {
                t.push(C64::new(num(1 + 2 * j)?, num(2 + 2 * j)?));
            }
        }
        Ok((xs, tracks))
    }

    /// Largest step of any track between neighbouring grid points.
    pub fn max_jump(&self) -> f64 {
        self.tracks.iter().flat_map(|t| t.windows(2).map(|w| circ_dist(w[0].arg(), w[1].arg()))).fold(0.0, f64::max)
    }
}

/// A closed arc `[lo, hi]` of the circle with `lo ∈ [0, 2π)` and
/// `lo ≤ hi ≤ lo + 2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn new(lo: f64, hi: f64) -> Arc {
        let len = (hi - lo).clamp(0.0, TAU);
        let lo = reduce(lo);
        Arc { lo, hi: lo + len }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    pub fn contains(&self, angle: f64) -> bool {
        reduce(angle - self.lo) <= self.len()
    }

    pub fn distance(&self, angle: f64) -> f64 {
        if self.contains(angle) {
            0.0
        } else {
            circ_dist(angle, self.lo).min(circ_dist(angle, self.hi))
        }
    }
}

/// Union of closed arcs, with constant band functions kept apart as points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArcSet {
    pub arcs: Vec<Arc>,
    pub degenerate_points: Vec<f64>,
}

/// Gaps narrower than this are closed when merging.
pub const MERGE_GAP: f64 = 1e-9;

impl ArcSet {
    /// Normalize and merge overlapping or touching arcs.
    pub fn from_arcs(raw: impl IntoIterator<Item = Arc>, degenerate_points: Vec<f64>) -> ArcSet {
        let raw: Vec<Arc> = raw.into_iter().map(|a| Arc::new(a.lo, a.hi)).collect();
        if raw.iter().any(|a| a.len() >= TAU - MERGE_GAP) {
            return ArcSet { arcs: vec![Arc { lo: 0.0, hi: TAU }], degenerate_points };
        }
        // split at 2π and merge on the line
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        for a in &raw {
            if a.hi > TAU {
                pieces.push((a.lo, TAU));
                pieces.push((0.0, a.hi - TAU));
            } else {
                pieces.push((a.lo, a.hi));
            }
        }
        pieces.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in pieces {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + MERGE_GAP => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        if merged.len() > 1 {
            let first = merged[0];
            let last = *merged.last().unwrap();
            if first.0 <= MERGE_GAP && last.1 >= TAU - MERGE_GAP {
                merged.pop();
                merged[0] = (last.0, first.1 + TAU);
            }
        }
        if merged.len() == 1 && merged[0].1 - merged[0].0 >= TAU - MERGE_GAP {
            return ArcSet { arcs: vec![Arc { lo: 0.0, hi: TAU }], degenerate_points };
        }
        let mut arcs: Vec<Arc> = merged.into_iter().map(|(lo, hi)| Arc::new(lo, hi)).collect();
        arcs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        ArcSet { arcs, degenerate_points }
    }

    pub fn full_circle() -> ArcSet {
        ArcSet { arcs: vec![Arc { lo: 0.0, hi: TAU }], degenerate_points: vec![] }
    }

    pub fn is_full_circle(&self) -> bool {
        self.arcs.len() == 1 && self.arcs[0].len() >= TAU - MERGE_GAP
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(Arc::len).sum()
    }

    pub fn rotated(&self, by: f64) -> ArcSet {
        ArcSet::from_arcs(self.arcs.iter().map(|a| Arc::new(a.lo + by, a.hi + by)), self.degenerate_points.iter().map(|p| reduce(p + by)).collect())
    }

    pub fn contains(&self, angle: f64) -> bool {
        self.arcs.iter().any(|a| a.contains(angle))
    }

    /// Distance from an angle to the set (arcs and degenerate points).
    pub fn distance(&self, angle: f64) -> f64 {
        self.arcs
            .iter()
            .map(|a| a.distance(angle))
            .chain(self.degenerate_points.iter().map(|&p| circ_dist(angle, p)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest endpoint mismatch between two sets with the same number of
    /// arcs; `None` if the arc counts differ.
    pub fn endpoint_distance(&self, other: &ArcSet) -> Option<f64> {
        if self.arcs.len() != other.arcs.len() {
            return None;
        }
        if self.is_full_circle() && other.is_full_circle() {
            return Some(0.0);
        }
        let mut worst: f64 = 0.0;
        for a in &self.arcs {
            let best = other
                .arcs
                .iter()
                .map(|b| circ_dist(a.lo, b.lo).max(circ_dist(a.hi, b.hi)).max((a.len() - b.len()).abs()))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        Some(worst)
    }

    /// Hausdorff distance between the arcs and a finite set of angles.
    pub fn hausdorff_to_points(&self, points: &[f64]) -> f64 {
        if points.is_empty() {
            return if self.arcs.is_empty() { 0.0 } else { f64::INFINITY };
        }
        let to_set = points.iter().map(|&p| self.distance(p)).fold(0.0, f64::max);
        let mut sorted: Vec<f64> = points.iter().map(|&p| reduce(p)).collect();
        sorted.sort_by(f64::total_cmp);
        let nearest = |y: f64| sorted.iter().map(|&p| circ_dist(y, p)).fold(f64::INFINITY, f64::min);
        let mut to_points: f64 = 0.0;
        for a in &self.arcs {
            // the farthest arc point is an endpoint or a midpoint between
            // consecutive sample points that falls inside the arc
            let mut cands = vec![a.lo, a.hi];
            for i in 0..sorted.len() {
                let p = sorted[i];
                let q = if i + 1 < sorted.len() { sorted[i + 1] } else { sorted[0] + TAU };
                let mid = (p + q) / 2.0;
                if a.contains(mid) {
                    cands.push(mid);
                }
            }
            to_points = to_points.max(cands.into_iter().map(nearest).fold(0.0, f64::max));
        }
        to_set.max(to_points)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("arc set serializes")
    }

    pub fn from_json(s: &str) -> Result<ArcSet> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let set: ArcSet = serde_path_to_error::deserialize(de).map_err(|e| Error::InvalidArgument(format!("{}: {}", e.path(), e.inner())))?;
        if set.arcs.iter().any(|a| !(a.lo.is_finite() && a.hi.is_finite() && a.hi >= a.lo)) {
            return Err(Error::InvalidArgument("arcs need finite lo <= hi".into()));
        }
        Ok(ArcSet::from_arcs(set.arcs, set.degenerate_points))
    }
}

/// Tracks whose angular range is below this are reported as points.
const CONSTANT_TRACK: f64 = 1e-9;

/// Signed angular offset of the eigenvalue cluster near `centre` at `x`,
/// taking the extreme member in direction `sign`.
fn envelope(sym: &SymbolMatrix, x: f64, centre: f64, radius: f64, sign: f64) -> f64 {
    let ev = sym.eigenvalues(x).unwrap_or_default();
    ev.iter()
        .map(|z| reduce_signed(z.arg() - centre))
        .filter(|d| d.abs() <= radius)
        .map(|d| sign * d)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Maximize `f` on `[a, b]` by golden-section search.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Band arcs covered by the tracks, rotated by `e^{-ia}`.
pub fn band_arcs(bands: &BandFunctions, a: f64) -> ArcSet {
    let sym = SymbolMatrix::new(&bands.nu, &bands.coupling);
    let h = bands.x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let mut raw = Vec::new();
    let mut points = Vec::new();
    for track in &bands.tracks {
        let angles: Vec<f64> = track.iter().map(|z| z.arg()).collect();
        let un = unwrap(&angles);
        let (imin, vmin) = un.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let (imax, vmax) = un.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if vmax - vmin >= TAU {
            raw.push(Arc { lo: 0.0, hi: TAU });
            continue;
        }
        if vmax - vmin < CONSTANT_TRACK {
            points.push(reduce(angles[0] - a));
            continue;
        }
        let radius = 2.0 * track.windows(2).map(|w| circ_dist(w[0].arg(), w[1].arg())).fold(0.0, f64::max) + 1e-6;
        let refine = |i: usize, sign: f64| -> f64 {
            let centre = angles[i];
            let lo = bands.x[i.saturating_sub(1)].min(bands.x[i] - h);
            let hi = bands.x[(i + 1).min(bands.x.len() - 1)].max(bands.x[i] + h);
            let (_, best) = golden_max(|x| envelope(&sym, x, centre, radius, sign), lo, hi, 1e-12);
            // never report less than the sampled extreme
            centre + sign * best.max(0.0)
        };
        let hi = vmax + reduce_signed(refine(imax, 1.0) - angles[imax]);
        let lo = vmin + reduce_signed(refine(imin, -1.0) - angles[imin]);
        raw.push(Arc::new(lo - a, hi - a));
    }
    ArcSet::from_arcs(raw, points)
}

/// Eigenvalues `e^{-iΘ}(g ± i√(1-g²))` with `g = r²cosΔ - t²cos(2x+Δ)`.
pub fn two_periodic_eigenvalues(delta: f64, theta_sum: f64, coupling: &CouplingPair, x: f64) -> [C64; 2] {
    let (r, t) = (coupling.r(), coupling.t());
    let g = (r * r * delta.cos() - t * t * (2.0 * x + delta).cos()).clamp(-1.0, 1.0);
    let s = (1.0 - g * g).sqrt();
    let rot = cis(-theta_sum);
    [rot * C64::new(g, s), rot * C64::new(g, -s)]
}

/// Closed-form band arcs of the two-valued model.
pub fn two_periodic_closed_form(delta: f64, theta_sum: f64, a: f64, coupling: &CouplingPair) -> Result<ArcSet> {
    let (r, t) = (coupling.r(), coupling.t());
    if t <= 0.0 {
        return Err(Error::DegenerateCoupling { t });
    }
    let c = r * r * delta.cos();
    let g_lo = (c - t * t).max(-1.0);
    let g_hi = (c + t * t).min(1.0);
    let (p1, p2) = (g_hi.acos(), g_lo.acos());
    let centre = -(a + theta_sum);
    Ok(ArcSet::from_arcs([Arc::new(centre + p1, centre + p2), Arc::new(centre - p2, centre - p1)], vec![]))
}

/// The two coupling endpoints where the spectrum is explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitEndpoint {
    /// `t = 0`: decoupled blocks.
    Decoupled,
    /// `t = 1`: pure transmission.
    Transmitting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitSpectrum {
    /// Infinitely degenerate eigenvalues `e^{-iν_j^±}` (angles).
    Points { angles: Vec<f64> },
    /// Circles traced by `e^{∓2ix} e^{-iΣν^±/N} e^{2πik/N}`; `plus` and
    /// `minus` hold the base angles `-Σν^±/N + 2πk/N`.
    Circles { plus: Vec<f64>, minus: Vec<f64>, arcs: ArcSet },
}

pub fn limit_spectrum(nu: &NuPhases, endpoint: LimitEndpoint) -> LimitSpectrum {
    match endpoint {
        LimitEndpoint::Decoupled => LimitSpectrum::Points { angles: nu.nu_plus.iter().chain(&nu.nu_minus).map(|v| reduce(-v)).collect() },
        LimitEndpoint::Transmitting => {
            let n = nu.period() as f64;
            let base = |v: &[f64]| -> Vec<f64> {
                let mean = v.iter().sum::<f64>() / n;
                (0..nu.period()).map(|k| reduce(-mean + TAU * k as f64 / n)).collect()
            };
            LimitSpectrum::Circles { plus: base(&nu.nu_plus), minus: base(&nu.nu_minus), arcs: ArcSet::full_circle() }
        }
    }
}

/// Per-`x` values of the `t = 1` circle families.
///
/// The symbol at `t = 1` is `diag(-e^{-2ix} W_l, -e^{2ix} W_u)`, so its
/// eigenvalues at `x` coincide with these values at `x + π/2`; the ranges
/// over `x` are the same.
pub fn transmitting_family_values(nu: &NuPhases, x: f64) -> Vec<C64> {
    let LimitSpectrum::Circles { plus, minus, .. } = limit_spectrum(nu, LimitEndpoint::Transmitting) else { unreachable!() };
    plus.iter().map(|b| cis(b - 2.0 * x)).chain(minus.iter().map(|b| cis(b + 2.0 * x))).collect()
}

/// `x` grid `2πj/n`.
pub fn x_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}
