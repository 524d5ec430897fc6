//! Phase and coupling models generating `(θ_k, α_k, γ_k, t_k)` on the lattice.

use crate::angle::reduce;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
    #[error("malformed model document at `{path}`: {message}")]
    Parse { path: String, message: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidField { field, reason: reason.into() }
}

/// Reflection and transmission amplitudes of one scattering block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingPair {
    t: f64,
    r: f64,
}

impl CouplingPair {
    pub fn new(t: f64) -> Result<Self, ModelError> {
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return Err(invalid("t", format!("{t} is outside [0, 1]")));
        }
        Ok(Self::clamped(t))
    }

    /// Like [`CouplingPair::new`] but clamps `t` into `[0, 1]`.
    pub fn clamped(t: f64) -> Self {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        let r = ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
        CouplingPair { t, r }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// True when `0 < t < 1`.
    pub fn is_proper(&self) -> bool {
        self.t > 0.0 && self.t < 1.0
    }
}

/// The three phases of a scattering block, each reduced to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTriple {
    pub theta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl PhaseTriple {
    pub fn new(theta: f64, alpha: f64, gamma: f64) -> Self {
        PhaseTriple { theta: reduce(theta), alpha: reduce(alpha), gamma: reduce(gamma) }
    }

    pub fn zero() -> Self {
        PhaseTriple { theta: 0.0, alpha: 0.0, gamma: 0.0 }
    }
}

/// Distribution of each random phase on the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Uniform,
    /// Uniform choice among finitely many atoms. Not uniform on the torus, so
    /// the positivity and independence results do not apply.
    Atoms { values: Vec<f64> },
}

/// How an explicit finite list is continued outside its range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    Zero,
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    Random { seed: u64, distribution: Distribution },
    /// `θ_k = theta[k mod N]`, `α_k = a·k + pi[k mod N]`.
    Periodic { theta: Vec<f64>, pi: Vec<f64>, a: f64 },
    /// Two alternating values, `α_k = a·k + α_{e|o}`.
    TwoValued { theta_e: f64, theta_o: f64, alpha_e: f64, alpha_o: f64, a: f64 },
    /// `θ_k = 2πβk + θ₀`, `α_k = α₀`.
    AlmostPeriodic { beta: f64, theta0: f64, alpha0: f64 },
    Explicit { start: i64, theta: Vec<f64>, alpha: Vec<f64>, gamma: Option<Vec<f64>>, extension: Extension },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Random { .. } => "random",
            Variant::Periodic { .. } => "periodic",
            Variant::TwoValued { .. } => "two_valued",
            Variant::AlmostPeriodic { .. } => "almost_periodic",
            Variant::Explicit { .. } => "explicit",
        }
    }
}

/// Choice of the `γ_k` phases. Spectra do not depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeRule {
    Zero,
    /// `γ_k = (-1)^{k+1} α_k`, which makes `T(k)` depend on two angles only.
    Alternating,
    /// Independent uniform draws from the given seed.
    Drawn { seed: u64 },
}

/// Site dependence of the transmission amplitude `t_k` of block `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingLaw {
    Constant,
    /// `t_k = t - amplitude / (|k| + 1)^power`, clamped to `[0, 1]`.
    PowerTail { amplitude: f64, power: f64 },
    /// `t_k = 0` when `|k|` is a perfect square, `t` otherwise.
    ZerosAtSquares,
}

/// Local override of the phases at one site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defect {
    pub site: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// Generator of the bi-infinite phase and coupling data.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseModel {
    pub variant: Variant,
    pub coupling: CouplingPair,
    pub law: CouplingLaw,
    pub gauge: GaugeRule,
    pub defects: Vec<Defect>,
    /// Even extension: sites `k < 0` copy the data of site `-k`.
    pub reflect: bool,
}

fn zigzag(k: i64) -> u64 {
    ((k << 1) ^ (k >> 63)) as u64
}

/// Independent generator for site `k` of the stream `seed`; phase `k` is
/// available without drawing the phases before it.
fn site_rng(seed: u64, k: i64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(zigzag(k));
    rng
}

fn draw(rng: &mut ChaCha8Rng, dist: &Distribution) -> f64 {
    match dist {
        Distribution::Uniform => rng.random::<f64>() * TAU,
        Distribution::Atoms { values } => values[rng.random_range(0..values.len())],
    }
}

fn is_square(k: u64) -> bool {
    let s = (k as f64).sqrt().round() as u64;
    (s.saturating_sub(1)..=s + 1).any(|x| x * x == k)
}

impl PhaseModel {
    pub fn new(variant: Variant, coupling: CouplingPair) -> Result<Self, ModelError> {
        let m = PhaseModel {
            variant,
            coupling,
            law: CouplingLaw::Constant,
            gauge: GaugeRule::Zero,
            defects: Vec::new(),
            reflect: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn random(seed: u64, t: f64) -> Result<Self, ModelError> {
        Self::new(Variant::Random { seed, distribution: Distribution::Uniform }, CouplingPair::new(t)?)
    }

    pub fn periodic(theta: Vec<f64>, pi: Vec<f64>, a: f64, t: f64) -> Result<Self, ModelError> {
        Self::new(Variant::Periodic { theta, pi, a }, CouplingPair::new(t)?)
    }

    pub fn two_valued(theta_e: f64, theta_o: f64, alpha_e: f64, alpha_o: f64, a: f64, t: f64) -> Result<Self, ModelError> {
        Self::new(Variant::TwoValued { theta_e, theta_o, alpha_e, alpha_o, a }, CouplingPair::new(t)?)
    }

    pub fn almost_periodic(beta: f64, theta0: f64, t: f64) -> Result<Self, ModelError> {
        Self::new(Variant::AlmostPeriodic { beta, theta0, alpha0: 0.0 }, CouplingPair::new(t)?)
    }

    pub fn with_gauge(mut self, gauge: GaugeRule) -> Self {
        self.gauge = gauge;
        self
    }

    pub fn with_law(mut self, law: CouplingLaw) -> Self {
        self.law = law;
        self
    }

    pub fn with_defects(mut self, defects: Vec<Defect>) -> Self {
        self.defects = defects;
        self
    }

    pub fn with_reflect(mut self, reflect: bool) -> Self {
        self.reflect = reflect;
        self
    }

    pub fn with_coupling(mut self, coupling: CouplingPair) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = |field: &'static str, v: &[f64]| -> Result<(), ModelError> {
            match v.iter().find(|x| !x.is_finite()) {
                Some(x) => Err(invalid(field, format!("non-finite value {x}"))),
                None => Ok(()),
            }
        };
        match &self.variant {
            Variant::Random { distribution, .. } => {
                if let Distribution::Atoms { values } = distribution {
                    if values.is_empty() {
                        return Err(invalid("distribution", "atom list is empty"));
                    }
                    finite("distribution", values)?;
                }
            }
            Variant::Periodic { theta, pi, a } => {
                if theta.len() < 2 {
                    return Err(invalid("theta", "periodic lists need length N >= 2"));
                }
                if pi.len() != theta.len() {
                    return Err(invalid("pi", format!("length {} differs from theta length {}", pi.len(), theta.len())));
                }
                finite("theta", theta)?;
                finite("pi", pi)?;
                finite("a", &[*a])?;
            }
            Variant::TwoValued { theta_e, theta_o, alpha_e, alpha_o, a } => {
                finite("theta_e", &[*theta_e, *theta_o, *alpha_e, *alpha_o, *a])?;
            }
            Variant::AlmostPeriodic { beta, theta0, alpha0 } => {
                if !(beta.is_finite() && *beta > 0.0 && *beta < 1.0) {
                    return Err(invalid("beta", format!("{beta} is outside (0, 1)")));
                }
                finite("theta0", &[*theta0])?;
                finite("alpha0", &[*alpha0])?;
            }
            Variant::Explicit { theta, alpha, gamma, .. } => {
                if theta.is_empty() {
                    return Err(invalid("theta", "explicit list is empty"));
                }
                if alpha.len() != theta.len() {
                    return Err(invalid("alpha", "length differs from theta"));
                }
                if let Some(g) = gamma {
                    if g.len() != theta.len() {
                        return Err(invalid("gamma", "length differs from theta"));
                    }
                    finite("gamma", g)?;
                }
                finite("theta", theta)?;
                finite("alpha", alpha)?;
            }
        }
        if let CouplingLaw::PowerTail { amplitude, power } = self.law {
            if !amplitude.is_finite() || !power.is_finite() || power < 0.0 {
                return Err(invalid("coupling_law", "amplitude and power must be finite, power >= 0"));
            }
        }
        for d in &self.defects {
            finite("defects", &[d.theta.unwrap_or(0.0), d.alpha.unwrap_or(0.0)])?;
        }
        Ok(())
    }

    fn site(&self, k: i64) -> i64 {
        if self.reflect && k < 0 {
            -k
        } else {
            k
        }
    }

    fn defect(&self, k: i64) -> Option<&Defect> {
        self.defects.iter().rev().find(|d| d.site == k)
    }

    /// `(θ_k, α_k)` before reduction.
    pub fn theta_alpha(&self, k: i64) -> (f64, f64) {
        let k = self.site(k);
        let (mut th, mut al) = match &self.variant {
            Variant::Random { seed, distribution } => {
                let mut rng = site_rng(*seed, k);
                let th = draw(&mut rng, distribution);
                let al = draw(&mut rng, distribution);
                (th, al)
            }
            Variant::Periodic { theta, pi, a } => {
                let n = theta.len() as i64;
                let i = k.rem_euclid(n) as usize;
                (theta[i], a * k as f64 + pi[i])
            }
            Variant::TwoValued { theta_e, theta_o, alpha_e, alpha_o, a } => {
                if k.rem_euclid(2) == 0 {
                    (*theta_e, a * k as f64 + alpha_e)
                } else {
                    (*theta_o, a * k as f64 + alpha_o)
                }
            }
            Variant::AlmostPeriodic { beta, theta0, alpha0 } => {
                // reduce βk first to keep precision for large |k|
                let frac = (beta * k as f64).rem_euclid(1.0);
                (TAU * frac + theta0, *alpha0)
            }
            Variant::Explicit { start, theta, alpha, extension, .. } => match explicit_index(*start, theta.len(), k, *extension) {
                Some(i) => (theta[i], alpha[i]),
                None => (0.0, 0.0),
            },
        };
        if let Some(d) = self.defect(k) {
            if let Some(t) = d.theta {
                th = t;
            }
            if let Some(a) = d.alpha {
                al = a;
            }
        }
        (th, al)
    }

    pub fn theta(&self, k: i64) -> f64 {
        self.theta_alpha(k).0
    }

    pub fn alpha(&self, k: i64) -> f64 {
        self.theta_alpha(k).1
    }

    pub fn gamma(&self, k: i64) -> f64 {
        let k = self.site(k);
        match self.gauge {
            GaugeRule::Alternating => {
                let a = self.alpha(k);
                if k.rem_euclid(2) == 1 {
                    a
                } else {
                    -a
                }
            }
            GaugeRule::Drawn { seed } => site_rng(seed ^ 0x9E37_79B9_7F4A_7C15, k).random::<f64>() * TAU,
            GaugeRule::Zero => match &self.variant {
                Variant::Explicit { start, theta, gamma: Some(g), extension, .. } => {
                    explicit_index(*start, theta.len(), k, *extension).map_or(0.0, |i| g[i])
                }
                _ => 0.0,
            },
        }
    }

    /// All three phases at site `k`, reduced.
    pub fn phases(&self, k: i64) -> PhaseTriple {
        let (th, al) = self.theta_alpha(k);
        PhaseTriple::new(th, al, self.gamma(k))
    }

    /// Coupling of the block `S_k` on sites `(k, k+1)`.
    pub fn coupling_at(&self, k: i64) -> CouplingPair {
        let k = self.site(k);
        match self.law {
            CouplingLaw::Constant => self.coupling,
            CouplingLaw::PowerTail { amplitude, power } => {
                let t = self.coupling.t() - amplitude / ((k.unsigned_abs() as f64) + 1.0).powf(power);
                CouplingPair::clamped(t)
            }
            CouplingLaw::ZerosAtSquares => {
                if is_square(k.unsigned_abs()) {
                    CouplingPair::clamped(0.0)
                } else {
                    self.coupling
                }
            }
        }
    }

    /// The coupling if it is the same for every block.
    pub fn constant_coupling(&self) -> Option<CouplingPair> {
        matches!(self.law, CouplingLaw::Constant).then_some(self.coupling)
    }

    pub fn is_random(&self) -> bool {
        matches!(self.variant, Variant::Random { .. })
    }

    /// Period of the site data (`θ_k` and `α_k` up to the linear slope).
    pub fn site_period(&self) -> Option<usize> {
        match &self.variant {
            Variant::Periodic { theta, .. } => Some(theta.len()),
            Variant::TwoValued { .. } => Some(2),
            Variant::Explicit { theta, extension: Extension::Periodic, .. } => Some(theta.len()),
            _ => None,
        }
    }

    /// Smallest `p` with `T(k + p) = T(k)` in the alternating gauge, for
    /// `k` beyond any local defect.
    pub fn transfer_period(&self) -> Option<usize> {
        if !matches!(self.law, CouplingLaw::Constant) || self.reflect {
            return None;
        }
        self.site_period().map(|n| n / gcd(n, 2))
    }

    /// Linear slope `a` of `α_k = a·k + π_k` for the periodic variants.
    pub fn slope(&self) -> f64 {
        match &self.variant {
            Variant::Periodic { a, .. } | Variant::TwoValued { a, .. } => *a,
            _ => 0.0,
        }
    }

    /// Parse the flat JSON document.
    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let doc: ModelDoc = serde_path_to_error::deserialize(de).map_err(|e| ModelError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        doc.into_model()
    }

    /// Build from an already-parsed JSON value.
    pub fn from_value(v: serde_json::Value) -> Result<Self, ModelError> {
        let doc: ModelDoc = serde_path_to_error::deserialize(v).map_err(|e| ModelError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        doc.into_model()
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(ModelDoc::from_model(self)).expect("model document serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("model document serializes")
    }
}

fn explicit_index(start: i64, len: usize, k: i64, ext: Extension) -> Option<usize> {
    let off = k - start;
    match ext {
        Extension::Periodic => Some(off.rem_euclid(len as i64) as usize),
        Extension::Zero => (0..len as i64).contains(&off).then_some(off as usize),
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The flat serialized form of a [`PhaseModel`].
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    variant: String,
    t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_o: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_o: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extension: Option<Extension>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distribution: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gauge: Option<GaugeRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coupling_law: Option<CouplingLaw>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    defects: Vec<Defect>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    reflect: bool,
}

impl ModelDoc {
    fn into_model(self) -> Result<PhaseModel, ModelError> {
        let need = |v: Option<f64>, f: &'static str| v.ok_or(ModelError::MissingField(f));
        let variant = match self.variant.as_str() {
            "random" => Variant::Random {
                seed: self.seed.ok_or(ModelError::MissingField("seed"))?,
                distribution: self.distribution.unwrap_or(Distribution::Uniform),
            },
            "periodic" => {
                let theta = self.theta.ok_or(ModelError::MissingField("theta"))?;
                let pi = self.pi.unwrap_or_else(|| vec![0.0; theta.len()]);
                if let Some(n) = self.n {
                    if n != theta.len() {
                        return Err(invalid("N", format!("N = {n} but theta has length {}", theta.len())));
                    }
                }
                Variant::Periodic { theta, pi, a: self.a.unwrap_or(0.0) }
            }
            "two_valued" => Variant::TwoValued {
                theta_e: need(self.theta_e, "theta_e")?,
                theta_o: need(self.theta_o, "theta_o")?,
                alpha_e: self.alpha_e.unwrap_or(0.0),
                alpha_o: self.alpha_o.unwrap_or(0.0),
                a: self.a.unwrap_or(0.0),
            },
            "almost_periodic" => Variant::AlmostPeriodic {
                beta: need(self.beta, "beta")?,
                theta0: self.theta0.unwrap_or(0.0),
                alpha0: self.alpha0.unwrap_or(0.0),
            },
            "explicit" => {
                let theta = self.theta.ok_or(ModelError::MissingField("theta"))?;
                let alpha = self.alpha.unwrap_or_else(|| vec![0.0; theta.len()]);
                Variant::Explicit {
                    start: self.start.unwrap_or(0),
                    theta,
                    alpha,
                    gamma: self.gamma,
                    extension: self.extension.unwrap_or(Extension::Zero),
                }
            }
            other => return Err(ModelError::UnknownVariant(other.to_string())),
        };
        let m = PhaseModel {
            variant,
            coupling: CouplingPair::new(self.t)?,
            law: self.coupling_law.unwrap_or(CouplingLaw::Constant),
            gauge: self.gauge.unwrap_or(GaugeRule::Zero),
            defects: self.defects,
            reflect: self.reflect,
        };
        m.validate()?;
        Ok(m)
    }

    fn from_model(m: &PhaseModel) -> Self {
        let mut d = ModelDoc {
            variant: m.variant.name().to_string(),
            t: m.coupling.t(),
            gauge: (m.gauge != GaugeRule::Zero).then_some(m.gauge),
            coupling_law: (m.law != CouplingLaw::Constant).then_some(m.law),
            defects: m.defects.clone(),
            reflect: m.reflect,
            ..Default::default()
        };
        match &m.variant {
            Variant::Random { seed, distribution } => {
                d.seed = Some(*seed);
                if *distribution != Distribution::Uniform {
                    d.distribution = Some(distribution.clone());
                }
            }
            Variant::Periodic { theta, pi, a } => {
                d.n = Some(theta.len());
                d.theta = Some(theta.clone());
                d.pi = Some(pi.clone());
                d.a = Some(*a);
            }
            Variant::TwoValued { theta_e, theta_o, alpha_e, alpha_o, a } => {
                d.theta_e = Some(*theta_e);
                d.theta_o = Some(*theta_o);
                d.alpha_e = Some(*alpha_e);
                d.alpha_o = Some(*alpha_o);
                d.a = Some(*a);
            }
            Variant::AlmostPeriodic { beta, theta0, alpha0 } => {
                d.beta = Some(*beta);
                d.theta0 = Some(*theta0);
                d.alpha0 = Some(*alpha0);
            }
            Variant::Explicit { start, theta, alpha, gamma, extension } => {
                d.start = Some(*start);
                d.theta = Some(theta.clone());
                d.alpha = Some(alpha.clone());
                d.gamma = gamma.clone();
                d.extension = Some(*extension);
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coupling_invariant() {
        for t in [0.0, 0.3, 0.5, 0.999, 1.0] {
            let c = CouplingPair::new(t).unwrap();
            assert!((c.r() * c.r() + c.t() * c.t() - 1.0).abs() < 1e-14);
            assert!(c.r() >= 0.0);
        }
        assert!(CouplingPair::new(1.5).is_err());
        assert!(CouplingPair::new(f64::NAN).is_err());
    }

    #[test]
    fn random_phase_is_site_addressable() {
        let m = PhaseModel::random(42, 0.5).unwrap();
        let a: Vec<_> = (-5..5).map(|k| m.phases(k)).collect();
        // evaluating in reverse order yields the same values
        let b: Vec<_> = (-5..5).rev().map(|k| m.phases(k)).collect();
        let b: Vec<_> = b.into_iter().rev().collect();
        assert_eq!(a, b);
        assert_ne!(m.phases(0), m.phases(1));
        let other = PhaseModel::random(43, 0.5).unwrap();
        assert_ne!(m.phases(3), other.phases(3));
    }

    #[test]
    fn periodic_and_two_valued_values() {
        let m = PhaseModel::periodic(vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 3.0], 0.5, 0.4).unwrap();
        assert_eq!(m.theta(4), 0.2);
        assert!((m.alpha(4) - (0.5 * 4.0 + 2.0)).abs() < 1e-15);
        assert_eq!(m.theta(-1), 0.3);
        assert_eq!(m.transfer_period(), Some(3));
        let tv = PhaseModel::two_valued(0.1, 0.2, 0.3, 0.4, 0.0, 0.5).unwrap();
        assert_eq!(tv.theta(-3), 0.2);
        assert_eq!(tv.transfer_period(), Some(1));
        let even = PhaseModel::periodic(vec![0.1, 0.2, 0.3, 0.4], vec![0.0; 4], 0.0, 0.4).unwrap();
        assert_eq!(even.transfer_period(), Some(2));
    }

    #[test]
    fn alternating_gauge_signs() {
        let m = PhaseModel::two_valued(0.0, 0.0, 0.3, 0.7, 0.0, 0.5).unwrap().with_gauge(GaugeRule::Alternating);
        assert!((m.gamma(1) - 0.7).abs() < 1e-15);
        assert!((m.gamma(2) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn reflect_and_defects() {
        let m = PhaseModel::random(7, 0.5).unwrap().with_reflect(true);
        assert_eq!(m.phases(-4), m.phases(4));
        let d = m.clone().with_defects(vec![Defect { site: 4, theta: Some(1.0), alpha: None }]);
        assert_eq!(d.theta(4), 1.0);
        assert_eq!(d.alpha(4), m.alpha(4));
    }

    #[test]
    fn coupling_laws() {
        let m = PhaseModel::random(1, 0.5).unwrap().with_law(CouplingLaw::ZerosAtSquares);
        assert_eq!(m.coupling_at(9).t(), 0.0);
        assert_eq!(m.coupling_at(-16).t(), 0.0);
        assert_eq!(m.coupling_at(10).t(), 0.5);
        let p = PhaseModel::random(1, 0.5).unwrap().with_law(CouplingLaw::PowerTail { amplitude: 1.0, power: 2.0 });
        assert!((p.coupling_at(9).t() - (0.5 - 0.01)).abs() < 1e-15);
        assert_eq!(p.coupling_at(0).t(), 0.0);
    }

    #[test]
    fn json_round_trip_all_variants() {
        let models = vec![
            PhaseModel::random(9, 0.3).unwrap(),
            PhaseModel::periodic(vec![0.1, 0.2], vec![0.3, 0.4], 0.1, 0.6).unwrap(),
            PhaseModel::two_valued(0.1, 0.2, 0.3, 0.4, 0.5, 0.6).unwrap().with_gauge(GaugeRule::Drawn { seed: 3 }),
            PhaseModel::almost_periodic(0.618, 0.2, 0.5).unwrap(),
            PhaseModel::new(
                Variant::Explicit {
                    start: -2,
                    theta: vec![0.1, 0.2, 0.3],
                    alpha: vec![0.0, 0.1, 0.2],
                    gamma: Some(vec![1.0, 2.0, 3.0]),
                    extension: Extension::Periodic,
                },
                CouplingPair::new(0.5).unwrap(),
            )
            .unwrap()
            .with_defects(vec![Defect { site: 1, theta: Some(0.5), alpha: None }])
            .with_law(CouplingLaw::PowerTail { amplitude: 0.5, power: 1.5 }),
            PhaseModel::new(
                Variant::Random { seed: 1, distribution: Distribution::Atoms { values: vec![0.0, 1.5] } },
                CouplingPair::new(0.5).unwrap(),
            )
            .unwrap()
            .with_reflect(true),
        ];
        for m in models {
            let back = PhaseModel::from_json(&m.to_json()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn json_errors_name_the_field() {
        let e = PhaseModel::from_json(r#"{"variant":"periodic","t":0.5,"theta":[0.1]}"#).unwrap_err();
        assert!(matches!(e, ModelError::InvalidField { field: "theta", .. }));
        let e = PhaseModel::from_json(r#"{"variant":"random","t":0.5}"#).unwrap_err();
        assert_eq!(e, ModelError::MissingField("seed"));
        let e = PhaseModel::from_json(r#"{"variant":"random","t":0.5,"seed":"x"}"#).unwrap_err();
        assert!(matches!(e, ModelError::Parse { ref path, .. } if path == "seed"));
        let e = PhaseModel::from_json(r#"{"variant":"almost_periodic","t":0.5,"beta":1.5}"#).unwrap_err();
        assert!(matches!(e, ModelError::InvalidField { field: "beta", .. }));
        assert!(PhaseModel::from_json(r#"{"variant":"nope","t":0.5}"#).is_err());
        assert!(PhaseModel::from_json(r#"{"variant":"random","t":0.5,"seed":1,"extra":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn phases_reduced(seed in any::<u64>(), k in -1000i64..1000) {
            let p = PhaseModel::random(seed, 0.5).unwrap().with_gauge(GaugeRule::Drawn { seed }).phases(k);
            for v in [p.theta, p.alpha, p.gamma] {
                prop_assert!((0.0..TAU).contains(&v));
            }
        }

        #[test]
        fn from_json_never_panics(s in ".{0,200}") {
            let _ = PhaseModel::from_json(&s);
        }
    }
}
