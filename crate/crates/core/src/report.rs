//! Report files and their flattening into two-column plot tables.
//!
//! Tables are whitespace-separated with a `#` header line; blank lines
//! separate data blocks, and a `NaN` row breaks a curve where an angle wraps.

use crate::angle::reduce;
use crate::error::{Error, Result};
use crate::lyapunov::GammaProfile;
use crate::periodic::BandFunctions;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// File names used inside a run directory.
pub const GAMMA_PROFILE: &str = "gamma_profile.csv";
pub const BAND_FUNCTIONS: &str = "band_functions.csv";
pub const MEDIAN_VECTOR: &str = "median_vector.csv";

/// One eigenvector as `(site, re, im)` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteVector {
    pub first_site: i64,
    pub values: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct VectorRow {
    site: i64,
    re: f64,
    im: f64,
}

impl SiteVector {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (i, z) in self.values.iter().enumerate() {
            wr.serialize(VectorRow { site: self.first_site + i as i64, re: z.re, im: z.im })?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Rows must have consecutive sites.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut first = None;
        let mut values = Vec::new();
        for row in rd.deserialize::<VectorRow>() {
            let row = row?;
            let f = *first.get_or_insert(row.site);
            if row.site.checked_sub(f) != Some(values.len() as i64) {
                return Err(Error::InvalidArgument(format!("site {} out of sequence", row.site)));
            }
            values.push(C64::new(row.re, row.im));
        }
        let first_site = first.ok_or_else(|| Error::InvalidArgument("empty vector table".into()))?;
        Ok(SiteVector { first_site, values })
    }
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.17e}")
    }
}

/// `λ  γ̂` rows.
pub fn gamma_table(profile: &GammaProfile) -> String {
    let mut out = String::from("# lambda gamma_hat\n");
    for e in &profile.estimates {
        let _ = writeln!(out, "{} {}", fmt(e.lambda), fmt(e.gamma_hat));
    }
    out
}

/// One block per track of `x  angle` rows, angles in `[0, 2π)`, with a
/// `NaN` row wherever consecutive angles differ by more than `π`.
pub fn band_table(x: &[f64], tracks: &[Vec<C64>]) -> String {
    let mut out = String::from("# x angle\n");
    for (j, t) in tracks.iter().enumerate() {
        if j > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# track {j}");
        let mut prev: Option<f64> = None;
        for (xi, z) in x.iter().zip(t) {
            let a = reduce(z.arg());
            if prev.is_some_and(|p| (a - p).abs() > PI) {
                let _ = writeln!(out, "{} NaN", fmt(*xi));
            }
            let _ = writeln!(out, "{} {}", fmt(*xi), fmt(a));
            prev = Some(a);
        }
    }
    out
}

/// `site  ln|ψ|` rows.
pub fn vector_table(v: &SiteVector) -> String {
    let mut out = String::from("# site log_abs_psi\n");
    for (i, z) in v.values.iter().enumerate() {
        let _ = writeln!(out, "{} {}", v.first_site + i as i64, fmt(z.norm().ln()));
    }
    out
}

/// Parse a report by file name and return its plot table.
pub fn plot_table(name: &str, text: &str) -> Result<String> {
    match name {
        GAMMA_PROFILE => Ok(gamma_table(&GammaProfile::read_csv(text.as_bytes())?)),
        BAND_FUNCTIONS => {
            let (x, tracks) = BandFunctions::read_csv(text.as_bytes())?;
            Ok(band_table(&x, &tracks))
        }
        MEDIAN_VECTOR => Ok(vector_table(&SiteVector::read_csv(text.as_bytes())?)),
        other => Err(Error::MissingReport(format!("unknown report kind `{other}`"))),
    }
}

/// Write `<stem>.dat` next to every known report in `dir`; fails when the
/// directory holds none.
pub fn emit_plotdata(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for name in [GAMMA_PROFILE, BAND_FUNCTIONS, MEDIAN_VECTOR] {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let table = plot_table(name, &text)?;
        let out = path.with_extension("dat");
        std::fs::write(&out, table)?;
        written.push(out);
    }
    if written.is_empty() {
        return Err(Error::MissingReport(format!("no {GAMMA_PROFILE}, {BAND_FUNCTIONS} or {MEDIAN_VECTOR} in {}", dir.display())));
    }
    Ok(written)
}
