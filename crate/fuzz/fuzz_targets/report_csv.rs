#![no_main]

use libfuzzer_sys::fuzz_target;
use pentaband::lyapunov::GammaProfile;
use pentaband::periodic::BandFunctions;
use pentaband::report::SiteVector;
use pentaband::transfer::CoefficientTrack;

// first byte picks the reader, the rest is the file body
fuzz_target!(|data: &[u8]| {
    let Some((&which, body)) = data.split_first() else { return };
    match which % 4 {
        0 => {
            if let Ok(p) = GammaProfile::read_csv(body) {
                let mut buf = Vec::new();
                p.write_csv(&mut buf).expect("write");
                let q = GammaProfile::read_csv(buf.as_slice()).expect("rewritten profile parses");
                assert_eq!(q.estimates.len(), p.estimates.len());
            }
        }
        1 => {
            if let Ok((x, tracks)) = BandFunctions::read_csv(body) {
                assert!(tracks.iter().all(|t| t.len() == x.len()));
            }
        }
        2 => {
            if let Ok(v) = SiteVector::read_csv(body) {
                let mut buf = Vec::new();
                v.write_csv(&mut buf).expect("write");
                let w = SiteVector::read_csv(buf.as_slice()).expect("rewritten vector parses");
                assert_eq!((w.first_site, w.values.len()), (v.first_site, v.values.len()));
            }
        }
        _ => {
            if let Ok(t) = CoefficientTrack::read_csv(body, 0.5) {
                let _ = t.log_norm(t.k_start);
                let _ = t.k_end();
            }
        }
    }
});
