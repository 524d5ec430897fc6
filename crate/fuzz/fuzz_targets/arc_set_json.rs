#![no_main]

use libfuzzer_sys::fuzz_target;
use pentaband::periodic::ArcSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(arcs) = ArcSet::from_json(text) else { return };
    let _ = arcs.total_length();
    let _ = arcs.contains(1.0);
    let _ = arcs.distance(4.0);
    let _ = arcs.hausdorff_to_points(&[0.0, 3.0]);
    let _ = arcs.endpoint_distance(&arcs);
    let _ = ArcSet::from_json(&arcs.to_json());
});
