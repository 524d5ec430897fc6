#![no_main]

use libfuzzer_sys::fuzz_target;
use pentaband::PhaseModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = PhaseModel::from_json(text) else { return };
    // an accepted model must serialize to a document that parses again
    let again = PhaseModel::from_json(&model.to_json()).expect("serialized model parses");
    assert_eq!(again.variant.name(), model.variant.name());
    let _ = model.site_period();
    let _ = model.phases(0);
    let _ = model.coupling_at(-3);
});
