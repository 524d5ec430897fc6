#![no_main]

use libfuzzer_sys::fuzz_target;
use pentaband::report::{plot_table, BAND_FUNCTIONS, GAMMA_PROFILE, MEDIAN_VECTOR};

fuzz_target!(|data: &[u8]| {
    let Some((&which, body)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(body) else { return };
    let name = [GAMMA_PROFILE, BAND_FUNCTIONS, MEDIAN_VECTOR][which as usize % 3];
    if let Ok(table) = plot_table(name, text) {
        assert!(table.starts_with('#'));
    }
});
