#![no_main]

use libfuzzer_sys::fuzz_target;
use pentaband_cli::{parse_config, resolve, Command};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = parse_config(text) else { return };
    let echoed = serde_json::to_string(&config).expect("config serializes");
    let again = parse_config(&echoed).expect("echoed config parses");
    assert_eq!(again.params, config.params);
    assert_eq!(again.seed, config.seed);
    // resolution only inspects the document; nothing is written
    let _ = resolve(Command::Bands, config, Some("unused".into()), None);
});
