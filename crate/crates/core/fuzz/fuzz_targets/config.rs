#![no_main]

use dgschwarz::cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::parse(text) {
        // validation must not panic either
        let _ = config.validate();
        let written = config.to_text();
        let again = ExperimentConfig::parse(&written).expect("written config must parse");
        assert_eq!(again.to_text(), written);
    }
});
