#![no_main]

use libfuzzer_sys::fuzz_target;
use zhawkes::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::parse(text) {
        // Anything accepted must survive its own canonical form.
        let again = RunConfig::parse(&cfg.to_config_string()).expect("canonical form parses");
        assert_eq!(cfg, again);
    }
});
