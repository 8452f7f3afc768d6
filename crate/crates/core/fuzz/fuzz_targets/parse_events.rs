#![no_main]

use libfuzzer_sys::fuzz_target;
use zhawkes::io::parse_events;

fuzz_target!(|data: &[u8]| {
    if let Ok(file) = parse_events(data) {
        assert_eq!(file.times.len(), file.signs.len());
        assert_eq!(file.times.len(), file.prices.len());
        assert!(file.times.iter().all(|t| t.is_finite()));
    }
});
