#![no_main]

use libfuzzer_sys::fuzz_target;
use zhawkes::io::parse_series;

fuzz_target!(|data: &[u8]| {
    if let Ok(file) = parse_series(data) {
        let n = file.lambda.len();
        assert!(n > 0);
        assert!(file.lambda.values.iter().all(|v| v.is_finite() && *v >= 0.0));
        for s in [&file.h, &file.z].into_iter().flatten() {
            assert_eq!(s.len(), n);
        }
    }
});
