#![no_main]

use libfuzzer_sys::fuzz_target;
use sumbound::io::{read_sweep_csv, sweep_csv_string};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_sweep_csv(data) {
        // Anything accepted must survive a write/read cycle unchanged.
        let text = sweep_csv_string(&rows).unwrap();
        let again = read_sweep_csv(text.as_bytes()).unwrap();
        assert_eq!(format!("{rows:?}"), format!("{again:?}"));
    }
});
