#![no_main]

use libfuzzer_sys::fuzz_target;
use sumbound::NGrid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = text.parse::<NGrid>() {
        assert!(grid.step() >= 1 && grid.start() >= grid.step() && grid.start() <= grid.end());
        assert_eq!((grid.end() - grid.start()) % grid.step(), 0);
        assert_eq!(grid.to_string().parse::<NGrid>().unwrap(), grid);
        assert_eq!(grid.iter().next(), Some(grid.start()));
    }
});
