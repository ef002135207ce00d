#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(g) = lindstab_core::lattice::parse_geometry(data) {
        if g.num_sites() <= 4096 {
            let origin = g.site(0);
            if let Ok(ball) = g.ball(&origin, 2) {
                assert!(ball.contains(&origin));
            }
        }
    }
});
