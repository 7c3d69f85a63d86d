#![no_main]

use bernoulli_diffuse::grid::Grid2D;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(g) = Grid2D::from_csv_str(text) else {
        return;
    };
    // Accepted grids hold exactly nx*ny finite values under a positive h.
    assert_eq!(g.data().len(), g.nx() * g.ny());
    assert!(g.data().iter().all(|v| v.is_finite()));
    assert!(g.h().is_finite() && g.h() > 0.0);
    // Serialization reads back bitwise.
    let again = Grid2D::from_csv_str(&g.to_csv_string()).expect("serialized grid must reparse");
    assert_eq!(g.nx(), again.nx());
    assert_eq!(g.ny(), again.ny());
    assert_eq!(g.h().to_bits(), again.h().to_bits());
    assert_eq!(g.bc(), again.bc());
    for (a, b) in g.data().iter().zip(again.data()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
});
