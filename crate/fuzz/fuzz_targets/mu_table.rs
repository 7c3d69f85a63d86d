#![no_main]

use bernoulli_diffuse::bernoulli::parse_mu_table;
use libfuzzer_sys::fuzz_target;
use std::fmt::Write;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(samples) = parse_mu_table(text) else {
        return;
    };
    // Accepted tables are nonempty with strictly increasing t >= 0 and mu > 0.
    assert!(!samples.is_empty());
    assert!(samples[0].0 >= 0.0);
    for pair in samples.windows(2) {
        assert!(pair[0].0 < pair[1].0, "t not strictly increasing");
    }
    assert!(samples.iter().all(|&(_, m)| m > 0.0));
    // 17 significant digits reproduce every f64 bitwise.
    let mut canon = String::new();
    for &(t, m) in &samples {
        writeln!(canon, "{t:.16e},{m:.16e}").unwrap();
    }
    let again = parse_mu_table(&canon).expect("canonical table must reparse");
    assert_eq!(samples.len(), again.len());
    for (a, b) in samples.iter().zip(&again) {
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }
});
