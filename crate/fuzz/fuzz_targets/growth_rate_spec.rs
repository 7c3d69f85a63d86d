#![no_main]

use bernoulli_diffuse::bernoulli::GrowthRateSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = text.parse::<GrowthRateSpec>() else {
        return;
    };
    // Anything the parser accepts must survive a print/parse round trip.
    // Inline rates display in config syntax; table specs keep the raw path.
    let shown = match &spec {
        GrowthRateSpec::Inline(rate) => rate.to_string(),
        GrowthRateSpec::Table(path) => format!("table:{}", path.display()),
    };
    let reparsed: GrowthRateSpec = shown
        .parse()
        .unwrap_or_else(|e| panic!("'{shown}' failed to reparse: {e}"));
    assert_eq!(spec, reparsed, "round trip changed '{shown}'");
});
