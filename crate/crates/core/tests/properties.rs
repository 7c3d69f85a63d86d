//! Randomized invariants for the parsers and the scalar building blocks.

use std::str::FromStr;

use bernoulli_diffuse::bernoulli::{
    parse_mu_table, BernoulliParams, GrowthRate, GrowthRateSpec,
};
use bernoulli_diffuse::denoise::metrics::{mse, psnr_from_mse};
use bernoulli_diffuse::denoise::ImageTensor;
use bernoulli_diffuse::grid::{Boundary, Grid2D};
use proptest::prelude::*;

fn inline_rate() -> impl Strategy<Value = GrowthRate> {
    prop_oneof![
        (0.01..5.0f64).prop_map(GrowthRate::Constant),
        (0.01..5.0f64).prop_map(GrowthRate::RationalDecay),
        ((0.01..5.0f64), (0.0..3.0f64)).prop_map(|(m, b)| GrowthRate::ExpDecay(m, b)),
        (0.01..5.0f64).prop_map(GrowthRate::Seasonal),
    ]
}

/// Strictly increasing times paired with positive rates.
fn table_samples() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(((0.001..0.8f64), (0.01..4.0f64)), 1..12).prop_map(|raw| {
        let mut t = 0.0;
        raw.into_iter()
            .map(|(gap, m)| {
                t += gap;
                (t, m)
            })
            .collect()
    })
}

fn any_rate() -> impl Strategy<Value = GrowthRate> {
    prop_oneof![
        4 => inline_rate(),
        1 => table_samples().prop_map(GrowthRate::Tabulated),
    ]
}

fn small_grid() -> impl Strategy<Value = Grid2D> {
    ((1..9usize), (1..9usize), prop::bool::ANY).prop_flat_map(|(nx, ny, periodic)| {
        prop::collection::vec(-1.0..1.0f64, nx * ny).prop_map(move |data| {
            let bc = if periodic {
                Boundary::Periodic
            } else {
                Boundary::DirichletZero
            };
            Grid2D::new(nx, ny, 0.5, bc, data).unwrap()
        })
    })
}

fn image_pair() -> impl Strategy<Value = (ImageTensor, ImageTensor)> {
    ((1..7usize), (1..7usize)).prop_flat_map(|(h, w)| {
        let len = h * w * 3;
        (
            prop::collection::vec(0.0..=1.0f64, len),
            prop::collection::vec(0.0..=1.0f64, len),
        )
            .prop_map(move |(a, b)| {
                (
                    ImageTensor::new(h, w, a).unwrap(),
                    ImageTensor::new(h, w, b).unwrap(),
                )
            })
    })
}

proptest! {
    #[test]
    fn growth_specs_round_trip_through_display(rate in inline_rate()) {
        let text = rate.to_string();
        let spec = GrowthRateSpec::from_str(&text).unwrap();
        let back = spec.resolve().unwrap();
        prop_assert_eq!(rate, back);
    }

    #[test]
    fn parser_rejects_malformed_specs(
        kind in "[a-z]{1,10}",
        value in -5.0..5.0f64,
    ) {
        prop_assume!(!matches!(kind.as_str(), "constant" | "rational" | "exp" | "seasonal" | "table"));
        let unknown = format!("{kind}:{value}");
        let nonpositive = format!("constant:{}", -value.abs());
        prop_assert!(GrowthRateSpec::from_str(&unknown).is_err());
        prop_assert!(GrowthRateSpec::from_str(&kind).is_err());
        prop_assert!(GrowthRateSpec::from_str(&nonpositive).is_err());
    }

    #[test]
    fn mu_tables_round_trip(samples in table_samples(), with_noise in prop::bool::ANY) {
        let mut text = String::new();
        if with_noise {
            text.push_str("# rates sampled offline\n\n");
        }
        for &(t, m) in &samples {
            text.push_str(&format!("{t:.16e},{m:.16e}\n"));
        }
        let parsed = parse_mu_table(&text).unwrap();
        prop_assert_eq!(samples, parsed);
    }

    #[test]
    fn mu_table_parser_rejects_disorder(samples in table_samples()) {
        prop_assume!(samples.len() >= 2);
        let mut lines: Vec<String> = samples
            .iter()
            .map(|&(t, m)| format!("{t},{m}"))
            .collect();
        lines.swap(0, samples.len() - 1);
        prop_assert!(parse_mu_table(&lines.join("\n")).is_err());

        let negated = format!("{},{}", samples[0].0, -samples[0].1);
        prop_assert!(parse_mu_table(&negated).is_err());
    }

    #[test]
    fn grid_csv_round_trips_bitwise(g in small_grid()) {
        let restored = Grid2D::from_csv_str(&g.to_csv_string()).unwrap();
        prop_assert_eq!(g.nx(), restored.nx());
        prop_assert_eq!(g.ny(), restored.ny());
        prop_assert_eq!(g.h(), restored.h());
        prop_assert_eq!(g.bc(), restored.bc());
        prop_assert_eq!(g.data(), restored.data());
    }

    #[test]
    fn mse_is_symmetric_and_nonnegative((a, b) in image_pair()) {
        let fwd = mse(&a, &b).unwrap();
        let rev = mse(&b, &a).unwrap();
        prop_assert_eq!(fwd, rev);
        prop_assert!(fwd >= 0.0);
        prop_assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn psnr_is_monotone_in_mse(m1 in 1e-12..1.0f64, scale in 1.001..100.0f64) {
        let m2 = m1 * scale;
        prop_assert!(psnr_from_mse(m1) > psnr_from_mse(m2));
        prop_assert!(psnr_from_mse(0.0).is_infinite());
    }

    #[test]
    fn running_max_dominates_the_rate(
        rate in any_rate(),
        t1 in 0.0..4.0f64,
        dt in 0.0..4.0f64,
    ) {
        let t2 = t1 + dt;
        let m1 = rate.running_max(t1);
        let m2 = rate.running_max(t2);
        prop_assert!(m1 <= m2 + 1e-12, "running max must be nondecreasing: {} vs {}", m1, m2);
        prop_assert!(
            rate.eval(t1) <= m1 + 1e-12,
            "rate {} at t={} exceeds its running max {}",
            rate.eval(t1),
            t1,
            m1
        );
    }

    #[test]
    fn s_curves_start_at_gamma_and_grow_with_it(
        alpha in 1.1..4.0f64,
        gamma in 0.1..3.0f64,
        bump in 0.01..1.0f64,
        rate in inline_rate(),
        t in 0.0..3.0f64,
    ) {
        let lo = BernoulliParams::new(alpha, gamma, rate.clone()).unwrap();
        let hi = BernoulliParams::new(alpha, gamma + bump, rate).unwrap();
        prop_assert_eq!(lo.eval_s(0.0).unwrap(), gamma);
        let s_lo = lo.eval_s(t).unwrap();
        let s_hi = hi.eval_s(t).unwrap();
        prop_assert!(s_lo.is_finite() && s_lo > 0.0);
        prop_assert!(s_lo <= s_hi * (1.0 + 1e-9), "S must grow with gamma: {} vs {}", s_lo, s_hi);
    }
}
