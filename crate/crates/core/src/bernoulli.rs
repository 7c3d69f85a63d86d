//! Growth rates mu(t) and the closed-form Bernoulli time factor S(t).
//!
//! S solves S' + S^alpha = mu(t) S with S(0) = gamma > 0, alpha > 1.
//! With beta = alpha - 1 and I(t) = integral of mu over [0, t], the
//! substitution z = S^{-beta} linearizes the equation and gives
//!
//!   S(t) = [ e^{-beta I(t)} ( gamma^{-beta} + beta J(t) ) ]^{-1/beta},
//!   J(t) = integral over [0, t] of e^{beta I(tau)} dtau.
//!
//! The raw integrand of J overflows quickly (alpha = 4 over t = 10 gives
//! exponents beyond 100), so evaluation factors e^{beta I(t)} into J and
//! works with e^{beta (I(tau) - I(t))} <= 1 throughout.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::apow;

/// Time-dependent growth rate, positive on [0, infinity).
///
/// Seasonal touches zero at half-period instants; its integral and the
/// factor S stay well defined, so that boundary case is accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GrowthRate {
    /// mu(t) = mu0
    Constant(f64),
    /// mu(t) = a / (1 + t)
    RationalDecay(f64),
    /// mu(t) = mu0 * exp(-beta t)
    ExpDecay(f64, f64),
    /// mu(t) = mu0 * (1 + cos(2 pi t))
    Seasonal(f64),
    /// Linear interpolation of (t, mu) samples with strictly increasing t;
    /// constant extrapolation beyond the sampled range.
    Tabulated(Vec<(f64, f64)>),
}

const TWO_PI: f64 = std::f64::consts::TAU;

impl GrowthRate {
    /// Checks the positivity and monotonicity requirements. Called by the
    /// parsers and by `BernoulliParams::new`; direct enum construction is
    /// expected to uphold the same rules.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match self {
            GrowthRate::Constant(m) => positive(*m, "constant rate"),
            GrowthRate::RationalDecay(a) => positive(*a, "rational decay amplitude"),
            GrowthRate::ExpDecay(m, b) => {
                positive(*m, "exponential decay amplitude")?;
                if b.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Domain("exponential decay rate must be finite".into()))
                }
            }
            GrowthRate::Seasonal(m) => positive(*m, "seasonal amplitude"),
            GrowthRate::Tabulated(samples) => {
                if samples.is_empty() {
                    return Err(Error::Domain("tabulated rate needs at least one sample".into()));
                }
                let mut prev = f64::NEG_INFINITY;
                for &(t, m) in samples {
                    if !t.is_finite() || t < 0.0 {
                        return Err(Error::Domain(format!("sample time {t} must be >= 0")));
                    }
                    if t <= prev {
                        return Err(Error::Domain("sample times must be strictly increasing".into()));
                    }
                    positive(m, "sampled rate")?;
                    prev = t;
                }
                Ok(())
            }
        }
    }

    /// mu(t) for t >= 0.
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            GrowthRate::Constant(m) => *m,
            GrowthRate::RationalDecay(a) => a / (1.0 + t),
            GrowthRate::ExpDecay(m, b) => m * (-b * t).exp(),
            GrowthRate::Seasonal(m) => m * (1.0 + (TWO_PI * t).cos()),
            GrowthRate::Tabulated(samples) => {
                let pos = samples.partition_point(|&(ti, _)| ti <= t);
                if pos == 0 {
                    samples[0].1
                } else if pos == samples.len() {
                    samples[samples.len() - 1].1
                } else {
                    let (t0, m0) = samples[pos - 1];
                    let (t1, m1) = samples[pos];
                    let w = (t - t0) / (t1 - t0);
                    m0 + w * (m1 - m0)
                }
            }
        }
    }

    /// Integral of mu over [0, t]. Closed forms where they exist, composite
    /// Simpson for tabulated rates.
    pub fn integral(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("integration endpoint must be >= 0, got {t}")));
        }
        Ok(self.integral_at(t))
    }

    fn integral_at(&self, t: f64) -> f64 {
        match self {
            GrowthRate::Constant(m) => m * t,
            GrowthRate::RationalDecay(a) => a * (1.0 + t).ln(),
            GrowthRate::ExpDecay(m, b) => {
                if *b == 0.0 {
                    m * t
                } else {
                    m * (1.0 - (-b * t).exp()) / b
                }
            }
            GrowthRate::Seasonal(m) => m * (t + (TWO_PI * t).sin() / TWO_PI),
            GrowthRate::Tabulated(samples) => {
                // composite Simpson with panels split at the sample knots;
                // the rule is exact on each linear (or extrapolated) piece
                let panel = |a: f64, b: f64| {
                    (b - a) / 6.0
                        * (self.eval(a) + 4.0 * self.eval(0.5 * (a + b)) + self.eval(b))
                };
                let mut acc = 0.0;
                let mut a = 0.0;
                for &(knot, _) in samples {
                    if knot >= t {
                        break;
                    }
                    if knot > a {
                        acc += panel(a, knot);
                        a = knot;
                    }
                }
                if t > a {
                    acc += panel(a, t);
                }
                acc
            }
        }
    }

    /// Running supremum sup of mu over [0, t]. For the monotone presets the
    /// endpoints suffice; tabulated rates also scan their interior knots.
    pub fn running_max(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            GrowthRate::Constant(m) => *m,
            GrowthRate::RationalDecay(a) => *a,
            GrowthRate::ExpDecay(..) => self.eval(0.0).max(self.eval(t)),
            GrowthRate::Seasonal(m) => 2.0 * m,
            GrowthRate::Tabulated(samples) => {
                let mut best = self.eval(0.0).max(self.eval(t));
                for &(ti, mi) in samples {
                    if ti <= t {
                        best = best.max(mi);
                    } else {
                        break;
                    }
                }
                best
            }
        }
    }
}

impl fmt::Display for GrowthRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthRate::Constant(m) => write!(f, "constant:{m}"),
            GrowthRate::RationalDecay(a) => write!(f, "rational:{a}"),
            GrowthRate::ExpDecay(m, b) => write!(f, "exp:{m},{b}"),
            GrowthRate::Seasonal(m) => write!(f, "seasonal:{m}"),
            GrowthRate::Tabulated(s) => write!(f, "table[{} samples]", s.len()),
        }
    }
}

/// A parsed `--mu` config string. Table specs keep only the path so parsing
/// stays pure; `resolve` performs the file read.
#[derive(Clone, Debug, PartialEq)]
pub enum GrowthRateSpec {
    Inline(GrowthRate),
    Table(PathBuf),
}

impl FromStr for GrowthRateSpec {
    type Err = Error;

    /// Accepts `constant:1.0`, `rational:0.3`, `exp:1.0,0.5`, `seasonal:1.0`
    /// and `table:<path.csv>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("growth rate '{s}' is missing ':'")))?;
        let one = |rest: &str| -> Result<f64> {
            rest.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{rest}' in growth rate")))
        };
        let rate = match kind {
            "constant" => GrowthRate::Constant(one(rest)?),
            "rational" => GrowthRate::RationalDecay(one(rest)?),
            "seasonal" => GrowthRate::Seasonal(one(rest)?),
            "exp" => {
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::Parse("exp rate needs two numbers: exp:mu0,beta".into()))?;
                GrowthRate::ExpDecay(one(a)?, one(b)?)
            }
            "table" => {
                if rest.is_empty() {
                    return Err(Error::Parse("table rate needs a path: table:<file.csv>".into()));
                }
                return Ok(GrowthRateSpec::Table(PathBuf::from(rest)));
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown growth rate kind '{other}' (expected constant, rational, exp, seasonal, table)"
                )))
            }
        };
        rate.validate()?;
        Ok(GrowthRateSpec::Inline(rate))
    }
}

impl GrowthRateSpec {
    /// Loads table specs from disk; inline specs are returned as-is.
    pub fn resolve(&self) -> Result<GrowthRate> {
        match self {
            GrowthRateSpec::Inline(g) => Ok(g.clone()),
            GrowthRateSpec::Table(path) => {
                let text = fs::read_to_string(path)?;
                let samples = parse_mu_table(&text)?;
                Ok(GrowthRate::Tabulated(samples))
            }
        }
    }
}

/// Maximum number of rows accepted in a mu table.
const MAX_TABLE_ROWS: usize = 1_000_000;

/// Parses `t,mu` lines into samples for `GrowthRate::Tabulated`. Blank lines
/// and lines starting with '#' are skipped. The samples must have strictly
/// increasing t >= 0 and mu > 0.
pub fn parse_mu_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (ts, ms) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected 't,mu'", lineno + 1)))?;
        if ms.contains(',') {
            return Err(Error::Parse(format!("line {}: too many fields", lineno + 1)));
        }
        let t: f64 = ts
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad time '{}'", lineno + 1, ts.trim())))?;
        let m: f64 = ms
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad rate '{}'", lineno + 1, ms.trim())))?;
        if samples.len() == MAX_TABLE_ROWS {
            return Err(Error::Parse("mu table has too many rows".into()));
        }
        samples.push((t, m));
    }
    let rate = GrowthRate::Tabulated(samples);
    rate.validate().map_err(|e| Error::Parse(e.to_string()))?;
    match rate {
        GrowthRate::Tabulated(samples) => Ok(samples),
        _ => unreachable!(),
    }
}

/// Everything needed to evaluate S(t): the exponent, S(0), and mu.
#[derive(Clone, Debug)]
pub struct BernoulliParams {
    alpha: f64,
    gamma: f64,
    mu: GrowthRate,
}

/// Quadrature stops once successive panel doublings agree to this relative
/// difference.
const SIMPSON_REL_TOL: f64 = 1e-10;
const SIMPSON_MAX_PANELS: usize = 1 << 20;

impl BernoulliParams {
    pub fn new(alpha: f64, gamma: f64, mu: GrowthRate) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::Domain(format!("alpha must be > 1, got {alpha}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
        }
        mu.validate()?;
        Ok(Self { alpha, gamma, mu })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> &GrowthRate {
        &self.mu
    }

    /// The closed-form time factor S(t). Exact gamma at t = 0; errors if the
    /// bracket inside the closed form is nonpositive (cannot happen for
    /// positive rates, so hitting it signals bad inputs).
    pub fn eval_s(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(self.gamma);
        }
        let beta = self.alpha - 1.0;
        let big_m = beta * self.mu.integral(t)?;
        let mu = &self.mu;
        // I is nondecreasing, so the shifted exponent is <= 0 and the
        // integrand stays in (0, 1].
        let integrand = |tau: f64| (beta * mu.integral_at(tau) - big_m).exp();
        let j = adaptive_simpson(&integrand, 0.0, t);
        let bracket = self.gamma.powf(-beta) * (-big_m).exp() + beta * j;
        if !bracket.is_finite() || bracket <= 0.0 {
            return Err(Error::Singular { t, bracket });
        }
        Ok((-bracket.ln() / beta).exp())
    }

    /// Stationary value of S for a constant rate: mu0^{1/(alpha-1)}.
    pub fn equilibrium(&self) -> Result<f64> {
        match self.mu {
            GrowthRate::Constant(m0) => Ok(m0.powf(1.0 / (self.alpha - 1.0))),
            ref other => Err(Error::Unsupported(format!(
                "equilibrium requires a constant rate, got {other}"
            ))),
        }
    }

    /// Classical RK4 march of S' = mu(t) S - S^alpha from S(0) = gamma.
    /// Independent of `eval_s`; used as its test oracle.
    pub fn rk4_oracle(&self, t: f64, dt: f64) -> Result<f64> {
        Ok(self.rk4_oracle_samples(&[t], dt)?[0])
    }

    /// One RK4 march visiting every requested time (which must be
    /// nondecreasing); lands on each exactly via a shortened final step.
    pub fn rk4_oracle_samples(&self, ts: &[f64], dt: f64) -> Result<Vec<f64>> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("oracle step must be > 0, got {dt}")));
        }
        let mut prev = 0.0f64;
        for &t in ts {
            if !(t >= prev) {
                return Err(Error::Domain("oracle times must be nondecreasing and >= 0".into()));
            }
            prev = t;
        }
        if let Some(&last) = ts.last() {
            if last / dt > 1e9 {
                return Err(Error::Domain("oracle step is too small for the horizon".into()));
            }
        }

        let mut s = self.gamma;
        let mut t_cur = 0.0f64;
        let mut out = Vec::with_capacity(ts.len());
        for &target in ts {
            let span = target - t_cur;
            if span > 0.0 {
                let n_full = (span / dt).floor() as usize;
                for _ in 0..n_full {
                    s = self.rk4_step(t_cur, s, dt)?;
                    t_cur += dt;
                }
                let rem = target - t_cur;
                if rem > 0.0 {
                    s = self.rk4_step(t_cur, s, rem)?;
                }
                t_cur = target;
            }
            out.push(s);
        }
        Ok(out)
    }

    fn rk4_step(&self, t: f64, s: f64, h: f64) -> Result<f64> {
        let f = |t: f64, s: f64| self.mu.eval(t) * s - apow(s, self.alpha);
        let guard = |v: f64, t: f64| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Unstable { t })
            }
        };
        let k1 = f(t, s);
        let s2 = guard(s + 0.5 * h * k1, t)?;
        let k2 = f(t + 0.5 * h, s2);
        let s3 = guard(s + 0.5 * h * k2, t)?;
        let k3 = f(t + 0.5 * h, s3);
        let s4 = guard(s + h * k3, t)?;
        let k4 = f(t + h, s4);
        guard(s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + h)
    }
}

/// Composite Simpson with panel doubling until two successive estimates
/// agree to SIMPSON_REL_TOL relative, capped at SIMPSON_MAX_PANELS.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut panels: usize = 1;
    let mut prev = composite_simpson(f, a, b, panels);
    while panels < SIMPSON_MAX_PANELS {
        panels *= 2;
        let cur = composite_simpson(f, a, b, panels);
        if (cur - prev).abs() <= SIMPSON_REL_TOL * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}

fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let m = 2 * panels;
    let h = (b - a) / m as f64;
    let ends = f(a) + f(b);
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..m {
        let x = a + h * k as f64;
        if k % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    (ends + 4.0 * odd + 2.0 * even) * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, gamma: f64, mu: GrowthRate) -> BernoulliParams {
        BernoulliParams::new(alpha, gamma, mu).unwrap()
    }

    /// S for constant mu = 1, alpha = 2, gamma = 0.5 collapses to the
    /// logistic 1 / (1 + e^{-t}).
    fn logistic(t: f64) -> f64 {
        1.0 / (1.0 + (-t).exp())
    }

    #[test]
    fn integral_closed_forms() {
        let c = GrowthRate::Constant(1.0);
        assert_eq!(c.integral(2.0).unwrap(), 2.0);

        let r = GrowthRate::RationalDecay(0.3);
        let expect = 0.3 * 4.0f64.ln();
        assert!((r.integral(3.0).unwrap() - expect).abs() < 1e-14);

        let e = GrowthRate::ExpDecay(1.0, 0.5);
        let expect = (1.0 - (-0.5f64 * 2.0).exp()) / 0.5;
        assert!((e.integral(2.0).unwrap() - expect).abs() < 1e-14);

        let e0 = GrowthRate::ExpDecay(2.0, 0.0);
        assert_eq!(e0.integral(3.0).unwrap(), 6.0);

        let s = GrowthRate::Seasonal(1.5);
        let t = 0.7;
        let expect = 1.5 * (t + (TWO_PI * t).sin() / TWO_PI);
        assert!((s.integral(t).unwrap() - expect).abs() < 1e-14);

        assert!(matches!(c.integral(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn integral_closed_forms_match_quadrature() {
        // The quadrature engine is the independent check for every closed
        // form (and the implementation for tabulated rates).
        let rates = [
            GrowthRate::Constant(0.8),
            GrowthRate::RationalDecay(0.3),
            GrowthRate::ExpDecay(1.0, 0.5),
            GrowthRate::ExpDecay(0.7, -0.2),
            GrowthRate::Seasonal(1.0),
        ];
        for rate in &rates {
            for &t in &[0.3, 1.0, 4.7] {
                let exact = rate.integral(t).unwrap();
                let quad = adaptive_simpson(&|tau| rate.eval(tau), 0.0, t);
                assert!(
                    (exact - quad).abs() <= 1e-9 * exact.abs().max(1.0),
                    "{rate} at t={t}: {exact} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn tabulated_integral_of_flat_table() {
        let g = GrowthRate::Tabulated(vec![(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]);
        assert!((g.integral(2.0).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn tabulated_eval_interpolates_and_extrapolates() {
        let g = GrowthRate::Tabulated(vec![(1.0, 2.0), (3.0, 4.0)]);
        assert_eq!(g.eval(0.0), 2.0);
        assert_eq!(g.eval(1.0), 2.0);
        assert_eq!(g.eval(2.0), 3.0);
        assert_eq!(g.eval(5.0), 4.0);
    }

    #[test]
    fn eval_s_logistic_case() {
        let p = params(2.0, 0.5, GrowthRate::Constant(1.0));
        assert_eq!(p.eval_s(0.0).unwrap(), 0.5);
        let t = 3.0f64.ln();
        assert!((p.eval_s(t).unwrap() - 0.75).abs() < 1e-10);
        assert!((p.eval_s(5.0).unwrap() - logistic(5.0)).abs() < 1e-10);
    }

    #[test]
    fn eval_s_vanishing_rate_limit() {
        // For mu -> 0+ the closed form degenerates to
        // [gamma^{1-alpha} + (alpha-1) t]^{1/(1-alpha)}; at alpha = 2,
        // gamma = 1 that is 1 / (1 + t).
        let p = params(2.0, 1.0, GrowthRate::Constant(1e-12));
        assert!((p.eval_s(1.0).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn eval_s_rejects_negative_time() {
        let p = params(2.0, 1.0, GrowthRate::Constant(1.0));
        assert!(matches!(p.eval_s(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn eval_s_is_positive_on_long_horizons() {
        for alpha in [2.0, 4.0] {
            for rate in [
                GrowthRate::Constant(1.0),
                GrowthRate::RationalDecay(0.3),
                GrowthRate::ExpDecay(1.0, 0.5),
                GrowthRate::Seasonal(1.0),
            ] {
                let p = params(alpha, 0.5, rate);
                for k in 0..=20 {
                    let t = k as f64 * 0.5;
                    let s = p.eval_s(t).unwrap();
                    assert!(s > 0.0 && s.is_finite());
                }
            }
        }
    }

    #[test]
    fn equilibrium_values() {
        assert_eq!(params(3.0, 1.0, GrowthRate::Constant(1.0)).equilibrium().unwrap(), 1.0);
        assert_eq!(params(2.0, 1.0, GrowthRate::Constant(4.0)).equilibrium().unwrap(), 4.0);
        let e = params(4.0, 1.0, GrowthRate::Constant(8.0)).equilibrium().unwrap();
        assert!((e - 2.0).abs() < 1e-12);
        assert!(matches!(
            params(2.0, 1.0, GrowthRate::Seasonal(1.0)).equilibrium(),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn constant_rate_converges_to_equilibrium_monotonically() {
        let p = params(3.0, 0.3, GrowthRate::Constant(2.0));
        let eq = p.equilibrium().unwrap();
        let mut prev_gap = f64::INFINITY;
        for k in 1..=16 {
            let t = k as f64 * 0.5;
            let gap = (p.eval_s(t).unwrap() - eq).abs();
            assert!(gap < prev_gap, "gap grew at t={t}");
            prev_gap = gap;
        }
        assert!((p.eval_s(50.0).unwrap() - eq).abs() < 1e-6);
    }

    #[test]
    fn rk4_start_is_exact() {
        let p = params(2.0, 0.7, GrowthRate::Constant(1.0));
        for dt in [1.0, 0.1, 1e-3] {
            assert_eq!(p.rk4_oracle(0.0, dt).unwrap(), 0.7);
        }
    }

    #[test]
    fn rk4_matches_logistic() {
        let p = params(2.0, 0.5, GrowthRate::Constant(1.0));
        let got = p.rk4_oracle(5.0, 1e-3).unwrap();
        assert!((got - logistic(5.0)).abs() < 1e-9);
    }

    #[test]
    fn rk4_decays_to_equilibrium_from_above() {
        let p = params(2.0, 2.0, GrowthRate::Constant(1.0));
        let ts: Vec<f64> = (1..=8).map(|k| k as f64).collect();
        let vals = p.rk4_oracle_samples(&ts, 1e-3).unwrap();
        let mut prev = 2.0;
        for v in &vals {
            assert!(*v > 1.0 && *v < prev);
            prev = *v;
        }
        assert!((vals[7] - 1.0) < 2e-3);
    }

    #[test]
    fn eval_s_agrees_with_rk4_for_every_preset() {
        // Coarse version of the full-grid oracle comparison.
        let rates = [
            GrowthRate::Constant(1.0),
            GrowthRate::RationalDecay(0.3),
            GrowthRate::ExpDecay(1.0, 0.5),
            GrowthRate::Seasonal(1.0),
            GrowthRate::Tabulated(vec![(0.0, 1.0), (2.0, 0.5), (5.0, 1.5), (10.0, 1.0)]),
        ];
        let ts: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        for rate in &rates {
            let p = params(2.0, 0.5, rate.clone());
            let oracle = p.rk4_oracle_samples(&ts, 1e-3).unwrap();
            for (t, want) in ts.iter().zip(&oracle) {
                let got = p.eval_s(*t).unwrap();
                let rel = (got - want).abs() / want.abs();
                assert!(rel < 1e-5, "{rate} at t={t}: rel error {rel:e}");
            }
        }
    }

    #[test]
    fn eval_s_satisfies_the_ode_residual() {
        // Centered difference of S against mu S - S^alpha, O(d^2) accurate.
        let d = 1e-5;
        for (alpha, rate) in [
            (2.0, GrowthRate::Constant(1.0)),
            (4.0, GrowthRate::RationalDecay(0.3)),
            (3.0, GrowthRate::Seasonal(1.0)),
        ] {
            let p = params(alpha, 0.8, rate);
            for &t in &[0.5, 2.0, 7.0] {
                let plus = p.eval_s(t + d).unwrap();
                let minus = p.eval_s(t - d).unwrap();
                let deriv = (plus - minus) / (2.0 * d);
                let s = p.eval_s(t).unwrap();
                let rhs = p.mu().eval(t) * s - apow(s, alpha);
                let rel = (deriv - rhs).abs() / rhs.abs().max(1e-3);
                assert!(rel < 1e-4, "alpha={alpha} t={t}: rel {rel:e}");
            }
        }
    }

    #[test]
    fn growth_rate_spec_parsing() {
        let ok: &[(&str, GrowthRate)] = &[
            ("constant:1.0", GrowthRate::Constant(1.0)),
            ("rational:0.3", GrowthRate::RationalDecay(0.3)),
            ("exp:1.0,0.5", GrowthRate::ExpDecay(1.0, 0.5)),
            ("seasonal:1.0", GrowthRate::Seasonal(1.0)),
        ];
        for (text, want) in ok {
            match text.parse::<GrowthRateSpec>().unwrap() {
                GrowthRateSpec::Inline(g) => assert_eq!(&g, want),
                other => panic!("unexpected {other:?}"),
            }
        }
        match "table:rates.csv".parse::<GrowthRateSpec>().unwrap() {
            GrowthRateSpec::Table(p) => assert_eq!(p, PathBuf::from("rates.csv")),
            other => panic!("unexpected {other:?}"),
        }

        for bad in [
            "", "constant", "constant:", "constant:abc", "constant:-1", "constant:inf",
            "exp:1.0", "exp:1.0,0.5,2", "wavelet:1.0", "table:",
        ] {
            assert!(bad.parse::<GrowthRateSpec>().is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn mu_table_parsing() {
        let text = "# comment\n0,1.0\n\n1.5, 2.0\n3,0.5\n";
        let samples = parse_mu_table(text).unwrap();
        assert_eq!(samples, vec![(0.0, 1.0), (1.5, 2.0), (3.0, 0.5)]);

        for bad in [
            "",
            "0\n",
            "0,1,2\n",
            "0,abc\n",
            "0,1\n0.5,-1\n",
            "1,1\n0.5,1\n",
            "0,nan\n",
            "-1,1\n",
        ] {
            assert!(parse_mu_table(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn running_max_presets() {
        assert_eq!(GrowthRate::Constant(0.7).running_max(5.0), 0.7);
        assert_eq!(GrowthRate::RationalDecay(0.3).running_max(2.0), 0.3);
        assert_eq!(GrowthRate::ExpDecay(1.0, 0.5).running_max(4.0), 1.0);
        // A negative decay rate grows, so the right endpoint dominates.
        let growing = GrowthRate::ExpDecay(1.0, -0.5);
        assert!((growing.running_max(2.0) - growing.eval(2.0)).abs() < 1e-15);
        assert_eq!(GrowthRate::Seasonal(1.3).running_max(0.1), 2.6);
        let tab = GrowthRate::Tabulated(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 0.5)]);
        assert_eq!(tab.running_max(1.5), 3.0);
        assert_eq!(tab.running_max(0.5), 2.0);
    }

    #[test]
    fn params_validation() {
        assert!(BernoulliParams::new(1.0, 1.0, GrowthRate::Constant(1.0)).is_err());
        assert!(BernoulliParams::new(2.0, 0.0, GrowthRate::Constant(1.0)).is_err());
        assert!(BernoulliParams::new(2.0, 1.0, GrowthRate::Constant(-1.0)).is_err());
    }
}
