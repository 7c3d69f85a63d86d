//! Explicit marching for dv/dt = lap(v^alpha) +/- mu(t) v, verification of
//! traces against comparison and separable-barrier bounds, and the
//! lagged-source monotone approximation scheme.

use crate::bernoulli::{BernoulliParams, GrowthRate};
use crate::elliptic::EllipticSolution;
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::num::{apow, frac_pow};

/// Sign of the zero-order term: Growth adds +mu v (the localization
/// theorems), Absorption subtracts it (the denoising flow).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SourceSign {
    Growth,
    Absorption,
}

/// Snapshots of one explicit march. `times[0]` is always 0 and the last
/// entry is the requested horizon verbatim; interior snapshots land on
/// multiples of `dt`.
#[derive(Clone, Debug)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub snapshots: Vec<Grid2D>,
    pub dt: f64,
    pub alpha: f64,
    pub mu: GrowthRate,
    pub sign: SourceSign,
}

impl EvolutionTrace {
    pub fn final_state(&self) -> &Grid2D {
        self.snapshots.last().expect("a trace is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a trace is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Largest stable explicit step for the current state: the diffusion term
/// linearizes to alpha v^{alpha-1} lap, so the usual h^2/4 heat bound
/// shrinks by that factor at the running maximum.
pub fn cfl_max_dt(v: &Grid2D, alpha: f64) -> f64 {
    let m = v.max_value().max(0.0);
    let h2 = v.h() * v.h();
    h2 / (4.0 * alpha * apow(m, alpha - 1.0) + 1e-12)
}

/// One explicit Euler step of dv/dt = lap(v^alpha) +/- mu(t) v at time t.
/// mu is frozen at the step start. The result is clipped below at zero,
/// which is exact for Growth under the CFL bound and protective against
/// rounding for Absorption.
pub fn step_explicit(
    v: &Grid2D,
    t: f64,
    dt: f64,
    alpha: f64,
    mu: &GrowthRate,
    sign: SourceSign,
) -> Result<Grid2D> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("step size must be positive, got {dt}")));
    }
    let bound = cfl_max_dt(v, alpha);
    if dt > bound {
        return Err(Error::StepTooLarge { dt, bound, t });
    }
    let w = v.map(|x| apow(x.max(0.0), alpha));
    let lap = w.laplacian();
    let mu_t = mu.eval(t);
    let rate = match sign {
        SourceSign::Growth => mu_t,
        SourceSign::Absorption => -mu_t,
    };
    let mut out = v.like();
    for ((ov, vv), lv) in out.data_mut().iter_mut().zip(v.data()).zip(lap.data()) {
        *ov = (vv + dt * (lv + rate * vv)).max(0.0);
    }
    Ok(out)
}

/// u^{1/alpha} elementwise: the spatial factor of a separable state
/// v = S(t) u^{1/alpha}. Entries below the rounding allowance are refused.
pub fn separable_profile(u: &Grid2D, alpha: f64) -> Result<Grid2D> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::Domain(format!("alpha must be >= 1, got {alpha}")));
    }
    let p = 1.0 / alpha;
    let mut out = u.like();
    for (ov, uv) in out.data_mut().iter_mut().zip(u.data()) {
        *ov = frac_pow(*uv, p)
            .ok_or_else(|| Error::Domain(format!("negative entry {uv:e} in profile")))?;
    }
    Ok(out)
}

/// Initial state between the separable barriers: gamma times the convex
/// combination (1 - p) sub^{1/alpha} + p sup^{1/alpha}.
pub fn blended_initial(
    sol: &EllipticSolution,
    params: &BernoulliParams,
    p_upper: f64,
) -> Result<Grid2D> {
    if !(0.0..=1.0).contains(&p_upper) {
        return Err(Error::Domain(format!("blend weight must be in [0, 1], got {p_upper}")));
    }
    let alpha = params.alpha();
    let lo = separable_profile(&sol.sub, alpha)?;
    let hi = separable_profile(&sol.sup, alpha)?;
    let gamma = params.gamma();
    let mut out = lo.like();
    for ((ov, lv), hv) in out.data_mut().iter_mut().zip(lo.data()).zip(hi.data()) {
        *ov = gamma * ((1.0 - p_upper) * lv + p_upper * hv);
    }
    Ok(out)
}

/// The separable state S(t) u^{1/alpha} at time t.
pub fn separable_solution(u: &Grid2D, params: &BernoulliParams, t: f64) -> Result<Grid2D> {
    let s = params.eval_s(t)?;
    let prof = separable_profile(u, params.alpha())?;
    Ok(prof.map(|v| s * v))
}

/// Marches v0 to time `t_final` with uniform steps `dt` (plus one shortened
/// final step when dt does not divide the horizon). Snapshots are kept at
/// t = 0, every `snapshot_every`-th step, and the final time. A failure
/// mid-march reports the step and keeps the partial trace.
pub fn evolve(
    v0: &Grid2D,
    alpha: f64,
    mu: &GrowthRate,
    sign: SourceSign,
    t_final: f64,
    dt: f64,
    snapshot_every: usize,
) -> Result<EvolutionTrace> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::Domain(format!("alpha must be >= 1, got {alpha}")));
    }
    mu.validate()?;
    if v0.min_value() < 0.0 {
        return Err(Error::Domain("initial state must be nonnegative".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("step size must be positive, got {dt}")));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::Domain(format!("horizon must be >= 0, got {t_final}")));
    }
    if snapshot_every == 0 {
        return Err(Error::Domain("snapshot interval must be at least 1".into()));
    }

    let mut trace = EvolutionTrace {
        times: vec![0.0],
        snapshots: vec![v0.clone()],
        dt,
        alpha,
        mu: mu.clone(),
        sign,
    };
    if t_final == 0.0 {
        return Ok(trace);
    }

    let steps_exact = t_final / dt;
    if steps_exact > 1e9 {
        return Err(Error::Domain("step size is too small for the horizon".into()));
    }
    let n_full = steps_exact.floor() as usize;
    let mut rem = t_final - n_full as f64 * dt;
    if rem < dt * 1e-12 {
        rem = 0.0;
    }

    let mut v = v0.clone();
    for k in 1..=n_full {
        let t_prev = (k - 1) as f64 * dt;
        match step_explicit(&v, t_prev, dt, alpha, mu, sign) {
            Ok(next) => v = next,
            Err(e) => {
                return Err(Error::Aborted {
                    step: k,
                    t: t_prev,
                    source: Box::new(e),
                    partial: Box::new(trace),
                })
            }
        }
        let is_last = k == n_full && rem == 0.0;
        if k % snapshot_every == 0 && !is_last {
            trace.times.push(k as f64 * dt);
            trace.snapshots.push(v.clone());
        }
    }
    if rem > 0.0 {
        let t_prev = n_full as f64 * dt;
        match step_explicit(&v, t_prev, rem, alpha, mu, sign) {
            Ok(next) => v = next,
            Err(e) => {
                return Err(Error::Aborted {
                    step: n_full + 1,
                    t: t_prev,
                    source: Box::new(e),
                    partial: Box::new(trace),
                })
            }
        }
    }
    trace.times.push(t_final);
    trace.snapshots.push(v);
    Ok(trace)
}

/// Ordering verdict for two traces expected to satisfy lower <= upper.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    /// Largest value of (lower - upper) over all snapshots and points.
    pub max_violation: f64,
    pub worst_time: f64,
    pub worst_point: (usize, usize),
    pub passed: bool,
}

/// Discrete comparison holds to rounding, so violations beyond this are a
/// genuine ordering failure.
pub const COMPARISON_TOL: f64 = 1e-10;

/// Checks lower <= upper snapshot by snapshot. The traces must share the
/// grid, the snapshot times, the exponent, the sign, and the step; the
/// initial states must already be ordered and the growth rates ordered at
/// every snapshot time, otherwise the comparison premise does not apply
/// and the inputs are rejected.
pub fn verify_comparison(
    lower: &EvolutionTrace,
    upper: &EvolutionTrace,
) -> Result<ComparisonReport> {
    if lower.is_empty() || upper.is_empty() {
        return Err(Error::Rejected("empty trace".into()));
    }
    if !lower.snapshots[0].same_shape(&upper.snapshots[0]) {
        return Err(Error::Rejected("traces live on different grids".into()));
    }
    if lower.times != upper.times {
        return Err(Error::Rejected("traces have different snapshot times".into()));
    }
    if lower.alpha != upper.alpha {
        return Err(Error::Rejected("traces have different exponents".into()));
    }
    if lower.sign != upper.sign {
        return Err(Error::Rejected("traces have different source signs".into()));
    }
    if lower.snapshots[0].max_signed_diff(&upper.snapshots[0])? > 0.0 {
        return Err(Error::Rejected("initial states are not ordered".into()));
    }
    for &t in &lower.times {
        if lower.mu.eval(t) > upper.mu.eval(t) + 1e-12 {
            return Err(Error::Rejected(format!("growth rates are not ordered at t = {t}")));
        }
    }

    let nx = lower.snapshots[0].nx();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    let mut worst_point = (0, 0);
    for (t, (lo, hi)) in lower.times.iter().zip(lower.snapshots.iter().zip(&upper.snapshots)) {
        for (k, (lv, hv)) in lo.data().iter().zip(hi.data()).enumerate() {
            let gap = lv - hv;
            if gap > max_violation {
                max_violation = gap;
                worst_time = *t;
                worst_point = (k % nx, k / nx);
            }
        }
    }
    Ok(ComparisonReport {
        max_violation,
        worst_time,
        worst_point,
        passed: max_violation <= COMPARISON_TOL,
    })
}

/// Verdict of the separable-barrier check S(t) sub^{1/a} <= v <= S(t) sup^{1/a}.
#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub max_lower_violation: f64,
    pub worst_lower_time: f64,
    pub worst_lower_point: (usize, usize),
    pub max_upper_violation: f64,
    pub worst_upper_time: f64,
    pub worst_upper_point: (usize, usize),
    pub passed: bool,
}

/// The barriers are continuum-tight but the march carries O(dt + h^2)
/// noise only in its favor; violations beyond this are real.
pub const SANDWICH_TOL: f64 = 1e-8;

/// Checks every snapshot of `trace` against the separable barriers built
/// from `sol`, scaled by S(t) from `params`. The trace must be a Growth
/// march with matching exponent and rate, started between the barriers.
pub fn verify_sandwich(
    trace: &EvolutionTrace,
    sol: &EllipticSolution,
    params: &BernoulliParams,
) -> Result<SandwichReport> {
    if trace.is_empty() {
        return Err(Error::Rejected("empty trace".into()));
    }
    if trace.sign != SourceSign::Growth {
        return Err(Error::Rejected("barrier bounds apply to the growth sign only".into()));
    }
    if trace.alpha != params.alpha() {
        return Err(Error::Rejected("trace and parameters disagree on alpha".into()));
    }
    if &trace.mu != params.mu() {
        return Err(Error::Rejected("trace and parameters disagree on the growth rate".into()));
    }
    if !trace.snapshots[0].same_shape(&sol.u) {
        return Err(Error::Rejected("trace and elliptic solution live on different grids".into()));
    }
    let alpha = params.alpha();
    let lo = separable_profile(&sol.sub, alpha)?;
    let hi = separable_profile(&sol.sup, alpha)?;
    let gamma = params.gamma();
    let v0 = &trace.snapshots[0];
    for ((vv, lv), hv) in v0.data().iter().zip(lo.data()).zip(hi.data()) {
        if gamma * lv - vv > 1e-12 || vv - gamma * hv > 1e-12 {
            return Err(Error::Rejected(
                "initial state does not start between the barriers".into(),
            ));
        }
    }

    let nx = v0.nx();
    let mut low_v = f64::NEG_INFINITY;
    let mut up_v = f64::NEG_INFINITY;
    let mut low_at = (0.0, (0, 0));
    let mut up_at = (0.0, (0, 0));
    for (t, snap) in trace.times.iter().zip(&trace.snapshots) {
        let s = params.eval_s(*t)?;
        for (k, ((vv, lv), hv)) in snap.data().iter().zip(lo.data()).zip(hi.data()).enumerate() {
            let below = s * lv - vv;
            if below > low_v {
                low_v = below;
                low_at = (*t, (k % nx, k / nx));
            }
            let above = vv - s * hv;
            if above > up_v {
                up_v = above;
                up_at = (*t, (k % nx, k / nx));
            }
        }
    }
    Ok(SandwichReport {
        max_lower_violation: low_v,
        worst_lower_time: low_at.0,
        worst_lower_point: low_at.1,
        max_upper_violation: up_v,
        worst_upper_time: up_at.0,
        worst_upper_point: up_at.1,
        passed: low_v <= SANDWICH_TOL && up_v <= SANDWICH_TOL,
    })
}

/// Outcome of the lagged-source monotone scheme: two full trajectories
/// squeezing the solution, with their convergence diagnostics.
#[derive(Clone, Debug)]
pub struct MonotoneResult {
    pub lower: EvolutionTrace,
    pub upper: EvolutionTrace,
    pub iterations_lower: usize,
    pub iterations_upper: usize,
    pub gap_history_lower: Vec<f64>,
    pub gap_history_upper: Vec<f64>,
    /// Largest step of either chain against its proven direction.
    pub lower_monotonicity_defect: f64,
    pub upper_monotonicity_defect: f64,
    /// Largest value of (lower - upper) after convergence.
    pub max_cross_gap: f64,
    /// Sup distance between the converged chains.
    pub final_sup_gap: f64,
}

/// Iterates v^{m}_{n+1} = v_n + dt (lap (v_n)^alpha - c_n v_n
/// + (c_n + mu_n) v^{m-1}_n) with c_n the running max of mu, starting the
/// chains from the separable barrier trajectories. Each sweep solves a
/// linear-in-time problem with the previous sweep as source; the chains
/// approach the explicit march of the full equation monotonically from
/// both sides.
pub fn monotone_iterate(
    v0: &Grid2D,
    t_final: f64,
    dt: f64,
    sol: &EllipticSolution,
    params: &BernoulliParams,
    m_max: usize,
    tol: f64,
) -> Result<MonotoneResult> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {t_final}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("step size must be positive, got {dt}")));
    }
    if m_max == 0 {
        return Err(Error::Domain("need at least one sweep".into()));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !v0.same_shape(&sol.u) {
        return Err(Error::Rejected("initial state and elliptic solution disagree".into()));
    }
    if v0.min_value() < 0.0 {
        return Err(Error::Domain("initial state must be nonnegative".into()));
    }
    let alpha = params.alpha();
    let gamma = params.gamma();
    let mu = params.mu();
    let lo_prof = separable_profile(&sol.sub, alpha)?;
    let hi_prof = separable_profile(&sol.sup, alpha)?;
    for ((vv, lv), hv) in v0.data().iter().zip(lo_prof.data()).zip(hi_prof.data()) {
        if gamma * lv - vv > 1e-12 || vv - gamma * hv > 1e-12 {
            return Err(Error::Rejected(
                "initial state does not start between the barriers".into(),
            ));
        }
    }

    // uniform steps plus an optional shortened final one
    let steps_exact = t_final / dt;
    if steps_exact > 1e7 {
        return Err(Error::Domain("step size is too small for the horizon".into()));
    }
    let n_full = steps_exact.floor() as usize;
    let mut rem = t_final - n_full as f64 * dt;
    if rem < dt * 1e-12 {
        rem = 0.0;
    }
    let mut steps: Vec<(f64, f64)> = (0..n_full).map(|n| (n as f64 * dt, dt)).collect();
    if rem > 0.0 {
        steps.push((n_full as f64 * dt, rem));
    }
    let mut times: Vec<f64> = Vec::with_capacity(steps.len() + 1);
    times.push(0.0);
    for n in 1..steps.len() {
        times.push(n as f64 * dt);
    }
    times.push(t_final);

    let s_vals: Result<Vec<f64>> = times.iter().map(|&t| params.eval_s(t)).collect();
    let s_vals = s_vals?;

    let seed = |prof: &Grid2D| -> Vec<Grid2D> {
        s_vals.iter().map(|&s| prof.map(|v| s * v)).collect()
    };

    let h2 = v0.h() * v0.h();
    let march = |prev: &[Grid2D]| -> Result<Vec<Grid2D>> {
        let mut out = Vec::with_capacity(steps.len() + 1);
        out.push(v0.clone());
        let mut v = v0.clone();
        for (n, &(t_n, dt_n)) in steps.iter().enumerate() {
            let c_n = mu.running_max(t_n);
            let m = v.max_value().max(0.0);
            let bound = 1.0 / (4.0 * alpha * apow(m, alpha - 1.0) / h2 + c_n);
            if dt_n > bound {
                return Err(Error::StepTooLarge { dt: dt_n, bound, t: t_n });
            }
            let w = v.map(|x| apow(x.max(0.0), alpha));
            let lap = w.laplacian();
            let mu_n = mu.eval(t_n);
            let g = &prev[n];
            let mut next = v.like();
            for (((ov, vv), lv), gv) in
                next.data_mut().iter_mut().zip(v.data()).zip(lap.data()).zip(g.data())
            {
                *ov = (vv + dt_n * (lv - c_n * vv + (c_n + mu_n) * gv)).max(0.0);
            }
            out.push(next.clone());
            v = next;
        }
        Ok(out)
    };

    // expected monotone direction: +1 for the lower chain, -1 for upper
    let run_chain = |prof: &Grid2D, upward: bool| -> Result<(Vec<Grid2D>, usize, Vec<f64>, f64)> {
        let mut prev = seed(prof);
        let mut gaps: Vec<f64> = Vec::new();
        let mut defect = 0.0f64;
        for m in 1..=m_max {
            let cur = march(&prev)?;
            let mut gap = 0.0f64;
            for (c, p) in cur.iter().zip(&prev) {
                gap = gap.max(c.max_abs_diff(p)?);
                let wrong = if upward { p.max_signed_diff(c)? } else { c.max_signed_diff(p)? };
                defect = defect.max(wrong);
            }
            gaps.push(gap);
            prev = cur;
            if gap < tol {
                return Ok((prev, m, gaps, defect.max(0.0)));
            }
        }
        let last = *gaps.last().unwrap_or(&f64::NAN);
        Err(Error::NoConvergence { iterations: m_max, last, history: gaps })
    };

    let (lower_snaps, it_lo, gaps_lo, defect_lo) = run_chain(&lo_prof, true)?;
    let (upper_snaps, it_hi, gaps_hi, defect_hi) = run_chain(&hi_prof, false)?;

    let mut cross = f64::NEG_INFINITY;
    let mut width = 0.0f64;
    for (lo, hi) in lower_snaps.iter().zip(&upper_snaps) {
        cross = cross.max(lo.max_signed_diff(hi)?);
        width = width.max(lo.max_abs_diff(hi)?);
    }

    let mk_trace = |snaps: Vec<Grid2D>| EvolutionTrace {
        times: times.clone(),
        snapshots: snaps,
        dt,
        alpha,
        mu: mu.clone(),
        sign: SourceSign::Growth,
    };
    Ok(MonotoneResult {
        lower: mk_trace(lower_snaps),
        upper: mk_trace(upper_snaps),
        iterations_lower: it_lo,
        iterations_upper: it_hi,
        gap_history_lower: gaps_lo,
        gap_history_upper: gaps_hi,
        lower_monotonicity_defect: defect_lo,
        upper_monotonicity_defect: defect_hi,
        max_cross_gap: cross,
        final_sup_gap: width,
    })
}
