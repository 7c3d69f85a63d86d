//! Elliptic solves on the rectangle with zero Dirichlet data: Poisson via
//! conjugate gradients, the torsion function, the principal eigenpair, and
//! the sublinear problem -lap u = u^{1/alpha} by monotone Picard iteration
//! squeezed between an eigenfunction subsolution and a torsion
//! supersolution.

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid2D};
use crate::num::frac_pow;

/// Principal Dirichlet eigenpair of the five-point -laplacian.
/// `phi1` is positive and normalized to max = 1 (exactly, by division).
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda1: f64,
    pub phi1: Grid2D,
    pub iterations: usize,
    /// Achieved sup norm of A phi - lambda phi.
    pub residual: f64,
}

/// Which end of the barrier interval the Picard iteration starts from.
/// Both converge to the same solution; starting low gives an increasing
/// chain, starting high a decreasing one.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum IterationStart {
    Subsolution,
    Supersolution,
}

/// Solution of -lap u = u^{1/alpha}, u = 0 on the boundary, together with
/// the barriers that bracket it and diagnostics of the iteration chain.
#[derive(Clone, Debug)]
pub struct EllipticSolution {
    pub u: Grid2D,
    /// sigma * phi1, a subsolution.
    pub sub: Grid2D,
    /// c * w, a supersolution.
    pub sup: Grid2D,
    pub sigma: f64,
    pub c: f64,
    pub lambda1: f64,
    pub iterations: usize,
    /// Semilinear residual after each Picard update.
    pub residual_history: Vec<f64>,
    /// Largest step against the expected monotone direction, over all
    /// iterates and points. Rounding-level for a correct run.
    pub chain_monotonicity_defect: f64,
    /// Largest excursion of any iterate past the opposite barrier.
    pub chain_barrier_excess: f64,
}

const RESIDUAL_HISTORY_KEEP: usize = 16;
const EIGEN_CAP: usize = 10_000;

fn push_capped(history: &mut Vec<f64>, v: f64) {
    if history.len() == RESIDUAL_HISTORY_KEEP {
        history.remove(0);
    }
    history.push(v);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

fn neg_laplacian(g: &Grid2D) -> Grid2D {
    let mut l = g.laplacian();
    for v in l.data_mut() {
        *v = -*v;
    }
    l
}

/// b - A x for A = -lap with zero Dirichlet data.
fn true_residual(b: &Grid2D, x: &Grid2D) -> Grid2D {
    let ax = neg_laplacian(x);
    let mut r = b.clone();
    for (rv, av) in r.data_mut().iter_mut().zip(ax.data()) {
        *rv -= av;
    }
    r
}

/// Smallest true-residual tolerance CG can reliably reach in f64 for a
/// solution of sup norm around `xscale`: a few ulps of ||A|| * ||x||.
fn cg_floor(h: f64, xscale: f64) -> f64 {
    8.0 * f64::EPSILON * xscale / (h * h)
}

/// Solves -lap x = rhs with zero Dirichlet data by Jacobi-preconditioned
/// conjugate gradients. Stops once the TRUE residual b - A x has sup norm
/// below max(tol, 1e-14 ||b||); the recurrence residual alone is not
/// trusted. Dot products are accumulated sequentially so results are
/// reproducible run to run.
pub fn solve_poisson(rhs: &Grid2D, tol: f64) -> Result<Grid2D> {
    if rhs.bc() != Boundary::DirichletZero {
        return Err(Error::Unsupported(
            "poisson solve requires zero Dirichlet boundaries".into(),
        ));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("solver tolerance must be positive, got {tol}")));
    }
    let b_norm = rhs.norm_inf();
    let mut x = rhs.like();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let tol_eff = tol.max(1e-14 * b_norm);
    let n = rhs.data().len();
    let cap = n.saturating_mul(10);
    let jacobi = rhs.h() * rhs.h() / 4.0;

    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.data().iter().map(|v| v * jacobi).collect();
    let mut p = rhs.like();
    p.data_mut().copy_from_slice(&z);
    let mut rz = dot(r.data(), &z);
    let mut history: Vec<f64> = Vec::new();
    let mut iters = 0usize;

    loop {
        let rn = r.norm_inf();
        push_capped(&mut history, rn);
        if rn < tol_eff {
            let rt = true_residual(rhs, &x);
            if rt.norm_inf() < tol_eff {
                return Ok(x);
            }
            // recurrence drifted; restart from the true residual
            r = rt;
            for (zv, rv) in z.iter_mut().zip(r.data()) {
                *zv = rv * jacobi;
            }
            p.data_mut().copy_from_slice(&z);
            rz = dot(r.data(), &z);
        }
        if iters >= cap {
            return Err(Error::NoConvergence { iterations: iters, last: rn, history });
        }
        let ap = neg_laplacian(&p);
        let pap = dot(p.data(), ap.data());
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(Error::NoConvergence { iterations: iters, last: rn, history });
        }
        let step = rz / pap;
        for (xv, pv) in x.data_mut().iter_mut().zip(p.data()) {
            *xv += step * pv;
        }
        for (rv, av) in r.data_mut().iter_mut().zip(ap.data()) {
            *rv -= step * av;
        }
        for (zv, rv) in z.iter_mut().zip(r.data()) {
            *zv = rv * jacobi;
        }
        let rz_new = dot(r.data(), &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pv, zv) in p.data_mut().iter_mut().zip(&z) {
            *pv = zv + beta * *pv;
        }
        iters += 1;
    }
}

/// Torsion function: -lap w = 1 with zero Dirichlet data.
pub fn torsion(nx: usize, ny: usize, h: f64, tol: f64) -> Result<Grid2D> {
    let one = Grid2D::constant(nx, ny, h, Boundary::DirichletZero, 1.0)?;
    solve_poisson(&one, tol)
}

/// Sup norm of -lap u - u^{1/alpha}. Entries below a small negative
/// rounding allowance are a domain error.
pub fn residual(u: &Grid2D, alpha: f64) -> Result<f64> {
    if u.bc() != Boundary::DirichletZero {
        return Err(Error::Unsupported("semilinear residual requires Dirichlet data".into()));
    }
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::Domain(format!("alpha must be > 1, got {alpha}")));
    }
    let p = 1.0 / alpha;
    let lap = u.laplacian();
    let mut worst = 0.0f64;
    for (uv, lv) in u.data().iter().zip(lap.data()) {
        let f = frac_pow(*uv, p).ok_or_else(|| {
            Error::Domain(format!("negative entry {uv:e} in semilinear residual"))
        })?;
        worst = worst.max((-lv - f).abs());
    }
    Ok(worst)
}

/// Principal eigenpair by inverse power iteration (each step one CG solve)
/// with Rayleigh-quotient eigenvalue estimates.
///
/// The Rayleigh quotient converges roughly twice as fast as the
/// eigenvector, so the stop requires both a settled eigenvalue and a small
/// eigenresidual ||A phi - lambda phi||. The residual target is floored at
/// a multiple of the inner CG tolerance: below that the solves themselves
/// are the noise. If the residual plateaus there while lambda is settled,
/// the pair is accepted with the achieved residual reported.
pub fn principal_eigenpair(nx: usize, ny: usize, h: f64, tol: f64) -> Result<EigenPair> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("eigen tolerance must be positive, got {tol}")));
    }
    // the normalized iterate has sup norm 1; its preimage about 1/lambda
    let cg_tol = (0.1 * tol).max(2.0 * cg_floor(h, 0.1));
    let mut x = Grid2D::constant(nx, ny, h, Boundary::DirichletZero, 1.0)?;
    let mut lambda_prev = f64::INFINITY;
    let mut best_res = f64::INFINITY;
    let mut stall = 0usize;
    let mut history: Vec<f64> = Vec::new();

    for iter in 1..=EIGEN_CAP {
        let y = solve_poisson(&x, cg_tol)?;
        let m = y.max_value();
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::NoConvergence {
                iterations: iter,
                last: best_res,
                history,
            });
        }
        let phi = y.map(|v| v / m);
        let a_phi = neg_laplacian(&phi);
        let lambda = dot(phi.data(), a_phi.data()) / dot(phi.data(), phi.data());
        let mut eigres = 0.0f64;
        for (av, pv) in a_phi.data().iter().zip(phi.data()) {
            eigres = eigres.max((av - lambda * pv).abs());
        }
        push_capped(&mut history, eigres);
        if eigres < 0.99 * best_res {
            best_res = eigres;
            stall = 0;
        } else {
            stall += 1;
        }
        let lambda_settled = (lambda - lambda_prev).abs() < tol * lambda.abs().max(1.0);
        let res_target = (tol * lambda.abs().max(1.0)).max(60.0 * cg_tol);
        if lambda_settled && (eigres <= res_target || stall >= 25) {
            return Ok(EigenPair { lambda1: lambda, phi1: phi, iterations: iter, residual: eigres });
        }
        lambda_prev = lambda;
        x = phi;
    }
    Err(Error::NoConvergence { iterations: EIGEN_CAP, last: best_res, history })
}

/// Constants that make sigma phi_1 a subsolution and c w a supersolution
/// of -lap u = u^{1/alpha} with sigma phi_1 <= c w pointwise:
///
///   sigma = lambda_1^{-alpha/(alpha-1)} / max phi_1,
///   c     = max(sigma lambda_1 max phi_1, (max w)^{1/(alpha-1)}).
///
/// The first term in c dominates sigma phi_1 through phi_1 <= lambda_1
/// (max phi_1) w; the second makes c w a supersolution. Both comparisons
/// are tight at the respective maxima.
pub fn barrier_constants(lambda1: f64, max_phi: f64, max_w: f64, alpha: f64) -> (f64, f64) {
    debug_assert!(lambda1 > 0.0 && max_phi > 0.0 && max_w > 0.0 && alpha > 1.0);
    let beta = alpha - 1.0;
    let sigma = 1.0 / (lambda1.powf(alpha / beta) * max_phi);
    let c = (sigma * lambda1 * max_phi).max(max_w.powf(1.0 / beta));
    (sigma, c)
}

/// Solves -lap u = u^{1/alpha} with zero Dirichlet data, starting the
/// Picard chain from the subsolution.
pub fn solve_brezis_oswald(
    nx: usize,
    ny: usize,
    h: f64,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EllipticSolution> {
    solve_brezis_oswald_directed(nx, ny, h, alpha, tol, max_iter, IterationStart::Subsolution)
}

/// Picard iteration u_{k+1} = A^{-1}(u_k^{1/alpha}) between the barriers.
/// Stops when both the step sup norm and the semilinear residual are below
/// `tol`; the residual bound is what the caller can rely on.
pub fn solve_brezis_oswald_directed(
    nx: usize,
    ny: usize,
    h: f64,
    alpha: f64,
    tol: f64,
    max_iter: usize,
    start: IterationStart,
) -> Result<EllipticSolution> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::Domain(format!("alpha must be > 1, got {alpha}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    let eig = principal_eigenpair(nx, ny, h, 1e-12)?;
    let w = torsion(nx, ny, h, 1e-12)?;
    let (sigma, c) = barrier_constants(eig.lambda1, eig.phi1.max_value(), w.max_value(), alpha);
    let sub = eig.phi1.map(|v| sigma * v);
    let sup = w.map(|v| c * v);

    // the iterates live inside [0, c max w], which sets the attainable
    // accuracy of the inner solves
    let cg_tol = (0.1 * tol).min(1e-12).max(2.0 * cg_floor(h, c * w.max_value()));
    let p = 1.0 / alpha;
    let mut u = match start {
        IterationStart::Subsolution => sub.clone(),
        IterationStart::Supersolution => sup.clone(),
    };
    let mut residual_history: Vec<f64> = Vec::new();
    let mut chain_mono = 0.0f64;
    let mut chain_excess = 0.0f64;

    for iter in 1..=max_iter {
        let mut rhs = u.like();
        for (rv, uv) in rhs.data_mut().iter_mut().zip(u.data()) {
            *rv = frac_pow(*uv, p)
                .ok_or_else(|| Error::Domain(format!("iterate entry {uv:e} went negative")))?;
        }
        let next = solve_poisson(&rhs, cg_tol)?;
        match start {
            IterationStart::Subsolution => {
                chain_mono = chain_mono.max(u.max_signed_diff(&next)?);
                chain_excess = chain_excess.max(next.max_signed_diff(&sup)?);
            }
            IterationStart::Supersolution => {
                chain_mono = chain_mono.max(next.max_signed_diff(&u)?);
                chain_excess = chain_excess.max(sub.max_signed_diff(&next)?);
            }
        }
        let delta = next.max_abs_diff(&u)?;
        let res = residual(&next, alpha)?;
        residual_history.push(res);
        u = next;
        if delta < tol && res < tol {
            return Ok(EllipticSolution {
                u,
                sub,
                sup,
                sigma,
                c,
                lambda1: eig.lambda1,
                iterations: iter,
                residual_history,
                chain_monotonicity_defect: chain_mono.max(0.0),
                chain_barrier_excess: chain_excess.max(0.0),
            });
        }
    }
    let last = residual_history.last().copied().unwrap_or(f64::NAN);
    let keep = residual_history.len().saturating_sub(RESIDUAL_HISTORY_KEEP);
    Err(Error::NoConvergence {
        iterations: max_iter,
        last,
        history: residual_history.split_off(keep),
    })
}
