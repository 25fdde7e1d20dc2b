//! First Dirichlet eigenpairs of the five-point Laplacian on cell masks.
//!
//! Zero boundary values sit on the faces between mask and non-mask cells, so
//! grid-aligned boundaries are resolved to second order and two masks that
//! share a face never overlap. The discrete Dirichlet energy of a grid
//! function `f` on a mask is
//!
//! ```text
//! E(f) = Σ_{mask edges} (f_p − f_q)²  +  Σ_{boundary faces} 2 f_p²
//! ```
//!
//! (the boundary term is the half-cell difference `f_p − 0` over distance
//! `h/2`), and the L² norm is `Σ f² h²`. Eigenpairs are computed by inverse
//! power iteration with zero shift; each linear solve is a MIC(0)
//! preconditioned conjugate-gradient run on the masked operator.

use std::f64::consts::PI;

use crate::grid::{GridDomain, SubdomainMask};
use crate::solver::{dot, norm, MaskedLaplacian};
use crate::{Error, Result, BESSEL_J0_FIRST_ZERO};

/// Default relative eigen-residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-7;
/// CG step cap per linear solve.
pub const MAX_CG_ITERS: usize = 10_000;
/// Inverse-iteration step cap.
pub const MAX_INVERSE_ITERS: usize = 2_000;

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// First Dirichlet eigenvalue.
    pub lambda1: f64,
    /// Nonnegative eigenfunction on the full grid with `Σ u² h² = 1`; zero off the mask.
    pub eigfn: Vec<f64>,
    /// Inverse-iteration steps.
    pub iterations: usize,
    /// Total CG steps over all linear solves.
    pub cg_iterations: usize,
    /// Final relative residual `‖Au − λu‖ / (λ‖u‖)`.
    pub residual: f64,
}

/// Eigenpair in the compact ordering of a [`MaskedLaplacian`].
pub(crate) struct CompactEigen {
    pub lambda1: f64,
    /// Normalized so that `Σ u² h² = 1`.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub cg_iterations: usize,
    pub residual: f64,
}

fn default_guess(nx: usize, cells: &[usize]) -> Vec<f64> {
    let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
    for &c in cells {
        imin = imin.min(c % nx);
        imax = imax.max(c % nx);
        jmin = jmin.min(c / nx);
        jmax = jmax.max(c / nx);
    }
    let (w, hh) = ((imax - imin + 1) as f64, (jmax - jmin + 1) as f64);
    cells
        .iter()
        .map(|&c| {
            let x = ((c % nx - imin) as f64 + 0.5) / w;
            let y = ((c / nx - jmin) as f64 + 0.5) / hh;
            (PI * x).sin() * (PI * y).sin()
        })
        .collect()
}

fn residual_of(op: &MaskedLaplacian, x: &[f64], ax: &mut [f64]) -> (f64, f64) {
    op.apply(x, ax);
    let xx = dot(x, x);
    let lam = dot(x, ax) / xx;
    let r: f64 = ax.iter().zip(x).map(|(a, v)| (a - lam * v).powi(2)).sum::<f64>().sqrt();
    (lam, r / (lam * xx.sqrt()))
}

/// Inverse iteration on the compact operator; `lambda` is returned in
/// physical units (`/h²`).
pub(crate) fn solve_compact(op: &MaskedLaplacian, nx: usize, h: f64, tol: f64, warm: Option<Vec<f64>>) -> Result<CompactEigen> {
    let n = op.len();
    if n == 0 {
        return Err(Error::EmptySubdomain);
    }
    let mut x = match warm {
        Some(w) if w.len() == n && w.iter().any(|v| *v > 0.0) => w.into_iter().map(|v| v.max(0.0)).collect(),
        _ => default_guess(nx, op.cells()),
    };
    let s = 1.0 / norm(&x);
    x.iter_mut().for_each(|v| *v *= s);
    let mut ax = vec![0.0; n];
    let (mut lam, mut res) = residual_of(op, &x, &mut ax);
    let mut best = res;
    let mut iterations = 0;
    let mut cg_iterations = 0;
    let mut y = vec![0.0; n];
    while res > tol {
        if iterations >= MAX_INVERSE_ITERS {
            return Err(Error::NoConvergence { iterations, best_residual: best });
        }
        for (yk, xk) in y.iter_mut().zip(&x) {
            *yk = xk / lam;
        }
        let eta = (0.05 * res).max(1e-14);
        let out = op.pcg(&x, &mut y, eta, MAX_CG_ITERS);
        cg_iterations += out.iterations;
        if !out.converged {
            return Err(Error::NoConvergence { iterations: iterations + 1, best_residual: best });
        }
        let s = 1.0 / norm(&y);
        for (xk, yk) in x.iter_mut().zip(&y) {
            *xk = yk * s;
        }
        (lam, res) = residual_of(op, &x, &mut ax);
        best = best.min(res);
        iterations += 1;
    }
    // positive sign, clear round-off negatives, h²-weighted unit norm
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let s = 1.0 / (norm(&x) * h);
    x.iter_mut().for_each(|v| *v *= s);
    (lam, res) = residual_of(op, &x, &mut ax);
    Ok(CompactEigen { lambda1: lam / (h * h), values: x, iterations, cg_iterations, residual: res })
}

pub(crate) fn expand(len: usize, cells: &[usize], values: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; len];
    for (&c, &v) in cells.iter().zip(values) {
        full[c] = v;
    }
    full
}

/// First Dirichlet eigenpair of the masked Laplacian.
///
/// `tol` bounds the relative residual `‖Au − λu‖/(λ‖u‖)` and must lie in `(0, 1e-3]`.
pub fn first_eigenpair(domain: &GridDomain, mask: &SubdomainMask, tol: f64) -> Result<EigenResult> {
    first_eigenpair_warm(domain, mask, tol, None)
}

/// Like [`first_eigenpair`], starting inverse iteration from `warm` (a full-grid function).
pub fn first_eigenpair_warm(
    domain: &GridDomain,
    mask: &SubdomainMask,
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<EigenResult> {
    if mask.parent() != domain.id() {
        return Err(Error::DomainMismatch);
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} outside (0, 1e-3]")));
    }
    if mask.is_empty() {
        return Err(Error::EmptySubdomain);
    }
    let cells: Vec<usize> = mask.indices().collect();
    let warm = warm.map(|w| cells.iter().map(|&c| w[c]).collect());
    let op = MaskedLaplacian::new(domain.nx(), cells);
    let e = solve_compact(&op, domain.nx(), domain.h(), tol, warm)?;
    Ok(EigenResult {
        lambda1: e.lambda1,
        eigfn: expand(domain.len(), op.cells(), &e.values),
        iterations: e.iterations,
        cg_iterations: e.cg_iterations,
        residual: e.residual,
    })
}

/// Discrete Dirichlet energy `∫|∇f|²` of `f` restricted to `mask`.
pub fn dirichlet_energy(domain: &GridDomain, f: &[f64], mask: &SubdomainMask) -> f64 {
    let mut e = 0.0;
    for p in mask.indices() {
        let fp = f[p];
        for (dir, q) in domain.neighbors(p).into_iter().enumerate() {
            match q {
                Some(q) if mask.contains(q) => {
                    // count each interior edge once, from its west/south end
                    if dir == 1 || dir == 3 {
                        e += (fp - f[q]).powi(2);
                    }
                }
                _ => e += 2.0 * fp * fp,
            }
        }
    }
    e
}

/// Discrete `∫ f²` over `mask`.
pub fn l2_norm_sq(domain: &GridDomain, f: &[f64], mask: &SubdomainMask) -> f64 {
    mask.indices().map(|p| f[p] * f[p]).sum::<f64>() * domain.cell_area()
}

/// Discrete Rayleigh quotient `∫|∇f|² / ∫f²` on `mask`.
pub fn rayleigh_quotient(domain: &GridDomain, f: &[f64], mask: &SubdomainMask) -> Result<f64> {
    if mask.parent() != domain.id() {
        return Err(Error::DomainMismatch);
    }
    if f.len() != domain.len() {
        return Err(Error::InvalidArgument("function length does not match the grid".into()));
    }
    let den = l2_norm_sq(domain, f, mask);
    if den == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(dirichlet_energy(domain, f, mask) / den)
}

/// Eigenvalue of the domain dilated by `t`: `λ / t²`.
pub fn scale_eigenvalue(lambda: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("scale factor must be positive, got {t}")));
    }
    Ok(lambda / (t * t))
}

/// First eigenvalue of the disk with the given area, `π j₀₁² / area`.
pub fn faber_krahn_lower_bound(area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::InvalidArgument(format!("area must be positive, got {area}")));
    }
    Ok(PI * BESSEL_J0_FIRST_ZERO * BESSEL_J0_FIRST_ZERO / area)
}

/// Richardson extrapolation of values on grids `h` (fine) and `ratio·h`
/// (coarse) assuming error order `order`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    let r = ratio.powf(order);
    fine + (fine - coarse) / (r - 1.0)
}

/// Observed convergence order from three grids refined by `ratio`.
pub fn observed_order(coarse: f64, medium: f64, fine: f64, ratio: f64) -> f64 {
    ((coarse - medium) / (medium - fine)).abs().ln() / ratio.ln()
}
