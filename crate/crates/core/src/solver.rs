//! Compact five-point Laplacian on a cell mask and a preconditioned CG solver.
//!
//! The operator is stored scaled by `h²`: row `k` reads
//! `(4 + n_out) x_k − Σ x_neighbor`, where `n_out` counts the neighbors
//! outside the mask. Each missing neighbor acts as a ghost cell holding
//! `−x_k`, which places the zero Dirichlet value on the shared cell face.

const NONE: u32 = u32::MAX;
const WEST: usize = 0;
const EAST: usize = 1;
const SOUTH: usize = 2;
const NORTH: usize = 3;

/// MIC(0) parameters: modification weight and safety threshold.
const MIC_TAU: f64 = 0.97;
const MIC_SIGMA: f64 = 0.25;

pub(crate) struct MaskedLaplacian {
    /// Global cell indices, ascending (row-major natural order).
    cells: Vec<usize>,
    nbr: Vec<[u32; 4]>,
    diag: Vec<f64>,
    precon: Vec<f64>,
}

pub(crate) struct CgOutcome {
    pub iterations: usize,
    pub converged: bool,
}

impl MaskedLaplacian {
    /// `cells` must be sorted ascending and lie on a grid with `nx` columns.
    pub fn new(nx: usize, cells: Vec<usize>) -> Self {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        let n = cells.len();
        let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
        for &c in &cells {
            let (i, j) = (c % nx, c / nx);
            imin = imin.min(i);
            imax = imax.max(i);
            jmin = jmin.min(j);
            jmax = jmax.max(j);
        }
        let (bw, bh) = if n == 0 { (0, 0) } else { (imax - imin + 1, jmax - jmin + 1) };
        let mut local = vec![NONE; bw * bh];
        for (k, &c) in cells.iter().enumerate() {
            local[(c / nx - jmin) * bw + (c % nx - imin)] = k as u32;
        }
        let lookup = |i: isize, j: isize| -> u32 {
            if i < imin as isize || i > imax as isize || j < jmin as isize || j > jmax as isize {
                return NONE;
            }
            local[(j as usize - jmin) * bw + (i as usize - imin)]
        };
        let mut nbr = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for &c in &cells {
            let (i, j) = ((c % nx) as isize, (c / nx) as isize);
            let ns = [lookup(i - 1, j), lookup(i + 1, j), lookup(i, j - 1), lookup(i, j + 1)];
            let inside = ns.iter().filter(|&&v| v != NONE).count();
            nbr.push(ns);
            diag.push(4.0 + (4 - inside) as f64);
        }
        let mut op = Self { cells, nbr, diag, precon: vec![0.0; n] };
        op.factor_mic0();
        op
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    fn factor_mic0(&mut self) {
        for k in 0..self.len() {
            let mut e = self.diag[k];
            let w = self.nbr[k][WEST];
            if w != NONE {
                let pw = self.precon[w as usize];
                e -= pw * pw;
                if self.nbr[w as usize][NORTH] != NONE {
                    e -= MIC_TAU * pw * pw;
                }
            }
            let s = self.nbr[k][SOUTH];
            if s != NONE {
                let ps = self.precon[s as usize];
                e -= ps * ps;
                if self.nbr[s as usize][EAST] != NONE {
                    e -= MIC_TAU * ps * ps;
                }
            }
            if e < MIC_SIGMA * self.diag[k] {
                e = self.diag[k];
            }
            self.precon[k] = 1.0 / e.sqrt();
        }
    }

    /// `y = A x` (scaled by `h²`).
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, (yk, ns)) in y.iter_mut().zip(&self.nbr).enumerate() {
            let mut acc = self.diag[k] * x[k];
            for &q in ns {
                if q != NONE {
                    acc -= x[q as usize];
                }
            }
            *yk = acc;
        }
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        let n = self.len();
        for k in 0..n {
            let mut t = r[k];
            let w = self.nbr[k][WEST];
            if w != NONE {
                t += self.precon[w as usize] * z[w as usize];
            }
            let s = self.nbr[k][SOUTH];
            if s != NONE {
                t += self.precon[s as usize] * z[s as usize];
            }
            z[k] = t * self.precon[k];
        }
        for k in (0..n).rev() {
            let mut t = z[k];
            let e = self.nbr[k][EAST];
            if e != NONE {
                t += self.precon[k] * z[e as usize];
            }
            let nn = self.nbr[k][NORTH];
            if nn != NONE {
                t += self.precon[k] * z[nn as usize];
            }
            z[k] = t * self.precon[k];
        }
    }

    /// Solves `A x = b` from the initial guess in `x` until
    /// `‖b − A x‖ ≤ rel_tol·‖b‖` or `max_iter` steps.
    pub fn pcg(&self, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> CgOutcome {
        let n = self.len();
        let bnorm = norm(b);
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return CgOutcome { iterations: 0, converged: true };
        }
        let target = rel_tol * bnorm;
        let mut r = vec![0.0; n];
        self.apply(x, &mut r);
        for (rk, bk) in r.iter_mut().zip(b) {
            *rk = bk - *rk;
        }
        if norm(&r) <= target {
            return CgOutcome { iterations: 0, converged: true };
        }
        let mut z = vec![0.0; n];
        self.precondition(&r, &mut z);
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return CgOutcome { iterations: it, converged: false };
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            if norm(&r) <= target {
                return CgOutcome { iterations: it, converged: true };
            }
            self.precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        CgOutcome { iterations: max_iter, converged: false }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
