//! Global 1-D minimization: dense uniform grid, then golden-section
//! refinement around every grid-local minimum.
//!
//! No unimodality is assumed. Grid evaluation runs in parallel; the result
//! does not depend on evaluation order.

use rayon::prelude::*;

/// Default number of grid points.
pub const GRID_SIZE: usize = 4096;
/// Golden-section termination width in α.
pub const ALPHA_TOL: f64 = 1e-9;
/// Floor on the reported value tolerance.
pub const VALUE_TOL: f64 = 1e-10;
/// Relative band inside which two values count as tied.
pub const TIE_REL: f64 = 1e-12;
/// At most this many grid-local minima are refined (best first).
const MAX_REFINED: usize = 64;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMinimizer {
    pub lower: f64,
    pub upper: f64,
    pub grid_size: usize,
    pub alpha_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub value: f64,
    pub argmin: f64,
    pub grid_size: usize,
    pub refinement_steps: usize,
    pub value_tolerance: f64,
}

impl GridMinimizer {
    pub fn new(lower: f64, upper: f64) -> Self {
        GridMinimizer { lower, upper, grid_size: GRID_SIZE, alpha_tol: ALPHA_TOL }
    }

    pub fn with_grid_size(mut self, n: usize) -> Self {
        self.grid_size = n.max(2);
        self
    }

    fn point(&self, i: usize) -> f64 {
        if i + 1 == self.grid_size {
            self.upper
        } else {
            self.lower + (self.upper - self.lower) * i as f64 / (self.grid_size - 1) as f64
        }
    }

    /// Minimizes `f`; NaN values are treated as +∞.
    ///
    /// Values within relative [`TIE_REL`] of the incumbent do not replace it,
    /// so flat objectives report the smallest grid argument.
    pub fn minimize<F>(&self, f: F) -> Minimum
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let eval = |x: f64| {
            let v = f(x);
            if v.is_nan() { f64::INFINITY } else { v }
        };
        let n = self.grid_size;
        let xs: Vec<f64> = (0..n).map(|i| self.point(i)).collect();
        let vs: Vec<f64> = xs.par_iter().map(|&x| eval(x)).collect();

        let (mut best_x, mut best_v) = (xs[0], vs[0]);
        for (&x, &v) in xs.iter().zip(&vs) {
            if improves(v, best_v) {
                best_v = v;
                best_x = x;
            }
        }
        let mut minima: Vec<usize> = (0..n)
            .filter(|&i| {
                vs[i].is_finite()
                    && (i == 0 || vs[i] <= vs[i - 1])
                    && (i + 1 == n || vs[i] <= vs[i + 1])
            })
            .collect();
        minima.sort_by(|&a, &b| vs[a].total_cmp(&vs[b]).then(a.cmp(&b)));
        minima.truncate(MAX_REFINED);

        let refined: Vec<(f64, f64, usize, f64)> = minima
            .par_iter()
            .map(|&i| {
                let a = xs[i.saturating_sub(1)];
                let b = xs[(i + 1).min(n - 1)];
                golden_section(&eval, a, b, self.alpha_tol)
            })
            .collect();

        let mut steps = 0;
        let mut spread = 0.0f64;
        for &(x, v, s, sp) in &refined {
            steps += s;
            if improves(v, best_v) {
                best_v = v;
                best_x = x;
                spread = sp;
            }
        }
        Minimum {
            value: best_v,
            argmin: best_x,
            grid_size: n,
            refinement_steps: steps,
            value_tolerance: spread.max(VALUE_TOL),
        }
    }
}

fn improves(v: f64, best: f64) -> bool {
    if best.is_finite() {
        v < best - TIE_REL * best.abs()
    } else {
        v < best
    }
}

/// Golden-section search on `[a, b]`. Returns `(x, f(x), iterations, spread)`
/// where `spread` is the gap between the two interior values at termination.
pub fn golden_section<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, usize, f64)
where
    F: Fn(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let spread = if fc.is_finite() && fd.is_finite() { (fc - fd).abs() } else { 0.0 };
    if fc <= fd {
        (c, fc, iters, spread)
    } else {
        (d, fd, iters, spread)
    }
}
