//! Variance integrals `∫ dω/2π S(ω)`.
//!
//! Two entry points: [`Integrator::integrate_line`] adaptively integrates a
//! callable spectrum over the whole real line, and [`integrate_samples`]
//! integrates a sampled curve with a fitted Lorentzian tail beyond the grid.

use std::cell::RefCell;
use std::f64::consts::PI;

use quadrature::double_exponential;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum bisection depth of any piece.
    pub max_depth: u32,
}

impl Default for Integrator {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-13, max_depth: 24 }
    }
}

enum Piece {
    Finite(f64, f64),
    /// `[from, ∞)` mapped by `x = from + s·t/(1−t)`.
    Right(f64, f64),
    /// `(−∞, from]` mapped by `x = from − s·t/(1−t)`.
    Left(f64, f64),
}

impl Integrator {
    /// `∫_{−∞}^{∞} f(x) dx`, split at `breakpoints`. `tail_scale` sets the
    /// length scale of the map used for the two semi-infinite tails.
    pub fn integrate_line<F>(&self, f: F, breakpoints: &[f64], tail_scale: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let mut bp: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        if bp.is_empty() {
            bp.push(0.0);
        }
        if !(tail_scale > 0.0) {
            return Err(SimError::InvalidGrid(format!("tail scale must be positive, got {tail_scale}")));
        }
        let mut pieces = vec![Piece::Left(bp[0], tail_scale)];
        pieces.extend(bp.windows(2).map(|w| Piece::Finite(w[0], w[1])));
        pieces.push(Piece::Right(*bp.last().unwrap(), tail_scale));

        let failure: RefCell<Option<SimError>> = RefCell::new(None);
        let eval = |x: f64| -> f64 {
            if failure.borrow().is_some() {
                return 0.0;
            }
            match f(x) {
                Ok(v) if v.is_finite() => v,
                Ok(v) => {
                    *failure.borrow_mut() = Some(SimError::NotConverged(format!("integrand is {v} at {x}")));
                    0.0
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        };
        let mapped = |piece: &Piece| -> (Box<dyn Fn(f64) -> f64 + '_>, f64, f64) {
            match *piece {
                Piece::Finite(a, b) => (Box::new(eval), a, b),
                Piece::Right(a, s) => (
                    Box::new(move |t: f64| {
                        let r = 1.0 - t;
                        if r <= 0.0 {
                            0.0
                        } else {
                            eval(a + s * t / r) * s / (r * r)
                        }
                    }),
                    0.0,
                    1.0,
                ),
                Piece::Left(a, s) => (
                    Box::new(move |t: f64| {
                        let r = 1.0 - t;
                        if r <= 0.0 {
                            0.0
                        } else {
                            eval(a - s * t / r) * s / (r * r)
                        }
                    }),
                    0.0,
                    1.0,
                ),
            }
        };

        // Coarse pass fixes the absolute target for the refined pass.
        let mut coarse = 0.0;
        for p in &pieces {
            let (g, a, b) = mapped(p);
            coarse += double_exponential::integrate(&g, a, b, self.abs_tol.max(1e-6)).integral;
        }
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        let target = self.abs_tol.max(self.rel_tol * coarse.abs()) / pieces.len() as f64;

        let mut total = 0.0;
        for p in &pieces {
            let (g, a, b) = mapped(p);
            total += self.refine(&g, a, b, target, 0)?;
            if let Some(e) = failure.borrow_mut().take() {
                return Err(e);
            }
        }
        Ok(total)
    }

    fn refine(&self, g: &dyn Fn(f64) -> f64, a: f64, b: f64, target: f64, depth: u32) -> Result<f64> {
        let out = double_exponential::integrate(g, a, b, target);
        if out.error_estimate <= target {
            return Ok(out.integral);
        }
        if depth >= self.max_depth {
            return Err(SimError::NotConverged(format!(
                "adaptive refinement exceeded depth {} on [{a}, {b}] (error estimate {:e}, target {target:e})",
                self.max_depth, out.error_estimate
            )));
        }
        let m = 0.5 * (a + b);
        Ok(self.refine(g, a, m, 0.5 * target, depth + 1)? + self.refine(g, m, b, 0.5 * target, depth + 1)?)
    }
}

/// Tail of a sampled spectrum beyond an edge, from the last two samples
/// fitted to `C/(ω² + w²)`; falls back to `C/ω²` when the fit is not a
/// decaying Lorentzian.
fn lorentzian_tail(x1: f64, s1: f64, x0: f64, s0: f64) -> Result<f64> {
    // x0 is the edge, x1 one step inside; both measured as distances from 0.
    let slope = (s0 / s1).ln() / (x0 / x1).ln();
    if !(slope < -1.5) || !(s0 > 0.0) || !(s1 > 0.0) {
        return Err(SimError::NotConverged(format!(
            "spectrum does not decay at the window edge ω = {x0} (log slope {slope:.3}); no tail model applies"
        )));
    }
    let w2 = (s0 * x0 * x0 - s1 * x1 * x1) / (s1 - s0);
    if w2 > 0.0 {
        let w = w2.sqrt();
        let c = s0 * (x0 * x0 + w2);
        Ok(c / w * (PI / 2.0 - (x0 / w).atan()))
    } else {
        Ok(s0 * x0)
    }
}

/// `∫ dω/2π S(ω)` of a sampled curve: trapezoid rule on the grid plus a
/// Lorentzian tail on each side. The grid must be strictly increasing and
/// straddle 0.
pub fn integrate_samples(grid: &[f64], values: &[f64]) -> Result<f64> {
    if grid.len() != values.len() || grid.len() < 4 {
        return Err(SimError::InvalidGrid(format!(
            "need at least 4 samples with matching lengths, got {} and {}",
            grid.len(),
            values.len()
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SimError::InvalidGrid("grid is not strictly increasing".into()));
    }
    let n = grid.len();
    if !(grid[0] < 0.0 && grid[n - 1] > 0.0) {
        return Err(SimError::InvalidGrid("grid must contain both signs of ω".into()));
    }
    let body: f64 = grid.windows(2).zip(values.windows(2)).map(|(x, s)| 0.5 * (x[1] - x[0]) * (s[0] + s[1])).sum();
    let right = lorentzian_tail(grid[n - 2], values[n - 2], grid[n - 1], values[n - 1])?;
    let left = lorentzian_tail(-grid[1], values[1], -grid[0], values[0])?;
    Ok((body + left + right) / (2.0 * PI))
}
