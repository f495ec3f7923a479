//! Inviscid Burgers with a source term on `[0, 100]`: cell-centred finite
//! volumes with the Godunov flux, backward Euler in time and Newton's method on
//! the resulting tridiagonal system.
//!
//! The left ghost cell holds the inflow value; the right boundary copies the
//! last cell (zero-gradient outflow).

use super::{check_grid, steps_between, ReferenceSolution};
use crate::pdes::{PdeId, PdeSpec, INFLOW_VALUE};
use crate::sampling::EvalGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InviscidOptions {
    pub cells: usize,
    pub dt_max: f64,
}

impl Default for InviscidOptions {
    fn default() -> Self {
        Self {
            cells: 256,
            dt_max: 2.5e-3,
        }
    }
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Godunov flux for `f(u) = u^2 / 2` and its partial derivatives.
fn godunov(ul: f64, ur: f64) -> (f64, f64, f64) {
    if ul <= ur {
        if ul >= 0.0 {
            (0.5 * ul * ul, ul, 0.0)
        } else if ur <= 0.0 {
            (0.5 * ur * ur, 0.0, ur)
        } else {
            (0.0, 0.0, 0.0)
        }
    } else if ul + ur >= 0.0 {
        (0.5 * ul * ul, ul, 0.0)
    } else {
        (0.5 * ur * ur, 0.0, ur)
    }
}

/// Solves `a_i y_{i-1} + b_i y_i + c_i y_{i+1} = d_i` in place (result in `d`).
fn thomas(a: &[f64], b: &mut [f64], c: &[f64], d: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        if b[i - 1] == 0.0 {
            return Err(Error::Solver("singular Newton system".into()));
        }
        let m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    if b[n - 1] == 0.0 {
        return Err(Error::Solver("singular Newton system".into()));
    }
    d[n - 1] /= b[n - 1];
    for i in (0..n - 1).rev() {
        d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
    }
    Ok(())
}

struct FiniteVolume {
    dx: f64,
    source: Vec<f64>,
    u: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    r: Vec<f64>,
}

impl FiniteVolume {
    fn new(spec: &PdeSpec, cells: usize) -> Self {
        let dx = (spec.x_max - spec.x_min) / cells as f64;
        // exact cell averages of 0.02 exp(0.015 x)
        let source = (0..cells)
            .map(|i| {
                let (l, r) = (spec.x_min + i as f64 * dx, spec.x_min + (i + 1) as f64 * dx);
                0.02 * ((0.015 * r).exp() - (0.015 * l).exp()) / (0.015 * dx)
            })
            .collect();
        Self {
            dx,
            source,
            u: vec![1.0; cells],
            a: vec![0.0; cells],
            b: vec![0.0; cells],
            c: vec![0.0; cells],
            r: vec![0.0; cells],
        }
    }

    fn step(&mut self, dt: f64) -> Result<()> {
        let n = self.u.len();
        let old = self.u.clone();
        let ratio = dt / self.dx;
        for _ in 0..NEWTON_MAX_ITER {
            let u = &self.u;
            let mut left = godunov(INFLOW_VALUE, u[0]);
            for i in 0..n {
                let right = if i + 1 < n {
                    godunov(u[i], u[i + 1])
                } else {
                    let (f, dl, dr) = godunov(u[i], u[i]);
                    (f, dl + dr, 0.0)
                };
                self.r[i] = -(u[i] - old[i] + ratio * (right.0 - left.0) - dt * self.source[i]);
                self.a[i] = -ratio * left.1;
                self.b[i] = 1.0 + ratio * (right.1 - left.2);
                self.c[i] = ratio * right.2;
                left = right;
            }
            thomas(&self.a, &mut self.b, &self.c, &mut self.r)?;
            let mut change = 0.0f64;
            for (u, du) in self.u.iter_mut().zip(&self.r) {
                *u += du;
                change = change.max(du.abs() / u.abs().max(1.0));
            }
            if !change.is_finite() {
                return Err(Error::Solver("Newton iteration diverged".into()));
            }
            if change < NEWTON_TOL {
                return Ok(());
            }
        }
        Err(Error::Solver(format!(
            "Newton iteration did not converge in {NEWTON_MAX_ITER} steps"
        )))
    }

    /// Piecewise-linear reconstruction through the cell centres, anchored at the
    /// inflow value on the left wall.
    fn sample(&self, x: f64) -> f64 {
        let n = self.u.len();
        let s = x / self.dx - 0.5;
        if s <= 0.0 {
            let frac = (x / (0.5 * self.dx)).clamp(0.0, 1.0);
            INFLOW_VALUE + frac * (self.u[0] - INFLOW_VALUE)
        } else if s >= (n - 1) as f64 {
            self.u[n - 1]
        } else {
            let i = s.floor() as usize;
            let f = s - i as f64;
            self.u[i] + f * (self.u[i + 1] - self.u[i])
        }
    }
}

pub fn solve_inviscid_burgers(grid: &EvalGrid) -> Result<ReferenceSolution> {
    solve_inviscid_burgers_with(grid, &InviscidOptions::default())
}

pub fn solve_inviscid_burgers_with(grid: &EvalGrid, opts: &InviscidOptions) -> Result<ReferenceSolution> {
    let spec = PdeSpec::get(PdeId::InviscidBurgers);
    check_grid(&spec, grid)?;
    if opts.cells < 2 || !(opts.dt_max > 0.0) {
        return Err(Error::InvalidArgument(format!("bad finite-volume options {opts:?}")));
    }
    let mut fv = FiniteVolume::new(&spec, opts.cells);
    let mut now = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    for &t in &grid.ts {
        if t == 0.0 {
            values.extend(grid.xs.iter().map(|_| 1.0));
            continue;
        }
        let (count, dt) = steps_between(now, t, opts.dt_max);
        for _ in 0..count {
            fv.step(dt)?;
        }
        now = t;
        values.extend(grid.xs.iter().map(|&x| fv.sample(x)));
    }
    ReferenceSolution::new(grid.clone(), 1, values)
}
