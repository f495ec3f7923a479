//! Viscous Burgers through the Cole-Hopf transform.
//!
//! With `f(y) = exp(-cos(pi y) / (2 pi nu))` the solution is
//!
//! ```text
//! u(x, t) = - int sin(pi y) f(y) G dz / int f(y) G dz,   y = x - 2 sqrt(nu t) z,   G = exp(-z^2)
//! ```
//!
//! which Gauss-Hermite quadrature integrates directly. Exponents are shifted by
//! their maximum before exponentiation; the shift cancels in the ratio.

use std::f64::consts::PI;

use super::quadrature::gauss_hermite;
use super::{check_grid, ReferenceSolution};
use crate::pdes::{PdeId, PdeSpec, VISCOSITY};
use crate::sampling::EvalGrid;
use crate::{Error, Result};

pub const DEFAULT_NODES: usize = 100;
const CHECK_NODES: usize = 160;
const CHECK_TOL: f64 = 1e-8;

struct Rule {
    z: Vec<f64>,
    w: Vec<f64>,
}

impl Rule {
    fn new(n: usize) -> Result<Self> {
        let (z, w) = gauss_hermite(n)?;
        Ok(Self { z, w })
    }

    fn eval(&self, x: f64, t: f64, scratch: &mut Vec<f64>) -> f64 {
        let s = 2.0 * (VISCOSITY * t).sqrt();
        let c = 1.0 / (2.0 * PI * VISCOSITY);
        scratch.clear();
        scratch.extend(self.z.iter().map(|z| -(PI * (x - s * z)).cos() * c));
        let top = scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for ((z, w), e) in self.z.iter().zip(&self.w).zip(scratch.iter()) {
            let f = w * (e - top).exp();
            num += (PI * (x - s * z)).sin() * f;
            den += f;
        }
        -num / den
    }
}

pub fn solve_viscous_burgers(grid: &EvalGrid) -> Result<ReferenceSolution> {
    solve_viscous_burgers_with(grid, DEFAULT_NODES)
}

/// Cole-Hopf solution with `nodes` quadrature points, cross-checked point by
/// point against a larger rule.
pub fn solve_viscous_burgers_with(grid: &EvalGrid, nodes: usize) -> Result<ReferenceSolution> {
    let spec = PdeSpec::get(PdeId::ViscousBurgers);
    check_grid(&spec, grid)?;
    let rule = Rule::new(nodes)?;
    let check = Rule::new(nodes.max(CHECK_NODES) + 20)?;
    let mut scratch = Vec::with_capacity(check.z.len());
    let mut values = Vec::with_capacity(grid.len());
    for &t in &grid.ts {
        for &x in &grid.xs {
            if t == 0.0 {
                values.push(-(PI * x).sin());
                continue;
            }
            let u = rule.eval(x, t, &mut scratch);
            let v = check.eval(x, t, &mut scratch);
            if !u.is_finite() || (u - v).abs() > CHECK_TOL {
                return Err(Error::Solver(format!(
                    "Cole-Hopf quadrature not converged at x = {x}, t = {t}: {u} vs {v}"
                )));
            }
            values.push(u);
        }
    }
    ReferenceSolution::new(grid.clone(), 1, values)
}
