//! Fourier collocation on periodic domains with classical RK4 in time, for the
//! Schrödinger (complex, 256 modes) and Allen-Cahn (real, 512 modes) problems.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_grid, steps_between, ReferenceSolution};
use crate::pdes::{PdeId, PdeSpec, AC_DIFFUSION};
use crate::sampling::EvalGrid;
use crate::{Error, Result};

const BLOW_UP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub modes: usize,
    pub dt_max: f64,
}

impl SpectralOptions {
    pub fn nls() -> Self {
        Self {
            modes: 256,
            dt_max: 5e-5,
        }
    }

    pub fn allen_cahn() -> Self {
        Self {
            modes: 512,
            dt_max: 1e-5,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.modes < 4 || !self.modes.is_power_of_two() || !(self.dt_max > 0.0) {
            return Err(Error::InvalidArgument(format!("bad spectral options {self:?}")));
        }
        Ok(())
    }
}

/// Periodic grid `x_j = x0 + j L / n` with FFT plans and wavenumbers.
struct Fourier {
    n: usize,
    x0: f64,
    length: f64,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fourier {
    fn new(n: usize, x0: f64, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let k = (0..n)
            .map(|m| {
                let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                2.0 * PI * signed / length
            })
            .collect();
        Self {
            n,
            x0,
            length,
            k,
            fwd,
            inv,
            buf: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    fn nodes(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.x0 + j as f64 * self.length / self.n as f64)
            .collect()
    }

    fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    fn second_derivative(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        self.buf.copy_from_slice(u);
        self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / self.n as f64;
        for (c, k) in self.buf.iter_mut().zip(&self.k) {
            *c *= -k * k * norm;
        }
        self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
        out.copy_from_slice(&self.buf);
    }

    fn coefficients(&mut self, u: &[Complex64]) -> Vec<Complex64> {
        self.buf.copy_from_slice(u);
        self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / self.n as f64;
        self.buf.iter().map(|c| c * norm).collect()
    }

    /// `L sum_m k_m^2 |c_m|^2 = int |u_x|^2` for the collocation interpolant.
    fn gradient_energy(&mut self, u: &[Complex64]) -> f64 {
        let c = self.coefficients(u);
        self.length * c.iter().zip(&self.k).map(|(c, k)| k * k * c.norm_sqr()).sum::<f64>()
    }
}

/// Trigonometric interpolation from the periodic nodes to arbitrary points.
/// The Nyquist mode is taken as a cosine so real data stays real.
struct Interpolator {
    n: usize,
    table: Vec<Complex64>,
}

impl Interpolator {
    fn new(f: &Fourier, xs: &[f64]) -> Self {
        let n = f.n;
        let mut table = Vec::with_capacity(xs.len() * n);
        for &x in xs {
            let s = x - f.x0;
            for (m, &k) in f.k.iter().enumerate() {
                table.push(if m == n / 2 {
                    Complex64::new((k * s).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, k * s)
                });
            }
        }
        Self { n, table }
    }

    fn eval(&self, coeffs: &[Complex64]) -> impl Iterator<Item = Complex64> + '_ {
        let coeffs = coeffs.to_vec();
        self.table
            .chunks_exact(self.n)
            .map(move |row| row.iter().zip(&coeffs).map(|(e, c)| e * c).sum())
    }
}

struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step<F>(&mut self, u: &mut [Complex64], dt: f64, rhs: &mut F)
    where
        F: FnMut(&[Complex64], &mut [Complex64]),
    {
        rhs(u, &mut self.k1);
        for ((t, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k1) {
            *t = u + k * (0.5 * dt);
        }
        rhs(&self.tmp, &mut self.k2);
        for ((t, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k2) {
            *t = u + k * (0.5 * dt);
        }
        rhs(&self.tmp, &mut self.k3);
        for ((t, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k3) {
            *t = u + k * dt;
        }
        rhs(&self.tmp, &mut self.k4);
        for (i, u) in u.iter_mut().enumerate() {
            *u += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * (dt / 6.0);
        }
    }
}

/// Integrates from the initial state and calls `visit` at every requested time
/// (ascending, `t = 0` included) with the collocation values.
fn integrate<R, V>(
    spec: &PdeSpec,
    opts: &SpectralOptions,
    ts: &[f64],
    mut rhs: R,
    mut visit: V,
) -> Result<()>
where
    R: FnMut(&mut Fourier, &[Complex64], &mut [Complex64]),
    V: FnMut(f64, &mut Fourier, &[Complex64]) -> Result<()>,
{
    opts.validate()?;
    let mut fourier = Fourier::new(opts.modes, spec.x_min, spec.x_max - spec.x_min);
    let mut u: Vec<Complex64> = fourier
        .nodes()
        .iter()
        .map(|&x| {
            let v = spec.initial_value(x);
            Complex64::new(v[0], v[1])
        })
        .collect();
    let mut rk = Rk4::new(opts.modes);
    let mut now = 0.0;
    for &t in ts {
        let (count, dt) = steps_between(now, t, opts.dt_max);
        for _ in 0..count {
            rk.step(&mut u, dt, &mut |v, out| rhs(&mut fourier, v, out));
        }
        now = t;
        if u.iter().any(|z| !(z.norm() <= BLOW_UP)) {
            return Err(Error::Solver(format!("{} solution blew up before t = {t}", spec.id)));
        }
        visit(t, &mut fourier, &u)?;
    }
    Ok(())
}

fn nls_rhs(f: &mut Fourier, u: &[Complex64], out: &mut [Complex64]) {
    f.second_derivative(u, out);
    let i = Complex64::new(0.0, 1.0);
    for (o, u) in out.iter_mut().zip(u) {
        *o = i * (*o * 0.5 + u * u.norm_sqr());
    }
}

fn allen_cahn_rhs(f: &mut Fourier, u: &[Complex64], out: &mut [Complex64]) {
    f.second_derivative(u, out);
    for (o, u) in out.iter_mut().zip(u) {
        let v = u.re;
        *o = Complex64::new(AC_DIFFUSION * o.re + 5.0 * v - 5.0 * v * v * v, 0.0);
    }
}

fn solve_spectral<R>(id: PdeId, grid: &EvalGrid, opts: &SpectralOptions, rhs: R) -> Result<ReferenceSolution>
where
    R: FnMut(&mut Fourier, &[Complex64], &mut [Complex64]),
{
    let spec = PdeSpec::get(id);
    check_grid(&spec, grid)?;
    opts.validate()?;
    let channels = spec.output_channels;
    let interp = Interpolator::new(&Fourier::new(opts.modes, spec.x_min, spec.x_max - spec.x_min), &grid.xs);
    let mut values = Vec::with_capacity(grid.len() * channels);
    integrate(&spec, opts, &grid.ts, rhs, |t, f, u| {
        if t == 0.0 {
            for &x in &grid.xs {
                values.extend_from_slice(&spec.initial_value(x)[..channels]);
            }
        } else {
            let c = f.coefficients(u);
            for z in interp.eval(&c) {
                values.push(z.re);
                if channels == 2 {
                    values.push(z.im);
                }
            }
        }
        Ok(())
    })?;
    ReferenceSolution::new(grid.clone(), channels, values)
}

pub fn solve_nls(grid: &EvalGrid) -> Result<ReferenceSolution> {
    solve_nls_with(grid, &SpectralOptions::nls())
}

pub fn solve_nls_with(grid: &EvalGrid, opts: &SpectralOptions) -> Result<ReferenceSolution> {
    solve_spectral(PdeId::Nls, grid, opts, nls_rhs)
}

pub fn solve_allen_cahn(grid: &EvalGrid) -> Result<ReferenceSolution> {
    solve_allen_cahn_with(grid, &SpectralOptions::allen_cahn())
}

pub fn solve_allen_cahn_with(grid: &EvalGrid, opts: &SpectralOptions) -> Result<ReferenceSolution> {
    solve_spectral(PdeId::AllenCahn, grid, opts, allen_cahn_rhs)
}

/// `int |u|^2 dx` of the discrete Schrödinger solution at each time in `ts`.
pub fn nls_mass_trace(ts: &[f64], opts: &SpectralOptions) -> Result<Vec<f64>> {
    let spec = PdeSpec::get(PdeId::Nls);
    let mut out = Vec::with_capacity(ts.len());
    integrate(&spec, opts, ts, nls_rhs, |_, f, u| {
        out.push(f.spacing() * u.iter().map(|z| z.norm_sqr()).sum::<f64>());
        Ok(())
    })?;
    Ok(out)
}

/// Ginzburg-Landau energy `int 0.00005 u_x^2 + 1.25 (u^2 - 1)^2 dx` of the
/// discrete Allen-Cahn solution at each time in `ts`.
pub fn allen_cahn_energy_trace(ts: &[f64], opts: &SpectralOptions) -> Result<Vec<f64>> {
    let spec = PdeSpec::get(PdeId::AllenCahn);
    let mut out = Vec::with_capacity(ts.len());
    integrate(&spec, opts, ts, allen_cahn_rhs, |_, f, u| {
        let grad = f.gradient_energy(u);
        let bulk: f64 = u.iter().map(|z| 1.25 * (z.re * z.re - 1.0).powi(2)).sum();
        out.push(0.5 * AC_DIFFUSION * grad + f.spacing() * bulk);
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{linspace, Segment};

    #[test]
    fn second_derivative_of_a_mode() {
        let mut f = Fourier::new(32, -1.0, 2.0);
        let u: Vec<Complex64> = f
            .nodes()
            .iter()
            .map(|&x| Complex64::new((3.0 * PI * x).sin(), (PI * x).cos()))
            .collect();
        let mut d2 = vec![Complex64::new(0.0, 0.0); 32];
        f.second_derivative(&u, &mut d2);
        for (x, d) in f.nodes().iter().zip(&d2) {
            assert!((d.re + 9.0 * PI * PI * (3.0 * PI * x).sin()).abs() < 1e-10);
            assert!((d.im + PI * PI * (PI * x).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_is_exact_for_band_limited_data() {
        let mut f = Fourier::new(16, -5.0, 10.0);
        let g = |x: f64| Complex64::new((0.2 * PI * x).cos() + 0.3 * (0.6 * PI * x).sin(), (1.4 * PI * x).cos());
        let u: Vec<Complex64> = f.nodes().iter().map(|&x| g(x)).collect();
        let xs = linspace(-5.0, 5.0, 37);
        let it = Interpolator::new(&f, &xs);
        for (x, z) in xs.iter().zip(it.eval(&f.coefficients(&u))) {
            assert!((z - g(*x)).norm() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn allen_cahn_is_periodic_and_starts_from_the_initial_condition() {
        let grid = EvalGrid {
            xs: linspace(-1.0, 1.0, 65),
            ts: vec![0.0, 0.05, 0.5],
            segment: Segment::Train,
        };
        let opts = SpectralOptions {
            modes: 128,
            dt_max: 1e-4,
        };
        let sol = solve_allen_cahn_with(&grid, &opts).unwrap();
        for (i, &x) in grid.xs.iter().enumerate() {
            assert!((sol.at(0, i)[0] - x * x * (PI * x).cos()).abs() < 1e-12);
        }
        for ti in 0..3 {
            assert!((sol.at(ti, 0)[0] - sol.at(ti, 64)[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn options_are_validated() {
        assert!(SpectralOptions { modes: 100, dt_max: 1e-3 }.validate().is_err());
        assert!(SpectralOptions { modes: 64, dt_max: 0.0 }.validate().is_err());
    }
}
