//! Classical reference solutions on evaluation grids.
//!
//! * viscous Burgers: Cole-Hopf integral with Gauss-Hermite quadrature
//! * inviscid Burgers: implicit Godunov finite volumes (256 cells)
//! * Schrödinger: 256-mode Fourier collocation, RK4
//! * Allen-Cahn: 512-mode Fourier collocation, RK4
//!
//! Every solver returns the exact initial condition on the `t = 0` row.

mod inviscid;
mod quadrature;
mod spectral;
mod viscous;

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::pdes::{PdeId, PdeSpec};
use crate::sampling::{EvalGrid, Segment};
use crate::{Error, Result};

pub use inviscid::{solve_inviscid_burgers, solve_inviscid_burgers_with, InviscidOptions};
pub use quadrature::gauss_hermite;
pub use spectral::{
    allen_cahn_energy_trace, nls_mass_trace, solve_allen_cahn, solve_allen_cahn_with, solve_nls,
    solve_nls_with, SpectralOptions,
};
pub use viscous::{solve_viscous_burgers, solve_viscous_burgers_with, DEFAULT_NODES};

/// Bumped whenever a solver change alters its output, invalidating caches.
pub const SOLVER_VERSION: u32 = 1;

const MAGIC: &[u8; 8] = b"DPMREF\x00\x01";

/// Reference values on a grid, laid out `[t][x][channel]` (the order of
/// [`EvalGrid::points`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    grid: EvalGrid,
    channels: usize,
    values: Vec<f64>,
}

impl ReferenceSolution {
    pub fn new(grid: EvalGrid, channels: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&channels) {
            return Err(Error::InvalidArgument(format!("unsupported channel count {channels}")));
        }
        if values.len() != grid.len() * channels {
            return Err(Error::ShapeMismatch {
                expected: grid.len() * channels,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("reference value {i}")));
        }
        Ok(Self { grid, channels, values })
    }

    pub fn grid(&self) -> &EvalGrid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ti: usize, xi: usize) -> &[f64] {
        let k = (ti * self.grid.xs.len() + xi) * self.channels;
        &self.values[k..k + self.channels]
    }

    /// One time row, `[x][channel]`.
    pub fn row(&self, ti: usize) -> &[f64] {
        let w = self.grid.xs.len() * self.channels;
        &self.values[ti * w..(ti + 1) * w]
    }

    /// Bilinear interpolation inside the grid's bounding box.
    pub fn sample(&self, x: f64, t: f64) -> Result<Vec<f64>> {
        let (xi, fx) = bracket(&self.grid.xs, x, "x")?;
        let (ti, ft) = bracket(&self.grid.ts, t, "t")?;
        let xj = (xi + 1).min(self.grid.xs.len() - 1);
        let tj = (ti + 1).min(self.grid.ts.len() - 1);
        Ok((0..self.channels)
            .map(|c| {
                let v = |t, x| self.at(t, x)[c];
                let lo = v(ti, xi) + fx * (v(ti, xj) - v(ti, xi));
                let hi = v(tj, xi) + fx * (v(tj, xj) - v(tj, xi));
                lo + ft * (hi - lo)
            })
            .collect())
    }

    /// Rows `t,x,value[,value_im]`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.channels == 2 {
            w.write_record(["t", "x", "value", "value_im"])?;
        } else {
            w.write_record(["t", "x", "value"])?;
        }
        for (ti, t) in self.grid.ts.iter().enumerate() {
            for (xi, x) in self.grid.xs.iter().enumerate() {
                let mut rec = vec![format!("{t:?}"), format!("{x:?}")];
                rec.extend(self.at(ti, xi).iter().map(|v| format!("{v:?}")));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`write_csv`](Self::write_csv); rows must be
    /// t-major over a full tensor grid.
    pub fn read_csv<R: Read>(input: R, segment: Segment) -> Result<Self> {
        let bad = |d: String| Error::Format { what: "reference csv", detail: d };
        let mut r = csv::Reader::from_reader(input);
        let channels = match r.headers()?.len() {
            3 => 1,
            4 => 2,
            n => return Err(bad(format!("expected 3 or 4 columns, got {n}"))),
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let nums = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(nums);
        }
        let mut ts: Vec<f64> = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        for row in &rows {
            if ts.last() != Some(&row[0]) {
                ts.push(row[0]);
            }
            if ts.len() == 1 {
                xs.push(row[1]);
            }
        }
        if rows.len() != ts.len() * xs.len() {
            return Err(bad("rows do not form a t-major tensor grid".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            if row[0] != ts[k / xs.len()] || row[1] != xs[k % xs.len()] {
                return Err(bad(format!("row {} is out of grid order", k + 1)));
            }
        }
        let values = rows.iter().flat_map(|r| r[2..].to_vec()).collect();
        Self::new(EvalGrid { xs, ts, segment }, channels, values)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(40 + 8 * (g.xs.len() + g.ts.len() + self.values.len()));
        out.extend_from_slice(MAGIC);
        out.push(segment_code(g.segment));
        out.push(self.channels as u8);
        out.extend_from_slice(&(g.xs.len() as u64).to_le_bytes());
        out.extend_from_slice(&(g.ts.len() as u64).to_le_bytes());
        for v in g.xs.iter().chain(&g.ts).chain(&self.values) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |d: &str| Error::Format { what: "reference cache", detail: d.into() };
        if bytes.len() < 26 || &bytes[..8] != MAGIC {
            return Err(bad("missing header"));
        }
        let segment = match bytes[8] {
            0 => Segment::Train,
            1 => Segment::Validation,
            2 => Segment::Test,
            _ => return Err(bad("unknown segment")),
        };
        let channels = bytes[9] as usize;
        let count = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) as usize;
        let (nx, nt) = (count(10), count(18));
        let total = nx
            .checked_add(nt)
            .and_then(|s| nx.checked_mul(nt)?.checked_mul(channels)?.checked_add(s))
            .ok_or_else(|| bad("size overflow"))?;
        if bytes.len() != 26 + 8 * total {
            return Err(bad("length does not match header"));
        }
        let mut floats = bytes[26..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let xs = floats.by_ref().take(nx).collect();
        let ts = floats.by_ref().take(nt).collect();
        let values = floats.collect();
        Self::new(EvalGrid { xs, ts, segment }, channels, values)
    }
}

fn segment_code(s: Segment) -> u8 {
    match s {
        Segment::Train => 0,
        Segment::Validation => 1,
        Segment::Test => 2,
    }
}

/// Index of the cell containing `v` and the fractional position inside it.
fn bracket(axis: &[f64], v: f64, what: &'static str) -> Result<(usize, f64)> {
    let (lo, hi) = (axis[0], axis[axis.len() - 1]);
    if !(v >= lo && v <= hi) {
        return Err(Error::OutOfDomain { what, value: v, lo, hi });
    }
    if axis.len() == 1 {
        return Ok((0, 0.0));
    }
    let i = axis.partition_point(|&a| a <= v).saturating_sub(1).min(axis.len() - 2);
    let f = (v - axis[i]) / (axis[i + 1] - axis[i]);
    Ok((i, f.clamp(0.0, 1.0)))
}

/// Hex digest identifying a reference computation: solver version, PDE and
/// every grid coordinate.
pub fn cache_key(pde: PdeId, grid: &EvalGrid) -> String {
    let mut h = Sha256::new();
    h.update(SOLVER_VERSION.to_le_bytes());
    h.update(pde.as_str().as_bytes());
    h.update([segment_code(grid.segment)]);
    for axis in [&grid.xs, &grid.ts] {
        h.update((axis.len() as u64).to_le_bytes());
        for v in axis.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn solve_reference(pde: PdeId, grid: &EvalGrid) -> Result<ReferenceSolution> {
    match pde {
        PdeId::ViscousBurgers => solve_viscous_burgers(grid),
        PdeId::InviscidBurgers => solve_inviscid_burgers(grid),
        PdeId::Nls => solve_nls(grid),
        PdeId::AllenCahn => solve_allen_cahn(grid),
    }
}

pub(crate) fn check_grid(spec: &PdeSpec, grid: &EvalGrid) -> Result<()> {
    const SLACK: f64 = 1e-12;
    if grid.xs.is_empty() || grid.ts.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation grid".into()));
    }
    for &x in &grid.xs {
        if !(x >= spec.x_min - SLACK && x <= spec.x_max + SLACK) {
            return Err(Error::OutOfDomain { what: "x", value: x, lo: spec.x_min, hi: spec.x_max });
        }
    }
    for &t in &grid.ts {
        if !(t >= 0.0 && t <= spec.final_time + SLACK) {
            return Err(Error::OutOfDomain { what: "t", value: t, lo: 0.0, hi: spec.final_time });
        }
    }
    if grid.ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid times must increase strictly".into()));
    }
    Ok(())
}

/// Equal substeps no longer than `dt_max` that land exactly on `to`.
pub(crate) fn steps_between(from: f64, to: f64, dt_max: f64) -> (usize, f64) {
    let span = to - from;
    if span <= 0.0 {
        return (0, 0.0);
    }
    let count = ((span / dt_max) - 1e-9).ceil().max(1.0) as usize;
    (count, span / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::linspace;

    fn toy() -> ReferenceSolution {
        let grid = EvalGrid {
            xs: vec![0.0, 1.0, 2.0],
            ts: vec![0.0, 0.5],
            segment: Segment::Validation,
        };
        // value = x + 10 t, imaginary = -x
        let values = grid
            .points()
            .iter()
            .flat_map(|&(x, t)| [x + 10.0 * t, -x])
            .collect();
        ReferenceSolution::new(grid, 2, values).unwrap()
    }

    #[test]
    fn bilinear_sampling_reproduces_linear_fields() {
        let s = toy();
        let v = s.sample(1.25, 0.2).unwrap();
        assert!((v[0] - 3.25).abs() < 1e-14 && (v[1] + 1.25).abs() < 1e-14);
        assert_eq!(s.sample(2.0, 0.5).unwrap(), vec![7.0, -2.0]);
        assert!(s.sample(2.5, 0.2).is_err());
        assert!(s.sample(1.0, -0.1).is_err());
    }

    #[test]
    fn csv_and_binary_roundtrips() {
        let s = toy();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,x,value,value_im\n"));
        assert_eq!(ReferenceSolution::read_csv(&buf[..], Segment::Validation).unwrap(), s);
        assert_eq!(ReferenceSolution::from_bytes(&s.to_bytes()).unwrap(), s);
        let mut bytes = s.to_bytes();
        bytes.pop();
        assert!(ReferenceSolution::from_bytes(&bytes).is_err());
    }

    #[test]
    fn shape_and_finiteness_checked() {
        let grid = EvalGrid { xs: vec![0.0], ts: vec![0.0], segment: Segment::Test };
        assert!(ReferenceSolution::new(grid.clone(), 1, vec![]).is_err());
        assert!(ReferenceSolution::new(grid, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn cache_key_depends_on_everything() {
        let g = EvalGrid { xs: linspace(-1.0, 1.0, 5), ts: vec![0.1, 0.2], segment: Segment::Test };
        let k = cache_key(PdeId::ViscousBurgers, &g);
        assert_eq!(k.len(), 64);
        assert_eq!(k, cache_key(PdeId::ViscousBurgers, &g.clone()));
        assert_ne!(k, cache_key(PdeId::AllenCahn, &g));
        let mut h = g.clone();
        h.ts[1] = 0.2000000001;
        assert_ne!(k, cache_key(PdeId::ViscousBurgers, &h));
    }

    #[test]
    fn substeps_land_on_target() {
        assert_eq!(steps_between(0.0, 1.0, 0.25), (4, 0.25));
        let (n, dt) = steps_between(0.0, 0.0175, 0.005);
        assert_eq!(n, 4);
        assert!((dt * 4.0 - 0.0175).abs() < 1e-16);
        assert_eq!(steps_between(1.0, 1.0, 0.1).0, 0);
    }

    #[test]
    fn out_of_domain_grid_rejected() {
        let g = EvalGrid { xs: vec![0.0, 2.0], ts: vec![0.5], segment: Segment::Test };
        assert!(solve_reference(PdeId::ViscousBurgers, &g).is_err());
    }
}
