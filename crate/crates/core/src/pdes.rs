//! The four benchmark equations.
//!
//! | id                 | residual `f`                                | domain               | boundary            |
//! |--------------------|---------------------------------------------|----------------------|---------------------|
//! | `viscous-burgers`  | `u_t + u u_x - (0.01/pi) u_xx`              | `[-1,1] x [0,1]`     | `u(+-1,t) = 0`      |
//! | `inviscid-burgers` | `u_t + u u_x - 0.02 exp(0.015 x)`           | `[0,100] x [0,35]`   | `u(0,t) = 4.25`     |
//! | `nls`              | `u_t - 0.5i u_xx - i abs(u)^2 u`            | `[-5,5] x [0,pi/2]`  | periodic `u`, `u_x` |
//! | `allen-cahn`       | `u_t - 1e-4 u_xx + 5u^3 - 5u`               | `[-1,1] x [0,1]`     | periodic `u`, `u_x` |
//!
//! The complex NLS field is carried as two real channels `u = p + i q`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::diffnet::Jet;
use crate::{Error, Result};

pub const VISCOSITY: f64 = 0.01 / PI;
pub const INFLOW_VALUE: f64 = 4.25;
pub const AC_DIFFUSION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PdeId {
    ViscousBurgers,
    InviscidBurgers,
    Nls,
    AllenCahn,
}

impl PdeId {
    pub const ALL: [PdeId; 4] = [
        PdeId::ViscousBurgers,
        PdeId::InviscidBurgers,
        PdeId::Nls,
        PdeId::AllenCahn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PdeId::ViscousBurgers => "viscous-burgers",
            PdeId::InviscidBurgers => "inviscid-burgers",
            PdeId::Nls => "nls",
            PdeId::AllenCahn => "allen-cahn",
        }
    }
}

impl fmt::Display for PdeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PdeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PdeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownPde(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    DirichletBoth,
    InflowLeft,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeSpec {
    pub id: PdeId,
    pub x_min: f64,
    pub x_max: f64,
    pub final_time: f64,
    pub output_channels: usize,
    pub boundary_kind: BoundaryKind,
}

/// One boundary constraint at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryTarget {
    Value { x: f64, target: Vec<f64> },
    /// `u` and `u_x` must agree at both ends; the target gap is zero.
    Periodic { x_left: f64, x_right: f64 },
}

/// Fixed-size jet used inside loss loops (channels beyond `output_channels` stay zero).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointJet {
    pub u: [f64; 2],
    pub ux: [f64; 2],
    pub ut: [f64; 2],
    pub uxx: [f64; 2],
}

impl PointJet {
    pub fn from_jet(jet: &Jet) -> Self {
        let mut p = PointJet::default();
        for c in 0..jet.channels().min(2) {
            p.u[c] = jet.u[c];
            p.ux[c] = jet.du_dx[c];
            p.ut[c] = jet.du_dt[c];
            p.uxx[c] = jet.d2u_dx2[c];
        }
        p
    }
}

pub fn catalog() -> Vec<PdeSpec> {
    PdeId::ALL.into_iter().map(PdeSpec::get).collect()
}

impl PdeSpec {
    pub fn get(id: PdeId) -> Self {
        let (x_min, x_max, final_time, output_channels, boundary_kind) = match id {
            PdeId::ViscousBurgers => (-1.0, 1.0, 1.0, 1, BoundaryKind::DirichletBoth),
            PdeId::InviscidBurgers => (0.0, 100.0, 35.0, 1, BoundaryKind::InflowLeft),
            PdeId::Nls => (-5.0, 5.0, PI / 2.0, 2, BoundaryKind::Periodic),
            PdeId::AllenCahn => (-1.0, 1.0, 1.0, 1, BoundaryKind::Periodic),
        };
        Self {
            id,
            x_min,
            x_max,
            final_time,
            output_channels,
            boundary_kind,
        }
    }

    /// Temporal step of the evaluation grids.
    pub fn eval_time_step(&self) -> f64 {
        match self.id {
            PdeId::ViscousBurgers => 0.01,
            PdeId::InviscidBurgers => 0.0175,
            PdeId::Nls => 0.01 * PI / 2.0,
            PdeId::AllenCahn => 0.005,
        }
    }

    /// Number of spatial points of the evaluation grids.
    pub fn eval_points(&self) -> usize {
        match self.id {
            PdeId::InviscidBurgers => 512,
            _ => 256,
        }
    }

    /// Default number of collocation points.
    pub fn default_collocation(&self) -> usize {
        match self.id {
            PdeId::ViscousBurgers | PdeId::InviscidBurgers => 10_000,
            PdeId::Nls | PdeId::AllenCahn => 20_000,
        }
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if !(self.x_min..=self.x_max).contains(&x) {
            return Err(Error::OutOfDomain {
                what: "x",
                value: x,
                lo: self.x_min,
                hi: self.x_max,
            });
        }
        Ok(())
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(0.0..=self.final_time).contains(&t) {
            return Err(Error::OutOfDomain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.final_time,
            });
        }
        Ok(())
    }

    pub fn residual(&self, x: f64, _t: f64, jet: &Jet) -> Result<Vec<f64>> {
        if jet.channels() != self.output_channels {
            return Err(Error::ShapeMismatch {
                expected: self.output_channels,
                actual: jet.channels(),
            });
        }
        let r = self.residual_point(x, &PointJet::from_jet(jet));
        Ok(r[..self.output_channels].to_vec())
    }

    pub fn residual_point(&self, x: f64, j: &PointJet) -> [f64; 2] {
        match self.id {
            PdeId::ViscousBurgers => [j.ut[0] + j.u[0] * j.ux[0] - VISCOSITY * j.uxx[0], 0.0],
            PdeId::InviscidBurgers => [
                j.ut[0] + j.u[0] * j.ux[0] - 0.02 * (0.015 * x).exp(),
                0.0,
            ],
            PdeId::AllenCahn => {
                let u = j.u[0];
                [j.ut[0] - AC_DIFFUSION * j.uxx[0] + 5.0 * u * u * u - 5.0 * u, 0.0]
            }
            PdeId::Nls => {
                let [p, q] = j.u;
                let m = p * p + q * q;
                [
                    j.ut[0] + 0.5 * j.uxx[1] + m * q,
                    j.ut[1] - 0.5 * j.uxx[0] - m * p,
                ]
            }
        }
    }

    /// Pulls an adjoint on the residual back onto the jet fields.
    pub fn residual_vjp(&self, _x: f64, j: &PointJet, rbar: [f64; 2]) -> PointJet {
        let mut g = PointJet::default();
        match self.id {
            PdeId::ViscousBurgers | PdeId::InviscidBurgers => {
                let a = rbar[0];
                g.u[0] = a * j.ux[0];
                g.ux[0] = a * j.u[0];
                g.ut[0] = a;
                if self.id == PdeId::ViscousBurgers {
                    g.uxx[0] = -VISCOSITY * a;
                }
            }
            PdeId::AllenCahn => {
                let a = rbar[0];
                let u = j.u[0];
                g.u[0] = a * (15.0 * u * u - 5.0);
                g.ut[0] = a;
                g.uxx[0] = -AC_DIFFUSION * a;
            }
            PdeId::Nls => {
                let [a, b] = rbar;
                let [p, q] = j.u;
                g.u[0] = a * 2.0 * p * q - b * (3.0 * p * p + q * q);
                g.u[1] = a * (p * p + 3.0 * q * q) - b * 2.0 * p * q;
                g.ut = [a, b];
                g.uxx = [-0.5 * b, 0.5 * a];
            }
        }
        g
    }

    pub fn initial_condition(&self, x: f64) -> Result<Vec<f64>> {
        self.check_x(x)?;
        Ok(self.initial_value(x)[..self.output_channels].to_vec())
    }

    /// Initial condition without the domain check (spectral solvers sample it on
    /// periodic grids).
    pub(crate) fn initial_value(&self, x: f64) -> [f64; 2] {
        match self.id {
            PdeId::ViscousBurgers => [-(PI * x).sin(), 0.0],
            PdeId::InviscidBurgers => [1.0, 0.0],
            PdeId::Nls => [2.0 / x.cosh(), 0.0],
            PdeId::AllenCahn => [x * x * (PI * x).cos(), 0.0],
        }
    }

    pub fn boundary_points(&self, t: f64) -> Result<Vec<BoundaryTarget>> {
        self.check_t(t)?;
        let zero = vec![0.0; self.output_channels];
        Ok(match self.boundary_kind {
            BoundaryKind::DirichletBoth => vec![
                BoundaryTarget::Value {
                    x: self.x_min,
                    target: zero.clone(),
                },
                BoundaryTarget::Value {
                    x: self.x_max,
                    target: zero,
                },
            ],
            BoundaryKind::InflowLeft => vec![BoundaryTarget::Value {
                x: self.x_min,
                target: vec![INFLOW_VALUE],
            }],
            BoundaryKind::Periodic => vec![BoundaryTarget::Periodic {
                x_left: self.x_min,
                x_right: self.x_max,
            }],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jet(u: &[f64], ux: &[f64], ut: &[f64], uxx: &[f64]) -> Jet {
        Jet {
            u: u.to_vec(),
            du_dx: ux.to_vec(),
            du_dt: ut.to_vec(),
            d2u_dx2: uxx.to_vec(),
        }
    }

    #[test]
    fn catalog_contents() {
        let c = catalog();
        assert_eq!(c.len(), 4);
        let inv = PdeSpec::get(PdeId::InviscidBurgers);
        assert_eq!(inv.final_time, 35.0);
        assert_eq!((inv.x_min, inv.x_max), (0.0, 100.0));
        assert_eq!(PdeSpec::get(PdeId::Nls).final_time, PI / 2.0);
        assert_eq!(PdeSpec::get(PdeId::Nls).output_channels, 2);
        for s in &c {
            assert!(s.x_min < s.x_max && s.final_time > 0.0);
        }
        assert_eq!(c[0].boundary_kind, BoundaryKind::DirichletBoth);
        assert_eq!(c[1].boundary_kind, BoundaryKind::InflowLeft);
        assert_eq!(c[2].boundary_kind, BoundaryKind::Periodic);
        assert_eq!(c[3].boundary_kind, BoundaryKind::Periodic);
    }

    #[test]
    fn id_strings_roundtrip() {
        for id in PdeId::ALL {
            assert_eq!(id.as_str().parse::<PdeId>().unwrap(), id);
        }
        assert!(matches!("heat".parse::<PdeId>(), Err(Error::UnknownPde(_))));
    }

    #[test]
    fn residual_examples() {
        let visc = PdeSpec::get(PdeId::ViscousBurgers);
        assert_eq!(visc.residual(0.3, 0.1, &Jet::zeros(1)).unwrap(), vec![0.0]);

        let inv = PdeSpec::get(PdeId::InviscidBurgers);
        let r = inv.residual(0.0, 1.0, &jet(&[1.0], &[0.0], &[0.0], &[0.0])).unwrap();
        assert_eq!(r, vec![-0.02]);

        let ac = PdeSpec::get(PdeId::AllenCahn);
        for u in [1.0, -1.0] {
            let r = ac.residual(0.5, 0.5, &jet(&[u], &[0.0], &[0.0], &[0.0])).unwrap();
            assert_eq!(r, vec![0.0]);
        }

        let nls = PdeSpec::get(PdeId::Nls);
        let r = nls
            .residual(0.0, 0.0, &jet(&[2.0, 0.0], &[0.0; 2], &[0.0; 2], &[0.0; 2]))
            .unwrap();
        assert_eq!(r, vec![0.0, -8.0]);

        assert!(nls.residual(0.0, 0.0, &Jet::zeros(1)).is_err());
    }

    #[test]
    fn viscous_residual_is_linear_in_uxx() {
        let visc = PdeSpec::get(PdeId::ViscousBurgers);
        let a = visc.residual(0.1, 0.2, &jet(&[0.7], &[-1.3], &[0.4], &[2.5])).unwrap()[0];
        let b = visc.residual(0.1, 0.2, &jet(&[0.7], &[-1.3], &[0.4], &[5.0])).unwrap()[0];
        assert!((b - a + VISCOSITY * 2.5).abs() < 1e-15);
    }

    #[test]
    fn nls_matches_complex_arithmetic() {
        let nls = PdeSpec::get(PdeId::Nls);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let i = Complex64::i();
        for _ in 0..1000 {
            let mut v = [0.0; 8];
            v.iter_mut().for_each(|x| *x = rng.random_range(-3.0..3.0));
            let u = Complex64::new(v[0], v[1]);
            let ut = Complex64::new(v[2], v[3]);
            let uxx = Complex64::new(v[4], v[5]);
            let expected = ut - 0.5 * i * uxx - i * u.norm_sqr() * u;
            let r = nls
                .residual(0.0, 0.0, &jet(&[v[0], v[1]], &[v[6], v[7]], &[v[2], v[3]], &[v[4], v[5]]))
                .unwrap();
            assert!((r[0] - expected.re).abs() < 1e-12);
            assert!((r[1] - expected.im).abs() < 1e-12);
        }
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-6;
        for spec in catalog() {
            for _ in 0..50 {
                let mut j = PointJet::default();
                for c in 0..spec.output_channels {
                    j.u[c] = rng.random_range(-2.0..2.0);
                    j.ux[c] = rng.random_range(-2.0..2.0);
                    j.ut[c] = rng.random_range(-2.0..2.0);
                    j.uxx[c] = rng.random_range(-2.0..2.0);
                }
                let x = rng.random_range(spec.x_min..spec.x_max);
                let rbar = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let rbar = if spec.output_channels == 1 { [rbar[0], 0.0] } else { rbar };
                let g = spec.residual_vjp(x, &j, rbar);
                let phi = |p: &PointJet| {
                    let r = spec.residual_point(x, p);
                    r[0] * rbar[0] + r[1] * rbar[1]
                };
                type Pick = fn(&mut PointJet) -> &mut [f64; 2];
                let fields: [(Pick, [f64; 2]); 4] = [
                    (|p| &mut p.u, g.u),
                    (|p| &mut p.ux, g.ux),
                    (|p| &mut p.ut, g.ut),
                    (|p| &mut p.uxx, g.uxx),
                ];
                for (pick, analytic) in fields {
                    for c in 0..spec.output_channels {
                        let mut plus = j;
                        pick(&mut plus)[c] += h;
                        let mut minus = j;
                        pick(&mut minus)[c] -= h;
                        let fd = (phi(&plus) - phi(&minus)) / (2.0 * h);
                        assert!((fd - analytic[c]).abs() < 1e-6 * (1.0 + fd.abs()), "{:?}", spec.id);
                    }
                }
            }
        }
    }

    #[test]
    fn initial_conditions() {
        let visc = PdeSpec::get(PdeId::ViscousBurgers);
        assert!((visc.initial_condition(0.5).unwrap()[0] + 1.0).abs() < 1e-15);
        assert_eq!(PdeSpec::get(PdeId::Nls).initial_condition(0.0).unwrap(), vec![2.0, 0.0]);
        assert_eq!(PdeSpec::get(PdeId::AllenCahn).initial_condition(1.0).unwrap(), vec![-1.0]);
        assert_eq!(PdeSpec::get(PdeId::InviscidBurgers).initial_condition(42.0).unwrap(), vec![1.0]);
        assert!(visc.initial_condition(1.5).is_err());
    }

    #[test]
    fn boundary_targets() {
        let visc = PdeSpec::get(PdeId::ViscousBurgers);
        assert_eq!(
            visc.boundary_points(0.3).unwrap(),
            vec![
                BoundaryTarget::Value { x: -1.0, target: vec![0.0] },
                BoundaryTarget::Value { x: 1.0, target: vec![0.0] },
            ]
        );
        let inv = PdeSpec::get(PdeId::InviscidBurgers);
        assert_eq!(
            inv.boundary_points(20.0).unwrap(),
            vec![BoundaryTarget::Value { x: 0.0, target: vec![4.25] }]
        );
        let ac = PdeSpec::get(PdeId::AllenCahn);
        assert_eq!(
            ac.boundary_points(0.9).unwrap(),
            vec![BoundaryTarget::Periodic { x_left: -1.0, x_right: 1.0 }]
        );
        assert!(ac.boundary_points(1.1).is_err());
    }
}
