//! Gauss-Hermite nodes and weights for `int f(z) exp(-z^2) dz`.

use crate::{Error, Result};

const MAX_ITER: usize = 100;

/// Newton iteration on the orthonormal Hermite recurrence, starting from the
/// usual asymptotic guesses for the largest roots. Nodes come back in
/// descending order.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut converged = false;
        let mut pp = 0.0;
        for _ in 0..MAX_ITER {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !z.is_finite() {
            return Err(Error::Solver(format!("Hermite root {i} of {n} did not converge")));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_point_rule() {
        let (x, w) = gauss_hermite(2).unwrap();
        let r = 0.5f64.sqrt();
        assert!((x[0] - r).abs() < 1e-14 && (x[1] + r).abs() < 1e-14);
        assert!((w[0] - PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn moments_are_exact() {
        for n in [5, 20, 100, 160] {
            let (x, w) = gauss_hermite(n).unwrap();
            let m = |p: i32| x.iter().zip(&w).map(|(z, w)| w * z.powi(p)).sum::<f64>();
            assert!((m(0) - PI.sqrt()).abs() < 1e-12, "n = {n}");
            assert!((m(2) - PI.sqrt() / 2.0).abs() < 1e-12, "n = {n}");
            assert!((m(4) - 3.0 * PI.sqrt() / 4.0).abs() < 1e-12, "n = {n}");
            assert!(m(3).abs() < 1e-12);
            // a non-polynomial integrand: int cos(z) e^{-z^2} = sqrt(pi) e^{-1/4}
            let c: f64 = x.iter().zip(&w).map(|(z, w)| w * z.cos()).sum();
            if n >= 20 {
                assert!((c - PI.sqrt() * (-0.25f64).exp()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(gauss_hermite(0).is_err());
    }
}
