//! Dense loops over row-major blocks.
//!
//! Accumulation order is fixed per output element and independent of the
//! number of columns, so a value computed on its own and the same value
//! computed inside a wider jet block agree bit for bit.

/// `out[i, j] = (j < bias_cols ? b[i] : 0) + sum_k w[i, k] * h[k, j]`.
pub(crate) fn affine(
    w: &[f64],
    b: &[f64],
    rows: usize,
    cols: usize,
    h: &[f64],
    ncol: usize,
    bias_cols: usize,
    out: &mut [f64],
) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(h.len(), cols * ncol);
    debug_assert_eq!(out.len(), rows * ncol);
    for i in 0..rows {
        let row = &mut out[i * ncol..(i + 1) * ncol];
        row[..bias_cols].fill(b[i]);
        row[bias_cols..].fill(0.0);
        let wi = &w[i * cols..(i + 1) * cols];
        for (k, &wik) in wi.iter().enumerate() {
            let hk = &h[k * ncol..(k + 1) * ncol];
            for (o, &x) in row.iter_mut().zip(hk) {
                *o += wik * x;
            }
        }
    }
}

/// `gh[k, :] += sum_i w[i, k] * gz[i, :]`.
pub(crate) fn transpose_mul_add(
    w: &[f64],
    rows: usize,
    cols: usize,
    gz: &[f64],
    ncol: usize,
    gh: &mut [f64],
) {
    for i in 0..rows {
        let gzi = &gz[i * ncol..(i + 1) * ncol];
        let wi = &w[i * cols..(i + 1) * cols];
        for (k, &wik) in wi.iter().enumerate() {
            let ghk = &mut gh[k * ncol..(k + 1) * ncol];
            for (o, &x) in ghk.iter_mut().zip(gzi) {
                *o += wik * x;
            }
        }
    }
}

/// `gw[i, k] += dot(gz[i, :], h[k, :])`.
pub(crate) fn outer_add(
    gz: &[f64],
    rows: usize,
    h: &[f64],
    cols: usize,
    ncol: usize,
    gw: &mut [f64],
) {
    for i in 0..rows {
        let gzi = &gz[i * ncol..(i + 1) * ncol];
        for k in 0..cols {
            gw[i * cols + k] += dot(gzi, &h[k * ncol..(k + 1) * ncol]);
        }
    }
}

/// Dot product with eight independent partial sums.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}
