//! Unnormalized Walsh-Hadamard transform over ±1 Sylvester matrices.

use nalgebra::DMatrix;

/// In-place `v ← H v` with `H_{ij} = (−1)^{popcount(i & j)}`. Length must be a power of two.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    assert!(n.is_power_of_two(), "fwht length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Applies [`fwht`] to every column.
pub fn fwht_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        fwht(col.as_mut_slice());
    }
}

pub fn hadamard_entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `diag(signs) · rows` zero-padded to `n_pad` rows, then transformed.
pub fn signed_transform(rows: &DMatrix<f64>, signs: &[f64], n_pad: usize) -> DMatrix<f64> {
    let (n, c) = rows.shape();
    let mut out = DMatrix::zeros(n_pad, c);
    for i in 0..n {
        for j in 0..c {
            out[(i, j)] = signs[i] * rows[(i, j)];
        }
    }
    fwht_columns(&mut out);
    out
}
