//! Dense helpers shared by the analyses.

use nalgebra::{DMatrix, SymmetricEigen};

/// `max_{x,x'} (1/2) sum_y |m(x,y) - m(x',y)|`.
pub fn max_row_tv(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for x2 in (x + 1)..n {
            let mut s = 0.0;
            for y in 0..m.ncols() {
                s += (m[(x, y)] - m[(x2, y)]).abs();
            }
            worst = worst.max(0.5 * s);
        }
    }
    worst.min(1.0)
}

/// `max_y max_x m(x,y) / min_x m(x,y) - 1`, where an all-zero column
/// contributes 0 and a column mixing zero and positive entries gives `+inf`.
pub fn relsup_spread(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for col in m.column_iter() {
        let hi = col.max();
        let lo = col.min();
        if hi == 0.0 {
            continue;
        }
        if lo == 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max(hi / lo - 1.0);
    }
    worst
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors (as columns)
/// of a symmetric matrix. The input is symmetrized first.
pub fn symmetric_eigen_desc(s: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= f64::abs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
