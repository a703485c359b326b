//! Dense complex matrix helpers on top of `nalgebra`.

use nalgebra::{DMatrix, Dyn, SVD};
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;

/// Inversion refuses inputs whose 2-norm condition number exceeds this.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular or ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| real(rows[i][j]))
}

pub fn diag_real(entries: &[f64]) -> CMatrix {
    let n = entries.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { real(entries[i]) } else { Complex64::ZERO })
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_dist(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// SVD with a convergence threshold below the type epsilon. The default
/// threshold leaves visibly wrong singular vectors on rank-deficient input.
pub fn svd(m: &CMatrix, compute_u: bool, compute_v: bool) -> SVD<Complex64, Dyn, Dyn> {
    SVD::try_new(m.clone(), compute_u, compute_v, SVD_EPS, SVD_MAX_ITER)
        .unwrap_or_else(|| m.clone().svd(compute_u, compute_v))
}

const SVD_EPS: f64 = 1e-16;
const SVD_MAX_ITER: usize = 100_000;

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd(m, false, false).singular_values.iter().copied().collect()
}

pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse with the condition-number guard.
pub fn inverse(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    let cond = condition_number(m);
    if !(cond <= CONDITION_LIMIT) {
        return Err(LinalgError::IllConditioned(cond));
    }
    m.clone().try_inverse().ok_or(LinalgError::IllConditioned(cond))
}

/// Numerical rank: singular values below `rel` times the largest count as zero.
pub fn numerical_rank(sv: &[f64], rel: f64) -> usize {
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * max).count()
}

/// Column-major vectorisation of a square matrix.
pub fn vectorize(m: &CMatrix) -> Vec<Complex64> {
    m.as_slice().to_vec()
}

pub fn unvectorize(n: usize, v: &[Complex64]) -> CMatrix {
    CMatrix::from_column_slice(n, n, v)
}

/// Orthonormal basis of the null space of `a`: right singular vectors whose
/// singular value is at most `rel` times the largest. Returns the basis and
/// the full singular spectrum, padded with zeros when `a` is wide.
pub fn null_space(a: &CMatrix, rel: f64) -> (Vec<Vec<Complex64>>, Vec<f64>) {
    let cols = a.ncols();
    // pad wide systems so the SVD yields a full right basis
    let a = if a.nrows() < cols {
        let mut padded = CMatrix::zeros(cols, cols);
        padded.rows_mut(0, a.nrows()).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = svd(&a, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let max = sv.first().copied().unwrap_or(0.0);
    let mut basis = Vec::new();
    for (k, &s) in sv.iter().enumerate() {
        if max == 0.0 || s <= rel * max {
            // V's k-th column is the conjugate of the k-th row of Vᴴ
            basis.push(v_t.row(k).iter().map(|z| z.conj()).collect());
        }
    }
    (basis, sv)
}

/// Row-major `[re, im]` pairs, the JSON shape used for matrices in reports.
pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn serialize_matrix<S: serde::Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&matrix_rows(m), s)
}

pub fn serialize_opt_matrix<S: serde::Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&m.as_ref().map(matrix_rows), s)
}

pub fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&[z.re, z.im], s)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    // theta_13 for the 1-norm
    const THETA: f64 = 5.371_920_351_148_152;
    let n = a.nrows();
    let norm = a.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm > THETA { (norm / THETA).log2().ceil() as i32 } else { 0 };
    let scaled = a * real(2f64.powi(-s));
    let id = identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let r = |x: f64| real(x);
    let u_inner = &a6 * (&a6 * r(B[13]) + &a4 * r(B[11]) + &a2 * r(B[9]))
        + &a6 * r(B[7])
        + &a4 * r(B[5])
        + &a2 * r(B[3])
        + &id * r(B[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * r(B[12]) + &a4 * r(B[10]) + &a2 * r(B[8]))
        + &a6 * r(B[6])
        + &a4 * r(B[4])
        + &a2 * r(B[2])
        + &id * r(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut e = q.lu().solve(&p).expect("Padé denominator is invertible for scaled input");
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_matches_nalgebra_reference() {
        let a = CMatrix::from_fn(4, 4, |i, j| c((i as f64 - j as f64) * 0.7, 0.3 * (i * j) as f64 - 0.5));
        for scale in [0.01, 1.0, 6.0] {
            let m = &a * real(scale);
            let ours = expm(&m);
            let reference = m.exp();
            assert!(frobenius_dist(&ours, &reference) <= 1e-10 * (1.0 + frobenius(&reference)));
        }
    }

    #[test]
    fn expm_of_diagonal() {
        let d = diag_real(&[0.0, 1.0, -2.0]);
        let e = expm(&d);
        let expected = diag_real(&[1.0, 1f64.exp(), (-2f64).exp()]);
        assert!(frobenius_dist(&e, &expected) < 1e-13);
    }

    #[test]
    fn inverse_guard() {
        assert!(matches!(inverse(&diag_real(&[1.0, 1e-13])), Err(LinalgError::IllConditioned(_))));
        assert!(matches!(inverse(&diag_real(&[1.0, 0.0])), Err(LinalgError::IllConditioned(_))));
        let m = diag_real(&[2.0, 0.5]);
        assert!(frobenius_dist(&inverse(&m).unwrap(), &diag_real(&[0.5, 2.0])) < 1e-15);
    }

    #[test]
    fn svd_reconstructs_rank_deficient_complex() {
        // rank 3 inside a 9x9 complex matrix
        let left =
            CMatrix::from_fn(9, 3, |i, j| c((i * 3 + j) as f64 * 0.37 % 1.3 - 0.6, ((i + 2 * j) % 5) as f64 * 0.21));
        let right = CMatrix::from_fn(3, 9, |i, j| c(((i + j) % 4) as f64 - 1.5, (i * j) as f64 * 0.1));
        let m = &left * &right;
        let d = svd(&m, true, true);
        let u = d.u.clone().unwrap();
        let sigma = CMatrix::from_diagonal(&d.singular_values.map(real));
        let recon = &u * sigma * d.v_t.clone().unwrap();
        assert!(frobenius_dist(&recon, &m) < 1e-12 * frobenius(&m));
        assert_eq!(numerical_rank(d.singular_values.as_slice(), 1e-7), 3);
        let (basis, _) = null_space(&m, 1e-7);
        assert_eq!(basis.len(), 6);
        for v in basis {
            assert!((&m * nalgebra::DVector::from_vec(v)).norm() < 1e-12 * frobenius(&m));
        }
    }

    #[test]
    fn null_space_of_rank_deficient() {
        let a = from_real_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let (basis, _) = null_space(&a, 1e-7);
        assert_eq!(basis.len(), 2);
        for v in basis {
            let x = nalgebra::DVector::from_vec(v);
            assert!((&a * x).norm() < 1e-12);
        }
    }
}
