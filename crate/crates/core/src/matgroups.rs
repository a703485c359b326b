//! Matrix realizations: SL(n), SO(n), Sp(2n), and the adjoint image of SL(m)
//! on traceless matrices, together with seeded sampling and the two
//! distinguished automorphisms (the Cartan involution and the SO(2m) flip).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{self, expm, frobenius, frobenius_dist, identity, inverse, real, CMatrix, LinalgError};

/// Default post-condition tolerance for maps that must stay inside a group.
pub const GROUP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("dimension mismatch: {kind} acts on C^{expected}, got a {got}x{got} matrix")]
    DimensionMismatch { kind: GroupKind, expected: usize, got: usize },
    #[error("automorphism {automorphism} does not apply to {kind}")]
    Inapplicable { automorphism: &'static str, kind: GroupKind },
    #[error("flip requires an even dimension, got {0}")]
    OddFlip(usize),
    #[error("matrix is not in {kind} (residual {residual:.3e})")]
    NotInGroup { kind: GroupKind, residual: f64 },
    #[error("result left {kind} (residual {residual:.3e})")]
    LeavesGroup { kind: GroupKind, residual: f64 },
    #[error("unknown group kind {0:?}; expected e.g. sl2, so4, sp4, adsl3")]
    UnknownKind(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A matrix group realization. `Sp(n)` is the symplectic group Sp(2n) acting
/// on C^{2n}; `AdSL(m)` is the image of SL(m) acting on traceless m×m matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    SL(usize),
    SO(usize),
    Sp(usize),
    AdSL(usize),
}

impl GroupKind {
    pub fn ambient_dim(self) -> usize {
        match self {
            GroupKind::SL(n) | GroupKind::SO(n) => n,
            GroupKind::Sp(n) => 2 * n,
            GroupKind::AdSL(m) => m * m - 1,
        }
    }

    pub fn is_even_orthogonal(self) -> bool {
        matches!(self, GroupKind::SO(n) if n % 2 == 0)
    }

    fn validate(self) -> Result<Self, GroupError> {
        let ok = match self {
            GroupKind::SL(n) | GroupKind::SO(n) => n >= 1,
            GroupKind::Sp(n) => n >= 1,
            GroupKind::AdSL(m) => m >= 2,
        };
        if ok {
            Ok(self)
        } else {
            Err(GroupError::UnknownKind(self.to_string()))
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GroupKind::SL(n) => write!(f, "sl{n}"),
            GroupKind::SO(n) => write!(f, "so{n}"),
            GroupKind::Sp(n) => write!(f, "sp{}", 2 * n),
            GroupKind::AdSL(m) => write!(f, "adsl{m}"),
        }
    }
}

impl FromStr for GroupKind {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GroupError::UnknownKind(s.to_string());
        let split = s.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let (tag, num) = s.split_at(split);
        let n: usize = num.parse().map_err(|_| bad())?;
        let kind = match tag {
            "sl" => GroupKind::SL(n),
            "so" => GroupKind::SO(n),
            "sp" if n.is_multiple_of(2) => GroupKind::Sp(n / 2),
            "adsl" => GroupKind::AdSL(n),
            _ => return Err(bad()),
        };
        kind.validate().map_err(|_| bad())
    }
}

impl Serialize for GroupKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Automorphism {
    Inner(CMatrix),
    /// A ↦ (A⁻¹)ᵀ, induced on the adjoint image through its differential.
    Cartan,
    /// Conjugation by diag(−1, 1, …, 1) on SO(2m).
    Flip,
}

impl Automorphism {
    pub fn label(&self) -> &'static str {
        match self {
            Automorphism::Inner(_) => "inner",
            Automorphism::Cartan => "cartan",
            Automorphism::Flip => "flip",
        }
    }
}

impl Serialize for Automorphism {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// Scalar field used when sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Field {
    #[default]
    Complex,
    Real,
}

/// J = [[0, I], [−I, 0]] of size 2n.
pub fn symplectic_form(n: usize) -> CMatrix {
    CMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if j == i + n {
            real(1.0)
        } else if i == j + n {
            real(-1.0)
        } else {
            Complex64::ZERO
        }
    })
}

pub fn rotation2(theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    linalg::from_real_rows(&[&[co, -s], &[s, co]])
}

/// Basis of traceless m×m matrices: E_ij (i≠j) in row-major order, then
/// E_kk − E_{k+1,k+1} for k = 1..m−1.
pub fn traceless_basis(m: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(m * m - 1);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let mut e = CMatrix::zeros(m, m);
                e[(i, j)] = real(1.0);
                basis.push(e);
            }
        }
    }
    for k in 0..m - 1 {
        let mut h = CMatrix::zeros(m, m);
        h[(k, k)] = real(1.0);
        h[(k + 1, k + 1)] = real(-1.0);
        basis.push(h);
    }
    basis
}

/// Coordinates of a traceless matrix in [`traceless_basis`]. The trace part
/// of a non-traceless input is discarded.
pub fn traceless_coords(x: &CMatrix) -> Vec<Complex64> {
    let m = x.nrows();
    let mut coords = Vec::with_capacity(m * m - 1);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                coords.push(x[(i, j)]);
            }
        }
    }
    let shift = x.trace() / real(m as f64);
    let mut partial = Complex64::ZERO;
    for k in 0..m - 1 {
        partial += x[(k, k)] - shift;
        coords.push(partial);
    }
    coords
}

pub fn from_traceless_coords(m: usize, coords: &[Complex64]) -> CMatrix {
    let mut x = CMatrix::zeros(m, m);
    let mut idx = 0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                x[(i, j)] = coords[idx];
                idx += 1;
            }
        }
    }
    for k in 0..m - 1 {
        let ck = coords[idx + k];
        x[(k, k)] += ck;
        x[(k + 1, k + 1)] -= ck;
    }
    x
}

/// Matrix of a linear map on traceless matrices, in [`traceless_basis`].
pub fn traceless_operator(m: usize, f: impl Fn(&CMatrix) -> CMatrix) -> CMatrix {
    let basis = traceless_basis(m);
    let d = basis.len();
    let mut out = CMatrix::zeros(d, d);
    for (j, e) in basis.iter().enumerate() {
        for (i, v) in traceless_coords(&f(e)).into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// The transpose map M ↦ Mᵀ on traceless matrices.
pub fn transpose_operator(m: usize) -> CMatrix {
    traceless_operator(m, |x| x.transpose())
}

/// Differential of the Cartan involution, X ↦ −Xᵀ.
pub fn cartan_differential(m: usize) -> CMatrix {
    -transpose_operator(m)
}

/// Gram matrix of the trace form tr(XY) in [`traceless_basis`]; proportional
/// to the Killing form of sl(m).
pub fn killing_gram(m: usize) -> CMatrix {
    let basis = traceless_basis(m);
    let d = basis.len();
    CMatrix::from_fn(d, d, |i, j| (&basis[i] * &basis[j]).trace())
}

fn check_dim(m: &CMatrix, kind: GroupKind) -> Result<(), GroupError> {
    let expected = kind.ambient_dim();
    if m.nrows() != expected || m.ncols() != expected {
        return Err(GroupError::DimensionMismatch { kind, expected, got: m.nrows() });
    }
    Ok(())
}

/// Distance of `mat` from preserving the Lie bracket of sl(m), relative to
/// the squared norm of `mat`.
fn bracket_residual(m: usize, mat: &CMatrix) -> f64 {
    let basis = traceless_basis(m);
    let images: Vec<CMatrix> = (0..basis.len()).map(|j| from_traceless_coords(m, mat.column(j).as_slice())).collect();
    let scale = 1.0 + frobenius(mat).powi(2);
    let mut worst: f64 = 0.0;
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            let br = &basis[i] * &basis[j] - &basis[j] * &basis[i];
            let coords = nalgebra::DVector::from_vec(traceless_coords(&br));
            let lhs = from_traceless_coords(m, (mat * coords).as_slice());
            let rhs = &images[i] * &images[j] - &images[j] * &images[i];
            worst = worst.max(frobenius_dist(&lhs, &rhs) / scale);
        }
    }
    worst
}

/// Nonnegative residual that vanishes exactly on the group.
///
/// SL: |det M − 1|. SO: ‖MᵀM − I‖ + |det M − 1|. Sp: ‖MᵀJM − J‖.
/// AdSL(m): defects in preserving the trace form and the Lie bracket of
/// sl(m), plus |det M − 1|, each relative to 1 + ‖M‖². Adjoint images have
/// ‖M⁻¹‖ ≈ ‖M‖, so this is the roundoff scale of det M. This cuts out the inner automorphisms
/// of sl(m) together with outer ones of determinant 1; the outer class of
/// X ↦ −Xᵀ has determinant −1 for m = 3, 4.
pub fn membership_residual(mat: &CMatrix, kind: GroupKind) -> Result<f64, GroupError> {
    check_dim(mat, kind)?;
    let n = kind.ambient_dim();
    let det_defect = (mat.determinant() - real(1.0)).norm();
    let r = match kind {
        GroupKind::SL(_) => det_defect,
        GroupKind::SO(_) => frobenius_dist(&(mat.transpose() * mat), &identity(n)) + det_defect,
        GroupKind::Sp(h) => {
            let j = symplectic_form(h);
            frobenius_dist(&(mat.transpose() * &j * mat), &j)
        }
        GroupKind::AdSL(m) => {
            let g = killing_gram(m);
            let size = 1.0 + frobenius(mat).powi(2);
            let form = frobenius_dist(&(mat.transpose() * &g * mat), &g) / (size * frobenius(&g));
            form + bracket_residual(m, mat) + det_defect / size
        }
    };
    Ok(r)
}

fn gaussian(rng: &mut ChaCha8Rng, field: Field) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    match field {
        Field::Real => real(re),
        Field::Complex => {
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, field: Field) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| gaussian(rng, field))
}

/// Seeded sample with complex entries.
pub fn sample(kind: GroupKind, seed: u64) -> CMatrix {
    sample_with(kind, seed, Field::Complex)
}

/// Seeded sample; `Field::Real` draws from the real form.
pub fn sample_with(kind: GroupKind, seed: u64, field: Field) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GroupKind::SL(n) => sample_sl(&mut rng, n, field),
        GroupKind::SO(n) => {
            let g = gaussian_matrix(&mut rng, n, field);
            let k = (&g - g.transpose()) * real(1.0 / (2.0 * n as f64).sqrt());
            expm(&k)
        }
        GroupKind::Sp(h) => {
            let n = 2 * h;
            let g = gaussian_matrix(&mut rng, n, field);
            let s = (&g + g.transpose()) * real(1.0 / (2.0 * n as f64).sqrt());
            expm(&(symplectic_form(h) * s))
        }
        GroupKind::AdSL(m) => {
            let a = sample_sl(&mut rng, m, field);
            adjoint_image_unchecked(&a)
        }
    }
}

fn sample_sl(rng: &mut ChaCha8Rng, n: usize, field: Field) -> CMatrix {
    loop {
        let mut a = gaussian_matrix(rng, n, field);
        if linalg::condition_number(&a) > 1e6 {
            continue;
        }
        let mut det = a.determinant();
        if field == Field::Real && det.re < 0.0 {
            a.row_mut(0).neg_mut();
            det = -det;
        }
        // principal branch of det^(-1/n)
        let scale = det.powf(-1.0 / n as f64);
        let scale = if field == Field::Real { real(scale.re) } else { scale };
        return a * scale;
    }
}

/// (M⁻¹)ᵀ with the condition-number guard.
pub fn cartan(mat: &CMatrix) -> Result<CMatrix, GroupError> {
    Ok(inverse(mat)?.transpose())
}

fn adjoint_image_unchecked(a: &CMatrix) -> CMatrix {
    let m = a.nrows();
    let a_inv = inverse(a).expect("sampled SL(m) element is well conditioned");
    traceless_operator(m, |x| a * x * &a_inv)
}

/// Matrix of X ↦ A X A⁻¹ on traceless matrices.
pub fn adjoint_image(a: &CMatrix) -> Result<CMatrix, GroupError> {
    let m = a.nrows();
    let kind = GroupKind::SL(m);
    let residual = membership_residual(a, kind)?;
    if residual > GROUP_TOLERANCE {
        return Err(GroupError::NotInGroup { kind, residual });
    }
    let a_inv = inverse(a)?;
    Ok(traceless_operator(m, |x| a * x * &a_inv))
}

/// diag(−1, 1, …, 1): orthogonal with determinant −1.
pub fn flip_matrix(n: usize) -> Result<CMatrix, GroupError> {
    if n == 0 || n % 2 == 1 {
        return Err(GroupError::OddFlip(n));
    }
    let mut q = identity(n);
    q[(0, 0)] = real(-1.0);
    Ok(q)
}

fn apply_unchecked(alpha: &Automorphism, mat: &CMatrix, kind: GroupKind) -> Result<CMatrix, GroupError> {
    check_dim(mat, kind)?;
    match alpha {
        Automorphism::Inner(g) => {
            if g.nrows() != mat.nrows() {
                return Err(GroupError::DimensionMismatch { kind, expected: mat.nrows(), got: g.nrows() });
            }
            Ok(g * mat * inverse(g)?)
        }
        Automorphism::Cartan => match kind {
            GroupKind::AdSL(m) => {
                let theta = cartan_differential(m);
                Ok(&theta * mat * &theta)
            }
            _ => cartan(mat),
        },
        Automorphism::Flip => {
            if !kind.is_even_orthogonal() {
                return Err(GroupError::Inapplicable { automorphism: "flip", kind });
            }
            let q = flip_matrix(kind.ambient_dim())?;
            Ok(&q * mat * &q)
        }
    }
}

/// Applies `alpha` to an element of `kind`. The result is checked to stay in
/// the group to [`GROUP_TOLERANCE`].
pub fn apply_automorphism(alpha: &Automorphism, mat: &CMatrix, kind: GroupKind) -> Result<CMatrix, GroupError> {
    let out = apply_unchecked(alpha, mat, kind)?;
    let residual = membership_residual(&out, kind)?;
    if !(residual <= GROUP_TOLERANCE) {
        return Err(GroupError::LeavesGroup { kind, residual });
    }
    Ok(out)
}
