//! Conjugacy of representations through their intertwiner spaces.
//!
//! Hom(ρ_A, ρ_B) = {X : X ρ_A(γ) = ρ_B(γ) X} is the null space of the stacked
//! maps X ↦ X A_i − B_i X. An invertible element conjugates ρ_A to ρ_B in GL(n).
//! For a group preserving a bilinear form F, XᵀFX is a scalar multiple of F
//! on every intertwiner between irreducible form-preserving representations,
//! so in one dimension the only form-preserving candidates are ±X/√Q. Their
//! determinant is a discrete invariant; in even dimension it does not depend
//! on the sign choice. That is the obstruction used for SO(2m).

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{
    self, frobenius, frobenius_dist, identity, inverse, null_space, real, serialize_opt_matrix, unvectorize, CMatrix,
    LinalgError,
};
use crate::matgroups::{killing_gram, membership_residual, symplectic_form, GroupError, GroupKind};
use crate::reps::Representation;
use crate::seeds::derive_seed;

/// Relative singular-value threshold for the intertwiner null space.
pub const NULL_SPACE_THRESHOLD: f64 = 1e-7;

/// Conjugation and group residual bar for a `conjugate` verdict.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-6;

/// Candidates closer than this to the group are not treated as violations.
pub const VIOLATION_MARGIN: f64 = 1e-3;

/// Random combinations tried in spaces of dimension above one.
pub const RANDOM_COMBINATIONS: usize = 20;
pub const MULTISTARTS: usize = 20;
pub const GN_DAMPING: f64 = 1e-10;
pub const GN_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConjugacyError {
    #[error(
        "representations differ: {left_dim}x{left_dim} rank {left_rank} vs {right_dim}x{right_dim} rank {right_rank}"
    )]
    Mismatch { left_dim: usize, left_rank: usize, right_dim: usize, right_rank: usize },
    #[error("target {target} acts on C^{expected}, representations on C^{got}")]
    TargetDimension { target: String, expected: usize, got: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Frobenius-orthonormal basis of Hom(ρ_A, ρ_B).
#[derive(Debug, Clone, PartialEq)]
pub struct IntertwinerSpace {
    pub basis: Vec<CMatrix>,
    pub dimension: usize,
    /// max over basis elements and generators of ‖X A_i − B_i X‖_F.
    pub residual: f64,
    /// Spectrum of the stacked system, largest first.
    pub singular_values: Vec<f64>,
}

fn check_pair(a: &Representation, b: &Representation) -> Result<(), ConjugacyError> {
    if a.dim() != b.dim() || a.rank() != b.rank() {
        return Err(ConjugacyError::Mismatch {
            left_dim: a.dim(),
            left_rank: a.rank(),
            right_dim: b.dim(),
            right_rank: b.rank(),
        });
    }
    Ok(())
}

pub fn intertwiner_basis(a: &Representation, b: &Representation) -> Result<IntertwinerSpace, ConjugacyError> {
    check_pair(a, b)?;
    let n = a.dim();
    let id = identity(n);
    let r = a.rank();
    // vec(XA) = (Aᵀ ⊗ I) vec X and vec(BX) = (I ⊗ B) vec X, column-major
    let mut stacked = CMatrix::zeros(r * n * n, n * n);
    for (i, (ai, bi)) in a.images().iter().zip(b.images()).enumerate() {
        let block = ai.transpose().kronecker(&id) - id.kronecker(bi);
        stacked.rows_mut(i * n * n, n * n).copy_from(&block);
    }
    let (vectors, singular_values) = null_space(&stacked, NULL_SPACE_THRESHOLD);
    let basis: Vec<CMatrix> = vectors.iter().map(|v| unvectorize(n, v)).collect();
    let residual = basis
        .iter()
        .flat_map(|x| a.images().iter().zip(b.images()).map(move |(ai, bi)| frobenius(&(x * ai - bi * x))))
        .fold(0.0, f64::max);
    Ok(IntertwinerSpace { dimension: basis.len(), basis, residual, singular_values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Conjugate,
    NotConjugate,
    Inconclusive,
}

/// Discrete reason behind a `not_conjugate` verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Obstruction {
    /// No nonzero intertwiner exists.
    EmptyIntertwiner,
    /// The intertwiner space is a line of singular matrices.
    SingularIntertwiner { relative_min_singular_value: f64 },
    /// Every form-preserving intertwiner has this determinant (≈ −1), and
    /// the group requires determinant 1.
    DeterminantSign {
        #[serde(serialize_with = "linalg::serialize_complex")]
        determinant: Complex64,
    },
    /// Both form-preserving candidates ±X/√Q miss the group by at least the
    /// margin.
    CandidatesViolate { candidate_residuals: Vec<f64>, margin: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugacyCertificate {
    pub verdict: Verdict,
    /// Group the conjugator was required to lie in, if any.
    pub target: Option<String>,
    pub intertwiner_dim: usize,
    #[serde(serialize_with = "serialize_opt_matrix")]
    pub conjugator: Option<CMatrix>,
    /// max_i ‖g A_i g⁻¹ − B_i‖_F for the reported conjugator.
    pub residual: Option<f64>,
    /// Membership residual of the conjugator in the target (0 without one).
    pub group_residual: Option<f64>,
    pub obstruction: Option<Obstruction>,
    pub narrative: String,
}

impl ConjugacyCertificate {
    fn new(verdict: Verdict, target: Option<String>, dim: usize, narrative: impl Into<String>) -> Self {
        ConjugacyCertificate {
            verdict,
            target,
            intertwiner_dim: dim,
            conjugator: None,
            residual: None,
            group_residual: None,
            obstruction: None,
            narrative: narrative.into(),
        }
    }

    fn obstructed(target: Option<String>, dim: usize, obstruction: Obstruction, narrative: impl Into<String>) -> Self {
        let mut c = Self::new(Verdict::NotConjugate, target, dim, narrative);
        c.obstruction = Some(obstruction);
        c
    }
}

/// max_i ‖g A_i g⁻¹ − B_i‖_F, or `None` when g is not safely invertible.
pub fn conjugation_residual(g: &CMatrix, a: &Representation, b: &Representation) -> Option<f64> {
    let g_inv = inverse(g).ok()?;
    Some(a.images().iter().zip(b.images()).map(|(ai, bi)| frobenius_dist(&(g * ai * &g_inv), bi)).fold(0.0, f64::max))
}

fn relative_min_singular_value(m: &CMatrix) -> f64 {
    let sv = linalg::singular_values(m);
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        0.0
    } else {
        sv.last().copied().unwrap_or(0.0) / max
    }
}

fn combination(basis: &[CMatrix], c: &[Complex64]) -> CMatrix {
    let n = basis[0].nrows();
    basis.iter().zip(c).fold(CMatrix::zeros(n, n), |acc, (x, &ci)| acc + x * ci)
}

fn random_coefficients(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
    (0..k)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GlOptions {
    /// Scale the conjugator to determinant 1.
    pub sl_normalize: bool,
    pub seed: u64,
}

/// Conjugacy in GL(n) (or SL(n) with `sl_normalize`).
pub fn gl_conjugacy(
    a: &Representation,
    b: &Representation,
    options: GlOptions,
) -> Result<ConjugacyCertificate, ConjugacyError> {
    let space = intertwiner_basis(a, b)?;
    let target = options.sl_normalize.then(|| format!("sl{}", a.dim()));
    Ok(gl_from_space(a, b, &space, options, target))
}

fn gl_from_space(
    a: &Representation,
    b: &Representation,
    space: &IntertwinerSpace,
    options: GlOptions,
    target: Option<String>,
) -> ConjugacyCertificate {
    let n = a.dim();
    let dim = space.dimension;
    if dim == 0 {
        return ConjugacyCertificate::obstructed(
            target,
            0,
            Obstruction::EmptyIntertwiner,
            "the intertwiner space is zero, so no matrix conjugates one tuple to the other",
        );
    }
    let (x, quality) = if dim == 1 {
        let x = space.basis[0].clone();
        let q = relative_min_singular_value(&x);
        if q <= NULL_SPACE_THRESHOLD {
            return ConjugacyCertificate::obstructed(
                target,
                1,
                Obstruction::SingularIntertwiner { relative_min_singular_value: q },
                "the intertwiner space is spanned by a singular matrix",
            );
        }
        (x, q)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut best: Option<(CMatrix, f64)> = None;
        for _ in 0..RANDOM_COMBINATIONS {
            let x = combination(&space.basis, &random_coefficients(&mut rng, dim));
            let q = relative_min_singular_value(&x);
            if best.as_ref().is_none_or(|(_, bq)| q > *bq) {
                best = Some((x, q));
            }
        }
        best.expect("at least one combination")
    };
    if quality <= NULL_SPACE_THRESHOLD {
        return ConjugacyCertificate::new(
            Verdict::Inconclusive,
            target,
            dim,
            "every sampled intertwiner combination is numerically singular",
        );
    }
    let x = if options.sl_normalize {
        let det = x.determinant();
        &x * det.powf(-1.0 / n as f64)
    } else {
        let norm = frobenius(&x);
        x * real(1.0 / norm)
    };
    let residual = conjugation_residual(&x, a, b);
    let group_residual = if options.sl_normalize { (x.determinant() - real(1.0)).norm() } else { 0.0 };
    let ok = residual.is_some_and(|r| r <= CERTIFICATE_TOLERANCE) && group_residual <= CERTIFICATE_TOLERANCE;
    let mut cert = ConjugacyCertificate::new(
        if ok { Verdict::Conjugate } else { Verdict::Inconclusive },
        target,
        dim,
        if ok {
            "an invertible intertwiner conjugates the generators within tolerance"
        } else {
            "the best invertible intertwiner misses the generators beyond tolerance"
        },
    );
    cert.conjugator = Some(x);
    cert.residual = residual;
    cert.group_residual = Some(group_residual);
    cert
}

/// Group in which a conjugator is sought.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Group(GroupKind),
    /// The full orthogonal group O(n): XᵀX = I with no determinant condition.
    Orthogonal(usize),
}

impl Target {
    pub fn dim(self) -> usize {
        match self {
            Target::Group(k) => k.ambient_dim(),
            Target::Orthogonal(n) => n,
        }
    }

    pub fn label(self) -> String {
        match self {
            Target::Group(k) => k.to_string(),
            Target::Orthogonal(n) => format!("o{n}"),
        }
    }

    /// Bilinear form F with XᵀFX = F on the group; none for SL.
    fn form(self) -> Option<CMatrix> {
        match self {
            Target::Group(GroupKind::SL(_)) => None,
            Target::Group(GroupKind::SO(n)) | Target::Orthogonal(n) => Some(identity(n)),
            Target::Group(GroupKind::Sp(h)) => Some(symplectic_form(h)),
            Target::Group(GroupKind::AdSL(m)) => Some(killing_gram(m)),
        }
    }

    /// Whether determinant 1 is required beyond preserving the form.
    fn needs_det_one(self) -> bool {
        matches!(self, Target::Group(GroupKind::SO(_) | GroupKind::AdSL(_)))
    }

    pub fn residual(self, x: &CMatrix) -> Result<f64, GroupError> {
        match self {
            Target::Group(k) => membership_residual(x, k),
            Target::Orthogonal(n) => Ok(frobenius_dist(&(x.transpose() * x), &identity(n))),
        }
    }
}

/// If XᵀFX = Q·F, returns Q.
fn scalar_gram(x: &CMatrix, form: &CMatrix, form_inv: &CMatrix) -> Option<Complex64> {
    let s = form_inv * x.transpose() * form * x;
    let n = s.nrows();
    let q = s.trace() / n as f64;
    let defect = frobenius_dist(&s, &(identity(n) * q));
    (defect <= 1e-8 * (1.0 + frobenius(&s))).then_some(q)
}

/// Conjugacy inside `target`.
///
/// In intertwiner dimension ≤ 2 with a scalar Gram map the form-preserving
/// candidates are analysed exactly (see the module docs); otherwise a damped
/// Gauss–Newton multistart minimizes ‖XᵀFX − F‖² (+ |det X − 1|²) over the
/// space. Optimizer failure alone gives `inconclusive`.
pub fn constrained_conjugacy(
    a: &Representation,
    b: &Representation,
    target: Target,
    seed: u64,
) -> Result<ConjugacyCertificate, ConjugacyError> {
    check_pair(a, b)?;
    if target.dim() != a.dim() {
        return Err(ConjugacyError::TargetDimension { target: target.label(), expected: target.dim(), got: a.dim() });
    }
    let space = intertwiner_basis(a, b)?;
    let label = Some(target.label());
    let form = match target.form() {
        None => {
            let mut cert = gl_from_space(a, b, &space, GlOptions { sl_normalize: true, seed }, label);
            if let Some(x) = &cert.conjugator {
                cert.group_residual = Some(target.residual(x)?);
            }
            return Ok(cert);
        }
        Some(f) => f,
    };
    let dim = space.dimension;
    if dim == 0 {
        return Ok(ConjugacyCertificate::obstructed(
            label,
            0,
            Obstruction::EmptyIntertwiner,
            "the intertwiner space is zero, so the tuples are not conjugate even in GL(n)",
        ));
    }
    let form_inv = inverse(&form)?;
    if dim <= 2 {
        if let Some(cert) = small_space_analysis(a, b, &space, target, &form, &form_inv, seed)? {
            return Ok(cert);
        }
    }
    gauss_newton_search(a, b, &space, target, &form, seed)
}

fn small_space_analysis(
    a: &Representation,
    b: &Representation,
    space: &IntertwinerSpace,
    target: Target,
    form: &CMatrix,
    form_inv: &CMatrix,
    seed: u64,
) -> Result<Option<ConjugacyCertificate>, ConjugacyError> {
    let n = a.dim();
    let dim = space.dimension;
    let label = Some(target.label());
    // a fixed line for dim 1; seeded probes for dim 2, all of which must have
    // a scalar Gram map
    let probes: Vec<Vec<Complex64>> = if dim == 1 {
        vec![vec![real(1.0)]]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..3).map(|_| random_coefficients(&mut rng, dim)).collect()
    };
    let mut best: Option<(CMatrix, Complex64)> = None;
    for c in &probes {
        let x = combination(&space.basis, c);
        let x = &x * real(1.0 / frobenius(&x));
        let q = match scalar_gram(&x, form, form_inv) {
            Some(q) => q,
            None => return Ok(None),
        };
        if best.as_ref().is_none_or(|(_, bq)| q.norm() > bq.norm()) {
            best = Some((x, q));
        }
    }
    let (x, q) = best.expect("at least one probe");
    if q.norm() <= 1e-8 {
        // isotropic line: no multiple of x preserves the form
        return Ok(if dim == 1 {
            Some(ConjugacyCertificate::obstructed(
                label,
                1,
                Obstruction::CandidatesViolate { candidate_residuals: vec![], margin: VIOLATION_MARGIN },
                "the only intertwiners are isotropic for the form, so none preserves it",
            ))
        } else {
            None
        });
    }
    let y = &x * q.sqrt().inv();
    let det = y.determinant();
    if n.is_multiple_of(2) && target.needs_det_one() && (det + real(1.0)).norm() <= 1e-6 {
        // det(±y) = det y for even n, and every form-preserving member of the
        // space has det y by the polynomial identity det² = Qⁿ
        return Ok(Some(ConjugacyCertificate::obstructed(
            label,
            dim,
            Obstruction::DeterminantSign { determinant: det },
            "every form-preserving intertwiner has determinant -1, while the group requires +1",
        )));
    }
    let candidates = [y.clone(), -y];
    let mut scored = Vec::with_capacity(2);
    for cand in candidates {
        let g = target.residual(&cand)?;
        let r = conjugation_residual(&cand, a, b);
        scored.push((cand, g, r));
    }
    let best_idx = if scored[1].1 < scored[0].1 { 1 } else { 0 };
    let (g_best, r_best) = (scored[best_idx].1, scored[best_idx].2);
    if g_best <= CERTIFICATE_TOLERANCE && r_best.is_some_and(|r| r <= CERTIFICATE_TOLERANCE) {
        let (cand, g, r) = scored.swap_remove(best_idx);
        let mut cert = ConjugacyCertificate::new(
            Verdict::Conjugate,
            label,
            dim,
            "a form-preserving intertwiner lies in the group and conjugates the generators",
        );
        cert.conjugator = Some(cand);
        cert.residual = r;
        cert.group_residual = Some(g);
        return Ok(Some(cert));
    }
    if dim == 1 && scored.iter().all(|(_, g, _)| *g >= VIOLATION_MARGIN) {
        let residuals = scored.iter().map(|(_, g, _)| *g).collect();
        return Ok(Some(ConjugacyCertificate::obstructed(
            label,
            1,
            Obstruction::CandidatesViolate { candidate_residuals: residuals, margin: VIOLATION_MARGIN },
            "both form-preserving intertwiners lie outside the group",
        )));
    }
    Ok(None)
}

struct Start {
    c: Vec<Complex64>,
    objective: f64,
}

fn residual_vector(x: &CMatrix, form: &CMatrix, with_det: bool) -> DVector<Complex64> {
    let g = x.transpose() * form * x - form;
    let mut r: Vec<Complex64> = g.as_slice().to_vec();
    if with_det {
        r.push(x.determinant() - real(1.0));
    }
    DVector::from_vec(r)
}

fn jacobian(basis: &[CMatrix], x: &CMatrix, form: &CMatrix, with_det: bool) -> Option<CMatrix> {
    let n = x.nrows();
    let rows = n * n + usize::from(with_det);
    let mut jac = CMatrix::zeros(rows, basis.len());
    let det_term = if with_det {
        let x_inv = x.clone().try_inverse()?;
        Some((x.determinant(), x_inv))
    } else {
        None
    };
    for (j, xj) in basis.iter().enumerate() {
        let d = xj.transpose() * form * x + x.transpose() * form * xj;
        jac.view_mut((0, j), (n * n, 1)).copy_from_slice(d.as_slice());
        if let Some((det, x_inv)) = &det_term {
            jac[(n * n, j)] = det * (x_inv * xj).trace();
        }
    }
    Some(jac)
}

fn gauss_newton(basis: &[CMatrix], form: &CMatrix, with_det: bool, mut c: Vec<Complex64>) -> Start {
    let k = basis.len();
    let mut x = combination(basis, &c);
    let mut r = residual_vector(&x, form, with_det);
    let mut objective = r.norm_squared();
    for _ in 0..GN_MAX_ITER {
        if objective <= 1e-28 {
            break;
        }
        let jac = match jacobian(basis, &x, form, with_det) {
            Some(j) => j,
            None => break,
        };
        let jh = jac.adjoint();
        let normal = &jh * &jac + CMatrix::identity(k, k) * real(GN_DAMPING);
        let rhs = -(&jh * &r);
        let step = match normal.lu().solve(&rhs) {
            Some(s) => s,
            None => break,
        };
        let trial: Vec<Complex64> = c.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
        let tx = combination(basis, &trial);
        let tr = residual_vector(&tx, form, with_det);
        let t_obj = tr.norm_squared();
        if !(t_obj < objective) {
            break;
        }
        c = trial;
        x = tx;
        r = tr;
        objective = t_obj;
    }
    Start { c, objective }
}

fn gauss_newton_search(
    a: &Representation,
    b: &Representation,
    space: &IntertwinerSpace,
    target: Target,
    form: &CMatrix,
    seed: u64,
) -> Result<ConjugacyCertificate, ConjugacyError> {
    let n = a.dim();
    let dim = space.dimension;
    let with_det = target.needs_det_one();
    let mut best: Option<Start> = None;
    for s in 0..MULTISTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, s as u64));
        let c0 = random_coefficients(&mut rng, dim);
        let norm = c0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let c0: Vec<Complex64> = c0.iter().map(|z| z * (n as f64).sqrt() / norm).collect();
        let run = gauss_newton(&space.basis, form, with_det, c0);
        // strict improvement keeps the earliest start on ties
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    let x = combination(&space.basis, &best.c);
    let group_residual = target.residual(&x)?;
    let residual = conjugation_residual(&x, a, b);
    let ok = group_residual <= CERTIFICATE_TOLERANCE && residual.is_some_and(|r| r <= CERTIFICATE_TOLERANCE);
    let mut cert = ConjugacyCertificate::new(
        if ok { Verdict::Conjugate } else { Verdict::Inconclusive },
        Some(target.label()),
        dim,
        if ok {
            "Gauss-Newton found an intertwiner inside the group"
        } else {
            "Gauss-Newton did not reach the group; optimizer failure proves nothing"
        },
    );
    cert.conjugator = Some(x);
    cert.residual = residual;
    cert.group_residual = Some(group_residual);
    Ok(cert)
}

/// Independent recheck of a `conjugate` certificate: recomputes both
/// residuals from the conjugator alone.
pub fn certificate_is_sound(
    cert: &ConjugacyCertificate,
    a: &Representation,
    b: &Representation,
    target: Target,
) -> bool {
    if cert.verdict != Verdict::Conjugate {
        return true;
    }
    let g = match &cert.conjugator {
        Some(g) => g,
        None => return false,
    };
    let group_ok = target.residual(g).is_ok_and(|r| r <= CERTIFICATE_TOLERANCE);
    group_ok && conjugation_residual(g, a, b).is_some_and(|r| r <= CERTIFICATE_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgroups::{rotation2, sample, Automorphism, Field};
    use crate::reps::{direct_sum, sample_irreducible};
    use std::f64::consts::PI;

    fn irreducible(kind: GroupKind, seed: u64) -> Representation {
        sample_irreducible(kind, 2, seed, Field::Complex, 20).unwrap().0
    }

    #[test]
    fn self_intertwiners_are_scalars() {
        for (kind, seed) in [(GroupKind::SL(3), 1), (GroupKind::SO(4), 2), (GroupKind::Sp(2), 3)] {
            let rho = irreducible(kind, seed);
            let space = intertwiner_basis(&rho, &rho).unwrap();
            assert_eq!(space.dimension, 1, "{kind}");
            let n = rho.dim();
            let x = &space.basis[0];
            // x = phase · I/√n
            let phase = x[(0, 0)] * (n as f64).sqrt();
            assert!((phase.norm() - 1.0).abs() < 1e-10);
            assert!(frobenius_dist(&(x * real((n as f64).sqrt())), &(identity(n) * phase)) < 1e-9);
            assert!(space.residual < 1e-10);
        }
    }

    #[test]
    fn independent_pairs_have_no_intertwiners() {
        for s in 0..10 {
            let a = Representation::sample_free(GroupKind::SL(3), 2, 100 + s, Field::Complex);
            let b = Representation::sample_free(GroupKind::SL(3), 2, 200 + s, Field::Complex);
            assert_eq!(intertwiner_basis(&a, &b).unwrap().dimension, 0);
            let cert = gl_conjugacy(&a, &b, GlOptions::default()).unwrap();
            assert_eq!(cert.verdict, Verdict::NotConjugate);
            assert_eq!(cert.obstruction, Some(Obstruction::EmptyIntertwiner));
        }
    }

    #[test]
    fn constructed_conjugates_are_recovered() {
        for s in 0..20 {
            let a = irreducible(GroupKind::SL(4), s);
            let g = sample(GroupKind::SL(4), 1000 + s);
            let b = a.conjugate(&g).unwrap();
            let space = intertwiner_basis(&a, &b).unwrap();
            assert_eq!(space.dimension, 1);
            // basis ∝ g
            let x = &space.basis[0];
            let ratio = x[(0, 0)] / g[(0, 0)];
            assert!(frobenius_dist(x, &(&g * ratio)) < 1e-8);
            let cert = gl_conjugacy(&a, &b, GlOptions { sl_normalize: true, seed: s }).unwrap();
            assert_eq!(cert.verdict, Verdict::Conjugate);
            assert!(cert.residual.unwrap() <= 1e-8);
            assert!(cert.group_residual.unwrap() <= 1e-8);
        }
    }

    #[test]
    fn identity_pair_is_conjugate_via_scalar() {
        let a = irreducible(GroupKind::SL(2), 4);
        let cert = gl_conjugacy(&a, &a, GlOptions { sl_normalize: true, seed: 0 }).unwrap();
        assert_eq!(cert.verdict, Verdict::Conjugate);
        let g = cert.conjugator.unwrap();
        // ±I in SL(2)
        assert!(frobenius_dist(&g, &identity(2)) < 1e-10 || frobenius_dist(&g, &-identity(2)) < 1e-10);
    }

    #[test]
    fn dimension_is_conjugation_invariant() {
        let a = irreducible(GroupKind::SL(3), 5);
        let b = direct_sum(
            &Representation::sample_free(GroupKind::SL(1), 2, 1, Field::Complex),
            &Representation::sample_free(GroupKind::SO(2), 2, 2, Field::Complex),
        )
        .unwrap();
        for (x, y) in [(&a, &a), (&b, &b)] {
            let base = intertwiner_basis(x, y).unwrap().dimension;
            for s in 0..20 {
                let h = sample(GroupKind::SL(3), 300 + s);
                let yh = y.with_kind(GroupKind::SL(3)).unwrap().conjugate(&h).unwrap();
                assert_eq!(intertwiner_basis(x, &yh).unwrap().dimension, base);
            }
        }
    }

    #[test]
    fn so2_rotation_pair() {
        let a = Representation::free(GroupKind::SO(2), vec![rotation2(PI / 3.0)]).unwrap();
        let b = Representation::free(GroupKind::SO(2), vec![rotation2(-PI / 3.0)]).unwrap();
        let cert = constrained_conjugacy(&a, &b, Target::Group(GroupKind::SO(2)), 1).unwrap();
        assert_eq!(cert.verdict, Verdict::NotConjugate);
        assert_eq!(cert.intertwiner_dim, 2);
        match cert.obstruction {
            Some(Obstruction::DeterminantSign { determinant }) => assert!((determinant + real(1.0)).norm() < 1e-8),
            other => panic!("{other:?}"),
        }
        let relaxed = constrained_conjugacy(&a, &b, Target::Orthogonal(2), 1).unwrap();
        assert_eq!(relaxed.verdict, Verdict::Conjugate);
        assert!(certificate_is_sound(&relaxed, &a, &b, Target::Orthogonal(2)));
        let g = relaxed.conjugator.unwrap();
        assert!((g.determinant() + real(1.0)).norm() < 1e-8);
    }

    #[test]
    fn flip_is_not_realized_inside_so4() {
        for s in 0..10 {
            let rho = irreducible(GroupKind::SO(4), 40 + s);
            let flipped = rho.apply_automorphism(&Automorphism::Flip).unwrap();
            let cert = constrained_conjugacy(&rho, &flipped, Target::Group(GroupKind::SO(4)), s).unwrap();
            assert_eq!(cert.verdict, Verdict::NotConjugate);
            assert_eq!(cert.intertwiner_dim, 1);
            assert!(matches!(cert.obstruction, Some(Obstruction::DeterminantSign { .. })));
        }
    }

    #[test]
    fn in_group_conjugates_found() {
        for (kind, s) in [(GroupKind::SO(4), 1), (GroupKind::SO(3), 2), (GroupKind::Sp(2), 3), (GroupKind::AdSL(2), 4)]
        {
            let rho = irreducible(kind, s);
            let g = sample(kind, 77 + s);
            let other = rho.conjugate(&g).unwrap();
            let cert = constrained_conjugacy(&rho, &other, Target::Group(kind), s).unwrap();
            assert_eq!(cert.verdict, Verdict::Conjugate, "{kind}");
            assert!(certificate_is_sound(&cert, &rho, &other, Target::Group(kind)));
        }
    }

    #[test]
    fn reducible_so4_uses_optimizer_and_stays_sound() {
        // SO(2) ⊕ SO(2) blocks of an abelian pair: large intertwiner space
        let blocks = |s: u64| {
            direct_sum(
                &Representation::sample_free(GroupKind::SO(2), 2, s, Field::Complex),
                &Representation::sample_free(GroupKind::SO(2), 2, s + 1, Field::Complex),
            )
            .unwrap()
        };
        let rho = blocks(10);
        let g = sample(GroupKind::SO(4), 5);
        let other = rho.conjugate(&g).unwrap();
        let target = Target::Group(GroupKind::SO(4));
        let cert = constrained_conjugacy(&rho, &other, target, 3).unwrap();
        assert!(cert.intertwiner_dim > 2);
        assert_ne!(cert.verdict, Verdict::NotConjugate);
        assert!(certificate_is_sound(&cert, &rho, &other, target));
    }

    #[test]
    fn certificates_serialize() {
        let a = Representation::free(GroupKind::SO(2), vec![rotation2(0.4)]).unwrap();
        let cert = constrained_conjugacy(&a, &a, Target::Group(GroupKind::SO(2)), 0).unwrap();
        let v = serde_json::to_value(&cert).unwrap();
        assert_eq!(v["verdict"], "conjugate");
        assert_eq!(v["target"], "so2");
        assert_eq!(v["conjugator"].as_array().unwrap().len(), 2);
    }
}
