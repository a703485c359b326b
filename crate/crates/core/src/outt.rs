//! Trace-preserving outer automorphisms of the matrix realizations.
//!
//! For each realization one candidate automorphism (the generator of its
//! outer automorphism group, when there is one) is tested twice:
//!
//! * trace preservation: a sampled witness g with tr α(g) ≠ tr g refutes it;
//!   a proof of preservation is only ever structural, α(g) = S g S⁻¹ for an
//!   explicit ambient matrix S, rechecked on the samples;
//! * inner-ness: α is compared with conjugation inside the group through the
//!   intertwiners between a generic irreducible rank-2 representation ρ and
//!   α∘ρ. The sample stands in for a representation with dense image, which
//!   is assumed and not certified.
//!
//! An automorphism that preserves traces and is not inner contributes Z/2.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::conjugacy::{constrained_conjugacy, ConjugacyCertificate, ConjugacyError, Obstruction, Target, Verdict};
use crate::linalg::{
    self, diag_real, frobenius, frobenius_dist, identity, inverse, real, serialize_matrix, serialize_opt_matrix,
    CMatrix,
};
use crate::matgroups::{
    self, adjoint_image, apply_automorphism, cartan, flip_matrix, rotation2, symplectic_form, transpose_operator,
    Automorphism, Field, GroupError, GroupKind,
};
use crate::reps::{sample_irreducible, RepError, Representation, RepresentationFile, IRREDUCIBILITY_NOTE};
use crate::seeds::derive_seed;

/// Relative trace gap above which a sample refutes trace preservation.
pub const TRACE_GAP_TOLERANCE: f64 = 1e-6;

/// Fresh samples on which an inner conjugator must reproduce α.
pub const INNER_CHECK_SAMPLES: usize = 20;

/// Draws allowed when looking for a Burnside-irreducible sample.
pub const IRREDUCIBLE_ATTEMPTS: usize = 50;

/// Word length of collision fingerprints.
pub const COLLISION_LENGTH: usize = 6;

/// Collision fingerprints must agree to this absolute distance.
pub const COLLISION_TOLERANCE: f64 = 1e-9;

pub const DENSITY_NOTE: &str = "inner-ness is decided on one sampled Burnside-irreducible rank-2 \
    representation standing in for a representation with dense image; density is assumed, not certified";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OuttError {
    #[error("no Burnside-irreducible rank-{rank} sample of {kind} in {attempts} attempts")]
    NoIrreducible { kind: GroupKind, rank: usize, attempts: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Conjugacy(#[from] ConjugacyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PreservationVerdict {
    NotPreserving,
    Preserving,
    ProbablyPreserving,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePreservation {
    pub verdict: PreservationVerdict,
    pub samples_checked: usize,
    /// Index of the refuting sample; index 0 is the fixed probe when the
    /// realization has one.
    pub witness_sample: Option<usize>,
    #[serde(serialize_with = "serialize_opt_matrix")]
    pub witness: Option<CMatrix>,
    #[serde(serialize_with = "serialize_opt_complex")]
    pub witness_trace: Option<Complex64>,
    #[serde(serialize_with = "serialize_opt_complex")]
    pub image_trace: Option<Complex64>,
    /// |tr α(g) − tr g| at the witness.
    pub gap: Option<f64>,
    pub structural_argument: Option<&'static str>,
    /// max over the samples of ‖α(g) − S g S⁻¹‖_F / (1 + ‖α(g)‖_F).
    pub structural_residual: Option<f64>,
}

fn serialize_opt_complex<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    z.map(|z| [z.re, z.im]).serialize(s)
}

/// An ambient S with α(g) = S g S⁻¹ on the whole group, when one is known.
fn structural_similarity(kind: GroupKind, alpha: &Automorphism) -> Option<(CMatrix, &'static str)> {
    let n = kind.ambient_dim();
    match (alpha, kind) {
        (Automorphism::Inner(g), _) => Some((g.clone(), "conjugation by the given matrix")),
        (Automorphism::Flip, _) => flip_matrix(n).ok().map(|q| (q, "similarity: conjugation by diag(-1, 1, ..., 1)")),
        (Automorphism::Cartan, GroupKind::SO(_)) => Some((identity(n), "similarity: (A^-1)^T = A for orthogonal A")),
        (Automorphism::Cartan, GroupKind::Sp(h)) => {
            Some((symplectic_form(h), "similarity: (A^-1)^T = J A J^-1 for symplectic A"))
        }
        (Automorphism::Cartan, GroupKind::SL(2)) => {
            Some((symplectic_form(1), "similarity: (A^-1)^T = J A J^-1 for A in SL(2)"))
        }
        (Automorphism::Cartan, GroupKind::AdSL(m)) => Some((
            transpose_operator(m),
            "transpose intertwiner: with P the matrix of X -> X^T on traceless matrices, \
             P Ad(sigma(A)) P^-1 = Ad(A)",
        )),
        (Automorphism::Cartan, GroupKind::SL(_)) => None,
    }
}

/// Deterministic first sample for realizations where random sampling is
/// not needed to see a trace gap: diag(2, 2, 1/4, 1, ..., 1) in SL(m ≥ 3).
fn probe(kind: GroupKind, alpha: &Automorphism) -> Option<CMatrix> {
    match (alpha, kind) {
        (Automorphism::Cartan, GroupKind::SL(m)) if m >= 3 => {
            let mut d = vec![1.0; m];
            d[0] = 2.0;
            d[1] = 2.0;
            d[2] = 0.25;
            Some(diag_real(&d))
        }
        _ => None,
    }
}

/// Looks for g with |tr α(g) − tr g| > 1e−6·(1 + |tr g|) among `trials`
/// samples (a fixed probe first, then `sample(kind, derive_seed(seed, s))`).
pub fn trace_preservation_witness(
    kind: GroupKind,
    alpha: &Automorphism,
    trials: usize,
    seed: u64,
) -> Result<TracePreservation, OuttError> {
    let n = kind.ambient_dim();
    apply_automorphism(alpha, &identity(n), kind)?;
    let samples: Vec<CMatrix> = probe(kind, alpha)
        .into_iter()
        .chain((0..trials as u64).map(|s| matgroups::sample(kind, derive_seed(seed, s))))
        .take(trials)
        .collect();
    let mut out = TracePreservation {
        verdict: PreservationVerdict::ProbablyPreserving,
        samples_checked: 0,
        witness_sample: None,
        witness: None,
        witness_trace: None,
        image_trace: None,
        gap: None,
        structural_argument: None,
        structural_residual: None,
    };
    let mut images = Vec::with_capacity(samples.len());
    for (i, g) in samples.iter().enumerate() {
        let img = apply_automorphism(alpha, g, kind)?;
        out.samples_checked = i + 1;
        let (t, ti) = (g.trace(), img.trace());
        let gap = (ti - t).norm();
        if gap > TRACE_GAP_TOLERANCE * (1.0 + t.norm()) {
            out.verdict = PreservationVerdict::NotPreserving;
            out.witness_sample = Some(i);
            out.witness = Some(g.clone());
            out.witness_trace = Some(t);
            out.image_trace = Some(ti);
            out.gap = Some(gap);
            return Ok(out);
        }
        images.push(img);
    }
    if let Some((s, argument)) = structural_similarity(kind, alpha) {
        let s_inv = inverse(&s).map_err(GroupError::from)?;
        let residual = samples
            .iter()
            .zip(&images)
            .map(|(g, img)| frobenius_dist(img, &(&s * g * &s_inv)) / (1.0 + frobenius(img)))
            .fold(0.0, f64::max);
        out.structural_argument = Some(argument);
        out.structural_residual = Some(residual);
        if residual <= TRACE_GAP_TOLERANCE {
            out.verdict = PreservationVerdict::Preserving;
        }
    }
    Ok(out)
}

/// ‖P·Ad(σ(A))·P⁻¹ − Ad(A)‖_F for one A in SL(m).
pub fn transpose_intertwiner_residual(a: &CMatrix) -> Result<f64, OuttError> {
    let m = a.nrows();
    let p = transpose_operator(m);
    let p_inv = inverse(&p).map_err(GroupError::from)?;
    let lhs = &p * adjoint_image(&cartan(a)?)? * p_inv;
    Ok(frobenius_dist(&lhs, &adjoint_image(a)?))
}

/// Max of [`transpose_intertwiner_residual`] over seeded samples of SL(m).
pub fn transpose_intertwiner_check(m: usize, samples: usize, seed: u64) -> Result<f64, OuttError> {
    if m < 2 {
        return Err(OuttError::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    (0..samples as u64).try_fold(0.0f64, |acc, s| {
        let a = matgroups::sample(GroupKind::SL(m), derive_seed(seed, s));
        Ok(acc.max(transpose_intertwiner_residual(&a)?))
    })
}

/// max |tr Ad(A) − (tr A · tr A⁻¹ − 1)| over seeded samples of SL(m).
pub fn adjoint_trace_check(m: usize, samples: usize, seed: u64) -> Result<f64, OuttError> {
    (0..samples as u64).try_fold(0.0f64, |acc, s| {
        let a = matgroups::sample(GroupKind::SL(m), derive_seed(seed, s));
        let a_inv = inverse(&a).map_err(GroupError::from)?;
        let expected = a.trace() * a_inv.trace() - real(1.0);
        Ok(acc.max((adjoint_image(&a)?.trace() - expected).norm()))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerVerdict {
    Inner,
    NotInner,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerReport {
    pub verdict: InnerVerdict,
    #[serde(serialize_with = "serialize_opt_matrix")]
    pub conjugator: Option<CMatrix>,
    /// Largest relative mismatch between g h g⁻¹ and α(h) on fresh samples.
    pub fresh_sample_mismatch: Option<f64>,
    /// Whether the test representation passed the Burnside gate. SO(2) is
    /// abelian and is tested without it.
    pub burnside_gate: bool,
    pub sample_attempt: Option<usize>,
    pub certificate: ConjugacyCertificate,
    pub note: &'static str,
    pub irreducibility: &'static str,
}

/// Test representation for inner-ness: Burnside-irreducible rank 2, except
/// for the abelian SO(2).
fn test_representation(kind: GroupKind, seed: u64) -> Result<(Representation, Option<usize>), OuttError> {
    if kind == GroupKind::SO(2) {
        return Ok((Representation::sample_free(kind, 2, seed, Field::Complex), None));
    }
    sample_irreducible(kind, 2, seed, Field::Complex, IRREDUCIBLE_ATTEMPTS)
        .map(|(rep, attempt)| (rep, Some(attempt)))
        .ok_or(OuttError::NoIrreducible { kind, rank: 2, attempts: IRREDUCIBLE_ATTEMPTS })
}

pub fn inner_witness(kind: GroupKind, alpha: &Automorphism, seed: u64) -> Result<InnerReport, OuttError> {
    let (rho, attempt) = test_representation(kind, derive_seed(seed, 0))?;
    let twisted = rho.apply_automorphism(alpha)?;
    let cert = constrained_conjugacy(&rho, &twisted, Target::Group(kind), derive_seed(seed, 1))?;
    let mut report = InnerReport {
        verdict: InnerVerdict::Inconclusive,
        conjugator: None,
        fresh_sample_mismatch: None,
        burnside_gate: attempt.is_some(),
        sample_attempt: attempt,
        certificate: cert.clone(),
        note: DENSITY_NOTE,
        irreducibility: IRREDUCIBILITY_NOTE,
    };
    match cert.verdict {
        Verdict::NotConjugate => report.verdict = InnerVerdict::NotInner,
        Verdict::Inconclusive => {}
        Verdict::Conjugate => {
            let g = cert.conjugator.clone().expect("conjugate certificates carry a conjugator");
            let g_inv = inverse(&g).map_err(GroupError::from)?;
            let mut mismatch: f64 = 0.0;
            for i in 0..INNER_CHECK_SAMPLES as u64 {
                let h = matgroups::sample(kind, derive_seed(seed, 1000 + i));
                let target = apply_automorphism(alpha, &h, kind)?;
                mismatch = mismatch.max(frobenius_dist(&(&g * &h * &g_inv), &target) / (1.0 + frobenius(&target)));
            }
            report.fresh_sample_mismatch = Some(mismatch);
            if mismatch <= TRACE_GAP_TOLERANCE {
                report.verdict = InnerVerdict::Inner;
            }
            report.conjugator = Some(g);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutTLabel {
    #[serde(rename = "trivial")]
    Trivial,
    #[serde(rename = "Z2")]
    Z2,
    #[serde(rename = "undetermined")]
    Undetermined,
}

/// Known group of trace-preserving outer automorphisms of each realization.
pub fn expected_label(kind: GroupKind) -> OutTLabel {
    match kind {
        GroupKind::SL(_) | GroupKind::Sp(_) => OutTLabel::Trivial,
        GroupKind::AdSL(m) => {
            if m >= 3 {
                OutTLabel::Z2
            } else {
                OutTLabel::Trivial
            }
        }
        GroupKind::SO(n) => {
            if n % 2 == 0 {
                OutTLabel::Z2
            } else {
                OutTLabel::Trivial
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutTReport {
    pub realization: GroupKind,
    pub automorphism: Automorphism,
    pub trace_preserving: TracePreservation,
    pub inner: InnerReport,
    pub conclusion: OutTLabel,
    pub expected: OutTLabel,
    pub matches: bool,
}

fn conclude(tp: &TracePreservation, inner: &InnerReport) -> OutTLabel {
    match (tp.verdict, inner.verdict) {
        (PreservationVerdict::NotPreserving, _) => OutTLabel::Trivial,
        (PreservationVerdict::Preserving, InnerVerdict::Inner) => OutTLabel::Trivial,
        (PreservationVerdict::Preserving, InnerVerdict::NotInner) => OutTLabel::Z2,
        _ => OutTLabel::Undetermined,
    }
}

/// Realizations and candidate automorphisms, in catalog order.
pub fn catalog_entries() -> Vec<(GroupKind, Automorphism)> {
    use GroupKind::*;
    let mut v: Vec<(GroupKind, Automorphism)> = Vec::new();
    v.extend([SL(2), SL(3), SL(4)].map(|k| (k, Automorphism::Cartan)));
    v.extend([AdSL(2), AdSL(3)].map(|k| (k, Automorphism::Cartan)));
    v.extend([SO(2), SO(4), SO(6)].map(|k| (k, Automorphism::Flip)));
    v.extend([SO(3), SO(5)].map(|k| (k, Automorphism::Cartan)));
    v.extend([Sp(1), Sp(2)].map(|k| (k, Automorphism::Cartan)));
    v
}

pub const CATALOG_TRIALS: usize = 100;

/// One report per catalog entry; entry `i` uses `derive_seed(seed, i)`.
pub fn outt_catalog(seed: u64) -> Result<Vec<OutTReport>, OuttError> {
    catalog_entries()
        .into_iter()
        .enumerate()
        .map(|(i, (kind, alpha))| {
            let s = derive_seed(seed, i as u64);
            let tp = trace_preservation_witness(kind, &alpha, CATALOG_TRIALS, derive_seed(s, 0))?;
            let inner = inner_witness(kind, &alpha, derive_seed(s, 1))?;
            let conclusion = conclude(&tp, &inner);
            let expected = expected_label(kind);
            Ok(OutTReport {
                realization: kind,
                automorphism: alpha,
                trace_preserving: tp,
                inner,
                conclusion,
                expected,
                matches: conclusion == expected,
            })
        })
        .collect()
}

fn even_orthogonal(m: usize) -> Result<GroupKind, OuttError> {
    if m == 0 {
        return Err(OuttError::InvalidParameter("m must be at least 1".into()));
    }
    Ok(GroupKind::SO(2 * m))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreenessRecord {
    pub trial: usize,
    pub trial_seed: u64,
    pub sample_attempt: Option<usize>,
    pub verdict: Option<Verdict>,
    pub intertwiner_dim: Option<usize>,
    #[serde(serialize_with = "serialize_opt_complex")]
    pub determinant: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreenessReport {
    pub group: GroupKind,
    pub rank: usize,
    pub trials: usize,
    pub seed: u64,
    /// Trials where ρ and Flip∘ρ were found conjugate inside the group.
    pub violations: usize,
    pub inconclusive: usize,
    /// Trials without a Burnside-irreducible sample.
    pub skipped: usize,
    pub passed: bool,
    pub irreducibility: &'static str,
    pub records: Vec<FreenessRecord>,
}

/// Per trial: an irreducible ρ into SO(2m) and the in-group conjugacy test of
/// ρ against Flip∘ρ. Trial `t` uses `derive_seed(seed, t)`.
pub fn freeness_check(m: usize, rank: usize, trials: usize, seed: u64) -> Result<FreenessReport, OuttError> {
    if m < 2 {
        return Err(OuttError::InvalidParameter(format!("freeness needs m >= 2, got {m}")));
    }
    let kind = even_orthogonal(m)?;
    let mut report = FreenessReport {
        group: kind,
        rank,
        trials,
        seed,
        violations: 0,
        inconclusive: 0,
        skipped: 0,
        passed: false,
        irreducibility: IRREDUCIBILITY_NOTE,
        records: vec![],
    };
    for t in 0..trials {
        let ts = derive_seed(seed, t as u64);
        let mut record = FreenessRecord {
            trial: t,
            trial_seed: ts,
            sample_attempt: None,
            verdict: None,
            intertwiner_dim: None,
            determinant: None,
        };
        match sample_irreducible(kind, rank, ts, Field::Complex, IRREDUCIBLE_ATTEMPTS) {
            None => report.skipped += 1,
            Some((rho, attempt)) => {
                let flipped = rho.apply_automorphism(&Automorphism::Flip)?;
                let cert = constrained_conjugacy(&rho, &flipped, Target::Group(kind), ts)?;
                record.sample_attempt = Some(attempt);
                record.verdict = Some(cert.verdict);
                record.intertwiner_dim = Some(cert.intertwiner_dim);
                if let Some(Obstruction::DeterminantSign { determinant }) = cert.obstruction {
                    record.determinant = Some(determinant);
                }
                match cert.verdict {
                    Verdict::Conjugate => report.violations += 1,
                    Verdict::Inconclusive => report.inconclusive += 1,
                    Verdict::NotConjugate => {}
                }
            }
        }
        report.records.push(record);
    }
    report.passed = report.violations == 0 && report.inconclusive == 0 && report.skipped == 0;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CollisionReport {
    pub group: GroupKind,
    pub rank: usize,
    pub seed: u64,
    pub construction: String,
    pub representation: RepresentationFile,
    pub partner: RepresentationFile,
    pub max_length: usize,
    pub fingerprint_distance: f64,
    pub in_group_conjugacy: ConjugacyCertificate,
    /// g with partner = g ρ g⁻¹ in the ambient GL(n).
    #[serde(serialize_with = "serialize_matrix")]
    pub ambient_conjugator: CMatrix,
    #[serde(serialize_with = "linalg::serialize_complex")]
    pub ambient_determinant: Complex64,
    /// Equal fingerprints and no conjugator inside the group.
    pub valid: bool,
}

fn collision_report(
    rho: &Representation,
    g: CMatrix,
    construction: String,
    seed: u64,
) -> Result<CollisionReport, OuttError> {
    let kind = rho.kind();
    let partner = rho.conjugate(&g)?;
    let distance = rho.fingerprint(COLLISION_LENGTH)?.max_abs_distance(&partner.fingerprint(COLLISION_LENGTH)?)?;
    let cert = constrained_conjugacy(rho, &partner, Target::Group(kind), seed)?;
    let valid = distance <= COLLISION_TOLERANCE && cert.verdict == Verdict::NotConjugate;
    Ok(CollisionReport {
        group: kind,
        rank: rho.rank(),
        seed,
        construction,
        representation: rho.to_file(),
        partner: partner.to_file(),
        max_length: COLLISION_LENGTH,
        fingerprint_distance: distance,
        in_group_conjugacy: cert,
        ambient_determinant: g.determinant(),
        ambient_conjugator: g,
        valid,
    })
}

/// ρ into SO(2m) and Flip∘ρ: equal characters, no conjugator in SO(2m).
/// For m = 1, ρ sends each generator to a real rotation by a seeded angle in
/// [0.2, π − 0.2]; for m ≥ 2 it is a Burnside-irreducible sample.
pub fn character_collision_demo(m: usize, rank: usize, seed: u64) -> Result<CollisionReport, OuttError> {
    let kind = even_orthogonal(m)?;
    if rank == 0 {
        return Err(OuttError::InvalidParameter("rank must be at least 1".into()));
    }
    let (rho, construction) = if m == 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images = (0..rank).map(|_| rotation2(rng.random_range(0.2..std::f64::consts::PI - 0.2))).collect();
        (Representation::free(kind, images)?, "rotations and their flips".to_string())
    } else {
        let (rho, attempt) = sample_irreducible(kind, rank, seed, Field::Complex, IRREDUCIBLE_ATTEMPTS)
            .ok_or(OuttError::NoIrreducible { kind, rank, attempts: IRREDUCIBLE_ATTEMPTS })?;
        (rho, format!("Burnside-irreducible sample (attempt {attempt}) and its flip"))
    };
    collision_report(&rho, flip_matrix(kind.ambient_dim())?, construction, seed)
}

/// Control for the collision demo: ρ and g ρ g⁻¹ with g sampled inside the
/// group. Fingerprints agree, but the pair is conjugate in the group, so the
/// report is never a valid collision.
pub fn collision_control(kind: GroupKind, rank: usize, seed: u64) -> Result<CollisionReport, OuttError> {
    let (rho, attempt) = sample_irreducible(kind, rank, seed, Field::Complex, IRREDUCIBLE_ATTEMPTS)
        .ok_or(OuttError::NoIrreducible { kind, rank, attempts: IRREDUCIBLE_ATTEMPTS })?;
    let g = matgroups::sample(kind, derive_seed(seed, u64::MAX));
    collision_report(
        &rho,
        g,
        format!("Burnside-irreducible sample (attempt {attempt}) and an in-group conjugate"),
        seed,
    )
}
