//! Representations of finitely generated groups as tuples of generator
//! images: word evaluation, characters, fingerprints, direct sums and the
//! Burnside algebra-span test.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, frobenius_dist, identity, inverse, numerical_rank, real, CMatrix, LinalgError};
use crate::matgroups::{self, apply_automorphism, membership_residual, Automorphism, Field, GroupError, GroupKind};
use crate::seeds::derive_seed;
use crate::words::{enumerate_classes, CyclicClass, Letter, Word, WordError};

/// Images must lie in their group, and relators must evaluate to the identity,
/// within this tolerance.
pub const REP_TOLERANCE: f64 = 1e-8;

/// Relative singular-value cutoff for the Burnside span rank.
pub const RANK_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepError {
    #[error("representation needs at least one generator")]
    NoGenerators,
    #[error("image {index} is not in {kind} (residual {residual:.3e})")]
    ImageNotInGroup { index: usize, kind: GroupKind, residual: f64 },
    #[error("relator {relator} evaluates {residual:.3e} away from the identity")]
    RelatorViolated { relator: Word, residual: f64 },
    #[error("word uses generator {index} but the representation has rank {rank}")]
    GeneratorOutOfRange { index: usize, rank: usize },
    #[error("cannot combine {left} (rank {left_rank}) with {right} (rank {right_rank})")]
    Incompatible { left: GroupKind, left_rank: usize, right: GroupKind, right_rank: usize },
    #[error("fingerprints are indexed by different classes")]
    FingerprintMismatch,
    #[error("malformed representation file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// A point of Hom(Γ, G): one image per generator, with the relators of Γ
/// (empty for a free group).
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    kind: GroupKind,
    images: Vec<CMatrix>,
    inverses: Vec<CMatrix>,
    relators: Vec<Word>,
    relator_residual: f64,
}

impl Representation {
    pub fn new(kind: GroupKind, images: Vec<CMatrix>, relators: Vec<Word>) -> Result<Self, RepError> {
        if images.is_empty() {
            return Err(RepError::NoGenerators);
        }
        let mut inverses = Vec::with_capacity(images.len());
        for (index, m) in images.iter().enumerate() {
            let residual = membership_residual(m, kind)?;
            if !(residual <= REP_TOLERANCE) || !linalg::is_finite(m) {
                return Err(RepError::ImageNotInGroup { index, kind, residual });
            }
            inverses.push(inverse(m)?);
        }
        let mut rep = Representation { kind, images, inverses, relators: Vec::new(), relator_residual: 0.0 };
        let n = kind.ambient_dim();
        for r in &relators {
            let residual = frobenius_dist(&rep.evaluate(r)?, &identity(n));
            if !(residual <= REP_TOLERANCE) {
                return Err(RepError::RelatorViolated { relator: r.clone(), residual });
            }
            rep.relator_residual = rep.relator_residual.max(residual);
        }
        rep.relators = relators;
        Ok(rep)
    }

    pub fn free(kind: GroupKind, images: Vec<CMatrix>) -> Result<Self, RepError> {
        Self::new(kind, images, Vec::new())
    }

    /// Generator `i` is `sample_with(kind, derive_seed(seed, i), field)`.
    pub fn sample_free(kind: GroupKind, rank: usize, seed: u64, field: Field) -> Self {
        let images = (0..rank).map(|i| matgroups::sample_with(kind, derive_seed(seed, i as u64), field)).collect();
        Self::free(kind, images).expect("sampled images lie in the group")
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.images.len()
    }

    pub fn dim(&self) -> usize {
        self.kind.ambient_dim()
    }

    pub fn images(&self) -> &[CMatrix] {
        &self.images
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn relator_residual(&self) -> f64 {
        self.relator_residual
    }

    pub fn is_free(&self) -> bool {
        self.relators.is_empty()
    }

    fn letter_image(&self, l: Letter) -> Result<&CMatrix, RepError> {
        let index = l.generator as usize;
        if index >= self.images.len() {
            return Err(RepError::GeneratorOutOfRange { index, rank: self.images.len() });
        }
        Ok(if l.inverse { &self.inverses[index] } else { &self.images[index] })
    }

    /// ρ(w): the product of images and their inverses in word order.
    pub fn evaluate(&self, w: &Word) -> Result<CMatrix, RepError> {
        let mut acc = identity(self.dim());
        for &l in w.letters() {
            acc *= self.letter_image(l)?;
        }
        Ok(acc)
    }

    /// tr ρ(w).
    pub fn character(&self, w: &Word) -> Result<Complex64, RepError> {
        Ok(self.evaluate(w)?.trace())
    }

    /// Characters at every canonical class of length `1..=max_length`.
    pub fn fingerprint(&self, max_length: usize) -> Result<Fingerprint, RepError> {
        let classes = enumerate_classes(self.rank(), max_length)?;
        let mut cache = PrefixCache::new(self);
        let values = classes
            .iter()
            .map(|c| cache.eval(c.representative().letters()).map(|m| m.trace()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Fingerprint { kind: self.kind, rank: self.rank(), max_length, classes, values })
    }

    /// Same images relabelled as another realization containing them.
    pub fn with_kind(&self, kind: GroupKind) -> Result<Self, RepError> {
        Self::new(kind, self.images.clone(), self.relators.clone())
    }

    /// g ρ g⁻¹, which must stay in the same group.
    pub fn conjugate(&self, g: &CMatrix) -> Result<Self, RepError> {
        let g_inv = inverse(g)?;
        let images = self.images.iter().map(|m| g * m * &g_inv).collect();
        Self::new(self.kind, images, self.relators.clone())
    }

    /// α ∘ ρ, applied image by image; relators are rechecked.
    pub fn apply_automorphism(&self, alpha: &Automorphism) -> Result<Self, RepError> {
        let images =
            self.images.iter().map(|m| apply_automorphism(alpha, m, self.kind)).collect::<Result<Vec<_>, _>>()?;
        Self::new(self.kind, images, self.relators.clone())
    }

    pub fn to_file(&self) -> RepresentationFile {
        RepresentationFile {
            kind: self.kind,
            images: self
                .images
                .iter()
                .map(|m| {
                    let n = m.nrows();
                    MatrixJson::Flat((0..n * n).map(|k| [m[(k / n, k % n)].re, m[(k / n, k % n)].im]).collect())
                })
                .collect(),
            relators: self.relators.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, RepError> {
        let file: RepresentationFile = serde_json::from_str(text).map_err(|e| RepError::Malformed(e.to_string()))?;
        file.into_representation()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("representation serializes")
    }
}

struct PrefixCache<'a> {
    rep: &'a Representation,
    products: HashMap<Vec<Letter>, CMatrix>,
}

impl<'a> PrefixCache<'a> {
    fn new(rep: &'a Representation) -> Self {
        PrefixCache { rep, products: HashMap::new() }
    }

    fn eval(&mut self, letters: &[Letter]) -> Result<CMatrix, RepError> {
        let mut k = letters.len();
        while k > 0 && !self.products.contains_key(&letters[..k]) {
            k -= 1;
        }
        let mut acc = if k == 0 { identity(self.rep.dim()) } else { self.products[&letters[..k]].clone() };
        for j in k..letters.len() {
            acc *= self.rep.letter_image(letters[j])?;
            self.products.insert(letters[..=j].to_vec(), acc.clone());
        }
        Ok(acc)
    }
}

/// JSON form: `{"kind": "sl2", "images": [[[re, im], ...], ...], "relators": [...]}`
/// with each image a row-major list of `n²` complex entries. Nested rows are
/// also accepted on input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationFile {
    pub kind: GroupKind,
    pub images: Vec<MatrixJson>,
    #[serde(default)]
    pub relators: Vec<Word>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

impl MatrixJson {
    fn to_matrix(&self, n: usize) -> Result<CMatrix, RepError> {
        let entries: Vec<[f64; 2]> = match self {
            MatrixJson::Flat(v) => v.clone(),
            MatrixJson::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(RepError::Malformed(format!("expected {n} rows of {n} entries")));
                }
                rows.concat()
            }
        };
        if entries.len() != n * n {
            return Err(RepError::Malformed(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = entries[i * n + j];
            Complex64::new(re, im)
        }))
    }
}

impl RepresentationFile {
    pub fn into_representation(self) -> Result<Representation, RepError> {
        let n = self.kind.ambient_dim();
        let images = self.images.iter().map(|m| m.to_matrix(n)).collect::<Result<Vec<_>, _>>()?;
        Representation::new(self.kind, images, self.relators)
    }
}

/// Truncated character: values at the canonical classes up to `max_length`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub kind: GroupKind,
    pub rank: usize,
    pub max_length: usize,
    pub classes: Vec<CyclicClass>,
    #[serde(serialize_with = "serialize_complex_list")]
    pub values: Vec<Complex64>,
}

fn serialize_complex_list<S: serde::Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl Fingerprint {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, class: &str) -> Option<Complex64> {
        self.classes.iter().position(|c| c.to_string() == class).map(|i| self.values[i])
    }

    fn check_compatible(&self, other: &Fingerprint) -> Result<(), RepError> {
        if self.classes != other.classes {
            return Err(RepError::FingerprintMismatch);
        }
        Ok(())
    }

    /// max |χ − χ'| over all classes.
    pub fn max_abs_distance(&self, other: &Fingerprint) -> Result<f64, RepError> {
        self.check_compatible(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// max |χ − χ'| / (1 + max(|χ|, |χ'|)) over all classes.
    pub fn max_rel_distance(&self, other: &Fingerprint) -> Result<f64, RepError> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm() / (1.0 + a.norm().max(b.norm())))
            .fold(0.0, f64::max))
    }

    /// One `class,real,imaginary` line per class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,real,imaginary\n");
        for (c, v) in self.classes.iter().zip(&self.values) {
            writeln!(out, "{},{:e},{:e}", c, v.re, v.im).unwrap();
        }
        out
    }
}

/// ρ₁ ⊕ ρ₂ with block-diagonal images. SL ⊕ SL and mixed SL/SO sums land in
/// SL; SO ⊕ SO stays orthogonal.
pub fn direct_sum(a: &Representation, b: &Representation) -> Result<Representation, RepError> {
    let incompatible =
        || RepError::Incompatible { left: a.kind, left_rank: a.rank(), right: b.kind, right_rank: b.rank() };
    if a.rank() != b.rank() {
        return Err(incompatible());
    }
    let (n1, n2) = (a.dim(), b.dim());
    let kind = match (a.kind, b.kind) {
        (GroupKind::SO(_), GroupKind::SO(_)) => GroupKind::SO(n1 + n2),
        (GroupKind::SL(_) | GroupKind::SO(_), GroupKind::SL(_) | GroupKind::SO(_)) => GroupKind::SL(n1 + n2),
        _ => return Err(incompatible()),
    };
    let images = a
        .images
        .iter()
        .zip(&b.images)
        .map(|(x, y)| {
            let mut m = CMatrix::zeros(n1 + n2, n1 + n2);
            m.view_mut((0, 0), (n1, n1)).copy_from(x);
            m.view_mut((n1, n1), (n2, n2)).copy_from(y);
            m
        })
        .collect();
    let mut relators = a.relators.clone();
    for r in &b.relators {
        if !relators.contains(r) {
            relators.push(r.clone());
        }
    }
    Representation::new(kind, images, relators)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BurnsideVerdict {
    Irreducible,
    Reducible,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurnsideReport {
    pub verdict: BurnsideVerdict,
    /// Span rank of all words of length ≤ L, for L = 0, 1, ...
    pub ranks: Vec<usize>,
    pub full_rank: usize,
}

impl BurnsideReport {
    pub fn final_rank(&self) -> usize {
        *self.ranks.last().unwrap_or(&0)
    }
}

/// Orthonormal basis (as matrices) of the span of `mats`, each first scaled to
/// unit Frobenius norm.
fn span_basis(n: usize, mats: &[CMatrix]) -> Vec<CMatrix> {
    let cols: Vec<CMatrix> = mats
        .iter()
        .filter_map(|m| {
            let norm = linalg::frobenius(m);
            (norm > 0.0).then(|| m * real(1.0 / norm))
        })
        .collect();
    if cols.is_empty() {
        return Vec::new();
    }
    let stacked = CMatrix::from_fn(n * n, cols.len(), |i, j| cols[j].as_slice()[i]);
    let svd = linalg::svd(&stacked, true, false);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rank = numerical_rank(&sv, RANK_THRESHOLD);
    let u = svd.u.expect("left singular vectors requested");
    (0..rank).map(|k| linalg::unvectorize(n, u.column(k).as_slice())).collect()
}

/// Burnside test: ρ is irreducible iff the words in its images span all of
/// Mat(n). The span grows length by length; a rank below n² that shows no
/// growth over two consecutive lengths is reported reducible.
pub fn burnside_irreducible(rep: &Representation, max_length: usize) -> BurnsideReport {
    let n = rep.dim();
    let full = n * n;
    let letters: Vec<&CMatrix> = rep.images.iter().chain(&rep.inverses).collect();
    let mut basis = vec![identity(n)];
    let mut ranks = vec![1];
    let mut verdict = if full == 1 { BurnsideVerdict::Irreducible } else { BurnsideVerdict::Inconclusive };
    for _ in 0..max_length {
        if verdict != BurnsideVerdict::Inconclusive {
            break;
        }
        let mut candidates = basis.clone();
        for g in &letters {
            candidates.extend(basis.iter().map(|b| *g * b));
        }
        basis = span_basis(n, &candidates);
        ranks.push(basis.len());
        let k = ranks.len();
        if basis.len() == full {
            verdict = BurnsideVerdict::Irreducible;
        } else if k >= 3 && ranks[k - 1] == ranks[k - 2] && ranks[k - 2] == ranks[k - 3] {
            verdict = BurnsideVerdict::Reducible;
        }
    }
    BurnsideReport { verdict, ranks, full_rank: full }
}

/// Default word length for the Burnside gate.
pub const BURNSIDE_LENGTH: usize = 8;

/// Caveat attached to reports that gate on `burnside_irreducible`.
pub const IRREDUCIBILITY_NOTE: &str = "irreducibility is tested as a full span of the matrix algebra; this agrees \
    with the parabolic notion for SL kinds only and is a generic proxy for SO and Sp kinds";

/// Draws free representations from derived seeds until one is
/// Burnside-irreducible. Returns it with the attempt index used.
pub fn sample_irreducible(
    kind: GroupKind,
    rank: usize,
    seed: u64,
    field: Field,
    max_attempts: usize,
) -> Option<(Representation, usize)> {
    (0..max_attempts).find_map(|attempt| {
        let rep = Representation::sample_free(kind, rank, derive_seed(seed, attempt as u64), field);
        let report = burnside_irreducible(&rep, BURNSIDE_LENGTH);
        (report.verdict == BurnsideVerdict::Irreducible).then_some((rep, attempt))
    })
}
