//! Trace algebra of the free group.
//!
//! For SL(2) and F₂ = ⟨a, b⟩ every trace function is an integer polynomial in
//! the Fricke coordinates x = tr a, y = tr b, z = tr ab. [`fricke_reduce`]
//! computes it with the SL(2) identities
//!
//! ```text
//! tr(U l⁻¹ V) = tr(l) tr(UV) − tr(U l V)
//! tr(U l l V) = tr(l) tr(U l V) − tr(UV)
//! tr((ab)^k)  = z tr((ab)^(k−1)) − tr((ab)^(k−2))
//! ```
//!
//! applied to the canonical cyclic representative. Each rewrite is applied to
//! a word whose (length, inverse count) is strictly smaller, so the recursion
//! terminates. For other groups the module only enumerates candidate
//! trace monomials and runs statistical separation trials.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::real;
use crate::matgroups::{self, flip_matrix, Field, GroupKind};
use crate::reps::{RepError, Representation};
use crate::seeds::derive_seed;
use crate::words::{canonical_class, enumerate_classes, CyclicClass, Letter, Word, WordError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("Fricke reduction needs a word in a and b, got generator {0:?}")]
    GeneratorOutOfRange(char),
    #[error(
        "{0} is even orthogonal: traces of monomials do not generate its invariants, \
         which also need Pfaffian-type expressions"
    )]
    PfaffianObstruction(GroupKind),
    #[error("{0} is not a classical kind with a trace-monomial generating set")]
    UnsupportedKind(GroupKind),
    #[error("flip pairs need an even orthogonal group, got {0}")]
    FlipInapplicable(GroupKind),
    #[error("cannot parse polynomial term {0:?}")]
    Parse(String),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Exponents of x, y, z.
pub type Exponents = (u32, u32, u32);

/// Integer polynomial in x, y, z. Zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TracePolynomial {
    terms: BTreeMap<Exponents, BigInt>,
}

impl TracePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        Self::monomial((0, 0, 0), BigInt::from(c))
    }

    pub fn monomial(e: Exponents, c: BigInt) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    pub fn x() -> Self {
        Self::monomial((1, 0, 0), BigInt::one())
    }

    pub fn y() -> Self {
        Self::monomial((0, 1, 0), BigInt::one())
    }

    pub fn z() -> Self {
        Self::monomial((0, 0, 1), BigInt::one())
    }

    fn add_term(&mut self, e: Exponents, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, BigInt> {
        &self.terms
    }

    pub fn coefficient(&self, e: Exponents) -> BigInt {
        self.terms.get(&e).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|&(i, j, k)| i + j + k).max().unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_default()
    }

    /// Multiplies by x (`var` 0), y (1) or z (2).
    pub fn shift(&self, var: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&(i, j, k), c)| {
                let e = match var {
                    0 => (i + 1, j, k),
                    1 => (i, j + 1, k),
                    _ => (i, j, k + 1),
                };
                (e, c.clone())
            })
            .collect();
        TracePolynomial { terms }
    }

    /// Terms in text order: ascending total degree, then descending
    /// lexicographic exponents within a degree.
    fn sorted_terms(&self) -> Vec<(Exponents, &BigInt)> {
        let mut v: Vec<_> = self.terms.iter().map(|(&e, c)| (e, c)).collect();
        v.sort_by(|(a, _), (b, _)| (a.0 + a.1 + a.2).cmp(&(b.0 + b.1 + b.2)).then_with(|| b.cmp(a)));
        v
    }

    /// Nested Horner evaluation in z, then y, then x.
    pub fn eval(&self, x: Complex64, y: Complex64, z: Complex64) -> Complex64 {
        let mut nested: BTreeMap<u32, BTreeMap<u32, BTreeMap<u32, f64>>> = BTreeMap::new();
        for (&(i, j, k), c) in &self.terms {
            let c = c.to_f64().unwrap_or(f64::NAN);
            nested.entry(i).or_default().entry(j).or_default().insert(k, c);
        }
        fn horner<T>(t: Complex64, coeffs: &BTreeMap<u32, T>, inner: impl Fn(&T) -> Complex64) -> Complex64 {
            let top = match coeffs.keys().next_back() {
                Some(&d) => d,
                None => return Complex64::ZERO,
            };
            let mut acc = Complex64::ZERO;
            for d in (0..=top).rev() {
                acc = acc * t + coeffs.get(&d).map_or(Complex64::ZERO, &inner);
            }
            acc
        }
        horner(x, &nested, |ys| horner(y, ys, |zs| horner(z, zs, |&c| real(c))))
    }
}

pub fn poly_eval(p: &TracePolynomial, x: Complex64, y: Complex64, z: Complex64) -> Complex64 {
    p.eval(x, y, z)
}

impl Add for &TracePolynomial {
    type Output = TracePolynomial;

    fn add(self, rhs: &TracePolynomial) -> TracePolynomial {
        let mut out = self.clone();
        for (&e, c) in &rhs.terms {
            out.add_term(e, c.clone());
        }
        out
    }
}

impl Sub for &TracePolynomial {
    type Output = TracePolynomial;

    fn sub(self, rhs: &TracePolynomial) -> TracePolynomial {
        let mut out = self.clone();
        for (&e, c) in &rhs.terms {
            out.add_term(e, -c);
        }
        out
    }
}

impl Neg for &TracePolynomial {
    type Output = TracePolynomial;

    fn neg(self) -> TracePolynomial {
        TracePolynomial { terms: self.terms.iter().map(|(&e, c)| (e, -c)).collect() }
    }
}

/// `+1*x^2*y^0*z^0 -1*x^1*y^1*z^1`; the zero polynomial prints as `0`.
impl fmt::Display for TracePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, ((i, j, k), c)) in self.sorted_terms().into_iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            let sign = if c.is_negative() { '-' } else { '+' };
            write!(f, "{sign}{}*x^{i}*y^{j}*z^{k}", c.abs())?;
        }
        Ok(())
    }
}

fn parse_term(t: &str) -> Option<(Exponents, BigInt)> {
    let mut parts = t.split('*');
    let coeff: BigInt = parts.next()?.parse().ok()?;
    let mut exp = [0u32; 3];
    for (slot, var) in exp.iter_mut().zip(["x^", "y^", "z^"]) {
        *slot = parts.next()?.strip_prefix(var)?.parse().ok()?;
    }
    if parts.next().is_some() {
        return None;
    }
    Some(((exp[0], exp[1], exp[2]), coeff))
}

impl FromStr for TracePolynomial {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = TracePolynomial::zero();
        if s.trim() == "0" {
            return Ok(p);
        }
        for t in s.split_whitespace() {
            let (e, c) = parse_term(t).ok_or_else(|| TraceError::Parse(t.to_string()))?;
            p.add_term(e, c);
        }
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exponents: [u32; 3],
    coefficient: String,
}

/// JSON: a list of `{"exponents": [i, j, k], "coefficient": "<integer>"}` in
/// text order. Coefficients are strings so they never lose precision.
impl Serialize for TracePolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms: Vec<TermJson> = self
            .sorted_terms()
            .into_iter()
            .map(|((i, j, k), c)| TermJson { exponents: [i, j, k], coefficient: c.to_string() })
            .collect();
        terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TracePolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let terms = Vec::<TermJson>::deserialize(d)?;
        let mut p = TracePolynomial::zero();
        for t in terms {
            let c: BigInt = t.coefficient.parse().map_err(serde::de::Error::custom)?;
            let [i, j, k] = t.exponents;
            p.add_term((i, j, k), c);
        }
        Ok(p)
    }
}

type ReductionCache = RwLock<HashMap<CyclicClass, TracePolynomial>>;

fn cache() -> &'static ReductionCache {
    static CACHE: OnceLock<ReductionCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn check_two_generator(w: &Word) -> Result<(), TraceError> {
    match w.letters().iter().find(|l| l.generator >= 2) {
        Some(l) => Err(TraceError::GeneratorOutOfRange(l.to_char())),
        None => Ok(()),
    }
}

/// Fricke polynomial of tr ρ(w) for ρ: F₂ → SL(2).
pub fn fricke_reduce(w: &Word) -> Result<TracePolynomial, TraceError> {
    check_two_generator(w)?;
    Ok(reduce(w.letters(), Some(cache())))
}

/// Same result as [`fricke_reduce`] without the shared cache.
pub fn fricke_reduce_unmemoized(w: &Word) -> Result<TracePolynomial, TraceError> {
    check_two_generator(w)?;
    Ok(reduce(w.letters(), None))
}

fn reduce(letters: &[Letter], memo: Option<&ReductionCache>) -> TracePolynomial {
    let class = canonical_class(&Word::from_letters(letters.iter().copied()));
    if let Some(m) = memo {
        if let Some(p) = m.read().expect("reduction cache poisoned").get(&class) {
            return p.clone();
        }
    }
    let p = reduce_canonical(class.representative().letters(), memo);
    if let Some(m) = memo {
        m.write().expect("reduction cache poisoned").insert(class, p.clone());
    }
    p
}

fn variable(l: Letter) -> TracePolynomial {
    if l.generator == 0 {
        TracePolynomial::x()
    } else {
        TracePolynomial::y()
    }
}

fn reduce_canonical(w: &[Letter], memo: Option<&ReductionCache>) -> TracePolynomial {
    let n = w.len();
    match n {
        0 => return TracePolynomial::constant(2),
        1 => return variable(w[0]),
        _ => {}
    }
    if let Some(i) = w.iter().position(|l| l.inverse) {
        let var = w[i].generator as usize;
        let removed: Vec<Letter> = w[..i].iter().chain(&w[i + 1..]).copied().collect();
        let mut flipped = w.to_vec();
        flipped[i] = w[i].inv();
        return &reduce(&removed, memo).shift(var) - &reduce(&flipped, memo);
    }
    if let Some(i) = (0..n).find(|&i| w[i] == w[(i + 1) % n]) {
        let rot: Vec<Letter> = w[i..].iter().chain(&w[..i]).copied().collect();
        let var = rot[0].generator as usize;
        let one: Vec<Letter> = rot[1..].to_vec();
        return &reduce(&one, memo).shift(var) - &reduce(&rot[2..], memo);
    }
    // positive and alternating: (ab)^k
    let k = n / 2;
    if k == 1 {
        return TracePolynomial::z();
    }
    &reduce(&w[2..], memo).shift(2) - &reduce(&w[4..], memo)
}

/// Worst deviation between a Fricke polynomial and the direct trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationViolation {
    pub class: CyclicClass,
    pub sample: usize,
    pub sample_seed: u64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthSummary {
    pub length: usize,
    pub classes: usize,
    pub max_terms: usize,
    pub max_degree: u32,
    pub max_abs_coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationReport {
    pub max_length: usize,
    pub num_samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub passed: bool,
    pub checks: usize,
    pub max_relative_error: f64,
    pub worst: Option<GenerationViolation>,
    /// At most [`MAX_LISTED_VIOLATIONS`] entries.
    pub violations: Vec<GenerationViolation>,
    pub violation_count: usize,
    pub per_length: Vec<LengthSummary>,
}

pub const MAX_LISTED_VIOLATIONS: usize = 20;

/// Checks |p_w(x, y, z) − tr ρ(w)| ≤ tol·(1 + |tr ρ(w)|) for every class of
/// length `1..=max_length` on seeded SL(2) pairs. Sample `s` uses
/// `derive_seed(seed, s)`.
pub fn verify_generation_sl2(
    max_length: usize,
    num_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<GenerationReport, TraceError> {
    let classes = enumerate_classes(2, max_length)?;
    let polys = classes.iter().map(|c| fricke_reduce(c.representative())).collect::<Result<Vec<_>, _>>()?;

    let mut per_length = Vec::new();
    for length in 1..=max_length {
        let idx: Vec<usize> = (0..classes.len()).filter(|&i| classes[i].len() == length).collect();
        per_length.push(LengthSummary {
            length,
            classes: idx.len(),
            max_terms: idx.iter().map(|&i| polys[i].len()).max().unwrap_or(0),
            max_degree: idx.iter().map(|&i| polys[i].total_degree()).max().unwrap_or(0),
            max_abs_coefficient: idx
                .iter()
                .map(|&i| polys[i].max_abs_coefficient())
                .max()
                .unwrap_or_default()
                .to_string(),
        });
    }

    let (a, b) = (Word::generator(0), Word::generator(1));
    let ab = a.concat(&b);
    let mut report = GenerationReport {
        max_length,
        num_samples,
        seed,
        tolerance: tol,
        passed: true,
        checks: 0,
        max_relative_error: 0.0,
        worst: None,
        violations: Vec::new(),
        violation_count: 0,
        per_length,
    };
    for s in 0..num_samples {
        let sample_seed = derive_seed(seed, s as u64);
        let rep = Representation::sample_free(GroupKind::SL(2), 2, sample_seed, Field::Complex);
        let fp = rep.fingerprint(max_length)?;
        let (x, y, z) = (rep.character(&a)?, rep.character(&b)?, rep.character(&ab)?);
        for ((class, p), &direct) in classes.iter().zip(&polys).zip(&fp.values) {
            let err = (p.eval(x, y, z) - direct).norm() / (1.0 + direct.norm());
            report.checks += 1;
            let record = || GenerationViolation { class: class.clone(), sample: s, sample_seed, relative_error: err };
            if report.worst.as_ref().is_none_or(|w| !(err <= w.relative_error)) {
                report.max_relative_error = err;
                report.worst = Some(record());
            }
            if !(err <= tol) {
                report.passed = false;
                report.violation_count += 1;
                if report.violations.len() < MAX_LISTED_VIOLATIONS {
                    report.violations.push(record());
                }
            }
        }
    }
    Ok(report)
}

/// Candidate trace generators: the canonical classes of monomials in the
/// generators and their inverses. No completeness bound is implied by
/// `max_length`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSet {
    pub kind: GroupKind,
    pub rank: usize,
    pub words: Vec<CyclicClass>,
}

pub fn procesi_monomials(kind: GroupKind, rank: usize, max_length: usize) -> Result<GeneratorSet, TraceError> {
    match kind {
        GroupKind::SO(n) if n % 2 == 0 => return Err(TraceError::PfaffianObstruction(kind)),
        GroupKind::AdSL(_) => return Err(TraceError::UnsupportedKind(kind)),
        _ => {}
    }
    Ok(GeneratorSet { kind, rank, words: enumerate_classes(rank, max_length)? })
}

/// Fingerprints of SAME-predicted pairs agree to this relative tolerance.
pub const SEPARATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationMode {
    /// Conjugate pairs use g sampled in the group.
    InGroup,
    /// Conjugate pairs use an orthogonal g of determinant −1; such pairs are
    /// labelled DIFF because they need not share an SO(2m) orbit.
    Flip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Conjugate,
    Flip,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    #[serde(rename = "SAME")]
    Same,
    #[serde(rename = "DIFF")]
    Diff,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationRecord {
    pub trial: usize,
    pub trial_seed: u64,
    pub pair: PairKind,
    pub truth: Label,
    pub predicted: Label,
    pub fingerprint_distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub same_predicted_same: usize,
    pub same_predicted_diff: usize,
    pub diff_predicted_same: usize,
    pub diff_predicted_diff: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub kind: GroupKind,
    pub rank: usize,
    pub max_length: usize,
    pub num_trials: usize,
    pub seed: u64,
    pub mode: SeparationMode,
    pub tolerance: f64,
    pub confusion: Confusion,
    pub confusions: usize,
    pub flip_pairs: usize,
    /// Flip pairs whose fingerprints agree.
    pub flip_collisions: usize,
    pub records: Vec<SeparationRecord>,
}

/// Trial `t` uses `ts = derive_seed(seed, t)`. The pair type is decided by the
/// parity of `derive_seed(ts, 0)`; ρ, g and the independent ρ' come from
/// `derive_seed(ts, 1..=3)`.
pub fn separation_trial(
    kind: GroupKind,
    rank: usize,
    max_length: usize,
    num_trials: usize,
    seed: u64,
    mode: SeparationMode,
) -> Result<SeparationReport, TraceError> {
    if mode == SeparationMode::Flip && !kind.is_even_orthogonal() {
        return Err(TraceError::FlipInapplicable(kind));
    }
    let n = kind.ambient_dim();
    let mut report = SeparationReport {
        kind,
        rank,
        max_length,
        num_trials,
        seed,
        mode,
        tolerance: SEPARATION_TOLERANCE,
        confusion: Confusion::default(),
        confusions: 0,
        flip_pairs: 0,
        flip_collisions: 0,
        records: Vec::with_capacity(num_trials),
    };
    for trial in 0..num_trials {
        let ts = derive_seed(seed, trial as u64);
        let rho = Representation::sample_free(kind, rank, derive_seed(ts, 1), Field::Complex);
        let (pair, other) = if derive_seed(ts, 0).is_multiple_of(2) {
            let g = matgroups::sample(kind, derive_seed(ts, 2));
            match mode {
                SeparationMode::InGroup => (PairKind::Conjugate, rho.conjugate(&g)?),
                SeparationMode::Flip => {
                    let q = flip_matrix(n).map_err(RepError::from)?;
                    (PairKind::Flip, rho.conjugate(&(q * g))?)
                }
            }
        } else {
            (PairKind::Independent, Representation::sample_free(kind, rank, derive_seed(ts, 3), Field::Complex))
        };
        let truth = if pair == PairKind::Conjugate { Label::Same } else { Label::Diff };
        let distance = rho.fingerprint(max_length)?.max_rel_distance(&other.fingerprint(max_length)?)?;
        let predicted = if distance <= SEPARATION_TOLERANCE { Label::Same } else { Label::Diff };
        let c = &mut report.confusion;
        match (truth, predicted) {
            (Label::Same, Label::Same) => c.same_predicted_same += 1,
            (Label::Same, Label::Diff) => c.same_predicted_diff += 1,
            (Label::Diff, Label::Same) => c.diff_predicted_same += 1,
            (Label::Diff, Label::Diff) => c.diff_predicted_diff += 1,
        }
        if pair == PairKind::Flip {
            report.flip_pairs += 1;
            if predicted == Label::Same {
                report.flip_collisions += 1;
            }
        }
        report.records.push(SeparationRecord {
            trial,
            trial_seed: ts,
            pair,
            truth,
            predicted,
            fingerprint_distance: distance,
        });
    }
    report.confusions = report.confusion.same_predicted_diff + report.confusion.diff_predicted_same;
    Ok(report)
}
