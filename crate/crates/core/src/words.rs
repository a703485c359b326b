//! Free-group words over at most 26 generators.
//!
//! Text form: lowercase `a..z` are generators, uppercase `A..Z` their inverses,
//! no separators. Words are always stored freely reduced.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_GENERATORS: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("invalid character {ch:?} at byte offset {offset}")]
    InvalidCharacter { offset: usize, ch: char },
    #[error("generator count {0} outside 1..=26")]
    GeneratorCount(usize),
}

/// A generator or its inverse. The derived order is the canonical letter
/// order `a < A < b < B < ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    /// Zero-based generator index (`a` is 0).
    pub generator: u8,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: u8, inverse: bool) -> Self {
        debug_assert!((generator as usize) < MAX_GENERATORS);
        Letter { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Letter { generator: self.generator, inverse: !self.inverse }
    }

    pub fn cancels(self, other: Letter) -> bool {
        self.generator == other.generator && self.inverse != other.inverse
    }

    pub fn to_char(self) -> char {
        let base = if self.inverse { b'A' } else { b'a' };
        (base + self.generator) as char
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'a'..='z' => Some(Letter::new(c as u8 - b'a', false)),
            'A'..='Z' => Some(Letter::new(c as u8 - b'A', true)),
            _ => None,
        }
    }

    /// The `2k` letters of rank `k` in canonical order.
    pub fn alphabet(num_generators: usize) -> Vec<Letter> {
        (0..num_generators as u8).flat_map(|g| [Letter::new(g, false), Letter::new(g, true)]).collect()
    }
}

/// A freely reduced word. The empty word is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut stack: Vec<Letter> = Vec::new();
        for l in letters {
            match stack.last() {
                Some(&top) if top.cancels(l) => {
                    stack.pop();
                }
                _ => stack.push(l),
            }
        }
        Word { letters: stack }
    }

    pub fn generator(index: u8) -> Self {
        Word { letters: vec![Letter::new(index, false)] }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest generator index used plus one; 0 for the identity.
    pub fn rank_used(&self) -> usize {
        self.letters.iter().map(|l| l.generator as usize + 1).max().unwrap_or(0)
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::from_letters(self.letters.iter().chain(other.letters.iter()).copied())
    }

    pub fn invert(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| l.inv()).collect() }
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => !f.cancels(l),
            _ => true,
        }
    }

    /// Rotation starting at `k`, i.e. `w[k..] w[..k]`. Only meaningful on
    /// cyclically reduced words, where it stays reduced.
    pub fn rotate(&self, k: usize) -> Word {
        let n = self.letters.len();
        if n == 0 {
            return Word::identity();
        }
        let k = k % n;
        let letters = self.letters[k..].iter().chain(&self.letters[..k]).copied().collect();
        Word { letters }
    }

    pub fn inverse_count(&self) -> usize {
        self.letters.iter().filter(|l| l.inverse).count()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_word(s)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_word(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses the letter sequence and returns its free reduction.
pub fn parse_word(text: &str) -> Result<Word, WordError> {
    let mut letters = Vec::with_capacity(text.len());
    for (offset, ch) in text.char_indices() {
        match Letter::from_char(ch) {
            Some(l) => letters.push(l),
            None => return Err(WordError::InvalidCharacter { offset, ch }),
        }
    }
    Ok(Word::from_letters(letters))
}

/// A conjugacy class of the free group, held by its canonical representative:
/// cyclically reduced and lexicographically least among its rotations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CyclicClass {
    representative: Word,
}

impl CyclicClass {
    pub fn representative(&self) -> &Word {
        &self.representative
    }

    pub fn len(&self) -> usize {
        self.representative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representative.is_empty()
    }

    pub fn into_word(self) -> Word {
        self.representative
    }
}

impl Ord for CyclicClass {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.representative.cmp(&other.representative))
    }
}

impl PartialOrd for CyclicClass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CyclicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.representative.fmt(f)
    }
}

impl Serialize for CyclicClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.representative.serialize(s)
    }
}

/// Index of the lexicographically least rotation (smallest index on ties).
fn least_rotation(letters: &[Letter]) -> usize {
    let n = letters.len();
    let mut best = 0;
    for k in 1..n {
        let ord = (0..n)
            .map(|i| letters[(k + i) % n].cmp(&letters[(best + i) % n]))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal);
        if ord == Ordering::Less {
            best = k;
        }
    }
    best
}

/// Returns the canonical class of `u` and a conjugator `w` with
/// `u = w · rep · w⁻¹` in the free group.
pub fn cyclic_reduce(u: &Word) -> (CyclicClass, Word) {
    let letters = u.letters();
    let (mut lo, mut hi) = (0, letters.len());
    while hi - lo >= 2 && letters[lo].cancels(letters[hi - 1]) {
        lo += 1;
        hi -= 1;
    }
    let peeled = Word { letters: letters[..lo].to_vec() };
    let core = &letters[lo..hi];
    let k = least_rotation(core);
    let rep = Word { letters: core[k..].iter().chain(&core[..k]).copied().collect() };
    // core = s · rep · s⁻¹ with s = core[..k]
    let shift = Word { letters: core[..k].to_vec() };
    (CyclicClass { representative: rep }, peeled.concat(&shift))
}

pub fn canonical_class(u: &Word) -> CyclicClass {
    cyclic_reduce(u).0
}

fn is_canonical(letters: &[Letter]) -> bool {
    let n = letters.len();
    if n == 0 || letters[0].cancels(letters[n - 1]) {
        return false;
    }
    (1..n).all(|k| {
        (0..n).map(|i| letters[(k + i) % n].cmp(&letters[i])).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
            != Ordering::Less
    })
}

/// All cyclic classes of nonempty cyclically reduced words of length
/// `1..=max_length`, sorted by (length, lex).
pub fn enumerate_classes(num_generators: usize, max_length: usize) -> Result<Vec<CyclicClass>, WordError> {
    if num_generators == 0 || num_generators > MAX_GENERATORS {
        return Err(WordError::GeneratorCount(num_generators));
    }
    let alphabet = Letter::alphabet(num_generators);
    let mut out = Vec::new();
    let mut buf = Vec::with_capacity(max_length);
    for len in 1..=max_length {
        extend_canonical(&alphabet, len, &mut buf, &mut out);
    }
    Ok(out)
}

// Depth-first over reduced words in letter order, so output is lex-sorted.
fn extend_canonical(alphabet: &[Letter], len: usize, buf: &mut Vec<Letter>, out: &mut Vec<CyclicClass>) {
    if buf.len() == len {
        if is_canonical(buf) {
            out.push(CyclicClass { representative: Word { letters: buf.clone() } });
        }
        return;
    }
    for &l in alphabet {
        if buf.last().is_some_and(|&p| p.cancels(l)) {
            continue;
        }
        // a canonical word starts with its least letter
        if buf.first().is_some_and(|&f| l < f) {
            continue;
        }
        buf.push(l);
        extend_canonical(alphabet, len, buf, out);
        buf.pop();
    }
}

/// All freely reduced words of length `0..=max_length` (identity first),
/// in (length, lex) order.
pub fn enumerate_reduced_words(num_generators: usize, max_length: usize) -> Vec<Word> {
    let alphabet = Letter::alphabet(num_generators);
    let mut layer = vec![Word::identity()];
    let mut out = layer.clone();
    for _ in 0..max_length {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for w in &layer {
            for &l in &alphabet {
                if w.letters.last().is_some_and(|&p| p.cancels(l)) {
                    continue;
                }
                let mut letters = w.letters.clone();
                letters.push(l);
                next.push(Word { letters });
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn w(s: &str) -> Word {
        parse_word(s).unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(w("abAB").len(), 4);
        assert_eq!(w("abAB").letters()[2], Letter::new(0, true));
        assert!(w("aA").is_empty());
        assert!(w("abBA").is_empty());
        assert!(w("").is_empty());
    }

    #[test]
    fn parse_error_names_offset() {
        assert_eq!(parse_word("ab1c"), Err(WordError::InvalidCharacter { offset: 2, ch: '1' }));
        assert!(matches!(parse_word("a b"), Err(WordError::InvalidCharacter { offset: 1, .. })));
    }

    #[test]
    fn concat_and_invert() {
        assert!(w("ab").concat(&w("BA")).is_empty());
        assert_eq!(w("a").concat(&w("b")).to_string(), "ab");
        assert_eq!(w("ab").concat(&w("Bc")).to_string(), "ac");
        assert_eq!(w("ab").invert().to_string(), "BA");
        assert!(Word::identity().invert().is_empty());
        assert_eq!(w("aBc").invert().to_string(), "CbA");
    }

    #[test]
    fn cyclic_reduce_examples() {
        let (c, g) = cyclic_reduce(&w("abA"));
        assert_eq!((c.to_string(), g.to_string()), ("b".into(), "a".into()));
        let (c, g) = cyclic_reduce(&w("ba"));
        assert_eq!((c.to_string(), g.to_string()), ("ab".into(), "b".into()));
        let (c, g) = cyclic_reduce(&w("abAB"));
        assert_eq!((c.to_string(), g.to_string()), ("abAB".into(), "".into()));
        let (c, g) = cyclic_reduce(&Word::identity());
        assert!(c.is_empty() && g.is_empty());
    }

    // brute force: every rotation, pick the minimum
    fn rotation_oracle(u: &Word) -> String {
        let (c, _) = cyclic_reduce(u);
        let core = c.representative().clone();
        (0..core.len().max(1)).map(|k| core.rotate(k)).min().unwrap_or_default().to_string()
    }

    #[test]
    fn cyclic_reduce_matches_rotation_oracle() {
        for u in enumerate_reduced_words(2, 6) {
            let (c, g) = cyclic_reduce(&u);
            assert_eq!(c.to_string(), rotation_oracle(&u));
            assert_eq!(g.concat(c.representative()).concat(&g.invert()), u);
        }
    }

    #[test]
    fn enumerate_examples() {
        let names = |k, l| -> Vec<String> { enumerate_classes(k, l).unwrap().iter().map(|c| c.to_string()).collect() };
        assert_eq!(names(2, 1), ["a", "A", "b", "B"]);
        assert_eq!(names(2, 2), ["a", "A", "b", "B", "aa", "ab", "aB", "AA", "Ab", "AB", "bb", "BB"]);
        assert_eq!(names(1, 3), ["a", "A", "aa", "AA", "aaa", "AAA"]);
        assert_eq!(enumerate_classes(0, 2), Err(WordError::GeneratorCount(0)));
        assert_eq!(enumerate_classes(27, 2), Err(WordError::GeneratorCount(27)));
    }

    // all strings over the alphabet, reduced, filtered, rotation-deduped
    fn brute_force_classes(k: usize, l: usize) -> BTreeSet<(usize, String)> {
        let alphabet = Letter::alphabet(k);
        let mut set = BTreeSet::new();
        let mut strings: Vec<Vec<Letter>> = vec![vec![]];
        for _ in 0..l {
            let mut next = Vec::new();
            for s in &strings {
                for &a in &alphabet {
                    let mut t = s.clone();
                    t.push(a);
                    next.push(t);
                }
            }
            for s in &next {
                let r = Word::from_letters(s.iter().copied());
                if !r.is_empty() && r.is_cyclically_reduced() {
                    let m = (0..r.len()).map(|i| r.rotate(i)).min().unwrap();
                    set.insert((m.len(), m.to_string()));
                }
            }
            strings = next;
        }
        set
    }

    #[test]
    fn enumeration_count_matches_brute_force() {
        for k in 1..=2 {
            for l in 0..=6 {
                let classes = enumerate_classes(k, l).unwrap();
                let oracle = brute_force_classes(k, l);
                assert_eq!(classes.len(), oracle.len(), "k={k} l={l}");
                for c in &classes {
                    assert!(oracle.contains(&(c.len(), c.to_string())));
                }
                let mut sorted = classes.clone();
                sorted.sort();
                assert_eq!(sorted, classes);
            }
        }
    }

    #[test]
    fn representatives_are_fixed_points() {
        for c in enumerate_classes(3, 4).unwrap() {
            let (c2, g) = cyclic_reduce(c.representative());
            assert_eq!(c2, c);
            assert!(g.is_empty());
        }
    }

    #[test]
    fn inverse_classes_not_merged() {
        let classes = enumerate_classes(2, 3).unwrap();
        let names: BTreeSet<String> = classes.iter().map(|c| c.to_string()).collect();
        assert!(names.contains("aab") && names.contains("AAB"));
    }

    #[test]
    fn serde_text_form() {
        let u = w("abAB");
        let s = serde_json::to_string(&u).unwrap();
        assert_eq!(s, "\"abAB\"");
        let v: Word = serde_json::from_str(&s).unwrap();
        assert_eq!(u, v);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word_strategy() -> impl Strategy<Value = Word> {
            prop::collection::vec((0u8..3, any::<bool>()), 0..12)
                .prop_map(|v| Word::from_letters(v.into_iter().map(|(g, i)| Letter::new(g, i))))
        }

        proptest! {
            #[test]
            fn invert_involution(u in word_strategy()) {
                prop_assert_eq!(u.invert().invert(), u.clone());
                prop_assert!(u.concat(&u.invert()).is_empty());
            }

            #[test]
            fn cyclic_reduce_conjugates_back(u in word_strategy()) {
                let (c, g) = cyclic_reduce(&u);
                prop_assert!(c.representative().is_cyclically_reduced());
                prop_assert_eq!(g.concat(c.representative()).concat(&g.invert()), u);
            }

            #[test]
            fn text_round_trip(u in word_strategy()) {
                prop_assert_eq!(parse_word(&u.to_string()).unwrap(), u);
            }
        }
    }
}
