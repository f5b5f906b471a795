//! Reduced words in free products of finitely many factor groups.
//!
//! A word is stored as written, left to right: `letters[0]` is the terminal
//! letter (applied last) and the final entry is the initial letter (applied
//! first). `evaluate` is the left-to-right matrix product.
//!
//! Letters remember how they were built from the factor's generators, as a
//! freely reduced sequence of signed 1-based generator indices. That label is
//! what serializes; the matrix is what computes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{act, Flag};
use crate::linalg::GroupElement;

/// Default operator-norm distance at which an element counts as the identity.
pub const IDENTITY_THRESHOLD: f64 = 1e-9;

/// Freely reduced word in the generators of one factor. Entry `k > 0` stands
/// for generator `k`, `-k` for its inverse.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorWord(Vec<i32>);

impl GeneratorWord {
    pub fn new(symbols: Vec<i32>) -> Result<Self> {
        if symbols.contains(&0) {
            return Err(Error::Invalid("generator index 0 (indices are 1-based)".into()));
        }
        let mut out: Vec<i32> = Vec::with_capacity(symbols.len());
        for s in symbols {
            if out.last() == Some(&-s) {
                out.pop();
            } else {
                out.push(s);
            }
        }
        Ok(Self(out))
    }

    /// `generator^k`.
    pub fn power(generator: i32, k: i64) -> Self {
        let s = if k < 0 { -generator } else { generator };
        Self(vec![s; k.unsigned_abs() as usize])
    }

    pub fn symbols(&self) -> &[i32] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|s| -s).collect())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self::new(v).expect("symbols are nonzero")
    }

    /// Product of the named generators.
    pub fn evaluate(&self, generators: &[GroupElement], dim: usize) -> Result<GroupElement> {
        let mut acc = GroupElement::identity(dim);
        for &s in &self.0 {
            let g = generators
                .get(s.unsigned_abs() as usize - 1)
                .ok_or(Error::OutOfRange {
                    index: s.unsigned_abs() as usize,
                    len: generators.len(),
                })?;
            acc = if s > 0 { acc.compose(g)? } else { acc.compose(&g.inverse())? };
        }
        Ok(acc)
    }
}

/// Run-length form, e.g. `1^3;-2`.
impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let s = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == s {
                run += 1;
            }
            if !first {
                write!(f, ";")?;
            }
            first = false;
            if run > 1 {
                write!(f, "{s}^{run}")?;
            } else {
                write!(f, "{s}")?;
            }
            i += run;
        }
        Ok(())
    }
}

impl std::str::FromStr for GeneratorWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for tok in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (sym, run) = match tok.split_once('^') {
                Some((a, b)) => (a, b),
                None => (tok, "1"),
            };
            let sym: i32 = sym
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad generator symbol '{tok}'")))?;
            let run: usize = run
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad exponent in '{tok}'")))?;
            out.extend(std::iter::repeat_n(sym, run));
        }
        Self::new(out)
    }
}

/// A nontrivial element of one factor.
#[derive(Debug, Clone)]
pub struct Letter {
    factor: usize,
    element: GroupElement,
    word: GeneratorWord,
}

impl Letter {
    /// Fails with `Invalid` when the element is within `tol` of the identity.
    pub fn new(factor: usize, element: GroupElement, word: GeneratorWord, tol: f64) -> Result<Self> {
        if element.is_identity(tol) {
            return Err(Error::Invalid(format!(
                "letter {word} of factor {factor} is the identity"
            )));
        }
        Ok(Self { factor, element, word })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn element(&self) -> &GroupElement {
        &self.element
    }

    pub fn word(&self) -> &GeneratorWord {
        &self.word
    }

    pub fn inverse(&self) -> Letter {
        Letter {
            factor: self.factor,
            element: self.element.inverse(),
            word: self.word.inverse(),
        }
    }

    /// Product within the factor, or `None` when it is the identity.
    fn merge(&self, other: &Letter, tol: f64) -> Option<Letter> {
        let element = self.element.compose(&other.element).ok()?;
        if element.is_identity(tol) {
            return None;
        }
        Some(Letter {
            factor: self.factor,
            element,
            word: self.word.concat(&other.word),
        })
    }
}

/// A factor group given by generators, truncated to words of length at most
/// `depth` in those generators. Cyclic factors have one generator and
/// enumerate the powers ±1, …, ±depth.
#[derive(Debug, Clone)]
pub struct Factor {
    pub name: String,
    pub generators: Vec<GroupElement>,
    pub depth: usize,
    pub cyclic: bool,
}

impl Factor {
    pub fn new(name: impl Into<String>, generators: Vec<GroupElement>, depth: usize, cyclic: bool) -> Result<Self> {
        let name = name.into();
        if generators.is_empty() {
            return Err(Error::Invalid(format!("factor {name} has no generators")));
        }
        if cyclic && generators.len() != 1 {
            return Err(Error::Invalid(format!(
                "cyclic factor {name} needs exactly one generator, has {}",
                generators.len()
            )));
        }
        let d = generators[0].dim();
        if let Some(g) = generators.iter().find(|g| g.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: g.dim() });
        }
        Ok(Self { name, generators, depth, cyclic })
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    /// The letter named by a generator word.
    pub fn letter(&self, index: usize, word: GeneratorWord, tol: f64) -> Result<Letter> {
        let element = word.evaluate(&self.generators, self.dim())?;
        Letter::new(index, element, word, tol)
    }

    /// Distinct nontrivial elements of word length ≤ depth, shortest first.
    /// Elements equal (within `tol`, relative) to an earlier one or to the
    /// identity are skipped.
    pub fn letters(&self, index: usize, tol: f64) -> Result<Vec<Letter>> {
        let mut words: Vec<GeneratorWord> = Vec::new();
        if self.cyclic {
            for k in 1..=self.depth as i64 {
                words.push(GeneratorWord::power(1, k));
                words.push(GeneratorWord::power(1, -k));
            }
        } else {
            let n = self.generators.len() as i32;
            let symbols: Vec<i32> = (1..=n).flat_map(|s| [s, -s]).collect();
            let mut layer = vec![GeneratorWord::default()];
            for _ in 0..self.depth {
                let mut next = Vec::new();
                for w in &layer {
                    for &s in &symbols {
                        if w.0.last() == Some(&-s) {
                            continue;
                        }
                        let mut v = w.0.clone();
                        v.push(s);
                        next.push(GeneratorWord(v));
                    }
                }
                words.extend(next.iter().cloned());
                layer = next;
            }
        }
        let mut out: Vec<Letter> = Vec::new();
        for w in words {
            let element = w.evaluate(&self.generators, self.dim())?;
            if element.is_identity(tol) {
                continue;
            }
            let scale = element.matrix().max_abs().max(1.0);
            if out.iter().any(|l| l.element.distance(&element) <= tol * scale) {
                continue;
            }
            out.push(Letter { factor: index, element, word: w });
        }
        Ok(out)
    }
}

/// Element of the free product in reduced form.
#[derive(Debug, Clone, Default)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_letters(letters: Vec<Letter>) -> Result<Self> {
        for (i, pair) in letters.windows(2).enumerate() {
            if pair[0].factor == pair[1].factor {
                return Err(Error::NotReduced { position: i, factor: pair[0].factor });
            }
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn rel_length(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Factor of the letter applied first.
    pub fn initial_factor(&self) -> Option<usize> {
        self.letters.last().map(|l| l.factor)
    }

    /// Factor of the letter applied last.
    pub fn terminal_factor(&self) -> Option<usize> {
        self.letters.first().map(|l| l.factor)
    }

    /// Reduced form of `self · other`, merging same-factor letters at the
    /// seam and cancelling identities (cascading).
    pub fn concat(&self, other: &ReducedWord, tol: f64) -> ReducedWord {
        let mut left = self.letters.clone();
        let mut right: std::collections::VecDeque<Letter> = other.letters.iter().cloned().collect();
        while let (Some(x), Some(y)) = (left.last(), right.front()) {
            if x.factor != y.factor {
                break;
            }
            let merged = x.merge(y, tol);
            left.pop();
            right.pop_front();
            if let Some(m) = merged {
                left.push(m);
                break;
            }
        }
        left.extend(right);
        ReducedWord { letters: left }
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord {
            letters: self.letters.iter().rev().map(Letter::inverse).collect(),
        }
    }

    pub fn evaluate(&self, dim: usize) -> Result<GroupElement> {
        let mut acc = GroupElement::identity(dim);
        for l in &self.letters {
            acc = acc.compose(&l.element)?;
        }
        Ok(acc)
    }

    /// The `k` rightmost letters (the first `k` applied).
    pub fn initial_subword(&self, k: usize) -> Result<ReducedWord> {
        let n = self.letters.len();
        if k > n {
            return Err(Error::OutOfRange { index: k, len: n });
        }
        Ok(ReducedWord { letters: self.letters[n - k..].to_vec() })
    }

    /// The `k` leftmost letters (the last `k` applied).
    pub fn terminal_subword(&self, k: usize) -> Result<ReducedWord> {
        let n = self.letters.len();
        if k > n {
            return Err(Error::OutOfRange { index: k, len: n });
        }
        Ok(ReducedWord { letters: self.letters[..k].to_vec() })
    }

    /// Whether `self` is a terminal subword (left segment) of `other`.
    pub fn is_terminal_subword_of(&self, other: &ReducedWord) -> bool {
        self.letters.len() <= other.letters.len()
            && self
                .letters
                .iter()
                .zip(&other.letters)
                .all(|(a, b)| a.factor == b.factor && a.word == b.word)
    }

    /// Letter-by-letter action, initial letter first. Applying letters one at
    /// a time keeps the frames accurate where the full product would be
    /// badly conditioned.
    pub fn act_on(&self, f: &Flag) -> Result<Flag> {
        let mut out = f.clone();
        for l in self.letters.iter().rev() {
            out = act(&l.element, &out)?;
        }
        Ok(out)
    }

    /// Text form `A[1].B[-1^2]`, `e` for the empty word.
    pub fn encode(&self, names: &[String]) -> String {
        if self.letters.is_empty() {
            return "e".into();
        }
        self.letters
            .iter()
            .map(|l| {
                let name = names.get(l.factor).cloned().unwrap_or_else(|| l.factor.to_string());
                format!("{name}[{}]", l.word)
            })
            .collect::<Vec<_>>()
            .join(".")
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn parse(text: &str, factors: &[Factor], tol: f64) -> Result<ReducedWord> {
        let text = text.trim();
        if text.is_empty() || text == "e" {
            return Ok(ReducedWord::empty());
        }
        let mut letters = Vec::new();
        for tok in text.split('.') {
            let (name, rest) = tok
                .split_once('[')
                .ok_or_else(|| Error::Invalid(format!("letter '{tok}' lacks '['")))?;
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Invalid(format!("letter '{tok}' lacks ']'")))?;
            let index = factors
                .iter()
                .position(|f| f.name == name.trim())
                .ok_or_else(|| Error::Invalid(format!("unknown factor '{name}'")))?;
            let word: GeneratorWord = inner.parse()?;
            letters.push(factors[index].letter(index, word, tol)?);
        }
        ReducedWord::from_letters(letters)
    }

    /// Structural equality: same factors and generator words.
    pub fn same_letters(&self, other: &ReducedWord) -> bool {
        self.letters.len() == other.letters.len() && self.is_terminal_subword_of(other)
    }
}

/// All reduced words of relative length ≤ `max_rel_length` over the given
/// per-factor alphabets, by nondecreasing length, each exactly once.
pub fn enumerate_words(alphabets: &[Vec<Letter>], max_rel_length: usize) -> WordEnumerator<'_> {
    WordEnumerator {
        alphabets,
        max: max_rel_length,
        length: 0,
        state: None,
        started: false,
    }
}

/// Odometer over (factor, letter) choices with adjacent factors distinct.
pub struct WordEnumerator<'a> {
    alphabets: &'a [Vec<Letter>],
    max: usize,
    length: usize,
    state: Option<Vec<(usize, usize)>>,
    started: bool,
}

impl WordEnumerator<'_> {
    fn first_valid(&self, len: usize) -> Option<Vec<(usize, usize)>> {
        let mut v: Vec<(usize, usize)> = Vec::with_capacity(len);
        self.fill(&mut v, len).then_some(v)
    }

    /// Extend `v` to `len` with the lexicographically smallest valid tail.
    fn fill(&self, v: &mut Vec<(usize, usize)>, len: usize) -> bool {
        while v.len() < len {
            let prev = v.last().map(|p| p.0);
            match (0..self.alphabets.len()).find(|&f| Some(f) != prev && !self.alphabets[f].is_empty()) {
                Some(f) => v.push((f, 0)),
                None => return false,
            }
        }
        true
    }

    fn advance(&self, mut v: Vec<(usize, usize)>) -> Option<Vec<(usize, usize)>> {
        let len = v.len();
        while let Some((f, i)) = v.pop() {
            let prev = v.last().map(|p| p.0);
            if i + 1 < self.alphabets[f].len() {
                v.push((f, i + 1));
            } else if let Some(nf) =
                ((f + 1)..self.alphabets.len()).find(|&g| Some(g) != prev && !self.alphabets[g].is_empty())
            {
                v.push((nf, 0));
            } else {
                continue;
            }
            if self.fill(&mut v, len) {
                return Some(v);
            }
        }
        None
    }

    fn build(&self, v: &[(usize, usize)]) -> ReducedWord {
        ReducedWord {
            letters: v.iter().map(|&(f, i)| self.alphabets[f][i].clone()).collect(),
        }
    }
}

impl Iterator for WordEnumerator<'_> {
    type Item = ReducedWord;

    fn next(&mut self) -> Option<ReducedWord> {
        if !self.started {
            self.started = true;
            return Some(ReducedWord::empty());
        }
        if let Some(v) = self.state.take().and_then(|v| self.advance(v)) {
            let w = self.build(&v);
            self.state = Some(v);
            return Some(w);
        }
        if self.length >= self.max {
            return None;
        }
        self.length += 1;
        let v = self.first_valid(self.length)?;
        let w = self.build(&v);
        self.state = Some(v);
        Some(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlternatingType {
    /// ω_n = α₁β₁…α_n
    A,
    /// ω_n = β₁α₁…β_nα_n
    B,
}

/// The words ω₁,…,ω_n of the given shape; each is a terminal subword of the
/// next.
pub fn alternating_prefixes(
    letters_a: &[Letter],
    letters_b: &[Letter],
    kind: AlternatingType,
    n: usize,
) -> Result<Vec<ReducedWord>> {
    let (need_a, need_b) = match kind {
        AlternatingType::A => (n, n.saturating_sub(1)),
        AlternatingType::B => (n, n),
    };
    if letters_a.len() < need_a {
        return Err(Error::InsufficientLetters { needed: need_a, available: letters_a.len() });
    }
    if letters_b.len() < need_b {
        return Err(Error::InsufficientLetters { needed: need_b, available: letters_b.len() });
    }
    let mut seq = Vec::new();
    for k in 0..n {
        match kind {
            AlternatingType::A => {
                if k > 0 {
                    seq.push(letters_b[k - 1].clone());
                }
                seq.push(letters_a[k].clone());
            }
            AlternatingType::B => {
                seq.push(letters_b[k].clone());
                seq.push(letters_a[k].clone());
            }
        }
    }
    let full = ReducedWord::from_letters(seq)?;
    (1..=n)
        .map(|k| match kind {
            AlternatingType::A => full.terminal_subword(2 * k - 1),
            AlternatingType::B => full.terminal_subword(2 * k),
        })
        .collect()
}

/// A point of the Gromov boundary of the free product.
///
/// Type I points are translates `prefix · h^{+∞}` of attracting ends of factor
/// elements; Type II points are eventually periodic alternating infinite
/// words `prefix · period · period · …`.
#[derive(Debug, Clone)]
pub enum BoundaryPoint {
    TypeI { prefix: ReducedWord, tail: Letter },
    TypeII { prefix: ReducedWord, period: ReducedWord },
}

impl BoundaryPoint {
    pub fn type_i(prefix: ReducedWord, tail: Letter) -> Result<Self> {
        if prefix.initial_factor() == Some(tail.factor) {
            return Err(Error::NotReduced {
                position: prefix.rel_length() - 1,
                factor: tail.factor,
            });
        }
        Ok(BoundaryPoint::TypeI { prefix, tail })
    }

    pub fn type_ii(prefix: ReducedWord, period: ReducedWord) -> Result<Self> {
        if period.rel_length() < 2 || period.initial_factor() == period.terminal_factor() {
            return Err(Error::Invalid(
                "periodic tail must start and end in different factors".into(),
            ));
        }
        if prefix.initial_factor().is_some() && prefix.initial_factor() == period.terminal_factor() {
            return Err(Error::NotReduced {
                position: prefix.rel_length() - 1,
                factor: period.terminal_factor().unwrap_or_default(),
            });
        }
        Ok(BoundaryPoint::TypeII { prefix, period })
    }

    pub fn prefix(&self) -> &ReducedWord {
        match self {
            BoundaryPoint::TypeI { prefix, .. } | BoundaryPoint::TypeII { prefix, .. } => prefix,
        }
    }

    /// The first `n` letters of a Type II point's infinite word.
    pub fn truncation(&self, n: usize) -> Result<ReducedWord> {
        match self {
            BoundaryPoint::TypeI { .. } => Err(Error::Invalid("Type I points have no letter expansion".into())),
            BoundaryPoint::TypeII { prefix, period } => {
                let mut letters: Vec<Letter> = prefix.letters.clone();
                while letters.len() < n {
                    letters.extend(period.letters.iter().cloned());
                }
                letters.truncate(n);
                Ok(ReducedWord { letters })
            }
        }
    }

    /// The point `γ·ε`.
    pub fn translate(&self, gamma: &ReducedWord, tol: f64) -> Result<BoundaryPoint> {
        match self {
            BoundaryPoint::TypeI { prefix, tail } => {
                let mut word = gamma.concat(prefix, tol);
                if word.initial_factor() == Some(tail.factor) {
                    // δ·h^∞ = (δ h δ⁻¹)^∞ δ, and δ fixes nothing at infinity here
                    let delta = word.letters.pop().expect("nonempty");
                    let element = delta.element.compose(&tail.element)?.compose(&delta.element.inverse())?;
                    let label = delta.word.concat(&tail.word).concat(&delta.word.inverse());
                    let tail = Letter::new(tail.factor, element, label, tol)?;
                    return BoundaryPoint::type_i(word, tail);
                }
                BoundaryPoint::type_i(word, tail.clone())
            }
            BoundaryPoint::TypeII { prefix, period } => {
                let p = period.rel_length();
                let copies = (gamma.rel_length() + 1).div_ceil(p) + 1;
                let mut expanded = prefix.letters.clone();
                for _ in 0..copies {
                    expanded.extend(period.letters.iter().cloned());
                }
                let word = gamma.concat(&ReducedWord { letters: expanded }, tol);
                BoundaryPoint::type_ii(word, period.clone())
            }
        }
    }

    /// `I:<prefix>|<letter>` or `II:<prefix>|<period>`.
    pub fn encode(&self, names: &[String]) -> String {
        match self {
            BoundaryPoint::TypeI { prefix, tail } => {
                let t = ReducedWord { letters: vec![tail.clone()] };
                format!("I:{}|{}", prefix.encode(names), t.encode(names))
            }
            BoundaryPoint::TypeII { prefix, period } => {
                format!("II:{}|{}", prefix.encode(names), period.encode(names))
            }
        }
    }

    pub fn parse(text: &str, factors: &[Factor], tol: f64) -> Result<BoundaryPoint> {
        let (kind, rest) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("boundary point '{text}' lacks a kind")))?;
        let (prefix, tail) = rest
            .split_once('|')
            .ok_or_else(|| Error::Invalid(format!("boundary point '{text}' lacks '|'")))?;
        let prefix = ReducedWord::parse(prefix, factors, tol)?;
        let tail = ReducedWord::parse(tail, factors, tol)?;
        match kind {
            "I" => {
                if tail.rel_length() != 1 {
                    return Err(Error::Invalid("Type I tail must be a single letter".into()));
                }
                BoundaryPoint::type_i(prefix, tail.letters[0].clone())
            }
            "II" => BoundaryPoint::type_ii(prefix, tail),
            other => Err(Error::Invalid(format!("unknown boundary kind '{other}'"))),
        }
    }
}
