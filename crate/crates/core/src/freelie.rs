//! Exact arithmetic in the free Lie algebra on two generators `y1`, `y2`.
//!
//! Elements are stored in the Lyndon basis: every Lyndon word carries its
//! standard bracketing (recursive factorization into the longest proper
//! Lyndon suffix), and a [`FreeLieSeries`] maps Lyndon words to rational
//! coefficients up to an explicit truncation degree. Conversion to and from
//! the free associative algebra is triangular with respect to the
//! lexicographic order, which both normalizes brackets and doubles as a
//! free-Lie membership check for series produced by `log`/`exp` manipulations.

use crate::rat::{factorial, Rat};
use num::traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FreeLieError {
    #[error("truncation degree must be at least 1")]
    DegreeZero,
}

/// A Lyndon word over the generator alphabet, as letter indices (0-based).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LyndonWord(Vec<u8>);

impl LyndonWord {
    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    /// Split point of the standard factorization `w = u v` with `v` the
    /// longest proper Lyndon suffix; the standard bracketing is `[b(u), b(v)]`.
    pub fn standard_split(&self) -> Option<usize> {
        if self.0.len() < 2 {
            return None;
        }
        (1..self.0.len()).find(|&p| is_lyndon(&self.0[p..]))
    }
}

impl fmt::Display for LyndonWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(w: &[u8], f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if w.len() == 1 {
                return write!(f, "y{}", w[0] + 1);
            }
            let p = (1..w.len()).find(|&p| is_lyndon(&w[p..])).unwrap();
            write!(f, "[")?;
            go(&w[..p], f)?;
            write!(f, ",")?;
            go(&w[p..], f)?;
            write!(f, "]")
        }
        go(&self.0, f)
    }
}

/// True iff `w` is strictly smaller than all of its proper rotations.
pub fn is_lyndon(w: &[u8]) -> bool {
    if w.is_empty() {
        return false;
    }
    let double: Vec<u8> = w.iter().chain(w.iter()).copied().collect();
    (1..w.len()).all(|r| w < &double[r..r + w.len()])
}

/// All Lyndon words of the given degree over `num_generators` letters, in
/// lexicographic order. The standard bracketings of these words form a basis
/// of the degree-`degree` component of the free Lie algebra.
pub fn lyndon_basis(num_generators: usize, degree: usize) -> Vec<LyndonWord> {
    assert!(num_generators >= 1 && degree >= 1);
    assert!(num_generators <= 8, "alphabet capped at 8 letters");
    let mut out = Vec::new();
    let mut word = vec![0u8; degree];
    loop {
        if is_lyndon(&word) {
            out.push(LyndonWord(word.clone()));
        }
        // next word in lexicographic order
        let mut i = degree;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if word[i] + 1 < num_generators as u8 {
                word[i] += 1;
                for w in word.iter_mut().skip(i + 1) {
                    *w = 0;
                }
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Free associative algebra helpers (internal).
// ---------------------------------------------------------------------------

pub(crate) type Word = Vec<u8>;
pub(crate) type AssocPoly = BTreeMap<Word, Rat>;

pub(crate) fn assoc_add_term(p: &mut AssocPoly, w: Word, c: Rat) {
    if c.is_zero() {
        return;
    }
    let entry = p.entry(w).or_insert_with(Rat::zero);
    *entry += c;
    if entry.is_zero() {
        let key = p.iter().find(|(_, v)| v.is_zero()).map(|(k, _)| k.clone()).unwrap();
        p.remove(&key);
    }
}

pub(crate) fn assoc_mul(a: &AssocPoly, b: &AssocPoly, max_degree: usize) -> AssocPoly {
    let mut out = AssocPoly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > max_degree {
                continue;
            }
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            assoc_add_term(&mut out, w, ca * cb);
        }
    }
    out
}

fn assoc_scale_add(acc: &mut AssocPoly, p: &AssocPoly, c: &Rat) {
    for (w, v) in p {
        assoc_add_term(acc, w.clone(), v * c);
    }
}

/// exp of an associative polynomial without constant term.
pub(crate) fn assoc_exp(p: &AssocPoly, max_degree: usize) -> AssocPoly {
    debug_assert!(!p.contains_key(&Vec::new()));
    let mut acc = AssocPoly::new();
    assoc_add_term(&mut acc, Vec::new(), Rat::one());
    let mut power = acc.clone();
    for k in 1..=max_degree {
        power = assoc_mul(&power, p, max_degree);
        if power.is_empty() {
            break;
        }
        assoc_scale_add(&mut acc, &power, &(Rat::one() / factorial(k)));
    }
    acc
}

/// log of an associative polynomial with constant term 1.
pub(crate) fn assoc_log(p: &AssocPoly, max_degree: usize) -> AssocPoly {
    let mut u = p.clone();
    assoc_add_term(&mut u, Vec::new(), -Rat::one());
    debug_assert!(!u.contains_key(&Vec::new()));
    let mut acc = AssocPoly::new();
    let mut power = AssocPoly::new();
    assoc_add_term(&mut power, Vec::new(), Rat::one());
    for k in 1..=max_degree {
        power = assoc_mul(&power, &u, max_degree);
        if power.is_empty() {
            break;
        }
        let sign = if k % 2 == 0 { -Rat::one() } else { Rat::one() };
        assoc_scale_add(&mut acc, &power, &(sign / crate::rat::rat(k as i64)));
    }
    acc
}

/// Associative expansion of the standard bracketing of a Lyndon word.
fn expand_lyndon(w: &[u8], memo: &mut BTreeMap<Word, AssocPoly>) -> AssocPoly {
    if let Some(hit) = memo.get(w) {
        return hit.clone();
    }
    let result = if w.len() == 1 {
        let mut p = AssocPoly::new();
        assoc_add_term(&mut p, w.to_vec(), Rat::one());
        p
    } else {
        let p = (1..w.len()).find(|&p| is_lyndon(&w[p..])).unwrap();
        let left = expand_lyndon(&w[..p], memo);
        let right = expand_lyndon(&w[p..], memo);
        let mut out = assoc_mul(&left, &right, w.len());
        let rl = assoc_mul(&right, &left, w.len());
        for (word, c) in rl {
            assoc_add_term(&mut out, word, -c);
        }
        out
    };
    memo.insert(w.to_vec(), result.clone());
    result
}

/// Rewrites a Lie element of the free associative algebra in the Lyndon
/// basis. Panics if the input is not a Lie element: the expansion of the
/// standard bracketing of a Lyndon word `w` is `w` plus lexicographically
/// larger words, so elimination by smallest word must consume everything.
fn assoc_to_lyndon(p: &AssocPoly) -> BTreeMap<LyndonWord, Rat> {
    let mut memo = BTreeMap::new();
    let mut out = BTreeMap::new();
    let mut rest = p.clone();
    while let Some((w, c)) = rest.iter().next().map(|(w, c)| (w.clone(), c.clone())) {
        assert!(
            is_lyndon(&w),
            "not a free-Lie element: leading word {w:?} is not Lyndon"
        );
        let expansion = expand_lyndon(&w, &mut memo);
        for (word, v) in &expansion {
            assoc_add_term(&mut rest, word.clone(), -(v * &c));
        }
        out.insert(LyndonWord(w), c);
    }
    out
}

// ---------------------------------------------------------------------------
// FreeLieSeries
// ---------------------------------------------------------------------------

/// Degree-truncated element of the completed free Lie algebra on `y1`, `y2`,
/// stored in the Lyndon basis with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeLieSeries {
    terms: BTreeMap<LyndonWord, Rat>,
    truncation: usize,
}

impl FreeLieSeries {
    pub fn zero(truncation: usize) -> Self {
        FreeLieSeries { terms: BTreeMap::new(), truncation }
    }

    /// The generator `y1` (index 0) or `y2` (index 1).
    pub fn generator(index: u8, truncation: usize) -> Self {
        assert!(index < 2);
        assert!(truncation >= 1);
        let mut terms = BTreeMap::new();
        terms.insert(LyndonWord(vec![index]), Rat::one());
        FreeLieSeries { terms, truncation }
    }

    pub fn from_terms(terms: BTreeMap<LyndonWord, Rat>, truncation: usize) -> Self {
        let terms = terms
            .into_iter()
            .filter(|(w, c)| w.degree() <= truncation && !c.is_zero())
            .collect();
        FreeLieSeries { terms, truncation }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LyndonWord, &Rat)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &LyndonWord) -> Rat {
        self.terms.get(w).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, w: LyndonWord, c: Rat) {
        if c.is_zero() || w.degree() > self.truncation {
            return;
        }
        let entry = self.terms.entry(w).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            let key = self.terms.iter().find(|(_, v)| v.is_zero()).map(|(k, _)| k.clone()).unwrap();
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &FreeLieSeries) -> FreeLieSeries {
        let truncation = self.truncation.min(other.truncation);
        let mut out = self.truncate(truncation);
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &FreeLieSeries) -> FreeLieSeries {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> FreeLieSeries {
        if c.is_zero() {
            return FreeLieSeries::zero(self.truncation);
        }
        FreeLieSeries {
            terms: self.terms.iter().map(|(w, v)| (w.clone(), v * c)).collect(),
            truncation: self.truncation,
        }
    }

    pub fn truncate(&self, degree: usize) -> FreeLieSeries {
        FreeLieSeries {
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.degree() <= degree)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
            truncation: degree.min(self.truncation),
        }
    }

    /// Homogeneous component of the given degree, kept at the original
    /// truncation.
    pub fn homogeneous_part(&self, degree: usize) -> FreeLieSeries {
        FreeLieSeries {
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.degree() == degree)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
            truncation: self.truncation,
        }
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(LyndonWord::degree).min()
    }

    /// Lie bracket, computed through the free associative algebra and
    /// re-normalized into the Lyndon basis.
    pub fn bracket(&self, other: &FreeLieSeries) -> FreeLieSeries {
        let truncation = self.truncation.min(other.truncation);
        let a = self.associative_expansion();
        let b = other.associative_expansion();
        let mut comm = assoc_mul(&a, &b, truncation);
        for (w, c) in assoc_mul(&b, &a, truncation) {
            assoc_add_term(&mut comm, w, -c);
        }
        FreeLieSeries::from_terms(assoc_to_lyndon(&comm), truncation)
    }

    /// Image in the free associative algebra (each Lyndon word replaced by
    /// the expansion of its standard bracketing).
    pub fn associative_expansion(&self) -> BTreeMap<Vec<u8>, Rat> {
        let mut memo = BTreeMap::new();
        let mut out = AssocPoly::new();
        for (w, c) in &self.terms {
            for (word, v) in expand_lyndon(&w.0, &mut memo) {
                assoc_add_term(&mut out, word, &v * c);
            }
        }
        out
    }

    /// The involution exchanging `y1` and `y2`.
    pub fn swap_generators(&self) -> FreeLieSeries {
        let swapped: AssocPoly = self
            .associative_expansion()
            .into_iter()
            .map(|(w, c)| (w.into_iter().map(|l| 1 - l).collect(), c))
            .collect();
        FreeLieSeries::from_terms(assoc_to_lyndon(&swapped), self.truncation)
    }

    /// Extends `base` (values on the generators) to a derivation and applies
    /// it to this series, truncating at `degree`.
    pub fn apply_derivation(&self, base: &[FreeLieSeries; 2], degree: usize) -> FreeLieSeries {
        fn basis_series(w: &[u8], degree: usize) -> FreeLieSeries {
            let mut terms = BTreeMap::new();
            terms.insert(LyndonWord(w.to_vec()), Rat::one());
            FreeLieSeries::from_terms(terms, degree)
        }
        fn go(w: &[u8], base: &[FreeLieSeries; 2], degree: usize) -> FreeLieSeries {
            if w.len() == 1 {
                return base[w[0] as usize].truncate(degree);
            }
            let p = (1..w.len()).find(|&p| is_lyndon(&w[p..])).unwrap();
            let (u, v) = (&w[..p], &w[p..]);
            let du = go(u, base, degree);
            let dv = go(v, base, degree);
            du.bracket(&basis_series(v, degree))
                .add(&basis_series(u, degree).bracket(&dv))
        }
        let mut acc = FreeLieSeries::zero(degree);
        for (w, c) in &self.terms {
            acc = acc.add(&go(&w.0, base, degree).scale(c));
        }
        acc
    }

    /// The derivation `<v, d/dy_i>` replacing one occurrence of each generator
    /// at a time by the given series.
    pub fn directional_substitute(
        &self,
        replacements: &[FreeLieSeries; 2],
        degree: usize,
    ) -> FreeLieSeries {
        self.apply_derivation(replacements, degree)
    }
}

impl fmt::Display for FreeLieSeries {
    /// Canonical text form: `coefficient word` terms in lexicographic word
    /// order, e.g. `y1 + y2 + 1/2 [y1,y2]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (w, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = if neg { -c.clone() } else { c.clone() };
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if abs.is_one() {
                write!(f, "{w}")?;
            } else {
                write!(f, "{abs} {w}")?;
            }
        }
        Ok(())
    }
}

/// `log(e^a e^b)` truncated at `degree`. For `a = y1`, `b = y2` this is the
/// Baker-Campbell-Hausdorff series.
pub fn log_exp_product(
    a: &FreeLieSeries,
    b: &FreeLieSeries,
    degree: usize,
) -> Result<FreeLieSeries, FreeLieError> {
    if degree == 0 {
        return Err(FreeLieError::DegreeZero);
    }
    let ea = assoc_exp(&a.truncate(degree).associative_expansion(), degree);
    let eb = assoc_exp(&b.truncate(degree).associative_expansion(), degree);
    let prod = assoc_mul(&ea, &eb, degree);
    let log = assoc_log(&prod, degree);
    Ok(FreeLieSeries::from_terms(assoc_to_lyndon(&log), degree))
}

/// Named power series in `ad(direction)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdSeriesKind {
    /// `1 - e^{-ad}` = sum_{k>=1} (-1)^{k+1} ad^k / k!
    OneMinusExpNegAd,
    /// `e^{ad} - 1` = sum_{k>=1} ad^k / k!
    ExpAdMinusOne,
}

/// Applies the named power series in `ad(direction)` to `target`.
pub fn series_of_ad(
    kind: AdSeriesKind,
    direction: &FreeLieSeries,
    target: &FreeLieSeries,
    degree: usize,
) -> FreeLieSeries {
    assert!(degree >= 1);
    let mut acc = FreeLieSeries::zero(degree);
    let mut power = target.truncate(degree);
    for k in 1..=degree {
        power = direction.truncate(degree).bracket(&power);
        if power.is_zero() {
            break;
        }
        let c = match kind {
            AdSeriesKind::OneMinusExpNegAd => {
                let sign = if k % 2 == 0 { -Rat::one() } else { Rat::one() };
                sign / factorial(k)
            }
            AdSeriesKind::ExpAdMinusOne => Rat::one() / factorial(k),
        };
        acc = acc.add(&power.scale(&c));
    }
    acc
}

/// Tangential derivation of the free Lie algebra: acts on the generators by
/// `u(y_i) = [y_i, u_i]` and extends by the Leibniz rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangentialDerivation {
    pub u1: FreeLieSeries,
    pub u2: FreeLieSeries,
}

impl TangentialDerivation {
    pub fn new(u1: FreeLieSeries, u2: FreeLieSeries) -> Self {
        TangentialDerivation { u1, u2 }
    }

    pub fn apply(&self, s: &FreeLieSeries) -> FreeLieSeries {
        let degree = self
            .u1
            .truncation()
            .min(self.u2.truncation())
            .min(s.truncation());
        let base = [
            FreeLieSeries::generator(0, degree).bracket(&self.u1),
            FreeLieSeries::generator(1, degree).bracket(&self.u2),
        ];
        s.apply_derivation(&base, degree)
    }
}
