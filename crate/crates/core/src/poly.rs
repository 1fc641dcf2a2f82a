//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! A [`Monomial`] is an exponent vector with trailing zeros stripped, so
//! polynomials over different variable counts interoperate freely. Several
//! modules rely on a block convention for the variable indices: `x`-variables
//! occupy `0..d` by default, while two-parameter expansions place the first
//! parameter block at `0..d`, the second at `d..2d` and, when present, the
//! `x`-block at `2d..3d`.

use crate::rat::{factorial, Rat};
use num::traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent multi-index, canonical (no trailing zeros).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn from_exponents(mut exps: Vec<u32>) -> Self {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        Monomial(exps)
    }

    /// The monomial `x_i`.
    pub fn var(i: usize) -> Self {
        Self::var_pow(i, 1)
    }

    /// The monomial `x_i^e`.
    pub fn var_pow(i: usize, e: u32) -> Self {
        if e == 0 {
            return Self::one();
        }
        let mut exps = vec![0; i + 1];
        exps[i] = e;
        Monomial(exps)
    }

    pub fn exponent(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Total degree restricted to the variables `lo..hi`.
    pub fn block_degree(&self, lo: usize, hi: usize) -> u32 {
        self.0
            .iter()
            .enumerate()
            .filter(|(i, _)| *i >= lo && *i < hi)
            .map(|(_, e)| *e)
            .sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        let mut exps = vec![0; n];
        for (i, e) in exps.iter_mut().enumerate() {
            *e = self.exponent(i) + other.exponent(i);
        }
        Monomial::from_exponents(exps)
    }

    /// Product of the factorials of the exponents.
    pub fn factorial(&self) -> Rat {
        let mut acc = Rat::one();
        for &e in &self.0 {
            acc *= factorial(e as usize);
        }
        acc
    }

    /// Shifts every variable index up by `offset`.
    pub fn shift_vars(&self, offset: usize) -> Monomial {
        if self.0.is_empty() {
            return Monomial::one();
        }
        let mut exps = vec![0; offset];
        exps.extend_from_slice(&self.0);
        Monomial(exps)
    }

    fn render(&self, f: &mut fmt::Formatter<'_>, prefix: &str) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{prefix}{i}")?;
            } else {
                write!(f, "{prefix}{i}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        self.render(f, "x")
    }
}

/// Polynomial with rational coefficients; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SymPoly {
    terms: BTreeMap<Monomial, Rat>,
}

impl SymPoly {
    pub fn zero() -> Self {
        SymPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(i: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(i), Rat::one());
        p
    }

    pub fn monomial(m: Monomial, c: Rat) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn block_degree(&self, lo: usize, hi: usize) -> u32 {
        self.terms
            .keys()
            .map(|m| m.block_degree(lo, hi))
            .max()
            .unwrap_or(0)
    }

    pub fn coefficient(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .unwrap();
            self.terms.remove(&key);
        }
    }

    pub fn scale(&self, c: &Rat) -> SymPoly {
        if c.is_zero() {
            return SymPoly::zero();
        }
        SymPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rat) -> SymPoly {
        let mut out = SymPoly::zero();
        for (k, v) in &self.terms {
            out.add_term(k.mul(m), v * c);
        }
        out
    }

    /// Partial derivative with respect to `x_var`.
    pub fn derivative(&self, var: usize) -> SymPoly {
        let mut out = SymPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents().to_vec();
            exps[var] -= 1;
            out.add_term(Monomial::from_exponents(exps), c * Rat::from_integer(e.into()));
        }
        out
    }

    /// Discards all terms of total degree above `max`.
    pub fn truncate_total(&self, max: u32) -> SymPoly {
        SymPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= max)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Discards all terms whose degree in the variables `lo..hi` exceeds `max`.
    pub fn truncate_block(&self, lo: usize, hi: usize, max: u32) -> SymPoly {
        SymPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.block_degree(lo, hi) <= max)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// The homogeneous component of total degree `deg`.
    pub fn homogeneous_part(&self, deg: u32) -> SymPoly {
        SymPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == deg)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn shift_vars(&self, offset: usize) -> SymPoly {
        SymPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.shift_vars(offset), c.clone()))
                .collect(),
        }
    }

    /// Multiplies every term by `s^deg` where `deg` is the term's degree in
    /// the block `lo..hi`. This realizes the substitution `x_i -> s * x_i`
    /// for the block variables.
    pub fn scale_block(&self, lo: usize, hi: usize, s: &Rat) -> SymPoly {
        let mut out = SymPoly::zero();
        for (m, c) in &self.terms {
            let d = m.block_degree(lo, hi);
            let mut factor = Rat::one();
            for _ in 0..d {
                factor *= s.clone();
            }
            out.add_term(m.clone(), c * factor);
        }
        out
    }

    /// Substitutes polynomials for variables: `x_i -> subs(i)`, truncating the
    /// result at total degree `max`. Variables for which `subs` returns `None`
    /// are left alone.
    pub fn substitute(&self, subs: &dyn Fn(usize) -> Option<SymPoly>, max: u32) -> SymPoly {
        let mut out = SymPoly::zero();
        for (m, c) in &self.terms {
            let mut acc = SymPoly::constant(c.clone());
            for (i, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match subs(i) {
                    Some(p) => {
                        for _ in 0..e {
                            acc = (&acc * &p).truncate_total(max);
                        }
                    }
                    None => {
                        acc = acc.mul_monomial(&Monomial::var_pow(i, e), &Rat::one());
                    }
                }
                if acc.is_zero() {
                    break;
                }
            }
            out = &out + &acc;
        }
        out.truncate_total(max)
    }

    /// Evaluates at a rational point (missing entries are zero).
    pub fn eval_rat(&self, point: &[Rat]) -> Rat {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.exponents().iter().enumerate() {
                let x = point.get(i).cloned().unwrap_or_else(Rat::zero);
                for _ in 0..e {
                    t *= x.clone();
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = crate::rat::to_f64(c);
            for (i, &e) in m.exponents().iter().enumerate() {
                t *= point.get(i).copied().unwrap_or(0.0).powi(e as i32);
            }
            acc += t;
        }
        acc
    }

    /// exp of a polynomial without constant term, truncated at total degree `max`.
    pub fn exp_truncated(&self, max: u32) -> SymPoly {
        assert!(
            self.coefficient(&Monomial::one()).is_zero(),
            "exp_truncated requires zero constant term"
        );
        let mut acc = SymPoly::one();
        let mut power = SymPoly::one();
        for k in 1..=max as usize {
            power = (&power * self).truncate_total(max);
            if power.is_zero() {
                break;
            }
            acc = &acc + &power.scale(&(Rat::one() / factorial(k)));
        }
        acc
    }

    /// Reciprocal of a polynomial with constant term 1, truncated at `max`.
    pub fn recip_truncated(&self, max: u32) -> SymPoly {
        assert!(
            self.coefficient(&Monomial::one()).is_one(),
            "recip_truncated requires constant term 1"
        );
        let u = self - &SymPoly::one(); // degree >= 1
        let mut acc = SymPoly::one();
        let mut power = SymPoly::one();
        for k in 1..=max as usize {
            power = (&power * &u).truncate_total(max);
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 0 { Rat::one() } else { -Rat::one() };
            acc = &acc + &power.scale(&sign);
        }
        acc
    }

    /// Terms in canonical report order: degree descending, then the exponent
    /// multi-index lexicographically ascending.
    pub fn sorted_terms(&self) -> Vec<(Monomial, Rat)> {
        let mut v: Vec<_> = self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        v.sort_by(|a, b| {
            b.0.degree()
                .cmp(&a.0.degree())
                .then_with(|| a.0.exponents().cmp(b.0.exponents()))
        });
        v
    }
}

impl Add for &SymPoly {
    type Output = SymPoly;
    fn add(self, rhs: &SymPoly) -> SymPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &SymPoly {
    type Output = SymPoly;
    fn sub(self, rhs: &SymPoly) -> SymPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &SymPoly {
    type Output = SymPoly;
    fn neg(self) -> SymPoly {
        SymPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Mul for &SymPoly {
    type Output = SymPoly;
    fn mul(self, rhs: &SymPoly) -> SymPoly {
        let mut out = SymPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for SymPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.sorted_terms().into_iter().enumerate() {
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
            if m.degree() == 0 {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs} {m}")?;
            }
        }
        Ok(())
    }
}
