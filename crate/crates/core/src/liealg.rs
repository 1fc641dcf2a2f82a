//! Finite-dimensional Lie algebras given by structure constants.
//!
//! A [`LieAlgebra`] stores the table `f_ij^k` for `i < j` only (antisymmetry
//! is implied by the accessor) and validates the Jacobi identity at
//! construction. On top of it this module provides the adjoint representation,
//! the Kirillov-Kostant Poisson bracket on the symmetric algebra, analytic
//! scalar series of `ad` (traces and square-rooted determinants, including the
//! Duflo series), and evaluation of free Lie series through the structure
//! constants.

use crate::freelie::{is_lyndon, FreeLieSeries};
use crate::poly::SymPoly;
use crate::rat::{factorial, parse_rat, Rat};
use num::traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LieAlgebraError {
    #[error("bracket index ({i},{j},{k}) out of range for dimension {dim}")]
    BadIndex { i: usize, j: usize, k: usize, dim: usize },
    #[error("antisymmetry violation: bracket for pair ({i},{j}) given more than once")]
    AntisymmetryViolation { i: usize, j: usize },
    #[error("Jacobi identity fails at (i,j,k,l) = ({i},{j},{k},{l})")]
    JacobiViolation { i: usize, j: usize, k: usize, l: usize },
    #[error("malformed Lie algebra file: {0}")]
    ParseError(String),
    #[error("unknown builtin algebra `{0}`")]
    UnknownAlgebra(String),
}

/// Lie algebra of dimension `d` with rational structure constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebra {
    dim: usize,
    /// `f_ij^k` for `i < j`, as dense coefficient vectors of length `dim`.
    brackets: BTreeMap<(usize, usize), Vec<Rat>>,
    name: Option<String>,
    basis_labels: Option<Vec<String>>,
}

impl LieAlgebra {
    /// Builds and validates an algebra from bracket entries
    /// `(i, j, coefficients of [x_i, x_j])`. Entries may use either index
    /// order; each unordered pair may appear at most once.
    pub fn new(
        dim: usize,
        entries: &[(usize, usize, Vec<(usize, Rat)>)],
    ) -> Result<Self, LieAlgebraError> {
        let mut brackets: BTreeMap<(usize, usize), Vec<Rat>> = BTreeMap::new();
        for (i, j, coeffs) in entries {
            let (i, j) = (*i, *j);
            if i >= dim || j >= dim || coeffs.iter().any(|(k, _)| *k >= dim) {
                let k = coeffs.iter().map(|(k, _)| *k).find(|k| *k >= dim).unwrap_or(0);
                return Err(LieAlgebraError::BadIndex { i, j, k, dim });
            }
            if i == j {
                // [x_i, x_i] = 0 by antisymmetry; a nonzero entry is inconsistent.
                if coeffs.iter().any(|(_, c)| !c.is_zero()) {
                    return Err(LieAlgebraError::AntisymmetryViolation { i, j });
                }
                continue;
            }
            let (lo, hi, sign) = if i < j { (i, j, Rat::one()) } else { (j, i, -Rat::one()) };
            if brackets.contains_key(&(lo, hi)) {
                return Err(LieAlgebraError::AntisymmetryViolation { i, j });
            }
            let mut row = vec![Rat::zero(); dim];
            for (k, c) in coeffs {
                row[*k] += c * &sign;
            }
            if row.iter().any(|c| !c.is_zero()) {
                brackets.insert((lo, hi), row);
            }
        }
        let algebra = LieAlgebra { dim, brackets, name: None, basis_labels: None };
        algebra.check_jacobi()?;
        Ok(algebra)
    }

    fn check_jacobi(&self) -> Result<(), LieAlgebraError> {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                for k in (j + 1)..d {
                    for l in 0..d {
                        let mut sum = Rat::zero();
                        for m in 0..d {
                            sum += self.f(i, j, m) * self.f(m, k, l)
                                + self.f(j, k, m) * self.f(m, i, l)
                                + self.f(k, i, m) * self.f(m, j, l);
                        }
                        if !sum.is_zero() {
                            return Err(LieAlgebraError::JacobiViolation { i, j, k, l });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Structure constant `f_ij^k`, antisymmetrized from the stored `i < j` part.
    pub fn f(&self, i: usize, j: usize, k: usize) -> Rat {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => Rat::zero(),
            Less => self
                .brackets
                .get(&(i, j))
                .map(|row| row[k].clone())
                .unwrap_or_else(Rat::zero),
            Greater => -self.f(j, i, k),
        }
    }

    /// Nonzero structure entries `(i, j, k, f_ij^k)` over all ordered pairs.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, usize, Rat)> {
        let mut out = Vec::new();
        for ((i, j), row) in &self.brackets {
            for (k, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    out.push((*i, *j, k, c.clone()));
                    out.push((*j, *i, k, -c.clone()));
                }
            }
        }
        out
    }

    /// The algebra with every structure constant multiplied by `t`.
    pub fn scaled(&self, t: &Rat) -> LieAlgebra {
        let brackets = if t.is_zero() {
            BTreeMap::new()
        } else {
            self.brackets
                .iter()
                .map(|(k, row)| (*k, row.iter().map(|c| c * t).collect()))
                .collect()
        };
        // Jacobi is homogeneous in the structure constants, so no recheck.
        LieAlgebra { dim: self.dim, brackets, name: None, basis_labels: None }
    }

    /// Bracket of two coefficient vectors with entries in any commutative
    /// ring of polynomials: `[u, v]_k = sum_ij u_i v_j f_ij^k`.
    pub fn bracket_vec(&self, u: &[SymPoly], v: &[SymPoly]) -> Vec<SymPoly> {
        let mut out = vec![SymPoly::zero(); self.dim];
        for ((i, j), row) in &self.brackets {
            let uivj = &u[*i] * &v[*j];
            let ujvi = &u[*j] * &v[*i];
            let cross = &uivj - &ujvi;
            if cross.is_zero() {
                continue;
            }
            for (k, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    out[k] = &out[k] + &cross.scale(c);
                }
            }
        }
        out
    }

    /// Adjoint matrix of a rational vector: `(ad x)_kj = sum_i x_i f_ij^k`.
    pub fn ad_matrix(&self, x: &[Rat]) -> Vec<Vec<Rat>> {
        assert_eq!(x.len(), self.dim);
        let mut m = vec![vec![Rat::zero(); self.dim]; self.dim];
        for (i, j, k, c) in self.nonzero_entries() {
            m[k][j] += &x[i] * &c;
        }
        m
    }

    /// Adjoint matrix of the symbolic vector whose coordinates are the
    /// polynomial variables `offset..offset+dim`.
    pub fn ad_matrix_symbolic(&self, offset: usize) -> Vec<Vec<SymPoly>> {
        let mut m = vec![vec![SymPoly::zero(); self.dim]; self.dim];
        for (i, j, k, c) in self.nonzero_entries() {
            m[k][j] = &m[k][j] + &SymPoly::var(offset + i).scale(&c);
        }
        m
    }

    /// Adjoint matrix of a vector of polynomials.
    pub fn ad_matrix_of(&self, x: &[SymPoly]) -> Vec<Vec<SymPoly>> {
        assert_eq!(x.len(), self.dim);
        let mut m = vec![vec![SymPoly::zero(); self.dim]; self.dim];
        for (i, j, k, c) in self.nonzero_entries() {
            m[k][j] = &m[k][j] + &x[i].scale(&c);
        }
        m
    }

    /// Kirillov-Kostant Poisson bracket
    /// `{f1, f2} = sum f_ij^k x_k (d_i f1)(d_j f2)`.
    pub fn poisson_bracket(&self, f1: &SymPoly, f2: &SymPoly) -> SymPoly {
        let mut out = SymPoly::zero();
        for ((i, j), row) in &self.brackets {
            let didj = &f1.derivative(*i) * &f2.derivative(*j);
            let djdi = &f1.derivative(*j) * &f2.derivative(*i);
            let cross = &didj - &djdi;
            if cross.is_zero() {
                continue;
            }
            for (k, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    out = &out + &(&cross * &SymPoly::var(k)).scale(c);
                }
            }
        }
        out
    }

    /// Image of a free Lie series under the homomorphism sending the two
    /// generators to the given coefficient vectors (entries may be symbolic
    /// polynomials). Terms above the series truncation never contribute.
    pub fn evaluate_free_lie(
        &self,
        s: &FreeLieSeries,
        assignment: &[Vec<SymPoly>; 2],
    ) -> Vec<SymPoly> {
        let mut memo: BTreeMap<Vec<u8>, Vec<SymPoly>> = BTreeMap::new();
        let mut out = vec![SymPoly::zero(); self.dim];
        for (w, c) in s.terms() {
            let v = self.eval_word(w.letters(), assignment, &mut memo);
            for k in 0..self.dim {
                out[k] = &out[k] + &v[k].scale(c);
            }
        }
        out
    }

    fn eval_word(
        &self,
        w: &[u8],
        assignment: &[Vec<SymPoly>; 2],
        memo: &mut BTreeMap<Vec<u8>, Vec<SymPoly>>,
    ) -> Vec<SymPoly> {
        if let Some(hit) = memo.get(w) {
            return hit.clone();
        }
        let result = if w.len() == 1 {
            assignment[w[0] as usize].clone()
        } else {
            let p = (1..w.len()).find(|&p| is_lyndon(&w[p..])).unwrap();
            let left = self.eval_word(&w[..p], assignment, memo);
            let right = self.eval_word(&w[p..], assignment, memo);
            self.bracket_vec(&left, &right)
        };
        memo.insert(w.to_vec(), result.clone());
        result
    }

    /// Value and directional derivative of a free Lie series evaluated on the
    /// algebra: returns the endomorphism `x -> d/dt s(.., y_g + t x, ..)|_0`
    /// as a `dim x dim` matrix of polynomials (entry `[k][i]` is the `k`-th
    /// coordinate of the derivative in direction `e_i`).
    pub fn directional_endomorphism(
        &self,
        s: &FreeLieSeries,
        generator: usize,
        assignment: &[Vec<SymPoly>; 2],
    ) -> Vec<Vec<SymPoly>> {
        assert!(generator < 2);
        let d = self.dim;
        let mut out = vec![vec![SymPoly::zero(); d]; d];
        let mut memo: BTreeMap<Vec<u8>, (Vec<SymPoly>, Vec<Vec<SymPoly>>)> = BTreeMap::new();
        for (w, c) in s.terms() {
            let (_, deriv) = self.eval_word_directional(w.letters(), generator, assignment, &mut memo);
            for k in 0..d {
                for i in 0..d {
                    out[k][i] = &out[k][i] + &deriv[k][i].scale(c);
                }
            }
        }
        out
    }

    #[allow(clippy::type_complexity)]
    fn eval_word_directional(
        &self,
        w: &[u8],
        generator: usize,
        assignment: &[Vec<SymPoly>; 2],
        memo: &mut BTreeMap<Vec<u8>, (Vec<SymPoly>, Vec<Vec<SymPoly>>)>,
    ) -> (Vec<SymPoly>, Vec<Vec<SymPoly>>) {
        if let Some(hit) = memo.get(w) {
            return hit.clone();
        }
        let d = self.dim;
        let result = if w.len() == 1 {
            let val = assignment[w[0] as usize].clone();
            let mut deriv = vec![vec![SymPoly::zero(); d]; d];
            if w[0] as usize == generator {
                for (k, row) in deriv.iter_mut().enumerate() {
                    row[k] = SymPoly::one();
                }
            }
            (val, deriv)
        } else {
            let p = (1..w.len()).find(|&p| is_lyndon(&w[p..])).unwrap();
            let (lval, lder) = self.eval_word_directional(&w[..p], generator, assignment, memo);
            let (rval, rder) = self.eval_word_directional(&w[p..], generator, assignment, memo);
            let val = self.bracket_vec(&lval, &rval);
            let mut deriv = vec![vec![SymPoly::zero(); d]; d];
            for i in 0..d {
                let lcol: Vec<SymPoly> = (0..d).map(|k| lder[k][i].clone()).collect();
                let rcol: Vec<SymPoly> = (0..d).map(|k| rder[k][i].clone()).collect();
                let a = self.bracket_vec(&lcol, &rval);
                let b = self.bracket_vec(&lval, &rcol);
                for k in 0..d {
                    deriv[k][i] = &a[k] + &b[k];
                }
            }
            (val, deriv)
        };
        memo.insert(w.to_vec(), result.clone());
        result
    }
}

// ---------------------------------------------------------------------------
// Built-in algebras
// ---------------------------------------------------------------------------

impl LieAlgebra {
    fn with_name(mut self, name: &str, labels: Option<Vec<&str>>) -> Self {
        self.name = Some(name.to_string());
        self.basis_labels = labels.map(|v| v.iter().map(|s| s.to_string()).collect());
        self
    }

    /// The abelian algebra of the given dimension.
    pub fn abelian(dim: usize) -> LieAlgebra {
        LieAlgebra::new(dim, &[])
            .unwrap()
            .with_name(&format!("abelian{dim}"), None)
    }

    /// Heisenberg algebra: `[x0, x1] = x2`.
    pub fn heisenberg3() -> LieAlgebra {
        LieAlgebra::new(3, &[(0, 1, vec![(2, Rat::one())])])
            .unwrap()
            .with_name("heis3", None)
    }

    /// Two-dimensional affine algebra: `[x0, x1] = x1`.
    pub fn affine1() -> LieAlgebra {
        LieAlgebra::new(2, &[(0, 1, vec![(1, Rat::one())])])
            .unwrap()
            .with_name("aff1", Some(vec!["a", "b"]))
    }

    /// `sl2` with basis `(e, f, h)`: `[e,f] = h`, `[h,e] = 2e`, `[h,f] = -2f`.
    pub fn sl2() -> LieAlgebra {
        LieAlgebra::new(
            3,
            &[
                (0, 1, vec![(2, Rat::one())]),
                (2, 0, vec![(0, crate::rat::rat(2))]),
                (2, 1, vec![(1, crate::rat::rat(-2))]),
            ],
        )
        .unwrap()
        .with_name("sl2", Some(vec!["e", "f", "h"]))
    }

    /// `gl2` with the elementary-matrix basis `(E11, E12, E21, E22)`.
    pub fn gl2() -> LieAlgebra {
        let one = Rat::one;
        LieAlgebra::new(
            4,
            &[
                (0, 1, vec![(1, one())]),            // [E11,E12] = E12
                (0, 2, vec![(2, -one())]),           // [E11,E21] = -E21
                (1, 2, vec![(0, one()), (3, -one())]), // [E12,E21] = E11 - E22
                (1, 3, vec![(1, one())]),            // [E12,E22] = E12
                (2, 3, vec![(2, -one())]),           // [E21,E22] = -E21
            ],
        )
        .unwrap()
        .with_name("gl2", Some(vec!["E11", "E12", "E21", "E22"]))
    }

    /// Looks up a builtin by name: `abelian<d>`, `heis3`, `aff1`, `sl2`, `gl2`.
    pub fn builtin(name: &str) -> Result<LieAlgebra, LieAlgebraError> {
        match name {
            "heis3" => Ok(Self::heisenberg3()),
            "aff1" => Ok(Self::affine1()),
            "sl2" => Ok(Self::sl2()),
            "gl2" => Ok(Self::gl2()),
            _ => {
                if let Some(d) = name.strip_prefix("abelian") {
                    if let Ok(d) = d.parse::<usize>() {
                        if (1..=8).contains(&d) {
                            return Ok(Self::abelian(d));
                        }
                    }
                }
                Err(LieAlgebraError::UnknownAlgebra(name.to_string()))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// JSON file format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct BracketEntry {
    i: usize,
    j: usize,
    coeffs: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct LieAlgebraFile {
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis: Option<Vec<String>>,
    brackets: Vec<BracketEntry>,
}

impl LieAlgebra {
    /// Loads an algebra from the JSON contract:
    /// `{ "dim": d, "basis": [..], "brackets": [ {"i":..,"j":..,"coeffs":{"k":"c"}} ] }`
    /// with 0-based indices and rational coefficient strings. Unlisted pairs
    /// have zero bracket; listing the same unordered pair twice is rejected.
    pub fn from_json_str(s: &str) -> Result<LieAlgebra, LieAlgebraError> {
        let file: LieAlgebraFile =
            serde_json::from_str(s).map_err(|e| LieAlgebraError::ParseError(e.to_string()))?;
        if let Some(basis) = &file.basis {
            if basis.len() != file.dim {
                return Err(LieAlgebraError::ParseError(format!(
                    "basis has {} labels but dim = {}",
                    basis.len(),
                    file.dim
                )));
            }
        }
        let mut entries = Vec::new();
        for e in &file.brackets {
            let mut coeffs = Vec::new();
            for (k, c) in &e.coeffs {
                let k: usize = k
                    .parse()
                    .map_err(|_| LieAlgebraError::ParseError(format!("bad index `{k}`")))?;
                let c = parse_rat(c).map_err(LieAlgebraError::ParseError)?;
                coeffs.push((k, c));
            }
            entries.push((e.i, e.j, coeffs));
        }
        let mut algebra = LieAlgebra::new(file.dim, &entries)?;
        algebra.basis_labels = file.basis;
        Ok(algebra)
    }

    pub fn to_json_string(&self) -> String {
        let brackets = self
            .brackets
            .iter()
            .map(|((i, j), row)| BracketEntry {
                i: *i,
                j: *j,
                coeffs: row
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| (k.to_string(), c.to_string()))
                    .collect(),
            })
            .collect();
        let file = LieAlgebraFile {
            dim: self.dim,
            basis: self.basis_labels.clone(),
            brackets,
        };
        serde_json::to_string_pretty(&file).unwrap()
    }
}

// ---------------------------------------------------------------------------
// Analytic series of ad
// ---------------------------------------------------------------------------

/// Univariate rational power series as a coefficient vector (internal).
fn useries_mul(a: &[Rat], b: &[Rat], n: usize) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); n + 1];
    for (i, ai) in a.iter().enumerate().take(n + 1) {
        for (j, bj) in b.iter().enumerate() {
            if i + j > n {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// log of a univariate series with constant term 1.
fn useries_log(a: &[Rat], n: usize) -> Vec<Rat> {
    debug_assert!(a[0].is_one());
    let mut u = a.to_vec();
    u[0] = Rat::zero();
    let mut acc = vec![Rat::zero(); n + 1];
    let mut power = vec![Rat::zero(); n + 1];
    power[0] = Rat::one();
    for k in 1..=n {
        power = useries_mul(&power, &u, n);
        if power.iter().all(Rat::is_zero) {
            break;
        }
        let sign = if k % 2 == 0 { -Rat::one() } else { Rat::one() };
        let c = sign / crate::rat::rat(k as i64);
        for (acc_i, p_i) in acc.iter_mut().zip(&power) {
            *acc_i += p_i * &c;
        }
    }
    acc
}

/// Reciprocal of a univariate series with constant term 1.
fn useries_recip(a: &[Rat], n: usize) -> Vec<Rat> {
    debug_assert!(a[0].is_one());
    let mut u = a.to_vec();
    u[0] = Rat::zero();
    let mut acc = vec![Rat::zero(); n + 1];
    acc[0] = Rat::one();
    let mut power = acc.clone();
    for k in 1..=n {
        power = useries_mul(&power, &u, n);
        if power.iter().all(Rat::is_zero) {
            break;
        }
        let sign = if k % 2 == 0 { Rat::one() } else { -Rat::one() };
        for (acc_i, p_i) in acc.iter_mut().zip(&power) {
            *acc_i += p_i * &sign;
        }
    }
    acc
}

/// `(1 - e^{-s})/s`: coefficients `(-1)^k / (k+1)!`.
fn gamma_series(n: usize) -> Vec<Rat> {
    (0..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { Rat::one() } else { -Rat::one() };
            sign / factorial(k + 1)
        })
        .collect()
}

/// `s/(e^s - 1)`: reciprocal of `(e^s - 1)/s`, i.e. Bernoulli numbers over k!.
fn todd_series(n: usize) -> Vec<Rat> {
    let expm1_over_s: Vec<Rat> = (0..=n).map(|k| Rat::one() / factorial(k + 1)).collect();
    useries_recip(&expm1_over_s, n)
}

/// Matrix kernel selecting the analytic function of `ad x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdKernel {
    /// The Duflo series `sqrt(det((1 - e^{-ad x})/ad x))`; always reported in
    /// det-sqrt form regardless of the requested mode.
    SqrtJ,
    /// `ad/(e^{ad} - 1)`.
    Todd,
    /// `(1 - e^{-ad})/ad`.
    Gamma,
}

/// How the scalar is extracted from the matrix series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMode {
    /// `tr(kernel(ad x))`.
    Trace,
    /// `exp((1/2) tr log kernel(ad x))`.
    DetSqrt,
}

/// Truncated scalar series in the coordinates of a symbolic argument of the
/// algebra, with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdSeriesScalar {
    pub poly: SymPoly,
    pub truncation_degree: u32,
}

impl AdSeriesScalar {
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.poly.eval_f64(point)
    }
}

/// Traces of powers of the symbolic adjoint matrix: `tr((ad x)^m)` for
/// `m = 0..=degree`, with `x` the coordinate vector at variables
/// `offset..offset+dim`.
fn ad_power_traces(g: &LieAlgebra, offset: usize, degree: u32) -> Vec<SymPoly> {
    let d = g.dim();
    let ad = g.ad_matrix_symbolic(offset);
    let mut traces = vec![SymPoly::constant(crate::rat::rat(d as i64))];
    let mut power: Vec<Vec<SymPoly>> = (0..d)
        .map(|k| (0..d).map(|j| if k == j { SymPoly::one() } else { SymPoly::zero() }).collect())
        .collect();
    for _ in 1..=degree {
        let mut next = vec![vec![SymPoly::zero(); d]; d];
        for (k, next_row) in next.iter_mut().enumerate() {
            for j in 0..d {
                let mut acc = SymPoly::zero();
                for (m, ad_row) in ad.iter().enumerate() {
                    acc = &acc + &(&power[k][m] * &ad_row[j]);
                }
                next_row[j] = acc.truncate_total(degree);
            }
        }
        power = next;
        let mut tr = SymPoly::zero();
        for (k, row) in power.iter().enumerate() {
            tr = &tr + &row[k];
        }
        traces.push(tr);
    }
    traces
}

/// Scalar analytic series of `ad x` with `x` symbolic at variables `0..dim`.
///
/// For `Trace` mode the result is `tr(kernel(ad x))`; for `DetSqrt` it is
/// `exp((1/2) tr log kernel(ad x))`, computed through the univariate log of
/// the kernel so that no symbolic determinant is ever formed.
pub fn ad_analytic_series(
    g: &LieAlgebra,
    kernel: AdKernel,
    mode: TraceMode,
    degree: u32,
) -> AdSeriesScalar {
    let n = degree as usize;
    let (coeffs, mode) = match kernel {
        AdKernel::SqrtJ => (gamma_series(n), TraceMode::DetSqrt),
        AdKernel::Todd => (todd_series(n), mode),
        AdKernel::Gamma => (gamma_series(n), mode),
    };
    let traces = ad_power_traces(g, 0, degree);
    let poly = match mode {
        TraceMode::Trace => {
            let mut acc = SymPoly::zero();
            for (m, c) in coeffs.iter().enumerate() {
                acc = &acc + &traces[m].scale(c);
            }
            acc
        }
        TraceMode::DetSqrt => {
            let logk = useries_log(&coeffs, n);
            let mut half_tr_log = SymPoly::zero();
            for (m, c) in logk.iter().enumerate().skip(1) {
                half_tr_log = &half_tr_log + &traces[m].scale(&(c / crate::rat::rat(2)));
            }
            half_tr_log.exp_truncated(degree)
        }
    };
    AdSeriesScalar { poly: poly.truncate_total(degree), truncation_degree: degree }
}

/// `tr(kernel(M))` for a matrix of polynomials whose entries all have zero
/// constant term, truncated at total degree `degree`. Used with `M = ad Z`
/// for a polynomial vector `Z`.
pub fn trace_of_matrix_kernel(
    g: &LieAlgebra,
    kernel: AdKernel,
    matrix: &[Vec<SymPoly>],
    degree: u32,
) -> SymPoly {
    let n = degree as usize;
    let coeffs = match kernel {
        AdKernel::SqrtJ | AdKernel::Gamma => gamma_series(n),
        AdKernel::Todd => todd_series(n),
    };
    let d = g.dim();
    let mut acc = SymPoly::constant(&coeffs[0] * crate::rat::rat(d as i64));
    let mut power: Vec<Vec<SymPoly>> = (0..d)
        .map(|k| (0..d).map(|j| if k == j { SymPoly::one() } else { SymPoly::zero() }).collect())
        .collect();
    for (k, c) in coeffs.iter().enumerate().take(n + 1).skip(1) {
        let _ = k;
        let mut next = vec![vec![SymPoly::zero(); d]; d];
        for (k2, next_row) in next.iter_mut().enumerate() {
            for j in 0..d {
                let mut e = SymPoly::zero();
                for (m, mrow) in matrix.iter().enumerate() {
                    e = &e + &(&power[k2][m] * &mrow[j]);
                }
                next_row[j] = e.truncate_total(degree);
            }
        }
        power = next;
        if power.iter().all(|row| row.iter().all(SymPoly::is_zero)) {
            break;
        }
        let mut tr = SymPoly::zero();
        for (k2, row) in power.iter().enumerate() {
            tr = &tr + &row[k2];
        }
        acc = &acc + &tr.scale(c);
    }
    acc.truncate_total(degree)
}
