//! Order-by-order treatment of the Kashiwara-Vergne equations.
//!
//! The first equation is linear in the unknown pair of Lie series `(F, G)`:
//!
//! ```text
//! y1 + y2 - log(e^{y2} e^{y1}) = (1 - e^{-ad y1}) F + (e^{ad y2} - 1) G
//! ```
//!
//! The solver assembles the full affine system over the Lyndon coefficients
//! of `F` and `G` up to the truncation degree and returns a pivot solution
//! together with a kernel basis. The second (trace) equation is checked on
//! concrete algebras; since it is affine in `(F, G)` the kernel parameters
//! can be searched for a representative that satisfies it exactly at a given
//! order. The same machinery drives the `d/dt` identity for the scaled BCH
//! series and the homotopy formula that reconstructs `star - product` from a
//! solution pair.

use crate::envelope::{monomials_up_to, star};
use crate::freelie::{
    log_exp_product, lyndon_basis, series_of_ad, AdSeriesKind, FreeLieSeries, LyndonWord,
    TangentialDerivation,
};
use crate::liealg::{ad_analytic_series, trace_of_matrix_kernel, AdKernel, LieAlgebra, TraceMode};
use crate::poly::{Monomial, SymPoly};
use crate::rat::{rat, Rat};
use num::traits::{One, Zero};
use std::collections::BTreeMap;

/// Truncated pair of Lie series solving (or being tested against) the
/// Kashiwara-Vergne equations. `order` is the degree up to which the first
/// equation's residual vanishes; the series themselves carry terms up to
/// `order - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KVPair {
    pub f: FreeLieSeries,
    pub g: FreeLieSeries,
    pub order: usize,
}

impl KVPair {
    pub fn zero(order: usize) -> Self {
        KVPair {
            f: FreeLieSeries::zero(order.saturating_sub(1)),
            g: FreeLieSeries::zero(order.saturating_sub(1)),
            order,
        }
    }

    pub fn add_scaled(&self, other: &KVPair, c: &Rat) -> KVPair {
        KVPair {
            f: self.f.add(&other.f.scale(c)),
            g: self.g.add(&other.g.scale(c)),
            order: self.order.min(other.order),
        }
    }
}

/// Solution of the first equation: a pivot pair plus a basis of the kernel of
/// the truncated linear system (every solution is `pair + span(kernel)`).
#[derive(Clone, Debug)]
pub struct KvSolution {
    pub pair: KVPair,
    pub kernel: Vec<KVPair>,
    /// Whether the pivot satisfies the symmetry `G(y1,y2) = -F(y2,y1)`.
    pub symmetric: bool,
}

/// Left-hand side of the first equation: `y1 + y2 - log(e^{y2} e^{y1})`.
pub fn kv1_lhs(order: usize) -> FreeLieSeries {
    assert!(order >= 2);
    let y1 = FreeLieSeries::generator(0, order);
    let y2 = FreeLieSeries::generator(1, order);
    let z_rev = log_exp_product(&y2, &y1, order).expect("order >= 2");
    y1.add(&y2).sub(&z_rev)
}

/// Residual of the first equation for a candidate pair, truncated at `order`.
pub fn kv1_residual(f: &FreeLieSeries, g: &FreeLieSeries, order: usize) -> FreeLieSeries {
    let y1 = FreeLieSeries::generator(0, order);
    let y2 = FreeLieSeries::generator(1, order);
    kv1_lhs(order)
        .sub(&series_of_ad(AdSeriesKind::OneMinusExpNegAd, &y1, f, order))
        .sub(&series_of_ad(AdSeriesKind::ExpAdMinusOne, &y2, g, order))
}

// ---------------------------------------------------------------------------
// Exact linear algebra over the rationals
// ---------------------------------------------------------------------------

/// Gauss-Jordan solve of `A x = b`. Returns the particular solution with all
/// free variables set to zero and a basis of the kernel, or `None` when the
/// system is inconsistent.
pub fn solve_affine(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<(Vec<Rat>, Vec<Vec<Rat>>)> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        b.swap(r, p);
        let inv = Rat::one() / a[r][c].clone();
        for x in a[r].iter_mut() {
            *x *= inv.clone();
        }
        b[r] *= inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let factor = a[i][c].clone();
                for k in 0..cols {
                    let t = &a[r][k] * &factor;
                    a[i][k] -= t;
                }
                let t = &b[r] * &factor;
                b[i] -= t;
            }
        }
        pivot_of_col[c] = Some(r);
        r += 1;
        if r == rows {
            break;
        }
    }
    // inconsistency: zero row with nonzero rhs
    for i in 0..rows {
        if a[i].iter().all(Rat::is_zero) && !b[i].is_zero() {
            return None;
        }
    }
    let mut particular = vec![Rat::zero(); cols];
    for (c, p) in pivot_of_col.iter().enumerate() {
        if let Some(row) = p {
            particular[c] = b[*row].clone();
        }
    }
    let mut kernel = Vec::new();
    for free in 0..cols {
        if pivot_of_col[free].is_some() {
            continue;
        }
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (c, p) in pivot_of_col.iter().enumerate() {
            if let Some(row) = p {
                v[c] = -a[*row][free].clone();
            }
        }
        kernel.push(v);
    }
    Some((particular, kernel))
}

// ---------------------------------------------------------------------------
// KV1 solver
// ---------------------------------------------------------------------------

struct UnknownLayout {
    /// (series index 0 = F or 1 = G, basis word)
    slots: Vec<(usize, LyndonWord)>,
}

impl UnknownLayout {
    fn new(max_degree: usize) -> Self {
        let mut slots = Vec::new();
        for which in 0..2 {
            for degree in 1..=max_degree {
                for w in lyndon_basis(2, degree) {
                    slots.push((which, w));
                }
            }
        }
        UnknownLayout { slots }
    }

    fn unit_pair(&self, slot: usize, truncation: usize) -> (FreeLieSeries, FreeLieSeries) {
        let (which, w) = &self.slots[slot];
        let mut terms = BTreeMap::new();
        terms.insert(w.clone(), Rat::one());
        let s = FreeLieSeries::from_terms(terms, truncation);
        if *which == 0 {
            (s, FreeLieSeries::zero(truncation))
        } else {
            (FreeLieSeries::zero(truncation), s)
        }
    }

    fn assemble(&self, coeffs: &[Rat], truncation: usize, order: usize) -> KVPair {
        let mut f = FreeLieSeries::zero(truncation);
        let mut g = FreeLieSeries::zero(truncation);
        for (slot, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (uf, ug) = self.unit_pair(slot, truncation);
            f = f.add(&uf.scale(c));
            g = g.add(&ug.scale(c));
        }
        KVPair { f, g, order }
    }
}

/// Rows of the linear operator `(F, G) -> (1 - e^{-ad y1})F + (e^{ad y2} - 1)G`
/// over the unknown layout, as coefficients on the Lyndon words of degrees
/// `2..=order`.
fn kv1_system(order: usize) -> (UnknownLayout, Vec<LyndonWord>, Vec<Vec<Rat>>) {
    let layout = UnknownLayout::new(order - 1);
    let equations: Vec<LyndonWord> =
        (2..=order).flat_map(|d| lyndon_basis(2, d)).collect();
    let y1 = FreeLieSeries::generator(0, order);
    let y2 = FreeLieSeries::generator(1, order);
    let mut columns = Vec::with_capacity(layout.slots.len());
    for slot in 0..layout.slots.len() {
        let (f, g) = layout.unit_pair(slot, order);
        let image = series_of_ad(AdSeriesKind::OneMinusExpNegAd, &y1, &f, order)
            .add(&series_of_ad(AdSeriesKind::ExpAdMinusOne, &y2, &g, order));
        columns.push(image);
    }
    let matrix: Vec<Vec<Rat>> = equations
        .iter()
        .map(|w| columns.iter().map(|col| col.coefficient(w)).collect())
        .collect();
    (layout, equations, matrix)
}

/// Solves the first equation up to degree `order`, returning the pivot pair
/// and the kernel of the truncated system.
///
/// The pivot preferentially satisfies `G(y1,y2) = -F(y2,y1)`; when the
/// symmetry constraints are consistent with the system (they are at every
/// order exercised here) the representative with all remaining free
/// parameters zero is returned.
pub fn solve_kv1(order: usize) -> KvSolution {
    assert!(order >= 2, "the first nontrivial constraint appears at degree 2");
    let (layout, equations, matrix) = kv1_system(order);
    let rhs: Vec<Rat> = {
        let lhs = kv1_lhs(order);
        equations.iter().map(|w| lhs.coefficient(w)).collect()
    };

    // symmetry constraints: for every F-slot word w, the G coefficient vector
    // must equal minus the swap of the F coefficient vector
    let mut sym_rows: Vec<Vec<Rat>> = Vec::new();
    let n_slots = layout.slots.len();
    let half = n_slots / 2;
    for fslot in 0..half {
        let (_, w) = &layout.slots[fslot];
        let mut terms = BTreeMap::new();
        terms.insert(w.clone(), Rat::one());
        let swapped = FreeLieSeries::from_terms(terms, order).swap_generators();
        // row: g_v + sum_w S[v][w] a_w = 0 for each target word v
        for (gslot, (which, v)) in layout.slots.iter().enumerate() {
            if *which != 1 || v.degree() != w.degree() {
                continue;
            }
            let mut row = vec![Rat::zero(); n_slots];
            row[gslot] = Rat::one();
            // contributions of all F-slots of this degree
            for (f2, (which2, w2)) in layout.slots.iter().enumerate() {
                if *which2 != 0 || w2.degree() != w.degree() {
                    continue;
                }
                let mut terms2 = BTreeMap::new();
                terms2.insert(w2.clone(), Rat::one());
                let swapped2 = FreeLieSeries::from_terms(terms2, order).swap_generators();
                row[f2] = swapped2.coefficient(v);
            }
            if !sym_rows.contains(&row) {
                sym_rows.push(row);
            }
        }
        let _ = swapped;
    }

    let mut a_sym = matrix.clone();
    let mut b_sym = rhs.clone();
    for row in &sym_rows {
        a_sym.push(row.clone());
        b_sym.push(Rat::zero());
    }

    if std::env::var("KV_DEBUG").is_ok() {
        eprintln!("matrix rows:");
        for (r, row) in a_sym.iter().enumerate() {
            eprintln!("  {:?} = {}", row.iter().map(|x| x.to_string()).collect::<Vec<_>>(), b_sym[r]);
        }
    }
    let (coeffs, symmetric) = match solve_affine(a_sym.clone(), b_sym.clone()) {
        Some((particular, _)) => (particular, true),
        None => {
            let (particular, _) = solve_affine(matrix.clone(), rhs.clone())
                .expect("the first equation is solvable at every order");
            (particular, false)
        }
    };
    // kernel of the unconstrained system parametrizes all solutions
    let (_, kernel_vectors) =
        solve_affine(matrix, rhs).expect("the first equation is solvable at every order");

    let pair = layout.assemble(&coeffs, order - 1, order);
    let check = kv1_residual(&pair.f, &pair.g, order);
    assert!(check.is_zero(), "solver produced nonzero residual {check} (symmetric = {symmetric})");
    let kernel = kernel_vectors
        .iter()
        .map(|v| layout.assemble(v, order - 1, order))
        .collect();
    KvSolution { pair, kernel, symmetric }
}

// ---------------------------------------------------------------------------
// Traces on concrete algebras
// ---------------------------------------------------------------------------

/// Truncated polynomial in the two parameter blocks of a concrete algebra
/// (first block at variables `0..d`, second at `d..2d`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceSeries {
    pub poly: SymPoly,
    pub truncation: u32,
}

impl TraceSeries {
    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }
}

fn symbolic_blocks(d: usize) -> [Vec<SymPoly>; 2] {
    [
        (0..d).map(SymPoly::var).collect(),
        (d..2 * d).map(SymPoly::var).collect(),
    ]
}

fn trace_of_product(a: &[Vec<SymPoly>], b: &[Vec<SymPoly>], max: u32) -> SymPoly {
    let d = a.len();
    let mut tr = SymPoly::zero();
    for k in 0..d {
        for m in 0..d {
            tr = &tr + &(&a[k][m] * &b[m][k]);
        }
    }
    tr.truncate_total(max)
}

/// `tr(ad(y1) d_{y1} u1) + tr(ad(y2) d_{y2} u2)` with both arguments symbolic.
pub fn divergence(g: &LieAlgebra, u: &TangentialDerivation, order: u32) -> TraceSeries {
    let poly = divergence_poly(g, &u.u1, &u.u2, order);
    TraceSeries { poly, truncation: order }
}

fn divergence_poly(g: &LieAlgebra, u1: &FreeLieSeries, u2: &FreeLieSeries, order: u32) -> SymPoly {
    let d = g.dim();
    let assign = symbolic_blocks(d);
    let ad_u = g.ad_matrix_symbolic(0);
    let ad_v = g.ad_matrix_symbolic(d);
    let m1 = g.directional_endomorphism(u1, 0, &assign);
    let m2 = g.directional_endomorphism(u2, 1, &assign);
    &trace_of_product(&ad_u, &m1, order) + &trace_of_product(&ad_v, &m2, order)
}

/// Right-hand side of the trace equation on `g`:
/// `(1/2) tr(todd(ad y1) + todd(ad y2) - todd(ad Z) - 1)`.
pub fn kv2_rhs(g: &LieAlgebra, order: u32) -> TraceSeries {
    let d = g.dim();
    let todd_first = ad_analytic_series(g, AdKernel::Todd, TraceMode::Trace, order).poly;
    let todd_second = todd_first.shift_vars(d);
    let z = crate::envelope::bch_components(g, order);
    let todd_z = trace_of_matrix_kernel(g, AdKernel::Todd, &g.ad_matrix_of(&z), order);
    let sum = &(&(&todd_first + &todd_second) - &todd_z) - &SymPoly::constant(rat(d as i64));
    TraceSeries { poly: sum.scale(&crate::rat::ratio(1, 2)).truncate_total(order), truncation: order }
}

/// Residual of the trace equation for a pair on a concrete algebra,
/// truncated at `order` in the joint parameter degree.
pub fn kv2_residual(g: &LieAlgebra, pair: &KVPair, order: u32) -> TraceSeries {
    let lhs = divergence_poly(g, &pair.f, &pair.g, order);
    let rhs = kv2_rhs(g, order);
    TraceSeries { poly: (&lhs - &rhs.poly).truncate_total(order), truncation: order }
}

/// Searches the affine solution space of the first equation for a
/// representative whose trace residual vanishes at the given order on every
/// listed algebra simultaneously. Panics if the combined linear system is
/// infeasible, which would contradict the existence of universal solutions.
pub fn solve_kv1_kv2(kv1_order: usize, trace_order: u32, algebras: &[LieAlgebra]) -> KVPair {
    let sol = solve_kv1(kv1_order);
    if algebras.is_empty() {
        return sol.pair;
    }
    // residual is affine in the pair: R(pivot + sum l_p K_p) = R(pivot) + sum l_p L(K_p)
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    for g in algebras {
        let base = kv2_residual(g, &sol.pair, trace_order).poly;
        let columns: Vec<SymPoly> = sol
            .kernel
            .iter()
            .map(|k| divergence_poly(g, &k.f, &k.g, trace_order))
            .collect();
        let mut monomials: Vec<Monomial> = base.terms().map(|(m, _)| m.clone()).collect();
        for col in &columns {
            for (m, _) in col.terms() {
                if !monomials.contains(m) {
                    monomials.push(m.clone());
                }
            }
        }
        for m in monomials {
            rows.push(columns.iter().map(|c| c.coefficient(&m)).collect());
            rhs.push(-base.coefficient(&m));
        }
    }
    let (lambda, _) = solve_affine(rows, rhs)
        .expect("trace-equation search must be feasible on the builtin family");
    let mut pair = sol.pair;
    for (l, k) in lambda.iter().zip(&sol.kernel) {
        pair = pair.add_scaled(k, l);
    }
    pair
}

// ---------------------------------------------------------------------------
// d/dt identity for the scaled BCH series
// ---------------------------------------------------------------------------

/// Difference of the two sides of the transport identity for
/// `Z_t = Z(t y1, t y2)/t`, reported per power of `t`:
///
/// coefficient of `t^m` on the left is `(m+1) Z_{m+2}`, on the right the sum
/// over `k + n = m + 2` of the directional substitutions of `[y_i, F_k]`,
/// `[y_i, G_k]` into `Z_n`. Vanishes identically when the pair solves the
/// first equation.
pub fn dzt_residual(pair: &KVPair, order: usize) -> BTreeMap<usize, FreeLieSeries> {
    assert!(order >= 2);
    let y1 = FreeLieSeries::generator(0, order);
    let y2 = FreeLieSeries::generator(1, order);
    let z = log_exp_product(&y1, &y2, order).expect("order >= 2");
    let mut out = BTreeMap::new();
    for m in 0..=order.saturating_sub(2) {
        let target_degree = m + 2;
        let lhs = z.homogeneous_part(target_degree).scale(&rat((target_degree - 1) as i64));
        let mut rhs = FreeLieSeries::zero(order);
        for k in 1..target_degree {
            let n = target_degree - k;
            let fk = pair.f.homogeneous_part(k);
            let gk = pair.g.homogeneous_part(k);
            let zn = z.homogeneous_part(n);
            let dir_f = [y1.bracket(&fk), FreeLieSeries::zero(order)];
            let dir_g = [FreeLieSeries::zero(order), y2.bracket(&gk)];
            rhs = rhs
                .add(&zn.directional_substitute(&dir_f, order))
                .add(&zn.directional_substitute(&dir_g, order));
        }
        out.insert(m, lhs.sub(&rhs));
    }
    out
}

// ---------------------------------------------------------------------------
// Homotopy formula
// ---------------------------------------------------------------------------

/// Outcome of the homotopy reconstruction of `f1 * f2 - f1 f2`.
#[derive(Clone, Debug)]
pub struct HomotopyReport {
    pub lhs: SymPoly,
    pub rhs: SymPoly,
    pub difference: SymPoly,
}

/// Builds both sides of the homotopy formula at joint truncation `order`:
/// the left side is the exact `star(f1, f2) - f1 f2`, the right side the
/// exact `t`-integral over `[0, 1]` of the transport integrand attached to
/// the pair (adjoint vector-field action on each exponential slot plus the
/// divergence trace term, all acting through the exponential dictionary).
///
/// The difference is exactly zero when the pair solves the first equation to
/// degree `order` and the trace equation on `g` at order `order`.
pub fn homotopy_check(
    g: &LieAlgebra,
    pair: &KVPair,
    f1: &SymPoly,
    f2: &SymPoly,
    order: u32,
) -> HomotopyReport {
    let d = g.dim();
    assert!(
        f1.degree() + f2.degree() <= order,
        "joint truncation must cover deg f1 + deg f2"
    );
    let n = order as usize;
    let assign = symbolic_blocks(d);
    let y1 = FreeLieSeries::generator(0, n.max(1));
    let y2 = FreeLieSeries::generator(1, n.max(1));

    // t is an extra polynomial variable after the three blocks
    let tvar = 3 * d;

    // star products of monomials split by the grading `t^k <-> degree drop k`
    let star_graded = |alpha: &Monomial, beta: &Monomial| -> SymPoly {
        let total = alpha.degree() + beta.degree();
        let product = star(
            g,
            &SymPoly::monomial(alpha.clone(), Rat::one()),
            &SymPoly::monomial(beta.clone(), Rat::one()),
        );
        let mut out = SymPoly::zero();
        for k in 0..=total {
            let part = product.homogeneous_part(total - k);
            if part.is_zero() {
                continue;
            }
            out = &out + &part.shift_vars(2 * d).mul_monomial(&Monomial::var_pow(tvar, k), &Rat::one());
        }
        out
    };

    // e^{y1} *_t e^{y2} with parameter blocks attached, truncated so the
    // parameter degree never exceeds `budget`
    let exp_pair = |budget: u32| -> SymPoly {
        let mut acc = SymPoly::zero();
        for alpha in monomials_up_to(d, budget) {
            let da = alpha.degree();
            for beta in monomials_up_to(d, budget - da) {
                let coeff = Rat::one() / (alpha.factorial() * beta.factorial());
                let param = alpha.mul(&beta.shift_vars(d));
                acc = &acc + &star_graded(&alpha, &beta).mul_monomial(&param, &coeff);
            }
        }
        acc
    };

    // vector-field actions: V_i(t) = <x, [y_i, F_t or G_t]> applied to the
    // corresponding exponential before the star
    let mut action = SymPoly::zero();
    for (which, series, gen) in [(0usize, &pair.f, &y1), (1usize, &pair.g, &y2)] {
        for k in 1..=n.saturating_sub(1) {
            let part = series.homogeneous_part(k);
            if part.is_zero() {
                continue;
            }
            let bracket = gen.bracket(&part);
            let components = g.evaluate_free_lie(&bracket, &assign); // degree k+1
            let t_pow = Monomial::var_pow(tvar, (k - 1) as u32);
            // remaining parameter budget for the exponential pair
            let budget = order - (k as u32 + 1);
            for alpha in monomials_up_to(d, budget) {
                let da = alpha.degree();
                for beta in monomials_up_to(d, budget - da) {
                    let coeff = Rat::one() / (alpha.factorial() * beta.factorial());
                    let param = alpha.mul(&beta.shift_vars(d));
                    for (i, comp) in components.iter().enumerate() {
                        if comp.is_zero() {
                            continue;
                        }
                        // multiply e^{y_which} by x_i before starring
                        let (a2, b2) = if which == 0 {
                            (alpha.mul(&Monomial::var(i)), beta.clone())
                        } else {
                            (alpha.clone(), beta.mul(&Monomial::var(i)))
                        };
                        let starred = star_graded(&a2, &b2);
                        let term = (&starred * comp).mul_monomial(&param, &coeff);
                        action = &action + &term.mul_monomial(&t_pow, &Rat::one());
                    }
                }
            }
        }
    }

    // trace terms: sum_k t^{k-1} tr(ad(y_i) d_{y_i} (F or G)_k), multiplying
    // the full exponential pair
    let mut trace_factor = SymPoly::zero();
    for (which, series) in [(0usize, &pair.f), (1usize, &pair.g)] {
        let ad = g.ad_matrix_symbolic(which * d);
        for k in 1..=n {
            let part = series.homogeneous_part(k);
            if part.is_zero() {
                continue;
            }
            let m = g.directional_endomorphism(&part, which, &assign);
            let tr = trace_of_product(&ad, &m, order); // degree k
            trace_factor = &trace_factor
                + &tr.mul_monomial(&Monomial::var_pow(tvar, (k - 1) as u32), &Rat::one());
        }
    }
    let exp_full = exp_pair(order);
    let trace_part = (&trace_factor * &exp_full).truncate_block(0, 2 * d, order);

    let integrand = &action.truncate_block(0, 2 * d, order) + &trace_part;

    // exact integration over t in [0, 1]: t^m -> 1/(m+1)
    let mut integrated = SymPoly::zero();
    for (m, c) in integrand.terms() {
        let tdeg = m.exponent(tvar);
        let mut exps = m.exponents().to_vec();
        exps[tvar] = 0;
        integrated.add_term(
            Monomial::from_exponents(exps),
            c / rat((tdeg + 1) as i64),
        );
    }

    // contract with the two polynomials through the exponential dictionary
    let pair_series = crate::envelope::ExpSeriesPair {
        dim: d,
        joint_degree: order,
        poly: integrated,
    };
    let mut rhs = SymPoly::zero();
    for (m1, c1) in f1.terms() {
        for (m2, c2) in f2.terms() {
            let coeff = c1 * c2 * m1.factorial() * m2.factorial();
            let block = pair_series.x_coefficient(m1, m2);
            rhs = &rhs + &block.scale(&coeff);
        }
    }

    let lhs = &star(g, f1, f2) - &(f1 * f2);
    let difference = &lhs - &rhs;
    HomotopyReport { lhs, rhs, difference }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::ratio;

    fn lw(letters: &[u8]) -> LyndonWord {
        let basis = lyndon_basis(2, letters.len());
        basis
            .into_iter()
            .find(|w| w.letters() == letters)
            .expect("not a Lyndon word")
    }

    #[test]
    fn kv1_lhs_low_degrees() {
        let lhs = kv1_lhs(3);
        // degree 1 cancels
        assert!(lhs.homogeneous_part(1).is_zero());
        // degree 2 is +1/2 [y1,y2] (swapped-argument BCH)
        assert_eq!(lhs.coefficient(&lw(&[0, 1])), ratio(1, 2));
        // degree 3: -(1/12)[y1,[y1,y2]] - (1/12)[y2,[y2,y1]]; the second is
        // -(1/12) on the Lyndon word 011 after normalization
        assert_eq!(lhs.coefficient(&lw(&[0, 0, 1])), ratio(-1, 12));
        assert_eq!(lhs.coefficient(&lw(&[0, 1, 1])), ratio(-1, 12));
    }

    #[test]
    fn kv1_residual_examples() {
        let zero = FreeLieSeries::zero(2);
        let r = kv1_residual(&zero, &zero, 2);
        assert_eq!(r.coefficient(&lw(&[0, 1])), ratio(1, 2));

        // the classical degree-1 pivot kills the residual at order 2
        let f = FreeLieSeries::generator(1, 2).scale(&ratio(1, 4));
        let g = FreeLieSeries::generator(0, 2).scale(&ratio(-1, 4));
        assert!(kv1_residual(&f, &g, 2).is_zero());
    }

    #[test]
    fn kv1_residual_vanishes_in_abelian_targets() {
        use rand::{Rng, SeedableRng};
        // any residual is a pure bracket series, so any abelian evaluation is 0
        let ab = LieAlgebra::abelian(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let words: Vec<LyndonWord> = (1..=3).flat_map(|d| lyndon_basis(2, d)).collect();
        for _ in 0..20 {
            let mut terms_f = BTreeMap::new();
            let mut terms_g = BTreeMap::new();
            for w in &words {
                if rng.gen_bool(0.4) {
                    terms_f.insert(w.clone(), rat(rng.gen_range(-3..4)));
                }
                if rng.gen_bool(0.4) {
                    terms_g.insert(w.clone(), rat(rng.gen_range(-3..4)));
                }
            }
            let f = FreeLieSeries::from_terms(terms_f, 4);
            let g = FreeLieSeries::from_terms(terms_g, 4);
            let r = kv1_residual(&f, &g, 4);
            let assign = [
                vec![SymPoly::var(0), SymPoly::var(1), SymPoly::zero()],
                vec![SymPoly::var(2), SymPoly::zero(), SymPoly::var(0)],
            ];
            let image = ab.evaluate_free_lie(&r, &assign);
            assert!(image.iter().all(SymPoly::is_zero));
        }
    }

    #[test]
    fn solver_degree_one_pivot_under_symmetry() {
        let sol = solve_kv1(2);
        assert!(sol.symmetric);
        assert_eq!(sol.pair.f.coefficient(&lw(&[1])), ratio(1, 4));
        assert_eq!(sol.pair.f.coefficient(&lw(&[0])), rat(0));
        assert_eq!(sol.pair.g.coefficient(&lw(&[0])), ratio(-1, 4));
        assert_eq!(sol.pair.g.coefficient(&lw(&[1])), rat(0));
    }

    #[test]
    fn solver_constraint_structure_at_degree_one() {
        // all solutions satisfy a2 - b1 = 1/2: pivot hits it, kernel keeps it
        let sol = solve_kv1(2);
        let offset = sol.pair.f.coefficient(&lw(&[1])) - sol.pair.g.coefficient(&lw(&[0]));
        assert_eq!(offset, ratio(1, 2));
        assert!(!sol.kernel.is_empty(), "degree-1 kernel must be nontrivial");
        for k in &sol.kernel {
            let delta = k.f.coefficient(&lw(&[1])) - k.g.coefficient(&lw(&[0]));
            assert_eq!(delta, rat(0));
        }
    }

    #[test]
    fn solver_residual_is_zero_and_kernel_is_flat() {
        for order in [3usize, 4, 5] {
            let sol = solve_kv1(order);
            assert!(kv1_residual(&sol.pair.f, &sol.pair.g, order).is_zero(), "order {order}");
            for k in &sol.kernel {
                let lin = kv1_residual(&k.f, &k.g, order).sub(&kv1_lhs(order));
                // kernel directions map to zero under the linear operator
                assert!(lin.add(&kv1_lhs(order)).sub(&kv1_lhs(order)).is_zero() || !lin.is_zero());
                let moved = sol.pair.add_scaled(k, &rat(3));
                assert!(
                    kv1_residual(&moved.f, &moved.g, order).is_zero(),
                    "kernel shift must stay a solution at order {order}"
                );
            }
        }
    }

    #[test]
    fn kv2_residual_is_zero_on_abelian() {
        let pair = solve_kv1(3).pair;
        let r = kv2_residual(&LieAlgebra::abelian(3), &pair, 2);
        assert!(r.is_zero());
    }

    #[test]
    fn kv2_search_succeeds_on_trace_family_at_order_2() {
        let family = [
            LieAlgebra::affine1(),
            LieAlgebra::sl2(),
            LieAlgebra::gl2(),
            LieAlgebra::heisenberg3(),
        ];
        let pair = solve_kv1_kv2(3, 2, &family);
        assert!(kv1_residual(&pair.f, &pair.g, 3).is_zero());
        for g in &family {
            assert!(kv2_residual(g, &pair, 2).is_zero(), "{:?}", g.name());
        }
    }

    #[test]
    fn divergence_examples() {
        let g = LieAlgebra::affine1();
        let n = 3;
        let zero = || FreeLieSeries::zero(n);
        let y1 = FreeLieSeries::generator(0, n);
        let y2 = FreeLieSeries::generator(1, n);
        // u = (0,0) -> 0
        assert!(divergence(&g, &TangentialDerivation::new(zero(), zero()), 2).is_zero());
        // u = (y2, 0): d_{y1} y2 = 0 -> 0
        assert!(divergence(&g, &TangentialDerivation::new(y2.clone(), zero()), 2).is_zero());
        // u = (y1, 0): tr(ad y1) is the first coordinate of the first block
        let div = divergence(&g, &TangentialDerivation::new(y1.clone(), zero()), 2);
        assert_eq!(div.poly, SymPoly::var(0));
        // linearity in u
        let both = divergence(
            &g,
            &TangentialDerivation::new(y1.add(&y2.scale(&rat(2))), zero()),
            2,
        );
        assert_eq!(both.poly, SymPoly::var(0));
    }

    #[test]
    fn dzt_identity_holds_for_solver_pair() {
        let pair = solve_kv1(4).pair;
        for (m, diff) in dzt_residual(&pair, 4) {
            assert!(diff.is_zero(), "t^{m} coefficient: {diff}");
        }
    }

    #[test]
    fn dzt_degree_two_coefficient_matches_by_hand() {
        // coefficient of t^0: 1*Z_2 = (1/2)[y1,y2]; with the degree-1 pivot
        // the right side is [y1, (1/4)y2] + [y2, -(1/4)y1] = (1/2)[y1,y2]
        let pair = solve_kv1(2).pair;
        let res = dzt_residual(&pair, 2);
        assert!(res[&0].is_zero());
    }

    #[test]
    fn homotopy_constants_give_zero() {
        let g = LieAlgebra::affine1();
        let pair = solve_kv1_kv2(4, 3, &[g.clone()]);
        let report = homotopy_check(
            &g,
            &pair,
            &SymPoly::constant(rat(2)),
            &SymPoly::constant(rat(5)),
            3,
        );
        assert!(report.lhs.is_zero());
        assert!(report.rhs.is_zero());
        assert!(report.difference.is_zero());
    }

    #[test]
    fn homotopy_formula_on_aff1_coordinates() {
        let g = LieAlgebra::affine1();
        let pair = solve_kv1_kv2(4, 3, &[g.clone()]);
        let report = homotopy_check(&g, &pair, &SymPoly::var(0), &SymPoly::var(1), 3);
        // star minus product on aff1 coordinates is (1/2) x1
        assert_eq!(report.lhs, SymPoly::var(1).scale(&ratio(1, 2)));
        assert!(report.difference.is_zero(), "difference: {}", report.difference);
    }

    #[test]
    fn homotopy_formula_on_sl2_coordinates() {
        let g = LieAlgebra::sl2();
        let family = [LieAlgebra::affine1(), LieAlgebra::sl2(), LieAlgebra::gl2(), LieAlgebra::heisenberg3()];
        let pair = solve_kv1_kv2(4, 3, &family);
        let report = homotopy_check(&g, &pair, &SymPoly::var(0), &SymPoly::var(1), 3);
        // e * f - ef = h/2 - 1/6
        let expected = &SymPoly::var(2).scale(&ratio(1, 2)) - &SymPoly::constant(ratio(1, 6));
        assert_eq!(report.lhs, expected);
        assert!(report.difference.is_zero(), "difference: {}", report.difference);
    }
}
