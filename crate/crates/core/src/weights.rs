//! Monte-Carlo estimation of configuration-space graph weights.
//!
//! The weight of a graph with `n` aerial vertices and 2n edges is the
//! integral over the gauge-fixed configuration space (ground points pinned to
//! 0 and 1, aerial points free in the upper half-plane) of the wedge product
//! of the edge angle forms. The wedge is evaluated as the determinant of the
//! Jacobian of the angle map, rows in edge order (source vertex, then slot),
//! columns in coordinate order `(x_1, y_1, ..., x_n, y_n)`.
//!
//! Sampling uses a fixed smooth chart from the unit square per aerial point
//! with its area factor folded into the integrand, so estimates carry no
//! importance-sampling bookkeeping. Workers draw from counter-based RNG
//! streams derived from `(seed, worker index)` and partial sums are combined
//! in worker order, making every estimate bit-reproducible for a fixed
//! `(seed, samples, workers)` triple.

use crate::graphs::{enumerate_graphs, AdmissibleGraph, Target};
use crate::liealg::LieAlgebra;
use crate::poly::{Monomial, SymPoly};
use crate::rat::{factorial, to_f64, Rat};
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeightError {
    #[error("propagator angle is undefined at coincident points")]
    CoincidentPoints,
    #[error("graph has {edges} edges but a top form needs {expected}")]
    DegenerateForm { edges: usize, expected: usize },
}

/// Angle function whose differential is the propagator form:
/// `(1/2pi) arg((z1 - z2)/(conj(z1) - z2))` with `arg` valued in `[0, 2pi)`.
/// Vanishes as the first argument approaches the real axis.
pub fn propagator_angle(z1: Complex64, z2: Complex64) -> Result<f64, WeightError> {
    if z1 == z2 {
        return Err(WeightError::CoincidentPoints);
    }
    let ratio = (z1 - z2) / (z1.conj() - z2);
    let mut arg = ratio.im.atan2(ratio.re);
    if arg < 0.0 {
        arg += 2.0 * PI;
    }
    Ok(arg / (2.0 * PI))
}

/// Monte-Carlo estimate of a graph weight.
#[derive(Clone, Debug, Serialize)]
pub struct WeightEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub graph: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Free(usize),
    Fixed(usize),
}


#[derive(Clone, Copy, Debug)]
struct EdgeSpec {
    from: Node,
    to: Node,
}

/// Gradient entries of the angle function at both endpoints:
/// `(d/dx1, d/dy1, d/dx2, d/dy2)`.
fn propagator_partials(z1: Complex64, z2: Complex64) -> (f64, f64, f64, f64) {
    let u = z1 - z2;
    let v = z1.conj() - z2;
    let iu = u.inv();
    let iv = v.inv();
    let c = 1.0 / (2.0 * PI);
    (
        c * (iu - iv).im,
        c * (iu + iv).re,
        c * (iv - iu).im,
        c * (iv - iu).re,
    )
}

/// In-place LU determinant with partial pivoting.
fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut out = 1.0;
    for c in 0..n {
        let pivot = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[pivot][c] == 0.0 {
            return 0.0;
        }
        if pivot != c {
            m.swap(pivot, c);
            out = -out;
        }
        out *= m[c][c];
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    out
}

/// Chart from the open unit square onto the upper half-plane, with extra
/// sampling density near the real axis where the ground points sit. Returns
/// the point and the area factor of the chart.
fn chart(s: f64, t: f64) -> (Complex64, f64) {
    let x = (PI * (s - 0.5)).tan();
    let y = t * t / (1.0 - t);
    let wx = PI * (1.0 + x * x);
    let wy = t * (2.0 - t) / ((1.0 - t) * (1.0 - t));
    (Complex64::new(x, y), wx * wy)
}

struct Integrand<'a> {
    free_count: usize,
    fixed: &'a [Complex64],
    edges: &'a [EdgeSpec],
    /// Integrate |det| instead of det: the liveness probe, strictly positive
    /// for any integrand that is not identically zero.
    absolute: bool,
}

impl Integrand<'_> {
    fn eval(&self, z: &[Complex64], area: f64) -> f64 {
        let cols = 2 * self.free_count;
        let mut rows = Vec::with_capacity(self.edges.len());
        for e in self.edges {
            let zf = match e.from {
                Node::Free(i) => z[i],
                Node::Fixed(i) => self.fixed[i],
            };
            let zt = match e.to {
                Node::Free(i) => z[i],
                Node::Fixed(i) => self.fixed[i],
            };
            if zf == zt {
                return 0.0;
            }
            let (dx1, dy1, dx2, dy2) = propagator_partials(zf, zt);
            let mut row = vec![0.0; cols];
            if let Node::Free(i) = e.from {
                row[2 * i] += dx1;
                row[2 * i + 1] += dy1;
            }
            if let Node::Free(i) = e.to {
                row[2 * i] += dx2;
                row[2 * i + 1] += dy2;
            }
            rows.push(row);
        }
        let d = det(rows);
        if !d.is_finite() {
            return 0.0;
        }
        if self.absolute {
            d.abs() * area
        } else {
            d * area
        }
    }

    /// Sequential sub-sum for one worker stream.
    fn run_worker(&self, seed: u64, stream: u64, count: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut z = vec![Complex64::new(0.0, 0.0); self.free_count];
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..count {
            let mut area = 1.0;
            for p in z.iter_mut() {
                let s: f64 = rng.gen();
                let t: f64 = rng.gen();
                let (point, w) = chart(s, t);
                *p = point;
                area *= w;
            }
            let v = self.eval(&z, area);
            sum += v;
            sumsq += v * v;
        }
        (sum, sumsq)
    }

    fn integrate(&self, samples: u64, seed: u64, workers: usize, stream_base: u64) -> (f64, f64) {
        let workers = workers.max(1) as u64;
        let base = samples / workers;
        let rem = samples % workers;
        let chunks: Vec<(u64, u64)> = (0..workers)
            .map(|w| (stream_base + w, base + u64::from(w < rem)))
            .collect();
        let partials: Vec<(f64, f64)> = chunks
            .par_iter()
            .map(|&(stream, count)| self.run_worker(seed, stream, count))
            .collect();
        // deterministic reduction in worker order
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for (s, ss) in partials {
            sum += s;
            sumsq += ss;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}

fn graph_edges(graph: &AdmissibleGraph) -> Vec<EdgeSpec> {
    graph
        .edges()
        .into_iter()
        .map(|(src, t)| EdgeSpec {
            from: Node::Free(src),
            to: match t {
                Target::Aerial(a) => Node::Free(a),
                Target::Ground(gr) => Node::Fixed(gr),
            },
        })
        .collect()
}

/// Monte-Carlo estimate of the weight of a graph in the two-ground-vertex
/// family, with the ground points gauge-fixed to 0 and 1. Requires the form
/// to be top-dimensional: `|E| = 2n`.
pub fn mc_weight(
    graph: &AdmissibleGraph,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<WeightEstimate, WeightError> {
    mc_weight_streamed(graph, samples, seed, workers, 0)
}

/// [`mc_weight`] with an explicit RNG stream base, used to give every graph
/// in an assembled sum its own deterministic stream family.
pub fn mc_weight_streamed(
    graph: &AdmissibleGraph,
    samples: u64,
    seed: u64,
    workers: usize,
    stream_base: u64,
) -> Result<WeightEstimate, WeightError> {
    let n = graph.aerial_count();
    if graph.edge_count() != 2 * n {
        return Err(WeightError::DegenerateForm {
            edges: graph.edge_count(),
            expected: 2 * n,
        });
    }
    if n == 0 {
        return Ok(WeightEstimate {
            mean: 1.0,
            stderr: 0.0,
            samples,
            seed,
            graph: graph.to_string(),
        });
    }
    let fixed = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let edges = graph_edges(graph);
    let integrand = Integrand { free_count: n, fixed: &fixed, edges: &edges, absolute: false };
    let (mean, stderr) = integrand.integrate(samples, seed, workers, stream_base);
    Ok(WeightEstimate { mean, stderr, samples, seed, graph: graph.to_string() })
}

fn wheel_edges(spokes: usize) -> Vec<EdgeSpec> {
    let mut edges = Vec::new();
    for v in 0..spokes {
        edges.push(EdgeSpec { from: Node::Free(v), to: Node::Free((v + 1) % spokes) });
        edges.push(EdgeSpec { from: Node::Free(v), to: Node::Fixed(0) });
    }
    edges
}

/// Weight of the wheel with `k >= 2` cycle vertices and all spokes pointing
/// inward to a point fixed at `i`. The exact value is zero; the estimate is
/// expected to vanish within its error band.
pub fn wheel_weight_check(spokes: usize, samples: u64, seed: u64, workers: usize) -> WeightEstimate {
    assert!(spokes >= 2, "a wheel needs at least 2 spokes");
    let fixed = [Complex64::new(0.0, 1.0)];
    let edges = wheel_edges(spokes);
    let integrand = Integrand { free_count: spokes, fixed: &fixed, edges: &edges, absolute: false };
    let (mean, stderr) = integrand.integrate(samples, seed, workers, 0);
    WeightEstimate {
        mean,
        stderr,
        samples,
        seed,
        graph: format!("wheel k={spokes} spokes->i"),
    }
}

/// Liveness probe for the wheel integrator: integrates the absolute value of
/// the same integrand, which is strictly positive unless the integrand is
/// identically zero. A dead integrator returns zero here; a healthy one a
/// clearly positive estimate.
pub fn wheel_weight_probe(spokes: usize, samples: u64, seed: u64, workers: usize) -> WeightEstimate {
    assert!(spokes >= 2);
    let fixed = [Complex64::new(0.0, 1.0)];
    let edges = wheel_edges(spokes);
    let integrand = Integrand { free_count: spokes, fixed: &fixed, edges: &edges, absolute: true };
    let (mean, stderr) = integrand.integrate(samples, seed, workers, 0);
    WeightEstimate {
        mean,
        stderr,
        samples,
        seed,
        graph: format!("wheel-probe k={spokes}"),
    }
}

/// One coefficient of an assembled graph-expansion product.
#[derive(Clone, Debug, Serialize)]
pub struct FloatCoeff {
    pub mean: f64,
    pub stderr: f64,
}

/// Star product assembled from the graph expansion: for each order `n <= order`
/// the sum over admissible graphs of (estimated weight) x (bidifferential
/// operator), normalized by `n! 2^n` so that unordered geometric graphs are
/// counted once. Returns float coefficients with propagated standard errors.
pub fn graph_star(
    g: &LieAlgebra,
    f1: &SymPoly,
    f2: &SymPoly,
    order: usize,
    samples: u64,
    seed: u64,
    workers: usize,
) -> BTreeMap<Monomial, FloatCoeff> {
    assert!(order <= 3, "graph expansion capped at order 3");
    let mut acc: BTreeMap<Monomial, (f64, f64)> = BTreeMap::new(); // mean, variance
    let mut add = |m: &Monomial, mean: f64, var: f64| {
        let entry = acc.entry(m.clone()).or_insert((0.0, 0.0));
        entry.0 += mean;
        entry.1 += var;
    };

    // order 0: plain product, exact
    for (m, c) in (f1 * f2).terms() {
        add(m, to_f64(c), 0.0);
    }

    let mut graph_index: u64 = 1;
    for n in 1..=order {
        let norm = 1.0 / (to_f64(&factorial(n)) * 2f64.powi(n as i32));
        for graph in enumerate_graphs(n, 2, 2, Some(1)) {
            let operator = crate::graphs::bidiff_apply(g, &graph, f1, f2);
            graph_index += 1;
            if operator.is_zero() {
                continue;
            }
            let est = mc_weight_streamed(&graph, samples, seed, workers, graph_index << 16)
                .expect("enumerated graphs carry top forms");
            for (m, c) in operator.terms() {
                let c = to_f64(c) * norm;
                add(m, est.mean * c, (est.stderr * c) * (est.stderr * c));
            }
        }
    }

    acc.into_iter()
        .map(|(m, (mean, var))| (m, FloatCoeff { mean, stderr: var.sqrt() }))
        .filter(|(_, c)| c.mean.abs() > 1e-300 || c.stderr > 0.0)
        .collect()
}

/// Exact star product coefficients for comparison tables.
pub fn envelope_reference(
    g: &LieAlgebra,
    f1: &SymPoly,
    f2: &SymPoly,
) -> BTreeMap<Monomial, Rat> {
    crate::envelope::star(g, f1, f2)
        .terms()
        .map(|(m, c)| (m.clone(), c.clone()))
        .collect()
}

/// Convenience for tests: the one-aerial-vertex graph with ordered edges to
/// the two ground points.
pub fn first_order_graph() -> AdmissibleGraph {
    AdmissibleGraph::new(1, 2, vec![vec![Target::Ground(0), Target::Ground(1)]]).unwrap()
}
