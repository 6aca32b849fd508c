//! Edge affinities from pairwise features.
//!
//! Each edge weight g is a symmetric kernel applied to the feature vectors of
//! the edge's endpoints: a cosine-style inner product of L2-normalized
//! vectors, or an embedded Gaussian `exp(-||x_i - x_j||^2)` with a learnable
//! bias (initialized to -0.5 so negative affinities are reachable).
//!
//! Raw kernel outputs are stabilized per destination vertex: when the
//! absolute sum of a vertex's incoming weights exceeds 1 they are divided by
//! that sum, which bounds the propagation model norm and yields the maximum
//! principle checked in the propagation tests. [`kernel_backward`]
//! differentiates the kernel composed with stabilization analytically.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::feature::{FeatureMatrix, FeatureRole};
use crate::graph::Dag;

/// Which symmetric kernel produces edge weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    InnerProduct,
    EmbeddedGaussian,
}

/// Kernel selection plus its scalar parameters.
#[derive(Clone, Copy, Debug)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// Additive bias of the embedded Gaussian; ignored by the inner product.
    pub bias: f64,
    /// Floor for the L2 norm in inner-product normalization.
    pub epsilon: f64,
}

pub const DEFAULT_BIAS: f64 = -0.5;
pub const DEFAULT_EPSILON: f64 = 1e-12;

impl KernelConfig {
    pub fn inner_product() -> Self {
        Self {
            kind: KernelKind::InnerProduct,
            bias: DEFAULT_BIAS,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn embedded_gaussian() -> Self {
        Self {
            kind: KernelKind::EmbeddedGaussian,
            bias: DEFAULT_BIAS,
            epsilon: DEFAULT_EPSILON,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.bias.is_finite() {
            return Err(Error::InvalidInput(
                "kernel config requires epsilon > 0 and finite bias".into(),
            ));
        }
        Ok(())
    }
}

/// Per-edge affinity values, aligned with a DAG's canonical edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeights {
    values: Vec<f64>,
}

impl EdgeWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite edge weight at index {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn uniform(value: f64, num_edges: usize) -> Self {
        Self {
            values: vec![value; num_edges],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One weight per line, 17 significant digits, aligned with the graph
    /// file's edge order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.values {
            let _ = writeln!(out, "{v:.16e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad weight '{t}' on line {}", i + 1)))?,
            );
        }
        Self::new(values)
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[inline]
fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scalar kernel on one feature pair. Symmetric bitwise: channels are
/// accumulated in ascending index order for both arguments.
pub fn kernel_value(cfg: &KernelConfig, xi: &[f64], xj: &[f64]) -> f64 {
    match cfg.kind {
        KernelKind::InnerProduct => {
            let ni = l2_norm(xi).max(cfg.epsilon);
            let nj = l2_norm(xj).max(cfg.epsilon);
            xi.iter()
                .zip(xj)
                .map(|(a, b)| (a / ni) * (b / nj))
                .sum::<f64>()
        }
        KernelKind::EmbeddedGaussian => {
            let q: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            (-q).exp() + cfg.bias
        }
    }
}

fn check_kernel_inputs(x: &FeatureMatrix, dag: &Dag) -> Result<()> {
    if x.rows() != dag.num_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "features cover {} vertices, dag has {}",
            x.rows(),
            dag.num_vertices()
        )));
    }
    Ok(())
}

/// Cosine similarity of L2-normalized features, `x_bar = x / max(||x||, eps)`.
/// Values lie in [-1, 1] and are independent of edge orientation.
pub fn edge_weights_inner_product(
    x: &FeatureMatrix,
    dag: &Dag,
    cfg: &KernelConfig,
) -> Result<EdgeWeights> {
    cfg.validate()?;
    check_kernel_inputs(x, dag)?;
    if cfg.kind != KernelKind::InnerProduct {
        return Err(Error::InvalidInput("kernel kind is not inner_product".into()));
    }
    let normalized = normalize_rows(x, cfg.epsilon);
    let values = dag
        .edges()
        .iter()
        .map(|&(src, dst)| {
            let a = normalized.row(dst.index());
            let b = normalized.row(src.index());
            a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>()
        })
        .collect();
    EdgeWeights::new(values)
}

/// `exp(-||x_i - x_j||^2) + bias`; range `(bias, 1 + bias]`.
pub fn edge_weights_embedded_gaussian(
    x: &FeatureMatrix,
    dag: &Dag,
    cfg: &KernelConfig,
) -> Result<EdgeWeights> {
    cfg.validate()?;
    check_kernel_inputs(x, dag)?;
    if cfg.kind != KernelKind::EmbeddedGaussian {
        return Err(Error::InvalidInput(
            "kernel kind is not embedded_gaussian".into(),
        ));
    }
    let values = dag
        .edges()
        .iter()
        .map(|&(src, dst)| kernel_value(cfg, x.row(dst.index()), x.row(src.index())))
        .collect();
    EdgeWeights::new(values)
}

/// Dispatches on `cfg.kind`.
pub fn edge_weights(x: &FeatureMatrix, dag: &Dag, cfg: &KernelConfig) -> Result<EdgeWeights> {
    match cfg.kind {
        KernelKind::InnerProduct => edge_weights_inner_product(x, dag, cfg),
        KernelKind::EmbeddedGaussian => edge_weights_embedded_gaussian(x, dag, cfg),
    }
}

/// Per destination vertex: if the absolute sum of incoming weights exceeds 1,
/// divide them by that sum; otherwise leave them untouched. Afterwards
/// `sum |g_ik| <= 1` holds at every vertex.
pub fn stabilize_weights(w: &EdgeWeights, dag: &Dag) -> Result<EdgeWeights> {
    if w.len() != dag.num_edges() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} edges",
            w.len(),
            dag.num_edges()
        )));
    }
    let mut values = w.values().to_vec();
    for v in 0..dag.num_vertices() {
        let range = dag.incoming(crate::graph::VertexId(v as u32));
        let s: f64 = values[range.clone()].iter().map(|g| g.abs()).sum();
        if s > 1.0 {
            for g in &mut values[range] {
                *g /= s;
            }
        }
    }
    EdgeWeights::new(values)
}

/// Reverse-mode gradient of the stabilized kernel weights.
///
/// `grad_g` is the adjoint of the stabilized weights in edge order. Returns
/// the adjoint of the pairwise features and of the Gaussian bias (zero for
/// the inner product). The division branch of stabilization is differentiated
/// through when active; at the `s = 1` kink the unnormalized branch is used.
pub fn kernel_backward(
    x: &FeatureMatrix,
    dag: &Dag,
    cfg: &KernelConfig,
    grad_g: &[f64],
) -> Result<(FeatureMatrix, f64)> {
    cfg.validate()?;
    check_kernel_inputs(x, dag)?;
    if grad_g.len() != dag.num_edges() {
        return Err(Error::ShapeMismatch(format!(
            "{} adjoints for {} edges",
            grad_g.len(),
            dag.num_edges()
        )));
    }

    let raw = match cfg.kind {
        KernelKind::InnerProduct => edge_weights_inner_product(x, dag, cfg)?,
        KernelKind::EmbeddedGaussian => edge_weights_embedded_gaussian(x, dag, cfg)?,
    };
    let raw = raw.values();

    // Backprop through per-vertex stabilization: for s > 1,
    //   g_e = g0_e / s,  s = sum_f |g0_f|
    //   d g_e / d g0_f = [e == f]/s - g0_e * sign(g0_f) / s^2.
    let mut grad_raw = grad_g.to_vec();
    for v in 0..dag.num_vertices() {
        let range = dag.incoming(crate::graph::VertexId(v as u32));
        let s: f64 = raw[range.clone()].iter().map(|g| g.abs()).sum();
        if s > 1.0 {
            let dot: f64 = range.clone().map(|e| grad_g[e] * raw[e]).sum();
            for e in range {
                grad_raw[e] = grad_g[e] / s - dot * sign(raw[e]) / (s * s);
            }
        }
    }

    let cols = x.cols();
    let mut grad_x = FeatureMatrix::zeros(x.rows(), cols).with_role(FeatureRole::Gradient);
    let mut grad_bias = 0.0;

    match cfg.kind {
        KernelKind::EmbeddedGaussian => {
            for (e, &(src, dst)) in dag.edges().iter().enumerate() {
                let g = grad_raw[e];
                grad_bias += g;
                let (i, j) = (dst.index(), src.index());
                let q: f64 = x
                    .row(i)
                    .iter()
                    .zip(x.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let scale = -2.0 * (-q).exp() * g;
                for c in 0..cols {
                    let diff = x.get(i, c) - x.get(j, c);
                    *grad_x
                        .row_mut(i)
                        .get_mut(c)
                        .expect("channel in range") += scale * diff;
                    grad_x.row_mut(j)[c] -= scale * diff;
                }
            }
        }
        KernelKind::InnerProduct => {
            let normalized = normalize_rows(x, cfg.epsilon);
            let norms: Vec<f64> = (0..x.rows()).map(|r| l2_norm(x.row(r))).collect();
            for (e, &(src, dst)) in dag.edges().iter().enumerate() {
                let g = grad_raw[e];
                let (i, j) = (dst.index(), src.index());
                let k: f64 = normalized
                    .row(i)
                    .iter()
                    .zip(normalized.row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                accumulate_inner_product_grad(
                    &mut grad_x,
                    &normalized,
                    &norms,
                    cfg.epsilon,
                    i,
                    j,
                    k,
                    g,
                );
                accumulate_inner_product_grad(
                    &mut grad_x,
                    &normalized,
                    &norms,
                    cfg.epsilon,
                    j,
                    i,
                    k,
                    g,
                );
            }
        }
    }

    Ok((grad_x, grad_bias))
}

/// d(xbar_v . xbar_p)/d x_v, accumulated into grad_x row v.
///
/// Above the epsilon floor the normalization is differentiated
/// (`(xbar_p - k * xbar_v) / ||x_v||`); at or below it the divisor is the
/// constant epsilon.
#[allow(clippy::too_many_arguments)]
fn accumulate_inner_product_grad(
    grad_x: &mut FeatureMatrix,
    normalized: &FeatureMatrix,
    norms: &[f64],
    epsilon: f64,
    v: usize,
    p: usize,
    k: f64,
    adjoint: f64,
) {
    let cols = normalized.cols();
    if norms[v] > epsilon {
        let inv = 1.0 / norms[v];
        for c in 0..cols {
            let d = (normalized.get(p, c) - k * normalized.get(v, c)) * inv;
            grad_x.row_mut(v)[c] += adjoint * d;
        }
    } else {
        let inv = 1.0 / epsilon;
        for c in 0..cols {
            grad_x.row_mut(v)[c] += adjoint * normalized.get(p, c) * inv;
        }
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn normalize_rows(x: &FeatureMatrix, epsilon: f64) -> FeatureMatrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let norm = l2_norm(x.row(r)).max(epsilon);
        for v in out.row_mut(r) {
            *v /= norm;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Dag, Direction, VertexId};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dag(n: usize, edges: &[(u32, u32)]) -> Dag {
        Dag::new(
            n,
            edges.iter().map(|&(s, d)| (VertexId(s), VertexId(d))).collect(),
            Direction::LeftToRight,
        )
        .unwrap()
    }

    #[test]
    fn inner_product_self_similarity_is_one() {
        let cfg = KernelConfig::inner_product();
        let g = kernel_value(&cfg, &[3.0, 4.0], &[3.0, 4.0]);
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_orthogonal_is_zero() {
        let cfg = KernelConfig::inner_product();
        assert_eq!(kernel_value(&cfg, &[1.0, 0.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn inner_product_hand_value() {
        // (1,2) . (2,1) / (sqrt5 * sqrt5) = 4/5
        let cfg = KernelConfig::inner_product();
        let g = kernel_value(&cfg, &[1.0, 2.0], &[2.0, 1.0]);
        assert!((g - 0.8).abs() < 1e-12);
    }

    #[test]
    fn embedded_gaussian_identical_inputs() {
        let cfg = KernelConfig::embedded_gaussian();
        assert_eq!(kernel_value(&cfg, &[0.3, 0.7], &[0.3, 0.7]), 0.5);
    }

    #[test]
    fn embedded_gaussian_ln2_distance_is_zero() {
        let cfg = KernelConfig::embedded_gaussian();
        let d = (2.0f64).ln().sqrt();
        let g = kernel_value(&cfg, &[d], &[0.0]);
        assert!(g.abs() < 1e-12);
    }

    #[test]
    fn embedded_gaussian_far_apart_tends_to_bias() {
        let cfg = KernelConfig::embedded_gaussian();
        let g = kernel_value(&cfg, &[100.0], &[0.0]);
        assert!((g - DEFAULT_BIAS).abs() < 1e-300);
    }

    #[test]
    fn kernel_is_bitwise_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for cfg in [KernelConfig::inner_product(), KernelConfig::embedded_gaussian()] {
            for _ in 0..500 {
                let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
                assert_eq!(
                    kernel_value(&cfg, &a, &b).to_bits(),
                    kernel_value(&cfg, &b, &a).to_bits()
                );
            }
        }
    }

    #[test]
    fn stabilize_divides_when_sum_exceeds_one() {
        let d = dag(3, &[(0, 2), (1, 2)]);
        let w = EdgeWeights::new(vec![0.8, 0.6]).unwrap();
        let s = stabilize_weights(&w, &d).unwrap();
        assert_eq!(s.values(), &[0.8 / 1.4, 0.6 / 1.4]);
    }

    #[test]
    fn stabilize_leaves_small_sums_alone() {
        let d = dag(3, &[(0, 2), (1, 2)]);
        let w = EdgeWeights::new(vec![0.3, -0.2]).unwrap();
        let s = stabilize_weights(&w, &d).unwrap();
        assert_eq!(s.values(), w.values());
    }

    #[test]
    fn stabilize_vacuous_without_incoming_edges() {
        let d = dag(2, &[]);
        let w = EdgeWeights::new(vec![]).unwrap();
        assert!(stabilize_weights(&w, &d).unwrap().is_empty());
    }

    #[test]
    fn stabilized_sums_bounded_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(2..20);
            let mut edges = Vec::new();
            for a in 0..n as u32 {
                for b in (a + 1)..n as u32 {
                    if rng.gen_bool(0.3) {
                        edges.push((a, b));
                    }
                }
            }
            let d = dag(n, &edges);
            let w = EdgeWeights::new((0..d.num_edges()).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .unwrap();
            let s = stabilize_weights(&w, &d).unwrap();
            for v in 0..n {
                let sum: f64 = s.values()[d.incoming(VertexId(v as u32))]
                    .iter()
                    .map(|g| g.abs())
                    .sum();
                assert!(sum <= 1.0 + 1e-12, "vertex {v}: |incoming| sum {sum}");
            }
        }
    }

    #[test]
    fn weights_text_round_trip_is_exact() {
        let w = EdgeWeights::new(vec![0.1, -1.0 / 3.0, 1e-17, 2.5e300]).unwrap();
        let back = EdgeWeights::from_text(&w.to_text()).unwrap();
        assert_eq!(w.values(), back.values());
    }

    #[test]
    fn gaussian_grad_zero_for_identical_endpoints() {
        let d = dag(2, &[(0, 1)]);
        let x = FeatureMatrix::from_vec(2, 2, vec![0.4, 0.6, 0.4, 0.6]).unwrap();
        let cfg = KernelConfig::embedded_gaussian();
        let (gx, gb) = kernel_backward(&x, &d, &cfg, &[1.0]).unwrap();
        assert!(gx.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(gb, 1.0);
    }

    #[test]
    fn bias_gradient_sums_adjoints() {
        // Three far-apart edges: raw weights ~ -0.5, per-vertex sums < 1,
        // so stabilization is inactive and grad_bias is the plain sum.
        let d = dag(4, &[(0, 3), (1, 3), (2, 3)]);
        let x = FeatureMatrix::from_vec(4, 1, vec![0.0, 10.0, 20.0, 30.0]).unwrap();
        let cfg = KernelConfig::embedded_gaussian();
        let raw = edge_weights_embedded_gaussian(&x, &d, &cfg).unwrap();
        let s: f64 = raw.values().iter().map(|g| g.abs()).sum();
        assert!(s < 1.0 + 1e-9, "test assumes inactive stabilization");
        let (_, gb) = kernel_backward(&x, &d, &cfg, &[1.0, 1.0, 1.0]).unwrap();
        assert!((gb - 3.0).abs() < 1e-12);
    }

    /// Central finite differences of the scalarized stabilized weights.
    fn fd_check(cfg: &KernelConfig, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut accepted = 0;
        while accepted < 25 {
            let n = rng.gen_range(3..8);
            let c = rng.gen_range(1..5);
            let mut edges = Vec::new();
            for a in 0..n as u32 {
                for b in (a + 1)..n as u32 {
                    if rng.gen_bool(0.5) {
                        edges.push((a, b));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let d = dag(n, &edges);
            let x = FeatureMatrix::from_fn(n, c, |_, _| rng.gen_range(-1.0..1.0));
            let grad_g: Vec<f64> = (0..d.num_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect();

            // Keep away from the non-smooth points: |incoming| sums near 1
            // and raw weights near 0 (the sign kink inside stabilization).
            let raw = edge_weights(&x, &d, cfg).unwrap();
            let mut near_kink = raw.values().iter().any(|g| g.abs() < 1e-3);
            for v in 0..n {
                let s: f64 = raw.values()[d.incoming(VertexId(v as u32))]
                    .iter()
                    .map(|g| g.abs())
                    .sum();
                if (s - 1.0).abs() < 1e-3 {
                    near_kink = true;
                }
            }
            if near_kink {
                continue;
            }
            accepted += 1;

            let loss = |x: &FeatureMatrix| -> f64 {
                let w = edge_weights(x, &d, cfg).unwrap();
                let w = stabilize_weights(&w, &d).unwrap();
                w.values().iter().zip(&grad_g).map(|(g, a)| g * a).sum()
            };
            let (gx, gb) = kernel_backward(&x, &d, cfg, &grad_g).unwrap();

            let h = 1e-6;
            for r in 0..n {
                for ch in 0..c {
                    let mut xp = x.clone();
                    xp.set(r, ch, x.get(r, ch) + h);
                    let mut xm = x.clone();
                    xm.set(r, ch, x.get(r, ch) - h);
                    let fd = (loss(&xp) - loss(&xm)) / (2.0 * h);
                    let a = gx.get(r, ch);
                    let denom = a.abs().max(fd.abs()).max(1.0);
                    assert!(
                        (a - fd).abs() / denom <= 1e-5,
                        "grad_x[{r},{ch}]: analytic {a} vs fd {fd}"
                    );
                }
            }
            if cfg.kind == KernelKind::EmbeddedGaussian {
                let mut cp = *cfg;
                cp.bias += h;
                let mut cm = *cfg;
                cm.bias -= h;
                let lp = {
                    let w = edge_weights(&x, &d, &cp).unwrap();
                    let w = stabilize_weights(&w, &d).unwrap();
                    w.values().iter().zip(&grad_g).map(|(g, a)| g * a).sum::<f64>()
                };
                let lm = {
                    let w = edge_weights(&x, &d, &cm).unwrap();
                    let w = stabilize_weights(&w, &d).unwrap();
                    w.values().iter().zip(&grad_g).map(|(g, a)| g * a).sum::<f64>()
                };
                let fd = (lp - lm) / (2.0 * h);
                let denom = gb.abs().max(fd.abs()).max(1.0);
                assert!((gb - fd).abs() / denom <= 1e-5, "grad_bias {gb} vs fd {fd}");
            }
        }
    }

    #[test]
    fn inner_product_gradients_match_finite_differences() {
        fd_check(&KernelConfig::inner_product(), 101);
    }

    #[test]
    fn embedded_gaussian_gradients_match_finite_differences() {
        fd_check(&KernelConfig::embedded_gaussian(), 202);
    }
}
