//! Gaussian quadrature rules used by the ensemble averages.
//!
//! Nodes and weights come from the Golub-Welsch eigenvalue construction on
//! the Jacobi matrix of the orthogonal polynomial family.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Half-width, in standard deviations, of the truncated Gaussian support used
/// by the composite bath rule. The discarded mass is below 1e-16.
const GAUSSIAN_CUTOFF: f64 = 8.5;
const PANEL_ORDER: usize = 16;

/// A set of nodes and weights; nodes are sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    fn sorted(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Rule { nodes, weights }
    }

    fn normalized(mut self) -> Self {
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
        self
    }
}

/// Golub-Welsch for a zero-diagonal symmetric Jacobi matrix.
fn golub_welsch(off_diagonal: &[f64], mass: f64) -> Rule {
    let n = off_diagonal.len() + 1;
    if n == 1 {
        return Rule {
            nodes: vec![0.0],
            weights: vec![mass],
        };
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for (k, &beta) in off_diagonal.iter().enumerate() {
        jacobi[(k, k + 1)] = beta;
        jacobi[(k + 1, k)] = beta;
    }
    let eig = SymmetricEigen::new(jacobi);
    let pairs = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mass * v0 * v0)
        })
        .collect();
    Rule::sorted(pairs)
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "quadrature needs at least one node");
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    symmetrize(golub_welsch(&off, 2.0))
}

/// Gauss-Legendre rule mapped to `[0, 1]`, weights summing to 1.
pub fn unit_interval(n: usize) -> Rule {
    let base = gauss_legendre(n);
    let pairs = base.iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    Rule::sorted(pairs).normalized()
}

/// Gauss-Hermite rule for the standard normal density: `Σ w f(x) ≈ E[f(Z)]`.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1, "quadrature needs at least one node");
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    symmetrize(golub_welsch(&off, 1.0)).normalized()
}

/// Both rules above are symmetric about zero; enforce it exactly so that odd
/// moments vanish to rounding.
fn symmetrize(rule: Rule) -> Rule {
    let n = rule.len();
    let mut nodes = rule.nodes.clone();
    let mut weights = rule.weights.clone();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        let w = 0.5 * (rule.weights[i] + rule.weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Composite Gauss-Legendre rule for the standard normal density on
/// `[-8.5, 8.5]` with `panels` panels of 16 nodes each.
pub fn composite_gaussian(panels: usize) -> Rule {
    assert!(panels >= 1);
    let base = gauss_legendre(PANEL_ORDER);
    let width = 2.0 * GAUSSIAN_CUTOFF / panels as f64;
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut pairs = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let lo = -GAUSSIAN_CUTOFF + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (x, w) in base.iter() {
            let node = mid + 0.5 * width * x;
            pairs.push((node, 0.5 * width * w * norm * (-0.5 * node * node).exp()));
        }
    }
    Rule::sorted(pairs).normalized()
}

/// Quadrature over the standard-normal bath coordinate `z = B / b`.
///
/// The bath average of a quantity evolved for total time `t` contains
/// oscillations up to `exp(i z b t)`. Gauss-Hermite with `n` nodes resolves
/// these only while `(b t)^2 <= n`; beyond that the rule switches to a
/// composite Gauss-Legendre rule whose panel count grows linearly with `b t`.
pub fn bath_rule(max_phase: f64, hermite_nodes: usize) -> Rule {
    let phase = max_phase.abs();
    if phase == 0.0 {
        return Rule {
            nodes: vec![0.0],
            weights: vec![1.0],
        };
    }
    if phase * phase <= hermite_nodes as f64 {
        return gauss_hermite(hermite_nodes);
    }
    let resolved = (GAUSSIAN_CUTOFF * phase / PI).ceil() as usize + 1;
    let floor = hermite_nodes.div_ceil(PANEL_ORDER);
    composite_gaussian(resolved.max(floor))
}
