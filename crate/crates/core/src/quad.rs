//! Composite Gauss–Legendre quadrature on uniform panels.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights of a composite rule on `[a, b]`.
#[derive(Clone, Debug)]
pub struct Panels {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Panels {
    /// `panels` equal sub-intervals with an `order`-point rule on each.
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
        let pairs = rule.as_node_weight_pairs();
        let h = (b - a) / panels.max(1) as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels.max(1) {
            let lo = a + p as f64 * h;
            for &(x, w) in pairs {
                nodes.push(lo + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Panels { nodes, weights }
    }

    /// Panels no wider than `max_width`.
    pub fn with_max_width(a: f64, b: f64, max_width: f64, order: usize) -> Self {
        let n = ((b - a) / max_width).ceil().max(1.0) as usize;
        Self::new(a, b, n, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Concatenate two rules (e.g. for adjacent intervals).
    pub fn join(mut self, other: Panels) -> Self {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
        self
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }
}

/// Integrate a complex function, doubling the panel count until two successive
/// estimates agree to `rel_tol` (relative to the larger of the estimate and `scale`).
pub fn integrate_converged(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    initial_panels: usize,
    rel_tol: f64,
    scale: f64,
) -> Result<Complex64> {
    let mut panels = initial_panels.max(1);
    let mut prev = Panels::new(a, b, panels, 16).integrate_complex(&f);
    for _ in 0..14 {
        panels *= 2;
        let cur = Panels::new(a, b, panels, 16).integrate_complex(&f);
        if (cur - prev).norm() <= rel_tol * cur.norm().max(scale) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Accuracy(format!(
        "quadrature on [{a}, {b}] did not converge to {rel_tol:e} with {panels} panels"
    )))
}
