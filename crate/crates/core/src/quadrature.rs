//! Gauss–Legendre rules on intervals, composite panels and rectangles.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of a Gauss–Legendre rule mapped to an interval.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule on `[a, b]`.
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        let n = NonZeroUsize::new(n.max(1)).unwrap();
        let rule = GaussLegendre::new(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(t, w)| (mid + half * t, half * w))
            .unzip();
        GaussRule { nodes, weights }
    }

    /// `panels` equal panels on `[a, b]`, `per_panel` nodes each.
    pub fn composite(panels: usize, per_panel: usize, a: f64, b: f64) -> Self {
        let panels = panels.max(1);
        let base = GaussRule::new(per_panel, -1.0, 1.0);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * base.len());
        let mut weights = Vec::with_capacity(panels * base.len());
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (&t, &w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(lo + 0.5 * h * (t + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        GaussRule { nodes, weights }
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

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Tensor-product rule on a rectangle.
#[derive(Debug, Clone)]
pub struct RectRule {
    pub x: GaussRule,
    pub y: GaussRule,
}

impl RectRule {
    pub fn new(x: GaussRule, y: GaussRule) -> Self {
        RectRule { x, y }
    }

    /// Points `(x, y, weight)` in x-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.x
            .iter()
            .flat_map(move |(x, wx)| self.y.iter().map(move |(y, wy)| (x, y, wx * wy)))
    }

    pub fn integrate<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> f64 {
        self.points().map(|(x, y, w)| w * f(x, y)).sum()
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
