// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Product quadrature rules on finite phase-space boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[a, b]`, by Newton iteration on
/// the three-term Legendre recurrence.
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let half = T::lit(0.5);
    let mid = half * (a + b);
    let rad = half * (b - a);
    let nf = T::lit(n as f64);
    let eps = T::epsilon() * T::lit(4.0);
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess
        let mut x = (T::PI() * (T::lit(i as f64) + T::lit(0.75)) / (nf + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), x);
            for k in 2..=n {
                let kf = T::lit(k as f64);
                let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { T::one() } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { T::one() } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - T::one());
            let dx = pn / dp;
            x -= dx;
            if dx.abs() <= eps {
                break;
            }
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = mid - rad * x;
        nodes[n - 1 - i] = mid + rad * x;
        weights[i] = rad * w;
        weights[n - 1 - i] = rad * w;
    }
    (nodes, weights)
}

/// Uniform periodic rule on `(lo, hi]`: exact for trigonometric polynomials
/// of degree below `n`.
pub fn periodic_uniform<T: Real>(n: usize, lo: T, hi: T) -> (Vec<T>, Vec<T>) {
    let h = (hi - lo) / T::lit(n as f64);
    let nodes = (1..=n).map(|k| lo + h * T::lit(k as f64)).collect();
    (nodes, vec![h; n])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisRule {
    GaussLegendre,
    PeriodicUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
    pub rule: AxisRule,
}

impl AxisSpec {
    pub fn gauss(lo: f64, hi: f64, nodes: usize) -> Self {
        Self { lo, hi, nodes, rule: AxisRule::GaussLegendre }
    }

    pub fn periodic(lo: f64, hi: f64, nodes: usize) -> Self {
        Self { lo, hi, nodes, rule: AxisRule::PeriodicUniform }
    }

    pub fn nodes_weights(&self) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            AxisRule::GaussLegendre => gauss_legendre(self.nodes, self.lo, self.hi),
            AxisRule::PeriodicUniform => periodic_uniform(self.nodes, self.lo, self.hi),
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.hi + self.lo)
    }
}

/// Product rule over the family coordinates. Affine axes are the scaled
/// momentum `k = p min(q, 1)` and `ln q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub axes: [AxisSpec; 2],
}

impl QuadratureSpec {
    pub const MIN_NODES: usize = 8;

    pub fn new(first: AxisSpec, second: AxisSpec) -> Self {
        Self { axes: [first, second] }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, ax) in self.axes.iter().enumerate() {
            if ax.nodes < Self::MIN_NODES {
                return Err(Error::Quadrature(format!(
                    "axis {k} has {} nodes, need at least {}",
                    ax.nodes,
                    Self::MIN_NODES
                )));
            }
            if !(ax.lo.is_finite() && ax.hi.is_finite() && ax.hi > ax.lo) {
                return Err(Error::Quadrature(format!("axis {k} bounds [{}, {}] invalid", ax.lo, ax.hi)));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.axes[0].nodes * self.axes[1].nodes
    }

    /// Same boxes with node counts scaled by `factor` (rounded, at least 1).
    pub fn with_node_scale(&self, factor: f64) -> Self {
        let mut out = *self;
        for ax in &mut out.axes {
            ax.nodes = ((ax.nodes as f64) * factor).round().max(1.0) as usize;
        }
        out
    }
}
