//! Low-order Newton-Cotes rules on uniform nodes.
//!
//! Every integral in the solver runs over a whole number of mesh intervals,
//! and the rule is picked from the interval count alone: one interval gets
//! the trapezoid, an even count gets composite Simpson, and an odd count of
//! at least three gets a 3/8 block on the first three intervals followed by
//! composite Simpson on the rest. "First" always means the node at index 0,
//! which callers arrange to be the collocation node (or the edge of the
//! support for plain integrals).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    /// Zero intervals; the integral is zero.
    Empty,
    Trapezoid,
    CompositeSimpson,
    ThreeEighthsThenSimpson,
}

/// Weights for `intervals + 1` nodes of unit spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn for_intervals(intervals: usize) -> Self {
        let mut weights = vec![0.0; intervals + 1];
        let kind = match intervals {
            0 => RuleKind::Empty,
            1 => {
                weights[0] = 0.5;
                weights[1] = 0.5;
                RuleKind::Trapezoid
            }
            m if m % 2 == 0 => {
                add_simpson(&mut weights, 0);
                RuleKind::CompositeSimpson
            }
            _ => {
                weights[0] += 3.0 / 8.0;
                weights[1] += 9.0 / 8.0;
                weights[2] += 9.0 / 8.0;
                weights[3] += 3.0 / 8.0;
                add_simpson(&mut weights, 3);
                RuleKind::ThreeEighthsThenSimpson
            }
        };
        Self { kind, weights }
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    /// `step * sum w_j f_j`.
    pub fn apply(&self, f: &[Complex64], step: f64) -> Complex64 {
        assert_eq!(f.len(), self.weights.len(), "sample count does not match rule");
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, z) in self.weights.iter().zip(f) {
            acc += z * *w;
        }
        acc * step
    }
}

fn add_simpson(w: &mut [f64], start: usize) {
    let last = w.len() - 1;
    if last == start {
        return;
    }
    debug_assert_eq!((last - start) % 2, 0);
    let mut a = start;
    while a < last {
        w[a] += 1.0 / 3.0;
        w[a + 1] += 4.0 / 3.0;
        w[a + 2] += 1.0 / 3.0;
        a += 2;
    }
}

/// Integral of uniformly spaced samples, rule chosen from the interval count.
pub fn integrate(f: &[Complex64], step: f64) -> Complex64 {
    if f.len() <= 1 {
        return Complex64::new(0.0, 0.0);
    }
    QuadratureRule::for_intervals(f.len() - 1).apply(f, step)
}

/// Real-valued companion of [`integrate`].
pub fn integrate_real(f: &[f64], step: f64) -> f64 {
    if f.len() <= 1 {
        return 0.0;
    }
    let rule = QuadratureRule::for_intervals(f.len() - 1);
    rule.weights.iter().zip(f).map(|(w, y)| w * y).sum::<f64>() * step
}

/// Composite Simpson on an even number of intervals; used for the Fourier
/// integrals where the interval count is always even by construction.
pub fn simpson_weight(j: usize, intervals: usize) -> f64 {
    debug_assert!(intervals % 2 == 0 && intervals > 0);
    if j == 0 || j == intervals {
        1.0 / 3.0
    } else if j % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// The matrix of parallel-line weights (in units of `h`) for a line whose
/// collocation nodes are ordered from the support edge inward.
///
/// Row `r` belongs to the node with `r + 1` intervals between it and the
/// first node outside the support; column `c` is the node `c + 1` steps
/// before that outside node. The outside node carries a zero value and so
/// has no column.
pub fn parallel_weight_matrix(order: usize) -> Vec<Vec<f64>> {
    (0..order)
        .map(|r| {
            let rule = QuadratureRule::for_intervals(r + 1);
            (0..=r).map(|c| rule.weights[r - c]).collect()
        })
        .collect()
}
