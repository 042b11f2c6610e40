//! Fixed product Gauss rule for the double integrals.
//!
//! The node set depends only on `(m, c, γ, knots)` and never on the knot
//! values being optimised, so every integral computed with it is a smooth
//! function of the decision vector and can be differentiated exactly.
//! Inner panels break at the spline knots and at equal steps of
//! `u = w x - γ`, and are clipped to `|u| <= u_cut` where the Gaussian
//! factor is negligible.

use serde::{Deserialize, Serialize};

use super::gauss::gauss_legendre;
use crate::special::{self, DegreesOfFreedom};

/// Layout parameters of the product rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelParams {
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Inner panel width measured in `u = w x - γ`.
    pub u_step: f64,
    /// Inner integrals are restricted to `|u| <= u_cut`.
    pub u_cut: f64,
    /// Maximum inner panel width in `x`.
    pub max_x_width: f64,
    /// Maximum outer panel width in `w`; `0` selects a width from the
    /// spread of `W`.
    pub w_step: f64,
}

impl Default for PanelParams {
    fn default() -> Self {
        Self {
            order: 8,
            u_step: 2.0,
            u_cut: 8.5,
            max_x_width: 4.0,
            w_step: 0.0,
        }
    }
}

/// One outer node with the weights of the two `w` kernels folded in.
#[derive(Debug, Clone, Copy)]
pub struct OuterNode {
    pub w: f64,
    /// Quadrature weight times `w f_W(w)`.
    pub w1: f64,
    /// Quadrature weight times `w² f_W(w)`.
    pub w2: f64,
}

/// Region of the inner `x` integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerRange {
    /// `[-d, d]`.
    Symmetric,
    /// `[0, d]`.
    Positive,
}

#[derive(Debug, Clone)]
pub struct ProductRule {
    outer: Vec<OuterNode>,
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
    breaks: Vec<f64>,
    d: f64,
    params: PanelParams,
}

const NEGLIGIBLE_PANEL_MASS: f64 = 1e-18;

impl ProductRule {
    /// `outer_breaks` must start at 0 and end at the truncation point `c`;
    /// interior entries (the split point) are kept as panel boundaries.
    pub fn new(m: DegreesOfFreedom, outer_breaks: &[f64], knot_positions: &[f64], params: PanelParams) -> Self {
        let (gl_x, gl_w) = gauss_legendre(params.order);
        let w_step = if params.w_step > 0.0 {
            params.w_step
        } else {
            let ew = special::expected_w(m);
            let sd = (1.0 - ew * ew).max(0.0).sqrt();
            (0.25 * sd).min(0.125)
        };
        let mut outer = Vec::new();
        for seg in outer_breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if !(b > a) {
                continue;
            }
            let n = ((b - a) / w_step).ceil().max(1.0) as usize;
            let h = (b - a) / n as f64;
            for p in 0..n {
                let lo = a + p as f64 * h;
                let nodes: Vec<OuterNode> = gl_x
                    .iter()
                    .zip(&gl_w)
                    .map(|(&x, &wt)| {
                        let w = lo + 0.5 * h * (x + 1.0);
                        let f = special::ln_f_w(w, m).exp();
                        let qw = 0.5 * h * wt;
                        OuterNode {
                            w,
                            w1: qw * w * f,
                            w2: qw * w * w * f,
                        }
                    })
                    .collect();
                let mass: f64 = nodes.iter().map(|n| n.w1 + n.w2).sum();
                if mass > NEGLIGIBLE_PANEL_MASS {
                    outer.extend(nodes);
                }
            }
        }
        let mut breaks: Vec<f64> = knot_positions.iter().rev().map(|&x| -x).collect();
        breaks.extend_from_slice(&knot_positions[1..]);
        let d = knot_positions[knot_positions.len() - 1];
        Self {
            outer,
            gl_x,
            gl_w,
            breaks,
            d,
            params,
        }
    }

    pub fn outer_nodes(&self) -> &[OuterNode] {
        &self.outer
    }

    /// Inner nodes `(x, weight)` for one outer node, centred at `γ`.
    pub fn inner_nodes(&self, w: f64, gamma: f64, range: InnerRange, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let p = &self.params;
        let x_lo = match range {
            InnerRange::Symmetric => -self.d,
            InnerRange::Positive => 0.0,
        };
        let lo = x_lo.max((gamma - p.u_cut) / w);
        let hi = self.d.min((gamma + p.u_cut) / w);
        if !(hi > lo) {
            return;
        }
        let mut cuts: Vec<f64> = Vec::with_capacity(64);
        cuts.push(lo);
        cuts.extend(self.breaks.iter().copied().filter(|&k| k > lo && k < hi));
        let k0 = ((w * lo - gamma) / p.u_step).ceil() as i64;
        let k1 = ((w * hi - gamma) / p.u_step).floor() as i64;
        for k in k0..=k1 {
            let x = (gamma + k as f64 * p.u_step) / w;
            if x > lo && x < hi {
                cuts.push(x);
            }
        }
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let width = b - a;
            if width <= 1e-13 * self.d {
                continue;
            }
            let n = (width / p.max_x_width).ceil().max(1.0) as usize;
            let h = width / n as f64;
            for j in 0..n {
                let left = a + j as f64 * h;
                for (&gx, &gw) in self.gl_x.iter().zip(&self.gl_w) {
                    out.push((left + 0.5 * h * (gx + 1.0), 0.5 * h * gw));
                }
            }
        }
    }

    /// Calls `f(outer, x, inner_weight)` for every node of the rule.
    pub fn for_each<F: FnMut(&OuterNode, f64, f64)>(&self, gamma: f64, range: InnerRange, mut f: F) {
        let mut buf = Vec::with_capacity(512);
        for node in &self.outer {
            self.inner_nodes(node.w, gamma, range, &mut buf);
            for &(x, wt) in &buf {
                f(node, x, wt);
            }
        }
    }

    /// Number of nodes used at `γ`.
    pub fn node_count(&self, gamma: f64, range: InnerRange) -> usize {
        let mut n = 0;
        self.for_each(gamma, range, |_, _, _| n += 1);
        n
    }
}
