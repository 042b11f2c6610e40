//! Spline representation of the centre-shift function `b` and the
//! half-width function `s`.
//!
//! `b` is odd, vanishes for `|x| >= d` and has zero slope at `±d`; it is a
//! clamped cubic spline through the mirrored knot set
//! `-x_q, ..., -x_2, 0, x_2, ..., x_q`. `s` is a cubic spline on `[0, d]`
//! and equals the Student t quantile beyond `d`.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::special::DegreesOfFreedom;

/// Lower/upper bound on each free `b` knot value.
pub const B_BOUND: f64 = 100.0;
/// Upper bound on each free `s` knot value.
pub const S_UPPER: f64 = 200.0;

const SPACING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("knot grid: {0}")]
    Knots(String),
    #[error("dimension mismatch: expected {expected} {what} values, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} value {value} at index {index} outside [{lo}, {hi}]")]
    Bound {
        what: &'static str,
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("s evaluated at negative argument {0}")]
    NegativeArgument(f64),
    #[error("malformed interval-function table: {0}")]
    Parse(String),
}

/// End conditions of a cubic spline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    /// Second derivative zero at both ends.
    Natural,
    /// Prescribed first derivatives at the left and right ends.
    Clamped(f64, f64),
}

/// End condition used for the half-width spline `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SEnd {
    #[default]
    Natural,
    /// `s'(0) = s'(d) = 0`.
    Flat,
}

impl SEnd {
    fn condition(self) -> EndCondition {
        match self {
            SEnd::Natural => EndCondition::Natural,
            SEnd::Flat => EndCondition::Clamped(0.0, 0.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SEnd::Natural => "natural",
            SEnd::Flat => "flat",
        }
    }
}

impl FromStr for SEnd {
    type Err = SplineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural" => Ok(SEnd::Natural),
            "flat" => Ok(SEnd::Flat),
            other => Err(SplineError::Parse(format!("unknown s end condition {other:?}"))),
        }
    }
}

/// Piecewise cubic `y_i + c1 t + c2 t^2 + c3 t^3`, `t = x - x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    coef: Vec<[f64; 4]>,
}

impl CubicSpline {
    /// Interpolating cubic spline. `xs` must be strictly increasing with at
    /// least two points.
    pub fn new(xs: &[f64], ys: &[f64], end: EndCondition) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len());
        let second = second_derivatives(xs, ys, end);
        let coef = (0..xs.len() - 1)
            .map(|i| {
                let h = xs[i + 1] - xs[i];
                let (m0, m1) = (second[i], second[i + 1]);
                [
                    ys[i],
                    (ys[i + 1] - ys[i]) / h - h * (2.0 * m0 + m1) / 6.0,
                    0.5 * m0,
                    (m1 - m0) / (6.0 * h),
                ]
            })
            .collect();
        Self {
            xs: xs.to_vec(),
            coef,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn segments(&self) -> &[[f64; 4]] {
        &self.coef
    }

    /// Index of the segment containing `x`; values outside the knot range
    /// map to the first or last segment.
    #[inline]
    pub fn segment(&self, x: f64) -> usize {
        segment_index(&self.xs, x)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let t = x - self.xs[i];
        let c = &self.coef[i];
        c[0] + t * (c[1] + t * (c[2] + t * c[3]))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let t = x - self.xs[i];
        let c = &self.coef[i];
        c[1] + t * (2.0 * c[2] + t * 3.0 * c[3])
    }

    /// Exact integral over the full knot range.
    pub fn integral(&self) -> f64 {
        self.coef
            .iter()
            .zip(self.xs.windows(2))
            .map(|(c, w)| {
                let h = w[1] - w[0];
                h * (c[0] + h * (c[1] / 2.0 + h * (c[2] / 3.0 + h * c[3] / 4.0)))
            })
            .sum()
    }
}

#[inline]
pub(crate) fn segment_index(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    let i = xs.partition_point(|&k| k <= x);
    i.clamp(1, n - 1) - 1
}

fn second_derivatives(xs: &[f64], ys: &[f64], end: EndCondition) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    // Tridiagonal system sub[i] M[i-1] + diag[i] M[i] + sup[i] M[i+1] = rhs[i].
    let mut sub = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
    }
    match end {
        EndCondition::Natural => {}
        EndCondition::Clamped(d0, dn) => {
            diag[0] = 2.0 * h[0];
            sup[0] = h[0];
            rhs[0] = 6.0 * (slope[0] - d0);
            sub[n - 1] = h[n - 2];
            diag[n - 1] = 2.0 * h[n - 2];
            rhs[n - 1] = 6.0 * (dn - slope[n - 2]);
        }
    }
    // Thomas algorithm; the system is diagonally dominant.
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
    }
    m
}

/// Knots `0 = x_1 < ... < x_q = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid {
    d: f64,
    x: Vec<f64>,
}

impl KnotGrid {
    /// `q` equally spaced knots on `[0, d]`.
    pub fn equally_spaced(d: f64, q: usize) -> Result<Self, SplineError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(SplineError::Knots(format!("d must be positive, got {d}")));
        }
        if q < 3 {
            return Err(SplineError::Knots(format!("need at least 3 knots, got {q}")));
        }
        let step = d / (q - 1) as f64;
        let mut x: Vec<f64> = (0..q).map(|i| i as f64 * step).collect();
        x[q - 1] = d;
        Ok(Self { d, x })
    }

    /// Knots at explicit positions. With `require_equal_spacing` the
    /// spacing must be uniform to `1e-12`.
    pub fn from_positions(x: Vec<f64>, require_equal_spacing: bool) -> Result<Self, SplineError> {
        let q = x.len();
        if q < 3 {
            return Err(SplineError::Knots(format!("need at least 3 knots, got {q}")));
        }
        if x[0] != 0.0 {
            return Err(SplineError::Knots(format!("first knot must be 0, got {}", x[0])));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !v.is_finite()) {
            return Err(SplineError::Knots("knots must be strictly increasing".into()));
        }
        let d = x[q - 1];
        if require_equal_spacing {
            let step = d / (q - 1) as f64;
            for (i, w) in x.windows(2).enumerate() {
                if ((w[1] - w[0]) - step).abs() > SPACING_TOL * d.max(1.0) {
                    return Err(SplineError::Knots(format!(
                        "knots not equally spaced at interval {i}: {} vs {step}",
                        w[1] - w[0]
                    )));
                }
            }
        }
        Ok(Self { d, x })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn q(&self) -> usize {
        self.x.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    /// Mirrored knot set `-x_q, ..., 0, ..., x_q`.
    pub fn symmetric_positions(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.x.iter().rev().map(|&x| -x).collect();
        v.extend_from_slice(&self.x[1..]);
        v
    }

    pub fn is_equally_spaced(&self) -> bool {
        let step = self.d / (self.q() - 1) as f64;
        self.x
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= SPACING_TOL * self.d.max(1.0))
    }
}

/// Free knot values `z = (b(x_2), ..., b(x_{q-1}), s(x_1), ..., s(x_{q-1}))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    pub b_vals: Vec<f64>,
    pub s_vals: Vec<f64>,
}

impl DecisionVector {
    pub fn new(b_vals: Vec<f64>, s_vals: Vec<f64>) -> Self {
        Self { b_vals, s_vals }
    }

    /// `b = 0`, `s = t_quant`: the standard interval.
    pub fn standard(q: usize, t_quant: f64) -> Self {
        Self {
            b_vals: vec![0.0; q - 2],
            s_vals: vec![t_quant; q - 1],
        }
    }

    pub fn len(&self) -> usize {
        self.b_vals.len() + self.s_vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat layout, `b` values first.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.b_vals.clone();
        v.extend_from_slice(&self.s_vals);
        v
    }

    pub fn from_flat(z: &[f64], q: usize) -> Result<Self, SplineError> {
        let expected = 2 * q - 3;
        if z.len() != expected {
            return Err(SplineError::Dimension {
                what: "decision",
                expected,
                got: z.len(),
            });
        }
        Ok(Self {
            b_vals: z[..q - 2].to_vec(),
            s_vals: z[q - 2..].to_vec(),
        })
    }

    fn validate(&self, q: usize) -> Result<(), SplineError> {
        if self.b_vals.len() != q - 2 {
            return Err(SplineError::Dimension {
                what: "b",
                expected: q - 2,
                got: self.b_vals.len(),
            });
        }
        if self.s_vals.len() != q - 1 {
            return Err(SplineError::Dimension {
                what: "s",
                expected: q - 1,
                got: self.s_vals.len(),
            });
        }
        for (index, &value) in self.b_vals.iter().enumerate() {
            if !(-B_BOUND..=B_BOUND).contains(&value) {
                return Err(SplineError::Bound {
                    what: "b",
                    index,
                    value,
                    lo: -B_BOUND,
                    hi: B_BOUND,
                });
            }
        }
        for (index, &value) in self.s_vals.iter().enumerate() {
            if !(value <= S_UPPER) || !value.is_finite() {
                return Err(SplineError::Bound {
                    what: "s",
                    index,
                    value,
                    lo: f64::NEG_INFINITY,
                    hi: S_UPPER,
                });
            }
        }
        Ok(())
    }
}

/// Everything that determines an interval rule except the free knot values.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalLayout {
    pub knots: KnotGrid,
    pub m: DegreesOfFreedom,
    pub alpha: f64,
    /// `t_{m, 1 - alpha/2}`.
    pub t_quant: f64,
    pub s_end: SEnd,
}

impl IntervalLayout {
    pub fn new(knots: KnotGrid, m: DegreesOfFreedom, alpha: f64, s_end: SEnd) -> Result<Self, SplineError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SplineError::Knots(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let t_quant = crate::special::t_quantile(m, 1.0 - alpha / 2.0)
            .map_err(|e| SplineError::Knots(e.to_string()))?;
        Ok(Self {
            knots,
            m,
            alpha,
            t_quant,
            s_end,
        })
    }

    pub fn n_free(&self) -> usize {
        2 * self.knots.q() - 3
    }
}

/// The pair `(b, s)` defining an interval rule, as splines.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFunctions {
    layout: IntervalLayout,
    z: DecisionVector,
    b_spline: CubicSpline,
    s_spline: CubicSpline,
}

impl IntervalFunctions {
    pub fn build(layout: IntervalLayout, z: DecisionVector) -> Result<Self, SplineError> {
        let q = layout.knots.q();
        z.validate(q)?;
        let b_spline = b_spline_from(&layout.knots, &z.b_vals);
        let mut s_data = z.s_vals.clone();
        s_data.push(layout.t_quant);
        let s_spline = CubicSpline::new(layout.knots.positions(), &s_data, layout.s_end.condition());
        Ok(Self {
            layout,
            z,
            b_spline,
            s_spline,
        })
    }

    /// The standard interval: `b = 0`, `s = t_quant`.
    pub fn standard(layout: IntervalLayout) -> Self {
        let z = DecisionVector::standard(layout.knots.q(), layout.t_quant);
        Self::build(layout, z).expect("standard decision vector is valid")
    }

    pub fn layout(&self) -> &IntervalLayout {
        &self.layout
    }

    pub fn knots(&self) -> &KnotGrid {
        &self.layout.knots
    }

    pub fn z(&self) -> &DecisionVector {
        &self.z
    }

    pub fn t_quant(&self) -> f64 {
        self.layout.t_quant
    }

    pub fn m(&self) -> DegreesOfFreedom {
        self.layout.m
    }

    pub fn alpha(&self) -> f64 {
        self.layout.alpha
    }

    pub fn d(&self) -> f64 {
        self.layout.knots.d()
    }

    /// `b(x)`: odd, zero for `|x| >= d`.
    #[inline]
    pub fn eval_b(&self, x: f64) -> f64 {
        let d = self.d();
        let ax = x.abs();
        if ax >= d {
            return 0.0;
        }
        let v = self.b_spline.eval(ax);
        if x < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn eval_b_derivative(&self, x: f64) -> f64 {
        if x.abs() >= self.d() {
            return 0.0;
        }
        // b is odd, so b' is even.
        self.b_spline.derivative(x.abs())
    }

    /// `s(x)` for `x >= 0`; equals `t_quant` for `x >= d`.
    pub fn eval_s(&self, x: f64) -> Result<f64, SplineError> {
        if x < 0.0 || x.is_nan() {
            return Err(SplineError::NegativeArgument(x));
        }
        Ok(self.s_abs(x))
    }

    /// `s(|x|)`.
    #[inline]
    pub fn s_abs(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax >= self.d() {
            self.layout.t_quant
        } else {
            self.s_spline.eval(ax)
        }
    }

    /// `max_{y >= 0} |s(y) - t_quant|`, located on a fine grid and refined
    /// at the critical points of each cubic segment.
    pub fn max_s_deviation(&self) -> f64 {
        let t = self.layout.t_quant;
        let xs = self.s_spline.knots();
        let mut best: f64 = 0.0;
        for (i, c) in self.s_spline.segments().iter().enumerate() {
            let h = xs[i + 1] - xs[i];
            let mut cand = vec![0.0, h];
            // Roots of c1 + 2 c2 t + 3 c3 t^2.
            let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
            if a.abs() > 1e-300 {
                let disc = b * b - 4.0 * a * cc;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    cand.push((-b + r) / (2.0 * a));
                    cand.push((-b - r) / (2.0 * a));
                }
            } else if b.abs() > 1e-300 {
                cand.push(-cc / b);
            }
            for u in cand {
                if (0.0..=h).contains(&u) {
                    let v = c[0] + u * (c[1] + u * (c[2] + u * c[3]));
                    best = best.max((v - t).abs());
                }
            }
        }
        best
    }

    /// `∫_0^d s(x) dx`, exact for the cubic segments.
    pub fn s_integral(&self) -> f64 {
        self.s_spline.integral()
    }

    /// Plain-text table: header lines `key = value` followed by the rows
    /// `x_i, b(x_i), s(x_i)`. Numbers carry 17 significant digits.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let k = &self.layout.knots;
        let _ = writeln!(out, "d = {}", fmt_f64(k.d()));
        let _ = writeln!(out, "q = {}", k.q());
        let _ = writeln!(out, "t_quant = {}", fmt_f64(self.layout.t_quant));
        let _ = writeln!(out, "alpha = {}", fmt_f64(self.layout.alpha));
        let _ = writeln!(out, "m = {}", self.layout.m.get());
        let _ = writeln!(out, "s_end = {}", self.layout.s_end.as_str());
        let _ = writeln!(out, "equal_spacing = {}", k.is_equally_spaced());
        out.push_str("x,b,s\n");
        let q = k.q();
        for (i, &x) in k.positions().iter().enumerate() {
            let b = if i == 0 || i == q - 1 { 0.0 } else { self.z.b_vals[i - 1] };
            let s = if i == q - 1 { self.layout.t_quant } else { self.z.s_vals[i] };
            let _ = writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(b), fmt_f64(s));
        }
        out
    }

    /// Inverse of [`IntervalFunctions::to_table`]. Lines starting with `#`
    /// are ignored.
    pub fn from_table(text: &str) -> Result<Self, SplineError> {
        let mut meta = std::collections::BTreeMap::new();
        let mut rows: Vec<[f64; 3]> = Vec::new();
        let mut in_rows = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !in_rows {
                if line == "x,b,s" {
                    in_rows = true;
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| SplineError::Parse(format!("expected key = value, got {line:?}")))?;
                meta.insert(k.trim().to_string(), v.trim().to_string());
            } else {
                let parts: Vec<&str> = line.split(',').collect();
                if parts.len() != 3 {
                    return Err(SplineError::Parse(format!("expected 3 columns, got {line:?}")));
                }
                let mut row = [0.0; 3];
                for (slot, p) in row.iter_mut().zip(parts) {
                    *slot = parse_f64(p)?;
                }
                rows.push(row);
            }
        }
        let get = |key: &str| {
            meta.get(key)
                .ok_or_else(|| SplineError::Parse(format!("missing header key {key}")))
        };
        let d = parse_f64(get("d")?)?;
        let q: usize = get("q")?
            .parse()
            .map_err(|_| SplineError::Parse("q is not an integer".into()))?;
        let t_quant = parse_f64(get("t_quant")?)?;
        let alpha = parse_f64(get("alpha")?)?;
        let m: u32 = get("m")?
            .parse()
            .map_err(|_| SplineError::Parse("m is not an integer".into()))?;
        let s_end = match meta.get("s_end") {
            Some(v) => v.parse()?,
            None => SEnd::Natural,
        };
        let equal = meta.get("equal_spacing").map(|v| v == "true").unwrap_or(true);
        if rows.len() != q {
            return Err(SplineError::Parse(format!("header says q = {q} but table has {} rows", rows.len())));
        }
        let positions: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        if positions[q - 1] != d {
            return Err(SplineError::Parse(format!("last knot {} differs from d = {d}", positions[q - 1])));
        }
        let knots = KnotGrid::from_positions(positions, equal)?;
        let m = DegreesOfFreedom::new(m).map_err(|e| SplineError::Parse(e.to_string()))?;
        if rows[0][1] != 0.0 || rows[q - 1][1] != 0.0 || rows[q - 1][2] != t_quant {
            return Err(SplineError::Parse("fixed end values b(0), b(d), s(d) are inconsistent".into()));
        }
        let z = DecisionVector::new(
            rows[1..q - 1].iter().map(|r| r[1]).collect(),
            rows[..q - 1].iter().map(|r| r[2]).collect(),
        );
        let layout = IntervalLayout {
            knots,
            m,
            alpha,
            t_quant,
            s_end,
        };
        Self::build(layout, z)
    }
}

pub(crate) fn b_spline_from(knots: &KnotGrid, b_vals: &[f64]) -> CubicSpline {
    let q = knots.q();
    // Values at -x_q..-x_2, 0, x_2..x_q from the odd extension.
    let mut pos = vec![0.0; q];
    pos[1..q - 1].copy_from_slice(b_vals);
    let mut ys: Vec<f64> = pos.iter().rev().map(|&v| -v).collect();
    ys.extend_from_slice(&pos[1..]);
    let full = CubicSpline::new(&knots.symmetric_positions(), &ys, EndCondition::Clamped(0.0, 0.0));
    // Keep only the segments on [0, d].
    let coef = full.segments()[q - 1..].to_vec();
    CubicSpline {
        xs: knots.positions().to_vec(),
        coef,
    }
}

/// Cardinal basis of the `b` and `s` splines with respect to the free knot
/// values, tabulated per segment of `[0, d]`.
///
/// For `x >= 0`, `b(x) = Σ_i z_i B_i(x)` over the first `q - 2` coordinates
/// and `s(x) - t_quant = Σ_j (z_j - t_quant) S_j(x)` over the rest.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    xs: Vec<f64>,
    n_b: usize,
    n_s: usize,
    /// `b_coef[seg * n_b + i]`.
    b_coef: Vec<[f64; 4]>,
    /// `s_coef[seg * n_s + j]`.
    s_coef: Vec<[f64; 4]>,
}

impl SplineBasis {
    pub fn new(knots: &KnotGrid, s_end: SEnd) -> Self {
        let q = knots.q();
        let n_b = q - 2;
        let n_s = q - 1;
        let n_seg = q - 1;
        let mut b_coef = vec![[0.0; 4]; n_seg * n_b];
        let mut s_coef = vec![[0.0; 4]; n_seg * n_s];
        for i in 0..n_b {
            let mut unit = vec![0.0; n_b];
            unit[i] = 1.0;
            let sp = b_spline_from(knots, &unit);
            for (seg, c) in sp.segments().iter().enumerate() {
                b_coef[seg * n_b + i] = *c;
            }
        }
        for j in 0..n_s {
            let mut unit = vec![0.0; q];
            unit[j] = 1.0;
            let sp = CubicSpline::new(knots.positions(), &unit, s_end.condition());
            for (seg, c) in sp.segments().iter().enumerate() {
                s_coef[seg * n_s + j] = *c;
            }
        }
        Self {
            xs: knots.positions().to_vec(),
            n_b,
            n_s,
            b_coef,
            s_coef,
        }
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn d(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Basis values at `0 <= x < d` written into `b_out` (len `n_b`) and
    /// `s_out` (len `n_s`).
    #[inline]
    pub fn eval_into(&self, x: f64, b_out: &mut [f64], s_out: &mut [f64]) {
        let seg = segment_index(&self.xs, x);
        let t = x - self.xs[seg];
        for (o, c) in b_out.iter_mut().zip(&self.b_coef[seg * self.n_b..(seg + 1) * self.n_b]) {
            *o = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
        }
        for (o, c) in s_out.iter_mut().zip(&self.s_coef[seg * self.n_s..(seg + 1) * self.n_s]) {
            *o = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
        }
    }

    /// `∫_0^d S_j(x) dx` for each `s` basis function.
    pub fn s_integrals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_s];
        for (seg, w) in self.xs.windows(2).enumerate() {
            let h = w[1] - w[0];
            for (j, o) in out.iter_mut().enumerate() {
                let c = &self.s_coef[seg * self.n_s + j];
                *o += h * (c[0] + h * (c[1] / 2.0 + h * (c[2] / 3.0 + h * c[3] / 4.0)));
            }
        }
        out
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64, SplineError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| SplineError::Parse(format!("not a number: {s:?}")))
}
