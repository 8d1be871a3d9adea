//! Finite function bases on the season domain `[0, T]`.
//!
//! Three families are supported: an orthonormal Fourier basis, clamped
//! B-splines and polygonal (hat-function) bases. All inner products go
//! through [`Quadrature`] rules split at the basis breakpoints.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{Quadrature, MIN_PANELS};

/// Relative slack admitted when checking that a time lies in `[0, T]`.
const DOMAIN_SLACK: f64 = 1e-12;

/// The growing season `[0, T]`, measured in days since season start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainRepr", into = "DomainRepr")]
pub struct SeasonDomain {
    t_end: f64,
    label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainRepr {
    t_end: f64,
    label: String,
}

impl TryFrom<DomainRepr> for SeasonDomain {
    type Error = Error;
    fn try_from(r: DomainRepr) -> Result<Self> {
        SeasonDomain::new(r.t_end, r.label)
    }
}

impl From<SeasonDomain> for DomainRepr {
    fn from(d: SeasonDomain) -> Self {
        DomainRepr {
            t_end: d.t_end,
            label: d.label,
        }
    }
}

impl SeasonDomain {
    pub fn new(t_end: f64, label: impl Into<String>) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::Config(format!(
                "season length must be positive and finite, got {t_end}"
            )));
        }
        Ok(SeasonDomain {
            t_end,
            label: label.into(),
        })
    }

    pub fn t_start(&self) -> f64 {
        0.0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Validates `t` and snaps values within rounding slack onto the domain.
    pub fn check(&self, t: f64) -> Result<f64> {
        let slack = DOMAIN_SLACK * self.t_end;
        if !t.is_finite() || t < -slack || t > self.t_end + slack {
            return Err(Error::OutOfDomain {
                value: t,
                t_end: self.t_end,
            });
        }
        Ok(t.clamp(0.0, self.t_end))
    }

    /// `n` equally spaced points from 0 to T inclusive.
    pub fn uniform_grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.0],
            _ => (0..n)
                .map(|i| {
                    if i + 1 == n {
                        self.t_end
                    } else {
                        self.t_end * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }

    /// Same length (within rounding) regardless of label.
    pub fn same_extent(&self, other: &SeasonDomain) -> bool {
        (self.t_end - other.t_end).abs() <= DOMAIN_SLACK * self.t_end.max(other.t_end)
    }
}

/// Family-specific layout of a basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BasisKind {
    /// Constant followed by sine/cosine pairs, orthonormal on `[0, T]`.
    Fourier { nbasis: usize },
    /// Clamped B-splines of the given order (4 = cubic).
    Spline {
        order: usize,
        interior_knots: Vec<f64>,
    },
    /// Hat functions on the nodes. The last element stays at 1 between the
    /// final node and T when the nodes stop short of the domain end.
    Polygonal { nodes: Vec<f64> },
}

/// A validated finite basis on a season domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRepr", into = "BasisRepr")]
pub struct BasisSystem {
    kind: BasisKind,
    domain: SeasonDomain,
    /// Full clamped knot vector, cached for splines.
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisRepr {
    domain: SeasonDomain,
    layout: BasisKind,
}

impl TryFrom<BasisRepr> for BasisSystem {
    type Error = Error;
    fn try_from(r: BasisRepr) -> Result<Self> {
        BasisSystem::new(r.domain, r.layout)
    }
}

impl From<BasisSystem> for BasisRepr {
    fn from(b: BasisSystem) -> Self {
        BasisRepr {
            domain: b.domain,
            layout: b.kind,
        }
    }
}

/// Weight applied inside [`BasisSystem::integrate_coefficient_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveWeight {
    Constant,
    /// Linear ramp from `1/(t1-t0)` at `t0` to 1 at `t1`.
    Ramp,
}

/// Ramp weight for a precipitation change spread evenly over `[t0, t1]`.
pub fn ramp_weight(t: f64, t0: f64, t1: f64) -> f64 {
    let len = t1 - t0;
    (t - t0) / len * (1.0 - 1.0 / len) + 1.0 / len
}

impl BasisSystem {
    pub fn new(domain: SeasonDomain, kind: BasisKind) -> Result<Self> {
        let t_end = domain.t_end();
        let mut knots = Vec::new();
        match &kind {
            BasisKind::Fourier { nbasis } => {
                if *nbasis == 0 || nbasis % 2 == 0 {
                    return Err(Error::InvalidBasis(format!(
                        "Fourier basis size must be odd, got {nbasis}"
                    )));
                }
            }
            BasisKind::Spline {
                order,
                interior_knots,
            } => {
                if *order == 0 {
                    return Err(Error::InvalidBasis("spline order must be >= 1".into()));
                }
                let mut prev = 0.0;
                for &k in interior_knots {
                    if !(k > prev && k < t_end) {
                        return Err(Error::InvalidBasis(format!(
                            "interior knots must be strictly increasing inside (0, {t_end}), got {k}"
                        )));
                    }
                    prev = k;
                }
                knots.extend(std::iter::repeat_n(0.0, *order));
                knots.extend_from_slice(interior_knots);
                knots.extend(std::iter::repeat_n(t_end, *order));
            }
            BasisKind::Polygonal { nodes } => {
                if nodes.len() < 2 {
                    return Err(Error::InvalidBasis(
                        "polygonal basis needs at least two nodes".into(),
                    ));
                }
                if nodes[0] != 0.0 {
                    return Err(Error::InvalidBasis(format!(
                        "polygonal nodes must start at 0, got {}",
                        nodes[0]
                    )));
                }
                if nodes.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidBasis(
                        "polygonal nodes must be strictly increasing".into(),
                    ));
                }
                let last = *nodes.last().unwrap();
                if last > t_end * (1.0 + DOMAIN_SLACK) {
                    return Err(Error::InvalidBasis(format!(
                        "polygonal node {last} lies beyond the domain end {t_end}"
                    )));
                }
            }
        }
        Ok(BasisSystem {
            kind,
            domain,
            knots,
        })
    }

    pub fn fourier(domain: SeasonDomain, nbasis: usize) -> Result<Self> {
        Self::new(domain, BasisKind::Fourier { nbasis })
    }

    /// B-spline basis of `nbasis` elements with equally spaced interior knots.
    pub fn bspline(domain: SeasonDomain, order: usize, nbasis: usize) -> Result<Self> {
        if nbasis < order {
            return Err(Error::InvalidBasis(format!(
                "a spline of order {order} needs at least {order} elements, got {nbasis}"
            )));
        }
        let n_interior = nbasis - order;
        let t_end = domain.t_end();
        let interior_knots = (1..=n_interior)
            .map(|i| t_end * i as f64 / (n_interior + 1) as f64)
            .collect();
        Self::new(
            domain,
            BasisKind::Spline {
                order,
                interior_knots,
            },
        )
    }

    pub fn polygonal(domain: SeasonDomain, nodes: Vec<f64>) -> Result<Self> {
        Self::new(domain, BasisKind::Polygonal { nodes })
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn domain(&self) -> &SeasonDomain {
        &self.domain
    }

    pub fn nbasis(&self) -> usize {
        match &self.kind {
            BasisKind::Fourier { nbasis } => *nbasis,
            BasisKind::Spline {
                order,
                interior_knots,
            } => order + interior_knots.len(),
            BasisKind::Polygonal { nodes } => nodes.len(),
        }
    }

    /// Points inside `(0, T)` where elements lose smoothness.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            BasisKind::Fourier { .. } => Vec::new(),
            BasisKind::Spline { interior_knots, .. } => interior_knots.clone(),
            BasisKind::Polygonal { nodes } => nodes.clone(),
        }
    }

    /// Values of every element at `t`, written into `out` (length nbasis).
    /// `t` must already be validated against the domain.
    fn eval_point(&self, t: f64, out: &mut [f64]) {
        let t_end = self.domain.t_end();
        match &self.kind {
            BasisKind::Fourier { nbasis } => {
                out[0] = 1.0 / t_end.sqrt();
                let scale = (2.0 / t_end).sqrt();
                for k in 1..=(nbasis - 1) / 2 {
                    let arg = 2.0 * PI * k as f64 * t / t_end;
                    out[2 * k - 1] = scale * arg.sin();
                    out[2 * k] = scale * arg.cos();
                }
            }
            BasisKind::Spline { order, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let (span, vals) = bspline_nonzero(&self.knots, *order, t);
                for (i, v) in vals.into_iter().enumerate() {
                    out[span + 1 - order + i] = v;
                }
            }
            BasisKind::Polygonal { nodes } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let last = nodes.len() - 1;
                if t >= nodes[last] {
                    out[last] = 1.0;
                    return;
                }
                // nodes[r] <= t < nodes[r + 1]
                let r = nodes.partition_point(|&n| n <= t) - 1;
                let w = (t - nodes[r]) / (nodes[r + 1] - nodes[r]);
                out[r] = 1.0 - w;
                out[r + 1] = w;
            }
        }
    }

    /// Evaluation matrix with one row per time and one column per element.
    pub fn evaluate(&self, times: &[f64]) -> Result<DMatrix<f64>> {
        let nb = self.nbasis();
        let mut m = DMatrix::zeros(times.len(), nb);
        let mut row = vec![0.0; nb];
        for (r, &t) in times.iter().enumerate() {
            let t = self.domain.check(t)?;
            self.eval_point(t, &mut row);
            for (c, v) in row.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        Ok(m)
    }

    /// Evaluates the curve `Σ coeffs_s φ_s` at each time.
    pub fn evaluate_curve(&self, coeffs: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        self.check_coeffs(coeffs)?;
        let phi = self.evaluate(times)?;
        let c = DVector::from_column_slice(coeffs);
        Ok((phi * c).iter().copied().collect())
    }

    fn check_coeffs(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.nbasis() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                self.nbasis(),
                coeffs.len()
            )));
        }
        Ok(())
    }

    /// Quadrature rule over `[0, T]` adapted to this basis.
    pub fn quadrature(&self) -> Quadrature {
        joint_quadrature(&[self])
    }

    /// Gram matrix of L² inner products between elements.
    pub fn gram(&self) -> DMatrix<f64> {
        if matches!(self.kind, BasisKind::Fourier { .. }) {
            return DMatrix::identity(self.nbasis(), self.nbasis());
        }
        let q = self.quadrature();
        let phi = self
            .evaluate(&q.nodes)
            .expect("quadrature nodes lie inside the domain");
        weighted_cross(&phi, &phi, &q.weights)
    }

    /// `∫_{t0}^{t1} w(t) γ(t) dt` where `γ = Σ coeffs_s φ_s`.
    pub fn integrate_coefficient_curve(
        &self,
        coeffs: &[f64],
        t0: f64,
        t1: f64,
        weight: CurveWeight,
    ) -> Result<f64> {
        self.check_coeffs(coeffs)?;
        let t_end = self.domain.t_end();
        if !(t0.is_finite() && t1.is_finite()) || t0 >= t1 {
            return Err(Error::Interval {
                t0,
                t1,
                reason: "start must precede end".into(),
            });
        }
        if t0 < 0.0 || t1 > t_end * (1.0 + DOMAIN_SLACK) {
            return Err(Error::Interval {
                t0,
                t1,
                reason: format!("bounds must lie within [0, {t_end}]"),
            });
        }
        let t1 = t1.min(t_end);
        let q = Quadrature::composite(t0, t1, &self.breakpoints(), t_end / MIN_PANELS as f64);
        let values = self.evaluate_curve(coeffs, &q.nodes)?;
        let total = q
            .nodes
            .iter()
            .zip(&q.weights)
            .zip(&values)
            .map(|((&t, w), g)| {
                let wt = match weight {
                    CurveWeight::Constant => 1.0,
                    CurveWeight::Ramp => ramp_weight(t, t0, t1),
                };
                w * wt * g
            })
            .sum();
        Ok(total)
    }
}

/// Quadrature on the shared domain of several bases, split at all their
/// breakpoints.
pub fn joint_quadrature(bases: &[&BasisSystem]) -> Quadrature {
    let t_end = bases[0].domain().t_end();
    let mut breaks = Vec::new();
    for b in bases {
        breaks.extend(b.breakpoints());
    }
    Quadrature::composite(0.0, t_end, &breaks, t_end / MIN_PANELS as f64)
}

/// `Aᵀ diag(w) B` for two evaluation matrices sharing quadrature rows.
pub fn weighted_cross(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut bw = b.clone();
    for (r, &wr) in w.iter().enumerate() {
        bw.row_mut(r).scale_mut(wr);
    }
    let mut out = a.transpose() * bw;
    if std::ptr::eq(a, b) {
        // enforce exact symmetry
        let n = out.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
    }
    out
}

/// Nonzero B-spline values at `t` (Cox–de Boor triangle). Returns the knot
/// span index and the `order` values of elements `span-order+1 ..= span`.
fn bspline_nonzero(knots: &[f64], order: usize, t: f64) -> (usize, Vec<f64>) {
    let degree = order - 1;
    let n_elems = knots.len() - order;
    // last span with knots[span] < knots[span + 1], closed at the right end
    let span = if t >= knots[n_elems] {
        n_elems - 1
    } else {
        let mut s = knots.partition_point(|&k| k <= t) - 1;
        s = s.clamp(degree, n_elems - 1);
        s
    };

    let mut vals = vec![0.0; order];
    let mut left = vec![0.0; order];
    let mut right = vec![0.0; order];
    vals[0] = 1.0;
    for j in 1..=degree {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { vals[r] / denom };
            vals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        vals[j] = saved;
    }
    (span, vals)
}
