//! Quantile regression by a primal-dual interior-point method.
//!
//! The solver works on the bounded dual
//!
//! ```text
//! max yᵀa   s.t.  Xᵀa = (1-τ)Xᵀ1,  0 ≤ a ≤ 1
//! ```
//!
//! with Mehrotra predictor-corrector steps. The regression coefficients are
//! the negated equality multipliers. A nondegenerate optimum is a vertex
//! (p zero residuals); the final interior iterate is polished onto that
//! vertex when doing so lowers the objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const GAP_TOLERANCE: f64 = 1e-9;
const STEP_FACTOR: f64 = 0.99995;
/// Largest number of basic subsets the enumeration fallback will visit.
const ENUMERATION_LIMIT: u64 = 20_000;

/// Check (pinball) loss `ρ_τ(u) = u(τ - 1[u<0])`.
pub fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// `Σ ρ_τ(y - Xb)`.
pub fn objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, tau: f64) -> f64 {
    let r = y - x * beta;
    r.iter().map(|&u| pinball(u, tau)).sum()
}

#[derive(Debug, Clone)]
pub struct QrFit {
    pub coefficients: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Relative duality gap at exit of the interior-point loop.
    pub gap: f64,
}

pub fn fit_qr(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> Result<QrFit> {
    let (n, p) = x.shape();
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Config(format!("quantile must lie in (0, 1), got {tau}")));
    }
    if y.len() != n {
        return Err(Error::Alignment(format!("{} responses for {n} design rows", y.len())));
    }
    if n < p || p == 0 {
        return Err(Error::InsufficientData(format!(
            "quantile regression with {p} columns needs at least {p} rows, got {n}"
        )));
    }
    check_rank(x)?;

    // column and response scaling keeps the Newton systems well conditioned
    let col_scale: Vec<f64> = (0..p)
        .map(|j| {
            let m = x.column(j).amax();
            if m > 0.0 {
                m
            } else {
                1.0
            }
        })
        .collect();
    let y_scale = {
        let m = y.amax();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    };
    let xs = DMatrix::from_fn(n, p, |i, j| x[(i, j)] / col_scale[j]);
    let ys = y / y_scale;

    let unscale = |b: &DVector<f64>| {
        DVector::from_iterator(p, (0..p).map(|j| b[j] * y_scale / col_scale[j]))
    };

    match interior_point(&xs, &ys, tau) {
        Ok((beta_s, iterations, gap)) => {
            let beta = unscale(&beta_s);
            let obj = objective(x, y, &beta, tau);
            let (coefficients, objective_value) = match polish_to_vertex(x, y, &beta, tau) {
                Some((vb, vobj)) if vobj < obj - 1e-14 * (1.0 + obj.abs()) => (vb, vobj),
                _ => (beta, obj),
            };
            Ok(QrFit {
                coefficients,
                objective: objective_value,
                iterations,
                gap,
            })
        }
        Err(err) => {
            if binomial(n as u64, p as u64) <= ENUMERATION_LIMIT {
                let (b, obj) = enumerate_basic_solutions(x, y, tau)
                    .ok_or_else(|| Error::Singular("no nonsingular basic subset".into()))?;
                Ok(QrFit {
                    coefficients: b,
                    objective: obj,
                    iterations: MAX_ITERATIONS,
                    gap: 0.0,
                })
            } else {
                Err(err)
            }
        }
    }
}

fn check_rank(x: &DMatrix<f64>) -> Result<()> {
    let scaled = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        let m = x.column(j).amax();
        if m > 0.0 {
            x[(i, j)] / m
        } else {
            0.0
        }
    });
    let r = scaled.qr().r();
    let dmax = r.diagonal().amax();
    let dependent: Vec<usize> = (0..r.ncols())
        .filter(|&k| r[(k, k)].abs() <= 1e-10 * dmax.max(f64::MIN_POSITIVE))
        .collect();
    if dependent.is_empty() {
        Ok(())
    } else {
        Err(Error::Singular(format!(
            "design columns {dependent:?} are linearly dependent on earlier columns"
        )))
    }
}

/// Returns scaled coefficients, iterations used and final relative gap.
fn interior_point(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> Result<(DVector<f64>, usize, f64)> {
    let (n, p) = x.shape();
    let c = -y;
    // a = (1-τ)1 satisfies Xᵀa = (1-τ)Xᵀ1 exactly
    let mut a = DVector::from_element(n, 1.0 - tau);
    let mut s = DVector::from_element(n, tau);

    let xtx = x.transpose() * x;
    let chol0 = xtx
        .cholesky()
        .ok_or_else(|| Error::Singular("design is rank deficient".into()))?;
    let mut lam = chol0.solve(&(x.transpose() * &c));
    let rd = &c - x * &lam;
    let kappa = (rd.iter().map(|v| v.abs()).sum::<f64>() / n as f64).max(1e-8) * 1e-1;
    let mut z = DVector::from_iterator(n, rd.iter().map(|&r| r.max(0.0) + kappa));
    let mut w = DVector::from_iterator(n, rd.iter().map(|&r| (-r).max(0.0) + kappa));

    let mut gap = f64::INFINITY;
    for iter in 0..MAX_ITERATIONS {
        let comp = a.dot(&z) + s.dot(&w);
        let primal_obj = c.dot(&a);
        gap = comp / (1.0 + primal_obj.abs());
        let rp = -(x.transpose() * &a) + x.transpose() * DVector::from_element(n, 1.0 - tau);
        let rdual = &c - x * &lam - &z + &w;
        let infeas = rp.amax().max(rdual.amax());
        if gap < GAP_TOLERANCE && infeas < 1e-9 {
            return Ok((-lam, iter, gap));
        }
        let mu = comp / (2 * n) as f64;

        let theta = DVector::from_iterator(
            n,
            (0..n).map(|i| 1.0 / (z[i] / a[i] + w[i] / s[i])),
        );
        let mut xtheta = x.clone();
        for (i, t) in theta.iter().enumerate() {
            xtheta.row_mut(i).scale_mut(*t);
        }
        let normal = {
            let mut m = x.transpose() * &xtheta;
            let n = m.nrows();
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        };
        let chol = match normal.clone().cholesky() {
            Some(ch) => ch,
            None => {
                let ridge = 1e-12 * normal.trace().max(1e-300) / p as f64;
                let mut m = normal;
                for i in 0..p {
                    m[(i, i)] += ridge;
                }
                m.cholesky()
                    .ok_or_else(|| Error::Singular("Newton system lost definiteness".into()))?
            }
        };

        let solve = |rxz: &DVector<f64>, rsw: &DVector<f64>| {
            // ρ = r_d - X⁻¹r_xz + S⁻¹r_sw, Δλ from (XᵀΘX)Δλ = r_p + XᵀΘρ
            let rho = DVector::from_iterator(
                n,
                (0..n).map(|i| rdual[i] - rxz[i] / a[i] + rsw[i] / s[i]),
            );
            let theta_rho = theta.component_mul(&rho);
            let dlam = chol.solve(&(&rp + x.transpose() * &theta_rho));
            let da = theta.component_mul(&(x * &dlam - &rho));
            let dz = DVector::from_iterator(n, (0..n).map(|i| (rxz[i] - z[i] * da[i]) / a[i]));
            let dw = DVector::from_iterator(n, (0..n).map(|i| (rsw[i] + w[i] * da[i]) / s[i]));
            (dlam, da, dz, dw)
        };

        // affine predictor
        let rxz = -a.component_mul(&z);
        let rsw = -s.component_mul(&w);
        let (_, da, dz, dw) = solve(&rxz, &rsw);
        let ds = -&da;
        let ap = max_step(&a, &da).min(max_step(&s, &ds)).min(1.0);
        let ad = max_step(&z, &dz).min(max_step(&w, &dw)).min(1.0);
        let mu_aff = ((&a + ap * &da).dot(&(&z + ad * &dz))
            + (&s + ap * &ds).dot(&(&w + ad * &dw)))
            / (2 * n) as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // centering corrector
        let rxz = DVector::from_iterator(
            n,
            (0..n).map(|i| sigma * mu - a[i] * z[i] - da[i] * dz[i]),
        );
        let rsw = DVector::from_iterator(
            n,
            (0..n).map(|i| sigma * mu - s[i] * w[i] - ds[i] * dw[i]),
        );
        let (dlam, da, dz, dw) = solve(&rxz, &rsw);
        let ds = -&da;
        let ap = (STEP_FACTOR * max_step(&a, &da).min(max_step(&s, &ds))).min(1.0);
        let ad = (STEP_FACTOR * max_step(&z, &dz).min(max_step(&w, &dw))).min(1.0);

        a += ap * &da;
        s += ap * &ds;
        lam += ad * &dlam;
        z += ad * &dz;
        w += ad * &dw;
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        gap,
    })
}

/// Largest α ≤ ∞ keeping `v + α dv ≥ 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// Interpolates the `p` rows with smallest absolute residual.
fn polish_to_vertex(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    tau: f64,
) -> Option<(DVector<f64>, f64)> {
    let (n, p) = x.shape();
    let r = y - x * beta;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| r[i].abs().partial_cmp(&r[j].abs()).unwrap().then(i.cmp(&j)));

    // greedy independent rows via Gram-Schmidt on normalized rows
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(p);
    let mut chosen = Vec::with_capacity(p);
    for &i in &order {
        let row = x.row(i).transpose();
        let norm = row.norm();
        if norm == 0.0 {
            continue;
        }
        let mut v = row / norm;
        for b in &basis {
            let proj = v.dot(b);
            v -= proj * b;
        }
        let vn = v.norm();
        if vn > 1e-8 {
            basis.push(v / vn);
            chosen.push(i);
            if chosen.len() == p {
                break;
            }
        }
    }
    if chosen.len() < p {
        return None;
    }
    let xh = x.select_rows(chosen.iter());
    let yh = DVector::from_iterator(p, chosen.iter().map(|&i| y[i]));
    let b = xh.lu().solve(&yh)?;
    let obj = objective(x, y, &b, tau);
    Some((b, obj))
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > u64::MAX / 2 {
            return u64::MAX;
        }
    }
    acc
}

/// Exhaustive search over all interpolating basic solutions (tiny problems).
pub fn enumerate_basic_solutions(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    tau: f64,
) -> Option<(DVector<f64>, f64)> {
    let (n, p) = x.shape();
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        let xh = x.select_rows(idx.iter());
        let yh = DVector::from_iterator(p, idx.iter().map(|&i| y[i]));
        if let Some(b) = xh.lu().solve(&yh) {
            if b.iter().all(|v| v.is_finite()) {
                let obj = objective(x, y, &b, tau);
                if best.as_ref().is_none_or(|(_, o)| obj < *o) {
                    best = Some((b, obj));
                }
            }
        }
        // next combination in lexicographic order
        let Some(k) = (0..p).rev().find(|&k| idx[k] < n - p + k) else {
            return best;
        };
        idx[k] += 1;
        for j in (k + 1)..p {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
