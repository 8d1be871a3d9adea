//! Functional principal components of a centered panel, with eigenfunctions
//! constrained to a coarse harmonic basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::basis::{joint_quadrature, weighted_cross, BasisSystem};
use crate::error::{Error, Result};
use crate::fdata::FunctionalPanel;

/// Gram eigenvalues below this are clipped before taking square roots.
const GRAM_EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaResult {
    source_basis: BasisSystem,
    harmonic_basis: BasisSystem,
    /// One row per eigenfunction, coefficients on the harmonic basis.
    eigenfunctions: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    variance_fraction: Vec<f64>,
    n_components: usize,
    scores: DMatrix<f64>,
    /// `∫ φ^source_a φ^harmonic_b`, used to score new curves.
    cross: DMatrix<f64>,
}

impl FpcaResult {
    pub fn source_basis(&self) -> &BasisSystem {
        &self.source_basis
    }

    pub fn harmonic_basis(&self) -> &BasisSystem {
        &self.harmonic_basis
    }

    /// All eigenfunctions, one per row.
    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn variance_fraction(&self) -> &[f64] {
        &self.variance_fraction
    }

    /// Number of retained components L.
    pub fn n_components(&self) -> usize {
        self.n_components
    }

    /// Scores of the fitted curves, one column per retained component.
    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    /// Harmonic-basis coefficients of eigenfunction `s` (0-based).
    pub fn eigenfunction(&self, s: usize) -> Vec<f64> {
        self.eigenfunctions.row(s).iter().copied().collect()
    }

    pub fn cumulative_fraction(&self, count: usize) -> f64 {
        self.variance_fraction.iter().take(count).sum()
    }

    /// Harmonic coefficients of `Σ_s weights_s φ_s` over the retained components.
    pub fn combine(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.n_components {
            return Err(Error::Alignment(format!(
                "{} component weights for {} retained components",
                weights.len(),
                self.n_components
            )));
        }
        let mut out = vec![0.0; self.harmonic_basis.nbasis()];
        for (s, w) in weights.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.eigenfunctions.row(s).iter()) {
                *o += w * b;
            }
        }
        Ok(out)
    }

    fn score_operator(&self) -> DMatrix<f64> {
        let retained = self
            .eigenfunctions
            .rows(0, self.n_components)
            .transpose();
        &self.cross * retained
    }
}

/// Decomposes a centered panel; retains the smallest number of components
/// whose cumulative variance fraction reaches `delta`.
pub fn fit_fpca(
    panel: &FunctionalPanel,
    harmonic_basis: &BasisSystem,
    delta: f64,
) -> Result<FpcaResult> {
    if !panel.is_centered() {
        return Err(Error::State("fPCA requires a centered panel".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!(
            "variance threshold must lie in (0, 1), got {delta}"
        )));
    }
    let n = panel.n_curves();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "fPCA needs at least two curves, got {n}"
        )));
    }
    let source = panel.basis();
    if !source.domain().same_extent(harmonic_basis.domain()) {
        return Err(Error::Config(
            "harmonic basis and panel live on different domains".into(),
        ));
    }

    let cross = cross_products(source, harmonic_basis)?;
    let gram = harmonic_basis.gram();
    let (w_half, w_inv_half) = gram_roots(&gram);

    // continuous least-squares projection: A = C · cross · W⁻¹
    let chol = gram.clone().cholesky().ok_or_else(|| {
        Error::Singular("harmonic basis Gram matrix is not positive definite".into())
    })?;
    let rhs = (panel.coefs() * &cross).transpose();
    let proj = chol.solve(&rhs).transpose();

    let cov = proj.transpose() * &proj / (n as f64 - 1.0);
    let mut target = &w_half * cov * &w_half;
    symmetrize(&mut target);
    let eig = SymmetricEigen::new(target);

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&k| eig.eigenvalues[k].max(0.0))
        .collect();
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::InsufficientData(
            "curves show no variation around their mean".into(),
        ));
    }

    let kh = harmonic_basis.nbasis();
    let element_integrals = element_integrals(harmonic_basis);
    let at_zero = harmonic_basis.evaluate(&[0.0])?;
    let mut eigenfunctions = DMatrix::zeros(kh, kh);
    for (row, &k) in order.iter().enumerate() {
        let u = eig.eigenvectors.column(k);
        let mut b: DVector<f64> = &w_inv_half * u;
        let norm = (b.transpose() * &gram * &b)[(0, 0)].sqrt();
        b /= norm;
        let integral = b.dot(&element_integrals);
        let tie = 1e-10 * harmonic_basis.domain().t_end().sqrt();
        let flip = if integral.abs() > tie {
            integral < 0.0
        } else {
            (at_zero.row(0) * &b)[(0, 0)] < 0.0
        };
        if flip {
            b = -b;
        }
        eigenfunctions.row_mut(row).copy_from(&b.transpose());
    }

    let variance_fraction: Vec<f64> = eigenvalues.iter().map(|l| l / total).collect();
    let mut cumulative = 0.0;
    let mut n_components = kh;
    for (s, f) in variance_fraction.iter().enumerate() {
        cumulative += f;
        if cumulative >= delta {
            n_components = s + 1;
            break;
        }
    }

    let mut result = FpcaResult {
        source_basis: source.clone(),
        harmonic_basis: harmonic_basis.clone(),
        eigenfunctions,
        eigenvalues,
        variance_fraction,
        n_components,
        scores: DMatrix::zeros(0, 0),
        cross,
    };
    result.scores = panel.coefs() * result.score_operator();
    Ok(result)
}

/// Scores of a centered panel against stored components.
pub fn project_scores(model: &FpcaResult, panel: &FunctionalPanel) -> Result<DMatrix<f64>> {
    if !panel.is_centered() {
        return Err(Error::State("scores require a centered panel".into()));
    }
    if panel.basis() != model.source_basis() {
        return Err(Error::Config(
            "panel basis differs from the basis the components were fitted on".into(),
        ));
    }
    Ok(panel.coefs() * model.score_operator())
}

/// `∫ φ^a_i φ^b_j` on the joint quadrature of both bases.
pub fn cross_products(a: &BasisSystem, b: &BasisSystem) -> Result<DMatrix<f64>> {
    let q = joint_quadrature(&[a, b]);
    let pa = a.evaluate(&q.nodes)?;
    let pb = b.evaluate(&q.nodes)?;
    Ok(weighted_cross(&pa, &pb, &q.weights))
}

fn element_integrals(basis: &BasisSystem) -> DVector<f64> {
    let q = basis.quadrature();
    let phi = basis
        .evaluate(&q.nodes)
        .expect("quadrature nodes lie inside the domain");
    phi.transpose() * DVector::from_column_slice(&q.weights)
}

/// Symmetric square root of the Gram matrix and its inverse.
fn gram_roots(gram: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(gram.clone());
    let v = &eig.eigenvectors;
    let clipped: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| l.max(GRAM_EIGEN_FLOOR))
        .collect();
    let root = DMatrix::from_diagonal(&DVector::from_iterator(
        clipped.len(),
        clipped.iter().map(|l| l.sqrt()),
    ));
    let inv_root = DMatrix::from_diagonal(&DVector::from_iterator(
        clipped.len(),
        clipped.iter().map(|l| 1.0 / l.sqrt()),
    ));
    let mut half = v * root * v.transpose();
    let mut inv_half = v * inv_root * v.transpose();
    symmetrize(&mut half);
    symmetrize(&mut inv_half);
    (half, inv_half)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
