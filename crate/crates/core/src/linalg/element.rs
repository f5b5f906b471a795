
use super::matrix::{orthonormalize, Matrix};
use super::svd::{spectral_norm, svd, DEFAULT_MAX_SWEEPS, DEFAULT_SVD_TOLERANCE};
use crate::error::{Error, Result};

use crate::tolerance::Tolerances;

/// An element of SL±(d,ℝ): a real d×d matrix with |det| = 1.
///
/// The inverse is carried alongside the matrix and updated by every
/// composition. Long products of strongly contracting letters have singular
/// values spread over hundreds of orders of magnitude; the small ones (and
/// the subspaces they govern) are recovered accurately from the inverse,
/// which is itself an exact product of well-conditioned letter inverses.
#[derive(Clone, Debug)]
pub struct GroupElement {
    matrix: Matrix,
    inverse: Matrix,
}

impl GroupElement {
    /// Rescales a nonsingular square matrix by |det|^(-1/d).
    pub fn new(entries: Matrix) -> Result<Self> {
        Self::with_tolerance(entries, Tolerances::default().singular)
    }

    pub fn with_tolerance(entries: Matrix, singular: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.rows(),
                found: entries.cols(),
            });
        }
        let d = entries.rows();
        if d < 2 {
            return Err(Error::Invalid(format!("group elements need d >= 2, got {d}")));
        }
        if !entries.is_finite() {
            return Err(Error::Invalid("matrix has non-finite entries".into()));
        }
        let scale = entries.max_abs();
        if scale == 0.0 {
            return Err(Error::SingularMatrix { det: 0.0 });
        }
        let scaled = entries.scale(1.0 / scale);
        let det = scaled.determinant();
        if det.abs() <= singular {
            return Err(Error::SingularMatrix {
                det: det * scale.powi(d as i32),
            });
        }
        let matrix = scaled.scale(det.abs().powf(-1.0 / d as f64));
        let inverse = matrix.inverse()?;
        Ok(Self { matrix, inverse })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Matrix::identity(dim),
            inverse: Matrix::identity(dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(Matrix::diagonal(values))
    }

    /// Rotation by `angle` in the plane of the first two coordinates of ℝ^dim.
    pub fn rotation(dim: usize, angle: f64) -> Self {
        let mut m = Matrix::identity(dim);
        let (s, c) = angle.sin_cos();
        m[(0, 0)] = c;
        m[(0, 1)] = -s;
        m[(1, 0)] = s;
        m[(1, 1)] = c;
        let inverse = m.transpose();
        Self { matrix: m, inverse }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &Matrix {
        &self.inverse
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Matrix product `self · other`. The product of unimodular matrices is
    /// unimodular, so no determinant is recomputed here.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            matrix: self.matrix.mul(&other.matrix),
            inverse: other.inverse.mul(&self.inverse),
        })
    }

    pub fn inverse(&self) -> GroupElement {
        Self {
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
        }
    }

    /// Integer power by repeated squaring; negative exponents use the inverse.
    pub fn pow(&self, k: i64) -> GroupElement {
        let mut base = if k < 0 { self.inverse() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = GroupElement::identity(self.dim());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base).expect("same dimension");
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base).expect("same dimension");
            }
        }
        acc
    }

    /// `r · self · r⁻¹`.
    pub fn conjugate_by(&self, r: &GroupElement) -> Result<GroupElement> {
        r.compose(self)?.compose(&r.inverse())
    }

    /// Operator-norm distance ‖self − other‖₂.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        spectral_norm(&self.matrix.sub(&other.matrix))
    }

    /// Operator-norm distance to the identity.
    pub fn distance_to_identity(&self) -> f64 {
        spectral_norm(&self.matrix.sub(&Matrix::identity(self.dim())))
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.distance_to_identity() <= tol
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        Ok(cartan(self)?.sigma)
    }
}

/// `g = left · diag(sigma) · rightᵀ` with orthogonal factors and sigma
/// nonincreasing.
#[derive(Debug, Clone)]
pub struct CartanDecomposition {
    pub left: Matrix,
    pub sigma: Vec<f64>,
    pub right: Matrix,
}

impl CartanDecomposition {
    pub fn reconstruct(&self) -> Matrix {
        self.left
            .mul(&Matrix::diagonal(&self.sigma))
            .mul(&self.right.transpose())
    }
}

/// Cartan decomposition with the default tolerances.
pub fn cartan(g: &GroupElement) -> Result<CartanDecomposition> {
    cartan_with(g, DEFAULT_SVD_TOLERANCE, DEFAULT_MAX_SWEEPS)
}

/// Cartan decomposition assembled from the SVDs of `g` and `g⁻¹`.
///
/// Singular value i is taken from `g` when σᵢ² ≥ σ₁σ_d (its relative error
/// there is ε·σ₁/σᵢ) and otherwise from `g⁻¹` (relative error ε·σᵢ/σ_d).
/// The split is reliable while σ₁/σ_d stays below 1/ε².
/// The matching singular vectors follow the same split and the trailing block
/// is re-orthogonalized against the leading one.
pub fn cartan_with(g: &GroupElement, tol: f64, max_sweeps: usize) -> Result<CartanDecomposition> {
    let d = g.dim();
    let direct = svd(&g.matrix, tol, max_sweeps)?;
    let inv = svd(&g.inverse, tol, max_sweeps)?;

    let top = direct.sigma[0];
    let bottom = 1.0 / inv.sigma[0];
    let split = if top / bottom < 1e8 {
        d
    } else {
        (0..d)
            .take_while(|&i| {
                // both estimates must clear the geometric mean: noise only
                // inflates direct small values and deflates inverse-derived
                // large ones
                let from_inverse = 1.0 / inv.sigma[d - 1 - i];
                let est = direct.sigma[i].min(from_inverse);
                i == 0 || est * est >= top * bottom
            })
            .count()
            .max(1)
    };

    let mut sigma = Vec::with_capacity(d);
    let mut left_cols = Vec::with_capacity(d);
    let mut right_cols = Vec::with_capacity(d);
    for i in 0..split {
        sigma.push(direct.sigma[i]);
        left_cols.push(direct.u.column(i));
        right_cols.push(direct.v.column(i));
    }
    let mut tail_left = Vec::new();
    let mut tail_right = Vec::new();
    for i in split..d {
        let j = d - 1 - i;
        sigma.push(1.0 / inv.sigma[j]);
        // g⁻¹ = U' Σ' V'ᵀ  ⇒  g·u'_j = v'_j / σ'_j
        tail_left.push(inv.v.column(j));
        tail_right.push(inv.u.column(j));
    }
    if !tail_left.is_empty() {
        left_cols.extend(orthonormalize(tail_left, &left_cols.clone()));
        right_cols.extend(orthonormalize(tail_right, &right_cols.clone()));
    }
    // keep the order nonincreasing if the two sources disagree at the seam
    for i in 1..d {
        if sigma[i] > sigma[i - 1] {
            sigma[i] = sigma[i - 1];
        }
    }

    // sign convention: first significant entry of each left vector is >= 0
    for (lc, rc) in left_cols.iter_mut().zip(right_cols.iter_mut()) {
        let scale = lc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = lc.iter().find(|x| x.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                lc.iter_mut().for_each(|x| *x = -*x);
                rc.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }

    Ok(CartanDecomposition {
        left: Matrix::from_columns(&left_cols),
        sigma,
        right: Matrix::from_columns(&right_cols),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        let err = a.sub(b).max_abs();
        assert!(err <= tol, "difference {err:e} exceeds {tol:e}: {a:?} vs {b:?}");
    }

    #[test]
    fn identity_is_already_unimodular() {
        let g = GroupElement::new(Matrix::identity(2)).unwrap();
        assert_close(g.matrix(), &Matrix::identity(2), 0.0);
    }

    #[test]
    fn scalar_matrix_normalizes_to_identity() {
        let g = GroupElement::diagonal(&[2.0, 2.0]).unwrap();
        assert_close(g.matrix(), &Matrix::identity(2), 1e-15);
    }

    #[test]
    fn rescale_by_root_of_determinant() {
        let g = GroupElement::diagonal(&[3.0, 1.0]).unwrap();
        let s = 3f64.sqrt();
        assert_close(g.matrix(), &Matrix::diagonal(&[s, 1.0 / s]), 1e-15);
        assert!((g.determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_and_nonsquare_inputs_rejected() {
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            GroupElement::new(sing),
            Err(Error::SingularMatrix { .. })
        ));
        let rect = Matrix::zeros(2, 3);
        assert!(matches!(
            GroupElement::new(rect),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tiny_entries_are_rescaled_before_the_singularity_test() {
        let g = GroupElement::diagonal(&[1e-8, 1e-8]).unwrap();
        assert_close(g.matrix(), &Matrix::identity(2), 1e-15);
    }

    #[test]
    fn negative_determinant_keeps_sign() {
        let g = GroupElement::diagonal(&[-4.0, 1.0]).unwrap();
        assert!((g.determinant() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn composition_examples() {
        let g = GroupElement::diagonal(&[2.0, 0.5]).unwrap();
        let id = GroupElement::identity(2);
        assert_close(g.compose(&id).unwrap().matrix(), g.matrix(), 0.0);
        assert_close(
            g.compose(&g.inverse()).unwrap().matrix(),
            &Matrix::identity(2),
            1e-9,
        );
        assert_close(
            g.compose(&g).unwrap().matrix(),
            &Matrix::diagonal(&[4.0, 0.25]),
            1e-15,
        );
        assert!(matches!(
            g.compose(&GroupElement::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        let id = GroupElement::identity(3);
        assert_close(id.inverse().matrix(), &Matrix::identity(3), 0.0);
        let g = GroupElement::diagonal(&[2.0, 0.5]).unwrap();
        assert_close(g.inverse().matrix(), &Matrix::diagonal(&[0.5, 2.0]), 1e-15);
    }

    #[test]
    fn powers() {
        let g = GroupElement::diagonal(&[3.0, 1.0 / 3.0]).unwrap();
        assert_close(g.pow(3).matrix(), &Matrix::diagonal(&[27.0, 1.0 / 27.0]), 1e-12);
        assert_close(g.pow(-2).matrix(), &Matrix::diagonal(&[1.0 / 9.0, 9.0]), 1e-12);
        assert_close(g.pow(0).matrix(), &Matrix::identity(2), 0.0);
    }

    #[test]
    fn cartan_of_identity() {
        let c = cartan(&GroupElement::identity(3)).unwrap();
        assert_eq!(c.sigma, vec![1.0; 3]);
        assert_close(&c.left, &Matrix::identity(3), 0.0);
        assert_close(&c.right, &Matrix::identity(3), 0.0);
    }

    #[test]
    fn cartan_of_sorted_diagonal() {
        let g = GroupElement::diagonal(&[3.0, 1.0 / 3.0]).unwrap();
        let c = cartan(&g).unwrap();
        assert!((c.sigma[0] - 3.0).abs() < 1e-15);
        assert!((c.sigma[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_close(&c.left, &Matrix::identity(2), 1e-15);
        assert_close(&c.right, &Matrix::identity(2), 1e-15);
    }

    #[test]
    fn small_singular_values_of_long_products_come_from_the_inverse() {
        let g = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let r = GroupElement::rotation(2, 0.7);
        let h = g.conjugate_by(&r).unwrap().pow(20);
        let c = cartan(&h).unwrap();
        let expected = 9f64.powi(20);
        assert!((c.sigma[0] / expected - 1.0).abs() < 1e-10);
        assert!((c.sigma[1] * expected - 1.0).abs() < 1e-10, "{:?} {:?}", c.sigma, h.inverse_matrix());
    }
}
