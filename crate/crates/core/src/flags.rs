//! Partial flag manifolds of ℝ^d.
//!
//! A flag of type Θ ⊂ {1, …, d−1} is a nested family of subspaces V_i,
//! i ∈ Θ. Points are stored as orthonormal frames whose first i columns span
//! V_i; the frame is a representative only, so flags compare through
//! [`flag_distance`], never through their entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cartan, orthonormalize, smallest_singular_value, spectral_norm, GroupElement, Matrix};

/// Relative gap σ_i/σ_{i+1} below which attractors are considered undefined.
const MIN_GAP_RATIO: f64 = 1.0 + 1e-9;

/// The opposition involution on dimension sets: i ↦ d − i.
pub fn iota(dim: usize, dims: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = dims.iter().map(|i| dim - i).collect();
    out.sort_unstable();
    out
}

/// An ι-invariant set of subspace dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFlagType", into = "RawFlagType")]
pub struct FlagType {
    dim: usize,
    dims: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawFlagType {
    dim: usize,
    dims: Vec<usize>,
}

impl TryFrom<RawFlagType> for FlagType {
    type Error = Error;

    fn try_from(raw: RawFlagType) -> Result<Self> {
        FlagType::new(raw.dim, raw.dims)
    }
}

impl From<FlagType> for RawFlagType {
    fn from(t: FlagType) -> Self {
        RawFlagType {
            dim: t.dim,
            dims: t.dims,
        }
    }
}

impl FlagType {
    pub fn new(dim: usize, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidFlagType("empty dimension set".into()));
        }
        if dims.iter().any(|&i| i == 0 || i >= dim) {
            return Err(Error::InvalidFlagType(format!(
                "dimensions {dims:?} must lie in [1, {}]",
                dim.saturating_sub(1)
            )));
        }
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFlagType(format!(
                "dimensions {dims:?} must be strictly increasing"
            )));
        }
        if iota(dim, &dims) != dims {
            return Err(Error::InvalidFlagType(format!(
                "{dims:?} is not invariant under i -> {dim} - i"
            )));
        }
        Ok(Self { dim, dims })
    }

    /// Full flags {1, …, d−1}.
    pub fn full(dim: usize) -> Result<Self> {
        Self::new(dim, (1..dim).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn iota(&self) -> FlagType {
        FlagType {
            dim: self.dim,
            dims: iota(self.dim, &self.dims),
        }
    }

    pub fn is_face_of(&self, finer: &FlagType) -> bool {
        self.dim == finer.dim && self.dims.iter().all(|i| finer.dims.contains(i))
    }

    /// Number of free coordinates of the big-cell chart, i.e. the manifold
    /// dimension.
    pub fn manifold_dim(&self) -> usize {
        let mut bounds = vec![0];
        bounds.extend(&self.dims);
        bounds.push(self.dim);
        let sizes: Vec<usize> = bounds.windows(2).map(|w| w[1] - w[0]).collect();
        let total: usize = sizes.iter().sum();
        let diag: usize = sizes.iter().map(|s| s * s).sum();
        (total * total - diag) / 2
    }
}

/// A point of Flag(Θ), carried as an orthonormal frame.
#[derive(Debug, Clone)]
pub struct Flag {
    flag_type: FlagType,
    frame: Matrix,
}

impl Flag {
    /// Wraps an orthonormal frame; rejects frames off orthonormality by more
    /// than 1e-9.
    pub fn new(flag_type: FlagType, frame: Matrix) -> Result<Self> {
        let d = flag_type.dim();
        if frame.rows() != d || frame.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: frame.rows().max(frame.cols()),
            });
        }
        let err = frame.tr_mul(&frame).sub(&Matrix::identity(d)).max_abs();
        if err > 1e-9 || !err.is_finite() {
            return Err(Error::Invalid(format!(
                "frame is not orthonormal (deviation {err:e})"
            )));
        }
        Ok(Self { flag_type, frame })
    }

    /// Orthonormalizes the given spanning columns left to right; missing
    /// trailing columns are completed arbitrarily.
    pub fn from_spanning(flag_type: FlagType, columns: &Matrix) -> Result<Self> {
        let d = flag_type.dim();
        if columns.rows() != d || columns.cols() > d || columns.cols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: columns.rows(),
            });
        }
        let needed = *flag_type.dims().last().unwrap();
        if columns.cols() < needed {
            return Err(Error::Invalid(format!(
                "need at least {needed} spanning columns, got {}",
                columns.cols()
            )));
        }
        let mut cols: Vec<Vec<f64>> = (0..columns.cols()).map(|j| columns.column(j)).collect();
        cols.resize(d, vec![0.0; d]);
        let q = orthonormalize(cols, &[]);
        Ok(Self {
            flag_type,
            frame: Matrix::from_columns(&q),
        })
    }

    /// The flag of the standard basis e₁, …, e_d.
    pub fn standard(flag_type: FlagType) -> Self {
        let d = flag_type.dim();
        Self {
            flag_type,
            frame: Matrix::identity(d),
        }
    }

    /// The line through `(cos θ, sin θ)` in ℝ².
    pub fn line_at_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let frame = Matrix::from_rows(&[vec![c, -s], vec![s, c]]).expect("2x2");
        Self {
            flag_type: FlagType::new(2, vec![1]).expect("valid"),
            frame,
        }
    }

    pub fn flag_type(&self) -> &FlagType {
        &self.flag_type
    }

    pub fn dim(&self) -> usize {
        self.flag_type.dim()
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    /// Orthonormal basis (d×i) of the dimension-i subspace.
    pub fn subspace(&self, i: usize) -> Matrix {
        self.frame.columns(0, i)
    }

    /// Unit vector spanning the first frame direction, the smallest subspace
    /// when it is a line.
    pub fn leading_vector(&self) -> Vec<f64> {
        self.frame.column(0)
    }

    pub(crate) fn with_frame(&self, frame: Matrix) -> Flag {
        Flag {
            flag_type: self.flag_type.clone(),
            frame,
        }
    }
}

fn check_types(a: &FlagType, b: &FlagType) -> Result<()> {
    if a != b {
        return Err(Error::TypeMismatch {
            left: a.dims().to_vec(),
            right: b.dims().to_vec(),
        });
    }
    Ok(())
}

/// Image g·f.
///
/// The leading ⌊d/2⌋ frame columns come from g·frame orthonormalized left to
/// right; the trailing ones span the orthogonal complements (g V_i)^⊥ =
/// g^{-T} V_i^⊥ and are orthonormalized right to left. Each half therefore
/// stays accurate even when g is extremely ill-conditioned.
pub fn act(g: &GroupElement, f: &Flag) -> Result<Flag> {
    let d = f.dim();
    if g.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: g.dim(),
        });
    }
    let k = d / 2;
    let forward = g.matrix().mul(f.frame());
    let lead: Vec<Vec<f64>> = (0..k).map(|j| forward.column(j)).collect();
    let lead = orthonormalize(lead, &[]);

    // g^{-T} · frame, trailing columns processed from the right
    let backward = g.inverse_matrix().tr_mul(f.frame());
    let trail: Vec<Vec<f64>> = (k..d).rev().map(|j| backward.column(j)).collect();
    let mut trail = orthonormalize(trail, &lead);
    trail.reverse();

    let mut cols = lead;
    cols.extend(trail);
    Ok(f.with_frame(Matrix::from_columns(&cols)))
}

/// Largest principal angle between span(a[:, :i]) and span(b[:, :i]) for
/// orthonormal d×d frames, computed from both the sine and cosine blocks.
pub(crate) fn subspace_angle(a: &Matrix, b: &Matrix, i: usize) -> f64 {
    let d = a.rows();
    if i == 0 || i == d {
        return 0.0;
    }
    let sin = spectral_norm(&a.columns(i, d).tr_mul(&b.columns(0, i))).min(1.0);
    let cos = smallest_singular_value(&a.columns(0, i).tr_mul(&b.columns(0, i))).min(1.0);
    sin.atan2(cos)
}

/// Maximum over i ∈ Θ of the largest principal angle between the
/// dimension-i subspaces; a metric with values in [0, π/2].
pub fn flag_distance(f1: &Flag, f2: &Flag) -> Result<f64> {
    check_types(f1.flag_type(), f2.flag_type())?;
    Ok(f1
        .flag_type()
        .dims()
        .iter()
        .map(|&i| subspace_angle(f1.frame(), f2.frame(), i))
        .fold(0.0, f64::max))
}

/// Outcome of an antipodality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antipodality {
    pub antipodal: bool,
    pub margin: f64,
}

/// Smallest singular value of [V_i(f1) | V_{d−i}(f2)], minimized over i ∈ Θ
/// and over both orderings of the pair.
pub fn antipodality_margin(f1: &Flag, f2: &Flag) -> Result<f64> {
    check_types(f1.flag_type(), f2.flag_type())?;
    let d = f1.dim();
    let mut margin = f64::INFINITY;
    for &i in f1.flag_type().dims() {
        for (x, y) in [(f1, f2), (f2, f1)] {
            let mut cols: Vec<Vec<f64>> = (0..i).map(|j| x.frame().column(j)).collect();
            cols.extend((0..d - i).map(|j| y.frame().column(j)));
            margin = margin.min(smallest_singular_value(&Matrix::from_columns(&cols)));
        }
    }
    Ok(margin)
}

/// Transversality test: antipodal iff the margin exceeds `tol`.
pub fn antipodal(f1: &Flag, f2: &Flag, tol: f64) -> Result<Antipodality> {
    let margin = antipodality_margin(f1, f2)?;
    Ok(Antipodality {
        antipodal: margin > tol,
        margin,
    })
}

/// min over i ∈ Θ of log(σ_i/σ_{i+1}).
pub fn regularity_gap(g: &GroupElement, t: &FlagType) -> f64 {
    match cartan(g) {
        Ok(c) => t
            .dims()
            .iter()
            .map(|&i| (c.sigma[i - 1] / c.sigma[i]).ln().max(0.0))
            .fold(f64::INFINITY, f64::min),
        Err(_) => 0.0,
    }
}

fn check_gap(sigma: &[f64], t: &FlagType) -> Result<()> {
    for &i in t.dims() {
        let ratio = sigma[i - 1] / sigma[i];
        if !(ratio > MIN_GAP_RATIO) {
            return Err(Error::DegenerateGap {
                index: i,
                detail: format!("sigma_{i}/sigma_{} = {ratio}", i + 1),
            });
        }
    }
    Ok(())
}

/// The Cartan attracting flag: V_i spanned by the top i left singular
/// vectors of g. Sequences flag-converge when these flags converge.
pub fn cartan_flag(g: &GroupElement, t: &FlagType) -> Result<Flag> {
    if g.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: g.dim(),
        });
    }
    let c = cartan(g)?;
    check_gap(&c.sigma, t)?;
    Flag::new(t.clone(), c.left)
}

/// The attracting fixed flag of g, the limit of gⁿ·f for f antipodal to the
/// repelling flag.
///
/// Starts from the Cartan flag of g and applies g^(2^k) for k = 0, 1, …
/// until the iterate stops moving. For symmetric g the Cartan flag is
/// already fixed and the loop exits immediately.
pub fn attracting_flag(g: &GroupElement, t: &FlagType) -> Result<Flag> {
    let mut f = cartan_flag(g, t)?;
    let mut power = g.clone();
    let mut last_step = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..400 {
        let next = act(&power, &f)?;
        let step = flag_distance(&next, &f)?;
        f = next;
        if step <= 1e-15 {
            break;
        }
        if step >= last_step * 0.5 && step < 1e-11 {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        }
        last_step = step;
        // g·frame loses the lower singular directions once the spread of the
        // power passes 1/ε, so stop squaring well before that
        if power.matrix().max_abs() * power.inverse_matrix().max_abs() < 1e6 {
            power = power.compose(&power)?;
        }
    }
    let residual = flag_distance(&act(g, &f)?, &f)?;
    if residual > 1e-9 {
        return Err(Error::DegenerateGap {
            index: t.dims()[0],
            detail: format!("powers do not converge to a fixed flag (residual {residual:e})"),
        });
    }
    Ok(f)
}

/// Forgets the subspaces whose dimensions are not in `coarser`.
pub fn project_flag(f: &Flag, coarser: &FlagType) -> Result<Flag> {
    if !coarser.is_face_of(f.flag_type()) {
        return Err(Error::NotAFace {
            coarser: coarser.dims().to_vec(),
            finer: f.flag_type().dims().to_vec(),
        });
    }
    Ok(Flag {
        flag_type: coarser.clone(),
        frame: f.frame().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn line(angle: f64) -> Flag {
        Flag::line_at_angle(angle)
    }

    #[test]
    fn iota_examples() {
        assert_eq!(iota(3, &[1, 2]), vec![1, 2]);
        assert_eq!(iota(3, &[1]), vec![2]);
        assert_eq!(iota(4, &[2]), vec![2]);
    }

    #[test]
    fn flag_type_validation() {
        assert!(FlagType::new(3, vec![1]).is_err());
        assert!(FlagType::new(3, vec![]).is_err());
        assert!(FlagType::new(3, vec![0, 3]).is_err());
        assert!(FlagType::new(4, vec![3, 1]).is_err());
        assert!(FlagType::new(4, vec![1, 3]).is_ok());
        assert_eq!(FlagType::full(3).unwrap().manifold_dim(), 3);
        assert_eq!(FlagType::new(4, vec![2]).unwrap().manifold_dim(), 4);
    }

    #[test]
    fn flag_type_serde_validates() {
        let ok: FlagType = serde_json::from_str(r#"{"dim":3,"dims":[1,2]}"#).unwrap();
        assert_eq!(ok.dims(), &[1, 2]);
        assert!(serde_json::from_str::<FlagType>(r#"{"dim":3,"dims":[1]}"#).is_err());
    }

    #[test]
    fn act_examples() {
        let f = line(0.3);
        let id = GroupElement::identity(2);
        assert!(flag_distance(&act(&id, &f).unwrap(), &f).unwrap() < 1e-15);

        let diag = GroupElement::diagonal(&[2.0, 0.5]).unwrap();
        let e1 = line(0.0);
        assert!(flag_distance(&act(&diag, &e1).unwrap(), &e1).unwrap() < 1e-15);

        let rot = GroupElement::rotation(2, FRAC_PI_2);
        let e2 = line(FRAC_PI_2);
        assert!(flag_distance(&act(&rot, &e1).unwrap(), &e2).unwrap() < 1e-15);

        assert!(matches!(
            act(&GroupElement::identity(3), &e1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let e1 = line(0.0);
        assert_eq!(flag_distance(&e1, &e1).unwrap(), 0.0);
        assert!((flag_distance(&e1, &line(FRAC_PI_2)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((flag_distance(&e1, &line(FRAC_PI_4)).unwrap() - FRAC_PI_4).abs() < 1e-15);
        let other = Flag::standard(FlagType::full(3).unwrap());
        assert!(matches!(
            flag_distance(&e1, &other),
            Err(Error::TypeMismatch { .. })
        ));
    }

    #[test]
    fn tiny_distances_are_resolved() {
        let d = flag_distance(&line(0.2), &line(0.2 + 1e-13)).unwrap();
        assert!((d - 1e-13).abs() < 1e-15, "{d:e}");
    }

    #[test]
    fn antipodal_examples() {
        let e1 = line(0.0);
        let a = antipodal(&e1, &line(FRAC_PI_2), 1e-6).unwrap();
        assert!(a.antipodal);
        assert!((a.margin - 1.0).abs() < 1e-15);

        let same = antipodal(&e1, &e1, 1e-6).unwrap();
        assert!(!same.antipodal);
        assert!(same.margin < 1e-15);
    }

    #[test]
    fn reversed_full_flag_is_antipodal_by_rank_oracle() {
        let t = FlagType::full(3).unwrap();
        let f = Flag::standard(t.clone());
        let rev = Matrix::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let g = Flag::new(t, rev.clone()).unwrap();
        // rank oracle: [V_i(f) | V_{3-i}(g)] must be invertible for i = 1, 2
        for i in 1..3 {
            let mut cols: Vec<Vec<f64>> = (0..i).map(|j| Matrix::identity(3).column(j)).collect();
            cols.extend((0..3 - i).map(|j| rev.column(j)));
            assert!(Matrix::from_columns(&cols).determinant().abs() > 0.5);
        }
        assert!(antipodal(&f, &g, 1e-6).unwrap().antipodal);
        // but the standard flag is not antipodal to itself
        assert!(!antipodal(&f, &f, 1e-6).unwrap().antipodal);
    }

    #[test]
    fn gap_examples() {
        let t2 = FlagType::full(3).unwrap();
        assert_eq!(regularity_gap(&GroupElement::identity(3), &t2), 0.0);
        let g = GroupElement::diagonal(&[4.0, 1.0, 0.25]).unwrap();
        assert!((regularity_gap(&g, &t2) - 4f64.ln()).abs() < 1e-12);
        let h = GroupElement::diagonal(&[4.0, 2.0, 0.125]).unwrap();
        assert!((regularity_gap(&h, &t2) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn attracting_flag_examples() {
        let t = FlagType::new(2, vec![1]).unwrap();
        let g = GroupElement::diagonal(&[3.0, 1.0 / 3.0]).unwrap();
        let a = attracting_flag(&g, &t).unwrap();
        assert!(flag_distance(&a, &line(0.0)).unwrap() < 1e-15);

        let t3 = FlagType::full(3).unwrap();
        let h = GroupElement::diagonal(&[4.0, 1.0, 0.25]).unwrap();
        let b = attracting_flag(&h, &t3).unwrap();
        assert!(flag_distance(&b, &Flag::standard(t3.clone())).unwrap() < 1e-15);

        assert!(matches!(
            attracting_flag(&GroupElement::identity(2), &t),
            Err(Error::DegenerateGap { .. })
        ));
    }

    #[test]
    fn attracting_flag_of_non_normal_element_is_fixed() {
        let t = FlagType::new(2, vec![1]).unwrap();
        let r = GroupElement::from_rows(&[vec![1.0, 0.8], vec![0.1, 1.0]]).unwrap();
        let g = GroupElement::diagonal(&[2.0, 0.5]).unwrap().conjugate_by(&r).unwrap();
        let a = attracting_flag(&g, &t).unwrap();
        assert!(flag_distance(&act(&g, &a).unwrap(), &a).unwrap() < 1e-12);
        // the eigenline r·e₁
        let expected = act(&r, &line(0.0)).unwrap();
        assert!(flag_distance(&a, &expected).unwrap() < 1e-12);
    }

    #[test]
    fn elliptic_element_has_no_attractor() {
        let t = FlagType::new(2, vec![1]).unwrap();
        let stretch = GroupElement::diagonal(&[1.01, 1.0 / 1.01]).unwrap();
        let g = stretch.compose(&GroupElement::rotation(2, 1.0)).unwrap();
        assert!(matches!(
            attracting_flag(&g, &t),
            Err(Error::DegenerateGap { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let t3 = FlagType::full(3).unwrap();
        let f = Flag::standard(t3.clone());
        let same = project_flag(&f, &t3).unwrap();
        assert_eq!(same.flag_type(), &t3);

        let t4 = FlagType::full(4).unwrap();
        let mid = FlagType::new(4, vec![2]).unwrap();
        let g = Flag::standard(t4);
        let p = project_flag(&g, &mid).unwrap();
        assert_eq!(p.flag_type().dims(), &[2]);

        let line_type = FlagType::new(4, vec![1, 3]).unwrap();
        assert!(matches!(
            project_flag(&p, &line_type),
            Err(Error::NotAFace { .. })
        ));
    }
}
