//! Regular-simplex direction sets.
//!
//! The `n + 1` centred vertices `e_i - 1/(n+1)` of the standard simplex live
//! on the hyperplane `sum(x) = 0` of `R^{n+1}`. Projecting them onto an
//! orthonormal basis of that hyperplane gives `n + 1` equal-norm vectors in
//! `R^n` with pairwise normalized dot product `-1/n`.
//!
//! The lifted matrix `I - 11^T/(n+1)` is symmetric, so its singular vectors
//! coincide with its eigenvectors. The basis is taken from the symmetric
//! eigendecomposition, ordered by descending eigenvalue, with the single zero
//! mode dropped.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Singular values at or below this are treated as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Entries with magnitude at or below this are skipped by the sign convention.
const SIGN_EPS: f64 = 1e-12;

/// How the simplex directions of one scale are oriented in space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionMode {
    /// Canonical orientation from the projection basis.
    #[default]
    Fixed,
    /// Canonical orientation followed by a seeded rotation.
    Random,
}

impl FromStr for DirectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "random" => Ok(Self::Random),
            other => Err(Error::Unknown {
                kind: "direction mode",
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for DirectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fixed => "fixed",
            Self::Random => "random",
        })
    }
}

/// Vertices of a centred regular simplex, before and after projection to `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexFrame {
    dim: usize,
    raw_vertices: DMatrix<f64>,
    projected: Option<DMatrix<f64>>,
    projection_basis: Option<DMatrix<f64>>,
    singular_values: Option<DVector<f64>>,
}

impl SimplexFrame {
    /// Builds and projects the frame for dimension `n`.
    pub fn new(n: usize) -> Result<Self> {
        Ok(project_to_hyperplane(standard_simplex_vertices(n)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(n+1) x (n+1)`; row `i` is `e_i - 1/(n+1)`.
    pub fn raw_vertices(&self) -> &DMatrix<f64> {
        &self.raw_vertices
    }

    /// `(n+1) x n` projected vertices, once [`project_to_hyperplane`] has run.
    pub fn projected(&self) -> Option<&DMatrix<f64>> {
        self.projected.as_ref()
    }

    /// `(n+1) x n` orthonormal columns spanning the hyperplane.
    pub fn projection_basis(&self) -> Option<&DMatrix<f64>> {
        self.projection_basis.as_ref()
    }

    /// All `n + 1` singular values of the lifted matrix, descending.
    pub fn singular_values(&self) -> Option<&DVector<f64>> {
        self.singular_values.as_ref()
    }
}

/// Centred standard-simplex vertices `e_i - (1, ..., 1)/(n+1)` in `R^{n+1}`.
pub fn standard_simplex_vertices(n: usize) -> Result<SimplexFrame> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    let size = n + 1;
    let offset = 1.0 / size as f64;
    let raw = DMatrix::from_fn(size, size, |r, c| {
        if r == c {
            1.0 - offset
        } else {
            -offset
        }
    });
    Ok(SimplexFrame {
        dim: n,
        raw_vertices: raw,
        projected: None,
        projection_basis: None,
        singular_values: None,
    })
}

/// Projects the lifted vertices onto the `n` non-null singular directions.
///
/// Panics if the factorization yields fewer than `n` singular values above
/// [`RANK_THRESHOLD`]; that cannot happen for a frame built by
/// [`standard_simplex_vertices`].
pub fn project_to_hyperplane(frame: SimplexFrame) -> SimplexFrame {
    let n = frame.dim;
    let eig = SymmetricEigen::new(frame.raw_vertices.clone());

    let mut order: Vec<usize> = (0..=n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let singular = DVector::from_iterator(n + 1, order.iter().map(|&i| eig.eigenvalues[i].abs()));
    assert!(
        singular[n - 1] > RANK_THRESHOLD && singular[n] < RANK_THRESHOLD,
        "degenerate simplex factorization: singular values {:?}",
        singular.as_slice()
    );

    let mut basis = DMatrix::<f64>::zeros(n + 1, n);
    for (col, &src) in order.iter().take(n).enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        if first_significant(v.iter()) < 0.0 {
            v.neg_mut();
        }
        basis.set_column(col, &v);
    }

    let projected = &frame.raw_vertices * &basis;
    SimplexFrame {
        projected: Some(projected),
        projection_basis: Some(basis),
        singular_values: Some(singular),
        ..frame
    }
}

/// Unit-norm simplex directions, one per row, oriented according to `mode`.
///
/// In `Fixed` mode the projected rows are normalized and the whole set is
/// negated if needed so the first significant entry of row 0 is positive.
/// In `Random` mode those rows are then right-multiplied by
/// [`rng::random_rotation`] drawn from `seed`.
pub fn oriented_directions(frame: &SimplexFrame, mode: DirectionMode, seed: u64) -> Result<DMatrix<f64>> {
    let projected = frame
        .projected()
        .ok_or_else(|| invalid("frame", "projection has not been computed"))?;

    let mut dirs = projected.clone();
    for mut row in dirs.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    if first_significant(dirs.row(0).iter()) < 0.0 {
        dirs.neg_mut();
    }

    match mode {
        DirectionMode::Fixed => Ok(dirs),
        DirectionMode::Random => {
            let rotation = rng::random_rotation(frame.dim, &mut rng::seeded(seed));
            Ok(dirs * rotation)
        }
    }
}

/// `m * m^T`.
pub fn gram(m: &DMatrix<f64>) -> DMatrix<f64> {
    m * m.transpose()
}

fn first_significant<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    values.copied().find(|v| v.abs() > SIGN_EPS).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairwise_normalized_dots(m: &DMatrix<f64>) -> Vec<f64> {
        let g = gram(m);
        let mut out = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.nrows() {
                if i != j {
                    out.push(g[(i, j)] / g[(i, i)]);
                }
            }
        }
        out
    }

    #[test]
    fn rejects_zero_dimension() {
        assert_eq!(standard_simplex_vertices(0), Err(Error::InvalidDimension(0)));
    }

    #[test]
    fn one_dimensional_vertices() {
        let f = standard_simplex_vertices(1).unwrap();
        let raw = f.raw_vertices();
        assert_eq!(raw.row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, -0.5]);
        assert_eq!(raw.row(1).iter().copied().collect::<Vec<_>>(), vec![-0.5, 0.5]);
    }

    #[test]
    fn two_dimensional_vertices_have_expected_norm() {
        let f = standard_simplex_vertices(2).unwrap();
        for row in f.raw_vertices().row_iter() {
            assert!(row.sum().abs() < 1e-15);
            assert!((row.norm() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn three_dimensional_vertices_pairwise_dots() {
        let f = standard_simplex_vertices(3).unwrap();
        for d in pairwise_normalized_dots(f.raw_vertices()) {
            assert!((d + 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_of_segment_is_antipodal() {
        let f = SimplexFrame::new(1).unwrap();
        let p = f.projected().unwrap();
        assert_eq!(p.shape(), (2, 1));
        let h = 1.0 / 2f64.sqrt();
        assert!((p[(0, 0)].abs() - h).abs() < 1e-15);
        assert!((p[(0, 0)] + p[(1, 0)]).abs() < 1e-15);
    }

    #[test]
    fn planar_projection_has_120_degree_angles() {
        let f = SimplexFrame::new(2).unwrap();
        let p = f.projected().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let cos = p.row(i).dot(&p.row(j)) / (p.row(i).norm() * p.row(j).norm());
                    assert!((cos.acos().to_degrees() - 120.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn projected_gram_matches_closed_form() {
        for n in 1..=8 {
            let f = SimplexFrame::new(n).unwrap();
            let g = gram(f.projected().unwrap());
            let expected = DMatrix::from_fn(n + 1, n + 1, |r, c| {
                if r == c {
                    1.0 - 1.0 / (n + 1) as f64
                } else {
                    -1.0 / (n + 1) as f64
                }
            });
            assert!((g - expected).abs().max() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn basis_columns_are_orthonormal_and_sign_fixed() {
        for n in 1..=6 {
            let f = SimplexFrame::new(n).unwrap();
            let b = f.projection_basis().unwrap();
            let btb = b.transpose() * b;
            assert!((btb - DMatrix::identity(n, n)).abs().max() < 1e-12);
            for c in b.column_iter() {
                assert!(first_significant(c.iter()) > 0.0);
                assert!(c.sum().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_directions_are_unit_with_dot_minus_half() {
        let f = SimplexFrame::new(2).unwrap();
        let d = oriented_directions(&f, DirectionMode::Fixed, 0).unwrap();
        for row in d.row_iter() {
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
        for v in pairwise_normalized_dots(&d) {
            assert!((v + 0.5).abs() < 1e-12);
        }
        assert!(first_significant(d.row(0).iter()) > 0.0);
    }

    #[test]
    fn random_directions_are_deterministic_and_preserve_gram() {
        let f = SimplexFrame::new(3).unwrap();
        let fixed = oriented_directions(&f, DirectionMode::Fixed, 0).unwrap();
        let a = oriented_directions(&f, DirectionMode::Random, 11).unwrap();
        let b = oriented_directions(&f, DirectionMode::Random, 11).unwrap();
        assert_eq!(a, b);
        assert!((gram(&a) - gram(&fixed)).abs().max() < 1e-12);
        assert!((&a - &fixed).abs().max() > 1e-3);
    }

    #[test]
    fn unprojected_frame_is_rejected() {
        let f = standard_simplex_vertices(2).unwrap();
        assert!(oriented_directions(&f, DirectionMode::Fixed, 0).is_err());
    }

    #[test]
    fn direction_mode_parsing() {
        assert_eq!("fixed".parse::<DirectionMode>().unwrap(), DirectionMode::Fixed);
        assert_eq!("random".parse::<DirectionMode>().unwrap(), DirectionMode::Random);
        assert!("spiral".parse::<DirectionMode>().is_err());
    }
}
