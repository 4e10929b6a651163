use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::BoxWindow;

/// Largest boundary fraction allowed at the last radius for K-radius 1.
pub const MAX_BOUNDARY_FRACTION: f64 = 0.05;

/// Centered half-open cubes `A_m = c + [−L_m, L_m)^d`, optionally carried
/// through a linear map `T` (then the regions are `T(A_m)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanHoveSequence {
    dim: usize,
    center: Vec<f64>,
    radii: Vec<f64>,
    /// Row-major `d × d` linear map applied to every region.
    transform: Option<Vec<Vec<f64>>>,
}

impl VanHoveSequence {
    pub fn new(dim: usize, radii: Vec<f64>) -> Result<Self> {
        Self::centered(vec![0.0; dim], radii)
    }

    pub fn centered(center: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        let dim = center.len();
        if dim == 0 {
            return Err(Error::InvalidVanHove("dimension must be positive".into()));
        }
        if radii.is_empty() {
            return Err(Error::InvalidVanHove("no radii".into()));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidVanHove("radii must be positive and finite".into()));
        }
        let fractions: Vec<f64> = radii.iter().map(|&l| boundary_fraction(dim, l, 1.0)).collect();
        if radii.windows(2).any(|w| !(w[0] < w[1]))
            || fractions.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(Error::InvalidVanHove(
                "radii must increase so boundary fractions decrease".into(),
            ));
        }
        let last = *fractions.last().unwrap();
        if last >= MAX_BOUNDARY_FRACTION {
            return Err(Error::InvalidVanHove(format!(
                "boundary fraction {last} at the largest radius is not below {MAX_BOUNDARY_FRACTION}"
            )));
        }
        Ok(VanHoveSequence {
            dim,
            center,
            radii,
            transform: None,
        })
    }

    /// The image sequence `T(A_m)`.
    pub fn transformed(&self, t: &[Vec<f64>]) -> Result<Self> {
        if t.len() != self.dim || t.iter().any(|r| r.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: t.len(),
            });
        }
        let composed = match &self.transform {
            None => t.to_vec(),
            Some(s) => {
                let (a, b) = (to_matrix(t), to_matrix(s));
                let c = a * b;
                (0..self.dim)
                    .map(|r| (0..self.dim).map(|k| c[(r, k)]).collect())
                    .collect()
            }
        };
        let m = to_matrix(&composed);
        if m.determinant() == 0.0 || m.try_inverse().is_none() {
            return Err(Error::InvalidVanHove("transform is singular".into()));
        }
        Ok(VanHoveSequence {
            transform: Some(composed),
            ..self.clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn transform(&self) -> Option<&[Vec<f64>]> {
        self.transform.as_deref()
    }

    /// The first `m` terms.
    pub fn truncated(&self, m: usize) -> Self {
        VanHoveSequence {
            radii: self.radii[..m.clamp(1, self.radii.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn region(&self, m: usize) -> Region {
        let l = self.radii[m];
        let untransformed = BoxWindow::cube(&self.center, l);
        match &self.transform {
            None => Region {
                cube: untransformed,
                map: None,
            },
            Some(t) => {
                let mat = to_matrix(t);
                let inv = mat.clone().try_inverse().expect("checked at construction");
                Region {
                    cube: untransformed,
                    map: Some((mat, inv)),
                }
            }
        }
    }

    pub fn regions(&self) -> impl Iterator<Item = Region> + '_ {
        (0..self.len()).map(|m| self.region(m))
    }

    pub fn boundary_fraction(&self, m: usize, k_radius: f64) -> f64 {
        boundary_fraction(self.dim, self.radii[m], k_radius)
    }
}

/// Relative volume of the zone within `ρ` of the boundary of `[−L, L]^d`.
pub fn boundary_fraction(dim: usize, l: f64, rho: f64) -> f64 {
    let d = dim as i32;
    let outer = (2.0 * l + 2.0 * rho).powi(d);
    let inner = (2.0 * l - 2.0 * rho).max(0.0).powi(d);
    (outer - inner) / (2.0 * l).powi(d)
}

fn to_matrix(t: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(t.len(), t.len(), |r, c| t[r][c])
}

/// One averaging region: a half-open cube, or its image under a linear map.
#[derive(Clone, Debug)]
pub struct Region {
    cube: BoxWindow,
    map: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl Region {
    pub fn dim(&self) -> usize {
        self.cube.dim()
    }

    fn pull_back(&self, x: &[f64]) -> Vec<f64> {
        match &self.map {
            None => x.to_vec(),
            Some((_, inv)) => (0..x.len())
                .map(|r| (0..x.len()).map(|k| inv[(r, k)] * x[k]).sum())
                .collect(),
        }
    }

    /// Membership in the half-open region.
    pub fn contains(&self, x: &[f64]) -> bool {
        let y = self.pull_back(x);
        y.iter()
            .zip(self.cube.lo().iter().zip(self.cube.hi()))
            .all(|(v, (a, b))| *a <= *v && *v < *b)
    }

    pub fn volume(&self) -> f64 {
        let v = self.cube.volume();
        match &self.map {
            None => v,
            Some((m, _)) => v * m.determinant().abs(),
        }
    }

    /// Closed axis-aligned box containing the region.
    pub fn bounding_box(&self) -> BoxWindow {
        let corners = self.corners();
        BoxWindow::bounding(self.dim(), corners.iter().map(Vec::as_slice))
    }

    fn corners(&self) -> Vec<Vec<f64>> {
        let c = self.cube.corners();
        match &self.map {
            None => c,
            Some((m, _)) => c
                .iter()
                .map(|x| {
                    (0..x.len())
                        .map(|r| (0..x.len()).map(|k| m[(r, k)] * x[k]).sum())
                        .collect()
                })
                .collect(),
        }
    }

    /// Euclidean distance from `x` to the closed region (0 inside).
    pub fn distance_to(&self, x: &[f64]) -> Result<f64> {
        match self.dim() {
            1 => {
                let c = self.corners();
                let (lo, hi) = (c[0][0].min(c[1][0]), c[0][0].max(c[1][0]));
                Ok((lo - x[0]).max(x[0] - hi).max(0.0))
            }
            2 => {
                let y = self.pull_back(x);
                let inside = y
                    .iter()
                    .zip(self.cube.lo().iter().zip(self.cube.hi()))
                    .all(|(v, (a, b))| *a <= *v && *v <= *b);
                if inside {
                    return Ok(0.0);
                }
                // corners in cyclic order: (lo,lo), (hi,lo), (hi,hi), (lo,hi)
                let c = self.corners();
                let ring = [&c[0], &c[1], &c[3], &c[2]];
                let mut best = f64::INFINITY;
                for k in 0..4 {
                    best = best.min(segment_distance(x, ring[k], ring[(k + 1) % 4]));
                }
                Ok(best)
            }
            d => Err(Error::Unsupported(format!(
                "region distance in dimension {d}"
            ))),
        }
    }

    /// Closed box around the points within `margin` of the region.
    pub fn expanded_box(&self, margin: f64) -> BoxWindow {
        self.bounding_box().expand(margin)
    }
}

fn segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (px, py) = (a[0] + t * dx, a[1] + t * dy);
    (x[0] - px).hypot(x[1] - py)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_fraction_in_one_dimension() {
        assert!((boundary_fraction(1, 100.0, 1.0) - 0.02).abs() < 1e-15);
        assert!((boundary_fraction(1, 50.0, 1.0) - 4.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn constructor_rejects_bad_radii() {
        assert!(VanHoveSequence::new(1, vec![100.0, 50.0]).is_err());
        assert!(VanHoveSequence::new(1, vec![100.0, 100.0]).is_err());
        assert!(VanHoveSequence::new(1, vec![10.0, 40.0]).is_err());
        assert!(VanHoveSequence::new(1, vec![10.0, 100.0]).is_ok());
    }

    #[test]
    fn half_open_membership() {
        let s = VanHoveSequence::new(1, vec![100.0]).unwrap();
        let r = s.region(0);
        assert!(r.contains(&[-100.0]));
        assert!(!r.contains(&[100.0]));
        assert_eq!(r.volume(), 200.0);
    }

    #[test]
    fn transformed_regions() {
        let s = VanHoveSequence::new(1, vec![100.0]).unwrap();
        let t = s.transformed(&[vec![-2.0]]).unwrap();
        let r = t.region(0);
        assert_eq!(r.volume(), 400.0);
        assert!(r.contains(&[150.0]));
        assert!(!r.contains(&[-200.0]));
        assert!((r.distance_to(&[210.0]).unwrap() - 10.0).abs() < 1e-12);

        let s = VanHoveSequence::new(2, vec![100.0]).unwrap();
        let shear = s.transformed(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let r = shear.region(0);
        assert!((r.volume() - 40_000.0).abs() < 1e-9);
        assert!(r.contains(&[150.0, 90.0]));
        assert_eq!(r.distance_to(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((r.distance_to(&[0.0, 110.0]).unwrap() - 10.0).abs() < 1e-9);
        let b = r.bounding_box();
        assert_eq!(b.lo(), &[-200.0, -100.0]);
    }
}
