//! Group homomorphisms `f : [M] → ℝ^{d'}`, their least-squares linear
//! approximation `F`, and the tied/untied classification.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::PointSource;
use crate::group::{BoxWindow, Embedding, ModulePoint, PointPatch};
use crate::index::PointIndex;
use crate::numeric::{norm, CompensatedSum};

/// Positions closer than this count as a collision of `f`.
pub const COLLISION_TOL: f64 = 1e-9;

/// Default threshold on the tiedness index.
pub const DEFAULT_TIE_TOL: f64 = 0.05;

/// A homomorphism given by the images of the module basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZHom {
    /// `images[i]` is `f(e_i) ∈ ℝ^{d'}`.
    images: Vec<Vec<f64>>,
}

impl ZHom {
    pub fn new(images: Vec<Vec<f64>>) -> Result<Self> {
        let d = images.first().map_or(0, Vec::len);
        if images.is_empty() || d == 0 {
            return Err(Error::InvalidInput("a hom needs at least one nonempty image".into()));
        }
        if images.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidInput("hom images must share one dimension".into()));
        }
        if images.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("hom images must be finite".into()));
        }
        Ok(ZHom { images })
    }

    /// The hom sending each point to its physical position.
    pub fn identity(e: &Embedding) -> Self {
        ZHom {
            images: e.physical_images(),
        }
    }

    /// The star map of a cut-and-project embedding.
    pub fn star(e: &Embedding) -> Result<Self> {
        e.internal_images()
            .map(|images| ZHom { images })
            .ok_or_else(|| Error::InvalidInput("embedding has no internal images".into()))
    }

    pub fn source_rank(&self) -> usize {
        self.images.len()
    }

    pub fn target_dim(&self) -> usize {
        self.images[0].len()
    }

    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }

    pub fn scaled(&self, c: f64) -> ZHom {
        ZHom {
            images: self
                .images
                .iter()
                .map(|v| v.iter().map(|x| c * x).collect())
                .collect(),
        }
    }

    pub fn apply(&self, p: &ModulePoint) -> Result<Vec<f64>> {
        self.embedding().embed(p)
    }

    /// The embedding whose physical images are the hom images.
    pub fn embedding(&self) -> Embedding {
        Embedding::new(self.images.clone()).expect("images were validated")
    }
}

/// Block-diagonal hom on a direct sum, one component per factor.
pub fn tied_map_product(components: &[ZHom]) -> Result<ZHom> {
    if components.is_empty() {
        return Err(Error::InvalidInput("no components".into()));
    }
    let d: usize = components.iter().map(ZHom::target_dim).sum();
    let mut images = Vec::new();
    let mut offset = 0;
    for c in components {
        for img in c.images() {
            let mut v = vec![0.0; d];
            v[offset..offset + img.len()].copy_from_slice(img);
            images.push(v);
        }
        offset += c.target_dim();
    }
    ZHom::new(images)
}

/// Checks that a component list matches the rank of the source module.
pub fn check_components(components: &[ZHom], rank: usize) -> Result<()> {
    let total: usize = components.iter().map(ZHom::source_rank).sum();
    if total != rank {
        return Err(Error::RankMismatch {
            expected: rank,
            got: total,
        });
    }
    Ok(())
}

/// A patch carried through a hom.
#[derive(Clone, Debug)]
pub struct HomImage {
    pub patch: PointPatch,
    /// No two distinct coordinates landed within [`COLLISION_TOL`].
    pub injective_on_patch: bool,
}

pub fn apply_hom(p: &PointPatch, f: &ZHom) -> Result<HomImage> {
    if f.source_rank() != p.rank() {
        return Err(Error::RankMismatch {
            expected: p.rank(),
            got: f.source_rank(),
        });
    }
    let patch = p.reembed(Arc::new(f.embedding()))?;
    let injective_on_patch = !has_collision(&patch);
    Ok(HomImage {
        patch,
        injective_on_patch,
    })
}

fn has_collision(p: &PointPatch) -> bool {
    if p.dim() == 1 {
        let mut x: Vec<f64> = p.positions().map(|x| x[0]).collect();
        x.sort_by(f64::total_cmp);
        return x.windows(2).any(|w| w[1] - w[0] <= COLLISION_TOL);
    }
    let idx = PointIndex::new(p, 1.0);
    (0..p.len()).any(|i| {
        let mut hit = false;
        idx.for_each_within(p.position(i), COLLISION_TOL, |j| hit |= j != i);
        hit
    })
}

/// Least-squares linear map `F : ℝ^d → ℝ^{d'}` with `F(x) ≈ f(x)` on a sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearFit {
    /// `d' × d`, row-major.
    pub f: Vec<Vec<f64>>,
    /// `det F` when `d = d'`.
    pub det_f: Option<f64>,
    /// `sup |F(x) − f(x)|` over the sample.
    pub residual_sup: f64,
    pub sample_size: usize,
    /// `sup |x|` over the sample.
    pub sample_radius: f64,
    /// Singular values of `F`, largest first.
    pub singular_values: Vec<f64>,
    /// Relative norm of the gradient of the quadratic objective at `F`.
    pub gradient_norm: f64,
    /// `sup |u·f(x)|` for the left singular direction `u` of the smallest
    /// singular value: the width of `f(M)` across the near-kernel direction.
    pub normal_spread: f64,
}

impl LinearFit {
    pub fn dim(&self) -> usize {
        self.f.first().map_or(0, Vec::len)
    }

    pub fn target_dim(&self) -> usize {
        self.f.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.f
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `σ_min R / (σ_min R + residual_sup)`: the share of the spread of
    /// `F(M)` in its weakest direction that is not explained by the bounded
    /// residual. Near 0 for tied maps, near 1 for untied ones, unchanged by
    /// rescaling `f`.
    pub fn tiedness_index(&self) -> Option<f64> {
        if self.dim() != self.target_dim() {
            return None;
        }
        let s = self.singular_values.last().copied().unwrap_or(0.0) * self.sample_radius;
        if s + self.residual_sup == 0.0 {
            return Some(0.0);
        }
        Some(s / (s + self.residual_sup))
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.target_dim(), self.dim(), |r, c| self.f[r][c])
    }

    /// `F⁻¹` when `F` is square and invertible.
    pub fn inverse(&self) -> Option<DMatrix<f64>> {
        if self.dim() != self.target_dim() {
            return None;
        }
        self.matrix().try_inverse()
    }
}

/// Fits `F` over the core points of `p` by the normal equations, solved
/// through an SVD so rank deficiency is detected rather than amplified.
pub fn fit_linear(p: &PointPatch, f: &ZHom) -> Result<LinearFit> {
    if f.source_rank() != p.rank() {
        return Err(Error::RankMismatch {
            expected: p.rank(),
            got: f.source_rank(),
        });
    }
    let (d, dp) = (p.dim(), f.target_dim());
    let sample = p.core_indices(0.0);
    let needed = d * dp + 1;
    if sample.len() < needed {
        return Err(Error::TooFewPoints {
            needed,
            found: sample.len(),
        });
    }
    let fe = f.embedding();
    let images: Vec<Vec<f64>> = sample
        .iter()
        .map(|&i| fe.embed(p.point(i)))
        .collect::<Result<_>>()?;

    let mut xtx = vec![CompensatedSum::new(); d * d];
    let mut ytx = vec![CompensatedSum::new(); dp * d];
    let mut mean = vec![CompensatedSum::new(); d];
    for (&i, y) in sample.iter().zip(&images) {
        let x = p.position(i);
        for a in 0..d {
            mean[a].add(x[a]);
            for b in 0..d {
                xtx[a * d + b].add(x[a] * x[b]);
            }
        }
        for r in 0..dp {
            for a in 0..d {
                ytx[r * d + a].add(y[r] * x[a]);
            }
        }
    }
    let xtx = DMatrix::from_fn(d, d, |a, b| xtx[a * d + b].value());
    let ytx = DMatrix::from_fn(dp, d, |r, a| ytx[r * d + a].value());

    // positions must affinely span ℝ^d
    let n = sample.len() as f64;
    let mean = DVector::from_fn(d, |a, _| mean[a].value() / n);
    let centered = &xtx / n - &mean * mean.transpose();
    let sv = centered.clone().svd(false, false).singular_values;
    if sv.min() <= 1e-12 * sv.max().max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateSample(
            "sample positions lie in a hyperplane".into(),
        ));
    }

    let svd = xtx.clone().svd(true, true);
    let tol = 1e-13 * svd.singular_values.max();
    let pinv = svd
        .pseudo_inverse(tol)
        .map_err(|e| Error::DegenerateSample(e.to_string()))?;
    let fm = &ytx * pinv;

    let grad = &fm * &xtx - &ytx;
    let gscale = ytx.norm() + fm.norm() * xtx.norm();
    let gradient_norm = if gscale > 0.0 { grad.norm() / gscale } else { 0.0 };

    let fsvd = fm.clone().svd(true, false);
    let mut singular_values: Vec<f64> = fsvd.singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let (kmin, _) = fsvd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
    let u = fsvd.u.as_ref().map(|u| u.column(kmin).into_owned());

    let f_rows: Vec<Vec<f64>> = (0..dp)
        .map(|r| (0..d).map(|c| fm[(r, c)]).collect())
        .collect();
    let mut residual_sup: f64 = 0.0;
    let mut sample_radius: f64 = 0.0;
    let mut normal_spread: f64 = 0.0;
    let mut fx = vec![0.0; dp];
    for (&i, y) in sample.iter().zip(&images) {
        let x = p.position(i);
        for r in 0..dp {
            fx[r] = f_rows[r].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - y[r];
        }
        residual_sup = residual_sup.max(norm(&fx));
        sample_radius = sample_radius.max(norm(x));
        if let Some(u) = &u {
            let s: f64 = u.iter().zip(y).map(|(a, b)| a * b).sum();
            normal_spread = normal_spread.max(s.abs());
        }
    }
    let det_f = (d == dp).then(|| fm.determinant());
    Ok(LinearFit {
        f: f_rows,
        det_f,
        residual_sup,
        sample_size: sample.len(),
        sample_radius,
        singular_values,
        gradient_norm,
        normal_spread,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tiedness {
    Tied,
    Untied,
    /// Source and target dimensions differ.
    NotApplicable,
}

impl Tiedness {
    pub fn is_tied(self) -> bool {
        self == Tiedness::Tied
    }
}

/// Tied iff the tiedness index is below `tol`.
pub fn tiedness(fit: &LinearFit, tol: f64) -> Result<Tiedness> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if !fit.residual_sup.is_finite() {
        return Err(Error::ResidualGrowth {
            first: fit.residual_sup,
            last: fit.residual_sup,
        });
    }
    Ok(match fit.tiedness_index() {
        None => Tiedness::NotApplicable,
        Some(k) if k < tol => Tiedness::Tied,
        Some(_) => Tiedness::Untied,
    })
}

/// Largest allowed ratio between the residual sups at the top and bottom
/// scale before the linear approximation is declared broken.
pub const RESIDUAL_GROWTH: f64 = 2.0;

/// Multi-scale classification: the residual must stay bounded across the
/// fits (ordered by increasing scale), then the largest fit decides.
pub fn classify(fits: &[LinearFit], tol: f64) -> Result<Tiedness> {
    let (first, last) = match fits {
        [] => return Err(Error::InvalidInput("no fits to classify".into())),
        [a, .., b] => (a, b),
        [a] => (a, a),
    };
    let floor = 1e-9 * last.sample_radius.max(1.0);
    if last.residual_sup > RESIDUAL_GROWTH * first.residual_sup + floor {
        return Err(Error::ResidualGrowth {
            first: first.residual_sup,
            last: last.residual_sup,
        });
    }
    tiedness(last, tol)
}

/// Residual sups over `M` and over sampled `x − y + z`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Remark3 {
    pub sup_m: f64,
    pub sup_triples: f64,
    /// `sup_triples / sup_m`, absent when `sup_m = 0`.
    pub ratio: Option<f64>,
    pub triples: usize,
    pub holds: bool,
}

/// Default number of evenly spaced core points whose ordered triples are
/// sampled.
pub const REMARK3_POINTS: usize = 48;

pub fn remark3_check(p: &PointPatch, f: &ZHom, fit: &LinearFit) -> Result<Remark3> {
    remark3_check_with(p, f, fit, REMARK3_POINTS)
}

pub fn remark3_check_with(
    p: &PointPatch,
    f: &ZHom,
    fit: &LinearFit,
    points: usize,
) -> Result<Remark3> {
    if f.source_rank() != p.rank() {
        return Err(Error::RankMismatch {
            expected: p.rank(),
            got: f.source_rank(),
        });
    }
    let core = p.core_indices(0.0);
    if core.is_empty() {
        return Err(Error::EmptyCore {
            margin: p.core_margin(),
        });
    }
    let fe = f.embedding();
    let e = p.embedding();
    let residual = |v: &ModulePoint| -> Result<f64> {
        let x = e.embed(v)?;
        let y = fe.embed(v)?;
        let fx = fit.apply(&x);
        Ok(norm(&fx.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>()))
    };
    let mut sup_m: f64 = 0.0;
    for &i in &core {
        sup_m = sup_m.max(residual(p.point(i))?);
    }
    let step = core.len().div_ceil(points.max(1)).max(1);
    let picks: Vec<&ModulePoint> = core.iter().step_by(step).map(|&i| p.point(i)).collect();
    let mut sup_triples: f64 = 0.0;
    let mut triples = 0;
    for x in &picks {
        for y in &picks {
            let xy = *x - *y;
            for z in &picks {
                sup_triples = sup_triples.max(residual(&(&xy + *z))?);
                triples += 1;
            }
        }
    }
    let ratio = (sup_m > 0.0).then(|| sup_triples / sup_m);
    Ok(Remark3 {
        sup_m,
        sup_triples,
        ratio,
        triples,
        holds: sup_triples <= 3.0 * sup_m + 1e-9,
    })
}

/// `f(M)` as a point source: the base set is enumerated on the preimage of
/// the requested window under `F`, widened by the residual bound.
pub struct DeformedSource<S> {
    base: S,
    hom: ZHom,
    f_inv: DMatrix<f64>,
    bound: f64,
    embedding: Arc<Embedding>,
}

impl<S: PointSource> DeformedSource<S> {
    /// `fit` must come from `hom` on a patch of `base`; `F` must be invertible.
    pub fn new(base: S, hom: ZHom, fit: &LinearFit) -> Result<Self> {
        if hom.source_rank() != base.embedding().rank() {
            return Err(Error::RankMismatch {
                expected: base.embedding().rank(),
                got: hom.source_rank(),
            });
        }
        let f_inv = fit
            .inverse()
            .ok_or_else(|| Error::HomRejected("linear part is not invertible".into()))?;
        let embedding = Arc::new(hom.embedding());
        Ok(DeformedSource {
            base,
            hom,
            f_inv,
            bound: fit.residual_sup,
            embedding,
        })
    }

    pub fn hom(&self) -> &ZHom {
        &self.hom
    }

    /// Base window whose image under `f` contains every point of `f(M)`
    /// lying in `window`.
    pub fn preimage_window(&self, window: &BoxWindow) -> BoxWindow {
        let grown = window.expand(2.0 * self.bound + 1.0);
        let d = self.f_inv.nrows();
        let corners: Vec<Vec<f64>> = grown
            .corners()
            .iter()
            .map(|c| {
                (0..d)
                    .map(|r| (0..c.len()).map(|k| self.f_inv[(r, k)] * c[k]).sum())
                    .collect()
            })
            .collect();
        BoxWindow::bounding(d, corners.iter().map(Vec::as_slice))
    }
}

impl<S: PointSource> PointSource for DeformedSource<S> {
    fn embedding(&self) -> Arc<Embedding> {
        self.embedding.clone()
    }

    fn patch(&self, window: &BoxWindow) -> Result<PointPatch> {
        let base = self.base.patch(&self.preimage_window(window))?;
        let mut pos = vec![0.0; self.embedding.dim()];
        let points: Vec<ModulePoint> = base
            .points()
            .iter()
            .filter(|p| {
                self.embedding.position_into(p.coords(), &mut pos);
                window.contains(&pos)
            })
            .cloned()
            .collect();
        PointPatch::new(self.embedding.clone(), points, window.clone(), 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cut_and_project, fibonacci_scheme, TAU};
    use proptest::prelude::*;

    fn fib(s: f64) -> PointPatch {
        cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(-s, s)).unwrap()
    }

    fn untied() -> ZHom {
        ZHom::new(vec![vec![2f64.sqrt()], vec![std::f64::consts::PI]]).unwrap()
    }

    #[test]
    fn identity_hom_keeps_positions() {
        let p = fib(50.0);
        let img = apply_hom(&p, &ZHom::identity(p.embedding())).unwrap();
        assert!(img.injective_on_patch);
        for (a, b) in p.positions().zip(img.patch.positions()) {
            assert_eq!(a, b);
        }
        let fit = fit_linear(&p, &ZHom::identity(p.embedding())).unwrap();
        assert!((fit.f[0][0] - 1.0).abs() < 1e-12);
        assert!(fit.residual_sup < 1e-9);
        assert_eq!(tiedness(&fit, DEFAULT_TIE_TOL).unwrap(), Tiedness::Untied);
    }

    #[test]
    fn star_images_lie_in_unit_interval() {
        let p = cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(0.0, 10.0)).unwrap();
        let img = apply_hom(&p, &ZHom::star(p.embedding()).unwrap()).unwrap();
        let mut got: Vec<f64> = img.patch.positions().map(|x| x[0]).collect();
        got.sort_by(f64::total_cmp);
        let want = [0.0, 0.145898, 0.381966, 0.527864, 0.763932, 1.0];
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn untied_images() {
        let p = cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(0.0, 3.0)).unwrap();
        let img = apply_hom(&p, &untied()).unwrap();
        let mut got: Vec<f64> = img.patch.positions().map(|x| x[0]).collect();
        got.sort_by(f64::total_cmp);
        let want = [0.0, 2f64.sqrt(), 2f64.sqrt() + std::f64::consts::PI];
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((got[2] - 4.555_806).abs() < 1e-6);
    }

    #[test]
    fn collisions_are_flagged() {
        let p = fib(20.0);
        let img = apply_hom(&p, &ZHom::new(vec![vec![1.0], vec![0.0]]).unwrap()).unwrap();
        assert!(!img.injective_on_patch);
    }

    #[test]
    fn fits_on_fibonacci() {
        let p = fib(1000.0);
        let star = ZHom::star(p.embedding()).unwrap();
        let fit = fit_linear(&p, &star).unwrap();
        assert!(fit.f[0][0].abs() < 1e-3);
        // least squares may tilt F slightly, so the ball of radius 1 is only
        // guaranteed up to |F|·R; the spread across the kernel is exact
        assert!(fit.residual_sup <= 1.0 + fit.f[0][0].abs() * fit.sample_radius + 1e-12);
        assert!(fit.normal_spread <= 1.0 + 1e-12);
        assert!(fit.gradient_norm < 1e-9);
        assert_eq!(tiedness(&fit, DEFAULT_TIE_TOL).unwrap(), Tiedness::Tied);

        let fit = fit_linear(&p, &untied()).unwrap();
        // least-squares oracle 1.795842; closed form (√2/τ + π)/√5 ≈ 1.79584
        let closed = (2f64.sqrt() / TAU + std::f64::consts::PI) / 5f64.sqrt();
        assert!((fit.f[0][0] - 1.795842).abs() < 1e-5);
        assert!((fit.f[0][0] - closed).abs() < 1e-3);
        assert!(fit.residual_sup < 1.0);
        assert_eq!(tiedness(&fit, DEFAULT_TIE_TOL).unwrap(), Tiedness::Untied);
    }

    #[test]
    fn scaled_star_is_tied() {
        let p = fib(1000.0);
        let star = ZHom::star(p.embedding()).unwrap();
        let fits: Vec<LinearFit> = [100.0, 1000.0]
            .iter()
            .map(|&s| fit_linear(&fib(s), &star.scaled(2.5)).unwrap())
            .collect();
        assert_eq!(classify(&fits, DEFAULT_TIE_TOL).unwrap(), Tiedness::Tied);
        assert!(fit_linear(&p, &star.scaled(-2.5)).unwrap().tiedness_index().unwrap() < 0.05);
    }

    #[test]
    fn degenerate_sample_rejected() {
        let p = fib(2.0);
        let e = p.embedding().clone();
        let one = PointPatch::new(e, vec![ModulePoint::zero(2)], BoxWindow::interval(-2.0, 2.0), 0.0)
            .unwrap();
        assert!(matches!(
            fit_linear(&one, &untied()),
            Err(Error::TooFewPoints { .. })
        ));
        // two points on a line in ℝ^2 cannot pin down a 2 × 2 map
        let line = crate::generators::integer_patch(
            &BoxWindow::new(vec![0.0, 0.0], vec![10.0, 0.0]).unwrap(),
        )
        .unwrap();
        let id = ZHom::identity(line.embedding());
        assert!(matches!(
            fit_linear(&line, &id),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn remark3_examples() {
        let p = fib(500.0);
        let id = ZHom::identity(p.embedding());
        let fit = fit_linear(&p, &id).unwrap();
        let r = remark3_check(&p, &id, &fit).unwrap();
        assert!(r.sup_m < 1e-9 && r.holds);

        let star = ZHom::star(p.embedding()).unwrap();
        let fit = fit_linear(&p, &star).unwrap();
        let r = remark3_check(&p, &star, &fit).unwrap();
        assert!(r.holds);
        assert!(r.sup_triples <= 3.0 + 3.0 * fit.f[0][0].abs() * 3.0 * fit.sample_radius);

        let fit = fit_linear(&p, &untied()).unwrap();
        let r = remark3_check(&p, &untied(), &fit).unwrap();
        assert!(r.holds && r.ratio.unwrap() <= 3.0 + 1e-9);
    }

    #[test]
    fn product_hom_blocks() {
        let a = ZHom::new(vec![vec![1.0], vec![2.0]]).unwrap();
        let b = ZHom::new(vec![vec![3.0]]).unwrap();
        let h = tied_map_product(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(h.images(), &[vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 3.0]]);
        assert!(check_components(&[a.clone(), b], 3).is_ok());
        assert!(check_components(&[a], 3).is_err());
    }

    #[test]
    fn deformed_source_is_exhaustive() {
        let base = fibonacci_scheme();
        let p = fib(500.0);
        let fit = fit_linear(&p, &untied()).unwrap();
        let src = DeformedSource::new(base, untied(), &fit).unwrap();
        let w = BoxWindow::interval(-100.0, 100.0);
        let got = src.patch(&w).unwrap();
        // brute force: map a generous base patch and filter
        let all = apply_hom(&fib(200.0), &untied()).unwrap().patch;
        let want = all.restrict(&w).unwrap();
        assert_eq!(got.points(), want.points());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn verdict_is_scale_invariant(c in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0],
                                      a in 0.3f64..3.0, b in 0.3f64..3.0) {
            let p = fib(300.0);
            let h = ZHom::new(vec![vec![a], vec![b]]).unwrap();
            let star = ZHom::star(p.embedding()).unwrap();
            for f in [h, star] {
                let t1 = tiedness(&fit_linear(&p, &f).unwrap(), DEFAULT_TIE_TOL).unwrap();
                let t2 = tiedness(&fit_linear(&p, &f.scaled(c)).unwrap(), DEFAULT_TIE_TOL).unwrap();
                prop_assert_eq!(t1, t2);
            }
        }

        #[test]
        fn identity_composition(s in 10.0f64..200.0) {
            let p = fib(s);
            let img = apply_hom(&p, &ZHom::identity(p.embedding())).unwrap();
            prop_assert_eq!(img.patch.points(), p.points());
        }
    }
}
