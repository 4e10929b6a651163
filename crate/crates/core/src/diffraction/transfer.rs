use serde::{Deserialize, Serialize};

use super::periods::{almost_periods, symmetric_difference};
use super::vanhove::VanHoveSequence;
use crate::deformation::{apply_hom, tiedness, LinearFit, Tiedness, ZHom, COLLISION_TOL};
use crate::error::{Error, Result};
use crate::generators::PointSource;
use crate::group::{difference_set, ModulePoint};
use crate::numeric::{distance, norm};

/// Absolute slack on the deformed density bound.
pub const SAMPLING_TOL: f64 = 0.01;

/// Relative slack on `dens(f(M)) · |det F| = dens(M)`.
pub const SCALING_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferOptions {
    pub tie_tol: f64,
    /// Almost-period candidates are searched within this fraction of the
    /// largest radius.
    pub search_fraction: f64,
    pub max_samples: usize,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            tie_tol: crate::deformation::DEFAULT_TIE_TOL,
            search_fraction: 0.25,
            max_samples: 64,
        }
    }
}

/// `card(F(N) ∩ F(A_m)) ≤ card(f(N) ∩ (F(A_m) + 3B)) ≤ card(F(N) ∩ (F(A_m) + 6B))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sandwich {
    pub inner: usize,
    pub middle: usize,
    pub outer: usize,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.inner <= self.middle && self.middle <= self.outer
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferSample {
    pub t: ModulePoint,
    pub position: Vec<f64>,
    pub image: Vec<f64>,
    /// `dens_A((t + M) △ M)`.
    pub base_density: f64,
    /// `dens_FA((f(t) + f(M)) △ f(M))` per term.
    pub deformed_trace: Vec<f64>,
    pub deformed_density: f64,
    pub bound: f64,
    pub holds: bool,
    pub sandwich: Vec<Sandwich>,
    pub sandwich_holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferReport {
    pub epsilon: f64,
    pub det_f: f64,
    /// Residual radius `B` used for the sandwich.
    pub b: f64,
    pub density_m: f64,
    pub density_fm: f64,
    /// `dens(f(M)) · |det F| / dens(M)`.
    pub scaling_ratio: f64,
    pub scaling_holds: bool,
    pub periods_found: usize,
    pub samples: Vec<TransferSample>,
    pub bound_holds: bool,
    pub sandwich_holds: bool,
    pub passed: bool,
    pub radii: Vec<f64>,
}

/// Checks `P_{f(M)}(ε/|det F|) ⊃ f(P_M(ε))` on sampled periods, the density
/// scaling, and the counting sandwich, averaging `f(M)` over `F(A_m)`.
pub fn transfer_check<S: PointSource + ?Sized>(
    src: &S,
    f: &ZHom,
    fit: &LinearFit,
    seq: &VanHoveSequence,
    eps: f64,
    opts: &TransferOptions,
) -> Result<TransferReport> {
    let e = src.embedding();
    if f.source_rank() != e.rank() {
        return Err(Error::RankMismatch {
            expected: e.rank(),
            got: f.source_rank(),
        });
    }
    match tiedness(fit, opts.tie_tol)? {
        Tiedness::Untied => {}
        Tiedness::Tied => return Err(Error::HomRejected("map is tied".into())),
        Tiedness::NotApplicable => {
            return Err(Error::HomRejected("target dimension differs from source".into()))
        }
    }
    let det = fit.det_f.unwrap_or(0.0);
    let f_inv = fit
        .inverse()
        .ok_or_else(|| Error::HomRejected("linear part is not invertible".into()))?;
    let inv_norm = f_inv.norm();
    let fa = seq.transformed(&fit.f)?;
    let last = seq.region(seq.len() - 1);

    // almost periods of M
    let rad = opts.search_fraction * seq.radii()[seq.len() - 1];
    let base = src.patch(&last.expanded_box(rad))?;
    let mut cands = Vec::new();
    for v in difference_set(&base, rad)? {
        if norm(&e.embed(&v)?) <= rad {
            cands.push(v);
        }
    }
    let ap = almost_periods(src, seq, eps, &cands)?;
    let density_m = ap.density;
    // evenly spaced in order of distance from 0, always keeping the nearest
    let mut order: Vec<_> = ap.periods.iter().collect();
    order.sort_by(|a, b| norm(&a.position).total_cmp(&norm(&b.position)));
    let k = opts.max_samples.max(1);
    let step = (order.len() as f64 / k as f64).max(1.0);
    let mut idx: Vec<usize> = (0..order.len().min(5))
        .chain((0..order.len().min(k)).map(|i| (i as f64 * step) as usize))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    let picked: Vec<_> = idx.into_iter().map(|i| order[i]).collect();

    // one patch covering every region, shift and residual zone
    let b0 = fit.residual_sup;
    let margin = inv_norm * (8.0 * (b0 + 1.0)) + rad + 1.0;
    let big = src.patch(&last.expanded_box(margin))?;
    let img = apply_hom(&big, f)?;
    if !img.injective_on_patch {
        return Err(Error::HomRejected(format!(
            "not injective on the patch at tolerance {COLLISION_TOL}"
        )));
    }
    // B as the measured residual, over the fit sample and this patch
    let mut b = b0;
    for i in 0..big.len() {
        let y = f.apply(big.point(i))?;
        b = b.max(distance(&y, &fit.apply(big.position(i))));
    }
    if b * 8.0 > margin {
        return Err(Error::HomRejected(format!("residual {b} exceeds the patch margin")));
    }
    let b = b + 1e-9;

    // density of f(M) over F(A_m)
    let mut dens_fm = Vec::new();
    for m in 0..fa.len() {
        let r = fa.region(m);
        let c = img.patch.positions().filter(|x| r.contains(x)).count();
        dens_fm.push(c as f64 / r.volume());
    }
    let density_fm = *dens_fm.last().unwrap();
    let scaling_ratio = density_fm * det.abs() / density_m;
    let scaling_holds = (scaling_ratio - 1.0).abs() <= SCALING_TOL;

    let bound = eps / det.abs() + SAMPLING_TOL;
    let mut samples = Vec::new();
    for p in picked {
        let image = f.apply(&p.t)?;
        let n = symmetric_difference(&big, &p.t)?;
        let mut trace = Vec::with_capacity(fa.len());
        let mut sandwich = Vec::with_capacity(fa.len());
        for m in 0..fa.len() {
            let r = fa.region(m);
            let (mut inner, mut middle, mut outer) = (0, 0, 0);
            for (y, _) in &n {
                let lin = fit.apply(&e.embed(y)?);
                let exact = f.apply(y)?;
                if r.contains(&lin) {
                    inner += 1;
                }
                if r.distance_to(&exact)? <= 3.0 * b {
                    middle += 1;
                }
                if r.distance_to(&lin)? <= 6.0 * b {
                    outer += 1;
                }
            }
            sandwich.push(Sandwich {
                inner,
                middle,
                outer,
            });
            let deformed = n
                .iter()
                .filter(|(y, _)| f.apply(y).map_or(false, |x| r.contains(&x)))
                .count();
            trace.push(deformed as f64 / r.volume());
        }
        let deformed_density = *trace.last().unwrap();
        samples.push(TransferSample {
            position: p.position.clone(),
            image,
            base_density: p.density,
            deformed_density,
            bound,
            holds: deformed_density <= bound,
            sandwich_holds: sandwich.iter().all(Sandwich::holds),
            sandwich,
            deformed_trace: trace,
            t: p.t.clone(),
        });
    }
    let bound_holds = samples.iter().all(|s| s.holds);
    let sandwich_holds = samples.iter().all(|s| s.sandwich_holds);
    Ok(TransferReport {
        epsilon: eps,
        det_f: det,
        b,
        density_m,
        density_fm,
        scaling_ratio,
        scaling_holds,
        periods_found: ap.periods.len(),
        passed: bound_holds && sandwich_holds && scaling_holds && !samples.is_empty(),
        bound_holds,
        sandwich_holds,
        samples,
        radii: seq.radii().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::fit_linear;
    use crate::generators::{cut_and_project, fibonacci_scheme};
    use crate::group::BoxWindow;

    fn fit_for(f: &ZHom) -> LinearFit {
        let p = cut_and_project(&fibonacci_scheme(), &BoxWindow::interval(-1000.0, 1000.0)).unwrap();
        fit_linear(&p, f).unwrap()
    }

    fn seq() -> VanHoveSequence {
        VanHoveSequence::new(1, vec![250.0, 1000.0]).unwrap()
    }

    #[test]
    fn identity_passes_with_equality() {
        let f = ZHom::identity(fibonacci_scheme().embedding());
        let r = transfer_check(&fibonacci_scheme(), &f, &fit_for(&f), &seq(), 0.35, &TransferOptions::default()).unwrap();
        assert!(r.passed);
        assert!((r.scaling_ratio - 1.0).abs() < 1e-12);
        for s in &r.samples {
            assert_eq!(s.deformed_density, s.base_density);
            assert!(s.sandwich_holds);
        }
    }

    #[test]
    fn untied_fibonacci_transfer() {
        let f = ZHom::new(vec![vec![2f64.sqrt()], vec![std::f64::consts::PI]]).unwrap();
        let r = transfer_check(&fibonacci_scheme(), &f, &fit_for(&f), &seq(), 0.35, &TransferOptions::default()).unwrap();
        assert!(r.passed, "{:?}", (r.scaling_ratio, r.bound_holds, r.sandwich_holds));
        assert!((r.det_f - 1.795842).abs() < 1e-3);
        let t = r
            .samples
            .iter()
            .find(|s| s.t == ModulePoint::new(&[1, 1]))
            .expect("1+τ is an almost period");
        assert!(t.deformed_density <= 0.35 / 1.79584 + 0.01);
    }

    #[test]
    fn tied_maps_are_rejected() {
        let f = ZHom::star(fibonacci_scheme().embedding()).unwrap();
        assert!(matches!(
            transfer_check(&fibonacci_scheme(), &f, &fit_for(&f), &seq(), 0.35, &TransferOptions::default()),
            Err(Error::HomRejected(_))
        ));
    }
}
