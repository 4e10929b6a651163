use std::f64::consts::TAU as TWO_PI;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::vanhove::VanHoveSequence;
use crate::error::{Error, Result};
use crate::generators::PointSource;
use crate::group::{ModulePoint, PointPatch};
use crate::index::PointIndex;
use crate::numeric::{last_relative_change, CompensatedSum};

/// Relative change between the last two terms below which an estimate
/// counts as converged.
pub const CONVERGENCE_TOL: f64 = 0.005;

/// A last-term estimate along a van Hove sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub radii: Vec<f64>,
}

impl Estimate {
    pub(crate) fn from_trace(trace: Vec<f64>, seq: &VanHoveSequence) -> Self {
        let value = *trace.last().expect("sequences are nonempty");
        let converged = match last_relative_change(&trace) {
            Some(c) => c < CONVERGENCE_TOL || (trace[trace.len() - 2] - value).abs() < 1e-12,
            None => false,
        };
        Estimate {
            value,
            trace,
            converged,
            radii: seq.radii().to_vec(),
        }
    }
}

fn check_dim<S: PointSource + ?Sized>(src: &S, seq: &VanHoveSequence) -> Result<()> {
    if src.dim() != seq.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            got: seq.dim(),
        });
    }
    Ok(())
}

/// Indices of patch points inside averaging region `m`.
pub(crate) fn in_region(p: &PointPatch, seq: &VanHoveSequence, m: usize) -> Vec<usize> {
    let r = seq.region(m);
    (0..p.len()).filter(|&i| r.contains(p.position(i))).collect()
}

/// `card(M ∩ A_m) / vol(A_m)` along the sequence.
pub fn density<S: PointSource + ?Sized>(src: &S, seq: &VanHoveSequence) -> Result<Estimate> {
    check_dim(src, seq)?;
    let trace = seq
        .regions()
        .enumerate()
        .map(|(m, r)| {
            let p = src.patch(&r.bounding_box())?;
            Ok(in_region(&p, seq, m).len() as f64 / r.volume())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_trace(trace, seq))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutocorrEntry {
    pub v: ModulePoint,
    pub position: Vec<f64>,
    pub frequency: f64,
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Autocorrelation {
    pub radius: f64,
    /// Sorted by coordinates.
    pub entries: Vec<AutocorrEntry>,
    pub radii: Vec<f64>,
}

impl Autocorrelation {
    pub fn get(&self, v: &ModulePoint) -> f64 {
        self.entries
            .binary_search_by(|e| e.v.cmp(v))
            .map_or(0.0, |i| self.entries[i].frequency)
    }
}

/// `card{x ∈ M ∩ A_m : x + v ∈ M} / vol(A_m)` for every `v ∈ M − M` with
/// `|v| ≤ radius`.
pub fn autocorrelation<S: PointSource + ?Sized>(
    src: &S,
    seq: &VanHoveSequence,
    radius: f64,
) -> Result<Autocorrelation> {
    check_dim(src, seq)?;
    if !(radius >= 0.0) {
        return Err(Error::InvalidInput("radius must be nonnegative".into()));
    }
    let e = src.embedding();
    let terms = seq.len();
    let mut table: FxHashMap<ModulePoint, Vec<f64>> = FxHashMap::default();
    for (m, r) in seq.regions().enumerate() {
        // the patch reaches `radius` beyond the region, so pairs are complete
        let p = src.patch(&r.expanded_box(radius))?;
        let idx = PointIndex::new(&p, radius.max(1.0));
        let mut counts: FxHashMap<ModulePoint, u64> = FxHashMap::default();
        for i in in_region(&p, seq, m) {
            let x = p.point(i);
            idx.for_each_within(p.position(i), radius, |j| {
                *counts.entry(p.point(j) - x).or_insert(0) += 1;
            });
        }
        let vol = r.volume();
        for (v, c) in counts {
            table.entry(v).or_insert_with(|| vec![0.0; terms])[m] = c as f64 / vol;
        }
    }
    let mut entries: Vec<AutocorrEntry> = table
        .into_iter()
        .map(|(v, trace)| {
            Ok(AutocorrEntry {
                position: e.embed(&v)?,
                frequency: *trace.last().unwrap(),
                trace,
                v,
            })
        })
        .collect::<Result<_>>()?;
    entries.sort_by(|a, b| a.v.cmp(&b.v));
    Ok(Autocorrelation {
        radius,
        entries,
        radii: seq.radii().to_vec(),
    })
}

/// `|Σ_x exp(−2πi k·x)|²` with compensated sums.
pub fn exponential_sum<'a>(positions: impl IntoIterator<Item = &'a [f64]>, k: &[f64]) -> f64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for x in positions {
        let phase = -TWO_PI * k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let (s, c) = phase.sin_cos();
        re.add(c);
        im.add(s);
    }
    let (re, im) = (re.value(), im.value());
    re * re + im * im
}

/// `I(k) = |Σ_{x ∈ M ∩ A_m} exp(−2πi k·x)|² / vol(A_m)²` along the sequence.
pub fn bragg_intensity<S: PointSource + ?Sized>(
    src: &S,
    seq: &VanHoveSequence,
    k: &[f64],
) -> Result<Estimate> {
    check_dim(src, seq)?;
    if k.len() != seq.dim() {
        return Err(Error::DimensionMismatch {
            expected: seq.dim(),
            got: k.len(),
        });
    }
    let trace = seq
        .regions()
        .enumerate()
        .map(|(m, r)| {
            let p = src.patch(&r.bounding_box())?;
            let idx = in_region(&p, seq, m);
            let s = exponential_sum(idx.iter().map(|&i| p.position(i)), k);
            Ok(s / (r.volume() * r.volume()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_trace(trace, seq))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub k: f64,
    pub intensity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeakScan {
    pub floor: f64,
    pub k_max: f64,
    /// Peaks found on the last region.
    pub peaks: Vec<Peak>,
    /// Peak count per region.
    pub counts: Vec<usize>,
    /// `(k, I(k))` on the grid of the last region.
    pub spectrum: Vec<(f64, f64)>,
    pub radii: Vec<f64>,
}

/// Default absolute intensity floor for peaks.
pub const PEAK_FLOOR: f64 = 1e-3;

/// Re-anchor the phasor recurrence after this many grid steps.
const REANCHOR: usize = 256;

/// Grid scan of `I` over `[0, k_max]` (d = 1) with pitch `1/(4 L_m)` for a
/// region of half-width `L_m`; local maxima above `floor` are refined by
/// golden-section search.
pub fn peak_scan<S: PointSource + ?Sized>(
    src: &S,
    seq: &VanHoveSequence,
    k_max: f64,
    floor: f64,
) -> Result<PeakScan> {
    check_dim(src, seq)?;
    if seq.dim() != 1 {
        return Err(Error::Unsupported("peak scans are one-dimensional".into()));
    }
    if !(k_max > 0.0) || !(floor > 0.0) {
        return Err(Error::InvalidInput("k_max and floor must be positive".into()));
    }
    let mut counts = Vec::new();
    let mut peaks = Vec::new();
    let mut spectrum = Vec::new();
    for (m, r) in seq.regions().enumerate() {
        let p = src.patch(&r.bounding_box())?;
        let xs: Vec<f64> = in_region(&p, seq, m).iter().map(|&i| p.position(i)[0]).collect();
        let norm = 1.0 / (r.volume() * r.volume());
        let half = r.bounding_box().extent(0) / 2.0;
        let pitch = 1.0 / (4.0 * half);
        let steps = (k_max / pitch).ceil() as usize;
        let pitch = k_max / steps as f64;
        let grid = scan_grid(&xs, pitch, steps + 1, norm);
        let intensity = |k: f64| exponential_sum(xs.iter().map(std::slice::from_ref), &[k]) * norm;
        let mut found: Vec<Peak> = Vec::new();
        for j in 0..grid.len() {
            let left = if j > 0 { grid[j - 1] } else { f64::NEG_INFINITY };
            let right = grid.get(j + 1).copied().unwrap_or(f64::NEG_INFINITY);
            if grid[j] >= left && grid[j] > right && grid[j] > floor * 0.25 {
                let lo = (j as f64 - 1.0).max(0.0) * pitch;
                let hi = ((j + 1) as f64 * pitch).min(k_max);
                let k = golden_max(&intensity, lo, hi, 1e-12);
                let best = [(k, intensity(k)), (j as f64 * pitch, grid[j])]
                    .into_iter()
                    .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
                if best.1 > floor {
                    found.push(Peak {
                        k: best.0,
                        intensity: best.1,
                    });
                }
            }
        }
        found.dedup_by(|b, a| (b.k - a.k).abs() < pitch && {
            if b.intensity > a.intensity {
                *a = *b;
            }
            true
        });
        let found = drop_sidelobes(found, half);
        counts.push(found.len());
        if m + 1 == seq.len() {
            spectrum = grid
                .iter()
                .enumerate()
                .map(|(j, &v)| (j as f64 * pitch, v))
                .collect();
            peaks = found;
        }
    }
    Ok(PeakScan {
        floor,
        k_max,
        peaks,
        counts,
        spectrum,
        radii: seq.radii().to_vec(),
    })
}

/// Safety factor on the sidelobe envelope.
const SIDELOBE_FACTOR: f64 = 2.0;

/// Drops maxima lying under the finite-window leakage envelope
/// `h / (2π L δ)²` of a stronger peak of height `h` at distance `δ`.
fn drop_sidelobes(mut found: Vec<Peak>, l: f64) -> Vec<Peak> {
    found.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    let mut kept: Vec<Peak> = Vec::new();
    for p in found {
        let leak = kept.iter().any(|q| {
            let x = TWO_PI * l * (p.k - q.k);
            p.intensity <= SIDELOBE_FACTOR * q.intensity / (x * x)
        });
        if !leak {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| a.k.total_cmp(&b.k));
    kept
}

/// `I` on `k_j = j·pitch`, by multiplying per-point phasors. The phasors
/// are recomputed from scratch every [`REANCHOR`] steps to stop drift.
fn scan_grid(xs: &[f64], pitch: f64, n: usize, norm: f64) -> Vec<f64> {
    let step: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| {
            let (s, c) = (-TWO_PI * x * pitch).sin_cos();
            (c, s)
        })
        .collect();
    let mut z: Vec<(f64, f64)> = vec![(1.0, 0.0); xs.len()];
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        if j % REANCHOR == 0 && j > 0 {
            let k = j as f64 * pitch;
            for (zi, &x) in z.iter_mut().zip(xs) {
                let (s, c) = (-TWO_PI * x * k).sin_cos();
                *zi = (c, s);
            }
        }
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for zi in &z {
            re.add(zi.0);
            im.add(zi.1);
        }
        let (a, b) = (re.value(), im.value());
        out.push((a * a + b * b) * norm);
        for (zi, w) in z.iter_mut().zip(&step) {
            *zi = (zi.0 * w.0 - zi.1 * w.1, zi.0 * w.1 + zi.1 * w.0);
        }
    }
    out
}

/// Maximizer of a unimodal function on `[a, b]`.
fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{fibonacci_scheme, IntegerLattice, TAU};
    use proptest::prelude::*;

    fn seq(r: &[f64]) -> VanHoveSequence {
        VanHoveSequence::new(1, r.to_vec()).unwrap()
    }

    #[test]
    fn lattice_density_and_intensity() {
        let z = IntegerLattice::new(1);
        let s = seq(&[100.0, 400.0]);
        assert_eq!(density(&z, &s).unwrap().value, 1.0);
        for k in [0.0, 1.0, 2.0, 3.0] {
            assert!((bragg_intensity(&z, &s, &[k]).unwrap().value - 1.0).abs() < 1e-9);
        }
        assert!(bragg_intensity(&z, &s, &[0.5]).unwrap().value < 1e-12);
    }

    #[test]
    fn lattice_peaks() {
        let z = IntegerLattice::new(1);
        let scan = peak_scan(&z, &seq(&[100.0]), 3.0, PEAK_FLOOR).unwrap();
        let ks: Vec<f64> = scan.peaks.iter().map(|p| p.k).collect();
        assert_eq!(ks.len(), 4, "{ks:?}");
        for (k, want) in ks.iter().zip([0.0, 1.0, 2.0, 3.0]) {
            assert!((k - want).abs() < 1e-6);
        }
        assert!(scan.peaks.iter().all(|p| (p.intensity - 1.0).abs() < 1e-6));
    }

    #[test]
    fn fibonacci_density_and_autocorrelation() {
        let s = seq(&[500.0, 2000.0]);
        let d = density(&fibonacci_scheme(), &s).unwrap();
        assert!((d.value - 1.0 / 5f64.sqrt()).abs() < 0.005 / 5f64.sqrt());
        let a = autocorrelation(&fibonacci_scheme(), &s, 3.0).unwrap();
        assert_eq!(a.get(&ModulePoint::zero(2)), d.value);
        let tau = a.get(&ModulePoint::new(&[0, 1]));
        assert!((tau - (1.0 - 1.0 / TAU) / 5f64.sqrt()).abs() < 0.01 * 0.17082);
        assert!(a.get(&ModulePoint::new(&[1, 0])) < 0.01);
        for e in &a.entries {
            assert!(e.frequency <= d.value + 1e-12);
            assert_eq!(e.frequency, a.get(&-&e.v));
        }
    }

    #[test]
    fn golden_section_finds_maximum() {
        let k = golden_max(&|x: f64| -(x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((k - 0.3).abs() < 1e-6);
    }

    #[test]
    fn recurrence_matches_direct_sums() {
        let xs: Vec<f64> = (0..500).map(|i| i as f64 * TAU).collect();
        let grid = scan_grid(&xs, 0.001, 1200, 1.0);
        for j in [0, 1, 255, 256, 257, 700, 1199] {
            let direct = exponential_sum(xs.iter().map(std::slice::from_ref), &[j as f64 * 0.001]);
            assert!((grid[j] - direct).abs() < 1e-6 * direct.max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn intensity_bounded_by_density_squared(k in 0.0f64..3.0) {
            let s = seq(&[100.0, 300.0]);
            let src = fibonacci_scheme();
            let dens = density(&src, &s).unwrap().value;
            let i = bragg_intensity(&src, &s, &[k]).unwrap().value;
            prop_assert!(i >= 0.0 && i <= dens * dens + 1e-12);
        }
    }
}
