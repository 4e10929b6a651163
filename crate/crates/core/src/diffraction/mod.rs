mod periods;
mod spectrum;
mod transfer;
mod vanhove;

use serde::{Deserialize, Serialize};

pub use periods::{
    almost_periods, almost_periods_with, pp_criterion, symmetric_difference, AlmostPeriodReport, Period, PpEntry,
    PpReport, PpThresholds, PpVerdict,
};
pub use spectrum::{
    autocorrelation, bragg_intensity, density, exponential_sum, peak_scan, AutocorrEntry,
    Autocorrelation, Estimate, Peak, PeakScan, CONVERGENCE_TOL, PEAK_FLOOR,
};
pub use transfer::{
    transfer_check, Sandwich, TransferOptions, TransferReport, TransferSample, SAMPLING_TOL,
    SCALING_TOL,
};
pub use vanhove::{boundary_fraction, Region, VanHoveSequence, MAX_BOUNDARY_FRACTION};

use crate::error::Result;
use crate::generators::PointSource;

/// Density, autocorrelation and Bragg peaks of one set along one sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiffractionData {
    pub density: Estimate,
    pub autocorr: Autocorrelation,
    pub peaks: Vec<Peak>,
    pub peak_counts: Vec<usize>,
    pub radii: Vec<f64>,
}

impl DiffractionData {
    /// `autocorr[0]` equals the density and no frequency exceeds it.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let d = self.density.value;
        let zero = self
            .autocorr
            .entries
            .iter()
            .find(|e| e.v.is_zero())
            .map_or(0.0, |e| e.frequency);
        (zero - d).abs() <= tol * d && self.autocorr.entries.iter().all(|e| e.frequency <= d + tol * d)
    }
}

pub fn diffraction_data<S: PointSource + ?Sized>(
    src: &S,
    seq: &VanHoveSequence,
    radius: f64,
    k_max: f64,
    floor: f64,
) -> Result<DiffractionData> {
    let density = density(src, seq)?;
    let autocorr = autocorrelation(src, seq, radius)?;
    let scan = peak_scan(src, seq, k_max, floor)?;
    Ok(DiffractionData {
        density,
        autocorr,
        peaks: scan.peaks,
        peak_counts: scan.counts,
        radii: seq.radii().to_vec(),
    })
}
