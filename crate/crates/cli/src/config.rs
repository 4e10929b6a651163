use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hom: Option<HomConfig>,
    #[serde(default)]
    pub diffraction: DiffractionConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Fibonacci,
    Integers,
    #[serde(alias = "subst-aba-aaaa")]
    Substitution,
    Product,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    /// Half-widths of the windows `[−s, s]^d`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scales: Vec<f64>,
    /// Substitution levels (substitution and product generators).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<usize>,
    /// `aba-aaaa` or `fibonacci`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<char>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomKind {
    /// Basis images given as expressions.
    Images,
    Identity,
    Star,
    /// `(a, b) ↦ (a, b*)` on a product: identity on the first factor, star
    /// map on the second.
    ProductTied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomConfig {
    pub kind: HomKind,
    /// One row per basis vector; entries like `"sqrt(2)"` or `"-1/tau"`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<Vec<String>>,
    /// Multiplies every image.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffractionConfig {
    pub vanhove: Vec<f64>,
    /// Sequence center; defaults to 0 for generated sets and the window
    /// center for finite patches.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub kmax: f64,
    pub autocorr_radius: f64,
    pub epsilons: Vec<f64>,
    pub max_samples: usize,
    /// Analyse `f(M)` over `F(A_m)` instead of `M` over `A_m`.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub deformed: bool,
}

impl Default for DiffractionConfig {
    fn default() -> Self {
        DiffractionConfig {
            vanhove: vec![1000.0, 10_000.0],
            center: None,
            kmax: 2.0,
            autocorr_radius: 3.0,
            epsilons: vec![0.1, 0.2, 0.35],
            max_samples: 64,
            deformed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Tiedness index below which a map counts as tied.
    pub tie_tolerance: f64,
    pub peak_floor: f64,
    pub gap_ratio: f64,
    pub search_fraction: f64,
    pub search_radius: f64,
    pub census_radius: f64,
    pub max_anchors: usize,
    pub covering_growth: f64,
    pub packing_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let m = meyer_core::meyer::MeyerThresholds::default();
        let p = meyer_core::diffraction::PpThresholds::default();
        Thresholds {
            tie_tolerance: meyer_core::deformation::DEFAULT_TIE_TOL,
            peak_floor: meyer_core::diffraction::PEAK_FLOOR,
            gap_ratio: p.gap_ratio,
            search_fraction: p.search_fraction,
            search_radius: m.search_radius,
            census_radius: m.census_radius,
            max_anchors: m.max_anchors,
            covering_growth: m.covering_growth,
            packing_floor: m.packing_floor,
        }
    }
}

impl Thresholds {
    pub fn meyer(&self) -> meyer_core::meyer::MeyerThresholds {
        meyer_core::meyer::MeyerThresholds {
            search_radius: self.search_radius,
            census_radius: self.census_radius,
            max_anchors: self.max_anchors,
            covering_growth: self.covering_growth,
            packing_floor: self.packing_floor,
        }
    }

    pub fn pp(&self) -> meyer_core::diffraction::PpThresholds {
        meyer_core::diffraction::PpThresholds {
            gap_ratio: self.gap_ratio,
            search_fraction: self.search_fraction,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn strictly_increasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: ExperimentConfig =
            toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the config without its output
    /// section, so results do not depend on where they are written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.generator;
        match g.kind {
            GeneratorKind::Fibonacci | GeneratorKind::Integers => {
                if g.scales.is_empty() {
                    return Err(invalid("generator.scales is empty"));
                }
            }
            GeneratorKind::Substitution | GeneratorKind::Product => {
                if g.levels.is_empty() {
                    return Err(invalid("generator.levels is empty"));
                }
            }
            GeneratorKind::File => {
                if g.path.is_none() {
                    return Err(invalid("generator.path is required for kind = \"file\""));
                }
            }
        }
        if g.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(invalid("generator.scales must be positive"));
        }
        if !strictly_increasing(&g.scales) || !strictly_increasing(&g.levels) {
            return Err(invalid("scales and levels must be strictly increasing"));
        }
        if let Some(d) = g.dim {
            if !(1..=2).contains(&d) {
                return Err(invalid("generator.dim must be 1 or 2"));
            }
        }
        if let Some(r) = &g.rule {
            if r != "aba-aaaa" && r != "fibonacci" {
                return Err(invalid(format!("unknown substitution rule {r:?}")));
            }
        }
        if let Some(h) = &self.hom {
            if h.kind == HomKind::Images && h.images.is_empty() {
                return Err(invalid("hom.images is empty"));
            }
            if h.kind != HomKind::Images && !h.images.is_empty() {
                return Err(invalid("hom.images is only allowed with kind = \"images\""));
            }
        }
        let d = &self.diffraction;
        if d.vanhove.is_empty() || !strictly_increasing(&d.vanhove) {
            return Err(invalid("diffraction.vanhove must be strictly increasing"));
        }
        if d.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("diffraction.epsilons must be positive"));
        }
        let positive = [
            d.kmax,
            d.autocorr_radius,
            self.thresholds.tie_tolerance,
            self.thresholds.peak_floor,
            self.thresholds.gap_ratio,
            self.thresholds.search_fraction,
            self.thresholds.search_radius,
            self.thresholds.census_radius,
            self.thresholds.covering_growth,
            self.thresholds.packing_floor,
        ];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite()))
            || self.thresholds.max_anchors == 0
            || d.max_samples == 0
        {
            return Err(invalid("thresholds must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[generator]
kind = "fibonacci"
scales = [100.0, 1000.0, 10000.0]

[hom]
kind = "images"
images = [["sqrt(2)"], ["pi"]]

[diffraction]
vanhove = [250.0, 1000.0]
epsilons = [0.1, 0.35]

[thresholds]
gap_ratio = 15.0
"#;

    #[test]
    fn round_trip_is_lossless() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        c.validate().unwrap();
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.thresholds.gap_ratio, 15.0);
        assert_eq!(c.thresholds.peak_floor, 1e-3);
    }

    #[test]
    fn hash_ignores_output_and_tracks_content() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let mut moved = c.clone();
        moved.output.dir = Some("/elsewhere".into());
        assert_eq!(c.hash(), moved.hash());
        let mut other = c.clone();
        other.diffraction.kmax = 3.0;
        assert_ne!(c.hash(), other.hash());
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn generator_alias() {
        let c = ExperimentConfig::parse("[generator]\nkind = \"subst-aba-aaaa\"\nlevels = [6, 8]\n").unwrap();
        assert_eq!(c.generator.kind, GeneratorKind::Substitution);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::parse("[generator]\nkind = \"penrose\"\n").is_err());
        assert!(ExperimentConfig::parse("[generator]\nkind = \"fibonacci\"\ncolor = 1\n").is_err());
        let c = ExperimentConfig::parse("[generator]\nkind = \"fibonacci\"\nscales = [10.0, 5.0]\n").unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::parse(
            "[generator]\nkind = \"fibonacci\"\nscales = [10.0]\n[thresholds]\ngap_ratio = 0.0\n",
        )
        .unwrap();
        assert!(c.validate().is_err());
    }
}
