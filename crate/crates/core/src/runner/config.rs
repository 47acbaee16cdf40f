//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detequiv::AssumptionConfig;
use crate::ensemble::{DeformationKind, DeformationSpec};
use crate::error::{Error, Result};
use crate::localstats::{RadialBins, Thresholds, UniversalityConfig};
use crate::susy::checks::BatteryConfig;
use crate::Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub sup_distance: f64,
    pub density_resid: f64,
    /// Relative error allowed by the Girko check.
    pub quadrature: f64,
    /// Relative tolerance of the `u_*` solve.
    pub solver: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { sup_distance: 0.05, density_resid: 0.03, quadrature: 1e-2, solver: 1e-13 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinConfig {
    pub width: f64,
    pub max_radius: f64,
    /// Bins with centre above this radius are ignored by the sup-distance.
    pub compare_up_to: f64,
}

impl Default for BinConfig {
    fn default() -> Self {
        Self { width: 0.1, max_radius: 4.0, compare_up_to: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetEquivKnobs {
    /// Replace `z0` by the best bulk point of a scan.
    pub pick_bulk: bool,
    pub pick_resolution: usize,
    pub pick_half_width: f64,
    pub pick_center: Complex64,
    pub assumptions: AssumptionConfig,
    /// Points of the saddle profile written next to the parameters.
    pub profile_points: usize,
}

impl Default for DetEquivKnobs {
    fn default() -> Self {
        Self {
            pick_bulk: false,
            pick_resolution: 41,
            pick_half_width: 1.0,
            pick_center: Complex64::new(0.0, 0.0),
            assumptions: AssumptionConfig::default(),
            profile_points: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupportKnobs {
    pub resolution: usize,
    pub half_width: f64,
    pub center: Complex64,
}

impl Default for SupportKnobs {
    fn default() -> Self {
        Self { resolution: 400, half_width: 1.5, center: Complex64::new(0.0, 0.0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GirkoKnobs {
    pub resolution: usize,
    pub center: Complex64,
    pub radius: f64,
    /// Trial index of the sampled matrix.
    pub trial: u64,
}

impl Default for GirkoKnobs {
    fn default() -> Self {
        Self { resolution: 401, center: Complex64::new(0.0, 0.0), radius: 0.5, trial: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SusyKnobs {
    pub grassmann_cap: usize,
    pub inequality_boundary_samples: usize,
    pub inequality_interior_samples: usize,
    pub bosonic_mc_samples: usize,
}

impl Default for SusyKnobs {
    fn default() -> Self {
        let b = BatteryConfig::default();
        Self {
            grassmann_cap: b.grassmann_cap,
            inequality_boundary_samples: b.inequality_boundary_samples,
            inequality_interior_samples: b.inequality_interior_samples,
            bosonic_mc_samples: b.bosonic_mc_samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub deformation: DeformationKind,
    pub z0: Complex64,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Radius of the rescaled window kept around `z0`.
    pub window_radius: f64,
    /// Only points this far inside the window serve as pair centres.
    pub inner_margin: f64,
    pub bins: BinConfig,
    pub tolerances: Tolerances,
    /// Worker threads; `None` uses every core. Never changes results.
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub detequiv: DetEquivKnobs,
    pub support: SupportKnobs,
    pub girko: GirkoKnobs,
    pub susy: SusyKnobs,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            deformation: DeformationKind::Zero,
            z0: Complex64::new(0.0, 0.0),
            n: 64,
            trials: 100,
            master_seed: 0,
            window_radius: 7.0,
            inner_margin: 0.0,
            bins: BinConfig::default(),
            tolerances: Tolerances::default(),
            threads: None,
            out: PathBuf::from("out"),
            detequiv: DetEquivKnobs::default(),
            support: SupportKnobs::default(),
            girko: GirkoKnobs::default(),
            susy: SusyKnobs::default(),
        }
    }
}

/// Command-line values that win over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.master_seed = v;
        }
        if let Some(v) = o.n {
            self.n = v;
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = o.threads {
            self.threads = Some(v);
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("sup_distance", t.sup_distance),
            ("density_resid", t.density_resid),
            ("quadrature", t.quadrature),
            ("solver", t.solver),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if !(self.window_radius > 0.0 && self.window_radius.is_finite()) {
            return bad("window_radius must be positive".into());
        }
        if !(self.inner_margin >= 0.0 && self.inner_margin < self.window_radius) {
            return bad("inner_margin must lie in [0, window_radius)".into());
        }
        if self.window_radius < self.bins.max_radius {
            return bad("window_radius must be at least bins.max_radius".into());
        }
        if !(self.girko.radius > 0.0) || self.girko.resolution == 0 {
            return bad("girko needs a positive radius and resolution".into());
        }
        if self.support.resolution < 2 || !(self.support.half_width > 0.0) {
            return bad("support scan needs resolution >= 2 and a positive half width".into());
        }
        self.radial_bins().map(|_| ()).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn deformation_spec(&self) -> DeformationSpec {
        DeformationSpec::new(self.deformation.clone(), self.n)
    }

    pub fn radial_bins(&self) -> Result<RadialBins> {
        RadialBins::uniform(self.bins.width, self.bins.max_radius)
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            sup_distance: self.tolerances.sup_distance,
            density_resid: self.tolerances.density_resid,
            r_max: self.bins.compare_up_to,
        }
    }

    pub fn universality(&self, z0: Complex64) -> Result<UniversalityConfig> {
        Ok(UniversalityConfig {
            z0,
            trials: self.trials,
            master_seed: self.master_seed,
            window_radius: self.window_radius,
            bins: self.radial_bins()?,
            inner_margin: self.inner_margin,
            thresholds: self.thresholds(),
            tol: self.tolerances.solver,
        })
    }

    pub fn battery(&self) -> BatteryConfig {
        BatteryConfig {
            seed: self.master_seed,
            grassmann_cap: self.susy.grassmann_cap,
            inequality_boundary_samples: self.susy.inequality_boundary_samples,
            inequality_interior_samples: self.susy.inequality_interior_samples,
            bosonic_mc_samples: self.susy.bosonic_mc_samples,
        }
    }

    /// Digest of every field that can change numeric output.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.out = PathBuf::new();
        super::manifest::digest_json(&c)
    }
}
