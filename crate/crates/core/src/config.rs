//! TOML configuration. Every key is optional; missing ones take the
//! defaults below, unknown ones are rejected.
//!
//! ```toml
//! [visual]
//! threshold = 0.035
//!
//! [fusion]
//! tactile_energy = 0.02
//!
//! [simulator.trajectory]
//! cylinder_orbits = 3
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expmap::ExpMapParams;
use crate::posecell::PoseCellParams;
use crate::sim::SimConfig;
use crate::tactile::TactileParams;
use crate::visual::VisualParams;

/// Per-modality injection gains. Each matched template adds its own bump
/// to the pose cells; there is no cross-modal weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    pub visual_energy: f64,
    pub tactile_energy: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            visual_energy: 0.02,
            tactile_energy: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub visual: VisualParams,
    pub tactile: TactileParams,
    pub pose_cells: PoseCellParams,
    pub fusion: FusionParams,
    pub experience_map: ExpMapParams,
    pub simulator: SimConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.visual.validate()?;
        self.tactile.validate()?;
        self.pose_cells.validate()?;
        self.experience_map.validate()?;
        self.simulator.validate()?;
        let f = &self.fusion;
        if !(f.visual_energy >= 0.0 && f.tactile_energy >= 0.0) {
            return Err(Error::param("fusion", "energies must be non-negative"));
        }
        if self.simulator.camera.width < self.visual.profile_len {
            return Err(Error::Mismatch(
                "camera width is below the view profile length",
            ));
        }
        Ok(())
    }
}
