//! Rigid swept-segment whiskers with contact-arrested protraction.

use serde::{Deserialize, Serialize};

use super::world::World;
use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::tactile::{WhiskCycleData, WhiskerContact, WHISKER_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhiskerArray {
    /// Mounting angles span ±`fan_deg` about the heading.
    pub fan_deg: f64,
    pub length_m: f64,
    pub amplitude_deg: f64,
    /// Angular increments per protraction.
    pub sweep_steps: usize,
}

impl Default for WhiskerArray {
    fn default() -> Self {
        Self {
            fan_deg: 60.0,
            length_m: 0.25,
            amplitude_deg: 30.0,
            sweep_steps: 30,
        }
    }
}

impl WhiskerArray {
    pub fn validate(&self) -> Result<()> {
        if !(self.fan_deg > 0.0 && self.fan_deg < 180.0) {
            return Err(Error::param("whiskers.fan_deg", "must lie in (0, 180)"));
        }
        if !(self.length_m > 0.0) {
            return Err(Error::param("whiskers.length_m", "must be positive"));
        }
        if !(self.amplitude_deg > 0.0 && self.amplitude_deg <= 90.0) {
            return Err(Error::param(
                "whiskers.amplitude_deg",
                "must lie in (0, 90]",
            ));
        }
        if self.sweep_steps == 0 {
            return Err(Error::param("whiskers.sweep_steps", "must be at least 1"));
        }
        Ok(())
    }

    /// Rest angle of whisker `i` in the head frame, counter-clockwise from
    /// the heading.
    pub fn mounting_angle(&self, i: usize) -> f64 {
        let fan = self.fan_deg.to_radians();
        -fan + 2.0 * fan * i as f64 / (WHISKER_COUNT - 1) as f64
    }

    /// Whisker angle at sweep increment `k`: protraction fans each whisker
    /// outward from its rest angle, away from the heading, so surfaces
    /// beside the head are met part-way through the sweep.
    pub fn sweep_angle(&self, i: usize, k: usize) -> f64 {
        let m = self.mounting_angle(i);
        let a = self.amplitude_deg.to_radians();
        m + m.signum() * a * k as f64 / self.sweep_steps as f64
    }

    /// Bend left over when protraction stops at increment `k`.
    fn deflection(&self, k: usize) -> f64 {
        let a = self.amplitude_deg.to_radians();
        a * (1.0 - k as f64 / (self.sweep_steps + 1) as f64)
    }
}

/// One whisk cycle: every whisker protracts until its segment first
/// touches a surface, then stops.
pub fn whisk_cycle(world: &World, head: &Pose, array: &WhiskerArray) -> Result<WhiskCycleData> {
    array.validate()?;
    world.check_free(head.position())?;
    let mut out = WhiskCycleData::empty();
    let origin = head.position();
    for i in 0..WHISKER_COUNT {
        for k in 0..=array.sweep_steps {
            let dir = Point2::from_angle(head.theta + array.sweep_angle(i, k));
            if let Some(hit) = world.segment_hit(origin, dir, array.length_m) {
                out.deflections[i] = array.deflection(k);
                out.contacts_head.push(WhiskerContact {
                    whisker: i,
                    point: head.inverse_transform_point(hit.point),
                });
                break;
            }
        }
    }
    Ok(out)
}
