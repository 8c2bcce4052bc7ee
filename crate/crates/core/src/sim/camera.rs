//! Flat 2.5D ray-cast camera.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::{Surface, World};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::visual::RgbImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraParams {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    /// Half height of every object above and below the optical axis.
    pub object_half_height_m: f64,
    /// Per-channel Gaussian sensor noise in 8-bit levels.
    pub noise_sigma: f64,
}

impl Default for CameraParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 32,
            hfov_deg: 90.0,
            object_half_height_m: 0.25,
            noise_sigma: 56.0,
        }
    }
}

impl CameraParams {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::EmptyImage);
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return Err(Error::param("camera.hfov_deg", "must lie in (0, 180)"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::param("camera.noise_sigma", "must be non-negative"));
        }
        Ok(())
    }

    /// Bearing of column `col` relative to the heading; column 0 is the
    /// leftmost (most counter-clockwise).
    pub fn column_bearing(&self, col: usize) -> f64 {
        let fov = self.hfov_deg.to_radians();
        fov * (0.5 - (col as f64 + 0.5) / self.width as f64)
    }
}

/// Noise-free frame. Each column casts one ray; the first surface hit
/// fills a vertical band whose height shrinks with distance, with ceiling
/// above and floor below.
pub fn render_camera(world: &World, head: &Pose, params: &CameraParams) -> Result<RgbImage> {
    params.validate()?;
    world.check_free(head.position())?;
    let (w, h) = (params.width, params.height);
    let half_fov = (params.hfov_deg.to_radians() / 2.0).tan();
    // vertical focal length in pixels for square pixels
    let focal = (w as f64 / 2.0) / half_fov;
    let mut img = RgbImage::filled(w, h, [0, 0, 0]);
    for col in 0..w {
        let bearing = params.column_bearing(col);
        let dir = Point2::from_angle(head.theta + bearing);
        let hit = world.raycast(head.position(), dir);
        let color = match hit.surface {
            Surface::Cylinder => world.cylinder.shade,
            Surface::Cube => world.cube.shade,
            Surface::Wall => world.wall_color(hit.wall_s),
        };
        let depth = (hit.distance * bearing.cos()).max(1e-6);
        let half_band = focal * params.object_half_height_m / depth;
        for row in 0..h {
            let y = row as f64 + 0.5 - h as f64 / 2.0;
            let px = if y.abs() <= half_band {
                color
            } else if y < 0.0 {
                world.ceiling_shade
            } else {
                world.floor_shade
            };
            img.set_pixel(col, row, px);
        }
    }
    Ok(img)
}

/// Adds clamped Gaussian noise to every channel.
pub fn add_sensor_noise(img: &mut RgbImage, sigma: f64, rng: &mut impl Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for v in &mut img.pixels {
        let n: f64 = normal.sample(rng);
        *v = (f64::from(*v) + n).round().clamp(0.0, 255.0) as u8;
    }
}
