//! Arena geometry: a walled rectangle holding a cylinder and an
//! axis-aligned cube, with ray and segment queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cylinder {
    pub center: Point2,
    pub radius: f64,
    pub shade: [u8; 3],
}

impl Default for Cylinder {
    fn default() -> Self {
        Self {
            center: Point2::new(2.5, 2.5),
            radius: 0.4,
            shade: [186, 182, 170],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cube {
    pub center: Point2,
    pub half_side: f64,
    pub shade: [u8; 3],
}

impl Default for Cube {
    fn default() -> Self {
        Self {
            center: Point2::new(5.5, 2.5),
            half_side: 0.35,
            shade: [70, 62, 60],
        }
    }
}

/// Low-contrast stripes painted along the walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WallTexture {
    pub base: [u8; 3],
    /// Stripe offset added to / subtracted from `base`.
    pub amplitude: u8,
    pub period_m: f64,
}

impl Default for WallTexture {
    fn default() -> Self {
        Self {
            base: [128, 128, 126],
            amplitude: 3,
            period_m: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct World {
    pub width: f64,
    pub height: f64,
    pub cylinder: Cylinder,
    pub cube: Cube,
    pub walls: WallTexture,
    pub floor_shade: [u8; 3],
    pub ceiling_shade: [u8; 3],
}

impl Default for World {
    fn default() -> Self {
        Self {
            width: 8.0,
            height: 5.0,
            cylinder: Cylinder::default(),
            cube: Cube::default(),
            walls: WallTexture::default(),
            floor_shade: [124, 124, 122],
            ceiling_shade: [132, 132, 132],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Cylinder,
    Cube,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub point: Point2,
    pub surface: Surface,
    /// Perimeter coordinate for wall hits, 0 otherwise.
    pub wall_s: f64,
}

impl World {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::param("world", "arena must have positive size"));
        }
        let c = &self.cylinder;
        let q = &self.cube;
        if !(c.radius > 0.0 && q.half_side > 0.0) {
            return Err(Error::param("world", "landmark sizes must be positive"));
        }
        let inside = |p: Point2, r: f64| {
            p.x - r > 0.0 && p.y - r > 0.0 && p.x + r < self.width && p.y + r < self.height
        };
        if !inside(c.center, c.radius) || !inside(q.center, q.half_side) {
            return Err(Error::param(
                "world",
                "landmarks must lie strictly inside the arena",
            ));
        }
        if self.dist_to_cube(c.center) <= c.radius {
            return Err(Error::param("world", "landmarks overlap"));
        }
        if !(self.walls.period_m > 0.0) {
            return Err(Error::param("world.walls.period_m", "must be positive"));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x > 0.0 && p.y > 0.0 && p.x < self.width && p.y < self.height
    }

    /// Head position must be inside the arena and outside both landmarks.
    pub fn check_free(&self, p: Point2) -> Result<()> {
        if !self.contains(p)
            || p.distance(self.cylinder.center) <= self.cylinder.radius
            || self.inside_cube(p)
        {
            return Err(Error::OutsideArena { x: p.x, y: p.y });
        }
        Ok(())
    }

    fn inside_cube(&self, p: Point2) -> bool {
        let h = self.cube.half_side;
        (p.x - self.cube.center.x).abs() <= h && (p.y - self.cube.center.y).abs() <= h
    }

    /// Distance from `p` to the cube outline (0 inside).
    pub fn dist_to_cube(&self, p: Point2) -> f64 {
        let h = self.cube.half_side;
        let dx = ((p.x - self.cube.center.x).abs() - h).max(0.0);
        let dy = ((p.y - self.cube.center.y).abs() - h).max(0.0);
        dx.hypot(dy)
    }

    /// Distance from `p` to the nearest landmark surface (0 inside one).
    pub fn dist_to_landmarks(&self, p: Point2) -> f64 {
        let cyl = (p.distance(self.cylinder.center) - self.cylinder.radius).max(0.0);
        cyl.min(self.dist_to_cube(p))
    }

    /// Distance from `p` to the nearest surface of any kind. Measured to
    /// the boundary, so points on a surface give 0 from either side.
    pub fn dist_to_surface(&self, p: Point2) -> f64 {
        let cyl = (p.distance(self.cylinder.center) - self.cylinder.radius).abs();
        let h = self.cube.half_side;
        let (ax, ay) = (
            (p.x - self.cube.center.x).abs(),
            (p.y - self.cube.center.y).abs(),
        );
        let cube = if ax <= h && ay <= h {
            (h - ax).min(h - ay)
        } else {
            self.dist_to_cube(p)
        };
        let wall =
            p.x.abs()
                .min((self.width - p.x).abs())
                .min(p.y.abs())
                .min((self.height - p.y).abs());
        cyl.min(cube).min(wall)
    }

    /// First surface hit by the ray `origin + t dir` (`dir` unit length).
    pub fn raycast(&self, origin: Point2, dir: Point2) -> Hit {
        let mut best = self.wall_hit(origin, dir);
        if let Some(t) = ray_circle(origin, dir, self.cylinder.center, self.cylinder.radius) {
            if t < best.distance {
                best = Hit {
                    distance: t,
                    point: origin + dir.scale(t),
                    surface: Surface::Cylinder,
                    wall_s: 0.0,
                };
            }
        }
        if let Some(t) = ray_box(origin, dir, self.cube.center, self.cube.half_side) {
            if t < best.distance {
                best = Hit {
                    distance: t,
                    point: origin + dir.scale(t),
                    surface: Surface::Cube,
                    wall_s: 0.0,
                };
            }
        }
        best
    }

    /// First hit along a segment of length `len`, if any.
    pub fn segment_hit(&self, origin: Point2, dir: Point2, len: f64) -> Option<Hit> {
        let h = self.raycast(origin, dir);
        (h.distance <= len).then_some(h)
    }

    fn wall_hit(&self, o: Point2, d: Point2) -> Hit {
        let mut t = f64::INFINITY;
        if d.x > 0.0 {
            t = t.min((self.width - o.x) / d.x);
        } else if d.x < 0.0 {
            t = t.min(-o.x / d.x);
        }
        if d.y > 0.0 {
            t = t.min((self.height - o.y) / d.y);
        } else if d.y < 0.0 {
            t = t.min(-o.y / d.y);
        }
        let t = t.max(0.0);
        let mut p = o + d.scale(t);
        // snap onto the wall the ray exits through
        let (w, h) = (self.width, self.height);
        let s = if (p.y - 0.0).abs() < 1e-9 {
            p.y = 0.0;
            p.x
        } else if (p.x - w).abs() < 1e-9 {
            p.x = w;
            w + p.y
        } else if (p.y - h).abs() < 1e-9 {
            p.y = h;
            w + h + (w - p.x)
        } else {
            p.x = 0.0;
            2.0 * w + h + (h - p.y)
        };
        Hit {
            distance: t,
            point: p,
            surface: Surface::Wall,
            wall_s: s,
        }
    }

    pub fn wall_color(&self, s: f64) -> [u8; 3] {
        let stripe = ((s / self.walls.period_m).floor() as i64).rem_euclid(2) == 0;
        let a = i16::from(self.walls.amplitude);
        let off = if stripe { a } else { -a };
        self.walls
            .base
            .map(|c| (i16::from(c) + off).clamp(0, 255) as u8)
    }
}

/// Nearest non-negative intersection with a circle; rays starting inside
/// report the exit point.
fn ray_circle(o: Point2, d: Point2, c: Point2, r: f64) -> Option<f64> {
    let oc = c - o;
    let b = oc.dot(d);
    let disc = b * b - (oc.dot(oc) - r * r);
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = b - sq;
    let t1 = b + sq;
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(t1)
    } else {
        None
    }
}

/// Slab test against an axis-aligned square.
fn ray_box(o: Point2, d: Point2, c: Point2, h: f64) -> Option<f64> {
    let mut tmin = f64::NEG_INFINITY;
    let mut tmax = f64::INFINITY;
    for (oi, di, ci) in [(o.x, d.x, c.x), (o.y, d.y, c.y)] {
        let (lo, hi) = (ci - h, ci + h);
        if di == 0.0 {
            if oi < lo || oi > hi {
                return None;
            }
        } else {
            let t1 = (lo - oi) / di;
            let t2 = (hi - oi) / di;
            tmin = tmin.max(t1.min(t2));
            tmax = tmax.min(t1.max(t2));
        }
    }
    if tmax < tmin || tmax < 0.0 {
        return None;
    }
    Some(if tmin >= 0.0 { tmin } else { tmax })
}
