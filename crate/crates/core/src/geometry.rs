//! Planar poses and frame transforms.
//!
//! Angles are right-handed, θ = 0 along +x, always kept in [-π, π).

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into [-π, π). Rejects NaN and infinities.
pub fn wrap_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("angle"));
    }
    Ok(wrap(theta))
}

/// Infallible wrap for values already known to be finite.
#[inline]
pub(crate) fn wrap(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let t = theta.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU for tiny negative inputs
    let t = if t >= PI { t - TAU } else { t };
    if t < -PI {
        -PI
    } else {
        t
    }
}

/// Signed smallest difference `a - b` on the circle.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap(a - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector at angle `theta`.
    pub fn from_angle(theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c, s)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Planar pose (x, y, θ).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    /// Builds a pose, wrapping `theta`.
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap(theta),
        }
    }

    pub fn try_new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::NonFinite("pose"));
        }
        Ok(Self {
            x,
            y,
            theta: wrap_angle(theta)?,
        })
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// `self` followed by `other`, with `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose::new(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            -self.theta,
        )
    }

    /// Relative transform taking `self` to `other`, in `self`'s frame.
    pub fn between(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    /// Maps a point from this frame into the parent frame.
    pub fn transform_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)
    }

    /// Maps a point from the parent frame into this frame.
    pub fn inverse_transform_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }

    /// Rotates a free vector (no translation).
    pub fn rotate(&self, v: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    /// World-frame difference `self ⊖ other` with the angle wrapped.
    pub fn difference(&self, other: &Pose) -> [f64; 3] {
        [
            self.x - other.x,
            self.y - other.y,
            angle_diff(self.theta, other.theta),
        ]
    }
}

/// Free function form of [`Pose::compose`].
pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

/// Free function form of [`Pose::transform_point`].
pub fn transform_point(frame: &Pose, p_local: Point2) -> Point2 {
    frame.transform_point(p_local)
}

/// Per-cycle self-motion: drive `dforward` along the current heading, then
/// turn by `dtheta`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub dforward: f64,
    pub dtheta: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist {
        dforward: 0.0,
        dtheta: 0.0,
    };

    pub fn new(dforward: f64, dtheta: f64) -> Result<Self> {
        if !(dforward.is_finite() && dtheta.is_finite()) {
            return Err(Error::NonFinite("twist"));
        }
        if dtheta.abs() >= PI {
            return Err(Error::param("dtheta", "must be below π per step"));
        }
        Ok(Self { dforward, dtheta })
    }

    /// The relative pose this twist produces.
    pub fn as_pose(&self) -> Pose {
        Pose::new(self.dforward, 0.0, self.dtheta)
    }

    pub fn reversed(&self) -> Twist {
        Twist {
            dforward: -self.dforward,
            dtheta: -self.dtheta,
        }
    }
}
