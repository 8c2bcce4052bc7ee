use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, Pose};

/// Absolute trajectory error after rigid alignment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Ate {
    pub rmse_position: f64,
    pub rmse_heading: f64,
}

/// Rotation and translation (no scale) that best maps `est` onto `truth` in
/// the least-squares sense, then the RMSE of what is left.
pub fn ate(est: &[Pose], truth: &[Pose]) -> Result<Ate> {
    if est.len() != truth.len() {
        return Err(Error::param("truth", "length differs from estimates"));
    }
    let n = est.len();
    if n < 2 {
        return Err(Error::TooFewPoses(n));
    }
    let nf = n as f64;
    let (ecx, ecy) = centroid(est);
    let (tcx, tcy) = centroid(truth);

    let mut dot = 0.0;
    let mut cross = 0.0;
    for (e, t) in est.iter().zip(truth) {
        let (ex, ey) = (e.x - ecx, e.y - ecy);
        let (tx, ty) = (t.x - tcx, t.y - tcy);
        dot += ex * tx + ey * ty;
        cross += ex * ty - ey * tx;
    }
    let rot = cross.atan2(dot);
    let (s, c) = rot.sin_cos();

    let mut pos_sq = 0.0;
    let mut head_sq = 0.0;
    for (e, t) in est.iter().zip(truth) {
        let (ex, ey) = (e.x - ecx, e.y - ecy);
        let ax = c * ex - s * ey;
        let ay = s * ex + c * ey;
        pos_sq += (ax - (t.x - tcx)).powi(2) + (ay - (t.y - tcy)).powi(2);
        head_sq += angle_diff(e.theta + rot, t.theta).powi(2);
    }
    Ok(Ate {
        rmse_position: (pos_sq / nf).sqrt(),
        rmse_heading: (head_sq / nf).sqrt(),
    })
}

fn centroid(poses: &[Pose]) -> (f64, f64) {
    let n = poses.len() as f64;
    let (sx, sy) = poses
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    (sx / n, sy / n)
}
