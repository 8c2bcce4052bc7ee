//! Pose-cell continuous attractor network over (x, y, θ).
//!
//! Activity lives on a 3-torus. Each cycle it is shifted by odometry
//! (path integration), receives energy from matched templates, and settles
//! under local Gaussian excitation plus constant global inhibition. The sum
//! of activity is 1 after every public operation.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap, Pose, Twist};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseCellParams {
    /// Cell counts along x, y, θ.
    pub dims: [usize; 3],
    /// Metric extent covered by one wrap of the x and y axes.
    pub extent_m: f64,
    pub excite_sigma: f64,
    pub excite_radius: usize,
    pub global_inhibition: f64,
    pub inject_sigma: f64,
    pub decode_radius: usize,
}

impl Default for PoseCellParams {
    fn default() -> Self {
        Self {
            dims: [21, 21, 36],
            extent_m: 10.0,
            excite_sigma: 1.0,
            excite_radius: 3,
            global_inhibition: 5e-5,
            inject_sigma: 1.0,
            decode_radius: 5,
        }
    }
}

impl PoseCellParams {
    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 2) {
            return Err(Error::param(
                "pose_cells.dims",
                "every axis needs at least 2 cells",
            ));
        }
        if !(self.extent_m > 0.0) {
            return Err(Error::param("pose_cells.extent_m", "must be positive"));
        }
        if !(self.excite_sigma > 0.0) || !(self.inject_sigma > 0.0) {
            return Err(Error::param("pose_cells.sigma", "must be positive"));
        }
        if !(self.global_inhibition >= 0.0) {
            return Err(Error::param(
                "pose_cells.global_inhibition",
                "must be non-negative",
            ));
        }
        let min_dim = *self.dims.iter().min().unwrap();
        if 2 * self.excite_radius + 1 > min_dim || 2 * self.decode_radius + 1 > min_dim {
            return Err(Error::param(
                "pose_cells",
                "kernel or decode radius exceeds grid",
            ));
        }
        Ok(())
    }

    /// Metres per x-cell, metres per y-cell, radians per θ-cell.
    pub fn cell_size(&self) -> [f64; 3] {
        [
            self.extent_m / self.dims[0] as f64,
            self.extent_m / self.dims[1] as f64,
            TAU / self.dims[2] as f64,
        ]
    }
}

/// Decoded best pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub cell_coords: [f64; 3],
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseCellGrid {
    params: PoseCellParams,
    cell_size: [f64; 3],
    kernel: Vec<f64>,
    /// x-major: index = (ix * ny + iy) * nθ + iθ
    activity: Vec<f64>,
    scratch: Vec<f64>,
}

impl PoseCellGrid {
    /// Uniform activity.
    pub fn new(params: PoseCellParams) -> Result<Self> {
        params.validate()?;
        let n: usize = params.dims.iter().product();
        let kernel = gaussian_kernel(params.excite_sigma, params.excite_radius);
        Ok(Self {
            cell_size: params.cell_size(),
            params,
            kernel,
            activity: vec![1.0 / n as f64; n],
            scratch: vec![0.0; n],
        })
    }

    /// Single bump centred on `cell`.
    pub fn with_packet_at(params: PoseCellParams, cell: [f64; 3]) -> Result<Self> {
        let mut g = Self::new(params)?;
        g.activity.iter_mut().for_each(|a| *a = 0.0);
        g.add_bump(cell, 1.0);
        g.normalize()?;
        Ok(g)
    }

    /// Builds a grid from raw activity, normalized to unit sum.
    pub fn from_activity(params: PoseCellParams, activity: Vec<f64>) -> Result<Self> {
        let mut g = Self::new(params)?;
        if activity.len() != g.activity.len() {
            return Err(Error::param("activity", "length does not match dims"));
        }
        if activity.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::param("activity", "must be finite and non-negative"));
        }
        g.activity = activity;
        g.normalize()?;
        Ok(g)
    }

    pub fn params(&self) -> &PoseCellParams {
        &self.params
    }

    pub fn dims(&self) -> [usize; 3] {
        self.params.dims
    }

    pub fn cell_size(&self) -> [f64; 3] {
        self.cell_size
    }

    pub fn activity(&self) -> &[f64] {
        &self.activity
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, it: usize) -> usize {
        let [_, ny, nt] = self.params.dims;
        (ix * ny + iy) * nt + it
    }

    pub fn get(&self, ix: usize, iy: usize, it: usize) -> f64 {
        self.activity[self.index(ix, iy, it)]
    }

    pub fn total(&self) -> f64 {
        self.activity.iter().sum()
    }

    /// Continuous cell coordinates of a world pose.
    pub fn cell_of(&self, pose: &Pose) -> [f64; 3] {
        let [nx, ny, nt] = self.params.dims.map(|d| d as f64);
        [
            (pose.x / self.cell_size[0]).rem_euclid(nx),
            (pose.y / self.cell_size[1]).rem_euclid(ny),
            (pose.theta / self.cell_size[2]).rem_euclid(nt),
        ]
    }

    /// World pose of continuous cell coordinates (first wrap of x and y).
    pub fn pose_of(&self, cell: [f64; 3]) -> Pose {
        Pose::new(
            cell[0] * self.cell_size[0],
            cell[1] * self.cell_size[1],
            wrap(cell[2] * self.cell_size[2]),
        )
    }

    fn normalize(&mut self) -> Result<()> {
        let s: f64 = self.activity.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::DegenerateActivity);
        }
        let inv = 1.0 / s;
        self.activity.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    /// Local excitation, global inhibition, renormalization.
    pub fn step_attractor(&mut self) -> Result<()> {
        for axis in 0..3 {
            self.convolve_axis(axis);
        }
        let phi = self.params.global_inhibition;
        self.activity
            .iter_mut()
            .for_each(|a| *a = (*a - phi).max(0.0));
        self.normalize()
    }

    fn convolve_axis(&mut self, axis: usize) {
        let dims = self.params.dims;
        let n = dims[axis];
        let r = self.params.excite_radius as isize;
        let stride = axis_stride(dims, axis);
        for base in lines(dims, axis) {
            for i in 0..n {
                let mut acc = 0.0;
                for (k, w) in self.kernel.iter().enumerate() {
                    let j = (i as isize + k as isize - r).rem_euclid(n as isize) as usize;
                    acc += w * self.activity[base + j * stride];
                }
                self.scratch[base + i * stride] = acc;
            }
        }
        std::mem::swap(&mut self.activity, &mut self.scratch);
    }

    /// Shifts every θ-plane along its own heading and the whole volume
    /// along θ, with linear interpolation and wrap-around.
    pub fn path_integrate(&mut self, odom: &Twist) -> Result<()> {
        let [nx, ny, nt] = self.params.dims;
        let [csx, csy, cst] = self.cell_size;
        if !(odom.dforward.abs() < nx as f64 * csx / 2.0) {
            return Err(Error::param("dforward", "exceeds half the x wrap"));
        }
        if odom.dforward != 0.0 {
            let mut plane = vec![0.0; nx * ny];
            let mut tmp = vec![0.0; nx * ny];
            for it in 0..nt {
                let (s, c) = (it as f64 * cst).sin_cos();
                let sx = odom.dforward * c / csx;
                let sy = odom.dforward * s / csy;
                for ix in 0..nx {
                    for iy in 0..ny {
                        plane[ix * ny + iy] = self.activity[self.index(ix, iy, it)];
                    }
                }
                shift_lines(&plane, &mut tmp, nx, ny, 0, sx);
                shift_lines(&tmp, &mut plane, nx, ny, 1, sy);
                for ix in 0..nx {
                    for iy in 0..ny {
                        let idx = self.index(ix, iy, it);
                        self.activity[idx] = plane[ix * ny + iy];
                    }
                }
            }
        }
        if odom.dtheta != 0.0 {
            let st = odom.dtheta / cst;
            shift_lines(&self.activity, &mut self.scratch, nx * ny, nt, 1, st);
            std::mem::swap(&mut self.activity, &mut self.scratch);
        }
        Ok(())
    }

    /// Adds `energy` times a unit-mass wrapped Gaussian at `at`, then
    /// renormalizes.
    pub fn inject(&mut self, at: [f64; 3], energy: f64) -> Result<()> {
        if !(energy >= 0.0) || !energy.is_finite() {
            return Err(Error::param("energy", "must be finite and non-negative"));
        }
        if energy == 0.0 {
            return Ok(());
        }
        self.add_bump(at, energy);
        self.normalize()
    }

    fn add_bump(&mut self, at: [f64; 3], energy: f64) {
        let dims = self.params.dims;
        let sigma = self.params.inject_sigma;
        let profile = |axis: usize| -> Vec<f64> {
            let n = dims[axis] as f64;
            let g: Vec<f64> = (0..dims[axis])
                .map(|i| {
                    let d = wrapped_offset(i as f64 - at[axis], n);
                    (-0.5 * (d / sigma).powi(2)).exp()
                })
                .collect();
            let s: f64 = g.iter().sum();
            g.into_iter().map(|v| v / s).collect()
        };
        let (gx, gy, gt) = (profile(0), profile(1), profile(2));
        for (ix, wx) in gx.iter().enumerate() {
            for (iy, wy) in gy.iter().enumerate() {
                let wxy = energy * wx * wy;
                let base = self.index(ix, iy, 0);
                for (it, wt) in gt.iter().enumerate() {
                    self.activity[base + it] += wxy * wt;
                }
            }
        }
    }

    /// Location of the strongest cell (first in index order on ties).
    pub fn argmax(&self) -> Result<[usize; 3]> {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &a) in self.activity.iter().enumerate() {
            if a > best.1 {
                best = (i, a);
            }
        }
        if !(best.1 > 0.0) {
            return Err(Error::DegenerateActivity);
        }
        let [_, ny, nt] = self.params.dims;
        let i = best.0;
        Ok([i / (ny * nt), (i / nt) % ny, i % nt])
    }

    /// Activity-weighted circular mean in a wrapped box around the peak cell.
    pub fn decode_peak(&self) -> Result<PoseEstimate> {
        let peak = self.argmax()?;
        let dims = self.params.dims;
        let r = self.params.decode_radius as isize;
        let mut sin = [0.0; 3];
        let mut cos = [0.0; 3];
        for ox in -r..=r {
            let ix = wrap_index(peak[0] as isize + ox, dims[0]);
            for oy in -r..=r {
                let iy = wrap_index(peak[1] as isize + oy, dims[1]);
                for ot in -r..=r {
                    let it = wrap_index(peak[2] as isize + ot, dims[2]);
                    let a = self.get(ix, iy, it);
                    if a == 0.0 {
                        continue;
                    }
                    for (axis, off) in [ox, oy, ot].into_iter().enumerate() {
                        let ang = off as f64 * TAU / dims[axis] as f64;
                        sin[axis] += a * ang.sin();
                        cos[axis] += a * ang.cos();
                    }
                }
            }
        }
        let mut cell = [0.0; 3];
        for axis in 0..3 {
            let n = dims[axis] as f64;
            let off = sin[axis].atan2(cos[axis]) * n / TAU;
            cell[axis] = (peak[axis] as f64 + off).rem_euclid(n);
            // rem_euclid can round to exactly n
            if cell[axis] >= n {
                cell[axis] = 0.0;
            }
        }
        Ok(PoseEstimate {
            cell_coords: cell,
            pose: self.pose_of(cell),
        })
    }

    /// Flat CSV dump, one `ix,iy,itheta,activity` row per cell in x-major
    /// order.
    pub fn to_csv(&self) -> String {
        let [nx, ny, nt] = self.params.dims;
        let mut out = String::from("ix,iy,itheta,activity\n");
        for ix in 0..nx {
            for iy in 0..ny {
                for it in 0..nt {
                    let _ = writeln!(out, "{ix},{iy},{it},{:e}", self.get(ix, iy, it));
                }
            }
        }
        out
    }

    /// Raw little-endian f64 activity in x-major order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.activity.iter().flat_map(|a| a.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(params: PoseCellParams, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(8) {
            return Err(Error::param("bytes", "length is not a multiple of 8"));
        }
        let activity = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut g = Self::new(params)?;
        if g.activity.len() * 8 != bytes.len() {
            return Err(Error::param("bytes", "length does not match dims"));
        }
        g.activity = activity;
        Ok(g)
    }

    /// Integer toroidal roll of the whole volume.
    pub fn rolled(&self, by: [isize; 3]) -> Self {
        let [nx, ny, nt] = self.params.dims;
        let mut out = self.clone();
        for ix in 0..nx {
            for iy in 0..ny {
                for it in 0..nt {
                    let jx = wrap_index(ix as isize + by[0], nx);
                    let jy = wrap_index(iy as isize + by[1], ny);
                    let jt = wrap_index(it as isize + by[2], nt);
                    let dst = out.index(jx, jy, jt);
                    out.activity[dst] = self.get(ix, iy, it);
                }
            }
        }
        out
    }
}

/// Offset `d` folded into (-n/2, n/2].
#[inline]
pub(crate) fn wrapped_offset(d: f64, n: f64) -> f64 {
    let m = d.rem_euclid(n);
    if m > n / 2.0 {
        m - n
    } else {
        m
    }
}

#[inline]
fn wrap_index(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let k: Vec<f64> = (-r..=r)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

fn axis_stride(dims: [usize; 3], axis: usize) -> usize {
    match axis {
        0 => dims[1] * dims[2],
        1 => dims[2],
        _ => 1,
    }
}

/// Base offsets of every 1D line running along `axis`.
fn lines(dims: [usize; 3], axis: usize) -> impl Iterator<Item = usize> {
    let stride = axis_stride(dims, axis);
    let total: usize = dims.iter().product();
    let span = stride * dims[axis];
    (0..total).filter(move |i| (i % span) < stride)
}

/// Shifts a 2D `rows × cols` row-major array by `s` cells along `axis`
/// (0 = rows, 1 = cols) with linear interpolation and wrap-around:
/// `out[j] = (1 - f) in[j - n] + f in[j - n - 1]` where `s = n + f`.
fn shift_lines(src: &[f64], dst: &mut [f64], rows: usize, cols: usize, axis: usize, s: f64) {
    let n = s.floor();
    let f = s - n;
    let n = n as isize;
    let (len, count) = if axis == 0 {
        (rows, cols)
    } else {
        (cols, rows)
    };
    for line in 0..count {
        for j in 0..len {
            let a = wrap_index(j as isize - n, len);
            let b = wrap_index(j as isize - n - 1, len);
            let at = |k: usize| {
                if axis == 0 {
                    src[k * cols + line]
                } else {
                    src[line * cols + k]
                }
            };
            let v = (1.0 - f) * at(a) + f * at(b);
            if axis == 0 {
                dst[j * cols + line] = v;
            } else {
                dst[line * cols + j] = v;
            }
        }
    }
}
