//! Scripted exploration: approach the cylinder, orbit it, cross to the
//! cube, orbit that, stop.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::World;
use super::{stream_rng, Stream};
use crate::error::{Error, Result};
use crate::geometry::{angle_diff, Point2, Pose, Twist};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryParams {
    pub start: Pose,
    /// Linear speed in metres per whisk cycle (0.15 m/s at 2 Hz).
    pub step_m: f64,
    pub max_turn_deg: f64,
    pub cylinder_orbit_radius: f64,
    /// Orbit centre relative to the cylinder centre. A small offset makes
    /// the whisker range vary along the orbit.
    pub cylinder_orbit_offset: Point2,
    pub cylinder_orbits: usize,
    /// Length of the final straight run up to each orbit's entry.
    pub approach_run_m: f64,
    pub cube_orbit_radius: f64,
    pub cube_orbits: usize,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            start: Pose::new(1.0, 1.2, 0.0),
            step_m: 0.075,
            max_turn_deg: 30.0,
            cylinder_orbit_radius: 0.54,
            cylinder_orbit_offset: Point2::new(0.0, 0.05),
            cylinder_orbits: 2,
            approach_run_m: 0.6,
            cube_orbit_radius: 0.6,
            cube_orbits: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "lap", rename_all = "snake_case")]
pub enum Phase {
    Start,
    Approach,
    /// Zero-based lap index.
    CylinderOrbit(usize),
    Transit,
    CubeOrbit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdometryNoise {
    pub forward_sigma_m: f64,
    pub theta_sigma_deg: f64,
}

impl Default for OdometryNoise {
    fn default() -> Self {
        Self {
            forward_sigma_m: 0.01,
            theta_sigma_deg: 0.5,
        }
    }
}

/// A compiled script: one true twist and resulting pose per cycle.
/// Cycle 0 is the start pose reached by a zero twist.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub twists: Vec<Twist>,
    pub truth: Vec<Pose>,
    pub phases: Vec<Phase>,
}

impl Trajectory {
    pub fn compile(params: &TrajectoryParams, world: &World) -> Result<Self> {
        if !(params.step_m > 0.0) {
            return Err(Error::param("trajectory.step_m", "must be positive"));
        }
        if !(params.max_turn_deg > 0.0 && params.max_turn_deg < 180.0) {
            return Err(Error::param(
                "trajectory.max_turn_deg",
                "must lie in (0, 180)",
            ));
        }
        if !(params.cylinder_orbit_radius > 0.0 && params.cube_orbit_radius > 0.0) {
            return Err(Error::param("trajectory", "orbit radii must be positive"));
        }
        let mut b = Builder {
            pose: params.start,
            step: params.step_m,
            max_turn: params.max_turn_deg.to_radians(),
            traj: Trajectory {
                twists: vec![Twist::ZERO],
                truth: vec![params.start],
                phases: vec![Phase::Start],
            },
        };
        let cyl = world.cylinder.center + params.cylinder_orbit_offset;
        let n_cyl = b.orbit_vertices(params.cylinder_orbit_radius);
        let entry = cyl + Point2::new(0.0, -params.cylinder_orbit_radius);
        // line up due south of the entry so first touch happens head-on
        b.go_to(
            entry - Point2::new(0.0, params.approach_run_m),
            PI / 2.0,
            Phase::Approach,
        );
        b.go_to(entry, PI / n_cyl as f64, Phase::Approach);
        for lap in 0..params.cylinder_orbits {
            b.orbit(
                params.cylinder_orbit_radius,
                n_cyl,
                Phase::CylinderOrbit(lap),
            );
        }
        let cube = world.cube.center;
        let n_cube = b.orbit_vertices(params.cube_orbit_radius);
        let cube_entry = cube + Point2::new(0.0, -params.cube_orbit_radius);
        // same southern run-up, so the transit never shadows the orbit's end
        b.go_to(
            cube_entry - Point2::new(0.0, params.approach_run_m),
            PI / 2.0,
            Phase::Transit,
        );
        b.go_to(cube_entry, PI / n_cube as f64, Phase::Transit);
        for lap in 0..params.cube_orbits {
            b.orbit(params.cube_orbit_radius, n_cube, Phase::CubeOrbit(lap));
        }
        Ok(b.traj)
    }

    pub fn len(&self) -> usize {
        self.twists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twists.is_empty()
    }

    /// Cycles whose motion belongs to `phase`.
    pub fn cycles_in(&self, phase: Phase) -> impl Iterator<Item = usize> + '_ {
        self.phases
            .iter()
            .enumerate()
            .filter(move |(_, p)| **p == phase)
            .map(|(i, _)| i)
    }
}

struct Builder {
    pose: Pose,
    step: f64,
    max_turn: f64,
    traj: Trajectory,
}

impl Builder {
    fn push(&mut self, t: Twist, phase: Phase) {
        self.pose = self.pose.compose(&t.as_pose());
        self.traj.twists.push(t);
        self.traj.truth.push(self.pose);
        self.traj.phases.push(phase);
    }

    fn turn_to(&mut self, heading: f64, phase: Phase) {
        let delta = angle_diff(heading, self.pose.theta);
        if delta.abs() < 1e-12 {
            return;
        }
        let n = (delta.abs() / self.max_turn).ceil() as usize;
        for _ in 0..n {
            self.push(
                Twist {
                    dforward: 0.0,
                    dtheta: delta / n as f64,
                },
                phase,
            );
        }
    }

    fn go_to(&mut self, target: Point2, heading: f64, phase: Phase) {
        let d = target - self.pose.position();
        let dist = d.norm();
        if dist > 1e-12 {
            self.turn_to(d.y.atan2(d.x), phase);
            let n = (dist / self.step).ceil() as usize;
            for _ in 0..n {
                self.push(
                    Twist {
                        dforward: dist / n as f64,
                        dtheta: 0.0,
                    },
                    phase,
                );
            }
        }
        self.turn_to(heading, phase);
    }

    /// Vertex count of the inscribed polygon whose side is closest to the
    /// step length.
    fn orbit_vertices(&self, radius: f64) -> usize {
        ((2.0 * PI * radius / self.step).round() as usize).max(3)
    }

    /// Counter-clockwise lap starting at the current vertex.
    fn orbit(&mut self, radius: f64, n: usize, phase: Phase) {
        let chord = 2.0 * radius * (PI / n as f64).sin();
        let turn = 2.0 * PI / n as f64;
        for _ in 0..n {
            self.push(
                Twist {
                    dforward: chord,
                    dtheta: turn,
                },
                phase,
            );
        }
    }
}

/// True pose and noisy odometry for `cycle`.
pub fn step_trajectory(
    traj: &Trajectory,
    noise: &OdometryNoise,
    seed: u64,
    cycle: usize,
) -> Result<(Pose, Twist)> {
    if cycle >= traj.len() {
        return Err(Error::ScriptEnded {
            cycle,
            length: traj.len(),
        });
    }
    let t = traj.twists[cycle];
    let mut rng = stream_rng(seed, cycle, Stream::Odometry);
    let mut jitter = |sigma: f64| -> f64 {
        if sigma > 0.0 {
            Normal::new(0.0, sigma)
                .expect("finite sigma")
                .sample(&mut rng)
        } else {
            0.0
        }
    };
    let df = jitter(noise.forward_sigma_m);
    let dth = jitter(noise.theta_sigma_deg.to_radians());
    let odom = Twist::new(t.dforward + df, t.dtheta + dth)?;
    Ok((traj.truth[cycle], odom))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compiled() -> (World, Trajectory) {
        let w = World::default();
        let t = Trajectory::compile(&TrajectoryParams::default(), &w).unwrap();
        (w, t)
    }

    #[test]
    fn cycle_zero_is_start() {
        let (_, t) = compiled();
        let (truth, odom) = step_trajectory(&t, &OdometryNoise::default(), 42, 0).unwrap();
        assert_eq!(truth, TrajectoryParams::default().start);
        assert!(odom.dforward.abs() < 0.05 && odom.dtheta.abs() < 0.05);
    }

    #[test]
    fn noise_free_odometry_integrates_to_truth() {
        let (_, t) = compiled();
        let zero = OdometryNoise {
            forward_sigma_m: 0.0,
            theta_sigma_deg: 0.0,
        };
        let mut dr = t.truth[0];
        for c in 1..t.len() {
            let (truth, odom) = step_trajectory(&t, &zero, 42, c).unwrap();
            dr = dr.compose(&odom.as_pose());
            assert_eq!(dr, truth);
        }
    }

    #[test]
    fn beyond_script() {
        let (_, t) = compiled();
        let err = step_trajectory(&t, &OdometryNoise::default(), 1, t.len()).unwrap_err();
        assert!(matches!(err, Error::ScriptEnded { .. }));
    }

    #[test]
    fn orbits_stay_on_their_circles() {
        let (w, t) = compiled();
        let p = TrajectoryParams::default();
        let c = w.cylinder.center + p.cylinder_orbit_offset;
        let laps: Vec<usize> = t.cycles_in(Phase::CylinderOrbit(1)).collect();
        assert!(!laps.is_empty());
        for i in t.cycles_in(Phase::CylinderOrbit(0)).chain(laps) {
            let r = t.truth[i].position().distance(c);
            assert!((r - p.cylinder_orbit_radius).abs() < 1e-9, "cycle {i}: {r}");
        }
        for i in t.cycles_in(Phase::CubeOrbit(0)) {
            let r = t.truth[i].position().distance(w.cube.center);
            assert!((r - p.cube_orbit_radius).abs() < 1e-9);
        }
    }

    #[test]
    fn every_pose_is_free_and_turns_are_bounded() {
        let (w, t) = compiled();
        for (p, tw) in t.truth.iter().zip(&t.twists) {
            w.check_free(p.position()).unwrap();
            assert!(tw.dtheta.abs() <= 30f64.to_radians() + 1e-12);
            assert!(tw.dforward <= 0.076);
        }
    }

    #[test]
    fn second_lap_revisits_first() {
        let (_, t) = compiled();
        let a: Vec<usize> = t.cycles_in(Phase::CylinderOrbit(0)).collect();
        let b: Vec<usize> = t.cycles_in(Phase::CylinderOrbit(1)).collect();
        assert_eq!(a.len(), b.len());
        for (i, j) in a.into_iter().zip(b) {
            assert!(t.truth[i].position().distance(t.truth[j].position()) < 1e-9);
        }
    }
}
