//! Desk-scale 2D stand-in for a whiskered robot with a head camera.
//!
//! Every output is a pure function of (config, seed, cycle): each cycle
//! draws its noise from its own ChaCha stream, so frames can be produced
//! in any order.

pub mod camera;
pub mod log;
pub mod trajectory;
pub mod whiskers;
pub mod world;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use camera::{add_sensor_noise, render_camera, CameraParams};
pub use trajectory::{step_trajectory, OdometryNoise, Phase, Trajectory, TrajectoryParams};
pub use whiskers::{whisk_cycle, WhiskerArray};
pub use world::{Cube, Cylinder, Surface, WallTexture, World};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Twist};
use crate::tactile::WhiskCycleData;
use crate::visual::RgbImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stream {
    Odometry = 1,
    Camera = 2,
    Collision = 3,
}

/// Independent generator for one (seed, cycle, purpose) triple.
pub(crate) fn stream_rng(seed: u64, cycle: usize, stream: Stream) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(cycle as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(stream as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub world: World,
    pub camera: CameraParams,
    pub whiskers: WhiskerArray,
    pub trajectory: TrajectoryParams,
    pub odometry_noise: OdometryNoise,
    /// The head counts as colliding when a landmark comes closer than this.
    pub body_radius_m: f64,
    /// Spread of the extra bend added to touching whiskers on collision.
    pub collision_jitter_deg: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            world: World::default(),
            camera: CameraParams::default(),
            whiskers: WhiskerArray::default(),
            trajectory: TrajectoryParams::default(),
            odometry_noise: OdometryNoise::default(),
            body_radius_m: 0.08,
            collision_jitter_deg: 8.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.camera.validate()?;
        self.whiskers.validate()?;
        let n = &self.odometry_noise;
        if !(n.forward_sigma_m >= 0.0 && n.theta_sigma_deg >= 0.0) {
            return Err(Error::param(
                "odometry_noise",
                "sigmas must be non-negative",
            ));
        }
        if !(self.body_radius_m >= 0.0 && self.collision_jitter_deg >= 0.0) {
            return Err(Error::param(
                "simulator",
                "body radius and jitter must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Everything the robot senses in one whisk cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub cycle: usize,
    pub rgb: RgbImage,
    pub whisk: WhiskCycleData,
    pub odom: Twist,
    pub truth: Pose,
    /// The body touched a landmark; whisker readings are unreliable.
    pub collision: bool,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    seed: u64,
    trajectory: Trajectory,
}

impl Simulator {
    pub fn new(config: SimConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let trajectory = Trajectory::compile(&config.trajectory, &config.world)?;
        Ok(Self {
            config,
            seed,
            trajectory,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    /// Number of cycles in the script.
    pub fn len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectory.is_empty()
    }

    pub fn frame(&self, cycle: usize) -> Result<SensorFrame> {
        let cfg = &self.config;
        let (truth, odom) =
            step_trajectory(&self.trajectory, &cfg.odometry_noise, self.seed, cycle)?;
        let mut rgb = render_camera(&cfg.world, &truth, &cfg.camera)?;
        add_sensor_noise(
            &mut rgb,
            cfg.camera.noise_sigma,
            &mut stream_rng(self.seed, cycle, Stream::Camera),
        );
        let mut whisk = whisk_cycle(&cfg.world, &truth, &cfg.whiskers)?;
        let collision = cfg.world.dist_to_landmarks(truth.position()) < cfg.body_radius_m;
        if collision && cfg.collision_jitter_deg > 0.0 {
            let mut rng = stream_rng(self.seed, cycle, Stream::Collision);
            let n = Normal::new(0.0, cfg.collision_jitter_deg.to_radians()).expect("finite");
            for c in &whisk.contacts_head {
                let extra: f64 = n.sample(&mut rng);
                whisk.deflections[c.whisker] += extra.abs();
            }
        }
        Ok(SensorFrame {
            cycle,
            rgb,
            whisk,
            odom,
            truth,
            collision,
        })
    }

    /// Frames `0..cycles`, stopping at the first error.
    pub fn frames(&self, cycles: usize) -> impl Iterator<Item = Result<SensorFrame>> + '_ {
        (0..cycles).map(move |c| self.frame(c))
    }
}
