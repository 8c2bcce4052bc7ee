//! Realistic inputs for the benchmarks in `benches/`, cut from a seeded
//! simulator run so timings reflect what the pipeline actually sees.

use vitaslam::pipeline::{simulate, Mode};
use vitaslam::sim::SensorFrame;
use vitaslam::tactile::{build_template, TactileParams};
use vitaslam::visual::{extract_view_template, to_grayscale};
use vitaslam::{Config, ExperienceMap, Pose, RunConfig, TactileTemplate, TemplateId, ViewTemplate};

pub const SEED: u64 = 42;

/// The whole default script.
pub fn frames() -> Vec<SensorFrame> {
    let cfg = RunConfig::new(Mode::Vita, SEED, Config::default());
    simulate(&cfg).expect("default script simulates").1
}

/// One view template per frame, as a visual-only run would store them.
pub fn view_store(frames: &[SensorFrame], profile_len: usize) -> Vec<ViewTemplate> {
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| ViewTemplate {
            id: TemplateId(i),
            profile: extract_view_template(&to_grayscale(&f.rgb).unwrap(), profile_len).unwrap(),
            learned_pose_cell: [0.0; 3],
        })
        .collect()
}

/// Tactile templates for every frame with at least two contacts.
pub fn tactile_store(frames: &[SensorFrame]) -> Vec<TactileTemplate> {
    let params = TactileParams::default();
    frames
        .iter()
        .filter(|f| f.whisk.contacts_head.len() >= 2)
        .enumerate()
        .map(|(i, f)| {
            let mut t = build_template(&f.whisk, &f.truth, &params).unwrap();
            t.id = TemplateId(i);
            t
        })
        .collect()
}

/// The frame with the most whisker contacts.
pub fn busiest_whisk(frames: &[SensorFrame]) -> &SensorFrame {
    frames
        .iter()
        .max_by_key(|f| f.whisk.contacts_head.len())
        .expect("non-empty script")
}

/// Experience map from a full vita run.
pub fn mapped() -> ExperienceMap {
    let cfg = RunConfig::new(Mode::Vita, SEED, Config::default());
    vitaslam::run(&cfg).expect("default run").map
}

/// A closed ring of `n` experiences whose poses have drifted off the loop.
pub fn ring(n: usize) -> ExperienceMap {
    let mut m = ExperienceMap::new(Pose::IDENTITY, [21, 21, 36], Default::default());
    let step = std::f64::consts::TAU / n as f64;
    let delta = Pose::new(0.1, 0.0, step);
    let mut p = Pose::IDENTITY;
    for i in 0..n {
        m.experiences.push(vitaslam::Experience {
            id: i,
            cell_coords: [0.0; 3],
            view_id: None,
            tactile_id: None,
            map_pose: Pose::new(p.x + 0.01 * i as f64, p.y, p.theta),
            created_cycle: i,
        });
        p = p.compose(&delta);
    }
    for i in 0..n {
        m.links.push(vitaslam::Link {
            from: i,
            to: (i + 1) % n,
            delta,
            cycle: i,
        });
    }
    m
}
