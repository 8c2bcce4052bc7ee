//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vitaslam::expmap::{ExpMapParams, Experience, ExperienceMap, Link};
use vitaslam::{Point2, Pose};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Angle between two vectors via atan2 of cross and dot, in [0, π].
fn unsigned_angle(a: Point2, b: Point2) -> f64 {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return 0.0;
    }
    let cross = a.x * b.y - a.y * b.x;
    cross.abs().atan2(a.dot(b))
}

fn bin(v: f64, range: f64, bins: usize) -> usize {
    let b = (v / range * bins as f64).floor().max(0.0) as usize;
    b.min(bins - 1)
}

/// Brute-force PFH: every ordered pair is visited and kept only when its
/// first point is the pair's source. Bin counts stay integral until the end.
pub fn pfh_oracle(points: &[Point2], normals: &[Point2], bins: usize) -> Vec<f64> {
    let n = points.len();
    let mut counts = vec![0u64; bins * bins * bins];
    if n < 2 {
        return vec![0.0; counts.len()];
    }
    let mut diameter: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            diameter = diameter.max((points[b].x - points[a].x).hypot(points[b].y - points[a].y));
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let ab = points[b] - points[a];
            let ba = points[a] - points[b];
            let alpha_a = unsigned_angle(normals[a], ab);
            let alpha_b = unsigned_angle(normals[b], ba);
            let a_is_source = alpha_a < alpha_b || (alpha_a == alpha_b && a < b);
            if !a_is_source {
                continue;
            }
            let f1 = unsigned_angle(normals[a], normals[b]);
            let f3 = if diameter > 0.0 {
                ab.x.hypot(ab.y) / diameter
            } else {
                0.0
            };
            let k = (bin(f1, PI, bins) * bins + bin(alpha_a, PI, bins)) * bins + bin(f3, 1.0, bins);
            counts[k] += 1;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    counts.into_iter().map(|c| c as f64 / pairs).collect()
}

/// Random points in a 0.5 m box with random unit normals.
pub fn random_cloud(r: &mut impl Rng, n: usize) -> (Vec<Point2>, Vec<Point2>) {
    let pts = (0..n)
        .map(|_| Point2::new(r.random_range(-0.25..0.25), r.random_range(-0.25..0.25)))
        .collect();
    let normals = (0..n)
        .map(|_| Point2::from_angle(r.random_range(-PI..PI)))
        .collect();
    (pts, normals)
}

pub fn random_motion(r: &mut impl Rng) -> Pose {
    Pose::new(
        r.random_range(-3.0..3.0),
        r.random_range(-3.0..3.0),
        r.random_range(-PI..PI),
    )
}

/// Algebraic (Kåsa) circle fit: centre and radius.
pub fn fit_circle(points: &[Point2]) -> (Point2, f64) {
    // minimise Σ (x² + y² + D x + E y + F)²
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    for p in points {
        let row = [p.x, p.y, 1.0];
        let rhs = -(p.x * p.x + p.y * p.y);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            v[i] += row[i] * rhs;
        }
    }
    let [d, e, f] = solve3(m, v);
    let c = Point2::new(-d / 2.0, -e / 2.0);
    (c, (c.x * c.x + c.y * c.y - f).sqrt())
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        v.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot = m[col];
            for (a, p) in m[row][col..].iter_mut().zip(&pivot[col..]) {
                *a -= f * p;
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (v[i] - s) / m[i][i];
    }
    x
}

/// A loop of `n` nodes on a circle with exact odometry links, plus random
/// chords, whose stored poses are then perturbed.
pub fn perturbed_loop(r: &mut impl Rng, n: usize) -> ExperienceMap {
    let radius = r.random_range(1.0..4.0);
    let truth: Vec<Pose> = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            Pose::new(radius * a.cos(), radius * a.sin(), a + PI / 2.0)
        })
        .map(|p| Pose::new(p.x, p.y, vitaslam::wrap_angle(p.theta).unwrap()))
        .collect();
    let mut m = ExperienceMap::new(truth[0], [21, 21, 36], ExpMapParams::default());
    for (i, t) in truth.iter().enumerate() {
        let map_pose = if i == 0 {
            *t
        } else {
            let th = t.theta + r.random_range(-0.15..0.15);
            Pose::new(
                t.x + r.random_range(-0.3..0.3),
                t.y + r.random_range(-0.3..0.3),
                vitaslam::wrap_angle(th).unwrap(),
            )
        };
        m.experiences.push(Experience {
            id: i,
            cell_coords: [0.0; 3],
            view_id: None,
            tactile_id: None,
            map_pose,
            created_cycle: i,
        });
    }
    let mut link = |from: usize, to: usize| {
        m.links.push(Link {
            from,
            to,
            delta: truth[from].between(&truth[to]),
            cycle: 0,
        })
    };
    for i in 0..n {
        link(i, (i + 1) % n);
    }
    for _ in 0..r.random_range(0..=n / 4) {
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        if a != b {
            link(a, b);
        }
    }
    m
}

/// Wrapped pose-graph energy computed from scratch.
pub fn graph_energy(m: &ExperienceMap) -> f64 {
    m.links
        .iter()
        .map(|l| {
            let pred = m.experiences[l.from].map_pose.compose(&l.delta);
            let to = m.experiences[l.to].map_pose;
            let dth = (to.theta - pred.theta + PI).rem_euclid(2.0 * PI) - PI;
            (to.x - pred.x).powi(2) + (to.y - pred.y).powi(2) + dth * dth
        })
        .sum()
}
