//! Tactile templates from whisker contacts (planar point feature histogram)
//! and deflections (slope distribution array).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose};
use crate::visual::{MatchResult, TemplateId};

pub const WHISKER_COUNT: usize = 24;

/// One whisker's arrested contact, in the head frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiskerContact {
    pub whisker: usize,
    pub point: Point2,
}

/// Everything the whisker array reports for one whisk cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiskCycleData {
    pub contacts_head: Vec<WhiskerContact>,
    /// Peak bend per whisker in radians, 0 when the whisker touched nothing.
    pub deflections: [f64; WHISKER_COUNT],
}

impl WhiskCycleData {
    pub fn empty() -> Self {
        Self {
            contacts_head: Vec::new(),
            deflections: [0.0; WHISKER_COUNT],
        }
    }

    /// Checks the contact/deflection pairing.
    pub fn validate(&self) -> Result<()> {
        for c in &self.contacts_head {
            if c.whisker >= WHISKER_COUNT {
                return Err(Error::param(
                    "whisker",
                    format!("index {} out of range", c.whisker),
                ));
            }
            if !(self.deflections[c.whisker] > 0.0) {
                return Err(Error::param(
                    "contacts_head",
                    format!("whisker {} has a contact but no deflection", c.whisker),
                ));
            }
        }
        if self
            .deflections
            .iter()
            .any(|d| !(*d >= 0.0) || !d.is_finite())
        {
            return Err(Error::param(
                "deflections",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TactileTemplate {
    pub id: TemplateId,
    pub pfh: Vec<f64>,
    pub sda: Vec<f64>,
    pub learned_pose_cell: [f64; 3],
}

impl TactileTemplate {
    /// Builds an unstored template (id and cell are filled when learned).
    pub fn from_features(pfh: Vec<f64>, sda: Vec<f64>) -> Self {
        Self {
            id: TemplateId(0),
            pfh,
            sda,
            learned_pose_cell: [0.0; 3],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pfh.iter().all(|&v| v == 0.0) && self.sda.iter().all(|&v| v == 0.0)
    }

    /// One JSON record per line.
    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("template serializes")
    }

    pub fn from_record(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::LogParse {
            line: 1,
            message: e.to_string(),
        })
    }
}

/// Writes templates as line-delimited records.
pub fn write_templates(templates: &[TactileTemplate]) -> String {
    let mut out = String::new();
    for t in templates {
        out.push_str(&t.to_record());
        out.push('\n');
    }
    out
}

pub fn read_templates(text: &str) -> Result<Vec<TactileTemplate>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::LogParse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn contacts_to_world(contacts_head: &[Point2], head_pose: &Pose) -> Vec<Point2> {
    contacts_head
        .iter()
        .map(|&p| head_pose.transform_point(p))
        .collect()
}

/// Total-least-squares line normals over each point's `k` nearest
/// neighbours (the point itself included), oriented toward `head`.
pub fn estimate_normals(points: &[Point2], k: usize, head: Point2) -> Result<Vec<Point2>> {
    if points.len() < 2 {
        return Err(Error::NoSurface(points.len()));
    }
    if k < 2 {
        return Err(Error::param("k", "need at least 2 neighbours"));
    }
    let k = k.min(points.len());

    let mut order: Vec<usize> = (0..points.len()).collect();
    let normals = points
        .iter()
        .map(|&p| {
            order.sort_by(|&a, &b| {
                p.distance(points[a])
                    .total_cmp(&p.distance(points[b]))
                    .then(a.cmp(&b))
            });
            let nbrs = &order[..k];
            let toward_head = toward(p, head);

            let (mx, my) = nbrs.iter().fold((0.0, 0.0), |(sx, sy), &i| {
                (sx + points[i].x, sy + points[i].y)
            });
            let (mx, my) = (mx / k as f64, my / k as f64);
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for &i in nbrs {
                let dx = points[i].x - mx;
                let dy = points[i].y - my;
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
            }
            let trace = sxx + syy;
            let gap = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
            // coincident neighbours or an isotropic blob: no line to fit
            if trace <= 1e-18 || gap <= 1e-9 * trace {
                return toward_head;
            }
            let axis = 0.5 * (2.0 * sxy).atan2(sxx - syy);
            let n = Point2::new(-axis.sin(), axis.cos());
            if n.dot(toward_head) < 0.0 {
                n.scale(-1.0)
            } else {
                n
            }
        })
        .collect();
    Ok(normals)
}

fn toward(p: Point2, head: Point2) -> Point2 {
    let d = head - p;
    let len = d.norm();
    if len > 0.0 {
        d.scale(1.0 / len)
    } else {
        Point2::new(0.0, 1.0)
    }
}

/// Angle between two vectors in [0, π].
pub(crate) fn angle_between(a: Point2, b: Point2) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos()
}

pub(crate) fn feature_bin(value: f64, range: f64, bins: usize) -> usize {
    let b = (value / range * bins as f64).floor();
    if b < 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

/// Pair-order tolerance: angles closer than this count as a tie.
const TIE_EPS: f64 = 1e-12;

/// Planar surflet-pair histogram with `bins³` joint bins.
///
/// For each unordered pair the source is the point whose normal makes the
/// smaller angle with the line to the other point. Features are the angle
/// between the normals, the angle between the source normal and the
/// connecting vector, and the pair distance over the set diameter.
pub fn compute_pfh(points: &[Point2], normals: &[Point2], bins: usize) -> Result<Vec<f64>> {
    if points.len() != normals.len() {
        return Err(Error::param("normals", "length differs from points"));
    }
    if bins == 0 {
        return Err(Error::param("bins", "must be positive"));
    }
    let mut hist = vec![0.0; bins * bins * bins];
    let n = points.len();
    if n < 2 {
        return Ok(hist);
    }

    let mut diameter: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            diameter = diameter.max(points[i].distance(points[j]));
        }
    }

    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let d_ij = points[j] - points[i];
            let d_ji = points[i] - points[j];
            let a_i = angle_between(normals[i], d_ij);
            let a_j = angle_between(normals[j], d_ji);
            let (s, t) = if a_j < a_i - TIE_EPS { (j, i) } else { (i, j) };

            let f1 = angle_between(normals[s], normals[t]);
            let f2 = angle_between(normals[s], points[t] - points[s]);
            let f3 = if diameter > 0.0 {
                points[s].distance(points[t]) / diameter
            } else {
                0.0
            };
            let b1 = feature_bin(f1, PI, bins);
            let b2 = feature_bin(f2, PI, bins);
            let b3 = feature_bin(f3, 1.0, bins);
            hist[(b1 * bins + b2) * bins + b3] += 1.0;
            pairs += 1;
        }
    }
    let total = pairs as f64;
    hist.iter_mut().for_each(|v| *v /= total);
    Ok(hist)
}

/// Deflections scaled by their maximum; all zeros when nothing bent.
pub fn compute_sda(deflections: &[f64]) -> Vec<f64> {
    let max = deflections.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        deflections.iter().map(|d| d / max).collect()
    } else {
        vec![0.0; deflections.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TactileParams {
    pub normal_neighbours: usize,
    pub bins_per_feature: usize,
    pub w_pfh: f64,
    pub w_sda: f64,
    pub threshold: f64,
}

impl Default for TactileParams {
    fn default() -> Self {
        Self {
            normal_neighbours: 4,
            bins_per_feature: 5,
            w_pfh: 0.6,
            w_sda: 0.4,
            threshold: 0.01,
        }
    }
}

impl TactileParams {
    pub fn validate(&self) -> Result<()> {
        if self.w_pfh < 0.0 || self.w_sda < 0.0 || (self.w_pfh + self.w_sda - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "w_pfh/w_sda",
                "weights must be non-negative and sum to 1",
            ));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::param("tactile.threshold", "must be non-negative"));
        }
        if self.normal_neighbours < 2 {
            return Err(Error::param(
                "tactile.normal_neighbours",
                "must be at least 2",
            ));
        }
        if self.bins_per_feature == 0 {
            return Err(Error::param("tactile.bins_per_feature", "must be positive"));
        }
        Ok(())
    }
}

/// Builds this cycle's tactile template from raw whisker data, using
/// `head_pose` to bring contacts into the world frame.
pub fn build_template(
    whisk: &WhiskCycleData,
    head_pose: &Pose,
    params: &TactileParams,
) -> Result<TactileTemplate> {
    let local: Vec<Point2> = whisk.contacts_head.iter().map(|c| c.point).collect();
    let world = contacts_to_world(&local, head_pose);
    let bins = params.bins_per_feature;
    let pfh = if world.len() >= 2 {
        let normals = estimate_normals(&world, params.normal_neighbours, head_pose.position())?;
        compute_pfh(&world, &normals, bins)?
    } else {
        vec![0.0; bins * bins * bins]
    };
    Ok(TactileTemplate::from_features(
        pfh,
        compute_sda(&whisk.deflections),
    ))
}

/// Weighted histogram-intersection and mean-absolute SDA distance, each in
/// [0, 1].
pub fn tactile_distance(a: &TactileTemplate, b: &TactileTemplate, w_pfh: f64, w_sda: f64) -> f64 {
    let pfh = 0.5
        * a.pfh
            .iter()
            .zip(&b.pfh)
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>();
    let sda = if a.sda.is_empty() {
        0.0
    } else {
        a.sda
            .iter()
            .zip(&b.sda)
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            / a.sda.len() as f64
    };
    w_pfh * pfh + w_sda * sda
}

pub fn match_tactile_template(
    current: &TactileTemplate,
    store: &[TactileTemplate],
    w_pfh: f64,
    w_sda: f64,
    threshold: f64,
) -> MatchResult {
    if current.is_empty() {
        return MatchResult::NoContact;
    }
    let mut best: Option<(TemplateId, f64)> = None;
    for t in store {
        let d = tactile_distance(current, t, w_pfh, w_sda);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((t.id, d));
        }
    }
    match best {
        Some((id, distance)) if distance <= threshold => MatchResult::Matched { id, distance },
        Some((_, distance)) => MatchResult::Novel {
            id: TemplateId(store.len()),
            distance,
        },
        None => MatchResult::Novel {
            id: TemplateId(store.len()),
            distance: f64::INFINITY,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ring(n: usize, r: f64) -> Vec<Point2> {
        (0..n)
            .map(|i| Point2::from_angle(i as f64 * std::f64::consts::TAU / n as f64).scale(r))
            .collect()
    }

    #[test]
    fn contacts_to_world_examples() {
        let p = [Point2::new(0.2, 0.0)];
        assert_eq!(contacts_to_world(&p, &Pose::IDENTITY), p.to_vec());
        let t = contacts_to_world(&p, &Pose::new(1.0, 1.0, 0.0));
        assert_abs_diff_eq!(t[0].x, 1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(t[0].y, 1.0, epsilon = 1e-15);
        let r = contacts_to_world(&p, &Pose::new(0.0, 0.0, PI / 2.0));
        assert_abs_diff_eq!(r[0].x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[0].y, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn normals_on_a_line_point_to_head() {
        let pts: Vec<Point2> = (0..6).map(|i| Point2::new(i as f64 * 0.1, 0.0)).collect();
        let ns = estimate_normals(&pts, 4, Point2::new(0.0, 1.0)).unwrap();
        for n in ns {
            assert_abs_diff_eq!(n.x, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(n.y, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ring_normals_are_radial_inward() {
        let pts = ring(16, 1.0);
        let ns = estimate_normals(&pts, 3, Point2::new(0.0, 0.0)).unwrap();
        for (p, n) in pts.iter().zip(&ns) {
            let inward = p.scale(-1.0);
            assert!(angle_between(*n, inward) < 1e-6);
        }
    }

    #[test]
    fn two_point_normals_are_perpendicular() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)];
        let ns = estimate_normals(&pts, 4, Point2::new(-1.0, 1.0)).unwrap();
        for n in ns {
            assert_abs_diff_eq!(n.dot(pts[1] - pts[0]), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(n.norm(), 1.0, epsilon = 1e-12);
            assert!(n.dot(Point2::new(-1.0, 1.0)) > 0.0);
        }
    }

    #[test]
    fn coincident_points_face_head() {
        let pts = [Point2::new(1.0, 0.0), Point2::new(1.0, 0.0)];
        let ns = estimate_normals(&pts, 2, Point2::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(ns[0].x, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn normals_need_two_points() {
        assert!(matches!(
            estimate_normals(&[Point2::new(0.0, 0.0)], 4, Point2::default()),
            Err(Error::NoSurface(1))
        ));
    }

    #[test]
    fn pfh_single_pair() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)];
        let ns = [Point2::new(0.0, 1.0), Point2::new(0.0, 1.0)];
        let h = compute_pfh(&pts, &ns, 5).unwrap();
        // f1 bin 0, alpha bin 2, distance bin 4
        let idx = 2 * 5 + 4;
        assert_eq!(h[idx], 1.0);
        assert_eq!(h.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn pfh_of_fewer_than_two_points_is_zero() {
        let h = compute_pfh(&[Point2::new(1.0, 1.0)], &[Point2::new(0.0, 1.0)], 5).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
        assert_eq!(h.len(), 125);
    }

    #[test]
    fn sda_examples() {
        assert_eq!(compute_sda(&[0.0; 24]), vec![0.0; 24]);
        let mut one = [0.0; 24];
        one[5] = 0.3;
        let s = compute_sda(&one);
        assert_eq!(s[5], 1.0);
        assert_eq!(s.iter().sum::<f64>(), 1.0);
        let mut d = [0.0; 24];
        d[0] = 0.1;
        d[1] = 0.2;
        d[2] = 0.4;
        let s = compute_sda(&d);
        assert_abs_diff_eq!(s[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 0.5, epsilon = 1e-15);
        assert_eq!(s[2], 1.0);
        assert!(s[3..].iter().all(|&v| v == 0.0));
    }

    fn template(pfh_hot: usize, sda: f64) -> TactileTemplate {
        let mut pfh = vec![0.0; 125];
        pfh[pfh_hot] = 1.0;
        TactileTemplate::from_features(pfh, vec![sda; 24])
    }

    #[test]
    fn tactile_match_examples() {
        let mut a = template(3, 0.5);
        a.id = TemplateId(0);
        let mut b = template(7, 1.0);
        b.id = TemplateId(1);
        let store = vec![a.clone(), b.clone()];
        assert_eq!(
            match_tactile_template(&b, &store, 0.6, 0.4, 0.12),
            MatchResult::Matched {
                id: TemplateId(1),
                distance: 0.0
            }
        );
        let empty = TactileTemplate::from_features(vec![0.0; 125], vec![0.0; 24]);
        assert_eq!(
            match_tactile_template(&empty, &store, 0.6, 0.4, 0.12),
            MatchResult::NoContact
        );
        let c = template(9, 0.0);
        assert!(match_tactile_template(&c, &store, 0.6, 0.4, 0.12).is_novel());
        assert!((tactile_distance(&a, &b, 0.6, 0.4) - (0.6 + 0.4 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn params_validate_weights() {
        let mut p = TactileParams::default();
        p.validate().unwrap();
        p.w_sda = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn whisk_validation() {
        let mut w = WhiskCycleData::empty();
        w.contacts_head.push(WhiskerContact {
            whisker: 3,
            point: Point2::new(0.1, 0.0),
        });
        assert!(w.validate().is_err());
        w.deflections[3] = 0.2;
        w.validate().unwrap();
    }

    #[test]
    fn template_records_round_trip() {
        let mut t = template(4, 0.25);
        t.learned_pose_cell = [1.5, 2.25, 30.125];
        let text = write_templates(&[t.clone(), t.clone()]);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_templates(&text).unwrap(), vec![t.clone(), t]);
        let err = read_templates("{\"id\":0}\n").unwrap_err();
        assert!(matches!(err, Error::LogParse { line: 1, .. }));
    }

    fn sda_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..1.0f64, 24)
    }

    proptest! {
        #[test]
        fn sda_scale_invariant(d in sda_vec(), k in 0.1..10.0f64) {
            let a = compute_sda(&d);
            let scaled: Vec<f64> = d.iter().map(|v| v * k).collect();
            let b = compute_sda(&scaled);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn tactile_distance_axioms(s1 in sda_vec(), s2 in sda_vec(), h1 in 0usize..125, h2 in 0usize..125) {
            let mut a = template(h1, 0.0);
            a.sda = compute_sda(&s1);
            let mut b = template(h2, 0.0);
            b.sda = compute_sda(&s2);
            prop_assert_eq!(tactile_distance(&a, &a, 0.6, 0.4), 0.0);
            prop_assert_eq!(tactile_distance(&a, &b, 0.6, 0.4), tactile_distance(&b, &a, 0.6, 0.4));
            let d = tactile_distance(&a, &b, 0.6, 0.4);
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn pfh_relabel_invariant(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng, seq::SliceRandom};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..20);
            let pts: Vec<Point2> = (0..n).map(|_| Point2::new(rng.random(), rng.random())).collect();
            let ns: Vec<Point2> = (0..n).map(|_| Point2::from_angle(rng.random_range(-PI..PI))).collect();
            let h = compute_pfh(&pts, &ns, 5).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let pp: Vec<Point2> = perm.iter().map(|&i| pts[i]).collect();
            let pn: Vec<Point2> = perm.iter().map(|&i| ns[i]).collect();
            prop_assert_eq!(h, compute_pfh(&pp, &pn, 5).unwrap());
        }
    }
}
