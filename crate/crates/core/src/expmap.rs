//! Semi-metric experience map.
//!
//! Experiences bind a pose-cell location to the view and tactile templates
//! seen there. Odometric links join consecutive experiences; re-entering an
//! existing experience adds a loop-closure link, and relaxation spreads the
//! accumulated odometric error over the graph.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap, Pose};
use crate::metrics::{ate, Ate};
use crate::posecell::{wrapped_offset, PoseEstimate};
use crate::visual::{MatchResult, TemplateId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub id: usize,
    pub cell_coords: [f64; 3],
    pub view_id: Option<TemplateId>,
    pub tactile_id: Option<TemplateId>,
    pub map_pose: Pose,
    pub created_cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    /// Pose of `to` expressed in `from`'s frame.
    pub delta: Pose,
    pub cycle: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopClosureEvent {
    pub current_exp: usize,
    pub matched_exp: usize,
    pub cycle: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapUpdate {
    NewExperience { id: usize },
    SameExperience { id: usize },
    LoopClosure(LoopClosureEvent),
}

impl MapUpdate {
    /// Experience active after the update.
    pub fn active(&self) -> usize {
        match *self {
            MapUpdate::NewExperience { id } | MapUpdate::SameExperience { id } => id,
            MapUpdate::LoopClosure(e) => e.matched_exp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpMapParams {
    /// Max wrapped pose-cell distance between the current peak and a
    /// candidate experience.
    pub match_radius_cells: f64,
    /// Experiences younger than this many cycles cannot be closed onto
    /// (the active one still can be re-matched). Zero disables the guard.
    pub min_closure_age: usize,
    pub relax_iterations: usize,
    pub final_relax_iterations: usize,
    pub relax_alpha: f64,
}

impl Default for ExpMapParams {
    fn default() -> Self {
        Self {
            match_radius_cells: 2.0,
            min_closure_age: 10,
            relax_iterations: 20,
            final_relax_iterations: 20,
            relax_alpha: 0.5,
        }
    }
}

impl ExpMapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.match_radius_cells >= 0.0) {
            return Err(Error::param(
                "experience_map.match_radius_cells",
                "must be non-negative",
            ));
        }
        if !(self.relax_alpha > 0.0 && self.relax_alpha <= 1.0) {
            return Err(Error::param(
                "experience_map.relax_alpha",
                "must lie in (0, 1]",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceMap {
    pub experiences: Vec<Experience>,
    pub links: Vec<Link>,
    pub active: Option<usize>,
    /// Map pose the first experience is chained from.
    pub origin: Pose,
    cell_dims: [usize; 3],
    params: ExpMapParams,
}

impl ExperienceMap {
    pub fn new(origin: Pose, cell_dims: [usize; 3], params: ExpMapParams) -> Self {
        Self {
            experiences: Vec::new(),
            links: Vec::new(),
            active: None,
            origin,
            cell_dims,
            params,
        }
    }

    pub fn params(&self) -> &ExpMapParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.experiences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experiences.is_empty()
    }

    /// Euclidean distance between cell coordinates with every axis wrapped.
    pub fn cell_distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        (0..3)
            .map(|i| wrapped_offset(a[i] - b[i], self.cell_dims[i] as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Scores every experience near the current peak against this cycle's
    /// matches and either re-enters the best one, stays, or creates a new
    /// experience. `odom_accum` is the motion since the active experience
    /// was entered.
    pub fn update(
        &mut self,
        v_match: &MatchResult,
        t_match: &MatchResult,
        peak: &PoseEstimate,
        odom_accum: &Pose,
        cycle: usize,
    ) -> MapUpdate {
        let v_id = v_match.matched_id();
        let t_id = t_match.matched_id();

        let mut best: Option<(usize, u32)> = None;
        for e in &self.experiences {
            let dist = self.cell_distance(e.cell_coords, peak.cell_coords);
            if dist > self.params.match_radius_cells {
                continue;
            }
            if Some(e.id) != self.active && cycle < e.created_cycle + self.params.min_closure_age {
                continue;
            }
            let mut score = 0;
            if v_id.is_some() && e.view_id == v_id {
                score += 1;
            }
            if t_id.is_some() && e.tactile_id == t_id {
                score += 1;
            }
            // ids ascend, so a tie keeps the lower one
            if score > 0 && best.is_none_or(|(_, s)| score > s) {
                best = Some((e.id, score));
            }
        }

        match (best, self.active) {
            (Some((id, _)), Some(active)) if id == active => MapUpdate::SameExperience { id },
            (Some((id, _)), Some(active)) => {
                self.push_link(active, id, *odom_accum, cycle);
                self.active = Some(id);
                MapUpdate::LoopClosure(LoopClosureEvent {
                    current_exp: active,
                    matched_exp: id,
                    cycle,
                })
            }
            _ => {
                let id = self.experiences.len();
                let prev_pose = match self.active {
                    Some(a) => self.experiences[a].map_pose,
                    None => self.origin,
                };
                self.experiences.push(Experience {
                    id,
                    cell_coords: peak.cell_coords,
                    view_id: v_match.template_id(),
                    tactile_id: t_match.template_id(),
                    map_pose: prev_pose.compose(odom_accum),
                    created_cycle: cycle,
                });
                if let Some(a) = self.active {
                    self.push_link(a, id, *odom_accum, cycle);
                }
                self.active = Some(id);
                MapUpdate::NewExperience { id }
            }
        }
    }

    fn push_link(&mut self, from: usize, to: usize, delta: Pose, cycle: usize) {
        debug_assert_ne!(from, to);
        self.links.push(Link {
            from,
            to,
            delta,
            cycle,
        });
    }

    /// Sum of squared link residuals, 1 m² weighted like 1 rad².
    pub fn energy(&self) -> f64 {
        self.links.iter().map(|l| self.link_residual_sq(l)).sum()
    }

    fn link_residual_sq(&self, l: &Link) -> f64 {
        let predicted = self.experiences[l.from].map_pose.compose(&l.delta);
        let [dx, dy, dt] = self.experiences[l.to].map_pose.difference(&predicted);
        dx * dx + dy * dy + dt * dt
    }

    /// Sweeps the experiences in id order, moving each toward the positions
    /// its links predict by `alpha / degree` of the summed correction. A step
    /// that would raise the local link energy is halved until it does not.
    pub fn relax(&mut self, iterations: usize, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1]"));
        }
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.experiences.len()];
        for (i, l) in self.links.iter().enumerate() {
            incident[l.from].push(i);
            incident[l.to].push(i);
        }
        for _ in 0..iterations {
            for (e, inc) in incident.iter().enumerate() {
                if inc.is_empty() {
                    continue;
                }
                let mut corr = [0.0; 3];
                for &li in inc {
                    let l = &self.links[li];
                    let predicted = self.experiences[l.from].map_pose.compose(&l.delta);
                    let d = if l.from == e {
                        self.experiences[l.to].map_pose.difference(&predicted)
                    } else {
                        predicted.difference(&self.experiences[e].map_pose)
                    };
                    corr.iter_mut().zip(d).for_each(|(c, v)| *c += v);
                }
                let before_pose = self.experiences[e].map_pose;
                let before = self.local_energy(inc);
                let mut step = alpha / inc.len() as f64;
                let mut accepted = false;
                for _ in 0..12 {
                    self.experiences[e].map_pose = Pose {
                        x: before_pose.x + step * corr[0],
                        y: before_pose.y + step * corr[1],
                        theta: wrap(before_pose.theta + step * corr[2]),
                    };
                    if self.local_energy(inc) <= before {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    self.experiences[e].map_pose = before_pose;
                }
            }
        }
        Ok(())
    }

    fn local_energy(&self, links: &[usize]) -> f64 {
        links
            .iter()
            .map(|&i| self.link_residual_sq(&self.links[i]))
            .sum()
    }

    /// Aligned trajectory error of experience poses against the ground
    /// truth at each experience's creation cycle.
    pub fn ate(&self, ground_truth: &[(usize, Pose)]) -> Result<Ate> {
        let truth_at = |cycle: usize| {
            ground_truth
                .binary_search_by_key(&cycle, |(c, _)| *c)
                .map(|i| ground_truth[i].1)
                .or_else(|_| {
                    ground_truth
                        .iter()
                        .find(|(c, _)| *c == cycle)
                        .map(|(_, p)| *p)
                        .ok_or(Error::MissingGroundTruth(cycle))
                })
        };
        let mut est = Vec::with_capacity(self.experiences.len());
        let mut truth = Vec::with_capacity(self.experiences.len());
        for e in &self.experiences {
            est.push(e.map_pose);
            truth.push(truth_at(e.created_cycle)?);
        }
        ate(&est, &truth)
    }

    pub fn experiences_csv(&self) -> String {
        let mut out = String::from("id,x,y,theta,view_id,tactile_id,created_cycle\n");
        for e in &self.experiences {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.id,
                e.map_pose.x,
                e.map_pose.y,
                e.map_pose.theta,
                opt(e.view_id),
                opt(e.tactile_id),
                e.created_cycle
            );
        }
        out
    }

    pub fn links_csv(&self) -> String {
        let mut out = String::from("from,to,dx,dy,dtheta,cycle\n");
        for l in &self.links {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                l.from, l.to, l.delta.x, l.delta.y, l.delta.theta, l.cycle
            );
        }
        out
    }
}

fn opt(id: Option<TemplateId>) -> String {
    id.map(|i| i.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const DIMS: [usize; 3] = [21, 21, 36];

    fn peak(c: [f64; 3]) -> PoseEstimate {
        PoseEstimate {
            cell_coords: c,
            pose: Pose::IDENTITY,
        }
    }

    fn matched(i: usize) -> MatchResult {
        MatchResult::Matched {
            id: TemplateId(i),
            distance: 0.0,
        }
    }

    fn novel(i: usize) -> MatchResult {
        MatchResult::Novel {
            id: TemplateId(i),
            distance: 1.0,
        }
    }

    fn map() -> ExperienceMap {
        let params = ExpMapParams {
            min_closure_age: 0,
            ..ExpMapParams::default()
        };
        ExperienceMap::new(Pose::IDENTITY, DIMS, params)
    }

    #[test]
    fn empty_map_creates_experience_zero() {
        let mut m = map();
        let u = m.update(
            &novel(0),
            &MatchResult::NoContact,
            &peak([1.0; 3]),
            &Pose::IDENTITY,
            0,
        );
        assert_eq!(u, MapUpdate::NewExperience { id: 0 });
        assert_eq!(m.experiences[0].view_id, Some(TemplateId(0)));
        assert_eq!(m.experiences[0].tactile_id, None);
        assert!(m.links.is_empty());
    }

    #[test]
    fn repeat_cycle_is_same_experience() {
        let mut m = map();
        m.update(&novel(0), &novel(0), &peak([1.0; 3]), &Pose::IDENTITY, 0);
        let u = m.update(
            &matched(0),
            &matched(0),
            &peak([1.0; 3]),
            &Pose::IDENTITY,
            1,
        );
        assert_eq!(u, MapUpdate::SameExperience { id: 0 });
    }

    #[test]
    fn revisit_closes_loop() {
        let mut m = map();
        let step = Pose::new(0.5, 0.0, 0.0);
        m.update(
            &novel(0),
            &novel(0),
            &peak([1.0, 1.0, 1.0]),
            &Pose::IDENTITY,
            0,
        );
        m.update(&novel(1), &novel(1), &peak([5.0, 1.0, 1.0]), &step, 1);
        m.update(&novel(2), &novel(2), &peak([9.0, 1.0, 1.0]), &step, 2);
        // back near experience 0 with its tactile template matched
        let u = m.update(&novel(3), &matched(0), &peak([1.5, 1.0, 1.0]), &step, 3);
        assert_eq!(
            u,
            MapUpdate::LoopClosure(LoopClosureEvent {
                current_exp: 2,
                matched_exp: 0,
                cycle: 3
            })
        );
        assert_eq!(m.links.len(), 3);
        assert_eq!((m.links[2].from, m.links[2].to), (2, 0));
        assert_eq!(m.active, Some(0));
    }

    #[test]
    fn young_experiences_are_not_closure_targets() {
        let mut m = ExperienceMap::new(Pose::IDENTITY, DIMS, ExpMapParams::default());
        let step = Pose::new(0.1, 0.0, 0.0);
        m.update(
            &novel(0),
            &novel(0),
            &peak([1.0, 1.0, 1.0]),
            &Pose::IDENTITY,
            0,
        );
        m.update(&novel(1), &novel(1), &peak([1.5, 1.0, 1.0]), &step, 1);
        let u = m.update(&novel(2), &matched(0), &peak([1.5, 1.0, 1.0]), &step, 2);
        assert_eq!(u, MapUpdate::NewExperience { id: 2 });
        // once aged, experience 0 is nearer than the active one and wins
        let u = m.update(&novel(3), &matched(0), &peak([1.0, 1.0, 1.0]), &step, 12);
        assert!(matches!(u, MapUpdate::LoopClosure(ev) if ev.matched_exp == 0));
    }

    #[test]
    fn template_match_far_from_peak_is_new() {
        let mut m = map();
        m.update(
            &novel(0),
            &novel(0),
            &peak([1.0, 1.0, 1.0]),
            &Pose::IDENTITY,
            0,
        );
        m.update(
            &novel(1),
            &novel(1),
            &peak([8.0, 1.0, 1.0]),
            &Pose::IDENTITY,
            1,
        );
        let u = m.update(
            &matched(0),
            &matched(0),
            &peak([5.0, 8.0, 20.0]),
            &Pose::IDENTITY,
            2,
        );
        assert_eq!(u, MapUpdate::NewExperience { id: 2 });
    }

    #[test]
    fn wrapped_proximity() {
        let m = map();
        assert_abs_diff_eq!(
            m.cell_distance([0.5, 0.0, 35.5], [20.5, 0.0, 0.5]),
            2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn conflicting_modalities_prefer_score_then_lower_id() {
        let mut m = map();
        m.update(&novel(0), &novel(0), &peak([1.0; 3]), &Pose::IDENTITY, 0);
        m.update(
            &novel(1),
            &novel(1),
            &peak([1.5, 1.0, 1.0]),
            &Pose::IDENTITY,
            1,
        );
        m.update(
            &novel(2),
            &novel(2),
            &peak([9.0, 9.0, 9.0]),
            &Pose::IDENTITY,
            2,
        );
        // V says experience 1, T says experience 0: tie on score, lower id wins
        let u = m.update(
            &matched(1),
            &matched(0),
            &peak([1.4, 1.0, 1.0]),
            &Pose::IDENTITY,
            3,
        );
        assert_eq!(u.active(), 0);
        m.update(
            &novel(3),
            &novel(3),
            &peak([9.0, 9.0, 9.0]),
            &Pose::IDENTITY,
            4,
        );
        // both modalities agree on experience 1: higher score beats lower id
        m.experiences[1].tactile_id = Some(TemplateId(7));
        let u = m.update(
            &matched(1),
            &matched(7),
            &peak([1.1, 1.0, 1.0]),
            &Pose::IDENTITY,
            5,
        );
        assert_eq!(u.active(), 1);
    }

    fn chain(poses: &[Pose], deltas: &[(usize, usize, Pose)]) -> ExperienceMap {
        let mut m = map();
        for (i, p) in poses.iter().enumerate() {
            m.experiences.push(Experience {
                id: i,
                cell_coords: [0.0; 3],
                view_id: Some(TemplateId(i)),
                tactile_id: None,
                map_pose: *p,
                created_cycle: i,
            });
        }
        for &(from, to, delta) in deltas {
            m.links.push(Link {
                from,
                to,
                delta,
                cycle: 0,
            });
        }
        m
    }

    #[test]
    fn consistent_chain_is_a_fixed_point() {
        let poses = [
            Pose::new(0.0, 0.0, 0.0),
            Pose::new(1.0, 0.0, 0.5),
            Pose::new(1.5, 1.0, 1.2),
        ];
        let links = [
            (0, 1, poses[0].between(&poses[1])),
            (1, 2, poses[1].between(&poses[2])),
        ];
        let mut m = chain(&poses, &links);
        assert!(m.energy() < 1e-24);
        m.relax(10, 0.5).unwrap();
        for (e, p) in m.experiences.iter().zip(&poses) {
            assert_abs_diff_eq!(e.map_pose.x, p.x, epsilon = 1e-12);
            assert_abs_diff_eq!(e.map_pose.y, p.y, epsilon = 1e-12);
            assert_abs_diff_eq!(e.map_pose.theta, p.theta, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_experience_is_untouched() {
        let mut m = chain(&[Pose::new(1.0, 2.0, 3.0)], &[]);
        m.relax(5, 0.5).unwrap();
        assert_eq!(m.experiences[0].map_pose, Pose::new(1.0, 2.0, 3.0));
        assert!(m.relax(1, 0.0).is_err());
    }

    /// Independent energy: recomputed from explicit trig rather than
    /// through `Pose::compose`.
    fn energy_oracle(m: &ExperienceMap) -> f64 {
        let mut e = 0.0;
        for l in &m.links {
            let a = m.experiences[l.from].map_pose;
            let b = m.experiences[l.to].map_pose;
            let px = a.x + a.theta.cos() * l.delta.x - a.theta.sin() * l.delta.y;
            let py = a.y + a.theta.sin() * l.delta.x + a.theta.cos() * l.delta.y;
            let mut dt = b.theta - (a.theta + l.delta.theta);
            while dt >= std::f64::consts::PI {
                dt -= std::f64::consts::TAU;
            }
            while dt < -std::f64::consts::PI {
                dt += std::f64::consts::TAU;
            }
            e += (b.x - px).powi(2) + (b.y - py).powi(2) + dt * dt;
        }
        e
    }

    #[test]
    fn perturbed_square_converges() {
        let truth = [
            Pose::new(0.0, 0.0, 0.0),
            Pose::new(2.0, 0.0, std::f64::consts::FRAC_PI_2),
            Pose::new(2.0, 2.0, std::f64::consts::PI),
            Pose::new(0.0, 2.0, -std::f64::consts::FRAC_PI_2),
        ];
        let links: Vec<_> = (0..4)
            .map(|i| (i, (i + 1) % 4, truth[i].between(&truth[(i + 1) % 4])))
            .collect();
        // the estimate drifted +0.5 m along the second edge
        let mut est = truth;
        for p in &mut est[2..] {
            p.x += 0.5;
        }
        let mut m = chain(&est, &links);
        let e0 = energy_oracle(&m);
        assert!(e0 > 0.2);
        let mut prev = e0;
        for _ in 0..50 {
            m.relax(1, 0.5).unwrap();
            let e = energy_oracle(&m);
            assert!(e <= prev + 1e-15, "energy rose from {prev} to {e}");
            assert_abs_diff_eq!(e, m.energy(), epsilon = 1e-12);
            prev = e;
        }
        assert!(prev < 0.01 * e0, "final {prev} vs initial {e0}");
    }

    #[test]
    fn update_after_new_links_from_active() {
        let mut m = map();
        let step = Pose::new(0.3, 0.0, 0.1);
        m.update(
            &novel(0),
            &MatchResult::NoContact,
            &peak([1.0; 3]),
            &step,
            0,
        );
        m.update(
            &novel(1),
            &MatchResult::NoContact,
            &peak([6.0; 3]),
            &step,
            1,
        );
        assert_eq!(m.links.len(), 1);
        assert_eq!(m.links[0].delta, step);
        let expected = Pose::IDENTITY.compose(&step).compose(&step);
        assert_eq!(m.experiences[1].map_pose, expected);
    }

    #[test]
    fn csv_exports() {
        let mut m = map();
        m.update(
            &novel(0),
            &MatchResult::NoContact,
            &peak([1.0; 3]),
            &Pose::IDENTITY,
            0,
        );
        m.update(
            &novel(1),
            &novel(0),
            &peak([6.0; 3]),
            &Pose::new(1.0, 0.0, 0.0),
            1,
        );
        let e = m.experiences_csv();
        assert_eq!(e.lines().count(), 3);
        assert!(e.lines().nth(1).unwrap().ends_with(",0,,0"));
        assert_eq!(m.links_csv().lines().count(), 2);
    }
}
