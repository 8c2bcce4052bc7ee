//! The per-cycle loop: frame → templates → match → path integration →
//! injection → attractor step → decode → experience map.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::expmap::{ExperienceMap, LoopClosureEvent, MapUpdate};
use crate::geometry::Pose;
use crate::metrics::{ate, Ate};
use crate::posecell::PoseCellGrid;
use crate::sim::log::{LogHeader, StreamHasher};
use crate::sim::{SensorFrame, Simulator};
use crate::tactile::{build_template, match_tactile_template, TactileTemplate};
use crate::visual::{
    extract_view_template, match_view_template, to_grayscale, MatchResult, TemplateId, ViewTemplate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Tactile matching and injection off; whisking still runs.
    VisualOnly,
    Vita,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::VisualOnly => "visual_only",
            Mode::Vita => "vita",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "visual_only" => Ok(Mode::VisualOnly),
            "vita" => Ok(Mode::Vita),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected visual_only or vita)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Defaults to the full script.
    pub cycles: Option<usize>,
    pub params: Config,
}

impl RunConfig {
    pub fn new(mode: Mode, seed: u64, params: Config) -> Self {
        Self {
            mode,
            seed,
            cycles: None,
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub cycle: usize,
    pub truth: Pose,
    pub dead_reckoned: Pose,
    pub decoded: Pose,
    pub decoded_cell: [f64; 3],
    pub view: MatchResult,
    pub tactile: MatchResult,
    pub update: MapUpdate,
    pub view_templates: usize,
    pub tactile_templates: usize,
}

impl TraceRow {
    pub fn active_experience(&self) -> usize {
        self.update.active()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Visual,
    Tactile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateRecord {
    pub modality: Modality,
    pub id: TemplateId,
    pub created_cycle: usize,
    pub learned_pose_cell: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub seed: u64,
    pub cycles: usize,
    pub view_template_count: usize,
    pub tactile_template_count: usize,
    pub loop_closure_events: Vec<LoopClosureEvent>,
    /// Dead-reckoned poses at experience creation cycles.
    pub ate_before_relax: Option<Ate>,
    /// Relaxed experience-map poses.
    pub ate_after_relax: Option<Ate>,
    /// SHA-256 over the consumed sensor stream.
    pub stream_hash: String,
    pub templates: Vec<TemplateRecord>,
    pub trace: Vec<TraceRow>,
    pub map: ExperienceMap,
}

impl RunReport {
    /// Checks counts and references against the stored map and templates.
    pub fn check_consistency(&self) -> Result<()> {
        let n = self.map.experiences.len();
        for e in &self.loop_closure_events {
            if e.current_exp >= n || e.matched_exp >= n {
                return Err(Error::Mismatch(
                    "loop closure references a missing experience",
                ));
            }
        }
        let count = |m| self.templates.iter().filter(|t| t.modality == m).count();
        if count(Modality::Visual) != self.view_template_count
            || count(Modality::Tactile) != self.tactile_template_count
        {
            return Err(Error::Mismatch("template counts disagree with the stores"));
        }
        if self.trace.len() != self.cycles {
            return Err(Error::Mismatch("trace length differs from cycle count"));
        }
        Ok(())
    }
}

/// Mutable SLAM state for one run.
struct Slam<'a> {
    params: &'a Config,
    mode: Mode,
    grid: PoseCellGrid,
    map: ExperienceMap,
    views: Vec<ViewTemplate>,
    tactiles: Vec<TactileTemplate>,
    templates: Vec<TemplateRecord>,
    dead_reckoned: Pose,
    odom_accum: Pose,
    events: Vec<LoopClosureEvent>,
    trace: Vec<TraceRow>,
    hasher: StreamHasher,
}

impl<'a> Slam<'a> {
    fn new(params: &'a Config, mode: Mode, start: Pose) -> Result<Self> {
        let probe = PoseCellGrid::new(params.pose_cells.clone())?;
        let grid = PoseCellGrid::with_packet_at(params.pose_cells.clone(), probe.cell_of(&start))?;
        let map = ExperienceMap::new(start, params.pose_cells.dims, params.experience_map.clone());
        Ok(Self {
            params,
            mode,
            grid,
            map,
            views: Vec::new(),
            tactiles: Vec::new(),
            templates: Vec::new(),
            dead_reckoned: start,
            odom_accum: Pose::IDENTITY,
            events: Vec::new(),
            trace: Vec::new(),
            hasher: StreamHasher::default(),
        })
    }

    fn step(&mut self, frame: &SensorFrame) -> Result<()> {
        let p = self.params;
        self.hasher.update(frame);
        let motion = frame.odom.as_pose();
        self.dead_reckoned = self.dead_reckoned.compose(&motion);
        self.odom_accum = self.odom_accum.compose(&motion);

        let profile = extract_view_template(&to_grayscale(&frame.rgb)?, p.visual.profile_len)?;
        let v = match_view_template(
            &profile,
            &self.views,
            p.visual.threshold,
            p.visual.max_shift,
        )?;
        let (t, tactile) = match self.mode {
            Mode::Vita => {
                let tmpl = build_template(&frame.whisk, &self.dead_reckoned, &p.tactile)?;
                let t = match_tactile_template(
                    &tmpl,
                    &self.tactiles,
                    p.tactile.w_pfh,
                    p.tactile.w_sda,
                    p.tactile.threshold,
                );
                (t, Some(tmpl))
            }
            Mode::VisualOnly => (MatchResult::NoContact, None),
        };

        self.grid.path_integrate(&frame.odom)?;
        if let Some(id) = v.matched_id() {
            self.grid
                .inject(self.views[id.0].learned_pose_cell, p.fusion.visual_energy)?;
        }
        if let Some(id) = t.matched_id() {
            self.grid.inject(
                self.tactiles[id.0].learned_pose_cell,
                p.fusion.tactile_energy,
            )?;
        }
        self.grid.step_attractor()?;
        let peak = self.grid.decode_peak()?;

        if let MatchResult::Novel { id, .. } = v {
            self.views.push(ViewTemplate {
                id,
                profile,
                learned_pose_cell: peak.cell_coords,
            });
            self.record_template(Modality::Visual, id, frame.cycle, peak.cell_coords);
        }
        if let (MatchResult::Novel { id, .. }, Some(mut tmpl)) = (t, tactile) {
            tmpl.id = id;
            tmpl.learned_pose_cell = peak.cell_coords;
            self.tactiles.push(tmpl);
            self.record_template(Modality::Tactile, id, frame.cycle, peak.cell_coords);
        }

        let update = self
            .map
            .update(&v, &t, &peak, &self.odom_accum, frame.cycle);
        match update {
            MapUpdate::NewExperience { .. } => self.odom_accum = Pose::IDENTITY,
            MapUpdate::LoopClosure(ev) => {
                self.odom_accum = Pose::IDENTITY;
                self.events.push(ev);
                let em = &p.experience_map;
                self.map.relax(em.relax_iterations, em.relax_alpha)?;
            }
            MapUpdate::SameExperience { .. } => {}
        }

        self.trace.push(TraceRow {
            cycle: frame.cycle,
            truth: frame.truth,
            dead_reckoned: self.dead_reckoned,
            decoded: peak.pose,
            decoded_cell: peak.cell_coords,
            view: v,
            tactile: t,
            update,
            view_templates: self.views.len(),
            tactile_templates: self.tactiles.len(),
        });
        Ok(())
    }

    fn record_template(
        &mut self,
        modality: Modality,
        id: TemplateId,
        cycle: usize,
        cell: [f64; 3],
    ) {
        self.templates.push(TemplateRecord {
            modality,
            id,
            created_cycle: cycle,
            learned_pose_cell: cell,
        });
    }

    fn finish(mut self, seed: u64) -> Result<RunReport> {
        let em = &self.params.experience_map;
        self.map.relax(em.final_relax_iterations, em.relax_alpha)?;
        let (ate_before_relax, ate_after_relax) = if self.map.len() >= 2 {
            let mut dr = Vec::with_capacity(self.map.len());
            let mut truth = Vec::with_capacity(self.map.len());
            let mut gt = Vec::with_capacity(self.map.len());
            for e in &self.map.experiences {
                let row = &self.trace[e.created_cycle];
                dr.push(row.dead_reckoned);
                truth.push(row.truth);
                gt.push((row.cycle, row.truth));
            }
            (Some(ate(&dr, &truth)?), Some(self.map.ate(&gt)?))
        } else {
            (None, None)
        };
        Ok(RunReport {
            mode: self.mode,
            seed,
            cycles: self.trace.len(),
            view_template_count: self.views.len(),
            tactile_template_count: self.tactiles.len(),
            loop_closure_events: self.events,
            ate_before_relax,
            ate_after_relax,
            stream_hash: self.hasher.hex(),
            templates: self.templates,
            trace: self.trace,
            map: self.map,
        })
    }
}

/// Runs SLAM over an existing frame stream (live or replayed). Frames must
/// be numbered from 0; `start` is the known starting pose.
pub fn run_frames<I>(cfg: &RunConfig, start: Pose, frames: I) -> Result<RunReport>
where
    I: IntoIterator<Item = Result<SensorFrame>>,
{
    cfg.params.validate()?;
    let mut slam = Slam::new(&cfg.params, cfg.mode, start)?;
    for (expected, frame) in frames.into_iter().enumerate() {
        let attach = |e: Error| Error::Pipeline {
            cycle: expected,
            source: Box::new(e),
        };
        let frame = frame.map_err(attach)?;
        if frame.cycle != expected {
            return Err(attach(Error::Mismatch("frames out of order")));
        }
        slam.step(&frame).map_err(attach)?;
    }
    slam.finish(cfg.seed)
}

/// Simulated frames for `cfg`, plus the log header that describes them.
pub fn simulate(cfg: &RunConfig) -> Result<(LogHeader, Vec<SensorFrame>)> {
    cfg.params.validate()?;
    let sim = Simulator::new(cfg.params.simulator.clone(), cfg.seed)?;
    let n = cfg.cycles.unwrap_or(sim.len());
    let frames = (0..n)
        .map(|c| {
            sim.frame(c).map_err(|e| Error::Pipeline {
                cycle: c,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        LogHeader::new(cfg.seed, n, cfg.params.simulator.clone()),
        frames,
    ))
}

/// Simulates and maps in one pass.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.params.validate()?;
    let sim = Simulator::new(cfg.params.simulator.clone(), cfg.seed)?;
    let n = cfg.cycles.unwrap_or(sim.len());
    run_frames(cfg, cfg.params.simulator.trajectory.start, sim.frames(n))
}

/// SLAM over a recorded log, with the log's seed and simulator settings.
pub fn replay(
    header: &LogHeader,
    frames: &[SensorFrame],
    mode: Mode,
    params: &Config,
) -> Result<RunReport> {
    let mut params = params.clone();
    params.simulator = header.sim.clone();
    let cfg = RunConfig {
        mode,
        seed: header.seed,
        cycles: Some(frames.len()),
        params,
    };
    run_frames(
        &cfg,
        header.sim.trajectory.start,
        frames.iter().cloned().map(Ok),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub a: RunReport,
    pub b: RunReport,
    pub table: Vec<ComparisonRow>,
    /// (cycle, view templates a, view templates b, tactile a, tactile b)
    pub growth: Vec<(usize, usize, usize, usize, usize)>,
}

/// Runs both configurations (in parallel) on the same sensor stream.
pub fn compare(a: &RunConfig, b: &RunConfig) -> Result<ComparisonReport> {
    if a.seed != b.seed {
        return Err(Error::Mismatch("compared runs must share a seed"));
    }
    if a.cycles != b.cycles || a.params.simulator != b.params.simulator {
        return Err(Error::Mismatch(
            "compared runs must share the simulator script",
        ));
    }
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| run(a));
        let rb = run(b);
        (ha.join().expect("run thread panicked"), rb)
    });
    let (ra, rb) = (ra?, rb?);
    if ra.stream_hash != rb.stream_hash {
        return Err(Error::Mismatch("runs consumed different sensor streams"));
    }
    let fmt_ate = |x: &Option<Ate>| {
        x.map(|v| format!("{:.4}", v.rmse_position))
            .unwrap_or_default()
    };
    let row = |metric: &str, a: String, b: String| ComparisonRow {
        metric: metric.to_owned(),
        a,
        b,
    };
    let table = vec![
        row("mode", ra.mode.to_string(), rb.mode.to_string()),
        row("cycles", ra.cycles.to_string(), rb.cycles.to_string()),
        row(
            "view_templates",
            ra.view_template_count.to_string(),
            rb.view_template_count.to_string(),
        ),
        row(
            "tactile_templates",
            ra.tactile_template_count.to_string(),
            rb.tactile_template_count.to_string(),
        ),
        row(
            "experiences",
            ra.map.len().to_string(),
            rb.map.len().to_string(),
        ),
        row(
            "loop_closures",
            ra.loop_closure_events.len().to_string(),
            rb.loop_closure_events.len().to_string(),
        ),
        row(
            "ate_before_relax_m",
            fmt_ate(&ra.ate_before_relax),
            fmt_ate(&rb.ate_before_relax),
        ),
        row(
            "ate_after_relax_m",
            fmt_ate(&ra.ate_after_relax),
            fmt_ate(&rb.ate_after_relax),
        ),
    ];
    let growth = ra
        .trace
        .iter()
        .zip(&rb.trace)
        .map(|(x, y)| {
            (
                x.cycle,
                x.view_templates,
                y.view_templates,
                x.tactile_templates,
                y.tactile_templates,
            )
        })
        .collect();
    Ok(ComparisonReport {
        a: ra,
        b: rb,
        table,
        growth,
    })
}
