//! CSV tables and an SVG experience-map plot for a run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::expmap::{ExperienceMap, LoopClosureEvent};
use crate::geometry::Pose;
use crate::pipeline::{ComparisonReport, RunReport};
use crate::visual::MatchResult;

const SVG_SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn report_csv(r: &RunReport) -> String {
    let mut out = String::from("metric,value\n");
    let rows: [(&str, String); 10] = [
        ("mode", r.mode.to_string()),
        ("seed", r.seed.to_string()),
        ("cycles", r.cycles.to_string()),
        ("view_templates", r.view_template_count.to_string()),
        ("tactile_templates", r.tactile_template_count.to_string()),
        ("experiences", r.map.len().to_string()),
        ("loop_closures", r.loop_closure_events.len().to_string()),
        (
            "ate_before_relax_m",
            fmt_opt(r.ate_before_relax.map(|a| a.rmse_position)),
        ),
        (
            "ate_after_relax_m",
            fmt_opt(r.ate_after_relax.map(|a| a.rmse_position)),
        ),
        ("stream_hash", r.stream_hash.clone()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

pub fn growth_csv(r: &RunReport) -> String {
    let mut out = String::from("cycle,view_templates,tactile_templates\n");
    for t in &r.trace {
        let _ = writeln!(
            out,
            "{},{},{}",
            t.cycle, t.view_templates, t.tactile_templates
        );
    }
    out
}

fn match_kind(m: &MatchResult) -> &'static str {
    match m {
        MatchResult::Matched { .. } => "matched",
        MatchResult::Novel { .. } => "novel",
        MatchResult::NoContact => "no_contact",
    }
}

pub fn trace_csv(r: &RunReport) -> String {
    let mut out = String::from(
        "cycle,truth_x,truth_y,truth_theta,dr_x,dr_y,dr_theta,decoded_x,decoded_y,decoded_theta,\
         view,view_id,tactile,tactile_id,active_experience\n",
    );
    for t in &r.trace {
        let id = |m: &MatchResult| m.template_id().map(|i| i.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.cycle,
            t.truth.x,
            t.truth.y,
            t.truth.theta,
            t.dead_reckoned.x,
            t.dead_reckoned.y,
            t.dead_reckoned.theta,
            t.decoded.x,
            t.decoded.y,
            t.decoded.theta,
            match_kind(&t.view),
            id(&t.view),
            match_kind(&t.tactile),
            id(&t.tactile),
            t.active_experience()
        );
    }
    out
}

pub fn loop_closures_csv(events: &[LoopClosureEvent]) -> String {
    let mut out = String::from("cycle,current_exp,matched_exp\n");
    for e in events {
        let _ = writeln!(out, "{},{},{}", e.cycle, e.current_exp, e.matched_exp);
    }
    out
}

/// Experience nodes (`class="experience"`), links (`class="link"`),
/// loop-closure markers (`class="loop-closure"`) and an optional truth
/// polyline (`class="truth"`).
pub fn map_svg(map: &ExperienceMap, events: &[LoopClosureEvent], truth: &[Pose]) -> String {
    let pts = map
        .experiences
        .iter()
        .map(|e| (e.map_pose.x, e.map_pose.y))
        .chain(truth.iter().map(|p| (p.x, p.y)));
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in pts {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-6);
    let scale = (SVG_SIZE - 2.0 * MARGIN) / span;
    let sx = |x: f64| MARGIN + (x - x0) * scale;
    let sy = |y: f64| SVG_SIZE - MARGIN - (y - y0) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (ax, ay) = (MARGIN, SVG_SIZE - MARGIN);
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{ax}" y1="{ay}" x2="{}" y2="{ay}" stroke="black"/>"#,
        SVG_SIZE - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{ax}" y1="{ay}" x2="{ax}" y2="{MARGIN}" stroke="black"/>"#
    );
    if !truth.is_empty() {
        let points: Vec<String> = truth
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="truth" points="{}" fill="none" stroke="grey" stroke-dasharray="4 3"/>"#,
            points.join(" ")
        );
    }
    for l in &map.links {
        let (a, b) = (
            &map.experiences[l.from].map_pose,
            &map.experiences[l.to].map_pose,
        );
        let _ = writeln!(
            s,
            r#"<line class="link" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue"/>"#,
            sx(a.x),
            sy(a.y),
            sx(b.x),
            sy(b.y)
        );
    }
    for e in &map.experiences {
        let _ = writeln!(
            s,
            r#"<circle class="experience" cx="{:.2}" cy="{:.2}" r="3" fill="navy"/>"#,
            sx(e.map_pose.x),
            sy(e.map_pose.y)
        );
    }
    for ev in events {
        let p = &map.experiences[ev.matched_exp].map_pose;
        let _ = writeln!(
            s,
            r#"<circle class="loop-closure" cx="{:.2}" cy="{:.2}" r="7" fill="none" stroke="crimson" stroke-width="2"/>"#,
            sx(p.x),
            sy(p.y)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes every table and the map plot for `report` into `dir`.
pub fn emit_plots(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let truth: Vec<Pose> = report.trace.iter().map(|t| t.truth).collect();
    write(dir, "report.csv", &report_csv(report), &mut written)?;
    write(dir, "templates.csv", &growth_csv(report), &mut written)?;
    write(dir, "trace.csv", &trace_csv(report), &mut written)?;
    write(
        dir,
        "loop_closures.csv",
        &loop_closures_csv(&report.loop_closure_events),
        &mut written,
    )?;
    write(
        dir,
        "experiences.csv",
        &report.map.experiences_csv(),
        &mut written,
    )?;
    write(dir, "links.csv", &report.map.links_csv(), &mut written)?;
    write(
        dir,
        "map.svg",
        &map_svg(&report.map, &report.loop_closure_events, &truth),
        &mut written,
    )?;
    Ok(written)
}

/// Side-by-side table and template growth for a comparison.
pub fn emit_comparison(cmp: &ComparisonReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut table = format!("metric,{},{}\n", cmp.a.mode, cmp.b.mode);
    for r in &cmp.table {
        let _ = writeln!(table, "{},{},{}", r.metric, r.a, r.b);
    }
    write(dir, "report.csv", &table, &mut written)?;
    let (ma, mb) = (cmp.a.mode, cmp.b.mode);
    let mut growth = format!("cycle,view_{ma},view_{mb},tactile_{ma},tactile_{mb}\n");
    for (c, va, vb, ta, tb) in &cmp.growth {
        let _ = writeln!(growth, "{c},{va},{vb},{ta},{tb}");
    }
    write(dir, "templates.csv", &growth, &mut written)?;
    for r in [&cmp.a, &cmp.b] {
        written.extend(emit_plots(r, &dir.join(r.mode.to_string()))?);
    }
    Ok(written)
}
