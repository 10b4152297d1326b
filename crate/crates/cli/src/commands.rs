use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::thread;

use serde_json::json;

use lbsgain_core::engine::{compare_runs, ComparisonReport, Relation, RunStatus, SwitchRecord, TrajectoryRecord};
use lbsgain_core::io::{write_switches_csv, write_trajectory_csv};
use lbsgain_core::scenario::{load_scenario_file, parse_scenario, Scenario};

use crate::checks::run_checks;
use crate::plots::{overlay_script, run_script};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;

const SUMMARY_SWITCH_LINES: usize = 10;

type CmdResult<T> = Result<T, String>;

fn load(name: &str, step: Option<f64>, horizon: Option<f64>) -> CmdResult<Scenario> {
    let mut s = parse_scenario(name).map_err(|e| format!("{name}: {e}"))?;
    if let Some(h) = step {
        s = s.with_step(h);
    }
    if let Some(t) = horizon {
        s = s.with_horizon(t);
    }
    s.sim.validate().map_err(|e| format!("{name}: {e}"))?;
    Ok(s)
}

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> CmdResult<()> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_csvs(rec: &TrajectoryRecord, dir: &Path) -> CmdResult<()> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let traj = dir.join("trajectory.csv");
    write_trajectory_csv(rec, create(&traj)?).map_err(|e| format!("{}: {e}", traj.display()))?;
    let sw = dir.join("switches.csv");
    write_switches_csv(&rec.switches, create(&sw)?).map_err(|e| format!("{}: {e}", sw.display()))?;
    Ok(())
}

fn status_label(rec: &TrajectoryRecord) -> String {
    match rec.status {
        RunStatus::Completed => "completed".into(),
        RunStatus::Diverged { t } => format!("diverged at t = {t}"),
    }
}

fn summary_text(s: &Scenario, rec: &TrajectoryRecord) -> String {
    let m = &rec.metrics;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {s}");
    let _ = writeln!(out, "status: {}", status_label(rec));
    if rec.diverged() {
        let _ = writeln!(out, "note: trajectory.csv is partial; its last row is the diagnostic state at divergence");
    }
    let _ = writeln!(out, "rows: {}", rec.rows.len());
    let _ = writeln!(out, "peak |x1|: {:.6}", m.peak_abs_x1);
    match m.convergence_time {
        Some(t) => {
            let _ = writeln!(out, "convergence time (tol {}): {t:.3} s", s.sim.convergence_tol);
        }
        None => {
            let _ = writeln!(out, "convergence time (tol {}): not converged", s.sim.convergence_tol);
        }
    }
    let _ = writeln!(out, "switches: {}", m.switch_count);
    let _ = writeln!(out, "final gain: {:.6}", m.final_gain);
    let _ = writeln!(out, "all bounded (|v| < {:e}): {}", s.sim.bound_limit, m.all_bounded);
    if rec.gain_capped {
        let _ = writeln!(out, "warning: gain reached the cap {:e}", s.sim.gain_cap);
    }
    let sw = &rec.switches;
    let line = |out: &mut String, s: &SwitchRecord| {
        let _ = writeln!(out, "  m = {:<4} t_m = {:<12.4} r_m = {:.6}", s.m, s.t_m, s.r_m);
    };
    if sw.len() <= 2 * SUMMARY_SWITCH_LINES {
        sw.iter().for_each(|s| line(&mut out, s));
    } else {
        sw[..SUMMARY_SWITCH_LINES].iter().for_each(|s| line(&mut out, s));
        let _ = writeln!(out, "  ... {} more in switches.csv", sw.len() - 2 * SUMMARY_SWITCH_LINES);
        sw[sw.len() - SUMMARY_SWITCH_LINES..].iter().for_each(|s| line(&mut out, s));
    }
    out
}

fn metrics_json(s: &Scenario, rec: &TrajectoryRecord) -> String {
    let value = json!({
        "scenario": s.name,
        "status": rec.status,
        "gain_capped": rec.gain_capped,
        "metrics": rec.metrics,
        "sim": rec.config,
        "switches": rec.switches,
    });
    serde_json::to_string_pretty(&value).expect("metrics serialize") + "\n"
}

fn report(result: CmdResult<u8>) -> u8 {
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}

pub fn cmd_run(scenario: &str, out: &Path, step: Option<f64>, horizon: Option<f64>) -> u8 {
    report(run_inner(scenario, out, step, horizon))
}

fn run_inner(scenario: &str, out: &Path, step: Option<f64>, horizon: Option<f64>) -> CmdResult<u8> {
    let s = load(scenario, step, horizon)?;
    log::info!("running {s}");
    let rec = s.run().map_err(|e| e.to_string())?;
    write_csvs(&rec, out)?;
    let summary = summary_text(&s, &rec);
    write_text(&out.join("summary.txt"), &summary)?;
    write_text(&out.join("metrics.json"), &metrics_json(&s, &rec))?;
    write_text(&out.join("plot.py"), &run_script(&s.name, s.n()))?;
    print!("{summary}");
    if rec.diverged() || !rec.metrics.all_bounded {
        eprintln!("run did not stay bounded");
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_compare(scenarios: &[String], out: &Path) -> u8 {
    report(compare_inner(scenarios, out))
}

/// Directory-safe labels, suffixed when the same scenario appears twice.
fn unique_labels(scenarios: &[Scenario]) -> Vec<String> {
    let mut seen = HashSet::new();
    scenarios
        .iter()
        .map(|s| {
            let base: String =
                s.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
            let mut label = base.clone();
            let mut k = 2;
            while !seen.insert(label.clone()) {
                label = format!("{base}-{k}");
                k += 1;
            }
            label
        })
        .collect()
}

fn relation(r: Relation) -> &'static str {
    match r {
        Relation::Less => "less",
        Relation::Equal => "equal",
        Relation::Greater => "greater",
    }
}

fn orderings_text(report: &ComparisonReport) -> String {
    let mut out = String::from("\npairwise (first vs second; not-converged counts as +inf)\n");
    for o in &report.orderings {
        let _ = writeln!(
            out,
            "  {} vs {}: convergence_time {}, peak_abs_x1 {}",
            o.first,
            o.second,
            relation(o.convergence_time),
            relation(o.peak_abs_x1)
        );
    }
    out
}

fn compare_inner(names: &[String], out: &Path) -> CmdResult<u8> {
    if names.len() < 2 {
        return Err(format!("compare needs at least 2 scenarios, got {}", names.len()));
    }
    let scenarios = names.iter().map(|n| load(n, None, None)).collect::<CmdResult<Vec<_>>>()?;
    let labels = unique_labels(&scenarios);
    let records = thread::scope(|scope| {
        let handles: Vec<_> = scenarios.iter().map(|s| scope.spawn(move || s.run())).collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect::<Vec<_>>()
    });
    let records = records.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let pairs: Vec<(&str, &TrajectoryRecord)> = labels.iter().map(String::as_str).zip(&records).collect();
    let report = compare_runs(&pairs).map_err(|e| e.to_string())?;

    for (label, rec) in &pairs {
        write_csvs(rec, &out.join(label))?;
    }
    let table = format!("{report}{}", orderings_text(&report));
    write_text(&out.join("report.txt"), &table)?;
    write_text(&out.join("report.json"), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    write_text(&out.join("overlay.py"), &overlay_script(&labels))?;
    print!("{table}");
    if records.iter().any(|r| r.diverged() || !r.metrics.all_bounded) {
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_validate(scenario: &str) -> u8 {
    let file = match load_scenario_file(scenario) {
        Ok(f) => f,
        Err(e) => {
            println!("[FAIL] schema: {e}");
            return EXIT_ERROR;
        }
    };
    println!("[PASS] schema: '{}' parsed", file.name);
    let checks = run_checks(&file);
    for c in &checks {
        println!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} of {} checks passed", checks.len() + 1 - failed, checks.len() + 1);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_ERROR
    }
}
