//! Acceptance criteria 1 to 7, one PASS/FAIL line each. Criteria 1 to 4 and
//! 7 drive the `ooasp` binary on the bundled fixtures; 5 and 6 run the
//! randomized checks against the library.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::checks;
use ooasp::canonical::canonicalize;
use ooasp::instance::{InstanceFact, Instantiation, ObjectId};
use ooasp::parser::parse_facts;
use ooasp::session::Session;
use tempfile::TempDir;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ooasp(args: &[String]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_ooasp")).args(args).output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn args(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn expect_code(r: &Run, code: i32) -> Result<(), String> {
    if r.code == code {
        Ok(())
    } else {
        Err(format!("exit {} (expected {code}); stderr: {}", r.code, r.stderr.trim()))
    }
}

fn validate_c2() -> Vec<String> {
    args(&["validate", "-m", &fixture("modules_v1.lp"), "-i", &fixture("c2.lp"), "-c", &fixture("modules.oc")])
}

fn complete_c3() -> Vec<String> {
    args(&[
        "complete",
        "-m",
        &fixture("modules_v1.lp"),
        "-i",
        &fixture("c3.lp"),
        "-c",
        &fixture("modules.oc"),
        "--max-new",
        "Frame=2",
        "--max-new",
        "ModuleA=5",
        "--max-new",
        "ModuleB=5",
    ])
}

fn check_v1() -> Vec<String> {
    args(&["check-model", "-m", &fixture("modules_v1.lp"), "-c", &fixture("modules.oc"), "--max-new-all", "2"])
}

fn validate_empty() -> Vec<String> {
    args(&["validate", "-m", &fixture("modules_v1.lp"), "-i", &fixture("empty_v1.lp"), "-c", &fixture("modules.oc")])
}

fn reconcile_c4(out: &Path) -> Vec<String> {
    args(&[
        "reconcile",
        "--old-inst",
        &fixture("c4_complete.lp"),
        "--new-model",
        &fixture("modules_v2.lp"),
        "-c",
        &fixture("modules.oc"),
        "-c",
        &fixture("adjacency_v2.oc"),
        "--costs",
        &fixture("costs_default.txt"),
        "--out-dir",
        &out.display().to_string(),
    ])
}

fn criterion_1() -> Outcome {
    let r = ooasp(&validate_c2());
    expect_code(&r, 1)?;
    let min_card: Vec<&str> = r.stdout.lines().filter(|l| l.contains("mincardviolated")).collect();
    let want = r#"ooasp_cv("c2",mincardviolated(10,"Element_module"))."#;
    if min_card != [want] {
        return Err(format!("min-cardinality findings {min_card:?}"));
    }
    Ok(want.to_string())
}

fn class_of(inst: &Instantiation) -> BTreeMap<ObjectId, &str> {
    inst.objects().into_iter().map(|(o, cs)| (o, *cs.iter().next().unwrap())).collect()
}

fn criterion_2() -> Outcome {
    let r = ooasp(&complete_c3());
    expect_code(&r, 0)?;
    let model = read(Path::new(&fixture("modules_v1.lp")))?;
    let input = read(Path::new(&fixture("c3.lp")))?;
    let parse = |t: &str| parse_facts(t).map_err(|e| e.to_string());
    let s = Session::load(&[parse(&model)?, parse(&r.stdout)?]).map_err(|e| e.to_string())?;
    let sol = s.instantiation("c3").map_err(|e| e.to_string())?;
    let before = Session::load(&[parse(&input)?]).map_err(|e| e.to_string())?;
    let existing = before.instantiation("c3").map_err(|e| e.to_string())?.mentioned_objects();

    let classes = class_of(sol);
    let new: BTreeSet<ObjectId> = classes.keys().filter(|o| !existing.contains(o)).copied().collect();
    let count = |c: &str| new.iter().filter(|o| classes[o] == c).count();
    if (count("Frame"), count("ModuleA"), count("ModuleB"), new.len()) != (1, 3, 2, 6) {
        return Err(format!("new objects {:?}", new.iter().map(|o| (o.0, classes[o])).collect::<Vec<_>>()));
    }
    let frame = *new.iter().find(|o| classes[o] == "Frame").unwrap();
    let links: Vec<(&str, ObjectId, ObjectId)> = sol.links().collect();
    for e in &existing {
        let want = if classes[e] == "ElementA" { "ModuleA" } else { "ModuleB" };
        let partners: Vec<&str> =
            links.iter().filter(|(a, f, _)| *a == "Element_module" && f == e).map(|(_, _, t)| classes[t]).collect();
        if partners != [want] {
            return Err(format!("element {e} linked to {partners:?}"));
        }
    }
    let in_frame: BTreeSet<ObjectId> =
        links.iter().filter(|(a, f, _)| *a == "Frame_modules" && *f == frame).map(|(_, _, t)| *t).collect();
    let modules: BTreeSet<ObjectId> = new.iter().filter(|o| classes[o].starts_with("Module")).copied().collect();
    if in_frame != modules {
        return Err(format!("frame {frame} holds {in_frame:?}"));
    }
    let positions: BTreeSet<i64> =
        sol.values().filter(|(a, o, _)| *a == "position" && modules.contains(o)).filter_map(|(_, _, v)| v.as_int()).collect();
    if positions != (1..=5).collect() {
        return Err(format!("positions {positions:?}"));
    }

    // Same shape as the reference configuration, up to the ids of new objects.
    let c4 = Session::load(&[parse(&read(Path::new(&fixture("c4_complete.lp")))?)?]).map_err(|e| e.to_string())?;
    let mut reference = c4.instantiation("c4").map_err(|e| e.to_string())?.clone();
    reference.inst_id = "c3".into();
    let ref_new: BTreeSet<ObjectId> = reference.mentioned_objects().difference(&existing).copied().collect();
    if canonicalize(sol, &new, 1000).inst != canonicalize(&reference, &ref_new, 1000).inst {
        return Err("solution differs from the reference configuration beyond renaming".into());
    }
    Ok(format!("new frame {frame}, modules {:?} at positions 1..5", modules.iter().map(|o| o.0).collect::<Vec<_>>()))
}

fn criterion_3() -> Outcome {
    let r = ooasp(&check_v1());
    expect_code(&r, 0)?;
    if !r.stderr.contains("consistent") {
        return Err(format!("unexpected report: {}", r.stderr.trim()));
    }
    let e = ooasp(&validate_empty());
    expect_code(&e, 0)?;
    if !e.stdout.is_empty() {
        return Err(format!("empty instantiation reports {}", e.stdout.trim()));
    }
    Ok("model v1 consistent; empty instantiation has no violations".into())
}

fn criterion_4() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let out = dir.path().join("rec");
    let r = ooasp(&reconcile_c4(&out));
    expect_code(&r, 0)?;
    let v: serde_json::Value = serde_json::from_str(&read(&out.join("changeset.json"))?).map_err(|e| e.to_string())?;
    let facts = |key: &str| -> Vec<String> {
        v[key].as_array().map(|a| a.iter().map(|f| f["fact"].as_str().unwrap_or_default().to_string()).collect()).unwrap_or_default()
    };
    let pos = |o: i64, p: i64| InstanceFact::value("position", o, p).render("c4");
    let (deleted, created, reused) = (facts("deleted"), facts("created"), facts("reused"));
    if deleted != [pos(21, 2), pos(24, 5)] {
        return Err(format!("deleted {deleted:?}"));
    }
    if created != [pos(21, 5), pos(24, 2)] {
        return Err(format!("created {created:?}"));
    }
    if v["total_cost"] != 4 {
        return Err(format!("total cost {}", v["total_cost"]));
    }
    let legacy = Session::load(&[parse_facts(&read(Path::new(&fixture("c4_complete.lp")))?).map_err(|e| e.to_string())?])
        .map_err(|e| e.to_string())?;
    let legacy: BTreeSet<String> = legacy.instantiation("c4").map_err(|e| e.to_string())?.facts.iter().map(|f| f.render("c4")).collect();
    let kept: BTreeSet<String> = reused.iter().cloned().collect();
    let expected_kept: BTreeSet<String> = legacy.iter().filter(|f| !deleted.contains(f)).cloned().collect();
    if kept != expected_kept {
        return Err("reused facts are not the remaining legacy facts".into());
    }
    Ok(format!("cost 4, {} reused; modules 21 and 24 swap positions", reused.len()))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let c = checks::completion_equivalence(0x5eed_0005, 250)?;
    let r = checks::reconciliation_equivalence(0x5eed_0505, 250)?;
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:.1?}"));
    }
    Ok(format!(
        "{} completion cases ({} satisfiable), {} reconciliation cases ({} repairable) in {elapsed:.1?}",
        c.checked, c.positive, r.checked, r.positive
    ))
}

fn criterion_6() -> Outcome {
    let a = checks::completion_invariants(0x5eed_0006, 300)?;
    let b = checks::change_set_invariants(0x5eed_0606, 200)?;
    let f = checks::fixture_round_trips()?;
    let g = checks::random_round_trips(0x5eed_0066, 500)?;
    Ok(format!(
        "(a) {} completions, (b) {} change sets, (c) {f} fixtures and {g} generated files",
        a.checked, b.positive
    ))
}

/// Exit codes plus every fact-bearing output of criteria 1 to 4.
fn fingerprint() -> Result<Vec<(i32, String)>, String> {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let out: PathBuf = dir.path().join("rec");
    let mut runs = Vec::new();
    for a in [validate_c2(), complete_c3(), check_v1(), validate_empty()] {
        let r = ooasp(&a);
        runs.push((r.code, r.stdout));
    }
    let r = ooasp(&reconcile_c4(&out));
    runs.push((r.code, r.stdout));
    runs.push((0, read(&out.join("result.lp"))?));
    runs.push((0, read(&out.join("diff.dot"))?));
    Ok(runs)
}

fn criterion_7() -> Outcome {
    let first = fingerprint()?;
    for round in 2..=3 {
        if fingerprint()? != first {
            return Err(format!("run {round} differs from run 1"));
        }
    }
    Ok(format!("3 runs, {} outputs identical", first.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("validation of c2", criterion_1),
        ("completion of c3", criterion_2),
        ("model consistency", criterion_3),
        ("reconciliation of the complete configuration", criterion_4),
        ("oracle equivalence", criterion_5),
        ("invariant suites", criterion_6),
        ("determinism", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{:.2?}]", i + 1, start.elapsed()),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {reason}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
