use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use coos_core::graph::{NodeKind, WeightedGraph};
use coos_core::impact::LogicModel;
use coos_core::project::{load_project_file, template_names, Project};
use coos_core::svo::Instrument;
use serde_json::Value;

fn coos(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coos")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn template_project(dir: &Path) -> String {
    let t = template_names().next().unwrap();
    let out = coos(dir, &["--project", "p.json", "project", "new", "--id", "p1", "--name", "Demo", "--template", t]);
    assert!(out.status.success(), "{}", stderr(&out));
    "p.json".into()
}

#[test]
fn new_project_round_trips_through_load() {
    let dir = tempfile::tempdir().unwrap();
    let out = coos(dir.path(), &["--project", "p.json", "project", "new", "--id", "p1", "--name", "Demo"]);
    assert_eq!(out.status.code(), Some(0));
    let on_disk = std::fs::read_to_string(dir.path().join("p.json")).unwrap();
    let loaded = coos(dir.path(), &["--project", "p.json", "project", "load"]);
    assert_eq!(stdout(&loaded), on_disk);
    assert_eq!(load_project_file(&dir.path().join("p.json")).unwrap(), Project::new("p1", "Demo"));

    let again = coos(dir.path(), &["--project", "p.json", "project", "new", "--id", "p2", "--name", "X"]);
    assert_eq!(again.status.code(), Some(1));
    let forced = coos(dir.path(), &["--project", "p.json", "project", "new", "--id", "p2", "--name", "X", "--force"]);
    assert_eq!(forced.status.code(), Some(0));
}

#[test]
fn exit_codes_separate_bad_input_from_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(coos(dir.path(), &["impact", "rank"]).status.code(), Some(2));
    assert_eq!(coos(dir.path(), &["--project", "missing.json", "project", "load"]).status.code(), Some(1));
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(coos(dir.path(), &["--project", "bad.json", "project", "validate"]).status.code(), Some(2));

    let mut p = Project::new("p", "n");
    p.logic_model = Some(LogicModel::new(
        WeightedGraph::new()
            .node("a", "A", NodeKind::Activity)
            .node("b", "B", NodeKind::Output)
            .node("z", "Z", NodeKind::Impact)
            .edge("a", "b", 1.0)
            .edge("b", "a", 1.0),
        "z",
    ));
    std::fs::write(dir.path().join("cyclic.json"), coos_core::project::to_canonical(&p)).unwrap();
    let out = coos(dir.path(), &["--project", "cyclic.json", "project", "validate"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("logic_model.graph") && err.contains("cycle"), "{err}");
}

#[test]
fn template_commands_produce_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = template_project(dir.path());

    let out = coos(dir.path(), &["--project", &p, "project", "validate"]);
    assert!(out.status.success(), "{}", stderr(&out));

    let out = coos(dir.path(), &["--project", &p, "impact", "rank", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next(), Some("input_id,label,sensitivity"));

    let out = coos(dir.path(), &["--project", &p, "sim", "ternary", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("policy_id,soc,env,eco"));
    for line in text.lines().skip(1) {
        let sum: f64 = line.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "{line}");
    }

    let out = coos(dir.path(), &["--project", &p, "behavior", "rank"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("plan_id,rate,delta"));
    let deltas: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(deltas.len() >= 3);
    assert!(deltas.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn svo_score_reads_response_csv() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instrument::standard();
    let mut csv = String::from("participant,item_id,position\n");
    for item in &inst.items {
        csv.push_str(&format!("ann,{},1\n", item.id));
        csv.push_str(&format!("bob,{},0\n", item.id));
    }
    std::fs::write(dir.path().join("r.csv"), csv).unwrap();
    let out = coos(dir.path(), &["svo", "score", "--responses", "r.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let scores: Value = serde_json::from_str(&stdout(&out)).unwrap();

    for (who, pos) in [("ann", 1.0), ("bob", 0.0)] {
        let primary: Vec<_> = inst
            .items
            .iter()
            .filter(|i| i.kind == coos_core::svo::ItemKind::Primary)
            .map(|i| i.allocation_at(pos))
            .collect();
        let n = primary.len() as f64;
        let own = primary.iter().map(|a| a.own).sum::<f64>() / n;
        let other = primary.iter().map(|a| a.other).sum::<f64>() / n;
        let want = (other - 50.0).atan2(own - 50.0).to_degrees();
        let got = scores[who]["angle"].as_f64().unwrap();
        assert!((got - want).abs() < 1e-9, "{who}: {got} vs {want}");
    }

    std::fs::write(dir.path().join("short.csv"), "participant,item_id,position\ncat,1,0.5\n").unwrap();
    assert_eq!(coos(dir.path(), &["svo", "score", "--responses", "short.csv"]).status.code(), Some(2));
}

#[test]
fn oracle_check_agrees_on_random_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = coos(dir.path(), &["consensus", "oracle-check", "--random", "40", "--seed", "11"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).ends_with("40 instances, 0 disagreements\n"));

    std::fs::write(
        dir.path().join("profiles.json"),
        r#"[{"participant": "a", "order": ["x", "y", "z"], "permissible_k": 1},
            {"participant": "b", "order": ["z", "y", "x"], "permissible_k": 2}]"#,
    )
    .unwrap();
    let out = coos(dir.path(), &["consensus", "oracle-check", "--profiles", "profiles.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn serve_answers_health_checks() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let mut child = Command::new(env!("CARGO_BIN_EXE_coos"))
        .args(["serve", "--bind", "127.0.0.1:0", "--auth", "open", "--data-dir"])
        .arg(&data)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("{line}")).to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
}
