use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

const SCENES: [&str; 4] = ["airport", "subway", "city", "ball_park"];

fn vsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsim")).args(args).output().expect("binary runs")
}

fn scene_file(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(format!("{name}.json")).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn shipped_scenes_validate() {
    for s in SCENES {
        let o = vsim(&["validate", "--scene", &scene_file(s)]);
        assert!(o.status.success(), "{s}: {}", stderr(&o));
        assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok");
    }
}

#[test]
fn validate_reports_problems() {
    let dir = tmp();
    let mut airport: Value = serde_json::from_str(&std::fs::read_to_string(scene_file("airport")).unwrap()).unwrap();
    airport["params"]["difficulty"] = json!(2);
    let bad = dir.path().join("airport.json");
    std::fs::write(&bad, airport.to_string()).unwrap();
    let o = vsim(&["validate", "--scene", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("difficulty") && stderr(&o).contains("scene"), "{}", stderr(&o));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"scene\": \"city\",\n  \"params\": [}").unwrap();
    let o = vsim(&["validate", "--scene", p(&broken)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("byte"), "{}", stderr(&o));

    let o = vsim(&["validate", "--scene", p(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_and_replay_every_scene() {
    let dir = tmp();
    for s in SCENES {
        let log = dir.path().join(format!("{s}.jsonl"));
        let o = vsim(&["run", "--scene", &scene_file(s), "--seed", "7", "--duration", "20", "--log", p(&log)]);
        assert!(o.status.success(), "{s}: {}", stderr(&o));
        let summary = stdout_json(&o);
        assert_eq!(summary["ticks"], 1800);
        let text = std::fs::read_to_string(&log).unwrap();
        let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!((header["kind"].as_str(), header["master_seed"].as_u64()), (Some("header"), Some(7)));
        let last: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
        assert_eq!((last["kind"].as_str(), last["tick"].as_u64()), (Some("snapshot_hash"), Some(1800)));
        assert_eq!(last["hash"], summary["final_hash"]);

        let o = vsim(&["replay", "--log", p(&log), "--verify"]);
        assert!(o.status.success(), "{s}: {}", stderr(&o));
        let report = stdout_json(&o);
        assert_eq!((report["ticks"].as_u64(), &report["final_hash"]), (Some(1800), &summary["final_hash"]));
        assert_eq!(report["lines_checked"].as_u64().unwrap() as usize, text.lines().count());
    }
}

#[test]
fn built_in_names_and_stdout_logs() {
    let a = vsim(&["run", "--scene", "subway", "--seed", "3", "--duration", "2"]);
    let b = vsim(&["run", "--scene", &scene_file("subway"), "--seed", "3", "--duration", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().filter(|l| l.contains("snapshot_hash")).count(), 180);
}

#[test]
fn scripted_run_is_reproducible_and_tamper_evident() {
    let dir = tmp();
    let script = dir.path().join("script.jsonl");
    std::fs::write(
        &script,
        [
            r#"{"kind":"param_change","tick":5,"name":"difficulty","value":4}"#,
            r#"{"kind":"param_change","tick":5,"name":"speed","value":7}"#,
            r#"{"kind":"pose","tick":200,"position":[30.5,30.0,1.7],"yaw":0.3,"pitch":0.0}"#,
        ]
        .join("\n"),
    )
    .unwrap();
    let (l1, l2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for l in [&l1, &l2] {
        let o = vsim(&["run", "--scene", "ball_park", "--seed", "42", "--duration", "10", "--script", p(&script), "--log", p(l)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let bytes = std::fs::read(&l1).unwrap();
    assert_eq!(bytes, std::fs::read(&l2).unwrap());
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert!(text.contains(r#""name":"speed","value":7,"error":"out_of_range""#));

    // Flip one byte inside the pose record at tick 200.
    let pose = text.find(r#""kind":"pose","tick":200"#).unwrap();
    let at = pose + text[pose..].find("30.5").unwrap() + 2;
    let mut tampered = bytes.clone();
    tampered[at] = b'7';
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, &tampered).unwrap();
    let o = vsim(&["replay", "--log", p(&bad), "--verify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("tick 200"), "{}", stderr(&o));

    // Invalid UTF-8 is a divergence too, not a read failure.
    let mut garbled = bytes.clone();
    let mid = text.find(r#""kind":"snapshot_hash","tick":300"#).unwrap();
    garbled[mid] = 0xff;
    std::fs::write(&bad, &garbled).unwrap();
    let o = vsim(&["replay", "--log", p(&bad), "--verify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("tick 300"), "{}", stderr(&o));

    let v2 = text.replacen(r#""format_version":1"#, r#""format_version":2"#, 1);
    std::fs::write(&bad, v2).unwrap();
    assert_eq!(vsim(&["replay", "--log", p(&bad), "--verify"]).status.code(), Some(1));

    // Without --verify a log is simply re-run.
    let o = vsim(&["replay", "--log", p(&l1)]);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["lines_checked"], 0);
}

#[test]
fn run_input_errors() {
    let dir = tmp();
    let missing = dir.path().join("nope.json");
    assert_eq!(vsim(&["run", "--scene", p(&missing), "--duration", "1"]).status.code(), Some(2));
    assert_eq!(vsim(&["run", "--scene", "city", "--duration", "1", "--script", p(&missing)]).status.code(), Some(2));
    let script = dir.path().join("s.jsonl");
    std::fs::write(&script, "{\"kind\":\"pose\"}\n").unwrap();
    assert_eq!(vsim(&["run", "--scene", "city", "--duration", "1", "--script", p(&script)]).status.code(), Some(1));
    std::fs::write(&script, r#"{"kind":"pose","tick":0,"position":[0,0,0],"yaw":0,"pitch":0}"#).unwrap();
    assert_eq!(vsim(&["run", "--scene", "city", "--duration", "1", "--script", p(&script)]).status.code(), Some(1));
    let unwritable = dir.path().join("no/such/dir/log.jsonl");
    assert_eq!(vsim(&["run", "--scene", "city", "--duration", "1", "--log", p(&unwritable)]).status.code(), Some(2));
    assert_eq!(vsim(&["replay", "--log", p(&missing)]).status.code(), Some(2));
}

#[test]
fn bench_reports_phases() {
    let mut rates = Vec::new();
    for (scene, max) in [("city", true), ("city", false), ("ball_park", true)] {
        let mut args = vec!["bench", "--scene", scene, "--ticks", "2000"];
        if max {
            args.push("--max-complexity");
        }
        let o = vsim(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        let r = stdout_json(&o);
        assert_eq!(r["phases"].as_array().unwrap().len(), 9);
        assert!(r["phase_fraction_of_wall"].as_f64().unwrap() >= 0.95, "{r}");
        rates.push(r["ticks_per_second"].as_f64().unwrap());
    }
    assert!(rates[1] > rates[0], "static city should bench faster than max complexity: {rates:?}");
}

#[test]
fn schema_matches_engine() {
    let o = vsim(&["schema"]);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o), vsim::scenario::schema());
}

struct Served(Child);

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn serve_answers_over_tcp() {
    let dir = tmp();
    let (port, tcp) = (free_port(), free_port());
    let child = Command::new(env!("CARGO_BIN_EXE_vsim"))
        .args(["serve", "--scene", &scene_file("ball_park"), "--port", &port.to_string(), "--tcp-port", &tcp.to_string()])
        .args(["--log-dir", p(dir.path()), "--autostart"])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let _guard = Served(child);
    let started = Instant::now();
    let stream = loop {
        match TcpStream::connect(("127.0.0.1", tcp)) {
            Ok(s) => break s,
            Err(_) if started.elapsed() < Duration::from_secs(10) => std::thread::sleep(Duration::from_millis(50)),
            Err(e) => panic!("server never came up: {e}"),
        }
    };
    stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut writer = stream.try_clone().unwrap();
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    let info: Value = serde_json::from_str(&line).unwrap();
    assert_eq!(info["type"], "session_info");
    let log_file = PathBuf::from(info["payload"]["log_file"].as_str().unwrap());

    let t = Instant::now();
    writeln!(writer, r#"{{"type":"set_param","name":"difficulty","value":3,"client_msg_id":1}}"#).unwrap();
    line.clear();
    reader.read_line(&mut line).unwrap();
    let rtt = t.elapsed();
    let ack: Value = serde_json::from_str(&line).unwrap();
    assert_eq!((ack["type"].as_str(), ack["client_msg_id"].as_i64()), (Some("ack"), Some(1)));
    assert!(rtt < Duration::from_millis(100), "{rtt:?}");

    writeln!(writer, r#"{{"type":"stop","client_msg_id":2}}"#).unwrap();
    line.clear();
    reader.read_line(&mut line).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&line).unwrap()["type"], "ack");
    // The stopped session's log is complete and replays clean.
    let o = vsim(&["replay", "--log", p(&log_file), "--verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
}
