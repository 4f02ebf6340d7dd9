use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde_json::json;
use vsim::scenario::{max_complexity, Scene, SceneDefinition, SceneError, SceneId};
use vsim::session::{self, parse_script, ReplayError, Session, TickInputs, PHASES, TICK_HZ};

pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub type Outcome = Result<(), Failure>;

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn io_error(what: &Path, e: io::Error) -> Failure {
    Failure { code: 2, message: format!("{}: {e}", what.display()) }
}

/// A path that exists wins; otherwise a built-in scene name.
fn scene_text(arg: &str) -> Result<String, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(id) = SceneId::parse(arg) {
            return Ok(vsim::scenario::builtin_json(id).to_owned());
        }
    }
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn load_scene(arg: &str) -> Result<Scene, Failure> {
    let text = scene_text(arg)?;
    Scene::from_json(&text).map_err(|e| scene_failure(arg, e))
}

fn scene_failure(arg: &str, e: SceneError) -> Failure {
    match e {
        SceneError::Invalid(issues) => {
            invalid(format!("{arg}:\n{}", issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")))
        }
        parse => invalid(format!("{arg}: {parse}")),
    }
}

fn emit(value: serde_json::Value) -> Outcome {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("reports serialize"))
        .map_err(|e| io_error(Path::new("<stdout>"), e))
}

pub fn run(scene: &str, seed: u64, duration: f64, script: Option<&Path>, log: Option<&Path>) -> Outcome {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(invalid("--duration must be a non-negative number of seconds"));
    }
    let scene = Arc::new(load_scene(scene)?);
    let script = match script {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            parse_script(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
        }
        None => Default::default(),
    };
    let ticks = (duration * TICK_HZ as f64).round() as u64;
    if let Some((&last, _)) = script.last_key_value() {
        if last > ticks {
            eprintln!("vsim: script inputs after tick {ticks} are ignored");
        }
    }

    let sink: Box<dyn Write> = match log {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| io_error(p, e))?),
        None => Box::new(io::stdout().lock()),
    };
    let log_name = log.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    let mut out = BufWriter::new(sink);
    let write_err = |e| io_error(&log_name, e);

    let mut session = Session::new(scene, seed, 0);
    writeln!(out, "{}", session.header_line()).map_err(write_err)?;
    let empty = TickInputs::default();
    let mut last_hash = None;
    for t in 1..=ticks {
        let result = session.tick(script.get(&t).unwrap_or(&empty));
        for line in &result.lines {
            writeln!(out, "{line}").map_err(write_err)?;
        }
        last_hash = Some(result.hash);
    }
    out.flush().map_err(write_err)?;
    drop(out);

    let summary = json!({
        "ticks": ticks,
        "final_hash": last_hash.map(session::format_hash),
        "metrics": session.snapshot().metrics,
        "log": log_name.display().to_string(),
    });
    if log.is_some() {
        emit(summary)
    } else {
        eprintln!("{summary}");
        Ok(())
    }
}

pub fn replay(log: &Path, verify: bool) -> Outcome {
    let bytes = fs::read(log).map_err(|e| io_error(log, e))?;
    // Damaged bytes must reach the comparison, not abort the read.
    let text = String::from_utf8_lossy(&bytes);
    match session::replay(&text, verify) {
        Ok(report) => emit(json!({
            "ticks": report.ticks,
            "verified": verify,
            "lines_checked": report.lines_checked,
            "final_hash": report.final_hash.map(session::format_hash),
            "metrics": report.metrics,
        })),
        Err(ReplayError::Divergence { tick, line, expected, found }) => {
            let clip = |s: &str| s.chars().take(200).collect::<String>();
            eprintln!("first divergence at tick {tick} (log line {line})");
            eprintln!("  log:    {}", clip(&expected));
            eprintln!("  replay: {}", clip(&found));
            Err(Failure { code: 3, message: format!("replay diverges at tick {tick}") })
        }
        Err(e) => Err(invalid(format!("{}: {e}", log.display()))),
    }
}

pub fn bench(scene: &str, max: bool, ticks: u64, seed: u64) -> Outcome {
    let mut def: SceneDefinition = load_scene(scene)?.def;
    if max {
        def.params = max_complexity(&def.params);
    }
    let scene = Arc::new(Scene::new(def).map_err(|e| scene_failure(scene, e))?);
    let id = scene.id();
    let mut session = Session::new(scene, seed, 0);
    session.enable_timing();
    let empty = TickInputs::default();
    let mut agents = 0usize;
    let started = Instant::now();
    for _ in 0..ticks {
        session.tick(&empty);
        agents += session.crowd().agents.len();
    }
    let wall = started.elapsed().as_secs_f64();
    let timing = session.timing().expect("timing enabled");
    let phase_total: f64 = timing.total.iter().map(|d| d.as_secs_f64()).sum();
    let phases: Vec<_> = PHASES
        .iter()
        .zip(timing.total.iter())
        .map(|(name, d)| {
            let s = d.as_secs_f64();
            json!({"phase": name, "seconds": s, "fraction_of_wall": s / wall})
        })
        .collect();
    let tps = ticks as f64 / wall;
    emit(json!({
        "scene": id,
        "max_complexity": max,
        "seed": seed,
        "ticks": ticks,
        "wall_seconds": wall,
        "ticks_per_second": tps,
        "realtime_factor": tps / TICK_HZ as f64,
        "mean_agents": agents as f64 / ticks.max(1) as f64,
        "phases": phases,
        "phase_seconds_total": phase_total,
        "phase_fraction_of_wall": phase_total / wall,
    }))
}

pub fn validate(scene: &str) -> Outcome {
    load_scene(scene)?;
    println!("ok");
    Ok(())
}

pub fn serve(
    scene: &str,
    port: u16,
    tcp_port: Option<u16>,
    bind: IpAddr,
    seed: u64,
    log_dir: Option<PathBuf>,
    autostart: bool,
) -> Outcome {
    let scene = Arc::new(load_scene(scene)?);
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let mut config = vsim_server::ServeConfig::new(scene, seed);
    config.port = port;
    config.tcp_port = tcp_port;
    config.bind = bind;
    config.log_dir = log_dir;
    config.autostart = autostart;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure { code: 2, message: e.to_string() })?;
    runtime.block_on(vsim_server::serve(config)).map_err(|e| Failure { code: 2, message: format!("{e:#}") })
}

pub fn schema() -> Outcome {
    emit(vsim::scenario::schema())
}
