//! The thread that owns the live session and advances it at 90 Hz.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, RecvTimeoutError};
use serde_json::{json, Value};
use vsim::scenario::{apply_change, ScenarioParams, Scene, SceneId};
use vsim::session::{Session, TickInputs, ParamChange, DT, FORMAT_VERSION, TICK_HZ};

use crate::outbox::Outbox;
use crate::protocol::{self, ClientMessage, Request, PROTOCOL_VERSION};

/// Falling further behind than this skips ticks instead of bursting.
const RESYNC_AFTER: Duration = Duration::from_millis(250);

pub type ClientId = u64;

pub enum Command {
    Connect { client: ClientId, outbox: Arc<Outbox> },
    Disconnect { client: ClientId },
    Message { client: ClientId, msg: ClientMessage },
    Shutdown,
}

#[derive(Clone, Debug)]
pub struct DriverConfig {
    pub scene: Arc<Scene>,
    pub master_seed: u64,
    /// Where session logs go, one file per scene load. No logs without it.
    pub log_dir: Option<PathBuf>,
    /// Start ticking right away instead of waiting for `start`.
    pub autostart: bool,
}

/// Counters readable from any thread while the driver runs.
#[derive(Debug, Default)]
pub struct DriverStats {
    tick: AtomicU64,
    ticks_run: AtomicU64,
    max_lag_us: AtomicU64,
    messages: AtomicU64,
}

impl DriverStats {
    /// Tick of the current session (0 without one).
    pub fn tick(&self) -> u64 {
        self.tick.load(Ordering::Relaxed)
    }

    /// Ticks executed across all sessions.
    pub fn ticks_run(&self) -> u64 {
        self.ticks_run.load(Ordering::Relaxed)
    }

    /// Worst delay between a tick's deadline and its execution, in ticks.
    pub fn max_lag_ticks(&self) -> f64 {
        self.max_lag_us.load(Ordering::Relaxed) as f64 * 1e-6 / DT
    }

    /// Control messages that reached the driver.
    pub fn messages(&self) -> u64 {
        self.messages.load(Ordering::Relaxed)
    }
}

struct Live {
    session: Session,
    pending: TickInputs,
    /// Parameters once everything in `pending` is applied.
    pending_params: ScenarioParams,
    log: Option<BufWriter<File>>,
    log_path: Option<PathBuf>,
}

struct Client {
    outbox: Arc<Outbox>,
    stride: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Paused,
    Running,
    Stopped,
}

impl State {
    fn as_str(self) -> &'static str {
        match self {
            State::Paused => "paused",
            State::Running => "running",
            State::Stopped => "stopped",
        }
    }
}

struct Driver {
    config: DriverConfig,
    scenes: BTreeMap<SceneId, Arc<Scene>>,
    live: Option<Live>,
    state: State,
    scene_load: u64,
    clients: BTreeMap<ClientId, Client>,
    stats: Arc<DriverStats>,
    /// Set by requests that change what `session_info` reports.
    info_changed: bool,
}

pub fn run(config: DriverConfig, rx: Receiver<Command>, stats: Arc<DriverStats>) {
    let mut scenes: BTreeMap<SceneId, Arc<Scene>> = SceneId::ALL.iter().map(|&id| (id, Arc::new(Scene::builtin(id)))).collect();
    scenes.insert(config.scene.id(), Arc::clone(&config.scene));
    let mut d = Driver { config, scenes, live: None, state: State::Stopped, scene_load: 0, clients: BTreeMap::new(), stats, info_changed: false };
    let first = d.config.scene.id();
    if let Err(e) = d.load(first, 0) {
        tracing::error!("cannot open session log: {e}");
    }
    if d.config.autostart {
        d.state = State::Running;
    }

    let period = Duration::from_secs_f64(DT);
    let mut deadline = Instant::now() + period;
    loop {
        let now = Instant::now();
        if now >= deadline {
            if d.state == State::Running {
                let lag = (now - deadline).as_micros() as u64;
                d.stats.max_lag_us.fetch_max(lag, Ordering::Relaxed);
                d.tick();
            }
            deadline += period;
            if now > deadline + RESYNC_AFTER {
                deadline = now + period;
            }
            continue;
        }
        match rx.recv_deadline(deadline) {
            Ok(Command::Shutdown) | Err(RecvTimeoutError::Disconnected) => break,
            Ok(cmd) => d.handle(cmd),
            Err(RecvTimeoutError::Timeout) => {}
        }
    }
    d.close_log();
    for c in d.clients.values() {
        c.outbox.close();
    }
}

impl Driver {
    fn tick_now(&self) -> u64 {
        self.live.as_ref().map_or(0, |l| l.session.tick_count())
    }

    fn session_info(&self) -> String {
        let live = self.live.as_ref();
        let payload = json!({
            "protocol_version": PROTOCOL_VERSION,
            "format_version": FORMAT_VERSION,
            "tick_rate_hz": TICK_HZ,
            "state": self.state.as_str(),
            "scene": live.map(|l| l.session.scene().id()),
            "params": live.map(|l| &l.pending_params),
            "master_seed": self.config.master_seed,
            "scene_load": self.scene_load,
            "log_file": live.and_then(|l| l.log_path.as_ref()).map(|p| p.display().to_string()),
            "schema": "/schema.json",
        });
        json!({"type": "session_info", "tick": self.tick_now(), "payload": payload}).to_string()
    }

    fn broadcast_info(&self) {
        let info = self.session_info();
        for c in self.clients.values() {
            c.outbox.reply(info.clone());
        }
    }

    fn close_log(&mut self) {
        if let Some(log) = self.live.as_mut().and_then(|l| l.log.as_mut()) {
            if let Err(e) = log.flush() {
                tracing::error!("session log flush failed: {e}");
            }
        }
    }

    fn load(&mut self, id: SceneId, scene_load: u64) -> std::io::Result<()> {
        self.close_log();
        let scene = Arc::clone(&self.scenes[&id]);
        let session = Session::new(scene, self.config.master_seed, scene_load);
        let (log, log_path) = match &self.config.log_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{}-seed{}-load{}.jsonl", id, self.config.master_seed, scene_load));
                let mut w = BufWriter::new(File::create(&path)?);
                writeln!(w, "{}", session.header_line())?;
                (Some(w), Some(path))
            }
            None => (None, None),
        };
        let pending_params = session.params().clone();
        self.live = Some(Live { session, pending: TickInputs::default(), pending_params, log, log_path });
        self.scene_load = scene_load;
        self.state = State::Paused;
        self.stats.tick.store(0, Ordering::Relaxed);
        Ok(())
    }

    fn tick(&mut self) {
        let Some(live) = self.live.as_mut() else { return };
        let inputs = std::mem::take(&mut live.pending);
        let out = live.session.tick(&inputs);
        live.pending_params = live.session.params().clone();
        self.stats.tick.store(out.tick, Ordering::Relaxed);
        self.stats.ticks_run.fetch_add(1, Ordering::Relaxed);
        if let Some(w) = live.log.as_mut() {
            let written = out.lines.iter().try_for_each(|l| writeln!(w, "{l}"));
            if let Err(e) = written {
                tracing::error!("session log write failed, logging disabled: {e}");
                live.log = None;
            }
        }
        let mut snapshot: Option<String> = None;
        let events: Vec<String> = out.events.iter().map(|e| protocol::event_frame(out.tick, e)).collect();
        for c in self.clients.values() {
            let Some(stride) = c.stride else { continue };
            for e in &events {
                c.outbox.stream(e.clone());
            }
            if out.tick % stride == 0 {
                let s = snapshot.get_or_insert_with(|| live.session.snapshot().canonical_json());
                c.outbox.stream(protocol::snapshot_frame(out.tick, s));
            }
        }
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Connect { client, outbox } => {
                outbox.reply(self.session_info());
                self.clients.insert(client, Client { outbox, stride: None });
            }
            Command::Disconnect { client } => {
                if let Some(c) = self.clients.remove(&client) {
                    c.outbox.finish();
                }
            }
            Command::Message { client, msg } => {
                self.stats.messages.fetch_add(1, Ordering::Relaxed);
                let Some(outbox) = self.clients.get(&client).map(|c| Arc::clone(&c.outbox)) else { return };
                let id = msg.client_msg_id;
                let frame = match self.request(client, msg.request) {
                    Ok(payload) => protocol::ack(id, self.tick_now(), payload),
                    Err(e) => protocol::error(Some(id), self.tick_now(), e.code, &e.message, e.field.as_deref()),
                };
                outbox.reply(frame);
                if std::mem::take(&mut self.info_changed) {
                    self.broadcast_info();
                }
            }
            Command::Shutdown => {}
        }
    }

    fn request(&mut self, client: ClientId, req: Request) -> Result<Value, Reject> {
        match req {
            Request::Subscribe { rate } => {
                let stride = protocol::stride(rate);
                if let Some(c) = self.clients.get_mut(&client) {
                    c.stride = Some(stride);
                }
                Ok(json!({"rate": rate, "stride": stride}))
            }
            Request::Unsubscribe => {
                if let Some(c) = self.clients.get_mut(&client) {
                    c.stride = None;
                    c.outbox.clear_stream();
                }
                Ok(json!({}))
            }
            Request::LoadScene { scene } => {
                let id = SceneId::parse(&scene)
                    .ok_or_else(|| Reject::new("invalid_value", format!("unknown scene `{scene}`")).on("scene"))?;
                self.load(id, self.scene_load + 1)
                    .map_err(|e| Reject::new("scene_load_failed", format!("cannot open session log: {e}")))?;
                self.info_changed = true;
                Ok(json!({"scene": id, "scene_load": self.scene_load, "state": self.state.as_str()}))
            }
            Request::Start | Request::Pause => {
                if self.live.is_none() {
                    return Err(no_session());
                }
                self.state = if req == Request::Start { State::Running } else { State::Paused };
                if self.state == State::Paused {
                    self.close_log();
                }
                self.info_changed = true;
                Ok(json!({"state": self.state.as_str()}))
            }
            Request::Stop => {
                if self.live.is_none() {
                    return Err(no_session());
                }
                self.close_log();
                let live = self.live.take().expect("checked above");
                self.state = State::Stopped;
                self.stats.tick.store(0, Ordering::Relaxed);
                self.info_changed = true;
                Ok(json!({
                    "state": "stopped",
                    "ticks": live.session.tick_count(),
                    "log_file": live.log_path.map(|p| p.display().to_string()),
                }))
            }
            Request::SetParam { name, value } => self.set_param(name, value),
            Request::LaunchBallOverride { machines } => self.set_param("machine_mask_override".into(), machines),
            Request::Pose(pose) => {
                let live = self.live.as_mut().ok_or_else(no_session)?;
                live.pending.poses.push(pose);
                Ok(json!({"applied_tick": live.session.tick_count() + 1}))
            }
        }
    }

    fn set_param(&mut self, name: String, value: Value) -> Result<Value, Reject> {
        let live = self.live.as_mut().ok_or_else(no_session)?;
        let next = apply_change(&live.pending_params, &name, &value).map_err(|e| Reject {
            code: e.code(),
            message: e.to_string(),
            field: e.field().map(str::to_owned),
        })?;
        live.pending_params = next;
        live.pending.changes.push(ParamChange { name: name.clone(), value: value.clone() });
        Ok(json!({"applied_tick": live.session.tick_count() + 1, "name": name, "value": value}))
    }
}

struct Reject {
    code: &'static str,
    message: String,
    field: Option<String>,
}

impl Reject {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), field: None }
    }

    fn on(mut self, field: &str) -> Self {
        self.field = Some(field.to_owned());
        self
    }
}

fn no_session() -> Reject {
    Reject::new("no_session", "no scene is loaded; send load_scene first")
}
