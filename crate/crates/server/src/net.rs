use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use crossbeam_channel::Sender;
use futures::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::task::JoinSet;
use vsim::scenario::Scene;

use crate::driver::{self, ClientId, Command, DriverConfig, DriverStats};
use crate::outbox::Outbox;
use crate::protocol;

/// Longest accepted TCP line.
pub const MAX_LINE: usize = 1 << 20;

#[derive(Clone, Debug)]
pub struct ServeConfig {
    pub scene: Arc<Scene>,
    pub master_seed: u64,
    pub bind: IpAddr,
    /// WebSocket and HTTP port; 0 picks a free one.
    pub port: u16,
    /// Newline-delimited JSON over plain TCP, if wanted.
    pub tcp_port: Option<u16>,
    pub log_dir: Option<PathBuf>,
    pub autostart: bool,
}

impl ServeConfig {
    pub fn new(scene: Arc<Scene>, master_seed: u64) -> Self {
        Self {
            scene,
            master_seed,
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 7777,
            tcp_port: None,
            log_dir: None,
            autostart: false,
        }
    }
}

#[derive(Clone)]
struct App {
    tx: Sender<Command>,
    next_client: Arc<AtomicU64>,
    stats: Arc<DriverStats>,
}

impl App {
    fn connect(&self) -> (ClientId, Arc<Outbox>) {
        let client = self.next_client.fetch_add(1, Ordering::Relaxed);
        let outbox = Arc::new(Outbox::default());
        let _ = self.tx.send(Command::Connect { client, outbox: Arc::clone(&outbox) });
        (client, outbox)
    }

    fn frame(&self, client: ClientId, outbox: &Outbox, text: &str) {
        match protocol::parse(text) {
            Ok(msg) => {
                let _ = self.tx.send(Command::Message { client, msg });
            }
            Err(e) => outbox.reply(protocol::protocol_error(&e, self.stats.tick())),
        }
    }

    fn malformed(&self, outbox: &Outbox, message: &str) {
        outbox.reply(protocol::error(None, self.stats.tick(), "malformed", message, None));
    }

    /// Replies already owed still go out; the driver closes the outbox
    /// after its last one.
    fn disconnect(&self, client: ClientId) {
        let _ = self.tx.send(Command::Disconnect { client });
    }
}

/// A server bound and running in the background.
pub struct RunningServer {
    pub ws_addr: SocketAddr,
    pub tcp_addr: Option<SocketAddr>,
    stats: Arc<DriverStats>,
    tx: Sender<Command>,
    driver: Option<JoinHandle<()>>,
    tasks: JoinSet<()>,
}

impl RunningServer {
    pub fn stats(&self) -> &DriverStats {
        &self.stats
    }

    /// Stops accepting clients, stops the driver and flushes the log.
    pub async fn shutdown(mut self) {
        self.tasks.abort_all();
        while self.tasks.join_next().await.is_some() {}
        let _ = self.tx.send(Command::Shutdown);
        if let Some(d) = self.driver.take() {
            let _ = tokio::task::spawn_blocking(move || d.join()).await;
        }
    }
}

pub async fn start(config: ServeConfig) -> anyhow::Result<RunningServer> {
    let ws_listener = TcpListener::bind((config.bind, config.port)).await?;
    let tcp_listener = match config.tcp_port {
        Some(p) => Some(TcpListener::bind((config.bind, p)).await?),
        None => None,
    };
    let (tx, rx) = crossbeam_channel::unbounded();
    let stats = Arc::new(DriverStats::default());
    let driver_config = DriverConfig {
        scene: config.scene,
        master_seed: config.master_seed,
        log_dir: config.log_dir,
        autostart: config.autostart,
    };
    let driver_stats = Arc::clone(&stats);
    let driver = std::thread::Builder::new()
        .name("vsim-driver".into())
        .spawn(move || driver::run(driver_config, rx, driver_stats))?;

    let app = App { tx: tx.clone(), next_client: Arc::new(AtomicU64::new(1)), stats: Arc::clone(&stats) };
    let router = Router::new()
        .route("/", get(ws_upgrade))
        .route("/ws", get(ws_upgrade))
        .route("/schema.json", get(schema_json))
        .with_state(app.clone());

    let ws_addr = ws_listener.local_addr()?;
    let tcp_addr = tcp_listener.as_ref().map(|l| l.local_addr()).transpose()?;
    let mut tasks = JoinSet::new();
    tasks.spawn(async move {
        if let Err(e) = axum::serve(ws_listener, router).await {
            tracing::error!("websocket listener stopped: {e}");
        }
    });
    if let Some(listener) = tcp_listener {
        tasks.spawn(accept_tcp(listener, app));
    }
    Ok(RunningServer { ws_addr, tcp_addr, stats, tx, driver: Some(driver), tasks })
}

/// Runs until Ctrl-C.
pub async fn serve(config: ServeConfig) -> anyhow::Result<()> {
    let server = start(config).await?;
    tracing::info!("websocket on ws://{}/ws", server.ws_addr);
    if let Some(a) = server.tcp_addr {
        tracing::info!("ndjson on tcp://{a}");
    }
    tokio::signal::ctrl_c().await?;
    server.shutdown().await;
    Ok(())
}

async fn schema_json() -> impl IntoResponse {
    Json(vsim::scenario::schema())
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(app): State<App>) -> impl IntoResponse {
    ws.max_message_size(MAX_LINE).on_upgrade(move |socket| ws_client(socket, app))
}

async fn ws_client(socket: WebSocket, app: App) {
    let (client, outbox) = app.connect();
    let (mut sink, mut stream) = socket.split();
    let writer_box = Arc::clone(&outbox);
    let writer = tokio::spawn(async move {
        while let Some(frame) = writer_box.next().await {
            if sink.send(Message::Text(frame.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => app.frame(client, &outbox, text.as_str()),
            Message::Binary(_) => app.malformed(&outbox, "binary frames are not supported; send JSON text"),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
    }
    app.disconnect(client);
    let _ = writer.await;
}

async fn accept_tcp(listener: TcpListener, app: App) {
    let mut clients = JoinSet::new();
    loop {
        tokio::select! {
            accepted = listener.accept() => match accepted {
                Ok((stream, _)) => {
                    clients.spawn(tcp_client(stream, app.clone()));
                }
                Err(e) => tracing::warn!("tcp accept failed: {e}"),
            },
            Some(_) = clients.join_next(), if !clients.is_empty() => {}
        }
    }
}

async fn tcp_client(stream: TcpStream, app: App) {
    let _ = stream.set_nodelay(true);
    let (read, mut write) = stream.into_split();
    let (client, outbox) = app.connect();
    let writer_box = Arc::clone(&outbox);
    let writer = tokio::spawn(async move {
        while let Some(mut frame) = writer_box.next().await {
            frame.push('\n');
            if write.write_all(frame.as_bytes()).await.is_err() {
                break;
            }
        }
        let _ = write.shutdown().await;
    });
    let mut reader = BufReader::new(read);
    let mut line = Vec::new();
    loop {
        line.clear();
        match (&mut reader).take(MAX_LINE as u64 + 1).read_until(b'\n', &mut line).await {
            Ok(0) | Err(_) => break,
            Ok(_) if line.len() > MAX_LINE => {
                app.malformed(&outbox, "line too long");
                break;
            }
            Ok(_) => {}
        }
        let text = match std::str::from_utf8(&line) {
            Ok(t) => t.trim_end_matches(['\n', '\r']),
            Err(_) => {
                app.malformed(&outbox, "frame is not valid UTF-8");
                continue;
            }
        };
        if !text.trim().is_empty() {
            app.frame(client, &outbox, text);
        }
    }
    app.disconnect(client);
    let _ = writer.await;
}
