#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};
use vsim::scenario::{Scene, SceneId};
use vsim_server::{start, RunningServer, ServeConfig};

pub const WAIT: Duration = Duration::from_secs(5);

pub async fn server(scene: SceneId, autostart: bool) -> RunningServer {
    let mut config = ServeConfig::new(Arc::new(Scene::builtin(scene)), 42);
    config.port = 0;
    config.tcp_port = Some(0);
    config.autostart = autostart;
    start(config).await.expect("server starts")
}

#[allow(clippy::large_enum_variant)]
pub enum Client {
    Ws(WebSocketStream<MaybeTlsStream<TcpStream>>),
    Tcp(BufReader<OwnedReadHalf>, OwnedWriteHalf),
}

impl Client {
    pub async fn ws(s: &RunningServer) -> Client {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/ws", s.ws_addr)).await.unwrap();
        Client::Ws(ws)
    }

    pub async fn tcp(s: &RunningServer) -> Client {
        let stream = TcpStream::connect(s.tcp_addr.unwrap()).await.unwrap();
        let (r, w) = stream.into_split();
        Client::Tcp(BufReader::new(r), w)
    }

    /// Connects and consumes the greeting.
    pub async fn ready(mut self) -> (Client, Value) {
        let info = self.recv().await;
        assert_eq!(info["type"], "session_info");
        (self, info)
    }

    pub async fn send_raw(&mut self, text: &str) {
        match self {
            Client::Ws(ws) => ws.send(Message::Text(text.to_owned().into())).await.unwrap(),
            Client::Tcp(_, w) => {
                w.write_all(text.as_bytes()).await.unwrap();
                w.write_all(b"\n").await.unwrap();
            }
        }
    }

    pub async fn send(&mut self, msg: Value) {
        self.send_raw(&msg.to_string()).await;
    }

    pub async fn try_recv(&mut self, within: Duration) -> Option<Value> {
        let text = tokio::time::timeout(within, async {
            match self {
                Client::Ws(ws) => loop {
                    match ws.next().await {
                        Some(Ok(Message::Text(t))) => return Some(t.to_string()),
                        Some(Ok(_)) => continue,
                        _ => return None,
                    }
                },
                Client::Tcp(r, _) => {
                    let mut line = String::new();
                    match r.read_line(&mut line).await {
                        Ok(0) | Err(_) => None,
                        Ok(_) => Some(line),
                    }
                }
            }
        })
        .await
        .ok()??;
        Some(serde_json::from_str(&text).expect("server frames are JSON"))
    }

    pub async fn recv(&mut self) -> Value {
        self.try_recv(WAIT).await.expect("frame within timeout")
    }

    /// Next frame that answers `id`, skipping stream frames.
    pub async fn reply(&mut self, id: i64) -> Value {
        loop {
            let v = self.recv().await;
            if v["client_msg_id"] == json!(id) {
                return v;
            }
        }
    }

    pub async fn request(&mut self, id: i64, mut msg: Value) -> Value {
        msg["client_msg_id"] = json!(id);
        self.send(msg).await;
        self.reply(id).await
    }
}
