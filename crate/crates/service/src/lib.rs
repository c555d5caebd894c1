//! Websocket session service over screenagent environments.
//!
//! Clients create sessions, send actions as grammar text or raw pixel events, receive
//! base64 PNG frames, and save finished episodes as demonstration files.

pub mod protocol;
pub mod session;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;

pub use protocol::{ClientMessage, ErrorCode, EventKind, PixelEvent, ServerMessage};
pub use session::SessionManager;

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(manager)
}

async fn upgrade(ws: WebSocketUpgrade, State(manager): State<Arc<SessionManager>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, manager))
}

/// One connection: messages are handled strictly in arrival order.
async fn connection(mut socket: WebSocket, manager: Arc<SessionManager>) {
    let mut current = None;
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let reply = manager.handle_text(text.as_str(), &mut current).await;
        let body = serde_json::to_string(&reply).expect("server messages serialize");
        if socket.send(Message::Text(body.into())).await.is_err() {
            break;
        }
    }
}

/// Binds `addr` and serves until the task is cancelled. Returns the bound address
/// through `on_bound` (useful with port 0).
pub async fn serve(addr: SocketAddr, manager: Arc<SessionManager>, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(manager)).await
}
