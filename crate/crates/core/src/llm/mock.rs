//! In-process chat-completions server with scripted replies.
//!
//! A request is matched against the rules in order. A rule applies when its
//! every `when_contains` substring occurs in the last user message. Each rule
//! plays its replies in order and repeats the last one once exhausted.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::task::JoinHandle;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MockReply {
    Text { content: String },
    Status { code: u16 },
    Empty,
}

impl MockReply {
    pub fn text(s: impl Into<String>) -> Self {
        MockReply::Text { content: s.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    pub when_contains: Vec<String>,
    pub replies: Vec<MockReply>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default)]
    pub fallback: Option<MockReply>,
}

impl MockScript {
    pub fn rule<I, S>(mut self, when_contains: I, replies: Vec<MockReply>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.rules.push(MockRule {
            when_contains: when_contains.into_iter().map(Into::into).collect(),
            replies,
        });
        self
    }

    pub fn fallback(mut self, reply: MockReply) -> Self {
        self.fallback = Some(reply);
        self
    }
}

struct Shared {
    script: MockScript,
    cursors: Mutex<Vec<usize>>,
    received: Mutex<Vec<Value>>,
}

pub struct MockChatServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    task: JoinHandle<()>,
}

impl MockChatServer {
    /// Binds an ephemeral localhost port and serves until dropped.
    pub async fn start(script: MockScript) -> std::io::Result<Self> {
        Self::bind(script, SocketAddr::from(([127, 0, 0, 1], 0))).await
    }

    pub async fn bind(script: MockScript, addr: SocketAddr) -> std::io::Result<Self> {
        let shared = Arc::new(Shared {
            cursors: Mutex::new(vec![0; script.rules.len()]),
            script,
            received: Mutex::new(Vec::new()),
        });
        let app = Router::new()
            .route("/v1/chat/completions", post(complete))
            .route("/chat/completions", post(complete))
            .with_state(shared.clone());
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let task = tokio::spawn(async move {
            if let Err(e) = axum::serve(listener, app).await {
                tracing::error!(error = %e, "mock chat server stopped");
            }
        });
        Ok(MockChatServer { addr, shared, task })
    }

    /// Base URL to put in `LlmConfig::endpoint`.
    pub fn endpoint(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Request bodies received so far.
    pub fn received(&self) -> Vec<Value> {
        self.shared.received.lock().unwrap().clone()
    }

    /// Blocks until the server task ends (only on error). Used by the CLI.
    pub async fn wait(self) {
        let _ = (&mut { self }.task).await;
    }
}

impl Drop for MockChatServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}

fn last_user_message(body: &Value) -> &str {
    body["messages"]
        .as_array()
        .and_then(|msgs| msgs.iter().rev().find(|m| m["role"] == "user"))
        .and_then(|m| m["content"].as_str())
        .unwrap_or("")
}

fn pick_reply(shared: &Shared, body: &Value) -> Option<MockReply> {
    let user = last_user_message(body);
    for (i, rule) in shared.script.rules.iter().enumerate() {
        if rule.replies.is_empty() || !rule.when_contains.iter().all(|s| user.contains(s.as_str())) {
            continue;
        }
        let mut cursors = shared.cursors.lock().unwrap();
        let idx = cursors[i].min(rule.replies.len() - 1);
        cursors[i] += 1;
        return Some(rule.replies[idx].clone());
    }
    shared.script.fallback.clone()
}

async fn complete(State(shared): State<Arc<Shared>>, Json(body): Json<Value>) -> Response {
    let reply = pick_reply(&shared, &body);
    shared.received.lock().unwrap().push(body);
    match reply {
        Some(MockReply::Text { content }) => Json(json!({
            "id": "mock",
            "object": "chat.completion",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
            "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0}
        }))
        .into_response(),
        Some(MockReply::Empty) => Json(json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": ""}}]
        }))
        .into_response(),
        Some(MockReply::Status { code }) => {
            let code = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (code, "scripted failure").into_response()
        }
        None => (StatusCode::NOT_FOUND, "no scripted reply matches").into_response(),
    }
}
