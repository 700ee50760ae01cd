#![allow(dead_code)]

use std::time::Duration;

use futures::StreamExt;
use reqwest::{Client, RequestBuilder, Response, StatusCode};
use serde_json::{json, Value};
use tokio::sync::mpsc;
use topiary_core::{EventEnvelope, UserId};
use topiary_server::{router, AppState, Config, SharedState};

pub const PASSWORD: &str = "correct horse";

pub struct TestServer {
    pub base: String,
    pub state: SharedState,
    pub client: Client,
}

/// Binds an ephemeral port and serves `config` with the given accounts.
pub async fn start(config: Config, users: &[&str]) -> TestServer {
    let state = AppState::load(config).unwrap();
    for u in users {
        state.users.set_password(&UserId::new(*u), PASSWORD).unwrap();
    }
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let app = router(state.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    TestServer { base, state, client: Client::new() }
}

pub struct Session<'a> {
    pub server: &'a TestServer,
    pub token: String,
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn login(&self, user: &str) -> Session<'_> {
        let r = self.client.post(self.url("/login")).json(&json!({ "user": user, "password": PASSWORD })).send().await.unwrap();
        assert_eq!(r.status(), StatusCode::OK, "login {user}");
        let body: Value = r.json().await.unwrap();
        Session { server: self, token: body["token"].as_str().unwrap().to_string() }
    }
}

impl Session<'_> {
    pub fn get(&self, path: &str) -> RequestBuilder {
        self.server.client.get(self.server.url(path)).bearer_auth(&self.token)
    }

    pub fn post(&self, path: &str) -> RequestBuilder {
        self.server.client.post(self.server.url(path)).bearer_auth(&self.token)
    }

    pub fn put(&self, path: &str) -> RequestBuilder {
        self.server.client.put(self.server.url(path)).bearer_auth(&self.token)
    }

    pub async fn json(&self, req: RequestBuilder, expect: StatusCode) -> Value {
        let r = req.send().await.unwrap();
        let status = r.status();
        let text = r.text().await.unwrap();
        assert_eq!(status, expect, "body: {text}");
        if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        }
    }

    /// Opens the event stream and forwards parsed envelopes to a channel.
    pub async fn subscribe(&self, project: &str, last_event_id: Option<u64>) -> Result<mpsc::UnboundedReceiver<EventEnvelope>, Response> {
        let mut req = self.get(&format!("/p/{project}/events"));
        if let Some(id) = last_event_id {
            req = req.header("Last-Event-ID", id.to_string());
        }
        let resp = req.send().await.unwrap();
        if resp.status() != StatusCode::OK {
            return Err(resp);
        }
        let (tx, rx) = mpsc::unbounded_channel();
        tokio::spawn(async move {
            let mut body = resp.bytes_stream();
            let mut buf = String::new();
            while let Some(Ok(chunk)) = body.next().await {
                buf.push_str(&String::from_utf8_lossy(&chunk));
                while let Some(end) = buf.find("\n\n") {
                    let block: String = buf.drain(..end + 2).collect();
                    let data: Vec<&str> = block.lines().filter_map(|l| l.strip_prefix("data:")).map(|d| d.strip_prefix(' ').unwrap_or(d)).collect();
                    if data.is_empty() {
                        continue;
                    }
                    let envelope: EventEnvelope = serde_json::from_str(&data.join("\n")).expect("envelope json");
                    if tx.send(envelope).is_err() {
                        return;
                    }
                }
            }
        });
        Ok(rx)
    }
}

pub async fn next_event(rx: &mut mpsc::UnboundedReceiver<EventEnvelope>) -> EventEnvelope {
    tokio::time::timeout(Duration::from_secs(10), rx.recv()).await.expect("event within 10 s").expect("stream open")
}

pub const NS: &str = "https://example.org/t/";

pub fn enc(iri: &str) -> String {
    iri.bytes()
        .map(|b| if b.is_ascii_alphanumeric() || b"-._~".contains(&b) { (b as char).to_string() } else { format!("%{b:02X}") })
        .collect()
}

/// Changes adding `local` under `parent` with an English label.
pub fn add_class(local: &str, parent: &str, label: &str) -> Value {
    json!([
        { "op": "add", "axiom": { "type": "declaration", "class": format!("{NS}{local}") } },
        { "op": "add", "axiom": { "type": "subClassOf", "sub": format!("{NS}{local}"), "super": format!("{NS}{parent}") } },
        { "op": "add", "axiom": { "type": "annotationAssertion", "property": "http://www.w3.org/2000/01/rdf-schema#label", "subject": format!("{NS}{local}"), "value": { "lexical": label, "lang": "en" } } }
    ])
}
