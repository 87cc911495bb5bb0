#![allow(dead_code)]

use std::path::Path;

use coos_server::{AppState, AuthMode, ErrorBody, Role, ServerConfig, Session};
use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub const PASSWORD: &str = "long enough secret";

pub struct TestServer {
    pub base: String,
    pub client: reqwest::Client,
    stop: Option<oneshot::Sender<()>>,
    handle: Option<JoinHandle<()>>,
}

pub async fn start(dir: &Path, auth: AuthMode) -> TestServer {
    let mut config = ServerConfig::new(dir);
    config.auth = auth;
    config.kdf_rounds = 1_000;
    config.max_wait_ms = 5_000;
    let state = AppState::new(config).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = oneshot::channel();
    let handle = tokio::spawn(async move {
        coos_server::run(listener, state, async {
            let _ = rx.await;
        })
        .await
        .unwrap();
    });
    TestServer { base, client: reqwest::Client::new(), stop: Some(tx), handle: Some(handle) }
}

/// A typed response: the body on success, the error body otherwise.
pub type Reply<T> = (StatusCode, Result<T, ErrorBody>);

impl TestServer {
    pub async fn stop(mut self) {
        self.stop.take().unwrap().send(()).unwrap();
        self.handle.take().unwrap().await.unwrap();
    }

    pub async fn raw(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> reqwest::Response {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        if let Some(b) = body {
            req = req.json(&b);
        }
        req.send().await.unwrap()
    }

    pub async fn call<T: DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        token: Option<&str>,
        body: Option<Value>,
    ) -> Reply<T> {
        let resp = self.raw(method, path, token, body).await;
        let status = resp.status();
        let bytes = resp.bytes().await.unwrap();
        if status.is_success() {
            let bytes = if bytes.is_empty() { b"null".as_slice().into() } else { bytes };
            let parsed = serde_json::from_slice(&bytes)
                .unwrap_or_else(|e| panic!("{path}: {e}: {}", String::from_utf8_lossy(&bytes)));
            (status, Ok(parsed))
        } else {
            let parsed = serde_json::from_slice(&bytes)
                .unwrap_or_else(|e| panic!("{path} error body {status}: {e}: {}", String::from_utf8_lossy(&bytes)));
            (status, Err(parsed))
        }
    }

    pub async fn get<T: DeserializeOwned>(&self, path: &str, token: Option<&str>) -> Reply<T> {
        self.call(Method::GET, path, token, None).await
    }

    pub async fn post<T: DeserializeOwned>(&self, path: &str, token: Option<&str>, body: impl Serialize) -> Reply<T> {
        self.call(Method::POST, path, token, Some(serde_json::to_value(body).unwrap())).await
    }

    pub async fn put<T: DeserializeOwned>(&self, path: &str, token: Option<&str>, body: impl Serialize) -> Reply<T> {
        self.call(Method::PUT, path, token, Some(serde_json::to_value(body).unwrap())).await
    }

    pub async fn text(&self, path: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, String) {
        let method = if body.is_some() { Method::POST } else { Method::GET };
        let resp = self.raw(method, path, token, body).await;
        (resp.status(), resp.text().await.unwrap())
    }

    pub async fn register(&self, id: &str, role: Role, token: Option<&str>) -> StatusCode {
        let body = serde_json::json!({ "id": id, "display_name": id, "password": PASSWORD, "role": role });
        self.call::<Value>(Method::POST, "/auth/register", token, Some(body)).await.0
    }

    pub async fn login(&self, id: &str) -> String {
        let (status, s) = self.post::<Session>("/auth/login", None, serde_json::json!({ "id": id, "password": PASSWORD })).await;
        assert_eq!(status, StatusCode::OK, "{s:?}");
        s.unwrap().token
    }

    /// Bootstraps an operator and a convener and returns their tokens.
    pub async fn staff(&self) -> (String, String) {
        assert_eq!(self.register("op", Role::Operator, None).await, StatusCode::CREATED);
        let op = self.login("op").await;
        assert_eq!(self.register("conv", Role::Convener, Some(&op)).await, StatusCode::CREATED);
        (op, self.login("conv").await)
    }
}
