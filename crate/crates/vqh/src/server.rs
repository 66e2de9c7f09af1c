//! The book API: a JSON file store behind an HTTP service, with a
//! server-sent event feed and the session control endpoints.
//!
//! | route                 | effect                                       |
//! |-----------------------|----------------------------------------------|
//! | `POST /books`         | store a book, `201 {"id": ...}`              |
//! | `GET /books`          | `[{"id", "created_at"}]` in arrival order    |
//! | `GET /books/latest`   | most recent book                             |
//! | `GET /books/{id}`     | one book, or 404                             |
//! | `GET /events`         | `text/event-stream` of `book`, `record` and `status` events |
//! | `GET /health`         | `{"status": "ok", "books": n}`               |
//! | `POST /session/qubo`  | replace the session's `h_setup.csv` (CSV body) |
//! | `POST /session/run`   | start a run, `202 {"id": ...}`               |
//! | `POST /session/stop`  | stop sound emission                          |
//!
//! Errors carry `{"error": <code>, "detail": <text>}`.

use std::collections::HashMap;
use std::convert::Infallible;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use crate::book::{Book, BookError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("invalid book: {0}")]
    Invalid(#[from] BookError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Entry of `GET /books`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Default)]
struct Index {
    books: HashMap<String, Arc<Book>>,
    order: Vec<IndexEntry>,
}

/// Books keyed by id. Writes are serialized, reads run concurrently.
/// With a directory every book is also kept as `<id>.json`.
pub struct BookStore {
    dir: Option<PathBuf>,
    index: RwLock<Index>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b"._-".contains(&b))
        && id != "latest"
}

impl BookStore {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            index: RwLock::default(),
        }
    }

    /// Opens `dir`, creating it, and loads the books already there.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let io = |source| StoreError::Io {
            path: dir.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(io)?;
        let mut index = Index::default();
        for entry in fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|source| StoreError::Io {
                path: path.clone(),
                source,
            })?;
            let book: Book = serde_json::from_str(&text).map_err(|source| StoreError::Json {
                path: path.clone(),
                source,
            })?;
            index.order.push(IndexEntry {
                id: book.id.clone(),
                created_at: book.created_at,
            });
            index.books.insert(book.id.clone(), Arc::new(book));
        }
        index
            .order
            .sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        Ok(Self {
            dir: Some(dir.to_path_buf()),
            index: RwLock::new(index),
        })
    }

    /// Stores `book` and returns its id. A posted id is kept when it is
    /// well formed and unused; otherwise the next free counter is taken.
    pub fn insert(&self, mut book: Book) -> Result<String, StoreError> {
        book.validate()?;
        let mut index = self.index.write().expect("store lock");
        if !valid_id(&book.id) || index.books.contains_key(&book.id) {
            let mut n = index.books.len() + 1;
            while index.books.contains_key(&format!("{n:04}")) {
                n += 1;
            }
            book.id = format!("{n:04}");
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.json", book.id));
            let tmp = dir.join(format!(".{}.tmp", book.id));
            let text = serde_json::to_string(&book).map_err(|source| StoreError::Json {
                path: path.clone(),
                source,
            })?;
            fs::write(&tmp, text)
                .and_then(|()| fs::rename(&tmp, &path))
                .map_err(|source| StoreError::Io { path, source })?;
        }
        let id = book.id.clone();
        index.order.push(IndexEntry {
            id: id.clone(),
            created_at: book.created_at,
        });
        index.books.insert(id.clone(), Arc::new(book));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Book>> {
        self.index.read().expect("store lock").books.get(id).cloned()
    }

    pub fn latest(&self) -> Option<Arc<Book>> {
        let index = self.index.read().expect("store lock");
        index.order.last().and_then(|e| index.books.get(&e.id).cloned())
    }

    pub fn list(&self) -> Vec<IndexEntry> {
        self.index.read().expect("store lock").order.clone()
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("store lock").books.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-iteration values streamed while a run is in progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEvent {
    pub run: String,
    pub index: usize,
    pub segment: usize,
    pub energy: f64,
    pub marginals: Vec<f64>,
    pub state: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunState {
    Running,
    Finished,
    Aborted,
    Failed,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusEvent {
    pub run: String,
    pub state: RunState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeedEvent {
    Book { id: String },
    Record(RecordEvent),
    Status(StatusEvent),
}

impl FeedEvent {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Book { .. } => "book",
            Self::Record(_) => "record",
            Self::Status(_) => "status",
        }
    }

    pub fn data(&self) -> String {
        match self {
            Self::Book { id } => json!({ "id": id }).to_string(),
            Self::Record(r) => serde_json::to_string(r).expect("record serializes"),
            Self::Status(s) => serde_json::to_string(s).expect("status serializes"),
        }
    }
}

/// Fan-out of feed events to every `/events` subscriber.
#[derive(Clone)]
pub struct Feed(broadcast::Sender<FeedEvent>);

impl Default for Feed {
    fn default() -> Self {
        Self::new(4096)
    }
}

impl Feed {
    pub fn new(capacity: usize) -> Self {
        Self(broadcast::channel(capacity).0)
    }

    /// Delivers to current subscribers; without any it is a no-op.
    pub fn publish(&self, ev: FeedEvent) {
        let _ = self.0.send(ev);
    }

    pub fn subscribe(&self) -> broadcast::Receiver<FeedEvent> {
        self.0.subscribe()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("{0}")]
    Invalid(String),
    #[error("a run is already in progress")]
    Busy,
    #[error("{0}")]
    Failed(String),
}

/// What the session endpoints drive.
pub trait SessionControl: Send + Sync {
    /// Validates and stores a new `h_setup.csv`.
    fn upload_qubo(&self, csv: &str) -> Result<(), ControlError>;
    /// Starts a run in the background and returns its id.
    fn start_run(&self) -> Result<String, ControlError>;
    /// Stops sound emission; returns whether anything was playing.
    fn stop(&self) -> bool;
}

#[derive(Clone)]
pub struct ApiState {
    pub store: Arc<BookStore>,
    pub feed: Feed,
    pub session: Option<Arc<dyn SessionControl>>,
}

impl ApiState {
    pub fn new(store: Arc<BookStore>, feed: Feed) -> Self {
        Self {
            store,
            feed,
            session: None,
        }
    }

    /// Stores a book and announces it on the feed.
    pub fn add_book(&self, book: Book) -> Result<String, StoreError> {
        let id = self.store.insert(book)?;
        self.feed.publish(FeedEvent::Book { id: id.clone() });
        Ok(id)
    }
}

fn error(status: StatusCode, code: &str, detail: impl ToString) -> Response {
    (status, Json(json!({ "error": code, "detail": detail.to_string() }))).into_response()
}

async fn post_book(State(state): State<ApiState>, body: Bytes) -> Response {
    let book: Book = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, "malformed_json", e),
    };
    let state2 = state.clone();
    match tokio::task::spawn_blocking(move || state2.add_book(book)).await {
        Ok(Ok(id)) => (StatusCode::CREATED, Json(json!({ "id": id }))).into_response(),
        Ok(Err(StoreError::Invalid(e))) => error(StatusCode::BAD_REQUEST, "invalid_book", e),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, "storage", e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "storage", e),
    }
}

async fn get_book(State(state): State<ApiState>, UrlPath(id): UrlPath<String>) -> Response {
    match state.store.get(&id) {
        Some(book) => Json(book.as_ref().clone()).into_response(),
        None => error(StatusCode::NOT_FOUND, "unknown_id", id),
    }
}

async fn latest_book(State(state): State<ApiState>) -> Response {
    match state.store.latest() {
        Some(book) => Json(book.as_ref().clone()).into_response(),
        None => error(StatusCode::NOT_FOUND, "empty_store", "no books yet"),
    }
}

async fn list_books(State(state): State<ApiState>) -> Json<Vec<IndexEntry>> {
    Json(state.store.list())
}

async fn health(State(state): State<ApiState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "books": state.store.len() }))
}

async fn events(State(state): State<ApiState>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = state.feed.subscribe();
    let hello = futures::stream::once(async { Ok(Event::default().comment("connected")) });
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(ev) => {
                    let event = Event::default().event(ev.name()).data(ev.data());
                    return Some((Ok(event), rx));
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    log::warn!("event subscriber lagged, {n} events dropped");
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Sse::new(futures::StreamExt::chain(hello, stream)).keep_alive(KeepAlive::default())
}

fn session(state: &ApiState) -> Result<Arc<dyn SessionControl>, Response> {
    state
        .session
        .clone()
        .ok_or_else(|| error(StatusCode::SERVICE_UNAVAILABLE, "no_session", "no session attached"))
}

fn control_error(e: ControlError) -> Response {
    match e {
        ControlError::Invalid(d) => error(StatusCode::BAD_REQUEST, "invalid_qubo", d),
        ControlError::Busy => error(StatusCode::CONFLICT, "busy", ControlError::Busy),
        ControlError::Failed(d) => error(StatusCode::INTERNAL_SERVER_ERROR, "run_failed", d),
    }
}

async fn session_qubo(State(state): State<ApiState>, body: Bytes) -> Response {
    let s = match session(&state) {
        Ok(s) => s,
        Err(r) => return r,
    };
    let Ok(csv) = String::from_utf8(body.to_vec()) else {
        return error(StatusCode::BAD_REQUEST, "invalid_qubo", "body is not UTF-8");
    };
    match tokio::task::spawn_blocking(move || s.upload_qubo(&csv)).await {
        Ok(Ok(())) => Json(json!({ "status": "ok" })).into_response(),
        Ok(Err(e)) => control_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "run_failed", e),
    }
}

async fn session_run(State(state): State<ApiState>) -> Response {
    let s = match session(&state) {
        Ok(s) => s,
        Err(r) => return r,
    };
    match tokio::task::spawn_blocking(move || s.start_run()).await {
        Ok(Ok(id)) => (StatusCode::ACCEPTED, Json(json!({ "id": id }))).into_response(),
        Ok(Err(e)) => control_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "run_failed", e),
    }
}

async fn session_stop(State(state): State<ApiState>) -> Response {
    match session(&state) {
        Ok(s) => Json(json!({ "stopped": s.stop() })).into_response(),
        Err(r) => r,
    }
}

pub fn router(state: ApiState) -> Router {
    Router::new()
        .route("/books", post(post_book).get(list_books))
        .route("/books/latest", get(latest_book))
        .route("/books/{id}", get(get_book))
        .route("/events", get(events))
        .route("/health", get(health))
        .route("/session/qubo", post(session_qubo))
        .route("/session/run", post(session_run))
        .route("/session/stop", post(session_stop))
        .with_state(state)
}

/// The service running on its own thread and runtime. Dropping the handle
/// shuts it down, open event streams included.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the service ends, which without a shutdown is never.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `bind` (port 0 picks a free one) and serves in the background.
pub fn spawn_server(bind: &str, state: ApiState) -> std::io::Result<ServerHandle> {
    let listener = std::net::TcpListener::bind(bind)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let (tx, rx) = tokio::sync::oneshot::channel();
    let app = router(state);
    let thread = std::thread::Builder::new()
        .name("api-server".into())
        .spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        log::error!("API listener: {e}");
                        return;
                    }
                };
                tokio::select! {
                    r = axum::serve(listener, app) => {
                        if let Err(e) = r {
                            log::error!("API server: {e}");
                        }
                    }
                    _ = rx => {}
                }
            });
            runtime.shutdown_background();
        })?;
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::tests::small_experiment;

    fn book(id: &str) -> Book {
        let mut b = Book::from_experiment(&small_experiment(), "h0,...", Utc::now());
        b.id = id.into();
        b
    }

    #[test]
    fn ids_are_kept_or_generated() {
        let store = BookStore::in_memory();
        let b = book("mine");
        assert_eq!(store.insert(b.clone()).unwrap(), "mine");
        assert_eq!(store.insert(b.clone()).unwrap(), "0002");
        assert_eq!(store.insert(book("")).unwrap(), "0003");
        assert_eq!(store.insert(book("../x")).unwrap(), "0004");
        assert_eq!(store.insert(book("latest")).unwrap(), "0005");
        assert_eq!(store.latest().unwrap().id, "0005");
        let ids: Vec<String> = store.list().into_iter().map(|e| e.id).collect();
        assert_eq!(ids, ["mine", "0002", "0003", "0004", "0005"]);
        assert_eq!(*store.get("mine").unwrap(), b);
    }

    #[test]
    fn invalid_books_are_refused() {
        let store = BookStore::in_memory();
        let mut b = book("x");
        b.values.clear();
        assert!(matches!(store.insert(b), Err(StoreError::Invalid(_))));
        assert!(store.is_empty());
    }

    #[test]
    fn directory_store_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let store = BookStore::open(dir.path()).unwrap();
        let first = store.insert(book("a")).unwrap();
        let second = store.insert(book("")).unwrap();
        drop(store);
        let again = BookStore::open(dir.path()).unwrap();
        assert_eq!(again.len(), 2);
        assert_eq!(again.get(&first).unwrap().id, "a");
        assert_eq!(again.get(&second).unwrap().id, second);
        assert!(!dir.path().join(".a.tmp").exists());
    }

    #[test]
    fn feed_event_wire_names() {
        assert_eq!(FeedEvent::Book { id: "7".into() }.data(), r#"{"id":"7"}"#);
        let s = FeedEvent::Status(StatusEvent {
            run: "0001".into(),
            state: RunState::Aborted,
            detail: None,
        });
        assert_eq!(s.name(), "status");
        assert_eq!(s.data(), r#"{"run":"0001","state":"aborted"}"#);
    }
}
