//! Blocking client for the book API.

use std::io::{BufRead, BufReader};
use std::time::Duration;

use reqwest::blocking::{Client, Response};
use reqwest::StatusCode;
use serde::Deserialize;

use crate::book::Book;
use crate::server::IndexEntry;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("HTTP {status}: {body}")]
    Status { status: StatusCode, body: String },
    #[error(transparent)]
    Transport(#[from] reqwest::Error),
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    fn is_transient(&self) -> bool {
        match self {
            Self::Status { status, .. } => status.is_server_error(),
            Self::Transport(e) => e.is_connect() || e.is_timeout(),
            Self::Decode(_) => false,
        }
    }
}

/// Attempts after the first, and the delay before the first retry; each
/// further retry waits twice as long.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retries: 3,
            base_delay: Duration::from_millis(200),
        }
    }
}

fn base(url: &str) -> &str {
    url.trim_end_matches('/')
}

fn client(timeout: Option<Duration>) -> Result<Client, ClientError> {
    Ok(Client::builder().timeout(timeout).build()?)
}

fn check(resp: Response) -> Result<Response, ClientError> {
    let status = resp.status();
    if status.is_success() {
        Ok(resp)
    } else {
        let body = resp.text().unwrap_or_default();
        Err(ClientError::Status { status, body })
    }
}

#[derive(Deserialize)]
struct Created {
    id: String,
}

pub fn post_book(url: &str, book: &Book) -> Result<String, ClientError> {
    post_book_with(url, book, RetryPolicy::default())
}

/// Posts `book` and returns the id the server assigned. Connection
/// failures and 5xx answers are retried; 4xx answers are final.
pub fn post_book_with(url: &str, book: &Book, policy: RetryPolicy) -> Result<String, ClientError> {
    let http = client(Some(Duration::from_secs(30)))?;
    let body = serde_json::to_vec(book).map_err(|e| ClientError::Decode(e.to_string()))?;
    let endpoint = format!("{}/books", base(url));
    let mut delay = policy.base_delay;
    let mut attempt = 0;
    loop {
        let result = http
            .post(&endpoint)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.clone())
            .send()
            .map_err(ClientError::from)
            .and_then(check);
        match result {
            Ok(resp) => {
                let created: Created = resp.json().map_err(|e| ClientError::Decode(e.to_string()))?;
                return Ok(created.id);
            }
            Err(e) if e.is_transient() && attempt < policy.retries => {
                log::warn!("posting book failed ({e}), retrying in {delay:?}");
                std::thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn get_json<T: for<'de> Deserialize<'de>>(url: &str) -> Result<Option<T>, ClientError> {
    let resp = client(Some(Duration::from_secs(30)))?.get(url).send()?;
    if resp.status() == StatusCode::NOT_FOUND {
        return Ok(None);
    }
    let resp = check(resp)?;
    resp.json().map(Some).map_err(|e| ClientError::Decode(e.to_string()))
}

pub fn get_book(url: &str, id: &str) -> Result<Option<Book>, ClientError> {
    get_json(&format!("{}/books/{id}", base(url)))
}

pub fn latest_book(url: &str) -> Result<Option<Book>, ClientError> {
    get_json(&format!("{}/books/latest", base(url)))
}

pub fn list_books(url: &str) -> Result<Vec<IndexEntry>, ClientError> {
    Ok(get_json(&format!("{}/books", base(url)))?.unwrap_or_default())
}

/// One server-sent event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SseEvent {
    pub event: String,
    pub data: String,
}

/// Events from `GET /events`, read as they arrive. Once this returns,
/// the server has registered the subscription.
pub struct EventStream {
    reader: BufReader<Response>,
}

/// `timeout` bounds the whole connection, not each event.
pub fn subscribe(url: &str, timeout: Option<Duration>) -> Result<EventStream, ClientError> {
    let resp = client(timeout)?
        .get(format!("{}/events", base(url)))
        .header(reqwest::header::ACCEPT, "text/event-stream")
        .send()?;
    Ok(EventStream {
        reader: BufReader::new(check(resp)?),
    })
}

impl Iterator for EventStream {
    type Item = Result<SseEvent, ClientError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut event = String::new();
        let mut data: Vec<String> = Vec::new();
        let mut line = String::new();
        loop {
            line.clear();
            match self.reader.read_line(&mut line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(ClientError::Decode(e.to_string()))),
            }
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() {
                if data.is_empty() && event.is_empty() {
                    continue;
                }
                let event = if event.is_empty() { "message".to_string() } else { event };
                return Some(Ok(SseEvent {
                    event,
                    data: data.join("\n"),
                }));
            }
            if line.starts_with(':') {
                continue;
            }
            let (field, value) = line.split_once(':').unwrap_or((line, ""));
            let value = value.strip_prefix(' ').unwrap_or(value);
            match field {
                "event" => event = value.to_string(),
                "data" => data.push(value.to_string()),
                _ => {}
            }
        }
    }
}
