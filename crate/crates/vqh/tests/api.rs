//! The book API over real HTTP.

use std::ops::ControlFlow;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::Utc;
use vqh::book::Book;
use vqh::client::{get_book, latest_book, list_books, post_book, subscribe, SseEvent};
use vqh::server::{spawn_server, ApiState, BookStore, ControlError, Feed, ServerHandle, SessionControl};
use vqh_core::qubo::{chord_indices, chromatic_labels};
use vqh_core::{chord_qubo, run_sequence, ChordMode, HamiltonianSequence, OptimizerKind, VqeConfig};

fn book() -> Book {
    let labels = chromatic_labels()[..3].to_vec();
    let chord = chord_indices(&labels, &["C"]).unwrap();
    let q = chord_qubo(labels, &chord, ChordMode::Linear).unwrap();
    let cfg = VqeConfig {
        optimizer_name: OptimizerKind::Spsa,
        size: 3,
        iterations: vec![6],
        shots: 64,
        ..VqeConfig::default()
    };
    let seq = HamiltonianSequence::new(vec![q]).unwrap();
    let res = run_sequence(&seq, &cfg, |_| ControlFlow::Continue(())).unwrap();
    Book::from_experiment(&res, "h0,C,C#,D\n", Utc::now())
}

fn serve(session: Option<Arc<dyn SessionControl>>) -> ServerHandle {
    let mut state = ApiState::new(Arc::new(BookStore::in_memory()), Feed::default());
    state.session = session;
    spawn_server("127.0.0.1:0", state).unwrap()
}

fn http() -> reqwest::blocking::Client {
    reqwest::blocking::Client::new()
}

#[test]
fn post_then_get_round_trips() {
    let server = serve(None);
    let url = server.url();
    let b = book();
    let id = post_book(&url, &b).unwrap();
    let mut expected = b.clone();
    expected.id = id.clone();
    assert_eq!(get_book(&url, &id).unwrap().unwrap(), expected);
    assert_eq!(latest_book(&url).unwrap().unwrap(), expected);
    let json_in = serde_json::to_value(&expected).unwrap();
    let json_out: serde_json::Value = http()
        .get(format!("{url}/books/{id}"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(json_in, json_out);
    let index = list_books(&url).unwrap();
    assert_eq!(index.len(), 1);
    assert_eq!(index[0].id, id);
    assert_eq!(index[0].created_at, b.created_at);
}

#[test]
fn error_answers() {
    let server = serve(None);
    let url = server.url();
    assert_eq!(get_book(&url, "nope").unwrap(), None);
    assert_eq!(latest_book(&url).unwrap(), None);

    let resp = http().post(format!("{url}/books")).body("{not json").send().unwrap();
    assert_eq!(resp.status(), 400);
    let body: serde_json::Value = resp.json().unwrap();
    assert_eq!(body["error"], "malformed_json");

    let mut bad = book();
    bad.states.push("000".into());
    let resp = http().post(format!("{url}/books")).json(&bad).send().unwrap();
    assert_eq!(resp.status(), 400);
    let body: serde_json::Value = resp.json().unwrap();
    assert_eq!(body["error"], "invalid_book");

    let resp = http().post(format!("{url}/session/run")).send().unwrap();
    assert_eq!(resp.status(), 503);

    let health: serde_json::Value = http().get(format!("{url}/health")).send().unwrap().json().unwrap();
    assert_eq!(health["status"], "ok");
    assert_eq!(health["books"], 0);
}

#[test]
fn every_subscriber_sees_each_post_once() {
    let server = serve(None);
    let url = server.url();
    let subscribers: Vec<_> = (0..2)
        .map(|_| subscribe(&url, Some(Duration::from_secs(20))).unwrap())
        .collect();
    let readers: Vec<_> = subscribers
        .into_iter()
        .map(|s| std::thread::spawn(move || s.take(3).map(Result::unwrap).collect::<Vec<SseEvent>>()))
        .collect();
    let mut ids = Vec::new();
    for _ in 0..3 {
        ids.push(post_book(&url, &book()).unwrap());
    }
    for r in readers {
        let events = r.join().unwrap();
        let got: Vec<String> = events
            .iter()
            .map(|e| {
                assert_eq!(e.event, "book");
                serde_json::from_str::<serde_json::Value>(&e.data).unwrap()["id"]
                    .as_str()
                    .unwrap()
                    .to_string()
            })
            .collect();
        assert_eq!(got, ids);
    }
}

#[derive(Default)]
struct Mock {
    qubo: Mutex<Option<String>>,
    runs: Mutex<usize>,
}

impl SessionControl for Mock {
    fn upload_qubo(&self, csv: &str) -> Result<(), ControlError> {
        vqh::hsetup::parse_h_setup(csv).map_err(|e| ControlError::Invalid(e.to_string()))?;
        *self.qubo.lock().unwrap() = Some(csv.to_string());
        Ok(())
    }

    fn start_run(&self) -> Result<String, ControlError> {
        let mut runs = self.runs.lock().unwrap();
        if *runs > 0 {
            return Err(ControlError::Busy);
        }
        *runs += 1;
        Ok("0001".into())
    }

    fn stop(&self) -> bool {
        false
    }
}

#[test]
fn session_endpoints_drive_the_control() {
    let mock = Arc::new(Mock::default());
    let server = serve(Some(mock.clone()));
    let url = server.url();
    let csv = "h0,A,B\nA,-1,0\nB,0,1\n";
    let resp = http().post(format!("{url}/session/qubo")).body(csv).send().unwrap();
    assert_eq!(resp.status(), 200);
    assert_eq!(mock.qubo.lock().unwrap().as_deref(), Some(csv));

    let resp = http().post(format!("{url}/session/qubo")).body("h0,A\nA,x\n").send().unwrap();
    assert_eq!(resp.status(), 400);
    let body: serde_json::Value = resp.json().unwrap();
    assert_eq!(body["error"], "invalid_qubo");

    let resp = http().post(format!("{url}/session/run")).send().unwrap();
    assert_eq!(resp.status(), 202);
    let body: serde_json::Value = resp.json().unwrap();
    assert_eq!(body["id"], "0001");
    let resp = http().post(format!("{url}/session/run")).send().unwrap();
    assert_eq!(resp.status(), 409);

    let body: serde_json::Value = http()
        .post(format!("{url}/session/stop"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(body["stopped"], false);
}
