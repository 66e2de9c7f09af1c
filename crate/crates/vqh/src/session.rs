//! A session folder and the commands run against it.
//!
//! ```text
//! <workdir>/
//!   h_setup.csv           QUBO blocks, re-read by every run
//!   vqe_conf.json         VQE config, re-read by every run
//!   <SESSION>_Data/
//!     Data_0000/ ...      one dataset per experiment
//!     render_0000_additive.wav
//! ```
//!
//! Runs execute on a worker thread. Records leave the optimizer through a
//! bounded queue (full means dropped, never blocked) and fan out from there
//! to the event feed and the live OSC emitter.

use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use chrono::Utc;
use vqh_core::sonify::{basis_protocol, render, ControlStreams, Mapping, MappingConfig, SonifyError};
use vqh_core::{run_sequence, ExperimentResult, HamiltonianSequence, VqeConfig, VqeError};

use crate::book::Book;
use crate::files::{self, FileError};
use crate::hsetup::{parse_h_setup, HSetupError};
use crate::osc::{emit_streams, Emitter, Tick};
use crate::server::{
    ApiState, ControlError, Feed, FeedEvent, RecordEvent, RunState, SessionControl, StatusEvent,
};

pub const QUBO_FILE: &str = "h_setup.csv";
pub const CONFIG_FILE: &str = "vqe_conf.json";
const RECORD_QUEUE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Platform {
    Local,
}

impl Platform {
    pub fn from_name(s: &str) -> Option<Self> {
        (s == "local").then_some(Self::Local)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Basis,
}

impl Protocol {
    pub fn from_name(s: &str) -> Option<Self> {
        (s == "basis").then_some(Self::Basis)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("{0}")]
    Usage(String),
    #[error("{QUBO_FILE}: {0}")]
    Qubo(#[from] HSetupError),
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Vqe(#[from] VqeError),
    #[error(transparent)]
    Sonify(#[from] SonifyError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("a run is already in progress")]
    Busy,
    #[error("no experiment has been run in this session")]
    NoExperiment,
    #[error("unknown id {0}")]
    UnknownId(String),
    #[error("the run worker panicked")]
    Worker,
}

/// Where finished experiments are published as books.
#[derive(Clone, Default)]
pub enum BookSink {
    #[default]
    None,
    /// Posted to a remote API.
    Http(String),
    /// Added to a service running in this process.
    Local(ApiState),
}

#[derive(Clone, Default)]
pub struct SessionOptions {
    /// OSC target as `host:port`.
    pub osc_target: Option<String>,
    /// Receives run status and every streamed record.
    pub feed: Option<Feed>,
    pub books: BookSink,
    pub mapping: MappingConfig,
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub id: String,
    pub records: usize,
    pub aborted: bool,
    pub final_state: String,
    pub dataset: PathBuf,
    pub book_id: Option<String>,
}

struct ActiveRun {
    id: String,
    cancel: Arc<AtomicBool>,
    thread: JoinHandle<Result<RunSummary, SessionError>>,
}

struct Shared {
    workdir: PathBuf,
    data_dir: PathBuf,
    opts: SessionOptions,
    next_id: Mutex<u64>,
    run: Mutex<Option<ActiveRun>>,
    last: Mutex<Option<Arc<ExperimentResult>>>,
    emitter: Mutex<Option<Emitter>>,
    notices: Mutex<Vec<String>>,
}

/// Handle to an open session; clones share it.
#[derive(Clone)]
pub struct Session(Arc<Shared>);

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SessionError + '_ {
    move |source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Largest `n` among `Data_<n>` folders in `dir`.
fn highest_existing(dir: &Path) -> Option<u64> {
    fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str()?.strip_prefix("Data_")?.parse().ok())
        .max()
}

fn format_id(n: u64) -> String {
    format!("{n:04}")
}

impl Session {
    /// Opens (or creates) `<workdir>/<name>_Data/`.
    pub fn open(
        name: &str,
        platform: &str,
        protocol: &str,
        workdir: &Path,
        opts: SessionOptions,
    ) -> Result<Self, SessionError> {
        Platform::from_name(platform)
            .ok_or_else(|| SessionError::Usage(format!("unknown platform {platform:?}; available: local")))?;
        Protocol::from_name(protocol)
            .ok_or_else(|| SessionError::Usage(format!("unknown protocol {protocol:?}; available: basis")))?;
        if name.is_empty() {
            return Err(SessionError::Usage("empty session path".into()));
        }
        opts.mapping
            .validate()
            .map_err(SessionError::Sonify)?;
        let data_dir = workdir.join(format!("{name}_Data"));
        fs::create_dir_all(&data_dir).map_err(io_err(&data_dir))?;
        let shared = Shared {
            workdir: workdir.to_path_buf(),
            data_dir,
            opts,
            next_id: Mutex::new(0),
            run: Mutex::new(None),
            last: Mutex::new(None),
            emitter: Mutex::new(None),
            notices: Mutex::new(Vec::new()),
        };
        let session = Self(Arc::new(shared));
        *session.0.next_id.lock().expect("id lock") = session.seed_id(None);
        Ok(session)
    }

    pub fn data_dir(&self) -> &Path {
        &self.0.data_dir
    }

    pub fn workdir(&self) -> &Path {
        &self.0.workdir
    }

    pub fn qubo_path(&self) -> PathBuf {
        self.0.workdir.join(QUBO_FILE)
    }

    pub fn config_path(&self) -> PathBuf {
        self.0.workdir.join(CONFIG_FILE)
    }

    pub fn dataset_dir(&self, id: &str) -> PathBuf {
        self.0.data_dir.join(format!("Data_{id}"))
    }

    pub fn render_path(&self, id: &str, mapping: Mapping) -> PathBuf {
        self.0.data_dir.join(format!("render_{id}_{}.wav", mapping.name()))
    }

    /// Counter floor from the folders on disk and the config's `nextpathid`.
    fn seed_id(&self, cfg: Option<&VqeConfig>) -> u64 {
        let from_disk = highest_existing(&self.0.data_dir).map_or(0, |n| n + 1);
        let from_cfg = match cfg {
            Some(c) => c.nextpathid.trim().parse().ok(),
            None => files::read_config(&self.config_path())
                .ok()
                .and_then(|c| c.nextpathid.trim().parse().ok()),
        };
        from_disk.max(from_cfg.unwrap_or(0))
    }

    fn take_id(&self, cfg: &VqeConfig) -> String {
        let mut next = self.0.next_id.lock().expect("id lock");
        let n = (*next).max(self.seed_id(Some(cfg)));
        *next = n + 1;
        format_id(n)
    }

    /// Reads the current files and checks that they fit together.
    pub fn load_inputs(&self) -> Result<(String, HamiltonianSequence, VqeConfig), SessionError> {
        let path = self.qubo_path();
        let csv = fs::read_to_string(&path).map_err(io_err(&path))?;
        let seq = parse_h_setup(&csv)?;
        let cfg = files::read_config(&self.config_path())?;
        cfg.validate()?;
        if seq.len() != cfg.sequence_length {
            return Err(VqeError::SequenceLength {
                expected: cfg.sequence_length,
                got: seq.len(),
            }
            .into());
        }
        if seq.n() != cfg.size {
            return Err(VqeError::SizeMismatch {
                ansatz: cfg.size,
                observable: seq.n(),
            }
            .into());
        }
        Ok((csv, seq, cfg))
    }

    pub fn is_running(&self) -> bool {
        self.0
            .run
            .lock()
            .expect("run lock")
            .as_ref()
            .is_some_and(|r| !r.thread.is_finished())
    }

    /// Starts a run on the worker thread and returns its id.
    pub fn start_run(&self) -> Result<String, SessionError> {
        let mut slot = self.0.run.lock().expect("run lock");
        if slot.as_ref().is_some_and(|r| !r.thread.is_finished()) {
            return Err(SessionError::Busy);
        }
        if let Some(done) = slot.take() {
            // collect a finished run nobody waited for
            let _ = self.collect(done);
        }
        let (csv, seq, cfg) = self.load_inputs()?;
        let id = self.take_id(&cfg);
        let cancel = Arc::new(AtomicBool::new(false));
        let worker = {
            let session = self.clone();
            let id = id.clone();
            let cancel = cancel.clone();
            std::thread::Builder::new()
                .name(format!("run-{id}"))
                .spawn(move || session.execute(&id, &csv, &seq, &cfg, &cancel))
                .map_err(|e| SessionError::Io {
                    path: PathBuf::from("worker"),
                    source: e,
                })?
        };
        *slot = Some(ActiveRun {
            id: id.clone(),
            cancel,
            thread: worker,
        });
        Ok(id)
    }

    fn collect(&self, run: ActiveRun) -> Result<RunSummary, SessionError> {
        run.thread.join().map_err(|_| SessionError::Worker)?
    }

    /// Blocks until the current run ends. `Ok(None)` when none was active.
    pub fn wait(&self) -> Result<Option<RunSummary>, SessionError> {
        let run = self.0.run.lock().expect("run lock").take();
        run.map(|r| self.collect(r)).transpose()
    }

    /// Starts a run and waits for it.
    pub fn runvqe(&self) -> Result<RunSummary, SessionError> {
        self.start_run()?;
        Ok(self.wait()?.expect("run just started"))
    }

    fn publish(&self, ev: FeedEvent) {
        if let Some(feed) = &self.0.opts.feed {
            feed.publish(ev);
        }
    }

    fn status(&self, run: &str, state: RunState, detail: Option<String>) {
        self.publish(FeedEvent::Status(StatusEvent {
            run: run.to_string(),
            state,
            detail,
        }));
    }

    fn notice(&self, text: String) {
        self.0.notices.lock().expect("notice lock").push(text);
    }

    /// Messages from background runs since the last call.
    pub fn take_notices(&self) -> Vec<String> {
        std::mem::take(&mut *self.0.notices.lock().expect("notice lock"))
    }

    fn replace_emitter(&self, new: Option<Emitter>) {
        let old = std::mem::replace(&mut *self.0.emitter.lock().expect("emitter lock"), new);
        if let Some(old) = old {
            old.stop();
        }
    }

    fn execute(
        &self,
        id: &str,
        csv: &str,
        seq: &HamiltonianSequence,
        cfg: &VqeConfig,
        cancel: &AtomicBool,
    ) -> Result<RunSummary, SessionError> {
        self.status(id, RunState::Running, None);
        let result = self.execute_inner(id, csv, seq, cfg, cancel);
        match &result {
            Ok(s) => {
                let state = if s.aborted { RunState::Aborted } else { RunState::Finished };
                self.status(id, state, None);
                self.notice(format!(
                    "experiment {id} {}: {} records, final state {}",
                    if s.aborted { "aborted" } else { "finished" },
                    s.records,
                    s.final_state
                ));
            }
            Err(e) => {
                self.status(id, RunState::Failed, Some(e.to_string()));
                self.notice(format!("experiment {id} failed: {e}"));
            }
        }
        result
    }

    fn execute_inner(
        &self,
        id: &str,
        csv: &str,
        seq: &HamiltonianSequence,
        cfg: &VqeConfig,
        cancel: &AtomicBool,
    ) -> Result<RunSummary, SessionError> {
        let created_at = Utc::now();
        let ticks = self.0.opts.osc_target.as_deref().and_then(|t| {
            // the emitter lives in the session slot so `stop` can reach it
            let mut emitter = Emitter::start(t, self.0.opts.mapping.iteration_rate);
            let tx = emitter.sender();
            emitter.close();
            self.replace_emitter(Some(emitter));
            tx
        });
        let (tx, rx) = mpsc::sync_channel::<RecordEvent>(RECORD_QUEUE);
        let fan_out = {
            let session = self.clone();
            std::thread::spawn(move || {
                for r in rx {
                    if let Some(ticks) = &ticks {
                        let _ = ticks.send(Tick {
                            clock: r.index as i32,
                            marginals: r.marginals.clone(),
                            energy: r.energy,
                            state: r.state.clone(),
                        });
                    }
                    session.publish(FeedEvent::Record(r));
                }
            })
        };
        let mut dropped = 0usize;
        let run = run_sequence(seq, cfg, |r| {
            let ev = RecordEvent {
                run: id.to_string(),
                index: r.index,
                segment: r.segment,
                energy: r.energy,
                marginals: r.marginals.clone(),
                state: r.argmax.clone(),
            };
            if let Err(TrySendError::Full(_)) = tx.try_send(ev) {
                dropped += 1;
            }
            if cancel.load(Ordering::SeqCst) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        drop(tx);
        let _ = fan_out.join();
        if dropped > 0 {
            log::warn!("experiment {id}: {dropped} records not streamed (queue full)");
        }
        let mut res = run?;
        res.id = id.to_string();
        let dataset = self.dataset_dir(id);
        files::write_dataset(&dataset, &res, csv, created_at)?;
        let book_id = self.publish_book(&res, csv, created_at);
        let summary = RunSummary {
            id: id.to_string(),
            records: res.records.len(),
            aborted: res.aborted,
            final_state: res.records.last().map(|r| r.argmax.clone()).unwrap_or_default(),
            dataset,
            book_id,
        };
        *self.0.last.lock().expect("last lock") = Some(Arc::new(res));
        Ok(summary)
    }

    fn publish_book(&self, res: &ExperimentResult, csv: &str, created_at: chrono::DateTime<Utc>) -> Option<String> {
        let book = Book::from_experiment(res, csv, created_at);
        let outcome = match &self.0.opts.books {
            BookSink::None => return None,
            BookSink::Http(url) => crate::client::post_book(url, &book).map_err(|e| e.to_string()),
            BookSink::Local(api) => api.add_book(book).map_err(|e| e.to_string()),
        };
        outcome
            .map_err(|e| {
                log::warn!("book for experiment {} not published: {e}", res.id);
                self.notice(format!("book for experiment {} not published: {e}", res.id));
            })
            .ok()
    }

    /// The most recent finished experiment, waiting for one in flight.
    pub fn last_experiment(&self) -> Result<Arc<ExperimentResult>, SessionError> {
        if self.0.run.lock().expect("run lock").is_some() {
            let _ = self.wait();
        }
        self.0
            .last
            .lock()
            .expect("last lock")
            .clone()
            .ok_or(SessionError::NoExperiment)
    }

    fn deliver(&self, id: &str, s: &ControlStreams, mapping: Mapping) -> Result<PathBuf, SessionError> {
        let cfg = MappingConfig {
            mapping,
            ..self.0.opts.mapping.clone()
        };
        let buf = render(s, &cfg)?;
        let path = self.render_path(id, mapping);
        files::write_wav(&buf, &path)?;
        let emitter = self
            .0
            .opts
            .osc_target
            .as_deref()
            .map(|t| emit_streams(s, cfg.iteration_rate, t));
        self.replace_emitter(emitter);
        Ok(path)
    }

    /// Sonifies the last experiment.
    pub fn map(&self, mapping: Mapping) -> Result<PathBuf, SessionError> {
        let res = self.last_experiment()?;
        let s = basis_protocol(&res)?;
        self.deliver(&res.id, &s, mapping)
    }

    /// Normalizes `3` and `0003` to the folder id.
    pub fn resolve_id(&self, id: &str) -> Result<String, SessionError> {
        let id = id.trim();
        let candidates = [id.parse::<u64>().ok().map(format_id), Some(id.to_string())];
        candidates
            .into_iter()
            .flatten()
            .find(|c| !c.is_empty() && !c.contains(['/', '\\']) && c != ".." && self.dataset_dir(c).is_dir())
            .ok_or_else(|| SessionError::UnknownId(id.to_string()))
    }

    /// Sonifies a stored experiment from its post-processed files.
    pub fn mapfile(&self, id: &str, mapping: Mapping) -> Result<PathBuf, SessionError> {
        let id = self.resolve_id(id)?;
        let s = files::read_streams(&self.dataset_dir(&id))?;
        self.deliver(&id, &s, mapping)
    }

    /// Halts sound emission; the run itself continues.
    pub fn stop(&self) -> bool {
        let emitter = self.0.emitter.lock().expect("emitter lock").take();
        emitter.is_some_and(|e| {
            let playing = !e.is_finished();
            e.stop();
            playing
        })
    }

    /// Cancels a run in progress, flushes its dataset and silences output.
    pub fn quit(&self) -> Result<Option<RunSummary>, SessionError> {
        if let Some(run) = self.0.run.lock().expect("run lock").as_ref() {
            log::info!("cancelling experiment {}", run.id);
            run.cancel.store(true, Ordering::SeqCst);
        }
        let summary = self.wait();
        self.stop();
        summary
    }
}

impl SessionControl for Session {
    fn upload_qubo(&self, csv: &str) -> Result<(), ControlError> {
        parse_h_setup(csv).map_err(|e| ControlError::Invalid(e.to_string()))?;
        let path = self.qubo_path();
        fs::write(&path, csv).map_err(|e| ControlError::Failed(format!("{}: {e}", path.display())))
    }

    fn start_run(&self) -> Result<String, ControlError> {
        Session::start_run(self).map_err(|e| match e {
            SessionError::Busy => ControlError::Busy,
            SessionError::Qubo(_) | SessionError::File(_) | SessionError::Vqe(_) | SessionError::Io { .. } => {
                ControlError::Invalid(e.to_string())
            }
            other => ControlError::Failed(other.to_string()),
        })
    }

    fn stop(&self) -> bool {
        Session::stop(self)
    }
}
