//! OSC 1.0 messages and the UDP emitter for control streams.
//!
//! Per iteration tick the emitter sends four messages:
//!
//! | address          | arguments                    |
//! |------------------|------------------------------|
//! | `/vqh/marginals` | one float per qubit          |
//! | `/vqh/energy`    | one float                    |
//! | `/vqh/state`     | the most likely basis state  |
//! | `/vqh/clock`     | iteration index as int32     |
//!
//! Datagrams are best effort. A socket failure is logged once and emission
//! carries on silently, so a dead synth never stalls a performance.

use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rosc::{OscPacket, OscType};
use vqh_core::sonify::ControlStreams;
use vqh_core::IterationRecord;

pub const ADDR_MARGINALS: &str = "/vqh/marginals";
pub const ADDR_ENERGY: &str = "/vqh/energy";
pub const ADDR_STATE: &str = "/vqh/state";
pub const ADDR_CLOCK: &str = "/vqh/clock";

#[derive(Debug, Clone, PartialEq)]
pub enum OscArg {
    Int(i32),
    Float(f32),
    Str(String),
    Blob(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscArg>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OscError {
    #[error("address {0:?} must start with '/'")]
    Address(String),
    #[error("string argument contains NUL")]
    Nul,
    #[error("unsupported argument type {0}")]
    Unsupported(&'static str),
    #[error("bundles are not supported")]
    Bundle,
    #[error("malformed packet: {0}")]
    Malformed(String),
}

impl OscMessage {
    pub fn new(address: impl Into<String>, args: Vec<OscArg>) -> Self {
        Self {
            address: address.into(),
            args,
        }
    }
}

pub fn encode(msg: &OscMessage) -> Result<Vec<u8>, OscError> {
    if !msg.address.starts_with('/') || msg.address.contains('\0') {
        return Err(OscError::Address(msg.address.clone()));
    }
    let args = msg
        .args
        .iter()
        .map(|a| match a {
            OscArg::Int(v) => Ok(OscType::Int(*v)),
            OscArg::Float(v) => Ok(OscType::Float(*v)),
            OscArg::Str(s) if s.contains('\0') => Err(OscError::Nul),
            OscArg::Str(s) => Ok(OscType::String(s.clone())),
            OscArg::Blob(b) => Ok(OscType::Blob(b.clone())),
        })
        .collect::<Result<_, _>>()?;
    let packet = OscPacket::Message(rosc::OscMessage {
        addr: msg.address.clone(),
        args,
    });
    rosc::encoder::encode(&packet).map_err(|e| OscError::Malformed(e.to_string()))
}

pub fn decode(bytes: &[u8]) -> Result<OscMessage, OscError> {
    let (rest, packet) =
        rosc::decoder::decode_udp(bytes).map_err(|e| OscError::Malformed(e.to_string()))?;
    if !rest.is_empty() {
        return Err(OscError::Malformed(format!("{} trailing bytes", rest.len())));
    }
    let msg = match packet {
        OscPacket::Message(m) => m,
        OscPacket::Bundle(_) => return Err(OscError::Bundle),
    };
    let args = msg
        .args
        .into_iter()
        .map(|a| match a {
            OscType::Int(v) => Ok(OscArg::Int(v)),
            OscType::Float(v) => Ok(OscArg::Float(v)),
            OscType::String(s) => Ok(OscArg::Str(s)),
            OscType::Blob(b) => Ok(OscArg::Blob(b)),
            other => Err(OscError::Unsupported(type_name(&other))),
        })
        .collect::<Result<_, _>>()?;
    Ok(OscMessage {
        address: msg.addr,
        args,
    })
}

fn type_name(t: &OscType) -> &'static str {
    match t {
        OscType::Time(_) => "timetag",
        OscType::Long(_) => "int64",
        OscType::Double(_) => "float64",
        OscType::Char(_) => "char",
        OscType::Color(_) => "color",
        OscType::Midi(_) => "midi",
        OscType::Bool(_) => "bool",
        OscType::Array(_) => "array",
        OscType::Nil => "nil",
        OscType::Inf => "inf",
        _ => "core",
    }
}

/// One iteration's worth of control values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub clock: i32,
    pub marginals: Vec<f64>,
    pub energy: f64,
    pub state: String,
}

impl Tick {
    pub fn from_record(r: &IterationRecord) -> Self {
        Self {
            clock: r.index as i32,
            marginals: r.marginals.clone(),
            energy: r.energy,
            state: r.argmax.clone(),
        }
    }

    /// Ticks of a whole stream set, clocked from zero.
    pub fn from_streams(s: &ControlStreams) -> Vec<Self> {
        (0..s.len())
            .map(|i| Self {
                clock: i as i32,
                marginals: s.coefficients()[i].clone(),
                energy: s.energies()[i],
                state: s.states()[i].clone(),
            })
            .collect()
    }

    pub fn messages(&self) -> [OscMessage; 4] {
        [
            OscMessage::new(
                ADDR_MARGINALS,
                self.marginals.iter().map(|&c| OscArg::Float(c as f32)).collect(),
            ),
            OscMessage::new(ADDR_ENERGY, vec![OscArg::Float(self.energy as f32)]),
            OscMessage::new(ADDR_STATE, vec![OscArg::Str(self.state.clone())]),
            OscMessage::new(ADDR_CLOCK, vec![OscArg::Int(self.clock)]),
        ]
    }
}

/// What an emitter did before it finished.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmitReport {
    pub sent: usize,
    pub failed: usize,
}

/// A running emitter thread. Ticks pushed with [`Emitter::push`] go out
/// no faster than `rate` per second; dropping the handle stops it.
pub struct Emitter {
    tx: Option<Sender<Tick>>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<EmitReport>>,
}

const POLL: Duration = Duration::from_millis(5);

impl Emitter {
    pub fn start(target: &str, rate: f64) -> Self {
        let (tx, rx) = mpsc::channel();
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let target = target.to_string();
        let period = Duration::from_secs_f64(1.0 / rate.max(1e-3));
        let thread = std::thread::Builder::new()
            .name("osc-emitter".into())
            .spawn(move || emit_loop(&target, period, rx, &flag))
            .expect("spawn emitter thread");
        Self {
            tx: Some(tx),
            stop,
            thread: Some(thread),
        }
    }

    /// Queues a tick; never blocks.
    pub fn push(&self, tick: Tick) {
        if let Some(tx) = &self.tx {
            let _ = tx.send(tick);
        }
    }

    /// A sender for another thread. Once the emitter is closed and every
    /// sender is gone, it finishes after the queued ticks.
    pub fn sender(&self) -> Option<Sender<Tick>> {
        self.tx.clone()
    }

    /// Accepts no further ticks from this handle.
    pub fn close(&mut self) {
        self.tx = None;
    }

    /// Sends every queued tick, then finishes.
    pub fn finish(mut self) -> EmitReport {
        self.tx = None;
        self.thread.take().map_or_else(EmitReport::default, |t| t.join().unwrap_or_default())
    }

    /// Halts emission at once, dropping anything still queued.
    pub fn stop(mut self) -> EmitReport {
        self.stop.store(true, Ordering::SeqCst);
        self.tx = None;
        self.thread.take().map_or_else(EmitReport::default, |t| t.join().unwrap_or_default())
    }

    pub fn is_finished(&self) -> bool {
        self.thread.as_ref().is_none_or(JoinHandle::is_finished)
    }
}

impl Drop for Emitter {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
    }
}

struct Link {
    socket: Option<(UdpSocket, SocketAddr)>,
    warned: bool,
    report: EmitReport,
}

impl Link {
    fn open(target: &str) -> Result<(UdpSocket, SocketAddr), String> {
        let addr = target
            .to_socket_addrs()
            .map_err(|e| e.to_string())?
            .next()
            .ok_or_else(|| "no address".to_string())?;
        let local = if addr.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" };
        let socket = UdpSocket::bind(local).map_err(|e| e.to_string())?;
        Ok((socket, addr))
    }

    fn warn(&mut self, target: &str, why: &str) {
        if !self.warned {
            log::warn!("OSC target {target}: {why}; further errors are silent");
            self.warned = true;
        }
    }

    fn fail(&mut self, target: &str, why: &str) {
        self.warn(target, why);
        self.report.failed += 1;
    }

    fn send(&mut self, target: &str, tick: &Tick) {
        for msg in tick.messages() {
            let Ok(bytes) = encode(&msg) else {
                self.fail(target, "unencodable message");
                continue;
            };
            let result = match &self.socket {
                Some((socket, addr)) => socket.send_to(&bytes, addr).map_err(|e| e.to_string()),
                None => Err("socket unavailable".to_string()),
            };
            match result {
                Ok(_) => self.report.sent += 1,
                Err(e) => self.fail(target, &e),
            }
        }
    }
}

fn emit_loop(target: &str, period: Duration, rx: Receiver<Tick>, stop: &AtomicBool) -> EmitReport {
    let mut link = Link {
        socket: None,
        warned: false,
        report: EmitReport::default(),
    };
    match Link::open(target) {
        Ok(s) => link.socket = Some(s),
        Err(e) => link.warn(target, &e),
    }
    let mut due = Instant::now();
    loop {
        let tick = loop {
            if stop.load(Ordering::SeqCst) {
                return link.report;
            }
            match rx.recv_timeout(POLL) {
                Ok(t) => break t,
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => return link.report,
            }
        };
        // a late tick goes out at once and restarts the grid
        let now = Instant::now();
        if due < now {
            due = now;
        }
        while Instant::now() < due {
            if stop.load(Ordering::SeqCst) {
                return link.report;
            }
            std::thread::sleep(POLL.min(due.saturating_duration_since(Instant::now())));
        }
        if stop.load(Ordering::SeqCst) {
            return link.report;
        }
        link.send(target, &tick);
        due += period;
    }
}

/// Replays `s` to `target` at `rate` ticks per second on a new emitter.
pub fn emit_streams(s: &ControlStreams, rate: f64, target: &str) -> Emitter {
    let mut emitter = Emitter::start(target, rate);
    for tick in Tick::from_streams(s) {
        emitter.push(tick);
    }
    emitter.close();
    emitter
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn energy_golden_bytes() {
        let bytes = encode(&OscMessage::new(ADDR_ENERGY, vec![OscArg::Float(1.5)])).unwrap();
        assert_eq!(
            bytes,
            [
                0x2F, 0x76, 0x71, 0x68, 0x2F, 0x65, 0x6E, 0x65, 0x72, 0x67, 0x79, 0x00, 0x2C,
                0x66, 0x00, 0x00, 0x3F, 0xC0, 0x00, 0x00
            ]
        );
    }

    #[test]
    fn empty_message_layout() {
        let bytes = encode(&OscMessage::new("/a", vec![])).unwrap();
        assert_eq!(bytes, b"/a\0\0,\0\0\0");
    }

    #[test]
    fn twelve_floats_layout() {
        let args = (0..12).map(|i| OscArg::Float(i as f32)).collect();
        let bytes = encode(&OscMessage::new(ADDR_MARGINALS, args)).unwrap();
        // "/vqh/marginals" is 14 bytes, padded to 16
        let tags = &bytes[16..32];
        assert_eq!(&tags[..13], b",ffffffffffff");
        assert!(tags[13..].iter().all(|&b| b == 0));
        assert_eq!(bytes.len(), 16 + 16 + 48);
    }

    #[test]
    fn invalid_messages() {
        assert!(matches!(encode(&OscMessage::new("vqh", vec![])), Err(OscError::Address(_))));
        assert_eq!(
            encode(&OscMessage::new("/x", vec![OscArg::Str("a\0b".into())])),
            Err(OscError::Nul)
        );
        assert!(decode(&[1, 2, 3]).is_err());
        let double = rosc::encoder::encode(&OscPacket::Message(rosc::OscMessage {
            addr: "/d".into(),
            args: vec![OscType::Double(1.0)],
        }))
        .unwrap();
        assert_eq!(decode(&double), Err(OscError::Unsupported("float64")));
    }

    fn args() -> impl Strategy<Value = OscArg> {
        prop_oneof![
            any::<i32>().prop_map(OscArg::Int),
            (-1e6f32..1e6).prop_map(OscArg::Float),
            "[a-zA-Z0-9 ]{0,11}".prop_map(OscArg::Str),
            proptest::collection::vec(any::<u8>(), 0..9).prop_map(OscArg::Blob),
        ]
    }

    proptest! {
        #[test]
        fn aligned_and_reversible(addr in "/[a-z/]{0,12}", args in proptest::collection::vec(args(), 0..8)) {
            let msg = OscMessage::new(addr, args);
            let bytes = encode(&msg).unwrap();
            prop_assert_eq!(bytes.len() % 4, 0);
            prop_assert_eq!(decode(&bytes).unwrap(), msg);
        }
    }

    fn listener() -> (UdpSocket, String) {
        let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
        socket.set_read_timeout(Some(Duration::from_millis(300))).unwrap();
        let addr = socket.local_addr().unwrap().to_string();
        (socket, addr)
    }

    fn capture(socket: &UdpSocket) -> Vec<(Instant, OscMessage)> {
        let mut out = Vec::new();
        let mut buf = [0u8; 1500];
        while let Ok(n) = socket.recv(&mut buf) {
            out.push((Instant::now(), decode(&buf[..n]).unwrap()));
        }
        out
    }

    fn streams() -> ControlStreams {
        ControlStreams::new(
            vec![vec![0.1, 0.9], vec![0.25, 0.75], vec![1.0 / 3.0, 0.5]],
            vec![-1.25, -0.5, 0.125],
            vec!["01".into(), "01".into(), "11".into()],
        )
        .unwrap()
    }

    #[test]
    fn loopback_capture_matches_the_streams() {
        let (socket, addr) = listener();
        let s = streams();
        let start = Instant::now();
        let report = emit_streams(&s, 10.0, &addr).finish();
        assert_eq!(report, EmitReport { sent: 12, failed: 0 });
        let got = capture(&socket);
        assert_eq!(got.len(), 12);
        let span = got.last().unwrap().0 - start;
        assert!(span >= Duration::from_millis(190), "{span:?}");
        for (i, chunk) in got.chunks(4).enumerate() {
            let msgs: Vec<&OscMessage> = chunk.iter().map(|(_, m)| m).collect();
            let expected: Vec<OscArg> =
                s.coefficients()[i].iter().map(|&c| OscArg::Float(c as f32)).collect();
            assert_eq!(msgs[0], &OscMessage::new(ADDR_MARGINALS, expected));
            assert_eq!(msgs[1].args, vec![OscArg::Float(s.energies()[i] as f32)]);
            assert_eq!(msgs[2].args, vec![OscArg::Str(s.states()[i].clone())]);
            assert_eq!(msgs[3].args, vec![OscArg::Int(i as i32)]);
        }
    }

    #[test]
    fn stop_silences_within_100ms() {
        let (socket, addr) = listener();
        let recorder = std::thread::spawn(move || capture(&socket));
        let long = ControlStreams::new(vec![vec![0.5]; 200], vec![0.0; 200], vec!["0".into(); 200]).unwrap();
        let emitter = emit_streams(&long, 50.0, &addr);
        std::thread::sleep(Duration::from_millis(150));
        let stopped = Instant::now();
        let report = emitter.stop();
        let got = recorder.join().unwrap();
        assert!(report.sent > 0 && report.sent < 800);
        assert_eq!(got.len(), report.sent);
        let late = got.iter().filter(|(t, _)| *t > stopped + Duration::from_millis(100)).count();
        assert_eq!(late, 0);
    }

    #[test]
    fn unreachable_target_does_not_stop_the_run() {
        let report = emit_streams(&streams(), 1000.0, "no-such-host.invalid:9").finish();
        assert_eq!(report.sent, 0);
        assert_eq!(report.failed, 12);
    }
}
