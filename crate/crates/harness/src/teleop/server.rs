//! Fixed-rate TCP sessions.
//!
//! Each connection gets its own episode and three threads: a reader that
//! decodes client frames, a writer that drains outgoing frames, and the
//! tick loop that owns the episode. The two queues between them are
//! bounded; when one is full the newest message is dropped and counted,
//! so a slow client can never stall the simulation.

use std::io::{self, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TryRecvError, TrySendError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use irt_core::Point64;
use irt_sim::{EpisodeTrace, FusionParams, ScenarioSpec, SimParams};

use super::protocol::{encode, read_frame, ClientMessage, EndFrame, FrameError, ServerMessage, Transcript};
use super::session::{end_frame, TeleopSession};
use crate::config::TeleopConfig;

const WRITE_TIMEOUT: Duration = Duration::from_secs(5);

/// What every session of one server shares.
#[derive(Clone, Debug)]
pub struct ServerSettings {
    pub spec: ScenarioSpec,
    pub fusion: FusionParams,
    pub params: SimParams,
    pub teleop: TeleopConfig,
    pub tolerance: f64,
    /// Where finished sessions are written, if anywhere.
    pub record_dir: Option<PathBuf>,
}

/// How one session ended.
#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub id: u64,
    pub trace: EpisodeTrace,
    pub transcript: Transcript,
    /// `None` when the client left early or scoring failed.
    pub end: Option<EndFrame>,
    pub dropped_inputs: usize,
    pub dropped_frames: usize,
}

pub struct TeleopServer {
    listener: TcpListener,
    settings: Arc<ServerSettings>,
    next_id: AtomicU64,
}

impl TeleopServer {
    pub fn bind(addr: impl ToSocketAddrs, settings: ServerSettings) -> io::Result<Self> {
        Ok(Self { listener: TcpListener::bind(addr)?, settings: Arc::new(settings), next_id: AtomicU64::new(1) })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves connections until the listener fails, one thread per session.
    pub fn serve(&self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let id = self.next_id.fetch_add(1, Ordering::Relaxed);
            let settings = Arc::clone(&self.settings);
            thread::spawn(move || {
                if let Err(e) = run_session(stream, id, &settings) {
                    log::error!("session {id}: {e}");
                }
            });
        }
        Ok(())
    }

    /// Accepts one connection and runs its session on the calling thread.
    pub fn serve_one(&self) -> io::Result<SessionOutcome> {
        let (stream, _) = self.listener.accept()?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        run_session(stream, id, &self.settings)
    }
}

enum Inbound {
    Message(ClientMessage, Instant),
    Malformed(String),
}

struct Outbox {
    tx: SyncSender<Vec<u8>>,
    dropped: usize,
}

impl Outbox {
    fn push(&mut self, msg: &ServerMessage) {
        match self.tx.try_send(encode(msg)) {
            Ok(()) => {}
            Err(TrySendError::Full(_)) => self.dropped += 1,
            Err(TrySendError::Disconnected(_)) => {}
        }
    }
}

/// Runs one session to termination or disconnect.
pub fn run_session(stream: TcpStream, id: u64, settings: &ServerSettings) -> io::Result<SessionOutcome> {
    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_else(|_| "?".into());
    log::info!("session {id}: connected from {peer}");
    stream.set_nodelay(true)?;
    stream.set_write_timeout(Some(WRITE_TIMEOUT))?;
    let cap = settings.teleop.queue_capacity;
    let closed = Arc::new(AtomicBool::new(false));
    let dropped_inputs = Arc::new(AtomicUsize::new(0));

    let (in_tx, in_rx) = sync_channel::<Inbound>(cap);
    let reader = {
        let stream = stream.try_clone()?;
        let (closed, dropped) = (Arc::clone(&closed), Arc::clone(&dropped_inputs));
        thread::spawn(move || read_loop(stream, id, in_tx, &closed, &dropped))
    };
    let (out_tx, out_rx) = sync_channel::<Vec<u8>>(cap);
    let writer = {
        let stream = stream.try_clone()?;
        let closed = Arc::clone(&closed);
        thread::spawn(move || write_loop(stream, out_rx, &closed))
    };
    let mut out = Outbox { tx: out_tx, dropped: 0 };

    let t = &settings.teleop;
    let session = TeleopSession::new(id, &settings.spec, t.architecture, &settings.fusion, &settings.params);
    let result = match session {
        Ok(mut session) => {
            out.push(&ServerMessage::State(session.state_frame()));
            tick_loop(&mut session, &in_rx, &mut out, &closed, t);
            let aborted = !session.is_done();
            let (trace, transcript) = session.finish();
            let end = if aborted {
                log::warn!("session {id}: client left at step {}; episode aborted", trace.states.len() - 1);
                None
            } else {
                match end_frame(id, &trace, transcript.clone(), settings.tolerance) {
                    Ok(end) => {
                        log::info!("session {id}: {:?} after {} steps", end.termination, trace.states.len() - 1);
                        // The final frame must not be dropped: block until queued.
                        let _ = out.tx.send(encode(&ServerMessage::End(Box::new(end.clone()))));
                        Some(end)
                    }
                    Err(e) => {
                        log::error!("session {id}: cannot score episode: {e}");
                        let _ = out.tx.send(encode(&ServerMessage::Error { message: format!("cannot score episode: {e}") }));
                        None
                    }
                }
            };
            Ok((trace, transcript, end))
        }
        Err(e) => {
            let _ = out.tx.send(encode(&ServerMessage::Error { message: e.to_string() }));
            Err(io::Error::other(e))
        }
    };

    let dropped_frames = out.dropped;
    drop(out);
    let _ = writer.join();
    let _ = stream.shutdown(Shutdown::Both);
    let _ = reader.join();
    let (trace, transcript, end) = result?;
    if dropped_frames > 0 {
        log::warn!("session {id}: dropped {dropped_frames} outgoing frames");
    }
    let outcome = SessionOutcome {
        id,
        trace,
        transcript,
        end,
        dropped_inputs: dropped_inputs.load(Ordering::Relaxed),
        dropped_frames,
    };
    if let Some(dir) = &settings.record_dir {
        record(dir, &outcome)?;
    }
    Ok(outcome)
}

fn tick_loop(session: &mut TeleopSession, in_rx: &Receiver<Inbound>, out: &mut Outbox, closed: &AtomicBool, t: &TeleopConfig) {
    let id = session.id();
    let period = Duration::from_secs_f64(1.0 / t.tick_rate);
    let stale = Duration::from_secs_f64(t.stale_after);
    let mut held: Option<(Point64, Instant)> = None;
    let mut next = Instant::now() + period;
    while !session.is_done() {
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        }
        next = (next + period).max(Instant::now());
        loop {
            match in_rx.try_recv() {
                Ok(Inbound::Message(ClientMessage::Input { dx, dy }, at)) => held = Some((Point64::new(dx, dy), at)),
                Ok(Inbound::Message(ClientMessage::Mode { architecture }, _)) => {
                    log::info!("session {id}: switching to {architecture}");
                    session.set_architecture(architecture);
                    out.push(&ServerMessage::Mode { architecture });
                }
                Ok(Inbound::Malformed(message)) => out.push(&ServerMessage::Error { message }),
                Err(TryRecvError::Empty | TryRecvError::Disconnected) => break,
            }
        }
        if closed.load(Ordering::Acquire) {
            return;
        }
        let direction = match held {
            Some((d, at)) if at.elapsed() <= stale => d,
            _ => Point64::zeros(),
        };
        session.tick(direction);
        out.push(&ServerMessage::State(session.state_frame()));
    }
}

fn read_loop(stream: TcpStream, id: u64, tx: SyncSender<Inbound>, closed: &AtomicBool, dropped: &AtomicUsize) {
    let mut r = BufReader::new(stream);
    loop {
        let item = match read_frame(&mut r) {
            Ok(Some(body)) => match serde_json::from_slice::<ClientMessage>(&body) {
                Ok(m) => Inbound::Message(m, Instant::now()),
                Err(e) => {
                    log::warn!("session {id}: malformed message: {e}");
                    Inbound::Malformed(format!("malformed message: {e}"))
                }
            },
            Ok(None) => break,
            Err(FrameError::TooLarge(n)) => {
                log::warn!("session {id}: {n}-byte frame; closing");
                let _ = tx.try_send(Inbound::Malformed(FrameError::TooLarge(n).to_string()));
                break;
            }
            Err(e) => {
                log::debug!("session {id}: read ended: {e}");
                break;
            }
        };
        match tx.try_send(item) {
            Ok(()) => {}
            Err(TrySendError::Full(_)) => {
                dropped.fetch_add(1, Ordering::Relaxed);
            }
            Err(TrySendError::Disconnected(_)) => break,
        }
    }
    closed.store(true, Ordering::Release);
}

fn write_loop(stream: TcpStream, rx: Receiver<Vec<u8>>, closed: &AtomicBool) {
    let mut w = BufWriter::new(stream);
    while let Ok(frame) = rx.recv() {
        let mut ok = w.write_all(&frame).is_ok();
        // Flush whenever the queue runs dry so frames are not held back.
        while ok {
            match rx.try_recv() {
                Ok(more) => ok = w.write_all(&more).is_ok(),
                Err(_) => break,
            }
        }
        if !(ok && w.flush().is_ok()) {
            closed.store(true, Ordering::Release);
            break;
        }
    }
}

fn record(dir: &Path, o: &SessionOutcome) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_json(&dir.join(format!("session_{:04}_trace.json", o.id)), &o.trace)?;
    write_json(&dir.join(format!("session_{:04}_transcript.json", o.id)), &o.transcript)?;
    if let Some(end) = &o.end {
        write_json(&dir.join(format!("session_{:04}_end.json", o.id)), end)?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> io::Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, v).map_err(io::Error::other)?;
    f.write_all(b"\n")?;
    f.flush()
}
