use std::fs;
use std::io::ErrorKind;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tungstenite::{Message, WebSocket};

use reclass_core::config::SystemConfig;
use reclass_core::protocol::{decode_ui, encode_ui, SimCommand, UiMessage};
use reclass_core::session::export_edl;
use reclass_core::sim::corpus::write_labels;
use reclass_core::sim::eval::rates_csv;
use reclass_core::sim::live::LiveSession;
use reclass_core::sim::{generate_corpus, run_eval, run_scenario, success_rates, CorpusSpec, ScenarioInput};
use reclass_core::skeleton::{parse_trace, serialize_trace};

/// Simulated lecture capture: gesture-directed cameras on virtual rigs.
#[derive(Parser)]
#[command(name = "reclass", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a recorded skeleton trace through the full pipeline.
    Replay {
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for the EDL, logs and wire captures.
        #[arg(long, default_value = "replay-out")]
        out: PathBuf,
        /// Extra simulated seconds after the last frame.
        #[arg(long, default_value_t = 1.0)]
        tail: f64,
        /// Streams the replay to a control UI instead of writing files.
        #[arg(long)]
        serve: Option<u16>,
    },
    /// Generates a labelled corpus and scores the gesture recognizer on it.
    Eval {
        #[arg(long)]
        corpus_spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Confusion matrix CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional success-rate CSV.
        #[arg(long)]
        rates: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Writes a synthetic skeleton trace and its ground-truth labels.
    GenCorpus {
        #[arg(long)]
        corpus_spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_trace: PathBuf,
        #[arg(long)]
        out_labels: PathBuf,
        /// Disables sensor noise and dropout.
        #[arg(long)]
        clean: bool,
    },
    /// Starts the websocket endpoint for the control UI.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
    },
}

fn load_config(path: Option<&Path>) -> Result<SystemConfig> {
    match path {
        Some(p) => SystemConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(SystemConfig::default()),
    }
}

fn load_spec(path: Option<&Path>) -> Result<CorpusSpec> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            CorpusSpec::from_toml(&text).with_context(|| format!("parsing corpus spec {}", p.display()))
        }
        None => Ok(CorpusSpec::default()),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn replay(trace_path: &Path, config: &SystemConfig, out: &Path, tail: f64) -> Result<()> {
    let bytes = fs::read(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let trace = parse_trace(&bytes).with_context(|| format!("parsing {}", trace_path.display()))?;
    let end = trace.frames().last().map_or(0.0, |f| f.t());
    let logs = run_scenario(config, &ScenarioInput::Trace(trace), end + tail.max(0.0))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(&out.join("session.edl"), export_edl(&logs.edl)?)?;
    write(&out.join("rig.log"), logs.rig_text())?;
    write(&out.join("director.log"), logs.director_text())?;
    write(&out.join("wire_out.bin"), &logs.wire_out)?;
    write(&out.join("wire_in.bin"), &logs.wire_in)?;
    println!(
        "{} gestures, {} segments, {} rejected frames; output in {}",
        logs.gesture_events().len(),
        logs.edl.segments.len(),
        logs.rejected_frames,
        out.display()
    );
    Ok(())
}

fn eval(spec: &CorpusSpec, seed: u64, config: &SystemConfig, out: &Path, rates: Option<&Path>) -> Result<()> {
    let corpus = generate_corpus(spec, seed)?;
    let matrix = run_eval(&corpus.trace, &corpus.truth, &config.gesture)?;
    write(out, matrix.to_csv())?;
    let table = rates_csv(&success_rates(&matrix)?);
    if let Some(p) = rates {
        write(p, &table)?;
    }
    print!("{table}");
    Ok(())
}

fn send(ws: &mut WebSocket<TcpStream>, msg: &UiMessage) -> tungstenite::Result<()> {
    ws.write(Message::text(encode_ui(msg)))
}

/// Serves one connected UI until it disconnects.
fn serve_client(ws: &mut WebSocket<TcpStream>, live: &mut LiveSession, speed: f64) -> Result<()> {
    for m in live.snapshot() {
        send(ws, &m)?;
    }
    ws.flush()?;
    let mut last = Instant::now();
    loop {
        loop {
            match ws.read() {
                Ok(Message::Text(text)) => {
                    for line in text.lines().filter(|l| !l.trim().is_empty()) {
                        let replies = match decode_ui(line) {
                            Ok(msg) => live.handle(msg),
                            Err(e) => vec![UiMessage::error(e.to_string())],
                        };
                        for r in &replies {
                            send(ws, r)?;
                        }
                    }
                }
                Ok(Message::Close(_)) => return Ok(()),
                Ok(_) => {}
                Err(tungstenite::Error::Io(e)) if e.kind() == ErrorKind::WouldBlock => break,
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
                Err(e) => return Err(e.into()),
            }
        }
        let now = Instant::now();
        let dt = (now - last).as_secs_f64().min(0.1) * speed;
        last = now;
        for m in live.step(dt)? {
            send(ws, &m)?;
        }
        match ws.flush() {
            Ok(()) => {}
            Err(tungstenite::Error::Io(e)) if e.kind() == ErrorKind::WouldBlock => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.into()),
        }
        thread::sleep(Duration::from_millis(10));
    }
}

fn serve(host: &str, port: u16, mut live: LiveSession, speed: f64) -> Result<()> {
    if !(speed.is_finite() && speed > 0.0) {
        bail!("speed must be positive");
    }
    let listener = TcpListener::bind((host, port)).with_context(|| format!("binding {host}:{port}"))?;
    println!("listening on ws://{}", listener.local_addr()?);
    for stream in listener.incoming() {
        let stream = stream?;
        let peer = stream.peer_addr().ok();
        let mut ws = match tungstenite::accept(stream) {
            Ok(ws) => ws,
            Err(e) => {
                eprintln!("handshake failed: {e}");
                continue;
            }
        };
        ws.get_mut().set_nonblocking(true)?;
        eprintln!("client connected: {peer:?}");
        if let Err(e) = serve_client(&mut ws, &mut live, speed) {
            eprintln!("client error: {e:#}");
        }
        eprintln!("client disconnected: {peer:?}");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Replay { trace, config, out, tail, serve: port } => {
            let config = load_config(config.as_deref())?;
            match port {
                None => replay(&trace, &config, &out, tail),
                Some(port) => {
                    let text = fs::read_to_string(&trace).with_context(|| format!("reading {}", trace.display()))?;
                    let mut live = LiveSession::new(&config)?;
                    let replies = live.handle(UiMessage::Command { command: SimCommand::LoadTrace { trace: text } });
                    if let Some(UiMessage::Error { message }) = replies.first() {
                        bail!("{message}");
                    }
                    serve("127.0.0.1", port, live, 1.0)
                }
            }
        }
        Command::Eval { corpus_spec, seed, out, rates, config } => {
            let spec = load_spec(corpus_spec.as_deref())?;
            eval(&spec, seed, &load_config(config.as_deref())?, &out, rates.as_deref())
        }
        Command::GenCorpus { corpus_spec, seed, out_trace, out_labels, clean } => {
            let mut spec = load_spec(corpus_spec.as_deref())?;
            if clean {
                spec = spec.clean();
            }
            let corpus = generate_corpus(&spec, seed)?;
            write(&out_trace, serialize_trace(&corpus.trace))?;
            write(&out_labels, write_labels(&corpus.truth))?;
            println!("{} frames, {} labelled windows", corpus.trace.len(), corpus.truth.len());
            Ok(())
        }
        Command::Serve { port, host, config, speed } => {
            let live = LiveSession::new(&load_config(config.as_deref())?)?;
            serve(&host, port, live, speed)
        }
    }
}
