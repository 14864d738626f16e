use std::io::{BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::wire::RoundMessage;
use super::{collect_outcome, tag, IoCounter, OpenMode, Party, RunOutcome, Transcript, Transport};
use crate::domain::EvaluationDomain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct TcpOptions {
    pub seed: u64,
    pub open_mode: OpenMode,
    /// Per-read timeout once the mesh is up, and the deadline for building it.
    pub timeout: Duration,
    pub config_hash: u64,
}

impl TcpOptions {
    pub fn new(seed: u64, config_hash: u64) -> Self {
        Self {
            seed,
            open_mode: OpenMode::default(),
            timeout: Duration::from_secs(30),
            config_hash,
        }
    }
}

struct Link {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

/// Full mesh of TCP links. Party `i` dials every lower index and accepts
/// every higher one; both ends exchange a hello frame carrying the
/// configuration hash before any protocol traffic.
pub struct TcpTransport {
    index: usize,
    links: Vec<Option<Link>>,
}

impl TcpTransport {
    pub fn establish(
        index: usize,
        listener: TcpListener,
        addrs: &[SocketAddr],
        config_hash: u64,
        timeout: Duration,
    ) -> Result<Self> {
        let n = addrs.len();
        let deadline = Instant::now() + timeout;
        let mut links: Vec<Option<Link>> = (0..n).map(|_| None).collect();

        for (peer, addr) in addrs.iter().enumerate().take(index) {
            let stream =
                dial(*addr, deadline).map_err(|e| Error::abort(0, vec![peer], e.to_string()))?;
            let mut link = Link::new(stream, timeout)?;
            let lost = |e| peer_lost(e, vec![peer]);
            link.send_hello(index, config_hash).map_err(lost)?;
            let (sender, hash) = link.read_hello().map_err(lost)?;
            if sender != peer {
                return Err(Error::Config(format!(
                    "dialed party {peer} but {sender} answered"
                )));
            }
            if hash != config_hash {
                return Err(Error::ConfigMismatch { peer });
            }
            links[peer] = Some(link);
        }

        for _ in index + 1..n {
            let stream = accept(&listener, deadline)?;
            let mut link = Link::new(stream, timeout)?;
            let (peer, hash) = link.read_hello().map_err(|e| peer_lost(e, vec![]))?;
            if peer <= index || peer >= n || links[peer].is_some() {
                return Err(Error::Config(format!("unexpected hello from party {peer}")));
            }
            link.send_hello(index, config_hash)
                .map_err(|e| peer_lost(e, vec![peer]))?;
            if hash != config_hash {
                return Err(Error::ConfigMismatch { peer });
            }
            links[peer] = Some(link);
        }
        Ok(Self { index, links })
    }

    fn link(&mut self, peer: usize) -> Result<&mut Link> {
        let index = self.index;
        self.links
            .get_mut(peer)
            .and_then(Option::as_mut)
            .ok_or_else(|| Error::Config(format!("party {index} has no link to {peer}")))
    }
}

impl Link {
    fn new(stream: TcpStream, timeout: Duration) -> Result<Self> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(Self {
            reader,
            writer: BufWriter::new(stream),
        })
    }

    fn send_hello(&mut self, index: usize, hash: u64) -> Result<()> {
        RoundMessage {
            tag: tag::HELLO,
            round: 0,
            sender: index as u16,
            payload: vec![f64::from_bits(hash)],
        }
        .write_to(&mut self.writer)
    }

    fn read_hello(&mut self) -> Result<(usize, u64)> {
        let msg = RoundMessage::read_from(&mut self.reader)?;
        if msg.tag != tag::HELLO || msg.payload.len() != 1 {
            return Err(Error::Wire("expected hello frame".into()));
        }
        Ok((msg.sender as usize, msg.payload[0].to_bits()))
    }
}

/// A peer that drops its connection during the handshake aborts the run.
fn peer_lost(e: Error, peers: Vec<usize>) -> Error {
    match e {
        Error::Io(reason) => Error::abort(0, peers, reason),
        other => other,
    }
}

fn dial(addr: SocketAddr, deadline: Instant) -> std::io::Result<TcpStream> {
    loop {
        match TcpStream::connect_timeout(&addr, Duration::from_millis(500)) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => return Err(e),
            Err(_) => std::thread::sleep(Duration::from_millis(20)),
        }
    }
}

fn accept(listener: &TcpListener, deadline: Instant) -> Result<TcpStream> {
    listener.set_nonblocking(true)?;
    loop {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false)?;
                return Ok(stream);
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(Error::abort(
                        0,
                        vec![],
                        "timed out waiting for peers to connect",
                    ));
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, to: usize, frame: &[u8]) -> Result<()> {
        let link = self.link(to)?;
        link.writer.write_all(frame)?;
        link.writer.flush()?;
        Ok(())
    }

    fn recv(&mut self, from: usize) -> Result<Vec<u8>> {
        let link = self.link(from)?;
        let msg = RoundMessage::read_from(&mut link.reader).map_err(|e| match e {
            Error::Io(reason) => Error::abort(0, vec![from], reason),
            other => other,
        })?;
        Ok(msg.encode())
    }
}

/// Runs one party over TCP: builds the mesh from a bound listener, then
/// executes `script`.
pub fn run_tcp_party<R, F>(
    domain: &Arc<EvaluationDomain>,
    index: usize,
    listener: TcpListener,
    addrs: &[SocketAddr],
    options: TcpOptions,
    script: F,
) -> Result<(R, Transcript, IoCounter)>
where
    F: FnOnce(&mut Party) -> Result<R>,
{
    if addrs.len() != domain.n() {
        return Err(Error::Config(format!(
            "{} listen addresses for {} parties",
            addrs.len(),
            domain.n()
        )));
    }
    let transport =
        TcpTransport::establish(index, listener, addrs, options.config_hash, options.timeout)?;
    let mut party = Party::new(
        index,
        domain.clone(),
        Box::new(transport),
        options.seed,
        options.open_mode,
    )?;
    let out = script(&mut party)?;
    let io = party.io();
    Ok((out, party.into_transcript(), io))
}

/// Runs every party of `domain` over localhost TCP, one thread each. The
/// listeners are bound up front; pass port 0 to pick free ports.
pub fn run_tcp<R, F>(
    domain: &Arc<EvaluationDomain>,
    listen: &[SocketAddr],
    options: TcpOptions,
    script: F,
) -> Result<RunOutcome<R>>
where
    R: Send,
    F: Fn(&mut Party) -> Result<R> + Sync,
{
    let listeners = listen
        .iter()
        .map(TcpListener::bind)
        .collect::<std::io::Result<Vec<_>>>()?;
    let addrs = listeners
        .iter()
        .map(TcpListener::local_addr)
        .collect::<std::io::Result<Vec<_>>>()?;
    let script = &script;
    let addrs = &addrs;
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(index, listener)| {
                scope.spawn(move || run_tcp_party(domain, index, listener, addrs, options, script))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Config("party thread panicked".into())))
            })
            .collect::<Vec<_>>()
    });
    collect_outcome(results)
}
