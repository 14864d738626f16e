//! Round-synchronous execution of computing parties.
//!
//! Every party runs the same script as one sequential context. Values are
//! opened by having the contributing parties send their shares to everyone;
//! each receiver reconstructs locally, so all parties see the same plain
//! value without any plain value crossing the wire. Transports only move
//! encoded [`RoundMessage`] frames, so the in-process and TCP runs produce
//! byte-identical transcripts.

mod config;
mod sim;
mod tcp;
pub mod wire;

use std::collections::HashSet;
use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

pub use config::RunConfig;
pub use sim::{run_simulated, SimOptions, SimTransport};
pub use tcp::{run_tcp, run_tcp_party, TcpOptions, TcpTransport};
pub use wire::RoundMessage;

use crate::domain::EvaluationDomain;
use crate::error::{Error, Result};
use crate::poly::Interpolator;

/// Protocol tags carried in the frame header.
pub mod tag {
    /// Transport handshake carrying the configuration hash.
    pub const HELLO: u8 = 0x00;
    /// Shares sent for an opening.
    pub const OPEN: u8 = 0x01;
    /// Point-to-point shares of a party's private contribution.
    pub const DISTRIBUTE: u8 = 0x02;
    /// Shares sent to deliver a final output. Not an interactive operation.
    pub const OUTPUT: u8 = 0x03;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartyIdentity {
    pub index: usize,
    pub evaluation_point: f64,
}

/// Number of interactive operations (openings) performed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoCounter {
    opens: u64,
}

impl IoCounter {
    pub fn opens(&self) -> u64 {
        self.opens
    }

    pub(crate) fn record(&mut self) {
        self.opens += 1;
    }
}

/// Which parties contribute shares to an opening.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OpenMode {
    /// The `t + 1` lowest-indexed parties.
    #[default]
    LowestIndices,
    /// Every party; the receiver interpolates through all `n` shares.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    pub direction: Direction,
    pub peer: usize,
    pub message: RoundMessage,
}

/// Everything one party sent and received, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    /// Canonical byte form: direction byte, peer (u16 BE), then the frame.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.push(match e.direction {
                Direction::Sent => 0,
                Direction::Received => 1,
            });
            out.extend_from_slice(&(e.peer as u16).to_be_bytes());
            e.message.encode_into(&mut out);
        }
        out
    }

    pub fn messages(&self) -> impl Iterator<Item = &RoundMessage> {
        self.entries.iter().map(|e| &e.message)
    }
}

/// Moves frames between parties. Implementations must tolerate concurrent
/// use by distinct parties; a single party uses its transport sequentially.
pub trait Transport: Send {
    fn send(&mut self, to: usize, frame: &[u8]) -> Result<()>;
    fn recv(&mut self, from: usize) -> Result<Vec<u8>>;
}

/// One computing party's execution context.
pub struct Party {
    identity: PartyIdentity,
    domain: Arc<EvaluationDomain>,
    transport: Box<dyn Transport>,
    seed: u64,
    round: u32,
    io: IoCounter,
    transcript: Transcript,
    open_mode: OpenMode,
    contributors: Vec<usize>,
    open_interp: Interpolator,
    used_triples: HashSet<u64>,
}

impl Party {
    pub fn new(
        index: usize,
        domain: Arc<EvaluationDomain>,
        transport: Box<dyn Transport>,
        seed: u64,
        open_mode: OpenMode,
    ) -> Result<Self> {
        if index >= domain.n() {
            return Err(Error::Config(format!(
                "party index {index} out of range for {} parties",
                domain.n()
            )));
        }
        let contributors: Vec<usize> = match open_mode {
            OpenMode::LowestIndices => (0..=domain.t()).collect(),
            OpenMode::All => (0..domain.n()).collect(),
        };
        let open_interp =
            Interpolator::new(contributors.iter().map(|&i| domain.point(i)).collect())?;
        Ok(Self {
            identity: PartyIdentity {
                index,
                evaluation_point: domain.point(index),
            },
            domain,
            transport,
            seed,
            round: 0,
            io: IoCounter::default(),
            transcript: Transcript::default(),
            open_mode,
            contributors,
            open_interp,
            used_triples: HashSet::new(),
        })
    }

    pub fn index(&self) -> usize {
        self.identity.index
    }

    pub fn identity(&self) -> PartyIdentity {
        self.identity
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn io(&self) -> IoCounter {
        self.io
    }

    pub fn open_mode(&self) -> OpenMode {
        self.open_mode
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// This party's private random stream for `label`.
    pub fn rng(&self, label: &str) -> ChaCha20Rng {
        crate::rng::stream(self.seed, self.identity.index as u64, label)
    }

    /// Marks a Beaver triple as consumed; a second use is a protocol error.
    pub fn consume_triple(&mut self, id: u64) -> Result<()> {
        if self.used_triples.insert(id) {
            Ok(())
        } else {
            Err(Error::TripleReused(id))
        }
    }

    /// Opens a batch of shared values. Counts as one interactive operation.
    pub fn open(&mut self, local: &[f64]) -> Result<Vec<f64>> {
        let out = self.gather_and_reconstruct(tag::OPEN, local)?;
        self.io.record();
        Ok(out)
    }

    /// Delivers output shares to every party. Not counted as interactive.
    pub fn reveal(&mut self, local: &[f64]) -> Result<Vec<f64>> {
        self.gather_and_reconstruct(tag::OUTPUT, local)
    }

    fn gather_and_reconstruct(&mut self, tag: u8, local: &[f64]) -> Result<Vec<f64>> {
        let round = self.next_round();
        let me = self.identity.index;
        if self.contributors.contains(&me) {
            let msg = self.message(tag, round, local.to_vec());
            for peer in (0..self.n()).filter(|&p| p != me) {
                self.send(peer, &msg)?;
            }
        }
        let contributors = self.contributors.clone();
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(contributors.len());
        for &c in &contributors {
            if c == me {
                columns.push(local.to_vec());
            } else {
                columns.push(self.expect(c, tag, round, local.len())?);
            }
        }
        let mut row = vec![0.0; contributors.len()];
        Ok((0..local.len())
            .map(|k| {
                for (slot, col) in row.iter_mut().zip(&columns) {
                    *slot = col[k];
                }
                self.open_interp.eval(0.0, &row)
            })
            .collect())
    }

    /// One round of point-to-point delivery: `outgoing[j]` goes to party `j`
    /// (the entry for this party is kept locally). Returns what every party
    /// sent to this one, indexed by sender.
    pub fn exchange(&mut self, outgoing: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
        if outgoing.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "exchange needs {} payloads, got {}",
                self.n(),
                outgoing.len()
            )));
        }
        let round = self.next_round();
        let me = self.identity.index;
        let len = outgoing[me].len();
        let mut incoming: Vec<Vec<f64>> = vec![Vec::new(); self.n()];
        for (peer, payload) in outgoing.into_iter().enumerate() {
            if peer == me {
                incoming[me] = payload;
            } else {
                let msg = self.message(tag::DISTRIBUTE, round, payload);
                self.send(peer, &msg)?;
            }
        }
        for peer in (0..self.n()).filter(|&p| p != me) {
            incoming[peer] = self.expect(peer, tag::DISTRIBUTE, round, len)?;
        }
        Ok(incoming)
    }

    fn next_round(&mut self) -> u32 {
        self.round += 1;
        self.round
    }

    fn message(&self, tag: u8, round: u32, payload: Vec<f64>) -> RoundMessage {
        RoundMessage {
            tag,
            round,
            sender: self.identity.index as u16,
            payload,
        }
    }

    fn send(&mut self, peer: usize, msg: &RoundMessage) -> Result<()> {
        let round = msg.round;
        self.transport
            .send(peer, &msg.encode())
            .map_err(|e| Error::abort(round, vec![peer], format!("send failed: {e}")))?;
        self.transcript.entries.push(TranscriptEntry {
            direction: Direction::Sent,
            peer,
            message: msg.clone(),
        });
        Ok(())
    }

    fn expect(&mut self, peer: usize, tag: u8, round: u32, len: usize) -> Result<Vec<f64>> {
        let bytes = self.transport.recv(peer).map_err(|e| match e {
            Error::ProtocolAbort { reason, .. } => Error::abort(round, vec![peer], reason),
            other => Error::abort(round, vec![peer], other.to_string()),
        })?;
        let (msg, _) = RoundMessage::decode(&bytes)?;
        if msg.tag != tag || msg.round != round || msg.sender as usize != peer {
            return Err(Error::abort(
                round,
                vec![peer],
                format!(
                    "expected tag {tag} round {round} from {peer}, got tag {} round {} from {}",
                    msg.tag, msg.round, msg.sender
                ),
            ));
        }
        if msg.payload.len() != len {
            return Err(Error::abort(
                round,
                vec![peer],
                format!("expected {len} values, got {}", msg.payload.len()),
            ));
        }
        let payload = msg.payload.clone();
        self.transcript.entries.push(TranscriptEntry {
            direction: Direction::Received,
            peer,
            message: msg,
        });
        Ok(payload)
    }
}

/// Output of a multi-party run: per-party results, transcripts and counters.
#[derive(Debug, Clone)]
pub struct RunOutcome<R> {
    pub outputs: Vec<R>,
    pub transcripts: Vec<Transcript>,
    pub io: Vec<IoCounter>,
}

/// Collects per-party results, reporting the most informative failure: a
/// party's own protocol error wins over the aborts it caused in its peers.
pub(crate) fn collect_outcome<R>(
    results: Vec<Result<(R, Transcript, IoCounter)>>,
) -> Result<RunOutcome<R>> {
    let mut first_abort = None;
    let mut first_other = None;
    let mut outputs = Vec::with_capacity(results.len());
    let mut transcripts = Vec::with_capacity(results.len());
    let mut io = Vec::with_capacity(results.len());
    for (party, res) in results.into_iter().enumerate() {
        match res {
            Ok((out, tr, counter)) => {
                outputs.push(out);
                transcripts.push(tr);
                io.push(counter);
            }
            Err(e) => {
                let wrapped = Error::Party {
                    party,
                    source: Box::new(e),
                };
                let slot = if matches!(wrapped.root(), Error::ProtocolAbort { .. }) {
                    &mut first_abort
                } else {
                    &mut first_other
                };
                if slot.is_none() {
                    *slot = Some(wrapped);
                }
            }
        }
    }
    if let Some(e) = first_other.or(first_abort) {
        return Err(e);
    }
    Ok(RunOutcome {
        outputs,
        transcripts,
        io,
    })
}
