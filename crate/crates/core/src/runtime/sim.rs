use std::sync::Arc;
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};

use super::{collect_outcome, OpenMode, Party, RunOutcome, Transport};
use crate::domain::EvaluationDomain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub seed: u64,
    pub open_mode: OpenMode,
    /// How long a party waits for a peer's frame before aborting.
    pub timeout: Duration,
}

impl SimOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            open_mode: OpenMode::default(),
            timeout: Duration::from_secs(30),
        }
    }
}

/// In-process transport: one channel per ordered pair of parties.
pub struct SimTransport {
    index: usize,
    outbox: Vec<Option<Sender<Vec<u8>>>>,
    inbox: Vec<Option<Receiver<Vec<u8>>>>,
    timeout: Duration,
}

impl SimTransport {
    /// Builds a fully connected mesh of `n` transports.
    pub fn mesh(n: usize, timeout: Duration) -> Vec<SimTransport> {
        let mut senders: Vec<Vec<Option<Sender<Vec<u8>>>>> =
            (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
        let mut receivers: Vec<Vec<Option<Receiver<Vec<u8>>>>> =
            (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
        for from in 0..n {
            for to in 0..n {
                if from != to {
                    let (tx, rx) = unbounded();
                    senders[from][to] = Some(tx);
                    receivers[to][from] = Some(rx);
                }
            }
        }
        senders
            .into_iter()
            .zip(receivers)
            .enumerate()
            .map(|(index, (outbox, inbox))| SimTransport {
                index,
                outbox,
                inbox,
                timeout,
            })
            .collect()
    }
}

impl Transport for SimTransport {
    fn send(&mut self, to: usize, frame: &[u8]) -> Result<()> {
        let tx = self
            .outbox
            .get(to)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Config(format!("party {} has no link to {to}", self.index)))?;
        tx.send(frame.to_vec())
            .map_err(|_| Error::abort(0, vec![to], "peer has left the session"))
    }

    fn recv(&mut self, from: usize) -> Result<Vec<u8>> {
        let rx = self
            .inbox
            .get(from)
            .and_then(Option::as_ref)
            .ok_or_else(|| {
                Error::Config(format!("party {} has no link from {from}", self.index))
            })?;
        rx.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => Error::abort(0, vec![from], "timed out waiting for peer"),
            RecvTimeoutError::Disconnected => {
                Error::abort(0, vec![from], "peer has left the session")
            }
        })
    }
}

/// Runs `script` for every party of `domain` on its own thread, connected by
/// in-process channels.
pub fn run_simulated<R, F>(
    domain: &Arc<EvaluationDomain>,
    options: SimOptions,
    script: F,
) -> Result<RunOutcome<R>>
where
    R: Send,
    F: Fn(&mut Party) -> Result<R> + Sync,
{
    let transports = SimTransport::mesh(domain.n(), options.timeout);
    let script = &script;
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = transports
            .into_iter()
            .enumerate()
            .map(|(index, transport)| {
                let domain = domain.clone();
                scope.spawn(move || {
                    let mut party = Party::new(
                        index,
                        domain,
                        Box::new(transport),
                        options.seed,
                        options.open_mode,
                    )?;
                    let out = script(&mut party)?;
                    let io = party.io();
                    Ok((out, party.into_transcript(), io))
                })
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sharing::{public_share, share};
    use crate::SharingParams;

    fn domain(n: usize, t: usize) -> Arc<EvaluationDomain> {
        Arc::new(EvaluationDomain::new((1..=n).map(|i| i as f64).collect(), t).unwrap())
    }

    #[test]
    fn every_party_receives_the_opened_value() {
        let d = domain(3, 1);
        let (shares, _) = share(5.0, &d, &SharingParams::new(0.0, 10.0, 1).unwrap()).unwrap();
        let run = run_simulated(&d, SimOptions::new(0), |p| {
            let v = shares.get(p.index()).unwrap();
            Ok(p.open(&[v])?[0])
        })
        .unwrap();
        for v in &run.outputs {
            assert!((v - 5.0).abs() < 1e-12);
        }
        assert!(run.io.iter().all(|c| c.opens() == 1));
        // only parties 0 and 1 contribute with t = 1
        assert_eq!(run.transcripts[2].entries.len(), 2);
    }

    #[test]
    fn full_gather_mode() {
        let d = domain(4, 1);
        let shares = public_share(2.0, &d);
        let mut opts = SimOptions::new(0);
        opts.open_mode = OpenMode::All;
        let run = run_simulated(&d, opts, |p| {
            Ok(p.open(&[shares.get(p.index()).unwrap()])?[0])
        })
        .unwrap();
        assert!(run.outputs.iter().all(|&v| (v - 2.0).abs() < 1e-12));
        assert!(run.transcripts.iter().all(|t| t.entries.len() == 6));
    }

    #[test]
    fn silent_contributor_aborts() {
        let d = domain(3, 1);
        let mut opts = SimOptions::new(0);
        opts.timeout = Duration::from_millis(200);
        let err = run_simulated(&d, opts, |p| {
            if p.index() == 1 {
                return Ok(0.0);
            }
            Ok(p.open(&[1.0])?[0])
        })
        .unwrap_err();
        match err.root() {
            Error::ProtocolAbort { round, missing, .. } => {
                assert_eq!(*round, 1);
                assert_eq!(missing, &vec![1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn script_errors_carry_party_context() {
        let d = domain(3, 1);
        let err = run_simulated(&d, SimOptions::new(0), |p| {
            if p.index() == 2 {
                return Err::<(), _>(Error::TripleReused(9));
            }
            Ok(())
        })
        .unwrap_err();
        assert_eq!(
            err,
            Error::Party {
                party: 2,
                source: Box::new(Error::TripleReused(9))
            }
        );
    }

    #[test]
    fn exchange_routes_point_to_point() {
        let d = domain(4, 2);
        let run = run_simulated(&d, SimOptions::new(0), |p| {
            let me = p.index() as f64;
            let outgoing = (0..4).map(|j| vec![me * 10.0 + j as f64]).collect();
            p.exchange(outgoing)
        })
        .unwrap();
        for (j, got) in run.outputs.iter().enumerate() {
            for (i, v) in got.iter().enumerate() {
                assert_eq!(v[0], i as f64 * 10.0 + j as f64);
            }
        }
    }
}
