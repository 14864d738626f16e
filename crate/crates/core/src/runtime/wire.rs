//! Frame layout, all integers big-endian except the payload:
//!
//! ```text
//! 0..4    magic "RNSS" (0x52 0x4E 0x53 0x53)
//! 4       version 0x01
//! 5       protocol tag
//! 6..10   round (u32)
//! 10..12  sender index (u16)
//! 12..16  payload count (u32)
//! 16..    count x f64, little-endian IEEE-754
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RNSS";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 16;
/// Upper bound on payload values accepted from the network.
pub const MAX_PAYLOAD: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMessage {
    pub tag: u8,
    pub round: u32,
    pub sender: u16,
    pub payload: Vec<f64>,
}

impl RoundMessage {
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 8 * self.payload.len()
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.reserve(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.tag);
        out.extend_from_slice(&self.round.to_be_bytes());
        out.extend_from_slice(&self.sender.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        for v in &self.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_into(&mut out);
        out
    }

    /// Decodes one frame from the front of `buf`, returning it and the bytes used.
    pub fn decode(buf: &[u8]) -> Result<(RoundMessage, usize)> {
        if buf.len() < HEADER_LEN {
            return Err(Error::Wire(format!("short header: {} bytes", buf.len())));
        }
        let header: &[u8; HEADER_LEN] = buf[..HEADER_LEN].try_into().expect("length checked");
        let (tag, round, sender, count) = parse_header(header)?;
        let total = HEADER_LEN + 8 * count;
        if buf.len() < total {
            return Err(Error::Wire(format!(
                "short payload: need {total} bytes, have {}",
                buf.len()
            )));
        }
        let payload = buf[HEADER_LEN..total]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok((
            RoundMessage {
                tag,
                round,
                sender,
                payload,
            },
            total,
        ))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&self.encode())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<RoundMessage> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        let (tag, round, sender, count) = parse_header(&header)?;
        let mut body = vec![0u8; 8 * count];
        r.read_exact(&mut body)?;
        let payload = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(RoundMessage {
            tag,
            round,
            sender,
            payload,
        })
    }
}

fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(u8, u32, u16, usize)> {
    if h[0..4] != MAGIC {
        return Err(Error::Wire("bad magic".into()));
    }
    if h[4] != VERSION {
        return Err(Error::Wire(format!("unsupported version {:#04x}", h[4])));
    }
    let tag = h[5];
    let round = u32::from_be_bytes([h[6], h[7], h[8], h[9]]);
    let sender = u16::from_be_bytes([h[10], h[11]]);
    let count = u32::from_be_bytes([h[12], h[13], h[14], h[15]]) as usize;
    if count > MAX_PAYLOAD {
        return Err(Error::Wire(format!(
            "payload of {count} values exceeds cap"
        )));
    }
    Ok((tag, round, sender, count))
}
