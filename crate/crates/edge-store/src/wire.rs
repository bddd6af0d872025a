//! Length-prefixed binary framing for the sync protocol.
//!
//! Frame layout, all integers big-endian:
//!
//! ```text
//! magic 0xED6E (2 bytes) | frame_type u8 | payload_len u32 | payload | crc32(payload) u32
//! ```
//!
//! Object payload layout:
//!
//! ```text
//! user_id_len u16 | user_id | key_len u16 | key | version u64 | value_len u32 | value
//! ```
//!
//! Timestamps carried in payloads are u64 milliseconds. A corrupted payload
//! (checksum mismatch) is rejected frame-by-frame and answered with a retry
//! ack; corrupted headers are connection-fatal since the byte stream cannot
//! be resynchronized.

use std::io::{Read, Write};

use crate::error::WireError;

pub const FRAME_MAGIC: u16 = 0xED6E;
/// Fixed per-frame overhead: magic + type + length prefix + trailing CRC.
pub const FRAME_HEADER_BYTES: usize = 2 + 1 + 4 + 4;
/// Upper bound on payload size; protects receivers from garbage lengths.
pub const MAX_PAYLOAD: u32 = 64 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameType {
    OpenSession = 0,
    Object = 1,
    Tombstone = 2,
    Commit = 3,
    Ack = 4,
    Abort = 5,
}

impl FrameType {
    fn from_u8(v: u8) -> Result<Self, WireError> {
        Ok(match v {
            0 => FrameType::OpenSession,
            1 => FrameType::Object,
            2 => FrameType::Tombstone,
            3 => FrameType::Commit,
            4 => FrameType::Ack,
            5 => FrameType::Abort,
            other => return Err(WireError::BadFrameType(other)),
        })
    }
}

/// Phase of the sync session carried in the open frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncPhase {
    Background = 0,
    Blocking = 1,
}

/// Ack status: `Ok` confirms the frame was applied, `Retry` asks the sender
/// to retransmit the last unacknowledged frame (payload checksum mismatch).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckStatus {
    Ok = 0,
    Retry = 1,
}

/// Decoded protocol frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    OpenSession {
        session_id: u64,
        phase: SyncPhase,
        user_id: String,
    },
    Object {
        user_id: String,
        key: Vec<u8>,
        version: u64,
        value: Vec<u8>,
    },
    Tombstone {
        user_id: String,
        key: Vec<u8>,
        deleted_at_ms: u64,
    },
    Commit {
        session_id: u64,
    },
    Ack {
        session_id: u64,
        status: AckStatus,
        /// Count of frames the receiver has applied in this session.
        applied: u64,
    },
    Abort {
        session_id: u64,
    },
}

impl Frame {
    pub fn frame_type(&self) -> FrameType {
        match self {
            Frame::OpenSession { .. } => FrameType::OpenSession,
            Frame::Object { .. } => FrameType::Object,
            Frame::Tombstone { .. } => FrameType::Tombstone,
            Frame::Commit { .. } => FrameType::Commit,
            Frame::Ack { .. } => FrameType::Ack,
            Frame::Abort { .. } => FrameType::Abort,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut p = Vec::new();
        match self {
            Frame::OpenSession {
                session_id,
                phase,
                user_id,
            } => {
                p.extend_from_slice(&session_id.to_be_bytes());
                p.push(*phase as u8);
                put_bytes16(&mut p, user_id.as_bytes());
            }
            Frame::Object {
                user_id,
                key,
                version,
                value,
            } => {
                put_bytes16(&mut p, user_id.as_bytes());
                put_bytes16(&mut p, key);
                p.extend_from_slice(&version.to_be_bytes());
                p.extend_from_slice(&(value.len() as u32).to_be_bytes());
                p.extend_from_slice(value);
            }
            Frame::Tombstone {
                user_id,
                key,
                deleted_at_ms,
            } => {
                put_bytes16(&mut p, user_id.as_bytes());
                put_bytes16(&mut p, key);
                p.extend_from_slice(&deleted_at_ms.to_be_bytes());
            }
            Frame::Commit { session_id } | Frame::Abort { session_id } => {
                p.extend_from_slice(&session_id.to_be_bytes());
            }
            Frame::Ack {
                session_id,
                status,
                applied,
            } => {
                p.extend_from_slice(&session_id.to_be_bytes());
                p.push(*status as u8);
                p.extend_from_slice(&applied.to_be_bytes());
            }
        }
        p
    }

    /// Serialized frame bytes including header and CRC.
    pub fn encode(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut buf = Vec::with_capacity(FRAME_HEADER_BYTES + payload.len());
        buf.extend_from_slice(&FRAME_MAGIC.to_be_bytes());
        buf.push(self.frame_type() as u8);
        buf.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        buf.extend_from_slice(&payload);
        buf.extend_from_slice(&crc32fast::hash(&payload).to_be_bytes());
        buf
    }

    /// Total encoded size without building the buffer.
    pub fn encoded_len(&self) -> usize {
        FRAME_HEADER_BYTES + self.payload_len()
    }

    pub fn payload_len(&self) -> usize {
        match self {
            Frame::OpenSession { user_id, .. } => 8 + 1 + 2 + user_id.len(),
            Frame::Object {
                user_id,
                key,
                value,
                ..
            } => 2 + user_id.len() + 2 + key.len() + 8 + 4 + value.len(),
            Frame::Tombstone { user_id, key, .. } => 2 + user_id.len() + 2 + key.len() + 8,
            Frame::Commit { .. } | Frame::Abort { .. } => 8,
            Frame::Ack { .. } => 8 + 1 + 8,
        }
    }

    /// Decodes one frame from a byte slice, returning the frame and the
    /// number of bytes consumed.
    pub fn decode(buf: &[u8]) -> Result<(Frame, usize), WireError> {
        if buf.len() < FRAME_HEADER_BYTES {
            return Err(WireError::Truncated("header"));
        }
        let magic = u16::from_be_bytes([buf[0], buf[1]]);
        if magic != FRAME_MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        let frame_type = FrameType::from_u8(buf[2])?;
        let payload_len = u32::from_be_bytes([buf[3], buf[4], buf[5], buf[6]]);
        if payload_len > MAX_PAYLOAD {
            return Err(WireError::PayloadTooLarge(payload_len));
        }
        let total = FRAME_HEADER_BYTES + payload_len as usize;
        if buf.len() < total {
            return Err(WireError::Truncated("payload"));
        }
        let payload = &buf[7..7 + payload_len as usize];
        let crc_offset = 7 + payload_len as usize;
        let expected = u32::from_be_bytes([
            buf[crc_offset],
            buf[crc_offset + 1],
            buf[crc_offset + 2],
            buf[crc_offset + 3],
        ]);
        let actual = crc32fast::hash(payload);
        if expected != actual {
            return Err(WireError::ChecksumMismatch { expected, actual });
        }
        let frame = Self::decode_payload(frame_type, payload)?;
        Ok((frame, total))
    }

    fn decode_payload(frame_type: FrameType, p: &[u8]) -> Result<Frame, WireError> {
        let mut cur = Cursor { buf: p, pos: 0 };
        let frame = match frame_type {
            FrameType::OpenSession => {
                let session_id = cur.u64()?;
                let phase = match cur.u8()? {
                    0 => SyncPhase::Background,
                    1 => SyncPhase::Blocking,
                    _ => return Err(WireError::Truncated("phase")),
                };
                let user_id = cur.bytes16()?;
                Frame::OpenSession {
                    session_id,
                    phase,
                    user_id: String::from_utf8_lossy(user_id).into_owned(),
                }
            }
            FrameType::Object => {
                let user_id = String::from_utf8_lossy(cur.bytes16()?).into_owned();
                let key = cur.bytes16()?.to_vec();
                let version = cur.u64()?;
                let value_len = cur.u32()? as usize;
                let value = cur.take(value_len)?.to_vec();
                Frame::Object {
                    user_id,
                    key,
                    version,
                    value,
                }
            }
            FrameType::Tombstone => {
                let user_id = String::from_utf8_lossy(cur.bytes16()?).into_owned();
                let key = cur.bytes16()?.to_vec();
                let deleted_at_ms = cur.u64()?;
                Frame::Tombstone {
                    user_id,
                    key,
                    deleted_at_ms,
                }
            }
            FrameType::Commit => Frame::Commit {
                session_id: cur.u64()?,
            },
            FrameType::Abort => Frame::Abort {
                session_id: cur.u64()?,
            },
            FrameType::Ack => {
                let session_id = cur.u64()?;
                let status = match cur.u8()? {
                    0 => AckStatus::Ok,
                    _ => AckStatus::Retry,
                };
                let applied = cur.u64()?;
                Frame::Ack {
                    session_id,
                    status,
                    applied,
                }
            }
        };
        Ok(frame)
    }
}

fn put_bytes16(buf: &mut Vec<u8>, bytes: &[u8]) {
    debug_assert!(bytes.len() <= u16::MAX as usize);
    buf.extend_from_slice(&(bytes.len() as u16).to_be_bytes());
    buf.extend_from_slice(bytes);
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.pos + n > self.buf.len() {
            return Err(WireError::Truncated("field"));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes([
            b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
        ]))
    }

    fn bytes16(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.take(2)?;
        let len = u16::from_be_bytes([len[0], len[1]]) as usize;
        self.take(len)
    }
}

/// Writes one frame to a byte stream.
pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<(), WireError> {
    w.write_all(&frame.encode())?;
    w.flush()?;
    Ok(())
}

/// Reads one frame from a byte stream.
///
/// A checksum mismatch consumes the frame's bytes so the caller can answer
/// with a retry ack and keep the connection alive.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Frame, WireError> {
    let mut header = [0u8; 7];
    r.read_exact(&mut header)?;
    let magic = u16::from_be_bytes([header[0], header[1]]);
    if magic != FRAME_MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let frame_type = FrameType::from_u8(header[2])?;
    let payload_len = u32::from_be_bytes([header[3], header[4], header[5], header[6]]);
    if payload_len > MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(payload_len));
    }
    let mut rest = vec![0u8; payload_len as usize + 4];
    r.read_exact(&mut rest)?;
    let payload = &rest[..payload_len as usize];
    let expected = u32::from_be_bytes([
        rest[payload_len as usize],
        rest[payload_len as usize + 1],
        rest[payload_len as usize + 2],
        rest[payload_len as usize + 3],
    ]);
    let actual = crc32fast::hash(payload);
    if expected != actual {
        return Err(WireError::ChecksumMismatch { expected, actual });
    }
    Frame::decode_payload(frame_type, payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_frames() -> Vec<Frame> {
        vec![
            Frame::OpenSession {
                session_id: 7,
                phase: SyncPhase::Background,
                user_id: "u1".into(),
            },
            Frame::Object {
                user_id: "u1".into(),
                key: b"pose".to_vec(),
                version: 3,
                value: vec![0xAB; 17],
            },
            Frame::Tombstone {
                user_id: "u1".into(),
                key: b"gone".to_vec(),
                deleted_at_ms: 123_456,
            },
            Frame::Commit { session_id: 7 },
            Frame::Ack {
                session_id: 7,
                status: AckStatus::Ok,
                applied: 4,
            },
            Frame::Abort { session_id: 7 },
        ]
    }

    #[test]
    fn roundtrip_all_frame_types() {
        for frame in sample_frames() {
            let bytes = frame.encode();
            assert_eq!(bytes.len(), frame.encoded_len());
            let (decoded, consumed) = Frame::decode(&bytes).unwrap();
            assert_eq!(consumed, bytes.len());
            assert_eq!(decoded, frame);
        }
    }

    #[test]
    fn object_payload_layout_is_exact() {
        let frame = Frame::Object {
            user_id: "ab".into(),
            key: b"k".to_vec(),
            version: 0x0102030405060708,
            value: vec![0xFF, 0xEE],
        };
        let bytes = frame.encode();
        assert_eq!(&bytes[0..2], &[0xED, 0x6E]);
        assert_eq!(bytes[2], 1); // OBJECT
        let payload_len = u32::from_be_bytes([bytes[3], bytes[4], bytes[5], bytes[6]]);
        assert_eq!(payload_len as usize, 2 + 2 + 2 + 1 + 8 + 4 + 2);
        let p = &bytes[7..7 + payload_len as usize];
        assert_eq!(&p[0..2], &[0, 2]); // user_id_len
        assert_eq!(&p[2..4], b"ab");
        assert_eq!(&p[4..6], &[0, 1]); // key_len
        assert_eq!(&p[6..7], b"k");
        assert_eq!(
            &p[7..15],
            &[0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08]
        );
        assert_eq!(&p[15..19], &[0, 0, 0, 2]); // value_len
        assert_eq!(&p[19..21], &[0xFF, 0xEE]);
    }

    #[test]
    fn bit_flips_in_payload_are_detected() {
        let frame = Frame::Object {
            user_id: "u".into(),
            key: b"key".to_vec(),
            version: 9,
            value: vec![1, 2, 3, 4, 5, 6, 7, 8],
        };
        let clean = frame.encode();
        // Flip every payload bit position in turn; each must fail the CRC.
        for byte_idx in 7..clean.len() - 4 {
            for bit in 0..8 {
                let mut corrupted = clean.clone();
                corrupted[byte_idx] ^= 1 << bit;
                match Frame::decode(&corrupted) {
                    Err(WireError::ChecksumMismatch { .. }) => {}
                    other => panic!("bit flip at {byte_idx}:{bit} not caught: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = Frame::Commit { session_id: 1 }.encode();
        bytes[0] = 0x00;
        assert!(matches!(Frame::decode(&bytes), Err(WireError::BadMagic(_))));
    }

    #[test]
    fn stream_roundtrip() {
        let mut buf = Vec::new();
        for frame in sample_frames() {
            write_frame(&mut buf, &frame).unwrap();
        }
        let mut cursor = std::io::Cursor::new(buf);
        for frame in sample_frames() {
            let read = read_frame(&mut cursor).unwrap();
            assert_eq!(read, frame);
        }
    }
}
