//! Binary frame codec for relay messages.
//!
//! Frame layout, all integers big-endian:
//! 4-byte frame length (bytes after this field), 1-byte topic length,
//! topic bytes, 8-byte seq, 8-byte sim_time (IEEE 754), 8-byte wall_ns,
//! 2-byte value count, then count x 8-byte IEEE 754 values.

use std::io::Read;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One timestamped sample batch on a topic.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayMessage {
    pub topic: String,
    pub seq: u64,
    pub sim_time: f64,
    pub wall_ns: u64,
    pub values: Vec<f64>,
}

pub fn encode(m: &RelayMessage) -> Result<Vec<u8>, CodecError> {
    let topic = m.topic.as_bytes();
    if topic.len() > u8::MAX as usize {
        return Err(CodecError::MalformedFrame(format!("topic too long ({})", topic.len())));
    }
    if m.values.len() > u16::MAX as usize {
        return Err(CodecError::MalformedFrame(format!("too many values ({})", m.values.len())));
    }
    let body_len = 1 + topic.len() + 8 + 8 + 8 + 2 + 8 * m.values.len();
    let mut buf = Vec::with_capacity(4 + body_len);
    buf.extend_from_slice(&(body_len as u32).to_be_bytes());
    buf.push(topic.len() as u8);
    buf.extend_from_slice(topic);
    buf.extend_from_slice(&m.seq.to_be_bytes());
    buf.extend_from_slice(&m.sim_time.to_bits().to_be_bytes());
    buf.extend_from_slice(&m.wall_ns.to_be_bytes());
    buf.extend_from_slice(&(m.values.len() as u16).to_be_bytes());
    for v in &m.values {
        buf.extend_from_slice(&v.to_bits().to_be_bytes());
    }
    Ok(buf)
}

/// Decode a complete frame (length prefix included).
pub fn decode(bytes: &[u8]) -> Result<RelayMessage, CodecError> {
    let malformed = |why: &str| CodecError::MalformedFrame(why.to_string());
    if bytes.len() < 4 {
        return Err(malformed("shorter than the length prefix"));
    }
    let body_len = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
    let body = &bytes[4..];
    if body.len() != body_len {
        return Err(CodecError::MalformedFrame(format!(
            "length prefix says {body_len} bytes, frame has {}",
            body.len()
        )));
    }
    decode_body(body)
}

fn decode_body(body: &[u8]) -> Result<RelayMessage, CodecError> {
    let malformed = |why: &str| CodecError::MalformedFrame(why.to_string());
    let mut at = 0usize;
    let take = |at: &mut usize, n: usize| -> Result<&[u8], CodecError> {
        if *at + n > body.len() {
            return Err(malformed("truncated frame"));
        }
        let s = &body[*at..*at + n];
        *at += n;
        Ok(s)
    };
    let topic_len = take(&mut at, 1)?[0] as usize;
    let topic = std::str::from_utf8(take(&mut at, topic_len)?)
        .map_err(|_| malformed("topic is not UTF-8"))?
        .to_string();
    let seq = u64::from_be_bytes(take(&mut at, 8)?.try_into().unwrap());
    let sim_time = f64::from_bits(u64::from_be_bytes(take(&mut at, 8)?.try_into().unwrap()));
    let wall_ns = u64::from_be_bytes(take(&mut at, 8)?.try_into().unwrap());
    let count = u16::from_be_bytes(take(&mut at, 2)?.try_into().unwrap()) as usize;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(f64::from_bits(u64::from_be_bytes(
            take(&mut at, 8)?.try_into().unwrap(),
        )));
    }
    if at != body.len() {
        return Err(malformed("trailing bytes after the declared values"));
    }
    Ok(RelayMessage { topic, seq, sim_time, wall_ns, values })
}

/// Read one length-prefixed frame from a stream. `Ok(None)` on clean EOF at
/// a frame boundary.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Option<RelayMessage>, CodecError> {
    let mut len_buf = [0u8; 4];
    match reader.read_exact(&mut len_buf) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let body_len = u32::from_be_bytes(len_buf) as usize;
    if body_len > 16 * 1024 * 1024 {
        return Err(CodecError::MalformedFrame(format!("implausible frame length {body_len}")));
    }
    let mut body = vec![0u8; body_len];
    reader.read_exact(&mut body)?;
    decode_body(&body).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(values: Vec<f64>) -> RelayMessage {
        RelayMessage { topic: "vref".into(), seq: 42, sim_time: 1.234, wall_ns: 987654321, values }
    }

    #[test]
    fn empty_values_roundtrip() {
        let m = sample(vec![]);
        assert_eq!(decode(&encode(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn three_value_roundtrip_bit_exact() {
        let m = sample(vec![1.0 / 3.0, -0.0, f64::MIN_POSITIVE]);
        let back = decode(&encode(&m).unwrap()).unwrap();
        for (a, b) in m.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_frame_is_malformed() {
        let bytes = encode(&sample(vec![1.0, 2.0])).unwrap();
        for cut in 1..bytes.len() {
            assert!(
                matches!(decode(&bytes[..cut]), Err(CodecError::MalformedFrame(_))),
                "cut at {cut} accepted"
            );
        }
    }

    #[test]
    fn stream_reader_recovers_sequential_frames() {
        let m1 = sample(vec![1.0]);
        let mut m2 = sample(vec![2.0, 3.0]);
        m2.seq = 43;
        let mut bytes = encode(&m1).unwrap();
        bytes.extend(encode(&m2).unwrap());
        let mut cursor = std::io::Cursor::new(bytes);
        assert_eq!(read_frame(&mut cursor).unwrap().unwrap(), m1);
        assert_eq!(read_frame(&mut cursor).unwrap().unwrap(), m2);
        assert!(read_frame(&mut cursor).unwrap().is_none());
    }
}
