//! Smart-socket framing.
//!
//! A request is four lowercase hex digits giving the payload length followed
//! by the payload. A response starts with `OKAY` or `FAIL`; a `FAIL` is
//! followed by a length-prefixed message.

use std::io::{Read, Write};

use super::{AdbError, Result};

pub const MAX_PAYLOAD: usize = 0xFFFF;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Okay,
    Fail(String),
}

pub fn encode(payload: &[u8]) -> Result<Vec<u8>> {
    if payload.len() > MAX_PAYLOAD {
        return Err(AdbError::protocol(format!(
            "payload of {} bytes exceeds the 0xffff frame limit",
            payload.len()
        )));
    }
    let mut frame = Vec::with_capacity(payload.len() + 4);
    frame.extend_from_slice(format!("{:04x}", payload.len()).as_bytes());
    frame.extend_from_slice(payload);
    Ok(frame)
}

pub fn parse_length(prefix: &[u8; 4]) -> Result<usize> {
    let text = std::str::from_utf8(prefix)
        .map_err(|_| AdbError::protocol(format!("malformed length prefix {prefix:?}")))?;
    if !text.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(AdbError::protocol(format!("malformed length prefix {text:?}")));
    }
    usize::from_str_radix(text, 16)
        .map_err(|_| AdbError::protocol(format!("malformed length prefix {text:?}")))
}

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> Result<()> {
    w.write_all(&encode(payload)?)?;
    Ok(())
}

/// Reads one length-prefixed payload.
pub fn read_frame(r: &mut impl Read) -> Result<Vec<u8>> {
    let mut prefix = [0u8; 4];
    read_exact(r, &mut prefix)?;
    let len = parse_length(&prefix)?;
    let mut payload = vec![0u8; len];
    read_exact(r, &mut payload)?;
    Ok(payload)
}

pub fn read_status(r: &mut impl Read) -> Result<Status> {
    let mut token = [0u8; 4];
    read_exact(r, &mut token)?;
    match &token {
        b"OKAY" => Ok(Status::Okay),
        b"FAIL" => {
            let message = read_frame(r)?;
            Ok(Status::Fail(String::from_utf8_lossy(&message).into_owned()))
        }
        other => Err(AdbError::protocol(format!(
            "unexpected status token {:?}",
            String::from_utf8_lossy(other)
        ))),
    }
}

pub fn write_okay(w: &mut impl Write) -> Result<()> {
    w.write_all(b"OKAY")?;
    Ok(())
}

pub fn write_fail(w: &mut impl Write, message: &str) -> Result<()> {
    let bytes = message.as_bytes();
    let bytes = &bytes[..bytes.len().min(MAX_PAYLOAD)];
    w.write_all(b"FAIL")?;
    write_frame(w, bytes)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => AdbError::protocol("connection closed mid-frame"),
        _ => AdbError::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    #[test]
    fn frames_use_lowercase_hex() {
        assert_eq!(encode(b"host:version").unwrap(), b"000chost:version");
        assert_eq!(&encode(&[0u8; 0xabc]).unwrap()[..4], b"0abc");
        assert_eq!(encode(b"").unwrap(), b"0000");
    }

    #[test]
    fn oversize_payload_is_rejected() {
        assert!(encode(&vec![0u8; MAX_PAYLOAD + 1]).is_err());
        assert!(encode(&vec![0u8; MAX_PAYLOAD]).is_ok());
    }

    #[test]
    fn malformed_prefix() {
        let err = read_frame(&mut Cursor::new(b"00zzabc".to_vec())).unwrap_err();
        assert!(matches!(err, AdbError::Protocol { .. }));
        let err = read_frame(&mut Cursor::new(b"0010abc".to_vec())).unwrap_err();
        assert!(matches!(err, AdbError::Protocol { .. }));
    }

    #[test]
    fn status_tokens() {
        assert_eq!(read_status(&mut Cursor::new(b"OKAY".to_vec())).unwrap(), Status::Okay);
        assert_eq!(
            read_status(&mut Cursor::new(b"FAIL000edevice offline".to_vec())).unwrap(),
            Status::Fail("device offline".into())
        );
        assert!(read_status(&mut Cursor::new(b"OKAX".to_vec())).is_err());
        assert!(read_status(&mut Cursor::new(b"OK".to_vec())).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn loopback_round_trip(payload in proptest::collection::vec(any::<u8>(), 0..=MAX_PAYLOAD)) {
            let mut buf = Vec::new();
            write_frame(&mut buf, &payload).unwrap();
            prop_assert_eq!(buf.len(), payload.len() + 4);
            prop_assert!(buf[..4].iter().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(b)));
            let back = read_frame(&mut Cursor::new(buf)).unwrap();
            prop_assert_eq!(back, payload);
        }

        #[test]
        fn fail_message_round_trip(msg in "[ -~]{0,200}") {
            let mut buf = Vec::new();
            write_fail(&mut buf, &msg).unwrap();
            prop_assert_eq!(read_status(&mut Cursor::new(buf)).unwrap(), Status::Fail(msg));
        }
    }
}
