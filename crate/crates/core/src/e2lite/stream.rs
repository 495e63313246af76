use super::codec::decode_frame;
use super::{E2Error, E2Message};

/// Reassembles frames from an arbitrarily fragmented byte stream. One reader
/// per connection.
#[derive(Debug, Default)]
pub struct FrameReader {
    buf: Vec<u8>,
    start: usize,
}

impl FrameReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        if self.start > 0 && self.start == self.buf.len() {
            self.buf.clear();
            self.start = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete message, `Ok(None)` if more bytes are needed.
    pub fn next_message(&mut self) -> Result<Option<E2Message>, E2Error> {
        match decode_frame(&self.buf[self.start..]) {
            Ok((msg, used)) => {
                self.start += used;
                if self.start > 4096 && self.start * 2 > self.buf.len() {
                    self.buf.drain(..self.start);
                    self.start = 0;
                }
                Ok(Some(msg))
            }
            Err(E2Error::Truncated { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Bytes received but not yet consumed by a complete frame.
    pub fn pending(&self) -> usize {
        self.buf.len() - self.start
    }
}
