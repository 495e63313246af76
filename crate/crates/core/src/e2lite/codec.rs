use super::{E2Error, E2Message, MsgType, Payload, HEADER_LEN, MAGIC, VERSION};
use crate::sim::{CellKpm, KpmReport, UeKpm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub msg_type: MsgType,
    pub node_id: u32,
    pub timestamp_ms: u64,
    pub payload_len: u32,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) -> Result<(), E2Error> {
        self.u32(u32::try_from(n).map_err(|_| E2Error::PayloadTooLarge(n))?);
        Ok(())
    }
    fn str(&mut self, s: &str) -> Result<(), E2Error> {
        self.len(s.len())?;
        self.0.extend_from_slice(s.as_bytes());
        Ok(())
    }
}

fn encode_payload(p: &Payload) -> Result<Vec<u8>, E2Error> {
    let mut w = Writer(Vec::new());
    match p {
        Payload::SubscriptionRequest { report_period_ms, kpm_names } => {
            w.u32(*report_period_ms);
            w.len(kpm_names.len())?;
            for name in kpm_names {
                w.str(name)?;
            }
        }
        Payload::SubscriptionAck => {}
        Payload::KpmIndication(r) => {
            w.u64(r.window_end_ms);
            let c = &r.cell;
            w.u32(c.cell_id);
            w.f64(c.prb_util_pct);
            w.u32(c.active_ues);
            w.u32(c.tb_count);
            w.f64(c.share_qpsk);
            w.f64(c.share_16qam);
            w.f64(c.share_64qam);
            w.len(r.ues.len())?;
            for ue in &r.ues {
                w.u32(ue.ue_id);
                w.f64(ue.pdcp_throughput_bps);
                w.len(ue.sinr_db_by_cell.len())?;
                for &(cell, sinr) in &ue.sinr_db_by_cell {
                    w.u32(cell);
                    w.f64(sinr);
                }
            }
        }
        Payload::RicControl { ue_id, target_cell_id } | Payload::ControlAck { ue_id, target_cell_id } => {
            w.u32(*ue_id);
            w.u32(*target_cell_id);
        }
    }
    Ok(w.0)
}

/// Canonical frame bytes for `msg`.
pub fn encode_message(msg: &E2Message) -> Result<Vec<u8>, E2Error> {
    let payload = encode_payload(&msg.payload)?;
    let len = u32::try_from(payload.len()).map_err(|_| E2Error::PayloadTooLarge(payload.len()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg.payload.msg_type() as u8);
    out.extend_from_slice(&msg.node_id.to_le_bytes());
    out.extend_from_slice(&msg.timestamp_ms.to_le_bytes());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Validates and parses the header at the start of `bytes`.
pub fn peek_header(bytes: &[u8]) -> Result<Header, E2Error> {
    // Check the magic as soon as it is available so a corrupt stream fails fast.
    let m = bytes.len().min(4);
    if bytes[..m] != MAGIC[..m] {
        let mut got = [0u8; 4];
        got[..m].copy_from_slice(&bytes[..m]);
        return Err(E2Error::BadMagic(got));
    }
    if bytes.len() < HEADER_LEN {
        return Err(E2Error::Truncated { needed: HEADER_LEN, available: bytes.len() });
    }
    if bytes[4] != VERSION {
        return Err(E2Error::BadVersion(bytes[4]));
    }
    let msg_type = MsgType::from_u8(bytes[5]).ok_or(E2Error::UnknownType(bytes[5]))?;
    Ok(Header {
        msg_type,
        node_id: u32::from_le_bytes(bytes[6..10].try_into().unwrap()),
        timestamp_ms: u64::from_le_bytes(bytes[10..18].try_into().unwrap()),
        payload_len: u32::from_le_bytes(bytes[18..22].try_into().unwrap()),
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], E2Error> {
        let end = self.pos + n;
        if end > self.buf.len() {
            // A field running past the declared payload means the length is wrong.
            return Err(E2Error::LengthMismatch { declared: self.buf.len(), parsed: end });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32, E2Error> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, E2Error> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, E2Error> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn count(&mut self, min_item: usize) -> Result<usize, E2Error> {
        let n = self.u32()? as usize;
        // Guards against absurd counts before allocating.
        let left = self.buf.len() - self.pos;
        if n.saturating_mul(min_item) > left {
            return Err(E2Error::LengthMismatch { declared: self.buf.len(), parsed: self.pos + n * min_item });
        }
        Ok(n)
    }
    fn str(&mut self) -> Result<String, E2Error> {
        let n = self.count(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| E2Error::InvalidUtf8)
    }
}

fn decode_payload(t: MsgType, node_id: u32, bytes: &[u8]) -> Result<Payload, E2Error> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let p = match t {
        MsgType::SubscriptionRequest => {
            let report_period_ms = r.u32()?;
            let n = r.count(4)?;
            let kpm_names = (0..n).map(|_| r.str()).collect::<Result<_, _>>()?;
            Payload::SubscriptionRequest { report_period_ms, kpm_names }
        }
        MsgType::SubscriptionAck => Payload::SubscriptionAck,
        MsgType::KpmIndication => {
            let window_end_ms = r.u64()?;
            let cell = CellKpm {
                cell_id: r.u32()?,
                prb_util_pct: r.f64()?,
                active_ues: r.u32()?,
                tb_count: r.u32()?,
                share_qpsk: r.f64()?,
                share_16qam: r.f64()?,
                share_64qam: r.f64()?,
            };
            let n = r.count(16)?;
            let mut ues = Vec::with_capacity(n);
            for _ in 0..n {
                let ue_id = r.u32()?;
                let pdcp_throughput_bps = r.f64()?;
                let m = r.count(12)?;
                let sinr_db_by_cell = (0..m).map(|_| Ok((r.u32()?, r.f64()?))).collect::<Result<_, E2Error>>()?;
                ues.push(UeKpm { ue_id, pdcp_throughput_bps, sinr_db_by_cell });
            }
            Payload::KpmIndication(KpmReport { node_id, window_end_ms, cell, ues })
        }
        MsgType::RicControl => Payload::RicControl { ue_id: r.u32()?, target_cell_id: r.u32()? },
        MsgType::ControlAck => Payload::ControlAck { ue_id: r.u32()?, target_cell_id: r.u32()? },
    };
    if r.pos != bytes.len() {
        return Err(E2Error::LengthMismatch { declared: bytes.len(), parsed: r.pos });
    }
    Ok(p)
}

/// Decodes the first frame of `bytes`, returning the message and the number
/// of bytes it occupied. Trailing bytes are left untouched.
pub fn decode_frame(bytes: &[u8]) -> Result<(E2Message, usize), E2Error> {
    let h = peek_header(bytes)?;
    let total = HEADER_LEN + h.payload_len as usize;
    if bytes.len() < total {
        return Err(E2Error::Truncated { needed: total, available: bytes.len() });
    }
    let payload = decode_payload(h.msg_type, h.node_id, &bytes[HEADER_LEN..total])?;
    Ok((E2Message { node_id: h.node_id, timestamp_ms: h.timestamp_ms, payload }, total))
}

/// Decodes exactly one frame; trailing bytes are a length mismatch.
pub fn decode_message(bytes: &[u8]) -> Result<E2Message, E2Error> {
    let (msg, used) = decode_frame(bytes)?;
    if used != bytes.len() {
        return Err(E2Error::LengthMismatch { declared: used, parsed: bytes.len() });
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ack(node: u32) -> E2Message {
        E2Message::new(node, 0, Payload::SubscriptionAck)
    }

    fn report() -> E2Message {
        let r = KpmReport {
            node_id: 3,
            window_end_ms: 1200,
            cell: CellKpm {
                cell_id: 3,
                prb_util_pct: 42.5,
                active_ues: 2,
                tb_count: 150,
                share_qpsk: 0.25,
                share_16qam: 0.5,
                share_64qam: 0.25,
            },
            ues: vec![UeKpm { ue_id: 9, pdcp_throughput_bps: 1.5e6, sinr_db_by_cell: vec![(1, -3.0), (3, 12.25)] }],
        };
        E2Message::new(3, 1_700_000_001_200, Payload::KpmIndication(r))
    }

    #[test]
    fn subscription_ack_layout() {
        let b = encode_message(&ack(7)).unwrap();
        let mut want = b"E2LT".to_vec();
        want.extend_from_slice(&[1, 2, 7, 0, 0, 0]);
        want.extend_from_slice(&[0; 8]);
        want.extend_from_slice(&[0; 4]);
        assert_eq!(b, want);
        assert_eq!(b.len(), HEADER_LEN);
    }

    #[test]
    fn round_trip_and_determinism() {
        let m = report();
        let a = encode_message(&m).unwrap();
        assert_eq!(a, encode_message(&m).unwrap());
        assert_eq!(decode_message(&a).unwrap(), m);
    }

    #[test]
    fn error_variants() {
        let good = encode_message(&report()).unwrap();

        let mut b = good.clone();
        b[3] = b'X';
        assert_eq!(decode_message(&b), Err(E2Error::BadMagic(*b"E2LX")));

        let mut b = good.clone();
        b[4] = 2;
        assert_eq!(decode_message(&b), Err(E2Error::BadVersion(2)));

        let mut b = good.clone();
        b[5] = 9;
        assert_eq!(decode_message(&b), Err(E2Error::UnknownType(9)));

        assert!(matches!(decode_message(&good[..good.len() - 5]), Err(E2Error::Truncated { .. })));
        assert!(matches!(decode_message(&good[..10]), Err(E2Error::Truncated { .. })));

        let mut b = good.clone();
        b.push(0);
        assert!(matches!(decode_message(&b), Err(E2Error::LengthMismatch { .. })));

        // Declared length shorter than the encoded payload.
        let mut b = good;
        let len = u32::from_le_bytes(b[18..22].try_into().unwrap()) - 4;
        b[18..22].copy_from_slice(&len.to_le_bytes());
        b.truncate(HEADER_LEN + len as usize);
        assert!(matches!(decode_message(&b), Err(E2Error::LengthMismatch { .. })));
    }

    #[test]
    fn empty_ack_payload_with_extra_bytes_rejected() {
        let mut b = encode_message(&ack(1)).unwrap();
        b[18] = 1;
        b.push(0xff);
        assert_eq!(decode_message(&b), Err(E2Error::LengthMismatch { declared: 1, parsed: 0 }));
    }

    #[test]
    fn huge_count_does_not_allocate() {
        let mut b = encode_message(&E2Message::new(
            1,
            0,
            Payload::SubscriptionRequest { report_period_ms: 100, kpm_names: vec![] },
        ))
        .unwrap();
        b[HEADER_LEN + 4..HEADER_LEN + 8].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(decode_message(&b), Err(E2Error::LengthMismatch { .. })));
    }

    #[test]
    fn bad_utf8() {
        let mut b = encode_message(&E2Message::new(
            1,
            0,
            Payload::SubscriptionRequest { report_period_ms: 100, kpm_names: vec!["ab".into()] },
        ))
        .unwrap();
        let n = b.len();
        b[n - 1] = 0xff;
        assert_eq!(decode_message(&b), Err(E2Error::InvalidUtf8));
    }
}
