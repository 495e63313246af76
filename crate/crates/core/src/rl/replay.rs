use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::features::{encode_state, NormManifest};
use super::reward::{compute_reward, RewardParams};
use super::RlError;
use crate::ric::DispatchedRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub ue_id: u32,
    pub s: Vec<f64>,
    /// Index of the target cell in ascending cell-id order.
    pub action: u8,
    pub reward: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// Bytes per transition in `transitions.bin` for a state of `dim` values.
pub fn record_bytes(dim: usize) -> usize {
    4 + 4 * dim + 1 + 4 + 4 * dim + 1
}

/// Little-endian fixed-size records: ue_id u32, s f32×dim, action u8,
/// reward f32, s_next f32×dim, done u8.
pub fn write_transitions_bin<W: Write>(mut w: W, rows: &[Transition]) -> Result<(), RlError> {
    let mut buf = Vec::new();
    for t in rows {
        buf.clear();
        buf.extend_from_slice(&t.ue_id.to_le_bytes());
        buf.extend(t.s.iter().flat_map(|&x| (x as f32).to_le_bytes()));
        buf.push(t.action);
        buf.extend_from_slice(&(t.reward as f32).to_le_bytes());
        buf.extend(t.s_next.iter().flat_map(|&x| (x as f32).to_le_bytes()));
        buf.push(t.done as u8);
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_transitions_bin<R: Read>(mut r: R, dim: usize) -> Result<Vec<Transition>, RlError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let size = record_bytes(dim);
    if bytes.len() % size != 0 {
        return Err(RlError::Dataset(format!("{} bytes is not a multiple of the {size}-byte record", bytes.len())));
    }
    let f32s = |b: &[u8]| -> Vec<f64> {
        b.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect()
    };
    let mut out = Vec::with_capacity(bytes.len() / size);
    for rec in bytes.chunks_exact(size) {
        let mut at = 0;
        let mut take = |n: usize| {
            let s = &rec[at..at + n];
            at += n;
            s
        };
        let ue_id = u32::from_le_bytes(take(4).try_into().unwrap());
        let s = f32s(take(4 * dim));
        let action = take(1)[0];
        let reward = f32::from_le_bytes(take(4).try_into().unwrap()) as f64;
        let s_next = f32s(take(4 * dim));
        let done = match take(1)[0] {
            0 => false,
            1 => true,
            v => return Err(RlError::Dataset(format!("bad done flag {v}"))),
        };
        if !reward.is_finite() || s.iter().chain(&s_next).any(|x| !x.is_finite()) {
            return Err(RlError::Dataset(format!("non-finite value in row {}", out.len())));
        }
        out.push(Transition { ue_id, s, action, reward, s_next, done });
    }
    Ok(out)
}

pub fn write_transitions_csv<W: Write>(w: W, rows: &[Transition]) -> Result<(), RlError> {
    let mut wr = csv::Writer::from_writer(w);
    let dim = rows.first().map_or(0, |t| t.s.len());
    let mut header = vec!["ue_id".to_string()];
    header.extend((0..dim).map(|i| format!("s{i}")));
    header.push("action".into());
    header.push("reward".into());
    header.extend((0..dim).map(|i| format!("s_next{i}")));
    header.push("done".into());
    wr.write_record(&header)?;
    for t in rows {
        let mut row = vec![t.ue_id.to_string()];
        row.extend(t.s.iter().map(|&x| (x as f32).to_string()));
        row.push(t.action.to_string());
        row.push((t.reward as f32).to_string());
        row.extend(t.s_next.iter().map(|&x| (x as f32).to_string()));
        row.push((t.done as u8).to_string());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Pairs each dispatched record with the same UE's record one report
/// period later. Records not followed by such a record yield nothing.
pub fn build_transitions(
    records: &[DispatchedRecord],
    norms: &NormManifest,
    reward: &RewardParams,
) -> Result<Vec<Transition>, RlError> {
    let mut by_ue: BTreeMap<u32, Vec<&DispatchedRecord>> = BTreeMap::new();
    for r in records {
        by_ue.entry(r.record.ue_id).or_default().push(r);
    }
    let period = reward.report_period_ms as u64;
    let mut out = Vec::new();
    for (_, mut rows) in by_ue {
        rows.sort_by_key(|r| r.record.window_end_ms);
        for pair in rows.windows(2) {
            let (cur, next) = (&pair[0].record, &pair[1].record);
            if next.window_end_ms != cur.window_end_ms + period {
                continue;
            }
            let target = pair[0].action_target_cell_id;
            let action = cur
                .action_index(target)
                .ok_or_else(|| RlError::Dataset(format!("target {target} not among the record's cells")))?;
            let ho = target != cur.serving_cell_id;
            out.push(Transition {
                ue_id: cur.ue_id,
                s: encode_state(cur, norms)?,
                action: action as u8,
                reward: compute_reward(
                    cur.reward_throughput_bps,
                    next.reward_throughput_bps,
                    ho,
                    cur.t_since_last_ho_ms as f64,
                    reward,
                ),
                s_next: encode_state(next, norms)?,
                done: false,
            });
        }
    }
    Ok(out)
}

/// Uniform-sampling replay memory with a fixed capacity.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { items: Vec::new(), capacity, next: 0 }
    }

    pub fn from_dataset(items: Vec<Transition>) -> Self {
        let capacity = items.len().max(1);
        Self { items, capacity, next: 0 }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
            self.next = (self.next + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Transition] {
        &self.items
    }

    /// `n` items drawn uniformly with replacement.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<&Transition> {
        (0..n).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ric::fixtures::record;
    use rand::SeedableRng;

    fn t(i: u32) -> Transition {
        Transition {
            ue_id: i,
            s: vec![0.25 * i as f64; 57],
            action: (i % 7) as u8,
            reward: -0.5 * i as f64,
            s_next: vec![0.125; 57],
            done: false,
        }
    }

    #[test]
    fn bin_layout_and_round_trip() {
        assert_eq!(record_bytes(57), 466);
        let rows: Vec<_> = (0..5).map(t).collect();
        let mut buf = Vec::new();
        write_transitions_bin(&mut buf, &rows).unwrap();
        assert_eq!(buf.len(), 5 * 466);
        assert_eq!(&buf[466..470], &1u32.to_le_bytes());
        assert_eq!(read_transitions_bin(buf.as_slice(), 57).unwrap(), rows);
        assert!(read_transitions_bin(&buf[..100], 57).is_err());
    }

    #[test]
    fn csv_mirror_shape() {
        let mut buf = Vec::new();
        write_transitions_csv(&mut buf, &[t(1)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 1 + 57 + 2 + 57 + 1);
        assert!(lines[1].starts_with("1,0.25,"));
    }

    #[test]
    fn pairing_skips_gaps() {
        let mk = |ue, t, serving, action| DispatchedRecord { record: record(ue, t, serving, [0.0; 7]), action_target_cell_id: action };
        let mut rows = vec![mk(1, 100, 1, 3), mk(1, 200, 3, 3), mk(1, 400, 3, 3), mk(2, 100, 2, 2), mk(2, 200, 2, 2)];
        rows[1].record.reward_throughput_bps = 2e6;
        let tr = build_transitions(&rows, &NormManifest::default(), &RewardParams::default()).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!((tr[0].ue_id, tr[0].action), (1, 2));
        // HO with t − t' = 100 ms: ln 2 − e^{−0.1}.
        assert!((tr[0].reward - (2f64.ln() - (-0.1f64).exp())).abs() < 1e-12);
        assert_eq!((tr[1].ue_id, tr[1].action, tr[1].reward), (2, 1, 0.0));
        assert!(tr.iter().all(|t| !t.done));
    }

    #[test]
    fn buffer_ring_and_sampling() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(t(i));
        }
        let ids: Vec<u32> = b.items().iter().map(|t| t.ue_id).collect();
        assert_eq!(ids, vec![3, 4, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(b.sample(32, &mut rng).len(), 32);
    }
}
