//! `TSQ1` model files:
//!
//! | field         | encoding                    |
//! |---------------|-----------------------------|
//! | magic         | `TSQ1`                      |
//! | version       | u32 LE, currently 1         |
//! | metadata      | u32 LE length + JSON bytes  |
//! | parameters    | u64 LE count + f64 LE each  |

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::features::NormManifest;
use super::net::QNet;
use super::train::TrainConfig;
use super::RlError;

const MAGIC: &[u8; 4] = b"TSQ1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub norms: NormManifest,
    pub train: TrainConfig,
    pub steps_trained: u64,
    pub dataset_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub meta: ModelMeta,
    pub net: QNet,
}

impl Model {
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), RlError> {
        let meta = serde_json::to_vec(&self.meta)?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(meta.len() as u32).to_le_bytes())?;
        w.write_all(&meta)?;
        w.write_all(&(self.net.params.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.net.params.len() * 8);
        for p in &self.net.params {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self, RlError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let bad = |m: &str| RlError::BadModel(m.to_string());
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("not a TSQ1 file"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(RlError::BadModel(format!("unsupported version {version}")));
        }
        let meta_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let meta_end = 12 + meta_len;
        if bytes.len() < meta_end + 8 {
            return Err(bad("truncated metadata"));
        }
        let meta: ModelMeta = serde_json::from_slice(&bytes[12..meta_end])?;
        let n = u64::from_le_bytes(bytes[meta_end..meta_end + 8].try_into().unwrap()) as usize;
        let body = &bytes[meta_end + 8..];
        if body.len() != n * 8 {
            return Err(bad("parameter block length mismatch"));
        }
        let params = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let net = QNet::from_params(meta.train.arch, params)?;
        Ok(Self { meta, net })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), RlError> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, RlError> {
        Self::read(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::net::Arch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> Model {
        let arch = Arch { n_cells: 2, feats_per_cell: 2, filters: 2, hidden1: 3, hidden2: 3, heads: 2, actions: 2 };
        let net = QNet::init(arch, &mut ChaCha8Rng::seed_from_u64(1));
        Model {
            meta: ModelMeta {
                norms: NormManifest::default(),
                train: TrainConfig { arch, ..TrainConfig::default() },
                steps_trained: 7,
                dataset_rows: 3,
            },
            net,
        }
    }

    #[test]
    fn round_trip_is_exact_and_deterministic() {
        let m = model();
        let mut a = Vec::new();
        m.write(&mut a).unwrap();
        let mut b = Vec::new();
        m.write(&mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(&a[..4], b"TSQ1");
        assert_eq!(Model::read(a.as_slice()).unwrap(), m);
    }

    #[test]
    fn corrupt_files_rejected() {
        let mut a = Vec::new();
        model().write(&mut a).unwrap();
        assert!(Model::read(&a[..a.len() - 1]).is_err());
        let mut b = a.clone();
        b[0] = b'X';
        assert!(Model::read(b.as_slice()).is_err());
        let mut c = a;
        c[4] = 9;
        assert!(Model::read(c.as_slice()).is_err());
    }
}
