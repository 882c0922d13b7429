//! Versioned little-endian binary checkpoints.
//!
//! Layout (all integers little-endian, floats as IEEE-754 bits):
//!
//! ```text
//! magic        8 bytes  "ARTCKPT\0"
//! version      u32      1
//! obs_dim      u32
//! n_hidden     u32, then n_hidden × u32 widths
//! action_dim   u32
//! episode      u64
//! stop_streak  u32
//! rng seed     32 bytes, stream u64, word_pos u128
//! target_id    u32 length + UTF-8
//! target       u32 dim + dim × f64
//! adam_t       u64
//! tensors      3 × (params, adam m, adam v), each a run of u64 length + f64s
//!              in the order of `PolicyParams::tensors`
//! checksum     u64 FNV-1a of everything above
//! ```

use std::path::Path;

use rand_chacha::ChaCha8Rng;

use crate::acoustic::SyllableEmbedding;
use crate::error::{Error, Result};
use crate::policy::{ArchConfig, PolicyParams};
use crate::ppo::Adam;

pub const MAGIC: &[u8; 8] = b"ARTCKPT\0";
pub const VERSION: u32 = 1;

/// Exact position of a ChaCha8 stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self { seed: rng.get_seed(), stream: rng.get_stream(), word_pos: rng.get_word_pos() }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub adam: Adam,
    pub rng: RngState,
    /// Episodes completed.
    pub episode: u64,
    pub stop_streak: u32,
    pub target_id: String,
    pub target: SyllableEmbedding,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("length fits in u32"));
    }
    fn floats(&mut self, vs: &[f64]) {
        for v in vs {
            self.0.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn len(&mut self, limit: usize, what: &str) -> Result<usize> {
        let n = self.u32()? as usize;
        if n > limit {
            return Err(Error::Checkpoint(format!("implausible {what} {n}")));
        }
        Ok(n)
    }
    fn floats_into(&mut self, out: &mut [f64]) -> Result<()> {
        let n = self.u64()? as usize;
        if n != out.len() {
            return Err(Error::Checkpoint(format!("tensor of {n} values where {} expected", out.len())));
        }
        for (o, chunk) in out.iter_mut().zip(self.take(8 * n)?.chunks_exact(8)) {
            *o = f64::from_bits(u64::from_le_bytes(chunk.try_into().expect("8 bytes")));
        }
        Ok(())
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(VERSION);
        let arch = &self.params.arch;
        w.len(arch.obs_dim);
        w.len(arch.hidden.len());
        for &h in &arch.hidden {
            w.len(h);
        }
        w.len(arch.action_dim);
        w.u64(self.episode);
        w.u32(self.stop_streak);
        w.0.extend_from_slice(&self.rng.seed);
        w.u64(self.rng.stream);
        w.0.extend_from_slice(&self.rng.word_pos.to_le_bytes());
        w.len(self.target_id.len());
        w.0.extend_from_slice(self.target_id.as_bytes());
        w.len(self.target.dim());
        w.floats(self.target.values());
        w.u64(self.adam.t);
        for p in [&self.params, &self.adam.m, &self.adam.v] {
            for t in p.tensors() {
                w.u64(t.len() as u64);
                w.floats(t);
            }
        }
        let sum = fnv1a(&w.0);
        w.u64(sum);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 12 || &bytes[..8] != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let mut r = Reader { buf: body, pos: 8 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}, expected {VERSION}")));
        }
        if fnv1a(body) != u64::from_le_bytes(tail.try_into().expect("8 bytes")) {
            return Err(Error::Checkpoint("checksum mismatch".into()));
        }
        const MAX_WIDTH: usize = 1 << 20;
        let obs_dim = r.len(MAX_WIDTH, "width")?;
        let n_hidden = r.len(64, "depth")?;
        let hidden = (0..n_hidden).map(|_| r.len(MAX_WIDTH, "width")).collect::<Result<Vec<_>>>()?;
        let action_dim = r.len(MAX_WIDTH, "width")?;
        let arch = ArchConfig { obs_dim, hidden, action_dim };
        let episode = r.u64()?;
        let stop_streak = r.u32()?;
        let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
        let id_len = r.len(1 << 16, "target id length")?;
        let target_id = String::from_utf8(r.take(id_len)?.to_vec())
            .map_err(|_| Error::Checkpoint("target id is not UTF-8".into()))?;
        let dim = r.len(MAX_WIDTH, "embedding dim")?;
        let mut target = vec![0.0; dim];
        let raw = r.take(8 * dim)?;
        for (o, c) in target.iter_mut().zip(raw.chunks_exact(8)) {
            *o = f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes")));
        }
        let target = SyllableEmbedding::new(target)
            .map_err(|e| Error::Checkpoint(format!("stored target: {e}")))?;
        let t = r.u64()?;

        let mut params = PolicyParams::zeros(&arch).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut m = params.zeros_like();
        let mut v = params.zeros_like();
        for p in [&mut params, &mut m, &mut v] {
            for tensor in p.tensors_mut() {
                r.floats_into(tensor)?;
            }
        }
        if r.pos != body.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", body.len() - r.pos)));
        }
        Ok(Self {
            params,
            adam: Adam { t, m, v },
            rng: RngState { seed, stream, word_pos },
            episode,
            stop_streak,
            target_id,
            target,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sample() -> Checkpoint {
        let arch = ArchConfig { obs_dim: 195, hidden: vec![8, 8], action_dim: 13 };
        let params = PolicyParams::init(11, &arch).unwrap();
        let mut adam = Adam::new(&params);
        adam.t = 17;
        adam.m.actor.layers[0].weight[[3, 4]] = -1.25e-7;
        adam.v.critic.layers[2].bias[0] = f64::MIN_POSITIVE;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..37 {
            let _: u32 = rng.random();
        }
        Checkpoint {
            params,
            adam,
            rng: RngState::capture(&rng),
            episode: 4321,
            stop_streak: 2,
            target_id: "aa".into(),
            target: SyllableEmbedding::new(vec![0.6, -0.8]).unwrap(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rng_resumes_mid_stream() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let _: u64 = a.random();
        let _: u32 = a.random();
        let mut b = RngState::capture(&a).restore();
        for _ in 0..10 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn corruption_detected() {
        let mut bytes = sample().to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::Checkpoint(_))));
        assert!(Checkpoint::from_bytes(b"nonsense").is_err());
        let mut v2 = sample().to_bytes();
        v2[8] = 2;
        let err = Checkpoint::from_bytes(&v2).unwrap_err().to_string();
        assert!(err.contains("version 2"), "{err}");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ckpt");
        sample().save(&p).unwrap();
        assert_eq!(Checkpoint::load(&p).unwrap(), sample());
    }
}
