//! Model checkpoints.
//!
//! ```text
//! magic "CKPT" version:u16
//! config: input_dim num_heads ffn_dim num_layers depthwise_kernel cqt_bins max_len (u32 each)
//!         dropout:f64 component_sizes: u16[6]
//! vocab_hash:u64 epoch:u32
//! tensors: count:u32, then per tensor name(u16 len + utf-8) kind:u8 ndim:u8 dims:u32[ndim] f32 data
//! optimizer: flag:u8, then step:u64 lr beta1 beta2 eps weight_decay (f64) len:u32 m:f32[len] v:f32[len]
//! crc32 of everything above: u32
//! ```

use std::path::Path;

use chordkit_core::conformer::{ModelConfig, ModelParams};
use chordkit_core::harness::{AdamW, AdamWConfig};

use crate::bytes::{put_str, Reader};
use crate::error::{format_err, IoContext, Result};

pub const MAGIC: &[u8; 4] = b"CKPT";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub params: ModelParams<f32>,
    pub vocab_hash: u64,
    pub epoch: u32,
    pub optimizer: Option<AdamW<f32>>,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let c = self.params.config();
        for v in [c.input_dim, c.num_heads, c.ffn_dim, c.num_layers, c.depthwise_kernel, c.cqt_bins, c.max_len] {
            put_u32(&mut out, v);
        }
        out.extend_from_slice(&c.dropout.to_le_bytes());
        for s in c.component_sizes {
            out.extend_from_slice(&(s as u16).to_le_bytes());
        }
        out.extend_from_slice(&self.vocab_hash.to_le_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        let tensors = self.params.tensors();
        put_u32(&mut out, tensors.len());
        for t in tensors {
            put_str(&mut out, &t.name);
            out.push(t.is_buffer as u8);
            out.push(t.shape.len() as u8);
            for &d in &t.shape {
                put_u32(&mut out, d);
            }
            for v in self.params.get(&t.name).expect("listed tensor") {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        match &self.optimizer {
            None => out.push(0),
            Some(o) => {
                out.push(1);
                out.extend_from_slice(&o.step.to_le_bytes());
                for v in [o.lr, o.config.beta1, o.config.beta2, o.config.eps, o.config.weight_decay] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                put_u32(&mut out, o.m.len());
                for v in o.m.iter().chain(&o.v) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 4 {
            return Err("truncated file".into());
        }
        let (body, footer) = bytes.split_at(bytes.len() - 4);
        let mut r = Reader::new(body);
        if r.take(4)? != MAGIC {
            return Err("not a checkpoint (bad magic)".into());
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(format!("unsupported checkpoint version {version}"));
        }
        if crc32fast::hash(body) != u32::from_le_bytes(footer.try_into().unwrap()) {
            return Err("checksum mismatch".into());
        }
        let mut dims = [0usize; 7];
        for d in &mut dims {
            *d = r.u32()? as usize;
        }
        let dropout = r.f64()?;
        let mut component_sizes = [0usize; 6];
        for s in &mut component_sizes {
            *s = r.u16()? as usize;
        }
        let [input_dim, num_heads, ffn_dim, num_layers, depthwise_kernel, cqt_bins, max_len] = dims;
        let config = ModelConfig {
            input_dim,
            num_heads,
            ffn_dim,
            num_layers,
            depthwise_kernel,
            cqt_bins,
            max_len,
            dropout,
            component_sizes,
        };
        let mut params = ModelParams::<f32>::zeros(&config).map_err(|e| format!("invalid config: {e}"))?;
        let vocab_hash = r.u64()?;
        let epoch = r.u32()?;
        let count = r.u32()? as usize;
        if count != params.tensors().len() {
            return Err(format!("expected {} tensors, found {count}", params.tensors().len()));
        }
        for _ in 0..count {
            let name = r.str()?;
            let is_buffer = r.u8()? != 0;
            let ndim = r.u8()? as usize;
            let shape = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
            let info = params.tensor(&name).ok_or_else(|| format!("unknown tensor {name}"))?;
            if info.shape != shape || info.is_buffer != is_buffer {
                return Err(format!("tensor {name}: expected shape {:?}, found {shape:?}", info.shape));
            }
            let n = shape.iter().product();
            let data = r.f32s(n)?;
            params.get_mut(&name).expect("known tensor").copy_from_slice(&data);
        }
        let optimizer = match r.u8()? {
            0 => None,
            1 => {
                let step = r.u64()?;
                let lr = r.f64()?;
                let config = AdamWConfig { beta1: r.f64()?, beta2: r.f64()?, eps: r.f64()?, weight_decay: r.f64()? };
                let len = r.u32()? as usize;
                if len != params.len() {
                    return Err(format!("optimizer state covers {len} values, model has {}", params.len()));
                }
                let m = r.f32s(len)?;
                let v = r.f32s(len)?;
                Some(AdamW { config, lr, step, m, v })
            }
            f => return Err(format!("bad optimizer flag {f}")),
        };
        r.finish()?;
        Ok(Checkpoint { params, vocab_hash, epoch, optimizer })
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, ckpt.encode()).at(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).at(path)?;
    Checkpoint::decode(&bytes).map_err(|m| format_err(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Checkpoint {
        let config = ModelConfig {
            input_dim: 8,
            num_heads: 2,
            ffn_dim: 12,
            num_layers: 1,
            depthwise_kernel: 3,
            cqt_bins: 10,
            max_len: 5,
            ..ModelConfig::default()
        };
        let mut params = ModelParams::<f32>::init(&config, 3).unwrap();
        params.buffers.iter_mut().enumerate().for_each(|(i, b)| *b = i as f32 * 0.25);
        let mut opt = AdamW::<f32>::new(params.len(), 1e-3, AdamWConfig::default());
        let grads: Vec<f32> = (0..params.len()).map(|i| (i as f32).sin()).collect();
        opt.update(&mut params.values, &grads).unwrap();
        Checkpoint { params, vocab_hash: 42, epoch: 7, optimizer: Some(opt) }
    }

    #[test]
    fn round_trip_is_exact() {
        let c = small();
        let d = Checkpoint::decode(&c.encode()).unwrap();
        assert_eq!(d.params.values, c.params.values);
        assert_eq!(d.params.buffers, c.params.buffers);
        assert_eq!(d.params.config(), c.params.config());
        assert_eq!(d.optimizer, c.optimizer);
        assert_eq!((d.vocab_hash, d.epoch), (42, 7));
        let bare = Checkpoint { optimizer: None, ..small() };
        assert!(Checkpoint::decode(&bare.encode()).unwrap().optimizer.is_none());
    }

    #[test]
    fn detects_corruption() {
        let mut bytes = small().encode();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 1;
        assert!(Checkpoint::decode(&bytes).unwrap_err().contains("checksum"));
        let bytes = small().encode();
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 9]).is_err());
        let mut bad = small().encode();
        bad[1] = b'X';
        assert!(Checkpoint::decode(&bad).unwrap_err().contains("magic"));
    }
}
