//! Tensor file format (DLT1), run configuration, and seeded synthetic data.
//!
//! The DLT1 layout is fixed and little-endian so files are byte-identical
//! across platforms and languages:
//!
//! ```text
//! magic   4 bytes  "DLT1"
//! rank    u32 LE   always 2
//! dims    rank x u32 LE  (rows, cols)
//! dtype   u8       1 = f32 little-endian
//! payload rows*cols f32 LE, row-major
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::prng::SplitMix64;
use crate::pwl::VALID_SEGMENT_WIDTHS;
use crate::sim::SimConfig;
use crate::tensor::Tensor2D;

const MAGIC: [u8; 4] = *b"DLT1";
const DTYPE_F32_LE: u8 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 1;

/// Serializes a tensor into the DLT1 byte layout.
pub fn encode_tensor(t: &Tensor2D) -> Result<Vec<u8>> {
    // Tensors are finite on construction, but `set` is unchecked; re-validate
    // so no non-finite value ever reaches a file.
    if let Some(index) = t.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * t.data().len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&2_u32.to_le_bytes());
    buf.extend_from_slice(&(t.rows() as u32).to_le_bytes());
    buf.extend_from_slice(&(t.cols() as u32).to_le_bytes());
    buf.push(DTYPE_F32_LE);
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

/// Parses and validates the DLT1 byte layout: magic, rank, dtype, exact
/// payload length, and finiteness, in that order.
pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor2D> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let mut found = [0_u8; 4];
    found.copy_from_slice(&bytes[..4]);
    if found != MAGIC {
        return Err(Error::BadMagic { found });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let rank = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if rank != 2 {
        return Err(Error::UnsupportedRank(rank));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let dtype = bytes[16];
    if dtype != DTYPE_F32_LE {
        return Err(Error::UnsupportedDtype(dtype));
    }
    let expected_payload = 4_u64 * rows as u64 * cols as u64;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != expected_payload {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN + expected_payload as usize,
            found: bytes.len(),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Tensor2D::from_vec(rows, cols, data)
}

pub fn write_tensor(path: &Path, t: &Tensor2D) -> Result<()> {
    std::fs::write(path, encode_tensor(t)?)?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<Tensor2D> {
    decode_tensor(&std::fs::read(path)?)
}

/// Seeded uniform tensor with values in [-0.5, 0.5), drawn row-major from
/// the pinned SplitMix64 stream. Identical (rows, cols, seed) give
/// bit-identical tensors on every platform.
pub fn gen_synthetic(rows: usize, cols: usize, seed: u64) -> Tensor2D {
    assert!(rows >= 1 && cols >= 1, "tensor dims must be >= 1");
    let mut rng = SplitMix64::new(seed);
    let data = (0..rows * cols).map(|_| rng.next_f32_centered()).collect();
    Tensor2D::from_vec(rows, cols, data).expect("generator values are finite")
}

/// Fully-resolved run parameters for the simulator and data generation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ni: usize,
    pub no: usize,
    pub batch: usize,
    pub tile_size: usize,
    pub fifo_depth: usize,
    pub dma_words_per_cycle: f64,
    pub pwl_k: f64,
    pub seed: u64,
    pub clock_mhz: f64,
}

impl RunConfig {
    /// Simulator parameters implied by this run config (derived latencies).
    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.tile_size);
        cfg.fifo_depth = self.fifo_depth;
        cfg.dma_words_per_cycle = self.dma_words_per_cycle;
        cfg.clock_mhz = self.clock_mhz;
        cfg
    }
}

/// Accumulates `key = value` assignments from files and flags, then resolves
/// defaults. Later assignments win, so flag overrides are just assignments
/// applied after the file.
#[derive(Debug, Clone, Default)]
pub struct RunConfigBuilder {
    ni: Option<usize>,
    no: Option<usize>,
    batch: Option<usize>,
    tile_size: Option<usize>,
    fifo_depth: Option<usize>,
    dma_words_per_cycle: Option<f64>,
    pwl_k: Option<f64>,
    seed: Option<u64>,
    clock_mhz: Option<f64>,
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::InvalidValue {
        key: key.into(),
        value: value.trim().into(),
    })
}

impl RunConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies one assignment. Unknown keys and unparseable values are
    /// rejected by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "ni" => self.ni = Some(parse_as(key, value)?),
            "no" => self.no = Some(parse_as(key, value)?),
            "layers" => {
                let sizes: Vec<usize> = value
                    .split(',')
                    .map(|s| parse_as("layers", s))
                    .collect::<Result<_>>()?;
                if sizes.len() != 2 {
                    return Err(Error::InvalidValue {
                        key: "layers".into(),
                        value: format!("{value} (the simulator takes a single Ni x No layer)"),
                    });
                }
                self.ni = Some(sizes[0]);
                self.no = Some(sizes[1]);
            }
            "batch" => self.batch = Some(parse_as(key, value)?),
            "tile_size" => self.tile_size = Some(parse_as(key, value)?),
            "fifo_depth" => self.fifo_depth = Some(parse_as(key, value)?),
            "dma_words_per_cycle" => self.dma_words_per_cycle = Some(parse_as(key, value)?),
            "pwl_k" => self.pwl_k = Some(parse_as(key, value)?),
            "seed" => self.seed = Some(parse_as(key, value)?),
            "clock_mhz" => self.clock_mhz = Some(parse_as(key, value)?),
            other => return Err(Error::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Parses line-oriented `key = value` text. Blank lines and `#` comments
    /// are skipped.
    pub fn parse_str(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidValue {
                    key: line.into(),
                    value: "expected key = value".into(),
                });
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn parse_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.parse_str(&text)
    }

    /// Resolves defaults and validates every field. No partial config can
    /// escape: the result is a complete, checked `RunConfig` or an error.
    pub fn build(self) -> Result<RunConfig> {
        let ni = self.ni.ok_or(Error::MissingField("ni"))?;
        let no = self.no.ok_or(Error::MissingField("no"))?;
        let cfg = RunConfig {
            ni,
            no,
            batch: self.batch.unwrap_or(1),
            tile_size: self.tile_size.unwrap_or(32),
            fifo_depth: self.fifo_depth.unwrap_or(64),
            dma_words_per_cycle: self.dma_words_per_cycle.unwrap_or(32.0),
            pwl_k: self.pwl_k.unwrap_or(0.5),
            seed: self.seed.unwrap_or(1),
            clock_mhz: self.clock_mhz.unwrap_or(200.0),
        };
        for (key, v) in [
            ("ni", cfg.ni),
            ("no", cfg.no),
            ("batch", cfg.batch),
            ("tile_size", cfg.tile_size),
            ("fifo_depth", cfg.fifo_depth),
        ] {
            if v == 0 {
                return Err(Error::InvalidValue {
                    key: key.into(),
                    value: "0 (must be >= 1)".into(),
                });
            }
        }
        if cfg.dma_words_per_cycle.is_nan() || cfg.dma_words_per_cycle < 0.125 {
            return Err(Error::InvalidValue {
                key: "dma_words_per_cycle".into(),
                value: cfg.dma_words_per_cycle.to_string(),
            });
        }
        if !VALID_SEGMENT_WIDTHS.contains(&cfg.pwl_k) {
            return Err(Error::InvalidSegmentWidth(cfg.pwl_k));
        }
        if cfg.clock_mhz.is_nan() || cfg.clock_mhz <= 0.0 {
            return Err(Error::InvalidValue {
                key: "clock_mhz".into(),
                value: cfg.clock_mhz.to_string(),
            });
        }
        Ok(cfg)
    }
}

/// Loads a config from an optional file, then applies flag overrides in
/// order. This is the single entry point the CLI uses.
pub fn load_run_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut b = RunConfigBuilder::new();
    if let Some(p) = path {
        b.parse_file(p)?;
    }
    for (key, value) in overrides {
        b.set(key, value)?;
    }
    b.build()
}
