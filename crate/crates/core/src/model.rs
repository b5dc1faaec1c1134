//! Versioned model container.
//!
//! A JSON document whose bulk numeric arrays are base64-encoded
//! little-endian words, so weights round-trip bit for bit. The full synaptic
//! matrices are stored rather than the topology seed, which keeps saved
//! models valid if the random number streams ever change.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::readout::{ReadoutParams, RmsPropConfig, RmsPropState};
use crate::reservoir::{LiquidTopology, TopologyConfig};
use crate::sparse::SparseMatrix;

pub const FORMAT: &str = "lsm-model";
pub const VERSION: u32 = 1;

/// A trained agent together with everything needed to rebuild its liquid.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub steps_done: usize,
    pub topology: LiquidTopology,
    pub readout: ReadoutParams,
    pub opt: RmsPropState,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Container {
    format: String,
    version: u32,
    producer: String,
    seed: u64,
    steps_done: usize,
    config: ExperimentConfig,
    topology: TopologyBlob,
    readout: ReadoutBlob,
    rmsprop: RmsPropBlob,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyBlob {
    config: TopologyConfig,
    w_pe: SparseBlob,
    w_ee: SparseBlob,
    w_ei: SparseBlob,
    w_ie: SparseBlob,
    w_ii: SparseBlob,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseBlob {
    rows: usize,
    cols: usize,
    row_ptr: String,
    col_idx: String,
    values: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadoutBlob {
    n_in: usize,
    hidden: usize,
    actions: usize,
    params: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RmsPropBlob {
    hyper: RmsPropConfig,
    sq_avg: String,
}

fn encode_f64(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn encode_u32(values: impl IntoIterator<Item = u32>) -> String {
    let bytes: Vec<u8> = values.into_iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode_words<const N: usize>(text: &str, what: &str) -> Result<Vec<[u8; N]>> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| Error::Container(format!("{what}: {e}")))?;
    if bytes.len() % N != 0 {
        return Err(Error::Container(format!("{what}: truncated array")));
    }
    Ok(bytes
        .chunks_exact(N)
        .map(|c| c.try_into().unwrap())
        .collect())
}

fn decode_f64(text: &str, what: &str) -> Result<Vec<f64>> {
    Ok(decode_words::<8>(text, what)?
        .into_iter()
        .map(f64::from_le_bytes)
        .collect())
}

fn decode_u32(text: &str, what: &str) -> Result<Vec<u32>> {
    Ok(decode_words::<4>(text, what)?
        .into_iter()
        .map(u32::from_le_bytes)
        .collect())
}

impl SparseBlob {
    fn from_matrix(m: &SparseMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            row_ptr: encode_u32(m.row_ptr().iter().map(|&p| p as u32)),
            col_idx: encode_u32(m.col_indices().iter().copied()),
            values: encode_f64(m.values()),
        }
    }

    fn into_matrix(self, what: &str) -> Result<SparseMatrix> {
        let row_ptr = decode_u32(&self.row_ptr, what)?
            .into_iter()
            .map(|p| p as usize)
            .collect();
        SparseMatrix::from_csr(
            self.rows,
            self.cols,
            row_ptr,
            decode_u32(&self.col_idx, what)?,
            decode_f64(&self.values, what)?,
        )
    }
}

impl Model {
    pub fn to_json(&self) -> Result<String> {
        let t = &self.topology;
        if t.w_pe.nnz() > u32::MAX as usize || t.w_ee.nnz() > u32::MAX as usize {
            return Err(Error::Container(
                "matrix too large for the container".into(),
            ));
        }
        let container = Container {
            format: FORMAT.into(),
            version: VERSION,
            producer: concat!("lsm-core ", env!("CARGO_PKG_VERSION")).into(),
            seed: self.seed,
            steps_done: self.steps_done,
            config: self.config.clone(),
            topology: TopologyBlob {
                config: t.config.clone(),
                w_pe: SparseBlob::from_matrix(&t.w_pe),
                w_ee: SparseBlob::from_matrix(&t.w_ee),
                w_ei: SparseBlob::from_matrix(&t.w_ei),
                w_ie: SparseBlob::from_matrix(&t.w_ie),
                w_ii: SparseBlob::from_matrix(&t.w_ii),
            },
            readout: ReadoutBlob {
                n_in: self.readout.n_in(),
                hidden: self.readout.hidden(),
                actions: self.readout.actions(),
                params: encode_f64(self.readout.as_flat()),
            },
            rmsprop: RmsPropBlob {
                hyper: self.opt.hyper,
                sq_avg: encode_f64(self.opt.sq_avg.as_flat()),
            },
        };
        Ok(serde_json::to_string_pretty(&container)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let format = value.get("format").and_then(|v| v.as_str());
        if format != Some(FORMAT) {
            return Err(Error::Container(format!("not an {FORMAT} file")));
        }
        let version = value.get("version").and_then(|v| v.as_u64());
        if version != Some(u64::from(VERSION)) {
            return Err(Error::Container(format!(
                "unsupported container version {}, expected {VERSION}",
                version.map_or_else(|| "(missing)".to_string(), |v| v.to_string())
            )));
        }
        let c: Container = serde_json::from_value(value)?;
        let topology = LiquidTopology {
            w_pe: c.topology.w_pe.into_matrix("w_pe")?,
            w_ee: c.topology.w_ee.into_matrix("w_ee")?,
            w_ei: c.topology.w_ei.into_matrix("w_ei")?,
            w_ie: c.topology.w_ie.into_matrix("w_ie")?,
            w_ii: c.topology.w_ii.into_matrix("w_ii")?,
            config: c.topology.config,
        };
        topology
            .check_invariants()
            .map_err(|e| Error::Container(format!("topology: {e}")))?;
        let r = c.readout;
        let readout = ReadoutParams::from_flat(
            r.n_in,
            r.hidden,
            r.actions,
            decode_f64(&r.params, "readout")?,
        )?;
        let sq_avg = ReadoutParams::from_flat(
            r.n_in,
            r.hidden,
            r.actions,
            decode_f64(&c.rmsprop.sq_avg, "rmsprop")?,
        )?;
        Ok(Self {
            config: c.config,
            seed: c.seed,
            steps_done: c.steps_done,
            topology,
            readout,
            opt: RmsPropState {
                sq_avg,
                hyper: c.rmsprop.hyper,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Model {
        let config = ExperimentConfig::preset("cartpole").unwrap();
        let mut tc = config.topology.clone();
        tc.seed = 11;
        let topology = LiquidTopology::from_seed(&tc).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let readout = crate::readout::init_readout(120, 32, 2, &mut rng).unwrap();
        let mut opt = RmsPropState::new(&readout, RmsPropConfig::default());
        opt.sq_avg.as_flat_mut()[3] = 1.0 / 3.0;
        Model {
            config,
            seed: 11,
            steps_done: 42,
            topology,
            readout,
            opt,
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = sample();
        let back = Model::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bits = |p: &ReadoutParams| p.as_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.readout), bits(&m.readout));
    }

    #[test]
    fn rejects_other_versions() {
        let text = sample()
            .to_json()
            .unwrap()
            .replacen("\"version\": 1", "\"version\": 2", 1);
        let err = Model::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
        assert!(Model::from_json("{\"format\": \"other\"}").is_err());
    }

    #[test]
    fn rejects_corrupted_topology() {
        let m = sample();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["topology"]["w_ee"]["rows"] = serde_json::json!(3);
        assert!(Model::from_json(&v.to_string()).is_err());
    }
}
