//! A trained scorer bundled with everything needed to encode new data, and
//! its on-disk container.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! "VIZRECMODEL" | u32 version | u64 header length | header JSON
//! | u32 tensor count | { u32 name length | name | u64 length | f64 values }*
//! | 32-byte SHA-256 of everything before it
//! ```
//!
//! Floating-point data never goes through JSON so that a save/load round trip
//! is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoding::{
    cross_products, encode_visualization, CrossProductSpec, DatasetFeatures, EncodingLayout,
    DEFAULT_BINS, DEFAULT_EMBEDDING_DIM,
};
use crate::error::{Error, Result};
use crate::metafeatures::{MetaFeatureSchema, Normalizer};
use crate::net::{Activation, Example, NetShape, Network, Params, Variant, DEFAULT_HIDDEN};
use crate::tabular::Dataset;
use crate::vis_space::{ConfigVocabulary, Visualization, DEFAULT_MAX_ARITY};

pub const MODEL_MAGIC: &[u8; 11] = b"VIZRECMODEL";
pub const MODEL_FORMAT_VERSION: u32 = 1;
const SCORE_BATCH: usize = 256;

/// Architecture knobs fixed at model creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelHyperparams {
    pub max_arity: usize,
    pub bins: usize,
    pub embedding_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub variant: Variant,
}

impl Default for ModelHyperparams {
    fn default() -> Self {
        ModelHyperparams {
            max_arity: DEFAULT_MAX_ARITY,
            bins: DEFAULT_BINS,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            hidden: DEFAULT_HIDDEN.to_vec(),
            activation: Activation::Relu,
            variant: Variant::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WideDeepModel {
    pub net: Network,
    pub schema: MetaFeatureSchema,
    pub normalizer: Normalizer,
    pub vocab: ConfigVocabulary,
    pub cross_spec: CrossProductSpec,
    pub layout: EncodingLayout,
    pub hyper: ModelHyperparams,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: MetaFeatureSchema,
    vocab: serde_json::Value,
    vocab_sha256: String,
    cross_masks: Vec<Vec<u32>>,
    layout: EncodingLayout,
    shape: NetShape,
    hyper: ModelHyperparams,
}

impl WideDeepModel {
    pub fn init(
        schema: MetaFeatureSchema,
        normalizer: Normalizer,
        vocab: ConfigVocabulary,
        cross_spec: CrossProductSpec,
        hyper: ModelHyperparams,
        seed: u64,
    ) -> Result<Self> {
        schema.validate()?;
        if normalizer.dim() != schema.k {
            return Err(Error::SchemaMismatch {
                expected: schema.k,
                actual: normalizer.dim(),
            });
        }
        let layout = EncodingLayout {
            k: schema.k,
            max_arity: hyper.max_arity,
            bins: hyper.bins,
            vocab_len: vocab.len(),
        };
        if let Some(max) = cross_spec.max_index() {
            if max as usize >= layout.s_len() {
                return Err(Error::IndexOutOfRange {
                    index: max as usize,
                    len: layout.s_len(),
                });
            }
        }
        let shape = NetShape {
            wide_len: layout.s_len() + cross_spec.len(),
            vocab_len: vocab.len(),
            embedding_dim: hyper.embedding_dim,
            dx_len: layout.dx_len(),
            hidden: hyper.hidden.clone(),
            activation: hyper.activation,
        };
        let net = Network::init(shape, hyper.variant, seed)?;
        Ok(WideDeepModel {
            net,
            schema,
            normalizer,
            vocab,
            cross_spec,
            layout,
            hyper,
        })
    }

    pub fn dataset_features(&self, dataset: &Dataset) -> Result<DatasetFeatures> {
        DatasetFeatures::compute(dataset, &self.schema, &self.normalizer)
    }

    pub fn example(&self, vis: &Visualization, features: &DatasetFeatures) -> Result<Example> {
        let bundle = encode_visualization(vis, features, &self.vocab, &self.layout)?;
        let cross = cross_products(&bundle.sparse(), &self.cross_spec)?;
        Ok(Example::from_bundle(&bundle, &cross))
    }

    pub fn score(&self, vis: &Visualization, features: &DatasetFeatures) -> Result<f64> {
        self.net.forward(&self.example(vis, features)?)
    }

    /// Scores of candidates drawn from a single dataset.
    pub fn score_candidates(
        &self,
        features: &DatasetFeatures,
        candidates: &[Visualization],
    ) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(candidates.len());
        for chunk in candidates.chunks(SCORE_BATCH) {
            let examples = chunk
                .iter()
                .map(|v| self.example(v, features))
                .collect::<Result<Vec<_>>>()?;
            out.extend(self.net.scores(&examples, SCORE_BATCH)?);
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            schema: self.schema.clone(),
            vocab: serde_json::from_str(&self.vocab.to_json())
                .expect("vocabulary serializes to JSON"),
            vocab_sha256: self.vocab.content_hash(),
            cross_masks: self.cross_spec.masks().to_vec(),
            layout: self.layout,
            shape: self.net.shape.clone(),
            hyper: self.hyper.clone(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut tensors: Vec<(String, &[f64])> = vec![
            ("normalizer.min".into(), &self.normalizer.min),
            ("normalizer.max".into(), &self.normalizer.max),
        ];
        tensors.extend(
            self.net
                .params
                .tensor_names()
                .into_iter()
                .zip(self.net.params.tensors()),
        );

        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, values) in tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MODEL_MAGIC.len())? != MODEL_MAGIC {
            return Err(Error::CorruptFile("missing model magic".into()));
        }
        let version = r.u32()?;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        if bytes.len() < r.pos + 32 {
            return Err(Error::CorruptFile("file truncated".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        let header_len = r.u64()? as usize;
        let header: Header = serde_json::from_slice(r.take(header_len)?)
            .map_err(|e| Error::CorruptFile(format!("unreadable header: {e}")))?;
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::CorruptFile("checksum mismatch".into()));
        }
        if header.schema.version != crate::metafeatures::SCHEMA_VERSION {
            return Err(Error::VersionMismatch {
                found: header.schema.version,
                expected: crate::metafeatures::SCHEMA_VERSION,
            });
        }
        let vocab = ConfigVocabulary::from_json(&header.vocab.to_string())?;
        if vocab.content_hash() != header.vocab_sha256 {
            return Err(Error::CorruptFile("vocabulary hash mismatch".into()));
        }
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::CorruptFile("tensor name is not UTF-8".into()))?;
            let len = r.u64()? as usize;
            let raw = r.take(
                len.checked_mul(8)
                    .ok_or_else(|| Error::CorruptFile("tensor too large".into()))?,
            )?;
            let values: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            tensors.push((name, values));
        }
        if r.pos != body.len() {
            return Err(Error::CorruptFile("trailing bytes after tensors".into()));
        }

        let mut params = Params::zeros(&header.shape);
        let mut expected = vec!["normalizer.min".to_string(), "normalizer.max".to_string()];
        expected.extend(params.tensor_names());
        let names: Vec<&str> = tensors.iter().map(|(n, _)| n.as_str()).collect();
        if names != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::CorruptFile(format!(
                "unexpected tensor list {names:?}"
            )));
        }
        let mut iter = tensors.into_iter();
        let normalizer = Normalizer {
            min: iter.next().expect("checked").1,
            max: iter.next().expect("checked").1,
        };
        for (slot, (name, values)) in params.tensors_mut().into_iter().zip(iter) {
            if slot.len() != values.len() {
                return Err(Error::CorruptFile(format!(
                    "tensor {name} has {} values, expected {}",
                    values.len(),
                    slot.len()
                )));
            }
            slot.copy_from_slice(&values);
        }
        if normalizer.dim() != header.schema.k {
            return Err(Error::CorruptFile(
                "normalizer width does not match schema".into(),
            ));
        }
        let cross_spec = CrossProductSpec::new(header.cross_masks)?;
        Ok(WideDeepModel {
            net: Network {
                shape: header.shape,
                variant: header.hyper.variant,
                params,
            },
            schema: header.schema,
            normalizer,
            vocab,
            cross_spec,
            layout: header.layout,
            hyper: header.hyper,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptFile("file truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}
