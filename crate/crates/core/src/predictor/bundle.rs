//! Single-file model bundle.
//!
//! Layout:
//!
//! ```text
//! slotcast-bundle v<version>\n
//! <header as one line of JSON>\n
//! <payload: named arrays, each
//!    u16 name length | name | u8 dtype | u64 element count | little-endian data>
//! <SHA-256 of every preceding byte>
//! ```
//!
//! The version line is checked before anything else so that newer files are
//! reported as a version mismatch rather than as corruption.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{ModelBundle, TrainConfig, TrainingMetadata};
use crate::error::{Error, Result};
use crate::features::{CategoryMap, FeaturizerConfig, FeaturizerState, NumericScaler, SvdBasis, TextVectorizerState};
use crate::gbrt::Forest;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "slotcast-bundle v";
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
enum DType {
    F64 = 0,
    U32 = 1,
    U8 = 2,
}

impl DType {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(DType::F64),
            1 => Ok(DType::U32),
            2 => Ok(DType::U8),
            _ => Err(Error::CorruptBundle(format!("unknown array dtype {v}"))),
        }
    }

    fn width(self) -> usize {
        match self {
            DType::F64 => 8,
            DType::U32 => 4,
            DType::U8 => 1,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: TrainConfig,
    featurizer_config: FeaturizerConfig,
    metadata: TrainingMetadata,
    n_columns: usize,
    column_names: Vec<String>,
    vocab: Vec<String>,
    text_n_docs: usize,
    asset_keys: Vec<String>,
    asset_types: Vec<String>,
    regions: Vec<String>,
    forests: Vec<String>,
    payload_len: u64,
    payload_sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

struct PayloadWriter {
    out: Vec<u8>,
}

impl PayloadWriter {
    fn array(&mut self, name: &str, dtype: DType, count: usize, data: impl IntoIterator<Item = u8>) {
        self.out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        self.out.extend_from_slice(name.as_bytes());
        self.out.push(dtype as u8);
        self.out.extend_from_slice(&(count as u64).to_le_bytes());
        let start = self.out.len();
        self.out.extend(data);
        debug_assert_eq!(self.out.len() - start, count * dtype.width());
    }

    fn f64s(&mut self, name: &str, v: &[f64]) {
        self.array(name, DType::F64, v.len(), v.iter().flat_map(|x| x.to_le_bytes()));
    }

    fn u32s(&mut self, name: &str, v: &[u32]) {
        self.array(name, DType::U32, v.len(), v.iter().flat_map(|x| x.to_le_bytes()));
    }

    fn bytes(&mut self, name: &str, v: &[u8]) {
        self.array(name, DType::U8, v.len(), v.iter().copied());
    }
}

const FOREST_SLOTS: [&str; 3] = ["simple", "complex", "unified"];

fn forests(b: &ModelBundle) -> [(&'static str, Option<&Forest>); 3] {
    [
        (FOREST_SLOTS[0], b.simple.as_ref()),
        (FOREST_SLOTS[1], b.complex.as_ref()),
        (FOREST_SLOTS[2], b.unified.as_ref()),
    ]
}

/// The binary section: every fitted array. Independent of the creation
/// timestamp, so identical training runs produce identical payloads.
pub fn payload_bytes(bundle: &ModelBundle) -> Vec<u8> {
    let f = &bundle.featurizer;
    let mut w = PayloadWriter { out: Vec::new() };
    w.u32s("text.doc_freq", &f.text.doc_freq);
    w.f64s("text.idf", &f.text.idf);
    w.f64s("svd.components", &f.svd.components);
    w.f64s("svd.singular_values", &f.svd.singular_values);
    w.f64s("scaler.mean", &f.scaler.mean);
    w.f64s("scaler.std", &f.scaler.std);
    w.f64s("impute", &f.impute);
    for (name, forest) in forests(bundle) {
        if let Some(forest) = forest {
            w.bytes(&format!("forest.{name}"), &forest.to_bytes());
        }
    }
    w.out
}

pub fn encode_bundle(bundle: &ModelBundle) -> Result<Vec<u8>> {
    let payload = payload_bytes(bundle);
    let f = &bundle.featurizer;
    let header = Header {
        format_version: FORMAT_VERSION,
        config: bundle.config,
        featurizer_config: f.config,
        metadata: bundle.metadata.clone(),
        n_columns: f.n_columns(),
        column_names: f.column_names(),
        vocab: f.text.terms.clone(),
        text_n_docs: f.text.n_docs,
        asset_keys: f.asset_keys.clone(),
        asset_types: f.asset_types.values.clone(),
        regions: f.regions.values.clone(),
        forests: forests(bundle)
            .into_iter()
            .filter(|(_, f)| f.is_some())
            .map(|(n, _)| n.to_string())
            .collect(),
        payload_len: payload.len() as u64,
        payload_sha256: hex(&Sha256::digest(&payload)),
    };
    let json = serde_json::to_string(&header).map_err(|e| Error::CorruptBundle(e.to_string()))?;
    let mut out = format!("{MAGIC}{FORMAT_VERSION}\n{json}\n").into_bytes();
    out.extend_from_slice(&payload);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

fn split_line(bytes: &[u8]) -> Result<(&[u8], &[u8])> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::CorruptBundle("missing line terminator".into()))?;
    Ok((&bytes[..nl], &bytes[nl + 1..]))
}

/// Reads the version line, failing fast on newer formats.
fn check_version(bytes: &[u8]) -> Result<()> {
    let head = &bytes[..bytes.len().min(64)];
    let (line, _) = split_line(head).map_err(|_| Error::CorruptBundle("missing version line".into()))?;
    let line = std::str::from_utf8(line).map_err(|_| Error::CorruptBundle("version line is not UTF-8".into()))?;
    let version: u32 = line
        .strip_prefix(MAGIC)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::CorruptBundle(format!("unrecognized version line {line:?}")))?;
    if version > FORMAT_VERSION {
        return Err(Error::BundleVersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    if version == 0 {
        return Err(Error::CorruptBundle("version 0 is not a valid format".into()));
    }
    Ok(())
}

fn parse_arrays(mut p: &[u8]) -> Result<BTreeMap<String, (DType, &[u8])>> {
    let truncated = || Error::CorruptBundle("payload truncated".into());
    let mut map = BTreeMap::new();
    while !p.is_empty() {
        let name_len = u16::from_le_bytes(p.get(..2).ok_or_else(truncated)?.try_into().unwrap()) as usize;
        p = &p[2..];
        let name = std::str::from_utf8(p.get(..name_len).ok_or_else(truncated)?)
            .map_err(|_| Error::CorruptBundle("array name is not UTF-8".into()))?
            .to_string();
        p = &p[name_len..];
        let dtype = DType::from_u8(*p.first().ok_or_else(truncated)?)?;
        p = &p[1..];
        let count = u64::from_le_bytes(p.get(..8).ok_or_else(truncated)?.try_into().unwrap()) as usize;
        p = &p[8..];
        let len = count.checked_mul(dtype.width()).ok_or_else(truncated)?;
        let data = p.get(..len).ok_or_else(truncated)?;
        p = &p[len..];
        if map.insert(name.clone(), (dtype, data)).is_some() {
            return Err(Error::CorruptBundle(format!("duplicate array {name}")));
        }
    }
    Ok(map)
}

struct Arrays<'a>(BTreeMap<String, (DType, &'a [u8])>);

impl<'a> Arrays<'a> {
    fn get(&self, name: &str, want: DType) -> Result<&'a [u8]> {
        match self.0.get(name) {
            Some((d, data)) if *d == want => Ok(data),
            Some(_) => Err(Error::CorruptBundle(format!("array {name} has the wrong dtype"))),
            None => Err(Error::CorruptBundle(format!("array {name} missing"))),
        }
    }

    fn f64s(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self
            .get(name, DType::F64)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u32s(&self, name: &str) -> Result<Vec<u32>> {
        Ok(self
            .get(name, DType::U32)?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_bundle(bytes: &[u8]) -> Result<ModelBundle> {
    check_version(bytes)?;
    if bytes.len() < DIGEST_LEN {
        return Err(Error::CorruptBundle("file shorter than its checksum".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::CorruptBundle("checksum mismatch".into()));
    }

    let (_, rest) = split_line(body)?;
    let (header_line, payload) = split_line(rest)?;
    let header: Header =
        serde_json::from_slice(header_line).map_err(|e| Error::CorruptBundle(format!("header: {e}")))?;
    if header.format_version > FORMAT_VERSION {
        return Err(Error::BundleVersionMismatch {
            found: header.format_version,
            supported: FORMAT_VERSION,
        });
    }
    if header.payload_len != payload.len() as u64 || header.payload_sha256 != hex(&Sha256::digest(payload)) {
        return Err(Error::CorruptBundle("payload does not match header".into()));
    }

    let arrays = Arrays(parse_arrays(payload)?);
    let doc_freq = arrays.u32s("text.doc_freq")?;
    let idf = arrays.f64s("text.idf")?;
    if doc_freq.len() != header.vocab.len() || idf.len() != header.vocab.len() {
        return Err(Error::CorruptBundle("vocabulary arrays disagree".into()));
    }
    let mut text = TextVectorizerState::from_parts(header.vocab, doc_freq, header.text_n_docs);
    text.idf = idf;

    let n_features = text.vocab_size();
    let components = arrays.f64s("svd.components")?;
    let singular_values = arrays.f64s("svd.singular_values")?;
    if components.len() != singular_values.len() * n_features {
        return Err(Error::CorruptBundle("SVD basis has the wrong shape".into()));
    }
    let scaler = NumericScaler {
        mean: arrays.f64s("scaler.mean")?,
        std: arrays.f64s("scaler.std")?,
    };
    let width = 6 + header.asset_keys.len();
    if scaler.mean.len() != width || scaler.std.len() != width {
        return Err(Error::CorruptBundle("scaler has the wrong width".into()));
    }
    let impute = arrays.f64s("impute")?;
    if impute.len() != 7 {
        return Err(Error::CorruptBundle("impute vector has the wrong length".into()));
    }

    let featurizer = FeaturizerState {
        config: header.featurizer_config,
        text,
        svd: SvdBasis {
            n_features,
            components,
            singular_values,
        },
        impute,
        asset_keys: header.asset_keys,
        scaler,
        asset_types: CategoryMap {
            values: header.asset_types,
        },
        regions: CategoryMap { values: header.regions },
    };
    if featurizer.n_columns() != header.n_columns || featurizer.column_names() != header.column_names {
        return Err(Error::CorruptBundle("column layout disagrees with header".into()));
    }

    let mut slots: [Option<Forest>; 3] = [None, None, None];
    for name in &header.forests {
        let k = FOREST_SLOTS
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::CorruptBundle(format!("unknown forest {name}")))?;
        let forest = Forest::from_bytes(arrays.get(&format!("forest.{name}"), DType::U8)?, header.config.booster)?;
        if forest.n_features != header.n_columns {
            return Err(Error::CorruptBundle(format!("forest {name} has the wrong width")));
        }
        slots[k] = Some(forest);
    }
    let [simple, complex, unified] = slots;
    if simple.is_none() && complex.is_none() && unified.is_none() {
        return Err(Error::CorruptBundle("bundle holds no forest".into()));
    }
    Ok(ModelBundle {
        config: header.config,
        featurizer,
        simple,
        complex,
        unified,
        metadata: header.metadata,
    })
}

pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_bundle(bundle)?)?;
    Ok(())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    decode_bundle(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::model::train;
    use crate::record::QueryRecord;

    fn fixture() -> ModelBundle {
        let records: Vec<_> = (0..80)
            .map(|i| QueryRecord {
                total_bytes_processed: Some(1_000 + 977 * i as u64),
                total_slot_ms: Some(100 + 37 * i),
                region: ["us", "eu"][i as usize % 2].into(),
                ..QueryRecord::from_sql(format!("SELECT c{} FROM t{} WHERE x > {i}", i % 5, i % 3))
            })
            .collect();
        let mut c = TrainConfig::default();
        c.booster.iterations = 10;
        c.featurizer.svd.components = 4;
        train(&records, &c).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let b = fixture();
        let bytes = encode_bundle(&b).unwrap();
        let back = decode_bundle(&bytes).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn corruption_detected() {
        let bytes = encode_bundle(&fixture()).unwrap();
        let mut flipped = bytes.clone();
        let mid = bytes.len() / 2;
        flipped[mid] ^= 0x40;
        assert!(matches!(decode_bundle(&flipped), Err(Error::CorruptBundle(_))));
        assert!(matches!(decode_bundle(&bytes[..bytes.len() - 5]), Err(Error::CorruptBundle(_))));
        assert!(matches!(decode_bundle(&bytes[..10]), Err(Error::CorruptBundle(_))));
        assert!(matches!(decode_bundle(b""), Err(Error::CorruptBundle(_))));
    }

    #[test]
    fn newer_version_refused() {
        let bytes = encode_bundle(&fixture()).unwrap();
        let text = String::from_utf8_lossy(&bytes[..20]).to_string();
        assert!(text.starts_with("slotcast-bundle v1\n"));
        let mut bumped = bytes.clone();
        bumped[17] = b'2';
        assert!(matches!(
            decode_bundle(&bumped),
            Err(Error::BundleVersionMismatch { found: 2, supported: 1 })
        ));
    }
}
