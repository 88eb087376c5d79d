//! Binary dataset/model containers and the CSV emitters.
//!
//! All integers and floats are little-endian. Byte layouts:
//!
//! Dataset file (extension `.dybs`):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DYBS"
//! 4       2     format version, u16 = 1
//! 6       4     event count, u32
//! 10      769*  per event: u8 class index, then 192 f32 raw charges
//!               (row-major 8x24)
//! ```
//!
//! Model container (extension `.nlns`):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "NLNS"
//! 4       2     format version, u16 = 1
//! 6       1     model kind: 0 cnn, 1 cae, 2 knn, 3 svm
//! 7       ...   kind-specific payload (below)
//! ```
//!
//! Network payload (kinds 0 and 1): input extent as three u32 (channels,
//! height, width), u8 layer count, one spec record per layer, then every
//! layer's parameters in order (weights then biases) as raw f64. Spec
//! records start with a tag byte: 0 conv (8 u32 fields: in, out, kh, kw,
//! sh, sw, ph, pw, then u8 activation), 1 pool (no fields), 2 dense
//! (2 u32: in, out, then u8 activation), 3 transposed conv (5 u32: in,
//! out, kh, kw, stride, then u8 activation). Activation codes: 0 none,
//! 1 tanh, 2 relu, 3 softmax.
//!
//! k-NN payload (kind 2): u32 k, u32 count, u32 dim, count label bytes,
//! then count*dim f64 vectors. SVM payload (kind 3): u32 dim, five blocks
//! of (f64 bias, dim f64 weights), f64 lambda, u32 epochs, u64 seed.
//!
//! Every format round-trips bit-exactly: write -> read -> write produces
//! identical bytes.

use std::fs;
use std::path::Path;

use crate::baselines::{KnnModel, SvmModel};
use crate::error::{Error, Result};
use crate::layers::{Activation, Layer, LayerSpec};
use crate::models::{Model, ModelKind};
use crate::synth::{EventGrid, EventLabel, PMT_COUNT};
use crate::tsne::Embedding;

pub const DATASET_MAGIC: &[u8; 4] = b"DYBS";
pub const MODEL_MAGIC: &[u8; 4] = b"NLNS";
pub const FORMAT_VERSION: u16 = 1;

const KIND_CNN: u8 = 0;
const KIND_CAE: u8 = 1;
const KIND_KNN: u8 = 2;
const KIND_SVM: u8 = 3;

// ---------------------------------------------------------------------
// little-endian cursor helpers

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Reader<'a> {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated file: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after offset {}",
                self.bytes.len() - self.pos,
                self.pos
            )));
        }
        Ok(())
    }
}

fn push_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

// ---------------------------------------------------------------------
// dataset files

pub fn dataset_bytes(grids: &[EventGrid], labels: &[EventLabel]) -> Result<Vec<u8>> {
    if grids.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} grids vs {} labels",
            grids.len(),
            labels.len()
        )));
    }
    let mut out = Vec::with_capacity(10 + grids.len() * (1 + 4 * PMT_COUNT));
    out.extend_from_slice(DATASET_MAGIC);
    push_u16(&mut out, FORMAT_VERSION);
    push_u32(&mut out, grids.len() as u32);
    for (grid, label) in grids.iter().zip(labels) {
        out.push(label.index() as u8);
        for &q in grid.values() {
            out.extend_from_slice(&(q as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn parse_dataset(bytes: &[u8]) -> Result<(Vec<EventGrid>, Vec<EventLabel>)> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != DATASET_MAGIC {
        return Err(Error::Format("not a dataset file (bad magic)".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset version {version}"
        )));
    }
    let count = r.u32()? as usize;
    let expected = 10 + count * (1 + 4 * PMT_COUNT);
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "dataset length {} does not match {count} events (expected {expected})",
            bytes.len()
        )));
    }
    let mut grids = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        labels.push(
            EventLabel::from_index(r.u8()? as usize)
                .map_err(|e| Error::Format(e.message().to_string()))?,
        );
        let mut values = Vec::with_capacity(PMT_COUNT);
        for _ in 0..PMT_COUNT {
            values.push(r.f32()? as f64);
        }
        grids.push(
            EventGrid::from_values(values).map_err(|e| Error::Format(e.message().to_string()))?,
        );
    }
    r.finish()?;
    Ok((grids, labels))
}

pub fn write_dataset(path: &Path, grids: &[EventGrid], labels: &[EventLabel]) -> Result<()> {
    fs::write(path, dataset_bytes(grids, labels)?)
        .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}

pub fn read_dataset(path: &Path) -> Result<(Vec<EventGrid>, Vec<EventLabel>)> {
    let bytes =
        fs::read(path).map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
    parse_dataset(&bytes)
}

// ---------------------------------------------------------------------
// model container

/// Any model the container can hold.
#[derive(Debug, Clone)]
pub enum StoredModel {
    Network(Model),
    Knn(KnnModel),
    Svm(SvmModel),
}

impl StoredModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            StoredModel::Network(m) => m.kind().name(),
            StoredModel::Knn(_) => "knn",
            StoredModel::Svm(_) => "svm",
        }
    }
}

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::None => 0,
        Activation::Tanh => 1,
        Activation::Relu => 2,
        Activation::Softmax => 3,
    }
}

fn activation_from_code(code: u8) -> Result<Activation> {
    Ok(match code {
        0 => Activation::None,
        1 => Activation::Tanh,
        2 => Activation::Relu,
        3 => Activation::Softmax,
        other => return Err(Error::Format(format!("unknown activation code {other}"))),
    })
}

fn push_spec(out: &mut Vec<u8>, spec: &LayerSpec) {
    match *spec {
        LayerSpec::Conv {
            in_channels,
            out_channels,
            kernel,
            stride,
            pad,
            activation,
        } => {
            out.push(0);
            for v in [
                in_channels,
                out_channels,
                kernel.0,
                kernel.1,
                stride.0,
                stride.1,
                pad.0,
                pad.1,
            ] {
                push_u32(out, v as u32);
            }
            out.push(activation_code(activation));
        }
        LayerSpec::MaxPool => out.push(1),
        LayerSpec::Dense {
            in_units,
            out_units,
            activation,
        } => {
            out.push(2);
            push_u32(out, in_units as u32);
            push_u32(out, out_units as u32);
            out.push(activation_code(activation));
        }
        LayerSpec::TransposedConv {
            in_channels,
            out_channels,
            kernel,
            stride,
            activation,
        } => {
            out.push(3);
            for v in [in_channels, out_channels, kernel.0, kernel.1, stride] {
                push_u32(out, v as u32);
            }
            out.push(activation_code(activation));
        }
    }
}

fn read_spec(r: &mut Reader) -> Result<LayerSpec> {
    Ok(match r.u8()? {
        0 => {
            let f: Vec<usize> = (0..8)
                .map(|_| r.u32().map(|v| v as usize))
                .collect::<Result<_>>()?;
            LayerSpec::Conv {
                in_channels: f[0],
                out_channels: f[1],
                kernel: (f[2], f[3]),
                stride: (f[4], f[5]),
                pad: (f[6], f[7]),
                activation: activation_from_code(r.u8()?)?,
            }
        }
        1 => LayerSpec::MaxPool,
        2 => {
            let in_units = r.u32()? as usize;
            let out_units = r.u32()? as usize;
            LayerSpec::Dense {
                in_units,
                out_units,
                activation: activation_from_code(r.u8()?)?,
            }
        }
        3 => {
            let f: Vec<usize> = (0..5)
                .map(|_| r.u32().map(|v| v as usize))
                .collect::<Result<_>>()?;
            LayerSpec::TransposedConv {
                in_channels: f[0],
                out_channels: f[1],
                kernel: (f[2], f[3]),
                stride: f[4],
                activation: activation_from_code(r.u8()?)?,
            }
        }
        other => return Err(Error::Format(format!("unknown layer tag {other}"))),
    })
}

pub fn model_bytes(model: &StoredModel) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    push_u16(&mut out, FORMAT_VERSION);
    match model {
        StoredModel::Network(m) => {
            out.push(match m.kind() {
                ModelKind::SupervisedCnn => KIND_CNN,
                ModelKind::ConvAutoencoder => KIND_CAE,
            });
            let (c, h, w) = m.input_shape();
            push_u32(&mut out, c as u32);
            push_u32(&mut out, h as u32);
            push_u32(&mut out, w as u32);
            out.push(m.layers().len() as u8);
            for layer in m.layers() {
                push_spec(&mut out, layer.spec());
            }
            for layer in m.layers() {
                for &v in layer.weights() {
                    push_f64(&mut out, v);
                }
                for &v in layer.bias() {
                    push_f64(&mut out, v);
                }
            }
        }
        StoredModel::Knn(m) => {
            out.push(KIND_KNN);
            push_u32(&mut out, m.k() as u32);
            push_u32(&mut out, m.len() as u32);
            let dim = m.vectors()[0].len();
            push_u32(&mut out, dim as u32);
            for label in m.labels() {
                out.push(label.index() as u8);
            }
            for vector in m.vectors() {
                for &v in vector {
                    push_f64(&mut out, v);
                }
            }
        }
        StoredModel::Svm(m) => {
            out.push(KIND_SVM);
            let dim = m.weights()[0].len();
            push_u32(&mut out, dim as u32);
            for (w, &b) in m.weights().iter().zip(m.biases()) {
                push_f64(&mut out, b);
                for &v in w {
                    push_f64(&mut out, v);
                }
            }
            push_f64(&mut out, m.lambda());
            push_u32(&mut out, m.epochs() as u32);
            push_u64(&mut out, m.seed());
        }
    }
    Ok(out)
}

pub fn parse_model(bytes: &[u8]) -> Result<StoredModel> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MODEL_MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version}"
        )));
    }
    let kind = r.u8()?;
    let model = match kind {
        KIND_CNN | KIND_CAE => {
            let c = r.u32()? as usize;
            let h = r.u32()? as usize;
            let w = r.u32()? as usize;
            let layer_count = r.u8()? as usize;
            let specs: Vec<LayerSpec> = (0..layer_count)
                .map(|_| read_spec(&mut r))
                .collect::<Result<_>>()?;
            let mut layers = Vec::with_capacity(layer_count);
            for spec in specs {
                let mut layer =
                    Layer::new(spec).map_err(|e| Error::Format(e.message().to_string()))?;
                for slot in layer.weights_mut() {
                    *slot = 0.0;
                }
                layers.push(layer);
            }
            for layer in &mut layers {
                for i in 0..layer.weights().len() {
                    layer.weights_mut()[i] = r.f64()?;
                }
                for i in 0..layer.bias().len() {
                    layer.bias_mut()[i] = r.f64()?;
                }
            }
            let kind = if kind == KIND_CNN {
                ModelKind::SupervisedCnn
            } else {
                ModelKind::ConvAutoencoder
            };
            StoredModel::Network(
                Model::from_layers(kind, (c, h, w), layers)
                    .map_err(|e| Error::Format(e.message().to_string()))?,
            )
        }
        KIND_KNN => {
            let k = r.u32()? as usize;
            let count = r.u32()? as usize;
            let dim = r.u32()? as usize;
            let mut labels = Vec::with_capacity(count);
            for _ in 0..count {
                labels.push(
                    EventLabel::from_index(r.u8()? as usize)
                        .map_err(|e| Error::Format(e.message().to_string()))?,
                );
            }
            let mut vectors = Vec::with_capacity(count);
            for _ in 0..count {
                let mut v = Vec::with_capacity(dim);
                for _ in 0..dim {
                    v.push(r.f64()?);
                }
                vectors.push(v);
            }
            StoredModel::Knn(
                KnnModel::fit(vectors, labels, k)
                    .map_err(|e| Error::Format(e.message().to_string()))?,
            )
        }
        KIND_SVM => {
            let dim = r.u32()? as usize;
            let mut weights = Vec::with_capacity(EventLabel::COUNT);
            let mut biases = Vec::with_capacity(EventLabel::COUNT);
            for _ in 0..EventLabel::COUNT {
                biases.push(r.f64()?);
                let mut w = Vec::with_capacity(dim);
                for _ in 0..dim {
                    w.push(r.f64()?);
                }
                weights.push(w);
            }
            let lambda = r.f64()?;
            let epochs = r.u32()? as usize;
            let seed = r.u64()?;
            StoredModel::Svm(
                SvmModel::from_parts(weights, biases, lambda, epochs, seed)
                    .map_err(|e| Error::Format(e.message().to_string()))?,
            )
        }
        other => return Err(Error::Format(format!("unknown model kind {other}"))),
    };
    r.finish()?;
    Ok(model)
}

pub fn write_model(path: &Path, model: &StoredModel) -> Result<()> {
    fs::write(path, model_bytes(model)?)
        .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<StoredModel> {
    let bytes =
        fs::read(path).map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
    parse_model(&bytes)
}

// ---------------------------------------------------------------------
// CSV emitters

/// Embedding CSV: header `x,y[,z],label`, rows in input order.
pub fn embedding_csv(embedding: &Embedding) -> Result<String> {
    if embedding.labels().len() != embedding.len() {
        return Err(Error::Data("embedding has no companion labels".into()));
    }
    let mut out = String::new();
    out.push_str(match embedding.dims {
        2 => "x,y,label\n",
        3 => "x,y,z,label\n",
        other => {
            return Err(Error::Config(format!(
                "cannot export {other}-dim embedding"
            )))
        }
    });
    for i in 0..embedding.len() {
        for v in embedding.point(i) {
            out.push_str(&format!("{v:.6},"));
        }
        out.push_str(embedding.labels()[i].name());
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_embedding_csv(text: &str) -> Result<Embedding> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty embedding CSV".into()))?;
    let dims = match header {
        "x,y,label" => 2,
        "x,y,z,label" => 3,
        other => return Err(Error::Format(format!("unknown embedding header '{other}'"))),
    };
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dims + 1 {
            return Err(Error::Format(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                dims + 1,
                fields.len()
            )));
        }
        for f in &fields[..dims] {
            coords.push(
                f.parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?,
            );
        }
        labels.push(
            EventLabel::from_name(fields[dims])
                .map_err(|e| Error::Format(e.message().to_string()))?,
        );
    }
    Embedding::new(dims, coords)?.with_labels(labels)
}

/// Feature CSV: header `f0..f{D-1},label`.
pub fn features_csv(features: &[Vec<f64>], labels: &[EventLabel]) -> Result<String> {
    if features.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} feature rows vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features.first().map(|f| f.len()).unwrap_or(0);
    let mut out = String::new();
    for i in 0..dim {
        out.push_str(&format!("f{i},"));
    }
    out.push_str("label\n");
    for (row, label) in features.iter().zip(labels) {
        if row.len() != dim {
            return Err(Error::Data("feature rows have inconsistent lengths".into()));
        }
        for v in row {
            out.push_str(&format!("{v:.6},"));
        }
        out.push_str(label.name());
        out.push('\n');
    }
    Ok(out)
}

/// Per-epoch loss CSV.
pub fn loss_csv(losses: &[f64]) -> String {
    let mut out = String::from("epoch,mean_loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!("{},{l:.9}\n", i + 1));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}
