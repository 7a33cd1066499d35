//! Model checkpoints.
//!
//! Networks, NeuRec models and BPR-MF models are JSON documents tagged with
//! `"format": "neurec-checkpoint"` and a `"model"` kind; parameters are row-major arrays
//! written with shortest round-trip float formatting. mostPOP is a plain score vector
//! (`# mostpop n=<N>` then one score per line) and SLIM a coordinate list
//! (`# slim n=<N> l2=<λ> l1=<μ>` then `<row>\t<col>\t<value>` lines).

use std::fs;
use std::path::Path;

use neurec_core::models::{MfModel, MostPop, NeuRecModel, SlimModel, Variant};
use neurec_core::nn::{Activation, Mlp};
use serde::{Deserialize, Serialize};

use super::{FormatError, FormatResult};

const FORMAT_TAG: &str = "neurec-checkpoint";
const VERSION: u32 = 1;

/// Any model the harness can persist.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Network(Mlp),
    NeuRec(NeuRecModel),
    Mf(MfModel),
    MostPop(MostPop),
    Slim(SlimModel),
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    layer_dims: Vec<usize>,
    activation: Activation,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl NetworkDoc {
    fn from_net(net: &Mlp) -> Self {
        Self {
            layer_dims: net.dims(),
            activation: net.activation(),
            weights: net.layers().iter().map(|l| l.weights.clone()).collect(),
            biases: net.layers().iter().map(|l| l.bias.clone()).collect(),
        }
    }

    fn into_net(self) -> FormatResult<Mlp> {
        Ok(Mlp::from_parts(&self.layer_dims, self.activation, self.weights, self.biases)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
enum Body {
    Network(NetworkDoc),
    Neurec {
        variant: Variant,
        k: usize,
        #[serde(flatten)]
        net: NetworkDoc,
        factors: Vec<f64>,
    },
    BprMf(MfModel),
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: Body,
}

fn to_json(body: Body) -> FormatResult<String> {
    let mut text = serde_json::to_string(&Document { format: FORMAT_TAG.into(), version: VERSION, body })?;
    text.push('\n');
    Ok(text)
}

fn from_json(text: &str) -> FormatResult<SavedModel> {
    let doc: Document = serde_json::from_str(text)?;
    if doc.format != FORMAT_TAG || doc.version != VERSION {
        return Err(FormatError::Invalid(format!("unsupported checkpoint `{}` version {}", doc.format, doc.version)));
    }
    Ok(match doc.body {
        Body::Network(net) => SavedModel::Network(net.into_net()?),
        Body::Neurec { variant, k, net, factors } => {
            let net = net.into_net()?;
            if net.output_dim() != k {
                return Err(FormatError::Invalid(format!("k = {k} but the network outputs {}", net.output_dim())));
            }
            SavedModel::NeuRec(NeuRecModel::from_parts(variant, net, factors)?)
        }
        Body::BprMf(mf) => {
            if mf.k == 0 || mf.user_factors.len() % mf.k != 0 || mf.item_factors.len() % mf.k != 0 {
                return Err(FormatError::Invalid("BPR-MF factor arrays do not match k".into()));
            }
            if mf.user_factors.iter().chain(&mf.item_factors).any(|v| !v.is_finite()) {
                return Err(FormatError::Invalid("non-finite BPR-MF parameter".into()));
            }
            SavedModel::Mf(mf)
        }
    })
}

/// Serializes a model to its on-disk text.
pub fn encode_model(model: &SavedModel) -> FormatResult<String> {
    match model {
        SavedModel::Network(net) => to_json(Body::Network(NetworkDoc::from_net(net))),
        SavedModel::NeuRec(m) => to_json(Body::Neurec {
            variant: m.variant(),
            k: m.k(),
            net: NetworkDoc::from_net(m.net()),
            factors: m.factors().to_vec(),
        }),
        SavedModel::Mf(m) => to_json(Body::BprMf(m.clone())),
        SavedModel::MostPop(m) => {
            let mut text = format!("# mostpop n={}\n", m.num_items());
            for s in m.scores() {
                text.push_str(&format!("{s}\n"));
            }
            Ok(text)
        }
        SavedModel::Slim(m) => {
            let mut text = format!("# slim n={} l2={} l1={}\n", m.num_items(), m.l2(), m.l1());
            for (r, c, v) in m.entries() {
                text.push_str(&format!("{r}\t{c}\t{v}\n"));
            }
            Ok(text)
        }
    }
}

fn header_value<'a>(header: &'a str, key: &str) -> FormatResult<&'a str> {
    header
        .split_whitespace()
        .find_map(|p| p.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| FormatError::line(1, format!("missing `{key}=` in header `{header}`")))
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> FormatResult<T> {
    s.parse().map_err(|_| FormatError::line(line, format!("cannot parse `{s}`")))
}

/// Parses the on-disk text of any model kind.
pub fn decode_model(text: &str) -> FormatResult<SavedModel> {
    if text.trim_start().starts_with('{') {
        return from_json(text);
    }
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let n: usize = parse(header_value(header, "n")?, 1)?;
    if header.starts_with("# mostpop ") {
        let scores = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| parse::<f64>(l.trim(), k + 2))
            .collect::<FormatResult<Vec<f64>>>()?;
        if scores.len() != n {
            return Err(FormatError::Invalid(format!("mostpop file declares {n} items but lists {}", scores.len())));
        }
        Ok(SavedModel::MostPop(MostPop::from_scores(scores)?))
    } else if header.starts_with("# slim ") {
        let l2 = parse(header_value(header, "l2")?, 1)?;
        let l1 = parse(header_value(header, "l1")?, 1)?;
        let mut entries = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.trim().split('\t').collect();
            if f.len() != 3 {
                return Err(FormatError::line(k + 2, "expected `<row>\\t<col>\\t<value>`"));
            }
            entries.push((parse(f[0], k + 2)?, parse(f[1], k + 2)?, parse(f[2], k + 2)?));
        }
        Ok(SavedModel::Slim(SlimModel::from_entries(n, l2, l1, entries)?))
    } else {
        Err(FormatError::Invalid(format!("unrecognized model file header `{header}`")))
    }
}

pub fn save_model(model: &SavedModel, path: &Path) -> FormatResult<()> {
    fs::write(path, encode_model(model)?).map_err(|e| FormatError::io(path, e))
}

pub fn load_model(path: &Path) -> FormatResult<SavedModel> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    decode_model(&text)
}
