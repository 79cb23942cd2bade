//! Trained denoisers as JSON, one object per entity type.

use std::collections::BTreeMap;

use hgl_core::denoiser::{Affine, Vocab};
use hgl_core::DenoiserModel;
use serde::{Deserialize, Serialize};

const FORMAT: &str = "hgl-models/1";

#[derive(Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Stored {
    dim: usize,
    context_window: bool,
    vocab: Vec<String>,
    embeddings: Vec<f64>,
    attn_w: Vec<f64>,
    attn_b: f64,
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct File {
    format: String,
    models: BTreeMap<String, Stored>,
}

fn store(m: &DenoiserModel) -> Stored {
    let t = m.tensors();
    Stored {
        dim: m.dim(),
        context_window: m.context_window(),
        vocab: m.vocab().tokens().to_vec(),
        embeddings: t[0].to_vec(),
        attn_w: t[1].to_vec(),
        attn_b: m.attn_bias(),
        layers: m
            .layers()
            .iter()
            .map(|l| Layer {
                inputs: l.inputs,
                outputs: l.outputs,
                weight: l.weight.clone(),
                bias: l.bias.clone(),
            })
            .collect(),
    }
}

pub fn write_models<'a>(models: impl IntoIterator<Item = &'a DenoiserModel>) -> String {
    let file = File {
        format: FORMAT.into(),
        models: models
            .into_iter()
            .map(|m| (m.entity_type().to_string(), store(m)))
            .collect(),
    };
    let mut s = serde_json::to_string(&file).expect("models serialise");
    s.push('\n');
    s
}

pub fn parse_models(text: &str) -> Result<BTreeMap<String, DenoiserModel>, String> {
    let file: File = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if file.format != FORMAT {
        return Err(format!("unsupported model format {:?}", file.format));
    }
    file.models
        .into_iter()
        .map(|(ty, s)| {
            let vocab = Vocab::from_tokens(s.vocab).ok_or_else(|| format!("{ty}: malformed vocabulary"))?;
            let layers = s
                .layers
                .into_iter()
                .map(|l| Affine {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weight: l.weight,
                    bias: l.bias,
                })
                .collect();
            let model = DenoiserModel::from_parts(
                ty.clone(),
                vocab,
                s.dim,
                s.context_window,
                s.embeddings,
                s.attn_w,
                s.attn_b,
                layers,
            )
            .map_err(|e| format!("{ty}: {e}"))?;
            Ok((ty, model))
        })
        .collect()
}
