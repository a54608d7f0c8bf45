//! Checkpoint persistence: one structured JSON file holding the network
//! spec, the flat parameter array in layer order, learnable scalars, and the
//! trainer state. Parameter arrays are written as decimals with 17
//! significant digits so reloads reproduce every bit.

use std::path::Path;

use serde::Deserialize;

use crate::adnet::{NetworkParams, NetworkSpec};
use crate::error::{Error, Result};
use crate::trainer::{Adam, TrainState};

pub const SCHEMA_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_array(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 24 + 2);
    s.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&fmt_f64(*v));
    }
    s.push(']');
    s
}

/// Serialize a checkpoint. The writer is hand-rolled so the parameter arrays
/// carry the full 17 significant digits.
pub fn save(path: &Path, params: &NetworkParams, state: &TrainState, adam: &Adam) -> Result<()> {
    let spec_json = serde_json::to_string(params.spec())
        .map_err(|e| Error::Config(format!("spec serialization: {e}")))?;
    let scalars = match state.log_n_spots {
        Some(v) => format!("{{\"log_n_spots\":{}}}", fmt_f64(v)),
        None => "{}".to_string(),
    };
    let epoch_ref = state
        .epoch_ref
        .map(|e| e.to_string())
        .unwrap_or_else(|| "null".to_string());
    let body = format!(
        concat!(
            "{{\n",
            "\"schema_version\":{},\n",
            "\"spec\":{},\n",
            "\"params\":{},\n",
            "\"learnable_scalars\":{},\n",
            "\"trainer_state\":{{",
            "\"epoch\":{},\"lr\":{},\"n_bad\":{},\"n_stall\":{},",
            "\"gate_material\":{},\"gate_experimental\":{},\"epoch_ref\":{},",
            "\"adam_t\":{},\"adam_m\":{},\"adam_v\":{}}}\n",
            "}}\n"
        ),
        SCHEMA_VERSION,
        spec_json,
        fmt_array(params.data()),
        scalars,
        state.epoch,
        fmt_f64(state.lr),
        state.n_bad,
        state.n_stall,
        state.gate_material,
        state.gate_experimental,
        epoch_ref,
        adam.t,
        fmt_array(&adam.m),
        fmt_array(&adam.v),
    );
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, body)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RawCheckpoint {
    schema_version: u32,
    spec: NetworkSpec,
    params: Vec<f64>,
    #[serde(default)]
    learnable_scalars: std::collections::BTreeMap<String, f64>,
    trainer_state: RawTrainerState,
}

#[derive(Debug, Deserialize)]
struct RawTrainerState {
    epoch: usize,
    lr: f64,
    n_bad: usize,
    #[serde(default)]
    n_stall: usize,
    gate_material: bool,
    gate_experimental: bool,
    epoch_ref: Option<usize>,
    adam_t: usize,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
}

/// A reloaded checkpoint.
pub struct Checkpoint {
    pub params: NetworkParams,
    pub state: TrainState,
    pub adam: Adam,
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("checkpoint {}: {e}", path.display())))?;
    let raw: RawCheckpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("checkpoint {}: {e}", path.display())))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::Data(format!(
            "checkpoint schema {} unsupported (expected {SCHEMA_VERSION})",
            raw.schema_version
        )));
    }
    let params = NetworkParams::from_flat(raw.spec, raw.params)?;
    let mut state = TrainState::new(raw.trainer_state.lr);
    state.epoch = raw.trainer_state.epoch;
    state.n_bad = raw.trainer_state.n_bad;
    state.n_stall = raw.trainer_state.n_stall;
    state.gate_material = raw.trainer_state.gate_material;
    state.gate_experimental = raw.trainer_state.gate_experimental;
    state.epoch_ref = raw.trainer_state.epoch_ref;
    state.log_n_spots = raw.learnable_scalars.get("log_n_spots").copied();
    let mut adam = Adam::new(raw.trainer_state.adam_m.len());
    adam.t = raw.trainer_state.adam_t;
    adam.m = raw.trainer_state.adam_m;
    adam.v = raw.trainer_state.adam_v;
    Ok(Checkpoint { params, state, adam })
}
