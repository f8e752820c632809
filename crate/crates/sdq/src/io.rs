//! Channel files: a small JSON document with fields `q`, `n`, `px`, and
//! `pyx`. Writers emit every probability with 17 significant digits so a
//! write–read cycle reproduces doubles bitwise; readers take any JSON
//! number, decimal or scientific.

use crate::channel::{Channel, ChannelError};
use crate::oracle::GapInstance;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("file: {0}")]
    File(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("inconsistent channel file: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Deserialize)]
struct ChannelFile {
    q: usize,
    n: usize,
    px: Vec<f64>,
    pyx: Vec<Vec<f64>>,
}

/// 17 significant digits: enough to reproduce any double exactly.
fn push_float(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a string cannot fail");
}

fn push_row(out: &mut String, row: &[f64]) {
    out.push('[');
    for (k, &v) in row.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        push_float(out, v);
    }
    out.push(']');
}

/// Render a channel in the channel file format.
pub fn channel_to_string(channel: &Channel) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"q\": {},", channel.inputs());
    let _ = writeln!(out, "  \"n\": {},", channel.outputs());
    out.push_str("  \"px\": ");
    push_row(&mut out, channel.px());
    out.push_str(",\n  \"pyx\": [\n");
    for (i, row) in channel.pyx().iter().enumerate() {
        out.push_str("    ");
        push_row(&mut out, row);
        out.push_str(if i + 1 < channel.inputs() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// Parse and fully validate a channel file.
pub fn channel_from_str(text: &str) -> Result<Channel, IoError> {
    let file: ChannelFile = serde_json::from_str(text)?;
    if file.px.len() != file.q {
        return Err(IoError::Inconsistent(format!(
            "px has {} entries but q = {}",
            file.px.len(),
            file.q
        )));
    }
    if file.pyx.len() != file.q {
        return Err(IoError::Inconsistent(format!(
            "pyx has {} rows but q = {}",
            file.pyx.len(),
            file.q
        )));
    }
    for (i, row) in file.pyx.iter().enumerate() {
        if row.len() != file.n {
            return Err(IoError::Inconsistent(format!(
                "pyx row {} has {} entries but n = {}",
                i,
                row.len(),
                file.n
            )));
        }
    }
    Ok(Channel::new(file.px, file.pyx)?)
}

pub fn write_channel(path: impl AsRef<Path>, channel: &Channel) -> Result<(), IoError> {
    Ok(std::fs::write(path, channel_to_string(channel))?)
}

pub fn read_channel(path: impl AsRef<Path>) -> Result<Channel, IoError> {
    channel_from_str(&std::fs::read_to_string(path)?)
}

/// Render a counterexample-hunt hit: the channel in the channel file format
/// plus the two optima and their costs.
pub fn gap_instance_to_string(gap: &GapInstance) -> String {
    let channel: serde_json::Value = serde_json::from_str(&channel_to_string(&gap.channel))
        .expect("the channel writer emits valid JSON");
    let value = serde_json::json!({
        "channel": channel,
        "cells": gap.cells,
        "sequential_cost": gap.sdq_cost,
        "unrestricted_cost": gap.dq_cost,
        "sequential_boundaries": gap.sdq_boundaries,
        "unrestricted_assignment": gap.dq_assignment.map(),
    });
    serde_json::to_string_pretty(&value).expect("plain data serializes")
}
