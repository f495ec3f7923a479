//! Plain-text checkpoints.
//!
//! ```text
//! dpm-checkpoint 1
//! input_dim 2
//! hidden_width 20
//! depth 8
//! output_dim 1
//! residual true
//! input_shift 0 0.5
//! input_scale 1 2
//! params 3021
//! <one parameter per line, layer order W1 (row-major), b1, W2, b2, ...>
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so reading a
//! checkpoint back reproduces every parameter bit for bit.

use std::io::{BufRead, Write};

use super::{InputMap, LayerSpec, NetworkParams};
use crate::{Error, Result};

const MAGIC: &str = "dpm-checkpoint 1";

pub fn write_checkpoint<W: Write>(params: &NetworkParams, mut out: W) -> Result<()> {
    let s = params.spec();
    let m = params.input_map();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "input_dim {}", s.input_dim)?;
    writeln!(out, "hidden_width {}", s.hidden_width)?;
    writeln!(out, "depth {}", s.depth)?;
    writeln!(out, "output_dim {}", s.output_dim)?;
    writeln!(out, "residual {}", s.residual)?;
    writeln!(out, "input_shift {:?} {:?}", m.shift[0], m.shift[1])?;
    writeln!(out, "input_scale {:?} {:?}", m.scale[0], m.scale[1])?;
    writeln!(out, "params {}", params.len())?;
    for v in params.flatten() {
        writeln!(out, "{v:?}")?;
    }
    Ok(())
}

fn bad(detail: impl Into<String>) -> Error {
    Error::Format {
        what: "checkpoint",
        detail: detail.into(),
    }
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<NetworkParams> {
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))?
            .map_err(Error::from)
    };
    if next()?.trim() != MAGIC {
        return Err(bad("missing header"));
    }
    let mut field = |key: &str| -> Result<Vec<String>> {
        let line = next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(format!("expected `{key}`")));
        }
        Ok(parts.map(str::to_owned).collect())
    };
    fn one<T: std::str::FromStr>(v: Vec<String>, key: &str) -> Result<T> {
        v.first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad value for `{key}`")))
    }
    fn pair(v: Vec<String>, key: &str) -> Result<[f64; 2]> {
        let p: Vec<f64> = v.iter().filter_map(|s| s.parse().ok()).collect();
        match p[..] {
            [a, b] if v.len() == 2 => Ok([a, b]),
            _ => Err(bad(format!("bad value for `{key}`"))),
        }
    }
    let spec = LayerSpec {
        input_dim: one(field("input_dim")?, "input_dim")?,
        hidden_width: one(field("hidden_width")?, "hidden_width")?,
        depth: one(field("depth")?, "depth")?,
        output_dim: one(field("output_dim")?, "output_dim")?,
        residual: one(field("residual")?, "residual")?,
    };
    let map = InputMap {
        shift: pair(field("input_shift")?, "input_shift")?,
        scale: pair(field("input_scale")?, "input_scale")?,
    };
    let count: usize = one(field("params")?, "params")?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let line = next()?;
        values.push(
            line.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("parameter `{line}`: {e}")))?,
        );
    }
    Ok(NetworkParams::from_flat(spec, values)?.with_input_map(map))
}
