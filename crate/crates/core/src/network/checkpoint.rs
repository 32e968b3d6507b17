//! `TRAJNET v1` checkpoints: network configuration, the trajectory basis
//! and every parameter tensor as full-precision text.

use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;

use super::config::NetworkConfig;
use super::model::{init_network, Mode, NetworkParams};
use crate::bases::{BasisFamily, TrajectoryBasis};
use crate::error::{Error, Result};
use crate::io::text::{
    content_lines, field, parse_err, parse_floats, parse_header, push_row, read_to_string,
    write_string,
};

pub fn write_checkpoint(params: &NetworkParams, basis: &TrajectoryBasis) -> String {
    let c = &params.config;
    let mut out = format!(
        "TRAJNET v1 frames={} num_bases={} joints={} feat_layers={} feat_width={} \
         feat_dropout={:?} reg_layers={} reg_width={} reg_dropout={:?} pool_window={} \
         dense_connections={} output_scale={:?} seed={}\n",
        c.frames,
        c.num_bases,
        c.joints,
        c.feat_layers,
        c.feat_width,
        c.feat_dropout,
        c.reg_layers,
        c.reg_width,
        c.reg_dropout,
        c.pool_window,
        c.dense_connections,
        c.output_scale,
        c.seed
    );
    out.push_str(&format!(
        "basis family={} F={} K={}\n",
        basis.family(),
        basis.frames(),
        basis.num_bases()
    ));
    for row in basis.theta().rows() {
        push_row(&mut out, row.iter());
    }
    for (name, values, cols) in tensors(params) {
        let rows = values.len() / cols.max(1);
        out.push_str(&format!("tensor {name} {rows} {cols}\n"));
        for r in values.chunks(cols.max(1)) {
            push_row(&mut out, r.iter());
        }
    }
    out
}

/// `(name, flat values, row width)` for learnables then running statistics.
fn tensors(params: &NetworkParams) -> Vec<(String, &[f64], usize)> {
    let widths = row_widths(params);
    let mut out: Vec<(String, &[f64], usize)> = params
        .learnable_names()
        .into_iter()
        .zip(params.learnables())
        .zip(widths)
        .map(|((n, v), w)| (n, v, w))
        .collect();
    for (n, v) in params.buffers() {
        let len = v.len();
        out.push((n, v, len));
    }
    out
}

fn row_widths(params: &NetworkParams) -> Vec<usize> {
    let mut out = Vec::new();
    for block in [&params.feature, &params.regression] {
        for layer in &block.layers {
            let w = layer.linear.outputs();
            out.extend([w, w, w, w]);
        }
        if let Some(h) = &block.head {
            out.extend([h.outputs(), h.outputs()]);
        }
    }
    out
}

pub fn save_checkpoint(params: &NetworkParams, basis: &TrajectoryBasis, path: &Path) -> Result<()> {
    write_string(path, &write_checkpoint(params, basis))
}

/// Parses a checkpoint; the returned parameters are in eval mode.
pub fn parse_checkpoint(text: &str, path: &str) -> Result<(NetworkParams, TrajectoryBasis)> {
    let mut lines = content_lines(text).peekable();
    let (hno, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty checkpoint"))?;
    let f = parse_header(header, "TRAJNET", "v1", path, hno)?;
    let cfg = NetworkConfig {
        frames: field(&f, "frames", path, hno)?,
        num_bases: field(&f, "num_bases", path, hno)?,
        joints: field(&f, "joints", path, hno)?,
        feat_layers: field(&f, "feat_layers", path, hno)?,
        feat_width: field(&f, "feat_width", path, hno)?,
        feat_dropout: field(&f, "feat_dropout", path, hno)?,
        reg_layers: field(&f, "reg_layers", path, hno)?,
        reg_width: field(&f, "reg_width", path, hno)?,
        reg_dropout: field(&f, "reg_dropout", path, hno)?,
        pool_window: field(&f, "pool_window", path, hno)?,
        dense_connections: field(&f, "dense_connections", path, hno)?,
        output_scale: field(&f, "output_scale", path, hno)?,
        seed: field(&f, "seed", path, hno)?,
    };
    cfg.validate()
        .map_err(|e| parse_err(path, hno, format!("invalid configuration: {e}")))?;

    let eof = text.lines().count() + 1;
    let (bno, bline) = lines
        .next()
        .ok_or_else(|| parse_err(path, eof, "missing basis section"))?;
    let bf = parse_section(bline, "basis", path, bno)?;
    let family: BasisFamily = field(&bf, "family", path, bno)?;
    let frames: usize = field(&bf, "F", path, bno)?;
    let k: usize = field(&bf, "K", path, bno)?;
    if frames != cfg.frames || k != cfg.num_bases {
        return Err(parse_err(
            path,
            bno,
            format!(
                "basis F={frames} K={k} does not match network F={} K={}",
                cfg.frames, cfg.num_bases
            ),
        ));
    }
    let mut theta = Array2::zeros((frames, k));
    for r in 0..frames {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, eof, "truncated basis matrix"))?;
        let vals = parse_floats(line, path, no)?;
        if vals.len() != k {
            return Err(parse_err(
                path,
                no,
                format!("expected {k} values, found {}", vals.len()),
            ));
        }
        theta.row_mut(r).assign(&ndarray::Array1::from(vals));
    }
    let basis = TrajectoryBasis::from_matrix(theta, family)
        .map_err(|e| parse_err(path, bno, format!("invalid basis: {e}")))?;

    let mut params = init_network(&cfg)?;
    let names: Vec<String> = params
        .learnable_names()
        .into_iter()
        .chain(params.buffers().into_iter().map(|(n, _)| n))
        .collect();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(names.len());
    let expected: Vec<usize> = params
        .learnables()
        .iter()
        .map(|t| t.len())
        .chain(params.buffers().iter().map(|(_, t)| t.len()))
        .collect();
    for (name, len) in names.iter().zip(&expected) {
        let (tno, tline) = lines
            .next()
            .ok_or_else(|| parse_err(path, eof, format!("missing tensor '{name}'")))?;
        let toks: Vec<&str> = tline.split_whitespace().collect();
        if toks.len() != 4 || toks[0] != "tensor" {
            return Err(parse_err(
                path,
                tno,
                "expected 'tensor <name> <rows> <cols>'",
            ));
        }
        if toks[1] != name {
            return Err(parse_err(
                path,
                tno,
                format!("expected tensor '{name}', found '{}'", toks[1]),
            ));
        }
        let rows: usize = toks[2]
            .parse()
            .map_err(|_| parse_err(path, tno, format!("bad row count '{}'", toks[2])))?;
        let cols: usize = toks[3]
            .parse()
            .map_err(|_| parse_err(path, tno, format!("bad column count '{}'", toks[3])))?;
        if rows * cols != *len {
            return Err(parse_err(
                path,
                tno,
                format!("tensor '{name}' is {rows}x{cols}, expected {len} values"),
            ));
        }
        let mut flat = Vec::with_capacity(*len);
        for _ in 0..rows {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_err(path, eof, format!("truncated tensor '{name}'")))?;
            let vals = parse_floats(line, path, no)?;
            if vals.len() != cols {
                return Err(parse_err(
                    path,
                    no,
                    format!("expected {cols} values, found {}", vals.len()),
                ));
            }
            flat.extend(vals);
        }
        values.push(flat);
    }
    if let Some((no, _)) = lines.next() {
        return Err(parse_err(path, no, "unexpected trailing content"));
    }

    let n_learn = params.learnables().len();
    for (dst, src) in params.learnables_mut().into_iter().zip(&values[..n_learn]) {
        dst.copy_from_slice(src);
    }
    for (dst, src) in params.buffers_mut().into_iter().zip(&values[n_learn..]) {
        dst.copy_from_slice(src);
    }
    for (name, v) in params.buffers() {
        if name.ends_with("running_var") && v.iter().any(|x| *x < 0.0) {
            return Err(Error::numeric(format!(
                "negative running variance in '{name}'"
            )));
        }
    }
    params.set_mode(Mode::Eval);
    Ok((params, basis))
}

/// `<keyword> key=value …` line.
fn parse_section(
    line: &str,
    keyword: &str,
    path: &str,
    line_no: usize,
) -> Result<HashMap<String, String>> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(keyword) {
        return Err(parse_err(
            path,
            line_no,
            format!("expected '{keyword}' line"),
        ));
    }
    tokens
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| parse_err(path, line_no, format!("expected key=value, got '{tok}'")))
        })
        .collect()
}

pub fn load_checkpoint(path: &Path) -> Result<(NetworkParams, TrajectoryBasis)> {
    parse_checkpoint(&read_to_string(path)?, &path.display().to_string())
}
