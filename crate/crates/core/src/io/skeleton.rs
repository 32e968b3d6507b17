//! `SKEL v1` files: `joint <index> <name>`, `root <index>` and
//! `pair <left> <right>` lines.

use std::path::Path;

use super::text::{content_lines, parse_err, read_to_string, write_string};
use crate::error::Result;
use crate::motion::SkeletonConfig;

pub fn write_skeleton(skel: &SkeletonConfig) -> String {
    let mut out = String::from("SKEL v1\n");
    for (i, name) in skel.joint_names.iter().enumerate() {
        out.push_str(&format!("joint {i} {name}\n"));
    }
    out.push_str(&format!("root {}\n", skel.root_index));
    for (l, r) in &skel.lr_pairs {
        out.push_str(&format!("pair {l} {r}\n"));
    }
    out
}

pub fn save_skeleton(skel: &SkeletonConfig, path: &Path) -> Result<()> {
    write_string(path, &write_skeleton(skel))
}

pub fn parse_skeleton(text: &str, path: &str) -> Result<SkeletonConfig> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "SKEL v1")) => {}
        Some((no, _)) => return Err(parse_err(path, no, "expected 'SKEL v1' header")),
        None => return Err(parse_err(path, 1, "empty skeleton file")),
    }
    let index = |tok: Option<&str>, no: usize| -> Result<usize> {
        let tok = tok.ok_or_else(|| parse_err(path, no, "missing index"))?;
        tok.parse()
            .map_err(|_| parse_err(path, no, format!("bad index '{tok}'")))
    };
    let mut names: Vec<(usize, String)> = Vec::new();
    let mut root = None;
    let mut pairs = Vec::new();
    let mut last_line = 1;
    for (no, line) in lines {
        last_line = no;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("joint") => {
                let i = index(toks.next(), no)?;
                let name = toks
                    .next()
                    .ok_or_else(|| parse_err(path, no, "missing joint name"))?;
                if i != names.len() {
                    return Err(parse_err(
                        path,
                        no,
                        format!(
                            "joint indices must be consecutive, expected {}",
                            names.len()
                        ),
                    ));
                }
                names.push((i, name.to_string()));
            }
            Some("root") => {
                if root.is_some() {
                    return Err(parse_err(path, no, "duplicate root line"));
                }
                root = Some(index(toks.next(), no)?);
            }
            Some("pair") => {
                let l = index(toks.next(), no)?;
                let r = index(toks.next(), no)?;
                pairs.push((l, r));
            }
            Some(other) => return Err(parse_err(path, no, format!("unknown directive '{other}'"))),
            None => unreachable!("content_lines skips blank lines"),
        }
        if toks.next().is_some() {
            return Err(parse_err(path, no, "trailing tokens"));
        }
    }
    let root = root.ok_or_else(|| parse_err(path, last_line, "missing root line"))?;
    SkeletonConfig::new(names.into_iter().map(|(_, n)| n).collect(), root, pairs)
        .map_err(|e| parse_err(path, last_line, e.to_string()))
}

pub fn load_skeleton(path: &Path) -> Result<SkeletonConfig> {
    parse_skeleton(&read_to_string(path)?, &path.display().to_string())
}
