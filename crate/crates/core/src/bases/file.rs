//! `TRAJBASIS v1` text files: a header line followed by `F` rows of `K`
//! values.

use std::path::Path;

use ndarray::Array2;

use super::{BasisFamily, TrajectoryBasis};
use crate::error::Result;
use crate::io::text::{
    content_lines, field, parse_err, parse_floats, parse_header, push_row, read_to_string,
    write_string,
};

pub fn write_basis(basis: &TrajectoryBasis) -> String {
    let mut out = format!(
        "TRAJBASIS v1 family={} F={} K={}\n",
        basis.family(),
        basis.frames(),
        basis.num_bases()
    );
    for row in basis.theta().rows() {
        push_row(&mut out, row.iter());
    }
    out
}

pub fn save_basis(basis: &TrajectoryBasis, path: &Path) -> Result<()> {
    write_string(path, &write_basis(basis))
}

pub fn parse_basis(text: &str, path: &str) -> Result<TrajectoryBasis> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty basis file"))?;
    let fields = parse_header(header, "TRAJBASIS", "v1", path, hline)?;
    let family: BasisFamily = field(&fields, "family", path, hline)?;
    let frames: usize = field(&fields, "F", path, hline)?;
    let k: usize = field(&fields, "K", path, hline)?;
    if k == 0 || k > frames {
        return Err(parse_err(
            path,
            hline,
            format!("K={k} must be in [1, F={frames}]"),
        ));
    }
    let mut theta = Array2::zeros((frames, k));
    let mut rows = 0;
    for (no, line) in lines {
        if rows == frames {
            return Err(parse_err(path, no, format!("more than F={frames} rows")));
        }
        let vals = parse_floats(line, path, no)?;
        if vals.len() != k {
            return Err(parse_err(
                path,
                no,
                format!("expected {k} values, found {}", vals.len()),
            ));
        }
        theta.row_mut(rows).assign(&ndarray::Array1::from(vals));
        rows += 1;
    }
    if rows != frames {
        return Err(parse_err(
            path,
            text.lines().count() + 1,
            format!("expected {frames} rows, found {rows}"),
        ));
    }
    TrajectoryBasis::from_matrix(theta, family)
}

pub fn load_basis(path: &Path) -> Result<TrajectoryBasis> {
    parse_basis(&read_to_string(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{dct_basis, svd_basis};
    use crate::error::Error;
    use crate::motion::MotionMatrix;

    #[test]
    fn round_trip_is_exact() {
        let dct = dct_basis(50, 8).unwrap();
        let text = write_basis(&dct);
        assert!(text.starts_with("TRAJBASIS v1 family=DCT F=50 K=8\n"));
        assert_eq!(parse_basis(&text, "mem").unwrap(), dct);

        let m = MotionMatrix::new(Array2::from_shape_fn((7, 9), |(i, j)| {
            ((i * 9 + j) as f64).sin() / 3.0
        }))
        .unwrap();
        let svd = svd_basis(&[m], 4).unwrap();
        assert_eq!(parse_basis(&write_basis(&svd), "mem").unwrap(), svd);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.txt");
        let b = dct_basis(5, 2).unwrap();
        save_basis(&b, &path).unwrap();
        assert_eq!(load_basis(&path).unwrap(), b);
        assert!(matches!(
            load_basis(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn malformed_inputs_are_located() {
        let cases = [
            ("", 1),
            ("TRAJBASIS v2 family=DCT F=2 K=1\n0.5\n0.5\n", 1),
            ("TRAJBASIS v1 family=XYZ F=2 K=1\n0.5\n0.5\n", 1),
            ("TRAJBASIS v1 family=DCT F=2 K=3\n", 1),
            ("TRAJBASIS v1 family=DCT F=2 K=1\n0.5\nabc\n", 3),
            ("TRAJBASIS v1 family=DCT F=2 K=1\n0.5 1\n0.5\n", 2),
            ("TRAJBASIS v1 family=DCT F=2 K=1\n0.5\n0.5\n0.5\n", 4),
            ("TRAJBASIS v1 family=DCT F=2 K=1\n0.5\n", 3),
        ];
        for (text, line) in cases {
            match parse_basis(text, "f") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
