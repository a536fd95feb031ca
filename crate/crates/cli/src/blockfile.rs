//! Block parameter files for `convert`.
//!
//! ```text
//! kind = Z               # Z or S
//! resistance = 50
//! ports = 1 2 1          # M N K
//! 50,0 0,0 0,0 0,0       # one line per row, entries `re,im`
//! ...
//! ```
//!
//! Lines starting with `#` are comments. Written files use the same layout
//! and append the conversion report as comment lines.

use std::fmt::Write as _;

use num_complex::Complex64;
use risnet::multiport::{s_to_z_matrix, z_to_s_matrix};
use risnet::{blockwise_z_to_s, ComplexMatrix, MultiportImpedance, MultiportScattering, Partition};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Z,
    S,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::Z => "Z",
            Kind::S => "S",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockFile {
    pub kind: Kind,
    pub resistance: f64,
    pub partition: Partition,
    pub matrix: ComplexMatrix,
}

pub fn parse_block_file(text: &str) -> Result<BlockFile> {
    let (mut kind, mut resistance, mut partition) = (None, None, None);
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut first_row_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            if !rows.is_empty() {
                return Err(CliError::parse(
                    line_no,
                    "header keys must precede matrix rows",
                ));
            }
            let v = v.trim();
            match k.trim() {
                "kind" => {
                    kind = Some(match v {
                        "Z" | "z" => Kind::Z,
                        "S" | "s" => Kind::S,
                        _ => {
                            return Err(CliError::parse(
                                line_no,
                                format!("kind must be Z or S, got `{v}`"),
                            ))
                        }
                    })
                }
                "resistance" => {
                    resistance =
                        Some(v.parse::<f64>().map_err(|_| {
                            CliError::parse(line_no, format!("`{v}` is not a number"))
                        })?)
                }
                "ports" => {
                    let sizes: Vec<usize> = v
                        .split_whitespace()
                        .map(|s| s.parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| {
                            CliError::parse(line_no, "ports must be three integers `M N K`")
                        })?;
                    if sizes.len() != 3 {
                        return Err(CliError::parse(
                            line_no,
                            "ports must be three integers `M N K`",
                        ));
                    }
                    partition = Some(Partition::new(sizes[0], sizes[1], sizes[2]));
                }
                other => return Err(CliError::parse(line_no, format!("unknown key `{other}`"))),
            }
            continue;
        }
        if rows.is_empty() {
            first_row_line = line_no;
        }
        let row = line
            .split_whitespace()
            .map(|tok| parse_entry(line_no, tok))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }

    let kind = kind.ok_or_else(|| CliError::parse(0, "missing key `kind`"))?;
    let resistance = resistance.ok_or_else(|| CliError::parse(0, "missing key `resistance`"))?;
    let partition = partition.ok_or_else(|| CliError::parse(0, "missing key `ports`"))?;
    let n = partition.total();
    if rows.len() != n {
        return Err(CliError::parse(
            first_row_line.max(1),
            format!("expected {n} matrix rows, found {}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(CliError::parse(
                line_of_row(text, i),
                format!("expected {n} entries, found {}", row.len()),
            ));
        }
    }
    let matrix = ComplexMatrix::from_rows(&rows)?;
    Ok(BlockFile {
        kind,
        resistance,
        partition,
        matrix,
    })
}

fn parse_entry(line: usize, tok: &str) -> Result<Complex64> {
    let (re, im) = tok
        .split_once(',')
        .ok_or_else(|| CliError::parse(line, format!("entry `{tok}` must be `re,im`")))?;
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::parse(line, format!("`{s}` is not a number")))
    };
    Ok(Complex64::new(num(re)?, num(im)?))
}

fn line_of_row(text: &str, row: usize) -> usize {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            !l.is_empty() && !l.contains('=')
        })
        .nth(row)
        .map_or(0, |(i, _)| i + 1)
}

impl BlockFile {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let p = self.partition;
        let _ = writeln!(out, "kind = {}", self.kind.label());
        let _ = writeln!(out, "resistance = {:.16e}", self.resistance);
        let _ = writeln!(out, "ports = {} {} {}", p.tx, p.ris, p.rx);
        for i in 0..self.matrix.rows() {
            let row: Vec<String> = self
                .matrix
                .row(i)
                .iter()
                .map(|z| format!("{:.16e},{:.16e}", z.re, z.im))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Converted file plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Conversion {
    pub output: BlockFile,
    /// `‖S_DS + S_DR·S_RS‖_F / ‖S_DR·S_RS‖_F`, when the direct impedance
    /// block is zero.
    pub direct_dependency: Option<f64>,
    /// Relative deviation between the blockwise and general Z→S results,
    /// when the impedance matrix is unilateral.
    pub blockwise_deviation: Option<f64>,
}

impl Conversion {
    pub fn report(&self) -> Vec<String> {
        let mut lines = Vec::new();
        if let Some(v) = self.direct_dependency {
            lines.push(format!(
                "||S_DS + S_DR*S_RS||_F / ||S_DR*S_RS||_F = {v:.3e}"
            ));
        }
        if let Some(v) = self.blockwise_deviation {
            lines.push(format!(
                "blockwise vs general conversion: relative deviation {v:.3e}"
            ));
        }
        lines
    }

    pub fn render(&self) -> String {
        let mut out = self.output.render();
        for l in self.report() {
            let _ = writeln!(out, "# {l}");
        }
        out
    }
}

/// Converts Z to S or S to Z with the general formulas.
pub fn convert(file: &BlockFile) -> Result<Conversion> {
    let r = file.resistance;
    let p = file.partition;
    let (z, s) = match file.kind {
        Kind::Z => (file.matrix.clone(), z_to_s_matrix(&file.matrix, r)?),
        Kind::S => (s_to_z_matrix(&file.matrix, r)?, file.matrix.clone()),
    };
    let z = MultiportImpedance::from_matrix(p, z)?;
    let s = MultiportScattering::from_matrix(p, s, r)?;

    let scale = z.matrix().frobenius_norm().max(f64::MIN_POSITIVE);
    let direct_zero = z.z_ds().frobenius_norm() <= 1e-12 * scale;
    let direct_dependency = if direct_zero && p.tx > 0 && p.ris > 0 && p.rx > 0 {
        let cascade = s.s_dr().try_mul(&s.s_rs())?;
        let norm = cascade.frobenius_norm();
        (norm > 0.0).then(|| (&s.s_ds() + &cascade).frobenius_norm() / norm)
    } else {
        None
    };
    let blockwise_deviation = match (file.kind, z.check_unilateral(r)) {
        (Kind::Z, Ok(())) => Some(
            blockwise_z_to_s(&z, r)?
                .matrix()
                .relative_deviation(s.matrix()),
        ),
        _ => None,
    };

    let (kind, matrix) = match file.kind {
        Kind::Z => (Kind::S, s.matrix().clone()),
        Kind::S => (Kind::Z, z.matrix().clone()),
    };
    Ok(Conversion {
        output: BlockFile {
            kind,
            resistance: r,
            partition: p,
            matrix,
        },
        direct_dependency,
        blockwise_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str =
        "kind = Z\nresistance = 50\nports = 1 1 1\n50,0 0,0 0,0\n0,0 50,0 0,0\n0,0 0,0 50,0\n";

    #[test]
    fn matched_identity_has_zero_scattering() {
        let c = convert(&parse_block_file(IDENTITY).unwrap()).unwrap();
        assert_eq!(c.output.kind, Kind::S);
        assert!(c.output.matrix.is_zero());
    }

    #[test]
    fn render_parses_back() {
        let f = parse_block_file(IDENTITY).unwrap();
        assert_eq!(parse_block_file(&f.render()).unwrap(), f);
    }

    #[test]
    fn malformed_entry_reports_line() {
        let bad = IDENTITY.replace("0,0 50,0 0,0", "0,0 50;0 0,0");
        assert!(matches!(
            parse_block_file(&bad),
            Err(CliError::Parse { line: 5, .. })
        ));
        let short = IDENTITY.replace("0,0 50,0 0,0", "0,0 50,0");
        assert!(matches!(
            parse_block_file(&short),
            Err(CliError::Parse { line: 5, .. })
        ));
    }
}
