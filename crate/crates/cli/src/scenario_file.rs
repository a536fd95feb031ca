//! Plain-text scenario files.
//!
//! ```text
//! # comment
//! tx = 1
//! ris = 2
//! rx = 1
//! resistance = 50
//! wavelength = 1
//! blocked_direct = true
//!
//! [d_rs]            # N rows, M columns
//! 100
//! 100
//! [d_dr]            # K rows, N columns
//! 1000, 1000
//! [ris_excess]      # one row, N columns
//! 0, 0.25
//! ```
//!
//! `[d_ds]` (K x M) is required unless the direct link is blocked. Instead
//! of the distance tables a `[positions]` section may list one point per
//! line as `tx|ris|rx, x, y, z`. Lengths are in the same unit as
//! `wavelength`.

use std::collections::HashMap;

use risnet::channel::{DistanceTable, PathLengths};
use risnet::{LinkConfig, LinkGeometry, Scenario};

use crate::error::{CliError, Result};

#[derive(Default)]
struct Section {
    header_line: usize,
    rows: Vec<(usize, Vec<String>)>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut keys: HashMap<String, (usize, String)> = HashMap::new();
    let mut sections: HashMap<String, Section> = HashMap::new();
    let mut current: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| CliError::parse(line_no, "unterminated section header"))?
                .trim()
                .to_owned();
            if !matches!(
                name.as_str(),
                "d_rs" | "d_dr" | "d_ds" | "ris_excess" | "positions"
            ) {
                return Err(CliError::parse(
                    line_no,
                    format!("unknown section [{name}]"),
                ));
            }
            if sections.contains_key(&name) {
                return Err(CliError::parse(
                    line_no,
                    format!("duplicate section [{name}]"),
                ));
            }
            sections.insert(
                name.clone(),
                Section {
                    header_line: line_no,
                    rows: Vec::new(),
                },
            );
            current = Some(name);
            continue;
        }
        match &current {
            Some(name) => {
                let fields = line.split(',').map(|f| f.trim().to_owned()).collect();
                sections
                    .get_mut(name)
                    .expect("section exists")
                    .rows
                    .push((line_no, fields));
            }
            None => {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::parse(line_no, "expected `key = value`"))?;
                let k = k.trim().to_owned();
                if keys
                    .insert(k.clone(), (line_no, v.trim().to_owned()))
                    .is_some()
                {
                    return Err(CliError::parse(line_no, format!("duplicate key `{k}`")));
                }
            }
        }
    }

    let count = |name: &str| -> Result<usize> {
        let (line, v) = keys
            .get(name)
            .ok_or_else(|| CliError::parse(0, format!("missing key `{name}`")))?;
        v.parse()
            .map_err(|_| CliError::parse(*line, format!("`{name}` must be a positive integer")))
    };
    let real = |name: &str, default: f64| -> Result<f64> {
        match keys.get(name) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| CliError::parse(*line, format!("`{name}` must be a number"))),
        }
    };
    for (k, (line, _)) in &keys {
        if !matches!(
            k.as_str(),
            "tx" | "ris" | "rx" | "resistance" | "wavelength" | "blocked_direct"
        ) {
            return Err(CliError::parse(*line, format!("unknown key `{k}`")));
        }
    }

    let (m, n, k) = (count("tx")?, count("ris")?, count("rx")?);
    let blocked = match keys.get("blocked_direct") {
        None => false,
        Some((line, v)) => v
            .parse()
            .map_err(|_| CliError::parse(*line, "`blocked_direct` must be true or false"))?,
    };
    let config = LinkConfig::new(m, n, k)
        .with_resistance(real("resistance", risnet::multiport::DEFAULT_RESISTANCE)?)
        .with_wavelength(real("wavelength", 1.0)?);

    let geometry = if let Some(pos) = sections.get("positions") {
        if let Some(name) = ["d_rs", "d_dr", "d_ds", "ris_excess"]
            .iter()
            .find(|s| sections.contains_key(**s))
        {
            let line = sections[*name].header_line;
            return Err(CliError::parse(
                line,
                "[positions] cannot be combined with distance tables",
            ));
        }
        let (mut tx, mut ris, mut rx) = (Vec::new(), Vec::new(), Vec::new());
        for (line, fields) in &pos.rows {
            if fields.len() != 4 {
                return Err(CliError::parse(*line, "expected `tx|ris|rx, x, y, z`"));
            }
            let p = [
                number(*line, &fields[1])?,
                number(*line, &fields[2])?,
                number(*line, &fields[3])?,
            ];
            match fields[0].as_str() {
                "tx" => tx.push(p),
                "ris" => ris.push(p),
                "rx" => rx.push(p),
                other => {
                    return Err(CliError::parse(
                        *line,
                        format!("unknown port group `{other}`"),
                    ))
                }
            }
        }
        LinkGeometry::Positions {
            tx,
            ris,
            rx,
            blocked_direct: blocked,
        }
    } else {
        let table = |name: &str, rows: usize, cols: usize| -> Result<Option<DistanceTable>> {
            sections
                .get(name)
                .map(|s| read_table(name, s, rows, cols))
                .transpose()
        };
        let missing = |name: &str| CliError::parse(0, format!("missing section [{name}]"));
        let d_rs = table("d_rs", n, m)?.ok_or_else(|| missing("d_rs"))?;
        let d_dr = table("d_dr", k, n)?.ok_or_else(|| missing("d_dr"))?;
        let d_ds = table("d_ds", k, m)?;
        let ris_excess = match table("ris_excess", 1, n)? {
            Some(t) => t.values().to_vec(),
            None => vec![0.0; n],
        };
        LinkGeometry::PathLengths(PathLengths {
            d_rs,
            d_dr,
            d_ds,
            ris_excess,
            blocked_direct: blocked,
        })
    };
    Ok(Scenario::new(config, geometry)?)
}

fn number(line: usize, field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| CliError::parse(line, format!("`{field}` is not a number")))
}

fn read_table(name: &str, section: &Section, rows: usize, cols: usize) -> Result<DistanceTable> {
    if section.rows.len() != rows {
        return Err(CliError::parse(
            section.header_line,
            format!("[{name}] needs {rows} rows, found {}", section.rows.len()),
        ));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (line, fields) in &section.rows {
        if fields.len() != cols {
            return Err(CliError::parse(
                *line,
                format!("[{name}] needs {cols} columns, found {}", fields.len()),
            ));
        }
        for f in fields {
            values.push(number(*line, f)?);
        }
    }
    Ok(DistanceTable::new(rows, cols, values)?)
}
