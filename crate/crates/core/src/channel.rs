//! Isotropic-radiator channel synthesis.
//!
//! Builds the off-diagonal impedance blocks from link geometry with the
//! mutual impedance of two isotropic radiators,
//! `z21 = −R/(j·k·d) · exp(−j·k·d)`, and assembles the matched, unilateral
//! multiport (no intra-array coupling, zero feedback blocks).

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::multiport::{
    MultiportImpedance, Partition, PartitionedMatrix, Port, DEFAULT_RESISTANCE,
};

/// Port counts and global electrical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub tx_antennas: usize,
    pub ris_elements: usize,
    pub rx_antennas: usize,
    /// Common port resistance in ohms.
    pub resistance: f64,
    /// Wavelength in meters.
    pub wavelength: f64,
}

impl LinkConfig {
    pub fn new(tx_antennas: usize, ris_elements: usize, rx_antennas: usize) -> Self {
        Self {
            tx_antennas,
            ris_elements,
            rx_antennas,
            resistance: DEFAULT_RESISTANCE,
            wavelength: 1.0,
        }
    }

    pub fn with_resistance(mut self, resistance: f64) -> Self {
        self.resistance = resistance;
        self
    }

    pub fn with_wavelength(mut self, wavelength: f64) -> Self {
        self.wavelength = wavelength;
        self
    }

    pub fn partition(&self) -> Partition {
        Partition::new(self.tx_antennas, self.ris_elements, self.rx_antennas)
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_antennas == 0 || self.ris_elements == 0 || self.rx_antennas == 0 {
            return Err(Error::Domain("port counts must be at least one".into()));
        }
        if !(self.resistance > 0.0 && self.resistance.is_finite()) {
            return Err(Error::Domain(format!(
                "resistance must be positive, got {}",
                self.resistance
            )));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::Domain(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        Ok(())
    }
}

/// Mutual impedance between two isotropic radiators `d` meters apart.
pub fn mutual_impedance(d: f64, wavelength: f64, resistance: f64) -> Result<Complex64> {
    hop_impedance(d, 0.0, wavelength, resistance)
}

/// Mutual impedance whose propagation phase includes `excess` extra meters
/// that do not change the amplitude.
fn hop_impedance(d: f64, excess: f64, wavelength: f64, resistance: f64) -> Result<Complex64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!(
            "distance must be positive and finite, got {d}"
        )));
    }
    if wavelength.is_nan() || wavelength <= 0.0 {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let k_d = TAU * d / wavelength;
    // Reduce the electrical length to one period before taking the phase.
    let cycles = ((d + excess) / wavelength).rem_euclid(1.0);
    let phase = Complex64::from_polar(1.0, -TAU * cycles);
    Ok(-resistance / Complex64::new(0.0, k_d) * phase)
}

/// A `rows x cols` table of distances in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DistanceTable {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} distances for a {rows}x{cols} table",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Dimension("ragged distance table".into()));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    fn expect_shape(&self, rows: usize, cols: usize, name: &str) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::Dimension(format!(
                "{name} must be {rows}x{cols}, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}

pub type Point3 = [f64; 3];

fn euclidean(a: &Point3, b: &Point3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-hop path lengths.
///
/// `ris_excess[n]` is an extra propagation length applied to the RIS→Rx hop
/// of element `n` that shifts its phase without changing its amplitude.
/// This is how a two-element layout whose second element sees a longer path
/// is described while keeping both elements' hop amplitudes equal.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLengths {
    /// N x M.
    pub d_rs: DistanceTable,
    /// K x N.
    pub d_dr: DistanceTable,
    /// K x M; may be absent when the direct link is blocked.
    pub d_ds: Option<DistanceTable>,
    pub ris_excess: Vec<f64>,
    pub blocked_direct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkGeometry {
    Positions {
        tx: Vec<Point3>,
        ris: Vec<Point3>,
        rx: Vec<Point3>,
        blocked_direct: bool,
    },
    PathLengths(PathLengths),
}

/// Resolved hop distances for every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HopDistances {
    pub d_rs: DistanceTable,
    pub d_dr: DistanceTable,
    pub d_ds: Option<DistanceTable>,
    pub ris_excess: Vec<f64>,
}

impl LinkGeometry {
    pub fn blocked_direct(&self) -> bool {
        match self {
            LinkGeometry::Positions { blocked_direct, .. } => *blocked_direct,
            LinkGeometry::PathLengths(p) => p.blocked_direct,
        }
    }

    /// Multiplies every length by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |pts: &Vec<Point3>| pts.iter().map(|p| p.map(|c| c * factor)).collect();
        match self {
            LinkGeometry::Positions {
                tx,
                ris,
                rx,
                blocked_direct,
            } => LinkGeometry::Positions {
                tx: scale(tx),
                ris: scale(ris),
                rx: scale(rx),
                blocked_direct: *blocked_direct,
            },
            LinkGeometry::PathLengths(p) => LinkGeometry::PathLengths(PathLengths {
                d_rs: p.d_rs.scaled(factor),
                d_dr: p.d_dr.scaled(factor),
                d_ds: p.d_ds.as_ref().map(|t| t.scaled(factor)),
                ris_excess: p.ris_excess.iter().map(|e| e * factor).collect(),
                blocked_direct: p.blocked_direct,
            }),
        }
    }

    /// Resolves and validates the hop distances against `cfg`.
    pub fn hop_distances(&self, cfg: &LinkConfig) -> Result<HopDistances> {
        let (m, n, k) = (cfg.tx_antennas, cfg.ris_elements, cfg.rx_antennas);
        let hops = match self {
            LinkGeometry::Positions {
                tx,
                ris,
                rx,
                blocked_direct,
            } => {
                if tx.len() != m || ris.len() != n || rx.len() != k {
                    return Err(Error::Dimension(format!(
                        "positions for ({}, {}, {}) ports, config has ({m}, {n}, {k})",
                        tx.len(),
                        ris.len(),
                        rx.len()
                    )));
                }
                let table = |a: &[Point3], b: &[Point3]| {
                    let vals = a
                        .iter()
                        .flat_map(|p| b.iter().map(move |q| euclidean(p, q)))
                        .collect();
                    DistanceTable::new(a.len(), b.len(), vals)
                };
                warn_close_spacing(ris, cfg.wavelength);
                HopDistances {
                    d_rs: table(ris, tx)?,
                    d_dr: table(rx, ris)?,
                    d_ds: if *blocked_direct {
                        None
                    } else {
                        Some(table(rx, tx)?)
                    },
                    ris_excess: vec![0.0; n],
                }
            }
            LinkGeometry::PathLengths(p) => {
                p.d_rs.expect_shape(n, m, "d_RS")?;
                p.d_dr.expect_shape(k, n, "d_DR")?;
                let d_ds = match (&p.d_ds, p.blocked_direct) {
                    (_, true) => None,
                    (Some(t), false) => {
                        t.expect_shape(k, m, "d_DS")?;
                        Some(t.clone())
                    }
                    (None, false) => {
                        return Err(Error::Domain(
                            "direct link not blocked but d_DS missing".into(),
                        ))
                    }
                };
                if p.ris_excess.len() != n {
                    return Err(Error::Dimension(format!(
                        "{} excess lengths for {n} RIS elements",
                        p.ris_excess.len()
                    )));
                }
                if p.ris_excess.iter().any(|e| !e.is_finite() || *e < 0.0) {
                    return Err(Error::Domain(
                        "excess path lengths must be finite and ≥ 0".into(),
                    ));
                }
                HopDistances {
                    d_rs: p.d_rs.clone(),
                    d_dr: p.d_dr.clone(),
                    d_ds,
                    ris_excess: p.ris_excess.clone(),
                }
            }
        };
        let all = hops
            .d_rs
            .values()
            .iter()
            .chain(hops.d_dr.values())
            .chain(hops.d_ds.iter().flat_map(|t| t.values()));
        for &d in all {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Domain(format!("pair distance {d} is not positive")));
            }
            if d < cfg.wavelength {
                log::warn!(
                    "pair distance {d} m is below one wavelength; far-field model assumed anyway"
                );
            }
        }
        Ok(hops)
    }

    /// Hop impedances `(z_RS, z_DR)` of RIS element `element` between Tx
    /// antenna 1 and Rx antenna 1.
    pub fn reference_hops(
        &self,
        cfg: &LinkConfig,
        element: usize,
    ) -> Result<(Complex64, Complex64)> {
        if element >= cfg.ris_elements {
            return Err(Error::Domain(format!(
                "reference element {element} out of range for {} elements",
                cfg.ris_elements
            )));
        }
        let hops = self.hop_distances(cfg)?;
        let z_rs = mutual_impedance(hops.d_rs.get(element, 0), cfg.wavelength, cfg.resistance)?;
        let z_dr = hop_impedance(
            hops.d_dr.get(0, element),
            hops.ris_excess[element],
            cfg.wavelength,
            cfg.resistance,
        )?;
        Ok((z_rs, z_dr))
    }
}

fn warn_close_spacing(ris: &[Point3], wavelength: f64) {
    for (i, p) in ris.iter().enumerate() {
        for q in &ris[i + 1..] {
            if euclidean(p, q) < 0.5 * wavelength {
                log::warn!("RIS elements closer than λ/2; intra-array coupling is still neglected");
                return;
            }
        }
    }
}

fn impedance_table(
    rows: usize,
    cols: usize,
    f: impl Fn(usize, usize) -> Result<Complex64> + Sync,
) -> Result<ComplexMatrix> {
    let entries: Vec<Complex64> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| f(idx / cols, idx % cols))
        .collect::<Result<_>>()?;
    ComplexMatrix::from_row_major(rows, cols, entries)
}

/// Assembles the matched, unilateral multiport impedance matrix.
pub fn build_unilateral_multiport(
    cfg: &LinkConfig,
    geom: &LinkGeometry,
) -> Result<MultiportImpedance> {
    cfg.validate()?;
    let hops = geom.hop_distances(cfg)?;
    let (m, n, k) = (cfg.tx_antennas, cfg.ris_elements, cfg.rx_antennas);
    let (lambda, r) = (cfg.wavelength, cfg.resistance);

    let z_rs = impedance_table(n, m, |i, j| {
        mutual_impedance(hops.d_rs.get(i, j), lambda, r)
    })?;
    let z_dr = impedance_table(k, n, |i, j| {
        hop_impedance(hops.d_dr.get(i, j), hops.ris_excess[j], lambda, r)
    })?;
    let z_ds = match &hops.d_ds {
        Some(t) => impedance_table(k, m, |i, j| mutual_impedance(t.get(i, j), lambda, r))?,
        None => ComplexMatrix::zeros(k, m),
    };

    let mut blocks = PartitionedMatrix::zeros(cfg.partition());
    blocks.set_block(Port::Tx, Port::Tx, &ComplexMatrix::scaled_identity(m, r))?;
    blocks.set_block(Port::Ris, Port::Ris, &ComplexMatrix::scaled_identity(n, r))?;
    blocks.set_block(Port::Rx, Port::Rx, &ComplexMatrix::scaled_identity(k, r))?;
    blocks.set_block(Port::Ris, Port::Tx, &z_rs)?;
    blocks.set_block(Port::Rx, Port::Ris, &z_dr)?;
    blocks.set_block(Port::Rx, Port::Tx, &z_ds)?;
    Ok(MultiportImpedance::new(blocks))
}

/// A link configuration with its geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: LinkConfig,
    pub geometry: LinkGeometry,
}

impl Scenario {
    pub fn new(config: LinkConfig, geometry: LinkGeometry) -> Result<Self> {
        config.validate()?;
        geometry.hop_distances(&config)?;
        Ok(Self { config, geometry })
    }

    /// SISO link through a single RIS element with the direct path blocked.
    /// Hop lengths are given in wavelengths.
    pub fn single_element(d_rs: f64, d_dr: f64, resistance: f64) -> Result<Self> {
        Self::siso_blocked(&[0.0], d_rs, d_dr, resistance)
    }

    /// SISO link through two RIS elements with the direct path blocked.
    /// Element 2's path is `spacing` wavelengths longer than element 1's;
    /// the extra length only shifts its phase.
    pub fn two_element(d_rs: f64, d_dr: f64, spacing: f64, resistance: f64) -> Result<Self> {
        Self::siso_blocked(&[0.0, spacing], d_rs, d_dr, resistance)
    }

    fn siso_blocked(excess: &[f64], d_rs: f64, d_dr: f64, resistance: f64) -> Result<Self> {
        let n = excess.len();
        let config = LinkConfig::new(1, n, 1).with_resistance(resistance);
        let geometry = LinkGeometry::PathLengths(PathLengths {
            d_rs: DistanceTable::filled(n, 1, d_rs),
            d_dr: DistanceTable::filled(1, n, d_dr),
            d_ds: None,
            ris_excess: excess.to_vec(),
            blocked_direct: true,
        });
        Self::new(config, geometry)
    }

    pub fn multiport(&self) -> Result<MultiportImpedance> {
        build_unilateral_multiport(&self.config, &self.geometry)
    }
}
