//! Block-partitioned impedance and scattering descriptions of the
//! Tx / RIS / Rx multiport, and the conversion between them.
//!
//! Ports are ordered Tx (M), RIS (N), Rx (K). Every block accessor is a view
//! into the one dense matrix, so a Z and the S derived from it always share
//! the same partition.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Default common port resistance in ohms.
pub const DEFAULT_RESISTANCE: f64 = 50.0;

/// Port group of the three-port system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    /// Transmitter ("S", source side).
    Tx,
    /// RIS elements.
    Ris,
    /// Receiver ("D", destination side).
    Rx,
}

impl Port {
    pub const ALL: [Port; 3] = [Port::Tx, Port::Ris, Port::Rx];

    pub fn label(self) -> &'static str {
        match self {
            Port::Tx => "S",
            Port::Ris => "R",
            Port::Rx => "D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Partition {
    pub tx: usize,
    pub ris: usize,
    pub rx: usize,
}

impl Partition {
    pub fn new(tx: usize, ris: usize, rx: usize) -> Self {
        Self { tx, ris, rx }
    }

    pub fn size(&self, port: Port) -> usize {
        match port {
            Port::Tx => self.tx,
            Port::Ris => self.ris,
            Port::Rx => self.rx,
        }
    }

    pub fn offset(&self, port: Port) -> usize {
        match port {
            Port::Tx => 0,
            Port::Ris => self.tx,
            Port::Rx => self.tx + self.ris,
        }
    }

    pub fn total(&self) -> usize {
        self.tx + self.ris + self.rx
    }
}

/// Read-only view of one block of a partitioned matrix.
#[derive(Clone, Copy)]
pub struct BlockView<'a> {
    parent: &'a ComplexMatrix,
    r0: usize,
    c0: usize,
    rows: usize,
    cols: usize,
}

impl<'a> BlockView<'a> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < self.rows && j < self.cols, "block index out of range");
        self.parent[(self.r0 + i, self.c0 + j)]
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        self.parent
            .submatrix(self.r0, self.c0, self.rows, self.cols)
    }

    pub fn is_zero(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j) == Complex64::new(0.0, 0.0)))
    }
}

/// A square matrix over all ports together with its Tx/RIS/Rx partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedMatrix {
    partition: Partition,
    matrix: ComplexMatrix,
}

impl PartitionedMatrix {
    pub fn new(partition: Partition, matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != partition.total() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix does not fit partition ({}, {}, {})",
                matrix.rows(),
                matrix.cols(),
                partition.tx,
                partition.ris,
                partition.rx
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        Ok(Self { partition, matrix })
    }

    pub fn zeros(partition: Partition) -> Self {
        let n = partition.total();
        Self {
            partition,
            matrix: ComplexMatrix::zeros(n, n),
        }
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn block(&self, row: Port, col: Port) -> BlockView<'_> {
        BlockView {
            parent: &self.matrix,
            r0: self.partition.offset(row),
            c0: self.partition.offset(col),
            rows: self.partition.size(row),
            cols: self.partition.size(col),
        }
    }

    pub fn set_block(&mut self, row: Port, col: Port, block: &ComplexMatrix) -> Result<()> {
        let (rows, cols) = (self.partition.size(row), self.partition.size(col));
        if block.rows() != rows || block.cols() != cols {
            return Err(Error::Dimension(format!(
                "block {}{} must be {rows}x{cols}, got {}x{}",
                row.label(),
                col.label(),
                block.rows(),
                block.cols()
            )));
        }
        self.matrix.set_submatrix(
            self.partition.offset(row),
            self.partition.offset(col),
            block,
        );
        Ok(())
    }

    /// True when the Tx←RIS, Tx←Rx and RIS←Rx blocks are exactly zero.
    pub fn upper_blocks_zero(&self) -> bool {
        self.block(Port::Tx, Port::Ris).is_zero()
            && self.block(Port::Tx, Port::Rx).is_zero()
            && self.block(Port::Ris, Port::Rx).is_zero()
    }
}

macro_rules! block_accessors {
    ($ty:ident, $($name:ident => ($row:expr, $col:expr)),* $(,)?) => {
        impl $ty {
            $(
                pub fn $name(&self) -> ComplexMatrix {
                    self.0.block($row, $col).to_matrix()
                }
            )*
        }
    };
}

/// Impedance matrix of the three-port system, `v = Z·i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiportImpedance(PartitionedMatrix);

block_accessors!(MultiportImpedance,
    z_s => (Port::Tx, Port::Tx),
    z_r => (Port::Ris, Port::Ris),
    z_d => (Port::Rx, Port::Rx),
    z_rs => (Port::Ris, Port::Tx),
    z_ds => (Port::Rx, Port::Tx),
    z_dr => (Port::Rx, Port::Ris),
    z_sr => (Port::Tx, Port::Ris),
    z_sd => (Port::Tx, Port::Rx),
    z_rd => (Port::Ris, Port::Rx),
);

impl MultiportImpedance {
    pub fn new(blocks: PartitionedMatrix) -> Self {
        Self(blocks)
    }

    pub fn from_matrix(partition: Partition, z: ComplexMatrix) -> Result<Self> {
        PartitionedMatrix::new(partition, z).map(Self)
    }

    pub fn blocks(&self) -> &PartitionedMatrix {
        &self.0
    }

    pub fn partition(&self) -> Partition {
        self.0.partition()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.0.matrix()
    }

    pub fn block(&self, row: Port, col: Port) -> BlockView<'_> {
        self.0.block(row, col)
    }

    /// Checks the matched, unilateral structure: diagonal blocks `I·R`
    /// (to 1e-12 relative) and exactly zero feedback blocks.
    pub fn check_unilateral(&self, resistance: f64) -> Result<()> {
        if !self.0.upper_blocks_zero() {
            return Err(Error::Structure("Z_SR, Z_SD and Z_RD must be zero".into()));
        }
        for port in Port::ALL {
            let diag = self.block(port, port).to_matrix();
            let expect = ComplexMatrix::scaled_identity(diag.rows(), resistance);
            if diag.relative_deviation(&expect) > 1e-12 {
                return Err(Error::Structure(format!(
                    "Z_{} is not I·R with R = {resistance}",
                    port.label()
                )));
            }
        }
        Ok(())
    }

    /// `S = (Z − I·R)(Z + I·R)⁻¹`.
    pub fn to_scattering(&self, resistance: f64) -> Result<MultiportScattering> {
        let s = z_to_s_matrix(self.matrix(), resistance)?;
        Ok(MultiportScattering {
            blocks: PartitionedMatrix::new(self.partition(), s)?,
            resistance,
        })
    }
}

/// Scattering matrix of the three-port system, `b = S·a`, referenced to a
/// common port resistance.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiportScattering {
    blocks: PartitionedMatrix,
    resistance: f64,
}

macro_rules! scattering_accessors {
    ($($name:ident => ($row:expr, $col:expr)),* $(,)?) => {
        impl MultiportScattering {
            $(
                pub fn $name(&self) -> ComplexMatrix {
                    self.blocks.block($row, $col).to_matrix()
                }
            )*
        }
    };
}

scattering_accessors!(
    s_s => (Port::Tx, Port::Tx),
    s_r => (Port::Ris, Port::Ris),
    s_d => (Port::Rx, Port::Rx),
    s_rs => (Port::Ris, Port::Tx),
    s_ds => (Port::Rx, Port::Tx),
    s_dr => (Port::Rx, Port::Ris),
    s_sr => (Port::Tx, Port::Ris),
    s_sd => (Port::Tx, Port::Rx),
    s_rd => (Port::Ris, Port::Rx),
);

impl MultiportScattering {
    pub fn new(blocks: PartitionedMatrix, resistance: f64) -> Result<Self> {
        check_resistance(resistance)?;
        Ok(Self { blocks, resistance })
    }

    pub fn from_matrix(partition: Partition, s: ComplexMatrix, resistance: f64) -> Result<Self> {
        Self::new(PartitionedMatrix::new(partition, s)?, resistance)
    }

    pub fn resistance(&self) -> f64 {
        self.resistance
    }

    pub fn blocks(&self) -> &PartitionedMatrix {
        &self.blocks
    }

    pub fn partition(&self) -> Partition {
        self.blocks.partition()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.blocks.matrix()
    }

    pub fn block(&self, row: Port, col: Port) -> BlockView<'_> {
        self.blocks.block(row, col)
    }

    /// Zero diagonal blocks and zero feedback blocks.
    pub fn check_unilateral(&self) -> Result<()> {
        if !self.blocks.upper_blocks_zero() {
            return Err(Error::Structure("S_SR, S_SD and S_RD must be zero".into()));
        }
        for port in Port::ALL {
            let diag = self.block(port, port).to_matrix();
            if diag.frobenius_norm() > 1e-12 {
                return Err(Error::Structure(format!("S_{} is not zero", port.label())));
            }
        }
        Ok(())
    }

    /// `Z = R·(I + S)(I − S)⁻¹`.
    pub fn to_impedance(&self) -> Result<MultiportImpedance> {
        let z = s_to_z_matrix(self.matrix(), self.resistance)?;
        MultiportImpedance::from_matrix(self.partition(), z)
    }
}

/// Converts a multiport impedance description to scattering parameters.
pub fn z_to_s(z: &MultiportImpedance, resistance: f64) -> Result<MultiportScattering> {
    z.to_scattering(resistance)
}

/// Converts scattering parameters back to an impedance description.
pub fn s_to_z(s: &MultiportScattering) -> Result<MultiportImpedance> {
    s.to_impedance()
}

fn check_resistance(resistance: f64) -> Result<()> {
    if !(resistance > 0.0 && resistance.is_finite()) {
        return Err(Error::Domain(format!(
            "port resistance must be positive and finite, got {resistance}"
        )));
    }
    Ok(())
}

/// `S = (Z − I·R)(Z + I·R)⁻¹` on a full square matrix.
pub fn z_to_s_matrix(z: &ComplexMatrix, resistance: f64) -> Result<ComplexMatrix> {
    check_resistance(resistance)?;
    if !z.is_square() {
        return Err(Error::Dimension("impedance matrix must be square".into()));
    }
    let r_eye = ComplexMatrix::scaled_identity(z.rows(), resistance);
    let inv = (z + &r_eye).inverse().map_err(|e| relabel(e, "Z + I·R"))?;
    let s = &(z - &r_eye) * &inv;
    finite_or_err(s)
}

/// `Z = R·(I + S)(I − S)⁻¹` on a full square matrix.
pub fn s_to_z_matrix(s: &ComplexMatrix, resistance: f64) -> Result<ComplexMatrix> {
    check_resistance(resistance)?;
    if !s.is_square() {
        return Err(Error::Dimension("scattering matrix must be square".into()));
    }
    let eye = ComplexMatrix::identity(s.rows());
    let inv = (&eye - s).inverse().map_err(|e| relabel(e, "I − S"))?;
    let z = (&(&eye + s) * &inv).scale_real(resistance);
    finite_or_err(z)
}

fn relabel(err: Error, context: &'static str) -> Error {
    match err {
        Error::Singular {
            pivot, magnitude, ..
        } => Error::Singular {
            context,
            pivot,
            magnitude,
        },
        other => other,
    }
}

fn finite_or_err(m: ComplexMatrix) -> Result<ComplexMatrix> {
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::Domain(
            "conversion produced non-finite entries".into(),
        ))
    }
}

/// Port voltages, currents and voltage waves, all over the full port list.
#[derive(Debug, Clone, PartialEq)]
pub struct PortState {
    partition: Partition,
    pub v: Vec<Complex64>,
    pub i: Vec<Complex64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl PortState {
    /// `a = (v + R·i)/2`, `b = (v − R·i)/2`.
    pub fn from_voltages_currents(
        partition: Partition,
        v: Vec<Complex64>,
        i: Vec<Complex64>,
        resistance: f64,
    ) -> Result<Self> {
        check_resistance(resistance)?;
        check_len(&partition, &v)?;
        check_len(&partition, &i)?;
        let a = v
            .iter()
            .zip(&i)
            .map(|(&v, &i)| (v + i * resistance) * 0.5)
            .collect();
        let b = v
            .iter()
            .zip(&i)
            .map(|(&v, &i)| (v - i * resistance) * 0.5)
            .collect();
        Ok(Self {
            partition,
            v,
            i,
            a,
            b,
        })
    }

    /// `v = a + b`, `i = (a − b)/R`.
    pub fn from_waves(
        partition: Partition,
        a: Vec<Complex64>,
        b: Vec<Complex64>,
        resistance: f64,
    ) -> Result<Self> {
        check_resistance(resistance)?;
        check_len(&partition, &a)?;
        check_len(&partition, &b)?;
        let v = a.iter().zip(&b).map(|(&a, &b)| a + b).collect();
        let i = a
            .iter()
            .zip(&b)
            .map(|(&a, &b)| (a - b) / resistance)
            .collect();
        Ok(Self {
            partition,
            v,
            i,
            a,
            b,
        })
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    /// The entries of `values` that belong to `port`.
    pub fn segment<'a>(&self, values: &'a [Complex64], port: Port) -> &'a [Complex64] {
        let start = self.partition.offset(port);
        &values[start..start + self.partition.size(port)]
    }
}

fn check_len(partition: &Partition, values: &[Complex64]) -> Result<()> {
    if values.len() != partition.total() {
        return Err(Error::Dimension(format!(
            "{} port values for {} ports",
            values.len(),
            partition.total()
        )));
    }
    Ok(())
}
