//! RIS terminations and end-to-end transfer matrices.
//!
//! Every RIS element is closed by a lossless one-port, described either by
//! its reactance `X_n` (`Z_N = diag(j·X_n)`) or by its unit-modulus
//! reflection coefficient `Θ_n = (j·X_n − R)/(j·X_n + R)`.
//!
//! The physically consistent transfer `v_L = D·v_G` can be computed from
//! impedances, from scattering parameters (with the correct `S_DS`), or from
//! impedances parameterized by `Θ`; all three agree. The conventional model
//! drops `S_DS` when the direct link is blocked and does not.

use std::fmt;

use num_complex::Complex64;

use crate::channel::{LinkConfig, LinkGeometry};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::multiport::{MultiportImpedance, MultiportScattering, PartitionedMatrix, Port};

/// Reactance (in units of `R`) substituted for an open circuit.
pub const OPEN_CIRCUIT_SURROGATE: f64 = 1e9;

/// Allowed deviation of `|Θ_n|` from one.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Loads {
    /// `X_n` in ohms; `±∞` denotes an open circuit.
    Reactances(Vec<f64>),
    /// Unit-modulus `Θ_n`.
    Reflections(Vec<Complex64>),
    /// `Θ_n = exp(j·φ_n)`, radians.
    Phases(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisTermination {
    loads: Loads,
    resistance: f64,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `Θ = (jX − R)/(jX + R)`, renormalized onto the unit circle.
fn reflection_of_reactance(x: f64, resistance: f64) -> Complex64 {
    if x.is_infinite() {
        return c(1.0, 0.0);
    }
    let theta = c(-resistance, x) / c(resistance, x);
    theta / theta.norm()
}

/// `X = R·cot(φ/2)`, evaluated as `−j·R·(1 + Θ)/(1 − Θ)`.
fn reactance_of_reflection(theta: Complex64, resistance: f64) -> Option<f64> {
    let den = c(1.0, 0.0) - theta;
    if den.norm() == 0.0 {
        return None;
    }
    let x = (c(0.0, -1.0) * (c(1.0, 0.0) + theta) / den).re;
    Some(resistance * x)
}

impl RisTermination {
    pub fn reactances(x: Vec<f64>, resistance: f64) -> Result<Self> {
        check_resistance(resistance)?;
        if let Some(n) = x.iter().position(|v| v.is_nan()) {
            return Err(Error::Termination(format!("reactance {n} is NaN")));
        }
        Ok(Self {
            loads: Loads::Reactances(x),
            resistance,
        })
    }

    /// Reactances given as `x_n = X_n / R`.
    pub fn normalized_reactances(x: &[f64], resistance: f64) -> Result<Self> {
        Self::reactances(x.iter().map(|v| v * resistance).collect(), resistance)
    }

    pub fn reflections(theta: Vec<Complex64>, resistance: f64) -> Result<Self> {
        check_resistance(resistance)?;
        for (n, t) in theta.iter().enumerate() {
            let dev = (t.norm() - 1.0).abs();
            if dev.is_nan() || dev > UNIT_MODULUS_TOL {
                return Err(Error::Termination(format!(
                    "Θ_{n} = {t} is not unit-modulus (lossless terminations only)"
                )));
            }
        }
        Ok(Self {
            loads: Loads::Reflections(theta),
            resistance,
        })
    }

    pub fn phases(phi: Vec<f64>, resistance: f64) -> Result<Self> {
        check_resistance(resistance)?;
        if let Some(n) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::Termination(format!("phase {n} is not finite")));
        }
        Ok(Self {
            loads: Loads::Phases(phi),
            resistance,
        })
    }

    pub fn loads(&self) -> &Loads {
        &self.loads
    }

    pub fn resistance(&self) -> f64 {
        self.resistance
    }

    pub fn len(&self) -> usize {
        match &self.loads {
            Loads::Reactances(v) | Loads::Phases(v) => v.len(),
            Loads::Reflections(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Converts a reactance-mode termination to reflection mode.
    pub fn theta_from_zn(&self) -> Result<RisTermination> {
        match &self.loads {
            Loads::Reactances(_) => Ok(Self {
                loads: Loads::Reflections(self.reflection_coefficients()),
                resistance: self.resistance,
            }),
            _ => Err(Error::Termination(
                "theta_from_zn expects reactance mode".into(),
            )),
        }
    }

    /// Converts a reflection- or phase-mode termination to reactance mode.
    /// Fails with [`Error::OpenCircuit`] on `Θ_n = 1`.
    pub fn zn_from_theta(&self) -> Result<RisTermination> {
        match &self.loads {
            Loads::Reactances(_) => Err(Error::Termination(
                "zn_from_theta expects reflection mode".into(),
            )),
            _ => Ok(Self {
                loads: Loads::Reactances(self.reactance_values()?),
                resistance: self.resistance,
            }),
        }
    }

    /// Like [`zn_from_theta`](Self::zn_from_theta), but open circuits become
    /// `surrogate · R`. Returns the indices that were substituted.
    ///
    /// The substituted element's `Θ` then differs from one by about
    /// `2 / surrogate`.
    pub fn zn_from_theta_with_surrogate(
        &self,
        surrogate: f64,
    ) -> Result<(RisTermination, Vec<usize>)> {
        let mut replaced = Vec::new();
        let x = self
            .reflection_coefficients()
            .into_iter()
            .enumerate()
            .map(|(n, t)| {
                reactance_of_reflection(t, self.resistance).unwrap_or_else(|| {
                    replaced.push(n);
                    surrogate * self.resistance
                })
            })
            .collect();
        if !replaced.is_empty() {
            log::warn!("open-circuited RIS elements {replaced:?} replaced by X = {surrogate:e}·R");
        }
        Ok((Self::reactances(x, self.resistance)?, replaced))
    }

    /// `Θ_n` for every element, whatever the mode.
    pub fn reflection_coefficients(&self) -> Vec<Complex64> {
        match &self.loads {
            Loads::Reactances(x) => x
                .iter()
                .map(|&x| reflection_of_reactance(x, self.resistance))
                .collect(),
            Loads::Reflections(t) => t.clone(),
            Loads::Phases(p) => p.iter().map(|&p| Complex64::from_polar(1.0, p)).collect(),
        }
    }

    /// `X_n` for every element, whatever the mode.
    pub fn reactance_values(&self) -> Result<Vec<f64>> {
        match &self.loads {
            Loads::Reactances(x) => Ok(x.clone()),
            _ => self
                .reflection_coefficients()
                .into_iter()
                .enumerate()
                .map(|(n, t)| {
                    reactance_of_reflection(t, self.resistance)
                        .ok_or(Error::OpenCircuit { element: n })
                })
                .collect(),
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::Dimension(format!(
                "{} terminations for {n} RIS elements",
                self.len()
            )));
        }
        Ok(())
    }

    fn check_resistance_matches(&self, resistance: f64) -> Result<()> {
        if (self.resistance - resistance).abs() > 1e-12 * resistance {
            return Err(Error::Termination(format!(
                "termination referenced to {} Ω, network to {resistance} Ω",
                self.resistance
            )));
        }
        Ok(())
    }
}

fn check_resistance(resistance: f64) -> Result<()> {
    if !(resistance > 0.0 && resistance.is_finite()) {
        return Err(Error::Domain(format!(
            "port resistance must be positive, got {resistance}"
        )));
    }
    Ok(())
}

/// Which formula produced a transfer matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferModel {
    /// From impedances with `(Z_N + I·R)⁻¹`.
    PhysicalImpedance,
    /// From scattering parameters with the exact `S_DS`.
    PhysicalScattering,
    /// Impedance form with `Z_DS = 0`.
    PhysicalBlocked,
    /// Scattering form that ignores the cascade part of `S_DS`.
    Conventional,
    /// Impedance form parameterized by `Θ`.
    ThetaForm,
}

impl TransferModel {
    pub fn tag(self) -> &'static str {
        match self {
            TransferModel::PhysicalImpedance => "physical-Z",
            TransferModel::PhysicalScattering => "physical-S",
            TransferModel::PhysicalBlocked => "physical-blocked",
            TransferModel::Conventional => "conventional",
            TransferModel::ThetaForm => "theta-form",
        }
    }
}

impl fmt::Display for TransferModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// K x M voltage transfer `v_L = T·v_G`, optionally with path loss removed.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub model: TransferModel,
    pub matrix: ComplexMatrix,
    pub normalized: Option<ComplexMatrix>,
}

impl TransferResult {
    fn new(model: TransferModel, matrix: ComplexMatrix) -> Self {
        Self {
            model,
            matrix,
            normalized: None,
        }
    }

    /// Normalized matrix if present, otherwise the raw one.
    pub fn effective(&self) -> &ComplexMatrix {
        self.normalized.as_ref().unwrap_or(&self.matrix)
    }

    /// Per-entry `|T_ij|²` of the normalized matrix (raw if not normalized).
    pub fn power_gain(&self) -> Vec<f64> {
        self.effective()
            .as_slice()
            .iter()
            .map(|z| z.norm_sqr())
            .collect()
    }

    pub fn power_gain_db(&self) -> Vec<f64> {
        self.power_gain().into_iter().map(to_db).collect()
    }

    /// Per-entry `|D_ij|²` of the raw transfer (absolute link gain).
    pub fn absolute_gain_db(&self) -> Vec<f64> {
        self.matrix
            .as_slice()
            .iter()
            .map(|z| to_db(z.norm_sqr()))
            .collect()
    }

    /// `‖T‖_F²` of the normalized matrix.
    pub fn total_gain(&self) -> f64 {
        self.effective().frobenius_norm().powi(2)
    }
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Scattering parameters of the matched unilateral multiport in closed form:
/// `S_RS = Z_RS/(2R)`, `S_DR = Z_DR/(2R)`,
/// `S_DS = (Z_DS − Z_DR·Z_RS/(2R))/(2R)`, all other blocks zero.
pub fn blockwise_z_to_s(z: &MultiportImpedance, resistance: f64) -> Result<MultiportScattering> {
    check_resistance(resistance)?;
    z.check_unilateral(resistance)?;
    let two_r = 2.0 * resistance;
    let z_rs = z.z_rs();
    let z_dr = z.z_dr();
    let cascade = z_dr.try_mul(&z_rs)?;
    let s_ds = z
        .z_ds()
        .try_sub(&cascade.scale_real(1.0 / two_r))?
        .scale_real(1.0 / two_r);

    let mut blocks = PartitionedMatrix::zeros(z.partition());
    blocks.set_block(Port::Ris, Port::Tx, &z_rs.scale_real(1.0 / two_r))?;
    blocks.set_block(Port::Rx, Port::Ris, &z_dr.scale_real(1.0 / two_r))?;
    blocks.set_block(Port::Rx, Port::Tx, &s_ds)?;
    MultiportScattering::new(blocks, resistance)
}

/// `D = (Z_DS − Z_DR·(Z_N + I·R)⁻¹·Z_RS)/(4R)`.
pub fn transfer_impedance(z: &MultiportImpedance, term: &RisTermination) -> Result<TransferResult> {
    let r = term.resistance;
    z.check_unilateral(r)?;
    term.check_len(z.partition().ris)?;
    let x = match &term.loads {
        Loads::Reactances(x) => x.clone(),
        _ => term.reactance_values()?,
    };
    // (Z_N + I·R)⁻¹ is diagonal; an infinite reactance contributes nothing.
    let inv: Vec<Complex64> = x
        .iter()
        .map(|&x| {
            if x.is_infinite() {
                c(0.0, 0.0)
            } else {
                c(1.0, 0.0) / c(r, x)
            }
        })
        .collect();
    let z_ds = z.z_ds();
    let cascade = z.z_dr().mul_diagonal(&inv)?.try_mul(&z.z_rs())?;
    let d = z_ds.try_sub(&cascade)?.scale_real(1.0 / (4.0 * r));
    let model = if z_ds.is_zero() {
        TransferModel::PhysicalBlocked
    } else {
        TransferModel::PhysicalImpedance
    };
    Ok(TransferResult::new(model, d))
}

fn check_scattering(s: &MultiportScattering, term: &RisTermination) -> Result<Vec<Complex64>> {
    s.check_unilateral()?;
    term.check_len(s.partition().ris)?;
    if matches!(term.loads, Loads::Reactances(_)) {
        term.check_resistance_matches(s.resistance())?;
    }
    Ok(term.reflection_coefficients())
}

/// `H = (S_DS + S_DR·Θ·S_RS)/2`.
pub fn transfer_scattering(
    s: &MultiportScattering,
    term: &RisTermination,
) -> Result<TransferResult> {
    let theta = check_scattering(s, term)?;
    let h = s
        .s_ds()
        .try_add(&s.s_dr().mul_diagonal(&theta)?.try_mul(&s.s_rs())?)?
        .scale_real(0.5);
    Ok(TransferResult::new(TransferModel::PhysicalScattering, h))
}

/// Conventional model. With `zero_direct` set, `S_DS` is taken to be zero
/// (the usual assumption for a blocked direct link) and
/// `H = S_DR·Θ·S_RS/2`; otherwise the supplied `S_DS` is used as is.
pub fn transfer_conventional(
    s: &MultiportScattering,
    term: &RisTermination,
    zero_direct: bool,
) -> Result<TransferResult> {
    let theta = check_scattering(s, term)?;
    let mut h = s.s_dr().mul_diagonal(&theta)?.try_mul(&s.s_rs())?;
    if !zero_direct {
        h = h.try_add(&s.s_ds())?;
    }
    Ok(TransferResult::new(
        TransferModel::Conventional,
        h.scale_real(0.5),
    ))
}

/// `D = (Z_DS − Z_DR·Z_RS/(2R) + Z_DR·Θ·Z_RS/(2R))/(4R)`.
pub fn transfer_theta_form(
    z: &MultiportImpedance,
    term: &RisTermination,
) -> Result<TransferResult> {
    let r = term.resistance;
    z.check_unilateral(r)?;
    term.check_len(z.partition().ris)?;
    let theta = term.reflection_coefficients();
    let z_dr = z.z_dr();
    let z_rs = z.z_rs();
    let two_r = 2.0 * r;
    let cascade = z_dr.try_mul(&z_rs)?.scale_real(1.0 / two_r);
    let steered = z_dr
        .mul_diagonal(&theta)?
        .try_mul(&z_rs)?
        .scale_real(1.0 / two_r);
    let d = z
        .z_ds()
        .try_sub(&cascade)?
        .try_add(&steered)?
        .scale_real(1.0 / (4.0 * r));
    Ok(TransferResult::new(TransferModel::ThetaForm, d))
}

/// Path-loss normalization factor `c = −4R²/(z_DR,ref · z_RS,ref)`.
///
/// Applied to a single-element link this turns `D_0` into `1/(1 + j·x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub factor: Complex64,
    pub reference_element: usize,
}

impl Normalization {
    pub fn from_geometry(
        cfg: &LinkConfig,
        geom: &LinkGeometry,
        reference_element: usize,
    ) -> Result<Self> {
        let (z_rs, z_dr) = geom.reference_hops(cfg, reference_element)?;
        Self::from_hops(z_rs, z_dr, cfg.resistance, reference_element)
    }

    pub fn from_hops(
        z_rs: Complex64,
        z_dr: Complex64,
        resistance: f64,
        reference_element: usize,
    ) -> Result<Self> {
        let prod = z_dr * z_rs;
        if prod.norm() == 0.0 || !prod.is_finite() {
            return Err(Error::Normalization(
                "reference hop impedances vanish".into(),
            ));
        }
        Ok(Self {
            factor: -4.0 * resistance * resistance / prod,
            reference_element,
        })
    }

    pub fn apply(&self, mut result: TransferResult) -> TransferResult {
        result.normalized = Some(result.matrix.scale(self.factor));
        result
    }
}

/// Removes the path loss of RIS element 1's hops from `result`.
pub fn normalize_transfer(
    result: TransferResult,
    cfg: &LinkConfig,
    geom: &LinkGeometry,
) -> Result<TransferResult> {
    Ok(Normalization::from_geometry(cfg, geom, 0)?.apply(result))
}

/// The transfer matrix as an affine function of the reflection
/// coefficients, `T(Θ) = base + Σ_n Θ_n·C_n`, where `C_n` is the rank-one
/// cascade through element `n`. Used for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct CascadeForm {
    base: ComplexMatrix,
    terms: Vec<ComplexMatrix>,
}

impl CascadeForm {
    /// Physically consistent model (any `Z_DS`).
    pub fn physical(z: &MultiportImpedance, resistance: f64) -> Result<Self> {
        z.check_unilateral(resistance)?;
        let z_dr = z.z_dr();
        let z_rs = z.z_rs();
        let scale = 1.0 / (8.0 * resistance * resistance);
        let terms = outer_terms(&z_dr, &z_rs, scale);
        let mut base = z.z_ds().scale_real(1.0 / (4.0 * resistance));
        for t in &terms {
            base = &base - t;
        }
        Ok(Self { base, terms })
    }

    /// Conventional model, see [`transfer_conventional`].
    pub fn conventional(s: &MultiportScattering, zero_direct: bool) -> Result<Self> {
        s.check_unilateral()?;
        let terms = outer_terms(&s.s_dr(), &s.s_rs(), 0.5);
        let base = if zero_direct {
            ComplexMatrix::zeros(s.partition().rx, s.partition().tx)
        } else {
            s.s_ds().scale_real(0.5)
        };
        Ok(Self { base, terms })
    }

    pub fn elements(&self) -> usize {
        self.terms.len()
    }

    pub fn base(&self) -> &ComplexMatrix {
        &self.base
    }

    /// Multiplies base and terms by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            base: self.base.scale(factor),
            terms: self.terms.iter().map(|t| t.scale(factor)).collect(),
        }
    }

    pub fn evaluate(&self, theta: &[Complex64]) -> ComplexMatrix {
        assert_eq!(theta.len(), self.terms.len(), "one Θ per element");
        let mut out = self.base.clone();
        for (t, &th) in self.terms.iter().zip(theta) {
            out = &out + &t.scale(th);
        }
        out
    }

    /// The unit-modulus `Θ_n` maximizing `‖T(Θ)‖_F²` with every other
    /// coefficient held at `theta`. The gain is `const + 2·Re(Θ_n·c)`, so
    /// the maximizer is `conj(c)/|c|`; `None` when `c = 0` (no preference).
    pub fn coordinate_optimum(&self, theta: &[Complex64], n: usize) -> Option<Complex64> {
        let own = self.terms[n].as_slice();
        let mut corr = Complex64::new(0.0, 0.0);
        for (e, &o) in own.iter().enumerate() {
            let mut rest = self.base.as_slice()[e];
            for (m, (t, &th)) in self.terms.iter().zip(theta).enumerate() {
                if m != n {
                    rest += t.as_slice()[e] * th;
                }
            }
            corr += rest.conj() * o;
        }
        let mag = corr.norm();
        (mag > 0.0).then(|| corr.conj() / mag)
    }

    /// `‖T(Θ)‖_F²` without allocating.
    pub fn power(&self, theta: &[Complex64]) -> f64 {
        let entries = self.base.as_slice().len();
        let mut total = 0.0;
        for e in 0..entries {
            let mut acc = self.base.as_slice()[e];
            for (t, &th) in self.terms.iter().zip(theta) {
                acc += t.as_slice()[e] * th;
            }
            total += acc.norm_sqr();
        }
        total
    }
}

fn outer_terms(dr: &ComplexMatrix, rs: &ComplexMatrix, scale: f64) -> Vec<ComplexMatrix> {
    (0..rs.rows())
        .map(|n| {
            ComplexMatrix::from_fn(dr.rows(), rs.cols(), |k, m| dr[(k, n)] * rs[(n, m)] * scale)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Scenario;
    use std::f64::consts::PI;

    const R: f64 = 50.0;

    fn theta_of_x(x: f64) -> Complex64 {
        RisTermination::normalized_reactances(&[x], R)
            .unwrap()
            .reflection_coefficients()[0]
    }

    #[test]
    fn short_circuit_reflects_minus_one() {
        assert!((theta_of_x(0.0) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unit_reactance_reflects_j() {
        assert!((theta_of_x(1.0) - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn open_circuit_limit() {
        assert!((theta_of_x(1e12) - c(1.0, 0.0)).norm() < 1e-11);
        assert!((theta_of_x(-1e12) - c(1.0, 0.0)).norm() < 1e-11);
        assert_eq!(theta_of_x(f64::INFINITY), c(1.0, 0.0));
    }

    #[test]
    fn theta_from_zn_requires_reactances() {
        let t = RisTermination::phases(vec![0.3], R).unwrap();
        assert!(t.theta_from_zn().is_err());
        let t = RisTermination::reactances(vec![3.0, -7.0], R)
            .unwrap()
            .theta_from_zn()
            .unwrap();
        assert!(matches!(t.loads(), Loads::Reflections(v) if v.len() == 2));
    }

    #[test]
    fn reactance_of_known_reflections() {
        let cases = [
            (c(-1.0, 0.0), 0.0),
            (c(0.0, 1.0), R),
            (Complex64::from_polar(1.0, PI / 3.0), R * 3f64.sqrt()),
        ];
        for (theta, x) in cases {
            let t = RisTermination::reflections(vec![theta], R).unwrap();
            let got = t.zn_from_theta().unwrap().reactance_values().unwrap()[0];
            assert!((got - x).abs() < 1e-12 * R, "Θ = {theta}: {got} vs {x}");
        }
    }

    #[test]
    fn open_circuit_has_no_reactance() {
        let t = RisTermination::reflections(vec![c(0.0, 1.0), c(1.0, 0.0)], R).unwrap();
        assert_eq!(t.zn_from_theta(), Err(Error::OpenCircuit { element: 1 }));
        let (x, replaced) = t
            .zn_from_theta_with_surrogate(OPEN_CIRCUIT_SURROGATE)
            .unwrap();
        assert_eq!(replaced, vec![1]);
        let theta = x.reflection_coefficients()[1];
        assert!((theta - c(1.0, 0.0)).norm() < 2.1 / OPEN_CIRCUIT_SURROGATE);
    }

    #[test]
    fn lossy_reflection_is_rejected() {
        assert!(RisTermination::reflections(vec![c(0.0, 0.0)], R).is_err());
        assert!(RisTermination::reflections(vec![c(0.5, 0.0)], R).is_err());
    }

    #[test]
    fn blockwise_requires_unilateral_input() {
        let sc = Scenario::two_element(10.0, 20.0, 0.3, R).unwrap();
        let z = sc.multiport().unwrap();
        let mut m = z.matrix().clone();
        m[(0, 1)] = c(1.0, 0.0);
        let bad = MultiportImpedance::from_matrix(z.partition(), m).unwrap();
        assert!(matches!(
            blockwise_z_to_s(&bad, R),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn blocked_direct_link_still_has_s_ds() {
        let sc = Scenario::two_element(100.0, 1000.0, 0.25, R).unwrap();
        let s = blockwise_z_to_s(&sc.multiport().unwrap(), R).unwrap();
        let cascade = s.s_dr().try_mul(&s.s_rs()).unwrap();
        assert!(s.s_ds().frobenius_norm() > 0.0);
        assert!((&s.s_ds() + &cascade).frobenius_norm() <= 1e-15 * cascade.frobenius_norm());
    }

    #[test]
    fn no_ris_paths_leaves_direct_term() {
        let cfg = LinkConfig::new(1, 1, 1);
        let mut z = crate::multiport::PartitionedMatrix::zeros(cfg.partition());
        for p in Port::ALL {
            z.set_block(p, p, &ComplexMatrix::scaled_identity(1, R))
                .unwrap();
        }
        let z_ds = ComplexMatrix::from_diagonal(&[c(0.3, -0.2)]);
        z.set_block(Port::Rx, Port::Tx, &z_ds).unwrap();
        let z = MultiportImpedance::new(z);
        let s = blockwise_z_to_s(&z, R).unwrap();
        assert!((s.s_ds()[(0, 0)] - z_ds[(0, 0)] / (2.0 * R)).norm() < 1e-18);
        let term = RisTermination::normalized_reactances(&[0.7], R).unwrap();
        let d = transfer_impedance(&z, &term).unwrap();
        assert!((d.matrix[(0, 0)] - z_ds[(0, 0)] / (4.0 * R)).norm() < 1e-18);
        assert_eq!(d.model, TransferModel::PhysicalImpedance);
    }

    #[test]
    fn open_ris_is_invisible_in_theta_form() {
        let sc = Scenario::two_element(10.0, 30.0, 0.4, R).unwrap();
        let z = sc.multiport().unwrap();
        let term = RisTermination::reflections(vec![c(1.0, 0.0); 2], R).unwrap();
        let d = transfer_theta_form(&z, &term).unwrap();
        assert!(d.matrix.frobenius_norm() < 1e-20);
        let s = blockwise_z_to_s(&z, R).unwrap();
        let h = transfer_scattering(&s, &term).unwrap();
        assert!(h.matrix.frobenius_norm() < 1e-20);
    }

    #[test]
    fn all_short_gives_full_cascade() {
        let sc = Scenario::two_element(10.0, 30.0, 0.4, R).unwrap();
        let z = sc.multiport().unwrap();
        let s = blockwise_z_to_s(&z, R).unwrap();
        let term = RisTermination::reflections(vec![c(-1.0, 0.0); 2], R).unwrap();
        let h = transfer_scattering(&s, &term).unwrap();
        let cascade = s.s_dr().try_mul(&s.s_rs()).unwrap();
        assert!(h.matrix.relative_deviation(&(-&cascade)) < 1e-14);
        let short = RisTermination::normalized_reactances(&[0.0, 0.0], R).unwrap();
        let d = transfer_impedance(&z, &short).unwrap();
        let d_theta = transfer_theta_form(&z, &term).unwrap();
        assert!(d.matrix.relative_deviation(&d_theta.matrix) < 1e-12);
    }

    #[test]
    fn conventional_rejects_zero_theta() {
        assert!(RisTermination::reflections(vec![c(0.0, 0.0)], R).is_err());
    }

    #[test]
    fn termination_length_is_checked() {
        let sc = Scenario::two_element(10.0, 30.0, 0.4, R).unwrap();
        let z = sc.multiport().unwrap();
        let term = RisTermination::normalized_reactances(&[0.0], R).unwrap();
        assert!(matches!(
            transfer_impedance(&z, &term),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn normalization_of_single_element() {
        let sc = Scenario::single_element(100.0, 1000.0, R).unwrap();
        let z = sc.multiport().unwrap();
        for x in [-1.0, 0.0, 1.0, 2.5] {
            let term = RisTermination::normalized_reactances(&[x], R).unwrap();
            let d = transfer_impedance(&z, &term).unwrap();
            let n = normalize_transfer(d, &sc.config, &sc.geometry).unwrap();
            let got = n.normalized.unwrap()[(0, 0)];
            let expect = c(1.0, 0.0) / c(1.0, x);
            assert!((got - expect).norm() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn raw_single_element_matches_closed_form() {
        // D_0 = R/(R + jX) / ((4π)²·10⁵)
        let sc = Scenario::single_element(100.0, 1000.0, R).unwrap();
        let z = sc.multiport().unwrap();
        let term = RisTermination::normalized_reactances(&[0.5], R).unwrap();
        let d = transfer_impedance(&z, &term).unwrap().matrix[(0, 0)];
        let expect = c(1.0, 0.0) / c(1.0, 0.5) / ((4.0 * PI).powi(2) * 1e5);
        assert!((d - expect).norm() / expect.norm() < 1e-12);
    }

    #[test]
    fn cascade_form_matches_direct_formulas() {
        let sc = Scenario::two_element(7.0, 13.0, 0.37, R).unwrap();
        let z = sc.multiport().unwrap();
        let s = blockwise_z_to_s(&z, R).unwrap();
        let term = RisTermination::phases(vec![0.4, -2.1], R).unwrap();
        let theta = term.reflection_coefficients();

        let phys = CascadeForm::physical(&z, R).unwrap();
        let d = transfer_theta_form(&z, &term).unwrap().matrix;
        assert!(phys.evaluate(&theta).relative_deviation(&d) < 1e-13);
        assert!(
            (phys.power(&theta) - d.frobenius_norm().powi(2)).abs() < 1e-13 * phys.power(&theta)
        );

        let conv = CascadeForm::conventional(&s, true).unwrap();
        let h = transfer_conventional(&s, &term, true).unwrap().matrix;
        assert!(conv.evaluate(&theta).relative_deviation(&h) < 1e-13);
    }
}
