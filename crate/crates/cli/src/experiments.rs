use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use risnet::optimize::{
    cross_apply, grid_oracle, local_search, random_phase_baseline, BaselineEstimate, Domain,
    GridAxis, GridSpec, Model, OptimizationProblem, SearchOptions,
};
use risnet::ris::{to_db, OPEN_CIRCUIT_SURROGATE};
use risnet::{
    blockwise_z_to_s, normalize_transfer, transfer_conventional, transfer_impedance,
    transfer_scattering, transfer_theta_form, ComplexMatrix, RisTermination, Scenario,
};

use crate::error::{CliError, Result};
use crate::table::{Cell, Table};

/// Maximum deviation tolerated between equivalent transfer forms.
pub const EQUIVALENCE_TOL: f64 = 1e-10;
/// Maximum relative gap between optimizer and grid oracle.
pub const ORACLE_TOL: f64 = 1e-6;

/// Hop lengths (in wavelengths) and port resistance of the SISO links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub d_rs: f64,
    pub d_dr: f64,
    pub resistance: f64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        Self {
            d_rs: 100.0,
            d_dr: 1000.0,
            resistance: risnet::multiport::DEFAULT_RESISTANCE,
        }
    }
}

impl LinkSpec {
    pub fn single(&self) -> Result<Scenario> {
        Ok(Scenario::single_element(
            self.d_rs,
            self.d_dr,
            self.resistance,
        )?)
    }

    pub fn pair(&self, spacing: f64) -> Result<Scenario> {
        Ok(Scenario::two_element(
            self.d_rs,
            self.d_dr,
            spacing,
            self.resistance,
        )?)
    }
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F, 1)` for path-loss-normalized matrices,
/// whose entries are of order one unless the link is nearly cancelled.
fn normalized_deviation(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let scale = a.frobenius_norm().max(b.frobenius_norm()).max(1.0);
    (a - b).frobenius_norm() / scale
}

fn equivalence_check(what: &str, deviation: f64) -> Result<()> {
    if deviation.is_nan() || deviation > EQUIVALENCE_TOL {
        return Err(CliError::CrossCheck {
            what: what.into(),
            value: deviation,
            tolerance: EQUIVALENCE_TOL,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    /// Normalized reactance `X/R`; infinite rows are evaluated at the surrogate.
    pub x: f64,
    pub phase_deg: f64,
    pub magnitude: f64,
    pub gain_db: f64,
    pub surrogate: bool,
}

/// Single-element link: normalized transfer for each termination.
///
/// Rows cover `x ∈ {−∞, −1, 0, 1, ∞}` followed by `extra`.
pub fn run_table1(link: &LinkSpec, extra: &[f64]) -> Result<Vec<Table1Row>> {
    let sc = link.single()?;
    let z = sc.multiport()?;
    let s = blockwise_z_to_s(&z, link.resistance)?;
    let xs = [f64::NEG_INFINITY, -1.0, 0.0, 1.0, f64::INFINITY];
    xs.iter()
        .chain(extra)
        .map(|&x| {
            if x.is_nan() {
                return Err(CliError::Argument("x must not be NaN".into()));
            }
            let surrogate = x.is_infinite();
            let xe = if surrogate {
                x.signum() * OPEN_CIRCUIT_SURROGATE
            } else {
                x
            };
            let term = RisTermination::normalized_reactances(&[xe], link.resistance)?;
            let d = normalize_transfer(transfer_impedance(&z, &term)?, &sc.config, &sc.geometry)?;
            let h = normalize_transfer(
                transfer_scattering(&s, &term.theta_from_zn()?)?,
                &sc.config,
                &sc.geometry,
            )?;
            equivalence_check("D vs H", normalized_deviation(h.effective(), d.effective()))?;
            let v = d.effective()[(0, 0)];
            Ok(Table1Row {
                x,
                phase_deg: v.arg().to_degrees(),
                magnitude: v.norm(),
                gain_db: to_db(v.norm_sqr()),
                surrogate,
            })
        })
        .collect()
}

/// Surrogate rows are rendered at their limit: magnitude 0, `-inf` dB.
pub fn table1(rows: &[Table1Row]) -> Table {
    let mut t = Table::new(&["x", "phase_deg", "magnitude", "gain_db", "surrogate"]);
    for r in rows {
        let (mag, db) = if r.surrogate {
            (0.0, f64::NEG_INFINITY)
        } else {
            (r.magnitude, r.gain_db)
        };
        let flag = if r.surrogate {
            format!("x={:e}", r.x.signum() * OPEN_CIRCUIT_SURROGATE)
        } else {
            String::new()
        };
        t.push(vec![
            r.x.into(),
            r.phase_deg.into(),
            mag.into(),
            db.into(),
            flag.into(),
        ]);
    }
    t
}

/// Optimizer settings shared by `table2` and `sweep`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub search: SearchOptions,
    /// Grid oracle range `[−half_width, half_width]` for each `x_n`.
    pub grid_half_width: f64,
    pub grid_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            search: SearchOptions::default(),
            grid_half_width: 3.0,
            grid_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table2Row {
    /// `d/λ`.
    pub spacing: f64,
    pub x_opt: Vec<f64>,
    pub gain_opt: f64,
    pub x_grid: Vec<f64>,
    pub gain_grid: f64,
    /// `|gain_opt − gain_grid| / gain_grid`.
    pub gap: f64,
}

pub const TABLE2_SPACINGS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Two-element link: optimum reactances at each spacing, with the grid
/// oracle alongside.
pub fn run_table2(link: &LinkSpec, cfg: &SearchConfig, spacings: &[f64]) -> Result<Vec<Table2Row>> {
    let axis = GridAxis::new(-cfg.grid_half_width, cfg.grid_half_width, cfg.grid_step);
    spacings
        .iter()
        .map(|&d| {
            let p = OptimizationProblem::new(link.pair(d)?, Model::Physical)?.with_domain(
                Domain::Reactances {
                    bound: Domain::DEFAULT_REACTANCE_BOUND,
                },
            )?;
            let mut opt = local_search(&p, &cfg.search)?;
            let grid = grid_oracle(&p, &GridSpec::uniform(2, axis))?;
            let gap = opt.compare_with(&grid);
            Ok(Table2Row {
                spacing: d,
                x_opt: opt.reactances,
                gain_opt: opt.best_gain,
                x_grid: grid.reactances,
                gain_grid: grid.best_gain,
                gap,
            })
        })
        .collect()
}

/// Fails if any optimizer result strays from its grid oracle.
pub fn check_table2(rows: &[Table2Row]) -> Result<()> {
    match rows.iter().max_by(|a, b| a.gap.total_cmp(&b.gap)) {
        Some(worst) if worst.gap.is_nan() || worst.gap > ORACLE_TOL => Err(CliError::CrossCheck {
            what: format!("optimizer/oracle gap at d = {}", worst.spacing),
            value: worst.gap,
            tolerance: ORACLE_TOL,
        }),
        _ => Ok(()),
    }
}

pub fn table2(rows: &[Table2Row]) -> Table {
    let mut t = Table::new(&[
        "d",
        "x1",
        "x2",
        "gain",
        "gain_db",
        "x1_grid",
        "x2_grid",
        "gain_grid",
        "oracle_gap",
    ]);
    for r in rows {
        t.push(vec![
            r.spacing.into(),
            r.x_opt[0].into(),
            r.x_opt[1].into(),
            r.gain_opt.into(),
            to_db(r.gain_opt).into(),
            r.x_grid[0].into(),
            r.x_grid[1].into(),
            r.gain_grid.into(),
            r.gap.into(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub link: LinkSpec,
    pub spacing_min: f64,
    pub spacing_max: f64,
    pub steps: usize,
    pub trials: u64,
    pub seed: u64,
    /// Phase of element 1 held fixed in the conventional optimum that is
    /// cross-applied.
    pub pinned_phase: f64,
    pub search: SearchOptions,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            link: LinkSpec::default(),
            spacing_min: 0.0,
            spacing_max: 1.0,
            steps: 201,
            trials: 100_000,
            seed: 0,
            pinned_phase: 0.0,
            search: SearchOptions::default(),
        }
    }
}

impl SweepSpec {
    pub fn spacings(&self) -> Result<Vec<f64>> {
        if self.steps < 2 {
            return Err(CliError::Argument(format!(
                "steps must be at least 2, got {}",
                self.steps
            )));
        }
        if !(self.spacing_min.is_finite()
            && self.spacing_max.is_finite()
            && self.spacing_min <= self.spacing_max)
        {
            return Err(CliError::Argument(format!(
                "invalid spacing range [{}, {}]",
                self.spacing_min, self.spacing_max
            )));
        }
        if self.spacing_min < 0.0 || self.spacing_max > 1.0 {
            log::warn!("spacing range extends beyond [0, 1] wavelengths");
        }
        let span = self.spacing_max - self.spacing_min;
        let last = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| self.spacing_min + span * i as f64 / last)
            .collect())
    }
}

/// Linear gains of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub spacing: f64,
    pub physical_opt: f64,
    pub conventional_opt: f64,
    pub cross_applied: f64,
    pub random_physical: BaselineEstimate,
    pub random_conventional: BaselineEstimate,
}

pub fn sweep_row(spec: &SweepSpec, d: f64) -> Result<SweepRow> {
    let physical = OptimizationProblem::new(spec.link.pair(d)?, Model::Physical)?;
    let conventional = physical.with_model(Model::Conventional)?;
    let cross = cross_apply(&physical, spec.pinned_phase, &spec.search)?;
    Ok(SweepRow {
        spacing: d,
        physical_opt: local_search(&physical, &spec.search)?.best_gain,
        conventional_opt: local_search(&conventional, &spec.search)?.best_gain,
        cross_applied: cross.physical.best_gain,
        random_physical: random_phase_baseline(&physical, spec.trials, spec.seed)?,
        random_conventional: random_phase_baseline(&conventional, spec.trials, spec.seed)?,
    })
}

/// Rows are computed in parallel and returned in spacing order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.spacings()?
        .into_par_iter()
        .map(|d| sweep_row(spec, d))
        .collect()
}

pub const SWEEP_COLUMNS: [&str; 6] = [
    "d/λ",
    "gain_physical_opt_db",
    "gain_conventional_opt_db",
    "gain_cross_applied_db",
    "gain_random_physical_db",
    "gain_random_conventional_db",
];

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&SWEEP_COLUMNS);
    for r in rows {
        t.push(vec![
            r.spacing.into(),
            to_db(r.physical_opt).into(),
            to_db(r.conventional_opt).into(),
            to_db(r.cross_applied).into(),
            r.random_physical.mean_db().into(),
            r.random_conventional.mean_db().into(),
        ]);
    }
    t
}

/// Which transfer model `eval` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ModelChoice {
    Physical,
    Conventional,
    #[default]
    Both,
}

/// Terminations given to `eval`.
#[derive(Debug, Clone, PartialEq)]
pub enum Loads {
    /// `x_n = X_n/R`.
    Reactances(Vec<f64>),
    /// `φ_n` in degrees, `Θ_n = exp(jφ_n)`.
    PhasesDeg(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalEntry {
    pub model: &'static str,
    pub rx: usize,
    pub tx: usize,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub entries: Vec<EvalEntry>,
    /// Largest relative deviation among the equivalent physical forms.
    pub deviation: f64,
}

/// Normalized transfer of `scenario` for the given terminations.
///
/// The physical model is evaluated in the impedance, scattering and
/// reflection-coefficient forms; their disagreement beyond
/// [`EQUIVALENCE_TOL`] is an error.
pub fn eval(scenario: &Scenario, loads: &Loads, model: ModelChoice) -> Result<EvalResult> {
    let r = scenario.config.resistance;
    let n = scenario.config.ris_elements;
    let term = match loads {
        Loads::Reactances(x) => RisTermination::normalized_reactances(x, r)?,
        Loads::PhasesDeg(p) => {
            RisTermination::phases(p.iter().map(|d| d * PI / 180.0).collect(), r)?
        }
    };
    if term.len() != n {
        return Err(CliError::Argument(format!(
            "{} terminations given for {n} RIS elements",
            term.len()
        )));
    }
    let theta = match loads {
        Loads::Reactances(_) => term.theta_from_zn()?,
        Loads::PhasesDeg(_) => term.clone(),
    };
    let z = scenario.multiport()?;
    let s = blockwise_z_to_s(&z, r)?;
    let norm = |t| normalize_transfer(t, &scenario.config, &scenario.geometry);

    let t_form = norm(transfer_theta_form(&z, &theta)?)?;
    let h = norm(transfer_scattering(&s, &theta)?)?;
    let mut deviation = normalized_deviation(h.effective(), t_form.effective());
    // An open element (Θ = 1) has no finite Z_N; only the wave forms apply.
    let zn = match loads {
        Loads::Reactances(_) => Some(term.clone()),
        Loads::PhasesDeg(_) => theta.zn_from_theta().ok(),
    };
    if let Some(zn) = zn {
        let d = norm(transfer_impedance(&z, &zn)?)?;
        deviation = deviation.max(normalized_deviation(d.effective(), h.effective()));
    }
    equivalence_check("physical transfer forms", deviation)?;

    let mut entries = Vec::new();
    let mut push = |tag: &'static str, m: &ComplexMatrix| {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                entries.push(EvalEntry {
                    model: tag,
                    rx: i,
                    tx: j,
                    value: m[(i, j)],
                });
            }
        }
    };
    if model != ModelChoice::Conventional {
        push("physical", h.effective());
    }
    if model != ModelChoice::Physical {
        let c = norm(transfer_conventional(
            &s,
            &theta,
            scenario.geometry.blocked_direct(),
        )?)?;
        push("conventional", c.effective());
    }
    Ok(EvalResult { entries, deviation })
}

pub fn eval_table(result: &EvalResult) -> Table {
    let mut t = Table::new(&[
        "model",
        "rx",
        "tx",
        "re",
        "im",
        "magnitude",
        "phase_deg",
        "gain_db",
    ]);
    for e in &result.entries {
        t.push(vec![
            Cell::Text(e.model.into()),
            Cell::Text((e.rx + 1).to_string()),
            Cell::Text((e.tx + 1).to_string()),
            e.value.re.into(),
            e.value.im.into(),
            e.value.norm().into(),
            e.value.arg().to_degrees().into(),
            to_db(e.value.norm_sqr()).into(),
        ]);
    }
    t
}

/// `φ` in radians from degrees, wrapped to `[0, 2π)`.
pub fn radians(deg: f64) -> f64 {
    (deg * PI / 180.0).rem_euclid(TAU)
}
