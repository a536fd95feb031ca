//! Received-power maximization over RIS terminations.
//!
//! The objective is the squared Frobenius norm of the path-loss normalized
//! transfer matrix (`|D'_0|²` for a SISO link). Variables are either the
//! reflection phases `φ_n` (periodic, the default) or the normalized
//! reactances `x_n = X_n / R` inside a box.
//!
//! Three procedures are provided:
//! * [`grid_oracle`]: exhaustive grid evaluation, used as an independent
//!   check of the local search for small element counts.
//! * [`local_search`]: multi-start Hooke–Jeeves pattern search.
//! * [`random_phase_baseline`]: Monte-Carlo mean over i.i.d. uniform phases.
//!
//! Among (near-)equal optima the one with the smallest `‖x‖₂` is reported,
//! and among equal norms the lexicographically largest `x`.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::ris::{blockwise_z_to_s, to_db, CascadeForm, Normalization};

/// Relative gain difference below which two grid cells tie.
const GRID_TIE: f64 = 1e-12;
/// Relative gain difference below which two local optima tie.
const SEARCH_TIE: f64 = 1e-9;
/// Gain loss tolerated while sliding along a set of equal optima.
const POLISH_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Impedance-based model with the correct cascade in `S_DS`.
    Physical,
    /// Scattering model with `S_DS` dropped for a blocked direct link.
    Conventional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `φ_n ∈ [0, 2π)`, `Θ_n = exp(j·φ_n)`.
    Phases,
    /// `x_n ∈ [−bound, bound]`.
    Reactances { bound: f64 },
}

impl Domain {
    pub const DEFAULT_REACTANCE_BOUND: f64 = 100.0;

    fn project(&self, v: f64) -> f64 {
        match *self {
            Domain::Phases => v.rem_euclid(TAU),
            Domain::Reactances { bound } => v.clamp(-bound, bound),
        }
    }

    fn initial_step(&self) -> f64 {
        match *self {
            Domain::Phases => TAU / 8.0,
            Domain::Reactances { bound } => (bound / 8.0).min(1.0),
        }
    }

    fn random_point(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| match *self {
                Domain::Phases => rng.random::<f64>() * TAU,
                // Most of the interesting structure sits at |x| ≲ a few.
                Domain::Reactances { bound } => {
                    ((rng.random::<f64>() - 0.5) * 8.0).clamp(-bound, bound)
                }
            })
            .collect()
    }
}

/// `Θ = exp(jφ)`.
fn theta_of_phase(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}

/// `Θ = (jx − 1)/(jx + 1)`.
fn theta_of_reactance(x: f64) -> Complex64 {
    if x.is_infinite() {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::new(-1.0, x) / Complex64::new(1.0, x)
}

/// `x = cot(φ/2)`, infinite at `φ ≡ 0`.
pub fn reactance_of_phase(phi: f64) -> f64 {
    let half = phi.rem_euclid(TAU) / 2.0;
    if half == 0.0 {
        f64::INFINITY
    } else {
        half.cos() / half.sin()
    }
}

/// `φ = 2·arccot(x)` in `(0, 2π)`.
pub fn phase_of_reactance(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (std::f64::consts::PI - 2.0 * x.atan()).rem_euclid(TAU)
}

fn x_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    scenario: Scenario,
    model: Model,
    domain: Domain,
    objective: CascadeForm,
}

impl OptimizationProblem {
    pub fn new(scenario: Scenario, model: Model) -> Result<Self> {
        let z = scenario.multiport()?;
        let r = scenario.config.resistance;
        let form = match model {
            Model::Physical => CascadeForm::physical(&z, r)?,
            Model::Conventional => {
                let s = blockwise_z_to_s(&z, r)?;
                CascadeForm::conventional(&s, scenario.geometry.blocked_direct())?
            }
        };
        let norm = Normalization::from_geometry(&scenario.config, &scenario.geometry, 0)?;
        Ok(Self {
            objective: form.scaled(norm.factor),
            scenario,
            model,
            domain: Domain::Phases,
        })
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if let Domain::Reactances { bound } = domain {
            if !(bound > 0.0 && bound.is_finite()) {
                return Err(Error::Problem(format!(
                    "reactance bound must be positive, got {bound}"
                )));
            }
        }
        self.domain = domain;
        Ok(self)
    }

    /// The same scenario under another model.
    pub fn with_model(&self, model: Model) -> Result<Self> {
        Self::new(self.scenario.clone(), model)?.with_domain(self.domain)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn elements(&self) -> usize {
        self.objective.elements()
    }

    /// Normalized power gain for the given reflection coefficients.
    pub fn gain_at_theta(&self, theta: &[Complex64]) -> f64 {
        self.objective.power(theta)
    }

    pub fn gain_at_phases(&self, phi: &[f64]) -> f64 {
        let theta: Vec<Complex64> = phi.iter().map(|&p| theta_of_phase(p)).collect();
        self.objective.power(&theta)
    }

    /// Gain for normalized reactances `x_n = X_n/R`.
    pub fn gain_at_reactances(&self, x: &[f64]) -> f64 {
        let theta: Vec<Complex64> = x.iter().map(|&x| theta_of_reactance(x)).collect();
        self.objective.power(&theta)
    }

    /// Gain at a point of the problem's own domain.
    pub fn gain(&self, vars: &[f64]) -> f64 {
        match self.domain {
            Domain::Phases => self.gain_at_phases(vars),
            Domain::Reactances { .. } => self.gain_at_reactances(vars),
        }
    }

    fn checked_gain(&self, vars: &[f64]) -> Result<f64> {
        let g = self.gain(vars);
        if g.is_finite() {
            Ok(g)
        } else {
            Err(Error::NonFinite {
                variables: vars.to_vec(),
            })
        }
    }

    fn to_reactances(&self, vars: &[f64]) -> Vec<f64> {
        match self.domain {
            Domain::Phases => vars.iter().map(|&p| reactance_of_phase(p)).collect(),
            Domain::Reactances { .. } => vars.to_vec(),
        }
    }

    fn to_phases(&self, vars: &[f64]) -> Vec<f64> {
        match self.domain {
            Domain::Phases => vars.iter().map(|p| p.rem_euclid(TAU)).collect(),
            Domain::Reactances { .. } => vars.iter().map(|&x| phase_of_reactance(x)).collect(),
        }
    }

    fn report(
        &self,
        vars: Vec<f64>,
        gain: f64,
        evaluations: usize,
        seed: Option<u64>,
    ) -> OptimizationReport {
        OptimizationReport {
            phases: self.to_phases(&vars),
            reactances: self.to_reactances(&vars),
            variables: vars,
            best_gain: gain,
            best_gain_db: to_db(gain),
            iterations: evaluations,
            oracle_gap: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    /// Optimum in the problem's domain.
    pub variables: Vec<f64>,
    /// `φ_n ∈ [0, 2π)`.
    pub phases: Vec<f64>,
    /// `x_n = X_n/R`; infinite for an open circuit.
    pub reactances: Vec<f64>,
    pub best_gain: f64,
    pub best_gain_db: f64,
    /// Objective evaluations spent.
    pub iterations: usize,
    /// `|gain − oracle gain| / oracle gain`, once compared.
    pub oracle_gap: Option<f64>,
    pub seed: Option<u64>,
}

impl OptimizationReport {
    /// Records the relative gap to a grid-oracle result.
    pub fn compare_with(&mut self, oracle: &OptimizationReport) -> f64 {
        let gap = (self.best_gain - oracle.best_gain).abs()
            / oracle.best_gain.abs().max(f64::MIN_POSITIVE);
        self.oracle_gap = Some(gap);
        gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self { lo, hi, step }
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    /// Maximum number of cells.
    pub budget: u128,
    /// Lifts the three-variable limit.
    pub allow_large: bool,
}

impl GridSpec {
    pub const DEFAULT_BUDGET: u128 = 100_000_000;

    pub fn uniform(n: usize, axis: GridAxis) -> Self {
        Self {
            axes: vec![axis; n],
            budget: Self::DEFAULT_BUDGET,
            allow_large: false,
        }
    }

    pub fn cells(&self) -> u128 {
        self.axes.iter().map(|a| a.len() as u128).product()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    vars: Vec<f64>,
    gain: f64,
    norm: f64,
    x: Vec<f64>,
}

/// Ordering used to pick one point among near-equal optima:
/// higher gain, then smaller `‖x‖`, then larger `x` lexicographically.
fn prefer(a: &Candidate, b: &Candidate, tie: f64) -> Ordering {
    let scale = a.gain.abs().max(b.gain.abs()).max(f64::MIN_POSITIVE);
    if (a.gain - b.gain).abs() > tie * scale {
        return a.gain.partial_cmp(&b.gain).unwrap_or(Ordering::Equal);
    }
    let norm_scale = a.norm.max(b.norm).max(1e-12);
    if a.norm.is_finite() && b.norm.is_finite() && (a.norm - b.norm).abs() > 1e-9 * norm_scale {
        return b.norm.partial_cmp(&a.norm).unwrap_or(Ordering::Equal);
    }
    if a.norm.is_finite() != b.norm.is_finite() {
        return if a.norm.is_finite() {
            Ordering::Greater
        } else {
            Ordering::Less
        };
    }
    for (xa, xb) in a.x.iter().zip(&b.x) {
        if (xa - xb).abs() > 1e-9 * xa.abs().max(xb.abs()).max(1.0) {
            return xa.partial_cmp(xb).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Keeps `current` unless `next` is strictly preferred.
fn keep_best(current: Option<Candidate>, next: Candidate, tie: f64) -> Option<Candidate> {
    match current {
        Some(c) if prefer(&next, &c, tie) != Ordering::Greater => Some(c),
        _ => Some(next),
    }
}

impl OptimizationProblem {
    fn candidate(&self, vars: Vec<f64>, gain: f64) -> Candidate {
        let x = self.to_reactances(&vars);
        Candidate {
            norm: x_norm(&x),
            x,
            vars,
            gain,
        }
    }
}

/// Exhaustive evaluation over a rectangular grid in the problem's domain.
pub fn grid_oracle(problem: &OptimizationProblem, grid: &GridSpec) -> Result<OptimizationReport> {
    let n = problem.elements();
    if grid.axes.len() != n {
        return Err(Error::Problem(format!(
            "{} grid axes for {n} variables",
            grid.axes.len()
        )));
    }
    if n > 3 && !grid.allow_large {
        return Err(Error::Problem(format!(
            "grid oracle limited to 3 variables, problem has {n}"
        )));
    }
    for a in &grid.axes {
        if !(a.lo.is_finite() && a.hi.is_finite() && a.step > 0.0 && a.hi >= a.lo) {
            return Err(Error::Problem(format!("invalid grid axis {a:?}")));
        }
    }
    let cells = grid.cells();
    if cells > grid.budget {
        return Err(Error::GridBudget {
            cells,
            budget: grid.budget,
        });
    }

    let first = grid.axes[0];
    let rest = &grid.axes[1..];
    let rest_cells: usize = rest.iter().map(GridAxis::len).product();

    // One best per slice of the first axis, folded in index order.
    let per_slice: Vec<Result<Option<Candidate>>> = (0..first.len())
        .into_par_iter()
        .map(|i0| {
            let mut vars = vec![0.0; n];
            vars[0] = first.value(i0);
            let mut best: Option<Candidate> = None;
            let mut best_gain = f64::NEG_INFINITY;
            for flat in 0..rest_cells {
                let mut rem = flat;
                for (d, axis) in rest.iter().enumerate().rev() {
                    let len = axis.len();
                    vars[d + 1] = axis.value(rem % len);
                    rem /= len;
                }
                let g = problem.checked_gain(&vars)?;
                // Cheap reject before building a candidate.
                if g < best_gain * (1.0 - GRID_TIE) {
                    continue;
                }
                best = keep_best(best, problem.candidate(vars.clone(), g), GRID_TIE);
                best_gain = best.as_ref().map_or(g, |c| c.gain);
            }
            Ok(best)
        })
        .collect();

    let mut best: Option<Candidate> = None;
    for slice in per_slice {
        if let Some(c) = slice? {
            best = keep_best(best, c, GRID_TIE);
        }
    }
    let best = best.ok_or_else(|| Error::Problem("empty grid".into()))?;
    let evals = usize::try_from(cells).unwrap_or(usize::MAX);
    Ok(problem.report(best.vars, best.gain, evals, None))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub starts: usize,
    pub seed: u64,
    /// Step size at which a pattern search stops.
    pub min_step: f64,
    /// Slide along equal optima towards the smallest `‖x‖₂`.
    pub polish: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            starts: 24,
            seed: 0,
            min_step: 1e-12,
            polish: true,
        }
    }
}

impl SearchOptions {
    pub fn new(starts: usize, seed: u64) -> Self {
        Self {
            starts,
            seed,
            ..Self::default()
        }
    }
}

/// Hooke–Jeeves pattern search maximizing the gain. `fixed[i]` pins a
/// coordinate.
fn pattern_search(
    problem: &OptimizationProblem,
    start: Vec<f64>,
    fixed: &[bool],
    init_step: f64,
    min_step: f64,
    evals: &mut usize,
) -> Result<(Vec<f64>, f64)> {
    let domain = problem.domain;
    let mut eval = |v: &[f64]| -> Result<f64> {
        *evals += 1;
        problem.checked_gain(v)
    };

    let explore =
        |base: &[f64], f_base: f64, step: f64, eval: &mut dyn FnMut(&[f64]) -> Result<f64>| {
            let mut point = base.to_vec();
            let mut f = f_base;
            for i in 0..point.len() {
                if fixed[i] {
                    continue;
                }
                let orig = point[i];
                for dir in [1.0, -1.0] {
                    point[i] = domain.project(orig + dir * step);
                    let g = eval(&point)?;
                    if g > f {
                        f = g;
                        break;
                    }
                    point[i] = orig;
                }
            }
            Ok::<_, Error>((point, f))
        };

    let mut base: Vec<f64> = start.iter().map(|&v| domain.project(v)).collect();
    let mut f_base = eval(&base)?;
    let mut step = init_step;
    while step > min_step {
        let (point, f) = explore(&base, f_base, step, &mut eval)?;
        if f > f_base {
            // Pattern moves along the successful direction.
            let (mut prev, mut cur, mut f_cur) = (base, point, f);
            loop {
                let jump: Vec<f64> = cur
                    .iter()
                    .zip(&prev)
                    .map(|(c, p)| domain.project(c + (c - p)))
                    .collect();
                let f_jump = eval(&jump)?;
                let (next, f_next) = explore(&jump, f_jump, step, &mut eval)?;
                if f_next > f_cur {
                    prev = cur;
                    cur = next;
                    f_cur = f_next;
                } else {
                    break;
                }
            }
            base = cur;
            f_base = f_cur;
        } else {
            step *= 0.5;
        }
    }
    Ok((base, f_base))
}

/// Exact coordinate ascent in `Θ`: every free element in turn takes its
/// closed-form best phase given the others. Pattern search alone only
/// locates the maximizer to about `sqrt(ε)`; this pins it to rounding level.
fn refine_coordinates(
    problem: &OptimizationProblem,
    vars: Vec<f64>,
    fixed: &[bool],
    evals: &mut usize,
) -> Result<(Vec<f64>, f64)> {
    const MAX_SWEEPS: usize = 10_000;
    let start_gain = problem.checked_gain(&vars)?;
    let mut theta: Vec<Complex64> = match problem.domain {
        Domain::Phases => vars.iter().map(|&p| theta_of_phase(p)).collect(),
        Domain::Reactances { .. } => vars.iter().map(|&x| theta_of_reactance(x)).collect(),
    };
    for _ in 0..MAX_SWEEPS {
        let mut moved: f64 = 0.0;
        for n in (0..theta.len()).filter(|&n| !fixed[n]) {
            if let Some(t) = problem.objective.coordinate_optimum(&theta, n) {
                moved = moved.max((t - theta[n]).norm());
                theta[n] = t;
            }
        }
        *evals += 1;
        if moved < 1e-15 {
            break;
        }
    }
    let refined: Vec<f64> = theta
        .iter()
        .zip(&vars)
        .zip(fixed)
        .map(|((t, &v), &pin)| {
            if pin {
                return v;
            }
            let phi = t.arg().rem_euclid(TAU);
            match problem.domain {
                Domain::Phases => phi,
                Domain::Reactances { bound } => reactance_of_phase(phi).clamp(-bound, bound),
            }
        })
        .collect();
    let gain = problem.checked_gain(&refined)?;
    if gain >= start_gain * (1.0 - 1e-14) {
        Ok((refined, gain))
    } else {
        Ok((vars, start_gain))
    }
}

/// Moves along a set of equal-gain optima towards smaller `‖x‖₂`: one
/// coordinate is nudged and held, the others are re-optimized, and the move
/// is kept if the gain is still optimal and the norm dropped.
fn polish(
    problem: &OptimizationProblem,
    start: Candidate,
    target: f64,
    min_step: f64,
    evals: &mut usize,
) -> Result<Candidate> {
    let n = start.vars.len();
    if n < 2 {
        return Ok(start);
    }
    let mut cur = start;
    let mut step = problem.domain.initial_step() / 4.0;
    while step > 1e-9 {
        let mut moved = false;
        'coords: for i in 0..n {
            for dir in [1.0, -1.0] {
                let mut trial = cur.vars.clone();
                trial[i] = problem.domain.project(trial[i] + dir * step);
                let mut fixed = vec![false; n];
                fixed[i] = true;
                let (vars, _) = pattern_search(problem, trial, &fixed, step, min_step, evals)?;
                let (vars, gain) = refine_coordinates(problem, vars, &fixed, evals)?;
                if gain < target * (1.0 - POLISH_SLACK) {
                    continue;
                }
                let cand = problem.candidate(vars, gain);
                if cand.norm < cur.norm {
                    cur = cand;
                    moved = true;
                    break 'coords;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(cur)
}

fn search_with_fixed(
    problem: &OptimizationProblem,
    opts: &SearchOptions,
    pinned: &[(usize, f64)],
) -> Result<OptimizationReport> {
    if opts.starts == 0 {
        return Err(Error::Problem("at least one start is required".into()));
    }
    let n = problem.elements();
    let mut fixed = vec![false; n];
    for &(i, _) in pinned {
        if i >= n {
            return Err(Error::Problem(format!("pinned variable {i} out of range")));
        }
        fixed[i] = true;
    }

    let runs: Vec<Result<(Candidate, usize)>> = (0..opts.starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(s as u64);
            let mut start = problem.domain.random_point(&mut rng, n);
            for &(i, v) in pinned {
                start[i] = v;
            }
            let mut evals = 0;
            let (vars, gain) = pattern_search(
                problem,
                start,
                &fixed,
                problem.domain.initial_step(),
                opts.min_step,
                &mut evals,
            )?;
            let (vars, gain) = if gain.is_finite() {
                refine_coordinates(problem, vars, &fixed, &mut evals)?
            } else {
                (vars, gain)
            };
            Ok((problem.candidate(vars, gain), evals))
        })
        .collect();

    let mut evals = 0;
    let mut results = Vec::with_capacity(runs.len());
    for r in runs {
        let (c, e) = r?;
        evals += e;
        results.push(c);
    }
    let top = results
        .iter()
        .map(|c| c.gain)
        .fold(f64::NEG_INFINITY, f64::max);

    let near: Vec<Candidate> = results
        .into_iter()
        .filter(|c| c.gain >= top * (1.0 - SEARCH_TIE))
        .collect();
    let refined: Vec<Result<(Candidate, usize)>> = if opts.polish && pinned.is_empty() {
        near.into_par_iter()
            .map(|c| {
                let mut e = 0;
                let c = polish(problem, c, top, opts.min_step, &mut e)?;
                let (vars, gain) = refine_coordinates(problem, c.vars, &fixed, &mut e)?;
                Ok((problem.candidate(vars, gain), e))
            })
            .collect()
    } else {
        near.into_iter().map(|c| Ok((c, 0))).collect()
    };

    let mut best: Option<Candidate> = None;
    for r in refined {
        let (c, e) = r?;
        evals += e;
        best = keep_best(best, c, SEARCH_TIE);
    }
    let best = best.expect("at least one start");
    Ok(problem.report(best.vars, best.gain, evals, Some(opts.seed)))
}

/// Multi-start derivative-free maximization of the gain.
pub fn local_search(
    problem: &OptimizationProblem,
    opts: &SearchOptions,
) -> Result<OptimizationReport> {
    search_with_fixed(problem, opts, &[])
}

/// Result of applying the conventional model's optimum to the physical one.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossApplication {
    /// Conventional optimum with `φ_1` pinned; gain under the conventional model.
    pub conventional: OptimizationReport,
    /// The same terminations evaluated under the physically consistent model.
    pub physical: OptimizationReport,
    /// Elements left open-circuited (`Θ_n = 1`), whose reactance is reported
    /// as the surrogate value.
    pub open_circuit: Vec<usize>,
}

/// Optimizes the conventional model with RIS element 1's phase pinned to
/// `pinned_phase` and evaluates the resulting terminations under the
/// physically consistent model.
pub fn cross_apply(
    problem: &OptimizationProblem,
    pinned_phase: f64,
    opts: &SearchOptions,
) -> Result<CrossApplication> {
    let phases = problem
        .with_model(Model::Conventional)?
        .with_domain(Domain::Phases)?;
    let conventional = search_with_fixed(&phases, opts, &[(0, pinned_phase.rem_euclid(TAU))])?;

    let physical_problem = phases.with_model(Model::Physical)?;
    let gain = physical_problem.gain_at_phases(&conventional.phases);
    let mut physical =
        physical_problem.report(conventional.phases.clone(), gain, 1, Some(opts.seed));

    let open_circuit: Vec<usize> = physical
        .reactances
        .iter()
        .enumerate()
        .filter(|(_, x)| x.is_infinite())
        .map(|(i, _)| i)
        .collect();
    if !open_circuit.is_empty() {
        log::info!(
            "cross-applied terminations leave elements {open_circuit:?} open; reporting x = {:e}",
            crate::ris::OPEN_CIRCUIT_SURROGATE
        );
        for &i in &open_circuit {
            physical.reactances[i] = crate::ris::OPEN_CIRCUIT_SURROGATE;
        }
    }
    Ok(CrossApplication {
        conventional,
        physical,
        open_circuit,
    })
}

/// Mean gain over random terminations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// 95 % confidence half-width, `1.96 · std_error`.
    pub half_width: f64,
    pub trials: u64,
    pub seed: u64,
}

impl BaselineEstimate {
    pub fn mean_db(&self) -> f64 {
        to_db(self.mean)
    }
}

const TRIALS_PER_CHUNK: u64 = 4096;

/// Draws `φ_n` i.i.d. uniform on `[0, 2π)` and averages the linear gain.
///
/// Trials are split into fixed-size chunks, each with its own ChaCha8
/// stream (`seed`, stream = chunk index), so the result depends only on the
/// seed and trial count.
pub fn random_phase_baseline(
    problem: &OptimizationProblem,
    trials: u64,
    seed: u64,
) -> Result<BaselineEstimate> {
    if trials == 0 {
        return Err(Error::Problem("at least one trial is required".into()));
    }
    let n = problem.elements();
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let stats: Vec<(u64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = TRIALS_PER_CHUNK.min(trials - chunk * TRIALS_PER_CHUNK);
            let mut theta = vec![Complex64::new(0.0, 0.0); n];
            let (mut mean, mut m2) = (0.0, 0.0);
            for t in 0..count {
                for th in theta.iter_mut() {
                    *th = theta_of_phase(rng.random::<f64>() * TAU);
                }
                let g = problem.gain_at_theta(&theta);
                let delta = g - mean;
                mean += delta / (t + 1) as f64;
                m2 += delta * (g - mean);
            }
            (count, mean, m2)
        })
        .collect();

    // Chan et al. pairwise combination, in chunk order.
    let (mut count, mut mean, mut m2) = (0u64, 0.0, 0.0);
    for (c, m, s) in stats {
        let total = count + c;
        let delta = m - mean;
        mean += delta * c as f64 / total as f64;
        m2 += s + delta * delta * count as f64 * c as f64 / total as f64;
        count = total;
    }
    if !mean.is_finite() {
        return Err(Error::NonFinite { variables: vec![] });
    }
    let variance = if count > 1 {
        m2 / (count - 1) as f64
    } else {
        0.0
    };
    let std_error = (variance / count as f64).sqrt();
    Ok(BaselineEstimate {
        mean,
        std_error,
        half_width: 1.96 * std_error,
        trials,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn two_element(spacing: f64, model: Model) -> OptimizationProblem {
        let sc = Scenario::two_element(100.0, 1000.0, spacing, 50.0).unwrap();
        OptimizationProblem::new(sc, model).unwrap()
    }

    #[test]
    fn phase_reactance_bijection() {
        for &x in &[-3.0, -1.0, 0.0, 0.5, 1.0, 7.0] {
            let phi = phase_of_reactance(x);
            assert!((reactance_of_phase(phi) - x).abs() < 1e-12, "x = {x}");
            assert!((theta_of_phase(phi) - theta_of_reactance(x)).norm() < 1e-15);
        }
        assert!(reactance_of_phase(0.0).is_infinite());
    }

    #[test]
    fn closed_form_two_element_gain() {
        let p = two_element(0.3, Model::Physical)
            .with_domain(Domain::Reactances { bound: 100.0 })
            .unwrap();
        let (x1, x2) = (0.7, -1.3);
        let e = Complex64::from_polar(1.0, -2.0 * PI * 0.3);
        let one = Complex64::new(1.0, 0.0);
        let expect = (one / Complex64::new(1.0, x1) + e / Complex64::new(1.0, x2)).norm_sqr();
        assert!((p.gain(&[x1, x2]) - expect).abs() < 1e-12);
    }

    #[test]
    fn conventional_per_element_magnitude_is_half() {
        let sc = Scenario::single_element(100.0, 1000.0, 50.0).unwrap();
        let p = OptimizationProblem::new(sc, Model::Conventional).unwrap();
        for phi in [0.0, 0.7, 2.0, 4.5] {
            assert!((p.gain_at_phases(&[phi]) - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_budget_is_enforced() {
        let p = two_element(0.25, Model::Physical);
        let mut grid = GridSpec::uniform(2, GridAxis::new(-3.0, 3.0, 1e-4));
        grid.budget = 1_000_000;
        assert!(matches!(
            grid_oracle(&p, &grid),
            Err(Error::GridBudget { .. })
        ));
    }

    #[test]
    fn grid_axis_count_must_match() {
        let p = two_element(0.25, Model::Physical);
        let grid = GridSpec::uniform(3, GridAxis::new(-1.0, 1.0, 0.5));
        assert!(grid_oracle(&p, &grid).is_err());
    }

    #[test]
    fn zero_starts_rejected() {
        let p = two_element(0.25, Model::Physical);
        assert!(local_search(&p, &SearchOptions::new(0, 0)).is_err());
        assert!(random_phase_baseline(&p, 0, 0).is_err());
    }

    #[test]
    fn search_is_deterministic() {
        let p = two_element(0.31, Model::Physical);
        let a = local_search(&p, &SearchOptions::new(6, 9)).unwrap();
        let b = local_search(&p, &SearchOptions::new(6, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn baseline_is_deterministic_and_chunk_stable() {
        let p = two_element(0.2, Model::Conventional);
        let a = random_phase_baseline(&p, 10_000, 3).unwrap();
        let b = random_phase_baseline(&p, 10_000, 3).unwrap();
        assert_eq!(a, b);
        let c = random_phase_baseline(&p, 10_000, 4).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn tie_break_prefers_small_norm_then_large_x() {
        let mk = |x: Vec<f64>| Candidate {
            norm: x_norm(&x),
            vars: x.clone(),
            x,
            gain: 1.0,
        };
        let a = mk(vec![2.0, -0.5]);
        let b = mk(vec![1.0, -1.0]);
        let c = mk(vec![-1.0, 1.0]);
        assert_eq!(prefer(&b, &a, 1e-12), Ordering::Greater);
        assert_eq!(prefer(&b, &c, 1e-12), Ordering::Greater);
    }
}
