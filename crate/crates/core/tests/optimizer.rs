//! Optimizer checks against closed forms and brute-force oracles that are
//! written here, independently of the library's evaluation path.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use risnet::optimize::{
    cross_apply, grid_oracle, local_search, random_phase_baseline, Domain, GridAxis, GridSpec,
    Model, OptimizationProblem, SearchOptions,
};
use risnet::Scenario;

const R: f64 = 50.0;

fn problem(spacing: f64, model: Model) -> OptimizationProblem {
    let sc = Scenario::two_element(100.0, 1000.0, spacing, R).unwrap();
    OptimizationProblem::new(sc, model).unwrap()
}

/// `D'_0 = 1/(1 + j·x1) + exp(−j2πd)/(1 + j·x2)` for the two-element link.
fn oracle_physical(x1: f64, x2: f64, spacing: f64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let e = Complex64::from_polar(1.0, -TAU * spacing);
    (one / Complex64::new(1.0, x1) + e / Complex64::new(1.0, x2)).norm_sqr()
}

/// Brute-force maximum of [`oracle_physical`] over a square grid.
fn brute_force_max(spacing: f64, lo: f64, hi: f64, steps: usize) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=steps {
        let x1 = lo + (hi - lo) * i as f64 / steps as f64;
        for j in 0..=steps {
            let x2 = lo + (hi - lo) * j as f64 / steps as f64;
            let g = oracle_physical(x1, x2, spacing);
            if g > best.0 {
                best = (g, x1, x2);
            }
        }
    }
    best
}

/// `E_φ |T(φ)|²` by the periodic trapezoid rule on an `n x n` phase grid.
fn quadrature_mean(n: usize, f: impl Fn(Complex64, Complex64) -> f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t1 = Complex64::from_polar(1.0, TAU * i as f64 / n as f64);
            let t2 = Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
            acc += f(t1, t2);
        }
    }
    acc / (n * n) as f64
}

#[test]
fn brute_force_agrees_with_closed_form_maximum() {
    // Frozen closed form (1 + |cos(πd)|)², cross-checked by brute force.
    for (d, expect) in [
        (0.0, 4.0),
        (0.25, 1.5 + 2f64.sqrt()),
        (0.5, 1.0),
        (0.75, 1.5 + 2f64.sqrt()),
    ] {
        let (g, _, _) = brute_force_max(d, -3.0, 3.0, 1200);
        assert!(
            (g - expect).abs() / expect < 1e-4,
            "d = {d}: {g} vs {expect}"
        );
        assert!(((1.0 + (PI * d).cos().abs()).powi(2) - expect).abs() < 1e-12);
    }
}

#[test]
fn objective_matches_closed_form() {
    for d in [0.0, 0.1, 0.25, 0.6, 1.0] {
        let p = problem(d, Model::Physical)
            .with_domain(Domain::Reactances { bound: 100.0 })
            .unwrap();
        for (x1, x2) in [(0.0, 0.0), (1.0, -1.0), (0.3, 2.2), (-4.0, 0.5)] {
            let g = p.gain(&[x1, x2]);
            assert!((g - oracle_physical(x1, x2, d)).abs() < 1e-12, "d = {d}");
        }
    }
}

#[test]
fn local_search_reproduces_optimum_design() {
    let sqrt2 = 2f64.sqrt();
    let rows = [
        (0.0, 4.0, Some((0.0, 0.0))),
        (0.25, 1.5 + sqrt2, Some((sqrt2 - 1.0, 1.0 - sqrt2))),
        (0.5, 1.0, Some((1.0, -1.0))),
        (0.75, 1.5 + sqrt2, Some((1.0 - sqrt2, sqrt2 - 1.0))),
        (1.0, 4.0, Some((0.0, 0.0))),
    ];
    for (d, gain, x) in rows {
        let rep = local_search(&problem(d, Model::Physical), &SearchOptions::default()).unwrap();
        assert!(
            (rep.best_gain - gain).abs() / gain < 1e-9,
            "d = {d}: {}",
            rep.best_gain
        );
        if let Some((x1, x2)) = x {
            assert!(
                (rep.reactances[0] - x1).abs() < 1e-4,
                "d = {d}: x = {:?}",
                rep.reactances
            );
            assert!(
                (rep.reactances[1] - x2).abs() < 1e-4,
                "d = {d}: x = {:?}",
                rep.reactances
            );
        }
    }
}

#[test]
fn reactance_domain_search_agrees() {
    for d in [0.25, 0.6] {
        let base = problem(d, Model::Physical);
        let p = base
            .clone()
            .with_domain(Domain::Reactances { bound: 100.0 })
            .unwrap();
        let a = local_search(&p, &SearchOptions::default()).unwrap();
        let b = local_search(&base, &SearchOptions::default()).unwrap();
        assert!((a.best_gain - b.best_gain).abs() / b.best_gain < 1e-9);
    }
}

#[test]
fn grid_oracle_matches_local_search() {
    let axis = GridAxis::new(-3.0, 3.0, 1e-3);
    for d in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let p = problem(d, Model::Physical)
            .with_domain(Domain::Reactances { bound: 100.0 })
            .unwrap();
        let grid = grid_oracle(&p, &GridSpec::uniform(2, axis)).unwrap();
        let mut local = local_search(&p, &SearchOptions::default()).unwrap();
        let gap = local.compare_with(&grid);
        assert!(gap <= 1e-6, "d = {d}: gap {gap}");
        assert!(local.oracle_gap.unwrap() >= 0.0);
    }
}

#[test]
fn grid_oracle_breaks_ties_by_norm() {
    let p = problem(0.5, Model::Physical)
        .with_domain(Domain::Reactances { bound: 100.0 })
        .unwrap();
    let grid = grid_oracle(&p, &GridSpec::uniform(2, GridAxis::new(-3.0, 3.0, 1e-3))).unwrap();
    assert!((grid.best_gain - 1.0).abs() < 1e-12);
    assert!((grid.reactances[0] - 1.0).abs() < 1e-9 && (grid.reactances[1] + 1.0).abs() < 1e-9);
}

#[test]
fn single_element_grid_finds_short_circuit() {
    let sc = Scenario::single_element(100.0, 1000.0, R).unwrap();
    let p = OptimizationProblem::new(sc, Model::Physical)
        .unwrap()
        .with_domain(Domain::Reactances { bound: 100.0 })
        .unwrap();
    let rep = grid_oracle(&p, &GridSpec::uniform(1, GridAxis::new(-5.0, 5.0, 0.01))).unwrap();
    assert!(rep.reactances[0].abs() < 1e-9);
    assert!((rep.best_gain - 1.0).abs() < 1e-12);
}

#[test]
fn conventional_optimum_is_flat_and_aligned() {
    for d in [0.0, 0.13, 0.5, 0.87] {
        let p = problem(d, Model::Conventional);
        let rep = local_search(&p, &SearchOptions::default()).unwrap();
        assert!(
            (rep.best_gain - 1.0).abs() < 1e-10,
            "d = {d}: {}",
            rep.best_gain
        );
        let diff = (rep.phases[1] - rep.phases[0] - TAU * d).rem_euclid(TAU);
        assert!(
            diff.min(TAU - diff) < 1e-5,
            "d = {d}: phase difference off by {diff}"
        );

        let grid = grid_oracle(
            &p,
            &GridSpec::uniform(2, GridAxis::new(0.0, TAU, TAU / 720.0)),
        )
        .unwrap();
        assert!((grid.best_gain - 1.0).abs() < 1e-4);
    }
}

#[test]
fn cross_application_follows_sine_law() {
    for d in [0.05, 0.25, 0.5, 0.8] {
        let p = problem(d, Model::Physical);
        let cross = cross_apply(&p, 0.0, &SearchOptions::default()).unwrap();
        let expect = (PI * d).sin().powi(2);
        assert!(
            (cross.physical.best_gain - expect).abs() < 1e-9,
            "d = {d}: {} vs {expect}",
            cross.physical.best_gain
        );
        assert_eq!(cross.open_circuit, vec![0]);
        assert!((cross.conventional.best_gain - 1.0).abs() < 1e-10);
        // Direct evaluation with Θ1 = 1, Θ2 = exp(j2πd).
        let theta2 = Complex64::from_polar(1.0, TAU * d);
        let e = Complex64::from_polar(1.0, -TAU * d);
        let direct = (e * (Complex64::new(1.0, 0.0) - theta2) / 2.0).norm_sqr();
        assert!((direct - expect).abs() < 1e-12);
    }
    let tiny = cross_apply(
        &problem(1e-4, Model::Physical),
        0.0,
        &SearchOptions::default(),
    )
    .unwrap();
    assert!(tiny.physical.best_gain < 1e-6);
}

#[test]
fn baselines_match_quadrature() {
    for d in [0.0, 0.25, 0.5] {
        let e = Complex64::from_polar(1.0, -TAU * d);
        let one = Complex64::new(1.0, 0.0);
        let phys_q = quadrature_mean(64, |t1, t2| {
            ((one - t1) / 2.0 + e * (one - t2) / 2.0).norm_sqr()
        });
        let conv_q = quadrature_mean(64, |t1, t2| ((t1 + e * t2) / 2.0).norm_sqr());
        assert!((phys_q - (1.0 + (TAU * d).cos() / 2.0)).abs() < 1e-12);
        assert!((conv_q - 0.5).abs() < 1e-12);

        let phys = random_phase_baseline(&problem(d, Model::Physical), 200_000, 0).unwrap();
        let conv = random_phase_baseline(&problem(d, Model::Conventional), 200_000, 0).unwrap();
        assert!(
            (phys.mean - phys_q).abs() < 4.0 * phys.std_error,
            "d = {d}: {phys:?}"
        );
        assert!(
            (conv.mean - conv_q).abs() < 4.0 * conv.std_error,
            "d = {d}: {conv:?}"
        );
    }
}

#[test]
fn dominance_over_sampled_spacings() {
    for i in 0..=10 {
        let d = i as f64 / 10.0;
        let p = problem(d, Model::Physical);
        let opt = local_search(&p, &SearchOptions::new(8, 1))
            .unwrap()
            .best_gain;
        let cross = cross_apply(&p, 0.0, &SearchOptions::new(8, 1))
            .unwrap()
            .physical
            .best_gain;
        let random = random_phase_baseline(&p, 20_000, 1).unwrap().mean;
        assert!(opt >= cross - 1e-12 && opt >= random, "d = {d}");
    }
}

#[test]
fn optimum_is_symmetric_in_spacing() {
    for d in [0.1, 0.2, 0.35] {
        let a = local_search(&problem(d, Model::Physical), &SearchOptions::default()).unwrap();
        let b = local_search(
            &problem(1.0 - d, Model::Physical),
            &SearchOptions::default(),
        )
        .unwrap();
        assert!((a.best_gain - b.best_gain).abs() < 1e-9);
        // Mirrored spacing swaps the roles of the elements' reactances.
        assert!(
            (a.reactances[0] - b.reactances[1]).abs() < 1e-4,
            "{a:?} {b:?}"
        );
        assert!((a.reactances[1] - b.reactances[0]).abs() < 1e-4);
    }
}
