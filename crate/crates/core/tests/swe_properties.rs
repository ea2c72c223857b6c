use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use swe_esn::swe::{Solver, SweConfig, SweState, Topography};

fn flat_bottom(cells: usize, dt: f64) -> SweConfig {
    let l = 40.0;
    SweConfig {
        L: l,
        dx: l / cells as f64,
        dt_fine: dt,
        topo_height: 0.0,
        ..SweConfig::default()
    }
}

/// Cell averages of `f` by 4-point Gauss-Legendre per cell.
fn cell_averages(cfg: &SweConfig, f: impl Fn(f64) -> f64) -> Vec<f64> {
    const X: [f64; 4] = [-0.861_136_311_594_053, -0.339_981_043_584_856, 0.339_981_043_584_856, 0.861_136_311_594_053];
    const W: [f64; 4] = [0.347_854_845_137_454, 0.652_145_154_862_546, 0.652_145_154_862_546, 0.347_854_845_137_454];
    (0..cfg.cells())
        .map(|j| {
            let c = cfg.cell_center(j);
            X.iter().zip(W).map(|(x, w)| w * f(c + 0.5 * cfg.dx * x)).sum::<f64>() / 2.0
        })
        .collect()
}

fn smooth_state(cfg: &SweConfig) -> SweState {
    let l = cfg.L;
    let h = |x: f64| 4.0 + 0.2 * (TAU * x / l).sin();
    let u = |x: f64| 2.5 + 0.125 * (2.0 * TAU * x / l + 1.0).sin();
    SweState {
        h: cell_averages(cfg, h),
        hu: cell_averages(cfg, |x| h(x) * u(x)),
        t: 0.0,
    }
}

fn run(cfg: &SweConfig, state: SweState, steps: usize) -> SweState {
    let topo = Topography::bump(cfg).unwrap();
    let mut solver = Solver::new(*cfg, topo).unwrap();
    let mut s = state;
    solver.advance(&mut s, steps).unwrap();
    s
}

/// Average blocks of `r` fine cells onto the coarse grid.
fn restrict(fine: &[f64], r: usize) -> Vec<f64> {
    fine.chunks(r).map(|c| c.iter().sum::<f64>() / r as f64).collect()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

#[test]
fn second_order_convergence_on_smooth_flow() {
    let dt = 2.5e-4;
    let steps = 4000; // t = 1
    let fine_cfg = flat_bottom(1600, dt);
    let reference = run(&fine_cfg, smooth_state(&fine_cfg), steps);

    let mut errors = Vec::new();
    for n in [100, 200, 400] {
        let cfg = flat_bottom(n, dt);
        let s = run(&cfg, smooth_state(&cfg), steps);
        let r = 1600 / n;
        let e = l1(&s.h, &restrict(&reference.h, r)) + l1(&s.hu, &restrict(&reference.hu, r));
        errors.push(e);
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "observed order {order:.3}, errors {errors:?}");
    }
}

#[test]
fn linear_mode_decays_like_damped_oscillator() {
    // h = 1 + ε cos x, u = 0 on [0, 2π) with g = 1, ν = 5: the linearized mode
    // amplitude obeys A'' + νk²A' + g h0 k² A = 0, A(0) = ε, A'(0) = 0.
    let (g, nu, eps, n) = (1.0, 5.0, 1e-3, 200usize);
    let cfg = SweConfig {
        L: TAU,
        g,
        nu,
        dx: TAU / n as f64,
        dt_fine: 5e-5,
        topo_height: 0.0,
        topo_width: 1.0,
        ..SweConfig::default()
    };
    let x = |j: usize| cfg.cell_center(j);
    // exact cell averages of cos
    let avg_cos = |j: usize| ((x(j) + cfg.dx / 2.0).sin() - (x(j) - cfg.dx / 2.0).sin()) / cfg.dx;
    let state = SweState {
        h: (0..n).map(|j| 1.0 + eps * avg_cos(j)).collect(),
        hu: vec![0.0; n],
        t: 0.0,
    };
    let topo = Topography::flat(n);
    let mut solver = Solver::new(cfg, topo).unwrap();
    let traj = solver.integrate(state, 2.0, 0.5).unwrap();

    let disc = (nu * nu - 4.0 * g).sqrt();
    let (s1, s2) = ((-nu + disc) / 2.0, (-nu - disc) / 2.0);
    let oracle = |t: f64| eps * (s2 * (s1 * t).exp() - s1 * (s2 * t).exp()) / (s2 - s1);
    for i in 0..traj.len() {
        let t = traj.times()[i];
        let h = traj.h(i);
        // first cosine coefficient, normalized by that of the initial cell averages
        let proj = |v: &[f64]| (0..n).map(|j| (v[j] - 1.0) * avg_cos(j)).sum::<f64>();
        let norm = (0..n).map(|j| avg_cos(j) * avg_cos(j)).sum::<f64>();
        let a = proj(h) / norm;
        assert!(
            (a - oracle(t)).abs() < 2e-3 * eps,
            "t = {t}: mode amplitude {a:e}, linear theory {:e}",
            oracle(t)
        );
    }
    assert!(oracle(2.0) < 0.7 * eps, "test must see real decay");
}

#[test]
fn periodic_shift_commutes_with_stepping() {
    let cfg = flat_bottom(120, 5e-4);
    let base = smooth_state(&cfg);
    let shift = 37;
    let rot = |v: &[f64]| -> Vec<f64> { (0..v.len()).map(|j| v[(j + v.len() - shift) % v.len()]).collect() };
    let shifted = SweState {
        h: rot(&base.h),
        hu: rot(&base.hu),
        t: 0.0,
    };
    let a = run(&cfg, base, 500);
    let b = run(&cfg, shifted, 500);
    assert_eq!(rot(&a.h), b.h);
    assert_eq!(rot(&a.hu), b.hu);
}

#[test]
fn mass_is_conserved_over_ten_thousand_steps() {
    let cfg = SweConfig::default();
    let topo = Topography::bump(&cfg).unwrap();
    let state = SweState {
        h: (0..cfg.cells())
            .map(|j| 4.0 + 0.2 * (TAU * 3.0 * cfg.cell_center(j) / cfg.L + 0.4).sin() - topo.z[j])
            .collect(),
        hu: (0..cfg.cells())
            .map(|j| 10.0 + 0.5 * (TAU * 2.0 * cfg.cell_center(j) / cfg.L).cos())
            .collect(),
        t: 0.0,
    };
    let m0 = state.mass(cfg.dx);
    let s = run(&cfg, state, 10_000);
    assert!(((s.mass(cfg.dx) - m0) / m0).abs() < 1e-10);
}

#[test]
fn lake_at_rest_is_preserved_over_ten_thousand_steps() {
    let cfg = SweConfig::default();
    let topo = Topography::bump(&cfg).unwrap();
    let state = SweState::flat(&topo, 4.0, 0.0).unwrap();
    let s = run(&cfg, state, 10_000);
    for j in 0..cfg.cells() {
        assert!((s.h[j] + topo.z[j] - 4.0).abs() < 1e-10);
        assert!(s.hu[j].abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lake_at_rest_for_any_level_and_bump(level in 0.8f64..6.0, height in 0.0f64..0.7, width in 1.0f64..20.0) {
        let cfg = SweConfig { dx: 0.4, topo_height: height, topo_width: width, ..SweConfig::default() };
        let topo = Topography::bump(&cfg).unwrap();
        let state = SweState::flat(&topo, level, 0.0).unwrap();
        let s = run(&cfg, state, 200);
        for j in 0..cfg.cells() {
            prop_assert!((s.h[j] + topo.z[j] - level).abs() < 1e-12);
            prop_assert!(s.hu[j].abs() < 1e-12);
        }
    }

    #[test]
    fn mass_conserved_for_random_smooth_states(
        a in 0.0f64..0.3, k in 1u32..6, phase in 0.0f64..TAU, u0 in -3.0f64..3.0,
    ) {
        let cfg = SweConfig { dx: 0.4, ..SweConfig::default() };
        let topo = Topography::bump(&cfg).unwrap();
        let h: Vec<f64> = (0..cfg.cells())
            .map(|j| 4.0 + a * (2.0 * PI * f64::from(k) * cfg.cell_center(j) / cfg.L + phase).sin() - topo.z[j])
            .collect();
        let hu = h.iter().map(|h| h * u0).collect();
        let state = SweState { h, hu, t: 0.0 };
        let m0 = state.mass(cfg.dx);
        let s = run(&cfg, state, 300);
        prop_assert!(((s.mass(cfg.dx) - m0) / m0).abs() < 1e-13);
        prop_assert!(s.h.iter().chain(&s.hu).all(|v| v.is_finite()));
    }
}
