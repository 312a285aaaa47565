use std::f64::consts::{FRAC_PI_4, PI, TAU};

use fermi_rpa::kernel::KernelBundle;
use fermi_rpa::lattice::{enumerate_fermi_ball, fermi_ball_count, lambda_qk};
use fermi_rpa::linalg::{matrix_abs, max_abs_diff, sherman_morrison_inverse, spd_power};
use fermi_rpa::occupation::{half_sphere_angular_quadrature, lindhard_half, q0, quasiparticle_weight, signed_kernel_integral};
use fermi_rpa::quadrature::{integrate_interval, integrate_interval_with_breaks};
use fermi_rpa::thermo::{dv_nq, dv_q, lambda_integral_closed, thermo_nq};
use fermi_rpa::{
    closed_shell_params, DvSide, FermiGeometry, InteractionFourier, Model, Momentum3, PatchSet, QuadratureSpec, Route,
    Routes, ThermoParams,
};
use nalgebra::{DMatrix, DVector};

fn model(kf: f64, v: f64) -> Model {
    let vhat = InteractionFourier::constant(v, 2.5).unwrap();
    Model::new(closed_shell_params(kf, None, None, vhat).unwrap()).unwrap()
}

#[test]
fn small_balls_and_kappa() {
    assert_eq!(enumerate_fermi_ball(0.5).unwrap(), vec![Momentum3::ZERO]);
    assert_eq!(fermi_ball_count(1.0), 7);
    assert_eq!(fermi_ball_count(2.0), 33);
    let v = InteractionFourier::constant(1.0, 0.9).unwrap();
    let p = closed_shell_params(2.0, Some(2), None, v.clone()).unwrap();
    assert_eq!(p.n, 33);
    assert!((p.kappa - 0.623_53).abs() < 1e-5);
    let p = closed_shell_params(1.0, Some(2), None, v).unwrap();
    assert!((p.kappa - 7f64.powf(-1.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn q_epsilon_membership() {
    let g = FermiGeometry::new(7.0, 1.5).unwrap();
    assert!(g.in_q_epsilon(Momentum3::new(0, 0, 7), 0.5));
    assert!(!g.in_q_epsilon(Momentum3::new(1, 1, 10), 0.5));
    let q = Momentum3::new(2, 3, 6);
    let min = g.min_positive_lambda(q).unwrap();
    assert!(g.in_q_epsilon(q, 0.99 * min));
}

#[test]
fn cq_matches_ball_lookup_on_the_shell() {
    let g = FermiGeometry::new(6.0, 2.0).unwrap();
    let ball: std::collections::HashSet<_> = enumerate_fermi_ball(6.0).unwrap().into_iter().collect();
    for &q in g.shell() {
        let inside = ball.contains(&q);
        let want: Vec<_> = g
            .gamma_nor()
            .iter()
            .copied()
            .filter(|&k| {
                let (a, b) = (ball.contains(&(q + k)), ball.contains(&(q - k)));
                if inside {
                    !a || !b
                } else {
                    a || b
                }
            })
            .collect();
        assert_eq!(g.momentum_set_cq(q), want, "q = {q}");
    }
    let q = Momentum3::new(0, 0, 7);
    assert!(g.momentum_set_cq(q).contains(&Momentum3::new(0, 0, 1)));
    assert!(g.momentum_set_cq(Momentum3::new(0, 0, 2)).is_empty());
}

#[test]
fn single_cap_catches_northern_points() {
    let kf = 20.0;
    let ps = PatchSet::new(kf, 2.5, 2).unwrap();
    let g = FermiGeometry::new(kf, 2.5).unwrap();
    let cap = (PI / 2.0 - ps.margin).cos();
    for &q in g.shell() {
        let z = q.z as f64 / q.norm();
        if z > cap + 1e-12 {
            assert_eq!(ps.patch_of(q), Some(0), "{q}");
        }
        if z < -cap - 1e-12 {
            assert_eq!(ps.patch_of(q), Some(1), "{q}");
        }
    }
}

#[test]
fn eight_patches_at_kf_twenty() {
    let ps = PatchSet::new(20.0, 2.5, 8).unwrap();
    let target = TAU / 4.0;
    for b in ps.bands() {
        let area = (b.theta_lo.cos() - b.theta_hi.cos()) * TAU / b.sectors as f64;
        assert!((area - target).abs() < 1e-12, "{area}");
    }
    assert_eq!(ps.bands().iter().map(|b| b.sectors).sum::<usize>(), 4);
    assert!(ps.min_corridor_width(30) >= 5.0 - 1e-9);
}

#[test]
fn diameter_constant_stays_bounded() {
    // kF from about 6 to 29 covers N from 10^3 to 10^5
    let mut consts = vec![];
    for kf in [6.0, 9.0, 13.0, 19.0, 29.0] {
        let n = fermi_ball_count(kf);
        let m = fermi_rpa::lattice::default_patch_count(n);
        let r = if kf < 8.0 { 1.2 } else { 2.5 };
        let ps = PatchSet::new(kf, r, m).unwrap();
        let diam = (0..m).map(|a| ps.cell_diameter(a)).fold(0.0, f64::max);
        consts.push(diam * (m as f64).sqrt() / (n as f64).cbrt());
    }
    let max = consts.iter().copied().fold(0.0, f64::max);
    assert!(max < 4.0, "{consts:?}");
}

#[test]
fn north_pole_pair_count_by_column_scan() {
    let (kf, r) = (2.0, 1.0);
    let g = FermiGeometry::new(kf, r).unwrap();
    let ps = PatchSet::new(kf, r, 2).unwrap();
    let lat = ps.assign_lattice(&g);
    let k = Momentum3::new(0, 0, 1);
    let mut want = 0;
    for x in -3i64..=3 {
        for y in -3i64..=3 {
            for z in -3i64..=3 {
                let h = Momentum3::new(x, y, z);
                let p = h + k;
                if h.norm_sq() <= 4 && p.norm_sq() > 4 && lat.owner(h) == Some(0) && lat.owner(p) == Some(0) {
                    want += 1;
                }
            }
        }
    }
    assert!(want > 0);
    assert_eq!(lat.pair_count(0, k, 1), want);
    assert_eq!(lat.pair_count(0, Momentum3::new(0, 0, 6), 1), 0);
}

#[test]
fn index_sets_for_the_unit_z_momentum() {
    let ps = PatchSet::new(20.0, 2.5, 8).unwrap();
    let (plus, minus) = ps.index_sets(Momentum3::new(0, 0, 1), 0.01);
    assert_eq!(plus, vec![0, 1, 2, 3]);
    assert_eq!(minus, vec![4, 5, 6, 7]);
}

#[test]
fn membership_dump_has_one_row_per_point() {
    let g = FermiGeometry::new(6.0, 1.5).unwrap();
    let ps = PatchSet::new(6.0, 1.5, 8).unwrap();
    let lat = ps.assign_lattice(&g);
    let csv = lat.membership_csv();
    assert!(csv.starts_with("kx,ky,kz,alpha\n"));
    assert_eq!(csv.lines().count(), lat.members().len() + 1);
}

#[test]
fn matrix_function_examples() {
    let a = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 3.0]);
    assert!(max_abs_diff(&matrix_abs(&a), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0])) < 1e-15);
    let (c, s) = (0.6, 0.8);
    let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    assert!(max_abs_diff(&matrix_abs(&rot), &DMatrix::identity(2, 2)) < 1e-14);
    let d = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
    assert!(max_abs_diff(&spd_power(&d, 0.5).unwrap(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0])) < 1e-14);
    assert!(max_abs_diff(&spd_power(&DMatrix::identity(3, 3), 0.37).unwrap(), &DMatrix::identity(3, 3)) < 1e-15);
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let sm = sherman_morrison_inverse(&DMatrix::identity(2, 2), &e1, &e1).unwrap();
    assert!(max_abs_diff(&sm, &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0])) < 1e-15);
    let z = DVector::zeros(2);
    assert_eq!(sherman_morrison_inverse(&d, &z, &e1).unwrap(), d);
}

#[test]
fn kernel_bound_times_m_is_moderate() {
    let m = model(12.0, 1.0);
    let worst = m.kernels().map(|kb| kb.kmat.abs().max()).fold(0.0, f64::max) * m.params.m as f64;
    assert!(worst.is_finite() && worst < 10.0, "{worst}");
}

#[test]
fn q0_examples() {
    let (kappa, v) = (0.62, 1.3);
    assert_eq!(q0(0.0, kappa, v), TAU * kappa * v);
    assert!(q0(1e3, kappa, v) < 1e-5 * q0(0.0, kappa, v));
    assert!((q0(1.0, kappa, v) - TAU * kappa * v * (1.0 - FRAC_PI_4)).abs() < 1e-15);
    let spec = QuadratureSpec::tight();
    assert!((half_sphere_angular_quadrature(0.0, &spec).unwrap() - TAU).abs() < 1e-12);
    for mu in [0.1, 1.0, 10.0] {
        let got = half_sphere_angular_quadrature(mu, &spec).unwrap();
        assert!((got - TAU * lindhard_half(mu)).abs() < 1e-8, "{mu}");
    }
}

#[test]
fn series_edge_cases() {
    let m = model(8.0, 1.0);
    let q = m.geom.shell().iter().copied().find(|&q| !m.ctilde(q).is_empty()).unwrap();
    assert_eq!(m.nq_boson_series(q, 0).unwrap(), 0.0);
    let alpha = m.alpha_of(q).unwrap();
    let want: f64 = m
        .ctilde(q)
        .iter()
        .map(|e| {
            let kb = m.kernel(e.k).unwrap();
            let k2 = &kb.kmat * &kb.kmat;
            k2[(e.position, e.position)] / kb.counts[e.plus_position] as f64
        })
        .sum();
    assert!((m.nq_boson_series(q, 1).unwrap() - want).abs() < 1e-15 * want.max(1e-300));
    assert!(m.lattice.owner(q) == Some(alpha));
}

#[test]
fn series_converges_by_twenty_terms() {
    for kf in [5.0, 8.0] {
        let m = model(kf, 1.0);
        for r in m.scan(Routes::MATRIX, 25).unwrap() {
            let a = r.nq_matrix.unwrap();
            let s = m.nq_boson_series(r.q, 20).unwrap();
            assert!((a - s).abs() <= 1e-12 * a.max(1e-12), "{}: {a} {s}", r.q);
        }
    }
}

#[test]
fn zero_potential_gives_unit_weight() {
    let m = model(8.0, 0.0);
    let res = m.scan(Routes::ALL, 25).unwrap();
    assert!(res.iter().all(|r| r.nq_matrix == Some(0.0) && r.nq_integral == Some(0.0)));
    assert_eq!(quasiparticle_weight(&res, Route::Matrix), 1.0);
}

#[test]
fn empty_ctilde_gives_zero() {
    let m = model(8.0, 1.0);
    let deep = Momentum3::new(0, 0, 3);
    assert!(m.ctilde(deep).is_empty());
    assert_eq!(m.nq_boson_matrix(deep), 0.0);
    assert_eq!(m.nq_asymptotic(deep).unwrap(), 0.0);
}

#[test]
fn split_domination_single_k() {
    // the signed integrand changes sign at mu = lambda; each side is bounded by its own Q = 0 value
    for (lambda, strength) in [(0.1, 3.0), (0.4, 0.5), (0.9, 10.0)] {
        let q = |mu: f64| strength * lambda / (mu * mu + lambda * lambda);
        let h = |mu: f64| (mu * mu - lambda * lambda) / (mu * mu + lambda * lambda).powi(2);
        let spec = QuadratureSpec::tight();
        let neg = integrate_interval(|mu| h(mu) / (1.0 + q(mu)), 0.0, lambda, &spec).unwrap().value;
        let pos = fermi_rpa::quadrature::integrate_semi_infinite(
            |mu| if mu < lambda { 0.0 } else { h(mu) / (1.0 + q(mu)) },
            &[lambda],
            &spec,
        )
        .unwrap()
        .value;
        let half = 0.5 / lambda;
        assert!(neg >= -half && neg < 0.0);
        assert!(pos <= half && pos > 0.0);
        let total = signed_kernel_integral(lambda, q, &[], &spec).unwrap() * PI;
        assert!((total - (neg + pos)).abs() < 1e-9 * half);
    }
}

#[test]
fn diagnostics_vanish_on_the_pole_axis() {
    let vhat = InteractionFourier::constant(1.0, 2.5).unwrap();
    let p = closed_shell_params(12.0, Some(2), None, vhat).unwrap();
    let m = Model::new(p).unwrap();
    for q in [Momentum3::new(0, 0, 13), Momentum3::new(0, 0, 11)] {
        assert!(!m.ctilde(q).is_empty());
        let (_, e3) = m.error_diagnostics(q).unwrap();
        assert!(e3 <= 1e-14 * m.nq_boson_matrix(q), "{q}: {e3}");
    }
}

#[test]
fn thermo_edges() {
    assert_eq!(lambda_integral_closed(1.0, 0.37), 0.0);
    let tp = ThermoParams::new(20.0, 2.5, |_| 1.0);
    let mut last = f64::INFINITY;
    for off in [0.1, 0.6, 1.2, 1.8, 2.4] {
        let v = thermo_nq(20.0 + off, &tp).unwrap();
        assert!(v >= 0.0 && v < last);
        last = v;
    }
}

#[test]
fn dv_short_range_sides_meet() {
    let mut gaps = vec![];
    for kf in [25.0, 50.0, 100.0] {
        let tp = ThermoParams::matched_coulomb(kf, 2.5, 1.0);
        let out = dv_nq(kf + 0.5, DvSide::Outside, &tp, Some(2.5)).unwrap();
        let ins = dv_nq(kf - 0.5, DvSide::Inside, &tp, Some(2.5)).unwrap();
        gaps.push((out - ins).abs() / out);
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(dv_q(1e3, 1.0, 10.0) < 1e-4);
}

#[test]
fn quadrature_reference_values() {
    let spec = QuadratureSpec::default();
    let r = integrate_interval(|x| x * x, 0.0, 1.0, &spec).unwrap();
    assert!((r.value - 1.0 / 3.0).abs() < 1e-15);
    let mu: f64 = 0.7;
    let r = integrate_interval(|l| (mu * mu - l * l) / (mu * mu + l * l).powi(2), 0.3, 1.0, &spec).unwrap();
    let anti = |l: f64| l / (mu * mu + l * l);
    assert!((r.value - (anti(1.0) - anti(0.3))).abs() < 1e-12);
    let strict = QuadratureSpec { abs_tol: 1e-12, rel_tol: 0.0, max_subdivisions: 1 << 10 };
    for f in [|x: f64| (-x * x).exp(), |x: f64| 1.0 / (1.0 + x * x), |x: f64| x.sqrt()] {
        assert!(integrate_interval_with_breaks(f, 0.0, 3.0, &[], &strict).is_ok());
    }
    let r = fermi_rpa::quadrature::integrate_semi_infinite(|m| 1.0 / (1.0 + m * m), &[], &QuadratureSpec::tight()).unwrap();
    assert!((r.value - PI / 2.0).abs() <= r.error.max(1e-14));
}

#[test]
fn lambda_and_kernel_consistency() {
    let m = model(8.0, 1.0);
    for kb in m.kernels() {
        for (i, &a) in kb.plus.iter().enumerate() {
            let w = m.patches.omega_hat(a);
            let l = kb.k.dot_f64(&w).abs() / kb.k.norm();
            assert_eq!(l, kb.lambdas[i]);
        }
    }
    let _ = lambda_qk(Momentum3::new(3, 4, 0), Momentum3::new(1, 0, 0));
    let kb = KernelBundle::from_parts(Momentum3::new(0, 0, 1), vec![], vec![], vec![], vec![], vec![], 0.1).unwrap();
    assert_eq!(kb.size(), 0);
}
