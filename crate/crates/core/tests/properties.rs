use proptest::prelude::*;

use tricomi_lab::blowup::{is_critical_power, ode_blowup_point, ode_integrate, ComparisonODE, OdeStatus};
use tricomi_lab::exponents::{
    critical_condition_residual, generalized_strauss, glassey, lifespan_exponent, scaling_identity_residual,
    ExponentContext, LifespanLaw,
};
use tricomi_lab::fd::{run, DetectionConfig, GridConfig, Mode, ModelParams};
use tricomi_lab::field::Geometry;
use tricomi_lab::kernel::{phi, phi_inverse, Kernel, KernelConstants};
use tricomi_lab::linear::homogeneous_value;
use tricomi_lab::profile::DataProfile;
use tricomi_lab::special::{beta_fn, gauss_jacobi_rule, hyp2f1_diag};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn glassey_decreasing_and_above_one(m1 in 1.001f64..50.0, dm in 0.001f64..50.0) {
        let (a, b) = (glassey(m1).unwrap(), glassey(m1 + dm).unwrap());
        prop_assert!(a > b && b > 1.0);
    }

    #[test]
    fn critical_residual_vanishes_on_glassey(n in 1u32..=5, ell in 0.01f64..=5.0) {
        let pc = glassey((ell + 1.0) * n as f64).unwrap();
        let ctx = ExponentContext::new(n, ell, Some(pc)).unwrap();
        prop_assert!(critical_condition_residual(&ctx).unwrap().abs() < 1e-12);
        prop_assert!(is_critical_power(n, ell, pc).unwrap());
    }

    #[test]
    fn scaling_identity_holds(n in 1u32..=5, ell in 0.01f64..=5.0, p in 1.0001f64..=5.0) {
        let ctx = ExponentContext::new(n, ell, Some(p)).unwrap();
        prop_assert!(scaling_identity_residual(&ctx).unwrap().abs() < 1e-12);
    }

    #[test]
    fn classical_strauss_solves_quadratic(n in 2u32..=8) {
        let p = generalized_strauss(&ExponentContext::classical_limit(n, None).unwrap()).unwrap();
        let nf = n as f64;
        prop_assert!(p > 0.0);
        prop_assert!(((nf - 1.0) * p * p - (nf + 1.0) * p - 2.0).abs() < 1e-12 * p * p * nf);
    }

    #[test]
    fn subcritical_slope_negative(n in 1u32..=5, ell in 0.01f64..=5.0, frac in 0.001f64..0.999) {
        let pc = glassey((ell + 1.0) * n as f64).unwrap();
        let p = 1.0 + frac * (pc - 1.0);
        let law = lifespan_exponent(&ExponentContext::new(n, ell, Some(p)).unwrap()).unwrap();
        match law {
            LifespanLaw::Subcritical { slope } => prop_assert!(slope < 0.0),
            LifespanLaw::Critical { .. } => prop_assert!(false, "p = {} is below the critical power", p),
        }
    }

    #[test]
    fn hyp2f1_at_least_one_and_nondecreasing(g in 0.001f64..0.499, z in 0.0f64..0.999, dz in 0.0f64..0.001) {
        let a = hyp2f1_diag(g, z).unwrap();
        let b = hyp2f1_diag(g, (z + dz).min(0.9999)).unwrap();
        prop_assert!(a >= 1.0);
        prop_assert!(b >= a * (1.0 - 1e-14));
    }

    #[test]
    fn jacobi_weights_positive_and_moments_exact(alpha in -0.95f64..2.0, beta in -0.95f64..2.0, order in 2usize..24) {
        let rule = gauss_jacobi_rule(alpha, beta, order).unwrap();
        prop_assert!(rule.weights.iter().all(|w| *w > 0.0));
        for j in 0..(2 * order) {
            let exact = 2f64.powf(alpha + beta + j as f64 + 1.0) * beta_fn(alpha + 1.0, beta + j as f64 + 1.0).unwrap();
            let got = rule.integrate(|s| (1.0 + s).powi(j as i32));
            prop_assert!((got / exact - 1.0).abs() < 1e-12, "j = {}: {} vs {}", j, got, exact);
        }
    }

    #[test]
    fn kernel_bounded_below_and_symmetric(
        ell in 0.1f64..4.0,
        t in 0.05f64..5.0,
        bf in 0.0f64..1.0,
        df in -1.0f64..1.0,
        x in -3.0f64..3.0,
    ) {
        let k = Kernel::new(ell).unwrap();
        let b = bf * t;
        let reach = phi(ell, t).unwrap() - phi(ell, b).unwrap();
        let y = x + df * reach;
        let e = k.eval(t, x, b, y).unwrap();
        prop_assert!(e >= k.lower_bound(t, x, b, y) * (1.0 - 1e-12));
        let mirrored = k.eval(t, x, b, 2.0 * x - y).unwrap();
        prop_assert!((e / mirrored - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_bound_on_characteristic_family(
        ell in 0.1f64..4.0,
        r in 0.2f64..3.0,
        zf in 0.0f64..10.0,
        yf in 0.0f64..1.0,
        bf in 0.0f64..1.0,
    ) {
        let z = r * (1.0 + zf);
        let t = phi_inverse(ell, z + r).unwrap();
        let y = r + yf * (z - r);
        let b_lo = phi_inverse(ell, y - r).unwrap();
        let b_hi = phi_inverse(ell, y + r).unwrap().min(t);
        let b = b_lo + bf * (b_hi - b_lo);
        let g = KernelConstants::new(ell, None).unwrap().gamma;
        let e = Kernel::new(ell).unwrap().eval(t, z, b, y).unwrap();
        let bound = 2f64.powf(-2.0 * g) * (y + r).powf(-g) * (z + r).powf(-g);
        prop_assert!(e >= bound * (1.0 - 1e-12), "{} < {}", e, bound);
    }

    #[test]
    fn comparison_ode_never_below_start(c in 0.0f64..3.0, m in 0.05f64..3.0, p in 1.2f64..4.0, a in 0.2f64..1.0, eps in 0.05f64..2.0) {
        let ode = ComparisonODE::new(c, m, p, 1.0, a, eps).unwrap();
        let tr = ode_integrate(&ode, 1e12).unwrap();
        prop_assert!(tr.gs.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(tr.gs.iter().all(|g| *g >= m * eps));
        if c == 0.0 {
            prop_assert_eq!(tr.status, OdeStatus::ReachedEnd);
        }
    }

    #[test]
    fn blowup_point_monotone_in_eps_c_and_m(c in 0.1f64..3.0, m in 0.1f64..3.0, p in 1.2f64..4.0, a in 0.2f64..1.0, eps in 0.05f64..2.0, k in 1.01f64..3.0) {
        let z = |c: f64, m: f64, e: f64| ode_blowup_point(&ComparisonODE::new(c, m, p, 1.0, a, e).unwrap()).unwrap();
        let base = z(c, m, eps);
        prop_assert!(z(c * k, m, eps) <= base);
        prop_assert!(z(c, m * k, eps) <= base);
        prop_assert!(z(c, m, eps * k) <= base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constant_and_ramp_identities(ell in 0.2f64..3.0, t in 0.05f64..1.5, x in -0.5f64..0.5, c in -2.0f64..2.0, eps in 0.1f64..2.0) {
        let wide = 1.0 + phi(ell, t).unwrap() + x.abs();
        let u = homogeneous_value(&DataProfile::constant(c, wide), &DataProfile::Zero, eps, t, x, ell, 1e-11).unwrap();
        prop_assert!((u.value - eps * c).abs() < 1e-9);
        let v = homogeneous_value(&DataProfile::Zero, &DataProfile::constant(c, wide), eps, t, x, ell, 1e-11).unwrap();
        prop_assert!((v.value - eps * c * t).abs() < 1e-9);
    }
}

fn confinement_params(ell: f64, radius: f64, eps: f64, p: f64, linear: bool, mode: Mode) -> ModelParams {
    ModelParams {
        n: 1,
        ell,
        p,
        radius,
        eps,
        u0: DataProfile::compact_bump(1.0, radius, 4),
        u1: DataProfile::compact_bump(0.5, radius, 4),
        mode,
        geometry: Geometry::Line,
        linear,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fd_runs_stay_in_the_cone(
        ell in prop::sample::select(vec![0.5, 1.0, 2.0]),
        radius in 0.5f64..1.5,
        eps in 0.05f64..1.0,
        p in 1.5f64..3.0,
        linear in any::<bool>(),
        edp in any::<bool>(),
    ) {
        let mode = if edp { Mode::Edp } else { Mode::Tricomi };
        let params = confinement_params(ell, radius, eps, p, linear, mode);
        let mut grid = GridConfig::new(0.04, 1.5);
        grid.stride = 5;
        let out = run(&params, &grid, &DetectionConfig::default()).unwrap();
        let f = &out.field;
        for (k, t) in f.times.iter().enumerate() {
            let scale = f.slices[k].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let extent = f.support_extent(k, tricomi_lab::fd::SUPPORT_THRESHOLD * scale);
            let cone = radius + phi(ell, *t).unwrap() + 2.0 * f.dx;
            prop_assert!(extent <= cone, "t = {}: support {} beyond {}", t, extent, cone);
        }
        if let Some(t) = out.verdict.lifespan_estimate {
            prop_assert!(t >= 0.0);
        }
    }
}
