use invscheme::continuous::{schwarz_solution, schwarzian, SchwarzSolutionParams};
use invscheme::schemes::{
    k_from_c, ode2_exact_trajectory, ode2_max_residuals, ode2_scheme_residual_normalized, theta_exact,
    winternitz_exact_trajectory, winternitz_max_residual, winternitz_step, Ode2ExactParams, ThetaMode,
    WinternitzExactParams,
};
use invscheme::stencil::{cross_ratio_mixed, cross_ratio_same, SchemeParams, Trajectory};
use invscheme::symmetry::{flow, prolong_jet, GeneratorId, MobiusMap};
use proptest::prelude::*;

fn mobius() -> impl Strategy<Value = MobiusMap> {
    (-2.0..2.0f64, -2.0..2.0f64, -0.3..0.3f64, 0.5..2.0f64).prop_filter_map("near-singular", |(a, b, c, d)| {
        MobiusMap::new(a, b, c, d).ok().filter(|m| m.det().abs() > 0.1)
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn schwarzian_is_mobius_invariant(
        m in mobius(),
        c1 in 0.5..2.0f64,
        c2 in 1.0..3.0f64,
        f in -1.0..1.0f64,
        x in 0.0..1.0f64,
    ) {
        // a non-fractional-linear function: y = tan(f·x) + x
        let (t, sec2) = ((f * x).tan(), 1.0 / (f * x).cos().powi(2));
        let j = invscheme::continuous::Jet3::new(x, t + x, f * sec2 + 1.0, 2.0 * f * f * t * sec2, 2.0 * f.powi(3) * sec2 * (sec2 + 2.0 * t * t));
        let s0 = schwarzian(&j).unwrap();
        if let Ok(jm) = prolong_jet(&m, &j) {
            prop_assert!(close(schwarzian(&jm).unwrap(), s0, 1e-8));
        }
        let p = SchwarzSolutionParams::new(-c1, c2, 0.0).unwrap();
        let js = schwarz_solution(&p, x).unwrap();
        if let Ok(jm) = prolong_jet(&m, &js) {
            prop_assert!(schwarzian(&jm).unwrap().abs() <= 1e-8 * (1.0 + (jm.y3 / jm.y1).abs()));
        }
    }

    #[test]
    fn cross_ratios_are_mobius_invariant(
        m in mobius(),
        v in prop::array::uniform4(-1.0..1.0f64),
        w in prop::array::uniform2(-1.0..1.0f64),
    ) {
        let mut v = v;
        v.sort_by(f64::total_cmp);
        prop_assume!(v.windows(2).all(|p| p[1] - p[0] > 1e-2));
        let img: Vec<f64> = v.iter().filter_map(|x| m.apply(*x).ok()).collect();
        prop_assume!(img.len() == 4);
        let a = cross_ratio_same(v[0], v[1], v[2], v[3]).unwrap();
        let b = cross_ratio_same(img[0], img[1], img[2], img[3]).unwrap();
        prop_assert!(close(a, b, 1e-8));

        let (x0, u0, x1, u1) = (v[0], w[0] + 3.0, v[1], w[1] + 3.0);
        let mixed = cross_ratio_mixed(x0, u0, x1, u1).unwrap();
        if let (Ok(a0), Ok(b0), Ok(a1), Ok(b1)) = (m.apply(x0), m.apply(u0), m.apply(x1), m.apply(u1)) {
            prop_assert!(close(cross_ratio_mixed(a0, b0, a1, b1).unwrap(), mixed, 1e-8));
        }
    }

    #[test]
    fn flows_form_one_parameter_groups(gi in 0usize..9, s in -0.3..0.3f64, t in -0.3..0.3f64, v in -1.0..1.0f64) {
        let g = GeneratorId::ALL[gi];
        let composed = flow(g, s).map().compose(&flow(g, t).map());
        let direct = flow(g, s + t).map();
        prop_assert!(close(composed.apply(v).unwrap(), direct.apply(v).unwrap(), 1e-12));
        let back = flow(g, -s).map().compose(&flow(g, s).map());
        prop_assert!(close(back.apply(v).unwrap(), v, 1e-12));
    }

    #[test]
    fn winternitz_step_closes_the_cross_ratio(a in -2.0..2.0f64, d1 in 0.05..1.0f64, d2 in 0.05..1.0f64, k in 3.5..6.0f64) {
        let (y0, y1, y2) = (a, a + d1, a + d1 + d2);
        if let Ok(y3) = winternitz_step(y0, y1, y2, k) {
            prop_assert!(close(cross_ratio_same(y0, y1, y2, y3).unwrap(), k, 1e-9));
        }
    }

    #[test]
    fn random_winternitz_solutions(
        s in prop::bool::ANY,
        c1 in 0.5..2.0f64, c2 in 1.0..3.0f64, c3 in -1.0..1.0f64,
        c4 in 0.5..2.0f64, c5 in 1.0..3.0f64, c6 in -1.0..1.0f64,
    ) {
        let sg = if s { 1.0 } else { -1.0 };
        let p = WinternitzExactParams::new([sg * c1, sg * c2, c3, c4, c5, c6]).unwrap();
        let tr = winternitz_exact_trajectory(&p, 0, 12).unwrap();
        prop_assert!(winternitz_max_residual(&tr, 4.0).unwrap() <= 1e-10);
    }

    #[test]
    fn random_exact_parameters_solve_the_scheme(
        a in 0.5..2.0f64,
        b in -2.0..2.0f64,
        neg in prop::bool::ANY,
        ei in 0usize..3,
        extra in 1.0..6.0f64,
    ) {
        let eps: f64 = [0.1, 0.01, 0.001][ei];
        let c = if neg { -2.0 } else { 2.0 };
        let rho = 1.2 * ((1.0 + eps) / eps).sqrt() + extra;
        let e = Ode2ExactParams::new(a, b, c, eps, rho).unwrap();
        let tr = ode2_exact_trajectory(&e, 0, 15).unwrap();
        let p = SchemeParams::new(c, eps, e.theta(), k_from_c(c, eps)).unwrap();
        let (_, mesh) = ode2_max_residuals(&tr, &p).unwrap();
        prop_assert!(mesh <= 1e-10);
        for i in 1..tr.len() - 1 {
            let r = ode2_scheme_residual_normalized(&tr.stencil3_at(i).unwrap(), &p).unwrap();
            prop_assert!(r.abs() <= 1e-10, "normalized residual {r:e} at {i}");
        }
    }

    #[test]
    fn theta_exact_solves_its_quadratic(c in -5.0..5.0f64, eps in 1e-4..2.0f64) {
        let t = 2.0 * theta_exact(c, eps) / (1.0 + eps).sqrt();
        prop_assert!((t * t - 2.0 * c.abs() * eps.sqrt() * t - 4.0).abs() <= 1e-9 * (1.0 + t * t));
        prop_assert!(t < 0.0);
        prop_assert_eq!(ThetaMode::Exact.resolve(c, eps), theta_exact(c, eps));
    }

    #[test]
    fn csv_round_trip_is_exact(n0 in -50i64..50, xs in prop::collection::vec(1e-3..1e3f64, 2..20), u in prop::collection::vec(-1e6..1e6f64, 20)) {
        let mut x = xs.clone();
        x.sort_by(f64::total_cmp);
        x.dedup();
        prop_assume!(x.len() >= 2);
        let tr = Trajectory::from_xy(n0, &x, &u[..x.len()]).unwrap();
        let back = Trajectory::read_csv(tr.to_csv_string().as_bytes()).unwrap();
        prop_assert_eq!(back, tr);
    }
}
