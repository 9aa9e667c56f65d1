use harmwarp::families::{build_h3_family, Chart};
use harmwarp::harmonicity::*;
use harmwarp::lie3::{Algebra, LeftInvariantField, NonUnimodular, Unimodular};
use harmwarp::tension::*;
use harmwarp::warp::*;
use proptest::prelude::*;

fn opts() -> SolveOptions<f64> {
    SolveOptions::default()
}

fn unit(v: [f64; 3]) -> LeftInvariantField<f64> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    LeftInvariantField::new([v[0] / n, v[1] / n, v[2] / n])
}

fn problem(alg: Algebra<f64>, v: [f64; 3], w: WarpFunction<f64>, spec: PhiSpec<f64>) -> HarmonicityProblem<f64> {
    let phi = solve_phi(&w, 3, 0.0, spec, &opts()).unwrap();
    HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: alg,
            field: unit(v),
        },
        w,
        phi,
    )
    .unwrap()
}

#[test]
fn constant_warp_reduces_to_fiber_tension() {
    let alg = Algebra::Unimodular(Unimodular::new(2.0, 1.0, -1.0));
    let v = [1.0, 2.0, -1.0];
    let p = problem(alg, v, WarpFunction::constant(3.0).unwrap(), PhiSpec::Affine { g1: 1.0, g2: 0.5 });
    let s = s_of_v(&p, 0.7).unwrap();
    let fs = alg.fiber().fiber_s(&unit(v).coeffs);
    assert_eq!(s.horizontal, 0.0);
    for k in 0..3 {
        assert!((s.vertical[k] - fs[k] / 9.0).abs() < 1e-14);
    }
    assert!(s.vertical_terms[1..].iter().all(|t| t.iter().all(|c| *c == 0.0)));
}

#[test]
fn abelian_fiber_with_constant_warp_is_a_harmonic_map() {
    let alg = Algebra::Unimodular(Unimodular::new(0.0, 0.0, 0.0));
    let p = problem(alg, [1.0, 1.0, 0.0], WarpFunction::constant(2.0).unwrap(), PhiSpec::Affine { g1: 0.3, g2: -1.0 });
    let r = harmonic_map_check(&p, &SampleSpec::default(), None).unwrap();
    assert!(r.verdict);
    assert_eq!(r.max_tension, 0.0);
}

#[test]
fn heisenberg_central_axis_with_linear_warp() {
    let u = Unimodular::new(1.0, 0.0, 0.0);
    let v = unit([1.0, 0.0, 0.0]);
    let case = classify_harmonic_maps_unimodular(&u, &v, 1e-12).unwrap().unwrap();
    assert_eq!(case.printed_case.as_deref(), Some("2"));
    assert!((case.slope - 0.5).abs() < 1e-15);
    assert!(case.phi_free);
    for sign in [1.0, -1.0] {
        let p = instantiate_map_case(&u, &v, &case, SlopeChoice::Derived, sign, 2.0, [1.0, -0.5], &opts()).unwrap();
        let r = harmonic_map_check(&p, &SampleSpec::default(), None).unwrap();
        assert!(r.verdict, "{} {}", r.harmonicity.max_abs, r.max_tension);
    }
}

#[test]
fn heisenberg_plane_field_needs_phi_zero() {
    let u = Unimodular::new(1.0, 0.0, 0.0);
    let v = unit([0.0, 0.6, 0.8]);
    let case = classify_harmonic_maps_unimodular(&u, &v, 1e-12).unwrap().unwrap();
    assert_eq!(case.printed_case.as_deref(), Some("2"));
    assert!(!case.phi_free);
    let p = instantiate_map_case(&u, &v, &case, SlopeChoice::Derived, 1.0, 1.0, [1.0, 1.0], &opts()).unwrap();
    assert!(harmonic_map_check(&p, &SampleSpec::default(), None).unwrap().verdict);
    // The printed phi family with c1 != 0 breaks the vertical tension.
    let w = WarpFunction::linear(0.5, 1.0).unwrap();
    let p = problem(Algebra::Unimodular(u), [0.0, 0.6, 0.8], w, PhiSpec::Euler { c1: 1.0, c2: 0.0 });
    let r = harmonic_map_check(&p, &SampleSpec::default(), None).unwrap();
    assert!(r.harmonicity.verdict);
    assert!(r.max_tension > 1e-3);
}

#[test]
fn nonlinear_warp_breaks_the_tension() {
    let alg = Algebra::Unimodular(Unimodular::new(1.0, 0.0, 0.0));
    let w = solve_warp(0.5, 0.0, 1.0, 0.2, DomainRequest::Bounded { lo: -0.5, hi: 0.5 }, &opts()).unwrap();
    let phi = solve_phi(&w, 3, 0.0, PhiSpec::default_ivp(0.0), &opts()).unwrap();
    let p = HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: alg,
            field: unit([1.0, 0.0, 0.0]),
        },
        w,
        phi,
    )
    .unwrap();
    let r = harmonic_map_check(&p, &SampleSpec::default(), None).unwrap();
    assert!(r.harmonicity.verdict, "{}", r.harmonicity.max_abs);
    assert!(!r.verdict);
    assert!(r.max_tension > 1e-3);
}

#[test]
fn su2_slope_half_lambda_not_over_root_two() {
    let lam = 2.0;
    let u = Unimodular::new(lam, lam, lam);
    let v = unit([1.0, 2.0, 2.0]);
    let case = classify_harmonic_maps_unimodular(&u, &v, 1e-12).unwrap().unwrap();
    assert_eq!(case.printed_case.as_deref(), Some("3"));
    assert!((case.slope - lam / 2.0).abs() < 1e-14);
    assert!((case.printed_slope.unwrap() - lam / 2f64.sqrt()).abs() < 1e-14);
    assert!(case.phi_free);
    let good = instantiate_map_case(&u, &v, &case, SlopeChoice::Derived, 1.0, 1.0, [0.5, 0.5], &opts()).unwrap();
    assert!(harmonic_map_check(&good, &SampleSpec::default(), None).unwrap().verdict);
    let bad = instantiate_map_case(&u, &v, &case, SlopeChoice::Printed, 1.0, 1.0, [0.5, 0.5], &opts()).unwrap();
    let r = harmonic_map_check(&bad, &SampleSpec::default(), None).unwrap();
    assert!(!r.harmonicity.verdict);
}

#[test]
fn axis_fields_with_zero_phi_are_unlisted_harmonic_maps() {
    for lam in [[3.0, 2.0, 1.0], [2.0, 1.0, -1.0], [1.0, 1.0, -2.0]] {
        let u = Unimodular::new(lam[0], lam[1], lam[2]);
        for k in 0..3 {
            let mut c = [0.0; 3];
            c[k] = 1.0;
            let v = unit(c);
            let case = classify_harmonic_maps_unimodular(&u, &v, 1e-12).unwrap().unwrap();
            assert!(case.printed_case.is_none());
            let p = instantiate_map_case(&u, &v, &case, SlopeChoice::Derived, 1.0, 1.5, [0.0, 0.0], &opts()).unwrap();
            let r = harmonic_map_check(&p, &SampleSpec::default(), None).unwrap();
            assert!(r.verdict, "{lam:?} e{} {}", k + 1, r.max_abs());
        }
    }
}

#[test]
fn nonunimodular_case_three_needs_a() {
    let alg = NonUnimodular::new(2.0, 0.0, 1.0).unwrap();
    let w = WarpFunction::linear(1.0, 2.0).unwrap();
    let phi = solve_phi(&w, 3, 0.0, PhiSpec::Euler { c1: 0.0, c2: 0.0 }, &opts()).unwrap();
    let err = classify_harmonic_maps_nonunimodular(&alg, &unit([0.0, 1.0, 0.0]), &w, &phi, &SampleSpec::default());
    assert!(matches!(err, Err(TensionError::Precondition(_))));
}

#[test]
fn nonunimodular_case_one_reports_residuals() {
    let alg = NonUnimodular::new(1.0, 0.0, 1.0).unwrap();
    let w = WarpFunction::linear(1.0, 2.0).unwrap();
    let phi = solve_phi(&w, 3, -4.0, PhiSpec::Euler { c1: 0.0, c2: 0.0 }, &opts()).unwrap();
    let r =
        classify_harmonic_maps_nonunimodular(&alg, &unit([1.0, 0.0, 0.0]), &w, &phi, &SampleSpec::default()).unwrap();
    assert_eq!(r.case_id.as_deref(), Some("1"));
    assert_eq!(r.printed.len(), 4);
    // f = t + 2 solves f f'' + 2 f'^2 = 2 alpha^2 and the phi line holds.
    assert!(r.printed[0].max_abs < 1e-12);
    assert!(r.printed[3].max_abs < 1e-9);
    assert!(r.max_harmonicity < 1e-9);
}

#[test]
fn unsupported_abstract_fiber() {
    let w = WarpFunction::sqrt_quadratic(0.0, 1.0, 1.0).unwrap();
    let phi = solve_phi(&w, 2, 0.0, PhiSpec::default_ivp(1.0), &opts()).unwrap();
    let p = HarmonicityProblem::new(FiberSource::Abstract2 { kappa0: 0.0, kappa1: 0.0 }, w, phi);
    if let Ok(p) = p {
        assert!(matches!(s_of_v(&p, 1.0), Err(TensionError::Unsupported(_))));
    }
}

#[test]
fn h3_family_tension_is_proportional_to_phi() {
    let field = build_h3_family(1.0, 0.5).unwrap();
    let w = WarpFunction::linear(0.5, 1.0).unwrap();
    let phi = solve_phi(&w, 3, field.phi_rhs(), PhiSpec::Euler { c1: 0.3, c2: 0.0 }, &opts()).unwrap();
    let pts = [[0.2, 0.1, -0.3], [-0.4, 0.5, 0.0]];
    let r = family_map_check(&field, &w, &phi, &SampleSpec::default(), &pts, None).unwrap();
    assert!(r.harmonicity.verdict, "{}", r.harmonicity.max_abs);
    // Only the e1 component survives: m(4m^2+1)(kappa x + kappa') phi / (2 f^3).
    let m = 0.5;
    for row in &r.tension {
        let (f, _, _) = w.eval(row.t).unwrap();
        let (ph, _, _) = phi.eval(row.t).unwrap();
        let want = (0..2)
            .map(|i| m * (4.0 * m * m + 1.0) * (pts[i][0] + 0.5) * ph / (2.0 * f * f * f))
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        assert!(row.horizontal.abs() < 1e-12);
        assert!((row.vertical[0] - want).abs() < 1e-9 * (1.0 + want.abs()), "{:?} {}", row.vertical, want);
    }
}

#[test]
fn h3_scan_finds_no_harmonic_map() {
    let grid: Vec<Vec<f64>> = default_scan_grid(ScanFamily::H3);
    let spec = SampleSpec {
        samples: 9,
        ..SampleSpec::default()
    };
    let r = impossibility_scan(ScanFamily::H3, &grid, &spec, &opts()).unwrap();
    assert_eq!(r.statement, "grid evidence, not proof");
    assert!(r.all_clear, "{:?}", r.points.iter().map(|p| p.best_residual).collect::<Vec<_>>());
}

#[test]
fn rxh2_scan_hits_the_zero_phi_log_field() {
    let grid: Vec<Vec<f64>> = default_scan_grid(ScanFamily::RxH2);
    let spec = SampleSpec {
        samples: 9,
        ..SampleSpec::default()
    };
    let r = impossibility_scan(ScanFamily::RxH2, &grid, &spec, &opts()).unwrap();
    assert!(!r.all_clear);
    let p = r.points.iter().find(|p| !p.clears_margin).unwrap();
    assert!(p.best_candidate.contains("Euler (0, 0)"), "{}", p.best_candidate);
    assert_eq!(scan_chart(ScanFamily::RxH2, 1.0), Chart::RxH2 { alpha: 1.0 });
}

proptest! {
    #[test]
    fn tension_terms_sum(l in prop::array::uniform3(-2.0f64..2.0), v in prop::array::uniform3(-1.0f64..1.0),
                         slope in -1.0f64..1.0, t in 0.0f64..1.0) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-2);
        let alg = Algebra::Unimodular(Unimodular::new(l[0], l[1], l[2]));
        let w = WarpFunction::linear(slope, 2.0).unwrap();
        let p = problem(alg, v, w, PhiSpec::Euler { c1: 1.0, c2: 0.2 });
        let s = s_of_v(&p, t).unwrap();
        let mut sum = [0.0; 3];
        for term in &s.vertical_terms {
            for k in 0..3 { sum[k] += term[k]; }
        }
        for k in 0..3 { prop_assert!((sum[k] - s.vertical[k]).abs() < 1e-12); }
        // Linear f kills every f'' term.
        prop_assert!(s.horizontal.abs() < 1e-14);
    }

    #[test]
    fn derived_slope_always_gives_a_harmonic_map(l in prop::array::uniform3(-2.0f64..2.0), k in 0usize..3, beta in 1.0f64..3.0) {
        let u = Unimodular::new(l[0], l[1], l[2]);
        let mut c = [0.0; 3];
        c[k] = 1.0;
        let v = unit(c);
        let case = classify_harmonic_maps_unimodular(&u, &v, 1e-12).unwrap().unwrap();
        let p = instantiate_map_case(&u, &v, &case, SlopeChoice::Derived, 1.0, beta, [0.0, 0.0], &opts()).unwrap();
        let r = harmonic_map_check(&p, &SampleSpec::default(), None).unwrap();
        prop_assert!(r.verdict, "{}", r.max_abs());
    }
}
