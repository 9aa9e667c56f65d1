use harmwarp::harmonicity::*;
use harmwarp::lie3::{Algebra, LeftInvariantField, NonUnimodular, Unimodular};
use harmwarp::warp::*;
use proptest::prelude::*;

fn opts() -> SolveOptions<f64> {
    SolveOptions::default()
}

fn uni(l: [f64; 3]) -> Algebra<f64> {
    Algebra::Unimodular(Unimodular::new(l[0], l[1], l[2]))
}

fn non(a: f64, b: f64, d: f64) -> Algebra<f64> {
    Algebra::NonUnimodular(NonUnimodular::new(a, b, d).unwrap())
}

fn unit(v: [f64; 3]) -> LeftInvariantField<f64> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    LeftInvariantField::new([v[0] / n, v[1] / n, v[2] / n])
}

fn only_case(alg: &Algebra<f64>, v: &LeftInvariantField<f64>) -> ClassificationCase<f64> {
    let mut cs = classify(alg, v, 1e-12).unwrap();
    assert_eq!(cs.len(), 1);
    cs.remove(0)
}

#[test]
fn abelian_fiber_with_cube_root_warp_is_harmonic() {
    let w = WarpFunction::cube_root(0.2, 1.0).unwrap();
    let phi = solve_phi(&w, 3, 0.0, PhiSpec::Euler { c1: 1.0, c2: 0.5 }, &opts()).unwrap();
    let p = HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: uni([0.0; 3]),
            field: unit([1.0, 2.0, 3.0]),
        },
        w,
        phi,
    )
    .unwrap();
    let r = check(&p, &SampleSpec::default(), None).unwrap();
    assert!(r.verdict, "{}", r.max_abs);
    assert_eq!(r.tol, 1e-9);
}

#[test]
fn heisenberg_needs_eps_one_half() {
    let alg = uni([1.0, 0.0, 0.0]);
    let v = unit([1.0, 0.0, 0.0]);
    let window = Interval::new(-3.0, 3.0);
    let good = instantiate(&alg, &v, 0.5, window, &opts()).unwrap();
    let r = check(&good, &SampleSpec::default(), None).unwrap();
    assert!(r.verdict && r.max_vertical < 1e-12, "{}", r.max_abs);
    let bad = instantiate(&alg, &v, 1.0, window, &opts()).unwrap();
    let r = check(&bad, &SampleSpec::default(), None).unwrap();
    assert!(!r.verdict);
    for row in &r.rows {
        let (f, _, _) = bad.warp.eval(row.t).unwrap();
        assert!((row.vertical[0] + 0.5 / (f * f)).abs() < 1e-12);
    }
}

#[test]
fn constant_warp_heisenberg_is_not_harmonic() {
    let w = WarpFunction::constant(2.0).unwrap();
    let phi = solve_phi(&w, 3, 0.0, PhiSpec::Affine { g1: 1.0, g2: 0.0 }, &opts()).unwrap();
    let p = HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: uni([1.0, 0.0, 0.0]),
            field: unit([1.0, 0.0, 0.0]),
        },
        w,
        phi,
    )
    .unwrap();
    let r = check(&p, &SampleSpec::default(), None).unwrap();
    assert!(!r.verdict);
    assert!((r.max_vertical - 0.5 / 4.0).abs() < 1e-14);
}

#[test]
fn constant_warp_condition_is_eps_zero() {
    // mu = (0, 0, 1): V2 = e3 has sigma = mu1^2 + mu2^2 = 0.
    let e2 = uni([1.0, 1.0, 0.0]);
    assert!(harmonic_with_constant_warp(&e2, &unit([0.0, 0.0, 1.0]), 1e-12));
    assert!(!harmonic_with_constant_warp(&e2, &unit([1.0, 0.0, 0.0]), 1e-12));
    // mu1 = mu2 = 1/2 != mu3: the printed remark would accept e3, the system does not.
    let g = uni([2.0, 2.0, 1.0]);
    assert!(!harmonic_with_constant_warp(&g, &unit([0.0, 0.0, 1.0]), 1e-12));
    assert!(harmonic_with_constant_warp(&uni([0.0; 3]), &unit([1.0, 1.0, 0.0]), 1e-12));
    // Flat non-unimodular case: beta = delta = 0, V2 in span(e2, e3).
    assert!(!harmonic_with_constant_warp(&non(1.0, 0.0, 0.0), &unit([0.0, 1.0, 1.0]), 1e-12));
    assert!(harmonic_with_constant_warp(&non(1.0, 0.0, 0.0), &unit([0.0, 0.0, 1.0]), 1e-12));
}

#[test]
fn classify_examples() {
    let c = only_case(&uni([1.0, 1.0, 1.0]), &unit([0.3, -0.4, 0.5]));
    assert_eq!(c.case_id.as_deref(), Some("7"));
    assert!((c.epsilon - 0.5).abs() < 1e-15);
    let c = only_case(&uni([1.0, 0.0, -1.0]), &unit([0.6, 0.0, 0.8]));
    assert_eq!(c.case_id.as_deref(), Some("3a"));
    assert!((c.epsilon - 1.0).abs() < 1e-15);
    assert!(matches!(
        classify(&uni([1.0, 0.0, -1.0]), &unit([1.0, 1.0, 1.0]), 1e-12),
        Err(HarmonicityError::NoCase(_))
    ));
    let c = only_case(&non(1.0, 0.0, 1.0), &unit([1.0, 0.0, 0.0]));
    assert_eq!((c.case_id.as_deref(), c.epsilon), (Some("1a"), 2.0));
    let c = only_case(&non(1.0, 0.0, 0.0), &unit([0.0, 1.0, 0.0]));
    assert_eq!((c.case_id.as_deref(), c.epsilon), (Some("3b"), 1.0));
    let (b, cc): (f64, f64) = (0.6, 0.8);
    let (al, de) = (2.0, 0.5);
    let be = b * cc * (al - de);
    let c = only_case(&non(al, be, de), &LeftInvariantField::new([0.0, b, cc]));
    assert_eq!(c.case_id.as_deref(), Some("2d"));
    assert!((c.epsilon - (be * be + b * b * al * al + cc * cc * de * de)).abs() < 1e-12);
    // Same field, beta off the constraint: no case.
    assert!(classify(&non(al, be + 0.1, de), &LeftInvariantField::new([0.0, b, cc]), 1e-12).is_err());
}

/// `(lambda, V2, id, eps)` for every entry of the unimodular summary, with
/// `eps` written as printed there in terms of `mu`.
fn unimodular_golden() -> Vec<([f64; 3], [f64; 3], &'static str, fn([f64; 3]) -> f64)> {
    let s2 = |m: [f64; 3]| 2.0 * m[0] * m[0];
    vec![
        ([0.0, 0.0, 0.0], [1.0, 2.0, 2.0], "1", |_| 0.0),
        ([1.5, 0.0, 0.0], [1.0, -1.0, 3.0], "2", s2),
        ([2.0, 0.0, -1.0], [1.0, 0.0, 2.0], "3a", |m| m[0] * m[0] + m[1] * m[1]),
        ([2.0, 0.0, -1.0], [0.0, 1.0, 0.0], "3b", s2),
        ([2.0, 1.0, 0.0], [1.0, 3.0, 0.0], "4a", |m| m[0] * m[0] + m[2] * m[2]),
        ([2.0, 1.0, 0.0], [0.0, 0.0, -1.0], "4b", s2),
        ([1.0, 1.0, -2.0], [2.0, 1.0, 0.0], "5a", |m| m[0] * m[0] + m[2] * m[2]),
        ([1.0, 1.0, -2.0], [0.0, 0.0, 1.0], "5b", s2),
        ([3.0, 2.0, -1.0], [1.0, 0.0, 0.0], "6(k=1)", |m| m[1] * m[1] + m[2] * m[2]),
        ([3.0, 2.0, 1.0], [0.0, 1.0, 0.0], "6(k=2)", |m| m[0] * m[0] + m[2] * m[2]),
        ([3.0, 2.0, 1.0], [0.0, 0.0, 1.0], "6(k=3)", |m| m[0] * m[0] + m[1] * m[1]),
        ([0.7, 0.7, 0.7], [1.0, 1.0, 1.0], "7", s2),
        ([3.0, 1.0, 1.0], [0.0, 1.0, -1.0], "8a", |m| m[0] * m[0] + m[1] * m[1]),
        ([3.0, 1.0, 1.0], [1.0, 0.0, 0.0], "8b", |m| 2.0 * m[1] * m[1]),
        ([2.0, 2.0, 1.0], [1.0, 1.0, 0.0], "9a", |m| m[0] * m[0] + m[2] * m[2]),
        ([2.0, 2.0, 1.0], [0.0, 0.0, 1.0], "9b", s2),
    ]
}

#[test]
fn unimodular_summary_golden() {
    for (l, v, id, eps) in unimodular_golden() {
        let alg = Unimodular::new(l[0], l[1], l[2]);
        let c = only_case(&Algebra::Unimodular(alg), &unit(v));
        assert_eq!(c.case_id.as_deref(), Some(id), "{l:?} {v:?}");
        assert!((c.epsilon - eps(alg.mu())).abs() < 1e-12, "{id}");
        assert!(c.printed_epsilon.is_none(), "{id}");
    }
}

#[test]
fn case_body_typos_disagree_with_system() {
    // SL(2,R), lambda1 > lambda2 > 0 > lambda3, V2 = +-e3: the body prints
    // mu3^2 + mu2^2 and then mu2^2 + mu2^2; the system gives mu1^2 + mu2^2.
    let alg = Unimodular::new(3.0, 1.0, -1.0);
    let m = alg.mu();
    let c = only_case(&Algebra::Unimodular(alg), &unit([0.0, 0.0, 1.0]));
    assert!((c.epsilon - (m[0] * m[0] + m[1] * m[1])).abs() < 1e-12);
    assert!((c.epsilon - (m[2] * m[2] + m[1] * m[1])).abs() > 0.1);
    assert!((c.epsilon - 2.0 * m[1] * m[1]).abs() > 0.1);
    // SU(2), lambda1 = lambda2 > lambda3, V2 = ae1 + be2: the body prints
    // 2 mu1^2 + mu3^2 once; the system gives mu1^2 + mu3^2.
    let alg = Unimodular::new(2.0, 2.0, 1.0);
    let m = alg.mu();
    let c = only_case(&Algebra::Unimodular(alg), &unit([1.0, 1.0, 0.0]));
    assert!((c.epsilon - (m[0] * m[0] + m[2] * m[2])).abs() < 1e-12);
    assert!((c.epsilon - (2.0 * m[0] * m[0] + m[2] * m[2])).abs() > 0.1);
}

#[test]
fn nonunimodular_summary_golden() {
    // (alpha, beta, delta, V2, id, eps, printed eps when different)
    let (b, c) = (0.6f64, 0.8f64);
    let cases: Vec<(f64, f64, f64, [f64; 3], &str, f64, Option<f64>)> = vec![
        (1.5, 0.0, 1.5, [1.0, 0.0, 0.0], "1a", 4.5, None),
        (1.5, 0.7, 1.5, [1.0, 0.0, 0.0], "1a", 4.5, None),
        (1.5, 0.0, 1.5, [0.0, 1.0, 0.0], "1b", 2.25, Some(4.5)),
        (1.5, 0.0, 1.5, [0.0, 0.0, 1.0], "1b", 2.25, Some(4.5)),
        (1.5, 0.0, 1.5, [0.0, b, c], "1c", 2.25, None),
        (2.0, 0.0, 0.5, [1.0, 0.0, 0.0], "2a", 4.25, None),
        (2.0, 0.0, -0.5, [1.0, 0.0, 0.0], "2a", 4.25, None),
        (2.0, 0.0, 0.5, [0.0, 0.0, 1.0], "2b", 0.25, None),
        (2.0, 0.0, 0.5, [0.0, 1.0, 0.0], "2c", 4.0, None),
        (2.0, b * c * 1.5, 0.5, [0.0, b, c], "2d", (b * c * 1.5f64).powi(2) + b * b * 4.0 + c * c * 0.25, None),
        (2.0, b * c * 2.5, -0.5, [0.0, b, c], "2d", (b * c * 2.5f64).powi(2) + b * b * 4.0 + c * c * 0.25, None),
        (2.0, 0.0, 0.0, [0.0, 0.0, 1.0], "3a", 0.0, None),
        (2.0, 0.0, 0.0, [0.0, 1.0, 0.0], "3b", 4.0, None),
        (2.0, b * c * 2.0, 0.0, [0.0, b, c], "3c", (b * c * 2.0f64).powi(2) + b * b * 4.0, None),
        (2.0, 0.9, 0.0, [1.0, 0.0, 0.0], "3d", 4.0, None),
        (2.0, 0.0, 0.0, [b, c, 0.0], "3e", 4.0, None),
    ];
    for (al, be, de, v, id, eps, printed) in cases {
        let got = only_case(&non(al, be, de), &LeftInvariantField::new(v));
        assert_eq!(got.case_id.as_deref(), Some(id));
        assert!((got.epsilon - eps).abs() < 1e-12, "{id}: {} vs {eps}", got.epsilon);
        assert_eq!(got.printed_epsilon, printed, "{id}");
    }
    // 1(b), 1(c), 2(b), 2(c), 3(a), 3(b), 3(e) all need beta = 0.
    for (al, de, v) in [
        (1.5, 1.5, [0.0, 1.0, 0.0]),
        (2.0, 0.5, [0.0, 0.0, 1.0]),
        (2.0, 0.0, [0.0, 1.0, 0.0]),
        (2.0, 0.0, [b, c, 0.0]),
    ] {
        assert!(classify(&non(al, 0.3, de), &LeftInvariantField::new(v), 1e-12).is_err());
    }
}

#[test]
fn degenerate_general_case_with_a_nonzero() {
    // beta^2 = -alpha delta allows a != 0 together with (b, c) ~ (beta, -delta).
    let (al, de) = (2.0f64, -0.5f64);
    let be = (-al * de).sqrt();
    let k = 0.5 / (be * be + de * de).sqrt();
    let a = (1.0f64 - 0.25).sqrt();
    let v = LeftInvariantField::new([a, k * be, -k * de]);
    let c = only_case(&non(al, be, de), &v);
    assert_eq!(c.case_id.as_deref(), Some("2a"));
    assert!((c.epsilon - (al * al + de * de)).abs() < 1e-12);
}

fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let th = golden * i as f64;
            [r * th.cos(), y, r * th.sin()]
        })
        .collect()
}

#[test]
fn classification_complete_on_sphere_grid() {
    let mut pts = fibonacci_sphere(10_000);
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut e = [0.0; 3];
            e[i] = s;
            pts.push(e);
        }
    }
    let algs = [
        [1.0, 0.0, 0.0],
        [1.0, 0.0, -1.0],
        [2.0, 1.0, 0.0],
        [1.0, 1.0, -2.0],
        [3.0, 2.0, 1.0],
        [1.0, 1.0, 1.0],
        [3.0, 1.0, 1.0],
    ];
    for l in algs {
        let alg = Unimodular::new(l[0], l[1], l[2]);
        let s = unimodular_sigmas(&alg);
        let smax = 4.0 * alg.mu().iter().map(|m| m * m).fold(0.0, f64::max);
        let sigmas: Vec<f64> = (0..=400).map(|k| smax * k as f64 / 400.0).chain(s).collect();
        for v in &pts {
            let hit = sigmas.iter().any(|sig| (0..3).all(|i| (v[i] * (s[i] - sig)).abs() < 1e-9));
            let got = classify_unimodular(&alg, &LeftInvariantField::new(*v), 1e-12);
            if hit {
                let c = got.unwrap();
                assert!((0..3).all(|i| (v[i] * (s[i] - c[0].epsilon)).abs() < 1e-9));
            }
        }
    }
}

#[test]
fn every_case_passes_check_and_fails_when_perturbed() {
    let window = Interval::new(-2.0, 2.0);
    let mut inputs: Vec<(Algebra<f64>, LeftInvariantField<f64>)> = unimodular_golden()
        .into_iter()
        .map(|(l, v, _, _)| (uni(l), unit(v)))
        .collect();
    inputs.push((non(1.5, 0.0, 1.5), unit([1.0, 0.0, 0.0])));
    inputs.push((non(2.0, 0.48 * 1.5, 0.5), LeftInvariantField::new([0.0, 0.6, 0.8])));
    inputs.push((non(2.0, 0.0, 0.0), unit([0.6, 0.8, 0.0])));
    inputs.push((non(2.0, 1.0, -0.5), unit([1.0, 0.0, 0.0])));
    for (alg, v) in inputs {
        let c = only_case(&alg, &v);
        let p = instantiate(&alg, &v, c.epsilon, window, &opts()).unwrap();
        let r = check(&p, &SampleSpec::default(), Some(1e-6)).unwrap();
        assert!(r.verdict, "{:?}: {}", c.case_id, r.max_abs);
        let bad = instantiate(&alg, &v, c.epsilon + 0.5, window, &opts()).unwrap();
        let r = check(&bad, &SampleSpec::default(), Some(1e-6)).unwrap();
        assert!(r.max_abs > 1e-2, "{:?}", c.case_id);
    }
}

#[test]
fn two_dim_fiber() {
    // f = sqrt(t): f f'' + f'^2 = 0, and kappa0 = 0 makes the vertical part vanish.
    let r = two_dim_fiber_check(0.0, 0.0, 1.0, 0.0, PhiSpec::Euler { c1: 1.0, c2: 1.0 }, &SampleSpec::default(), &opts())
        .unwrap();
    assert!(r.harmonicity.verdict && r.identity_residual < 1e-12);
    assert_eq!(r.domain, Interval::new(0.0, f64::INFINITY));
    // kappa0 = 1: the identity f f'' + f'^2 = 2 holds, f f'' + 2 f'^2 = 2 does not,
    // and the vertical equation (which needs f f'' + f'^2 = kappa0) fails.
    let r = two_dim_fiber_check(1.0, 0.0, 0.0, 1.0, PhiSpec::default_ivp(0.0), &SampleSpec::default(), &opts()).unwrap();
    assert!(r.identity_residual < 1e-12);
    assert!(r.printed_identity_residual > 1.0);
    assert!(!r.harmonicity.verdict && r.harmonicity.max_horizontal < 1e-6);
    assert_eq!(r.printed_domain_rule, "R");
    // sqrt(kappa0 t^2 + c2) is the warp that does work.
    let w = WarpFunction::sqrt_quadratic(0.5, 0.0, 1.0).unwrap();
    let r = two_dim_fiber_check_with(1.0, 0.3, w, PhiSpec::default_ivp(0.0), &SampleSpec::default(), &opts()).unwrap();
    assert!(r.harmonicity.verdict, "{}", r.harmonicity.max_abs);
    // Constant f.
    let r = two_dim_fiber_check(0.0, 0.0, 0.0, 1.0, PhiSpec::Affine { g1: 1.0, g2: 0.0 }, &SampleSpec::default(), &opts())
        .unwrap();
    assert!(r.harmonicity.verdict);
}

fn base_strategy() -> impl Strategy<Value = BasePoint<f64>> {
    (0.2..3.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(
        |(f, df, d2f, phi, dphi, d2phi)| BasePoint {
            t: 0.0,
            f,
            df,
            d2f,
            phi,
            dphi,
            d2phi,
        },
    )
}

proptest! {
    #[test]
    fn assembly_matches_unimodular_components(
        l in prop::array::uniform3(-3.0..3.0f64),
        v in prop::array::uniform3(-1.0..1.0f64),
        b in base_strategy(),
    ) {
        let alg = Unimodular::new(l[0], l[1], l[2]);
        let fd = FiberData::left_invariant(&Algebra::Unimodular(alg).fiber(), &v);
        let (h, vert) = assemble_from(&fd, 3, &b);
        let (h2, vert2) = unimodular_component_form(&alg, &v, &b);
        prop_assert!((h - h2).abs() < 1e-12 * (1.0 + h.abs()));
        for i in 0..3 {
            prop_assert!((vert[i] - vert2[i]).abs() < 1e-12 * (1.0 + vert[i].abs()));
        }
    }

    #[test]
    fn assembly_matches_nonunimodular_components(
        al in 0.1..3.0f64,
        be in -3.0..3.0f64,
        d in 0.0..1.0f64,
        v in prop::array::uniform3(-1.0..1.0f64),
        b in base_strategy(),
    ) {
        let de = -al + 2.0 * al * d;
        let alg = NonUnimodular::new(al, be, de).unwrap();
        let fd = FiberData::left_invariant(&Algebra::NonUnimodular(alg).fiber(), &v);
        prop_assert!((fd.div + v[0] * (al + de)).abs() < 1e-12);
        let (h, vert) = assemble_from(&fd, 3, &b);
        let (h2, vert2) = nonunimodular_component_form(&alg, &v, &b);
        prop_assert!((h - h2).abs() < 1e-11 * (1.0 + h.abs()));
        for i in 0..3 {
            prop_assert!((vert[i] - vert2[i]).abs() < 1e-11 * (1.0 + vert[i].abs()));
        }
    }

    #[test]
    fn returned_cases_solve_the_system(
        al in 0.1..3.0f64,
        be in -3.0..3.0f64,
        d in 0.0..1.0f64,
        v in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let n = (v[0]*v[0] + v[1]*v[1] + v[2]*v[2]).sqrt();
        prop_assume!(n > 1e-3);
        let v = [v[0]/n, v[1]/n, v[2]/n];
        let de = -al + 2.0 * al * d;
        let alg = NonUnimodular::new(al, be, de).unwrap();
        if let Ok(cs) = classify_nonunimodular(&alg, &LeftInvariantField::new(v), 1e-12) {
            let r = nonunimodular_residuals(&alg, &v, cs[0].epsilon);
            prop_assert!(r.iter().all(|x| x.abs() < 1e-8));
        }
    }
}
