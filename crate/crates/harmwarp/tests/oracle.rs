use harmwarp::families::{build_h3_family, build_r3_family, R3Params};
use harmwarp::harmonicity::*;
use harmwarp::lie3::{Algebra, LeftInvariantField, NonUnimodular, Unimodular};
use harmwarp::oracle::*;
use harmwarp::tension::*;
use harmwarp::warp::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolveOptions<f64> {
    SolveOptions::default()
}

fn random_points(n: usize, seed: u64, lo: [f64; 3], hi: [f64; 3]) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..3).map(|k| rng.gen_range(lo[k]..hi[k])).collect())
        .collect()
}

/// Lie bracket of two frame vectors by central differences.
fn bracket<C: MetricChart<f64>>(c: &C, x: &[f64], i: usize, j: usize) -> Vec<f64> {
    let h = 1e-5;
    let fr = c.frame(x).unwrap();
    let d = |v: usize, k: usize| {
        let mut p = x.to_vec();
        p[k] += h;
        let a = c.frame(&p).unwrap()[v].clone();
        p[k] -= 2.0 * h;
        let b = c.frame(&p).unwrap()[v].clone();
        a.iter().zip(&b).map(|(u, w)| (u - w) / (2.0 * h)).collect::<Vec<_>>()
    };
    let mut out = vec![0.0; 3];
    for k in 0..3 {
        let dj = d(j, k);
        let di = d(i, k);
        for l in 0..3 {
            out[l] += fr[i][k] * dj[l] - fr[j][k] * di[l];
        }
    }
    project(&c.metric(x), &out, &fr)
}

#[test]
fn flat_chart_has_no_christoffels() {
    let g: Christoffel<f64> = christoffel_fd(&FlatR3, &[0.3, -1.0, 2.0], 1e-4).unwrap();
    assert!(g.iter().flatten().flatten().all(|v| v.abs() < 1e-10));
}

#[test]
fn frames_realise_the_milnor_brackets() {
    let pts = random_points(5, 1, [-0.4; 3], [0.4; 3]);
    let alpha: f64 = 2.0;
    let su2 = Su2 { radius: 2.0 };
    for x in &pts {
        let h = Heisenberg {
            frame: HeisenbergFrame::Milnor,
        };
        let b = bracket(&h, x, 1, 2);
        assert!((b[0] - 1.0).abs() < 1e-8 && b[1].abs() < 1e-8 && b[2].abs() < 1e-8);
        let y = vec![x[0], x[1] + 1.0, x[2]];
        let r = RxH2 { alpha };
        let b = bracket(&r, &y, 0, 1);
        assert!((b[1] - alpha.sqrt()).abs() < 1e-7 && b[0].abs() < 1e-8);
        for (i, j, k) in [(1, 2, 0), (2, 0, 1), (0, 1, 2)] {
            let b = bracket(&su2, x, i, j);
            assert!((b[k] - su2.lambda()).abs() < 1e-7, "{b:?}");
        }
    }
}

#[test]
fn heisenberg_and_rxh2_connections() {
    let steps = Steps::default();
    let h = Heisenberg {
        frame: HeisenbergFrame::Milnor,
    };
    let alg = Algebra::Unimodular(Unimodular::new(1.0, 0.0, 0.0));
    let pts = random_points(20, 2, [-1.0; 3], [1.0; 3]);
    let r = connection_check(&h, &alg, &pts, steps, 1e-6).unwrap();
    assert!(r.verdict, "{}", r.max_err);
    let c = r.comparisons.iter().find(|c| c.quantity == "nabla_e1 e2").unwrap();
    assert!((c.oracle[2] + 0.5).abs() < 1e-6);

    let alpha: f64 = 3.0;
    let alg = Algebra::NonUnimodular(NonUnimodular::new(alpha.sqrt(), 0.0, 0.0).unwrap());
    let pts = random_points(20, 3, [-1.0, 0.5, -1.0], [1.0, 2.0, 1.0]);
    let r = connection_check(&RxH2 { alpha }, &alg, &pts, steps, 1e-6).unwrap();
    assert!(r.verdict, "{}", r.max_err);
    let c = r.comparisons.iter().find(|c| c.quantity == "nabla_e2 e1").unwrap();
    assert!((c.oracle[1] + alpha.sqrt()).abs() < 1e-6);
    let c = r.comparisons.iter().find(|c| c.quantity == "nabla_e2 e2").unwrap();
    assert!((c.oracle[0] - alpha.sqrt()).abs() < 1e-6);
}

#[test]
fn su2_connection() {
    let su2 = Su2 { radius: 1.5 };
    let l = su2.lambda();
    let alg = Algebra::Unimodular(Unimodular::new(l, l, l));
    let pts = random_points(20, 4, [-0.5; 3], [0.5; 3]);
    let r = connection_check(&su2, &alg, &pts, Steps::default(), 1e-6).unwrap();
    assert!(r.verdict, "{}", r.max_err);
}

#[test]
fn richardson_ratios() {
    let alpha: f64 = 2.0;
    let x: [f64; 3] = [0.2, 1.1, -0.3];
    let exact = -1.0 / x[1]; // Gamma^x_xy
    let ratio = richardson_ratio(|h| Ok((christoffel_fd(&RxH2 { alpha }, &x, h)?[0][0][1] - exact).abs()), 1e-2).unwrap();
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");

    // Flat 3-sphere chart: Gamma^k_ij = x_k g_ij / r^2 in graph coordinates.
    let su2 = Su2 { radius: 1.0f64 };
    let x: [f64; 3] = [0.3, -0.2, 0.1];
    let g = su2.metric(&x);
    let exact = x[0] * g[1][2];
    let ratio = richardson_ratio(|h| Ok((christoffel_fd(&su2, &x, h)?[0][1][2] - exact).abs()), 1e-2).unwrap();
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");

    // Round sphere of radius 2: every sectional curvature is 1/4.
    let su2 = Su2 { radius: 2.0f64 };
    let x: [f64; 3] = [0.4, 0.1, -0.2];
    let fr = su2.frame(&x).unwrap();
    let k = |h: f64| -> Result<f64, OracleError> {
        let r = curvature_fd(&su2, &x, Steps { christoffel: 1e-5, outer: h })?;
        let v = curvature_apply(&r, &fr[1], &fr[2], &fr[2]);
        Ok(inner(&su2.metric(&x), &v, &fr[1]))
    };
    let ratio = richardson_ratio(|h| Ok((k(h)? - 0.25).abs()), 1e-2).unwrap();
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn heisenberg_sectional_curvatures() {
    // Centre e1: planes through it have K = 1/4, the plane (e2, e3) has -3/4.
    let hz = Heisenberg {
        frame: HeisenbergFrame::Milnor,
    };
    let x: [f64; 3] = [0.4, 0.1, -0.2];
    let fr = hz.frame(&x).unwrap();
    let r = curvature_fd(&hz, &x, Steps::default()).unwrap();
    let g = hz.metric(&x);
    let k = |a: usize, b: usize| inner(&g, &curvature_apply(&r, &fr[a], &fr[b], &fr[b]), &fr[a]);
    assert!((k(1, 2) + 0.75).abs() < 1e-8);
    assert!((k(0, 1) - 0.25).abs() < 1e-8);
    assert!((k(0, 2) - 0.25).abs() < 1e-8);
}

#[test]
fn left_invariant_quantities_match() {
    let steps = Steps::default();
    let h = Heisenberg {
        frame: HeisenbergFrame::Milnor,
    };
    let alg = Algebra::Unimodular(Unimodular::new(1.0, 0.0, 0.0));
    let pts = random_points(20, 5, [-1.0; 3], [1.0; 3]);
    let r = left_invariant_check(&h, &alg, &[1.0, 0.0, 0.0], &pts, steps, 1e-4).unwrap();
    assert!(r.verdict, "{}", r.max_err);
    let lap = r.comparisons.iter().find(|c| c.quantity == "rough laplacian").unwrap();
    assert!((lap.oracle[0] - 0.5).abs() < 1e-4);
    let r = left_invariant_check(&h, &alg, &[0.0, 0.6, 0.8], &pts, steps, 1e-4).unwrap();
    assert!(r.verdict, "{}", r.max_err);

    let alpha: f64 = 2.0;
    let alg = Algebra::NonUnimodular(NonUnimodular::new(alpha.sqrt(), 0.0, 0.0).unwrap());
    let pts = random_points(20, 6, [-1.0, 0.5, -1.0], [1.0, 2.0, 1.0]);
    let r = left_invariant_check(&RxH2 { alpha }, &alg, &[0.6, 0.0, 0.8], &pts, steps, 1e-4).unwrap();
    assert!(r.verdict, "{}", r.max_err);

    let su2 = Su2 { radius: 1.5 };
    let l = su2.lambda();
    let alg = Algebra::Unimodular(Unimodular::new(l, l, l));
    let pts = random_points(20, 7, [-0.5; 3], [0.5; 3]);
    let r = left_invariant_check(&su2, &alg, &[1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0], &pts, steps, 1e-4).unwrap();
    assert!(r.verdict, "{}", r.max_err);
}

#[test]
fn warped_product_identities() {
    let chart = Warped::from_fn(
        Interval::new(0.5, 3.0),
        |t: f64| (t * t, 2.0 * t, 2.0),
        Heisenberg {
            frame: HeisenbergFrame::Milnor,
        },
    );
    let mut pts = random_points(10, 8, [-0.5; 3], [0.5; 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for p in &mut pts {
        p.insert(0, rng.gen_range(1.0..2.0));
    }
    let fiber_fn = |q: &[f64]| q[0] * q[1] + q[2].sin();
    let r = lemma_checks(&chart, &fiber_fn, &pts, Steps::default(), 1e-3).unwrap();
    assert_eq!(r.items.len(), 12);
    for it in &r.items {
        assert!(it.max_err < 1e-3, "lemma {} item {}: {}", it.lemma, it.item, it.max_err);
    }
    assert!(r.verdict);
}

#[test]
fn mixed_christoffel_of_linear_warp() {
    let chart = warped_chart(Interval::new(1.0, 2.5), &WarpFunction::linear(1.0, 0.0).unwrap(), FlatR3).unwrap();
    let g: Christoffel<f64> = christoffel_fd(&chart, &[2.0, 0.1, 0.2, 0.3], 1e-4).unwrap();
    assert!((g[1][0][1] - 0.5).abs() < 1e-8);
    let product = warped_chart(Interval::new(0.0, 1.0), &WarpFunction::constant(1.0).unwrap(), FlatR3).unwrap();
    let g: Christoffel<f64> = christoffel_fd(&product, &[0.5, 0.1, 0.2, 0.3], 1e-4).unwrap();
    assert!(g.iter().flatten().flatten().all(|v| v.abs() < 1e-10));
}

fn pts4(t: [f64; 2], seed: u64, lo: [f64; 3], hi: [f64; 3]) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_points(6, seed, lo, hi)
        .into_iter()
        .map(|mut p| {
            p.insert(0, rng.gen_range(t[0]..t[1]));
            p
        })
        .collect()
}

#[test]
fn heisenberg_harmonic_map_on_the_warped_chart() {
    let u = Unimodular::new(1.0, 0.0, 0.0);
    let v = LeftInvariantField::new([1.0, 0.0, 0.0]);
    let case = classify_harmonic_maps_unimodular(&u, &v, 1e-12).unwrap().unwrap();
    let p = instantiate_map_case(&u, &v, &case, SlopeChoice::Derived, 1.0, 1.0, [0.5, 0.2], &opts()).unwrap();
    let h = Heisenberg {
        frame: HeisenbergFrame::Milnor,
    };
    let pts = pts4([0.5, 2.0], 10, [-0.5; 3], [0.5; 3]);
    let r = warped_left_invariant_check(&p, &h, &pts, Steps::default(), 1e-3).unwrap();
    assert!(r.verdict, "{}", r.max_err);
    for c in &r.comparisons {
        assert!(c.oracle.iter().all(|v| v.abs() < 1e-3), "{} {:?}", c.quantity, c.oracle);
    }
}

#[test]
fn warped_closed_forms_match_oracle_off_shell() {
    // Neither harmonic nor a harmonic map: checks every term is wired right.
    let w = WarpFunction::cube_root(0.3, 2.0).unwrap();
    let phi = solve_phi(&w, 3, 0.7, PhiSpec::Euler { c1: 0.4, c2: -0.3 }, &opts()).unwrap();
    let su2 = Su2 { radius: 1.0 };
    let l = su2.lambda();
    let su = Unimodular::new(l, l, l);
    let w2 = WarpFunction::cube_root(0.5, 1.5).unwrap();
    let phi2 = solve_phi(&w2, 3, 0.0, PhiSpec::Euler { c1: 0.4, c2: -0.3 }, &opts()).unwrap();
    let p2 = HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: Algebra::Unimodular(su),
            field: LeftInvariantField::new([0.6, 0.0, 0.8]),
        },
        w2,
        phi2,
    )
    .unwrap();
    let pts = pts4([0.5, 1.5], 11, [-0.3; 3], [0.3; 3]);
    let r = warped_left_invariant_check(&p2, &su2, &pts, Steps::default(), 1e-3).unwrap();
    assert!(r.verdict, "{}", r.max_err);
    assert!(r.comparisons.iter().any(|c| c.oracle.iter().any(|v| v.abs() > 1e-2)));

    let alpha: f64 = 2.0;
    let non = NonUnimodular::new(alpha.sqrt(), 0.0, 0.0).unwrap();
    let p3 = HarmonicityProblem::new(
        FiberSource::LeftInvariant {
            algebra: Algebra::NonUnimodular(non),
            field: LeftInvariantField::new([0.6, 0.8, 0.0]),
        },
        w,
        phi,
    )
    .unwrap();
    let pts = pts4([0.5, 1.5], 12, [-0.5, 0.7, -0.5], [0.5, 1.5, 0.5]);
    let r = warped_left_invariant_check(&p3, &RxH2 { alpha }, &pts, Steps::default(), 1e-3).unwrap();
    assert!(r.verdict, "{}", r.max_err);
}

#[test]
fn su2_printed_slope_fails_on_the_oracle() {
    let su2 = Su2 { radius: 1.0 };
    let l = su2.lambda();
    let u = Unimodular::new(l, l, l);
    let v = LeftInvariantField::new([1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
    let case = classify_harmonic_maps_unimodular(&u, &v, 1e-12).unwrap().unwrap();
    let pts = pts4([0.5, 1.5], 13, [-0.3; 3], [0.3; 3]);
    let good = instantiate_map_case(&u, &v, &case, SlopeChoice::Derived, 1.0, 1.0, [0.3, 0.1], &opts()).unwrap();
    let r = warped_left_invariant_check(&good, &su2, &pts, Steps::default(), 1e-3).unwrap();
    assert!(r.comparisons.iter().all(|c| c.oracle.iter().all(|v| v.abs() < 1e-3)));
    let bad = instantiate_map_case(&u, &v, &case, SlopeChoice::Printed, 1.0, 1.0, [0.3, 0.1], &opts()).unwrap();
    let r = warped_left_invariant_check(&bad, &su2, &pts, Steps::default(), 1e-3).unwrap();
    assert!(r.verdict);
    let lap = r.comparisons.iter().filter(|c| c.quantity == "rough laplacian");
    assert!(lap.clone().any(|c| c.oracle.iter().any(|v| v.abs() > 1e-2)));
}

#[test]
fn families_on_the_warped_chart() {
    let field = build_h3_family(1.0, 0.5).unwrap();
    let w = WarpFunction::linear(0.5, 1.0).unwrap();
    let phi = solve_phi(&w, 3, field.phi_rhs(), PhiSpec::Euler { c1: 0.3, c2: 0.0 }, &opts()).unwrap();
    let pts = pts4([0.0, 1.0], 14, [-0.5; 3], [0.5; 3]);
    let r = warped_family_check(&field, &w, &phi, &pts, Steps::default(), 1e-3).unwrap();
    assert!(r.verdict, "{}", r.max_err);
    let s = r.comparisons.iter().filter(|c| c.quantity == "S(V)");
    assert!(s.clone().all(|c| c.oracle.iter().any(|v| v.abs() > 1e-2)));
    let lap = r.comparisons.iter().filter(|c| c.quantity == "rough laplacian");
    assert!(lap.clone().all(|c| c.oracle.iter().all(|v| v.abs() < 1e-3)));

    let r3 = build_r3_family(1.0, R3Params { v: [1.0, 0.0], ..R3Params::default() }).unwrap();
    let w = solve_warp(1.0, 0.0, 1.0, 0.3, DomainRequest::Bounded { lo: -0.3, hi: 0.3 }, &opts()).unwrap();
    let phi = solve_phi(&w, 3, 0.0, PhiSpec::default_ivp(0.0), &opts()).unwrap();
    let pts = pts4([-0.2, 0.2], 15, [-0.5; 3], [0.5; 3]);
    let r = warped_family_check(&r3, &w, &phi, &pts, Steps::default(), 1e-3).unwrap();
    assert!(r.verdict, "{}", r.max_err);
}

#[test]
fn stencil_must_fit() {
    let e = christoffel_fd(&RxH2 { alpha: 1.0 }, &[0.0, 1e-5, 0.0], 1e-4);
    assert!(matches!(e, Err(OracleError::OutOfDomain(_))));
    let e = christoffel_fd(&FlatR3, &[0.0, 0.0], 1e-4);
    assert!(matches!(e, Err(OracleError::Dimension { .. })));
}
