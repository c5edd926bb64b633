use super::*;

fn pl(lines: &[(f64, f64)]) -> PlConvex {
    PlConvex::max_of_lines(lines).unwrap()
}

fn u0() -> ToricFunction {
    pl(&[(1.0, 0.0), (0.0, -1.0)]).into()
}

fn u1() -> ToricFunction {
    pl(&[(0.5, 0.0), (0.0, -1.0)]).into()
}

fn closed_form(t: f64) -> PlConvex {
    pl(&[(1.0, 0.0), (0.5, 0.5 * (t - 1.0)), (0.0, -1.0)])
}

#[test]
fn example_geodesic_is_exact() {
    for k in 1..10 {
        let t = k as f64 / 10.0;
        let g = geodesic_legendre(&u0(), &u1(), t).unwrap();
        let d = g.as_pl().unwrap().sup_distance(&closed_form(t));
        assert!(d <= 1e-12, "t = {t}: {d}");
    }
    let same = geodesic_legendre(&u1(), &u1(), 0.3).unwrap();
    assert!(same.sup_distance(&u1()).unwrap() < 1e-15);
}

#[test]
fn family_diagnostics() {
    let ts = uniform_samples(11);
    let fam = geodesic_family(&u0(), &u1(), &ts, Method::Legendre, &FamilyOptions::default()).unwrap();
    assert_eq!(fam.truncation_depth, None);
    for d in &fam.diagnostics {
        assert!((d.energy.unwrap() - (d.t / 2.0 - 1.0)).abs() < 1e-12);
        assert!(d.sup_bound_margin >= -1e-12);
        assert!(d.inf_bound_margin.unwrap() >= -1e-12);
        assert!(d.convexity_residual <= 1e-12);
    }
    let prof = energy_along(&fam).unwrap();
    assert!(prof.linearity_residual < 1e-12);
    assert!(is_subgeodesic(&fam));
    let csv = fam.to_csv();
    assert!(csv.starts_with("t,energy,sup_bound_margin,inf_bound_margin,convexity_residual\n"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn affine_family_is_not_subgeodesic() {
    let ts = uniform_samples(11);
    let fam = geodesic_family(&u0(), &u1(), &ts, Method::Affine, &FamilyOptions::default()).unwrap();
    let r = subgeodesic_report(&fam).unwrap();
    assert!(!r.ok && r.convexity_defect > 1e-4, "{r:?}");
    let prof = energy_along(&fam).unwrap();
    assert!(prof.concavity_violation <= 1e-12);
}

#[test]
fn lower_bound_family_is_subgeodesic() {
    let ts = uniform_samples(11);
    let (a, b) = (u0(), u1());
    let (m0, m1) = (a.sup_norm(), b.sup_norm());
    let slices = ts
        .iter()
        .map(|&t| {
            let (a, b) = (a.as_pl().unwrap(), b.as_pl().unwrap());
            a.add_constant(-m1 * t).max(&b.add_constant(-m0 * (1.0 - t))).into()
        })
        .collect();
    let fam = GeodesicFamily::from_slices(a, b, ts, slices).unwrap();
    assert!(is_subgeodesic(&fam));
}

#[test]
fn energy_convex_along_zero_anchor_subgeodesic() {
    // max{s/2 + f(t), f(t) - 1} with f convex, f(0) = f(1) = 0 stays below the chord
    let f = |t: f64| -t * (1.0 - t);
    let ts = uniform_samples(11);
    let slices: Vec<ToricFunction> = ts
        .iter()
        .map(|&t| pl(&[(0.5, f(t)), (0.0, f(t) - 1.0)]).into())
        .collect();
    let fam = GeodesicFamily::from_slices(u1(), u1(), ts, slices).unwrap();
    assert!(is_subgeodesic(&fam));
    let prof = energy_along(&fam).unwrap();
    assert!(prof.convexity_violation <= 1e-12, "{:?}", prof.points);
    assert!(prof.linearity_residual > 1e-3);
}

#[test]
fn deep_endpoints_match_slab_oracle() {
    let a: ToricFunction = pl(&[(1.0, 0.0), (0.0, -3.0)]).into();
    let b: ToricFunction = pl(&[(0.5, 0.0), (0.0, -3.0)]).into();
    let opts = FamilyOptions {
        side: 8.0,
        h: 0.1,
        t_steps: 6,
        ..FamilyOptions::default()
    };
    let ts = uniform_samples(6);
    let exact = geodesic_family(&a, &b, &ts, Method::Legendre, &opts).unwrap();
    let slab = geodesic_family(&a, &b, &ts, Method::SlabOracle, &opts).unwrap();
    for (e, s) in exact.slices.iter().zip(&slab.slices) {
        let g = s.as_grid().unwrap();
        let dev = g
            .axis()
            .nodes()
            .iter()
            .map(|&x| (e.eval(&[x]) - g.eval(&[x])).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 2.0 * opts.h, "{dev}");
    }
}

#[test]
fn grid_geodesic_tracks_pl() {
    let h = 0.05;
    let ga = sample_pl(u0().as_pl().unwrap(), 4.0, h).unwrap();
    let gb = sample_pl(u1().as_pl().unwrap(), 4.0, h).unwrap();
    let g = geodesic_legendre(&ga.into(), &gb.into(), 0.5).unwrap();
    let exact = closed_form(0.5);
    let grid = g.as_grid().unwrap();
    for x in grid.axis().nodes() {
        assert!((grid.eval(&[x]) - exact.eval(x)).abs() <= 2.0 * h);
    }
}

#[test]
fn green_pair_does_not_converge() {
    let zero: ToricFunction = PlConvex::zero().into();
    let s: ToricFunction = PlConvex::affine(1.0, 0.0).into();
    let err = geodesic_family(&zero, &s, &[0.5], Method::Legendre, &FamilyOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NoConvergence { .. }));
    // a bounded endpoint pair stabilizes once the depth passes the minimum
    let deep: ToricFunction = pl(&[(1.0, 0.0), (0.0, -5.0)]).into();
    let fam = geodesic_family(&deep, &u1(), &[0.5], Method::Legendre, &FamilyOptions::default()).unwrap();
    assert_eq!(fam.truncation_depth, None);
}

#[test]
fn convergence_reports() {
    let ts = [0.02, 0.05, 0.1, 0.5, 0.9, 0.95, 0.98];
    let fam = geodesic_family(&u0(), &u1(), &ts, Method::Legendre, &FamilyOptions::default()).unwrap();
    let rep = endpoint_convergence(&fam, &[0.01, 0.1], 4.0);
    assert!(rep.bounded && rep.passed());
    let near0 = rep.rows.iter().find(|r| r.endpoint == 0 && r.t == 0.02).unwrap();
    assert!((near0.sup_deviation - 0.01).abs() < 1e-12);

    let zero: ToricFunction = PlConvex::zero().into();
    let s: ToricFunction = PlConvex::affine(1.0, 0.0).into();
    let opts = FamilyOptions {
        side: 2.0,
        h: 0.1,
        t_steps: 11,
        ..FamilyOptions::default()
    };
    let fam = geodesic_family(&zero, &s, &uniform_samples(11), Method::SlabOracle, &opts).unwrap();
    let rep = endpoint_convergence(&fam, &[0.05], 2.0);
    assert!(!rep.bounded && !rep.pass[0]);
}

#[test]
fn rooftop_limits() {
    let r = rooftop_limit(&u0(), &u1(), &[0.0, 0.5, 1.0, 2.0]).unwrap();
    assert!(r.pass && r.monotone && r.stabilized_at == Some(0.0));
    let deep: ToricFunction = pl(&[(1.0, 0.0), (0.0, -3.0)]).into();
    let r = rooftop_limit(&deep, &u1(), &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(r.pass && r.monotone && r.rows.iter().all(|row| row.distance == 0.0));
    // with the roles swapped the shift matters until u1 + C dominates u0
    let r = rooftop_limit(&u1(), &deep, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(r.pass && r.monotone, "{r:?}");
    assert!(r.rows[0].distance > 0.0);
    assert!(r.stabilized_at.unwrap() <= 3.0);
    let zero: ToricFunction = PlConvex::zero().into();
    let s: ToricFunction = PlConvex::affine(1.0, 0.0).into();
    let r = rooftop_limit(&zero, &s, &[0.0, 1.0, 10.0, 100.0]).unwrap();
    assert!(!r.pass && r.collapse);
    assert_eq!(r.limit, s);
}

#[test]
fn psi_barrier() {
    let g = sample_pl(&PlConvex::affine(1.0, 0.0), 4.0, 0.1).unwrap();
    let psi = psi_n_family(&g, 1.0, 11).unwrap();
    assert!(psi.convexity_defect() <= 1e-12);
    assert!(psi.slice(0).values().iter().all(|&v| v == 0.0));
    let inf = psi_infimum(&g, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0], 11).unwrap();
    let half = inf.slice(5);
    for (v, s) in half.values().iter().zip(g.values()) {
        assert!((v - s).abs() <= 1e-12);
    }
    assert!(psi_n_family(&sample_pl(&PlConvex::zero(), 4.0, 0.1).unwrap(), 1.0, 11).is_err());
}

#[test]
fn collapse_checks() {
    let opts = FamilyOptions {
        side: 2.0,
        h: 0.1,
        t_steps: 11,
        ..FamilyOptions::default()
    };
    let zero: ToricFunction = PlConvex::zero().into();
    let s: ToricFunction = PlConvex::affine(1.0, 0.0).into();
    let r = singular_collapse_check(&zero, &s, &opts).unwrap();
    assert!(r.ok && r.collapse && r.self_singular, "{r:?}");
    assert!(r.t_dependence <= 2.0 * opts.h);
    let r = singular_collapse_check(&u0(), &u1(), &opts).unwrap();
    assert!(r.ok && !r.collapse && !r.self_singular);
    let half: ToricFunction = PlConvex::affine(0.5, 0.0).into();
    let r = singular_collapse_check(&s, &half, &opts).unwrap();
    assert!(r.ok && r.rooftop_deviation <= 2.0 * opts.h, "{r:?}");
}

#[test]
fn subgeodesic_rays() {
    let (a, b) = (u0(), u1());
    let (a, b) = (a.as_pl().unwrap(), b.as_pl().unwrap());
    let mut ts: Vec<f64> = (0..40).map(|k| -8.0 + 0.2 * k as f64).collect();
    ts.extend([-0.1, -0.05, -0.01]);
    let r = subgeodesic_ray(a, b, &PlConvex::zero(), &PlConvex::zero(), &ts).unwrap();
    for (t, sl) in r.ts.iter().zip(&r.slices) {
        assert!(sl.sup_distance(&geodesic_pl(a, b, t.exp())) < 1e-12);
    }
    let w = pl(&[(1.0, 0.0), (0.0, -1.0)]);
    let r = subgeodesic_ray(a, b, &PlConvex::zero(), &w, &ts).unwrap();
    assert!(r.convexity_defect <= 1e-9, "{}", r.convexity_defect);
    assert!(
        r.gap_at_zero < 0.02 && r.gap_at_neg_infinity < 0.01,
        "{} {}",
        r.gap_at_zero,
        r.gap_at_neg_infinity
    );
}
