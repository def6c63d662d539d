use hflow::framed_rep::*;
use hflow::heat_flow::*;
use hflow::hyperbolic::*;
use hflow::initial_map::{blend, ramp};
use hflow::mesh::{rect_grid, GridSpec};
use hflow::metric_interp::zero_interp_verify;
use hflow::quad_diff::{halfplane_decomposition, metric_residue_chain, straighten_chain, ChainSpec};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = C64> {
    (0.3f64..3.0, -3.0f64..3.0).prop_map(|(r, a)| C64::from_polar(r, a))
}

fn mobius() -> impl Strategy<Value = Mobius> {
    (coord(), coord(), coord()).prop_map(|(a, b, c)| {
        // det = a d − b c = 1
        let d = (C64::new(1.0, 0.0) + b * c) / a;
        Mobius::new(a, b, c, d)
    })
}

fn point() -> impl Strategy<Value = H3Point> {
    (-2.0f64..2.0, -2.0f64..2.0, 0.2f64..3.0).prop_map(|(a, b, c)| H3Point::new(a, b, c))
}

fn ideal() -> impl Strategy<Value = BoundaryPoint> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| BoundaryPoint::Finite(C64::new(a, b)))
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn words_up_to(ng: usize, len: usize) -> Vec<Word> {
    let letters: Vec<i32> = (1..=ng as i32).flat_map(|l| [l, -l]).collect();
    let mut out = vec![];
    let mut frontier = vec![Word::identity()];
    for _ in 0..len {
        let mut next = vec![];
        for w in &frontier {
            for &l in &letters {
                if w.0.last() == Some(&-l) {
                    continue;
                }
                next.push(w.mul_letter(l));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn distance_is_isometry_invariant(m in mobius(), x in point(), y in point()) {
        let d0 = dist_h3(x, y);
        let d1 = dist_h3(m.apply_interior(x), m.apply_interior(y));
        prop_assert!((d0 - d1).abs() < 1e-7 * (1.0 + d0));
    }

    #[test]
    fn exp_inverts_log(x in point(), y in point()) {
        let back = exp_h3(x, &log_h3(x, y));
        prop_assert!(dist_h3(back, y) < 1e-8);
        prop_assert!((log_h3(x, y).norm() - dist_h3(x, y)).abs() < 1e-9);
    }

    #[test]
    fn cross_ratio_is_mobius_invariant(m in mobius(), p in [ideal(), ideal(), ideal(), ideal()]) {
        let Ok(a) = cross_ratio(p[0], p[1], p[2], p[3]) else { return Ok(()) };
        let q = p.map(|x| m.apply(x));
        let b = cross_ratio(q[0], q[1], q[2], q[3]).unwrap();
        prop_assert!(close(a, b, 1e-7));
    }

    #[test]
    fn axis_endpoints_are_fixed(m in mobius()) {
        if classify(&m) != MapClass::Loxodromic {
            return Ok(());
        }
        let ax = axis(&m).unwrap();
        prop_assert!(m.apply(ax.start).chordal(ax.start) < 1e-8);
        prop_assert!(m.apply(ax.end).chordal(ax.end) < 1e-8);
        let l = translation_length(&m).unwrap();
        let p = H3Point::new(0.0, 0.0, 1.0);
        prop_assert!(m.apply_interior(p).x3.is_finite());
        prop_assert!(l > 0.0);
    }

    #[test]
    fn fg_round_trip_once_punctured(z in prop::collection::vec(coord(), 3), g in mobius()) {
        let t = IdealTriangulation::once_punctured_torus();
        let z = FGCoords(z);
        let (dev, rep) = rep_from_coords(&t, &z).unwrap();
        let back = fg_from_rep(&rep, &t).unwrap();
        for e in 0..3 {
            prop_assert!(close(back.0[e], z.0[e], 1e-9));
        }
        prop_assert!(relator_residual(&dev, &rep).unwrap() < 1e-8);
        let conj = fg_from_rep(&rep.conjugate(&g), &t).unwrap();
        for e in 0..3 {
            prop_assert!(close(conj.0[e], z.0[e], 1e-7));
        }
    }

    #[test]
    fn fg_round_trip_one_boundary(z in prop::collection::vec(coord(), 4)) {
        let t = IdealTriangulation::one_boundary_torus();
        let z = FGCoords(z);
        let (dev, rep) = rep_from_coords(&t, &z).unwrap();
        let back = fg_from_rep(&rep, &t).unwrap();
        for e in 0..4 {
            prop_assert!(close(back.0[e], z.0[e], 1e-9));
        }
        prop_assert!(relator_residual(&dev, &rep).unwrap() < 1e-8);
    }

    #[test]
    fn fuchsian_shadow_has_real_traces(z in prop::collection::vec(coord(), 3)) {
        let t = IdealTriangulation::once_punctured_torus();
        let (_, rep) = rep_from_coords(&t, &fuchsian_shadow(&FGCoords(z))).unwrap();
        for w in words_up_to(2, 4) {
            let t2 = rep.eval(&w).tr2();
            prop_assert!(t2.im.abs() < 1e-8 * (1.0 + t2.norm()), "{w:?}: {t2}");
        }
    }

    #[test]
    fn positive_coordinates_give_fuchsian_framings(z in prop::collection::vec(0.2f64..4.0, 3)) {
        let t = IdealTriangulation::once_punctured_torus();
        let zc = FGCoords(z.iter().map(|x| C64::new(*x, 0.0)).collect());
        let (_, rep) = rep_from_coords(&t, &zc).unwrap();
        // every corner lies on the real line
        for tri in &rep.framing {
            for p in tri {
                if let Some(x) = p.finite() {
                    prop_assert!(x.im.abs() < 1e-9 * (1.0 + x.norm()));
                }
            }
        }
        prop_assert!(framing_signs(&rep, &t).iter().all(|s| *s != 0));
    }

    #[test]
    fn semisimple_pair_is_conjugation_invariant(z in prop::collection::vec(coord(), 3), g in mobius()) {
        let t = IdealTriangulation::once_punctured_torus();
        let (_, rep) = rep_from_coords(&t, &FGCoords(z)).unwrap();
        let Ok((a, b)) = semisimple_pair(&rep) else { return Ok(()) };
        let c = rep.conjugate(&g);
        let (ma, mb) = (c.eval(&a), c.eval(&b));
        for m in [ma, mb] {
            prop_assert!(matches!(classify(&m), MapClass::Elliptic | MapClass::Loxodromic));
        }
        let (xa, xb) = (axis(&ma).unwrap(), axis(&mb).unwrap());
        prop_assert!(!xa.shares_endpoint(&xb, DELTA_AXIS));
    }

    #[test]
    fn zero_interpolation_curvature_nonpositive(n in 1u32..=4, eps in 0.01f64..0.2) {
        let rep = zero_interp_verify(n, eps, 400).unwrap();
        prop_assert!(rep.ok(), "{rep:?}");
    }

    #[test]
    fn metric_residue_ignores_horoballs(s in prop::collection::vec(0.1f64..10.0, 2), x in 1.2f64..3.5, th in -1.0f64..1.0) {
        let deck = Mobius::diag(C64::new(2.0, 0.0));
        let flat = ChainSpec::new(deck, vec![BoundaryPoint::real(1.0), BoundaryPoint::real(x)]).unwrap();
        let ax = Geodesic::new(flat.point(0), flat.point(-1)).unwrap();
        let bent = elliptic_about_axis(&ax, th).apply(flat.base_points[1]);
        let ch = ChainSpec::new(deck, vec![flat.base_points[0], bent]).unwrap();
        let a = metric_residue_chain(&ch, &[1.0, 1.0]).unwrap();
        let b = metric_residue_chain(&ch, &s).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn straightening_keeps_residue(th in -0.8f64..0.8) {
        let deck = Mobius::diag(C64::new(2.0, 0.0));
        let flat = ChainSpec::new(deck, vec![BoundaryPoint::real(1.0), BoundaryPoint::real(2.5)]).unwrap();
        let ax = Geodesic::new(flat.point(0), flat.point(-1)).unwrap();
        let ch = ChainSpec::new(deck, vec![flat.base_points[0], elliptic_about_axis(&ax, th).apply(flat.base_points[1])]).unwrap();
        let st = straighten_chain(&ch).unwrap();
        prop_assert!(st.planarity_defect().unwrap() < 1e-10);
        let (a, b) = (metric_residue_chain(&ch, &[1.0; 2]).unwrap(), metric_residue_chain(&st, &[1.0; 2]).unwrap());
        prop_assert!((a.abs() - b.abs()).abs() < 1e-9);
    }

    #[test]
    fn ramp_is_monotone_and_bounded(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(ramp(lo) <= ramp(hi));
        prop_assert!((0.0..=1.0).contains(&ramp(a)));
        prop_assert!((ramp(a) + ramp(1.0 - a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn blending_commutes_with_isometries(m in mobius(), p in point(), q in point(), w in 0.0f64..1.0) {
        let a = m.apply_interior(blend(p, q, w));
        let b = blend(m.apply_interior(p), m.apply_interior(q), w);
        prop_assert!(dist_h3(a, b) < 1e-7);
        prop_assert!((dist_h3(p, blend(p, q, w)) - w * dist_h3(p, q)).abs() < 1e-8);
    }

    #[test]
    fn energy_and_tension_norm_are_isometry_invariant(m in mobius(), amp in 0.0f64..0.3) {
        let spec = GridSpec { x0: 0.0, x1: 1.0, y0: 1.0, y1: 2.0, nx: 5, ny: 5, periodic_x: None, periodic_y: None };
        let mesh = rect_grid(&spec, |z| 1.0 / (z.im * z.im)).unwrap();
        let s = MapState::new(mesh.vertices.iter().map(|v| H3Point::new(v.pos.re, amp * v.pos.re * v.pos.im, v.pos.im)).collect());
        let g = MapState::new(s.u.iter().map(|p| m.apply_interior(*p)).collect());
        let (e0, e1) = (geodesic_energy(&s, &mesh, false), geodesic_energy(&g, &mesh, false));
        prop_assert!((e0 - e1).abs() < 1e-7 * (1.0 + e0));
        let t0 = tension_field_with(TensionScheme::Geodesic, &s, &mesh).unwrap();
        let t1 = tension_field_with(TensionScheme::Geodesic, &g, &mesh).unwrap();
        for v in mesh.interior() {
            prop_assert!((t0[v].norm() - t1[v].norm()).abs() < 1e-6 * (1.0 + t0[v].norm()));
        }
    }
}

#[test]
fn halfplane_counts() {
    for n in 3..=9u32 {
        assert_eq!(halfplane_decomposition(n).unwrap(), ((n - 2) as usize, (n - 2) as usize));
    }
}

#[test]
fn symmetric_torus_has_markov_traces() {
    // all coordinates 1: the modular commutator subgroup, generators of trace ±3
    let t = IdealTriangulation::once_punctured_torus();
    let (_, rep) = rep_from_coords(&t, &FGCoords(vec![C64::new(1.0, 0.0); 3])).unwrap();
    let a = rep.eval(&Word::gen(0));
    let b = rep.eval(&Word::gen(1));
    let ab = a * b;
    for m in [a, b] {
        assert!((m.tr2() - C64::new(9.0, 0.0)).norm() < 1e-9, "{}", m.tr2());
    }
    // parabolic commutator forces x² + y² + z² = xyz, x = tr a, y = tr b, z = tr ab
    let (x, y, z) = (a.trace(), b.trace(), ab.trace());
    let lhs = x * x + y * y + z * z;
    assert!((lhs - x * y * z).norm() < 1e-9 || (lhs + x * y * z).norm() < 1e-9);
    let comm = a * b * a.inverse() * b.inverse();
    assert_eq!(classify(&comm), MapClass::Parabolic);
}
