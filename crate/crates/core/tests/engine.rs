use proptest::prelude::*;
use wallcross::diagram::{new_case, new_named, Diagram, Ray};
use wallcross::engine::{
    consistency_defect, localize, path_ordered_product, path_ordered_product_naive, scatter, wall_crossing,
    LocalDiagram, LocalRay, PlaneAutomorphism,
};
use wallcross::invariants::{f_out, log_in_y};
use wallcross::lattice::{CaseId, Point};
use wallcross::series::{qi, LatticeVector, Series, Q};

fn lv(a: i64, b: i64) -> LatticeVector {
    LatticeVector::new(a, b)
}

fn wall(nvars: usize, var: usize, m: LatticeVector, c: Q) -> Series {
    let mut t = vec![0u16; nvars];
    t[var] = 1;
    Series::one(nvars, wallcross::series::EXACT).add(&Series::term(nvars, wallcross::series::EXACT, t, m, c)).unwrap()
}

fn x_wall() -> Ray {
    Ray::new(Point::origin(), lv(1, 0), wall(1, 0, lv(1, 0), qi(1)), true).unwrap()
}

fn mono(nvars: usize, m: LatticeVector) -> Series {
    Series::term(nvars, 4, vec![0; nvars], m, qi(1))
}

#[test]
fn crossing_the_x_axis_upwards() {
    let theta = wall_crossing(&x_wall(), lv(0, 1), 4).unwrap();
    let f = wall(1, 0, lv(1, 0), qi(1)).rebound(4);
    assert_eq!(theta.image_x, mono(1, lv(1, 0)));
    assert_eq!(theta.image_y, f.mul(&mono(1, lv(0, 1))).unwrap());
    let down = wall_crossing(&x_wall(), lv(0, -1), 4).unwrap();
    assert_eq!(down.image_y, f.inverse().unwrap().mul(&mono(1, lv(0, 1))).unwrap());
    assert!(wall_crossing(&x_wall(), lv(-3, 0), 4).is_err());
}

/// Intersection point of two rays, if they meet in a single point.
fn meet(r: &Ray, s: &Ray) -> Option<Point> {
    let (u, v) = (r.direction, s.direction);
    let den = u.det(v);
    if den == 0 {
        return None;
    }
    let dx = &s.base.x - &r.base.x;
    let dy = &s.base.y - &r.base.y;
    // r.base + a u = s.base + b v
    let a = (&dx * qi(v.b) - &dy * qi(v.a)) / qi(den);
    let b = (&dx * qi(u.b) - &dy * qi(u.a)) / qi(den);
    if a < qi(0) || b < qi(0) {
        return None;
    }
    Some(r.base.shifted(u, &a))
}

/// Every point where two non-parallel rays meet, plus every base point.
fn points(d: &Diagram) -> Vec<Point> {
    let mut out: std::collections::BTreeSet<Point> = d.rays.iter().map(|r| r.base.clone()).collect();
    for (i, r) in d.rays.iter().enumerate() {
        for s in &d.rays[i + 1..] {
            if let Some(p) = meet(r, s) {
                out.insert(p);
            }
        }
    }
    out.into_iter().collect()
}

fn assert_consistent(d: &Diagram, k: u32) {
    for p in points(d) {
        let ld = localize(d, &p);
        let theta = path_ordered_product_naive(&ld, d.t_count, k).unwrap();
        assert!(theta.is_identity(), "not consistent at {p}");
    }
}

#[test]
fn std11_has_exactly_the_diagonal_wall() {
    let d = new_named("std", &[1, 1]).unwrap();
    for k in 2..=6 {
        let s = scatter(&d, k, false).unwrap();
        let new: Vec<&Ray> = s.scattered_rays().collect();
        assert_eq!(new.len(), 1, "order {k}");
        assert_eq!(new[0].direction, lv(1, 1));
        assert_eq!(new[0].function.to_string(), "1 + t0*t1*x*y");
        assert_consistent(&s, k);
    }
    // Without the new wall the origin is not consistent.
    let ld = localize(&d, &Point::origin());
    assert!(!path_ordered_product_naive(&ld, 2, 2).unwrap().is_identity());
}

#[test]
fn std11_defect_is_the_diagonal_term() {
    let d = new_named("std", &[1, 1]).unwrap();
    let ld = localize(&d, &Point::origin());
    assert_eq!(ld.rays.len(), 4);
    assert!(consistency_defect(&ld, 2, 0).unwrap().is_empty());
    let defect = consistency_defect(&ld, 2, 1).unwrap();
    assert_eq!(defect.len(), 1);
    assert_eq!((defect[0].t.clone(), defect[0].m, defect[0].coefficient.clone()), (vec![1, 1], lv(1, 1), qi(1)));
    assert!(path_ordered_product(&ld, 2, 1).unwrap().is_identity());
}

#[test]
fn localize_splits_passing_rays() {
    let d = new_named("std", &[1, 1]).unwrap();
    assert!(localize(&d, &Point::int(3, 3)).rays.is_empty());
    let mut e = Diagram::empty(1);
    e.rays.push(Ray::new(Point::int(-1, 0), lv(1, 0), wall(1, 0, lv(1, 0), qi(1)), true).unwrap());
    let ld = localize(&e, &Point::origin());
    assert_eq!(ld.rays.len(), 2);
    assert_eq!(ld.rays[0].function, ld.rays[1].function);
    assert!(path_ordered_product(&ld, 1, 3).unwrap().is_identity());
}

#[test]
fn standard_examples_are_consistent() {
    for (kind, params, k) in
        [("std", vec![2, 2], 4), ("exp", vec![2, 1], 4), ("det", vec![2], 4), ("std", vec![3, 3], 3)]
    {
        let s = scatter(&new_named(kind, &params).unwrap(), k, false).unwrap();
        assert_consistent(&s, k);
    }
}

#[test]
fn rescattering_adds_nothing() {
    let d = new_named("std", &[2, 2]).unwrap();
    let s = scatter(&d, 4, false).unwrap();
    let again = scatter(&s, 4, false).unwrap();
    assert_eq!(s, again);
}

#[test]
fn scattering_is_deterministic() {
    let d = new_named("std", &[2, 3]).unwrap();
    let a = scatter(&d, 4, false).unwrap();
    let mut shuffled = d.clone();
    shuffled.rays.reverse();
    let b = scatter(&shuffled, 4, false).unwrap();
    assert_eq!(a, b);
}

#[test]
fn p2_first_order_wall_function() {
    let d = new_case(CaseId::parse("P2").unwrap(), 1).unwrap();
    let s = scatter(&d, 2, false).unwrap();
    let log = log_in_y(&f_out(&s).unwrap(), 3).unwrap().y_coefficients().unwrap();
    assert_eq!(log.get(&3), Some(&qi(27)));
}

fn random_local_ray(nvars: usize) -> impl Strategy<Value = LocalRay> {
    (0..nvars, -2i64..=2, -2i64..=2, 1i64..=2, -2i64..=2)
        .prop_filter("nonzero", |(_, a, b, _, c)| (*a, *b) != (0, 0) && *c != 0)
        .prop_map(move |(var, a, b, w, c)| {
            let (u, _) = lv(a, b).primitive().unwrap();
            LocalRay { direction: u, function: wall(nvars, var, u.scale(w), qi(c)), source: 0, based_here: true }
        })
}

fn sorted(mut rays: Vec<LocalRay>) -> LocalDiagram {
    rays.sort_by(|a, b| wallcross::engine::angle_cmp(a.direction, b.direction));
    LocalDiagram { point: Point::origin(), rays }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn crossing_back_is_the_identity(a in -2i64..=2, b in -2i64..=2, w in 1i64..=3, c in -3i64..=3, cross in (-2i64..=2, -2i64..=2)) {
        prop_assume!((a, b) != (0, 0) && c != 0);
        let (u, _) = lv(a, b).primitive().unwrap();
        let v = lv(cross.0, cross.1);
        prop_assume!(u.det(v) != 0);
        let ray = Ray::new(Point::origin(), u, wall(1, 0, u.scale(w), qi(c)), false).unwrap();
        let there = wall_crossing(&ray, v, 4).unwrap();
        let back = wall_crossing(&ray, -v, 4).unwrap();
        prop_assert!(there.compose(&back).unwrap().is_identity());
        prop_assert!(back.compose(&there).unwrap().is_identity());
    }

    #[test]
    fn crossings_are_ring_maps(m1 in (-2i64..=2, -2i64..=2), m2 in (-2i64..=2, -2i64..=2), c in 1i64..=3) {
        let ray = Ray::new(Point::origin(), lv(1, 1), wall(1, 0, lv(1, 1), qi(c)), false).unwrap();
        let theta = wall_crossing(&ray, lv(1, -1), 3).unwrap();
        let (m1, m2) = (lv(m1.0, m1.1), lv(m2.0, m2.1));
        let lhs = theta.image_of(m1 + m2).unwrap();
        let rhs = theta.image_of(m1).unwrap().mul(&theta.image_of(m2).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn fast_product_matches_naive(rays in prop::collection::vec(random_local_ray(2), 0..5)) {
        let ld = sorted(rays);
        prop_assert_eq!(path_ordered_product(&ld, 2, 3).unwrap(), path_ordered_product_naive(&ld, 2, 3).unwrap());
    }

    #[test]
    fn parallel_walls_commute(r1 in random_local_ray(2), c in 1i64..=3, w in 1i64..=2) {
        let mut r2 = r1.clone();
        r2.function = wall(2, 1, r1.direction.scale(w), qi(c));
        let a = sorted(vec![r1.clone(), r2.clone()]);
        let b = LocalDiagram { point: Point::origin(), rays: vec![r2, r1] };
        prop_assert_eq!(path_ordered_product_naive(&a, 2, 4).unwrap(), path_ordered_product_naive(&b, 2, 4).unwrap());
    }
}

#[test]
fn empty_product_is_identity() {
    let ld = LocalDiagram { point: Point::origin(), rays: Vec::new() };
    assert_eq!(path_ordered_product(&ld, 2, 3).unwrap(), PlaneAutomorphism::identity(2, 3));
}
