use proptest::prelude::*;
use wallcross::lattice::{build_refined_unfolding, build_unfolding, kink, CaseId, Point};
use wallcross::series::{q, LatticeVector};

fn case() -> impl Strategy<Value = CaseId> {
    let all: Vec<CaseId> = CaseId::all().collect();
    prop::sample::select(all)
}

#[test]
fn unfoldings_repeat_the_case_data() {
    for c in CaseId::all() {
        let (k, l) = c.case_data();
        let u = build_unfolding(c, 2).unwrap();
        let n = k.len() as i64;
        assert_eq!(u.edges_per_period as i64, n, "case {c}");
        let first = u.edges.iter().map(|e| e.index).min().unwrap();
        let slot = |e: &wallcross::lattice::Edge, s: usize| ((e.index - first).rem_euclid(n) as usize + s) % k.len();
        let rotation =
            (0..k.len()).find(|&s| u.edges.iter().all(|e| e.length == l[slot(e, s)] && e.left_kink == k[slot(e, s)]));
        assert!(rotation.is_some(), "case {c}: edges do not follow the cyclic data");
        for e in &u.edges {
            // The singular point is strictly inside its edge.
            assert!(e.singular != e.left && e.singular != e.right);
            assert_eq!(e.singular, e.left.midpoint(&e.right));
            let (dir, len) = LatticeVector::new(
                (&e.right.x - &e.left.x).to_integer().try_into().unwrap(),
                (&e.right.y - &e.left.y).to_integer().try_into().unwrap(),
            )
            .primitive()
            .unwrap();
            assert_eq!((dir, len), (e.dir, e.length));
        }
        // Kinks between consecutive edges.
        let mut sorted = u.edges.clone();
        sorted.sort_by_key(|e| e.index);
        for w in sorted.windows(2) {
            assert_eq!(kink(w[0].dir, w[1].dir).unwrap(), w[1].left_kink, "case {c}");
        }
    }
}

#[test]
fn refined_unfolding_has_unit_edges() {
    for c in CaseId::all() {
        let u = build_refined_unfolding(c, 1).unwrap();
        assert!(u.edges.iter().all(|e| e.length == 1), "case {c}");
        let plain = build_unfolding(c, 1).unwrap();
        assert_eq!(u.period, plain.period);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_degree_is_translation_invariant(c in case(), num in -40i64..40, a in -3i64..=3, b in -3i64..=3) {
        let u = build_unfolding(c, 2).unwrap();
        let x = q(num, 7);
        let m = LatticeVector::new(a, b);
        let p = Point::new(x.clone(), q(0, 1));
        let moved = u.translate_point(&p, 1);
        let mv = u.translate_vector(m, 1);
        prop_assert_eq!(u.local_degree(&moved.x, mv), u.local_degree(&x, m));
    }

    #[test]
    fn slope_function_is_nonincreasing(c in case(), n1 in -40i64..40, n2 in -40i64..40) {
        let u = build_unfolding(c, 2).unwrap();
        let (lo, hi) = if n1 <= n2 { (n1, n2) } else { (n2, n1) };
        prop_assert!(u.sigma(&q(lo, 5)) >= u.sigma(&q(hi, 5)));
    }

    #[test]
    fn translation_round_trips(c in case(), x in -20i64..20, y in -20i64..20, j in -2i64..=2) {
        let u = build_unfolding(c, 2).unwrap();
        let p = Point::new(q(x, 3), q(y, 2));
        prop_assert_eq!(u.translate_point(&u.translate_point(&p, j), -j), p);
        prop_assert_eq!(u.domain_of(&u.translate_point(&Point::new(q(1, 3), q(0, 1)), j).x) - u.domain_of(&q(1, 3)), j);
    }
}
