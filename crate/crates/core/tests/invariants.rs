use std::f64::consts::PI;

use proptest::prelude::*;

use polyriesz::energy::{j, perimeter_r_with_tolerance};
use polyriesz::geometry::{polygon_disc_intersection_area, random_polygon, Point, RandomMode};
use polyriesz::io::{parse_polygon, polygon_json};
use polyriesz::optimize::shape_distance;
use polyriesz::Kernel;

fn polygon(n: usize, seed: u64) -> polyriesz::Polygon {
    random_polygon(n, seed, RandomMode::StarShaped).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_rigid_motion_invariant(n in 3usize..9, seed in 0u64..10_000, angle in 0.0..2.0 * PI, dx in -3.0..3.0f64, dy in -3.0..3.0f64) {
        let p = polygon(n, seed);
        let q = p.rotated(angle, &Point::new(0.3, -0.1)).translated(&Point::new(dx, dy));
        for k in [Kernel::power(4.0).unwrap(), Kernel::truncated_heat(6, 2.0).unwrap()] {
            let a = j(&p, &k, k.default_degree()).unwrap().value;
            let b = j(&q, &k, k.default_degree()).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-11 * a.abs(), "{k}: {a} {b}");
        }
    }

    #[test]
    fn power_energy_is_homogeneous(n in 3usize..9, seed in 0u64..10_000, s in 0.2..5.0f64) {
        let p = polygon(n, seed);
        let k = Kernel::power(6.0).unwrap();
        let a = j(&p, &k, 8).unwrap().value;
        let b = j(&p.scaled(s), &k, 8).unwrap().value;
        prop_assert!((b / a - s.powi(10)).abs() <= 1e-11 * s.powi(10));
    }

    #[test]
    fn disc_overlap_is_bounded_and_translation_invariant(n in 3usize..9, seed in 0u64..10_000, r in 0.05..3.0f64, cx in -1.5..1.5f64, cy in -1.5..1.5f64) {
        let p = polygon(n, seed);
        let c = Point::new(cx, cy);
        let a = polygon_disc_intersection_area(&p, &c, r);
        prop_assert!(a >= -1e-14 && a <= p.area().min(PI * r * r) + 1e-12);
        let v = Point::new(0.7, -2.1);
        let b = polygon_disc_intersection_area(&p.translated(&v), &(c + v), r);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn polygon_json_round_trips(n in 3usize..12, seed in 0u64..10_000) {
        let p = polygon(n, seed);
        prop_assert_eq!(parse_polygon(&polygon_json(&p), "p").unwrap(), p);
    }

    #[test]
    fn shape_distance_ignores_relabeling_and_motion(n in 3usize..9, seed in 0u64..10_000, shift in 0usize..8, angle in 0.0..2.0 * PI) {
        let p = polygon(n, seed);
        let mut vs = p.vertices().to_vec();
        vs.rotate_left(shift % n);
        let q = polyriesz::Polygon::new(vs).unwrap().rotated(angle, &Point::zeros()).scaled(1.7);
        prop_assert!(shape_distance(&p, &q).unwrap() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn perimeter_is_nonnegative_and_saturates(n in 3usize..7, seed in 0u64..10_000) {
        let p = polygon(n, seed);
        let small = perimeter_r_with_tolerance(&p, 0.3, 1e-9).unwrap();
        prop_assert!(small > 0.0);
        // once r exceeds the diameter every disc about a point of P covers P
        let r = p.diameter() * 1.01;
        let big = perimeter_r_with_tolerance(&p, r, 1e-9).unwrap();
        let expected = PI * r * r * p.area() - p.area() * p.area();
        prop_assert!((big - expected).abs() < 1e-8 * expected);
    }
}
