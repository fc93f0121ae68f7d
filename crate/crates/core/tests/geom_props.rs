mod common {
    pub mod gen;
}

use common::gen::{dimensioned_list, Gen};
use leam_core::geom::polygon::{points, polygon_area, Point2};
use leam_core::geom::{
    build_csg, check_mirror_symmetry, exact_volume, mc_volume, CsgNode, MirrorPlane,
};
use leam_core::ir::{Axis, EvaluatedShape, Plane};
use proptest::prelude::*;

fn brick(min: [f64; 3], max: [f64; 3]) -> CsgNode {
    CsgNode::Primitive(EvaluatedShape::Brick { min, max })
}

fn extent() -> impl Strategy<Value = (f64, f64)> {
    (-50i32..50, 1i32..40).prop_map(|(a, w)| (a as f64 / 4.0, (a + w) as f64 / 4.0))
}

fn ring() -> impl Strategy<Value = Vec<Point2>> {
    (3usize..10, 1u32..30, 0u32..360).prop_map(|(n, r, phase)| {
        let coords: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let t = ((phase as f64) + 360.0 * k as f64 / n as f64).to_radians();
                ((r as f64 * t.cos() * 100.0).round() / 100.0, (r as f64 * t.sin() * 100.0).round() / 100.0)
            })
            .collect();
        points(&coords)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polygon_area_ignores_rotation_and_orientation(pts in ring(), k in 0usize..10) {
        prop_assume!(pts.len() >= 3);
        let Ok(area) = polygon_area(&pts) else { return Ok(()) };
        let mut rotated = pts.clone();
        rotated.rotate_left(k % pts.len());
        let mut reversed = pts.clone();
        reversed.reverse();
        let mut closed = pts.clone();
        closed.push(pts[0]);
        for other in [rotated, reversed, closed] {
            prop_assert!((polygon_area(&other).unwrap() - area).abs() <= 1e-9 * area.max(1.0));
        }
    }

    #[test]
    fn separated_union_adds(x in extent(), y in extent(), z in extent(), gap in 1i32..20) {
        let a = brick([x.0, y.0, z.0], [x.1, y.1, z.1]);
        let shift = x.1 - x.0 + gap as f64;
        let b = brick([x.0 + shift, y.0, z.0], [x.1 + shift, y.1, z.1]);
        let va = exact_volume(&a).unwrap();
        let u = CsgNode::Union(Box::new(a.clone()), Box::new(b.clone()));
        prop_assert!((exact_volume(&u).unwrap() - 2.0 * va).abs() <= 1e-9 * va);
        let d = CsgNode::Difference(Box::new(a.clone()), Box::new(b.clone()));
        prop_assert_eq!(exact_volume(&d).unwrap(), va);
        let i = CsgNode::Intersection(Box::new(a), Box::new(b));
        prop_assert_eq!(exact_volume(&i).unwrap(), 0.0);
    }

    #[test]
    fn nested_difference_subtracts(x in extent(), y in extent(), z in extent()) {
        let outer = brick([x.0 - 1.0, y.0 - 1.0, z.0 - 1.0], [x.1 + 1.0, y.1 + 1.0, z.1 + 1.0]);
        let inner = brick([x.0, y.0, z.0], [x.1, y.1, z.1]);
        let want = exact_volume(&outer).unwrap() - exact_volume(&inner).unwrap();
        let d = CsgNode::Difference(Box::new(outer), Box::new(inner));
        let got = exact_volume(&d).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want);
        let mc = mc_volume(&d, 20_000, 3).unwrap();
        prop_assert!((mc.estimate - want).abs() <= 4.0 * mc.stderr + 1e-12);
    }

    #[test]
    fn boolean_membership_is_pointwise(
        a in (extent(), extent(), extent()),
        b in (extent(), extent(), extent()),
        p in (-60i32..60, -60i32..60, -60i32..60),
    ) {
        let na = brick([a.0.0, a.1.0, a.2.0], [a.0.1, a.1.1, a.2.1]);
        let nb = brick([b.0.0, b.1.0, b.2.0], [b.0.1, b.1.1, b.2.1]);
        let q = [p.0 as f64 / 4.0, p.1 as f64 / 4.0, p.2 as f64 / 4.0];
        let (ia, ib) = (na.contains(q), nb.contains(q));
        let u = CsgNode::Union(Box::new(na.clone()), Box::new(nb.clone()));
        let i = CsgNode::Intersection(Box::new(na.clone()), Box::new(nb.clone()));
        let d = CsgNode::Difference(Box::new(na), Box::new(nb.clone()));
        prop_assert_eq!(u.contains(q), ia || ib);
        prop_assert_eq!(i.contains(q), ia && ib);
        prop_assert_eq!(d.contains(q), ia && !nb.contains_interior(q));
    }

    #[test]
    fn centred_shapes_are_mirror_symmetric(h in 1u32..20, r in 1u32..20, seed in any::<u64>()) {
        let cyl = CsgNode::Primitive(EvaluatedShape::Cylinder {
            axis: Axis::Z,
            center: [15.0, 3.0],
            outer_radius: r as f64,
            inner_radius: 0.0,
            range: [0.0, h as f64],
        });
        let slab = CsgNode::Primitive(EvaluatedShape::Extrude {
            plane: Plane::Xy,
            polygon: points(&[(15.0 - r as f64, 0.0), (15.0 + r as f64, 0.0), (15.0, 7.0)]),
            base: 0.0,
            height: 1.0,
        });
        let plane = MirrorPlane { axis: Axis::X, offset: 15.0 };
        prop_assert_eq!(check_mirror_symmetry(&cyl, plane, 5000, seed), 0.0);
        prop_assert_eq!(check_mirror_symmetry(&slab, plane, 5000, seed), 0.0);
    }

    #[test]
    fn exact_and_sampled_volumes_agree(seed in any::<u64>()) {
        let sl = dimensioned_list(&mut Gen::new(seed));
        let model = build_csg(&sl).unwrap();
        for (_, node) in &model.nodes {
            let Some(exact) = exact_volume(node) else { continue };
            let n = 50_000;
            let Ok(mc) = mc_volume(node, n, seed) else {
                prop_assert_eq!(exact, 0.0);
                continue;
            };
            // Slack of a few samples' worth covers the tiny-fraction regime
            // where the normal approximation breaks down.
            let slack = 3.0 * node.bbox().volume() / n as f64;
            prop_assert!(
                (mc.estimate - exact).abs() <= 5.0 * mc.stderr + slack,
                "exact {} mc {} ± {}", exact, mc.estimate, mc.stderr
            );
        }
    }
}
