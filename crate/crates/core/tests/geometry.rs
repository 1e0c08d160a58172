use std::f64::consts::TAU;

use cuas_core::domain::{point_in_zone, windows_overlap, GeoPoint, TimeWindow, Zone};
use proptest::prelude::*;

/// Winding number of the closed polyline around `p`.
fn winding_number(p: (f64, f64), poly: &[(f64, f64)]) -> i32 {
    let is_left = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
    let mut wn = 0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if a.1 <= p.1 {
            if b.1 > p.1 && is_left(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.1 <= p.1 && is_left(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Polygon star-shaped around its center, hence simple.
fn star_polygon() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (3usize..12)
        .prop_flat_map(|n| prop::collection::vec((0.0f64..1.0, 0.2f64..1.0), n))
        .prop_filter_map("angles too close", |mut pts| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let wrap = 1.0 + pts[0].0 - pts[pts.len() - 1].0;
            let gaps: Vec<f64> = pts.windows(2).map(|w| w[1].0 - w[0].0).chain([wrap]).collect();
            // Gaps above half a turn leave the center outside.
            if gaps.iter().any(|&g| !(1e-3..0.45).contains(&g)) {
                return None;
            }
            Some(
                pts.into_iter()
                    .map(|(a, r)| (10.0 + r * (a * TAU).cos(), 20.0 + r * (a * TAU).sin()))
                    .collect(),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // 100 polygons x 100 points.
    #[test]
    fn ray_casting_matches_winding_number(
        poly in star_polygon(),
        points in prop::collection::vec((8.8f64..11.2, 18.8f64..21.2), 100),
    ) {
        let zone = Zone::from_lat_lon(&poly).unwrap();
        for (lat, lon) in points {
            let near_edge = (0..poly.len())
                .any(|i| distance_to_segment((lat, lon), poly[i], poly[(i + 1) % poly.len()]) < 1e-9);
            if near_edge {
                continue;
            }
            let p = GeoPoint::surface(lat, lon).unwrap();
            prop_assert_eq!(point_in_zone(&p, &zone), winding_number((lat, lon), &poly) != 0);
        }
    }

    #[test]
    fn vertices_are_inside_and_far_points_outside(poly in star_polygon()) {
        let zone = Zone::from_lat_lon(&poly).unwrap();
        for &(lat, lon) in &poly {
            prop_assert!(point_in_zone(&GeoPoint::surface(lat, lon).unwrap(), &zone));
        }
        let (a, b, c, d) = zone.bounding_box();
        let diag = ((c - a).powi(2) + (d - b).powi(2)).sqrt();
        let far = GeoPoint::surface(c + 2.0 * diag, d + 2.0 * diag).unwrap();
        prop_assert!(!point_in_zone(&far, &zone));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn windows_overlap_is_symmetric_and_matches_intersection(
        a0 in 0u64..1000, al in 1u64..500, b0 in 0u64..1000, bl in 1u64..500,
    ) {
        let a = TimeWindow::from_millis(a0, a0 + al).unwrap();
        let b = TimeWindow::from_millis(b0, b0 + bl).unwrap();
        prop_assert_eq!(windows_overlap(&a, &b), windows_overlap(&b, &a));
        let shared = (a0..a0 + al).any(|t| (b0..b0 + bl).contains(&t));
        prop_assert_eq!(windows_overlap(&a, &b), shared);
    }

    #[test]
    fn empty_or_reversed_windows_are_rejected(s in 0u64..1000, back in 0u64..1000) {
        prop_assert!(TimeWindow::from_millis(s, s.saturating_sub(back)).is_err());
    }
}
