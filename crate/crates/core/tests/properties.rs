use proptest::prelude::*;
use spectral_partition::eigen::{faber_krahn_lower_bound, first_eigenpair, l2_norm_sq, rayleigh_quotient, DEFAULT_TOL};
use spectral_partition::grid::{area, build_domain, dyadic_approximation, GridDomain, ShapeSpec, SubdomainMask};
use spectral_partition::partition::Partition;

fn shape(kind: u8, size: f64) -> ShapeSpec {
    match kind {
        0 => ShapeSpec::Disk { area: size },
        1 => ShapeSpec::RegularHexagon { area: size },
        _ => ShapeSpec::Rectangle { a: size, b: 1.0 / size },
    }
}

fn block(d: &GridDomain, i0: usize, j0: usize, w: usize, hgt: usize) -> SubdomainMask {
    let cells = (0..d.len())
        .map(|k| {
            let (i, j) = d.coords(k);
            (i0..i0 + w).contains(&i) && (j0..j0 + hgt).contains(&j)
        })
        .collect();
    SubdomainMask::new(d, cells).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measured_area_tracks_the_shape(kind in 0u8..3, size in 0.5f64..2.0, res in 96usize..200) {
        let s = shape(kind, size);
        let d = build_domain(&s, res).unwrap();
        prop_assert!((d.measured_area() - s.area()).abs() <= 0.02 * s.area());
        prop_assert!(d.inside_count() > 0);
        prop_assert!(d.nx() >= 2 && d.ny() >= 2);
    }

    #[test]
    fn mask_area_is_additive(a in 0.1f64..0.9, b in 0.1f64..0.9) {
        let d = build_domain(&ShapeSpec::Disk { area: 1.0 }, 64).unwrap();
        let left = d.mask_where(|x, y| x + 0.2 * y < a);
        let right = d.mask_where(|x, y| x + 0.2 * y >= a && y < b);
        prop_assert!(left.is_disjoint(&right));
        let both = left.union(&right).unwrap();
        prop_assert!((area(&both) - area(&left) - area(&right)).abs() < 1e-12);
    }

    #[test]
    fn dyadic_cover_sandwich(kind in 0u8..2, level in 1u32..5) {
        let d = build_domain(&shape(kind, 1.0), 128).unwrap();
        let cover = dyadic_approximation(&d, level).unwrap();
        for k in 0..d.len() {
            let (x, y) = d.center(k);
            if cover.inner.iter().any(|q| q.contains([x, y])) {
                prop_assert!(d.is_inside(k));
            }
            if d.is_inside(k) {
                prop_assert!(cover.inner.iter().chain(&cover.boundary).any(|q| q.contains([x, y])));
            }
        }
        let side = cover.side();
        prop_assert!(cover.inner.iter().chain(&cover.boundary).all(|q| (q.side() - side).abs() < 1e-15));
    }

    #[test]
    fn part_masks_tile_the_inside(seeds in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..12)) {
        let d = build_domain(&ShapeSpec::RegularHexagon { area: 1.0 }, 48).unwrap();
        let labels = (0..d.len())
            .map(|k| {
                if !d.is_inside(k) {
                    return u32::MAX;
                }
                let (x, y) = d.center(k);
                let dist = |s: &(f64, f64)| (s.0 - x).powi(2) + (s.1 - y).powi(2);
                (0..seeds.len()).min_by(|&a, &b| dist(&seeds[a]).total_cmp(&dist(&seeds[b]))).unwrap() as u32
            })
            .collect();
        let p = Partition::new(&d, labels, seeds.len()).unwrap();
        let mut hits = vec![0u32; d.len()];
        for l in 0..p.m() {
            for k in p.mask(&d, l).unwrap().indices() {
                hits[k] += 1;
            }
        }
        for k in 0..d.len() {
            prop_assert_eq!(hits[k], u32::from(d.is_inside(k)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenpair_invariants(i0 in 0usize..20, j0 in 0usize..20, w in 4usize..28, hgt in 4usize..28) {
        let d = build_domain(&ShapeSpec::UnitSquare, 48).unwrap();
        let mask = block(&d, i0, j0, w.min(48 - i0), hgt.min(48 - j0));
        let e = first_eigenpair(&d, &mask, DEFAULT_TOL).unwrap();
        prop_assert!(e.eigfn.iter().all(|&v| v >= 0.0));
        prop_assert!((l2_norm_sq(&d, &e.eigfn, &mask) - 1.0).abs() < 1e-8);
        prop_assert!((0..d.len()).filter(|&k| !mask.contains(k)).all(|k| e.eigfn[k] == 0.0));
        let rq = rayleigh_quotient(&d, &e.eigfn, &mask).unwrap();
        prop_assert!((rq - e.lambda1).abs() <= 10.0 * DEFAULT_TOL * e.lambda1);
        prop_assert!(e.lambda1 >= 0.95 * faber_krahn_lower_bound(mask.area()).unwrap());
    }

    #[test]
    fn halving_the_cell_quadruples_lambda(w in 4usize..24, hgt in 4usize..24) {
        let coarse = build_domain(&ShapeSpec::UnitSquare, 32).unwrap();
        let fine = build_domain(&ShapeSpec::UnitSquare, 64).unwrap();
        let a = first_eigenpair(&coarse, &block(&coarse, 2, 3, w, hgt), DEFAULT_TOL).unwrap().lambda1;
        let b = first_eigenpair(&fine, &block(&fine, 5, 1, w, hgt), DEFAULT_TOL).unwrap().lambda1;
        prop_assert!((b / a - 4.0).abs() < 1e-5);
    }
}
