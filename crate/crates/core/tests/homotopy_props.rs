use std::sync::Arc;

use equimean::dyadics::Dyadic;
use equimean::groups::GroupAction;
use equimean::homotopy::{
    fixed_set_deformation, symmetrize, ContractionBuilder, Extension, FnHomotopy, Homotopy, Retraction,
    SymmetrizeOptions,
};
use equimean::means::{orbit_average_point, QuasiMeanMap};
use equimean::spaces::{MetricSpace, Point};
use proptest::prelude::*;

fn geometric_builder() -> ContractionBuilder {
    let p = QuasiMeanMap::geometric(MetricSpace::interval(1.0, 2.0).unwrap(), 2).unwrap();
    ContractionBuilder::new(p, 2.0 - 2f64.sqrt(), Point::from(2.0)).unwrap()
}

fn square() -> MetricSpace {
    MetricSpace::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
}

#[test]
fn arithmetic_claim_sweep_is_tight() {
    let p = QuasiMeanMap::arithmetic(MetricSpace::interval(0.0, 1.0).unwrap(), 2).unwrap();
    let b = ContractionBuilder::new(p, 0.5, Point::from(0.0)).unwrap();
    let rep = b.verify_claim1(&Point::from(1.0), 12).unwrap();
    assert!(rep.passed);
    assert!(rep.levels.iter().all(|l| (l.ratio - 1.0).abs() <= 1e-12));
}

#[test]
fn straight_line_contraction_closed_form() {
    let p = QuasiMeanMap::arithmetic(MetricSpace::interval(0.0, 1.0).unwrap(), 2).unwrap();
    let b = ContractionBuilder::new(p, 0.5, Point::from(0.0)).unwrap();
    let x = Point::from(1.0);
    let table = b.level_table(&x, 10).unwrap();
    for (j, v) in table.iter().enumerate() {
        assert!((v.coords()[0] - (1.0 - j as f64 / 1024.0)).abs() <= 1e-15);
    }
    let tp = b.phi_at_time(&x, 1.0 / 3.0, 1e-3).unwrap();
    assert!((tp.point.coords()[0] - 2.0 / 3.0).abs() <= tp.certified_error);
}

#[test]
fn eps_too_small_reports_achievable_error() {
    let b = geometric_builder();
    let err = b.phi_at_time(&Point::from(1.0), 0.3, 1e-14).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("max 40"), "{msg}");
}

#[test]
fn trajectory_runs_from_x_to_theta() {
    let b = geometric_builder();
    let traj = b.trajectory(&Point::from(1.0), 16, 1e-4).unwrap();
    assert_eq!(traj.first().unwrap().point, Point::from(1.0));
    assert_eq!(traj.last().unwrap().point, Point::from(2.0));
    for w in traj.windows(2) {
        assert!(w[0].point.coords()[0] <= w[1].point.coords()[0]);
    }
}

#[test]
fn concurrent_evaluation_matches_sequential() {
    let b = geometric_builder();
    let x = Point::from(1.25);
    let ds: Vec<Dyadic> = (0..=512u64).map(|j| Dyadic::new(j, 9).unwrap()).collect();
    let seq: Vec<Point> = ds.iter().map(|&d| b.phi_at_dyadic_uncached(&x, d).unwrap()).collect();
    let par: Vec<Point> = std::thread::scope(|s| {
        let hs: Vec<_> = ds.chunks(64).map(|c| s.spawn(|| c.iter().map(|&d| b.phi_at_dyadic(&x, d).unwrap()).collect::<Vec<_>>())).collect();
        hs.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(seq, par);
}

#[test]
fn perturbed_starts_converge() {
    let b = geometric_builder();
    let x = Point::from(1.2);
    let ds: Vec<Dyadic> = (0..=256u64).map(|j| Dyadic::new(j, 8).unwrap()).collect();
    let base: Vec<f64> = ds.iter().map(|&d| b.phi_at_dyadic(&x, d).unwrap().coords()[0]).collect();
    let mut last = f64::INFINITY;
    for k in 1..=30 {
        let xn = Point::from(1.2 + 2f64.powi(-k));
        let gap = ds
            .iter()
            .zip(&base)
            .map(|(&d, v)| (b.phi_at_dyadic_uncached(&xn, d).unwrap().coords()[0] - v).abs())
            .fold(0.0, f64::max);
        assert!(gap <= last);
        last = gap;
    }
    assert!(last <= 1e-8, "{last}");
}

#[test]
fn builder_is_a_homotopy() {
    let b = geometric_builder();
    let x = Point::from(1.0);
    assert_eq!(b.eval(&x, 0.0).unwrap(), x);
    assert_eq!(b.eval(&x, 1.0).unwrap(), Point::from(2.0));
    assert_eq!(b.eval(&x, 0.5).unwrap(), b.phi_at_dyadic(&x, Dyadic::new(1, 1).unwrap()).unwrap());
    assert!(b.eval(&x, -0.1).is_err());
}

#[test]
fn enumeration_does_not_change_the_symmetrized_homotopy() {
    let sq = square();
    let rot = GroupAction::rotation(sq.clone(), 4).unwrap();
    let a4 = QuasiMeanMap::arithmetic(sq.clone(), 4).unwrap();
    let c = Point::from([0.5, 0.2]);
    let base = Arc::new(FnHomotopy::straight_line(sq.clone(), move |_| c.clone()).unwrap());
    let opts = SymmetrizeOptions { tol: 1e-12, ..Default::default() };
    let g = symmetrize(base, &rot, Some(a4), &opts).unwrap();
    let reordered = [vec![3, 1, 0, 2], vec![1, 2, 3, 0], vec![2, 0, 3, 1]];
    for order in reordered {
        let h = g.with_enumeration(order).unwrap();
        for x in sq.sample_seeded(4, 50) {
            for t in [0.0, 0.2, 0.5, 0.9, 1.0] {
                let (a, b) = (g.psi(&x, t).unwrap(), h.psi(&x, t).unwrap());
                assert!(sq.distance(&a, &b).unwrap() <= 1e-12);
            }
        }
    }
    assert!(g.with_enumeration(vec![0, 1, 2]).is_err());
    let rep = g.report().unwrap();
    assert!(rep.equivariance_defect <= 1e-12, "{rep:?}");
    assert!(rep.end_spread <= 1e-12);
    assert!(rep.base_start_defect == 0.0 && rep.start_defect <= 1e-12);
}

#[test]
fn deformation_keeps_orbit_averages_still() {
    let sq = square();
    let rot = GroupAction::rotation(sq.clone(), 4).unwrap();
    let h = rot.group().generated_by([2]).unwrap();
    let a2 = QuasiMeanMap::arithmetic(sq.clone(), 2).unwrap();
    let opts = SymmetrizeOptions { tol: 1e-12, ..Default::default() };
    let (psi, rep) = fixed_set_deformation(&rot, &h, Retraction::OrbitAverage, Some(a2.clone()), Extension::StraightLine, &opts).unwrap();
    assert!(rep.passed, "{rep:?}");
    for x in sq.sample_seeded(7, 50) {
        let y = orbit_average_point(&a2, &rot, &h, &x, 1e-12).unwrap();
        for t in [0.0, 0.3, 0.7, 1.0] {
            assert!(sq.distance(&psi.psi(&y, t).unwrap(), &y).unwrap() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn memo_and_walk_are_bit_identical(x in 1.0f64..=2.0, j in 0u64..=(1 << 14), level in 0u32..=14) {
        let b = geometric_builder();
        let d = Dyadic::nearest(j as f64 / (1u64 << 14) as f64, level).unwrap();
        let x = Point::from(x);
        let cold = b.phi_at_dyadic_uncached(&x, d).unwrap();
        let warm = b.phi_at_dyadic(&x, d).unwrap();
        let again = b.phi_at_dyadic(&x, d).unwrap();
        prop_assert_eq!(cold.coords()[0].to_bits(), warm.coords()[0].to_bits());
        prop_assert_eq!(warm.coords()[0].to_bits(), again.coords()[0].to_bits());
    }

    #[test]
    fn refinement_is_cauchy(x in 1.0f64..2.0, t in 0.0f64..=1.0, eps_exp in 1i32..8) {
        let b = geometric_builder();
        let x = Point::from(x);
        let eps = 10f64.powi(-eps_exp);
        let n = b.level_for(&x, eps).unwrap();
        prop_assume!(n + 6 <= 40);
        let c = b.holder_constant(&x);
        let at = |level: u32| b.phi_at_dyadic(&x, Dyadic::nearest(t, level).unwrap()).unwrap().coords()[0];
        prop_assert!((at(n) - at(n + 1)).abs() <= c * 2f64.powf(-(n as f64) * b.alpha()) * (1.0 + 1e-9));

        let coarse = b.phi_at_time(&x, t, eps).unwrap();
        prop_assert!(coarse.certified_error <= eps);
        let fine_d = Dyadic::nearest(t, n + 6).unwrap();
        let fine = b.phi_at_dyadic(&x, fine_d).unwrap();
        let fine_err = c * (t - fine_d.to_f64()).abs().powf(b.alpha());
        let gap = (coarse.point.coords()[0] - fine.coords()[0]).abs();
        prop_assert!(gap <= (coarse.certified_error + fine_err) * (1.0 + 1e-9) + 1e-15,
            "gap {} vs {} + {}", gap, coarse.certified_error, fine_err);
    }

    #[test]
    fn claim_bound_holds_for_any_start(x in 1.0f64..=2.0) {
        let rep = geometric_builder().verify_claim1(&Point::from(x), 10).unwrap();
        prop_assert!(rep.passed);
    }
}
