use std::sync::Arc;

use dynperc::correlations::*;
use dynperc::dynamics::{build_kernel, Dynamics, KernelFamily};
use dynperc::lattice::{CellId, Length, Model, Region};
use dynperc::percolation::{estimate_event, ClusterEvent, Configuration, Observable};
use dynperc::rng::{replicate, Estimate};
use dynperc::{Error, RngStream};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TRI: Model = Model::TriangularSite;

fn len(x: f64) -> Length {
    Length::from_f64(x).unwrap()
}

fn curve_of(values: &[f64], grid: &[f64]) -> CorrelationCurve {
    let s = RngStream::new(0, 0);
    CorrelationCurve {
        t_grid: grid.to_vec(),
        values: values.iter().map(|&v| Estimate::exact(v, 1, s)).collect(),
        dynamics: "none".into(),
        f: "none".into(),
    }
}

#[test]
fn geometric_grid_shape() {
    let g = geometric_grid(1.0 / 1024.0, false).unwrap();
    assert_eq!(g.len(), 11);
    assert_eq!(g[0], 1.0 / 1024.0);
    assert_eq!(*g.last().unwrap(), 1.0);
    assert_eq!(geometric_grid(0.25, true).unwrap(), vec![0.0, 0.25, 0.5, 1.0]);
    assert!(geometric_grid(0.3, false).is_err());
}

#[test]
fn curve_at_zero_is_the_event_probability() {
    let region = Arc::new(fitting_torus(TRI, len(4.0)).unwrap());
    let kernel = build_kernel(KernelFamily::PowerLaw { alpha: 0.5 }, region.clone()).unwrap();
    let event = ClusterEvent::one_arm(TRI, len(4.0));
    let f = Observable::event(event.clone());
    let grid = [0.0, 0.25, 1.0];
    let curve = correlation_curve(&f, &Dynamics::exclusion(kernel), &region, &grid, 20_000, RngStream::new(1, 0)).unwrap();
    let alpha1 = estimate_event(&event, 0.5, 20_000, RngStream::new(1, 1));
    assert!(curve.values[0].sigma_distance(&alpha1) <= 3.0, "{:?} {alpha1:?}", curve.values[0]);
    for w in curve.values.windows(2) {
        assert!(w[1].mean <= w[0].mean + 3.0 * w[0].std_error.hypot(w[1].std_error), "{curve:?}");
    }
    assert!(curve.values[2].mean < curve.values[0].mean);
}

#[test]
fn iid_parity_curves_decay_exponentially() {
    let region = Arc::new(Region::torus(TRI, 8).unwrap());
    let cells = [CellId::new(0, 0), CellId::new(2, 1), CellId::new(-1, 3)];
    let grid = [0.0, 0.5, 1.0, 2.0];
    for k in 1..=3 {
        let f = Observable::Parity(cells[..k].to_vec());
        let curve = correlation_curve(&f, &Dynamics::iid(0.5), &region, &grid, 40_000, RngStream::new(2, k as u64)).unwrap();
        assert_eq!(curve.values[0].mean, 1.0);
        for (t, v) in grid.iter().zip(&curve.values) {
            let exact = (-t * k as f64).exp();
            assert!((v.mean - exact).abs() <= 3.0 * v.std_error + 1e-12, "|S| = {k}, t = {t}: {v:?} vs {exact}");
        }
    }
}

#[test]
fn curve_rejects_bad_input() {
    let region = Arc::new(Region::torus(TRI, 8).unwrap());
    let f = Observable::Parity(vec![CellId::new(0, 0)]);
    let iid = Dynamics::iid(0.5);
    assert!(correlation_curve(&f, &iid, &region, &[0.5, 0.25], 10, RngStream::new(0, 0)).is_err());
    let big = Observable::event(ClusterEvent::one_arm(TRI, len(8.0)));
    assert!(matches!(correlation_curve(&big, &iid, &region, &[0.5], 10, RngStream::new(0, 0)), Err(Error::Geometry(_))));
    let other = Arc::new(Region::torus(TRI, 10).unwrap());
    let k = build_kernel(KernelFamily::NearestNeighbour, other).unwrap();
    assert!(matches!(
        correlation_curve(&f, &Dynamics::exclusion(k), &region, &[0.5], 10, RngStream::new(0, 0)),
        Err(Error::RegionMismatch(_))
    ));
}

#[test]
fn integral_of_constant_and_power_curves() {
    let grid = geometric_grid(1.0 / 1024.0, false).unwrap();
    let c = 0.3;
    let i = second_moment_integral(&curve_of(&vec![c; grid.len()], &grid), 0.0).unwrap();
    assert!((i.value - c).abs() <= i.error, "{i:?}");
    let i = second_moment_integral(&curve_of(&vec![1.0; grid.len()], &grid), 0.5).unwrap();
    let t_min: f64 = grid[0];
    assert!((i.head - 2.0 * t_min.sqrt()).abs() < 1e-15);
    assert!((i.value - 2.0).abs() <= i.error, "{i:?}");
    assert!(matches!(second_moment_integral(&curve_of(&[1.0, 1.0], &[0.5, 1.0]), 1.0), Err(Error::DivergentHead(_))));
    assert!(second_moment_integral(&curve_of(&[1.0, 1.0], &[0.25, 0.5]), 0.0).is_err());
}

#[test]
fn integral_of_an_iid_parity_curve() {
    let region = Arc::new(Region::torus(TRI, 8).unwrap());
    let f = Observable::Parity(vec![CellId::new(0, 0), CellId::new(3, 2)]);
    let grid = geometric_grid(1.0 / 1024.0, true).unwrap();
    let curve = correlation_curve(&f, &Dynamics::iid(0.5), &region, &grid, 20_000, RngStream::new(3, 0)).unwrap();
    let i = second_moment_integral(&curve, 0.0).unwrap();
    let exact = (1.0 - (-2.0f64).exp()) / 2.0;
    assert!((i.value - exact).abs() <= i.error, "{i:?} vs {exact}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn integral_is_monotone_in_gamma(vals in prop::collection::vec(0.0f64..1.0, 11), g1 in 0.0f64..0.99, g2 in 0.0f64..0.99) {
        let grid = geometric_grid(1.0 / 1024.0, false).unwrap();
        let c = curve_of(&vals, &grid);
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let a = second_moment_integral(&c, lo).unwrap();
        let b = second_moment_integral(&c, hi).unwrap();
        prop_assert!(a.value <= b.value + 1e-12);
    }

    #[test]
    fn singular_bound_never_fails(seed in any::<u64>(), n in 0usize..=20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_singular_instance(n, &mut rng);
        let rep = singular_bound(&inst);
        prop_assert!(rep.holds(), "{:?}", rep);
    }
}

#[test]
fn singular_bound_extreme_cases() {
    let nu = vec![0.1, 0.2, 0.3];
    let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let rep = singular_bound(&SingularInstance::new(nu.clone(), id.clone(), vec![true; 3]).unwrap());
    assert_eq!((rep.eta, rep.delta), (1.0, 0.0));
    assert!((rep.lhs - 0.6).abs() < 1e-15 && (rep.rhs - 0.6).abs() < 1e-15);
    let half = vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]];
    let rep = singular_bound(&SingularInstance::new(nu.clone(), half, vec![false; 3]).unwrap());
    assert_eq!((rep.eta, rep.delta), (0.0, 1.0));
    assert!((rep.rhs - 1.2).abs() < 1e-15 && rep.lhs <= 0.6);
    assert!(SingularInstance::new(nu.clone(), vec![vec![0.9, 0.2, 0.0], vec![0.2, 0.0, 0.0], vec![0.0; 3]], vec![true; 3]).is_err());
    assert!(SingularInstance::new(nu.clone(), vec![vec![0.0, 0.2, 0.0], vec![0.1, 0.0, 0.0], vec![0.0; 3]], vec![true; 3]).is_err());
    assert!(SingularInstance::new(vec![0.6, 0.6], vec![vec![0.0; 2]; 2], vec![true; 2]).is_err());
}

#[test]
fn dimension_constants() {
    assert_eq!(alpha_zero(), Ratio::new(217, 816));
    assert_eq!(d_of_alpha_exact(Ratio::from_integer(0)).unwrap(), Ratio::new(31, 36));
    assert_eq!(d_of_alpha_exact(alpha_zero()).unwrap(), Ratio::from_integer(0));
    let direct = 1.0 - (5.0 / 36.0) / (1.0 - 68.0 * 0.1 / 21.0);
    assert!((d_of_alpha(0.1).unwrap() - direct).abs() < 1e-15);
    assert!((d_of_alpha(0.1).unwrap() - 0.7946).abs() < 5e-5);
    assert!(matches!(d_of_alpha(21.0 / 68.0), Err(Error::OutOfDomain(_))));
    assert!(matches!(d_of_alpha(-0.1), Err(Error::OutOfDomain(_))));
    assert!(d_of_alpha_exact(Ratio::new(21, 68)).is_err());
}

#[test]
fn eta_diagnostic_small_box() {
    let region = Arc::new(Region::torus(TRI, 24).unwrap());
    let kernel = build_kernel(KernelFamily::PowerLaw { alpha: 0.5 }, region.clone()).unwrap();
    let at0 = eta_bound_diag(&kernel, 2, 1.0, 0.0, 100, RngStream::new(4, 0)).unwrap();
    assert_eq!(at0.max.mean, 1.0);
    assert_eq!(at0.families.len(), 3);
    let mut prev = at0.max;
    for (j, t) in [0.25, 1.0, 4.0].into_iter().enumerate() {
        let rep = eta_bound_diag(&kernel, 2, 1.0, t, 20_000, RngStream::new(4, 1 + j as u64)).unwrap();
        for (_, e) in &rep.families {
            assert!(e.mean <= rep.max.mean);
        }
        assert!(rep.max.mean <= prev.mean + 3.0 * prev.std_error.hypot(rep.max.std_error), "t = {t}: {rep:?}");
        prev = rep.max;
    }
    assert!(prev.mean < 0.9);
    assert!(matches!(eta_bound_diag(&kernel, 2, 2.0, 1.0, 10, RngStream::new(0, 0)), Err(Error::Geometry(_))));
    let nn = build_kernel(KernelFamily::NearestNeighbour, region).unwrap();
    assert!(eta_bound_diag(&nn, 2, 1.0, 1.0, 10, RngStream::new(0, 0)).is_err());
}

#[test]
fn eta_escape_decays_exponentially_in_time() {
    // k = 4, β = 2: 16 cells in the box of half-width 256 under α = 0.2
    let region = Arc::new(Region::torus(TRI, 600).unwrap());
    let kernel = build_kernel(KernelFamily::PowerLaw { alpha: 0.2 }, region).unwrap();
    let ts = [0.25, 0.5, 1.0, 1.5];
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .enumerate()
        .map(|(j, &t)| (t, eta_bound_diag(&kernel, 4, 2.0, t, 4_000, RngStream::new(5, j as u64)).unwrap().max.mean.ln()))
        .collect();
    // least-squares slope of a line through the origin
    let slope = pts.iter().map(|(t, y)| t * y).sum::<f64>() / pts.iter().map(|(t, _)| t * t).sum::<f64>();
    assert!(slope < 0.0, "{pts:?}");
    for (t, y) in &pts {
        assert!(*y <= slope * t * 0.5, "{pts:?} slope {slope}");
    }
}

#[test]
fn scan_trivial_cases() {
    let region = Arc::new(Region::torus(TRI, 8).unwrap());
    let k = build_kernel(KernelFamily::PowerLaw { alpha: 0.5 }, region.clone()).unwrap();
    let dynamics = Dynamics::exclusion(k);
    let rec = scan_exceptional(Length::ZERO, &dynamics, &region, 2.0, RngStream::new(6, 0)).unwrap();
    assert_eq!(rec.fraction(), 1.0);
    assert_eq!(rec.intervals, vec![(0.0, 2.0)]);
    let event = ClusterEvent::one_arm(TRI, len(2.0));
    let open = Configuration::uniform(region.clone(), true);
    let rec = holding_times(&event, CellId::new(0, 0), &Dynamics::frozen(), open, 3.0, RngStream::new(6, 1)).unwrap();
    assert_eq!((rec.fraction(), rec.events), (1.0, 0));
    let closed = Configuration::uniform(region.clone(), false);
    let rec = holding_times(&event, CellId::new(3, 1), &Dynamics::frozen(), closed, 3.0, RngStream::new(6, 2)).unwrap();
    assert_eq!(rec.hit_blocks(10), 0);
    assert_eq!(rec.fraction(), 0.0);
}

#[test]
fn hit_blocks_counts_closed_blocks() {
    let rec = HoldingRecord { t_max: 1.0, intervals: vec![(0.1, 0.2), (0.5, 0.5), (0.95, 1.0)], events: 0, evaluations: 0 };
    // blocks of width 1/4: [0,.25] [.25,.5] [.5,.75] [.75,1]
    assert_eq!(rec.hit_blocks(4), 4);
    assert_eq!(rec.hit_blocks(1), 1);
    // tenths: 0 and 1 for the first interval, 4 and 5 for the point, 9
    assert_eq!(rec.hit_blocks(10), 5);
}

#[test]
fn hold_fraction_matches_static_probability() {
    let r = len(4.0);
    let region = Arc::new(fitting_torus(TRI, r).unwrap());
    let k = build_kernel(KernelFamily::PowerLaw { alpha: 0.5 }, region.clone()).unwrap();
    let dynamics = Dynamics::exclusion(k);
    let frac = hold_fraction(r, &dynamics, &region, 2.0, 2_000, RngStream::new(7, 0)).unwrap();
    let alpha1 = estimate_event(&ClusterEvent::one_arm(TRI, r), 0.5, 40_000, RngStream::new(7, 1));
    assert!(frac.sigma_distance(&alpha1) <= 3.0, "{frac:?} {alpha1:?}");
}

#[test]
fn nm_counts_bounds() {
    let r = len(3.0);
    let region = Arc::new(fitting_torus(TRI, r).unwrap());
    let k = build_kernel(KernelFamily::PowerLaw { alpha: 0.5 }, region.clone()).unwrap();
    let dynamics = Dynamics::exclusion(k);
    let (m, t_max) = (4u64, 2.0);
    let v = CellId::new(2, -1);
    let counts = replicate(RngStream::new(8, 0), 2_000, |i, _| {
        let n = nm_counts(v, r, &dynamics, &region, m, t_max, RngStream::new(8, 1).substream(i)).unwrap();
        assert!(n <= (m as f64 * t_max) as u64);
        n as f64 / (m as f64 * t_max)
    });
    let alpha1 = estimate_event(&ClusterEvent::one_arm(TRI, r), 0.5, 20_000, RngStream::new(8, 2));
    assert!(counts.mean >= alpha1.mean - 3.0 * counts.std_error.hypot(alpha1.std_error), "{counts:?} {alpha1:?}");
    let bonds = Arc::new(Region::torus(Model::SquareBond, 16).unwrap());
    let kb = build_kernel(KernelFamily::NearestNeighbour, bonds.clone()).unwrap();
    assert!(nm_counts(CellId::new(0, 1), len(2.0), &Dynamics::exclusion(kb), &bonds, 2, 1.0, RngStream::new(0, 0)).is_err());
    assert!(nm_counts(v, r, &dynamics, &region, 0, 1.0, RngStream::new(0, 0)).is_err());
}
