use std::sync::Arc;

use dynperc::dynamics::{build_kernel, estimate_kt, iid_evolve, Dynamics, KernelFamily, Trajectory};
use dynperc::lattice::{Annulus, AnnulusKind, CellId, Length, Model, Point, Region};
use dynperc::percolation::{sample_config_with, ClusterEvent, Observable};
use dynperc::rng::replicate;
use dynperc::spectral_exact::*;
use dynperc::{Error, RngStream};
use proptest::prelude::*;
use rand::Rng;

const TRI: Model = Model::TriangularSite;

fn line(n: i64) -> Vec<CellId> {
    (0..n).map(|q| CellId::new(q, 0)).collect()
}

fn table(values: Vec<f64>) -> BooleanTable {
    let n = values.len().trailing_zeros() as i64;
    BooleanTable::new(TRI, line(n), values).unwrap()
}

fn len(x: f64) -> Length {
    Length::from_f64(x).unwrap()
}

/// ĥ(S) straight from the definition, O(4^n).
fn brute_coefficients(h: &BooleanTable) -> Vec<f64> {
    let n = h.n();
    let size = 1usize << n;
    (0..size)
        .map(|s| {
            let sum: f64 = (0..size)
                .map(|x| {
                    let closed_in_s = (s & !x).count_ones();
                    let chi = if closed_in_s % 2 == 0 { 1.0 } else { -1.0 };
                    h.values()[x] * chi
                })
                .sum();
            sum / size as f64
        })
        .collect()
}

/// E[E[h | F_B]²] by summing over the states of B, B the complement of `free`.
fn brute_conditional(h: &BooleanTable, free: u32) -> f64 {
    let n = h.n();
    let kept: Vec<usize> = (0..n).filter(|i| free >> i & 1 == 0).collect();
    let freed: Vec<usize> = (0..n).filter(|i| free >> i & 1 == 1).collect();
    let mut total = 0.0;
    for y in 0u32..1 << kept.len() {
        let base = kept.iter().enumerate().filter(|(k, _)| y >> k & 1 == 1).fold(0usize, |a, (_, &i)| a | 1 << i);
        let mut avg = 0.0;
        for z in 0u32..1 << freed.len() {
            let x = freed.iter().enumerate().filter(|(k, _)| z >> k & 1 == 1).fold(base, |a, (_, &i)| a | 1 << i);
            avg += h.values()[x];
        }
        avg /= (1u32 << freed.len()) as f64;
        total += avg * avg;
    }
    total / (1u32 << kept.len()) as f64
}

#[test]
fn constant_function_has_all_mass_on_the_empty_set() {
    let m = walsh_transform(&table(vec![1.0; 8])).unwrap();
    assert_eq!(m.coefficient(0), 1.0);
    assert!(m.coefficients()[1..].iter().all(|&c| c == 0.0));
}

#[test]
fn dictator_and_two_bit_and() {
    let m = walsh_transform(&named_function(TRI, "dictator").unwrap()).unwrap();
    assert_eq!(m.coefficients(), &[0.5, 0.5]);
    let m = walsh_transform(&named_function(TRI, "and2").unwrap()).unwrap();
    assert_eq!(m.coefficients(), &[0.25; 4]);
}

#[test]
fn majority_spectral_weights() {
    let m = walsh_transform(&named_function(TRI, "majority3").unwrap()).unwrap();
    let p = m.probabilities().unwrap();
    assert!((p[0] - 0.5).abs() < 1e-15);
    for s in [1, 2, 4, 7] {
        assert!((p[s] - 0.125).abs() < 1e-15, "{s}");
    }
    for s in [3, 5, 6] {
        assert_eq!(p[s], 0.0);
    }
}

#[test]
fn fast_transform_matches_definition() {
    let mut rng = RngStream::new(5, 0).rng();
    for n in 0..=8 {
        let h = table((0..1 << n).map(|_| rng.random_range(-2.0..2.0)).collect());
        let fast = walsh_transform(&h).unwrap();
        for (a, b) in fast.coefficients().iter().zip(brute_coefficients(&h)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn parity_is_a_single_character() {
    let h = named_function(TRI, "parity2").unwrap();
    let m = walsh_transform(&h).unwrap();
    assert_eq!(m.coefficients(), &[0.0, 0.0, 0.0, 1.0]);
    let mut rng = RngStream::new(1, 1).rng();
    for _ in 0..100 {
        assert_eq!(spectral_sample(&m, &mut rng).unwrap(), 3);
    }
}

#[test]
fn zero_function_cannot_be_sampled() {
    let m = walsh_transform(&table(vec![0.0; 4])).unwrap();
    let mut rng = RngStream::new(1, 1).rng();
    assert_eq!(spectral_sample(&m, &mut rng), Err(Error::ZeroFunction));
    assert!(SpectralSampler::new(&m).is_err());
    assert_eq!(m.probabilities(), Err(Error::ZeroFunction));
}

#[test]
fn size_cap() {
    let cells: Vec<CellId> = (0..25).map(|q| CellId::new(q, 0)).collect();
    assert!(matches!(BooleanTable::from_fn(TRI, cells, |_| 0.0), Err(Error::SizeCap { .. })));
    assert!(BooleanTable::new(TRI, line(2), vec![0.0; 3]).is_err());
}

#[test]
fn majority_sampling_frequencies() {
    let m = walsh_transform(&named_function(TRI, "majority3").unwrap()).unwrap();
    let p = m.probabilities().unwrap();
    let n = 100_000u32;
    let mut counts = [0u32; 8];
    let mut rng = RngStream::new(17, 3).rng();
    for _ in 0..n {
        counts[spectral_sample(&m, &mut rng).unwrap() as usize] += 1;
    }
    let sampler = SpectralSampler::new(&m).unwrap();
    let mut alias_counts = [0u32; 8];
    for _ in 0..n {
        alias_counts[sampler.sample(&mut rng) as usize] += 1;
    }
    for s in 0..8 {
        let sd = (p[s] * (1.0 - p[s]) / n as f64).sqrt();
        for c in [counts[s], alias_counts[s]] {
            let f = c as f64 / n as f64;
            if p[s] == 0.0 {
                assert_eq!(c, 0);
            } else {
                assert!((f - p[s]).abs() <= 4.0 * sd, "S = {s}: {f} vs {}", p[s]);
            }
        }
    }
}

#[test]
fn nonnegative_function_empty_set_mass() {
    let h = BooleanTable::from_event(TRI, ClusterEvent::one_arm(TRI, len(1.25))).unwrap();
    let m = walsh_transform(&h).unwrap();
    let p = m.probabilities().unwrap();
    let e = h.mean();
    assert!((p[0] - e * e / h.second_moment()).abs() < 1e-12);
}

#[test]
fn hex_board_size_geometry_table_matches_enumeration() {
    let h = named_function(TRI, "hex:3").unwrap();
    assert_eq!(h.n(), 9);
    let m = walsh_transform(&h).unwrap();
    let boxes = [len(1.0), len(1.5), len(2.5), len(40.0)];
    let rows = size_geometry_table(&m, &boxes).unwrap();
    let e2 = h.second_moment();
    let coeffs = brute_coefficients(&h);
    let pos: Vec<(f64, f64)> = h.cells().iter().map(|c| (c.a as f64 + 0.5 * c.b as f64, 0.75f64.sqrt() * c.b as f64)).collect();
    for k in 0..=9u32 {
        let mut total = 0.0;
        let mut split = vec![(0.0, 0.0); boxes.len()];
        for s in 0usize..512 {
            if s.count_ones() != k {
                continue;
            }
            let w = coeffs[s] * coeffs[s] / e2;
            total += w;
            for (j, b) in boxes.iter().enumerate() {
                let r = b.to_f64();
                let inside = (0..9).filter(|i| s >> i & 1 == 1).all(|i| pos[i].0.abs() < r && pos[i].1.abs() < r);
                if inside {
                    split[j].0 += w;
                } else {
                    split[j].1 += w;
                }
            }
        }
        let row = &rows[k as usize];
        assert!((row.total - total).abs() < 1e-12);
        for j in 0..boxes.len() {
            assert!((row.split[j].0 - split[j].0).abs() < 1e-12);
            assert!((row.split[j].1 - split[j].1).abs() < 1e-12);
            assert!((row.split[j].0 + row.split[j].1 - row.total).abs() < 1e-12);
        }
        // the largest box holds every cell
        assert_eq!(row.split[3].1, 0.0);
    }
    let sum: f64 = rows.iter().map(|r| r.total).sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn jp_identity_small_cases() {
    // χ_{1} with J = [{1}]
    let chi = BooleanTable::from_fn(TRI, line(1), |x| if x == 1 { 1.0 } else { -1.0 }).unwrap();
    let r = jp_identity_check(&chi, &[vec![CellId::new(0, 0)]], &[]).unwrap();
    assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 1.0).abs() < 1e-15);
    // the zero function
    let zero = table(vec![0.0; 8]);
    let r = jp_identity_check(&zero, &[vec![CellId::new(0, 0)], vec![CellId::new(2, 0)]], &[CellId::new(1, 0)]).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    // overlapping sets
    let h = named_function(TRI, "majority3").unwrap();
    let e = jp_identity_check(&h, &[vec![CellId::new(0, 0)], vec![CellId::new(0, 0)]], &[]);
    assert!(matches!(e, Err(Error::Overlap(_))));
    let e = jp_identity_check(&h, &[vec![CellId::new(0, 0)]], &[CellId::new(0, 0)]);
    assert!(matches!(e, Err(Error::Overlap(_))));
    assert!(jp_identity_check(&h, &[vec![CellId::new(9, 9)]], &[]).is_err());
}

#[test]
fn conditional_second_moments_match_enumeration() {
    let mut rng = RngStream::new(8, 8).rng();
    for _ in 0..50 {
        let n = rng.random_range(1..=7);
        let h = table((0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect());
        let free = rng.random_range(0..1u32 << n);
        assert!((h.conditional_second_moment(free) - brute_conditional(&h, free)).abs() < 1e-12);
    }
}

#[test]
fn iid_correlation_limits_and_monte_carlo() {
    let h = named_function(TRI, "majority3").unwrap();
    let m = walsh_transform(&h).unwrap();
    assert!((iid_correlation_exact(&m, 0.0).unwrap() - h.second_moment()).abs() < 1e-15);
    assert!((iid_correlation_exact(&m, f64::INFINITY).unwrap() - 0.25).abs() < 1e-15);
    assert!(iid_correlation_exact(&m, -1.0).is_err());
    let exact = iid_correlation_exact(&m, 1.0).unwrap();
    let region = Arc::new(Region::torus(TRI, 4).unwrap());
    let maj = Observable::Majority(line(3));
    let est = replicate(RngStream::new(3, 4), 200_000, |_, r| {
        let w0 = sample_config_with(region.clone(), 0.5, r);
        let w1 = iid_evolve(&w0, 1.0, 0.5, r).unwrap();
        maj.value(&w0) * maj.value(&w1)
    });
    assert!((est.mean - exact).abs() <= 3.0 * est.std_error, "{est:?} vs {exact}");
}

#[test]
fn exclusion_correlation_at_time_zero_and_for_characters() {
    let region = Arc::new(Region::torus(TRI, 8).unwrap());
    let kernel = build_kernel(KernelFamily::PowerLaw { alpha: 0.5 }, region).unwrap();
    let h = named_function(TRI, "majority3").unwrap();
    let m = walsh_transform(&h).unwrap();
    let e = exclusion_correlation_spectral(&m, &kernel, 0.0, 10, RngStream::new(1, 0)).unwrap();
    assert_eq!((e.mean, e.std_error), (h.second_moment(), 0.0));
    // h = χ_S for S = two cells
    let s = vec![CellId::new(0, 0), CellId::new(1, 0)];
    let chi = BooleanTable::from_fn(TRI, s.clone(), |x| if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
    let mc = walsh_transform(&chi).unwrap();
    let lhs = exclusion_correlation_spectral(&mc, &kernel, 0.5, 40_000, RngStream::new(2, 0)).unwrap();
    let rhs = estimate_kt(&s, &s, &kernel, 0.5, 40_000, RngStream::new(2, 1)).unwrap();
    assert!(lhs.sigma_distance(&rhs) <= 3.0, "{lhs:?} {rhs:?}");
}

#[test]
fn exclusion_correlation_matches_direct_simulation_for_hex_board() {
    let region = Arc::new(Region::torus(TRI, 8).unwrap());
    let kernel = build_kernel(KernelFamily::PowerLaw { alpha: 0.5 }, region.clone()).unwrap();
    let h = named_function(TRI, "hex:3").unwrap();
    let m = walsh_transform(&h).unwrap();
    let t = 0.4;
    let spectral = exclusion_correlation_spectral(&m, &kernel, t, 20_000, RngStream::new(4, 0)).unwrap();
    let dynamics = Dynamics::exclusion(kernel.clone());
    let f = Observable::event(ClusterEvent::rhombus_crossing(3));
    let direct = replicate(RngStream::new(4, 1), 20_000, |i, r| {
        let w0 = sample_config_with(region.clone(), 0.5, r);
        let x = f.value(&w0);
        let mut traj = Trajectory::new(&dynamics, w0, RngStream::new(4, 100 + i)).unwrap();
        x * f.value(traj.advance_to(t))
    });
    let tol = 3.0 * (spectral.std_error + direct.std_error);
    assert!((spectral.mean - direct.mean).abs() <= tol, "{spectral:?} {direct:?}");
    // E[h]² < value < E[h²]
    assert!(spectral.mean < h.second_moment() && spectral.mean > h.mean().powi(2));
}

fn one_arm_table(r: f64) -> BooleanTable {
    BooleanTable::from_event(TRI, ClusterEvent::one_arm(TRI, len(r))).unwrap()
}

#[test]
fn empty_structure_bounds_the_second_moment() {
    let h = one_arm_table(2.0);
    let s = AnnulusStructure { window: len(2.0), r0: len(2.0), annuli: vec![], hit_centered: false };
    let b = annulus_bound_check(&h, &s, 20_000, RngStream::new(6, 0)).unwrap();
    assert!((b.lhs - h.second_moment()).abs() < 1e-12);
    assert!(b.factors.is_empty());
    assert_eq!(b.rhs.mean, b.alpha1.mean);
    assert!(b.holds_within(3.0));
}

#[test]
fn covering_annulus_leaves_no_room_for_the_full_character() {
    let cells = line(3);
    let chi = BooleanTable::from_fn(TRI, cells, |x| if x.count_ones() % 2 == 1 { -1.0 } else { 1.0 }).unwrap();
    let s = AnnulusStructure {
        window: len(4.0),
        r0: Length::ZERO,
        annuli: vec![Annulus::centered(len(1.0), len(4.0))],
        hit_centered: false,
    };
    // the annulus touches every tile but the origin's, so only S ⊆ {origin} survives
    let compat = s.compatibility(TRI, chi.cells());
    assert_eq!(compat.forbidden, 0b110);
    let b = annulus_bound_check(&chi, &s, 2_000, RngStream::new(6, 1)).unwrap();
    assert_eq!(b.lhs, 0.0);
}

#[test]
fn structure_validation() {
    let bad_overlap = AnnulusStructure {
        window: len(4.0),
        r0: len(1.0),
        annuli: vec![Annulus::centered(len(1.0), len(4.0))],
        hit_centered: false,
    };
    assert!(matches!(bad_overlap.validate(TRI), Err(Error::InvalidStructure(_))));
    let off_centre = AnnulusStructure {
        window: len(4.0),
        r0: Length::ZERO,
        annuli: vec![Annulus::new(Point::new(len(1.0), Length::ZERO), len(1.0), len(2.0), AnnulusKind::Centered).unwrap()],
        hit_centered: false,
    };
    assert!(off_centre.validate(TRI).is_err());
    let two = AnnulusStructure {
        window: len(8.0),
        r0: Length::ZERO,
        annuli: vec![Annulus::centered(len(2.0), len(4.0)), Annulus::centered(len(3.0), len(6.0))],
        hit_centered: false,
    };
    assert!(two.validate(TRI).is_err());
    let ok = AnnulusStructure {
        window: len(16.0),
        r0: len(8.0),
        annuli: vec![
            Annulus::centered(len(11.0), len(16.0)),
            Annulus::new(Point::new(len(8.0), Length::ZERO), len(1.0), len(1.5), AnnulusKind::R0Decorating).unwrap(),
            Annulus::new(Point::new(len(16.0), len(16.0)), len(1.0), len(4.0), AnnulusKind::Corner).unwrap(),
        ],
        hit_centered: false,
    };
    assert!(ok.validate(TRI).is_err(), "corner annulus meets the centered one");
    let ok = AnnulusStructure { annuli: ok.annuli[..2].to_vec(), ..ok };
    ok.validate(TRI).unwrap();
}

#[test]
fn decorated_compatibility_exempts_cells_inside_the_box() {
    // a decoration centred at (2, 0) with r0 = 2: cells inside (−2,2)² whose
    // tile meets it stay allowed, cells outside do not
    let s = AnnulusStructure {
        window: len(6.0),
        r0: len(2.0),
        annuli: vec![Annulus::new(Point::new(len(2.0), Length::ZERO), len(1.0), len(1.5), AnnulusKind::R0Decorating).unwrap()],
        hit_centered: false,
    };
    let cells = vec![CellId::new(1, 0), CellId::new(2, 0), CellId::new(3, 0), CellId::new(5, 0)];
    let c = s.compatibility(TRI, &cells);
    // (1,0) meets the annulus but lies inside the box; (2,0) is the centre,
    // inside the inner square; (3,0) meets it outside the box; (5,0) is clear
    assert_eq!(c.forbidden, 0b0100);
    assert_eq!(c.hits, vec![0b0010]);
    assert!(c.admits(0b0011));
    assert!(!c.admits(0b0001));
    assert!(!c.admits(0b0110));
}

#[test]
fn gps_switch_adds_a_hit_requirement() {
    let h = one_arm_table(2.0);
    let mut s = AnnulusStructure {
        window: len(2.0),
        r0: Length::ZERO,
        annuli: vec![Annulus::centered(len(1.0), len(2.0))],
        hit_centered: false,
    };
    s.validate(TRI).unwrap();
    let a = annulus_bound_check(&h, &s, 20_000, RngStream::new(7, 0)).unwrap();
    s.hit_centered = true;
    let b = annulus_bound_check(&h, &s, 20_000, RngStream::new(7, 0)).unwrap();
    assert!(b.lhs <= a.lhs + 1e-15);
    assert!(a.holds_within(3.0) && b.holds_within(3.0), "{a:?}");
}

fn random_table(n: usize, seed: u64) -> BooleanTable {
    let mut rng = RngStream::new(seed, 77).rng();
    table((0..1usize << n).map(|_| rng.random_range(-3.0..3.0)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parseval_and_involution(n in 0usize..=10, seed in any::<u64>()) {
        let h = random_table(n, seed);
        let m = walsh_transform(&h).unwrap();
        prop_assert!((m.total_mass() - h.second_moment()).abs() < 1e-12 * (1.0 + h.second_moment()));
        prop_assert!((m.coefficient(0) - h.mean()).abs() < 1e-12);
        let back = inverse_walsh(&m);
        for (a, b) in back.values().iter().zip(h.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jp_identity_on_random_instances(n in 1usize..=10, seed in any::<u64>(), labels in proptest::collection::vec(0u8..6, 10)) {
        // label 0: W, 1..=4: J_j, 5: unused
        let h = random_table(n, seed);
        let cells = h.cells().to_vec();
        let mut hit = vec![Vec::new(); 4];
        let mut avoid = Vec::new();
        for (i, &c) in cells.iter().enumerate() {
            match labels[i] {
                0 => avoid.push(c),
                j @ 1..=4 => hit[j as usize - 1].push(c),
                _ => {}
            }
        }
        let r = jp_identity_check(&h, &hit, &avoid).unwrap();
        prop_assert!(r.max_abs_diff <= 1e-12, "{r:?}");
        // independent left side from the definition
        let coeffs = brute_coefficients(&h);
        let (js, w) = disjoint_masks(&h, &hit, &avoid).unwrap();
        let lhs: f64 = (0..coeffs.len() as u32)
            .filter(|&s| s & w == 0 && js.iter().all(|&j| s & j != 0))
            .map(|s| coeffs[s as usize].powi(2))
            .sum();
        prop_assert!((lhs - r.lhs).abs() < 1e-12);
    }

    #[test]
    fn size_profile_sums_to_the_second_moment(n in 0usize..=8, seed in any::<u64>()) {
        let h = random_table(n, seed);
        let m = walsh_transform(&h).unwrap();
        let s: f64 = m.size_profile().iter().sum();
        prop_assert!((s - h.second_moment()).abs() < 1e-12 * (1.0 + s));
    }
}
