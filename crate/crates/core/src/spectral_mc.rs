//! Monte Carlo spectral masses through coupled configurations.
//!
//! For ω and ω′ equal on a set B and independent elsewhere,
//! E[f(ω) f(ω′)] = E[E[f | F_B]²] = 𝑸̂_f[S ⊆ B].

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{tile_meets_half_plane, Annulus, CellId, Length, Model, Point, Side};
use crate::percolation::{ArmSpec, CellState, ClusterEvent, HashedConfig, Observable};
use crate::rng::{replicate, replicate_vec, Estimate, RngStream};
use crate::spectral_exact::center_in_open_square;

/// Two P_{1/2} configurations that agree on `shared` and are independent
/// off it.
#[derive(Clone, Copy, Debug)]
pub struct CoupledPair<B: Fn(CellId) -> bool> {
    pub shared: B,
    pub omega: HashedConfig,
    pub omega_prime: HashedConfig,
}

/// ω′ as a cell state: ω on the shared set, its own bits elsewhere.
pub struct SecondView<'a, B: Fn(CellId) -> bool>(&'a CoupledPair<B>);

impl<B: Fn(CellId) -> bool> CellState for SecondView<'_, B> {
    #[inline]
    fn is_open(&self, c: CellId) -> bool {
        if (self.0.shared)(c) {
            self.0.omega.is_open(c)
        } else {
            self.0.omega_prime.is_open(c)
        }
    }
}

impl<B: Fn(CellId) -> bool> CoupledPair<B> {
    pub fn random<R: Rng>(rng: &mut R, shared: B) -> Self {
        CoupledPair { shared, omega: HashedConfig::random(rng, 0.5), omega_prime: HashedConfig::random(rng, 0.5) }
    }

    pub fn first(&self) -> &HashedConfig {
        &self.omega
    }

    pub fn second(&self) -> SecondView<'_, B> {
        SecondView(self)
    }

    /// The same pair with the roles of ω and ω′ exchanged.
    pub fn swapped(self) -> Self {
        CoupledPair { shared: self.shared, omega: self.omega_prime, omega_prime: self.omega }
    }
}

/// Mean of f(ω) f(ω′) over coupled pairs sharing the cells where `shared`
/// holds.
pub fn coupled_second_moment(
    f: &Observable,
    shared: impl Fn(CellId) -> bool + Sync,
    n_samples: u64,
    rng: RngStream,
) -> Estimate {
    replicate(rng, n_samples, |_, r| {
        let pair = CoupledPair::random(r, &shared);
        let x = f.value(pair.first());
        if x == 0.0 {
            return 0.0;
        }
        x * f.value(&pair.second())
    })
}

/// 𝑸̂_f[S ⊆ B].
pub fn spectral_mass_inside(f: &Observable, inside: &[CellId], n_samples: u64, rng: RngStream) -> Estimate {
    let b: HashSet<CellId> = inside.iter().copied().collect();
    coupled_second_moment(f, |c| b.contains(&c), n_samples, rng)
}

/// Largest number of hit sets in [`spectral_mass_hit_avoid`].
pub const MAX_MC_HIT_SETS: usize = 8;

/// 𝑸̂_f[S meets every J_j, S ∩ W = ∅] as the alternating sum over K ⊆ {1..n}
/// of 𝑸̂_f[S ⊆ (∪_{j∈K} J_j ∪ W)^c]. All 2^n terms of a replicate share the
/// same pair of configurations, so the error bar is that of the combined
/// per-replicate statistic.
pub fn spectral_mass_hit_avoid(
    f: &Observable,
    hit: &[Vec<CellId>],
    avoid: &[CellId],
    n_samples: u64,
    rng: RngStream,
) -> Result<Estimate> {
    if hit.len() > MAX_MC_HIT_SETS {
        return Err(Error::SizeCap { what: "hit sets", size: hit.len(), cap: MAX_MC_HIT_SETS });
    }
    // label 0 for W, 1 + j for J_j
    let mut label = std::collections::HashMap::new();
    for &c in avoid {
        if label.insert(c, 0usize).is_some() {
            return Err(Error::Overlap(format!("{c:?} listed twice in W")));
        }
    }
    for (j, set) in hit.iter().enumerate() {
        for &c in set {
            if label.insert(c, j + 1).is_some() {
                return Err(Error::Overlap(format!("{c:?} belongs to two of the sets")));
            }
        }
    }
    let n = hit.len();
    Ok(replicate(rng, n_samples, |_, r| {
        let omega = HashedConfig::random(r, 0.5);
        let other = HashedConfig::random(r, 0.5);
        let x = f.value(&omega);
        if x == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for k in 0u32..1 << n {
            let free = |c: CellId| match label.get(&c) {
                Some(0) => true,
                Some(&j) => k >> (j - 1) & 1 == 1,
                None => false,
            };
            let pair = CoupledPair { shared: |c| !free(c), omega, omega_prime: other };
            let term = x * f.value(&pair.second());
            sum += if k.count_ones() % 2 == 0 { term } else { -term };
        }
        sum
    }))
}

/// r0 ↦ 𝑸̂_{f_R}[S ⊆ (−r0,r0)²] for the one-arm function of [−R,R]², the box
/// holding the cells whose centre lies in the open square. One pair of
/// configurations per replicate serves every r0.
pub fn clustering_profile(
    model: Model,
    big_r: Length,
    r0_list: &[Length],
    n_samples: u64,
    rng: RngStream,
) -> Result<Vec<(Length, Estimate)>> {
    if r0_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("r0 values must be increasing".into()));
    }
    if r0_list.iter().any(|&r| r < Length::ZERO || r > big_r + Length::from_int(2)) {
        return Err(Error::InvalidParameter("r0 values must lie in [0, R+2]".into()));
    }
    let event = ClusterEvent::one_arm(model, big_r);
    let moments = replicate_vec(rng, n_samples, r0_list.len(), |_, r, out| {
        let omega = HashedConfig::random(r, 0.5);
        let other = HashedConfig::random(r, 0.5);
        if !event.holds(&omega) {
            return;
        }
        for (slot, &r0) in out.iter_mut().zip(r0_list) {
            let pair = CoupledPair { shared: |c| center_in_open_square(model, c, r0), omega, omega_prime: other };
            *slot = f64::from(u8::from(event.holds(&pair.second())));
        }
    });
    Ok(r0_list.iter().zip(&moments).map(|(&r0, m)| (r0, m.estimate(rng))).collect())
}

/// α̂_4(r1,r2) and β̂_4(r1,r2) = P[ω, ω′ ∈ A_4(r1,r2)] from the same pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourArmReport {
    pub alpha4: Estimate,
    pub beta4: Estimate,
}

/// β_4 with ω and ω′ sharing the cells whose tile meets the closed
/// half-plane `side` through the origin (straddling tiles are shared).
pub fn conditioned_fourarm(
    model: Model,
    r1: Length,
    r2: Length,
    side: Side,
    n_samples: u64,
    rng: RngStream,
) -> Result<FourArmReport> {
    conditioned_fourarm_with(model, r1, r2, |c| tile_meets_half_plane(model, c, side, Point::ORIGIN), n_samples, rng)
}

/// β_4 for an arbitrary shared set.
pub fn conditioned_fourarm_with(
    model: Model,
    r1: Length,
    r2: Length,
    shared: impl Fn(CellId) -> bool + Sync,
    n_samples: u64,
    rng: RngStream,
) -> Result<FourArmReport> {
    if !(Length::from_int(1) <= r1 && r1 < r2) {
        return Err(Error::InvalidParameter("need 1 ≤ r1 < r2".into()));
    }
    let event = ClusterEvent::arms(model, &Annulus::centered(r1, r2), &ArmSpec::plane(4))?;
    let m = replicate_vec(rng, n_samples, 2, |_, r, out| {
        let pair = CoupledPair::random(r, &shared);
        if event.holds(pair.first()) {
            out[0] = 1.0;
            out[1] = f64::from(u8::from(event.holds(&pair.second())));
        }
    });
    Ok(FourArmReport { alpha4: m[0].estimate(rng), beta4: m[1].estimate(rng) })
}
