//! Bernoulli percolation: configurations, connectivity events, k-arm
//! events and Monte Carlo arm probabilities.

mod cluster;
mod fit;
mod state;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Annulus, CellId, Length, Model, Point, Rect};
use crate::rng::{replicate, Estimate, RngStream};

pub use cluster::{linked_within, tile_inside_open_square, tile_reach, ArmGeometry, ArmSpec, ClusterDomain, ClusterEvent, Colour};
pub use fit::{fit_loglog, LogLogFit};
pub use state::{sample_config, sample_config_with, CellState, Configuration, FnState, HashedConfig, Uniform};

/// Open path from the origin (site, or vertex for bonds) to ∂[-R,R]².
/// R = 0 holds by convention.
pub fn one_arm(omega: &Configuration, r: Length) -> bool {
    ClusterEvent::one_arm(omega.region().model(), r).holds(omega)
}

/// Open left-right crossing of [-n,n]².
pub fn crossing(omega: &Configuration, n: Length) -> bool {
    ClusterEvent::crossing(omega.region().model(), &Rect::square(Point::ORIGIN, n)).holds(omega)
}

/// k alternating arms across the annulus.
pub fn arm_event(omega: &Configuration, annulus: &Annulus, spec: &ArmSpec) -> Result<bool> {
    Ok(ClusterEvent::arms(omega.region().model(), annulus, spec)?.holds(omega))
}

/// A real-valued function of a configuration.
#[derive(Clone, Debug)]
pub enum Observable {
    /// 1 if the event holds, else 0.
    Event(Arc<ClusterEvent>),
    /// χ_S = Π ω(i) with ω = ±1.
    Parity(Vec<CellId>),
    /// 1 if a strict majority of the cells is open, else 0.
    Majority(Vec<CellId>),
}

impl Observable {
    pub fn event(e: ClusterEvent) -> Observable {
        Observable::Event(Arc::new(e))
    }

    pub fn value<S: CellState + ?Sized>(&self, s: &S) -> f64 {
        match self {
            Observable::Event(e) => f64::from(u8::from(e.holds(s))),
            Observable::Parity(cells) => {
                if cells.iter().filter(|&&c| !s.is_open(c)).count() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Observable::Majority(cells) => {
                let open = cells.iter().filter(|&&c| s.is_open(c)).count();
                f64::from(u8::from(2 * open > cells.len()))
            }
        }
    }

    /// Cells the observable depends on.
    pub fn support(&self) -> Vec<CellId> {
        match self {
            Observable::Event(e) => e.support().to_vec(),
            Observable::Parity(c) | Observable::Majority(c) => c.clone(),
        }
    }
}

/// Monte Carlo estimate of α_k(r,R) (or a half/quarter-plane variant) for
/// annuli centred at the origin. r ≥ R returns the exact value 1.
pub fn estimate_alpha(
    model: Model,
    spec: &ArmSpec,
    r: Length,
    big_r: Length,
    p: f64,
    n_samples: u64,
    rng: RngStream,
) -> Result<Estimate> {
    spec.requirement()?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0,1]")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let annulus = Annulus::centered(r, big_r);
    if annulus.is_empty() {
        return Ok(Estimate::exact(1.0, n_samples, rng));
    }
    let event = ClusterEvent::arms(model, &annulus, spec)?;
    Ok(estimate_event(&event, p, n_samples, rng))
}

/// Frequency of a prebuilt event under lazily sampled P_p configurations.
pub fn estimate_event(event: &ClusterEvent, p: f64, n_samples: u64, rng: RngStream) -> Estimate {
    replicate(rng, n_samples, |_, r| {
        let omega = HashedConfig::random(r, p);
        f64::from(u8::from(event.holds(&omega)))
    })
}

/// Quasi-multiplicativity ratio α(r1,r3) / (α(r1,r2)·α(r2,r3)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiMultReport {
    pub alpha_13: Estimate,
    pub alpha_12: Estimate,
    pub alpha_23: Estimate,
    /// None when an estimate is zero.
    pub ratio: Option<f64>,
    /// Delta-method standard error of the ratio.
    pub ratio_error: Option<f64>,
    pub zero_count: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn quasi_mult_diag(
    model: Model,
    spec: &ArmSpec,
    r1: Length,
    r2: Length,
    r3: Length,
    p: f64,
    n_samples: u64,
    rng: RngStream,
) -> Result<QuasiMultReport> {
    if !(r1 <= r2 && r2 <= r3) {
        return Err(Error::InvalidParameter("radii must be non-decreasing".into()));
    }
    let a13 = estimate_alpha(model, spec, r1, r3, p, n_samples, rng.substream(13))?;
    let a12 = estimate_alpha(model, spec, r1, r2, p, n_samples, rng.substream(12))?;
    // with r1 = r2 the first factor is exactly 1 and the other equals α(r1,r3)
    let a23 = if r1 == r2 { a13 } else { estimate_alpha(model, spec, r2, r3, p, n_samples, rng.substream(23))? };
    let zero = a13.is_zero() || a12.is_zero() || a23.is_zero();
    let (ratio, ratio_error) = if zero {
        (None, None)
    } else {
        let q = a13.mean / (a12.mean * a23.mean);
        let rel2 = if r1 == r2 {
            0.0
        } else {
            (a13.std_error / a13.mean).powi(2) + (a12.std_error / a12.mean).powi(2) + (a23.std_error / a23.mean).powi(2)
        };
        (Some(q), Some(q * rel2.sqrt()))
    };
    Ok(QuasiMultReport { alpha_13: a13, alpha_12: a12, alpha_23: a23, ratio, ratio_error, zero_count: zero })
}

/// ρ(l) = smallest tabulated r with r²·α̂_4(r) ≥ l.
pub fn rho(l: u64, alpha4_table: &BTreeMap<u32, Estimate>) -> Result<u32> {
    alpha4_table
        .iter()
        .find(|(&r, e)| (r as f64).powi(2) * e.mean >= l as f64)
        .map(|(&r, _)| r)
        .ok_or(Error::NotReached(l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{cells_in_window, Side};

    fn window(model: Model, r: i64) -> Arc<crate::lattice::Region> {
        Arc::new(cells_in_window(model, Length::from_int(r)))
    }

    #[test]
    fn uniform_configurations() {
        for m in [Model::TriangularSite, Model::SquareBond] {
            let w = window(m, 4);
            let open = Configuration::uniform(w.clone(), true);
            let closed = Configuration::uniform(w.clone(), false);
            assert_eq!(open.open_count(), w.len());
            assert!(one_arm(&open, Length::from_int(3)));
            assert!(!one_arm(&closed, Length::from_int(3)));
            assert!(crossing(&open, Length::from_int(3)));
            assert!(!crossing(&closed, Length::from_int(3)));
            let a = Annulus::centered(Length::from_int(1), Length::from_int(3));
            assert!(!arm_event(&open, &a, &ArmSpec::plane(4)).unwrap());
            assert!(arm_event(&open, &a, &ArmSpec::plane(1)).unwrap());
        }
    }

    #[test]
    fn empty_annulus_holds() {
        let w = window(Model::TriangularSite, 2);
        let closed = Configuration::uniform(w, false);
        let a = Annulus::centered(Length::from_int(2), Length::from_int(2));
        assert!(arm_event(&closed, &a, &ArmSpec::plane(4)).unwrap());
        assert!(one_arm(&closed, Length::ZERO));
    }

    #[test]
    fn odd_plane_arms_are_rejected() {
        assert!(matches!(ArmSpec::plane(3).requirement(), Err(Error::Unsupported(_))));
        assert_eq!(ArmSpec::half_plane(3, Side::Upper, Colour::Open).requirement().unwrap(), (2, 1));
    }

    #[test]
    fn straight_path_fixture() {
        // open row s = 0 from the origin to the right boundary
        let w = window(Model::TriangularSite, 4);
        let mut c = Configuration::uniform(w, false);
        for q in 0..=5 {
            c.set_cell(CellId::new(q, 0), true);
        }
        assert!(one_arm(&c, Length::from_int(4)));
        c.set_cell(CellId::new(2, 0), false);
        assert!(!one_arm(&c, Length::from_int(4)));
    }

    #[test]
    fn rho_picks_smallest_radius() {
        let s = RngStream::new(0, 0);
        let mut t = BTreeMap::new();
        t.insert(1, Estimate::exact(1.0, 1, s));
        t.insert(2, Estimate::exact(0.5, 1, s));
        t.insert(3, Estimate::exact(0.34, 1, s));
        assert_eq!(rho(1, &t).unwrap(), 1);
        assert_eq!(rho(2, &t).unwrap(), 2);
        assert_eq!(rho(3, &t).unwrap(), 3);
        assert!(rho(10, &t).is_err());
    }
}
