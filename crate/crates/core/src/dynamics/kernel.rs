//! Symmetric exchange kernels on a torus.

use std::sync::Arc;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{open_neighbours, CellId, Model, Region};

/// Largest torus (in cells) for which a kernel table is built.
pub const KERNEL_CELL_CAP: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    /// K(v,w) ∝ ‖v−w‖^{−(2+α)}.
    PowerLaw { alpha: f64 },
    /// K(v,w) ∝ ‖v−w‖^{−2} log(‖v−w‖+1)^{−(1+a)}.
    LogCorrected { a: f64 },
    /// Uniform over the 6 adjacent cells (for bonds: edges sharing an
    /// endpoint).
    NearestNeighbour,
}

impl KernelFamily {
    fn validate(self) -> Result<()> {
        match self {
            KernelFamily::PowerLaw { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::InvalidParameter(format!("power-law exponent {alpha} must be positive")))
            }
            KernelFamily::LogCorrected { a } if !(a > 0.0 && a.is_finite()) => {
                Err(Error::InvalidParameter(format!("log-kernel parameter {a} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Unnormalized weight at Euclidean distance `d` > 0.
    fn weight(self, d: f64) -> f64 {
        match self {
            KernelFamily::PowerLaw { alpha } => d.powf(-(2.0 + alpha)),
            KernelFamily::LogCorrected { a } => 1.0 / (d * d * (d + 1.0).ln().powf(1.0 + a)),
            KernelFamily::NearestNeighbour => 1.0,
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelFamily::PowerLaw { alpha } => write!(f, "alpha:{alpha}"),
            KernelFamily::LogCorrected { a } => write!(f, "log:{a}"),
            KernelFamily::NearestNeighbour => write!(f, "nn"),
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    /// Parses `alpha:<α>`, `log:<a>` or `nn`.
    fn from_str(s: &str) -> Result<KernelFamily> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = || {
            arg.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("kernel `{s}`: `{arg}` is not a number")))
        };
        let fam = match name {
            "alpha" | "power" => KernelFamily::PowerLaw { alpha: num()? },
            "log" => KernelFamily::LogCorrected { a: num()? },
            "nn" if arg.is_empty() => KernelFamily::NearestNeighbour,
            _ => return Err(Error::InvalidParameter(format!("unknown kernel `{s}` (use alpha:<x>, log:<x> or nn)"))),
        };
        fam.validate()?;
        Ok(fam)
    }
}

/// One row of the kernel, as displacements from a reference cell.
#[derive(Clone, Debug)]
struct Row {
    offsets: Vec<CellId>,
    probs: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

/// A translation-invariant symmetric kernel on a torus, with an alias table
/// per orientation class (one for sites, horizontal and vertical for bonds).
#[derive(Clone, Debug)]
pub struct Kernel {
    family: KernelFamily,
    region: Arc<Region>,
    normalizer: f64,
    rows: Vec<Row>,
}

/// Builds the kernel on a torus. Distances are minimum-image distances and
/// the normalizer is the reciprocal of the exact sum of weights over all
/// other cells.
pub fn build_kernel(family: KernelFamily, region: Arc<Region>) -> Result<Kernel> {
    family.validate()?;
    if region.torus_side().is_none() {
        return Err(Error::InvalidParameter("kernels live on a torus region".into()));
    }
    if region.len() > KERNEL_CELL_CAP {
        return Err(Error::SizeCap { what: "kernel cells", size: region.len(), cap: KERNEL_CELL_CAP });
    }
    let model = region.model();
    let refs: &[CellId] = match model {
        Model::TriangularSite => &[CellId::new(0, 0)],
        Model::SquareBond => &[CellId::new(1, 0), CellId::new(0, 1)],
    };
    let mut weights_per_row = Vec::new();
    for &v in refs {
        let (offsets, weights): (Vec<CellId>, Vec<f64>) = match family {
            KernelFamily::NearestNeighbour => {
                open_neighbours(model, v).iter().map(|w| (CellId::new(w.a - v.a, w.b - v.b), 1.0)).unzip()
            }
            _ => region
                .cells()
                .iter()
                .filter(|&&w| w != v)
                .map(|&w| (CellId::new(w.a - v.a, w.b - v.b), family.weight(region.distance(v, w))))
                .unzip(),
        };
        weights_per_row.push((offsets, weights));
    }
    let sum: f64 = weights_per_row[0].1.iter().sum();
    let normalizer = 1.0 / sum;
    let rows = weights_per_row
        .into_iter()
        .map(|(offsets, weights)| {
            let alias = WeightedAliasIndex::new(weights.clone())
                .map_err(|e| Error::InvalidParameter(format!("alias table: {e}")))?;
            let probs = weights.iter().map(|w| w * normalizer).collect();
            Ok(Row { offsets, probs, alias })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Kernel { family, region, normalizer, rows })
}

impl Kernel {
    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    /// c_α, c_a, or 1/6 for the nearest-neighbour kernel.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    fn row_of(&self, v: CellId) -> &Row {
        match self.region.model() {
            Model::SquareBond if !v.is_horizontal() => &self.rows[1],
            _ => &self.rows[0],
        }
    }

    /// K(v, w).
    pub fn value(&self, v: CellId, w: CellId) -> f64 {
        let (v, w) = (self.region.canonical(v), self.region.canonical(w));
        if v == w {
            return 0.0;
        }
        match self.family {
            KernelFamily::NearestNeighbour => {
                let hit = open_neighbours(self.region.model(), v).iter().any(|&n| self.region.canonical(n) == w);
                if hit {
                    self.normalizer
                } else {
                    0.0
                }
            }
            f => self.normalizer * f.weight(self.region.distance(v, w)),
        }
    }

    /// The row K(v, ·) as (cell index, probability) pairs.
    pub fn row(&self, v: CellId) -> Vec<(usize, f64)> {
        let row = self.row_of(v);
        row.offsets
            .iter()
            .zip(&row.probs)
            .map(|(d, &p)| (self.region.locate(v.translate(*d)).expect("torus cell"), p))
            .collect()
    }

    /// Σ_w K(v, w).
    pub fn row_sum(&self, v: CellId) -> f64 {
        self.row_of(v).probs.iter().sum()
    }

    /// Index of a partner w ~ K(v, ·) for the cell at index `v`.
    #[inline]
    pub fn sample_index<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> usize {
        let c = self.region.cell(v);
        let row = self.row_of(c);
        let d = row.offsets[row.alias.sample(rng)];
        self.region.locate(c.translate(d)).expect("torus cell")
    }

    /// A partner w ~ K(v, ·); never v itself.
    pub fn sample<R: Rng + ?Sized>(&self, v: CellId, rng: &mut R) -> CellId {
        let i = self.region.locate(v).expect("cell of the kernel's torus");
        self.region.cell(self.sample_index(i, rng))
    }
}

/// K(v, ·) sampled once.
pub fn kernel_row_sample<R: Rng + ?Sized>(kernel: &Kernel, v: CellId, rng: &mut R) -> CellId {
    kernel.sample(v, rng)
}
