//! Exact Walsh-Fourier analysis of functions of at most 24 cells.
//!
//! A configuration of the cells `c_0, …, c_{n-1}` is a bitmask x with bit i
//! set when c_i is open (ω_i = +1). A subset S is a bitmask too, and
//! χ_S(ω) = Π_{i∈S} ω_i.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::dynamics::{for_each_event, Kernel};
use crate::error::{Error, Result};
use crate::lattice::{
    cell_center, percolation_disjoint, Annulus, AnnulusKind, CellId, Length, Model, Point, Rect, Shape, Side, Surd,
    Tile,
};
use crate::percolation::{ArmSpec, CellState, ClusterEvent, Colour, Observable};
use crate::rng::{replicate, Estimate, RngStream};
use crate::spectral_mc::coupled_second_moment;

/// Largest number of cells of an exact table.
pub const MAX_BITS: usize = 24;

/// A real function of the states of `cells`, as a full truth table.
#[derive(Clone, Debug, PartialEq)]
pub struct BooleanTable {
    model: Model,
    cells: Vec<CellId>,
    values: Vec<f64>,
}

fn check_bits(n: usize) -> Result<()> {
    if n > MAX_BITS {
        return Err(Error::SizeCap { what: "table cells", size: n, cap: MAX_BITS });
    }
    Ok(())
}

/// The state of a table's cells under one configuration bitmask.
struct MaskState<'a> {
    cells: &'a [CellId],
    x: u32,
}

impl CellState for MaskState<'_> {
    fn is_open(&self, c: CellId) -> bool {
        match self.cells.binary_search(&c) {
            Ok(i) => self.x >> i & 1 == 1,
            Err(_) => false,
        }
    }
}

impl BooleanTable {
    /// A table from explicit values; `values[x]` is h at configuration x.
    pub fn new(model: Model, cells: Vec<CellId>, values: Vec<f64>) -> Result<BooleanTable> {
        check_bits(cells.len())?;
        if values.len() != 1usize << cells.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for {} cells (need 2^n)",
                values.len(),
                cells.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("table values must be finite".into()));
        }
        let mut seen = HashSet::new();
        if let Some(c) = cells.iter().find(|&&c| !seen.insert(c)) {
            return Err(Error::InvalidParameter(format!("cell {c:?} listed twice")));
        }
        Ok(BooleanTable { model, cells, values })
    }

    /// Tabulates `f(x)` over all configuration bitmasks.
    pub fn from_fn(model: Model, cells: Vec<CellId>, f: impl Fn(u32) -> f64) -> Result<BooleanTable> {
        check_bits(cells.len())?;
        let values = (0..1u32 << cells.len()).map(f).collect();
        BooleanTable::new(model, cells, values)
    }

    /// Tabulates an observable over the given cells (sorted first). Cells
    /// outside the list count as closed, so the list should cover the
    /// observable's support.
    pub fn from_observable(model: Model, mut cells: Vec<CellId>, f: &Observable) -> Result<BooleanTable> {
        cells.sort_unstable();
        cells.dedup();
        check_bits(cells.len())?;
        let support: HashSet<CellId> = cells.iter().copied().collect();
        if let Some(c) = f.support().into_iter().find(|c| !support.contains(c)) {
            return Err(Error::RegionMismatch(format!("observable reads {c:?} outside the table")));
        }
        let values = (0..1u32 << cells.len()).map(|x| f.value(&MaskState { cells: &cells, x })).collect();
        Ok(BooleanTable { model, cells, values })
    }

    /// Indicator of an event, tabulated over its own support.
    pub fn from_event(model: Model, event: ClusterEvent) -> Result<BooleanTable> {
        let cells = event.support().to_vec();
        BooleanTable::from_observable(model, cells, &Observable::event(event))
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bit index of a cell.
    pub fn bit(&self, c: CellId) -> Option<usize> {
        self.cells.iter().position(|&d| d == c)
    }

    /// Bitmask of a set of cells; every cell must be in the table.
    pub fn mask(&self, set: &[CellId]) -> Result<u32> {
        set.iter().try_fold(0u32, |m, &c| {
            let i = self.bit(c).ok_or_else(|| Error::RegionMismatch(format!("{c:?} is not a table cell")))?;
            Ok(m | 1 << i)
        })
    }

    /// E[h] under P_{1/2}.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// E[h²] under P_{1/2}.
    pub fn second_moment(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    /// E[E[h | F_B]²] where B is the complement of the cells in `free`.
    pub fn conditional_second_moment(&self, free: u32) -> f64 {
        let mut a = self.values.clone();
        for i in 0..self.n() {
            if free >> i & 1 == 0 {
                continue;
            }
            let bit = 1usize << i;
            for x in 0..a.len() {
                if x & bit == 0 {
                    let m = 0.5 * (a[x] + a[x | bit]);
                    a[x] = m;
                    a[x | bit] = m;
                }
            }
        }
        a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64
    }
}

/// Unnormalized fast Walsh-Hadamard butterfly: a[S] ← Σ_x (−1)^{|S∩x|} a[x].
fn hadamard(a: &mut [f64]) {
    let mut h = 1;
    while h < a.len() {
        for block in a.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*u + *v, *u - *v);
                *u = s;
                *v = d;
            }
        }
        h *= 2;
    }
}

/// The Walsh-Fourier coefficients ĥ(S) of a table.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    model: Model,
    cells: Vec<CellId>,
    coefficients: Vec<f64>,
    total_mass: f64,
}

/// ĥ(S) = E[h χ_S] for every S, in O(n 2^n).
pub fn walsh_transform(h: &BooleanTable) -> Result<SpectralMeasure> {
    check_bits(h.n())?;
    let mut a = h.values.clone();
    hadamard(&mut a);
    let scale = 1.0 / a.len() as f64;
    for (s, v) in a.iter_mut().enumerate() {
        // χ_S = (−1)^{|S \ x|}: flip the sign for odd |S|
        *v *= if s.count_ones() % 2 == 0 { scale } else { -scale };
    }
    let total_mass = a.iter().map(|c| c * c).sum();
    Ok(SpectralMeasure { model: h.model, cells: h.cells.clone(), coefficients: a, total_mass })
}

/// h = Σ_S ĥ(S) χ_S, tabulated.
pub fn inverse_walsh(m: &SpectralMeasure) -> BooleanTable {
    let mut a: Vec<f64> =
        m.coefficients.iter().enumerate().map(|(s, &c)| if s.count_ones() % 2 == 0 { c } else { -c }).collect();
    hadamard(&mut a);
    BooleanTable { model: m.model, cells: m.cells.clone(), values: a }
}

impl SpectralMeasure {
    pub fn model(&self) -> Model {
        self.model
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    /// ĥ(S), indexed by subset bitmask.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, s: u32) -> f64 {
        self.coefficients[s as usize]
    }

    /// Σ_S ĥ(S)² = E[h²].
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// 𝑸̂_h[{S}] = ĥ(S)².
    pub fn weight(&self, s: u32) -> f64 {
        let c = self.coefficients[s as usize];
        c * c
    }

    /// 𝑷̂_h[{S}] = ĥ(S)² / E[h²].
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        if self.total_mass <= 0.0 {
            return Err(Error::ZeroFunction);
        }
        Ok(self.coefficients.iter().map(|c| c * c / self.total_mass).collect())
    }

    /// 𝑸̂_h of the subsets satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(u32) -> bool) -> f64 {
        self.coefficients.iter().enumerate().filter(|&(s, _)| pred(s as u32)).map(|(_, c)| c * c).sum()
    }

    /// 𝑸̂_h[|S| = k] for k = 0..=n.
    pub fn size_profile(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n() + 1];
        for (s, c) in self.coefficients.iter().enumerate() {
            out[s.count_ones() as usize] += c * c;
        }
        out
    }

    /// Cells of a subset bitmask.
    pub fn subset(&self, s: u32) -> Vec<CellId> {
        (0..self.n()).filter(|i| s >> i & 1 == 1).map(|i| self.cells[i]).collect()
    }

    /// One row per subset: (bitmask, |S|, ĥ(S), ĥ(S)²).
    pub fn rows(&self) -> impl Iterator<Item = (u32, u32, f64, f64)> + '_ {
        self.coefficients.iter().enumerate().map(|(s, &c)| (s as u32, s.count_ones(), c, c * c))
    }
}

/// One spectral sample, S with probability ĥ(S)²/E[h²].
pub fn spectral_sample<R: Rng + ?Sized>(m: &SpectralMeasure, rng: &mut R) -> Result<u32> {
    if m.total_mass <= 0.0 {
        return Err(Error::ZeroFunction);
    }
    let u = rng.random::<f64>() * m.total_mass;
    let mut acc = 0.0;
    let mut last = 0;
    for (s, c) in m.coefficients.iter().enumerate() {
        let w = c * c;
        if w > 0.0 {
            acc += w;
            last = s as u32;
            if u < acc {
                return Ok(s as u32);
            }
        }
    }
    Ok(last)
}

/// Repeated spectral sampling through an alias table.
#[derive(Clone, Debug)]
pub struct SpectralSampler {
    alias: WeightedAliasIndex<f64>,
}

impl SpectralSampler {
    pub fn new(m: &SpectralMeasure) -> Result<SpectralSampler> {
        if m.total_mass <= 0.0 {
            return Err(Error::ZeroFunction);
        }
        let w = m.coefficients.iter().map(|c| c * c).collect();
        let alias = WeightedAliasIndex::new(w).map_err(|e| Error::InvalidParameter(format!("alias table: {e}")))?;
        Ok(SpectralSampler { alias })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.alias.sample(rng) as u32
    }
}

/// Whether the centre of a cell lies in the open square (−r, r)².
pub fn center_in_open_square(model: Model, c: CellId, r: Length) -> bool {
    let (x, y) = cell_center(model, c);
    let r = Surd::from_length(r);
    let lo = Surd::ZERO - r;
    x > lo && x < r && y > lo && y < r
}

/// Row k of a size/geometry table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub k: u32,
    /// 𝑷̂[|S| = k].
    pub total: f64,
    /// Per box r0: (𝑷̂[|S| = k, S ⊆ (−r0,r0)²], 𝑷̂[|S| = k, S ⊄ (−r0,r0)²]).
    pub split: Vec<(f64, f64)>,
    /// 𝑷̂-average diameter of S given |S| = k (0 when the row is empty).
    pub mean_diameter: f64,
}

/// 𝑷̂[|S| = k] split by containment in each box (−r0,r0)², where S ⊆ box
/// means every cell centre of S lies in the open box.
pub fn size_geometry_table(m: &SpectralMeasure, boxes: &[Length]) -> Result<Vec<SizeRow>> {
    let p = m.probabilities()?;
    let n = m.n();
    let inside: Vec<u32> = boxes
        .iter()
        .map(|&r| (0..n).filter(|&i| center_in_open_square(m.model, m.cells[i], r)).fold(0, |acc, i| acc | 1 << i))
        .collect();
    let pos: Vec<(f64, f64)> = m.cells.iter().map(|&c| crate::lattice::position(m.model, c)).collect();
    let mut rows: Vec<SizeRow> = (0..=n as u32)
        .map(|k| SizeRow { k, total: 0.0, split: vec![(0.0, 0.0); boxes.len()], mean_diameter: 0.0 })
        .collect();
    for (s, &w) in p.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let s = s as u32;
        let row = &mut rows[s.count_ones() as usize];
        row.total += w;
        for (j, &b) in inside.iter().enumerate() {
            if s & !b == 0 {
                row.split[j].0 += w;
            } else {
                row.split[j].1 += w;
            }
        }
        row.mean_diameter += w * diameter(&pos, s);
    }
    for row in &mut rows {
        if row.total > 0.0 {
            row.mean_diameter /= row.total;
        }
    }
    Ok(rows)
}

fn diameter(pos: &[(f64, f64)], s: u32) -> f64 {
    let idx: Vec<usize> = (0..pos.len()).filter(|i| s >> i & 1 == 1).collect();
    let mut d: f64 = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            d = d.max((pos[i].0 - pos[j].0).hypot(pos[i].1 - pos[j].1));
        }
    }
    d
}

/// Both sides of the hit/avoid inclusion-exclusion identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JpReport {
    /// 𝑸̂_h[S meets every J_j, S ∩ W = ∅], summed directly.
    pub lhs: f64,
    /// Σ_k (−1)^k Σ_{j_1<…<j_k} E[E[h | F_{(J_{j_1} ∪ … ∪ J_{j_k} ∪ W)^c}]²].
    pub rhs: f64,
    pub max_abs_diff: f64,
}

/// Largest number of hit sets in [`jp_identity_check`].
pub const MAX_HIT_SETS: usize = 10;

/// Bitmasks of mutually disjoint sets of table cells.
pub fn disjoint_masks(h: &BooleanTable, hit: &[Vec<CellId>], avoid: &[CellId]) -> Result<(Vec<u32>, u32)> {
    let w = h.mask(avoid)?;
    let mut used = w;
    let mut js = Vec::with_capacity(hit.len());
    for (k, set) in hit.iter().enumerate() {
        let m = h.mask(set)?;
        if m & used != 0 {
            return Err(Error::Overlap(format!("set J_{} meets an earlier set or W", k + 1)));
        }
        used |= m;
        js.push(m);
    }
    Ok((js, w))
}

pub fn jp_identity_check(h: &BooleanTable, hit: &[Vec<CellId>], avoid: &[CellId]) -> Result<JpReport> {
    if hit.len() > MAX_HIT_SETS {
        return Err(Error::SizeCap { what: "hit sets", size: hit.len(), cap: MAX_HIT_SETS });
    }
    let (js, w) = disjoint_masks(h, hit, avoid)?;
    let m = walsh_transform(h)?;
    let lhs = m.mass_where(|s| s & w == 0 && js.iter().all(|&j| s & j != 0));
    let mut rhs = 0.0;
    for k in 0u32..1 << js.len() {
        let free = js.iter().enumerate().filter(|&(i, _)| k >> i & 1 == 1).fold(w, |acc, (_, &j)| acc | j);
        let term = h.conditional_second_moment(free);
        rhs += if k.count_ones() % 2 == 0 { term } else { -term };
    }
    Ok(JpReport { lhs, rhs, max_abs_diff: (lhs - rhs).abs() })
}

/// E[h(ω(0)) h(ω(t))] = Σ_S ĥ(S)² e^{−t|S|} for the rate-1 i.i.d. dynamics.
pub fn iid_correlation_exact(m: &SpectralMeasure, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be nonnegative")));
    }
    Ok(m.size_profile().iter().enumerate().map(|(k, w)| if k == 0 { *w } else { w * (-t * k as f64).exp() }).sum())
}

/// Largest table for [`exclusion_correlation_spectral`].
pub const MAX_EXCLUSION_BITS: usize = 20;

/// Σ_{S,S′} ĥ(S) ĥ(S′) K_t(S,S′) estimated over independent event logs: each
/// log contributes Σ_S ĥ(S) ĥ(π_t(S)), with ĥ = 0 when π_t(S) leaves the
/// table's cells.
pub fn exclusion_correlation_spectral(
    m: &SpectralMeasure,
    kernel: &Kernel,
    t: f64,
    n_logs: u64,
    rng: RngStream,
) -> Result<Estimate> {
    if m.n() > MAX_EXCLUSION_BITS {
        return Err(Error::SizeCap { what: "table cells", size: m.n(), cap: MAX_EXCLUSION_BITS });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be finite and nonnegative")));
    }
    let region = kernel.region();
    let mut torus_index = Vec::with_capacity(m.n());
    let mut bit_of = vec![u32::MAX; region.len()];
    for (i, &c) in m.cells.iter().enumerate() {
        let k = region.locate(c).ok_or_else(|| Error::RegionMismatch(format!("{c:?} not in the kernel's torus")))?;
        if bit_of[k] != u32::MAX {
            return Err(Error::RegionMismatch(format!("{c:?} wraps onto another table cell")));
        }
        bit_of[k] = i as u32;
        torus_index.push(k);
    }
    let coeffs = &m.coefficients;
    let full = coeffs.len();
    if t == 0.0 {
        return Ok(Estimate::exact(m.total_mass, n_logs, rng));
    }
    Ok(replicate(rng, n_logs, |_, r| {
        let mut pos: Vec<u32> = (0..region.len() as u32).collect();
        let mut inv = pos.clone();
        for_each_event(kernel, t, r, |_, a, b| {
            let (ea, eb) = (inv[a], inv[b]);
            inv.swap(a, b);
            pos[ea as usize] = b as u32;
            pos[eb as usize] = a as u32;
        });
        // image bit of each table cell, or MAX when it left the table
        let image: Vec<u32> = torus_index.iter().map(|&k| bit_of[pos[k] as usize]).collect();
        let mut img = vec![0u32; full];
        let mut sum = coeffs[0] * coeffs[0];
        for s in 1..full {
            let low = s.trailing_zeros() as usize;
            let rest = img[s & (s - 1)];
            img[s] = if rest == u32::MAX || image[low] == u32::MAX { u32::MAX } else { rest | 1 << image[low] };
            if img[s] != u32::MAX {
                sum += coeffs[s] * coeffs[img[s] as usize];
            }
        }
        sum
    }))
}

/// A (possibly r0-decorated) annulus structure inside the window [−R,R]².
/// Annuli of kind `R0Decorating` are the decorations A_j centred on
/// ∂[−r0,r0]²; the others form the centered annulus structure with r_A = r0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusStructure {
    pub window: Length,
    pub r0: Length,
    pub annuli: Vec<Annulus>,
    /// Also require S to meet the inner square of centered annuli.
    pub hit_centered: bool,
}

fn shape_square(r: Length) -> Shape {
    Shape::Rect(Rect::square(Point::ORIGIN, r))
}

fn inside_window(a: &Annulus, big: Length) -> bool {
    let o = a.outer_square();
    o.x0 >= -big && o.x1 <= big && o.y0 >= -big && o.y1 <= big
}

fn contains_origin(r: &Rect) -> bool {
    r.x0 <= Length::ZERO && r.x1 >= Length::ZERO && r.y0 <= Length::ZERO && r.y1 >= Length::ZERO
}

impl AnnulusStructure {
    /// Checks the kind of every annulus and the percolation-disjointness
    /// requirements.
    pub fn validate(&self, model: Model) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidStructure(msg));
        let (big, r0) = (self.window, self.r0);
        if r0 < Length::ZERO || r0 > big {
            return bad(format!("r0 = {} outside [0, R]", r0.to_f64()));
        }
        for (i, a) in self.annuli.iter().enumerate() {
            if a.is_empty() {
                return bad(format!("annulus {i} is empty"));
            }
            let (cx, cy) = (a.center.x, a.center.y);
            let ok = match a.kind {
                AnnulusKind::Centered => a.center == Point::ORIGIN && a.outer <= big,
                AnnulusKind::Interior => inside_window(a, big) && !contains_origin(&a.outer_square()),
                AnnulusKind::Side => {
                    let on_x = cx.abs() == big && cy.abs() <= big - a.outer;
                    let on_y = cy.abs() == big && cx.abs() <= big - a.outer;
                    on_x != on_y
                }
                AnnulusKind::Corner => cx.abs() == big && cy.abs() == big && a.outer <= big,
                AnnulusKind::R0Decorating => {
                    let on_boundary = (cx.abs() == r0 && cy.abs() <= r0) || (cy.abs() == r0 && cx.abs() <= r0);
                    on_boundary
                        && inside_window(a, big)
                        && !contains_origin(&a.outer_square())
                        && percolation_disjoint(model, &Shape::Annulus(*a), &shape_square(r0.halve()))
                }
            };
            if !ok {
                return bad(format!("annulus {i} ({:?}) is misplaced", a.kind));
            }
            if a.kind != AnnulusKind::R0Decorating
                && !percolation_disjoint(model, &Shape::Annulus(*a), &shape_square(r0))
            {
                return bad(format!("annulus {i} is not percolation disjoint from [-r0,r0]²"));
            }
            for (j, b) in self.annuli[..i].iter().enumerate() {
                if !percolation_disjoint(model, &Shape::Annulus(*a), &Shape::Annulus(*b)) {
                    return bad(format!("annuli {j} and {i} are not percolation disjoint"));
                }
            }
        }
        Ok(())
    }

    /// Whether a subset of `cells` is compatible: it meets the inner square
    /// (by a whole tile) of every non-centered annulus and of every
    /// decoration, has no tile meeting an annulus of the centered structure,
    /// and no cell outside (−r0,r0)² whose tile meets a decoration.
    pub fn compatibility(&self, model: Model, cells: &[CellId]) -> Compatibility {
        let mut hits = Vec::new();
        let mut forbidden = 0u32;
        for a in &self.annuli {
            let needs_hit = a.kind != AnnulusKind::Centered || self.hit_centered;
            if needs_hit {
                let inner = a.inner_square();
                let m = cells
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| Tile::of(model, c).inside_open_rect(&inner))
                    .fold(0u32, |acc, (i, _)| acc | 1 << i);
                hits.push(m);
            }
            let strips = a.strips();
            for (i, &c) in cells.iter().enumerate() {
                if a.kind == AnnulusKind::R0Decorating && center_in_open_square(model, c, self.r0) {
                    continue;
                }
                let t = Tile::of(model, c);
                if strips.iter().any(|r| t.intersects_rect(r)) {
                    forbidden |= 1 << i;
                }
            }
        }
        Compatibility { hits, forbidden }
    }
}

/// Compatibility of subsets as bitmasks over a table's cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Compatibility {
    pub hits: Vec<u32>,
    pub forbidden: u32,
}

impl Compatibility {
    pub fn admits(&self, s: u32) -> bool {
        s & self.forbidden == 0 && self.hits.iter().all(|&h| s & h != 0)
    }
}

/// 𝑸̂_h[S compatible] against α̂_1(r0/2) Π_j 4 h^{r0}(A_j)² Π_A 4 h(A)².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureBound {
    pub lhs: f64,
    pub rhs: Estimate,
    /// α̂_1(r0/2).
    pub alpha1: Estimate,
    /// One estimate of h(A)² (or h^{r0}(A_j)²) per annulus.
    pub factors: Vec<Estimate>,
}

impl StructureBound {
    /// lhs ≤ rhs + z σ.
    pub fn holds_within(&self, z: f64) -> bool {
        self.lhs <= self.rhs.mean + z * self.rhs.std_error + 1e-12
    }
}

/// The arm event whose probability is h(A) for an annulus of the structure.
pub fn structure_arm_event(model: Model, a: &Annulus, window: Length) -> Result<ClusterEvent> {
    let (cx, cy) = (a.center.x, a.center.y);
    let side_x = if cx > Length::ZERO { Side::Left } else { Side::Right };
    let side_y = if cy > Length::ZERO { Side::Lower } else { Side::Upper };
    let spec = match a.kind {
        AnnulusKind::Centered => ArmSpec::plane(1),
        AnnulusKind::Interior | AnnulusKind::R0Decorating => ArmSpec::plane(4),
        AnnulusKind::Side if cx.abs() == window => ArmSpec::half_plane(3, side_x, Colour::Open),
        AnnulusKind::Side => ArmSpec::half_plane(3, side_y, Colour::Open),
        AnnulusKind::Corner => ArmSpec::quarter_plane(3, side_x, side_y, Colour::Open),
    };
    ClusterEvent::arms(model, a, &spec)
}

/// Exact lhs from the table's spectrum and a Monte Carlo right-hand side.
/// The bound is a statement about h = f_R, the one-arm indicator of the
/// window; the lhs is computed for whatever table is given.
pub fn annulus_bound_check(
    h: &BooleanTable,
    structure: &AnnulusStructure,
    n_samples: u64,
    rng: RngStream,
) -> Result<StructureBound> {
    annulus_bound_check_measure(&walsh_transform(h)?, structure, n_samples, rng)
}

/// [`annulus_bound_check`] for an already transformed function.
pub fn annulus_bound_check_measure(
    m: &SpectralMeasure,
    structure: &AnnulusStructure,
    n_samples: u64,
    rng: RngStream,
) -> Result<StructureBound> {
    let model = m.model;
    structure.validate(model)?;
    let compat = structure.compatibility(model, &m.cells);
    let lhs = m.mass_where(|s| compat.admits(s));
    let r0 = structure.r0;
    let alpha1 = if r0.halve() == Length::ZERO {
        Estimate::exact(1.0, n_samples, rng)
    } else {
        crate::percolation::estimate_event(&ClusterEvent::one_arm(model, r0.halve()), 0.5, n_samples, rng.substream(0))
    };
    let mut factors = Vec::with_capacity(structure.annuli.len());
    for (i, a) in structure.annuli.iter().enumerate() {
        let event = structure_arm_event(model, a, structure.window)?;
        let f = Observable::event(event);
        let stream = rng.substream(i as u64 + 1);
        let est = if a.kind == AnnulusKind::R0Decorating {
            coupled_second_moment(&f, |c| center_in_open_square(model, c, r0), n_samples, stream)
        } else {
            coupled_second_moment(&f, |_| false, n_samples, stream)
        };
        factors.push(est);
    }
    let mut mean = alpha1.mean;
    let mut rel2 = if alpha1.mean > 0.0 { (alpha1.std_error / alpha1.mean).powi(2) } else { 0.0 };
    for f in &factors {
        mean *= 4.0 * f.mean;
        if f.mean > 0.0 {
            rel2 += (f.std_error / f.mean).powi(2);
        }
    }
    let rhs = Estimate { mean, std_error: mean * rel2.sqrt(), n_samples, seed: rng };
    Ok(StructureBound { lhs, rhs, alpha1, factors })
}

/// A random valid structure in the window [−2,2]²: either one centered
/// annulus, or up to three side and corner annuli, with r0 ≤ 1. Candidates
/// failing validation are redrawn.
pub fn random_tiny_structure<R: Rng + ?Sized>(model: Model, rng: &mut R) -> AnnulusStructure {
    let big = Length::from_int(2);
    let eighths = |k: i64| Length::from_f64(k as f64 / 8.0).expect("multiple of 1/24");
    loop {
        let r0 = eighths(2 * rng.random_range(0..=4));
        let mut annuli = Vec::new();
        if rng.random::<bool>() {
            let a = rng.random_range(8..16);
            let b = rng.random_range(a + 1..=16);
            annuli.push(Annulus::centered(eighths(a), eighths(b)));
        } else {
            for _ in 0..rng.random_range(1..=3) {
                let outer = eighths(rng.random_range(9..=12));
                let sign = |r: &mut R, x: Length| if r.random::<bool>() { x } else { -x };
                let a = if rng.random_range(0..3) == 0 {
                    let c = Point::new(sign(rng, big), sign(rng, big));
                    Annulus::new(c, Length::from_int(1), outer, AnnulusKind::Corner)
                } else {
                    let off = eighths(rng.random_range(-4..=4));
                    let edge = sign(rng, big);
                    let c = if rng.random::<bool>() { Point::new(edge, off) } else { Point::new(off, edge) };
                    Annulus::new(c, Length::from_int(1), outer, AnnulusKind::Side)
                };
                annuli.push(a.expect("nonnegative radii"));
            }
        }
        let s = AnnulusStructure { window: big, r0, annuli, hit_centered: false };
        if s.validate(model).is_ok() {
            return s;
        }
    }
}

/// Tables of a few named functions: `majority3`, `and2`, `parity2`,
/// `dictator` on a row of cells, and `crossing:<n>`, `hex:<n>` (rhombus
/// crossing) and `onearm:<R>` on their supports.
pub fn named_function(model: Model, name: &str) -> Result<BooleanTable> {
    let line = |n: i64| -> Vec<CellId> {
        match model {
            Model::TriangularSite => (0..n).map(|q| CellId::new(q, 0)).collect(),
            Model::SquareBond => (0..n).map(|q| CellId::new(2 * q + 1, 0)).collect(),
        }
    };
    let indicator = |b: bool| f64::from(u8::from(b));
    let (head, arg) = name.split_once(':').unwrap_or((name, ""));
    let length = || {
        arg.parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("`{name}`: `{arg}` is not a length")))
            .and_then(Length::from_f64)
    };
    match head {
        "majority3" => BooleanTable::from_fn(model, line(3), |x| indicator(x.count_ones() >= 2)),
        "and2" => BooleanTable::from_fn(model, line(2), |x| indicator(x == 3)),
        "parity2" => BooleanTable::from_fn(model, line(2), |x| if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 }),
        "dictator" => BooleanTable::from_fn(model, line(1), f64::from),
        "crossing" => BooleanTable::from_event(model, ClusterEvent::crossing(model, &Rect::square(Point::ORIGIN, length()?))),
        "hex" => {
            let n: i64 = arg.parse().map_err(|_| Error::InvalidParameter(format!("`{name}`: bad side")))?;
            if model != Model::TriangularSite || !(1..=4).contains(&n) {
                return Err(Error::InvalidParameter("hex:<n> needs the triangular model and 1 ≤ n ≤ 4".into()));
            }
            BooleanTable::from_event(model, ClusterEvent::rhombus_crossing(n))
        }
        "onearm" => BooleanTable::from_event(model, ClusterEvent::one_arm(model, length()?)),
        _ => Err(Error::InvalidParameter(format!(
            "unknown function `{name}` (majority3, and2, parity2, dictator, crossing:<n>, hex:<n>, onearm:<R>)"
        ))),
    }
}
