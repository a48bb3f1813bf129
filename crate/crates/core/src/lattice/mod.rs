//! Triangular-lattice sites and square-lattice bonds: cells, tiles, windows
//! I_R, tori, distances, annuli and half-plane masks.

mod exact;
mod shapes;

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use exact::{bond_segment, cell_center, segment_meets_open_rect, segment_meets_rect, shared_boundary, SPoint, Surd, Tile};
pub use shapes::{Annulus, AnnulusKind, Length, Point, Rect, Shape, LENGTH_DENOM};

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// Sites of the triangular lattice with unit edges; tiles are hexagons.
    TriangularSite,
    /// Edges of Z², addressed by doubled midpoint coordinates; tiles are
    /// diamonds.
    SquareBond,
}

/// A lattice cell. Triangular sites use axial coordinates (q, s) placed at
/// (q + s/2, s·√3/2). Square-lattice edges use doubled midpoint coordinates,
/// exactly one of which is odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub a: i64,
    pub b: i64,
}

impl CellId {
    pub const fn new(a: i64, b: i64) -> CellId {
        CellId { a, b }
    }

    /// Whether the coordinates name a cell of `model`.
    pub fn is_valid(self, model: Model) -> bool {
        match model {
            Model::TriangularSite => true,
            Model::SquareBond => (self.a + self.b).rem_euclid(2) == 1,
        }
    }

    /// Horizontal edge (bond model only).
    pub fn is_horizontal(self) -> bool {
        self.a.rem_euclid(2) == 1
    }

    pub fn translate(self, by: CellId) -> CellId {
        CellId::new(self.a + by.a, self.b + by.b)
    }
}

const TRI_NEIGHBOURS: [(i64, i64); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];
const BOND_ALONG_X: [(i64, i64); 6] = [(2, 0), (-2, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)];
const BOND_ALONG_Y: [(i64, i64); 6] = [(0, 2), (0, -2), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Cells that an open path may step to from `c`: adjacent sites, or edges
/// sharing an endpoint.
pub fn open_neighbours(model: Model, c: CellId) -> [CellId; 6] {
    let offs = match model {
        Model::TriangularSite => &TRI_NEIGHBOURS,
        Model::SquareBond if c.is_horizontal() => &BOND_ALONG_X,
        Model::SquareBond => &BOND_ALONG_Y,
    };
    offs.map(|(da, db)| CellId::new(c.a + da, c.b + db))
}

/// Cells that a closed path may step to from `c`: adjacent sites, or edges
/// whose dual edges share a dual vertex.
pub fn closed_neighbours(model: Model, c: CellId) -> [CellId; 6] {
    let offs = match model {
        Model::TriangularSite => &TRI_NEIGHBOURS,
        Model::SquareBond if c.is_horizontal() => &BOND_ALONG_Y,
        Model::SquareBond => &BOND_ALONG_X,
    };
    offs.map(|(da, db)| CellId::new(c.a + da, c.b + db))
}

/// Floating position of a cell.
pub fn position(model: Model, c: CellId) -> (f64, f64) {
    match model {
        Model::TriangularSite => (c.a as f64 + 0.5 * c.b as f64, SQRT3_2 * c.b as f64),
        Model::SquareBond => (0.5 * c.a as f64, 0.5 * c.b as f64),
    }
}

/// The cell whose position is the given lattice point (the site itself, or
/// for the bond model the vertex encoded in doubled coordinates).
pub fn origin_cell(model: Model) -> CellId {
    match model {
        Model::TriangularSite => CellId::new(0, 0),
        Model::SquareBond => CellId::new(1, 0),
    }
}

/// All cells whose tile could meet `rect` (a superset, filtered by callers).
pub fn cells_near(model: Model, rect: &Rect) -> Vec<CellId> {
    let m = 1.5;
    let (x0, x1, y0, y1) = (rect.x0.to_f64() - m, rect.x1.to_f64() + m, rect.y0.to_f64() - m, rect.y1.to_f64() + m);
    let mut out = Vec::new();
    match model {
        Model::TriangularSite => {
            let s0 = (y0 / SQRT3_2).floor() as i64;
            let s1 = (y1 / SQRT3_2).ceil() as i64;
            for s in s0..=s1 {
                let q0 = (x0 - 0.5 * s as f64).floor() as i64;
                let q1 = (x1 - 0.5 * s as f64).ceil() as i64;
                for q in q0..=q1 {
                    out.push(CellId::new(q, s));
                }
            }
        }
        Model::SquareBond => {
            let xa = (2.0 * x0).floor() as i64;
            let xb = (2.0 * x1).ceil() as i64;
            let ya = (2.0 * y0).floor() as i64;
            let yb = (2.0 * y1).ceil() as i64;
            for xx in xa..=xb {
                for yy in ya..=yb {
                    if (xx + yy).rem_euclid(2) == 1 {
                        out.push(CellId::new(xx, yy));
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    /// Cells whose tile meets [-R,R]².
    Window(Length),
    /// Periodic box of side L (even).
    Torus(u32),
}

/// Dense coordinate lookup for a finite set of cells.
#[derive(Clone, Debug)]
struct DenseIndex {
    a0: i64,
    b0: i64,
    width: usize,
    height: usize,
    slots: Vec<u32>,
}

impl DenseIndex {
    fn build(cells: &[CellId]) -> DenseIndex {
        if cells.is_empty() {
            return DenseIndex { a0: 0, b0: 0, width: 0, height: 0, slots: Vec::new() };
        }
        let a0 = cells.iter().map(|c| c.a).min().unwrap();
        let a1 = cells.iter().map(|c| c.a).max().unwrap();
        let b0 = cells.iter().map(|c| c.b).min().unwrap();
        let b1 = cells.iter().map(|c| c.b).max().unwrap();
        let width = (a1 - a0 + 1) as usize;
        let height = (b1 - b0 + 1) as usize;
        let mut slots = vec![u32::MAX; width * height];
        for (i, c) in cells.iter().enumerate() {
            slots[(c.b - b0) as usize * width + (c.a - a0) as usize] = i as u32;
        }
        DenseIndex { a0, b0, width, height, slots }
    }

    #[inline]
    fn get(&self, c: CellId) -> Option<usize> {
        let da = c.a - self.a0;
        let db = c.b - self.b0;
        if da < 0 || db < 0 || da as usize >= self.width || db as usize >= self.height {
            return None;
        }
        let v = self.slots[db as usize * self.width + da as usize];
        (v != u32::MAX).then_some(v as usize)
    }
}

/// A finite, ordered set of cells of one model.
#[derive(Clone, Debug)]
pub struct Region {
    model: Model,
    geometry: Geometry,
    cells: Vec<CellId>,
    index: DenseIndex,
}

impl PartialEq for Region {
    fn eq(&self, o: &Region) -> bool {
        self.model == o.model && self.geometry == o.geometry && self.cells == o.cells
    }
}

/// The index set I_R: cells whose tile meets [-R,R]², sorted by coordinates.
pub fn cells_in_window(model: Model, r: Length) -> Region {
    Region::window(model, r)
}

impl Region {
    pub fn window(model: Model, r: Length) -> Region {
        let r = r.abs();
        let square = Rect::square(Point::ORIGIN, r);
        let mut cells: Vec<CellId> = cells_near(model, &square)
            .into_iter()
            .filter(|&c| Tile::of(model, c).intersects_rect(&square))
            .collect();
        cells.sort_unstable();
        let index = DenseIndex::build(&cells);
        Region { model, geometry: Geometry::Window(r), cells, index }
    }

    /// Periodic region of side `l`. The triangular torus is the rectangle
    /// [0,L) × [0, L√3/2) with L rows of L sites.
    pub fn torus(model: Model, l: u32) -> Result<Region> {
        if l < 4 || !l.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("torus side {l} must be even and at least 4")));
        }
        if l > 8192 {
            return Err(Error::SizeCap { what: "torus side", size: l as usize, cap: 8192 });
        }
        let li = l as i64;
        let mut cells = Vec::with_capacity(2 * (l as usize).pow(2));
        match model {
            Model::TriangularSite => {
                for s in 0..li {
                    for c in 0..li {
                        cells.push(CellId::new(c - s.div_euclid(2), s));
                    }
                }
            }
            Model::SquareBond => {
                for xx in 0..2 * li {
                    for yy in 0..2 * li {
                        if (xx + yy) % 2 == 1 {
                            cells.push(CellId::new(xx, yy));
                        }
                    }
                }
            }
        }
        cells.sort_unstable();
        let index = DenseIndex::build(&cells);
        Ok(Region { model, geometry: Geometry::Torus(l), cells, index })
    }

    /// A region made of an explicit list of cells (used for small ad hoc
    /// index sets). Duplicates are removed and the list is sorted.
    pub fn from_cells(model: Model, mut cells: Vec<CellId>, geometry: Geometry) -> Result<Region> {
        if let Some(c) = cells.iter().find(|c| !c.is_valid(model)) {
            return Err(Error::InvalidParameter(format!("{c:?} is not a cell of {model:?}")));
        }
        cells.sort_unstable();
        cells.dedup();
        let index = DenseIndex::build(&cells);
        Ok(Region { model, geometry, cells, index })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, i: usize) -> CellId {
        self.cells[i]
    }

    pub fn torus_side(&self) -> Option<u32> {
        match self.geometry {
            Geometry::Torus(l) => Some(l),
            Geometry::Window(_) => None,
        }
    }

    /// Reduces a cell to its representative (identity on windows).
    #[inline]
    pub fn canonical(&self, c: CellId) -> CellId {
        match self.geometry {
            Geometry::Window(_) => c,
            Geometry::Torus(l) => {
                let l = l as i64;
                match self.model {
                    Model::TriangularSite => {
                        let k = c.b.div_euclid(l);
                        let s = c.b - k * l;
                        let q = c.a + k * (l / 2);
                        let col = (q + s.div_euclid(2)).rem_euclid(l);
                        CellId::new(col - s.div_euclid(2), s)
                    }
                    Model::SquareBond => CellId::new(c.a.rem_euclid(2 * l), c.b.rem_euclid(2 * l)),
                }
            }
        }
    }

    /// Index of a cell (after wrapping on a torus).
    #[inline]
    pub fn locate(&self, c: CellId) -> Option<usize> {
        self.index.get(self.canonical(c))
    }

    pub fn contains(&self, c: CellId) -> bool {
        self.locate(c).is_some()
    }

    pub fn position(&self, c: CellId) -> (f64, f64) {
        position(self.model, c)
    }

    /// Period vectors of the torus in the plane.
    fn periods(&self) -> Option<((f64, f64), (f64, f64))> {
        let l = self.torus_side()? as f64;
        Some(match self.model {
            Model::TriangularSite => ((l, 0.0), (0.0, l * SQRT3_2)),
            Model::SquareBond => ((l, 0.0), (0.0, l)),
        })
    }

    /// Euclidean distance; on a torus the minimum over the 9 wrapped images
    /// of the representatives.
    pub fn distance(&self, a: CellId, b: CellId) -> f64 {
        let a = self.canonical(a);
        let b = self.canonical(b);
        let (ax, ay) = self.position(a);
        let (bx, by) = self.position(b);
        let (dx, dy) = (bx - ax, by - ay);
        match self.periods() {
            None => dx.hypot(dy),
            Some((p, q)) => {
                let mut best = f64::INFINITY;
                for i in -1..=1 {
                    for j in -1..=1 {
                        let ex = dx + i as f64 * p.0 + j as f64 * q.0;
                        let ey = dy + i as f64 * p.1 + j as f64 * q.1;
                        best = best.min(ex.hypot(ey));
                    }
                }
                best
            }
        }
    }

    /// Index map of `window`'s cells into this torus; fails unless injective.
    pub fn embed(&self, window: &Region) -> Result<Vec<u32>> {
        if window.model != self.model {
            return Err(Error::RegionMismatch("models differ".into()));
        }
        let mut seen = vec![false; self.len()];
        let mut out = Vec::with_capacity(window.len());
        for &c in window.cells() {
            let i = self
                .locate(c)
                .ok_or_else(|| Error::RegionMismatch(format!("{c:?} not in region")))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::RegionMismatch(format!(
                    "window does not fit: {c:?} wraps onto another cell"
                )));
            }
            out.push(i as u32);
        }
        Ok(out)
    }
}

/// Euclidean distance between cells of a region.
pub fn distance(region: &Region, a: CellId, b: CellId) -> f64 {
    region.distance(a, b)
}

/// True iff no tile meets both shapes.
pub fn percolation_disjoint(model: Model, a: &Shape, b: &Shape) -> bool {
    let (Some(ba), Some(bb)) = (a.bbox(), b.bbox()) else {
        return true;
    };
    let grow = Length::from_int(2);
    let zone = Rect::new(ba.x0 - grow, ba.x1 + grow, ba.y0 - grow, ba.y1 + grow)
        .intersection(&Rect::new(bb.x0 - grow, bb.x1 + grow, bb.y0 - grow, bb.y1 + grow));
    if zone.is_empty() {
        return true;
    }
    let pa = a.pieces();
    let pb = b.pieces();
    !cells_near(model, &zone).into_iter().any(|c| {
        let t = Tile::of(model, c);
        pa.iter().any(|r| t.intersects_rect(r)) && pb.iter().any(|r| t.intersects_rect(r))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Lower,
    Upper,
    Left,
    Right,
}

impl Side {
    pub fn mirror(self) -> Side {
        match self {
            Side::Lower => Side::Upper,
            Side::Upper => Side::Lower,
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// Signed coordinate that is ≤ 0 exactly on the closed half-plane
    /// through `c`.
    pub(crate) fn offset(self, p: SPoint, c: Point) -> Surd {
        let (cx, cy) = (Surd::from_length(c.x), Surd::from_length(c.y));
        match self {
            Side::Lower => p.1 - cy,
            Side::Upper => cy - p.1,
            Side::Left => p.0 - cx,
            Side::Right => cx - p.0,
        }
    }
}

/// Whether the tile of `c` lies in the closed half-plane `side` through `at`.
pub fn tile_in_half_plane(model: Model, c: CellId, side: Side, at: Point) -> bool {
    Tile::of(model, c).all_vertices(|v| side.offset(v, at).signum() <= 0)
}

/// Whether the tile of `c` meets the closed half-plane `side` through `at`.
pub fn tile_meets_half_plane(model: Model, c: CellId, side: Side, at: Point) -> bool {
    Tile::of(model, c).any_vertex(|v| side.offset(v, at).signum() <= 0)
}

/// Cells of a window whose tile lies in the closed half-plane through the
/// origin; tiles straddling the boundary line are excluded.
pub fn half_plane_mask(region: &Region, side: Side) -> Result<HashSet<CellId>> {
    if !matches!(region.geometry(), Geometry::Window(_)) {
        return Err(Error::Geometry("half-plane masks are defined on windows".into()));
    }
    Ok(region
        .cells()
        .iter()
        .copied()
        .filter(|&c| tile_in_half_plane(region.model(), c, side, Point::ORIGIN))
        .collect())
}

/// Cells of a window whose tile meets the closed half-plane through the
/// origin, straddlers included.
pub fn half_plane_closure(region: &Region, side: Side) -> Result<HashSet<CellId>> {
    if !matches!(region.geometry(), Geometry::Window(_)) {
        return Err(Error::Geometry("half-plane masks are defined on windows".into()));
    }
    Ok(region
        .cells()
        .iter()
        .copied()
        .filter(|&c| tile_meets_half_plane(region.model(), c, side, Point::ORIGIN))
        .collect())
}

/// Shared handle type used across modules.
pub type RegionRef = Arc<Region>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_zero_is_origin_only() {
        let r = cells_in_window(Model::TriangularSite, Length::ZERO);
        assert_eq!(r.cells(), &[CellId::new(0, 0)]);
        let r = cells_in_window(Model::SquareBond, Length::ZERO);
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn small_window_counts() {
        let count = |x: f64| cells_in_window(Model::TriangularSite, Length::from_f64(x).unwrap()).len();
        // counts cross-checked with an independent polygon library
        assert_eq!(count(1.0), 11);
        assert_eq!(count(1.25), 17);
        assert_eq!(count(1.5), 23);
        assert_eq!(count(2.0), 27);
    }

    #[test]
    fn torus_wraps() {
        let t = Region::torus(Model::TriangularSite, 8).unwrap();
        assert_eq!(t.len(), 64);
        assert!((t.distance(CellId::new(0, 0), CellId::new(7, 0)) - 1.0).abs() < 1e-12);
        assert_eq!(t.canonical(CellId::new(-4, 8)), CellId::new(0, 0));
        let b = Region::torus(Model::SquareBond, 8).unwrap();
        assert_eq!(b.len(), 128);
        assert!((b.distance(CellId::new(1, 0), CellId::new(15, 0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_torus_cell_is_canonical() {
        for m in [Model::TriangularSite, Model::SquareBond] {
            let t = Region::torus(m, 6).unwrap();
            for (i, &c) in t.cells().iter().enumerate() {
                assert_eq!(t.canonical(c), c);
                assert_eq!(t.locate(c), Some(i));
            }
        }
    }

    #[test]
    fn adjacent_sites_at_unit_distance() {
        let w = cells_in_window(Model::TriangularSite, Length::from_int(3));
        for n in open_neighbours(Model::TriangularSite, CellId::new(0, 0)) {
            assert!((w.distance(CellId::new(0, 0), n) - 1.0).abs() < 1e-12);
        }
    }
}
