//! Cluster exploration between a source set and a target set of cells.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::lattice::{
    bond_segment, closed_neighbours, open_neighbours, segment_meets_open_rect, segment_meets_rect, shared_boundary, Annulus, CellId, Geometry, Length, Model, Point, Rect, Region, Side, Surd,
    Tile,
};

use super::state::CellState;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    Open,
    Closed,
}

impl Colour {
    pub fn other(self) -> Colour {
        match self {
            Colour::Open => Colour::Closed,
            Colour::Closed => Colour::Open,
        }
    }
}

/// Cells of a domain with their open and closed adjacency, and per colour a
/// list of source cells and a target flag per cell.
#[derive(Clone, Debug)]
pub struct ClusterDomain {
    region: Region,
    open_adj: Vec<[u32; 6]>,
    closed_adj: Option<Vec<[u32; 6]>>,
    sources: [Vec<u32>; 2],
    target: [Vec<bool>; 2],
}

fn slot(colour: Colour) -> usize {
    match colour {
        Colour::Open => 0,
        Colour::Closed => 1,
    }
}

impl ClusterDomain {
    /// Builds a domain on `cells`. Adjacent cells are linked when
    /// `link(a, b, colour)` holds, so callers can drop links whose shared
    /// boundary leaves the region of interest.
    pub fn new(
        model: Model,
        cells: Vec<CellId>,
        is_source: impl Fn(CellId, Colour) -> bool,
        is_target: impl Fn(CellId, Colour) -> bool,
        link: impl Fn(CellId, CellId, Colour) -> bool,
    ) -> Self {
        let region = Region::from_cells(model, cells, Geometry::Window(Length::ZERO)).expect("valid cells");
        let adj = |f: fn(Model, CellId) -> [CellId; 6], colour: Colour| -> Vec<[u32; 6]> {
            region
                .cells()
                .iter()
                .map(|&c| {
                    f(model, c).map(|n| match region.locate(n) {
                        Some(i) if link(c, n, colour) => i as u32,
                        _ => NONE,
                    })
                })
                .collect()
        };
        let open_adj = adj(open_neighbours, Colour::Open);
        let closed_adj = if model == Model::SquareBond {
            Some(adj(closed_neighbours, Colour::Closed))
        } else {
            None
        };
        let sources = [Colour::Open, Colour::Closed].map(|colour| {
            region
                .cells()
                .iter()
                .enumerate()
                .filter(|(_, &c)| is_source(c, colour))
                .map(|(i, _)| i as u32)
                .collect()
        });
        let target =
            [Colour::Open, Colour::Closed].map(|colour| region.cells().iter().map(|&c| is_target(c, colour)).collect());
        ClusterDomain { region, open_adj, closed_adj, sources, target }
    }

    pub fn cells(&self) -> &[CellId] {
        self.region.cells()
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    pub fn model(&self) -> Model {
        self.region.model()
    }

    pub fn sources(&self, colour: Colour) -> impl Iterator<Item = CellId> + '_ {
        self.sources[slot(colour)].iter().map(|&i| self.region.cell(i as usize))
    }

    pub fn is_target(&self, c: CellId, colour: Colour) -> bool {
        self.region.locate(c).is_some_and(|i| self.target[slot(colour)][i])
    }

    pub fn contains(&self, c: CellId) -> bool {
        self.region.contains(c)
    }

    fn adjacency(&self, colour: Colour) -> &[[u32; 6]] {
        match (colour, &self.closed_adj) {
            (Colour::Closed, Some(a)) => a,
            _ => &self.open_adj,
        }
    }

    /// Number of distinct `colour` clusters (within the domain) that contain
    /// a source and a target cell, stopping once `need` are found.
    pub fn count_crossing<S: CellState + ?Sized>(&self, state: &S, colour: Colour, need: u32) -> u32 {
        SCRATCH.with(|s| {
            let mut s = s.borrow_mut();
            s.begin(self.len());
            self.count_with(state, colour, need, &mut s)
        })
    }

    fn count_with<S: CellState + ?Sized>(&self, state: &S, colour: Colour, need: u32, s: &mut Scratch) -> u32 {
        let want_open = colour == Colour::Open;
        let adj = self.adjacency(colour);
        let cells = self.region.cells();
        let target = &self.target[slot(colour)];
        let mut found = 0;
        for &src in &self.sources[slot(colour)] {
            if found >= need {
                break;
            }
            let src = src as usize;
            if s.seen(src) || s.colour(src, || state.is_open(cells[src])) != want_open {
                continue;
            }
            s.mark(src);
            s.queue.clear();
            s.queue.push(src as u32);
            let mut head = 0;
            let mut crosses = false;
            while head < s.queue.len() {
                let v = s.queue[head] as usize;
                head += 1;
                if target[v] && !crosses {
                    crosses = true;
                    if found + 1 >= need {
                        return found + 1;
                    }
                }
                for &w in &adj[v] {
                    if w == NONE {
                        continue;
                    }
                    let w = w as usize;
                    if !s.seen(w) && s.colour(w, || state.is_open(cells[w])) == want_open {
                        s.mark(w);
                        s.queue.push(w as u32);
                    }
                }
            }
            if crosses {
                found += 1;
            }
        }
        found
    }
}

/// Per-thread exploration buffers, reset in O(1) by generation stamps.
struct Scratch {
    generation: u32,
    seen: Vec<u32>,
    known: Vec<u32>,
    open: Vec<bool>,
    queue: Vec<u32>,
}

impl Scratch {
    fn begin(&mut self, n: usize) {
        if self.seen.len() < n {
            self.seen.resize(n, 0);
            self.known.resize(n, 0);
            self.open.resize(n, false);
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.seen.iter_mut().for_each(|x| *x = 0);
            self.known.iter_mut().for_each(|x| *x = 0);
            self.generation = 1;
        }
    }

    #[inline]
    fn seen(&self, i: usize) -> bool {
        self.seen[i] == self.generation
    }

    #[inline]
    fn mark(&mut self, i: usize) {
        self.seen[i] = self.generation;
    }

    #[inline]
    fn colour(&mut self, i: usize, f: impl FnOnce() -> bool) -> bool {
        if self.known[i] != self.generation {
            self.known[i] = self.generation;
            self.open[i] = f();
        }
        self.open[i]
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = const { RefCell::new(Scratch {
        generation: 0,
        seen: Vec::new(),
        known: Vec::new(),
        open: Vec::new(),
        queue: Vec::new(),
    }) };
}

/// The part of the plane an arm event lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmGeometry {
    Plane,
    /// The closed half-plane on `side` of a line through the annulus centre.
    HalfPlane(Side),
    /// Intersection of a horizontal and a vertical closed half-plane through
    /// the annulus centre.
    QuarterPlane(Side, Side),
}

/// k arms of alternating colours, the first of colour `first`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmSpec {
    pub k: u32,
    pub geometry: ArmGeometry,
    pub first: Colour,
}

impl ArmSpec {
    pub fn plane(k: u32) -> ArmSpec {
        ArmSpec { k, geometry: ArmGeometry::Plane, first: Colour::Open }
    }

    pub fn half_plane(k: u32, side: Side, first: Colour) -> ArmSpec {
        ArmSpec { k, geometry: ArmGeometry::HalfPlane(side), first }
    }

    pub fn quarter_plane(k: u32, vertical: Side, horizontal: Side, first: Colour) -> ArmSpec {
        ArmSpec { k, geometry: ArmGeometry::QuarterPlane(vertical, horizontal), first }
    }

    /// Minimal numbers of crossing clusters of the first and the other colour.
    pub fn requirement(&self) -> crate::Result<(u32, u32)> {
        if self.k == 0 {
            return Err(crate::Error::InvalidParameter("arm count must be at least 1".into()));
        }
        if let ArmGeometry::QuarterPlane(a, b) = self.geometry {
            let horizontal = |s: Side| matches!(s, Side::Lower | Side::Upper);
            if horizontal(a) == horizontal(b) {
                return Err(crate::Error::InvalidParameter(
                    "a quarter plane needs one horizontal and one vertical side".into(),
                ));
            }
        }
        match self.geometry {
            ArmGeometry::Plane if self.k == 1 => Ok((1, 0)),
            ArmGeometry::Plane if self.k % 2 == 1 => Err(crate::Error::Unsupported(format!(
                "{} alternating arms cannot close up around a full annulus",
                self.k
            ))),
            ArmGeometry::Plane => Ok((self.k / 2, self.k / 2)),
            _ => Ok((self.k.div_ceil(2), self.k / 2)),
        }
    }
}

/// A percolation event decided by counting crossing clusters.
#[derive(Clone, Debug)]
pub struct ClusterEvent {
    domain: Option<ClusterDomain>,
    first: Colour,
    need_first: u32,
    need_other: u32,
}

impl ClusterEvent {
    /// Always true (the empty-annulus convention).
    pub fn trivial(model: Model) -> ClusterEvent {
        let _ = model;
        ClusterEvent { domain: None, first: Colour::Open, need_first: 0, need_other: 0 }
    }

    pub fn from_domain(domain: ClusterDomain, first: Colour, need_first: u32, need_other: u32) -> ClusterEvent {
        ClusterEvent { domain: Some(domain), first, need_first, need_other }
    }

    /// Arms across an annulus A, optionally restricted to a half or quarter
    /// plane H through its centre.
    ///
    /// Sites: cells are the hexagons meeting the interior of A∩H, linked when
    /// their common edge meets that interior, so clusters are the colour
    /// components of the open set. Bonds: an open bond is its primal segment
    /// and a closed bond its dual segment, both cut to the closed set A∩H;
    /// open bonds link at a common endpoint and closed ones at a common face
    /// centre lying in A∩H. Either way the two colours are planar duals there
    /// and disjoint crossing clusters alternate.
    ///
    /// Sources meet the closed inner square (for r = 0 and bonds, the bonds
    /// whose tile holds the centre); targets reach the boundary of the outer
    /// square or beyond. The inner radius must be 0 or at least 1 so that no
    /// cell is cut in two by the inner square.
    pub fn arms(model: Model, annulus: &Annulus, spec: &ArmSpec) -> crate::Result<ClusterEvent> {
        let (need_first, need_other) = spec.requirement()?;
        if annulus.is_empty() {
            return Ok(ClusterEvent::trivial(model));
        }
        if annulus.inner > Length::ZERO && annulus.inner < Length::from_int(1) {
            return Err(crate::Error::InvalidParameter(format!(
                "inner radius {} must be 0 or at least 1",
                annulus.inner
            )));
        }
        let far = annulus.outer + Length::from_int(2);
        let clip = clip_rect(annulus, spec.geometry, far);
        let inner = annulus.inner_square().intersection(&clip);
        // closed complement of the open outer square, within the clip
        let (c, big) = (annulus.center, annulus.outer);
        let beyond: Vec<Rect> = [
            Rect::new(c.x - far, c.x - big, c.y - far, c.y + far),
            Rect::new(c.x + big, c.x + far, c.y - far, c.y + far),
            Rect::new(c.x - far, c.x + far, c.y - far, c.y - big),
            Rect::new(c.x - far, c.x + far, c.y + big, c.y + far),
        ]
        .iter()
        .map(|r| r.intersection(&clip))
        .filter(|r| !r.is_empty())
        .collect();
        let near = crate::lattice::cells_near(model, &annulus.outer_square());
        let domain = match model {
            Model::TriangularSite => {
                let pieces: Vec<Rect> = annulus
                    .open_strips()
                    .into_iter()
                    .map(|r| r.intersection(&clip))
                    .filter(|r| r.x0 < r.x1 && r.y0 < r.y1)
                    .collect();
                let cells = near
                    .into_iter()
                    .filter(|&x| {
                        let t = Tile::of(model, x);
                        pieces.iter().any(|r| t.intersects_open_rect(r))
                    })
                    .collect();
                ClusterDomain::new(
                    model,
                    cells,
                    |x, _| !inner.is_empty() && Tile::of(model, x).intersects_rect(&inner),
                    |x, _| {
                        let t = Tile::of(model, x);
                        beyond.iter().any(|r| t.intersects_rect(r))
                    },
                    |a, b, colour| linked_within(model, a, b, colour, &pieces),
                )
            }
            Model::SquareBond => {
                let pieces: Vec<Rect> =
                    annulus.strips().into_iter().map(|r| r.intersection(&clip)).filter(|r| !r.is_empty()).collect();
                let meets = |x: CellId, colour: Colour, rects: &[Rect]| {
                    let (p, q) = bond_segment(x, colour == Colour::Closed);
                    rects.iter().any(|r| segment_meets_rect(model, p, q, r))
                };
                let cells = near
                    .into_iter()
                    .filter(|&x| meets(x, Colour::Open, &pieces) || meets(x, Colour::Closed, &pieces))
                    .collect();
                let point = annulus.inner == Length::ZERO;
                ClusterDomain::new(
                    model,
                    cells,
                    |x, colour| {
                        if point {
                            Tile::of(model, x).intersects_rect(&inner)
                        } else {
                            meets(x, colour, std::slice::from_ref(&inner))
                        }
                    },
                    |x, colour| meets(x, colour, &beyond),
                    |a, b, colour| linked_within(model, a, b, colour, &pieces),
                )
            }
        };
        Ok(ClusterEvent::from_domain(domain, spec.first, need_first, need_other))
    }

    /// An open path from the origin to the boundary of [-R,R]².
    pub fn one_arm(model: Model, r: Length) -> ClusterEvent {
        ClusterEvent::arms(model, &Annulus::centered(Length::ZERO, r), &ArmSpec::plane(1)).expect("valid one-arm")
    }

    /// An open left-right crossing of the rectangle. For sites, cells are the
    /// hexagons meeting the rectangle and the ends are its vertical sides.
    /// For bonds, the rectangle is a box of vertices: cells are the edges with
    /// both endpoints inside and the ends are the extreme vertex columns.
    pub fn crossing(model: Model, rect: &Rect) -> ClusterEvent {
        let domain = match model {
            Model::TriangularSite => {
                let left = Rect::new(rect.x0, rect.x0, rect.y0, rect.y1);
                let right = Rect::new(rect.x1, rect.x1, rect.y0, rect.y1);
                let cells = crate::lattice::cells_near(model, rect)
                    .into_iter()
                    .filter(|&c| Tile::of(model, c).intersects_open_rect(rect))
                    .collect();
                ClusterDomain::new(
                    model,
                    cells,
                    |c, _| Tile::of(model, c).intersects_rect(&left),
                    |c, _| Tile::of(model, c).intersects_rect(&right),
                    |a, b, colour| linked_within(model, a, b, colour, std::slice::from_ref(rect)),
                )
            }
            Model::SquareBond => {
                let d = crate::lattice::LENGTH_DENOM;
                let vx0 = rect.x0.units().div_euclid(d) + i64::from(rect.x0.units().rem_euclid(d) != 0);
                let vx1 = rect.x1.units().div_euclid(d);
                let vy0 = rect.y0.units().div_euclid(d) + i64::from(rect.y0.units().rem_euclid(d) != 0);
                let vy1 = rect.y1.units().div_euclid(d);
                let mut cells = Vec::new();
                for x in vx0..=vx1 {
                    for y in vy0..=vy1 {
                        if x < vx1 {
                            cells.push(CellId::new(2 * x + 1, 2 * y));
                        }
                        if y < vy1 {
                            cells.push(CellId::new(2 * x, 2 * y + 1));
                        }
                    }
                }
                ClusterDomain::new(
                    model,
                    cells,
                    |c, _| c.a.div_euclid(2) == vx0 && (c.is_horizontal() || c.a == 2 * vx0),
                    |c, _| (c.a + 1).div_euclid(2) == vx1 && (c.is_horizontal() || c.a == 2 * vx1),
                    |_, _, _| true,
                )
            }
        };
        ClusterEvent::from_domain(domain, Colour::Open, 1, 0)
    }

    /// Open crossing of the n×n rhombus of triangular sites (q, s), 0 ≤ q, s < n,
    /// from the column q = 0 to the column q = n − 1 (the game of Hex).
    pub fn rhombus_crossing(n: i64) -> ClusterEvent {
        let cells = (0..n).flat_map(|s| (0..n).map(move |q| CellId::new(q, s))).collect();
        let domain =
            ClusterDomain::new(Model::TriangularSite, cells, |c, _| c.a == 0, |c, _| c.a == n - 1, |_, _, _| true);
        ClusterEvent::from_domain(domain, Colour::Open, 1, 0)
    }

    pub fn domain(&self) -> Option<&ClusterDomain> {
        self.domain.as_ref()
    }

    /// Cells the event depends on.
    pub fn support(&self) -> &[CellId] {
        self.domain.as_ref().map_or(&[], |d| d.cells())
    }

    pub fn holds<S: CellState + ?Sized>(&self, state: &S) -> bool {
        let Some(d) = &self.domain else {
            return true;
        };
        SCRATCH.with(|s| {
            let mut s = s.borrow_mut();
            s.begin(d.len());
            let order = if self.need_other > self.need_first {
                [(self.first.other(), self.need_other), (self.first, self.need_first)]
            } else {
                [(self.first, self.need_first), (self.first.other(), self.need_other)]
            };
            order.iter().all(|&(colour, need)| need == 0 || d.count_with(state, colour, need, &mut s) >= need)
        })
    }
}

/// Whether two adjacent cells are linked inside a region given as a union
/// of rectangles: for sites the common edge must meet the interior of one
/// of them, for bonds the common endpoint or face centre must lie in one.
pub fn linked_within(model: Model, a: CellId, b: CellId, colour: Colour, pieces: &[Rect]) -> bool {
    let Some((p, q)) = shared_boundary(model, a, b, colour == Colour::Closed) else {
        return false;
    };
    match model {
        Model::TriangularSite => pieces.iter().any(|r| segment_meets_open_rect(model, p, q, r)),
        Model::SquareBond => pieces.iter().any(|r| segment_meets_rect(model, p, q, r)),
    }
}

fn clip_rect(a: &Annulus, g: ArmGeometry, far: Length) -> Rect {
    let mut r = Rect::square(a.center, far);
    let c = a.center;
    let apply = |r: &mut Rect, s: Side| match s {
        Side::Lower => r.y1 = c.y,
        Side::Upper => r.y0 = c.y,
        Side::Left => r.x1 = c.x,
        Side::Right => r.x0 = c.x,
    };
    match g {
        ArmGeometry::Plane => {}
        ArmGeometry::HalfPlane(s) => apply(&mut r, s),
        ArmGeometry::QuarterPlane(s, t) => {
            apply(&mut r, s);
            apply(&mut r, t);
        }
    }
    r
}

/// Whether the tile of `c` lies in the open square `centre + (-r, r)²`.
pub fn tile_inside_open_square(model: Model, c: CellId, centre: Point, r: Length) -> bool {
    Tile::of(model, c).inside_open_rect(&Rect::square(centre, r))
}

/// Max-norm of the farthest tile vertex from `centre`, as an exact value.
pub fn tile_reach(model: Model, c: CellId, centre: Point) -> Surd {
    let (cx, cy) = (Surd::from_length(centre.x), Surd::from_length(centre.y));
    let abs = |s: Surd| if s.signum() < 0 { Surd::ZERO - s } else { s };
    Tile::of(model, c)
        .vertices()
        .iter()
        .map(|&(x, y)| abs(x - cx).max(abs(y - cy)))
        .max()
        .unwrap_or(Surd::ZERO)
}
