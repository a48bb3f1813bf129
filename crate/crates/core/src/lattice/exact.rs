//! Exact plane geometry over Q(√3) for tile predicates.
//!
//! Every coordinate that occurs is of the form (a + b√3)/24 with integers
//! a, b: lattice positions, hexagon and diamond vertices, and lengths that are
//! multiples of 1/24.

use std::cmp::Ordering;

use super::shapes::{Length, Rect};
use super::{CellId, Model};

/// The number (rat + root·√3) / 24.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Surd {
    pub rat: i64,
    pub root: i64,
}

impl Surd {
    pub const ZERO: Surd = Surd { rat: 0, root: 0 };

    pub fn from_length(l: Length) -> Surd {
        Surd { rat: l.units(), root: 0 }
    }

    pub fn signum(self) -> i32 {
        let a = self.rat as i128;
        let b = self.root as i128;
        if a >= 0 && b >= 0 {
            return if a == 0 && b == 0 { 0 } else { 1 };
        }
        if a <= 0 && b <= 0 {
            return -1;
        }
        // opposite signs: compare a² with 3b²
        let l = a * a;
        let r = 3 * b * b;
        match l.cmp(&r) {
            Ordering::Greater => a.signum() as i32,
            Ordering::Less => b.signum() as i32,
            Ordering::Equal => 0,
        }
    }

    pub fn to_f64(self) -> f64 {
        (self.rat as f64 + self.root as f64 * 3f64.sqrt()) / 24.0
    }

    /// Product with p + q√3 for small integers p, q.
    fn scale(self, p: i64, q: i64) -> Surd {
        Surd {
            rat: self.rat * p + 3 * self.root * q,
            root: self.rat * q + self.root * p,
        }
    }
}

impl std::ops::Add for Surd {
    type Output = Surd;
    fn add(self, o: Surd) -> Surd {
        Surd { rat: self.rat + o.rat, root: self.root + o.root }
    }
}

impl std::ops::Sub for Surd {
    type Output = Surd;
    fn sub(self, o: Surd) -> Surd {
        Surd { rat: self.rat - o.rat, root: self.root - o.root }
    }
}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Surd) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Surd {
    fn cmp(&self, other: &Surd) -> Ordering {
        (*self - *other).signum().cmp(&0)
    }
}

pub type SPoint = (Surd, Surd);

/// Separating-axis direction (x.0 + x.1√3, y.0 + y.1√3).
type Axis = ((i64, i64), (i64, i64));

const AXIS_X: Axis = ((1, 0), (0, 0));
const AXIS_Y: Axis = ((0, 0), (1, 0));
const HEX_AXES: [Axis; 2] = [((1, 0), (0, 1)), ((-1, 0), (0, 1))];
const DIAMOND_AXES: [Axis; 2] = [((1, 0), (1, 0)), ((1, 0), (-1, 0))];

fn project(p: SPoint, axis: Axis) -> Surd {
    p.0.scale(axis.0 .0, axis.0 .1) + p.1.scale(axis.1 .0, axis.1 .1)
}

/// The closed tile of a cell: the dual hexagon of a triangular site or the
/// diamond spanned by the endpoints of an edge and the two adjacent face
/// centres.
#[derive(Clone, Debug, PartialEq)]
pub struct Tile {
    model: Model,
    vertices: Vec<SPoint>,
    center: SPoint,
}

/// Position of a cell in exact coordinates.
pub fn cell_center(model: Model, c: CellId) -> SPoint {
    match model {
        Model::TriangularSite => (
            Surd { rat: 24 * c.a + 12 * c.b, root: 0 },
            Surd { rat: 0, root: 12 * c.b },
        ),
        Model::SquareBond => (Surd { rat: 12 * c.a, root: 0 }, Surd { rat: 12 * c.b, root: 0 }),
    }
}

impl Tile {
    pub fn of(model: Model, c: CellId) -> Tile {
        let center = cell_center(model, c);
        let offsets: &[(Surd, Surd)] = match model {
            Model::TriangularSite => &[
                (Surd { rat: 12, root: 0 }, Surd { rat: 0, root: 4 }),
                (Surd { rat: 0, root: 0 }, Surd { rat: 0, root: 8 }),
                (Surd { rat: -12, root: 0 }, Surd { rat: 0, root: 4 }),
                (Surd { rat: -12, root: 0 }, Surd { rat: 0, root: -4 }),
                (Surd { rat: 0, root: 0 }, Surd { rat: 0, root: -8 }),
                (Surd { rat: 12, root: 0 }, Surd { rat: 0, root: -4 }),
            ],
            Model::SquareBond => &[
                (Surd { rat: 12, root: 0 }, Surd::ZERO),
                (Surd::ZERO, Surd { rat: 12, root: 0 }),
                (Surd { rat: -12, root: 0 }, Surd::ZERO),
                (Surd::ZERO, Surd { rat: -12, root: 0 }),
            ],
        };
        let vertices = offsets.iter().map(|&(dx, dy)| (center.0 + dx, center.1 + dy)).collect();
        Tile { model, vertices, center }
    }

    pub fn vertices(&self) -> &[SPoint] {
        &self.vertices
    }

    pub fn center(&self) -> SPoint {
        self.center
    }

    /// Conservative floating bounding box.
    fn approx_bbox(&self) -> (f64, f64, f64, f64) {
        let (cx, cy) = (self.center.0.to_f64(), self.center.1.to_f64());
        match self.model {
            Model::TriangularSite => (cx - 0.5, cx + 0.5, cy - 0.57736, cy + 0.57736),
            Model::SquareBond => (cx - 0.5, cx + 0.5, cy - 0.5, cy + 0.5),
        }
    }

    fn axes(&self) -> &'static [Axis; 2] {
        match self.model {
            Model::TriangularSite => &HEX_AXES,
            Model::SquareBond => &DIAMOND_AXES,
        }
    }

    /// Whether the closed tile meets the closed rectangle.
    pub fn intersects_rect(&self, r: &Rect) -> bool {
        self.meets(r, false)
    }

    /// Whether the closed tile meets the interior of the rectangle.
    pub fn intersects_open_rect(&self, r: &Rect) -> bool {
        self.meets(r, true)
    }

    fn meets(&self, r: &Rect, open: bool) -> bool {
        if open && (r.x0 >= r.x1 || r.y0 >= r.y1) {
            return false;
        }
        let (x0, x1, y0, y1) = (r.x0.to_f64(), r.x1.to_f64(), r.y0.to_f64(), r.y1.to_f64());
        let (bx0, bx1, by0, by1) = self.approx_bbox();
        const EPS: f64 = 1e-7;
        if bx1 < x0 - EPS || bx0 > x1 + EPS || by1 < y0 - EPS || by0 > y1 + EPS {
            return false;
        }
        if bx0 > x0 + EPS && bx1 < x1 - EPS && by0 > y0 + EPS && by1 < y1 - EPS {
            return true;
        }
        let corners = rect_corners(r);
        let mut axes: Vec<Axis> = vec![AXIS_X, AXIS_Y];
        axes.extend_from_slice(self.axes());
        axes.iter().all(|&axis| overlap(extent(&self.vertices, axis), extent(&corners, axis), open))
    }

    /// Whether the closed tile lies in the open rectangle.
    pub fn inside_open_rect(&self, r: &Rect) -> bool {
        let (x0, x1, y0, y1) = (r.x0.to_f64(), r.x1.to_f64(), r.y0.to_f64(), r.y1.to_f64());
        let (bx0, bx1, by0, by1) = self.approx_bbox();
        const EPS: f64 = 1e-7;
        if bx0 > x0 + EPS && bx1 < x1 - EPS && by0 > y0 + EPS && by1 < y1 - EPS {
            return true;
        }
        if bx1 < x0 - EPS || bx0 > x1 + EPS || by1 < y0 - EPS || by0 > y1 + EPS {
            return false;
        }
        let (sx0, sx1, sy0, sy1) = (
            Surd::from_length(r.x0),
            Surd::from_length(r.x1),
            Surd::from_length(r.y0),
            Surd::from_length(r.y1),
        );
        self.vertices.iter().all(|&(x, y)| x > sx0 && x < sx1 && y > sy0 && y < sy1)
    }

    /// Whether every vertex satisfies `pred` (the tile is convex, so this
    /// decides containment in a convex closed set given by `pred`).
    pub fn all_vertices(&self, pred: impl Fn(SPoint) -> bool) -> bool {
        self.vertices.iter().all(|&v| pred(v))
    }

    pub fn any_vertex(&self, pred: impl Fn(SPoint) -> bool) -> bool {
        self.vertices.iter().any(|&v| pred(v))
    }
}

/// Whether the closed segment [p, q] meets the closed rectangle. The segment
/// must be a tile edge (its normal is one of the tile axes) or a point.
pub fn segment_meets_rect(model: Model, p: SPoint, q: SPoint, r: &Rect) -> bool {
    segment_meets(model, p, q, r, false)
}

/// Like [`segment_meets_rect`] for the interior of the rectangle.
pub fn segment_meets_open_rect(model: Model, p: SPoint, q: SPoint, r: &Rect) -> bool {
    segment_meets(model, p, q, r, true)
}

fn segment_meets(model: Model, p: SPoint, q: SPoint, r: &Rect, open: bool) -> bool {
    if open && (r.x0 >= r.x1 || r.y0 >= r.y1) {
        return false;
    }
    let (x0, x1, y0, y1) = (r.x0.to_f64(), r.x1.to_f64(), r.y0.to_f64(), r.y1.to_f64());
    let (px, py, qx, qy) = (p.0.to_f64(), p.1.to_f64(), q.0.to_f64(), q.1.to_f64());
    const EPS: f64 = 1e-7;
    if px.max(qx) < x0 - EPS || px.min(qx) > x1 + EPS || py.max(qy) < y0 - EPS || py.min(qy) > y1 + EPS {
        return false;
    }
    if px.min(qx) > x0 + EPS && px.max(qx) < x1 - EPS && py.min(qy) > y0 + EPS && py.max(qy) < y1 - EPS {
        return true;
    }
    let corners = rect_corners(r);
    let seg = [p, q];
    let mut axes: Vec<Axis> = vec![AXIS_X, AXIS_Y];
    axes.extend_from_slice(match model {
        Model::TriangularSite => &HEX_AXES,
        Model::SquareBond => &DIAMOND_AXES,
    });
    axes.iter().all(|&axis| overlap(extent(&seg, axis), extent(&corners, axis), open))
}

/// Whether two projected intervals overlap; with `open`, touching does not
/// count.
fn overlap(a: (Surd, Surd), b: (Surd, Surd), open: bool) -> bool {
    if open {
        a.1 > b.0 && b.1 > a.0
    } else {
        a.1 >= b.0 && b.1 >= a.0
    }
}

/// The boundary piece two adjacent cells share along a link of the given
/// kind: a hexagon edge for sites; for bonds the common endpoint (open
/// links) or the common face centre (closed links). Returned as the two
/// endpoints of a possibly degenerate segment.
pub fn shared_boundary(model: Model, a: CellId, b: CellId, closed_link: bool) -> Option<(SPoint, SPoint)> {
    match model {
        Model::TriangularSite => {
            let ta = Tile::of(model, a);
            let tb = Tile::of(model, b);
            let common: Vec<SPoint> = ta.vertices().iter().copied().filter(|v| tb.vertices().contains(v)).collect();
            (common.len() == 2).then(|| (common[0], common[1]))
        }
        Model::SquareBond => {
            let pa = bond_points(a, closed_link);
            let pb = bond_points(b, closed_link);
            let shared = pa.iter().find(|p| pb.contains(p))?;
            Some((*shared, *shared))
        }
    }
}

/// The two endpoints of a bond (`dual` false) or of its dual edge, which
/// joins the centres of the two faces beside it.
pub fn bond_segment(c: CellId, dual: bool) -> (SPoint, SPoint) {
    let [p, q] = bond_points(c, dual);
    (p, q)
}

fn bond_points(c: CellId, faces: bool) -> [SPoint; 2] {
    // doubled coordinates
    let ends = if c.is_horizontal() != faces {
        [(c.a - 1, c.b), (c.a + 1, c.b)]
    } else {
        [(c.a, c.b - 1), (c.a, c.b + 1)]
    };
    ends.map(|(x, y)| (Surd { rat: 12 * x, root: 0 }, Surd { rat: 12 * y, root: 0 }))
}

fn rect_corners(r: &Rect) -> [SPoint; 4] {
    let (x0, x1, y0, y1) = (
        Surd::from_length(r.x0),
        Surd::from_length(r.x1),
        Surd::from_length(r.y0),
        Surd::from_length(r.y1),
    );
    [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
}

fn extent(points: &[SPoint], axis: Axis) -> (Surd, Surd) {
    let mut lo = project(points[0], axis);
    let mut hi = lo;
    for &p in &points[1..] {
        let v = project(p, axis);
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surd_sign_is_exact() {
        // 7 - 4√3 > 0 since 49 > 48
        assert_eq!(Surd { rat: 7, root: -4 }.signum(), 1);
        // 6 - 4√3 < 0
        assert_eq!(Surd { rat: 6, root: -4 }.signum(), -1);
        assert_eq!(Surd { rat: -7, root: 4 }.signum(), -1);
        assert_eq!(Surd { rat: 0, root: 0 }.signum(), 0);
        assert_eq!(Surd { rat: 3, root: 5 }.signum(), 1);
    }

    #[test]
    fn hexagon_vertices_at_circumradius() {
        let t = Tile::of(Model::TriangularSite, CellId::new(0, 0));
        for v in t.vertices() {
            let r2 = v.0.to_f64().powi(2) + v.1.to_f64().powi(2);
            assert!((r2 - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn neighbouring_hexagons_share_an_edge() {
        let a = Tile::of(Model::TriangularSite, CellId::new(0, 0));
        let b = Tile::of(Model::TriangularSite, CellId::new(1, 0));
        let shared = a.vertices().iter().filter(|v| b.vertices().contains(v)).count();
        assert_eq!(shared, 2);
    }

    #[test]
    fn touching_counts_as_intersecting() {
        let t = Tile::of(Model::SquareBond, CellId::new(1, 0));
        // diamond around (1/2, 0) reaches x = 1 exactly
        let r = Rect::new(Length::from_int(1), Length::from_int(2), Length::from_int(-1), Length::from_int(1));
        assert!(t.intersects_rect(&r));
        let r = Rect::new(Length::from_units(25), Length::from_int(2), Length::from_int(-1), Length::from_int(1));
        assert!(!t.intersects_rect(&r));
    }
}
