//! Lengths, rectangles and square annuli with exact coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lengths are integer multiples of 1/24.
pub const LENGTH_DENOM: i64 = 24;

/// A nonnegative or signed length in units of 1/24.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Length(i64);

impl Length {
    pub const ZERO: Length = Length(0);

    pub const fn from_units(u: i64) -> Length {
        Length(u)
    }

    pub const fn from_int(n: i64) -> Length {
        Length(n * LENGTH_DENOM)
    }

    /// Parses a decimal length; it must be a multiple of 1/24.
    pub fn from_f64(x: f64) -> Result<Length> {
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!("length {x} is not finite")));
        }
        let u = (x * LENGTH_DENOM as f64).round();
        if (u - x * LENGTH_DENOM as f64).abs() > 1e-6 || u.abs() > 1e15 {
            return Err(Error::InvalidParameter(format!("length {x} is not a multiple of 1/{LENGTH_DENOM}")));
        }
        Ok(Length(u as i64))
    }

    pub const fn units(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / LENGTH_DENOM as f64
    }

    /// Half the length, rounded down to the grid.
    pub fn halve(self) -> Length {
        Length(self.0.div_euclid(2))
    }

    pub fn abs(self) -> Length {
        Length(self.0.abs())
    }
}

impl std::ops::Add for Length {
    type Output = Length;
    fn add(self, o: Length) -> Length {
        Length(self.0 + o.0)
    }
}

impl std::ops::Sub for Length {
    type Output = Length;
    fn sub(self, o: Length) -> Length {
        Length(self.0 - o.0)
    }
}

impl std::ops::Neg for Length {
    type Output = Length;
    fn neg(self) -> Length {
        Length(-self.0)
    }
}

impl std::fmt::Display for Length {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: Length,
    pub y: Length,
}

impl Point {
    pub const ORIGIN: Point = Point { x: Length::ZERO, y: Length::ZERO };

    pub fn new(x: Length, y: Length) -> Point {
        Point { x, y }
    }
}

/// Closed axis-parallel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: Length,
    pub x1: Length,
    pub y0: Length,
    pub y1: Length,
}

impl Rect {
    pub fn new(x0: Length, x1: Length, y0: Length, y1: Length) -> Rect {
        Rect { x0, x1, y0, y1 }
    }

    /// The square c + [-r, r]².
    pub fn square(c: Point, r: Length) -> Rect {
        Rect::new(c.x - r, c.x + r, c.y - r, c.y + r)
    }

    pub fn is_empty(&self) -> bool {
        self.x0 > self.x1 || self.y0 > self.y1
    }

    pub fn intersection(&self, o: &Rect) -> Rect {
        Rect::new(self.x0.max(o.x0), self.x1.min(o.x1), self.y0.max(o.y0), self.y1.min(o.y1))
    }
}

/// The role an annulus plays inside an annulus structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnulusKind {
    Centered,
    Interior,
    Side,
    Corner,
    R0Decorating,
}

/// The closed square annulus center + ([-R,R]² \ (-r,r)²).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annulus {
    pub center: Point,
    pub inner: Length,
    pub outer: Length,
    pub kind: AnnulusKind,
}

impl Annulus {
    pub fn new(center: Point, inner: Length, outer: Length, kind: AnnulusKind) -> Result<Annulus> {
        if inner < Length::ZERO || outer < Length::ZERO {
            return Err(Error::InvalidParameter("annulus radii must be nonnegative".into()));
        }
        Ok(Annulus { center, inner, outer, kind })
    }

    /// Centered annulus at the origin.
    pub fn centered(inner: Length, outer: Length) -> Annulus {
        Annulus { center: Point::ORIGIN, inner, outer, kind: AnnulusKind::Centered }
    }

    /// An annulus with r ≥ R contains nothing.
    pub fn is_empty(&self) -> bool {
        self.inner >= self.outer
    }

    pub fn outer_square(&self) -> Rect {
        Rect::square(self.center, self.outer)
    }

    pub fn inner_square(&self) -> Rect {
        Rect::square(self.center, self.inner)
    }

    /// Rectangles whose interiors cover the interior of the annulus,
    /// (-R,R)² minus [-r,r]² around the centre. With r = 0 the centre point
    /// is kept, so this is the whole open square.
    pub fn open_strips(&self) -> Vec<Rect> {
        if self.is_empty() {
            return Vec::new();
        }
        let (c, r, big) = (self.center, self.inner, self.outer);
        if r == Length::ZERO {
            return vec![self.outer_square()];
        }
        vec![
            Rect::new(c.x - big, c.x + big, c.y - big, c.y - r),
            Rect::new(c.x - big, c.x + big, c.y + r, c.y + big),
            Rect::new(c.x - big, c.x - r, c.y - big, c.y + big),
            Rect::new(c.x + r, c.x + big, c.y - big, c.y + big),
        ]
    }

    /// Four closed rectangles whose union is the annulus.
    pub fn strips(&self) -> Vec<Rect> {
        if self.is_empty() {
            return Vec::new();
        }
        let (c, r, big) = (self.center, self.inner, self.outer);
        vec![
            Rect::new(c.x - big, c.x + big, c.y - big, c.y - r),
            Rect::new(c.x - big, c.x + big, c.y + r, c.y + big),
            Rect::new(c.x - big, c.x - r, c.y - r, c.y + r),
            Rect::new(c.x + r, c.x + big, c.y - r, c.y + r),
        ]
    }
}

/// A shape tested for percolation-disjointness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Annulus(Annulus),
    Rect(Rect),
}

impl Shape {
    /// Closed rectangles whose union is the shape.
    pub fn pieces(&self) -> Vec<Rect> {
        match self {
            Shape::Annulus(a) => a.strips(),
            Shape::Rect(r) if r.is_empty() => Vec::new(),
            Shape::Rect(r) => vec![*r],
        }
    }

    pub fn bbox(&self) -> Option<Rect> {
        match self {
            Shape::Annulus(a) if a.is_empty() => None,
            Shape::Annulus(a) => Some(a.outer_square()),
            Shape::Rect(r) if r.is_empty() => None,
            Shape::Rect(r) => Some(*r),
        }
    }
}

impl From<Annulus> for Shape {
    fn from(a: Annulus) -> Shape {
        Shape::Annulus(a)
    }
}

impl From<Rect> for Shape {
    fn from(r: Rect) -> Shape {
        Shape::Rect(r)
    }
}
