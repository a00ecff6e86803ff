//! Points and boxes of the square lattice.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A site of the integer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct LatticePoint {
    pub x1: i64,
    pub x2: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x1: 0, x2: 0 };

    pub const fn new(x1: i64, x2: i64) -> Self {
        Self { x1, x2 }
    }

    /// Euclidean length.
    pub fn norm2(self) -> f64 {
        ((self.x1 * self.x1 + self.x2 * self.x2) as f64).sqrt()
    }

    pub fn norm_sup(self) -> i64 {
        self.x1.abs().max(self.x2.abs())
    }

    /// Euclidean distance.
    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm2()
    }

    pub fn dist_sup(self, other: Self) -> i64 {
        (self - other).norm_sup()
    }

    /// z-component of the cross product `self × other`.
    pub fn cross(self, other: Self) -> i64 {
        self.x1 * other.x2 - self.x2 * other.x1
    }

    /// Quarter turn counterclockwise about `center`.
    pub fn rotate_about(self, center: Self) -> Self {
        let v = self - center;
        center + Self::new(-v.x2, v.x1)
    }
}

impl Add for LatticePoint {
    type Output = Self;
    fn add(self, other: Self) -> Self {
        Self::new(self.x1 + other.x1, self.x2 + other.x2)
    }
}

impl Sub for LatticePoint {
    type Output = Self;
    fn sub(self, other: Self) -> Self {
        Self::new(self.x1 - other.x1, self.x2 - other.x2)
    }
}

impl Neg for LatticePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

impl From<(i64, i64)> for LatticePoint {
    fn from((x1, x2): (i64, i64)) -> Self {
        Self::new(x1, x2)
    }
}

/// Twice the oriented area of the triangle (x, y, z); exact.
pub fn twice_signed_area(x: LatticePoint, y: LatticePoint, z: LatticePoint) -> i64 {
    (y - x).cross(z - x)
}

/// Unsigned triangle area by the shoelace formula.
pub fn triangle_area(x: LatticePoint, y: LatticePoint, z: LatticePoint) -> f64 {
    twice_signed_area(x, y, z).abs() as f64 / 2.0
}

/// The sup-norm box `C(a, N) = { x : |x_mu - a_mu| <= N }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxRegion {
    pub center: LatticePoint,
    pub radius: u32,
}

impl BoxRegion {
    pub fn new(center: LatticePoint, radius: u32) -> Self {
        Self { center, radius }
    }

    pub fn centered(radius: u32) -> Self {
        Self::new(LatticePoint::ORIGIN, radius)
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: LatticePoint) -> bool {
        let r = self.radius as i64;
        (x.x1 - self.center.x1).abs() <= r && (x.x2 - self.center.x2).abs() <= r
    }

    /// Row index of `x` in the lexicographic ordering on (x1, x2).
    pub fn index_of(&self, x: LatticePoint) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let r = self.radius as i64;
        let i1 = (x.x1 - self.center.x1 + r) as usize;
        let i2 = (x.x2 - self.center.x2 + r) as usize;
        Some(i1 * self.side() + i2)
    }

    pub fn point_at(&self, index: usize) -> LatticePoint {
        let side = self.side();
        let r = self.radius as i64;
        LatticePoint::new(
            self.center.x1 - r + (index / side) as i64,
            self.center.x2 - r + (index % side) as i64,
        )
    }

    pub fn points(&self) -> Vec<LatticePoint> {
        box_points(self.center, self.radius)
    }

    /// Sup-norm distance from `x` to the complement of the box, minus one
    /// (0 on the outermost ring).
    pub fn depth(&self, x: LatticePoint) -> i64 {
        self.radius as i64 - x.dist_sup(self.center)
    }
}

/// All points of `C(a, N)` in lexicographic order.
pub fn box_points(a: LatticePoint, n: u32) -> Vec<LatticePoint> {
    let r = n as i64;
    (a.x1 - r..=a.x1 + r)
        .flat_map(|x1| (a.x2 - r..=a.x2 + r).map(move |x2| LatticePoint::new(x1, x2)))
        .collect()
}
