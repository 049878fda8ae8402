//! Exact half-lattice coordinates.
//!
//! Every vertex of a hat tiling sits on the triangular lattice spanned by
//! `(1, 0)` and `(1/2, √3/2)` in shortest-edge units. A point is stored as
//! the integer pair `(p, q)` with Cartesian position `(p/2, q·√3/2)`.
//! The map `(x, y) -> (p, q)` is affine, so orientation, incidence and
//! containment predicates can be evaluated exactly on the integers.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Neg, Sub};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The length unit `a` (hexagon edge) in shortest-edge lengths.
pub const UNIT_A: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i64, i64)", into = "(i64, i64)")]
pub struct LatticeCoord {
    pub p: i64,
    pub q: i64,
}

impl From<(i64, i64)> for LatticeCoord {
    fn from((p, q): (i64, i64)) -> Self {
        Self { p, q }
    }
}

impl From<LatticeCoord> for (i64, i64) {
    fn from(c: LatticeCoord) -> Self {
        (c.p, c.q)
    }
}

impl LatticeCoord {
    pub const ORIGIN: LatticeCoord = LatticeCoord { p: 0, q: 0 };

    pub const fn new(p: i64, q: i64) -> Self {
        Self { p, q }
    }

    pub fn x(self) -> f64 {
        self.p as f64 * 0.5
    }

    pub fn y(self) -> f64 {
        self.q as f64 * 0.5 * SQRT3
    }

    pub fn to_xy(self) -> [f64; 2] {
        [self.x(), self.y()]
    }

    /// Nearest lattice point to a Cartesian position, with the snapping error.
    pub fn snap(x: f64, y: f64) -> (Self, f64) {
        let q = (2.0 * y / SQRT3).round() as i64;
        let p = (2.0 * x).round() as i64;
        let c = Self { p, q };
        let [cx, cy] = c.to_xy();
        (c, (cx - x).hypot(cy - y))
    }

    /// True when the point belongs to the unit triangular lattice (`p ≡ q mod 2`).
    pub fn on_triangular_lattice(self) -> bool {
        (self.p - self.q).rem_euclid(2) == 0
    }

    /// `4·|v|²` as an exact integer.
    pub fn norm2_x4(self) -> i64 {
        self.p * self.p + 3 * self.q * self.q
    }

    pub fn norm(self) -> f64 {
        (self.norm2_x4() as f64).sqrt() * 0.5
    }

    /// Cross product in the `(p, q)` plane. Same sign as the Cartesian one.
    pub fn cross(self, o: Self) -> i64 {
        self.p * o.q - self.q * o.p
    }

    /// Dot product in the `(p, q)` plane; sign matches the Cartesian dot product
    /// only after the metric weighting below.
    pub fn metric_dot_x4(self, o: Self) -> i64 {
        self.p * o.p + 3 * self.q * o.q
    }

    /// Direction index `k` such that the vector points along `k·π/6`,
    /// or `None` when it does not lie on one of the twelve lattice directions.
    pub fn direction_index(self) -> Option<u8> {
        let (p, q) = (self.p, self.q);
        if p == 0 && q == 0 {
            return None;
        }
        let aligned = q == 0 || p == 0 || p == q || p == -q || p == 3 * q || p == -3 * q;
        if !aligned {
            return None;
        }
        let angle = self.y().atan2(self.x());
        let k = (angle / (std::f64::consts::PI / 6.0)).round() as i64;
        Some(k.rem_euclid(12) as u8)
    }

    /// Rotate by 60° counter-clockwise about the origin (exact on the lattice).
    pub fn rot60(self) -> Self {
        // (x, y) -> (x/2 - √3 y/2, √3 x/2 + y/2) expressed in (p, q)
        Self { p: (self.p - 3 * self.q) / 2, q: (self.p + self.q) / 2 }
    }

    /// Reflection across the x axis.
    pub fn mirror_x(self) -> Self {
        Self { p: self.p, q: -self.q }
    }
}

impl Add for LatticeCoord {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { p: self.p + o.p, q: self.q + o.q }
    }
}

impl Sub for LatticeCoord {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { p: self.p - o.p, q: self.q - o.q }
    }
}

impl Neg for LatticeCoord {
    type Output = Self;
    fn neg(self) -> Self {
        Self { p: -self.p, q: -self.q }
    }
}

/// Sum of cross products over a closed cycle. The Cartesian signed area is
/// `√3/8` times this value.
pub fn shoelace_x8_over_sqrt3(cycle: &[LatticeCoord]) -> i64 {
    let n = cycle.len();
    (0..n).map(|i| cycle[i].cross(cycle[(i + 1) % n])).sum()
}

pub fn area_from_shoelace(s: i64) -> f64 {
    s as f64 * SQRT3 / 8.0
}

/// Exact test for `c` lying strictly inside the segment `a`–`b`.
pub fn strictly_inside_segment(c: LatticeCoord, a: LatticeCoord, b: LatticeCoord) -> bool {
    if (b - a).cross(c - a) != 0 {
        return false;
    }
    let t = (c - a).metric_dot_x4(b - a);
    t > 0 && t < (b - a).norm2_x4()
}

/// Exact area centroid of a simple polygon in `(p, q)` coordinates, as a
/// rational `(num_p, num_q, den)` with `p = num_p / den`.
pub fn centroid_rational(cycle: &[LatticeCoord]) -> (i64, i64, i64) {
    let n = cycle.len();
    let mut cp = 0i64;
    let mut cq = 0i64;
    let mut a = 0i64;
    for i in 0..n {
        let v = cycle[i];
        let w = cycle[(i + 1) % n];
        let c = v.cross(w);
        a += c;
        cp += (v.p + w.p) * c;
        cq += (v.q + w.q) * c;
    }
    (cp, cq, 3 * a)
}

pub fn centroid_xy(cycle: &[LatticeCoord]) -> [f64; 2] {
    let (np, nq, d) = centroid_rational(cycle);
    let p = np as f64 / d as f64;
    let q = nq as f64 / d as f64;
    [p * 0.5, q * 0.5 * SQRT3]
}
