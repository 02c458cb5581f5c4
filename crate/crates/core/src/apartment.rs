//! Euclidean apartments of type Ã₂ and C̃₂ in exact lattice coordinates.
//!
//! Points are written in a basis of the special-vertex lattice, and the
//! metric comes from a rational Gram matrix, so inner products, squared
//! lengths and Busemann values are exact. Adjacent special vertices are at
//! distance 1 in both types.
//!
//! Ã₂ chart: basis f₁, f₂ of unit vectors at angle π/3.
//! C̃₂ chart: orthonormal basis, walls `x, y, x ± y ∈ ℤ`.

use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::exact::{rat, Angle, Rational, Root};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AffineKind {
    A2affine,
    C2affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ApartmentPoint(pub [Rational; 2]);

impl ApartmentPoint {
    pub fn new(x: Rational, y: Rational) -> Self {
        ApartmentPoint([x, y])
    }

    pub fn int(x: i64, y: i64) -> Self {
        ApartmentPoint([Rational::from_integer(x), Rational::from_integer(y)])
    }

    pub fn sub(&self, o: &ApartmentPoint) -> [Rational; 2] {
        [self.0[0] - o.0[0], self.0[1] - o.0[1]]
    }

    pub fn add(&self, v: [Rational; 2]) -> ApartmentPoint {
        ApartmentPoint([self.0[0] + v[0], self.0[1] + v[1]])
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|c| c.is_integer())
    }
}

/// A geodesic ray; the direction need not be a unit vector; every quantity
/// derived from it is normalized by the direction's length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ray {
    pub base: ApartmentPoint,
    pub direction: [Rational; 2],
}

impl Ray {
    pub fn new(base: ApartmentPoint, direction: [Rational; 2]) -> Result<Ray> {
        if direction.iter().all(Zero::is_zero) {
            return Err(ForgeError::DegenerateDirection);
        }
        Ok(Ray { base, direction })
    }

    pub fn at(&self, s: Rational) -> ApartmentPoint {
        self.base.add([self.direction[0] * s, self.direction[1] * s])
    }
}

/// One wall family: walls are the level sets `⟨normal, x⟩ ∈ ℤ`, parallel to
/// `direction`. The half-wall along `+direction` has type `ray_types.0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallFamily {
    pub normal: [i64; 2],
    pub direction: [i64; 2],
    pub ray_types: (u8, u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wall {
    pub family: WallFamily,
    pub level: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylData {
    pub kind: AffineKind,
    /// Gram matrix of the chart basis.
    pub gram: [[Rational; 2]; 2],
    pub families: Vec<WallFamily>,
}

impl WeylData {
    pub fn new(kind: AffineKind) -> WeylData {
        match kind {
            AffineKind::A2affine => WeylData {
                kind,
                gram: [[rat(1, 1), rat(1, 2)], [rat(1, 2), rat(1, 1)]],
                // half-wall types alternate going round: f₁, f₂, f₂ − f₁, −f₁, …
                families: vec![
                    WallFamily { normal: [0, 1], direction: [1, 0], ray_types: (0, 1) },
                    WallFamily { normal: [1, 0], direction: [0, 1], ray_types: (1, 0) },
                    WallFamily { normal: [1, 1], direction: [-1, 1], ray_types: (0, 1) },
                ],
            },
            AffineKind::C2affine => WeylData {
                kind,
                gram: [[rat(1, 1), rat(0, 1)], [rat(0, 1), rat(1, 1)]],
                families: vec![
                    WallFamily { normal: [0, 1], direction: [1, 0], ray_types: (0, 0) },
                    WallFamily { normal: [1, 0], direction: [0, 1], ray_types: (0, 0) },
                    WallFamily { normal: [1, -1], direction: [1, 1], ray_types: (1, 1) },
                    WallFamily { normal: [1, 1], direction: [-1, 1], ray_types: (1, 1) },
                ],
            },
        }
    }

    pub fn inner(&self, u: [Rational; 2], v: [Rational; 2]) -> Rational {
        let g = &self.gram;
        u[0] * (g[0][0] * v[0] + g[0][1] * v[1]) + u[1] * (g[1][0] * v[0] + g[1][1] * v[1])
    }

    pub fn norm2(&self, v: [Rational; 2]) -> Rational {
        self.inner(v, v)
    }

    pub fn distance(&self, x: &ApartmentPoint, y: &ApartmentPoint) -> Root {
        Root::sqrt(self.norm2(x.sub(y)))
    }

    /// `−⟨x − base, direction⟩ / |direction|`.
    pub fn busemann(&self, r: &Ray, x: &ApartmentPoint) -> Root {
        let ip = self.busemann_scaled(r, x);
        Root::signed(
            if ip.is_negative() { -1 } else { 1 },
            ip * ip / self.norm2(r.direction),
        )
    }

    /// `−⟨x − base, direction⟩`: the Busemann value times `|direction|`.
    pub fn busemann_scaled(&self, r: &Ray, x: &ApartmentPoint) -> Rational {
        -self.inner(x.sub(&r.base), r.direction)
    }

    pub fn horoball_contains(&self, r: &Ray, level: Root, x: &ApartmentPoint) -> bool {
        self.busemann(r, x) <= level
    }

    pub fn vertex_angle(
        &self,
        a: &ApartmentPoint,
        u: &ApartmentPoint,
        v: &ApartmentPoint,
    ) -> Result<VertexAngle> {
        self.angle_between(u.sub(a), v.sub(a))
    }

    /// Angle between two vectors; either may be a ray direction.
    pub fn angle_between(&self, u: [Rational; 2], v: [Rational; 2]) -> Result<VertexAngle> {
        let (nu, nv) = (self.norm2(u), self.norm2(v));
        if nu.is_zero() || nv.is_zero() {
            return Err(ForgeError::DegenerateDirection);
        }
        let ip = self.inner(u, v);
        Ok(VertexAngle {
            cos: Root::signed(if ip.is_negative() { -1 } else { 1 }, ip * ip / (nu * nv)),
        })
    }

    /// Walls through `p`, one per family whose level at `p` is an integer.
    pub fn walls_through(&self, p: &ApartmentPoint) -> Vec<Wall> {
        self.families
            .iter()
            .filter_map(|f| {
                let level = Rational::from_integer(f.normal[0]) * p.0[0]
                    + Rational::from_integer(f.normal[1]) * p.0[1];
                level.is_integer().then(|| Wall {
                    family: *f,
                    level: level.to_integer(),
                })
            })
            .collect()
    }

    /// Half-walls leaving `p` along wall directions, with their types.
    pub fn half_walls_through(&self, p: &ApartmentPoint) -> Vec<([i64; 2], u8)> {
        self.walls_through(p)
            .into_iter()
            .flat_map(|w| {
                let d = w.family.direction;
                [(d, w.family.ray_types.0), ([-d[0], -d[1]], w.family.ray_types.1)]
            })
            .collect()
    }

    pub fn is_special_vertex(&self, p: &ApartmentPoint) -> bool {
        self.walls_through(p).len() == self.families.len()
    }

    /// Reflection in a wall.
    pub fn reflect(&self, w: &Wall, x: &ApartmentPoint) -> ApartmentPoint {
        let d = w.family.direction.map(Rational::from_integer);
        let n = w.family.normal;
        // a point on the wall: solve ⟨normal, p₀⟩ = level with integers
        let p0 = if n[0] != 0 {
            ApartmentPoint::new(rat(w.level, n[0]), rat(0, 1))
        } else {
            ApartmentPoint::new(rat(0, 1), rat(w.level, n[1]))
        };
        let v = x.sub(&p0);
        let k = Rational::from_integer(2) * self.inner(v, d) / self.norm2(d);
        p0.add([k * d[0] - v[0], k * d[1] - v[1]])
    }

    /// Euclidean coordinates for drawing.
    pub fn to_plane(&self, p: &ApartmentPoint) -> (f64, f64) {
        let f = |r: Rational| *r.numer() as f64 / *r.denom() as f64;
        match self.kind {
            AffineKind::A2affine => (f(p.0[0]) + 0.5 * f(p.0[1]), f(p.0[1]) * 3f64.sqrt() / 2.0),
            AffineKind::C2affine => (f(p.0[0]), f(p.0[1])),
        }
    }
}

/// An angle known through its exact cosine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexAngle {
    pub cos: Root,
}

impl VertexAngle {
    pub fn radians(&self) -> f64 {
        self.cos.to_f64().clamp(-1.0, 1.0).acos()
    }

    /// Exact `self ≥ a`, for angles with tabulated cosine.
    pub fn at_least(&self, a: Angle) -> Option<bool> {
        Some(self.cos <= a.cos()?)
    }

    /// The angle as a multiple of π when its cosine is tabulated.
    pub fn as_angle(&self) -> Option<Angle> {
        (0..=12)
            .map(|k| Angle::pi_frac(k, 12))
            .find(|a| a.cos() == Some(self.cos))
    }
}

/// The Busemann increment guaranteed by a step of length `d` leaving at
/// `angle` from the ray direction: `d · max(0, −cos angle)`. `None` when
/// the cosine of `angle` has no exact form.
pub fn busemann_step_bound(d: Root, angle: Angle) -> Option<Root> {
    let c = angle.cos()?;
    Some(if c.sign() >= 0 { Root::zero() } else { d.mul(&c.neg()) })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub label: String,
    pub at: ApartmentPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRay {
    pub label: String,
    pub ray: Ray,
    /// Horoball boundary level to draw, if any.
    pub level: Option<Root>,
}

/// Points, rays and walls in one apartment, for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub kind: AffineKind,
    pub points: Vec<LabeledPoint>,
    pub rays: Vec<LabeledRay>,
    pub walls: Vec<Wall>,
}

impl Scene {
    pub fn to_svg(&self) -> String {
        let w = WeylData::new(self.kind);
        let pts: Vec<(f64, f64)> = self.points.iter().map(|p| w.to_plane(&p.at)).collect();
        let (mut x0, mut y0, mut x1, mut y1) = (-1.0f64, -1.0f64, 1.0f64, 1.0f64);
        for &(x, y) in &pts {
            x0 = x0.min(x - 1.0);
            y0 = y0.min(y - 1.0);
            x1 = x1.max(x + 1.0);
            y1 = y1.max(y + 1.0);
        }
        let scale = 60.0;
        let tx = |x: f64| (x - x0) * scale;
        let ty = |y: f64| (y1 - y) * scale;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}">"#,
            (x1 - x0) * scale,
            (y1 - y0) * scale
        );
        let span = (x1 - x0).max(y1 - y0) * 2.0;
        for wall in &self.walls {
            let d = wall.family.direction.map(Rational::from_integer);
            let n = wall.family.normal;
            let p0 = if n[0] != 0 {
                ApartmentPoint::new(rat(wall.level, n[0]), rat(0, 1))
            } else {
                ApartmentPoint::new(rat(0, 1), rat(wall.level, n[1]))
            };
            let (px, py) = w.to_plane(&p0);
            let (qx, qy) = w.to_plane(&p0.add(d));
            let (dx, dy) = (qx - px, qy - py);
            let len = (dx * dx + dy * dy).sqrt();
            let (dx, dy) = (dx / len * span, dy / len * span);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#bbb"/>"##,
                tx(px - dx),
                ty(py - dy),
                tx(px + dx),
                ty(py + dy)
            );
        }
        for r in &self.rays {
            let (bx, by) = w.to_plane(&r.ray.base);
            let (ex, ey) = w.to_plane(&r.ray.at(rat(1, 1)));
            let (dx, dy) = (ex - bx, ey - by);
            let len = (dx * dx + dy * dy).sqrt();
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c33"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"##,
                tx(bx),
                ty(by),
                tx(bx + dx / len * span),
                ty(by + dy / len * span),
                tx(bx + dx / len * 0.8),
                ty(by + dy / len * 0.8),
                r.label
            );
        }
        for (p, &(x, y)) in self.points.iter().zip(&pts) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3"/><text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
                tx(x),
                ty(y),
                tx(x) + 5.0,
                ty(y) - 5.0,
                p.label
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
