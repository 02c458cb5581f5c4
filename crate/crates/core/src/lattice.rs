//! The Ã₂ building of SL₃ over 𝔽_q((t)), at desk scale.
//!
//! Vertices are homothety classes of 𝔽_q[[t]]-lattices, stored as a lower
//! triangular basis in Hermite form. Distances come from elementary divisors.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::Automorphism;
use crate::error::{ForgeError, Result};
use crate::exact::{rat, Angle, Rational, Root};
use crate::field::{normalize_projective, projective_points, Gf};
use crate::laurent::{self, LMatrix, Laurent};
use crate::polygon::{Flag, IncidenceGeometry, Kind, RealizedPoint};

/// Arithmetic context: the field and the precision window `N`.
#[derive(Debug, Clone)]
pub struct Building {
    field: Gf,
    window: i32,
}

/// Canonical lattice basis; columns span the lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVertex {
    pub basis: LMatrix,
}

impl LatticeVertex {
    /// Vertex type: valuation of the determinant mod 3.
    pub fn vertex_type(&self) -> u8 {
        let v: i32 = (0..3).map(|i| self.basis[i][i].valuation().unwrap_or(0)).sum();
        v.rem_euclid(3) as u8
    }
}

/// Elementary divisors of `b` relative to `a`, with an adapted frame.
#[derive(Debug, Clone)]
pub struct SnfFrame {
    /// `m₁ ≥ m₂ ≥ m₃ = 0`.
    pub m: [i64; 3],
    /// Columns `e_j` with `L_a = F·O³` and `L_b ∼ F·diag(t^m)·O³`.
    pub frame: LMatrix,
    /// `e_j mod t`, written in the coordinates of `a`'s canonical basis.
    pub residue: [[u8; 3]; 3],
}

/// Initial direction of the segment `[a, b]` inside the link of `a`.
///
/// Subspaces live in `L_a / t·L_a` in the coordinates of `a`'s basis: a
/// point is a plane (given by a normal vector), a line is a 1-dimensional
/// subspace (given by a spanning vector).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    Point { normal: [u8; 3] },
    Line { span: [u8; 3] },
    Interior { normal: [u8; 3], span: [u8; 3], theta: Angle },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixIsometry {
    pub matrix: LMatrix,
    pub det_valuation: i32,
}

/// The link of a vertex, built from subspaces of `L/tL`.
#[derive(Debug, Clone)]
pub struct Link {
    pub vertex: LatticeVertex,
    pub geometry: IncidenceGeometry,
    /// Neighbor vertex for each panel id.
    pub panels: Vec<LatticeVertex>,
    normals: Vec<[u8; 3]>,
    spans: Vec<[u8; 3]>,
    index: HashMap<LatticeVertex, usize>,
}

#[derive(Debug, Clone)]
pub struct BuildingBall {
    pub building: Building,
    pub radius: usize,
    pub vertices: Vec<LatticeVertex>,
    pub depth: Vec<usize>,
    pub types: Vec<u8>,
    pub adjacency: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
    pub triangles: Vec<[usize; 3]>,
    index: HashMap<LatticeVertex, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallVertexJson {
    pub basis: LMatrix,
    #[serde(rename = "type")]
    pub vertex_type: u8,
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallJson {
    pub q: u8,
    pub radius: usize,
    pub vertices: Vec<BallVertexJson>,
    pub edges: Vec<[usize; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

/// Group generators as Laurent matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixGroupJson {
    pub q: u32,
    pub generators: Vec<LMatrix>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Elliptic {
        fixed: Vec<usize>,
    },
    Hyperbolic {
        translation_length: Root,
        displacements: Vec<Root>,
    },
    Inconclusive,
}

/// Simplices of a ball fixed by every generator, as ball indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedSet {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub triangles: Vec<[usize; 3]>,
}

impl FixedSet {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty() && self.triangles.is_empty()
    }
}

/// `dist² = (3Σm² − (Σm)²)/2`; adjacent vertices sit at distance 1.
pub fn distance_from_valuations(m: [i64; 3]) -> Root {
    let s: i64 = m.iter().sum();
    let s2: i64 = m.iter().map(|x| x * x).sum();
    Root::sqrt(rat(3 * s2 - s * s, 2))
}

pub(crate) fn cross(f: &Gf, a: [u8; 3], b: [u8; 3]) -> [u8; 3] {
    let c = |i: usize, j: usize| f.sub(f.mul(a[i], b[j]), f.mul(a[j], b[i]));
    [c(1, 2), c(2, 0), c(0, 1)]
}

pub(crate) fn dot(f: &Gf, a: [u8; 3], b: [u8; 3]) -> u8 {
    (0..3).fold(0, |acc, i| f.add(acc, f.mul(a[i], b[i])))
}

pub(crate) fn normalized(f: &Gf, v: [u8; 3]) -> Option<[u8; 3]> {
    normalize_projective(f, &v).map(|w| [w[0], w[1], w[2]])
}

fn shift_col(c: &[Laurent; 3], k: i32) -> [Laurent; 3] {
    std::array::from_fn(|i| c[i].shift(k))
}

impl Building {
    pub fn new(q: u32, window: i32) -> Result<Building> {
        Ok(Building {
            field: Gf::new(q)?,
            window,
        })
    }

    /// Window sized for a ball of the given radius.
    pub fn for_radius(q: u32, radius: usize) -> Result<Building> {
        Building::new(q, 2 * radius as i32 + 4)
    }

    pub fn field(&self) -> &Gf {
        &self.field
    }

    pub fn window(&self) -> i32 {
        self.window
    }

    pub fn base(&self) -> LatticeVertex {
        LatticeVertex {
            basis: laurent::identity(),
        }
    }

    /// Canonical form of the lattice spanned by at least three columns.
    pub fn canonicalize(&self, cols: &[[Laurent; 3]]) -> Result<LatticeVertex> {
        let f = &self.field;
        let minval = cols
            .iter()
            .flatten()
            .filter_map(Laurent::valuation)
            .min()
            .ok_or(ForgeError::SingularBasis)?;
        let cols: Vec<[Laurent; 3]> = cols.iter().map(|c| shift_col(c, -minval)).collect();

        // index of the lattice in O³ is the minimal valuation of a 3×3 minor
        let mut d: Option<i32> = None;
        for i in 0..cols.len() {
            for j in i + 1..cols.len() {
                for k in j + 1..cols.len() {
                    if let Some(v) = laurent::det_columns(f, &cols[i], &cols[j], &cols[k]).valuation() {
                        d = Some(d.map_or(v, |d| d.min(v)));
                    }
                }
            }
        }
        let d = d.ok_or(ForgeError::SingularBasis)?;
        if d > 3 * self.window {
            return Err(ForgeError::PrecisionExhausted(format!(
                "index valuation {d} exceeds window 3·{}",
                self.window
            )));
        }

        // Hermite form over O/tᴰ; since tᴰO³ ⊂ L the result spans L exactly
        let mut rest: Vec<[Laurent; 3]> = cols
            .iter()
            .map(|c| std::array::from_fn(|i| c[i].truncate(d)))
            .collect();
        let mut h: Vec<[Laurent; 3]> = Vec::with_capacity(3);
        let mut k = [0i32; 3];
        for r in 0..3 {
            let best = rest
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c[r].valuation().map(|v| (v, i)))
                .min();
            let Some((v, i)) = best else {
                let mut col: [Laurent; 3] = Default::default();
                col[r] = Laurent::monomial(1, d);
                k[r] = d;
                h.push(col);
                continue;
            };
            let p = rest.remove(i);
            let u = p[r].shift(-v).unit_inverse(f, d - v);
            let p: [Laurent; 3] = std::array::from_fn(|i| p[i].mul(f, &u).truncate(d));
            for c in rest.iter_mut() {
                if c[r].is_zero() {
                    continue;
                }
                let qt = c[r].shift(-v);
                for i in 0..3 {
                    c[i] = c[i].sub(f, &qt.mul(f, &p[i])).truncate(d);
                }
            }
            // tᴰ⁻ᵛ·p dies in row r but not necessarily below it
            let torsion: [Laurent; 3] = std::array::from_fn(|i| p[i].shift(d - v).truncate(d));
            if torsion.iter().any(|e| !e.is_zero()) {
                rest.push(torsion);
            }
            k[r] = v;
            h.push(p);
        }
        if k.iter().sum::<i32>() != d {
            return Err(ForgeError::PrecisionExhausted(format!(
                "pivot exponents {k:?} do not sum to {d}"
            )));
        }
        for j in 0..3 {
            for i in j + 1..3 {
                let qt = h[j][i].quotient_from(k[i]);
                if qt.is_zero() {
                    continue;
                }
                let hi = h[i].clone();
                for r in i..3 {
                    h[j][r] = h[j][r].sub(f, &qt.mul(f, &hi[r]));
                }
            }
        }
        let s = h
            .iter()
            .flatten()
            .filter_map(Laurent::valuation)
            .min()
            .expect("nonzero pivots");
        let h: [[Laurent; 3]; 3] = std::array::from_fn(|j| shift_col(&h[j], -s));
        Ok(LatticeVertex {
            basis: laurent::from_columns(&h),
        })
    }

    pub fn vertex_from_matrix(&self, m: &LMatrix) -> Result<LatticeVertex> {
        let cols: Vec<[Laurent; 3]> = (0..3).map(|j| laurent::column(m, j)).collect();
        self.canonicalize(&cols)
    }

    /// Smith form of `A⁻¹B` by elimination over `O/t^(V+1)`, tracking the frame.
    pub fn snf(&self, a: &LatticeVertex, b: &LatticeVertex) -> Result<SnfFrame> {
        let f = &self.field;
        let ainv = laurent::inverse(f, &a.basis)?;
        let m = laurent::mat_mul(f, &ainv, &b.basis);
        let minval = laurent::min_valuation(&m).ok_or(ForgeError::SingularBasis)?;
        let mut m = laurent::shift_matrix(&m, -minval);
        let v_det = laurent::det(f, &m).valuation().ok_or(ForgeError::SingularBasis)?;
        if v_det > 6 * self.window {
            return Err(ForgeError::PrecisionExhausted(format!(
                "elementary divisors reach valuation {v_det}"
            )));
        }
        let prec = v_det + 1;
        for row in m.iter_mut() {
            for e in row.iter_mut() {
                *e = e.truncate(prec);
            }
        }
        let mut pinv = laurent::identity();
        let mut e = [0i32; 3];
        for k in 0..3 {
            let (v, pi, pj) = (k..3)
                .flat_map(|i| (k..3).map(move |j| (i, j)))
                .filter_map(|(i, j)| m[i][j].valuation().map(|v| (v, i, j)))
                .min()
                .ok_or(ForgeError::SingularBasis)?;
            m.swap(k, pi);
            for row in pinv.iter_mut() {
                row.swap(k, pi);
            }
            for row in m.iter_mut() {
                row.swap(k, pj);
            }
            let uinv = m[k][k].shift(-v).unit_inverse(f, prec);
            for i in k + 1..3 {
                if m[i][k].is_zero() {
                    continue;
                }
                let c = m[i][k].shift(-v).mul(f, &uinv).truncate(prec);
                for j in 0..3 {
                    let t = c.mul(f, &m[k][j]);
                    m[i][j] = m[i][j].sub(f, &t).truncate(prec);
                }
                for row in pinv.iter_mut() {
                    let t = c.mul(f, &row[i]);
                    row[k] = row[k].add(f, &t).truncate(prec);
                }
            }
            for j in k + 1..3 {
                m[k][j] = Laurent::zero();
            }
            e[k] = v;
        }
        // pivots come out ascending; report them descending
        let order = [2usize, 1, 0];
        let m_desc = order.map(|i| (e[i] - e[0]) as i64);
        let full = laurent::mat_mul(f, &a.basis, &pinv);
        let frame: LMatrix = std::array::from_fn(|r| order.map(|c| full[r][c].clone()));
        let residue: [[u8; 3]; 3] = order.map(|c| std::array::from_fn(|r| pinv[r][c].constant_term()));
        Ok(SnfFrame {
            m: m_desc,
            frame,
            residue,
        })
    }

    pub fn snf_valuations(&self, a: &LatticeVertex, b: &LatticeVertex) -> Result<[i64; 3]> {
        Ok(self.snf(a, b)?.m)
    }

    pub fn distance(&self, a: &LatticeVertex, b: &LatticeVertex) -> Result<Root> {
        Ok(distance_from_valuations(self.snf_valuations(a, b)?))
    }

    /// The lattice `F·diag(t^x)·O³` of a frame.
    pub fn frame_vertex(&self, frame: &LMatrix, x: [i64; 3]) -> Result<LatticeVertex> {
        let d = laurent::diagonal(x.map(|v| v as i32));
        self.vertex_from_matrix(&laurent::mat_mul(&self.field, frame, &d))
    }

    /// Planes of `𝔽_q³` by normal vector, then lines by spanning vector.
    fn subspaces(&self) -> (Vec<[u8; 3]>, Vec<[u8; 3]>) {
        let pts: Vec<[u8; 3]> = projective_points(&self.field, 3)
            .into_iter()
            .map(|v| [v[0], v[1], v[2]])
            .collect();
        (pts.clone(), pts)
    }

    fn lift(&self, v: &LatticeVertex, vectors: &[[u8; 3]]) -> Result<LatticeVertex> {
        let f = &self.field;
        let mut cols: Vec<[Laurent; 3]> = (0..3).map(|j| shift_col(&laurent::column(&v.basis, j), 1)).collect();
        for w in vectors {
            let col: [Laurent; 3] = std::array::from_fn(|r| {
                (0..3).fold(Laurent::zero(), |acc, j| acc.add(f, &v.basis[r][j].scale(f, w[j])))
            });
            cols.push(col);
        }
        self.canonicalize(&cols)
    }

    fn plane_basis(&self, normal: [u8; 3]) -> [[u8; 3]; 2] {
        let f = &self.field;
        let (_, pts) = self.subspaces();
        let mut inside = pts.into_iter().filter(|&w| dot(f, normal, w) == 0);
        [inside.next().expect("plane"), inside.next().expect("plane")]
    }

    /// Neighbor reached from `v` through a plane of `L/tL` (type +1).
    pub fn point_neighbor(&self, v: &LatticeVertex, normal: [u8; 3]) -> Result<LatticeVertex> {
        self.lift(v, &self.plane_basis(normal))
    }

    /// Neighbor reached from `v` through a line of `L/tL` (type +2).
    pub fn line_neighbor(&self, v: &LatticeVertex, span: [u8; 3]) -> Result<LatticeVertex> {
        self.lift(v, &[span])
    }

    /// All `2(q² + q + 1)` neighbors: planes first, then lines.
    pub fn neighbors(&self, v: &LatticeVertex) -> Result<Vec<LatticeVertex>> {
        let (normals, spans) = self.subspaces();
        let mut out = Vec::with_capacity(normals.len() + spans.len());
        for n in normals {
            out.push(self.point_neighbor(v, n)?);
        }
        for s in spans {
            out.push(self.line_neighbor(v, s)?);
        }
        Ok(out)
    }

    pub fn link_at(&self, v: &LatticeVertex) -> Result<Link> {
        let f = &self.field;
        let (normals, spans) = self.subspaces();
        let panels = self.neighbors(v)?;
        let mut incidence = Vec::new();
        for (i, &n) in normals.iter().enumerate() {
            for (j, &s) in spans.iter().enumerate() {
                if dot(f, n, s) == 0 {
                    incidence.push((i, j));
                }
            }
        }
        let geometry = IncidenceGeometry::from_incidence(Kind::A2, normals.len(), spans.len(), incidence)?;
        let index = panels.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Ok(Link {
            vertex: v.clone(),
            geometry,
            panels,
            normals,
            spans,
            index,
        })
    }

    /// Direction of `b` seen from `a`.
    pub fn direction(&self, a: &LatticeVertex, b: &LatticeVertex) -> Result<LinkDirection> {
        let s = self.snf(a, b)?;
        self.direction_from_frame(&s)
    }

    pub fn direction_from_frame(&self, s: &SnfFrame) -> Result<LinkDirection> {
        let f = &self.field;
        let [m0, m1, _] = s.m;
        let [_, e1, e2] = s.residue;
        let normal = || normalized(f, cross(f, e1, e2)).expect("independent residues");
        let span = || normalized(f, e2).expect("nonzero residue");
        if m0 == 0 {
            Err(ForgeError::DegenerateDirection)
        } else if m1 == 0 {
            Ok(LinkDirection::Point { normal: normal() })
        } else if m0 == m1 {
            Ok(LinkDirection::Line { span: span() })
        } else if m0 - m1 == m1 {
            Ok(LinkDirection::Interior {
                normal: normal(),
                span: span(),
                theta: Angle::pi_frac(1, 6),
            })
        } else {
            Err(ForgeError::IrrationalDirection)
        }
    }

    pub fn isometry(&self, matrix: LMatrix) -> Result<MatrixIsometry> {
        let det_valuation = laurent::det(&self.field, &matrix)
            .valuation()
            .ok_or(ForgeError::SingularBasis)?;
        Ok(MatrixIsometry { matrix, det_valuation })
    }

    pub fn act(&self, g: &MatrixIsometry, v: &LatticeVertex) -> Result<LatticeVertex> {
        self.vertex_from_matrix(&laurent::mat_mul(&self.field, &g.matrix, &v.basis))
    }

    pub fn compose(&self, a: &MatrixIsometry, b: &MatrixIsometry) -> MatrixIsometry {
        MatrixIsometry {
            matrix: laurent::mat_mul(&self.field, &a.matrix, &b.matrix),
            det_valuation: a.det_valuation + b.det_valuation,
        }
    }

    pub fn inverse(&self, g: &MatrixIsometry) -> Result<MatrixIsometry> {
        Ok(MatrixIsometry {
            matrix: laurent::inverse(&self.field, &g.matrix)?,
            det_valuation: -g.det_valuation,
        })
    }

    /// `a·b·a⁻¹`.
    pub fn conjugate(&self, a: &MatrixIsometry, b: &MatrixIsometry) -> Result<MatrixIsometry> {
        Ok(self.compose(&self.compose(a, b), &self.inverse(a)?))
    }

    pub fn power(&self, g: &MatrixIsometry, k: u32) -> MatrixIsometry {
        let mut out = MatrixIsometry {
            matrix: laurent::identity(),
            det_valuation: 0,
        };
        for _ in 0..k {
            out = self.compose(&out, g);
        }
        out
    }

    /// Valuations of the eigenvalues, from the Newton polygon of the
    /// characteristic polynomial.
    pub fn eigenvalue_valuations(&self, g: &MatrixIsometry) -> [Rational; 3] {
        let f = &self.field;
        let m = &g.matrix;
        let tr = (0..3).fold(Laurent::zero(), |acc, i| acc.add(f, &m[i][i]));
        let minors = [(0, 1), (0, 2), (1, 2)].iter().fold(Laurent::zero(), |acc, &(i, j)| {
            acc.add(f, &laurent::det2(f, &m[i][i], &m[i][j], &m[j][i], &m[j][j]))
        });
        let det = laurent::det(f, m);
        let coeffs = [det, minors, tr, Laurent::one()];
        let pts: Vec<(i64, i64)> = coeffs
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.valuation().map(|v| (i as i64, v as i64)))
            .collect();
        let mut hull: Vec<(i64, i64)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                // drop b unless it lies strictly below segment a→p
                if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let mut out = Vec::with_capacity(3);
        for w in hull.windows(2) {
            let slope = rat(w[1].1 - w[0].1, w[1].0 - w[0].0);
            for _ in 0..(w[1].0 - w[0].0) {
                out.push(-slope);
            }
        }
        out.sort();
        [out[0], out[1], out[2]]
    }

    /// Exact translation length from the eigenvalue valuations.
    pub fn translation_length(&self, g: &MatrixIsometry) -> Root {
        let l = self.eigenvalue_valuations(g);
        let mean = (l[0] + l[1] + l[2]) / Rational::from_integer(3);
        let sq: Rational = l.iter().map(|x| (*x - mean) * (*x - mean)).sum();
        Root::sqrt(sq * rat(3, 2))
    }
}

impl MatrixIsometry {
    pub fn is_type_preserving(&self) -> bool {
        self.det_valuation.rem_euclid(3) == 0
    }

    pub fn require_type_preserving(&self) -> Result<()> {
        if self.is_type_preserving() {
            Ok(())
        } else {
            Err(ForgeError::TypePreservationViolation(format!(
                "determinant valuation {} is not divisible by 3",
                self.det_valuation
            )))
        }
    }
}

impl Link {
    pub fn num_points(&self) -> usize {
        self.normals.len()
    }

    pub fn panel_of(&self, v: &LatticeVertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn point_of_normal(&self, f: &Gf, normal: [u8; 3]) -> Option<usize> {
        let n = normalized(f, normal)?;
        self.normals.iter().position(|&x| x == n)
    }

    pub fn line_of_span(&self, f: &Gf, span: [u8; 3]) -> Option<usize> {
        let s = normalized(f, span)?;
        self.spans.iter().position(|&x| x == s)
    }

    /// Plane normal (for points) or spanning vector (for lines) of a panel.
    pub fn subspace(&self, id: usize) -> [u8; 3] {
        if id < self.normals.len() {
            self.normals[id]
        } else {
            self.spans[id - self.normals.len()]
        }
    }

    pub fn realize(&self, f: &Gf, d: LinkDirection) -> Result<RealizedPoint> {
        let missing = || ForgeError::ContradictionDetected("direction outside the link".into());
        match d {
            LinkDirection::Point { normal } => {
                let p = self.point_of_normal(f, normal).ok_or_else(missing)?;
                self.geometry.panel_point(p)
            }
            LinkDirection::Line { span } => {
                let l = self.line_of_span(f, span).ok_or_else(missing)?;
                self.geometry.panel_point(self.num_points() + l)
            }
            LinkDirection::Interior { normal, span, theta } => {
                let point = self.point_of_normal(f, normal).ok_or_else(missing)?;
                let line = self.line_of_span(f, span).ok_or_else(missing)?;
                let x = RealizedPoint {
                    flag: Flag { point, line },
                    theta,
                };
                self.geometry.check_point(&x)?;
                Ok(x)
            }
        }
    }

    /// The permutation of link panels induced by an isometry fixing the vertex.
    pub fn induced(&self, b: &Building, g: &MatrixIsometry) -> Result<Automorphism> {
        g.require_type_preserving()?;
        if b.act(g, &self.vertex)? != self.vertex {
            return Err(ForgeError::NotAnAutomorphism(
                "isometry does not fix the link's vertex".into(),
            ));
        }
        let map = self
            .panels
            .iter()
            .map(|p| {
                let img = b.act(g, p)?;
                self.panel_of(&img)
                    .ok_or_else(|| ForgeError::NotAnAutomorphism("image is not a neighbor".into()))
            })
            .collect::<Result<Vec<usize>>>()?;
        Automorphism::from_panel_map(&self.geometry, &map)
    }
}

impl BuildingBall {
    pub fn index_of(&self, v: &LatticeVertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.depth[i] < self.radius
    }

    pub fn to_json(&self) -> BallJson {
        BallJson {
            q: self.building.field.order(),
            radius: self.radius,
            vertices: (0..self.len())
                .map(|i| BallVertexJson {
                    basis: self.vertices[i].basis.clone(),
                    vertex_type: self.types[i],
                    depth: self.depth[i],
                })
                .collect(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Image of every ball vertex under `g`, when it stays in the ball.
    pub fn images(&self, g: &MatrixIsometry) -> Result<Vec<Option<usize>>> {
        self.vertices
            .par_iter()
            .map(|v| Ok(self.index_of(&self.building.act(g, v)?)))
            .collect()
    }
}

/// All vertices within edge distance `radius` of the base vertex.
pub fn build_ball(q: u32, radius: usize) -> Result<BuildingBall> {
    let b = Building::for_radius(q, radius)?;
    build_ball_in(&b, radius)
}

pub fn build_ball_in(b: &Building, radius: usize) -> Result<BuildingBall> {
    let mut vertices = vec![b.base()];
    let mut depth = vec![0usize];
    let mut index: HashMap<LatticeVertex, usize> = HashMap::from([(b.base(), 0)]);
    let mut queue = VecDeque::from([0usize]);
    let mut nbrs: Vec<Option<Vec<LatticeVertex>>> = vec![None];
    while let Some(i) = queue.pop_front() {
        if depth[i] == radius {
            continue;
        }
        let ns = b.neighbors(&vertices[i])?;
        for n in &ns {
            if !index.contains_key(n) {
                index.insert(n.clone(), vertices.len());
                vertices.push(n.clone());
                depth.push(depth[i] + 1);
                nbrs.push(None);
                queue.push_back(vertices.len() - 1);
            }
        }
        nbrs[i] = Some(ns);
    }
    let boundary: Vec<(usize, Vec<LatticeVertex>)> = (0..vertices.len())
        .filter(|&i| nbrs[i].is_none())
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| Ok((i, b.neighbors(&vertices[i])?)))
        .collect::<Result<_>>()?;
    for (i, ns) in boundary {
        nbrs[i] = Some(ns);
    }
    let adjacency: Vec<Vec<usize>> = nbrs
        .iter()
        .map(|ns| {
            let mut a: Vec<usize> = ns
                .as_ref()
                .expect("computed")
                .iter()
                .filter_map(|n| index.get(n).copied())
                .collect();
            a.sort_unstable();
            a
        })
        .collect();
    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    for (u, adj) in adjacency.iter().enumerate() {
        for &v in adj.iter().filter(|&&v| v > u) {
            edges.push((u, v));
            for &w in adjacency[v].iter().filter(|&&w| w > v) {
                if adj.binary_search(&w).is_ok() {
                    triangles.push([u, v, w]);
                }
            }
        }
    }
    let types = vertices.iter().map(LatticeVertex::vertex_type).collect();
    Ok(BuildingBall {
        building: b.clone(),
        radius,
        vertices,
        depth,
        types,
        adjacency,
        edges,
        triangles,
        index,
    })
}

/// The link of an interior ball vertex, read off from ball adjacency alone.
pub fn link_of(v: &LatticeVertex, ball: &BuildingBall) -> Result<IncidenceGeometry> {
    let i = ball.index_of(v).ok_or(ForgeError::BoundaryVertex)?;
    if !ball.is_interior(i) {
        return Err(ForgeError::BoundaryVertex);
    }
    let ty = ball.types[i];
    let rel = |j: usize| (ball.types[j] + 3 - ty) % 3;
    let points: Vec<usize> = ball.adjacency[i].iter().copied().filter(|&j| rel(j) == 1).collect();
    let lines: Vec<usize> = ball.adjacency[i].iter().copied().filter(|&j| rel(j) == 2).collect();
    let mut incidence = Vec::new();
    for (pi, &p) in points.iter().enumerate() {
        for (li, &l) in lines.iter().enumerate() {
            if ball.adjacency[p].binary_search(&l).is_ok() {
                incidence.push((pi, li));
            }
        }
    }
    IncidenceGeometry::from_incidence(Kind::A2, points.len(), lines.len(), incidence)
}

/// Simplices of the ball fixed by all generators.
pub fn fixed_set(gens: &[MatrixIsometry], ball: &BuildingBall) -> Result<FixedSet> {
    let images: Vec<Vec<Option<usize>>> = gens.iter().map(|g| ball.images(g)).collect::<Result<_>>()?;
    let fixes = |i: usize| images.iter().all(|im| im[i] == Some(i));
    let setwise = |s: &[usize]| {
        images.iter().all(|im| {
            let mut img: Vec<Option<usize>> = s.iter().map(|&i| im[i]).collect();
            img.sort_unstable();
            img.iter().copied().eq(s.iter().map(|&i| Some(i)))
        })
    };
    let vertices: Vec<usize> = (0..ball.len()).filter(|&i| fixes(i)).collect();
    let edges: Vec<(usize, usize)> = ball.edges.iter().copied().filter(|&(a, b)| setwise(&[a, b])).collect();
    let triangles: Vec<[usize; 3]> = ball.triangles.iter().copied().filter(|t| setwise(t)).collect();
    let fs = FixedSet {
        vertices,
        edges,
        triangles,
    };
    if fs.is_empty() {
        return Err(ForgeError::EmptyOnBall);
    }
    convexity_spot_check(&fs.vertices, ball, &fixes)?;
    Ok(fs)
}

/// Geodesics are unique, so vertices on a geodesic between fixed vertices
/// must be fixed. Checks a bounded sample of pairs.
fn convexity_spot_check(fixed: &[usize], ball: &BuildingBall, fixes: &dyn Fn(usize) -> bool) -> Result<()> {
    const SAMPLE: usize = 12;
    let b = &ball.building;
    let sample: Vec<usize> = fixed.iter().copied().take(SAMPLE).collect();
    for (k, &u) in sample.iter().enumerate() {
        for &w in &sample[k + 1..] {
            let duw = b.distance(&ball.vertices[u], &ball.vertices[w])?;
            for x in 0..ball.len() {
                if fixes(x) {
                    continue;
                }
                let dux = b.distance(&ball.vertices[u], &ball.vertices[x])?;
                let dxw = b.distance(&ball.vertices[x], &ball.vertices[w])?;
                if duw.eq_sum(&dux, &dxw) {
                    return Err(ForgeError::ContradictionDetected(format!(
                        "vertex {x} lies between fixed vertices {u} and {w} but moves"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Elliptic if a fixed simplex turns up in the ball, hyperbolic if the
/// translation length is positive.
pub fn classify_isometry(g: &MatrixIsometry, ball: &BuildingBall, powers: u32) -> Result<Verdict> {
    classify_isometry_in(&ball.building, g, ball, powers)
}

/// As [`classify_isometry`], with displacements computed in `b` (whose
/// window may be wider than the ball's).
pub fn classify_isometry_in(b: &Building, g: &MatrixIsometry, ball: &BuildingBall, powers: u32) -> Result<Verdict> {
    g.require_type_preserving()?;
    let ell = b.translation_length(g);
    if !ell.is_zero() {
        let v0 = b.base();
        let mut displacements = Vec::new();
        for k in 1..=powers {
            let gk = b.power(g, k);
            let d = b.distance(&v0, &b.act(&gk, &v0)?)?;
            let bound = ell.scale(Rational::from_integer(k as i64));
            if d < bound {
                return Err(ForgeError::ContradictionDetected(format!(
                    "displacement of g^{k} is below {k}·ℓ"
                )));
            }
            displacements.push(d);
        }
        return Ok(Verdict::Hyperbolic {
            translation_length: ell,
            displacements,
        });
    }
    match fixed_set(std::slice::from_ref(g), ball) {
        Ok(fs) if !fs.vertices.is_empty() => Ok(Verdict::Elliptic { fixed: fs.vertices }),
        Ok(fs) => Ok(Verdict::Elliptic {
            fixed: fs.triangles.first().map(|t| t.to_vec()).unwrap_or_default(),
        }),
        Err(ForgeError::EmptyOnBall) => Ok(Verdict::Inconclusive),
        Err(e) => Err(e),
    }
}

/// The Singer cycle of order 7 in SL₃(𝔽₂), as a constant matrix.
pub fn singer_matrix() -> LMatrix {
    laurent::from_constant([[0, 1, 0], [0, 0, 1], [1, 1, 0]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::find_isomorphism;
    use crate::polygon::build_projective_plane;
    use proptest::prelude::*;

    fn b2() -> Building {
        Building::new(2, 8).unwrap()
    }

    fn vx(b: &Building, m: &LMatrix) -> LatticeVertex {
        b.vertex_from_matrix(m).unwrap()
    }

    /// Determinantal divisors: `d_k` is the minimal valuation of a k×k minor.
    fn valuations_by_minors(b: &Building, a: &LatticeVertex, c: &LatticeVertex) -> [i64; 3] {
        let f = b.field();
        let m = laurent::mat_mul(f, &laurent::inverse(f, &a.basis).unwrap(), &c.basis);
        let d1 = m.iter().flatten().filter_map(Laurent::valuation).min().unwrap() as i64;
        let mut d2 = i64::MAX;
        for r in [(0, 1), (0, 2), (1, 2)] {
            for s in [(0, 1), (0, 2), (1, 2)] {
                let x = laurent::det2(f, &m[r.0][s.0], &m[r.0][s.1], &m[r.1][s.0], &m[r.1][s.1]);
                if let Some(v) = x.valuation() {
                    d2 = d2.min(v as i64);
                }
            }
        }
        let d3 = laurent::det(f, &m).valuation().unwrap() as i64;
        let mut e = [d1, d2 - d1, d3 - d2];
        e.sort_unstable_by(|x, y| y.cmp(x));
        e.map(|x| x - e[2])
    }

    fn random_matrix(q: u8) -> impl Strategy<Value = LMatrix> {
        prop::collection::vec(prop::collection::vec((-2i32..3, 0u8..q), 0..3), 9).prop_map(move |entries| {
            let f = Gf::new(q as u32).unwrap();
            std::array::from_fn(|i| std::array::from_fn(|j| Laurent::from_terms(&f, entries[3 * i + j].clone())))
        })
    }

    #[test]
    fn canonical_forms() {
        let b = b2();
        assert_eq!(vx(&b, &laurent::identity()), b.base());
        assert_eq!(vx(&b, &laurent::diagonal([1, 1, 1])), b.base());
        let d = vx(&b, &laurent::diagonal([0, 0, 1]));
        assert_eq!(vx(&b, &laurent::diagonal([1, 0, 0])) == d, false);
        let perm = laurent::from_columns(&[
            laurent::column(&laurent::diagonal([0, 0, 1]), 2),
            laurent::column(&laurent::diagonal([0, 0, 1]), 0),
            laurent::column(&laurent::diagonal([0, 0, 1]), 1),
        ]);
        assert_eq!(vx(&b, &perm), d);
        assert_eq!(b.canonicalize(&vec![laurent::column(&d.basis, 0); 3]).unwrap_err().to_string(), "singular basis");
    }

    #[test]
    fn tripwire_fires_on_a_small_window() {
        let b = Building::new(2, 1).unwrap();
        let err = b.vertex_from_matrix(&laurent::diagonal([5, 0, 0])).unwrap_err();
        assert!(matches!(err, ForgeError::PrecisionExhausted(_)));
    }

    #[test]
    fn distances_of_examples() {
        let b = b2();
        let v0 = b.base();
        assert_eq!(b.snf_valuations(&v0, &v0).unwrap(), [0, 0, 0]);
        let v1 = vx(&b, &laurent::diagonal([0, 0, 1]));
        assert_eq!(b.snf_valuations(&v0, &v1).unwrap(), [1, 0, 0]);
        assert_eq!(b.distance(&v0, &v1).unwrap(), Root::sqrt(rat(1, 1)));
        let h = vx(&b, &laurent::diagonal([1, 0, -1]));
        assert_eq!(b.snf_valuations(&v0, &h).unwrap(), [2, 1, 0]);
        assert_eq!(b.distance(&v0, &h).unwrap(), Root::sqrt(rat(3, 1)));
    }

    #[test]
    fn small_balls() {
        let ball = build_ball(2, 0).unwrap();
        assert_eq!((ball.len(), ball.edges.len()), (1, 0));
        let ball = build_ball(2, 1).unwrap();
        assert_eq!(ball.len(), 15);
        // v₀ plus the 21 flags of PG(2,2) as triangles through v₀
        assert_eq!(ball.triangles.iter().filter(|t| t[0] == 0).count(), 21);
        for &(u, v) in &ball.edges {
            assert_ne!(ball.types[u], ball.types[v]);
        }
    }

    #[test]
    fn links_are_projective_planes() {
        let ball = build_ball(2, 2).unwrap();
        let pg = build_projective_plane(2).unwrap();
        for i in (0..ball.len()).filter(|&i| ball.is_interior(i)) {
            let l = link_of(&ball.vertices[i], &ball).unwrap();
            l.verify().unwrap();
            assert!(find_isomorphism(&l, &pg).is_some());
        }
        let edge = (0..ball.len()).find(|&i| !ball.is_interior(i)).unwrap();
        assert!(matches!(link_of(&ball.vertices[edge], &ball), Err(ForgeError::BoundaryVertex)));
        // interior edges lie in q + 1 triangles
        for &(u, v) in ball.edges.iter().filter(|&&(u, v)| ball.is_interior(u) && ball.is_interior(v)) {
            let n = ball.triangles.iter().filter(|t| t.contains(&u) && t.contains(&v)).count();
            assert_eq!(n, 3);
        }
    }

    #[test]
    fn subspace_link_matches_the_ball_link() {
        let b = b2();
        let link = b.link_at(&b.base()).unwrap();
        link.geometry.verify().unwrap();
        for (i, p) in link.panels.iter().enumerate() {
            assert_eq!(b.distance(&b.base(), p).unwrap(), Root::sqrt(rat(1, 1)));
            let want = if i < 7 { 1 } else { 2 };
            assert_eq!(p.vertex_type(), want);
        }
        for (p, l) in link.geometry.incidence() {
            assert_eq!(b.distance(&link.panels[*p], &link.panels[7 + l]).unwrap(), Root::sqrt(rat(1, 1)));
        }
    }

    #[test]
    fn singer_is_elliptic_with_a_single_fixed_vertex() {
        let ball = build_ball(2, 2).unwrap();
        let b = &ball.building;
        let s = b.isometry(singer_matrix()).unwrap();
        assert_eq!(classify_isometry(&s, &ball, 3).unwrap(), Verdict::Elliptic { fixed: vec![0] });
        let fs = fixed_set(&[s.clone()], &ball).unwrap();
        assert_eq!(fs.vertices, vec![0]);
        assert!(fs.edges.is_empty() && fs.triangles.is_empty());

        let h = b.isometry(laurent::diagonal([1, 0, -1])).unwrap();
        let hs = b.conjugate(&h, &s).unwrap();
        let hv0 = b.act(&h, &b.base()).unwrap();
        let fs = fixed_set(&[hs], &ball).unwrap();
        assert_eq!(fs.vertices, vec![ball.index_of(&hv0).unwrap()]);
    }

    #[test]
    fn trivial_group_fixes_everything() {
        let ball = build_ball(2, 1).unwrap();
        let id = ball.building.isometry(laurent::identity()).unwrap();
        let fs = fixed_set(&[id], &ball).unwrap();
        assert_eq!(fs.vertices.len(), ball.len());
        assert_eq!(fs.triangles.len(), ball.triangles.len());
    }

    #[test]
    fn diagonal_is_hyperbolic() {
        let ball = build_ball(2, 2).unwrap();
        let b = &ball.building;
        let g = b.isometry(laurent::diagonal([1, 0, -1])).unwrap();
        match classify_isometry(&g, &ball, 4).unwrap() {
            Verdict::Hyperbolic {
                translation_length,
                displacements,
            } => {
                assert_eq!(translation_length, Root::sqrt(rat(3, 1)));
                for (k, d) in displacements.iter().enumerate() {
                    let k = (k + 1) as i64;
                    assert_eq!(*d, Root::sqrt(rat(3 * k * k, 1)));
                }
            }
            v => panic!("{v:?}"),
        }
        let rot = b.isometry(laurent::diagonal([1, 0, 0])).unwrap();
        assert!(matches!(
            classify_isometry(&rot, &ball, 1),
            Err(ForgeError::TypePreservationViolation(_))
        ));
    }

    #[test]
    fn directions_match_frames() {
        let b = b2();
        let v0 = b.base();
        let link = b.link_at(&v0).unwrap();
        for p in &link.panels {
            let d = b.direction(&v0, p).unwrap();
            let x = link.realize(b.field(), d).unwrap();
            let id = link.panel_of(p).unwrap();
            assert_eq!(link.geometry.locate(&x), crate::polygon::Location::Panel(id));
        }
        let h = vx(&b, &laurent::diagonal([1, 0, -1]));
        let d = b.direction(&v0, &h).unwrap();
        assert!(matches!(d, LinkDirection::Interior { theta, .. } if theta == Angle::pi_frac(1, 6)));
        let far = vx(&b, &laurent::diagonal([3, 1, 0]));
        assert!(matches!(b.direction(&v0, &far), Err(ForgeError::IrrationalDirection)));
        assert!(matches!(b.direction(&v0, &v0), Err(ForgeError::DegenerateDirection)));
    }

    #[test]
    fn induced_link_action_of_singer_is_fixed_point_free() {
        let b = b2();
        let link = b.link_at(&b.base()).unwrap();
        let s = b.isometry(singer_matrix()).unwrap();
        let a = link.induced(&b, &s).unwrap();
        assert!((0..14).all(|i| a.panel(i) != i));
        let h = b.isometry(laurent::diagonal([1, 0, -1])).unwrap();
        assert!(link.induced(&b, &h).is_err());
    }

    #[test]
    fn ball_json_round_trips() {
        let ball = build_ball(2, 1).unwrap();
        let j = serde_json::to_string(&ball.to_json()).unwrap();
        let back: BallJson = serde_json::from_str(&j).unwrap();
        assert_eq!(back.vertices.len(), 15);
        assert_eq!(back.vertices[3].basis, ball.vertices[3].basis);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn snf_agrees_with_determinantal_divisors(x in random_matrix(2), y in random_matrix(2)) {
            let b = Building::new(2, 16).unwrap();
            let f = b.field().clone();
            prop_assume!(!laurent::det(&f, &x).is_zero() && !laurent::det(&f, &y).is_zero());
            let (u, v) = (vx(&b, &x), vx(&b, &y));
            let s = b.snf(&u, &v).unwrap();
            prop_assert_eq!(s.m, valuations_by_minors(&b, &u, &v));
            // the frame really carries both lattices
            prop_assert_eq!(b.vertex_from_matrix(&s.frame).unwrap(), u.clone());
            prop_assert_eq!(b.frame_vertex(&s.frame, s.m).unwrap(), v.clone());
            // reversing the pair negates and renormalizes
            let r = b.snf_valuations(&v, &u).unwrap();
            prop_assert_eq!(r, [s.m[0] - s.m[2], s.m[0] - s.m[1], 0]);
        }

        #[test]
        fn canonical_form_is_idempotent_and_basis_free(x in random_matrix(3), c in 0u8..3) {
            let b = Building::new(3, 16).unwrap();
            let f = b.field().clone();
            prop_assume!(!laurent::det(&f, &x).is_zero());
            let v = vx(&b, &x);
            prop_assert_eq!(vx(&b, &v.basis), v.clone());
            // column operation by a unimodular matrix keeps the lattice
            let mut u = laurent::identity();
            u[0][2] = Laurent::from_terms(&f, [(0, c), (2, 1)]);
            prop_assert_eq!(vx(&b, &laurent::mat_mul(&f, &x, &u)), v);
        }

        #[test]
        fn action_is_isometric(
            x in random_matrix(2),
            y in random_matrix(2),
            lo in random_matrix(2),
            up in random_matrix(2),
            e in prop::array::uniform3(-2i32..3),
        ) {
            let b = Building::new(2, 24).unwrap();
            let f = b.field().clone();
            prop_assume!([&x, &y].iter().all(|m| !laurent::det(&f, m).is_zero()));
            // unipotent lower · diagonal · unipotent upper has a monomial determinant
            let tri = |m: &LMatrix, lower: bool| -> LMatrix {
                std::array::from_fn(|i| std::array::from_fn(|j| {
                    if i == j { Laurent::one() } else if (i > j) == lower { m[i][j].clone() } else { Laurent::zero() }
                }))
            };
            let g = laurent::mat_mul(&f, &laurent::mat_mul(&f, &tri(&lo, true), &laurent::diagonal(e)), &tri(&up, false));
            let g = b.isometry(g).unwrap();
            let (u, v) = (vx(&b, &x), vx(&b, &y));
            prop_assert_eq!(
                b.snf_valuations(&b.act(&g, &u).unwrap(), &b.act(&g, &v).unwrap()).unwrap(),
                b.snf_valuations(&u, &v).unwrap()
            );
        }
    }
}
