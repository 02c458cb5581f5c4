//! Finite generalized polygons (rank-2 spherical buildings of types A₂, C₂, G₂)
//! and the CAT(1) metric on their geometric realization.
//!
//! Panels are addressed by dense ids: points occupy `0..num_points`, lines
//! occupy `num_points..num_points + num_lines`. Chambers are flags. Every
//! chamber is realized as an arc of length π/n, parametrized by the offset θ
//! from its point-vertex.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::exact::Angle;
use crate::field::{normalize_projective, projective_points, Gf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    A2,
    C2,
    G2,
}

impl Kind {
    pub fn gonality(&self) -> usize {
        match self {
            Kind::A2 => 3,
            Kind::C2 => 4,
            Kind::G2 => 6,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::A2 => "A2",
            Kind::C2 => "C2",
            Kind::G2 => "G2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Panel {
    Point(usize),
    Line(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flag {
    pub point: usize,
    pub line: usize,
}

/// A point of the CAT(1) realization: a flag and an offset θ ∈ [0, π/n]
/// measured from the flag's point-vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RealizedPoint {
    pub flag: Flag,
    pub theta: Angle,
}

/// Canonical location of a realized point: a panel, or the interior of an arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Panel(usize),
    Interior(Flag, Angle),
}

/// Coordinates of the points when the geometry comes from a vector space over 𝔽_q.
#[derive(Debug, Clone)]
pub struct PointModel {
    pub field: Gf,
    pub coords: Vec<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct IncidenceGeometry {
    kind: Kind,
    n: usize,
    num_points: usize,
    num_lines: usize,
    incidence: Vec<(usize, usize)>,
    point_lines: Vec<Vec<usize>>,
    line_points: Vec<Vec<usize>>,
    /// All-pairs hop distances over panel ids; `u8::MAX` for unreachable.
    dist: Vec<u8>,
    fingerprint: u64,
    model: Option<PointModel>,
}

/// Wire format for geometries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryJson {
    pub kind: Kind,
    pub n: usize,
    pub points: Vec<usize>,
    pub lines: Vec<usize>,
    pub incidence: Vec<[usize; 2]>,
}

/// Result of an exhaustive axiom audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub points: usize,
    pub lines: usize,
    pub bipartite: bool,
    pub connected: bool,
    pub girth: usize,
    pub diameter: usize,
    pub min_lines_per_point: usize,
    pub min_points_per_line: usize,
}

impl IncidenceGeometry {
    pub fn from_incidence(
        kind: Kind,
        num_points: usize,
        num_lines: usize,
        incidence: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (p, l) in incidence {
            if p >= num_points {
                return Err(ForgeError::UnknownPanel(p));
            }
            if l >= num_lines {
                return Err(ForgeError::UnknownPanel(num_points + l));
            }
            set.insert((p, l));
        }
        let incidence: Vec<_> = set.into_iter().collect();
        let mut point_lines = vec![Vec::new(); num_points];
        let mut line_points = vec![Vec::new(); num_lines];
        for &(p, l) in &incidence {
            point_lines[p].push(l);
            line_points[l].push(p);
        }
        for v in line_points.iter_mut() {
            v.sort_unstable();
        }
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        (kind, num_points, num_lines, &incidence).hash(&mut hasher);
        let mut g = IncidenceGeometry {
            kind,
            n: kind.gonality(),
            num_points,
            num_lines,
            incidence,
            point_lines,
            line_points,
            dist: Vec::new(),
            fingerprint: hasher.finish(),
            model: None,
        };
        g.dist = g.all_pairs_bfs();
        Ok(g)
    }

    fn with_model(mut self, model: PointModel) -> Self {
        self.model = Some(model);
        self
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_lines(&self) -> usize {
        self.num_lines
    }

    pub fn num_panels(&self) -> usize {
        self.num_points + self.num_lines
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn model(&self) -> Option<&PointModel> {
        self.model.as_ref()
    }

    pub fn incidence(&self) -> &[(usize, usize)] {
        &self.incidence
    }

    pub fn lines_on(&self, point: usize) -> &[usize] {
        &self.point_lines[point]
    }

    pub fn points_on(&self, line: usize) -> &[usize] {
        &self.line_points[line]
    }

    pub fn is_incident(&self, point: usize, line: usize) -> bool {
        point < self.num_points
            && line < self.num_lines
            && self.point_lines[point].binary_search(&line).is_ok()
    }

    pub fn panel_id(&self, panel: Panel) -> usize {
        match panel {
            Panel::Point(p) => p,
            Panel::Line(l) => self.num_points + l,
        }
    }

    pub fn panel(&self, id: usize) -> Result<Panel> {
        if id < self.num_points {
            Ok(Panel::Point(id))
        } else if id < self.num_panels() {
            Ok(Panel::Line(id - self.num_points))
        } else {
            Err(ForgeError::UnknownPanel(id))
        }
    }

    pub fn is_point(&self, id: usize) -> bool {
        id < self.num_points
    }

    /// Neighbors of a panel in the incidence graph, as panel ids.
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        if id < self.num_points {
            self.point_lines[id].iter().map(|&l| self.num_points + l).collect()
        } else {
            self.line_points[id - self.num_points].clone()
        }
    }

    /// All flags in id-ascending order (by point, then line).
    pub fn flags(&self) -> Vec<Flag> {
        self.incidence
            .iter()
            .map(|&(point, line)| Flag { point, line })
            .collect()
    }

    pub fn flag_panels(&self, flag: Flag) -> (usize, usize) {
        (flag.point, self.num_points + flag.line)
    }

    /// The arc length π/n of one chamber.
    pub fn arc(&self) -> Angle {
        Angle::pi_frac(1, self.n as i64)
    }

    fn all_pairs_bfs(&self) -> Vec<u8> {
        let v = self.num_panels();
        let mut dist = vec![u8::MAX; v * v];
        let mut queue = VecDeque::new();
        for s in 0..v {
            let row = &mut dist[s * v..(s + 1) * v];
            row[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = row[u];
                for w in self.neighbors(u) {
                    if row[w] == u8::MAX {
                        row[w] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        dist
    }

    #[inline]
    fn hops(&self, a: usize, b: usize) -> u8 {
        self.dist[a * self.num_panels() + b]
    }

    /// Shortest-path length between two panels in the incidence graph.
    pub fn graph_distance(&self, a: usize, b: usize) -> Result<usize> {
        let v = self.num_panels();
        if a >= v {
            return Err(ForgeError::UnknownPanel(a));
        }
        if b >= v {
            return Err(ForgeError::UnknownPanel(b));
        }
        Ok(self.hops(a, b) as usize)
    }

    pub fn is_opposite(&self, a: usize, b: usize) -> Result<bool> {
        Ok(self.graph_distance(a, b)? == self.n)
    }

    /// The unique panel adjacent to both `a` and `b` when they are at distance 2.
    pub fn meet(&self, a: usize, b: usize) -> Option<usize> {
        if self.graph_distance(a, b).ok()? != 2 {
            return None;
        }
        let nb = self.neighbors(b);
        self.neighbors(a).into_iter().find(|x| nb.contains(x))
    }

    pub fn check_point(&self, x: &RealizedPoint) -> Result<()> {
        if !self.is_incident(x.flag.point, x.flag.line) {
            return Err(ForgeError::UnknownFlag(x.flag.point, x.flag.line));
        }
        if x.theta < Angle::ZERO || x.theta > self.arc() {
            return Err(ForgeError::Parse(format!(
                "offset {} outside [0, {}]",
                x.theta,
                self.arc()
            )));
        }
        Ok(())
    }

    /// Canonical location, identifying the two ends of an arc with their panels.
    pub fn locate(&self, x: &RealizedPoint) -> Location {
        if x.theta == Angle::ZERO {
            Location::Panel(x.flag.point)
        } else if x.theta == self.arc() {
            Location::Panel(self.num_points + x.flag.line)
        } else {
            Location::Interior(x.flag, x.theta)
        }
    }

    pub fn same_point(&self, x: &RealizedPoint, y: &RealizedPoint) -> bool {
        self.locate(x) == self.locate(y)
    }

    /// The realized point sitting at a panel.
    pub fn panel_point(&self, id: usize) -> Result<RealizedPoint> {
        match self.panel(id)? {
            Panel::Point(p) => {
                let line = *self.point_lines[p]
                    .first()
                    .ok_or(ForgeError::UnknownPanel(id))?;
                Ok(RealizedPoint {
                    flag: Flag { point: p, line },
                    theta: Angle::ZERO,
                })
            }
            Panel::Line(l) => {
                let point = *self.line_points[l]
                    .first()
                    .ok_or(ForgeError::UnknownPanel(id))?;
                Ok(RealizedPoint {
                    flag: Flag { point, line: l },
                    theta: self.arc(),
                })
            }
        }
    }

    pub fn midpoint(&self, flag: Flag) -> RealizedPoint {
        RealizedPoint {
            flag,
            theta: Angle::pi_frac(1, 2 * self.n as i64),
        }
    }

    /// Ends of the arc carrying `x`, each with its arc-distance from `x`.
    fn ends(&self, x: &RealizedPoint) -> [(usize, Angle); 2] {
        let arc = self.arc().coefficient();
        let (p, l) = self.flag_panels(x.flag);
        [
            (p, x.theta),
            (l, Angle::from_coefficient(arc - x.theta.coefficient())),
        ]
    }

    /// CAT(1) distance between two realized points, capped at π.
    pub fn cat1_distance(&self, x: &RealizedPoint, y: &RealizedPoint) -> Result<Angle> {
        self.check_point(x)?;
        self.check_point(y)?;
        let arc = self.arc().coefficient();
        let mut best = Angle::PI;
        if x.flag == y.flag {
            best = best.min(x.theta.abs_diff(y.theta));
        }
        for (ex, dx) in self.ends(x) {
            for (ey, dy) in self.ends(y) {
                let hops = self.hops(ex, ey);
                if hops == u8::MAX {
                    continue;
                }
                let total = dx.coefficient()
                    + dy.coefficient()
                    + arc * num_rational::Rational64::from_integer(hops as i64);
                best = best.min(Angle::from_coefficient(total));
            }
        }
        Ok(best)
    }

    /// Distance from a panel to a realized point.
    pub fn panel_distance(&self, panel: usize, x: &RealizedPoint) -> Result<Angle> {
        let p = self.panel_point(panel)?;
        self.cat1_distance(&p, x)
    }

    /// Exhaustive audit of the generalized-polygon axioms.
    pub fn audit(&self) -> AxiomReport {
        let v = self.num_panels();
        // two-colouring by BFS parity
        let mut colour = vec![u8::MAX; v];
        let mut bipartite = true;
        let mut connected = true;
        let mut queue = VecDeque::new();
        for s in 0..v {
            if colour[s] != u8::MAX {
                continue;
            }
            if s > 0 {
                connected = false;
            }
            colour[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for w in self.neighbors(u) {
                    if colour[w] == u8::MAX {
                        colour[w] = 1 - colour[u];
                        queue.push_back(w);
                    } else if colour[w] == colour[u] {
                        bipartite = false;
                    }
                }
            }
        }
        let diameter = if connected {
            self.dist.iter().copied().max().unwrap_or(0) as usize
        } else {
            usize::MAX
        };
        AxiomReport {
            points: self.num_points,
            lines: self.num_lines,
            bipartite,
            connected,
            girth: self.girth(),
            diameter,
            min_lines_per_point: self.point_lines.iter().map(Vec::len).min().unwrap_or(0),
            min_points_per_line: self.line_points.iter().map(Vec::len).min().unwrap_or(0),
        }
    }

    fn girth(&self) -> usize {
        let v = self.num_panels();
        let mut best = usize::MAX;
        let mut d = vec![usize::MAX; v];
        let mut parent = vec![usize::MAX; v];
        let mut queue = VecDeque::new();
        for s in 0..v {
            d.iter_mut().for_each(|x| *x = usize::MAX);
            d[s] = 0;
            parent[s] = usize::MAX;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                if 2 * d[u] + 1 >= best {
                    break;
                }
                for w in self.neighbors(u) {
                    if d[w] == usize::MAX {
                        d[w] = d[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else if parent[u] != w {
                        best = best.min(d[u] + d[w] + 1);
                    }
                }
            }
        }
        best
    }

    /// Audit and turn any failed axiom into an error.
    pub fn verify(&self) -> Result<AxiomReport> {
        let r = self.audit();
        let n = self.n;
        let fail = |m: String| Err(ForgeError::AxiomViolation(m));
        if !r.bipartite {
            return fail("incidence graph is not bipartite".into());
        }
        if !r.connected {
            return fail("incidence graph is not connected".into());
        }
        if r.girth != 2 * n {
            return fail(format!("girth {} != {}", r.girth, 2 * n));
        }
        if r.diameter != n {
            return fail(format!("diameter {} != {}", r.diameter, n));
        }
        if r.min_lines_per_point < 2 || r.min_points_per_line < 2 {
            return fail("thickness below 2".into());
        }
        Ok(r)
    }

    /// Swap the roles of points and lines.
    pub fn dual(&self) -> IncidenceGeometry {
        IncidenceGeometry::from_incidence(
            self.kind,
            self.num_lines,
            self.num_points,
            self.incidence.iter().map(|&(p, l)| (l, p)),
        )
        .expect("dual of a valid incidence structure is valid")
    }

    pub fn to_json(&self) -> GeometryJson {
        GeometryJson {
            kind: self.kind,
            n: self.n,
            points: (0..self.num_points).collect(),
            lines: (0..self.num_lines).collect(),
            incidence: self.incidence.iter().map(|&(p, l)| [p, l]).collect(),
        }
    }

    pub fn from_json(j: &GeometryJson) -> Result<Self> {
        if j.n != j.kind.gonality() {
            return Err(ForgeError::AxiomViolation(format!(
                "kind {} requires n = {}, got {}",
                j.kind.name(),
                j.kind.gonality(),
                j.n
            )));
        }
        let dense = |ids: &[usize]| ids.iter().enumerate().all(|(i, &x)| i == x);
        if !dense(&j.points) || !dense(&j.lines) {
            return Err(ForgeError::Parse("panel ids must be dense and ascending".into()));
        }
        IncidenceGeometry::from_incidence(
            j.kind,
            j.points.len(),
            j.lines.len(),
            j.incidence.iter().map(|&[p, l]| (p, l)),
        )
    }

    /// Graphviz rendering of the incidence graph.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "graph {} {{", self.kind.name());
        let _ = writeln!(s, "  node [shape=point];");
        for p in 0..self.num_points {
            let _ = writeln!(s, "  p{p} [shape=circle,label=\"p{p}\"];");
        }
        for l in 0..self.num_lines {
            let _ = writeln!(s, "  l{l} [shape=box,label=\"l{l}\"];");
        }
        for &(p, l) in &self.incidence {
            let _ = writeln!(s, "  p{p} -- l{l};");
        }
        s.push_str("}\n");
        s
    }
}

/// PG(2, q): points and lines are the 1- and 2-dimensional subspaces of 𝔽_q³.
pub fn build_projective_plane(q: u32) -> Result<IncidenceGeometry> {
    let f = Gf::new(q)?;
    let pts = projective_points(&f, 3);
    // lines are indexed by their normal vectors
    let dot = |a: &[u8], b: &[u8]| {
        a.iter()
            .zip(b)
            .fold(0u8, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
    };
    let mut inc = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        for (j, l) in pts.iter().enumerate() {
            if dot(p, l) == 0 {
                inc.push((i, j));
            }
        }
    }
    let g = IncidenceGeometry::from_incidence(Kind::A2, pts.len(), pts.len(), inc)?
        .with_model(PointModel {
            field: f,
            coords: pts,
        });
    g.verify()?;
    Ok(g)
}

/// Lines spanned by pairs of points, as sorted point-index sets.
fn span_lines(
    f: &Gf,
    pts: &[Vec<u8>],
    admissible: impl Fn(&[u8], &[u8]) -> bool,
) -> Vec<Vec<usize>> {
    let index: HashMap<&[u8], usize> = pts.iter().enumerate().map(|(i, v)| (v.as_slice(), i)).collect();
    let mut lines = BTreeSet::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if !admissible(&pts[i], &pts[j]) {
                continue;
            }
            let mut members = BTreeSet::new();
            for a in f.elements() {
                for b in f.elements() {
                    let v: Vec<u8> = pts[i]
                        .iter()
                        .zip(&pts[j])
                        .map(|(&x, &y)| f.add(f.mul(a, x), f.mul(b, y)))
                        .collect();
                    if let Some(n) = normalize_projective(f, &v) {
                        members.insert(index[n.as_slice()]);
                    }
                }
            }
            lines.insert(members.into_iter().collect::<Vec<_>>());
        }
    }
    lines.into_iter().collect()
}

fn geometry_from_lines(
    kind: Kind,
    f: Gf,
    pts: Vec<Vec<u8>>,
    lines: Vec<Vec<usize>>,
) -> Result<IncidenceGeometry> {
    let inc = lines
        .iter()
        .enumerate()
        .flat_map(|(l, members)| members.iter().map(move |&p| (p, l)));
    let g = IncidenceGeometry::from_incidence(kind, pts.len(), lines.len(), inc)?
        .with_model(PointModel { field: f, coords: pts });
    g.verify()?;
    Ok(g)
}

/// The symplectic quadrangle W(q): points of PG(3, q) and the totally
/// isotropic lines of x₀y₁ − x₁y₀ + x₂y₃ − x₃y₂.
pub fn build_symplectic_quadrangle(q: u32) -> Result<IncidenceGeometry> {
    if !(q == 2 || q == 3) {
        return Err(ForgeError::UnsupportedOrder(q));
    }
    let f = Gf::new(q)?;
    let pts = projective_points(&f, 4);
    let form = |x: &[u8], y: &[u8]| {
        let a = f.sub(f.mul(x[0], y[1]), f.mul(x[1], y[0]));
        let b = f.sub(f.mul(x[2], y[3]), f.mul(x[3], y[2]));
        f.add(a, b)
    };
    let lines = span_lines(&f, &pts, |x, y| form(x, y) == 0);
    geometry_from_lines(Kind::C2, f, pts, lines)
}

/// The split Cayley hexagon H(2) inside the parabolic quadric
/// X₀X₄ + X₁X₅ + X₂X₆ = X₃² of PG(6, 2).
///
/// Lines are the quadric lines whose Grassmann coordinates satisfy
/// p₁₂ = p₃₄, p₅₄ = p₃₂, p₂₀ = p₃₅, p₆₅ = p₃₀, p₀₁ = p₃₆, p₄₆ = p₃₁.
pub fn build_split_cayley_hexagon() -> Result<IncidenceGeometry> {
    let f = Gf::new(2)?;
    let quad = |x: &[u8]| (x[0] & x[4]) ^ (x[1] & x[5]) ^ (x[2] & x[6]) ^ x[3];
    let pts: Vec<Vec<u8>> = projective_points(&f, 7)
        .into_iter()
        .filter(|x| quad(x) == 0)
        .collect();
    let pl = |x: &[u8], y: &[u8], i: usize, j: usize| (x[i] & y[j]) ^ (x[j] & y[i]);
    const CONDITIONS: [((usize, usize), (usize, usize)); 6] = [
        ((1, 2), (3, 4)),
        ((5, 4), (3, 2)),
        ((2, 0), (3, 5)),
        ((6, 5), (3, 0)),
        ((0, 1), (3, 6)),
        ((4, 6), (3, 1)),
    ];
    let lines = span_lines(&f, &pts, |x, y| {
        let sum: Vec<u8> = x.iter().zip(y).map(|(a, b)| a ^ b).collect();
        quad(&sum) == 0
            && CONDITIONS
                .iter()
                .all(|&((a, b), (c, d))| pl(x, y, a, b) == pl(x, y, c, d))
    });
    geometry_from_lines(Kind::G2, f, pts, lines)
}
