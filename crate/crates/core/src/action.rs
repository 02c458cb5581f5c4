//! Type-preserving automorphisms of an [`IncidenceGeometry`], finite groups
//! generated by breadth-first closure, orbits and fixed panels.
//!
//! Composition follows the right-action convention `p^{gh} = (p^g)^h`:
//! `compose(a, b)` applies `a` first, then `b`.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::field::normalize_projective;
use crate::polygon::{Flag, IncidenceGeometry, RealizedPoint};

pub const DEFAULT_CLOSURE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Automorphism {
    geometry: u64,
    point_map: Vec<u32>,
    line_map: Vec<u32>,
}

fn is_permutation(v: &[u32]) -> bool {
    let mut seen = vec![false; v.len()];
    v.iter().all(|&x| {
        let x = x as usize;
        x < seen.len() && !std::mem::replace(&mut seen[x], true)
    })
}

impl Automorphism {
    pub fn identity(g: &IncidenceGeometry) -> Automorphism {
        Automorphism {
            geometry: g.fingerprint(),
            point_map: (0..g.num_points() as u32).collect(),
            line_map: (0..g.num_lines() as u32).collect(),
        }
    }

    /// Validates that the maps are permutations preserving incidence.
    pub fn new(g: &IncidenceGeometry, point_map: Vec<usize>, line_map: Vec<usize>) -> Result<Self> {
        let point_map: Vec<u32> = point_map.into_iter().map(|x| x as u32).collect();
        let line_map: Vec<u32> = line_map.into_iter().map(|x| x as u32).collect();
        if point_map.len() != g.num_points() || line_map.len() != g.num_lines() {
            return Err(ForgeError::GeometryMismatch);
        }
        if !is_permutation(&point_map) || !is_permutation(&line_map) {
            return Err(ForgeError::NotAnAutomorphism("maps are not permutations".into()));
        }
        for &(p, l) in g.incidence() {
            if !g.is_incident(point_map[p] as usize, line_map[l] as usize) {
                return Err(ForgeError::NotAnAutomorphism(format!(
                    "incident pair ({p}, {l}) maps to a non-incident pair"
                )));
            }
        }
        Ok(Automorphism {
            geometry: g.fingerprint(),
            point_map,
            line_map,
        })
    }

    /// Build from a map on panel ids. Maps that swap points and lines are rejected.
    pub fn from_panel_map(g: &IncidenceGeometry, map: &[usize]) -> Result<Self> {
        if map.len() != g.num_panels() {
            return Err(ForgeError::GeometryMismatch);
        }
        let np = g.num_points();
        let mut pm = Vec::with_capacity(np);
        let mut lm = Vec::with_capacity(g.num_lines());
        for (id, &img) in map.iter().enumerate() {
            if g.is_point(id) != g.is_point(img) {
                return Err(ForgeError::TypePreservationViolation(format!(
                    "panel {id} of one type maps to panel {img} of the other"
                )));
            }
            if id < np {
                pm.push(img);
            } else {
                lm.push(img - np);
            }
        }
        Automorphism::new(g, pm, lm)
    }

    /// Build from a permutation of points; lines follow their point sets.
    pub fn from_point_map(g: &IncidenceGeometry, point_map: &[usize]) -> Result<Self> {
        if point_map.len() != g.num_points() {
            return Err(ForgeError::GeometryMismatch);
        }
        let by_points: HashMap<Vec<usize>, usize> = (0..g.num_lines())
            .map(|l| (g.points_on(l).to_vec(), l))
            .collect();
        let mut line_map = Vec::with_capacity(g.num_lines());
        for l in 0..g.num_lines() {
            let mut img: Vec<usize> = g.points_on(l).iter().map(|&p| point_map[p]).collect();
            img.sort_unstable();
            let target = by_points.get(&img).ok_or_else(|| {
                ForgeError::NotAnAutomorphism(format!("line {l} does not map to a line"))
            })?;
            line_map.push(*target);
        }
        Automorphism::new(g, point_map.to_vec(), line_map)
    }

    /// Induced action of an invertible matrix over 𝔽_q on row vectors: `v ↦ v·M`.
    pub fn from_matrix(g: &IncidenceGeometry, m: &[Vec<u8>]) -> Result<Self> {
        let model = g.model().ok_or_else(|| {
            ForgeError::Parse("geometry has no coordinate model for matrix generators".into())
        })?;
        let f = model.field;
        let dim = model.coords.first().map_or(0, Vec::len);
        if m.len() != dim || m.iter().any(|r| r.len() != dim) {
            return Err(ForgeError::Parse(format!("matrix must be {dim}×{dim}")));
        }
        let index: HashMap<&[u8], usize> = model
            .coords
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_slice(), i))
            .collect();
        let mut pm = Vec::with_capacity(model.coords.len());
        for v in &model.coords {
            let img: Vec<u8> = (0..dim)
                .map(|j| {
                    (0..dim).fold(0u8, |acc, i| f.add(acc, f.mul(v[i], m[i][j] % f.order())))
                })
                .collect();
            let img = normalize_projective(&f, &img)
                .ok_or_else(|| ForgeError::NotAnAutomorphism("singular matrix".into()))?;
            let target = index.get(img.as_slice()).ok_or_else(|| {
                ForgeError::NotAnAutomorphism("matrix does not preserve the point set".into())
            })?;
            pm.push(*target);
        }
        if !is_permutation(&pm.iter().map(|&x| x as u32).collect::<Vec<_>>()) {
            return Err(ForgeError::NotAnAutomorphism("singular matrix".into()));
        }
        Automorphism::from_point_map(g, &pm)
    }

    pub fn geometry(&self) -> u64 {
        self.geometry
    }

    pub fn point_map(&self) -> &[u32] {
        &self.point_map
    }

    pub fn line_map(&self) -> &[u32] {
        &self.line_map
    }

    #[inline]
    pub fn point(&self, p: usize) -> usize {
        self.point_map[p] as usize
    }

    #[inline]
    pub fn line(&self, l: usize) -> usize {
        self.line_map[l] as usize
    }

    /// Image of a panel id.
    #[inline]
    pub fn panel(&self, id: usize) -> usize {
        let np = self.point_map.len();
        if id < np {
            self.point_map[id] as usize
        } else {
            np + self.line_map[id - np] as usize
        }
    }

    pub fn is_identity(&self) -> bool {
        self.point_map.iter().enumerate().all(|(i, &x)| i == x as usize)
            && self.line_map.iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    /// `a` then `b`.
    pub fn compose(&self, b: &Automorphism) -> Result<Automorphism> {
        if self.geometry != b.geometry {
            return Err(ForgeError::GeometryMismatch);
        }
        Ok(self.then(b))
    }

    fn then(&self, b: &Automorphism) -> Automorphism {
        Automorphism {
            geometry: self.geometry,
            point_map: self.point_map.iter().map(|&x| b.point_map[x as usize]).collect(),
            line_map: self.line_map.iter().map(|&x| b.line_map[x as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Automorphism {
        let inv = |m: &[u32]| {
            let mut out = vec![0u32; m.len()];
            for (i, &x) in m.iter().enumerate() {
                out[x as usize] = i as u32;
            }
            out
        };
        Automorphism {
            geometry: self.geometry,
            point_map: inv(&self.point_map),
            line_map: inv(&self.line_map),
        }
    }

    /// Flag mapped by the panel maps; the offset is unchanged.
    pub fn apply_to_realized(&self, x: &RealizedPoint) -> RealizedPoint {
        RealizedPoint {
            flag: Flag {
                point: self.point(x.flag.point),
                line: self.line(x.flag.line),
            },
            theta: x.theta,
        }
    }

    pub fn to_json(&self) -> GeneratorJson {
        GeneratorJson::Permutation {
            points: self.point_map.iter().map(|&x| x as usize).collect(),
            lines: self.line_map.iter().map(|&x| x as usize).collect(),
        }
    }
}

/// One generator in a group file: explicit permutations, or a matrix over 𝔽_q.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorJson {
    Permutation { points: Vec<usize>, lines: Vec<usize> },
    Matrix { matrix: Vec<Vec<u8>> },
}

impl GeneratorJson {
    pub fn resolve(&self, g: &IncidenceGeometry) -> Result<Automorphism> {
        match self {
            GeneratorJson::Permutation { points, lines } => {
                Automorphism::new(g, points.clone(), lines.clone())
            }
            GeneratorJson::Matrix { matrix } => Automorphism::from_matrix(g, matrix),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupJson {
    pub geometry: String,
    pub generators: Vec<GeneratorJson>,
}

/// A finite group given by generators together with all of its elements,
/// each labelled by a shortest generator word.
#[derive(Debug, Clone)]
pub struct GroupClosure {
    generators: Vec<Automorphism>,
    elements: Vec<Automorphism>,
    words: Vec<Vec<usize>>,
    index: HashMap<Automorphism, usize>,
}

impl GroupClosure {
    pub fn generators(&self) -> &[Automorphism] {
        &self.generators
    }

    /// Elements in shortlex order of their words; the identity comes first.
    pub fn elements(&self) -> &[Automorphism] {
        &self.elements
    }

    pub fn word(&self, i: usize) -> &[usize] {
        &self.words[i]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, a: &Automorphism) -> bool {
        self.index.contains_key(a)
    }

    pub fn position(&self, a: &Automorphism) -> Option<usize> {
        self.index.get(a).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Automorphism, &[usize])> {
        self.elements.iter().zip(self.words.iter().map(Vec::as_slice))
    }

    /// Element-id set, for comparing closures independently of order.
    pub fn element_set(&self) -> HashSet<Automorphism> {
        self.elements.iter().cloned().collect()
    }
}

/// Evaluate a generator word under the right-action convention.
pub fn evaluate_word(gens: &[Automorphism], word: &[usize]) -> Result<Automorphism> {
    let first = gens.first().ok_or(ForgeError::EmptyInput)?;
    let mut acc = Automorphism {
        geometry: first.geometry,
        point_map: (0..first.point_map.len() as u32).collect(),
        line_map: (0..first.line_map.len() as u32).collect(),
    };
    for &i in word {
        let g = gens
            .get(i)
            .ok_or_else(|| ForgeError::Parse(format!("generator index {i} out of range")))?;
        acc = acc.compose(g)?;
    }
    Ok(acc)
}

/// Breadth-first closure by word length.
pub fn close_group(gens: &[Automorphism], cap: usize) -> Result<GroupClosure> {
    let first = gens.first().ok_or(ForgeError::EmptyInput)?;
    if gens.iter().any(|g| g.geometry != first.geometry) {
        return Err(ForgeError::GeometryMismatch);
    }
    let id = Automorphism {
        geometry: first.geometry,
        point_map: (0..first.point_map.len() as u32).collect(),
        line_map: (0..first.line_map.len() as u32).collect(),
    };
    let mut closure = GroupClosure {
        generators: gens.to_vec(),
        elements: vec![id.clone()],
        words: vec![Vec::new()],
        index: HashMap::from([(id, 0)]),
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (gi, g) in gens.iter().enumerate() {
            let next = closure.elements[i].then(g);
            if closure.index.contains_key(&next) {
                continue;
            }
            if closure.elements.len() >= cap {
                return Err(ForgeError::ClosureCapExceeded {
                    cap,
                    partial: Box::new(closure),
                });
            }
            let mut word = closure.words[i].clone();
            word.push(gi);
            closure.index.insert(next.clone(), closure.elements.len());
            queue.push_back(closure.elements.len());
            closure.elements.push(next);
            closure.words.push(word);
        }
    }
    Ok(closure)
}

pub fn orbit(group: &GroupClosure, g: &IncidenceGeometry, panel: usize) -> Result<BTreeSet<usize>> {
    if panel >= g.num_panels() {
        return Err(ForgeError::UnknownPanel(panel));
    }
    Ok(group.elements.iter().map(|a| a.panel(panel)).collect())
}

/// Panels with singleton orbit.
pub fn fixed_panels(group: &GroupClosure, g: &IncidenceGeometry) -> BTreeSet<usize> {
    (0..g.num_panels())
        .filter(|&p| group.generators.iter().all(|a| a.panel(p) == p))
        .collect()
}

/// Backtracking search for distance-preserving bijections `a → b` sending
/// points to points, over a breadth-first ordering of `a` rooted at point 0.
/// Preserving all distances is the same as preserving incidence here, and
/// checking every earlier vertex prunes dead branches as early as possible.
struct Matcher<'a> {
    a: &'a IncidenceGeometry,
    b: &'a IncidenceGeometry,
    adj_b: Vec<Vec<usize>>,
    order: Vec<usize>,
    parent: Vec<usize>,
    img: Vec<usize>,
    used: Vec<bool>,
    limit: usize,
    out: Vec<Vec<usize>>,
}

impl<'a> Matcher<'a> {
    fn new(a: &'a IncidenceGeometry, b: &'a IncidenceGeometry) -> Option<Self> {
        let v = a.num_panels();
        if v == 0
            || a.num_points() != b.num_points()
            || a.num_lines() != b.num_lines()
            || a.incidence().len() != b.incidence().len()
        {
            return None;
        }
        let mut order = vec![0usize];
        let mut parent = vec![usize::MAX; v];
        let mut seen = vec![false; v];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for w in a.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    order.push(w);
                }
            }
        }
        if order.len() != v {
            return None;
        }
        Some(Matcher {
            a,
            b,
            adj_b: (0..v).map(|u| b.neighbors(u)).collect(),
            order,
            parent,
            img: vec![usize::MAX; v],
            used: vec![false; v],
            limit: usize::MAX,
            out: Vec::new(),
        })
    }

    fn fits(&self, k: usize, c: usize) -> bool {
        let u = self.order[k];
        self.order[..k].iter().all(|&w| {
            self.a.graph_distance(w, u).ok() == self.b.graph_distance(self.img[w], c).ok()
        })
    }

    fn go(&mut self, k: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        if k == self.order.len() {
            self.out.push(self.img.clone());
            return;
        }
        let u = self.order[k];
        let host = self.img[self.parent[u]];
        for i in 0..self.adj_b[host].len() {
            let c = self.adj_b[host][i];
            if !self.used[c] && self.fits(k, c) {
                self.img[u] = c;
                self.used[c] = true;
                self.go(k + 1);
                self.used[c] = false;
                self.img[u] = usize::MAX;
            }
        }
    }

    /// Up to `limit` maps sending point 0 of `a` to point `root` of `b`.
    fn with_root(&mut self, root: usize, limit: usize) -> Vec<Vec<usize>> {
        self.limit = limit;
        self.out.clear();
        self.img[0] = root;
        self.used[root] = true;
        self.go(1);
        self.used[root] = false;
        self.img[0] = usize::MAX;
        std::mem::take(&mut self.out)
    }
}

/// Every type-preserving automorphism. The stabilizer of point 0 is
/// enumerated in full; every other automorphism is a stabilizer element
/// followed by one fixed representative sending point 0 to its image.
pub fn all_automorphisms(g: &IncidenceGeometry) -> Vec<Automorphism> {
    let Some(mut m) = Matcher::new(g, g) else {
        return Vec::new();
    };
    let to_aut = |m: Vec<usize>| Automorphism::from_panel_map(g, &m).expect("search yields automorphisms");
    let stabilizer: Vec<Automorphism> = m.with_root(0, usize::MAX).into_iter().map(to_aut).collect();
    let mut out = Vec::new();
    for root in 0..g.num_points() {
        if let Some(t) = m.with_root(root, 1).into_iter().next().map(to_aut) {
            out.extend(stabilizer.iter().map(|s| s.then(&t)));
        }
    }
    out
}

/// The full type-preserving automorphism group, closed from a small
/// generating set picked deterministically from `seed`.
pub fn full_automorphism_group(g: &IncidenceGeometry, seed: u64) -> Result<GroupClosure> {
    let mut all = all_automorphisms(g);
    let target = all.len();
    if target == 0 {
        return Err(ForgeError::EmptyInput);
    }
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut gens: Vec<Automorphism> = Vec::new();
    let mut closure = close_group(&[Automorphism::identity(g)], DEFAULT_CLOSURE_CAP)?;
    for a in all {
        if closure.len() == target {
            break;
        }
        if !closure.contains(&a) {
            gens.push(a);
            closure = close_group(&gens, DEFAULT_CLOSURE_CAP)?;
        }
    }
    Ok(closure)
}

/// An isomorphism `a → b` of incidence geometries as a panel map sending
/// points to points, if any.
pub fn find_isomorphism(a: &IncidenceGeometry, b: &IncidenceGeometry) -> Option<Vec<usize>> {
    let mut m = Matcher::new(a, b)?;
    (0..b.num_points()).find_map(|root| m.with_root(root, 1).into_iter().next())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Angle;
    use crate::polygon::{build_projective_plane, build_symplectic_quadrangle};

    fn singer_f2() -> Vec<Vec<u8>> {
        // companion matrix of x³ + x + 1 acting on row vectors
        vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]]
    }

    fn mat_mul_f2(a: &[Vec<u8>], b: &[Vec<u8>]) -> Vec<Vec<u8>> {
        (0..3)
            .map(|i| (0..3).map(|j| (0..3).fold(0, |acc, k| acc ^ (a[i][k] & b[k][j]))).collect())
            .collect()
    }

    #[test]
    fn identity_and_inverse_laws() {
        let g = build_projective_plane(2).unwrap();
        let id = Automorphism::identity(&g);
        let s = Automorphism::from_matrix(&g, &singer_f2()).unwrap();
        assert_eq!(id.compose(&s).unwrap(), s);
        assert!(s.compose(&s.inverse()).unwrap().is_identity());
    }

    #[test]
    fn matrix_product_matches_composition() {
        let g = build_projective_plane(2).unwrap();
        let a = singer_f2();
        let b = vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let pa = Automorphism::from_matrix(&g, &a).unwrap();
        let pb = Automorphism::from_matrix(&g, &b).unwrap();
        // v ↦ (vA)B = v(AB): right action matches the matrix product order
        let pab = Automorphism::from_matrix(&g, &mat_mul_f2(&a, &b)).unwrap();
        assert_eq!(pa.compose(&pb).unwrap(), pab);
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let g = build_projective_plane(2).unwrap();
        let w = build_symplectic_quadrangle(2).unwrap();
        let a = Automorphism::identity(&g);
        let b = Automorphism::identity(&w);
        assert!(matches!(a.compose(&b), Err(ForgeError::GeometryMismatch)));
        assert!(matches!(close_group(&[a, b], 10), Err(ForgeError::GeometryMismatch)));
    }

    #[test]
    fn dualities_are_rejected() {
        let g = build_projective_plane(2).unwrap();
        // swap point i with line i: a polarity-shaped map
        let map: Vec<usize> = (0..14).map(|i| if i < 7 { i + 7 } else { i - 7 }).collect();
        assert!(matches!(
            Automorphism::from_panel_map(&g, &map),
            Err(ForgeError::TypePreservationViolation(_))
        ));
    }

    #[test]
    fn closure_sizes() {
        let g = build_projective_plane(2).unwrap();
        let trivial = close_group(&[Automorphism::identity(&g)], 10).unwrap();
        assert_eq!(trivial.len(), 1);
        let s = Automorphism::from_matrix(&g, &singer_f2()).unwrap();
        let cyc = close_group(&[s.clone()], 100).unwrap();
        assert_eq!(cyc.len(), 7);
        let t = Automorphism::from_matrix(&g, &[vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let full = close_group(&[s, t], DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(full.len(), count_invertible_f2_3x3());
        for (i, (a, w)) in full.iter().enumerate() {
            assert_eq!(&evaluate_word(full.generators(), w).unwrap(), a, "element {i}");
        }
    }

    fn count_invertible_f2_3x3() -> usize {
        (0u32..512)
            .filter(|&bits| {
                let m: Vec<Vec<u8>> = (0..3)
                    .map(|i| (0..3).map(|j| ((bits >> (3 * i + j)) & 1) as u8).collect())
                    .collect();
                let det = (m[0][0] & ((m[1][1] & m[2][2]) ^ (m[1][2] & m[2][1])))
                    ^ (m[0][1] & ((m[1][0] & m[2][2]) ^ (m[1][2] & m[2][0])))
                    ^ (m[0][2] & ((m[1][0] & m[2][1]) ^ (m[1][1] & m[2][0])));
                det == 1
            })
            .count()
    }

    #[test]
    fn closure_cap_reports_partial_group() {
        let g = build_projective_plane(2).unwrap();
        let s = Automorphism::from_matrix(&g, &singer_f2()).unwrap();
        match close_group(&[s], 3) {
            Err(ForgeError::ClosureCapExceeded { cap, partial }) => {
                assert_eq!(cap, 3);
                assert_eq!(partial.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn singer_orbits_and_fixed_panels() {
        let g = build_projective_plane(2).unwrap();
        let s = Automorphism::from_matrix(&g, &singer_f2()).unwrap();
        let cyc = close_group(&[s], 100).unwrap();
        assert_eq!(orbit(&cyc, &g, 0).unwrap().len(), 7);
        assert!(fixed_panels(&cyc, &g).is_empty());
        let trivial = close_group(&[Automorphism::identity(&g)], 10).unwrap();
        assert_eq!(fixed_panels(&trivial, &g).len(), 14);
        assert_eq!(orbit(&trivial, &g, 5).unwrap().into_iter().collect::<Vec<_>>(), vec![5]);
        assert!(matches!(orbit(&trivial, &g, 14), Err(ForgeError::UnknownPanel(14))));
    }

    #[test]
    fn elations_with_axis_fix_the_axis() {
        let g = build_projective_plane(2).unwrap();
        // elations fixing the line x₀ = 0 pointwise: v ↦ v·(I + e₀ ⊗ w) with w₀ = 0
        let gens: Vec<Automorphism> = [[0u8, 1, 0], [0, 0, 1]]
            .iter()
            .map(|w| {
                let m: Vec<Vec<u8>> = (0..3)
                    .map(|i| {
                        (0..3)
                            .map(|j| ((i == j) as u8) ^ if i == 0 { w[j] } else { 0 })
                            .collect()
                    })
                    .collect();
                Automorphism::from_matrix(&g, &m).unwrap()
            })
            .collect();
        let grp = close_group(&gens, 100).unwrap();
        let model = g.model().unwrap();
        // the axis is the line whose points are exactly those with x₀ = 0
        let axis_points: Vec<usize> =
            (0..7).filter(|&p| model.coords[p][0] == 0).collect();
        let axis = (0..7).find(|&l| g.points_on(l) == axis_points.as_slice()).unwrap();
        let fixed = fixed_panels(&grp, &g);
        assert!(fixed.contains(&(7 + axis)));
        for p in axis_points {
            assert!(fixed.contains(&p));
        }
    }

    #[test]
    fn realized_points_keep_their_offset() {
        let g = build_symplectic_quadrangle(2).unwrap();
        let full = full_automorphism_group(&g, 1).unwrap();
        let x = g.midpoint(g.flags()[4]);
        for a in full.elements().iter().take(50) {
            let y = a.apply_to_realized(&x);
            assert_eq!(y.theta, x.theta);
            assert!(g.is_incident(y.flag.point, y.flag.line));
        }
        let p = g.panel_point(0).unwrap();
        let img = full.elements()[7].apply_to_realized(&p);
        assert_eq!(img.theta, Angle::ZERO);
    }

    #[test]
    fn automorphism_group_orders() {
        let pg = build_projective_plane(2).unwrap();
        assert_eq!(all_automorphisms(&pg).len(), 168);
        let w = build_symplectic_quadrangle(2).unwrap();
        assert_eq!(all_automorphisms(&w).len(), 720);
        let full = full_automorphism_group(&w, 7).unwrap();
        assert_eq!(full.len(), 720);
    }

    #[test]
    fn hexagon_group_has_order_12096() {
        let h = crate::polygon::build_split_cayley_hexagon().unwrap();
        let all = all_automorphisms(&h);
        let distinct: HashSet<&Automorphism> = all.iter().collect();
        assert_eq!(distinct.len(), 12096);
        assert_eq!(all.len(), 12096);
    }

    #[test]
    fn generator_order_does_not_change_the_group() {
        let g = build_symplectic_quadrangle(2).unwrap();
        let all = all_automorphisms(&g);
        let gens = vec![all[17].clone(), all[301].clone(), all[555].clone()];
        let a = close_group(&gens, DEFAULT_CLOSURE_CAP).unwrap();
        let rev: Vec<_> = gens.iter().rev().cloned().collect();
        let b = close_group(&rev, DEFAULT_CLOSURE_CAP).unwrap();
        assert_eq!(a.element_set(), b.element_set());
    }

    #[test]
    fn group_json_accepts_both_encodings() {
        let g = build_projective_plane(2).unwrap();
        let text = r#"{"geometry":"pg.json","generators":[{"matrix":[[0,1,0],[0,0,1],[1,1,0]]},{"points":[0,1,2,3,4,5,6],"lines":[0,1,2,3,4,5,6]}]}"#;
        let gj: GroupJson = serde_json::from_str(text).unwrap();
        let gens: Vec<_> = gj.generators.iter().map(|x| x.resolve(&g).unwrap()).collect();
        assert_eq!(close_group(&gens, 100).unwrap().len(), 7);
        assert!(gens[1].is_identity());
    }

    #[test]
    fn isomorphism_search_finds_duality_of_fano_plane() {
        let g = build_projective_plane(2).unwrap();
        let d = g.dual();
        assert!(find_isomorphism(&g, &d).is_some());
        let w = build_symplectic_quadrangle(2).unwrap();
        assert!(find_isomorphism(&g, &w).is_none());
    }
}
