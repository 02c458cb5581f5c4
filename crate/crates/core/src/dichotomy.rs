//! Local dichotomy for group actions on generalized quadrangles and projective
//! planes: either some element throws the nearest panel to an opposite one, or
//! a fixed panel sits within π/2 of the given point.
//!
//! Every decision comes with a [`DichotomyCertificate`] that [`replay`] checks
//! against the generators alone, without the closure or the precomputed
//! distance table.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{
    close_group, evaluate_word, Automorphism, GeneratorJson, GroupClosure, DEFAULT_CLOSURE_CAP,
};
use crate::error::{ForgeError, Result};
use crate::exact::Angle;
use crate::polygon::{Flag, IncidenceGeometry, Kind, Location, RealizedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "opposite")]
    OppositeFound,
    #[serde(rename = "fixed_panel")]
    FixedPanel,
}

/// Which panel of the chamber plays the role of `p` in the A₂ decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PanelChoice {
    #[default]
    Point,
    Line,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomyCertificate {
    pub branch: Branch,
    /// Generator word of the witness element; empty for a fixed panel.
    pub word: Vec<usize>,
    /// The opposite image panel, or the fixed witness panel.
    pub panel: usize,
    #[serde(with = "point_json")]
    pub x: RealizedPoint,
    /// Distance from `base` to `g·x`, or from the fixed panel to `x`.
    pub angle: Angle,
    /// The panel `p` the decision was made for.
    pub base: usize,
}

mod point_json {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        flag: [usize; 2],
        theta: Angle,
    }

    pub fn serialize<S: Serializer>(x: &RealizedPoint, s: S) -> std::result::Result<S::Ok, S::Error> {
        Repr {
            flag: [x.flag.point, x.flag.line],
            theta: x.theta,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<RealizedPoint, D::Error> {
        let r = Repr::deserialize(d)?;
        Ok(RealizedPoint {
            flag: Flag {
                point: r.flag[0],
                line: r.flag[1],
            },
            theta: r.theta,
        })
    }
}

fn require_kind(g: &IncidenceGeometry, kind: Kind) -> Result<()> {
    if g.kind() == kind {
        Ok(())
    } else {
        Err(ForgeError::WrongKind {
            expected: kind.name(),
            found: g.kind().name().to_string(),
        })
    }
}

fn nearest_panel_any(g: &IncidenceGeometry, x: &RealizedPoint) -> Result<usize> {
    g.check_point(x)?;
    let (own_point, _) = g.flag_panels(x.flag);
    let mut best: Option<(Angle, bool, usize)> = None;
    for id in 0..g.num_panels() {
        let d = g.panel_distance(id, x)?;
        // smaller key wins: distance, then the flag's point-vertex, then id
        let key = (d, id != own_point, id);
        if best.map_or(true, |b| key < b) {
            best = Some(key);
        }
    }
    best.map(|b| b.2).ok_or(ForgeError::EmptyInput)
}

/// A panel at minimum distance from `x` in a quadrangle.
pub fn nearest_panel(g: &IncidenceGeometry, x: &RealizedPoint) -> Result<usize> {
    require_kind(g, Kind::C2)?;
    nearest_panel_any(g, x)
}

fn first_moving(group: &GroupClosure, panel: usize) -> Option<usize> {
    group.elements().iter().position(|a| a.panel(panel) != panel)
}

fn fixed_by_all(group: &GroupClosure, panel: usize) -> bool {
    group.generators().iter().all(|a| a.panel(panel) == panel)
}

fn check_geometry(g: &IncidenceGeometry, group: &GroupClosure) -> Result<()> {
    match group.generators().first() {
        Some(a) if a.geometry() != g.fingerprint() => Err(ForgeError::GeometryMismatch),
        _ => Ok(()),
    }
}

pub fn decide_c2(
    g: &IncidenceGeometry,
    group: &GroupClosure,
    x: &RealizedPoint,
) -> Result<DichotomyCertificate> {
    require_kind(g, Kind::C2)?;
    check_geometry(g, group)?;
    let p = nearest_panel_any(g, x)?;
    let pp = g.panel_point(p)?;

    if let Some(i) = group
        .elements()
        .iter()
        .position(|a| g.is_opposite(p, a.panel(p)).unwrap_or(false))
    {
        let a = &group.elements()[i];
        let angle = g.cat1_distance(&pp, &a.apply_to_realized(x))?;
        if angle < Angle::pi_frac(7, 8) {
            return Err(ForgeError::DichotomyViolated(format!(
                "opposite image found but distance {angle} < 7/8 pi"
            )));
        }
        return Ok(DichotomyCertificate {
            branch: Branch::OppositeFound,
            word: group.word(i).to_vec(),
            panel: a.panel(p),
            x: *x,
            angle,
            base: p,
        });
    }

    let witness = if fixed_by_all(group, p) {
        p
    } else {
        let i = first_moving(group, p).expect("some element moves p");
        let image = group.elements()[i].panel(p);
        g.meet(p, image).ok_or_else(|| {
            ForgeError::DichotomyViolated(format!("panels {p} and {image} have no common neighbour"))
        })?
    };
    fixed_certificate(g, group, x, p, witness)
}

fn fixed_certificate(
    g: &IncidenceGeometry,
    group: &GroupClosure,
    x: &RealizedPoint,
    base: usize,
    witness: usize,
) -> Result<DichotomyCertificate> {
    if !fixed_by_all(group, witness) {
        return Err(ForgeError::DichotomyViolated(format!(
            "candidate panel {witness} is not fixed"
        )));
    }
    let angle = g.panel_distance(witness, x)?;
    if angle >= Angle::pi_frac(1, 2) {
        return Err(ForgeError::DichotomyViolated(format!(
            "fixed panel {witness} at distance {angle} from x"
        )));
    }
    Ok(DichotomyCertificate {
        branch: Branch::FixedPanel,
        word: Vec::new(),
        panel: witness,
        x: *x,
        angle,
        base,
    })
}

pub fn decide_a2(
    g: &IncidenceGeometry,
    group: &GroupClosure,
    x: &RealizedPoint,
    c: Flag,
    choice: PanelChoice,
) -> Result<DichotomyCertificate> {
    require_kind(g, Kind::A2)?;
    check_geometry(g, group)?;
    g.check_point(x)?;
    if !g.is_incident(c.point, c.line) {
        return Err(ForgeError::UnknownFlag(c.point, c.line));
    }
    let (cp, cl) = g.flag_panels(c);
    let on_chamber = match g.locate(x) {
        Location::Panel(id) => id == cp || id == cl,
        Location::Interior(f, _) => f == c,
    };
    if !on_chamber {
        return Err(ForgeError::NotOnChamber);
    }
    let (p, l) = match choice {
        PanelChoice::Point => (cp, cl),
        PanelChoice::Line => (cl, cp),
    };
    let pp = g.panel_point(p)?;

    // p ∉ l^g makes l^g opposite p
    if let Some(i) = group
        .elements()
        .iter()
        .position(|a| g.graph_distance(p, a.panel(l)).map_or(false, |d| d != 1))
    {
        let a = &group.elements()[i];
        let image = a.panel(l);
        if !g.is_opposite(p, image)? {
            return Err(ForgeError::DichotomyViolated(format!(
                "panel {image} is neither incident nor opposite to {p}"
            )));
        }
        let angle = g.cat1_distance(&pp, &a.apply_to_realized(x))?;
        if angle < Angle::pi_frac(2, 3) {
            return Err(ForgeError::DichotomyViolated(format!(
                "opposite image found but distance {angle} < 2/3 pi"
            )));
        }
        return Ok(DichotomyCertificate {
            branch: Branch::OppositeFound,
            word: group.word(i).to_vec(),
            panel: image,
            x: *x,
            angle,
            base: p,
        });
    }

    let witness = if fixed_by_all(group, l) {
        l
    } else {
        let i = first_moving(group, l).expect("some element moves l");
        let image = group.elements()[i].panel(l);
        g.meet(l, image).ok_or_else(|| {
            ForgeError::DichotomyViolated(format!("panels {l} and {image} have no common neighbour"))
        })?
    };
    fixed_certificate(g, group, x, p, witness)
}

/// Independent check of a certificate against the generators: words are
/// evaluated directly, opposition comes from a fresh breadth-first search,
/// and fixedness from the generator orbit of the witness.
pub fn replay(
    g: &IncidenceGeometry,
    gens: &[Automorphism],
    cert: &DichotomyCertificate,
) -> Result<()> {
    let fail = |m: String| Err(ForgeError::DichotomyViolated(format!("replay: {m}")));
    let n = g.n();
    if cert.base >= g.num_panels() || cert.panel >= g.num_panels() {
        return fail("panel id out of range".into());
    }
    let base = fresh::realized_panel(g, cert.base);
    match cert.branch {
        Branch::OppositeFound => {
            let a = evaluate_word(gens, &cert.word)?;
            let hops = fresh::bfs(g, cert.base)[cert.panel];
            if hops != n {
                return fail(format!("panel {} is at {hops} hops from the base", cert.panel));
            }
            let gx = a.apply_to_realized(&cert.x);
            let angle = fresh::distance(g, &base, &gx);
            if angle != cert.angle {
                return fail(format!("angle {angle} recorded as {}", cert.angle));
            }
            let bound = match g.kind() {
                Kind::A2 => Angle::pi_frac(2, 3),
                Kind::C2 => Angle::pi_frac(7, 8),
                Kind::G2 => Angle::ZERO,
            };
            if angle < bound {
                return fail(format!("angle {angle} below {bound}"));
            }
            let image_of_base = a.panel(cert.base);
            let consistent = match g.kind() {
                Kind::A2 => fresh::bfs(g, image_of_base)[cert.panel] == 1,
                _ => image_of_base == cert.panel,
            };
            if !consistent {
                return fail("witness panel is not an image of the chamber".into());
            }
        }
        Branch::FixedPanel => {
            if fresh::orbit(gens, cert.panel).len() != 1 {
                return fail(format!("panel {} is moved", cert.panel));
            }
            let angle = fresh::distance(g, &fresh::realized_panel(g, cert.panel), &cert.x);
            if angle != cert.angle {
                return fail(format!("angle {angle} recorded as {}", cert.angle));
            }
            if angle >= Angle::pi_frac(1, 2) {
                return fail(format!("fixed panel at distance {angle}"));
            }
        }
    }
    Ok(())
}

/// Distance and orbit computations that avoid the geometry's cached tables.
mod fresh {
    use super::*;
    use num_rational::Rational64;

    pub fn bfs(g: &IncidenceGeometry, from: usize) -> Vec<usize> {
        let np = g.num_points();
        let mut dist = vec![usize::MAX; g.num_panels()];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let next: Vec<usize> = if u < np {
                g.lines_on(u).iter().map(|&l| np + l).collect()
            } else {
                g.points_on(u - np).to_vec()
            };
            for w in next {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn realized_panel(g: &IncidenceGeometry, id: usize) -> RealizedPoint {
        let np = g.num_points();
        if id < np {
            RealizedPoint {
                flag: Flag {
                    point: id,
                    line: g.lines_on(id)[0],
                },
                theta: Angle::ZERO,
            }
        } else {
            RealizedPoint {
                flag: Flag {
                    point: g.points_on(id - np)[0],
                    line: id - np,
                },
                theta: g.arc(),
            }
        }
    }

    /// Length of the shortest path in the metric graph, capped at π.
    pub fn distance(g: &IncidenceGeometry, x: &RealizedPoint, y: &RealizedPoint) -> Angle {
        let np = g.num_points();
        let arc = g.arc().coefficient();
        let ends = |z: &RealizedPoint| {
            [
                (z.flag.point, z.theta.coefficient()),
                (np + z.flag.line, arc - z.theta.coefficient()),
            ]
        };
        let mut best = Rational64::from_integer(1);
        if x.flag == y.flag {
            let d = x.theta.coefficient() - y.theta.coefficient();
            best = best.min(if d < Rational64::from_integer(0) { -d } else { d });
        }
        for (ex, dx) in ends(x) {
            let table = bfs(g, ex);
            for (ey, dy) in ends(y) {
                if table[ey] != usize::MAX {
                    best = best.min(dx + dy + arc * Rational64::from_integer(table[ey] as i64));
                }
            }
        }
        Angle::from_coefficient(best)
    }

    pub fn orbit(gens: &[Automorphism], panel: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([panel]);
        let mut queue = VecDeque::from([panel]);
        while let Some(u) = queue.pop_front() {
            for a in gens {
                let v = a.panel(u);
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

/// Decide for the geometry's kind, using the point-panel of `x`'s flag as
/// the chamber panel in type A₂.
pub fn decide(
    g: &IncidenceGeometry,
    group: &GroupClosure,
    x: &RealizedPoint,
) -> Result<DichotomyCertificate> {
    match g.kind() {
        Kind::C2 => decide_c2(g, group, x),
        Kind::A2 => decide_a2(g, group, x, x.flag, PanelChoice::Point),
        Kind::G2 => Err(ForgeError::WrongKind {
            expected: "A2 or C2",
            found: "G2".into(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubgroupSampler {
    /// Every cyclic subgroup of the full automorphism group.
    Cyclic,
    /// Seeded random subgroups on `k` generators drawn from the full group.
    Random { k: usize },
    CyclicAndRandom { k: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: Kind,
    pub full_group_order: usize,
    pub cyclic_subgroups: usize,
    pub random_subgroups: usize,
    pub instances: usize,
    pub opposite: usize,
    pub fixed_panel: usize,
    pub min_opposite_angle: Option<Angle>,
    pub max_fixed_distance: Option<Angle>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    instances: usize,
    opposite: usize,
    fixed: usize,
    min_opp: Option<Angle>,
    max_fixed: Option<Angle>,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            instances: self.instances + o.instances,
            opposite: self.opposite + o.opposite,
            fixed: self.fixed + o.fixed,
            min_opp: opt_fold(self.min_opp, o.min_opp, std::cmp::min),
            max_fixed: opt_fold(self.max_fixed, o.max_fixed, std::cmp::max),
        }
    }
}

fn opt_fold(a: Option<Angle>, b: Option<Angle>, f: fn(Angle, Angle) -> Angle) -> Option<Angle> {
    match (a, b) {
        (Some(a), Some(b)) => Some(f(a, b)),
        (a, None) => a,
        (None, b) => b,
    }
}

fn sweep_subgroup(g: &IncidenceGeometry, gens: &[Automorphism]) -> Result<Tally> {
    let group = close_group(gens, DEFAULT_CLOSURE_CAP)?;
    let mut t = Tally::default();
    for flag in g.flags() {
        let x = g.midpoint(flag);
        let cert = decide(g, &group, &x).and_then(|c| replay(g, gens, &c).map(|_| c));
        let cert = cert.map_err(|e| {
            let gens_json: Vec<GeneratorJson> = gens.iter().map(Automorphism::to_json).collect();
            ForgeError::DichotomyViolated(format!(
                "{e}; instance: {}",
                serde_json::json!({ "generators": gens_json, "x": {"flag": [flag.point, flag.line], "theta": x.theta} })
            ))
        })?;
        t.instances += 1;
        match cert.branch {
            Branch::OppositeFound => {
                t.opposite += 1;
                t.min_opp = opt_fold(t.min_opp, Some(cert.angle), std::cmp::min);
            }
            Branch::FixedPanel => {
                t.fixed += 1;
                t.max_fixed = opt_fold(t.max_fixed, Some(cert.angle), std::cmp::max);
            }
        }
    }
    Ok(t)
}

/// One representative generator per cyclic subgroup, in closure order.
pub fn cyclic_subgroup_generators(full: &GroupClosure) -> Vec<Automorphism> {
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut reps = Vec::new();
    for a in full.elements() {
        let cyc = close_group(std::slice::from_ref(a), DEFAULT_CLOSURE_CAP)
            .expect("cyclic subgroup of a finite group");
        let mut key: Vec<usize> = cyc
            .elements()
            .iter()
            .map(|e| full.position(e).expect("closed in the full group"))
            .collect();
        key.sort_unstable();
        if seen.insert(key) {
            reps.push(a.clone());
        }
    }
    reps
}

/// Seeded generator draw for random trial `trial`, independent of scheduling.
fn random_generators(
    elements: &[Automorphism],
    k: usize,
    seed: u64,
    trial: u64,
) -> Vec<Automorphism> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    (0..k).map(|_| elements[rng.gen_range(0..elements.len())].clone()).collect()
}

/// Run the decider on every flag midpoint for a family of subgroups of the
/// full automorphism group. `samples` counts the random subgroups; zero
/// samples gives an empty report.
pub fn sweep_verify(
    g: &IncidenceGeometry,
    full: &GroupClosure,
    sampler: SubgroupSampler,
    samples: usize,
    seed: u64,
) -> Result<SweepReport> {
    if !matches!(g.kind(), Kind::A2 | Kind::C2) {
        return Err(ForgeError::WrongKind {
            expected: "A2 or C2",
            found: g.kind().name().into(),
        });
    }
    check_geometry(g, full)?;
    let mut report = SweepReport {
        kind: g.kind(),
        full_group_order: full.len(),
        cyclic_subgroups: 0,
        random_subgroups: 0,
        instances: 0,
        opposite: 0,
        fixed_panel: 0,
        min_opposite_angle: None,
        max_fixed_distance: None,
    };
    if samples == 0 {
        return Ok(report);
    }
    let mut families: Vec<Vec<Automorphism>> = Vec::new();
    if matches!(sampler, SubgroupSampler::Cyclic | SubgroupSampler::CyclicAndRandom { .. }) {
        let reps = cyclic_subgroup_generators(full);
        report.cyclic_subgroups = reps.len();
        families.extend(reps.into_iter().map(|a| vec![a]));
    }
    if let SubgroupSampler::Random { k } | SubgroupSampler::CyclicAndRandom { k } = sampler {
        if k == 0 {
            return Err(ForgeError::EmptyInput);
        }
        report.random_subgroups = samples;
        families.extend((0..samples as u64).map(|t| random_generators(full.elements(), k, seed, t)));
    }
    let results: Vec<Result<Tally>> = families.par_iter().map(|gens| sweep_subgroup(g, gens)).collect();
    let mut total = Tally::default();
    for r in results {
        total = total.merge(r?);
    }
    report.instances = total.instances;
    report.opposite = total.opposite;
    report.fixed_panel = total.fixed;
    report.min_opposite_angle = total.min_opp;
    report.max_fixed_distance = total.max_fixed;
    Ok(report)
}

/// A subgroup and point of the hexagon where neither alternative holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct G2Finding {
    pub trial: usize,
    pub generators: Vec<GeneratorJson>,
    #[serde(with = "point_json")]
    pub x: RealizedPoint,
    pub panel: usize,
    pub orbit: Vec<usize>,
    pub fixed_panels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct G2SearchReport {
    pub trials: usize,
    pub skipped: usize,
    pub instances: usize,
    pub findings: Vec<G2Finding>,
}

enum TrialOutcome {
    Done(usize, Vec<G2Finding>),
    Skipped,
}

fn g2_trial(
    g: &IncidenceGeometry,
    gens: &[Automorphism],
    trial: usize,
    cap: usize,
) -> Result<TrialOutcome> {
    let n = g.n();
    let fixed: Vec<usize> = (0..g.num_panels())
        .filter(|&p| gens.iter().all(|a| a.panel(p) == p))
        .collect();
    let mut findings = Vec::new();
    let mut instances = 0;
    for flag in g.flags() {
        let x = g.midpoint(flag);
        instances += 1;
        let p = nearest_panel_any(g, &x)?;
        let orbit = fresh::orbit(gens, p);
        let branch1 = orbit.iter().any(|&q| g.graph_distance(p, q).map_or(false, |d| d == n));
        if branch1 {
            continue;
        }
        let mut branch2 = false;
        for &f in &fixed {
            if g.panel_distance(f, &x)? < Angle::pi_frac(1, 2) {
                branch2 = true;
                break;
            }
        }
        if !branch2 {
            findings.push(G2Finding {
                trial,
                generators: gens.iter().map(Automorphism::to_json).collect(),
                x,
                panel: p,
                orbit: orbit.into_iter().collect(),
                fixed_panels: fixed.clone(),
            });
        }
    }
    if !findings.is_empty() {
        match close_group(gens, cap) {
            Ok(_) => {}
            Err(ForgeError::ClosureCapExceeded { .. }) => return Ok(TrialOutcome::Skipped),
            Err(e) => return Err(e),
        }
    }
    Ok(TrialOutcome::Done(instances, findings))
}

/// Random subgroups of the hexagon's automorphism group, tested against the
/// quadrangle-style alternative at every flag midpoint.
pub fn g2_search(
    g: &IncidenceGeometry,
    elements: &[Automorphism],
    max_generators: usize,
    trials: usize,
    seed: u64,
    cap: usize,
) -> Result<G2SearchReport> {
    require_kind(g, Kind::G2)?;
    if max_generators == 0 || elements.is_empty() {
        return Err(ForgeError::EmptyInput);
    }
    let outcomes: Vec<Result<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let k = rng.gen_range(1..=max_generators);
            let gens: Vec<Automorphism> = (0..k)
                .map(|_| elements[rng.gen_range(0..elements.len())].clone())
                .collect();
            g2_trial(g, &gens, t, cap)
        })
        .collect();
    let mut report = G2SearchReport {
        trials,
        skipped: 0,
        instances: 0,
        findings: Vec::new(),
    };
    for o in outcomes {
        match o? {
            TrialOutcome::Done(n, f) => {
                report.instances += n;
                report.findings.extend(f);
            }
            TrialOutcome::Skipped => report.skipped += 1,
        }
    }
    Ok(report)
}

/// Second verifier for a finding: closes the group and scans every element,
/// recomputing distances by fresh searches. True when both alternatives fail.
pub fn recheck_finding(g: &IncidenceGeometry, f: &G2Finding, cap: usize) -> Result<bool> {
    let gens: Vec<Automorphism> = f
        .generators
        .iter()
        .map(|j| j.resolve(g))
        .collect::<Result<_>>()?;
    let group = close_group(&gens, cap)?;
    let from_p = fresh::bfs(g, f.panel);
    let nearest = (0..g.num_panels())
        .map(|q| fresh::distance(g, &fresh::realized_panel(g, q), &f.x))
        .min()
        .ok_or(ForgeError::EmptyInput)?;
    if fresh::distance(g, &fresh::realized_panel(g, f.panel), &f.x) != nearest {
        return Ok(false);
    }
    if group.elements().iter().any(|a| from_p[a.panel(f.panel)] == g.n()) {
        return Ok(false);
    }
    let half = Angle::pi_frac(1, 2);
    let fixed_near = (0..g.num_panels()).any(|q| {
        group.elements().iter().all(|a| a.panel(q) == q)
            && fresh::distance(g, &fresh::realized_panel(g, q), &f.x) < half
    });
    Ok(!fixed_near)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{all_automorphisms, full_automorphism_group};
    use crate::polygon::{build_projective_plane, build_symplectic_quadrangle};

    fn trivial(g: &IncidenceGeometry) -> GroupClosure {
        close_group(&[Automorphism::identity(g)], 10).unwrap()
    }

    #[test]
    fn nearest_panel_examples() {
        let w = build_symplectic_quadrangle(2).unwrap();
        let f = w.flags()[3];
        let (p, l) = w.flag_panels(f);
        assert_eq!(nearest_panel(&w, &w.panel_point(l).unwrap()).unwrap(), l);
        let mid = w.midpoint(f);
        let q = nearest_panel(&w, &mid).unwrap();
        assert_eq!(q, p);
        assert_eq!(w.panel_distance(q, &mid).unwrap(), Angle::pi_frac(1, 8));
        let x = RealizedPoint {
            flag: f,
            theta: Angle::pi_frac(1, 16),
        };
        assert_eq!(nearest_panel(&w, &x).unwrap(), p);
        assert_eq!(w.panel_distance(p, &x).unwrap(), Angle::pi_frac(1, 16));
        let x = RealizedPoint {
            flag: f,
            theta: Angle::pi_frac(3, 16),
        };
        assert_eq!(nearest_panel(&w, &x).unwrap(), l);
        let pg = build_projective_plane(2).unwrap();
        assert!(matches!(
            nearest_panel(&pg, &pg.midpoint(pg.flags()[0])),
            Err(ForgeError::WrongKind { .. })
        ));
    }

    #[test]
    fn trivial_group_fixes_the_nearest_panel() {
        let w = build_symplectic_quadrangle(2).unwrap();
        let grp = trivial(&w);
        for f in w.flags() {
            let x = w.midpoint(f);
            let c = decide_c2(&w, &grp, &x).unwrap();
            assert_eq!(c.branch, Branch::FixedPanel);
            assert_eq!(c.panel, f.point);
            assert!(c.angle <= Angle::pi_frac(3, 8));
            replay(&w, grp.generators(), &c).unwrap();
        }
        let pg = build_projective_plane(2).unwrap();
        let grp = trivial(&pg);
        let f = pg.flags()[5];
        let c = decide_a2(&pg, &grp, &pg.midpoint(f), f, PanelChoice::Point).unwrap();
        assert_eq!(c.branch, Branch::FixedPanel);
        assert_eq!(c.panel, pg.flag_panels(f).1);
        assert!(c.angle <= Angle::pi_frac(1, 3));
    }

    #[test]
    fn full_groups_always_find_an_opposite_image() {
        let pg = build_projective_plane(2).unwrap();
        let full = full_automorphism_group(&pg, 0).unwrap();
        for f in pg.flags() {
            let c = decide_a2(&pg, &full, &pg.midpoint(f), f, PanelChoice::Point).unwrap();
            assert_eq!(c.branch, Branch::OppositeFound);
            assert!(c.angle >= Angle::pi_frac(2, 3));
            replay(&pg, full.generators(), &c).unwrap();
            // shortest witness: no shorter word works
            let shorter = full
                .iter()
                .filter(|(_, w)| w.len() < c.word.len())
                .any(|(a, _)| !pg.is_incident(f.point, a.line(f.line)));
            assert!(!shorter);
        }
        let w = build_symplectic_quadrangle(2).unwrap();
        let full = full_automorphism_group(&w, 0).unwrap();
        for f in w.flags() {
            let c = decide_c2(&w, &full, &w.midpoint(f)).unwrap();
            assert_eq!(c.branch, Branch::OppositeFound);
            assert!(c.angle >= Angle::pi_frac(7, 8));
            replay(&w, full.generators(), &c).unwrap();
        }
    }

    #[test]
    fn line_stabilizer_yields_fixed_line() {
        let pg = build_projective_plane(2).unwrap();
        let f = pg.flags()[0];
        let stab: Vec<Automorphism> = all_automorphisms(&pg)
            .into_iter()
            .filter(|a| a.line(f.line) == f.line)
            .collect();
        assert_eq!(stab.len(), 24);
        let grp = close_group(&stab, DEFAULT_CLOSURE_CAP).unwrap();
        let c = decide_a2(&pg, &grp, &pg.midpoint(f), f, PanelChoice::Point).unwrap();
        assert_eq!(c.branch, Branch::FixedPanel);
        assert_eq!(c.panel, pg.flag_panels(f).1);
        replay(&pg, grp.generators(), &c).unwrap();
    }

    #[test]
    fn flag_stabilizer_in_quadrangle_fixes_the_meet() {
        let w = build_symplectic_quadrangle(2).unwrap();
        let f = w.flags()[0];
        let (p, l) = w.flag_panels(f);
        let stab: Vec<Automorphism> = all_automorphisms(&w)
            .into_iter()
            .filter(|a| a.panel(p) == p && a.panel(l) == l)
            .collect();
        let grp = close_group(&stab, DEFAULT_CLOSURE_CAP).unwrap();
        // x is nearer the line, which the flag stabilizer fixes
        let x = RealizedPoint {
            flag: f,
            theta: Angle::pi_frac(3, 16),
        };
        let c = decide_c2(&w, &grp, &x).unwrap();
        assert_eq!(c.branch, Branch::FixedPanel);
        assert_eq!(c.panel, l);
        // a point stabilizer moving the line on x's flag falls back to the meet
        let pstab: Vec<Automorphism> = all_automorphisms(&w)
            .into_iter()
            .filter(|a| a.panel(p) == p)
            .collect();
        let grp = close_group(&pstab, DEFAULT_CLOSURE_CAP).unwrap();
        let c = decide_c2(&w, &grp, &x).unwrap();
        assert_eq!(c.branch, Branch::FixedPanel);
        assert_eq!(c.panel, p);
        let oracle: BTreeSet<usize> = grp
            .elements()
            .iter()
            .map(|a| a.panel(l))
            .flat_map(|m| w.neighbors(m))
            .filter(|&q| grp.elements().iter().all(|a| w.neighbors(a.panel(l)).contains(&q)))
            .collect();
        assert_eq!(oracle, BTreeSet::from([p]));
        replay(&w, grp.generators(), &c).unwrap();
    }

    #[test]
    fn off_chamber_points_are_rejected() {
        let pg = build_projective_plane(2).unwrap();
        let grp = trivial(&pg);
        let flags = pg.flags();
        let other = flags
            .iter()
            .copied()
            .find(|f| f.point != flags[0].point && f.line != flags[0].line)
            .unwrap();
        assert!(matches!(
            decide_a2(&pg, &grp, &pg.midpoint(other), flags[0], PanelChoice::Point),
            Err(ForgeError::NotOnChamber)
        ));
    }

    #[test]
    fn tampered_certificates_fail_replay() {
        let w = build_symplectic_quadrangle(2).unwrap();
        let full = full_automorphism_group(&w, 3).unwrap();
        let x = w.midpoint(w.flags()[0]);
        let c = decide_c2(&w, &full, &x).unwrap();
        let mut bad = c.clone();
        bad.angle = Angle::PI;
        if c.angle != Angle::PI {
            assert!(replay(&w, full.generators(), &bad).is_err());
        }
        let mut bad = c.clone();
        bad.branch = Branch::FixedPanel;
        assert!(replay(&w, full.generators(), &bad).is_err());
    }

    #[test]
    fn certificate_json_shape() {
        let w = build_symplectic_quadrangle(2).unwrap();
        let grp = trivial(&w);
        let c = decide_c2(&w, &grp, &w.midpoint(w.flags()[0])).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["branch"], "fixed_panel");
        assert_eq!(v["angle"], "1/8 pi");
        assert!(v["x"]["flag"].is_array());
        let back: DichotomyCertificate = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn zero_samples_give_an_empty_report() {
        let pg = build_projective_plane(2).unwrap();
        let full = full_automorphism_group(&pg, 0).unwrap();
        let r = sweep_verify(&pg, &full, SubgroupSampler::CyclicAndRandom { k: 2 }, 0, 1).unwrap();
        assert_eq!(r.instances, 0);
    }

    #[test]
    fn cyclic_subgroup_count_of_fano_collineations() {
        // GL(3,2) conjugacy classes: 21 involutions, 56 elements of order 3,
        // 42 of order 4 and 48 of order 7, giving 21 + 28 + 21 + 8 cyclic subgroups
        let pg = build_projective_plane(2).unwrap();
        let full = full_automorphism_group(&pg, 0).unwrap();
        assert_eq!(cyclic_subgroup_generators(&full).len(), 1 + 21 + 28 + 21 + 8);
    }
}
