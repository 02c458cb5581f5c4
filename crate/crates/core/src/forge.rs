//! From two elliptic subgroups with disjoint fixed sets to a hyperbolic
//! product `g = g₂g₁`, with a replayable trace.
//!
//! The boundary point ξ is never built. It is carried as a wall direction in
//! exact apartment charts, one chart per step. Each chart is a frame adapted
//! to the pair `(aᵢ, aᵢ₊₁)` in which the panel `pᵢ` is a coordinate plane.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::action::{close_group, Automorphism, DEFAULT_CLOSURE_CAP};
use crate::apartment::{AffineKind, ApartmentPoint, LabeledPoint, LabeledRay, Ray, Scene, WeylData};
use crate::dichotomy::{self, Branch, DichotomyCertificate, PanelChoice};
use crate::error::{ForgeError, Result};
use crate::exact::{rat, Angle, Rational, Root};
use crate::field::Gf;
use crate::laurent::{self, LMatrix};
use crate::lattice::{
    build_ball, classify_isometry_in, dot, fixed_set, Building, BuildingBall, LatticeVertex,
    Link, MatrixIsometry, Verdict,
};
use crate::polygon::{Flag, IncidenceGeometry, Location, RealizedPoint};

pub const TRACE_VERSION: u32 = 1;

/// Powers of `g` used for the displacement cross-check of the verdict.
const VERDICT_POWERS: u32 = 3;

/// A frame with `aᵢ` at the origin, `aᵢ₊₁` at `target`, and the ξ-direction
/// along the basis vector `axis`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    pub frame: LMatrix,
    pub target: [i64; 3],
    pub axis: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalStep {
    /// Word in the subgroup's generators; the first letter acts first.
    pub word: Vec<usize>,
    pub matrix: LMatrix,
    pub certificate: DichotomyCertificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    /// The panel `pᵢ` of the ray `[aᵢ, ξ)`, as a neighbor of `aᵢ`.
    pub panel: LatticeVertex,
    pub chart: Chart,
    /// `∠_{aᵢ}(ξ, aᵢ₊₁)` when it is a tabulated multiple of π.
    pub angle: Option<Angle>,
    pub angle_cos: Root,
    /// `b(aᵢ₊₁) − b(aᵢ)`.
    pub increment: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisTrace {
    pub version: u32,
    pub q: u32,
    pub radius: usize,
    pub steps: usize,
    pub g0_generators: Vec<LMatrix>,
    pub g1_generators: Vec<LMatrix>,
    pub a0: LatticeVertex,
    pub a1: LatticeVertex,
    pub d: Root,
    pub g1: Option<LocalStep>,
    /// `g₁ s g₁⁻¹` for each generator `s` of `G₀`.
    pub g2_generators: Vec<LMatrix>,
    pub g2: Option<LocalStep>,
    pub g: Option<LMatrix>,
    /// `a₀, a₁, …, a_{K+1}`.
    pub points: Vec<LatticeVertex>,
    /// Chart at `a₁` toward `a₀`, fixing the Busemann value of `a₀`.
    pub back_chart: Option<Chart>,
    /// Records for `i = 1..=K`.
    pub records: Vec<StepRecord>,
    /// `b(a₀), …, b(a_{K+1})` with `b(a₁) = 0`.
    pub busemann_values: Vec<Rational>,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFlag {
    pub index: usize,
    pub det_valuation: i32,
    pub type_preserving: bool,
    pub elliptic: Option<bool>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub points: usize,
    pub steps: usize,
    pub increment: Option<Rational>,
    pub translation_length: Option<Root>,
}

pub fn chart_coords(x: [i64; 3]) -> [Rational; 2] {
    [Rational::from_integer(x[0] - x[1]), Rational::from_integer(x[1] - x[2])]
}

fn unit(axis: usize) -> [i64; 3] {
    let mut e = [0; 3];
    e[axis] = 1;
    e
}

fn add3(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn det_const(f: &Gf, u: &[[u8; 3]; 3]) -> u8 {
    let m2 = |a: usize, b: usize, c: usize, d: usize| f.sub(f.mul(u[1][a], u[2][b]), f.mul(u[1][c], u[2][d]));
    let t0 = f.mul(u[0][0], m2(1, 2, 2, 1));
    let t1 = f.mul(u[0][1], m2(0, 2, 2, 0));
    let t2 = f.mul(u[0][2], m2(0, 1, 1, 0));
    f.add(f.sub(t0, t1), t2)
}

/// Constant matrices preserving `diag(t^m)·O³`, identity first.
fn stabilizing_constants(f: &Gf, m: [i64; 3]) -> impl Iterator<Item = [[u8; 3]; 3]> + '_ {
    let q = f.order() as usize;
    let id = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    std::iter::once(id)
        .chain((0..q.pow(9)).map(move |mut code| {
            std::array::from_fn(|_| {
                std::array::from_fn(|_| {
                    let c = (code % q) as u8;
                    code /= q;
                    c
                })
            })
        }))
        .filter(move |u: &[[u8; 3]; 3]| {
            (0..3).all(|k| (0..3).all(|j| m[k] <= m[j] || u[k][j] == 0)) && det_const(f, u) != 0
        })
}

/// A chart for `(a, b)` in which the plane `normal` of `L_a/tL_a` is spanned
/// by two frame vectors.
pub fn adapted_chart(bw: &Building, a: &LatticeVertex, b: &LatticeVertex, normal: [u8; 3]) -> Result<Chart> {
    let f = bw.field();
    let s = bw.snf(a, b)?;
    for u in stabilizing_constants(f, s.m) {
        let cols: [[u8; 3]; 3] = std::array::from_fn(|j| {
            std::array::from_fn(|r| (0..3).fold(0, |acc, k| f.add(acc, f.mul(s.residue[k][r], u[k][j]))))
        });
        let outside: Vec<usize> = (0..3).filter(|&j| dot(f, normal, cols[j]) != 0).collect();
        if let [axis] = outside[..] {
            let frame = laurent::mat_mul(f, &s.frame, &laurent::from_constant(u));
            return Ok(Chart {
                frame,
                target: s.m,
                axis,
            });
        }
    }
    Err(ForgeError::ContradictionDetected(
        "no apartment through the pair has the panel on a wall".into(),
    ))
}

/// Angle at the origin between ξ and the target, and `b(target) − b(origin)`.
pub fn chart_measure(c: &Chart) -> Result<(Option<Angle>, Root, Rational)> {
    let w = WeylData::new(AffineKind::A2affine);
    let u = chart_coords(unit(c.axis));
    let v = chart_coords(c.target);
    let va = w.angle_between(u, v)?;
    Ok((va.as_angle(), va.cos, -w.inner(v, u)))
}

fn plane_normal(link: &Link, panel: usize) -> Result<[u8; 3]> {
    if panel >= link.num_points() {
        return Err(ForgeError::ContradictionDetected(format!(
            "panel {panel} is a line, expected a point"
        )));
    }
    Ok(link.subspace(panel))
}

/// The chamber through `x` having `p` as its point.
fn chamber_with(g: &IncidenceGeometry, x: &RealizedPoint, p: usize) -> Result<Flag> {
    let bad = || ForgeError::ContradictionDetected(format!("panel {p} is not a panel of the chamber at x"));
    match g.locate(x) {
        Location::Interior(flag, _) if flag.point == p => Ok(flag),
        Location::Interior(..) => Err(bad()),
        Location::Panel(id) if id == p => Ok(x.flag),
        Location::Panel(id) if !g.is_point(id) && g.is_incident(p, id - g.num_points()) => Ok(Flag {
            point: p,
            line: id - g.num_points(),
        }),
        Location::Panel(_) => Err(bad()),
    }
}

pub fn word_matrix(bw: &Building, gens: &[MatrixIsometry], word: &[usize]) -> MatrixIsometry {
    let mut acc = bw.isometry(laurent::identity()).expect("identity");
    for &w in word {
        acc = bw.compose(&gens[w], &acc);
    }
    acc
}

fn induced_generators(bw: &Building, link: &Link, gens: &[MatrixIsometry]) -> Result<Vec<Automorphism>> {
    gens.iter()
        .enumerate()
        .map(|(i, g)| {
            link.induced(bw, g).map_err(|e| match e {
                ForgeError::NotAnAutomorphism(_) => ForgeError::NotElliptic(i),
                e => e,
            })
        })
        .collect()
}

/// The dichotomy at a vertex fixed by `gens`, for the direction `x` and the
/// point-panel `p` of a chamber through `x`. Only the opposite branch is
/// acceptable here.
pub fn local_step(
    bw: &Building,
    gens: &[MatrixIsometry],
    link: &Link,
    x: &RealizedPoint,
    p: usize,
) -> Result<LocalStep> {
    let autos = induced_generators(bw, link, gens)?;
    let group = close_group(&autos, DEFAULT_CLOSURE_CAP)?;
    let c = chamber_with(&link.geometry, x, p)?;
    let cert = dichotomy::decide_a2(&link.geometry, &group, x, c, PanelChoice::Point)?;
    if cert.branch == Branch::FixedPanel {
        return Err(ForgeError::ClosestPairViolated(format!(
            "the subgroup fixes panel {} within {} of the incoming direction",
            cert.panel, cert.angle
        )));
    }
    dichotomy::replay(&link.geometry, &autos, &cert)?;
    let m = word_matrix(bw, gens, &cert.word);
    Ok(LocalStep {
        word: cert.word.clone(),
        matrix: m.matrix,
        certificate: cert,
    })
}

/// Closest pair of fixed vertices, by exhaustive enumeration; ties go to the
/// smallest ball indices.
pub fn closest_pair(a: &[usize], b: &[usize], ball: &BuildingBall) -> Result<(usize, usize, Root)> {
    if a.is_empty() || b.is_empty() {
        return Err(ForgeError::EmptyInput);
    }
    if a.iter().any(|x| b.contains(x)) {
        return Err(ForgeError::NotDisjoint);
    }
    let mut best: Option<(Root, usize, usize)> = None;
    for &i in a {
        for &j in b {
            let d = ball.building.distance(&ball.vertices[i], &ball.vertices[j])?;
            if best.as_ref().map_or(true, |(bd, _, _)| d < *bd) {
                best = Some((d, i, j));
            }
        }
    }
    let (d, i, j) = best.expect("nonempty");
    Ok((i, j, d))
}

/// Flags non-type-preserving and non-elliptic generators. Never fails.
pub fn validate_inputs(gens: &[LMatrix], q: u32) -> Vec<InputFlag> {
    let Ok(b) = Building::new(q, 64) else {
        return Vec::new();
    };
    gens.iter()
        .enumerate()
        .map(|(index, m)| match b.isometry(m.clone()) {
            Err(e) => InputFlag {
                index,
                det_valuation: 0,
                type_preserving: false,
                elliptic: None,
                note: e.to_string(),
            },
            Ok(g) if !g.is_type_preserving() => InputFlag {
                index,
                det_valuation: g.det_valuation,
                type_preserving: false,
                elliptic: None,
                note: "type-rotating: determinant valuation not divisible by 3".into(),
            },
            Ok(g) => {
                let elliptic = b.translation_length(&g).is_zero();
                InputFlag {
                    index,
                    det_valuation: g.det_valuation,
                    type_preserving: true,
                    elliptic: Some(elliptic),
                    note: if elliptic {
                        "ok".into()
                    } else {
                        "hyperbolic: positive translation length".into()
                    },
                }
            }
        })
        .collect()
}

fn require_elliptic(b: &Building, gens: &[MatrixIsometry]) -> Result<()> {
    for (i, g) in gens.iter().enumerate() {
        g.require_type_preserving()?;
        if !b.translation_length(g).is_zero() {
            return Err(ForgeError::NotElliptic(i));
        }
    }
    Ok(())
}

fn fixed_vertices(gens: &[MatrixIsometry], ball: &BuildingBall) -> Result<Vec<usize>> {
    Ok(fixed_set(gens, ball)?.vertices)
}

/// Window wide enough for `steps` iterations starting inside a ball of `radius`.
pub fn synthesis_building(q: u32, radius: usize, steps: usize) -> Result<Building> {
    Building::new(q, 2 * (radius + steps) as i32 + 4)
}

pub fn synthesize(g0: &[LMatrix], g1: &[LMatrix], q: u32, radius: usize, steps: usize) -> Result<SynthesisTrace> {
    let ball = build_ball(q, radius)?;
    synthesize_in(g0, g1, &ball, steps)
}

pub fn synthesize_in(g0: &[LMatrix], g1: &[LMatrix], ball: &BuildingBall, steps: usize) -> Result<SynthesisTrace> {
    let q = ball.building.field().order() as u32;
    let bw = synthesis_building(q, ball.radius, steps)?;
    let f = bw.field().clone();
    let iso = |ms: &[LMatrix]| ms.iter().map(|m| bw.isometry(m.clone())).collect::<Result<Vec<_>>>();
    let (s0, s1) = (iso(g0)?, iso(g1)?);
    require_elliptic(&bw, &s0)?;
    require_elliptic(&bw, &s1)?;

    let (i0, i1, d) = closest_pair(&fixed_vertices(&s0, ball)?, &fixed_vertices(&s1, ball)?, ball)?;
    let (a0, a1) = (ball.vertices[i0].clone(), ball.vertices[i1].clone());
    let mut trace = SynthesisTrace {
        version: TRACE_VERSION,
        q,
        radius: ball.radius,
        steps,
        g0_generators: g0.to_vec(),
        g1_generators: g1.to_vec(),
        a0: a0.clone(),
        a1: a1.clone(),
        d,
        g1: None,
        g2_generators: Vec::new(),
        g2: None,
        g: None,
        points: vec![a0.clone(), a1.clone()],
        back_chart: None,
        records: Vec::new(),
        busemann_values: Vec::new(),
        verdict: None,
    };
    if steps == 0 {
        return Ok(trace);
    }
    let contradiction = |m: String| ForgeError::ContradictionDetected(m);

    // g₁ at a₁, for the direction of a₀
    let link1 = bw.link_at(&a1)?;
    let x1 = link1.realize(&f, bw.direction(&a1, &a0)?)?;
    let p1 = x1.flag.point;
    let step1 = local_step(&bw, &s1, &link1, &x1, p1)?;
    let g1m = bw.isometry(step1.matrix.clone())?;
    let a2 = bw.act(&g1m, &a0)?;

    // G₂ = g₁G₀g₁⁻¹ fixes a₂
    let s2: Vec<MatrixIsometry> = s0.iter().map(|s| bw.conjugate(&g1m, s)).collect::<Result<_>>()?;
    let n1 = plane_normal(&link1, p1)?;
    let chart1 = adapted_chart(&bw, &a1, &a2, n1)?;
    let p2v = bw.frame_vertex(&chart1.frame, add3(chart1.target, unit(chart1.axis)))?;
    let link2 = bw.link_at(&a2)?;
    let p2 = link2
        .panel_of(&p2v)
        .ok_or_else(|| contradiction("transported panel is not adjacent to a2".into()))?;
    let x2 = link2.realize(&f, bw.direction(&a2, &a1)?)?;
    let step2 = local_step(&bw, &s2, &link2, &x2, p2)?;
    let g2m = bw.isometry(step2.matrix.clone())?;
    let g = bw.compose(&g2m, &g1m);
    let a3 = bw.act(&g2m, &a1)?;
    if bw.act(&g, &a0)? != a2 || bw.act(&g, &a1)? != a3 {
        return Err(contradiction("g does not carry a0, a1 to a2, a3".into()));
    }

    // b(a₀) from a chart at a₁ containing a₀ and the wall of p₁
    let back = adapted_chart(&bw, &a1, &a0, n1)?;
    let (_, _, back_inc) = chart_measure(&back)?;
    trace.busemann_values = vec![back_inc, Rational::from_integer(0)];

    trace.points.push(a2);
    trace.points.push(a3);
    let mut panels: Vec<LatticeVertex> = vec![link1.panels[p1].clone()];
    let mut prev_link_normal = n1;
    for i in 1..=steps {
        let (ai, an) = (trace.points[i].clone(), trace.points[i + 1].clone());
        let chart = if i == 1 {
            chart1.clone()
        } else {
            adapted_chart(&bw, &ai, &an, prev_link_normal)?
        };
        if bw.frame_vertex(&chart.frame, [0, 0, 0])? != ai
            || bw.frame_vertex(&chart.frame, chart.target)? != an
            || bw.frame_vertex(&chart.frame, unit(chart.axis))? != panels[i - 1]
        {
            return Err(contradiction(format!("chart {i} does not carry its points")));
        }
        let (angle, cos, inc) = chart_measure(&chart)?;
        if !(cos <= Root::from_rational(rat(-1, 2))) {
            return Err(contradiction(format!("angle at a{i} is below 2/3 pi")));
        }
        if i == 1 && angle != Some(step1.certificate.angle) {
            return Err(contradiction("chart angle at a1 disagrees with the link".into()));
        }
        let next_panel = bw.frame_vertex(&chart.frame, add3(chart.target, unit(chart.axis)))?;
        if i >= 2 && next_panel != bw.act(&g, &panels[i - 2])? {
            return Err(contradiction(format!("p{} is not g·p{}", i + 1, i - 1)));
        }
        // the same angle seen from the far end
        let link_n = bw.link_at(&an)?;
        let pn = link_n
            .panel_of(&next_panel)
            .ok_or_else(|| contradiction("transported panel is not a neighbor".into()))?;
        if let Some(a) = angle {
            let back_x = link_n.realize(&f, bw.direction(&an, &ai)?)?;
            let seen = link_n.geometry.panel_distance(pn, &back_x)?;
            if seen != Angle::PI.abs_diff(a) {
                return Err(contradiction(format!("angle at a{} is {seen}, expected pi - {a}", i + 1)));
            }
        }
        prev_link_normal = plane_normal(&link_n, pn)?;
        let b_next = trace.busemann_values[i] + inc;
        trace.busemann_values.push(b_next);
        trace.records.push(StepRecord {
            panel: panels[i - 1].clone(),
            chart,
            angle,
            angle_cos: cos,
            increment: inc,
        });
        panels.push(next_panel);
        if i + 2 <= steps + 1 && i + 2 > 3 {
            let nxt = bw.act(&g, &trace.points[i])?;
            trace.points.push(nxt);
        }
    }

    let first = trace.records[0].increment;
    if trace.records.iter().any(|r| r.increment != first) {
        return Err(contradiction("Busemann increments differ between steps".into()));
    }
    if Root::from_rational(first * Rational::from_integer(2)) < d {
        return Err(contradiction(format!("increment {first} is below d/2")));
    }
    if back_inc != -first {
        return Err(contradiction("b(a0) does not match the step increment".into()));
    }
    let verdict = classify_isometry_in(&bw, &g, ball, VERDICT_POWERS)?;
    if !matches!(verdict, Verdict::Hyperbolic { .. }) {
        return Err(contradiction(format!("g = g2 g1 classified {verdict:?}")));
    }
    trace.g1 = Some(step1);
    trace.g2_generators = s2.into_iter().map(|s| s.matrix).collect();
    trace.g2 = Some(step2);
    trace.g = Some(g.matrix);
    trace.back_chart = Some(back);
    trace.verdict = Some(verdict);
    Ok(trace)
}

/// Replays a trace: reruns the pipeline and compares bit for bit, then
/// rechecks every step by an independent route (word evaluation, direct
/// action, and Busemann increments from the law of cosines on global
/// distances).
pub fn verify(trace: &SynthesisTrace) -> Result<VerifyReport> {
    let mismatch = |m: String| ForgeError::TraceMismatch(m);
    if trace.version != TRACE_VERSION {
        return Err(mismatch(format!("trace version {} is not {TRACE_VERSION}", trace.version)));
    }
    let rerun = synthesize(&trace.g0_generators, &trace.g1_generators, trace.q, trace.radius, trace.steps)?;
    if &rerun != trace {
        let a = serde_json::to_value(&rerun)?;
        let b = serde_json::to_value(trace)?;
        let field = a
            .as_object()
            .and_then(|a| a.iter().find(|(k, v)| b.get(k.as_str()) != Some(v)).map(|(k, _)| k.clone()))
            .unwrap_or_default();
        return Err(mismatch(format!("replay differs in `{field}`")));
    }

    let bw = synthesis_building(trace.q, trace.radius, trace.steps)?;
    let dist = bw.distance(&trace.a0, &trace.a1)?;
    if dist != trace.d {
        return Err(mismatch(format!("d(a0, a1) is {dist}, recorded {}", trace.d)));
    }
    let (Some(s1), Some(s2), Some(gm)) = (&trace.g1, &trace.g2, &trace.g) else {
        return Ok(VerifyReport {
            points: trace.points.len(),
            steps: 0,
            increment: None,
            translation_length: None,
        });
    };
    let iso = |ms: &[LMatrix]| ms.iter().map(|m| bw.isometry(m.clone())).collect::<Result<Vec<_>>>();
    let (gens0, gens1) = (iso(&trace.g0_generators)?, iso(&trace.g1_generators)?);
    let g1 = word_matrix(&bw, &gens1, &s1.word);
    if g1.matrix != s1.matrix {
        return Err(mismatch("g1 is not the product of its word".into()));
    }
    let g1_inv = bw.inverse(&g1)?;
    for (k, s) in gens0.iter().enumerate() {
        let c = bw.compose(&bw.compose(&g1, s), &g1_inv);
        if trace.g2_generators.get(k) != Some(&c.matrix) {
            return Err(mismatch(format!("G2 generator {k} is not g1 s g1^-1")));
        }
    }
    let gens2 = iso(&trace.g2_generators)?;
    let g2 = word_matrix(&bw, &gens2, &s2.word);
    if g2.matrix != s2.matrix {
        return Err(mismatch("g2 is not the product of its word".into()));
    }
    let g = bw.compose(&g2, &g1);
    if &g.matrix != gm {
        return Err(mismatch("g is not g2 g1".into()));
    }
    let pts = &trace.points;
    if bw.act(&g1, &pts[1])? != pts[1] || bw.act(&g2, &pts[2])? != pts[2] {
        return Err(mismatch("g1 or g2 moves its vertex".into()));
    }
    if bw.act(&g1, &pts[0])? != pts[2] || bw.act(&g2, &pts[1])? != pts[3] {
        return Err(mismatch("a2 or a3 is not the image of a0 or a1".into()));
    }
    for i in 2..pts.len() {
        if bw.act(&g, &pts[i - 2])? != pts[i] {
            return Err(mismatch(format!("a{i} is not g·a{}", i - 2)));
        }
    }
    // dichotomy certificates against the induced generators
    for (step, gens, vertex) in [(s1, &gens1, &pts[1]), (s2, &gens2, &pts[2])] {
        let link = bw.link_at(vertex)?;
        let autos = induced_generators(&bw, &link, gens)?;
        dichotomy::replay(&link.geometry, &autos, &step.certificate).map_err(|e| mismatch(e.to_string()))?;
    }

    let d2 = trace.d.square();
    for (k, r) in trace.records.iter().enumerate() {
        let i = k + 1;
        let s = bw.distance(&r.panel, &pts[i + 1])?.square();
        // |pᵢ aᵢ₊₁|² = 1 + d² + 2Dᵢ, as pᵢ lies at distance 1 on the ray
        let inc = (s - Rational::from_integer(1) - d2) / Rational::from_integer(2);
        if inc != r.increment {
            return Err(mismatch(format!("increment at a{i} is {inc}, recorded {}", r.increment)));
        }
        // Dᵢ = −d·cos∠
        let sign = if inc > Rational::from_integer(0) { -1 } else { 1 };
        if r.angle_cos != Root::signed(sign, inc * inc / d2) {
            return Err(mismatch(format!("angle at a{i} disagrees with the distances")));
        }
        if r.angle_cos > Root::from_rational(rat(-1, 2)) {
            return Err(mismatch(format!("angle at a{i} is below 2/3 pi")));
        }
        if i >= 3 && r.panel != bw.act(&g, &trace.records[k - 2].panel)? {
            return Err(mismatch(format!("p{i} is not g·p{}", i - 2)));
        }
        if trace.busemann_values[i + 1] - trace.busemann_values[i] != r.increment {
            return Err(mismatch(format!("Busemann value of a{} is inconsistent", i + 1)));
        }
    }
    // 1-Lipschitz: d(a₀, a₂ₖ) ≥ b(a₂ₖ) − b(a₀)
    for k in (2..pts.len()).step_by(2) {
        let gap = trace.busemann_values[k] - trace.busemann_values[0];
        if bw.distance(&pts[0], &pts[k])? < Root::from_rational(gap) {
            return Err(mismatch(format!("d(a0, a{k}) is below the Busemann gap")));
        }
    }
    let ell = match &trace.verdict {
        Some(Verdict::Hyperbolic { translation_length, .. }) => {
            if bw.translation_length(&g) != *translation_length {
                return Err(mismatch("translation length differs".into()));
            }
            Some(*translation_length)
        }
        v => return Err(mismatch(format!("verdict {v:?} is not hyperbolic"))),
    };
    Ok(VerifyReport {
        points: pts.len(),
        steps: trace.records.len(),
        increment: trace.records.first().map(|r| r.increment),
        translation_length: ell,
    })
}

/// Reorders frame coordinates so the ξ-axis comes first.
fn to_xi_first(x: [i64; 3], axis: usize) -> [i64; 3] {
    let mut y = x;
    y.swap(0, axis);
    y
}

/// The steps unfolded into one plane with ξ pointing the same way
/// throughout, with the parallel rays drawn from every `aᵢ`.
pub fn trace_scene(trace: &SynthesisTrace) -> Scene {
    let xi = chart_coords([1, 0, 0]);
    let mut pos: Vec<[Rational; 2]> = vec![[Rational::from_integer(0); 2]; trace.points.len()];
    if let Some(back) = &trace.back_chart {
        pos[0] = chart_coords(to_xi_first(back.target, back.axis));
    }
    for (k, r) in trace.records.iter().enumerate() {
        let v = chart_coords(to_xi_first(r.chart.target, r.chart.axis));
        pos[k + 2] = [pos[k + 1][0] + v[0], pos[k + 1][1] + v[1]];
    }
    let shown = if trace.records.is_empty() { 2 } else { trace.records.len() + 2 };
    let points = (0..shown.min(trace.points.len()))
        .map(|i| LabeledPoint {
            label: format!("a{i}"),
            at: ApartmentPoint(pos[i]),
        })
        .collect();
    let rays = (1..shown.min(trace.points.len()))
        .filter(|_| !trace.records.is_empty())
        .map(|i| LabeledRay {
            label: format!("r{i}"),
            ray: Ray {
                base: ApartmentPoint(pos[i]),
                direction: xi,
            },
            level: None,
        })
        .collect();
    Scene {
        kind: AffineKind::A2affine,
        points,
        rays,
        walls: Vec::new(),
    }
}

pub fn trace_svg(trace: &SynthesisTrace) -> String {
    let mut s = trace_scene(trace).to_svg();
    if let Some(r) = trace.records.first() {
        let note = format!(
            "<!-- d = {}, increment = {}, angle = {} -->\n",
            trace.d,
            r.increment,
            r.angle.map_or("n/a".to_string(), |a| a.to_string())
        );
        let _ = write!(s, "{note}");
    }
    s
}
