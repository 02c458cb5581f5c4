//! Runs the eight acceptance criteria and prints one PASS/FAIL line for each.
//! Built without the test harness so the lines always show.

use std::collections::VecDeque;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use forge::action::{all_automorphisms, find_isomorphism, full_automorphism_group};
use forge::dichotomy::{g2_search, recheck_finding, sweep_verify, SubgroupSampler};
use forge::exact::{rat, Angle, Rational, Root};
use forge::forge::{synthesize, verify, SynthesisTrace};
use forge::laurent;
use forge::lattice::{build_ball, classify_isometry, fixed_set, link_of, singer_matrix, Verdict};
use forge::polygon::{
    build_projective_plane, build_split_cayley_hexagon, build_symplectic_quadrangle, Flag, IncidenceGeometry,
    Kind, RealizedPoint,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn geometries() -> Result<Vec<(&'static str, IncidenceGeometry, usize)>, String> {
    let e = |x: forge::error::ForgeError| x.to_string();
    Ok(vec![
        ("PG(2,2)", build_projective_plane(2).map_err(e)?, 7),
        ("PG(2,3)", build_projective_plane(3).map_err(e)?, 13),
        ("W(2)", build_symplectic_quadrangle(2).map_err(e)?, 15),
        ("W(3)", build_symplectic_quadrangle(3).map_err(e)?, 40),
        ("H(2)", build_split_cayley_hexagon().map_err(e)?, 63),
    ])
}

fn c1() -> Outcome {
    let mut seen = Vec::new();
    for (name, g, count) in geometries()? {
        let r = g.verify().map_err(|e| format!("{name}: {e}"))?;
        let n = g.n();
        ensure(r.bipartite && r.connected, || format!("{name} not a connected bipartite graph"))?;
        ensure(r.girth == 2 * n && r.diameter == n, || {
            format!("{name}: girth {} diameter {}", r.girth, r.diameter)
        })?;
        ensure(r.points == count && r.lines == count, || {
            format!("{name}: {} points, {} lines", r.points, r.lines)
        })?;
        seen.push(format!("{name} {count}/{count}"));
    }
    Ok(seen.join(", "))
}

fn bfs(g: &IncidenceGeometry, from: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; g.num_panels()];
    d[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(v) = q.pop_front() {
        for w in g.neighbors(v) {
            if d[w] == usize::MAX {
                d[w] = d[v] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

fn c2() -> Outcome {
    let mut triples = 0;
    for (name, g, _) in geometries()? {
        let n = g.n() as i64;
        let pts: Vec<RealizedPoint> = (0..g.num_panels())
            .map(|i| g.panel_point(i))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for a in 0..g.num_panels() {
            let hops = bfs(&g, a);
            for b in 0..g.num_panels() {
                let d = g.cat1_distance(&pts[a], &pts[b]).map_err(|e| e.to_string())?;
                ensure(d == Angle::pi_frac(hops[b] as i64, n), || {
                    format!("{name}: panels {a}, {b} at {d} with {} hops", hops[b])
                })?;
                if hops[b] == n as usize {
                    ensure(d == Angle::PI, || format!("{name}: opposite panels at {d}"))?;
                }
            }
        }
        // exact metric axioms on sampled interior points
        let flags = g.flags();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut sample = || {
            let flag: Flag = flags[rng.gen_range(0..flags.len())];
            let k = rng.gen_range(1..8);
            RealizedPoint {
                flag,
                theta: Angle::pi_frac(k, 8 * n),
            }
        };
        for _ in 0..200 {
            let (x, y, z) = (sample(), sample(), sample());
            let dist = |a: &RealizedPoint, b: &RealizedPoint| g.cat1_distance(a, b).map_err(|e| e.to_string());
            let (xy, yz, xz, yx) = (dist(&x, &y)?, dist(&y, &z)?, dist(&x, &z)?, dist(&y, &x)?);
            ensure(xy == yx, || format!("{name}: asymmetric distance"))?;
            ensure(dist(&x, &x)? == Angle::ZERO, || format!("{name}: d(x, x) > 0"))?;
            ensure(xz.coefficient() <= xy.coefficient() + yz.coefficient(), || {
                format!("{name}: triangle inequality fails")
            })?;
            ensure(xy.coefficient() <= Rational::from_integer(1), || format!("{name}: distance above pi"))?;
            triples += 1;
        }
    }
    Ok(format!("panel distances exhaustive, {triples} sampled triples"))
}

fn c3() -> Outcome {
    let mut parts = Vec::new();
    for (name, g, bound) in [
        ("PG(2,2)", build_projective_plane(2).map_err(|e| e.to_string())?, Angle::pi_frac(2, 3)),
        ("W(2)", build_symplectic_quadrangle(2).map_err(|e| e.to_string())?, Angle::pi_frac(7, 8)),
    ] {
        let full = full_automorphism_group(&g, 7).map_err(|e| e.to_string())?;
        let r = sweep_verify(&g, &full, SubgroupSampler::CyclicAndRandom { k: 2 }, 500, 11)
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(r.random_subgroups == 500, || format!("{name}: {} random subgroups", r.random_subgroups))?;
        ensure(r.instances == r.opposite + r.fixed_panel, || format!("{name}: instance count"))?;
        if let Some(a) = r.min_opposite_angle {
            ensure(a >= bound, || format!("{name}: opposite angle {a} below {bound}"))?;
        }
        if let Some(a) = r.max_fixed_distance {
            ensure(a < Angle::pi_frac(1, 2), || format!("{name}: fixed panel at {a}"))?;
        }
        parts.push(format!(
            "{name}: {} cyclic + {} random, {} instances ({} opposite, {} fixed)",
            r.cyclic_subgroups, r.random_subgroups, r.instances, r.opposite, r.fixed_panel
        ));
    }
    Ok(parts.join("; "))
}

fn c4() -> Outcome {
    let ball = build_ball(2, 2).map_err(|e| e.to_string())?;
    let pg = build_projective_plane(2).map_err(|e| e.to_string())?;
    let mut interior = 0;
    for i in (0..ball.len()).filter(|&i| ball.is_interior(i)) {
        let link = link_of(&ball.vertices[i], &ball).map_err(|e| e.to_string())?;
        ensure(link.kind() == Kind::A2 && link.num_points() == 7 && link.num_lines() == 7, || {
            format!("vertex {i}: link has {} + {} panels", link.num_points(), link.num_lines())
        })?;
        link.verify().map_err(|e| format!("vertex {i}: {e}"))?;
        ensure(find_isomorphism(&link, &pg).is_some(), || format!("vertex {i}: link is not PG(2,2)"))?;
        interior += 1;
    }
    for &(u, v) in &ball.edges {
        ensure(ball.types[u] != ball.types[v], || format!("edge {u}-{v} joins equal types"))?;
    }
    Ok(format!(
        "{interior} interior links isomorphic to PG(2,2); {} edges with distinct types",
        ball.edges.len()
    ))
}

fn c5() -> Outcome {
    let ball = build_ball(2, 2).map_err(|e| e.to_string())?;
    let b = &ball.building;
    let v0 = b.base();
    let vx = |m| b.vertex_from_matrix(&m).map_err(|e| e.to_string());
    let one = vx(laurent::diagonal([0, 0, 1]))?;
    let h = vx(laurent::diagonal([1, 0, -1]))?;
    ensure(b.snf_valuations(&v0, &one).map_err(|e| e.to_string())? == [1, 0, 0], || "(1,0,0) example".into())?;
    ensure(b.distance(&v0, &one).map_err(|e| e.to_string())? == Root::sqrt(rat(1, 1)), || "distance 1".into())?;
    ensure(b.snf_valuations(&v0, &h).map_err(|e| e.to_string())? == [2, 1, 0], || "(2,1,0) example".into())?;
    ensure(b.distance(&v0, &h).map_err(|e| e.to_string())? == Root::sqrt(rat(3, 1)), || "distance sqrt 3".into())?;

    let n = ball.len();
    let mut dist = vec![Root::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = b.distance(&ball.vertices[i], &ball.vertices[j]).map_err(|e| e.to_string())?;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut triples = 0u64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                ensure(dist[i * n + k].le_sum(&dist[i * n + j], &dist[j * n + k]), || {
                    format!("triangle inequality fails on ({i}, {j}, {k})")
                })?;
                triples += 1;
            }
        }
    }
    let s = b.isometry(singer_matrix()).map_err(|e| e.to_string())?;
    let hm = b.isometry(laurent::diagonal([1, 0, -1])).map_err(|e| e.to_string())?;
    let hs = b.conjugate(&hm, &s).map_err(|e| e.to_string())?;
    let mut shear = laurent::identity();
    shear[2][0] = laurent::Laurent::monomial(1, -1);
    let shear = b.isometry(shear).map_err(|e| e.to_string())?;
    let unit = Root::sqrt(rat(1, 1));
    for g in [&s, &hm, &hs, &shear] {
        for &(u, v) in &ball.edges {
            let gu = b.act(g, &ball.vertices[u]).map_err(|e| e.to_string())?;
            let gv = b.act(g, &ball.vertices[v]).map_err(|e| e.to_string())?;
            ensure(b.distance(&gu, &gv).map_err(|e| e.to_string())? == unit, || {
                format!("edge {u}-{v} is stretched")
            })?;
        }
    }
    Ok(format!("{triples} ordered triples, 4 isometries on {} edges", ball.edges.len()))
}

fn c6() -> Outcome {
    let ball = build_ball(2, 2).map_err(|e| e.to_string())?;
    let b = &ball.building;
    let s = b.isometry(singer_matrix()).map_err(|e| e.to_string())?;
    let v = classify_isometry(&s, &ball, 4).map_err(|e| e.to_string())?;
    ensure(v == Verdict::Elliptic { fixed: vec![0] }, || format!("Singer classified {v:?}"))?;
    let fs = fixed_set(&[s], &ball).map_err(|e| e.to_string())?;
    ensure(fs.vertices == [0] && fs.edges.is_empty() && fs.triangles.is_empty(), || {
        format!("Singer fixes {fs:?}")
    })?;
    let h = b.isometry(laurent::diagonal([1, 0, -1])).map_err(|e| e.to_string())?;
    match classify_isometry(&h, &ball, 4).map_err(|e| e.to_string())? {
        Verdict::Hyperbolic {
            translation_length,
            displacements,
        } => {
            ensure(translation_length == Root::sqrt(rat(3, 1)), || format!("l = {translation_length}"))?;
            ensure(displacements.len() == 4, || "four displacements".into())?;
            for (k, d) in displacements.iter().enumerate() {
                let k = k as i64 + 1;
                ensure(*d == Root::sqrt(rat(3 * k * k, 1)), || format!("d(v0, g^{k} v0) = {d}"))?;
            }
        }
        v => return Err(format!("diag(t,1,1/t) classified {v:?}")),
    }
    Ok("Singer elliptic fixing {v0}; diag(t,1,1/t) hyperbolic, l = sqrt(3), d_k = k sqrt(3)".into())
}

fn c7() -> Outcome {
    let ball = build_ball(2, 2).map_err(|e| e.to_string())?;
    let b = &ball.building;
    let s = b.isometry(singer_matrix()).map_err(|e| e.to_string())?;
    let h = b.isometry(laurent::diagonal([1, 0, -1])).map_err(|e| e.to_string())?;
    let hs = b.conjugate(&h, &s).map_err(|e| e.to_string())?;
    let t = synthesize(&[s.matrix.clone()], &[hs.matrix], 2, 2, 6).map_err(|e| e.to_string())?;
    let ell = match &t.verdict {
        Some(Verdict::Hyperbolic { translation_length, .. }) => *translation_length,
        v => return Err(format!("verdict {v:?}")),
    };
    ensure(!ell.is_zero(), || "zero translation length".into())?;
    let w = forge::lattice::Building::new(2, 64).map_err(|e| e.to_string())?;
    let g = w.isometry(t.g.clone().ok_or("no g")?).map_err(|e| e.to_string())?;
    for i in 2..t.points.len() {
        let img = w.act(&g, &t.points[i - 2]).map_err(|e| e.to_string())?;
        ensure(img == t.points[i], || format!("a{i} is not g a{}", i - 2))?;
    }
    let d_half = Rational::new(1, 2);
    let first = t.records[0].increment;
    for (i, r) in t.records.iter().enumerate() {
        ensure(r.angle.map_or(false, |a| a >= Angle::pi_frac(2, 3)), || {
            format!("angle at a{} is {:?}", i + 1, r.angle)
        })?;
        ensure(r.increment == first, || "unequal increments".into())?;
    }
    ensure(Root::from_rational(first) >= t.d.scale(d_half), || format!("increment {first} below d/2"))?;
    let report = verify(&t).map_err(|e| e.to_string())?;
    let json = serde_json::to_string(&t).map_err(|e| e.to_string())?;
    let back: SynthesisTrace = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    ensure(back == t, || "trace JSON does not round-trip".into())?;
    verify(&back).map_err(|e| e.to_string())?;
    Ok(format!(
        "d = {}, {} steps, angles {}, increment {}, l(g) = {}",
        t.d,
        report.steps,
        t.records[0].angle.map_or("?".into(), |a| a.to_string()),
        first,
        ell
    ))
}

fn c8() -> Outcome {
    let g = build_split_cayley_hexagon().map_err(|e| e.to_string())?;
    let elements = all_automorphisms(&g);
    let cap = 2000;
    let r = g2_search(&g, &elements, 2, 1000, 5, cap).map_err(|e| e.to_string())?;
    ensure(r.trials == 1000, || format!("{} trials", r.trials))?;
    for f in &r.findings {
        ensure(recheck_finding(&g, f, cap).map_err(|e| e.to_string())?, || {
            format!("finding from trial {} fails recheck", f.trial)
        })?;
    }
    Ok(format!(
        "{} trials, {} skipped over the closure cap, {} instances, {} findings (reported, not asserted)",
        r.trials,
        r.skipped,
        r.instances,
        r.findings.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("1 geometry axioms", c1, Duration::from_secs(10)),
        ("2 CAT(1) metric", c2, Duration::from_secs(600)),
        ("3 dichotomy sweeps", c3, Duration::from_secs(120)),
        ("4 building links", c4, Duration::from_secs(60)),
        ("5 exact metric", c5, Duration::from_secs(600)),
        ("6 classification", c6, Duration::from_secs(600)),
        ("7 synthesis", c7, Duration::from_secs(120)),
        ("8 hexagon search", c8, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if took > limit {
                Err(format!("{msg}; took {took:.1?}, limit {limit:?}"))
            } else {
                Ok(msg)
            }
        });
        match outcome {
            Ok(msg) => println!("PASS criterion {name} [{took:.2?}]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name} [{took:.2?}]: {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
