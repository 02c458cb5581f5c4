use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use forge::action::{all_automorphisms, close_group, full_automorphism_group, GroupJson, DEFAULT_CLOSURE_CAP};
use forge::dichotomy::{decide, g2_search, recheck_finding, sweep_verify, SubgroupSampler};
use forge::error::{ForgeError, Result};
use forge::exact::Angle;
use forge::forge::{synthesize, trace_svg, validate_inputs, verify, SynthesisTrace};
use forge::lattice::{build_ball, classify_isometry, fixed_set, MatrixGroupJson, MatrixIsometry};
use forge::polygon::{
    build_projective_plane, build_split_cayley_hexagon, build_symplectic_quadrangle, Flag, GeometryJson,
    IncidenceGeometry, RealizedPoint,
};

#[derive(Parser)]
#[command(name = "forge", version, about = "Spherical buildings, local dichotomies and hyperbolic-element synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or check generalized polygons.
    #[command(subcommand)]
    Geometry(GeometryCmd),
    /// Run the local dichotomy.
    #[command(subcommand)]
    Lemma(LemmaCmd),
    /// Explore the split Cayley hexagon.
    #[command(subcommand)]
    Hexagon(HexagonCmd),
    /// Work in the Ã₂ building of SL₃ over 𝔽_q((t)).
    #[command(subcommand)]
    Building(BuildingCmd),
    /// Produce a hyperbolic element from two elliptic subgroups.
    Synthesize(SynthesizeArgs),
    /// Replay a synthesis trace.
    Verify {
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryKind {
    /// Desarguesian projective plane PG(2,q).
    Pg,
    /// Symplectic quadrangle W(q).
    W,
    /// Split Cayley hexagon H(2).
    Hexagon,
}

#[derive(Args)]
struct GeometrySpec {
    #[arg(long, value_enum)]
    kind: GeometryKind,
    #[arg(long, default_value_t = 2)]
    q: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum GeometryCmd {
    Build {
        #[command(flatten)]
        spec: GeometrySpec,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive axiom check of a geometry file, or of a built-in geometry.
    Check {
        #[arg(long, conflicts_with = "kind")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<GeometryKind>,
        #[arg(long, default_value_t = 2)]
        q: u32,
    },
}

#[derive(Subcommand)]
enum LemmaCmd {
    Decide {
        #[command(flatten)]
        spec: GeometrySpec,
        /// Group file with `generators`.
        #[arg(long)]
        group: PathBuf,
        #[arg(long, num_args = 2, value_names = ["POINT", "LINE"])]
        flag: Vec<usize>,
        /// Offset from the flag's point, e.g. "1/8 pi".
        #[arg(long, default_value = "0 pi")]
        theta: String,
    },
    Sweep {
        #[command(flatten)]
        spec: GeometrySpec,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        generators: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the cyclic subgroups.
        #[arg(long)]
        random_only: bool,
    },
}

#[derive(Subcommand)]
enum HexagonCmd {
    Search {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        max_generators: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        cap: usize,
    },
}

#[derive(Subcommand)]
enum BuildingCmd {
    Ball {
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify each generator of a matrix group file.
    Classify {
        #[arg(long)]
        group: PathBuf,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long, default_value_t = 4)]
        powers: u32,
    },
    Fixedset {
        #[arg(long)]
        group: PathBuf,
        #[arg(long, default_value_t = 2)]
        radius: usize,
    },
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long)]
    g0: PathBuf,
    #[arg(long)]
    g1: PathBuf,
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long, default_value_t = 2)]
    radius: usize,
    #[arg(long, default_value_t = 6)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn geometry(kind: GeometryKind, q: u32) -> Result<IncidenceGeometry> {
    match kind {
        GeometryKind::Pg => build_projective_plane(q),
        GeometryKind::W => build_symplectic_quadrangle(q),
        GeometryKind::Hexagon => build_split_cayley_hexagon(),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(v: &T, out: Option<&Path>) -> Result<()> {
    emit(&serde_json::to_string_pretty(v)?, out)
}

fn matrix_group(path: &Path) -> Result<(u32, Vec<forge::laurent::LMatrix>)> {
    let g: MatrixGroupJson = read_json(path)?;
    Ok((g.q, g.generators))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Geometry(GeometryCmd::Build { spec, format, out }) => {
            let g = geometry(spec.kind, spec.q)?;
            match format {
                Format::Json => emit_json(&g.to_json(), out.as_deref()),
                Format::Dot => emit(&g.to_dot(), out.as_deref()),
            }
        }
        Command::Geometry(GeometryCmd::Check { input, kind, q }) => {
            let g = match (input, kind) {
                (Some(p), _) => IncidenceGeometry::from_json(&read_json::<GeometryJson>(&p)?)?,
                (None, Some(k)) => geometry(k, q)?,
                (None, None) => return Err(ForgeError::EmptyInput),
            };
            emit_json(&g.verify()?, None)
        }
        Command::Lemma(LemmaCmd::Decide {
            spec,
            group,
            flag,
            theta,
        }) => {
            let g = geometry(spec.kind, spec.q)?;
            let gj: GroupJson = read_json(&group)?;
            let gens = gj.generators.iter().map(|x| x.resolve(&g)).collect::<Result<Vec<_>>>()?;
            let closure = close_group(&gens, DEFAULT_CLOSURE_CAP)?;
            let x = RealizedPoint {
                flag: Flag {
                    point: flag[0],
                    line: flag[1],
                },
                theta: theta.parse::<Angle>()?,
            };
            emit_json(&decide(&g, &closure, &x)?, None)
        }
        Command::Lemma(LemmaCmd::Sweep {
            spec,
            samples,
            generators,
            seed,
            random_only,
        }) => {
            let g = geometry(spec.kind, spec.q)?;
            let full = full_automorphism_group(&g, seed)?;
            let sampler = if random_only {
                SubgroupSampler::Random { k: generators }
            } else {
                SubgroupSampler::CyclicAndRandom { k: generators }
            };
            emit_json(&sweep_verify(&g, &full, sampler, samples, seed)?, None)
        }
        Command::Hexagon(HexagonCmd::Search {
            trials,
            max_generators,
            seed,
            cap,
        }) => {
            let g = build_split_cayley_hexagon()?;
            let elements = all_automorphisms(&g);
            let report = g2_search(&g, &elements, max_generators, trials, seed, cap)?;
            for f in &report.findings {
                if !recheck_finding(&g, f, cap)? {
                    return Err(ForgeError::ContradictionDetected(format!(
                        "finding from trial {} fails recheck",
                        f.trial
                    )));
                }
            }
            emit_json(&report, None)
        }
        Command::Building(BuildingCmd::Ball { q, radius, out }) => {
            emit_json(&build_ball(q, radius)?.to_json(), out.as_deref())
        }
        Command::Building(BuildingCmd::Classify { group, radius, powers }) => {
            let (q, gens) = matrix_group(&group)?;
            let ball = build_ball(q, radius)?;
            let verdicts = gens
                .into_iter()
                .map(|m| classify_isometry(&ball.building.isometry(m)?, &ball, powers))
                .collect::<Result<Vec<_>>>()?;
            emit_json(&verdicts, None)
        }
        Command::Building(BuildingCmd::Fixedset { group, radius }) => {
            let (q, gens) = matrix_group(&group)?;
            let ball = build_ball(q, radius)?;
            let gens = gens
                .into_iter()
                .map(|m| ball.building.isometry(m))
                .collect::<Result<Vec<MatrixIsometry>>>()?;
            emit_json(&fixed_set(&gens, &ball)?, None)
        }
        Command::Synthesize(a) => {
            let (q0, g0) = matrix_group(&a.g0)?;
            let (q1, g1) = matrix_group(&a.g1)?;
            if q0 != a.q || q1 != a.q {
                return Err(ForgeError::Parse(format!(
                    "group files are over q = {q0}, {q1}, expected {}",
                    a.q
                )));
            }
            for (name, gens) in [("g0", &g0), ("g1", &g1)] {
                for flag in validate_inputs(gens, a.q) {
                    if !flag.type_preserving || flag.elliptic == Some(false) {
                        eprintln!("{name} generator {}: {}", flag.index, flag.note);
                    }
                }
            }
            let trace = synthesize(&g0, &g1, a.q, a.radius, a.steps)?;
            if let Some(p) = &a.svg {
                fs::write(p, trace_svg(&trace))?;
            }
            emit_json(&trace, a.out.as_deref())
        }
        Command::Verify { trace } => {
            let t: SynthesisTrace = read_json(&trace)?;
            emit_json(&verify(&t)?, None)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
