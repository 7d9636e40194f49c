//! `strata`: command-line front end for `.strat` files.
//!
//! Exit status is 0 on success, 1 when a check comes out negative and 2 on
//! unreadable or ill-formed input. Results go to stdout, diagnostics to
//! stderr.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use strata_core::amalgamation::{
    bouquet, fraisse_check, graph_join_check, pushout, verify_pushout_universal, AmalgamationError,
    FraisseConfig, JoinCheck, Universality, UniversalityConfig,
};
use strata_core::decomposition::{decompose, replay, AmalgamationPlan};
use strata_core::dsl::{parse, Document};
use strata_core::graphs::{hasse_graph, to_dot};
use strata_core::limits::{
    bouquet_tower, classify_limit, colimit, cone_tower, sphere, sphere_tower, Tower,
};
use strata_core::pseudomanifold::{
    amalgamate_pseudo, validate_pseudo, PseudoError, PseudoSkeleton,
};
use strata_core::{MorphClass, Skeleton, StratumLabel};

#[derive(Parser)]
#[command(
    name = "strata",
    version,
    about = "Stratified spaces as labelled incidence posets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Strat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TowerKind {
    Sphere,
    Cone,
    Bouquet,
}

#[derive(Subcommand)]
enum Command {
    /// Check every space, morphism and tower of a file.
    Validate { file: PathBuf },
    /// Print the associated graph of a space.
    Graph {
        file: PathBuf,
        /// Defaults to the first space of the file.
        #[arg(long)]
        space: Option<String>,
        /// Graphviz output (the default).
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        /// JSON output: sorted vertices and `[upper, lower]` edges.
        #[arg(long)]
        json: bool,
    },
    /// Classify morphisms (all of them unless one is named).
    Classify {
        file: PathBuf,
        #[arg(long)]
        morphism: Option<String>,
        /// Fail unless every classified morphism reaches this class.
        #[arg(long, value_parser = parse_class)]
        require: Option<MorphClass>,
        #[arg(long)]
        json: bool,
    },
    /// Pushout of two strong embeddings out of the same space.
    Amalgamate {
        file: PathBuf,
        /// Defaults to the first morphism of the file.
        #[arg(long)]
        left: Option<String>,
        /// Defaults to the second morphism of the file.
        #[arg(long)]
        right: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Also check the universal property and the graph join.
        #[arg(long)]
        verify: bool,
    },
    /// `k` copies of a space glued at a point stratum.
    Bouquet {
        file: PathBuf,
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = 2)]
        copies: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Split a space into basic pieces and record how to glue them back.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        space: Option<String>,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Glue a decomposition plan back together.
    Replay {
        plan: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Check the pseudomanifold conditions (all spaces unless one is named).
    PseudoValidate {
        file: PathBuf,
        #[arg(long)]
        space: Option<String>,
    },
    /// Amalgamate two pseudomanifolds along a closed common part.
    PseudoAmalgamate {
        file: PathBuf,
        #[arg(long)]
        left: Option<String>,
        #[arg(long)]
        right: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Classify the colimit of a tower of embeddings.
    Limit {
        /// Built-in tower, used when no file is given.
        #[arg(long, value_enum, default_value = "sphere")]
        tower: TowerKind,
        /// Read the tower from a file instead.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Tower name in the file; defaults to the first tower.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        /// Continue strictly growing dimension chains to `inf`.
        #[arg(long)]
        extrapolate: bool,
        /// Print the colimit skeleton instead of the classification.
        #[arg(long)]
        colimit: bool,
        #[arg(long)]
        json: bool,
    },
    /// Randomized check of heritability, joint embedding and amalgamation.
    FraisseCheck {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        iters: u64,
        /// Plant a label conflict to exercise the failure path.
        #[arg(long)]
        inject_label_conflict: bool,
    },
}

fn parse_class(s: &str) -> std::result::Result<MorphClass, String> {
    s.parse()
}

/// What a command produced: text for stdout and whether the check passed.
struct Outcome {
    stdout: String,
    passed: bool,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            passed: true,
        }
    }
}

enum Failure {
    /// A well-formed input for which the answer is negative.
    Negative(String),
    /// Input that could not be read or understood.
    Input(String),
}

type Result<T> = std::result::Result<T, Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{}", out.stdout);
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Negative(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Validate { file } => validate(&load(&file)?),
        Command::Graph {
            file, space, json, ..
        } => {
            let doc = load(&file)?;
            let name = space_name(&doc, space)?;
            let g = hasse_graph(&doc.skeleton(&name).map_err(input)?);
            Ok(Outcome::ok(if json {
                json_line(&g)
            } else {
                to_dot(&g, &name)
            }))
        }
        Command::Classify {
            file,
            morphism,
            require,
            json,
        } => classify(&load(&file)?, morphism, require, json),
        Command::Amalgamate {
            file,
            left,
            right,
            format,
            verify,
        } => amalgamate(&load(&file)?, left, right, format, verify),
        Command::Bouquet {
            file,
            space,
            base,
            copies,
            format,
        } => {
            let doc = load(&file)?;
            let name = space_name(&doc, space)?;
            let x = doc.skeleton(&name).map_err(input)?;
            let b = bouquet(&x, &base, copies).map_err(input)?;
            Ok(Outcome::ok(render(&b, &format!("{name}_bouquet"), format)))
        }
        Command::Decompose { file, space, plan } => {
            let doc = load(&file)?;
            let name = space_name(&doc, space)?;
            let p = decompose(&doc.skeleton(&name).map_err(input)?);
            let text = p.to_json() + "\n";
            match plan {
                None => Ok(Outcome::ok(text)),
                Some(path) => {
                    std::fs::write(&path, text)
                        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                    let mut out = String::new();
                    for (i, piece) in p.pieces.iter().enumerate() {
                        let min = piece.minimal_strata();
                        writeln!(
                            out,
                            "piece {i}: {} strata over {}",
                            piece.len(),
                            min.names().join(",")
                        )
                        .unwrap();
                    }
                    writeln!(out, "steps: {}", p.steps.len()).unwrap();
                    Ok(Outcome::ok(out))
                }
            }
        }
        Command::Replay { plan, format } => {
            let text = read(&plan)?;
            let p = AmalgamationPlan::from_json(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", plan.display())))?;
            let x = replay(&p).map_err(|e| Failure::Negative(e.to_string()))?;
            Ok(Outcome::ok(render(&x, "replayed", format)))
        }
        Command::PseudoValidate { file, space } => {
            let doc = load(&file)?;
            let names = match space {
                Some(s) => vec![s],
                None => doc.spaces.iter().map(|s| s.name.name.clone()).collect(),
            };
            let mut out = String::new();
            let mut passed = true;
            for name in names {
                let report = validate_pseudo(&doc.pseudo(&name).map_err(input)?);
                passed &= report.is_ok();
                writeln!(out, "{name}: {report}").unwrap();
            }
            Ok(Outcome {
                stdout: out,
                passed,
            })
        }
        Command::PseudoAmalgamate {
            file,
            left,
            right,
            format,
        } => {
            let doc = load(&file)?;
            let (l, r) = leg_names(&doc, left, right)?;
            let f = doc.pseudo_morphism(&l).map_err(input)?;
            let h = doc.pseudo_morphism(&r).map_err(input)?;
            match amalgamate_pseudo(&f, &h) {
                Ok(z) => Ok(Outcome::ok(render_pseudo(&z, "amalgam", format))),
                Err(e @ (PseudoError::NonClosedGluing { .. } | PseudoError::NotStrong { .. })) => {
                    Err(Failure::Negative(e.to_string()))
                }
                Err(e) => Err(input(e)),
            }
        }
        Command::Limit {
            tower,
            file,
            name,
            steps,
            extrapolate,
            colimit: show_colimit,
            json,
        } => {
            let t = match file {
                Some(path) => {
                    let doc = load(&path)?;
                    let name =
                        match name {
                            Some(n) => n,
                            None => doc.towers.first().map(|t| t.name.name.clone()).ok_or_else(
                                || Failure::Input("the file declares no tower".into()),
                            )?,
                        };
                    doc.tower(&name).map_err(input)?
                }
                None => builtin_tower(tower, steps)?,
            };
            if show_colimit {
                return Ok(Outcome::ok(render(
                    &colimit(&t, extrapolate),
                    "colimit",
                    Format::Json,
                )));
            }
            let c = classify_limit(&t, extrapolate);
            if json {
                return Ok(Outcome::ok(json_line(&c)));
            }
            let mut out = String::new();
            writeln!(out, "verdict: {}", c.verdict).unwrap();
            if let Some(i) = c.stabilization_stage {
                writeln!(out, "stabilization stage: {i}").unwrap();
            }
            let list = |v: Vec<String>| v.join(" ");
            writeln!(
                out,
                "lengths: {}",
                list(c.lengths.iter().map(|l| l.to_string()).collect())
            )
            .unwrap();
            writeln!(
                out,
                "dims: {}",
                list(
                    c.dims
                        .iter()
                        .map(|d| d.map_or_else(|| "-".to_string(), |d| d.to_string()))
                        .collect()
                )
            )
            .unwrap();
            Ok(Outcome::ok(out))
        }
        Command::FraisseCheck {
            seed,
            iters,
            inject_label_conflict,
        } => {
            let cfg = FraisseConfig {
                inject_label_conflict,
                ..FraisseConfig::default()
            };
            let report = fraisse_check(&cfg, seed, iters);
            let passed = report.passed();
            Ok(Outcome {
                stdout: serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                passed,
            })
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Document> {
    parse(&read(path)?).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))
}

fn space_name(doc: &Document, space: Option<String>) -> Result<String> {
    match space {
        Some(s) => Ok(s),
        None => doc
            .spaces
            .first()
            .map(|s| s.name.name.clone())
            .ok_or_else(|| Failure::Input("the file declares no space".into())),
    }
}

fn leg_names(
    doc: &Document,
    left: Option<String>,
    right: Option<String>,
) -> Result<(String, String)> {
    let nth = |i: usize| {
        doc.morphisms
            .get(i)
            .map(|m| m.name.name.clone())
            .ok_or_else(|| Failure::Input("the file declares fewer than two morphisms".into()))
    };
    let l = match left {
        Some(l) => l,
        None => nth(0)?,
    };
    let r = match right {
        Some(r) => r,
        None => nth(1)?,
    };
    Ok((l, r))
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

fn render(x: &Skeleton, name: &str, format: Format) -> String {
    match format {
        Format::Json => x.to_json() + "\n",
        Format::Strat => {
            let mut doc = Document::default();
            doc.push_skeleton(name, x);
            doc.to_string()
        }
    }
}

fn render_pseudo(x: &PseudoSkeleton, name: &str, format: Format) -> String {
    match format {
        Format::Json => x.to_json() + "\n",
        Format::Strat => {
            let mut doc = Document::default();
            doc.push_pseudo(name, x);
            doc.to_string()
        }
    }
}

fn validate(doc: &Document) -> Result<Outcome> {
    let mut out = String::new();
    let mut passed = true;
    for s in &doc.spaces {
        let name = &s.name.name;
        match doc.skeleton(name) {
            Ok(x) => writeln!(
                out,
                "space {name}: ok, {} strata, length {}",
                x.len(),
                x.length()
            )
            .unwrap(),
            Err(e) => {
                passed = false;
                eprintln!("{e}");
                writeln!(out, "space {name}: invalid").unwrap();
            }
        }
    }
    for m in &doc.morphisms {
        let name = &m.name.name;
        match doc.classification(name) {
            Ok(c) => writeln!(out, "morphism {name}: ok, {}", c.class).unwrap(),
            Err(e) => {
                passed = false;
                eprintln!("{e}");
                writeln!(out, "morphism {name}: invalid").unwrap();
            }
        }
    }
    for t in &doc.towers {
        let name = &t.name.name;
        match doc.tower(name) {
            Ok(t) => writeln!(out, "tower {name}: ok, {} stages", t.stages().len()).unwrap(),
            Err(e) => {
                passed = false;
                eprintln!("{e}");
                writeln!(out, "tower {name}: invalid").unwrap();
            }
        }
    }
    Ok(Outcome {
        stdout: out,
        passed,
    })
}

#[derive(serde::Serialize)]
struct ClassRow {
    morphism: String,
    class: MorphClass,
    witness: String,
}

fn classify(
    doc: &Document,
    morphism: Option<String>,
    require: Option<MorphClass>,
    json: bool,
) -> Result<Outcome> {
    let names = match morphism {
        Some(m) => vec![m],
        None => doc.morphisms.iter().map(|m| m.name.name.clone()).collect(),
    };
    let mut rows = Vec::new();
    for name in names {
        let c = doc.classification(&name).map_err(input)?;
        rows.push(ClassRow {
            morphism: name,
            class: c.class,
            witness: c.witness.to_string(),
        });
    }
    let passed = require.is_none_or(|r| rows.iter().all(|row| row.class >= r));
    let stdout = if json {
        json_line(&rows)
    } else {
        rows.iter()
            .map(|r| format!("{}: {} ({})\n", r.morphism, r.class, r.witness))
            .collect()
    };
    Ok(Outcome { stdout, passed })
}

fn amalgamate(
    doc: &Document,
    left: Option<String>,
    right: Option<String>,
    format: Format,
    verify: bool,
) -> Result<Outcome> {
    let (l, r) = leg_names(doc, left, right)?;
    let f = doc.morphism(&l).map_err(input)?;
    let h = doc.morphism(&r).map_err(input)?;
    let p = match pushout(&f, &h) {
        Ok(p) => p,
        Err(
            e @ (AmalgamationError::NotStrong { .. } | AmalgamationError::LabelConflict { .. }),
        ) => return Err(Failure::Negative(e.to_string())),
        Err(e) => return Err(input(e)),
    };
    let mut passed = true;
    if verify {
        let u = verify_pushout_universal(&p, &UniversalityConfig::default());
        let j = graph_join_check(&f, &h, &p);
        passed = !matches!(u, Universality::Fails { .. }) && !matches!(j, JoinCheck::Fails { .. });
        eprintln!(
            "universal property: {}",
            serde_json::to_string(&u).expect("verdict serializes")
        );
        eprintln!(
            "graph join: {}",
            serde_json::to_string(&j).expect("verdict serializes")
        );
    }
    Ok(Outcome {
        stdout: render(&p.amalgam, "amalgam", format),
        passed,
    })
}

fn builtin_tower(kind: TowerKind, steps: usize) -> Result<Tower> {
    match kind {
        TowerKind::Sphere => sphere_tower(steps),
        TowerKind::Cone => {
            let m = Skeleton::trivial("M", StratumLabel::new(0).compact().connected())
                .expect("valid id");
            cone_tower(&m, steps)
        }
        TowerKind::Bouquet => bouquet_tower(&sphere(1), "zero", 2, steps),
    }
    .map_err(input)
}
