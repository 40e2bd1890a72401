//! Command-line front end: `verify`, `homology`, `invariance`, `solve-semantics`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::complex::build_complex;
use crate::diagram::{braid_closure, parse_pd, Diagram};
use crate::homology::{homology, invariance_compare};
use crate::moves::RuleBook;
use crate::verify::{
    default_fixture_dir, load_transcripts, solve_label_semantics, ClosureSelection, Engine, Move,
    SemanticsFixture, SolveStatus, SolverOptions, SuiteReport, Transcripts, Workspace,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_STRUCTURAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "khmoves",
    version,
    about = "Check Reidemeister chain maps and homotopies of deformed Khovanov complexes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MoveArg {
    R1,
    #[value(name = "r1p", alias = "r1'")]
    R1p,
    R2,
    R3,
    All,
}

impl MoveArg {
    fn moves(self) -> Vec<Move> {
        match self {
            MoveArg::R1 => vec![Move::R1],
            MoveArg::R1p => vec![Move::R1p],
            MoveArg::R2 => vec![Move::R2],
            MoveArg::R3 => vec![Move::R3],
            MoveArg::All => Move::all().to_vec(),
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the identity suites of one move or of all moves.
    Verify {
        #[arg(long = "move", value_enum, default_value = "all")]
        mv: MoveArg,
        /// `all` or the index of one planar closure.
        #[arg(long, default_value = "all", value_parser = parse_closure)]
        closure: ClosureArg,
        /// Extra free circles in each closure: 0, 1 or all.
        #[arg(long = "extra-circles", default_value = "0", value_parser = parse_extra)]
        extra_circles: ExtraArg,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Compare with symbolic s, t (the default).
        #[arg(long, conflicts_with = "at")]
        symbolic: bool,
        /// Compare after substituting `s,t`.
        #[arg(long, value_parser = parse_pair)]
        at: Option<(i64, i64)>,
        /// Semantics fixture; defaults to the bundled one.
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long)]
        transcripts: Option<PathBuf>,
        /// Add an integer to one rule coefficient, `map:clause:term[:delta]`.
        #[arg(long, value_parser = parse_site)]
        perturb: Option<(String, usize, usize, i64)>,
    },
    /// Homology at the given specialization (default `0,0`) of a PD or braid file.
    Homology {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long, value_parser = parse_pair, default_value = "0,0")]
        at: (i64, i64),
    },
    /// Compare the homology of two diagrams at `s = t = 0`.
    Invariance {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Search every reading of the table notation and freeze the first survivor.
    SolveSemantics {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_pair)]
        at: Option<(i64, i64)>,
        #[arg(long)]
        transcripts: Option<PathBuf>,
        /// Compare with the stored fixture instead of writing it.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosureArg {
    All,
    Index(usize),
}

fn parse_closure(s: &str) -> Result<ClosureArg, String> {
    if s == "all" {
        return Ok(ClosureArg::All);
    }
    s.parse()
        .map(ClosureArg::Index)
        .map_err(|_| format!("expected `all` or an index, got {s:?}"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtraArg(pub Vec<usize>);

fn parse_extra(s: &str) -> Result<ExtraArg, String> {
    match s {
        "0" => Ok(ExtraArg(vec![0])),
        "1" => Ok(ExtraArg(vec![1])),
        "all" => Ok(ExtraArg(vec![0, 1])),
        _ => Err(format!("expected 0, 1 or all, got {s:?}")),
    }
}

fn parse_pair(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `s,t`, got {s:?}"))?;
    let p = |x: &str| {
        x.trim()
            .parse::<i64>()
            .map_err(|_| format!("not an integer: {x:?}"))
    };
    Ok((p(a)?, p(b)?))
}

fn parse_site(s: &str) -> Result<(String, usize, usize, i64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("expected map:clause:term[:delta], got {s:?}");
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let delta = if parts.len() == 4 {
        parts[3].parse().map_err(|_| bad())?
    } else {
        1
    };
    Ok((
        parts[0].to_string(),
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
        delta,
    ))
}

#[derive(Deserialize)]
struct BraidJson {
    strands: usize,
    braid: Vec<i32>,
}

/// Read a diagram: PD text, PD JSON, or `{"strands": n, "braid": [..]}`.
pub fn load_diagram(path: &Path) -> Result<Diagram, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let wrap = |e: String| format!("{}: {e}", path.display());
    if text.contains("\"braid\"") {
        let b: BraidJson = serde_json::from_str(&text)
            .map_err(|e| wrap(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        return braid_closure(b.strands, &b.braid).map_err(|e| wrap(e.to_string()));
    }
    parse_pd(&text).map_err(|e| wrap(e.to_string()))
}

fn init_threads() {
    if let Some(n) = std::env::var("KHMOVES_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn load_transcripts_or_default(path: Option<&Path>) -> Result<Transcripts, String> {
    let p = path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| default_fixture_dir().join("r1_transcripts.json"));
    load_transcripts(&p)
}

fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit_report(r: &SuiteReport, format: Format) {
    match format {
        Format::Json => emit(&(serde_json::to_string_pretty(r).expect("report serializes") + "\n")),
        Format::Table => emit(&r.to_table()),
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    match cli.command {
        Command::Verify {
            mv,
            closure,
            extra_circles,
            format,
            symbolic: _,
            at,
            fixture,
            transcripts,
            perturb,
        } => {
            let fixture_path =
                fixture.unwrap_or_else(|| default_fixture_dir().join("semantics.json"));
            let fx = match SemanticsFixture::load(&fixture_path) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: cannot read semantics fixture ({e}); run `khmoves solve-semantics` first");
                    return EXIT_STRUCTURAL;
                }
            };
            let tr = match load_transcripts_or_default(transcripts.as_deref()) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_STRUCTURAL;
                }
            };
            let mut book = RuleBook::standard();
            if let Some((map, clause, term, delta)) = perturb {
                if !book
                    .coefficient_sites()
                    .contains(&(map.clone(), clause, term))
                {
                    eprintln!("error: no coefficient at {map}:{clause}:{term}");
                    return EXIT_USAGE;
                }
                book = book.perturbed(&(map, clause, term), delta);
            }
            let sel = ClosureSelection {
                extra: extra_circles.0,
                index: match closure {
                    ClosureArg::All => None,
                    ClosureArg::Index(i) => Some(i),
                },
            };
            let cand = fx.frozen;
            let ws = match Workspace::new(cand.config, cand.semantics.markers, &sel) {
                Ok(w) => w,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_STRUCTURAL;
                }
            };
            if ws.six.is_empty() && ws.two.is_empty() {
                eprintln!("error: closure index out of range");
                return EXIT_USAGE;
            }
            let engine = Engine {
                ws: &ws,
                sem: cand.semantics,
                book: &book,
                at,
                transcripts: Some(&tr),
            };
            let moves = mv.moves();
            let report =
                SuiteReport::new(&format!("{mv:?}").to_lowercase(), engine.run_moves(&moves));
            emit_report(&report, format);
            if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Command::Homology { input, format, at } => {
            let d = match load_diagram(&input) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_STRUCTURAL;
                }
            };
            let table = build_complex(&d)
                .map_err(|e| e.to_string())
                .and_then(|c| homology(&c, at.0, at.1).map_err(|e| e.to_string()));
            match table {
                Ok(t) => {
                    match format {
                        Format::Json => println!(
                            "{}",
                            serde_json::to_string_pretty(&t).expect("table serializes")
                        ),
                        Format::Table => print!("{}", t.to_text()),
                    }
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_STRUCTURAL
                }
            }
        }
        Command::Invariance {
            left,
            right,
            format,
        } => {
            let (a, b) = match (load_diagram(&left), load_diagram(&right)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("error: {e}");
                    return EXIT_STRUCTURAL;
                }
            };
            match invariance_compare(&a, &b) {
                Ok(cmp) => {
                    match format {
                        Format::Json => println!(
                            "{}",
                            serde_json::to_string_pretty(&cmp).expect("comparison serializes")
                        ),
                        Format::Table => {
                            println!("{}:\n{}", left.display(), cmp.left.to_text());
                            println!("{}:\n{}", right.display(), cmp.right.to_text());
                            for line in &cmp.diff {
                                println!("differs at {line}");
                            }
                            println!("{}", if cmp.equal { "equal" } else { "different" });
                        }
                    }
                    if cmp.equal {
                        EXIT_OK
                    } else {
                        EXIT_FAIL
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_STRUCTURAL
                }
            }
        }
        Command::SolveSemantics {
            out,
            at,
            transcripts,
            check,
        } => {
            let tr = match load_transcripts_or_default(transcripts.as_deref()) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_STRUCTURAL;
                }
            };
            let book = RuleBook::standard();
            let opts = SolverOptions {
                at,
                ..SolverOptions::default()
            };
            let fixture = solve_label_semantics(&book, Some(&tr), &opts)
                .and_then(|r| Ok((SemanticsFixture::build(&r, &book, Some(&tr))?, r)));
            let (fx, result) = match fixture {
                Ok((Some(f), r)) => (f, r),
                Ok((None, _)) => {
                    eprintln!("error: every candidate fails a structural check");
                    return EXIT_STRUCTURAL;
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_STRUCTURAL;
                }
            };
            let path = out.unwrap_or_else(|| default_fixture_dir().join("semantics.json"));
            let json = fx.to_json();
            if check {
                let stored = std::fs::read_to_string(&path).unwrap_or_default();
                if stored != json {
                    eprintln!("error: {} differs from a fresh solver run", path.display());
                    return EXIT_STRUCTURAL;
                }
                println!("{} matches a fresh solver run", path.display());
            } else if let Err(e) = std::fs::write(&path, &json) {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_STRUCTURAL;
            } else {
                println!("wrote {}", path.display());
            }
            println!("candidates examined: {}", result.candidates_examined);
            println!("passing: {}", result.passing.len());
            println!("frozen: {}", fx.frozen);
            match result.status {
                SolveStatus::Solved => {
                    if result.passing.len() > 1 {
                        eprintln!(
                            "warning: {} candidates pass; the first is frozen",
                            result.passing.len()
                        );
                        for c in &result.passing {
                            eprintln!("  {c}");
                        }
                    }
                    EXIT_OK
                }
                SolveStatus::NoCandidate => {
                    eprintln!("error: no candidate passes every identity");
                    eprintln!(
                        "identities failing for every candidate: {}",
                        result.universally_failing.join(", ")
                    );
                    eprintln!("nearest misses ({}):", result.nearest_misses.len());
                    for c in &result.nearest_misses {
                        eprintln!("  {c}");
                    }
                    EXIT_STRUCTURAL
                }
            }
        }
    }
}
