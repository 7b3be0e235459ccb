use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use catdet::determinize::{classical_subset_construction, det_span, mdet, DetError, DEFAULT_POWERSET_CAP};
use catdet::io::{
    det_document, dot, expansion_document, factorization_document, language_lines, mdet_document, parse_automaton,
    parse_simulation, to_json, validate_document, IoError, Kind, Loaded,
};
use catdet::laws::run_laws;
use catdet::simulation::{check_span_simulation, factor_det, factor_mdet, SimError, Strength, Verdict};

#[derive(Parser)]
#[command(name = "catdet", version, about = "Determinize automata over free categories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Pseudo,
    Lax,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Det,
    Mdet,
}

#[derive(Subcommand)]
enum Command {
    /// Check an automaton document; problems go to standard error.
    Validate { file: PathBuf },
    /// Powerset determinization.
    Det {
        file: PathBuf,
        /// Keep only states reachable from the initial state.
        #[arg(long)]
        prune: bool,
        #[arg(long, default_value_t = DEFAULT_POWERSET_CAP)]
        powerset_cap: usize,
    },
    /// Multiset determinization: count matrices, or an explored state space.
    Mdet {
        file: PathBuf,
        #[arg(long)]
        expand: bool,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 1024)]
        max_states: usize,
    },
    /// Textbook subset construction on a classical-nfa document.
    Classical {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_POWERSET_CAP)]
        powerset_cap: usize,
    },
    /// Accepted words up to a length, with path counts on request.
    Lang {
        file: PathBuf,
        #[arg(long)]
        max_len: usize,
        #[arg(long)]
        count: bool,
    },
    /// Naturality check of a simulation document.
    SimCheck {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Factor a simulation into a deterministic automaton.
    Factor {
        file: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 1024)]
        max_states: usize,
        #[arg(long, default_value_t = DEFAULT_POWERSET_CAP)]
        powerset_cap: usize,
    },
    /// Run the algebraic law suites.
    Laws {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: u32,
    },
    /// Graphviz rendering of an automaton document.
    Dot { file: PathBuf },
}

/// A failed run: exit code and a single-line reason.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn input(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { code: 2, kind, message: message.into() }
    }

    fn check(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { code: 1, kind, message: message.into() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::input("invalid-input", e.to_string())
    }
}

impl From<DetError> for Failure {
    fn from(e: DetError) -> Self {
        match e {
            DetError::FiberTooLarge { .. } => Failure::input("limit-exceeded", e.to_string()),
            _ => Failure::input("invalid-input", e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NotNatural { .. } => Failure::check("not-natural", e.to_string()),
            SimError::Truncated(_) => Failure::input("limit-exceeded", e.to_string()),
            SimError::Det(d) => d.into(),
            _ => Failure::input("invalid-input", e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    Ok(parse_automaton(&read(path)?)?)
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { file } => {
            let problems = validate_document(&read(&file)?);
            if problems.is_empty() {
                println!("valid");
                return Ok(());
            }
            for p in &problems {
                eprintln!("{p}");
            }
            Err(Failure::check("invalid", format!("{} violation(s)", problems.len())))
        }
        Command::Det { file, prune, powerset_cap } => {
            let d = det_span(&load(&file)?.to_span(), powerset_cap)?;
            let d = if prune { d.pruned() } else { d };
            print!("{}", to_json(&det_document(&d.automaton)));
            Ok(())
        }
        Command::Mdet { file, expand, max_len, max_states } => {
            let m = mdet(&load(&file)?.to_span())?;
            if expand {
                print!("{}", to_json(&expansion_document(&m.expand(max_states, max_len)?)));
            } else {
                print!("{}", to_json(&mdet_document(&m)));
            }
            Ok(())
        }
        Command::Classical { file, powerset_cap } => {
            let Loaded::Classical(n) = load(&file)? else {
                return Err(Failure::input("invalid-input", "kind: expected a classical-nfa document"));
            };
            print!("{}", to_json(&det_document(&classical_subset_construction(&n, powerset_cap)?)));
            Ok(())
        }
        Command::Lang { file, max_len, count } => {
            for line in language_lines(&load(&file)?.to_span(), max_len, count)? {
                println!("{line}");
            }
            Ok(())
        }
        Command::SimCheck { file, mode } => {
            let dir = file.parent().unwrap_or(Path::new("."));
            let loaded = parse_simulation(&read(&file)?, dir)?;
            let mode = match mode {
                Mode::Strict => Strength::Strict,
                Mode::Pseudo => Strength::Pseudo,
                Mode::Lax => Strength::Lax,
            };
            match check_span_simulation(&loaded.sim, mode)?.verdict {
                Verdict::Holds => {
                    println!("holds ({})", mode.as_str());
                    Ok(())
                }
                Verdict::FailsAt { edge } => {
                    let id = &loaded.sim.source.base.edge(edge).id;
                    println!("fails at edge {id}");
                    Err(Failure::check("check-failed", format!("not {} natural at edge `{id}`", mode.as_str())))
                }
            }
        }
        Command::Factor { file, target, max_len, max_states, powerset_cap } => {
            let dir = file.parent().unwrap_or(Path::new("."));
            let loaded = parse_simulation(&read(&file)?, dir)?;
            let g = loaded
                .target
                .to_det()
                .ok_or_else(|| Failure::input("invalid-input", "target_ref: the target automaton is not deterministic"))?;
            let (ok, text) = match target {
                Target::Det => {
                    let r = factor_det(&loaded.sim, &g, powerset_cap)?;
                    (r.composite_ok && r.bisim_ok, to_json(&factorization_document("det", &r, Kind::Det)))
                }
                Target::Mdet => {
                    let r = factor_mdet(&loaded.sim, &g, max_len, max_states)?;
                    (r.composite_ok && r.bisim_ok, to_json(&factorization_document("mdet", &r, Kind::Span)))
                }
            };
            print!("{text}");
            if ok {
                Ok(())
            } else {
                Err(Failure::check("check-failed", "factorization is not a bisimulation through the canonical simulation"))
            }
        }
        Command::Laws { seed, cases } => {
            let report = run_laws(seed, cases);
            print!("{report}");
            let first = report
                .failures()
                .next()
                .map(|f| format!("{}: {}", f.name, f.failure.as_deref().unwrap_or_default()));
            match first {
                None => Ok(()),
                Some(why) => Err(Failure::check("law-failed", why)),
            }
        }
        Command::Dot { file } => {
            print!("{}", dot(&load(&file)?.to_span()));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, single_line(&f.message));
            ExitCode::from(f.code)
        }
    }
}
