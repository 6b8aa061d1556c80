mod cache;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use padic_shift::cocycle::{self, OrderedDiagram};
use padic_shift::dynamics::{self, GridSource};
use padic_shift::tower::{self, SequenceSpec, Tower, TowerOptions, DEFAULT_ALGEBRAIC_CAP};
use padic_shift::{Error, Substitution};

#[derive(Parser)]
#[command(name = "padic-shift", version, about = "Automata, substitutions and towers for sequences mod p^α")]
struct Cli {
    /// Directory for every artifact.
    #[arg(long, global = true, env = "PADIC_SHIFT_OUT", default_value = "out")]
    out: PathBuf,
    /// Rebuild towers instead of reading them from the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal direct-reading automaton and substitution for one level.
    Build {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        alpha: u32,
    },
    /// All levels 0..=A with their state maps.
    Tower {
        #[command(flatten)]
        src: SpecArgs,
        #[arg(long)]
        top: u32,
    },
    /// Re-checks a saved tower.
    Verify {
        #[arg(long)]
        tower: PathBuf,
        /// Prefix length for the sequence identities.
        #[arg(long, default_value_t = 4096)]
        n: usize,
    },
    /// Residue tree of attained values mod p^α.
    Tree {
        #[command(flatten)]
        src: TowerArgs,
        #[arg(long)]
        depth: u32,
    },
    /// Limit or eventual cycle of a(k·pⁿ + r).
    Limit {
        #[command(flatten)]
        src: TowerArgs,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 0)]
        r: u64,
        #[arg(long)]
        precision: u32,
    },
    /// Cocycle sequence of an ordered diagram, checked against its substitutions.
    Cocycle {
        /// Permutation words joined by ';', e.g. "01;10".
        #[arg(long)]
        theta: String,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        alpha: u32,
        /// Also check the four 2-regular recurrences on n/4 terms.
        #[arg(long)]
        recurrences: bool,
    },
    /// Digit grid of a(k·pⁿ + r) as PBM, text and JSON.
    Render {
        #[command(flatten)]
        src: TowerArgs,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 0)]
        r: u64,
        #[arg(long, default_value_t = 32)]
        rows: usize,
        #[arg(long)]
        width: u32,
        /// Read values from the brute-force oracle instead of a tower.
        #[arg(long)]
        oracle: bool,
    },
    /// Brute-force values a(0..n) mod p^α.
    Oracle {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        alpha: u32,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    p: u64,
    /// Highest level allowed for algebraic and diagonal specifications.
    #[arg(long, default_value_t = DEFAULT_ALGEBRAIC_CAP)]
    cap: u32,
}

#[derive(Args)]
struct TowerArgs {
    /// A saved tower; otherwise one is built from --spec and --p.
    #[arg(long, conflicts_with = "spec")]
    tower: Option<PathBuf>,
    #[arg(long, requires = "p")]
    spec: Option<PathBuf>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ALGEBRAIC_CAP)]
    cap: u32,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::InvalidInput(_)
            | Error::InvalidParameter(_)
            | Error::Precision(_)
            | Error::NotSupported(_)
            | Error::NotInvertible(_) => Failure::Usage(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Check(format!("{}: {e}", path.display()))
}

fn read_spec(path: &Path) -> Run<SequenceSpec> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    SequenceSpec::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_tower(path: &Path) -> Run<Tower> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Pretty JSON with sorted keys and a trailing newline.
pub(crate) fn canonical_json<T: Serialize>(v: &T) -> String {
    let value: Value = serde_json::to_value(v).expect("serializable");
    let mut s = serde_json::to_string_pretty(&value).expect("serializable");
    s.push('\n');
    s
}

struct Ctx {
    out: PathBuf,
    no_cache: bool,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Run<PathBuf> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    fn tower(&self, spec: &SequenceSpec, p: u64, top: u32, cap: u32) -> Run<Tower> {
        let opts = TowerOptions { algebraic_cap: cap };
        if self.no_cache {
            return Ok(tower::build_tower_with(spec, p, top, &opts)?);
        }
        cache::tower(&self.out.join("cache"), spec, p, top, || tower::build_tower_with(spec, p, top, &opts))
    }

    fn tower_from(&self, src: &TowerArgs, top: u32) -> Run<Tower> {
        match (&src.tower, &src.spec, src.p) {
            (Some(path), _, _) => {
                let t = read_tower(path)?;
                if t.top() < top {
                    return Err(Failure::Usage(format!("saved tower stops at level {}", t.top())));
                }
                Ok(t)
            }
            (None, Some(spec), Some(p)) => self.tower(&read_spec(spec)?, p, top, src.cap),
            _ => Err(Failure::Usage("give --tower, or --spec with --p".into())),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { out: cli.out, no_cache: cli.no_cache };
    match run(&ctx, cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(ctx: &Ctx, cmd: Command) -> Run<()> {
    match cmd {
        Command::Build { spec, p, alpha } => {
            let spec = read_spec(&spec)?;
            let m = tower::level_machine(&spec, p, alpha)?;
            let th = Substitution::cobham_extract(&m)?;
            let path = ctx.write("automaton.json", &canonical_json(&m))?;
            ctx.write("automaton.dot", &m.to_dot())?;
            ctx.write("substitution.json", &canonical_json(&th))?;
            println!("{} states -> {}", m.num_states(), path.display());
        }
        Command::Tower { src, top } => {
            let spec = read_spec(&src.spec)?;
            let t = ctx.tower(&spec, src.p, top, src.cap)?;
            let path = ctx.write("tower.json", &canonical_json(&t))?;
            let prim = t.primitive_levels();
            println!("states per level {:?}", t.state_counts());
            println!("primitive for all levels <= {top}: {}", prim.iter().skip(1).all(|&b| b));
            println!("-> {}", path.display());
        }
        Command::Verify { tower: path, n } => {
            let t = read_tower(&path)?;
            let report = tower::verify_tower(&t, n);
            let mut oracle = Vec::new();
            if let Some(spec) = t.spec() {
                for a in 1..=t.top() {
                    let want = spec.oracle_values(n, t.p(), a)?;
                    let m = t.machine(a)?;
                    let bad = (0..n).find(|&i| m.eval(i as u64).as_residue().map(|r| r.value()) != Some(want[i]));
                    oracle.push(json!({"level": a, "passed": bad.is_none(), "first_mismatch": bad}));
                }
            }
            let oracle_ok = oracle.iter().all(|o| o["passed"] == true);
            let doc = json!({"checks": report.checks, "oracle": oracle, "passed": report.passed() && oracle_ok});
            ctx.write("verify.json", &canonical_json(&doc))?;
            let failures: Vec<String> = report
                .failures()
                .map(|f| format!("level {} {}: {}", f.level, f.identity, f.witness.as_deref().unwrap_or("")))
                .collect();
            if !failures.is_empty() || !oracle_ok {
                for f in &failures {
                    println!("FAIL {f}");
                }
                return Err(Failure::Check(format!("{} identities fail", failures.len().max(1))));
            }
            println!("{} checks passed", report.checks.len() + oracle.len());
        }
        Command::Tree { src, depth } => {
            let t = ctx.tower_from(&src, depth)?;
            let mut tree = tower::residue_tree(&t)?;
            tree.levels.truncate(depth as usize + 1);
            let mut forbidden = serde_json::Map::new();
            for a in 1..=depth {
                if let Ok(f) = tower::forbidden_residues(&t, a) {
                    forbidden.insert(a.to_string(), json!(f));
                }
            }
            let doc = json!({"p": tree.p, "levels": tree.levels, "sizes": tree.sizes(), "forbidden": forbidden});
            ctx.write("tree.json", &canonical_json(&doc))?;
            let path = ctx.write("tree.dot", &tree.to_dot())?;
            println!("level sizes {:?} -> {}", tree.sizes(), path.display());
        }
        Command::Limit { src, k, r, precision } => {
            let t = ctx.tower_from(&src, precision)?;
            let t = if t.top() > precision { truncate(t, precision)? } else { t };
            let res = dynamics::padic_limit(&t, k, r)?;
            ctx.write("limit.json", &canonical_json(&res))?;
            match &res {
                dynamics::LimitResult::Limit { value } => println!("limit {value}"),
                dynamics::LimitResult::Cycle { period, values } => {
                    let vs: Vec<String> = values.iter().map(ToString::to_string).collect();
                    println!("cycle of period {period}: {}", vs.join(", "));
                }
            }
        }
        Command::Cocycle { theta, p, n, alpha, recurrences } => {
            let d = OrderedDiagram::parse(p, &theta)?;
            let len = if recurrences { n.max(4) } else { n };
            let s = cocycle::cocycle_sequence(&d, len)?;
            let reports = (1..=alpha)
                .map(|a| cocycle::verify_cocycle_against(&d, a, &s))
                .collect::<padic_shift::Result<Vec<_>>>()?;
            let rec = if recurrences { Some(cocycle::regular_recurrence_check(&s, len / 4)?) } else { None };
            let doc = json!({
                "theta": d.to_theta_string(),
                "p": p,
                "sequence": &s[..n],
                "verification": reports,
                "recurrences": rec,
            });
            let path = ctx.write("cocycle.json", &canonical_json(&doc))?;
            let shown: Vec<String> = s.iter().take(16).map(u64::to_string).collect();
            println!("s = {}{}", shown.join(","), if n > 16 { ",…" } else { "" });
            println!("-> {}", path.display());
            if let Some(bad) = reports.iter().find(|r| !r.passed()) {
                return Err(Failure::Check(format!("alpha = {}: {:?}", bad.alpha, bad.mismatch)));
            }
            if let Some(rec) = rec.filter(|r| !r.passed()) {
                return Err(Failure::Check(format!("recurrences fail at {:?}", rec.first_failure)));
            }
        }
        Command::Render { src, k, r, rows, width, oracle } => {
            let grid = if oracle {
                let (Some(spec), Some(p)) = (&src.spec, src.p) else {
                    return Err(Failure::Usage("--oracle needs --spec and --p".into()));
                };
                let spec = read_spec(spec)?;
                let spec = match spec {
                    SequenceSpec::Algebraic { .. } | SequenceSpec::Diagonal { .. } | SequenceSpec::Cocycle { .. } => {
                        return Err(Failure::Usage("--oracle supports linrec and named oracle specs".into()))
                    }
                    s => s,
                };
                dynamics::digit_grid(GridSource::Oracle(&spec), p, k, r, rows, width)?
            } else {
                let t = ctx.tower_from(&src, width)?;
                dynamics::digit_grid(GridSource::Tower(&t), t.p(), k, r, rows, width)?
            };
            ctx.write("grid.pbm", &grid.to_pbm())?;
            ctx.write("grid.txt", &grid.to_text())?;
            let path = ctx.write("grid.json", &canonical_json(&grid))?;
            print!("{}", dynamics::labelled_text(&grid));
            println!("-> {}", path.display());
        }
        Command::Oracle { spec, p, alpha, n } => {
            let spec = read_spec(&spec)?;
            let vals = spec.oracle_values(n, p, alpha)?;
            let doc = json!({"p": p, "alpha": alpha, "values": vals});
            let path = ctx.write("oracle.json", &canonical_json(&doc))?;
            let shown: Vec<String> = vals.iter().take(16).map(u64::to_string).collect();
            println!("{} -> {}", shown.join(","), path.display());
        }
    }
    Ok(())
}

/// The levels `0..=top` of a taller tower.
fn truncate(t: Tower, top: u32) -> Run<Tower> {
    let levels = t.levels()[..=top as usize].to_vec();
    let proj = (0..top).map(|a| t.proj(a).map(<[usize]>::to_vec)).collect::<padic_shift::Result<Vec<_>>>()?;
    Ok(Tower::from_parts(t.p(), t.spec().cloned(), levels, proj)?)
}
