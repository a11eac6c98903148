use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use orbaut::fqspace::{appendix_suite, SuiteItem};
use orbaut::lattice::{discriminant_group, Lattice};
use orbaut::leech::{build_golay, build_leech, find_class_rep, m24_generators, m24_order, verify_rep};
use orbaut::orbifold::{report_json, run_case, RunOptions};
use orbaut::shortvec::{enumerate_short, min_norm};
use orbaut::{Error, Result};

const CLASSES: [&str; 4] = ["3C", "5C", "11A", "23A"];

/// Parameter sets of the finite orthogonal group suite run by `report all`.
const SUITE_PARAMS: [(usize, u64, bool); 8] =
    [(3, 3, false), (3, 5, false), (3, 7, false), (3, 11, false), (3, 23, false), (5, 3, false), (4, 5, true), (4, 11, true)];

#[derive(Parser)]
#[command(name = "orbaut", version, about = "Automorphism groups of Leech coinvariant orbifold VOAs, computed exactly")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Directory of cached class representatives (falls back to $ORBIFOLD_CACHE)
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Seed for all randomized searches
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Write the JSON here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Leave timing fields out of reports
    #[arg(long, global = true)]
    no_timings: bool,
    /// Print progress to stderr
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Binary Golay code checks
    Golay {
        #[command(subcommand)]
        cmd: GolayCmd,
    },
    /// Leech lattice construction and class representatives
    Leech {
        #[command(subcommand)]
        cmd: LeechCmd,
    },
    /// Invariants of a lattice given as {"rank": n, "gram": [[...]]}
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// Orbifold automorphism group pipeline
    Orbifold {
        #[command(subcommand)]
        cmd: OrbifoldCmd,
    },
    /// Finite orthogonal group property suite
    Fqspace {
        #[command(subcommand)]
        cmd: FqspaceCmd,
    },
    /// Combined reports
    Report {
        #[command(subcommand)]
        cmd: ReportCmd,
    },
}

#[derive(Subcommand)]
enum GolayCmd {
    Verify,
}

#[derive(Subcommand)]
enum LeechCmd {
    Build,
    FindClass {
        #[arg(long = "class")]
        class: String,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    Info { file: PathBuf },
}

#[derive(Subcommand)]
enum OrbifoldCmd {
    Run {
        #[arg(long = "class")]
        class: String,
        /// Do not consume the transitivity / extra-automorphism assumptions
        #[arg(long)]
        no_assume_transitivity: bool,
    },
}

#[derive(Subcommand)]
enum FqspaceCmd {
    Appendix {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: u64,
        /// (−)-type space in even dimension
        #[arg(long)]
        minus: bool,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    All,
}

struct Outcome {
    body: Value,
    pass: bool,
}

fn cache_dir(g: &Global) -> Result<Option<PathBuf>> {
    let dir = g.cache.clone().or_else(|| std::env::var_os("ORBIFOLD_CACHE").map(PathBuf::from));
    match dir {
        Some(d) if !d.is_dir() => Err(Error::Cache(format!("cache directory {} does not exist", d.display()))),
        d => Ok(d),
    }
}

fn check_class(label: &str) -> Result<()> {
    if CLASSES.contains(&label) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("unknown class {label}; expected one of {}", CLASSES.join(", "))))
    }
}

fn golay_verify() -> Outcome {
    let code = build_golay();
    let we = code.weight_enumerator();
    let nonzero: Vec<Value> = we.iter().enumerate().filter(|(_, &c)| c > 0).map(|(w, &c)| json!({"weight": w, "count": c})).collect();
    let preserved: Vec<Value> =
        m24_generators().iter().map(|(name, perm)| json!({"generator": name, "preserves_code": code.preserved_by(perm)})).collect();
    let m24 = m24_order();
    let pass = code.codewords().len() == 4096
        && code.octads().len() == 759
        && we[12] == 2576
        && code.min_weight() == 8
        && code.is_self_orthogonal()
        && preserved.iter().all(|v| v["preserves_code"] == json!(true))
        && m24 == 244_823_040u64.into();
    Outcome {
        body: json!({
            "codewords": code.codewords().len(),
            "octads": code.octads().len(),
            "dodecads": we[12],
            "min_weight": code.min_weight(),
            "self_orthogonal": code.is_self_orthogonal(),
            "weight_enumerator": nonzero,
            "m24_generators": preserved,
            "m24_order": m24.to_string(),
            "pass": pass,
        }),
        pass,
    }
}

fn leech_build() -> Result<Outcome> {
    let leech = build_leech()?;
    let l = &leech.lattice;
    let min = min_norm(l)?;
    let pass = l.rank() == 24 && l.det() == 1.into() && l.is_even() && min == 4;
    Ok(Outcome {
        body: json!({
            "rank": l.rank(),
            "det": l.det().to_string(),
            "even": l.is_even(),
            "min_norm": min,
            "lattice": serde_json::to_value(l)?,
            "pass": pass,
        }),
        pass,
    })
}

fn find_class(label: &str, g: &Global) -> Result<Outcome> {
    check_class(label)?;
    let leech = build_leech()?;
    let rep = find_class_rep(&leech, label, g.seed, cache_dir(g)?.as_deref())?;
    let verified = verify_rep(&leech, &rep).is_ok();
    let mut body = serde_json::to_value(&rep)?;
    body["verified"] = json!(verified);
    Ok(Outcome { body, pass: verified })
}

fn lattice_info(file: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(file)?;
    let l: Lattice = serde_json::from_str(&text)?;
    let dg = discriminant_group(&l)?;
    let roots = enumerate_short(&l, 2)?.len();
    let space_type = match (dg.elementary_prime(), dg.rank() % 2 == 0) {
        (Some(_), true) if dg.rank() > 0 => dg.fp_space()?.normalize()?.type_sign,
        _ => None,
    };
    Ok(Outcome {
        body: json!({
            "rank": l.rank(),
            "det": l.det().to_string(),
            "even": l.is_even(),
            "min_norm": min_norm(&l)?,
            "rootless": roots == 0,
            "root_pairs": roots,
            "elementary_prime": dg.elementary_prime(),
            "discriminant_type": space_type,
            "discriminant": serde_json::to_value(&dg)?,
        }),
        pass: true,
    })
}

fn orbifold_run(label: &str, assume: bool, g: &Global) -> Result<Outcome> {
    check_class(label)?;
    let leech = build_leech()?;
    let opts = RunOptions { assume_transitivity: assume, seed: g.seed, cache: cache_dir(g)?, progress: g.verbose };
    let r = run_case(&leech, label, &opts)?;
    Ok(Outcome { pass: r.status == "OK", body: report_json(&r, !g.no_timings) })
}

fn suite_pass(items: &[SuiteItem]) -> bool {
    items.iter().all(|i| i.pass != Some(false))
}

fn appendix(n: usize, p: u64, minus: bool, g: &Global) -> Result<Outcome> {
    let items = appendix_suite(n, p, minus, g.seed)?;
    let pass = suite_pass(&items);
    Ok(Outcome { body: json!({"n": n, "p": p, "minus": minus, "items": items, "pass": pass}), pass })
}

fn report_all(g: &Global) -> Result<Outcome> {
    let leech = build_leech()?;
    let cache = cache_dir(g)?;
    let mut cases = serde_json::Map::new();
    let mut pass = true;
    for label in CLASSES {
        let opts = RunOptions { assume_transitivity: true, seed: g.seed, cache: cache.clone(), progress: g.verbose };
        let r = run_case(&leech, label, &opts)?;
        pass &= r.status == "OK";
        cases.insert(label.to_string(), report_json(&r, !g.no_timings));
    }
    let mut suites = Vec::new();
    for (n, p, minus) in SUITE_PARAMS {
        if g.verbose {
            eprintln!("[suite] n = {n}, p = {p}{}", if minus { ", minus" } else { "" });
        }
        let o = appendix(n, p, minus, g)?;
        pass &= o.pass;
        suites.push(o.body);
    }
    let golay = golay_verify();
    pass &= golay.pass;
    Ok(Outcome { body: json!({"golay": golay.body, "cases": cases, "appendix": suites, "pass": pass}), pass })
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Golay { cmd: GolayCmd::Verify } => Ok(golay_verify()),
        Cmd::Leech { cmd: LeechCmd::Build } => leech_build(),
        Cmd::Leech { cmd: LeechCmd::FindClass { class } } => find_class(class, g),
        Cmd::Lattice { cmd: LatticeCmd::Info { file } } => lattice_info(file),
        Cmd::Orbifold { cmd: OrbifoldCmd::Run { class, no_assume_transitivity } } => {
            orbifold_run(class, !no_assume_transitivity, g)
        }
        Cmd::Fqspace { cmd: FqspaceCmd::Appendix { n, p, minus } } => appendix(*n, *p, *minus, g),
        Cmd::Report { cmd: ReportCmd::All } => report_all(g),
    }
}

fn emit(value: &Value, output: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global() {
            eprintln!("warning: {e}");
        }
    }
    let (value, code) = match dispatch(&cli) {
        Ok(o) => (o.body, if o.pass { 0 } else { 1 }),
        Err(e) => (json!({"error": {"kind": e.kind(), "message": e.to_string()}}), 2),
    };
    if let Err(e) = emit(&value, cli.global.output.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
