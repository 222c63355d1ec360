use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use txrobust::corpus::{self, PAIRS};
use txrobust::lang::{compile, normalize, parse, print, well_formed, Compiled, Program, Value};
use txrobust::membership::{member, oracle_member, Model};
use txrobust::movers::{build_graph, prove_robust_cc_pc, prove_robust_pc_si, Proof};
use txrobust::robustness::{candidate_traces, check, Budget, Method, Outcome, RobustnessError, Verdict};
use txrobust::trace::Trace;
use txrobust::transform::{instrument, split};

const ROBUST: u8 = 0;
const VIOLATION: u8 = 1;
const UNKNOWN: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "txrobust", version, about = "Robustness checker for transactional programs under CC, PC, SI and SER")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and normalize a program, reporting diagnostics.
    Parse {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Report which consistency models admit a trace (JSON input).
    CheckTrace {
        file: PathBuf,
        /// Only this model; the exit code is 0 when it admits the trace, 1 otherwise.
        #[arg(long)]
        model: Option<Model>,
        #[arg(long)]
        json: bool,
    },
    /// Decide robustness of a program for one pair of models.
    CheckRobustness {
        file: PathBuf,
        #[command(flatten)]
        pair: PairArgs,
        /// bruteforce, reduction, movers or all (every applicable method).
        #[arg(long, default_value = "bruteforce")]
        method: String,
        #[command(flatten)]
        common: Common,
    },
    /// Try to prove robustness from the commutativity dependency graph.
    ProveRobustness {
        file: PathBuf,
        #[command(flatten)]
        pair: PairArgs,
        /// Also print the graph in DOT format.
        #[arg(long)]
        dot: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Print the split program or the instrumented program.
    Transform {
        file: PathBuf,
        /// Print the monitor instrumentation instead of the split program.
        #[arg(long)]
        instrument: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Write traces, graph and transformed programs.
    Export {
        file: PathBuf,
        /// All traces admitted by this model, as JSON.
        #[arg(long, value_name = "MODEL")]
        traces: Option<Model>,
        /// Commutativity dependency graph of the split program, as DOT.
        #[arg(long)]
        graph: bool,
        /// Split program text.
        #[arg(long)]
        split: bool,
        /// Instrumented program with the monitor.
        #[arg(long)]
        instrumented: bool,
        /// Directory for traces.json, graph.dot, split.txn and instrumented.txt; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the bundled corpus and compare with the expected verdicts.
    Corpus {
        /// Entries to run (all by default).
        names: Vec<String>,
        /// List entries and exit.
        #[arg(long)]
        list: bool,
        /// Print the source of one entry and exit.
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct PairArgs {
    /// Weaker model: cc, pc, si or ser.
    #[arg(long)]
    from: Model,
    /// Stronger model.
    #[arg(long)]
    to: Model,
}

#[derive(Args)]
struct Common {
    /// Cap on explored schedules and traces [default: 1000000].
    #[arg(long)]
    budget_schedules: Option<usize>,
    /// Cap on enumerated cycles [default: 100000].
    #[arg(long)]
    budget_cycles: Option<usize>,
    /// Comma-separated value domain, replacing the program's.
    #[arg(long, value_delimiter = ',')]
    domain: Option<Vec<Value>>,
    /// JSON lines instead of text.
    #[arg(long)]
    json: bool,
}

struct Fail(u8, String);

type Res = Result<u8, Fail>;

fn usage(msg: impl ToString) -> Fail {
    Fail(USAGE, msg.to_string())
}

impl Common {
    /// Flags, then `ROBUST_BUDGET` (`N` or `N,M`), then defaults.
    fn budget(&self) -> Result<Budget, Fail> {
        let mut b = Budget::default();
        if let Ok(env) = std::env::var("ROBUST_BUDGET") {
            let mut it = env.split(',').map(|s| s.trim().parse::<usize>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(s)), c, None) => {
                    b.schedules = s;
                    match c {
                        Some(Ok(c)) => b.cycles = c,
                        None => {}
                        Some(Err(_)) => return Err(usage(format!("bad ROBUST_BUDGET `{env}`"))),
                    }
                }
                _ => return Err(usage(format!("bad ROBUST_BUDGET `{env}` (expected N or N,M)"))),
            }
        }
        b.schedules = self.budget_schedules.unwrap_or(b.schedules);
        b.cycles = self.budget_cycles.unwrap_or(b.cycles);
        Ok(b)
    }

    fn program(&self, file: &Path) -> Result<Program, Fail> {
        let src = fs::read_to_string(file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
        let mut p = parse(&src).map_err(|e| usage(format!("{}: {e}", file.display())))?;
        if let Some(d) = &self.domain {
            p.domain = d.clone();
        }
        let diags = well_formed(&p);
        if !diags.is_empty() {
            let lines: Vec<String> = diags.iter().map(|d| format!("{}: {d}", file.display())).collect();
            return Err(usage(lines.join("\n")));
        }
        Ok(p)
    }

    fn compiled(&self, file: &Path) -> Result<(Program, Compiled), Fail> {
        let p = self.program(file)?;
        let c = compile(&p).map_err(|e| usage(format!("{}: {e}", file.display())))?;
        Ok((p, c))
    }
}

fn name_of(p: &Program, file: &Path) -> String {
    p.name.clone().unwrap_or_else(|| file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
}

fn header(program: &str, b: Budget) -> Json {
    json!({
        "tool": concat!("txrobust ", env!("CARGO_PKG_VERSION")),
        "program": program,
        "budget": { "schedules": b.schedules, "cycles": b.cycles },
    })
}

fn report(program: &str, b: Budget, v: &Verdict) -> Json {
    let mut j = header(program, b);
    for (k, x) in v.to_json().as_object().unwrap() {
        j[k] = x.clone();
    }
    j
}

fn print_verdict(program: &str, v: &Verdict) {
    println!("{program} {} {}: {}", v.pair(), v.method, v.outcome.label());
    match &v.outcome {
        Outcome::Robust => {}
        Outcome::Unknown(r) => println!("  reason: {r}"),
        Outcome::Violation(w) => {
            if let Some(s) = &w.schedule {
                println!("  schedule: {}", s.join(" "));
            }
            if let Some(c) = &w.cycle {
                println!("  cycle: {c}");
            }
            let of = if w.of_split { " (split program)" } else { "" };
            println!("  witness{of}: {}", serde_json::to_string(&w.witness.to_json_value()).unwrap());
        }
    }
}

fn robustness_error(e: RobustnessError) -> Fail {
    usage(e)
}

fn cmd_parse(file: &Path, common: &Common) -> Res {
    let p = common.program(file)?;
    let n = normalize(&p).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    if common.json {
        let txns: usize = n.processes.iter().map(|q| q.txns.len()).sum();
        let j = json!({
            "program": name_of(&p, file),
            "processes": n.processes.len(),
            "transactions": txns,
            "variables": n.vars,
            "domain": n.domain,
        });
        println!("{j}");
    } else {
        print!("{}", print(&n));
    }
    Ok(ROBUST)
}

fn cmd_check_trace(file: &Path, model: Option<Model>, as_json: bool) -> Res {
    let src = fs::read_to_string(file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let t = Trace::from_json(&src).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let models: Vec<Model> = model.map_or(Model::ALL.to_vec(), |m| vec![m]);
    let mut out = serde_json::Map::new();
    let mut all_in = true;
    for m in models {
        let fast = member(&t, m).map_err(|e| Fail(UNKNOWN, e.to_string()))?;
        let oracle = oracle_member(&t, m).ok();
        all_in &= fast;
        if as_json {
            out.insert(m.to_string().to_ascii_lowercase(), json!({ "member": fast, "oracle": oracle }));
        } else {
            let o = oracle.map_or("skipped".to_string(), |b| if b { "yes" } else { "no" }.to_string());
            println!("{m}: {} (oracle: {o})", if fast { "yes" } else { "no" });
        }
    }
    if as_json {
        println!("{}", Json::Object(out));
    }
    Ok(if model.is_some() && !all_in { VIOLATION } else { ROBUST })
}

/// Combined exit code: any violation wins, then any robust answer, else unknown.
fn combine(vs: &[Verdict]) -> u8 {
    if vs.iter().any(Verdict::is_violation) {
        VIOLATION
    } else if vs.iter().any(Verdict::is_robust) {
        ROBUST
    } else {
        UNKNOWN
    }
}

fn cmd_check_robustness(file: &Path, pair: &PairArgs, method: &str, common: &Common) -> Res {
    let b = common.budget()?;
    let methods: Vec<Method> = if method.eq_ignore_ascii_case("all") {
        Method::ALL.into_iter().filter(|m| m.applies(pair.from, pair.to)).collect()
    } else {
        vec![method.parse().map_err(usage)?]
    };
    let (p, c) = common.compiled(file)?;
    let name = name_of(&p, file);
    let mut vs = Vec::new();
    for m in methods {
        let v = check(&c, pair.from, pair.to, m, b).map_err(robustness_error)?;
        if common.json {
            println!("{}", report(&name, b, &v));
        } else {
            print_verdict(&name, &v);
        }
        vs.push(v);
    }
    if vs.iter().any(Verdict::is_violation) && vs.iter().any(Verdict::is_robust) {
        return Err(Fail(UNKNOWN, "methods disagree".into()));
    }
    Ok(combine(&vs))
}

fn cmd_prove(file: &Path, pair: &PairArgs, dot: bool, common: &Common) -> Res {
    let b = common.budget()?;
    let p = common.program(file)?;
    let sp = split(&p).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let g = build_graph(&sp, b.schedules).map_err(|e| usage(e.to_string()))?;
    let proof = match (pair.from, pair.to) {
        (Model::CC, Model::PC) => prove_robust_cc_pc(&g, b.cycles),
        (Model::PC, Model::SI) => prove_robust_pc_si(&g, b.cycles),
        (Model::CC, Model::SI) => match prove_robust_cc_pc(&g, b.cycles) {
            Proof::Robust => prove_robust_pc_si(&g, b.cycles),
            other => other,
        },
        (f, t) => return Err(usage(format!("no commutativity proof rule for {f} vs {t}"))),
    };
    let name = name_of(&p, file);
    if common.json {
        let mut j = header(&name, b);
        j["pair"] = json!(format!("{}-{}", pair.from, pair.to).to_ascii_lowercase());
        j["method"] = json!("movers");
        j["verdict"] = json!(if proof.is_robust() { "robust" } else { "unknown" });
        j["edges"] = json!(g.named_edges().iter().map(|(a, b, k)| json!([a, b, k.name()])).collect::<Vec<_>>());
        j["overflow"] = json!(g.overflow);
        if let Proof::Inconclusive(w) = &proof {
            j["reason"] = json!(w);
        }
        println!("{j}");
    } else {
        println!("{name}: {} nodes, {} edges{}", g.nodes.len(), g.edges.len(), if g.overflow { " (budget overflow)" } else { "" });
        match &proof {
            Proof::Robust => println!("robust"),
            Proof::Inconclusive(w) => println!("inconclusive: {w}"),
        }
    }
    if dot {
        print!("{}", g.to_dot());
    }
    Ok(if proof.is_robust() { ROBUST } else { UNKNOWN })
}

fn cmd_transform(file: &Path, instrumented: bool, common: &Common) -> Res {
    let (p, c) = common.compiled(file)?;
    if instrumented {
        print!("{}", instrument(&c).to_text());
    } else {
        let sp = split(&p).map_err(|e| usage(e.to_string()))?;
        print!("{}", print(&sp.program));
    }
    Ok(ROBUST)
}

fn traces_in(c: &Compiled, m: Model, b: Budget) -> Result<Vec<Trace>, Fail> {
    let all = candidate_traces(c, b.schedules).map_err(|e| Fail(UNKNOWN, e.to_string()))?;
    let mut out = Vec::new();
    for t in all {
        if oracle_member(&t, m).map_err(|e| Fail(UNKNOWN, e.to_string()))? {
            out.push(t);
        }
    }
    Ok(out)
}

fn cmd_export(
    file: &Path,
    traces: Option<Model>,
    graph: bool,
    want_split: bool,
    instrumented: bool,
    out: Option<&Path>,
    common: &Common,
) -> Res {
    let b = common.budget()?;
    let (p, c) = common.compiled(file)?;
    let mut files: Vec<(&str, String)> = Vec::new();
    if let Some(m) = traces {
        let ts = traces_in(&c, m, b)?;
        let arr: Vec<Json> = ts.iter().map(Trace::to_json_value).collect();
        files.push(("traces.json", serde_json::to_string_pretty(&arr).unwrap() + "\n"));
    }
    let sp = split(&p).map_err(|e| usage(e.to_string()))?;
    if graph {
        let g = build_graph(&sp, b.schedules).map_err(|e| usage(e.to_string()))?;
        files.push(("graph.dot", g.to_dot()));
    }
    if want_split {
        files.push(("split.txn", print(&sp.program)));
    }
    if instrumented {
        files.push(("instrumented.txt", instrument(&c).to_text()));
    }
    if files.is_empty() {
        return Err(usage("nothing to export (use --traces, --graph, --split or --instrumented)"));
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            for (f, s) in &files {
                let path = dir.join(f);
                fs::write(&path, s).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            }
        }
        None => {
            for (_, s) in &files {
                print!("{s}");
            }
        }
    }
    Ok(ROBUST)
}

/// Movers first when the pair has a proof rule, then bruteforce.
fn corpus_cell(c: &Compiled, from: Model, to: Model, b: Budget) -> Result<Verdict, Fail> {
    if Method::Movers.applies(from, to) {
        let v = check(c, from, to, Method::Movers, b).map_err(robustness_error)?;
        if v.is_robust() {
            return Ok(v);
        }
    }
    check(c, from, to, Method::BruteForce, b).map_err(robustness_error)
}

fn cmd_corpus(names: &[String], list: bool, show: Option<&str>, common: &Common) -> Res {
    if list {
        for e in corpus::all() {
            println!("{:26} {}", e.name, e.provenance.unwrap_or_default());
        }
        return Ok(ROBUST);
    }
    if let Some(n) = show {
        let e = corpus::get(n).ok_or_else(|| usage(format!("no corpus entry `{n}`")))?;
        print!("{}", e.source);
        return Ok(ROBUST);
    }
    let b = common.budget()?;
    let entries = if names.is_empty() {
        corpus::all()
    } else {
        names.iter().map(|n| corpus::get(n).ok_or_else(|| usage(format!("no corpus entry `{n}`")))).collect::<Result<_, _>>()?
    };
    let (mut mismatches, mut unknowns) = (0, 0);
    if !common.json {
        let cols: Vec<String> = PAIRS.iter().map(|&(f, t)| format!("{f}-{t}").to_ascii_lowercase()).collect();
        println!("{:26} {}", "program", cols.iter().map(|c| format!("{c:9}")).collect::<String>().trim_end());
    }
    for e in entries {
        let mut p = parse(e.source).map_err(|err| usage(format!("{}: {err}", e.name)))?;
        if let Some(d) = &common.domain {
            p.domain = d.clone();
        }
        let c = compile(&p).map_err(|err| usage(format!("{}: {err}", e.name)))?;
        let mut row = format!("{:26} ", e.name);
        for (f, t) in PAIRS {
            let v = corpus_cell(&c, f, t, b)?;
            let got = match v.outcome {
                Outcome::Robust => Some(true),
                Outcome::Violation(_) => Some(false),
                Outcome::Unknown(_) => None,
            };
            let want = e.expect.get(&(f, t)).copied();
            let mark = match (got, want) {
                (None, _) => {
                    unknowns += 1;
                    "?"
                }
                (Some(g), Some(w)) if g != w => {
                    mismatches += 1;
                    "!"
                }
                _ => "",
            };
            if common.json {
                let mut j = report(e.name, b, &v);
                j["expected"] = json!(want.map(|w| if w { "robust" } else { "violation" }));
                j["matches"] = json!(got.is_some() && got == want);
                println!("{j}");
            } else {
                let cell = match got {
                    Some(true) => "yes",
                    Some(false) => "no",
                    None => "unknown",
                };
                row.push_str(&format!("{:9}", format!("{cell}{mark}")));
            }
        }
        if !common.json {
            println!("{}", row.trim_end());
        }
    }
    if !common.json {
        println!("{mismatches} mismatches, {unknowns} unknown");
    }
    Ok(if mismatches > 0 {
        VIOLATION
    } else if unknowns > 0 {
        UNKNOWN
    } else {
        ROBUST
    })
}

fn run(cli: Cli) -> Res {
    match &cli.cmd {
        Cmd::Parse { file, common } => cmd_parse(file, common),
        Cmd::CheckTrace { file, model, json } => cmd_check_trace(file, *model, *json),
        Cmd::CheckRobustness { file, pair, method, common } => cmd_check_robustness(file, pair, method, common),
        Cmd::ProveRobustness { file, pair, dot, common } => cmd_prove(file, pair, *dot, common),
        Cmd::Transform { file, instrument, common } => cmd_transform(file, *instrument, common),
        Cmd::Export { file, traces, graph, split, instrumented, out, common } => {
            cmd_export(file, *traces, *graph, *split, *instrumented, out.as_deref(), common)
        }
        Cmd::Corpus { names, list, show, common } => cmd_corpus(names, *list, show.as_deref(), common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { ROBUST };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
