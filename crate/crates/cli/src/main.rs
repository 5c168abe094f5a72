use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use langnsend::engine::{EngineError, SearchBudget};
use langnsend::lang::check_term;
use langnsend::process::{
    explore, lan_star, run, Exploration, ExploreLimits, LangExpr, Policy, Process, ProcessError,
};
use langnsend::syntax::{emit_report, load_languages, load_process, Imports, RunReport};
use serde_json::json;

const CORPUS: [(&str, &str); 12] = [
    ("bpa.lnsl", include_str!("../../../corpus/bpa.lnsl")),
    ("almostDisrupt.lnsl", include_str!("../../../corpus/almostDisrupt.lnsl")),
    ("disruptRules.lnsl", include_str!("../../../corpus/disruptRules.lnsl")),
    ("interruptRules.lnsl", include_str!("../../../corpus/interruptRules.lnsl")),
    ("partialCCS.lnsl", include_str!("../../../corpus/partialCCS.lnsl")),
    ("synchOutput.lnsl", include_str!("../../../corpus/synchOutput.lnsl")),
    ("asynchOutput.lnsl", include_str!("../../../corpus/asynchOutput.lnsl")),
    ("bpa_walkthrough.lns", include_str!("../../../corpus/bpa_walkthrough.lns")),
    ("disrupt_system.lns", include_str!("../../../corpus/disrupt_system.lns")),
    ("quitmode_system.lns", include_str!("../../../corpus/quitmode_system.lns")),
    ("ccs_system.lns", include_str!("../../../corpus/ccs_system.lns")),
    ("empty.lns", include_str!("../../../corpus/empty.lns")),
];

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_STEP_LIMIT: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_STATE_LIMIT: u8 = 4;

/// Interpreter for processes that exchange and execute language definitions.
#[derive(Parser)]
#[command(name = "lns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a script under a scheduler and print the run report.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        /// Seed for the seeded policy.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_steps: u64,
    },
    /// Enumerate every interleaving and print the completed traces.
    Explore {
        #[command(flatten)]
        common: Common,
        /// Unfoldings allowed per replicated thread along a path.
        #[arg(long, default_value_t = 2)]
        repl_bound: usize,
        /// Reductions from the initial state beyond which nothing is expanded.
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        explore_depth: u64,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_states: u64,
    },
    /// Check grammar conformance of executed programs, closedness and sorts.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// List the bundled example corpus, print one file, or write it out.
    Examples {
        /// File to print.
        name: Option<String>,
        /// Directory to write the whole corpus into.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Process script (.lns).
    script: PathBuf,
    /// Directory searched for .lnsl files; defaults to the script's directory.
    #[arg(long = "lang-path")]
    lang_path: Vec<PathBuf>,
    /// Maximum proof-search depth.
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    /// Maximum proof-search nodes per query.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_nodes: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    First,
    Seeded,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

fn exit_code(e: &ProcessError) -> u8 {
    match e {
        ProcessError::StepLimit(_) => EXIT_STEP_LIMIT,
        ProcessError::StateLimit(_) => EXIT_STATE_LIMIT,
        ProcessError::Engine(EngineError::BudgetExhausted { .. }) => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

impl From<ProcessError> for Failure {
    fn from(e: ProcessError) -> Failure {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl Common {
    fn budget(&self) -> SearchBudget {
        SearchBudget::new(self.max_nodes, self.max_depth as usize).expect("bounds are positive")
    }

    fn load(&self) -> Result<(Imports, Process), Failure> {
        let dirs = if self.lang_path.is_empty() {
            let dir = self.script.parent().filter(|d| !d.as_os_str().is_empty());
            vec![dir.unwrap_or(Path::new(".")).to_path_buf()]
        } else {
            self.lang_path.clone()
        };
        let imports = load_languages(&dirs).map_err(Failure::input)?;
        let p = load_process(&self.script, &imports).map_err(Failure::input)?;
        Ok((imports, p))
    }

    fn write(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
            None => io::stdout()
                .write_all(text.as_bytes())
                .map_err(Failure::input),
        }
    }
}

fn cmd_run(common: &Common, policy: Option<PolicyArg>, seed: Option<u64>, max_steps: u64) -> Result<(), Failure> {
    let policy = match (policy, seed) {
        (Some(PolicyArg::First), _) | (None, None) => Policy::First,
        (Some(PolicyArg::Seeded) | None, Some(s)) => Policy::Seeded(s),
        (Some(PolicyArg::Seeded), None) => return Err(Failure::input("--policy seeded requires --seed")),
    };
    let (_, p) = common.load()?;
    match run(&p, policy, max_steps as usize, common.budget()) {
        Ok(outcome) => common.write(&emit_report(&RunReport::from(&outcome))),
        Err(err) => {
            common.write(&emit_report(&RunReport::from(&*err.partial)))?;
            Err(err.error.into())
        }
    }
}

fn exploration_report(ex: &Exploration) -> String {
    let mut lines = Vec::new();
    for (channel, trace) in &ex.traces {
        let labels: Vec<String> = trace.labels().iter().map(|l| l.to_string()).collect();
        lines.push(json!({"record": "trace", "channel": channel.as_str(), "labels": labels}));
    }
    for state in ex.terminal_states() {
        lines.push(json!({"record": "terminal", "state": state.to_string()}));
    }
    lines.push(json!({
        "record": "summary",
        "states": ex.states.len(),
        "terminal": ex.terminal.len(),
        "traces": ex.traces.len(),
        "cut": ex.cut.len(),
    }));
    lines.iter().map(|l| format!("{l}\n")).collect()
}

fn cmd_explore(common: &Common, repl_bound: usize, depth: u64, max_states: u64) -> Result<(), Failure> {
    let (_, p) = common.load()?;
    let limits = ExploreLimits {
        max_depth: depth as usize,
        max_states: max_states as usize,
        repl_bound,
        budget: common.budget(),
    };
    let ex = explore(&p, limits)?;
    common.write(&exploration_report(&ex))
}

/// Every `exec` in `p`, including those under prefixes.
fn execs(p: &Process, out: &mut Vec<(LangExpr, langnsend::lang::Term)>) {
    match p {
        Process::Exec(e) => out.push((e.lang.clone(), e.program.clone())),
        Process::Nil => {}
        Process::Par(a, b) | Process::Choice(a, b) => {
            execs(a, out);
            execs(b, out);
        }
        Process::Restrict(_, q) | Process::Replicate(q) => execs(q, out),
        Process::Input { cont, .. }
        | Process::Output { cont, .. }
        | Process::LangInput { cont, .. }
        | Process::LangOutput { cont, .. }
        | Process::TraceInput { cont, .. }
        | Process::TraceOutput { cont, .. } => execs(cont, out),
        Process::IsInTrace { then, otherwise, .. } => {
            execs(then, out);
            execs(otherwise, out);
        }
    }
}

fn cmd_check(common: &Common) -> Result<(), Failure> {
    let (_, p) = common.load()?;
    let mut problems = Vec::new();
    let (langs, traces) = p.free_vars();
    problems.extend(langs.iter().map(|l| format!("free language variable `{l}`")));
    problems.extend(traces.iter().map(|t| format!("free trace variable `{t}`")));
    let mut found = Vec::new();
    execs(&p, &mut found);
    let mut notes = BTreeSet::new();
    for (lang, program) in found {
        let mut vars = BTreeSet::new();
        lang.free_vars(&mut vars);
        if !vars.is_empty() {
            notes.insert(format!("{program}: language received at run time, conformance not checked"));
            continue;
        }
        let lang = lan_star(&lang).map_err(Failure::from)?.0;
        let conforms = lang
            .grammar()
            .iter()
            .any(|g| check_term(&lang, &g.category, &program).unwrap_or(false));
        if !conforms {
            problems.push(format!("{program} is not generated by the grammar of {}", lang.label()));
        }
    }
    for n in &notes {
        eprintln!("note: {n}");
    }
    if problems.is_empty() {
        common.write(&format!("{}: ok\n", common.script.display()))
    } else {
        Err(Failure::input(problems.join("\n")))
    }
}

fn cmd_examples(name: Option<String>, write: Option<PathBuf>) -> Result<(), Failure> {
    if let Some(dir) = write {
        fs::create_dir_all(&dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
        for (file, text) in CORPUS {
            let path = dir.join(file);
            fs::write(&path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        }
        return Ok(());
    }
    match name {
        Some(n) => match CORPUS.iter().find(|(f, _)| *f == n || f.split('.').next() == Some(n.as_str())) {
            Some((_, text)) => print!("{text}"),
            None => return Err(Failure::input(format!("no example named `{n}`"))),
        },
        None => CORPUS.iter().for_each(|(f, _)| println!("{f}")),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            common,
            policy,
            seed,
            max_steps,
        } => cmd_run(&common, policy, seed, max_steps),
        Command::Explore {
            common,
            repl_bound,
            explore_depth,
            max_states,
        } => cmd_explore(&common, repl_bound, explore_depth, max_states),
        Command::Check { common } => cmd_check(&common),
        Command::Examples { name, write } => cmd_examples(name, write),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(f) => {
            eprintln!("lns: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
