//! `signalopt` command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (invalid instance, parse error,
//! illegal plan, unsatisfiable), 2 usage or I/O error, 3 search timed out
//! without finding any plan.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use signalopt::flow::simulate;
use signalopt::ingest::{emit_baseline, emit_facts, parse_baseline_with, parse_instance_with, ParseOptions};
use signalopt::model::{validate, Instance, LinkId};
use signalopt::objective::Objective;
use signalopt::pcu::{pcu_from_decimal, Pcu};
use signalopt::search::{
    beam_search, branch_and_bound_with, enumerate_all, Mode, SearchError, SearchProblem, SearchResult,
    Status,
};
use signalopt::timeline::{identity_plan, stability_violations, timeline_csv, SignalPlan};

#[derive(Parser)]
#[command(name = "signalopt", version, about = "Traffic signal plan simulation and optimisation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an instance (and optionally a plan against it).
    Check {
        #[command(flatten)]
        input: InputArgs,
        /// Plan JSON to check for k-stability.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Simulate a plan (the identity plan by default) and summarise counters.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Objective to report alongside the counters.
        #[arg(long)]
        objective: Option<String>,
        /// Write the per-tick trace CSV here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Search for a plan.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Write the plan JSON here.
        #[arg(long)]
        plan_out: Option<PathBuf>,
        /// Write the trace CSV of the returned plan here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Write the instance as ground facts; with a plan, append its final
    /// goal counters as pddl_solution/2 facts.
    EmitFacts {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Output file (stdout by default).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-tick signal status CSV of a plan.
    Timeline {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Goal counters over time for the identity plan, an optional given
    /// plan and the plan found by each requested engine.
    PlotData {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Engines to run (repeatable; none by default).
        #[arg(long = "with-engine", value_enum)]
        engines: Vec<Engine>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Instance fact file.
    #[arg(long)]
    instance: PathBuf,
    /// Override the simulation horizon in seconds.
    #[arg(long)]
    horizon: Option<u32>,
    /// Override k-stability for every junction.
    #[arg(long)]
    k: Option<u32>,
    /// Read PCU quantities (in files and in --bound) as decimals.
    #[arg(long)]
    decimal_input: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Engine::Bnb)]
    engine: Engine,
    #[arg(long, value_enum, default_value_t = ModeArg::Optimise)]
    mode: ModeArg,
    /// Minimum final counter of every goal link (scaled integer, or a
    /// decimal with --decimal-input). Defaults to the instance's bound.
    #[arg(long, allow_hyphen_values = true)]
    bound: Option<String>,
    /// Objective, e.g. `max-counter` or `max-counter[a-x-b] > min-counter[c-y-d]`.
    #[arg(long, default_value = "max-counter")]
    objective: String,
    /// Baseline pddl_solution/2 facts the plan must strictly beat.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    beam_width: usize,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Exhaustive,
    Bnb,
    Beam,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Exhaustive => "exhaustive",
            Engine::Bnb => "bnb",
            Engine::Beam => "beam",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Decision,
    Optimise,
}

/// Failure carrying its exit code.
#[derive(Debug)]
enum Failure {
    Domain(String),
    Usage(String),
    Timeout(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Timeout(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Usage(m) | Failure::Timeout(m) => m,
        }
    }
}

fn domain(e: impl fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_to(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("stdout: {e}"))),
    }
}

fn options(input: &InputArgs) -> ParseOptions {
    ParseOptions {
        decimal_input: input.decimal_input,
    }
}

fn load_instance(input: &InputArgs) -> Result<Instance, Failure> {
    let text = read(&input.instance)?;
    let parsed = parse_instance_with(&text, options(input))
        .map_err(|e| Failure::Domain(format!("{}: {e}", input.instance.display())))?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", input.instance.display());
    }
    let mut inst = parsed.instance;
    if let Some(h) = input.horizon {
        inst.horizon = h;
    }
    if let Some(k) = input.k {
        inst.set_stability(k);
    }
    Ok(inst)
}

/// Loads an instance that must pass validation.
fn load_valid_instance(input: &InputArgs) -> Result<Instance, Failure> {
    let inst = load_instance(input)?;
    let violations = validate(&inst);
    if violations.is_empty() {
        return Ok(inst);
    }
    let list: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
    Err(Failure::Domain(format!("invalid instance:\n{}", list.join("\n"))))
}

fn load_plan(path: Option<&Path>, inst: &Instance) -> Result<SignalPlan, Failure> {
    match path {
        Some(p) => SignalPlan::from_json(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => identity_plan(inst).map_err(domain),
    }
}

/// Loads a plan and rejects it unless it fits the instance and is k-stable.
fn load_legal_plan(path: Option<&Path>, inst: &Instance) -> Result<SignalPlan, Failure> {
    let plan = load_plan(path, inst)?;
    let violations = stability_violations(inst, &plan).map_err(domain)?;
    if let Some(v) = violations.first() {
        return Err(Failure::Domain(format!("illegal plan: {v}")));
    }
    Ok(plan)
}

fn pcu_text(p: Pcu) -> String {
    format!("{} ({})", p.scaled(), p)
}

fn print_counters(counters: &BTreeMap<LinkId, Pcu>) {
    for (l, &c) in counters {
        println!("counter {l} {}", pcu_text(c));
    }
    let total = counters
        .values()
        .try_fold(Pcu::ZERO, |acc, &c| acc.checked_add(c));
    if let Some(total) = total {
        println!("total {}", pcu_text(total));
    }
}

fn cmd_check(input: &InputArgs, plan: Option<&Path>) -> Outcome {
    let inst = load_instance(input)?;
    let violations = validate(&inst);
    for v in &violations {
        println!("violation: {v}");
    }
    if !violations.is_empty() {
        return Err(Failure::Domain(format!("{} violation(s)", violations.len())));
    }
    if let Some(path) = plan {
        load_legal_plan(Some(path), &inst)?;
        println!("plan ok");
    }
    println!(
        "ok: {} junction(s), {} link(s), {} goal link(s), horizon {}",
        inst.junctions.len(),
        inst.links.len(),
        inst.goal_links().count(),
        inst.horizon
    );
    Ok(())
}

fn cmd_simulate(input: &InputArgs, plan: Option<&Path>, objective: Option<&str>, trace_out: Option<&Path>) -> Outcome {
    let inst = load_valid_instance(input)?;
    let plan = load_legal_plan(plan, &inst)?;
    let trace = simulate(&inst, &plan).map_err(domain)?;
    if let Some(path) = trace_out {
        let file = fs::File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        trace
            .write_csv(io::BufWriter::new(file))
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    println!("horizon {}", inst.horizon);
    print_counters(&trace.final_counters());
    if let Some(text) = objective {
        let objective: Objective = text.parse().map_err(|e| Failure::Usage(format!("--objective: {e}")))?;
        let net = signalopt::Network::compile(&inst).map_err(domain)?;
        let v = signalopt::flow::objective_value(&net, &trace, &objective).map_err(domain)?;
        println!("objective {v}");
    }
    Ok(())
}

fn build_problem(input: &InputArgs, search: &SearchArgs, inst: Instance) -> Result<SearchProblem, Failure> {
    let objective: Objective = search
        .objective
        .parse()
        .map_err(|e| Failure::Usage(format!("--objective: {e}")))?;
    let mut problem = SearchProblem::new(inst, objective).map_err(domain)?;
    if let Some(b) = &search.bound {
        let bound = if input.decimal_input {
            pcu_from_decimal(b).map_err(|e| Failure::Usage(format!("--bound: {e}")))?
        } else {
            Pcu::from_scaled(b.parse().map_err(|e| Failure::Usage(format!("--bound: {e}")))?)
        };
        problem = problem.with_bound(bound);
    }
    if let Some(path) = &search.baseline {
        let (map, warnings) = parse_baseline_with(&read(path)?, &problem.instance, options(input))
            .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
        for w in &warnings {
            eprintln!("warning: {}: {w}", path.display());
        }
        problem = problem.with_baseline(map).map_err(domain)?;
    }
    if let Some(t) = search.timeout {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Usage("--timeout must be a positive number of seconds".into()));
        }
        problem = problem.with_timeout(Some(Duration::from_secs_f64(t)));
    }
    let mode = match search.mode {
        ModeArg::Decision => Mode::Decision,
        ModeArg::Optimise => Mode::Optimise,
    };
    Ok(problem.with_mode(mode))
}

fn run_engine(problem: &SearchProblem, engine: Engine, width: usize, verbose: bool) -> Result<SearchResult, Failure> {
    let result = match engine {
        Engine::Exhaustive => enumerate_all(problem),
        Engine::Bnb => branch_and_bound_with(problem, |inc| {
            if verbose {
                eprintln!(
                    "incumbent {} after {} node(s), {} ms",
                    inc.value,
                    inc.nodes_explored,
                    inc.elapsed.as_millis()
                );
            }
        }),
        Engine::Beam => beam_search(problem, width),
    };
    result.map_err(|e| match e {
        SearchError::ZeroWidth | SearchError::PlanSpaceTooLarge { .. } => Failure::Usage(e.to_string()),
        e => domain(e),
    })
}

fn cmd_solve(input: &InputArgs, search: &SearchArgs, plan_out: Option<&Path>, trace_out: Option<&Path>) -> Outcome {
    let inst = load_valid_instance(input)?;
    let problem = build_problem(input, search, inst)?;
    let result = run_engine(&problem, search.engine, search.beam_width, true)?;
    println!("{}", result.to_json());
    eprintln!(
        "status {} engine {} nodes {} plans {} elapsed {} ms",
        result.status,
        search.engine,
        result.nodes_explored,
        result.plans_evaluated,
        result.elapsed.as_millis()
    );
    if let Some(v) = &result.value {
        eprintln!("value {v}");
    }
    if let Some(plan) = &result.plan {
        if let Some(path) = plan_out {
            write_to(Some(path), &plan.to_json())?;
        }
        if let Some(path) = trace_out {
            let trace = simulate(&problem.instance, plan).map_err(domain)?;
            let file = fs::File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            trace
                .write_csv(io::BufWriter::new(file))
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
    }
    match result.status {
        Status::Satisfied | Status::Optimal | Status::BestFound => Ok(()),
        Status::Unsatisfiable => Err(Failure::Domain("unsatisfiable".into())),
        Status::TimeoutNoSolution => Err(Failure::Timeout("timed out before finding a plan".into())),
    }
}

fn cmd_emit_facts(input: &InputArgs, plan: Option<&Path>, out: Option<&Path>) -> Outcome {
    let inst = load_instance(input)?;
    let mut text = emit_facts(&inst);
    if plan.is_some() {
        let plan = load_legal_plan(plan, &inst)?;
        let trace = simulate(&inst, &plan).map_err(domain)?;
        text.push_str(&emit_baseline(&trace.final_counters()));
    }
    write_to(out, &text)
}

fn cmd_timeline(input: &InputArgs, plan: Option<&Path>, out: Option<&Path>) -> Outcome {
    let inst = load_valid_instance(input)?;
    let plan = load_plan(plan, &inst)?;
    write_to(out, &timeline_csv(&inst, &plan).map_err(domain)?)
}

fn cmd_plot_data(
    input: &InputArgs,
    search: &SearchArgs,
    plan: Option<&Path>,
    engines: &[Engine],
    out: Option<&Path>,
) -> Outcome {
    let inst = load_valid_instance(input)?;
    let mut series: Vec<(String, SignalPlan)> = vec![("identity".into(), identity_plan(&inst).map_err(domain)?)];
    if plan.is_some() {
        series.push(("plan".into(), load_legal_plan(plan, &inst)?));
    }
    if !engines.is_empty() {
        let problem = build_problem(input, search, inst.clone())?;
        for &engine in engines {
            let r = run_engine(&problem, engine, search.beam_width, false)?;
            match r.plan {
                Some(p) => series.push((engine.to_string(), p)),
                None => eprintln!("{engine}: {}", r.status),
            }
        }
    }
    let mut text = String::from("series,time,link,counter,counter_pcu\n");
    for (name, plan) in &series {
        let trace = simulate(&inst, plan).map_err(domain)?;
        for s in &trace.states {
            for (l, c) in trace.links.iter().zip(&s.counter) {
                if let Some(c) = c {
                    text.push_str(&format!("{name},{},{l},{},{c}\n", s.t, c.scaled()));
                }
            }
        }
    }
    write_to(out, &text)
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Check { input, plan } => cmd_check(input, plan.as_deref()),
        Command::Simulate {
            input,
            plan,
            objective,
            trace_out,
        } => cmd_simulate(input, plan.as_deref(), objective.as_deref(), trace_out.as_deref()),
        Command::Solve {
            input,
            search,
            plan_out,
            trace_out,
        } => cmd_solve(input, search, plan_out.as_deref(), trace_out.as_deref()),
        Command::EmitFacts { input, plan, out } => cmd_emit_facts(input, plan.as_deref(), out.as_deref()),
        Command::Timeline { input, plan, out } => cmd_timeline(input, plan.as_deref(), out.as_deref()),
        Command::PlotData {
            input,
            search,
            plan,
            engines,
            out,
        } => cmd_plot_data(input, search, plan.as_deref(), engines, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
