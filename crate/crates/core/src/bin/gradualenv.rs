//! Command-line surface: run curricula, check transfer/forgetting, analyze
//! complexity ordering, build/minimize/reconstruct machines, export DOT, and
//! play a task interactively over the byte protocol.
//!
//! Exit codes: 0 success, 2 validation error, 3 budget exceeded.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gradualenv::agents::{
    Agent, ConstantAgent, EchoAgent, ExternalAgent, MemorizerAgent, OracleAgent, RandomAgent,
};
use gradualenv::analysis::{curriculum_order_check, export_dot, shared_structure, DotOptions};
use gradualenv::error::HarnessError;
use gradualenv::harness::{forgetting_check, gradual_learning_check, run_curriculum, Budget};
use gradualenv::mechanics::{load_machine_file, save_machine_file, MachineFile};
use gradualenv::reconstruct::{compose_task, reconstruct_from_sequence, transducer_from_task};
use gradualenv::stream::{Reward, Symbol};
use gradualenv::task::{
    builtin_task, builtin_task_ids, default_curriculum, load_curriculum, sample_instance,
    CurriculumSpec, TaskSpec, DEFAULT_CURRICULUM_SEED,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "gradualenv", version, about = "Curriculum environment engine and complexity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Args)]
struct CurriculumArgs {
    /// Curriculum config file (JSON); defaults to the bundled curriculum.
    #[arg(long)]
    curriculum: Option<PathBuf>,
    /// Built-in task ids, comma-separated; overrides the bundled task list.
    #[arg(long, value_delimiter = ',')]
    tasks: Vec<String>,
    /// Instance-sampling seed (overrides the config file's).
    #[arg(long)]
    seed: Option<u64>,
    /// Consecutive instance successes required per task.
    #[arg(long)]
    n_s: Option<u64>,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    budget_steps: Option<u64>,
    #[arg(long)]
    budget_seconds: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an agent through a curriculum and report step counts.
    Run {
        /// Agent: random, echo, memorizer, oracle, constant:<byte>,
        /// external:<command line>.
        #[arg(long, default_value = "memorizer")]
        agent: String,
        #[command(flatten)]
        curriculum: CurriculumArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the structured report here as well.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Gradual-learning check: pretraining must strictly reduce probe cost.
    CheckGradual {
        #[arg(long, default_value = "memorizer")]
        agent: String,
        /// Pretraining task ids, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        pretrain: Vec<String>,
        /// Probe task id.
        #[arg(long, required = true)]
        probe: String,
        #[arg(long, default_value_t = 2)]
        n_s: u64,
        #[arg(long, default_value_t = DEFAULT_CURRICULUM_SEED)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Forgetting check over a three-task sequence T1, T2, T3.
    CheckForgetting {
        #[arg(long, default_value = "memorizer")]
        agent: String,
        /// Exactly three task ids, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        tasks: Vec<String>,
        /// Slack constant c of the inequality rho_after <= c * rho_before.
        #[arg(long, default_value_t = 1.2)]
        constant: f64,
        #[arg(long, default_value_t = 2)]
        n_s: u64,
        #[arg(long, default_value_t = DEFAULT_CURRICULUM_SEED)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Complexity report: per-task C_0 / C_mu and ordering verdict.
    Analyze {
        #[command(flatten)]
        curriculum: CurriculumArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build the (minimal) transducer model of one task.
    Model {
        /// Built-in task id.
        #[arg(long, required = true)]
        task: String,
        /// Instance seeds cycled by the model, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = [DEFAULT_CURRICULUM_SEED, DEFAULT_CURRICULUM_SEED + 1])]
        seeds: Vec<u64>,
        /// Skip minimization, emit the raw joint chain.
        #[arg(long)]
        raw: bool,
        /// Output machine file (JSON); stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Reconstruct a machine from a raw byte-sequence file.
    Reconstruct {
        /// File whose bytes are the observed symbol sequence.
        #[arg(long, required = true)]
        input: PathBuf,
        /// History length.
        #[arg(long, default_value_t = 4)]
        l_max: usize,
        /// Significance level of the state-splitting test.
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a machine file as Graphviz DOT.
    Export {
        #[arg(long, required = true)]
        input: PathBuf,
        /// Hide edges carrying negative reward.
        #[arg(long)]
        hide_negative: bool,
        /// Collapse deterministic description chains.
        #[arg(long)]
        merge_chains: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Shared-structure score between the models of two tasks.
    Compare {
        /// Exactly two task ids, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        tasks: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [DEFAULT_CURRICULUM_SEED, DEFAULT_CURRICULUM_SEED + 1])]
        seeds: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Play one task interactively over the byte protocol.
    Play {
        #[arg(long, default_value = "micro_map_a21")]
        task: String,
        #[arg(long, default_value_t = DEFAULT_CURRICULUM_SEED)]
        seed: u64,
    },
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Budget(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn validation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(CliError::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_BUDGET)
        }
    }
}

fn make_agent(name: &str, seed: u64) -> Result<Box<dyn Agent>, CliError> {
    if let Some(byte) = name.strip_prefix("constant:") {
        let b: u8 = parse_byte(byte)?;
        return Ok(Box::new(ConstantAgent::new(b)));
    }
    if let Some(command) = name.strip_prefix("external:") {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| CliError::Validation("external agent needs a command".into()))?;
        let args: Vec<String> = parts.map(str::to_string).collect();
        return Ok(Box::new(ExternalAgent::spawn(program, &args)?));
    }
    match name {
        "random" => Ok(Box::new(RandomAgent::new(seed))),
        "echo" => Ok(Box::new(EchoAgent)),
        "memorizer" => Ok(Box::new(MemorizerAgent::new(seed))),
        "oracle" => Ok(Box::new(OracleAgent::new())),
        other => Err(CliError::Validation(format!(
            "unknown agent {other:?} (expected random, echo, memorizer, oracle, constant:<byte>, external:<command>)"
        ))),
    }
}

fn parse_byte(text: &str) -> Result<u8, CliError> {
    let parsed = if let Some(hex) = text.strip_prefix("0x") {
        u8::from_str_radix(hex, 16).ok()
    } else if text.len() == 1 && text.is_ascii() {
        Some(text.as_bytes()[0])
    } else {
        text.parse().ok()
    };
    parsed.ok_or_else(|| CliError::Validation(format!("not a byte: {text:?}")))
}

fn resolve_curriculum(args: &CurriculumArgs) -> Result<CurriculumSpec, CliError> {
    let mut spec = if let Some(path) = &args.curriculum {
        load_curriculum(path).map_err(validation)?
    } else if !args.tasks.is_empty() {
        CurriculumSpec {
            tasks: args
                .tasks
                .iter()
                .map(|id| resolve_task(id))
                .collect::<Result<_, _>>()?,
            n_s: 2,
            seed: DEFAULT_CURRICULUM_SEED,
        }
    } else {
        default_curriculum(DEFAULT_CURRICULUM_SEED)
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(n_s) = args.n_s {
        if n_s == 0 {
            return Err(CliError::Validation("n_s must be positive".into()));
        }
        spec.n_s = n_s;
    }
    Ok(spec)
}

fn resolve_task(id: &str) -> Result<TaskSpec, CliError> {
    builtin_task(id).ok_or_else(|| {
        CliError::Validation(format!(
            "unknown task {id:?} (built-ins: {})",
            builtin_task_ids().join(", ")
        ))
    })
}

fn budget_of(args: &BudgetArgs) -> Budget {
    Budget {
        max_steps: args.budget_steps,
        max_seconds: args.budget_seconds,
    }
}

fn emit(
    format: Format,
    output: Option<&PathBuf>,
    structured: &impl serde::Serialize,
    text: &str,
) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(structured).map_err(validation)?;
    match format {
        Format::Text => println!("{text}"),
        Format::Structured => println!("{json}"),
    }
    if let Some(path) = output {
        std::fs::write(path, json).map_err(validation)?;
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            agent,
            curriculum,
            budget,
            format,
            output,
        } => {
            let spec = resolve_curriculum(&curriculum)?;
            let mut runner = make_agent(&agent, spec.seed)?;
            let result = run_curriculum(runner.as_mut(), &spec, spec.n_s, budget_of(&budget))?;

            #[derive(serde::Serialize)]
            struct RunReport<'a> {
                agent: &'a str,
                seed: u64,
                n_s: u64,
                total_steps: u64,
                per_task: &'a [gradualenv::harness::TaskRunStats],
            }
            let report = RunReport {
                agent: &agent,
                seed: spec.seed,
                n_s: spec.n_s,
                total_steps: result.total_steps,
                per_task: &result.per_task,
            };
            let mut text = format!(
                "agent {} completed the curriculum in {} steps (seed {}, N_s {})",
                agent, result.total_steps, spec.seed, spec.n_s
            );
            for t in &result.per_task {
                text.push_str(&format!(
                    "\n  {:24} {:>4} instances attempted, {:>4} successful",
                    t.task_id, t.instances_attempted, t.instances_successful
                ));
            }
            emit(format, output.as_ref(), &report, &text)
        }
        Command::CheckGradual {
            agent,
            pretrain,
            probe,
            n_s,
            seed,
            budget,
            format,
        } => {
            let pretrain: Vec<TaskSpec> = pretrain
                .iter()
                .map(|id| resolve_task(id))
                .collect::<Result<_, _>>()?;
            let probe = resolve_task(&probe)?;
            let factory = || make_agent(&agent, seed).expect("agent was validated");
            make_agent(&agent, seed)?; // validate before the check clones it
            let report = gradual_learning_check(
                &factory,
                &pretrain,
                &probe,
                n_s,
                seed,
                budget_of(&budget),
            )?;
            let text = format!(
                "gradual learning {}: primed rho = {}, fresh rho = {}",
                if report.passed { "PASS" } else { "FAIL" },
                report.rho_primed,
                report.rho_fresh
            );
            emit(format, None, &report, &text)
        }
        Command::CheckForgetting {
            agent,
            tasks,
            constant,
            n_s,
            seed,
            budget,
            format,
        } => {
            if tasks.len() != 3 {
                return Err(CliError::Validation(format!(
                    "check-forgetting needs exactly 3 tasks, got {}",
                    tasks.len()
                )));
            }
            if constant <= 0.0 {
                return Err(CliError::Validation("constant must be positive".into()));
            }
            let t1 = resolve_task(&tasks[0])?;
            let t2 = resolve_task(&tasks[1])?;
            let t3 = resolve_task(&tasks[2])?;
            let factory = || make_agent(&agent, seed).expect("agent was validated");
            make_agent(&agent, seed)?;
            let report = forgetting_check(
                &factory,
                (&t1, &t2, &t3),
                constant,
                n_s,
                seed,
                budget_of(&budget),
            )?;
            let text = format!(
                "forgetting {}: revisit rho = {} vs baseline {} (c = {})",
                if report.passed { "PASS" } else { "FAIL" },
                report.rho_primed,
                report.rho_fresh,
                constant
            );
            emit(format, None, &report, &text)
        }
        Command::Analyze {
            curriculum,
            format,
            output,
        } => {
            let spec = resolve_curriculum(&curriculum)?;
            let report = curriculum_order_check(&spec);
            let mut text = format!(
                "complexity ordering {}",
                if report.order_ok { "OK" } else { "VIOLATED" }
            );
            for t in &report.tasks {
                match (&t.unanalyzed, t.c_mu, t.c0, t.c_bar_mu, t.states) {
                    (None, Some(c_mu), Some(c0), Some(c_bar), Some(states)) => {
                        text.push_str(&format!(
                            "\n  {:24} |S| = {:>3}  C_0 = {:>6.3}  C_mu = {:>6.3}  C-bar_mu = {:>6.3}",
                            t.task_id, states, c0, c_mu, c_bar
                        ));
                    }
                    _ => {
                        text.push_str(&format!(
                            "\n  {:24} unanalyzed: {}",
                            t.task_id,
                            t.unanalyzed.as_deref().unwrap_or("unknown")
                        ));
                    }
                }
            }
            for (a, b) in &report.violations {
                text.push_str(&format!("\n  violation: {a} > {b}"));
            }
            emit(format, output.as_ref(), &report, &text)
        }
        Command::Model {
            task,
            seeds,
            raw,
            output,
        } => {
            let spec = resolve_task(&task)?;
            let transducer = if raw {
                compose_task(&spec, &seeds)
            } else {
                transducer_from_task(&spec, &seeds)
            }
            .map_err(validation)?;
            let file = MachineFile::Transducer(transducer);
            match output {
                Some(path) => save_machine_file(&file, &path).map_err(validation)?,
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&file).map_err(validation)?
                ),
            }
            Ok(())
        }
        Command::Reconstruct {
            input,
            l_max,
            alpha,
            output,
        } => {
            if l_max == 0 {
                return Err(CliError::Validation("l_max must be at least 1".into()));
            }
            if !(0.0 < alpha && alpha < 1.0) {
                return Err(CliError::Validation("alpha must be in (0, 1)".into()));
            }
            let seq = std::fs::read(&input).map_err(validation)?;
            let distinct = {
                let mut bytes = seq.clone();
                bytes.sort_unstable();
                bytes.dedup();
                bytes.len()
            };
            let recommended = 10 * distinct.pow(l_max as u32);
            if seq.len() < recommended {
                eprintln!(
                    "warning: {} symbols is below the recommended 10 * {distinct}^{l_max} = {recommended}",
                    seq.len()
                );
            }
            let machine = reconstruct_from_sequence(&seq, l_max, alpha).map_err(validation)?;
            let file = MachineFile::Machine(machine);
            match output {
                Some(path) => save_machine_file(&file, &path).map_err(validation)?,
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&file).map_err(validation)?
                ),
            }
            Ok(())
        }
        Command::Export {
            input,
            hide_negative,
            merge_chains,
            output,
        } => {
            let file = load_machine_file(&input).map_err(validation)?;
            let dot = export_dot(
                &file,
                DotOptions {
                    hide_negative,
                    merge_chains,
                },
            );
            match output {
                Some(path) => std::fs::write(path, dot).map_err(validation)?,
                None => print!("{dot}"),
            }
            Ok(())
        }
        Command::Compare {
            tasks,
            seeds,
            format,
        } => {
            if tasks.len() != 2 {
                return Err(CliError::Validation(format!(
                    "compare needs exactly 2 tasks, got {}",
                    tasks.len()
                )));
            }
            let a = transducer_from_task(&resolve_task(&tasks[0])?, &seeds).map_err(validation)?;
            let b = transducer_from_task(&resolve_task(&tasks[1])?, &seeds).map_err(validation)?;
            let mut score = shared_structure(&a, &b);
            score.pair = (tasks[0].clone(), tasks[1].clone());
            let text = format!(
                "shared structure {} vs {}: {:.4} ({}/{} edges, {})",
                score.pair.0,
                score.pair.1,
                score.score,
                score.matched_edges,
                score.max_edges,
                if score.exact { "exact" } else { "approximate" }
            );
            emit(format, None, &score, &text)
        }
        Command::Play { task, seed } => play(&task, seed),
    }
}

fn play(task_id: &str, seed: u64) -> Result<(), CliError> {
    let task = resolve_task(task_id)?;
    let mut instance = sample_instance(&task, seed);
    let r_star = task.req_reward;
    println!(
        "playing {task_id} (seed {seed}): earn {r_star} consecutive +1 rewards within {} steps (hard limit {})",
        instance.soft_limit(),
        instance.hard_limit()
    );
    println!("enter one character, 0x<hex>, or a decimal byte per turn; Ctrl-D quits\n");

    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    let mut streak: u64 = 0;
    let mut t: u64 = 0;

    let (_, mut obs) = instance.env_step(None).map_err(validation)?;
    loop {
        println!("observation: {} (byte {})", printable(obs.0), obs.0);
        print!("action> ");
        std::io::stdout().flush().ok();
        let Some(line) = lines.next() else {
            println!("\nbye");
            return Ok(());
        };
        let line = line.map_err(validation)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let action = match parse_byte(trimmed) {
            Ok(b) => b,
            Err(e) => {
                let CliError::Validation(msg) = e else { unreachable!() };
                println!("{msg}");
                continue;
            }
        };
        let (reward, o) = instance.env_step(Some(Symbol(action))).map_err(validation)?;
        t += 1;
        match reward {
            Reward::Positive => streak += 1,
            Reward::Negative => streak = 0,
            Reward::Zero => {}
        }
        println!(
            "reward: {:>2}   streak: {streak}/{r_star}   step {t}/{}",
            reward.as_i8(),
            instance.hard_limit()
        );
        obs = o;
        if streak == r_star {
            let verdict = if t <= instance.soft_limit() {
                "within the soft limit — success"
            } else {
                "over the soft limit"
            };
            println!("solved in {t} steps, {verdict}");
            return Ok(());
        }
        if t == instance.hard_limit() {
            println!("hard limit reached — instance over");
            return Ok(());
        }
    }
}

fn printable(b: u8) -> String {
    if b.is_ascii_graphic() || b == b' ' {
        format!("{:?}", b as char)
    } else {
        format!("0x{b:02X}")
    }
}
