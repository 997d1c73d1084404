//! Command-line front end.
//!
//! Subcommands: `product`, `bscc`, `evaluate`, `certify`, `mc-return`,
//! `td`, `demo example1`, and `gen random`. Model sources are file paths or
//! `builtin:<name>` references. `product` and `gen random` emit model
//! documents (consumable by every other subcommand); the remaining
//! subcommands emit reports that embed the tool version and the run
//! configuration. `--out -` writes to standard output.
//!
//! Exit codes: 0 on success, 2 on input errors (unreadable or invalid
//! documents, unknown builtins, bad references), 3 on precondition errors
//! (discount constraints, method/chain mismatches), 1 on internal defects.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::bellman::{
    build_system, certify, gershgorin_bound, solve_accepting, solve_constrained, solve_discounted,
    BellmanError, Solution, SurrogateReward,
};
use crate::builtin;
use crate::chain::{
    class_counts, decompose, induce_chain, BsccPartition, ChainError, InducedChain,
};
use crate::generator::{generate_chain, unique_policy, ChainGenConfig};
use crate::model::{
    parse_model, parse_policy, serialize_mdp, LabeledMdp, ModelError, ParsedModel, Policy,
};
use crate::oracles::{mc_return, EstimatorMode, OracleError};
use crate::product::{build_product, ProductError};
use crate::td::{pathology_demo, td_evaluate, TdConfig, ValueInit};

/// Environment variable consulted for the default seed; any `--seed` flag
/// overrides it.
pub const SEED_ENV_VAR: &str = "BUCHI_EVAL_SEED";

const TOOL_NAME: &str = "buchi-eval";
const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
enum CliError {
    Input(String),
    Precondition(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Internal(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Precondition(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ProductError> for CliError {
    fn from(e: ProductError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<BellmanError> for CliError {
    fn from(e: BellmanError) -> Self {
        match e {
            BellmanError::SingularSystem(_) => CliError::Internal(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = TOOL_NAME,
    version = TOOL_VERSION,
    about = "Policy evaluation and Bellman-uniqueness certification for Büchi objectives on MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the product of a labeled MDP and an LDBA.
    Product {
        /// MDP document (path or builtin:<name>).
        #[arg(long)]
        mdp: String,
        /// LDBA document (path or builtin:<name>).
        #[arg(long)]
        ldba: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Decompose the induced chain into SCCs and classify its states.
    Bscc {
        #[arg(long)]
        model: String,
        /// Policy document; defaults to the unique policy when every state
        /// has exactly one action.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long, value_parser = ["json", "table"], default_value = "json")]
        format: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Solve the Bellman equation for a policy and emit the value vector.
    Evaluate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "gamma-b")]
        gamma_b: f64,
        #[arg(long, value_parser = ["auto", "discounted", "accepting", "constrained"], default_value = "auto")]
        method: String,
        #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
        format: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Certify whether the Bellman equation has a unique solution.
    Certify {
        #[arg(long)]
        model: String,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "gamma-b")]
        gamma_b: f64,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Monte Carlo return estimate from one state.
    #[command(name = "mc-return")]
    McReturn {
        #[arg(long)]
        model: String,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "gamma-b")]
        gamma_b: f64,
        /// Start state id.
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Defaults to $BUCHI_EVAL_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// `bscc-aware` or `cap:<K>`.
        #[arg(long, default_value = "bscc-aware")]
        mode: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Tabular TD(0) policy evaluation.
    Td(TdArgs),
    /// Scripted demonstrations.
    Demo {
        #[command(subcommand)]
        which: DemoCommand,
    },
    /// Model generators.
    Gen {
        #[command(subcommand)]
        which: GenCommand,
    },
}

#[derive(Args, Debug)]
struct TdArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    gamma: f64,
    #[arg(long = "gamma-b")]
    gamma_b: f64,
    #[arg(long, default_value_t = 50_000)]
    episodes: usize,
    #[arg(long = "max-steps", default_value_t = 100)]
    max_steps: usize,
    /// Initial step size of the schedule a0 / (1 + t/tau).
    #[arg(long, default_value_t = 0.5)]
    a0: f64,
    #[arg(long, default_value_t = 1000.0)]
    tau: f64,
    /// Defaults to $BUCHI_EVAL_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// `zeros` or `const:<c>`.
    #[arg(long, default_value = "zeros")]
    init: String,
    /// Per-state initial value `state=value`; overrides --init there.
    #[arg(long = "init-state")]
    init_state: Vec<String>,
    /// Freeze a state's value for the whole run, `state=value`.
    #[arg(long = "pin")]
    pin: Vec<String>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Subcommand, Debug)]
enum DemoCommand {
    /// The three-state branching example with its spurious fixed points.
    Example1 {
        #[arg(long = "gamma-b", default_value_t = 0.5)]
        gamma_b: f64,
        #[arg(long = "spurious-c", default_value_t = 2.0)]
        spurious_c: f64,
        /// Defaults to $BUCHI_EVAL_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "-")]
        out: String,
    },
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// Seeded random chain with planted BSCC structure.
    Random {
        #[arg(long)]
        states: usize,
        /// Defaults to $BUCHI_EVAL_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "accepting-bsccs", default_value_t = 1)]
        accepting_bsccs: usize,
        #[arg(long = "rejecting-bsccs", default_value_t = 0)]
        rejecting_bsccs: usize,
        /// Total accepting states (defaults to a seeded choice).
        #[arg(long)]
        accepting: Option<usize>,
        #[arg(long, default_value = "-")]
        out: String,
    },
}

/// Parses arguments and runs one command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Product { mdp, ldba, out } => cmd_product(&mdp, &ldba, &out),
        Command::Bscc {
            model,
            policy,
            format,
            out,
        } => cmd_bscc(&model, policy.as_deref(), &format, &out),
        Command::Evaluate {
            model,
            policy,
            gamma,
            gamma_b,
            method,
            format,
            out,
        } => cmd_evaluate(
            &model,
            policy.as_deref(),
            gamma,
            gamma_b,
            &method,
            &format,
            &out,
        ),
        Command::Certify {
            model,
            policy,
            gamma,
            gamma_b,
            out,
        } => cmd_certify(&model, policy.as_deref(), gamma, gamma_b, &out),
        Command::McReturn {
            model,
            policy,
            gamma,
            gamma_b,
            state,
            samples,
            seed,
            mode,
            out,
        } => cmd_mc_return(
            &model,
            policy.as_deref(),
            gamma,
            gamma_b,
            &state,
            samples,
            resolve_seed(seed),
            &mode,
            &out,
        ),
        Command::Td(args) => cmd_td(args),
        Command::Demo { which } => match which {
            DemoCommand::Example1 {
                gamma_b,
                spurious_c,
                seed,
                out,
            } => cmd_demo_example1(gamma_b, spurious_c, resolve_seed(seed), &out),
        },
        Command::Gen { which } => match which {
            GenCommand::Random {
                states,
                seed,
                accepting_bsccs,
                rejecting_bsccs,
                accepting,
                out,
            } => cmd_gen_random(
                states,
                resolve_seed(seed),
                accepting_bsccs,
                rejecting_bsccs,
                accepting,
                &out,
            ),
        },
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    if let Some(s) = flag {
        return s;
    }
    std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn load_source(source: &str) -> Result<String, CliError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return builtin::builtin_document(name)
            .map(str::to_string)
            .ok_or_else(|| {
                CliError::Input(format!(
                    "unknown builtin `{name}` (available: {})",
                    builtin::BUILTIN_NAMES.join(", ")
                ))
            });
    }
    fs::read_to_string(source).map_err(|e| CliError::Input(format!("cannot read `{source}`: {e}")))
}

fn load_mdp(source: &str) -> Result<LabeledMdp, CliError> {
    match parse_model(&load_source(source)?)? {
        ParsedModel::Mdp(m) => Ok(m),
        ParsedModel::Ldba(_) => Err(CliError::Input(format!(
            "`{source}` is an LDBA document; this subcommand needs an MDP or product"
        ))),
    }
}

fn load_policy(source: Option<&str>, model: &LabeledMdp) -> Result<Policy, CliError> {
    match source {
        Some(s) => Ok(parse_policy(&load_source(s)?, model)?),
        None => unique_policy(model).ok_or_else(|| {
            CliError::Input("model has states with several actions; pass --policy".to_string())
        }),
    }
}

fn induced(
    source: &str,
    policy: Option<&str>,
) -> Result<(LabeledMdp, Policy, InducedChain), CliError> {
    let model = load_mdp(source)?;
    let pol = load_policy(policy, &model)?;
    let chain = induce_chain(&model, &pol)?;
    Ok((model, pol, chain))
}

fn write_output(out: &str, content: &str) -> Result<(), CliError> {
    if out == "-" {
        let mut stdout = std::io::stdout();
        stdout
            .write_all(content.as_bytes())
            .and_then(|_| stdout.write_all(b"\n"))
            .map_err(|e| CliError::Internal(format!("cannot write to stdout: {e}")))
    } else {
        fs::write(out, format!("{content}\n"))
            .map_err(|e| CliError::Input(format!("cannot write `{out}`: {e}")))
    }
}

fn report(config: Value, result: Value) -> String {
    let doc = json!({
        "tool": { "name": TOOL_NAME, "version": TOOL_VERSION },
        "config": config,
        "result": result,
    });
    serde_json::to_string_pretty(&doc).expect("report serialization cannot fail")
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("value serialization cannot fail")
}

fn cmd_product(mdp_src: &str, ldba_src: &str, out: &str) -> Result<(), CliError> {
    let mdp = load_mdp(mdp_src)?;
    let ldba = match parse_model(&load_source(ldba_src)?)? {
        ParsedModel::Ldba(a) => a,
        ParsedModel::Mdp(_) => {
            return Err(CliError::Input(format!(
                "`{ldba_src}` is not an LDBA document"
            )))
        }
    };
    let product = build_product(&mdp, &ldba)?;
    write_output(out, &serialize_mdp(&product.model))
}

fn partition_value(model: &LabeledMdp, partition: &BsccPartition) -> Value {
    let ids = |states: &[usize]| -> Vec<Value> {
        states
            .iter()
            .map(|&s| Value::String(model.states[s].clone()))
            .collect()
    };
    let sccs: Vec<Value> = partition
        .sccs
        .iter()
        .map(|c| Value::Array(ids(c)))
        .collect();
    let bsccs: Vec<Value> = partition
        .bsccs
        .iter()
        .map(|b| json!({ "states": ids(&b.states), "accepting": b.accepting }))
        .collect();
    let mut classes = Map::new();
    for (s, class) in partition.classes.iter().enumerate() {
        classes.insert(
            model.states[s].clone(),
            Value::String(class.as_str().to_string()),
        );
    }
    json!({
        "sccs": sccs,
        "bsccs": bsccs,
        "classes": Value::Object(classes),
        "counts": to_value(&class_counts(partition)),
    })
}

fn cmd_bscc(
    model_src: &str,
    policy_src: Option<&str>,
    format: &str,
    out: &str,
) -> Result<(), CliError> {
    let (model, _pol, chain) = induced(model_src, policy_src)?;
    let partition = decompose(&chain);
    if format == "table" {
        let mut text = String::new();
        text.push_str(&format!(
            "{:<16} {:>4} {:>5} {:>10} {:>6}\n",
            "id", "scc", "bscc", "accepting", "class"
        ));
        for s in 0..chain.num_states() {
            text.push_str(&format!(
                "{:<16} {:>4} {:>5} {:>10} {:>6}\n",
                model.states[s],
                partition.scc_of[s],
                if partition.in_bscc(s) { "yes" } else { "no" },
                if chain.accepting.contains(&s) {
                    "yes"
                } else {
                    "no"
                },
                partition.classes[s].as_str(),
            ));
        }
        return write_output(out, text.trim_end());
    }
    let config = json!({
        "subcommand": "bscc",
        "model": model_src,
        "policy": policy_src,
        "format": format,
    });
    write_output(out, &report(config, partition_value(&model, &partition)))
}

fn solve_with_method(
    chain: &InducedChain,
    partition: &BsccPartition,
    gamma: f64,
    gamma_b: f64,
    method: &str,
) -> Result<Solution, CliError> {
    let reward = SurrogateReward::new(gamma, gamma_b)?;
    let effective = match method {
        "auto" if gamma < 1.0 => "discounted",
        "auto" => "constrained",
        other => other,
    };
    let solution = match effective {
        "discounted" => {
            let sys = build_system(chain, reward)?;
            solve_discounted(&sys)?
        }
        "accepting" => {
            if gamma < 1.0 {
                return Err(CliError::Precondition(
                    "method `accepting` applies to gamma = 1".into(),
                ));
            }
            solve_accepting(chain, gamma_b)?
        }
        "constrained" => {
            if gamma < 1.0 {
                return Err(CliError::Precondition(
                    "method `constrained` applies to gamma = 1".into(),
                ));
            }
            solve_constrained(chain, partition, gamma_b)?
        }
        other => return Err(CliError::Input(format!("unknown method `{other}`"))),
    };
    Ok(solution)
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn cmd_evaluate(
    model_src: &str,
    policy_src: Option<&str>,
    gamma: f64,
    gamma_b: f64,
    method: &str,
    format: &str,
    out: &str,
) -> Result<(), CliError> {
    let (model, _pol, chain) = induced(model_src, policy_src)?;
    let partition = decompose(&chain);
    let solution = solve_with_method(&chain, &partition, gamma, gamma_b, method)?;

    if format == "csv" {
        let mut text = String::from("state,id,class,value\n");
        for s in 0..chain.num_states() {
            text.push_str(&format!(
                "{},{},{},{}\n",
                s,
                csv_escape(&model.states[s]),
                partition.classes[s].as_str(),
                solution.values[s],
            ));
        }
        return write_output(out, text.trim_end());
    }

    let rows: Vec<Value> = (0..chain.num_states())
        .map(|s| {
            json!({
                "state": s,
                "id": model.states[s],
                "class": partition.classes[s].as_str(),
                "value": solution.values[s],
            })
        })
        .collect();
    let sys = build_system(&chain, SurrogateReward::new(gamma, gamma_b)?)?;
    let config = json!({
        "subcommand": "evaluate",
        "model": model_src,
        "policy": policy_src,
        "gamma": gamma,
        "gamma_b": gamma_b,
        "method": method,
        "format": format,
    });
    let result = json!({
        "method": to_value(&solution.method),
        "residual": solution.residual,
        "gershgorin_bound": gershgorin_bound(&sys),
        "values": rows,
        "counts": to_value(&class_counts(&partition)),
    });
    write_output(out, &report(config, result))
}

fn cmd_certify(
    model_src: &str,
    policy_src: Option<&str>,
    gamma: f64,
    gamma_b: f64,
    out: &str,
) -> Result<(), CliError> {
    let (model, _pol, chain) = induced(model_src, policy_src)?;
    let partition = decompose(&chain);
    let reward = SurrogateReward::new(gamma, gamma_b)?;
    let certificate = certify(&chain, &partition, reward)?;
    let config = json!({
        "subcommand": "certify",
        "model": model_src,
        "policy": policy_src,
        "gamma": gamma,
        "gamma_b": gamma_b,
    });
    let mut result = to_value(&certificate);
    let obj = result
        .as_object_mut()
        .expect("certificate serializes to an object");
    obj.insert("states".into(), to_value(&model.states));
    obj.insert("counts".into(), to_value(&class_counts(&partition)));
    write_output(out, &report(config, result))
}

fn parse_mode(mode: &str) -> Result<EstimatorMode, CliError> {
    if mode == "bscc-aware" {
        return Ok(EstimatorMode::BsccAware);
    }
    if let Some(k) = mode.strip_prefix("cap:") {
        let k: usize = k
            .parse()
            .map_err(|_| CliError::Input(format!("bad horizon in mode `{mode}`")))?;
        return Ok(EstimatorMode::HorizonCap(k));
    }
    Err(CliError::Input(format!(
        "unknown mode `{mode}` (expected `bscc-aware` or `cap:<K>`)"
    )))
}

#[allow(clippy::too_many_arguments)]
fn cmd_mc_return(
    model_src: &str,
    policy_src: Option<&str>,
    gamma: f64,
    gamma_b: f64,
    state: &str,
    samples: usize,
    seed: u64,
    mode: &str,
    out: &str,
) -> Result<(), CliError> {
    if samples == 0 {
        return Err(CliError::Precondition("samples must be at least 1".into()));
    }
    let (model, _pol, chain) = induced(model_src, policy_src)?;
    let partition = decompose(&chain);
    let reward = SurrogateReward::new(gamma, gamma_b)?;
    let start = model
        .state_index(state)
        .ok_or_else(|| CliError::Input(format!("unknown state `{state}`")))?;
    let estimator_mode = parse_mode(mode)?;
    let estimate = mc_return(
        &chain,
        &partition,
        &reward,
        start,
        samples,
        seed,
        estimator_mode,
    )?;
    let config = json!({
        "subcommand": "mc-return",
        "model": model_src,
        "policy": policy_src,
        "gamma": gamma,
        "gamma_b": gamma_b,
        "state": state,
        "samples": samples,
        "seed": seed,
        "mode": mode,
    });
    write_output(out, &report(config, to_value(&estimate)))
}

fn parse_assignment(spec: &str, model: &LabeledMdp) -> Result<(usize, f64), CliError> {
    let (id, value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Input(format!("expected `state=value`, got `{spec}`")))?;
    let s = model
        .state_index(id)
        .ok_or_else(|| CliError::Input(format!("unknown state `{id}` in `{spec}`")))?;
    let v: f64 = value
        .parse()
        .map_err(|_| CliError::Input(format!("bad value in `{spec}`")))?;
    Ok((s, v))
}

fn cmd_td(args: TdArgs) -> Result<(), CliError> {
    let (model, _pol, chain) = induced(&args.model, args.policy.as_deref())?;
    let partition = decompose(&chain);
    let reward = SurrogateReward::new(args.gamma, args.gamma_b)?;

    let base_constant = if args.init == "zeros" {
        None
    } else if let Some(c) = args.init.strip_prefix("const:") {
        let c: f64 = c
            .parse()
            .map_err(|_| CliError::Input(format!("bad constant in `--init {}`", args.init)))?;
        Some(c)
    } else {
        return Err(CliError::Input(format!(
            "unknown init `{}` (expected `zeros` or `const:<c>`)",
            args.init
        )));
    };
    let init = if args.init_state.is_empty() {
        match base_constant {
            None => ValueInit::Zeros,
            Some(c) => ValueInit::Constant(c),
        }
    } else {
        let mut map: BTreeMap<usize, f64> = match base_constant {
            None => BTreeMap::new(),
            Some(c) => (0..model.num_states()).map(|s| (s, c)).collect(),
        };
        for spec in &args.init_state {
            let (s, v) = parse_assignment(spec, &model)?;
            map.insert(s, v);
        }
        ValueInit::PerState(map)
    };

    let mut pinned = BTreeMap::new();
    for spec in &args.pin {
        let (s, v) = parse_assignment(spec, &model)?;
        pinned.insert(s, v);
    }

    let seed = resolve_seed(args.seed);
    let cfg = TdConfig {
        episodes: args.episodes,
        max_steps: args.max_steps,
        a0: args.a0,
        tau: args.tau,
        seed,
        init,
        pinned,
    };
    cfg.validate(chain.num_states())
        .map_err(CliError::Precondition)?;
    let run = td_evaluate(&chain, &partition, &reward, &cfg);

    let rows: Vec<Value> = (0..chain.num_states())
        .map(|s| {
            json!({
                "state": s,
                "id": model.states[s],
                "class": partition.classes[s].as_str(),
                "value": run.values[s],
            })
        })
        .collect();
    let config = json!({
        "subcommand": "td",
        "model": args.model,
        "policy": args.policy,
        "gamma": args.gamma,
        "gamma_b": args.gamma_b,
        "episodes": args.episodes,
        "max_steps": args.max_steps,
        "a0": args.a0,
        "tau": args.tau,
        "seed": seed,
        "init": args.init,
        "init_state": args.init_state,
        "pin": args.pin,
    });
    let result = json!({
        "values": rows,
        "updates": run.updates,
        "min_seen": run.min_seen,
        "max_seen": run.max_seen,
        "error_trace": run.episode_deltas,
    });
    write_output(&args.out, &report(config, result))
}

fn cmd_demo_example1(gamma_b: f64, spurious_c: f64, seed: u64, out: &str) -> Result<(), CliError> {
    if spurious_c == 0.0 {
        return Err(CliError::Precondition(
            "--spurious-c must be nonzero".into(),
        ));
    }
    SurrogateReward::new(1.0, gamma_b)?;
    let report_data = pathology_demo(gamma_b, spurious_c, seed);

    // human-readable synopsis on stderr; the JSON report is the artifact
    eprintln!("three-state branching demo, gamma = 1, gamma_b = {gamma_b}");
    eprintln!(
        "  raw Bellman equation: unique = {}, kernel dimension = {}",
        report_data.unique, report_data.null_space_dim
    );
    eprintln!(
        "  family member (1, 1, {spurious_c}) has residual {:.3e}",
        report_data.family_residual
    );
    eprintln!(
        "  greedy at s1: `{}` under the pinned solve, `{}` under the spurious member",
        report_data.greedy_with_constrained, report_data.greedy_with_spurious
    );
    eprintln!(
        "  TD from the constant-{spurious_c} start finishes at {:?}; V(s3) stayed {}",
        report_data.td_final, report_data.td_final_spurious_state
    );

    let config = json!({
        "subcommand": "demo example1",
        "gamma_b": gamma_b,
        "spurious_c": spurious_c,
        "seed": seed,
    });
    write_output(out, &report(config, to_value(&report_data)))
}

fn cmd_gen_random(
    states: usize,
    seed: u64,
    accepting_bsccs: usize,
    rejecting_bsccs: usize,
    accepting: Option<usize>,
    out: &str,
) -> Result<(), CliError> {
    if states == 0 {
        return Err(CliError::Precondition("--states must be positive".into()));
    }
    if accepting_bsccs + rejecting_bsccs == 0 {
        return Err(CliError::Precondition(
            "plant at least one BSCC (--accepting-bsccs / --rejecting-bsccs)".into(),
        ));
    }
    if states < accepting_bsccs + rejecting_bsccs {
        return Err(CliError::Precondition(format!(
            "{states} states cannot hold {} BSCCs",
            accepting_bsccs + rejecting_bsccs
        )));
    }
    if let Some(k) = accepting {
        if k < accepting_bsccs {
            return Err(CliError::Precondition(
                "--accepting must cover one state per accepting BSCC".into(),
            ));
        }
    }
    let generated = generate_chain(&ChainGenConfig {
        states,
        accepting_bsccs,
        rejecting_bsccs,
        accepting_states: accepting,
        seed,
    });
    write_output(out, &serialize_mdp(&generated.model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_resolution_prefers_flag() {
        assert_eq!(resolve_seed(Some(9)), 9);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(parse_mode("bscc-aware").unwrap(), EstimatorMode::BsccAware);
        assert_eq!(parse_mode("cap:44").unwrap(), EstimatorMode::HorizonCap(44));
        assert!(parse_mode("cap:x").is_err());
        assert!(parse_mode("nope").is_err());
    }

    #[test]
    fn csv_escaping() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("q\"x"), "\"q\"\"x\"");
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(CliError::Precondition("x".into()).exit_code(), 3);
        assert_eq!(CliError::Internal("x".into()).exit_code(), 1);
    }
}
