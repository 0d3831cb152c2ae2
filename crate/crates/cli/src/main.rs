//! `mvnabs`: command-line driver.
//!
//! Exit codes: 0 success or property holds, 1 property refuted, 2 input or usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mvnabs_core::checker::{CheckOptions, ValidityRule};
use mvnabs_core::oracle::{differential_suite_with, SuiteConfig};
use mvnabs_core::{
    abstract_state, abstract_trace_set, build_state_graph, check_asyn_abs_with, check_sync_abstraction,
    enumerate_candidates, export_dot, export_report, oracle_check, parse_mapping, parse_model, AbstractionMapping,
    GlobalState, LassoTrace, Mvn, Semantics, TraceSet,
};

#[derive(Parser)]
#[command(
    name = "mvnabs",
    version,
    about = "Multi-valued network state graphs, traces and abstraction checking"
)]
struct Cli {
    /// Print states as named levels (`CI=1 Cro=2`) instead of digits.
    #[arg(long, global = true)]
    labels: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SemanticsArg {
    #[arg(long, default_value = "async")]
    semantics: Semantics,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model.
    Validate {
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Export the state graph as DOT.
    Graph {
        model: PathBuf,
        #[command(flatten)]
        semantics: SemanticsArg,
        /// Output file; standard output when omitted.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// List attractors.
    ///
    /// JSON keys: semantics, attractors[].{kind, states, terminal, exits}.
    Attractors {
        model: PathBuf,
        #[command(flatten)]
        semantics: SemanticsArg,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate all traces (fails on infinite asynchronous trace sets).
    ///
    /// JSON keys: traces[].{prefix, loop}.
    Traces {
        model: PathBuf,
        #[command(flatten)]
        semantics: SemanticsArg,
        #[arg(long)]
        json: bool,
    },
    /// Apply an abstraction mapping to states or traces.
    Abstract {
        model: PathBuf,
        mapping: PathBuf,
        #[arg(long, conflicts_with = "states", required_unless_present = "states")]
        traces: bool,
        #[arg(long)]
        states: bool,
        #[command(flatten)]
        semantics: SemanticsArg,
        #[arg(long)]
        json: bool,
    },
    /// Write every candidate abstract model as a `.mvn` file.
    Candidates {
        model: PathBuf,
        mapping: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Decide whether the abstract model abstracts the concrete one.
    ///
    /// JSON keys: holds, options, stats, surviving_counts, family, witness, removals.
    Check {
        abstract_model: PathBuf,
        concrete_model: PathBuf,
        mapping: PathBuf,
        /// Print the failure chain, or the surviving step terms.
        #[arg(long)]
        witness: bool,
        #[arg(long)]
        json: bool,
        /// Point-attractor validity rule.
        #[arg(long, default_value = "existential")]
        rule: ValidityRule,
        /// Check synchronous trace inclusion instead.
        #[arg(long)]
        sync: bool,
    },
    /// Decide abstraction by direct trace-set inclusion (finite trace sets only).
    OracleCheck {
        abstract_model: PathBuf,
        concrete_model: PathBuf,
        mapping: PathBuf,
    },
    /// Compare checker and oracle on random instances.
    ///
    /// JSON keys: config, instances, supported, holds, refuted, divergences,
    /// universal_divergences, spot_check_violations, reports.
    Fuzz {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Resample instances until both trace sets are finite.
        #[arg(long)]
        finite_only: bool,
        #[arg(long)]
        json: bool,
    },
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_model(path: &Path) -> anyhow::Result<Mvn> {
    parse_model(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn load_mapping(path: &Path, model: &Mvn) -> anyhow::Result<AbstractionMapping> {
    let mapping = parse_mapping(&read(path)?, model).with_context(|| format!("{}", path.display()))?;
    for i in mapping.non_monotone_entities() {
        eprintln!(
            "warning: mapping of `{}` is not order preserving",
            model.entities[i].name
        );
    }
    Ok(mapping)
}

struct Printer<'a> {
    model: &'a Mvn,
    labels: bool,
}

impl Printer<'_> {
    fn state(&self, s: &GlobalState) -> String {
        if self.labels {
            s.named(self.model)
        } else {
            self.model.state_space().label(s)
        }
    }

    fn states(&self, states: &[GlobalState]) -> String {
        states.iter().map(|s| self.state(s)).collect::<Vec<_>>().join(", ")
    }

    fn trace(&self, t: &LassoTrace) -> String {
        let mut out = format!("<{}", self.states(&t.prefix));
        if !t.cycle.is_empty() {
            if !t.prefix.is_empty() {
                out.push_str(", ");
            }
            out.push_str(&format!("({})^w", self.states(&t.cycle)));
        }
        out.push('>');
        out
    }

    fn trace_set(&self, set: &TraceSet) {
        for t in set.iter() {
            println!("{}", self.trace(t));
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let labels = cli.labels;
    match cli.command {
        Command::Validate { model, json } => {
            let m = load_model(&model)?;
            let diagnostics = m.validate();
            if json {
                println!("{}", export_report(&diagnostics));
            } else {
                for d in &diagnostics {
                    println!("{d}");
                }
            }
            if !diagnostics.is_empty() {
                bail!("{} is not a valid model", model.display());
            }
            if !json {
                println!(
                    "{}: {} entities, {} states",
                    m.name,
                    m.entity_count(),
                    m.state_space_size()
                );
            }
        }
        Command::Graph { model, semantics, dot } => {
            let m = load_model(&model)?;
            let text = export_dot(&build_state_graph(&m, semantics.semantics)?);
            match dot {
                Some(path) => fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Attractors { model, semantics, json } => {
            let m = load_model(&model)?;
            let set = build_state_graph(&m, semantics.semantics)?.attractors();
            if json {
                println!("{}", export_report(&set));
            } else {
                let p = Printer { model: &m, labels };
                for a in &set.attractors {
                    let kind = format!("{:?}", a.kind).to_lowercase();
                    let note = if a.terminal || semantics.semantics == Semantics::Sync {
                        ""
                    } else {
                        " (not terminal)"
                    };
                    println!("{kind}: {{{}}}{note}", p.states(&a.states));
                }
            }
        }
        Command::Traces { model, semantics, json } => {
            let m = load_model(&model)?;
            let set = match semantics.semantics {
                Semantics::Async => mvnabs_core::async_traces(&m)?,
                Semantics::Sync => mvnabs_core::sync_traces(&m)?,
            };
            if json {
                println!("{}", export_report(&set));
            } else {
                Printer { model: &m, labels }.trace_set(&set);
            }
        }
        Command::Abstract {
            model,
            mapping,
            traces: _,
            states,
            semantics,
            json,
        } => {
            let m = load_model(&model)?;
            let phi = load_mapping(&mapping, &m)?;
            let p = Printer { model: &m, labels };
            if states {
                let pairs: Vec<(GlobalState, GlobalState)> = m
                    .state_space()
                    .iter()
                    .map(|s| {
                        let a = abstract_state(&phi, &s);
                        (s, a)
                    })
                    .collect();
                if json {
                    let map: serde_json::Map<String, serde_json::Value> = pairs
                        .iter()
                        .map(|(s, a)| (s.to_string(), serde_json::Value::String(a.to_string())))
                        .collect();
                    println!("{}", export_report(&map));
                } else {
                    for (s, a) in &pairs {
                        println!("{} -> {}", p.state(s), a);
                    }
                }
            } else {
                let set = match semantics.semantics {
                    Semantics::Async => mvnabs_core::async_traces(&m)?,
                    Semantics::Sync => mvnabs_core::sync_traces(&m)?,
                };
                let image = abstract_trace_set(&phi, &set);
                if json {
                    println!("{}", export_report(&image));
                } else {
                    for t in image.iter() {
                        println!(
                            "{}",
                            Printer {
                                model: &m,
                                labels: false
                            }
                            .trace(t)
                        );
                    }
                }
            }
        }
        Command::Candidates {
            model,
            mapping,
            out_dir,
        } => {
            let m = load_model(&model)?;
            let phi = load_mapping(&mapping, &m)?;
            let set = enumerate_candidates(&m, &phi)?;
            if set.len() > 4096 {
                bail!("{} candidates; refusing to write more than 4096 files", set.len());
            }
            fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
            for i in 0..set.len() {
                let path = out_dir.join(format!("{}_cand{}.mvn", m.name, i));
                let text = set.source(i).expect("index in range");
                fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
                println!("{}", path.display());
            }
            eprintln!("{} candidates", set.len());
        }
        Command::Check {
            abstract_model,
            concrete_model,
            mapping,
            witness,
            json,
            rule,
            sync,
        } => {
            let a = load_model(&abstract_model)?;
            let c = load_model(&concrete_model)?;
            let phi = load_mapping(&mapping, &c)?;
            if sync {
                let holds = check_sync_abstraction(&a, &c, &phi)?;
                if json {
                    println!(
                        "{}",
                        export_report(&serde_json::json!({ "holds": holds, "semantics": "sync" }))
                    );
                } else {
                    println!("{}", if holds { "holds" } else { "refuted" });
                }
                return Ok(if holds { ExitCode::SUCCESS } else { ExitCode::from(1) });
            }
            let result = check_asyn_abs_with(
                &a,
                &c,
                &phi,
                CheckOptions {
                    rule,
                    ..CheckOptions::default()
                },
            )?;
            if json {
                println!("{}", export_report(&result));
            } else {
                let s = &result.stats;
                println!("{}", if result.holds { "holds" } else { "refuted" });
                println!(
                    "iterations {}, step terms {} -> {}, removals {}, n {}, k {}",
                    s.iterations, s.initial_terms, s.final_terms, s.removals, s.n, s.k
                );
                if witness {
                    print_witness(&result, &a, &c, labels);
                } else if let Some(w) = &result.witness {
                    println!("{}", w.message);
                }
            }
            return Ok(if result.holds {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
        Command::OracleCheck {
            abstract_model,
            concrete_model,
            mapping,
        } => {
            let a = load_model(&abstract_model)?;
            let c = load_model(&concrete_model)?;
            let phi = load_mapping(&mapping, &c)?;
            let holds = oracle_check(&a, &c, &phi)?;
            println!("{}", if holds { "holds" } else { "refuted" });
            return Ok(if holds { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Fuzz {
            seed,
            count,
            finite_only,
            json,
        } => {
            let report = differential_suite_with(SuiteConfig {
                seed,
                count,
                require_finite: finite_only,
            });
            if json {
                println!("{}", export_report(&report));
            } else {
                println!(
                    "{} instances, {} with finite trace sets, {} hold, {} refuted",
                    report.instances, report.supported, report.holds, report.refuted
                );
                println!("divergences: {}", report.divergences.len());
                println!("universal-rule divergences: {}", report.universal_divergences.len());
                println!("spot-check violations: {}", report.spot_check_violations.len());
                for d in &report.divergences {
                    println!("instance {}: checker {} oracle {}", d.index, d.checker, d.oracle);
                    println!(
                        "{}{}{}",
                        d.reproduction.concrete_mvn, d.reproduction.abstract_mvn, d.reproduction.map
                    );
                }
            }
            return Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_witness(result: &mvnabs_core::CheckResult, a: &Mvn, c: &Mvn, labels: bool) {
    let pa = Printer { model: a, labels };
    let pc = Printer { model: c, labels };
    if let Some(w) = &result.witness {
        println!("{}", w.message);
        for r in &w.chain {
            println!(
                "  term {} / {{{}}} removed: successor {} / {{{}}} missing",
                pa.state(&r.state),
                pc.states(&r.gamma),
                pa.state(&r.successor),
                pc.states(&r.successor_gamma)
            );
        }
        if let Some(cause) = &w.root_cause {
            match cause {
                mvnabs_core::checker::StepTermOutcome::Invalid { state, gamma, cause } => {
                    println!(
                        "  term {} / {{{}}} is invalid: {cause}",
                        pa.state(state),
                        pc.states(gamma)
                    );
                }
                mvnabs_core::checker::StepTermOutcome::Valid(_) => {}
            }
        }
    }
    if let Some(family) = &result.family {
        for (s, gammas) in &family.terms {
            let list: Vec<String> = gammas.iter().map(|g| format!("{{{}}}", pc.states(g))).collect();
            println!("  {}: {}", pa.state(s), list.join(" "));
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
