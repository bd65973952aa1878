use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use priodpa::battery::algorithm_by_name;
use priodpa::cat::{
    cat_advice_bound, decode_run_cat, encode_cat_advice, ladder_tree, pack_s4, tree_adversary,
    tree_stats,
};
use priodpa::engine::run;
use priodpa::experiments::Experiment;
use priodpa::grid::{exhaustive_verify_3x3, grid_adversary};
use priodpa::lwdpa::{
    adversary_play_lwdpa, adversary_play_lwdpa_on_length, decode_run_lwdpa, encode_lwdpa_advice,
    lwdpa_advice_len, PabParams,
};
use priodpa::model::{validate_solution, GainMode, Graph, Instance};
use priodpa::oracle::brute_force_opt;
use priodpa::report::{to_csv_string, to_json_lines, GainRatio, RatioReport};
use priodpa::sgkh::{run_guess, run_tguess, GuessInstance};
use priodpa::tape::AdviceTape;
use priodpa::DpaError;

#[derive(Parser)]
#[command(
    name = "priodpa",
    version,
    about = "Priority algorithms for disjoint path allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Gain {
    /// Length for the length-weighted algorithms, count otherwise.
    Auto,
    Count,
    Length,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Problem {
    #[value(alias = "pab")]
    Lwdpa,
    #[value(alias = "star")]
    Cat,
    Grid,
}

#[derive(clap::Args)]
struct Output {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an algorithm on an instance file, or a seeded experiment batch.
    Run {
        #[arg(long, required_unless_present = "experiment")]
        instance: Option<PathBuf>,
        #[arg(long, required_unless_present = "experiment")]
        alg: Option<String>,
        /// path-greedy, lwdpa-greedy, lwdpa-advice, cat-greedy or cat-advice.
        #[arg(long, conflicts_with_all = ["instance", "alg"])]
        experiment: Option<String>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "auto")]
        gain: Gain,
        /// Record wall time in the ms column; off by default so output is reproducible.
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Play a lower-bound adversary against an algorithm.
    Adversary {
        #[arg(long, value_enum, visible_alias = "family")]
        problem: Problem,
        #[arg(long)]
        alg: String,
        /// Staircase parameters for the length-weighted adversary.
        #[arg(long, default_value_t = 3)]
        a: u32,
        #[arg(long, default_value_t = 8)]
        b: u32,
        /// Pick the staircase for this path length instead of `a` and `b`.
        #[arg(long)]
        length: Option<u32>,
        /// Instance file whose tree the star adversary uses (default: the four-leaf star).
        #[arg(long)]
        tree: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Encode optimal advice for an instance and decode it.
    Advice {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long)]
        instance: PathBuf,
        /// Encode a tape for the instance and decode it (the default).
        #[arg(long, conflicts_with = "decode")]
        encode: bool,
        /// Decode the tape given by `--tape` instead of encoding one.
        #[arg(long, requires = "tape")]
        decode: bool,
        #[arg(long, requires = "decode")]
        tape: Option<PathBuf>,
        /// Save the encoded tape here.
        #[arg(long)]
        tape_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Drive an algorithm as a bit guesser and print the accounting table.
    Reduce {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long)]
        n: usize,
        /// The hidden bits; drawn from the seed when absent.
        #[arg(long)]
        bits: Option<String>,
        #[arg(long)]
        alg: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance file whose tree hosts the stars (default: the ladder tree for n).
        #[arg(long)]
        tree: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Exhaustive case checks.
    Verify {
        #[arg(long = "grid-3x3", required = true)]
        grid_3x3: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Pack disjoint four-leaf stars into a tree.
    PackS4 {
        /// Instance file whose graph is the tree.
        #[arg(long, visible_alias = "instance", required_unless_present = "ladder")]
        tree: Option<PathBuf>,
        /// Use the ladder tree with this many guaranteed stars.
        #[arg(long, conflicts_with = "tree")]
        ladder: Option<u32>,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    /// Bad input: exit 2.
    Usage(String),
    /// A checked property failed: exit 1.
    Violation(String),
}

impl From<DpaError> for Failure {
    fn from(e: DpaError) -> Self {
        match e {
            DpaError::IllegalAcceptance { .. } | DpaError::InvalidOrder(_) => {
                Failure::Violation(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Ok(Instance::from_json(&read_text(path)?)?)
}

fn emit(output: &Output, text: &str) -> Outcome {
    match &output.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
        }
    }
}

fn emit_reports(output: &Output, reports: &[RatioReport]) -> Outcome {
    match output.format {
        Format::Csv => emit(output, &to_csv_string(reports)),
        Format::Json => emit(output, &to_json_lines(reports)),
    }
}

/// CSV from a header and rows of plain fields.
fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",") + "\n";
    for row in rows {
        out += &row.join(",");
        out.push('\n');
    }
    out
}

fn json_lines(values: &[serde_json::Value]) -> String {
    values.iter().map(|v| v.to_string() + "\n").collect()
}

fn gain_mode(gain: Gain, alg: &str) -> GainMode {
    match gain {
        Gain::Count => GainMode::Count,
        Gain::Length => GainMode::Length,
        Gain::Auto if alg.contains("lwdpa") => GainMode::Length,
        Gain::Auto => GainMode::Count,
    }
}

fn cmd_run(
    instance: &Instance,
    alg_name: &str,
    gain: Gain,
    timing: bool,
) -> Result<RatioReport, Failure> {
    let mode = gain_mode(gain, alg_name);
    let start = Instant::now();
    let (solution, bits) = match alg_name {
        "advice-lwdpa" => {
            let mut tape = encode_lwdpa_advice(instance)?;
            let s = decode_run_lwdpa(instance, &mut tape)?;
            (s, tape.consumed())
        }
        "advice-cat" => {
            let mut tape = encode_cat_advice(instance)?;
            let s = decode_run_cat(instance, &mut tape)?;
            (s, tape.consumed())
        }
        name => {
            let mut alg = algorithm_by_name(name)?;
            let out = run(alg.as_mut(), instance, None)?;
            (out.solution, out.bits_consumed)
        }
    };
    let ms = start.elapsed().as_millis() as u64;
    if !validate_solution(instance, &solution) {
        return Err(Failure::Violation(format!(
            "{alg_name} produced an invalid solution"
        )));
    }
    let gain_alg = solution.gain(mode);
    let gain_opt = brute_force_opt(instance, mode)?.optimum;
    if gain_alg > gain_opt {
        return Err(Failure::Violation(format!(
            "{alg_name} beat the optimum: {gain_alg} > {gain_opt}"
        )));
    }
    let mut report = RatioReport::new(
        instance.graph().descriptor(),
        alg_name,
        instance.fingerprint(),
        gain_alg,
        gain_opt,
        bits,
    );
    if timing {
        report.ms = ms;
    }
    Ok(report)
}

fn cmd_adversary(
    problem: Problem,
    alg_name: &str,
    a: u32,
    b: u32,
    length: Option<u32>,
    tree: Option<&Path>,
) -> Result<(RatioReport, String, bool), Failure> {
    let mut alg = algorithm_by_name(alg_name)?;
    let (instance, gain_alg, gain_opt, case, holds) = match problem {
        Problem::Lwdpa => {
            let out = match length {
                Some(l) => adversary_play_lwdpa_on_length(alg.as_mut(), l)?,
                None => adversary_play_lwdpa(alg.as_mut(), PabParams::new(a, b)?)?,
            };
            // The guarantee needs b >= 2(a + 1); the length form always picks such a pair.
            let (a, b) = match length {
                Some(l) => {
                    let mut a = 3;
                    while PabParams::balanced(a + 1)?.length() <= l {
                        a += 1;
                    }
                    (a, 2 * (a + 1))
                }
                None => (a, b),
            };
            let target = GainRatio::new(3 * u64::from(a) - 1, u64::from(a));
            let holds = b < 2 * (a + 1) || out.ratio() >= target;
            (
                out.instance,
                out.gain_alg,
                out.gain_opt,
                format!("{:?}", out.case),
                holds,
            )
        }
        Problem::Cat => {
            let graph = match tree {
                Some(path) => load_instance(path)?.graph().clone(),
                None => Graph::tree(&[(0, 1), (0, 2), (0, 3), (0, 4)])?,
            };
            let out = tree_adversary(alg.as_mut(), &graph)?;
            let holds = out.ratio() >= GainRatio::new(2, 1);
            (
                out.instance,
                out.gain_alg,
                out.gain_opt,
                format!("{:?}", out.case),
                holds,
            )
        }
        Problem::Grid => {
            let out = grid_adversary(alg.as_mut())?;
            let holds = out.certified >= GainRatio::new(3, 2) && out.ratio() >= out.certified;
            let case = format!("{:?} certified={}", out.case, out.certified);
            (out.instance, out.gain_alg, out.gain_opt, case, holds)
        }
    };
    let report = RatioReport::new(
        instance.graph().descriptor(),
        alg.name(),
        instance.fingerprint(),
        gain_alg,
        gain_opt,
        0,
    );
    Ok((report, case, holds))
}

fn cmd_advice(
    problem: Problem,
    instance: &Instance,
    tape_in: Option<&Path>,
    tape_out: Option<&Path>,
) -> Result<(RatioReport, bool), Failure> {
    let (mode, name) = match problem {
        Problem::Lwdpa => (GainMode::Length, "advice-lwdpa"),
        Problem::Cat => (GainMode::Count, "advice-cat"),
        Problem::Grid => return Err(Failure::Usage("no advice scheme for grids".into())),
    };
    let mut tape = match tape_in {
        Some(path) => AdviceTape::from_json(&read_text(path)?)?,
        None if problem == Problem::Lwdpa => encode_lwdpa_advice(instance)?,
        None => encode_cat_advice(instance)?,
    };
    if let Some(path) = tape_out {
        fs::write(path, tape.to_json() + "\n")
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let solution = match problem {
        Problem::Lwdpa => decode_run_lwdpa(instance, &mut tape)?,
        _ => decode_run_cat(instance, &mut tape)?,
    };
    let gain_alg = solution.gain(mode);
    let gain_opt = brute_force_opt(instance, mode)?.optimum;
    let within = match problem {
        Problem::Lwdpa => {
            let l = instance.graph().as_path().map_or(0, |p| p.length());
            tape.len() == lwdpa_advice_len(l)
        }
        _ => {
            let tree = instance
                .graph()
                .as_tree()
                .expect("tree codec checked the graph");
            tree_stats(tree).max_degree < 4 || tape.len() as u64 <= cat_advice_bound(tree)
        }
    };
    let holds = within && (tape_in.is_some() || gain_alg == gain_opt);
    let report = RatioReport::new(
        instance.graph().descriptor(),
        name,
        instance.fingerprint(),
        gain_alg,
        gain_opt,
        tape.consumed(),
    );
    Ok((report, holds))
}

fn cmd_reduce(
    problem: Problem,
    n: usize,
    bits: Option<&str>,
    alg_name: &str,
    seed: u64,
    tree: Option<&Path>,
    output: &Output,
) -> Outcome {
    let g = match bits {
        Some(text) => {
            let g = GuessInstance::from_bit_str(text)?;
            if g.n() != n {
                return Err(Failure::Usage(format!("--n {n} but {} bits given", g.n())));
            }
            g
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            GuessInstance::new((0..n).map(|_| rng.gen()).collect())?
        }
    };
    let mut alg = algorithm_by_name(alg_name)?;
    let out = match problem {
        Problem::Lwdpa => run_guess(alg.as_mut(), &g)?,
        Problem::Cat => {
            let graph = match tree {
                Some(path) => load_instance(path)?.graph().clone(),
                None => ladder_tree(n as u32)?,
            };
            run_tguess(alg.as_mut(), &g, &graph)?
        }
        Problem::Grid => {
            return Err(Failure::Usage(
                "the guessing reductions run on paths and trees".into(),
            ))
        }
    };
    let mut rows = out.gadgets.clone();
    rows.sort_by_key(|r| r.step);
    let text = match output.format {
        Format::Csv => {
            let mut table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.step.to_string(),
                        r.gadget.to_string(),
                        r.top.x().to_string(),
                        r.top.y().to_string(),
                        u8::from(r.guess).to_string(),
                        u8::from(r.truth).to_string(),
                        r.alg_gain.to_string(),
                        r.opt_gain.to_string(),
                    ]
                })
                .collect();
            table.push(vec![
                "total".into(),
                String::new(),
                String::new(),
                String::new(),
                out.run.correct.to_string(),
                out.run.wrong().to_string(),
                out.gain_alg().to_string(),
                out.gain_opt().to_string(),
            ]);
            let mut text = csv_table(
                &[
                    "step", "gadget", "top_x", "top_y", "guess", "truth", "alg_gain", "opt_gain",
                ],
                &table,
            );
            text += &format!("# ratio {} formula {}\n", out.ratio(), out.ratio_bound());
            text
        }
        Format::Json => {
            let mut values: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "step": r.step, "gadget": r.gadget, "top": [r.top.x(), r.top.y()],
                        "guess": r.guess, "truth": r.truth, "alg_gain": r.alg_gain, "opt_gain": r.opt_gain,
                    })
                })
                .collect();
            values.push(json!({
                "correct": out.run.correct, "wrong": out.run.wrong(),
                "gain_alg": out.gain_alg(), "gain_opt": out.gain_opt(),
                "ratio": out.ratio().to_f64(), "formula": out.ratio_bound().to_f64(),
            }));
            json_lines(&values)
        }
    };
    emit(output, &text)?;
    let bad = rows
        .iter()
        .find(|r| r.is_wrong() && r.alg_gain >= r.opt_gain);
    if let Some(r) = bad {
        return Err(Failure::Violation(format!(
            "wrong guess at step {} kept the full gadget gain",
            r.step
        )));
    }
    if out.ratio() < out.ratio_bound() {
        return Err(Failure::Violation(
            "measured ratio below the accounting formula".into(),
        ));
    }
    Ok(())
}

fn cmd_verify(output: &Output) -> Outcome {
    let report = exhaustive_verify_3x3()?;
    let text = match output.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .cases
                .iter()
                .map(|c| {
                    let kind = match c.case {
                        priodpa::grid::GridCase::Corner { corner, .. } => {
                            format!("corner@{corner}")
                        }
                        priodpa::grid::GridCase::Center { .. } => "center".into(),
                        priodpa::grid::GridCase::Rejected { .. } => "rejected".into(),
                    };
                    let path: Vec<String> = c.path.iter().map(ToString::to_string).collect();
                    vec![
                        c.request.0.to_string(),
                        c.request.1.to_string(),
                        path.join(" "),
                        kind,
                        c.witness_gain.to_string(),
                        c.alg_cap.to_string(),
                        c.oracle_opt.to_string(),
                        c.certified.to_string(),
                        if c.passed { "pass" } else { "fail" }.into(),
                    ]
                })
                .collect();
            let mut text = csv_table(
                &[
                    "x",
                    "y",
                    "path_edges",
                    "case",
                    "witness_gain",
                    "alg_cap",
                    "oracle_opt",
                    "certified",
                    "result",
                ],
                &rows,
            );
            text += &format!(
                "# pairs {} orbits {} cases {} corner {} center {} failed {}\n",
                report.pairs,
                report.orbits,
                report.cases.len(),
                report.corner_cases,
                report.center_cases,
                report.failed
            );
            text
        }
        Format::Json => serde_json::to_string(&report).expect("report serializes") + "\n",
    };
    emit(output, &text)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "{} grid cases failed",
            report.failed
        )))
    }
}

fn cmd_pack(instance: Option<&Path>, ladder: Option<u32>, output: &Output) -> Outcome {
    let graph = match (instance, ladder) {
        (Some(path), _) => load_instance(path)?.graph().clone(),
        (None, Some(n)) => ladder_tree(n)?,
        (None, None) => return Err(Failure::Usage("give --instance or --ladder".into())),
    };
    let tree = graph
        .as_tree()
        .ok_or_else(|| Failure::Usage(format!("{} is not a tree", graph.descriptor())))?;
    let copies = pack_s4(tree);
    let sigma = tree_stats(tree).star_bound as usize;
    let text = match output.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = copies
                .iter()
                .map(|c| {
                    let mut row = vec![c.center.to_string()];
                    row.extend(c.leaves.iter().map(ToString::to_string));
                    row
                })
                .collect();
            csv_table(&["center", "leaf1", "leaf2", "leaf3", "leaf4"], &rows)
                + &format!("# copies {} sigma {sigma}\n", copies.len())
        }
        Format::Json => {
            let stars: Vec<_> = copies
                .iter()
                .map(|c| json!({"center": c.center, "leaves": c.leaves}))
                .collect();
            json!({"graph": graph.descriptor(), "sigma": sigma, "copies": stars}).to_string() + "\n"
        }
    };
    emit(output, &text)?;
    if copies.len() < sigma {
        return Err(Failure::Violation(format!(
            "{} copies, fewer than {sigma}",
            copies.len()
        )));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Run {
            instance,
            alg,
            experiment,
            count,
            seed,
            gain,
            timing,
            output,
        } => {
            let reports = match (experiment, instance, alg) {
                (Some(name), _, _) => Experiment::from_name(&name)?.batch(seed, count)?,
                (None, Some(path), Some(alg)) => {
                    vec![cmd_run(&load_instance(&path)?, &alg, gain, timing)?]
                }
                _ => {
                    return Err(Failure::Usage(
                        "give --instance and --alg, or --experiment".into(),
                    ))
                }
            };
            emit_reports(&output, &reports)
        }
        Command::Adversary {
            problem,
            alg,
            a,
            b,
            length,
            tree,
            output,
        } => {
            let (report, case, holds) =
                cmd_adversary(problem, &alg, a, b, length, tree.as_deref())?;
            emit_reports(&output, &[report])?;
            eprintln!("case: {case}");
            if holds {
                Ok(())
            } else {
                Err(Failure::Violation(
                    "adversary fell short of its guaranteed ratio".into(),
                ))
            }
        }
        Command::Advice {
            problem,
            instance,
            encode: _,
            decode: _,
            tape,
            tape_out,
            output,
        } => {
            let instance = load_instance(&instance)?;
            let (report, holds) =
                cmd_advice(problem, &instance, tape.as_deref(), tape_out.as_deref())?;
            emit_reports(&output, &[report])?;
            if holds {
                Ok(())
            } else {
                Err(Failure::Violation("decoded gain or tape length off".into()))
            }
        }
        Command::Reduce {
            problem,
            n,
            bits,
            alg,
            seed,
            tree,
            output,
        } => cmd_reduce(
            problem,
            n,
            bits.as_deref(),
            &alg,
            seed,
            tree.as_deref(),
            &output,
        ),
        Command::Verify {
            grid_3x3: _,
            output,
        } => cmd_verify(&output),
        Command::PackS4 {
            tree,
            ladder,
            output,
        } => cmd_pack(tree.as_deref(), ladder, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("property violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
