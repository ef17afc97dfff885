//! `stoptime`: one entry point for every experiment, conversion, and
//! verifier in the laboratory. Traces are JSON Lines; identical invocations
//! produce byte-identical output. Exit status 0 means every invariant check
//! in the run passed, 1 flags a violated invariant (the offending record is
//! in the trace), 2 a configuration error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use stoptime_core::allocation::{
    check_escalation_witnesses, make_assigner, run_adversary, verify_layer, Allocator,
    AllocatorConfig, AssignerKind,
};
use stoptime_core::beating::{
    builder_labeling_prefix_stable, make_team, run_beating_game, OpponentKind, Verdict,
};
use stoptime_core::coloring::{play, Strategy};
use stoptime_core::machines::{
    ample_fuel, enumerator_from_machine, machine_from_enumerator, parse_script_file,
    write_script_file, BuiltinMachine,
};
use stoptime_core::modes::{
    from_length_mode, join_modes, mode_to_families, parse_mode_file, to_length_mode, trim_to_mode,
    write_mode_file, FiniteDescriptionMode,
};
use stoptime_core::oracle::{cardinality_check_oracle, check_oracle_inequality, covered_below, max_over_extensions};
use stoptime_core::testing;
use stoptime_core::trace::{render_jsonl, ColorMove};
use stoptime_core::tree::{strings_up_to, BitString};
use stoptime_core::verify::run_all;
use stoptime_core::DEFAULT_DEPTH_MAX;

#[derive(Parser)]
#[command(name = "stoptime", version, about = "Finite-scale stopping-time laboratory")]
struct Cli {
    /// Write the trace here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Play seeded online-coloring episodes and check every invariant.
    ColorGame {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value = "first-fit")]
        strategy: String,
        #[arg(long, default_value_t = 1)]
        episodes: u64,
        /// Marks per episode when generating randomly.
        #[arg(long, default_value_t = 24)]
        moves: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Play these marks (one vertex per line, `-` for the root) instead
        /// of random ones; forces a single episode.
        #[arg(long)]
        marks: Option<PathBuf>,
    },
    /// Run the builder against a team of opponents on disjoint subtrees.
    BeatGame {
        /// Comma-separated team: replicator, sniper, silent, random.
        #[arg(long, default_value = "replicator,sniper")]
        team: String,
        /// Defaults to 4·(team size + 2).
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 64)]
        max_rounds: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Drive the layered allocator with a declaration stream.
    AllocGame {
        /// Per-vertex budget; must be a power of two.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Random declarations per run when no stream file is given.
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Declarations as lines `object vertex` (`-` for the root vertex).
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Corner a description assigner with the banded adversary strategy.
    AllocAdversary {
        #[arg(long)]
        n: usize,
        /// Gap constant: descriptions may use at most 2n−c bits.
        #[arg(long, default_value_t = 6)]
        c: usize,
        /// One of silent, greedy, always-serve, frugal.
        #[arg(long)]
        assigner: String,
    },
    /// Convert between modes, length modes, families, scripts, machines.
    Convert {
        #[command(subcommand)]
        which: ConvertCmd,
    },
    /// Evaluate the extension oracle on a mode file and check the
    /// inequality against monotone complexity.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Evaluate at every vertex up to this length.
        #[arg(long, default_value_t = 4)]
        span: usize,
    },
    /// Replay every module's seeded invariant battery.
    VerifyAll {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Subcommand)]
enum ConvertCmd {
    /// Canonicalize a raw triple stream into a valid mode.
    Trim {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Join modes: the m-th input's descriptions gain the frame 0^m 1.
    Join {
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Rewrite a mode so it describes lengths in fixed width.
    ToLength {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Recover a compact object mode from a length mode.
    FromLength {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Split a mode into its per-description prefix-free families.
    ToFamilies {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Enumerate a builtin machine's stop set in dovetail order.
    MachineScript {
        /// immediate-halt, loop-forever, halt-after:N, or halt-on-ones:N.
        #[arg(long)]
        machine: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 4096)]
        fuel: u64,
    },
    /// Compile a prefix-free script to a machine and enumerate its stop
    /// set back (the round trip of the equivalence theorem).
    ScriptMachine {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
}

fn depth_max() -> Result<usize> {
    match std::env::var("STOPTIME_DEPTH_MAX") {
        Ok(raw) => raw
            .parse::<usize>()
            .ok()
            .filter(|d| *d >= 1 && *d <= 63)
            .ok_or_else(|| anyhow!("STOPTIME_DEPTH_MAX must be an integer in 1..=63, got {raw:?}")),
        Err(_) => Ok(DEFAULT_DEPTH_MAX),
    }
}

fn check_depth(depth: usize) -> Result<()> {
    let max = depth_max()?;
    if depth > max {
        bail!("depth {depth} exceeds the depth cap {max} (override with STOPTIME_DEPTH_MAX)");
    }
    Ok(())
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_mode(path: &PathBuf, depth: usize) -> Result<FiniteDescriptionMode> {
    let triples = parse_mode_file(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    for t in &triples {
        if t.condition.len() > depth {
            bail!("{}: condition {} is deeper than {depth}", path.display(), t.condition);
        }
    }
    Ok(FiniteDescriptionMode::new(triples, depth))
}

/// Declaration stream file: `object vertex` per line, `-` for the root,
/// `#` comments.
fn parse_stream_file(text: &str) -> Result<Vec<(u64, BitString)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(obj), Some(vertex), None) = (parts.next(), parts.next(), parts.next()) else {
            bail!("line {}: expected `object vertex`", idx + 1);
        };
        let object: u64 = obj.parse().with_context(|| format!("line {}: bad object id", idx + 1))?;
        let vertex = if vertex == "-" {
            BitString::EMPTY
        } else {
            BitString::parse(vertex).map_err(|e| anyhow!("line {}: {e}", idx + 1))?
        };
        out.push((object, vertex));
    }
    Ok(out)
}

struct Run {
    trace: String,
    ok: bool,
}

fn color_game(
    k: u32,
    depth: usize,
    strategy: &str,
    episodes: u64,
    moves: usize,
    seed: u64,
    marks_file: Option<&PathBuf>,
) -> Result<Run> {
    check_depth(depth)?;
    let strategy: Strategy = strategy.parse().map_err(|e: String| anyhow!(e))?;
    if k == 0 || k > 31 {
        bail!("budget k must be in 1..=31, got {k}");
    }
    let fixed_marks = match marks_file {
        Some(path) => {
            let script = parse_script_file(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            Some(script.emissions().to_vec())
        }
        None => None,
    };
    let episodes = if fixed_marks.is_some() { 1 } else { episodes.max(1) };
    let mut lines = Vec::new();
    let mut all_ok = true;
    for episode in 0..episodes {
        let marks = match &fixed_marks {
            Some(m) => m.clone(),
            None => {
                let mut rng = testing::rng(seed, episode);
                testing::random_legal_marks(&mut rng, k, depth, moves)
            }
        };
        let (records, failure) = match play(k, depth, &marks, strategy) {
            Ok(records) => (records, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        if let Some(e) = &failure {
            if fixed_marks.is_some() {
                bail!("marks file is not a legal play: {e}");
            }
        }
        let ok = failure.is_none() && records.iter().all(|r| r.ok);
        all_ok &= ok;
        let moves: Vec<ColorMove> = records.iter().map(ColorMove::from).collect();
        lines.push(
            json!({
                "episode": episode,
                "marks": marks.len(),
                "moves": moves,
                "error": failure,
                "ok": ok,
            })
            .to_string(),
        );
    }
    Ok(Run { trace: lines.join("\n") + "\n", ok: all_ok })
}

fn beat_game(team: &str, depth: Option<usize>, max_rounds: usize, seed: u64) -> Result<Run> {
    let kinds: Vec<OpponentKind> = team
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|e: String| anyhow!(e)))
        .collect::<Result<_>>()?;
    let depth = depth.unwrap_or(4 * (kinds.len() + 2));
    check_depth(depth)?;
    let opponents = make_team(&kinds, depth, seed);
    let report = run_beating_game(opponents, depth, max_rounds).map_err(|e| anyhow!(e))?;
    let ok = report.sound
        && report.verdict == Verdict::Won(kinds.len())
        && builder_labeling_prefix_stable(&report.transcript);
    let mut trace = render_jsonl(report.transcript.events());
    let outcome = match report.verdict {
        Verdict::Won(i) => format!("won-{i}"),
        Verdict::Undecided => "undecided".to_string(),
    };
    trace.push_str(
        &json!({
            "outcome": outcome,
            "claim": report.winning_claim,
            "sound": report.sound,
            "ok": ok,
        })
        .to_string(),
    );
    trace.push('\n');
    Ok(Run { trace, ok })
}

fn alloc_game(
    n: usize,
    depth: usize,
    count: usize,
    seed: u64,
    stream_file: Option<&PathBuf>,
) -> Result<Run> {
    check_depth(depth)?;
    if n == 0 || !n.is_power_of_two() {
        bail!("budget n must be a power of two, got {n}");
    }
    let stream = match stream_file {
        Some(path) => parse_stream_file(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))?,
        None => {
            let mut rng = testing::rng(seed, 0);
            testing::random_declaration_stream(&mut rng, n, depth, count)
        }
    };
    let config = AllocatorConfig::new(n, depth);
    let mut allocator = Allocator::new(config);
    let mut layers_ok = true;
    let mut max_layer = 0usize;
    let mut rejection = None;
    for (object, vertex) in &stream {
        match allocator.declare(*object, *vertex) {
            Ok((layer, _)) => {
                max_layer = max_layer.max(layer);
                layers_ok &= verify_layer(&allocator.layers()[layer]);
            }
            // A stream that breaks the declaration budget is bad input; a
            // request rejected by every layer violates the n+2 guarantee.
            Err(e @ stoptime_core::allocation::AllocationError::Rejected { .. }) => {
                rejection = Some(e.to_string());
                break;
            }
            Err(e) => bail!("stream is not legal for budget {n}: {e}"),
        }
    }
    let mode = allocator.to_mode();
    let witnesses = check_escalation_witnesses(allocator.events());
    let ok = rejection.is_none()
        && layers_ok
        && witnesses
        && mode.is_valid()
        && max_layer <= n + 1
        && allocator.layers().iter().all(verify_layer);
    let mut trace = render_jsonl(allocator.events());
    trace.push_str(
        &json!({
            "declarations": stream.len(),
            "deepest-layer": max_layer,
            "rejected": rejection,
            "mode-valid": mode.is_valid(),
            "layers-ok": layers_ok,
            "escalation-witnesses": witnesses,
            "ok": ok,
        })
        .to_string(),
    );
    trace.push('\n');
    Ok(Run { trace, ok })
}

fn alloc_adversary(n: usize, c: usize, assigner: &str) -> Result<Run> {
    let kind: AssignerKind = assigner.parse().map_err(|e: String| anyhow!(e))?;
    let mut assigner = make_assigner(kind);
    let report = run_adversary(n, assigner.as_mut(), c).map_err(|e| anyhow!(e))?;
    let budget = 1usize << (n - 1);
    let ok = report.max_declarations_at_a_vertex <= budget;
    let mut trace = render_jsonl(&report.events);
    trace.push_str(
        &json!({
            "outcome": report.outcome,
            "stages": report.stages,
            "objects-used": report.objects_used,
            "max-declarations": report.max_declarations_at_a_vertex,
            "budget": budget,
            "ok": ok,
        })
        .to_string(),
    );
    trace.push('\n');
    Ok(Run { trace, ok })
}

fn oracle_run(input: &PathBuf, depth: usize, span: usize) -> Result<Run> {
    check_depth(depth)?;
    if span > depth {
        bail!("span {span} exceeds depth {depth}");
    }
    let mode = parse_mode(input, depth)?;
    let mut lines = Vec::new();
    let mut all_ok = true;
    for x in strings_up_to(span) {
        let value = max_over_extensions(&mode, &x, depth);
        let covered_at = (1..=depth as u32 + 2).find(|n| covered_below(&mode, &x, *n, depth));
        let ok = check_oracle_inequality(&mode, &x, depth);
        all_ok &= ok;
        lines.push(
            json!({ "vertex": x, "value": value, "covered-at": covered_at, "ok": ok }).to_string(),
        );
    }
    let cardinality = cardinality_check_oracle(&mode, depth);
    all_ok &= cardinality;
    lines.push(
        json!({ "mode-valid": mode.is_valid(), "cardinality-ok": cardinality, "ok": all_ok })
            .to_string(),
    );
    Ok(Run { trace: lines.join("\n") + "\n", ok: all_ok })
}

fn verify_all(seed: u64, quick: bool) -> Result<Run> {
    let summaries = run_all(seed, quick);
    let ok = summaries.iter().all(|m| m.ok());
    Ok(Run { trace: render_jsonl(&summaries), ok })
}

fn parse_machine(spec: &str) -> Result<BuiltinMachine> {
    if spec == "immediate-halt" {
        return Ok(BuiltinMachine::ImmediateHalt);
    }
    if spec == "loop-forever" {
        return Ok(BuiltinMachine::LoopForever);
    }
    if let Some(n) = spec.strip_prefix("halt-after:") {
        return Ok(BuiltinMachine::HaltAfterReads(n.parse().context("halt-after:N needs a count")?));
    }
    if let Some(n) = spec.strip_prefix("halt-on-ones:") {
        return Ok(BuiltinMachine::HaltOnOnes(n.parse().context("halt-on-ones:N needs a count")?));
    }
    bail!("unknown machine {spec:?} (expected immediate-halt, loop-forever, halt-after:N, halt-on-ones:N)")
}

fn convert(which: &ConvertCmd) -> Result<Run> {
    let trace = match which {
        ConvertCmd::Trim { input, depth } => {
            check_depth(*depth)?;
            let triples = parse_mode_file(&read(input)?).map_err(|e| anyhow!("{}: {e}", input.display()))?;
            write_mode_file(trim_to_mode(&triples, *depth).triples())
        }
        ConvertCmd::Join { input, depth } => {
            check_depth(*depth)?;
            let parts: Vec<FiniteDescriptionMode> = input
                .iter()
                .map(|p| {
                    let triples =
                        parse_mode_file(&read(p)?).map_err(|e| anyhow!("{}: {e}", p.display()))?;
                    Ok(trim_to_mode(&triples, *depth))
                })
                .collect::<Result<_>>()?;
            write_mode_file(join_modes(&parts).triples())
        }
        ConvertCmd::ToLength { input, depth } => {
            check_depth(*depth)?;
            let (len_mode, dropped) = to_length_mode(&parse_mode(input, *depth)?);
            let mut text = write_mode_file(len_mode.triples());
            for d in dropped {
                text.push_str(&format!("# dropped {:?}: {} {} {}\n", d.reason, d.triple.description, d.triple.condition, d.triple.object));
            }
            text
        }
        ConvertCmd::FromLength { input, depth } => {
            check_depth(*depth)?;
            let back = from_length_mode(&parse_mode(input, *depth)?)
                .map_err(|e| anyhow!("{}: {e}", input.display()))?;
            write_mode_file(back.triples())
        }
        ConvertCmd::ToFamilies { input, depth } => {
            check_depth(*depth)?;
            let families = mode_to_families(&parse_mode(input, *depth)?);
            let records: Vec<serde_json::Value> = families
                .iter()
                .map(|(description, family)| {
                    let members: Vec<&BitString> = family.iter().collect();
                    json!({ "description": description, "family": members })
                })
                .collect();
            render_jsonl(&records)
        }
        ConvertCmd::MachineScript { machine, depth, fuel } => {
            check_depth(*depth)?;
            let m = parse_machine(machine)?;
            write_script_file(&enumerator_from_machine(&m, *depth, *fuel))
        }
        ConvertCmd::ScriptMachine { input, depth } => {
            check_depth(*depth)?;
            let script = parse_script_file(&read(input)?).map_err(|e| anyhow!("{}: {e}", input.display()))?;
            if script.max_emission_len() > *depth {
                bail!("{}: an emission is longer than depth {depth}", input.display());
            }
            let machine = machine_from_enumerator(&script).map_err(|e| anyhow!("{}: {e}", input.display()))?;
            write_script_file(&enumerator_from_machine(&machine, *depth, ample_fuel(&script)))
        }
    };
    Ok(Run { trace, ok: true })
}

fn dispatch(cli: &Cli) -> Result<Run> {
    match &cli.cmd {
        Cmd::ColorGame { k, depth, strategy, episodes, moves, seed, marks } => {
            color_game(*k, *depth, strategy, *episodes, *moves, *seed, marks.as_ref())
        }
        Cmd::BeatGame { team, depth, max_rounds, seed } => {
            beat_game(team, *depth, *max_rounds, *seed)
        }
        Cmd::AllocGame { n, depth, count, seed, stream } => {
            alloc_game(*n, *depth, *count, *seed, stream.as_ref())
        }
        Cmd::AllocAdversary { n, c, assigner } => alloc_adversary(*n, *c, assigner),
        Cmd::Convert { which } => convert(which),
        Cmd::Oracle { input, depth, span } => oracle_run(input, *depth, *span),
        Cmd::VerifyAll { seed, quick } => verify_all(*seed, *quick),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(run) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &run.trace)
                    .with_context(|| format!("writing {}", path.display())),
                None => {
                    print!("{}", run.trace);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if run.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
