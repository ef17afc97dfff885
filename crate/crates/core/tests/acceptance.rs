//! End-to-end acceptance battery. Each criterion prints exactly one
//! `ACCEPTANCE PASS/FAIL` line; the process exits nonzero if any fails or
//! overruns its pinned time budget.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use stoptime_core::allocation::{
    check_escalation_witnesses, make_assigner, minimal_in_class, run_adversary, AdversaryEvent,
    AdversaryOutcome, Allocator, AllocatorConfig, AssignerKind, ConditionalSchedule,
    verify_layer,
};
use stoptime_core::beating::{
    make_team, run_beating_game, Opponent, OpponentKind, Scripted, Verdict,
};
use stoptime_core::coloring::{play, schedule_to_families, Strategy};
use stoptime_core::machines::{ample_fuel, machine_from_enumerator, stop_set};
use stoptime_core::modes::{
    encode_length, from_length_mode, join_modes, length_encoding_width, to_length_mode,
    trim_to_mode, FiniteDescriptionMode,
};
use stoptime_core::oracle::{
    cardinality_check_oracle, check_oracle_inequality, max_over_extensions,
    max_over_extensions_brute,
};
use stoptime_core::testing;
use stoptime_core::trace::render_jsonl;
use stoptime_core::tree::{check_prefix_free, strings_up_to, BitString};
use stoptime_core::verify;

const SEED: u64 = 1009;

fn bs(text: &str) -> BitString {
    BitString::parse(text).expect("literal bit strings parse")
}

fn criterion(
    failures: &mut usize,
    number: usize,
    label: &str,
    budget: Duration,
    body: impl FnOnce() -> Result<String, String>,
) {
    let start = Instant::now();
    let outcome = body();
    let took = start.elapsed();
    match outcome {
        Ok(detail) if took <= budget => {
            println!(
                "ACCEPTANCE PASS: criterion {number} — {label} ({detail}; {took:.2?} of {budget:?})"
            );
        }
        Ok(detail) => {
            *failures += 1;
            println!(
                "ACCEPTANCE FAIL: criterion {number} — {label} overran its {budget:?} budget ({detail}; took {took:.2?})"
            );
        }
        Err(reason) => {
            *failures += 1;
            println!("ACCEPTANCE FAIL: criterion {number} — {label}: {reason}");
        }
    }
}

/// 1000 prefix-free scripts become machines whose stop set is exactly the
/// emission set, and 1000 random table machines have prefix-free stop sets.
fn scripts_and_machines() -> Result<String, String> {
    let mut rng = testing::rng(SEED, 1);
    for case in 0..1000 {
        let script = testing::random_prefix_free_script(&mut rng, 50, 12);
        let machine = machine_from_enumerator(&script)
            .map_err(|e| format!("script {case}: {e}"))?;
        let found = stop_set(&machine, 12, ample_fuel(&script));
        let want: BTreeSet<BitString> = script.emissions().iter().copied().collect();
        if found != want {
            return Err(format!(
                "script {case}: stop set has {} strings, script emitted {}",
                found.len(),
                want.len()
            ));
        }
    }
    for case in 0..1000 {
        let machine = testing::random_table_machine(&mut rng, 6);
        let found: Vec<BitString> = stop_set(&machine, 8, 160).into_iter().collect();
        if !check_prefix_free(&found) {
            return Err(format!("machine {case}: stop set is not prefix-free"));
        }
    }
    Ok("1000 scripts exact + 1000 machines prefix-free".into())
}

/// 1000 random plays per strategy; every move re-verifies the coloring and
/// the strategy's structural properties, and stays within the color budget.
fn coloring_strategies() -> Result<String, String> {
    let mut rng = testing::rng(SEED, 2);
    for strategy in [Strategy::FirstFit, Strategy::RankBased] {
        for case in 0..1000 {
            let k = 1 + (case % 8) as u32;
            let depth = 9 + case % 8;
            let marks = testing::random_legal_marks(&mut rng, k, depth, 24);
            let records = play(k, depth, &marks, strategy)
                .map_err(|e| format!("{strategy:?} play {case}: {e}"))?;
            if records.len() != marks.len() {
                return Err(format!("{strategy:?} play {case}: a legal mark was refused"));
            }
            for r in &records {
                if !r.ok || r.color < 1 || r.color > k {
                    return Err(format!(
                        "{strategy:?} play {case}: move {} at {} got color {} (ok={})",
                        r.index, r.vertex, r.color, r.ok
                    ));
                }
            }
        }
    }
    Ok("2 strategies x 1000 plays, every move verified".into())
}

/// 200 random announcement schedules flatten to prefix-free families, and
/// each vertex bounded below n lands in exactly one n-level family.
fn schedules_to_families() -> Result<String, String> {
    let mut rng = testing::rng(SEED, 3);
    for case in 0..200 {
        let depth = 6 + case % 7;
        let schedule = testing::random_schedule(&mut rng, depth, 4, 24);
        let families = schedule_to_families(&schedule, depth)
            .map_err(|e| format!("schedule {case}: {e}"))?;
        for ((n, color), family) in &families {
            let members: Vec<BitString> = family.iter().copied().collect();
            if !check_prefix_free(&members) {
                return Err(format!("schedule {case}: family ({n}, {color}) not prefix-free"));
            }
        }
        for n in 1..=schedule.max_bound() {
            let want: BTreeSet<BitString> = schedule
                .announcements()
                .iter()
                .filter(|(_, b)| *b <= n)
                .map(|(v, _)| *v)
                .collect();
            let got: BTreeSet<BitString> = families
                .iter()
                .filter(|((m, _), _)| *m == n)
                .flat_map(|(_, fam)| fam.iter().copied())
                .collect();
            if got != want {
                return Err(format!("schedule {case}: level {n} covers the wrong vertex set"));
            }
            for v in &want {
                let homes = families
                    .iter()
                    .filter(|((m, _), fam)| *m == n && fam.contains(v))
                    .count();
                if homes != 1 {
                    return Err(format!(
                        "schedule {case}: vertex {v} sits in {homes} level-{n} families"
                    ));
                }
            }
        }
    }
    Ok("200 schedules, all levels partitioned".into())
}

/// 1000 random modes: the oracle bound never exceeds the diagonal
/// complexity, the per-level cardinality bound holds, and the pruned
/// extension scan agrees with brute-force enumeration.
fn oracle_checks() -> Result<String, String> {
    let mut rng = testing::rng(SEED, 4);
    for case in 0..1000 {
        let depth = 5 + case % 4;
        let mode = testing::random_mode(&mut rng, depth, 18);
        for x in strings_up_to(depth) {
            if !check_oracle_inequality(&mode, &x, depth) {
                return Err(format!("mode {case}: oracle bound exceeds complexity at {x}"));
            }
        }
        if !cardinality_check_oracle(&mode, depth) {
            return Err(format!("mode {case}: level cardinality bound violated"));
        }
        for x in strings_up_to(3.min(depth)) {
            let fast = max_over_extensions(&mode, &x, depth);
            let brute = max_over_extensions_brute(&mode, &x, depth);
            if fast != brute {
                return Err(format!(
                    "mode {case}: pruned scan {fast:?} != brute force {brute:?} at {x}"
                ));
            }
        }
    }
    Ok("1000 modes: inequality + cardinality + brute-force agreement".into())
}

/// The builder wins against every shipped team of up to four opponents at
/// depth 4(i+2), with the per-round soundness checks green throughout.
fn builder_beats_teams() -> Result<String, String> {
    use OpponentKind::{Random, Replicator, Silent, Sniper};
    let zoo: Vec<Vec<OpponentKind>> = vec![
        vec![],
        vec![Replicator],
        vec![Sniper],
        vec![Silent],
        vec![Random],
        vec![Replicator, Sniper],
        vec![Sniper, Sniper],
        vec![Silent, Random],
        vec![Replicator, Sniper, Silent],
        vec![Random, Sniper, Replicator],
        vec![Replicator, Replicator, Sniper, Silent],
        vec![Random, Replicator, Sniper, Random],
    ];
    let mut games = 0;
    for (g, kinds) in zoo.iter().enumerate() {
        let team_size = kinds.len();
        let depth = 4 * (team_size + 2);
        for rep in 0..4 {
            let team = make_team(kinds, depth, SEED + (g * 4 + rep) as u64);
            let report = run_beating_game(team, depth, 64)
                .map_err(|e| format!("team {kinds:?} rep {rep}: {e}"))?;
            if report.verdict != Verdict::Won(team_size) {
                return Err(format!(
                    "team {kinds:?} rep {rep}: verdict {:?}, wanted Won({team_size})",
                    report.verdict
                ));
            }
            if !report.sound {
                return Err(format!("team {kinds:?} rep {rep}: soundness checks tripped"));
            }
            games += 1;
        }
    }
    // A handcrafted stagger: two scripted replicators answering one at a
    // time force two climbs, and the claim must settle two levels up.
    let r1 = Scripted::emissions(vec![(bs("1101111"), bs("0"))]);
    let r2 = Scripted::new(vec![None, Some((bs("110111"), bs("0")))]);
    let team: Vec<Box<dyn Opponent>> = vec![Box::new(r1), Box::new(r2)];
    let report = run_beating_game(team, 16, 24).map_err(|e| format!("scripted pair: {e}"))?;
    if report.verdict != Verdict::Won(2) || !report.sound {
        return Err("scripted pair: builder failed to settle two levels up".into());
    }
    if report.winning_claim != Some((bs("11011"), bs("0"))) {
        return Err(format!(
            "scripted pair: claim settled at {:?}, wanted (11011, 0)",
            report.winning_claim
        ));
    }
    games += 1;
    Ok(format!("{games} games won, all sound"))
}

/// For budgets 1, 2, 4, 8: 500 random legal streams each; no request
/// escalates past layer n+1, every touched layer verifies after every
/// request, and the produced mode stays valid with descriptions within the
/// fixed 2k+4 width.
fn allocation_streams() -> Result<String, String> {
    let mut rng = testing::rng(SEED, 5);
    let mut streams = 0;
    for n in [1usize, 2, 4, 8] {
        for case in 0..500 {
            let depth = 8 + case % 9;
            let declarations = testing::random_declaration_stream(&mut rng, n, depth, 12);
            let config = AllocatorConfig::new(n, depth);
            let mut allocator = Allocator::new(config);
            for (object, vertex) in &declarations {
                let (layer, _) = allocator
                    .declare(*object, *vertex)
                    .map_err(|e| format!("n={n} stream {case}: {e}"))?;
                if layer > n + 1 {
                    return Err(format!(
                        "n={n} stream {case}: object {object} escalated to layer {layer}"
                    ));
                }
                // Only the serving layer changed, so checking it extends the
                // invariant over the whole stack by induction.
                if !verify_layer(&allocator.layers()[layer]) {
                    return Err(format!(
                        "n={n} stream {case}: layer {layer} broken after serving {object}"
                    ));
                }
            }
            if !allocator.layers().iter().all(verify_layer) {
                return Err(format!("n={n} stream {case}: a layer fails final verification"));
            }
            if !check_escalation_witnesses(allocator.events()) {
                return Err(format!("n={n} stream {case}: an escalation lacks its witness"));
            }
            let mode = allocator.to_mode();
            if !mode.is_valid() {
                return Err(format!("n={n} stream {case}: produced mode is invalid"));
            }
            let width = config.description_len() as u32;
            for (object, vertex) in &declarations {
                let c = mode.complexity_monotone(&BitString::minimal_binary(*object), vertex);
                if c.is_none_or(|c| c > width) {
                    return Err(format!(
                        "n={n} stream {case}: object {object} at {vertex} costs {c:?} > {width}"
                    ));
                }
            }
            streams += 1;
        }
    }
    Ok(format!("{streams} streams served within width"))
}

/// For n = 2 and 3, the adversary corners every shipped assigner without
/// ever exceeding 2^(n-1) declarations on a path; the always-serve assigner
/// is caught by the pigeonhole collision specifically.
fn adversary_corners_assigners() -> Result<String, String> {
    let mut runs = 0;
    for n in [2usize, 3] {
        let combos = [
            (AssignerKind::Silent, 6),
            (AssignerKind::Greedy, 2),
            (AssignerKind::AlwaysServe, 2),
            (AssignerKind::Frugal, n + 2),
        ];
        for (kind, c) in combos {
            let mut assigner = make_assigner(kind);
            let report = run_adversary(n, assigner.as_mut(), c)
                .map_err(|e| format!("n={n} {kind:?}: {e}"))?;
            if report.max_declarations_at_a_vertex > 1 << (n - 1) {
                return Err(format!(
                    "n={n} {kind:?}: {} declarations on one path exceeds the budget",
                    report.max_declarations_at_a_vertex
                ));
            }
            match (kind, &report.outcome) {
                (AssignerKind::AlwaysServe, AdversaryOutcome::AssignerContradiction { .. }) => {
                    let collided = report
                        .events
                        .iter()
                        .any(|e| matches!(e, AdversaryEvent::Collision { .. }));
                    if !collided {
                        return Err(format!("n={n} {kind:?}: contradiction without a collision"));
                    }
                }
                (AssignerKind::AlwaysServe, other) => {
                    return Err(format!("n={n} {kind:?}: expected a contradiction, got {other:?}"));
                }
                (_, AdversaryOutcome::GoalAchieved { .. }) => {}
                (_, other) => {
                    return Err(format!("n={n} {kind:?}: expected the goal, got {other:?}"));
                }
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} adversary runs decided as expected"))
}

/// 200 random schedule lists: the pointwise minimum stays within the
/// cardinality class and matches min over inputs of (bound + index + 1) at
/// every announcement point and its children.
fn conditional_minimum() -> Result<String, String> {
    let mut rng = testing::rng(SEED, 6);
    for case in 0..200 {
        let parts = 1 + case % 4;
        let list: Vec<ConditionalSchedule> = (0..parts)
            .map(|_| testing::random_conditional_schedule(&mut rng, 6, 8, 4, 12))
            .collect();
        let merged = minimal_in_class(&list);
        if !merged.check_class_invariant() {
            return Err(format!("list {case}: the minimum leaves the cardinality class"));
        }
        let mut samples: BTreeSet<(u64, BitString)> = BTreeSet::new();
        for schedule in &list {
            for (object, vertex, _) in schedule.announcements() {
                samples.insert((*object, *vertex));
                samples.insert((*object, vertex.child(false)));
                samples.insert((*object, vertex.child(true)));
            }
        }
        for (object, vertex) in samples {
            let want = list
                .iter()
                .enumerate()
                .filter_map(|(m, s)| s.bound_at(object, &vertex).map(|b| b + m as u32 + 1))
                .min();
            let got = merged.bound_at(object, &vertex);
            if got != want {
                return Err(format!(
                    "list {case}: object {object} at {vertex} bounds to {got:?}, wanted {want:?}"
                ));
            }
        }
    }
    Ok("200 lists minimized exactly".into())
}

/// 500 rounds of mode transformations: trimming is idempotent, the join
/// shifts component complexities by exactly index+1, and the length mode
/// bounds the original in both directions.
fn mode_transformations() -> Result<String, String> {
    let mut rng = testing::rng(SEED, 7);
    for case in 0..500 {
        let depth = 4 + case % 3;
        let stream = testing::random_triple_stream(&mut rng, depth, 20);
        let mode = trim_to_mode(&stream, depth);
        if !mode.is_valid() {
            return Err(format!("round {case}: trimmed stream is not a valid mode"));
        }
        if trim_to_mode(mode.triples(), depth).triples() != mode.triples() {
            return Err(format!("round {case}: trimming is not idempotent"));
        }

        let parts: Vec<FiniteDescriptionMode> =
            (0..2 + case % 2).map(|_| testing::random_mode(&mut rng, 3, 8)).collect();
        let joined = join_modes(&parts);
        if !joined.is_valid() {
            return Err(format!("round {case}: join is not a valid mode"));
        }
        let mut objects: Vec<BitString> =
            parts.iter().flat_map(|m| m.triples().iter().map(|t| t.object)).collect();
        objects.sort();
        objects.dedup();
        for y in &objects {
            for x in strings_up_to(3) {
                let want = parts
                    .iter()
                    .enumerate()
                    .filter_map(|(m, part)| {
                        part.complexity_monotone(y, &x).map(|c| c + m as u32 + 1)
                    })
                    .min();
                if joined.complexity_monotone(y, &x) != want {
                    return Err(format!(
                        "round {case}: join miscosts object {y} at {x} (wanted {want:?})"
                    ));
                }
            }
        }

        let short = testing::random_mode_with_short_objects(&mut rng, depth, 12);
        let width = length_encoding_width(short.depth());
        let (length_mode, _) = to_length_mode(&short);
        let back = from_length_mode(&length_mode)
            .map_err(|e| format!("round {case}: length mode does not decode: {e}"))?;
        if !length_mode.is_valid() || !back.is_valid() {
            return Err(format!("round {case}: a length-mode direction is invalid"));
        }
        for x in strings_up_to(short.depth()) {
            let direct = short.complexity_monotone(&x, &x);
            let len_c = length_mode.complexity_monotone(&encode_length(x.len(), width), &x);
            if let Some(d) = direct {
                if len_c.is_none_or(|l| l > d) {
                    return Err(format!(
                        "round {case}: describing the length of {x} costs {len_c:?} > {d}"
                    ));
                }
            }
            let back_c = back.complexity_monotone(&x, &x);
            if let Some(l) = len_c {
                if back_c.is_none_or(|b| b > l) {
                    return Err(format!(
                        "round {case}: recovering {x} from its length costs {back_c:?} > {l}"
                    ));
                }
            }
        }
    }
    Ok("500 rounds of trim, join, and length bounds".into())
}

/// The full verification battery is clean and byte-deterministic: two runs
/// with the same seed render identical JSONL.
fn deterministic_battery() -> Result<String, String> {
    let first = verify::run_all(SEED, false);
    let second = verify::run_all(SEED, false);
    for summary in &first {
        if !summary.ok() {
            return Err(format!(
                "module {} failed {} of {} cases",
                summary.module, summary.failed, summary.cases
            ));
        }
    }
    let a = render_jsonl(&first);
    let b = render_jsonl(&second);
    if a != b {
        return Err("two runs with the same seed rendered different traces".into());
    }
    Ok(format!("{} modules clean, reruns byte-identical", first.len()))
}

fn main() {
    let mut failures = 0;
    criterion(
        &mut failures,
        1,
        "enumerator scripts and stopping machines round-trip",
        Duration::from_secs(30),
        scripts_and_machines,
    );
    criterion(
        &mut failures,
        2,
        "both coloring strategies stay sound under random play",
        Duration::from_secs(60),
        coloring_strategies,
    );
    criterion(
        &mut failures,
        3,
        "announcement schedules flatten into prefix-free families",
        Duration::from_secs(30),
        schedules_to_families,
    );
    criterion(
        &mut failures,
        4,
        "the extension oracle is bounded, small, and exact",
        Duration::from_secs(60),
        oracle_checks,
    );
    criterion(
        &mut failures,
        5,
        "the builder beats every shipped opponent team",
        Duration::from_secs(30),
        builder_beats_teams,
    );
    criterion(
        &mut failures,
        6,
        "layered allocation serves legal streams within fixed width",
        Duration::from_secs(120),
        allocation_streams,
    );
    criterion(
        &mut failures,
        7,
        "the declaration adversary corners every shipped assigner",
        Duration::from_secs(60),
        adversary_corners_assigners,
    );
    criterion(
        &mut failures,
        8,
        "conditional schedules minimize pointwise within class",
        Duration::from_secs(10),
        conditional_minimum,
    );
    criterion(
        &mut failures,
        9,
        "mode transformations keep their exact complexity accounting",
        Duration::from_secs(30),
        mode_transformations,
    );
    criterion(
        &mut failures,
        10,
        "the verification battery is byte-deterministic",
        Duration::from_secs(10),
        deterministic_battery,
    );
    if failures > 0 {
        println!("ACCEPTANCE: {failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("ACCEPTANCE: all 10 criteria hold");
}
