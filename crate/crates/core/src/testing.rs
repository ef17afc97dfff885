//! Seeded generators shared by the property tests, the acceptance suite,
//! and the command-line tool's random episodes.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::coloring::{ColoringGame, UpperBoundSchedule};
use crate::machines::{Action, EnumeratorScript, TableMachine};
use crate::modes::{trim_to_mode, FiniteDescriptionMode, Triple};
use crate::tree::{BitString, PrefixFreeSet};

/// One deterministic generator per (seed, stream) pair; distinct streams of
/// the same seed are independent.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform length in `0..=max_len`, uniform bits.
pub fn random_bitstring(rng: &mut ChaCha8Rng, max_len: usize) -> BitString {
    let len = rng.gen_range(0..=max_len);
    let bits = if len == 0 { 0 } else { rng.gen::<u64>() & ((1u64 << len) - 1) };
    BitString::from_value(bits, len)
}

/// A transition table over `states` states with a mix of halting, reading,
/// and silent steps.
pub fn random_table_machine(rng: &mut ChaCha8Rng, states: usize) -> TableMachine {
    let states = states.max(1);
    let transitions = (0..states)
        .map(|_| {
            [0, 1, 2].map(|_| {
                let next = rng.gen_range(0..states) as u16;
                let action = match rng.gen_range(0..100) {
                    0..=24 => Action::Halt,
                    25..=69 => Action::RequestBit,
                    _ => Action::InternalStep,
                };
                (next, action)
            })
        })
        .collect();
    TableMachine { transitions }
}

/// Up to `count` emissions of length ≤ `max_len`, kept prefix-free in
/// generation order.
pub fn random_prefix_free_script(
    rng: &mut ChaCha8Rng,
    count: usize,
    max_len: usize,
) -> EnumeratorScript {
    let mut kept = PrefixFreeSet::new();
    let mut emissions = Vec::new();
    for _ in 0..count {
        let candidate = random_bitstring(rng, max_len);
        if kept.insert(candidate) == Ok(true) {
            emissions.push(candidate);
        }
    }
    EnumeratorScript::new(emissions)
}

/// Raw triples from deliberately small pools so that uniqueness violations
/// and shadowed duplicates occur often.
pub fn random_triple_stream(rng: &mut ChaCha8Rng, depth: usize, count: usize) -> Vec<Triple> {
    (0..count)
        .map(|_| {
            Triple::new(
                random_bitstring(rng, 3),
                random_bitstring(rng, depth),
                random_bitstring(rng, 2),
            )
        })
        .collect()
}

/// A valid mode: a raw stream passed through the order-respecting trim.
pub fn random_mode(rng: &mut ChaCha8Rng, depth: usize, count: usize) -> FiniteDescriptionMode {
    trim_to_mode(&random_triple_stream(rng, depth, count), depth)
}

/// Like [`random_mode`] but with every object short enough to survive the
/// length-mode transformation at this depth.
pub fn random_mode_with_short_objects(
    rng: &mut ChaCha8Rng,
    depth: usize,
    count: usize,
) -> FiniteDescriptionMode {
    let stream: Vec<Triple> = (0..count)
        .map(|_| {
            Triple::new(
                random_bitstring(rng, 3),
                random_bitstring(rng, depth),
                random_bitstring(rng, depth.min(2)),
            )
        })
        .collect();
    trim_to_mode(&stream, depth)
}

/// Up to `count` marks, each legal (≤ k per path) when played in order.
pub fn random_legal_marks(
    rng: &mut ChaCha8Rng,
    k: u32,
    depth: usize,
    count: usize,
) -> Vec<BitString> {
    let mut scratch = ColoringGame::new(k, depth).expect("scratch game parameters are in range");
    let mut marks = Vec::new();
    for _ in 0..count * 8 {
        if marks.len() == count {
            break;
        }
        let v = random_bitstring(rng, depth);
        if scratch.can_mark(&v) {
            scratch.mark(v).expect("can_mark admitted the vertex");
            marks.push(v);
        }
    }
    marks
}

/// Handwritten mark orders that stress the strategies: spines, combs,
/// bottom-up levels, and sibling fans. All stay legal for budgets ≥ 4 and
/// the given depth (≥ 4).
pub fn adversarial_mark_scripts(k: u32, depth: usize) -> Vec<Vec<BitString>> {
    assert!(k >= 4 && depth >= 4);
    let bs = |s: &str| BitString::parse(s).unwrap();
    let left_spine: Vec<BitString> =
        (0..=3.min(depth)).map(|l| BitString::from_value(0, l)).collect();
    let comb: Vec<BitString> =
        (1..=depth.min(4)).map(|l| BitString::from_value(1, l)).collect();
    let bottom_up = vec![
        bs("00"), bs("01"), bs("10"), bs("11"), bs("0"), bs("1"), bs(""),
    ];
    let sibling_fan = vec![
        bs("000"), bs("001"), bs("010"), bs("011"), bs("0"), bs(""),
    ];
    let alternating = vec![
        bs(""), bs("1"), bs("10"), bs("100"), bs("0"), bs("01"),
    ];
    vec![left_spine, comb, bottom_up, sibling_fan, alternating]
}

/// Up to `attempts` random announcements, each kept only if the schedule
/// still satisfies the per-path cardinality discipline.
pub fn random_schedule(
    rng: &mut ChaCha8Rng,
    depth: usize,
    n_max: u32,
    attempts: usize,
) -> UpperBoundSchedule {
    let mut schedule = UpperBoundSchedule::new();
    for _ in 0..attempts {
        let vertex = random_bitstring(rng, depth);
        let bound = rng.gen_range(1..=n_max);
        let mut candidate = schedule.clone();
        if candidate.push(vertex, bound).is_ok() && candidate.check_class_invariant() {
            schedule = candidate;
        }
    }
    schedule
}

/// Up to `attempts` bound announcements over `objects` object ids, each
/// kept only while the schedule stays inside the cardinality class.
pub fn random_conditional_schedule(
    rng: &mut ChaCha8Rng,
    objects: u64,
    depth: usize,
    n_max: u32,
    attempts: usize,
) -> crate::allocation::ConditionalSchedule {
    let mut announcements = Vec::new();
    for _ in 0..attempts {
        announcements.push((
            rng.gen_range(0..objects),
            random_bitstring(rng, depth),
            rng.gen_range(0..=n_max),
        ));
        if !crate::allocation::ConditionalSchedule::new(announcements.clone()).check_class_invariant()
        {
            announcements.pop();
        }
    }
    crate::allocation::ConditionalSchedule::new(announcements)
}

/// A declaration stream legal for per-vertex budget `n`: objects drawn from
/// a pool of `3n` ids so redeclarations and sibling reuse are common.
pub fn random_declaration_stream(
    rng: &mut ChaCha8Rng,
    n: usize,
    depth: usize,
    count: usize,
) -> Vec<(u64, BitString)> {
    let mut scratch = crate::allocation::DeclarationStream::new(n, depth);
    let mut out = Vec::new();
    for _ in 0..count * 8 {
        if out.len() == count {
            break;
        }
        let object = rng.gen_range(0..3 * n as u64);
        let vertex = random_bitstring(rng, depth);
        if scratch.push(object, vertex).is_ok() {
            out.push((object, vertex));
        }
    }
    out
}
