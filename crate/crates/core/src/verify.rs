//! The one-shot verification battery behind `verify-all`: every module
//! replays a seeded batch of its own invariants and reports a summary
//! record. Same seed, same records, byte for byte.

use serde::Serialize;

use crate::allocation::{
    allocator_to_mode, check_escalation_witnesses, make_assigner, run_adversary, verify_layer,
    Allocator, AllocatorConfig, AssignerKind,
};
use crate::beating::{max_emissions_on_a_path, run_beating_game, OpponentKind, Verdict};
use crate::coloring::{play, schedule_to_families, Strategy};
use crate::machines::{ample_fuel, machine_from_enumerator, stop_set};
use crate::modes::{join_modes, to_length_mode, trim_to_mode};
use crate::oracle::{cardinality_check_oracle, check_oracle_inequality};
use crate::testing;
use crate::tree::{check_prefix_free, strings_up_to, BitString};

#[derive(Clone, Debug, Serialize)]
pub struct ModuleSummary {
    pub module: &'static str,
    pub cases: usize,
    pub failed: usize,
}

impl ModuleSummary {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

fn suite(module: &'static str, cases: usize, mut case_ok: impl FnMut(usize) -> bool) -> ModuleSummary {
    let failed = (0..cases).filter(|&i| !case_ok(i)).count();
    ModuleSummary { module, cases, failed }
}

fn verify_modes(seed: u64, cases: usize) -> ModuleSummary {
    let mut rng = testing::rng(seed, 40);
    suite("modes", cases, |_| {
        let stream = testing::random_triple_stream(&mut rng, 4, 18);
        let mode = trim_to_mode(&stream, 4);
        if !mode.is_valid() || trim_to_mode(mode.triples(), 4).triples() != mode.triples() {
            return false;
        }
        let other = testing::random_mode(&mut rng, 4, 10);
        let joined = join_modes(&[mode.clone(), other.clone()]);
        if !joined.is_valid() {
            return false;
        }
        for t in mode.triples().iter().take(4) {
            let direct = mode.complexity_monotone(&t.object, &t.condition);
            let via_join = joined.complexity_monotone(&t.object, &t.condition);
            let other_c = other.complexity_monotone(&t.object, &t.condition);
            let want = [direct.map(|c| c + 1), other_c.map(|c| c + 2)].into_iter().flatten().min();
            if via_join != want {
                return false;
            }
        }
        let (len_mode, _) = to_length_mode(&mode);
        len_mode.is_valid()
    })
}

fn verify_machines(seed: u64, cases: usize) -> ModuleSummary {
    let mut rng = testing::rng(seed, 41);
    suite("machines", cases, |_| {
        let m = testing::random_table_machine(&mut rng, 5);
        let set: Vec<BitString> = stop_set(&m, 6, 48).into_iter().collect();
        if !check_prefix_free(&set) {
            return false;
        }
        let script = testing::random_prefix_free_script(&mut rng, 12, 6);
        let machine = match machine_from_enumerator(&script) {
            Ok(machine) => machine,
            Err(_) => return false,
        };
        stop_set(&machine, 6, ample_fuel(&script)) == script.emitted_set()
    })
}

fn verify_coloring(seed: u64, cases: usize) -> ModuleSummary {
    let mut rng = testing::rng(seed, 42);
    suite("coloring", cases, |i| {
        let k = 1 + (i % 5) as u32;
        let marks = testing::random_legal_marks(&mut rng, k, 8, 16);
        for strategy in [Strategy::FirstFit, Strategy::RankBased] {
            match play(k, 8, &marks, strategy) {
                Ok(records) => {
                    if !records.iter().all(|r| r.ok) {
                        return false;
                    }
                }
                Err(_) => return false,
            }
        }
        let schedule = testing::random_schedule(&mut rng, 6, 3, 12);
        schedule_to_families(&schedule, 6).is_ok()
    })
}

fn verify_oracle(seed: u64, cases: usize) -> ModuleSummary {
    let mut rng = testing::rng(seed, 43);
    suite("oracle", cases, |_| {
        let d = testing::random_mode(&mut rng, 4, 12);
        strings_up_to(4).all(|x| check_oracle_inequality(&d, &x, 4)) && cardinality_check_oracle(&d, 4)
    })
}

fn verify_beating(seed: u64, reps: usize) -> ModuleSummary {
    use OpponentKind::*;
    let teams: Vec<Vec<OpponentKind>> = vec![
        vec![],
        vec![Silent],
        vec![Replicator],
        vec![Sniper],
        vec![Replicator, Sniper],
        vec![Random, Replicator],
    ];
    suite("beating", teams.len() * reps, |i| {
        let kinds = &teams[i % teams.len()];
        let depth = 4 * (kinds.len() + 2);
        let team = crate::beating::make_team(kinds, depth, seed.wrapping_add((i / teams.len()) as u64));
        match run_beating_game(team, depth, 64) {
            Ok(report) => {
                report.verdict == Verdict::Won(kinds.len())
                    && report.sound
                    && max_emissions_on_a_path(&report.transcript, kinds.len()) <= kinds.len()
            }
            Err(_) => false,
        }
    })
}

fn verify_allocation(seed: u64, cases: usize) -> ModuleSummary {
    let mut rng = testing::rng(seed, 44);
    suite("allocation", cases, |i| {
        let n = [1usize, 2, 4][i % 3];
        let config = AllocatorConfig::new(n, 10);
        let stream = testing::random_declaration_stream(&mut rng, n, 10, 10);
        let mut allocator = Allocator::new(config);
        for (object, vertex) in &stream {
            match allocator.declare(*object, *vertex) {
                Ok((layer, _)) if layer <= n + 1 => {}
                _ => return false,
            }
        }
        if !allocator.layers().iter().all(verify_layer) {
            return false;
        }
        if !check_escalation_witnesses(allocator.events()) {
            return false;
        }
        match allocator_to_mode(config, &stream) {
            Ok(mode) => mode.is_valid(),
            Err(_) => false,
        }
    })
}

fn verify_adversary(_seed: u64) -> ModuleSummary {
    let combos = [
        (AssignerKind::Silent, 2, 6),
        (AssignerKind::Greedy, 2, 2),
        (AssignerKind::AlwaysServe, 2, 2),
        (AssignerKind::Frugal, 2, 4),
        (AssignerKind::Silent, 3, 6),
        (AssignerKind::AlwaysServe, 3, 2),
    ];
    suite("adversary", combos.len(), |i| {
        let (kind, n, c) = combos[i];
        let mut assigner = make_assigner(kind);
        match run_adversary(n, assigner.as_mut(), c) {
            Ok(report) => report.max_declarations_at_a_vertex <= 1 << (n - 1),
            Err(_) => false,
        }
    })
}

/// Replays every module's battery with the given seed.
pub fn run_all(seed: u64, quick: bool) -> Vec<ModuleSummary> {
    let cases = if quick { 8 } else { 32 };
    vec![
        verify_modes(seed, cases),
        verify_machines(seed, cases),
        verify_coloring(seed, cases),
        verify_oracle(seed, cases),
        verify_beating(seed, if quick { 2 } else { 4 }),
        verify_allocation(seed, cases),
        verify_adversary(seed),
    ]
}
