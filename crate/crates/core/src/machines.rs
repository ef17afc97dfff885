//! Machines that read an input tape one-way and halt, and their equivalence
//! with prefix-free enumerators.
//!
//! A machine requests bits one at a time and may halt having read exactly
//! some prefix `z` of its input; determinism then forces it to behave the
//! same way on every extension of `z`, so the set of strings a machine "stops
//! at" is prefix-free. Conversely, any prefix-free enumeration can be turned
//! into a machine that waits for the enumeration to commit to an extension of
//! the bits read so far. Both directions are implemented at explicit depth
//! and fuel bounds.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::tree::{check_prefix_free, is_prefix, BitString};

/// What a machine asks for after one step of computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    /// Read the next input bit before the following step.
    RequestBit,
    /// Compute without touching the tape.
    InternalStep,
    /// Halt; the machine stops at the prefix read so far.
    Halt,
}

/// Result of simulating a machine on a concrete finite input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    /// Halted having read exactly this prefix of the input.
    StopsAt(BitString),
    /// Requested a bit beyond the end of the finite input.
    RanOffInput,
    /// Did not resolve within the fuel bound.
    FuelExhausted,
}

/// A deterministic machine with a one-way input tape.
///
/// `step` receives the current state and the most recently read bit (`None`
/// before the first read). It must be a pure function of its arguments.
pub trait StoppingMachine {
    type State: Clone + PartialEq;

    fn initial_state(&self) -> Self::State;
    fn step(&self, state: &Self::State, last_bit: Option<bool>) -> (Self::State, Action);
}

/// Simulates `m` on `input` for at most `fuel` steps.
pub fn run_on<M: StoppingMachine>(m: &M, input: &BitString, fuel: u64) -> RunOutcome {
    run_on_counting(m, input, fuel).0
}

/// Like [`run_on`], also reporting how many steps the run took.
pub fn run_on_counting<M: StoppingMachine>(
    m: &M,
    input: &BitString,
    fuel: u64,
) -> (RunOutcome, u64) {
    let mut state = m.initial_state();
    let mut last: Option<bool> = None;
    let mut pos = 0usize;
    let mut steps = 0u64;
    loop {
        if steps == fuel {
            return (RunOutcome::FuelExhausted, steps);
        }
        steps += 1;
        let (next, action) = m.step(&state, last);
        state = next;
        match action {
            Action::Halt => {
                return (RunOutcome::StopsAt(input.truncate(pos)), steps);
            }
            Action::RequestBit => {
                if pos == input.len() {
                    return (RunOutcome::RanOffInput, steps);
                }
                last = Some(input.bit(pos));
                pos += 1;
            }
            Action::InternalStep => {}
        }
    }
}

/// All strings `z` with `|z| <= depth` such that the machine halts having
/// read exactly `z` within `fuel` steps.
///
/// Equivalent to running [`run_on`] on every string up to `depth`, but
/// explores the input tree once, sharing the computation on common prefixes.
/// A one-step state fixpoint that neither reads nor halts can never halt, so
/// that branch is pruned; this does not change membership, which only asks
/// whether a halt happens within the fuel bound.
pub fn stop_set<M: StoppingMachine>(m: &M, depth: usize, fuel: u64) -> BTreeSet<BitString> {
    let mut found = BTreeSet::new();
    explore(m, m.initial_state(), None, BitString::EMPTY, depth, fuel, &mut found);
    found
}

fn explore<M: StoppingMachine>(
    m: &M,
    mut state: M::State,
    last: Option<bool>,
    prefix: BitString,
    depth: usize,
    mut fuel: u64,
    found: &mut BTreeSet<BitString>,
) {
    loop {
        if fuel == 0 {
            return;
        }
        fuel -= 1;
        let (next, action) = m.step(&state, last);
        match action {
            Action::Halt => {
                found.insert(prefix);
                return;
            }
            Action::RequestBit => {
                if prefix.len() == depth {
                    return;
                }
                for bit in [false, true] {
                    explore(m, next.clone(), Some(bit), prefix.child(bit), depth, fuel, found);
                }
                return;
            }
            Action::InternalStep => {
                if next == state {
                    return;
                }
                state = next;
            }
        }
    }
}

/// Pairs every member of the stop set with the step count at which the halt
/// happens. Discovery order of a fair interleaved simulation is "first by
/// halting time, then shortest input, then lexicographic", which is exactly
/// how [`enumerator_from_machine`] orders its output.
pub fn stop_set_with_times<M: StoppingMachine>(
    m: &M,
    depth: usize,
    fuel: u64,
) -> Vec<(BitString, u64)> {
    let mut out = Vec::new();
    for z in crate::tree::strings_up_to(depth) {
        if let (RunOutcome::StopsAt(at), steps) = run_on_counting(m, &z, fuel) {
            if at == z {
                out.push((z, steps));
            }
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MachineError {
    #[error("enumerator script is not prefix-free: {shorter:?} is a prefix of {longer:?}")]
    ScriptNotPrefixFree { shorter: BitString, longer: BitString },
}

/// A finite enumeration of bit strings, in emission order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnumeratorScript {
    emissions: Vec<BitString>,
}

impl EnumeratorScript {
    pub fn new(emissions: Vec<BitString>) -> Self {
        Self { emissions }
    }

    pub fn emissions(&self) -> &[BitString] {
        &self.emissions
    }

    pub fn len(&self) -> usize {
        self.emissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emissions.is_empty()
    }

    pub fn max_emission_len(&self) -> usize {
        self.emissions.iter().map(|e| e.len()).max().unwrap_or(0)
    }

    pub fn emitted_set(&self) -> BTreeSet<BitString> {
        self.emissions.iter().copied().collect()
    }

    pub fn is_prefix_free(&self) -> bool {
        check_prefix_free(&self.emissions)
    }
}

/// Replays the script in order, dropping every emission comparable with an
/// earlier kept one. The result is prefix-free and the operation is
/// idempotent.
pub fn trim_script(script: &EnumeratorScript) -> EnumeratorScript {
    let mut kept: Vec<BitString> = Vec::new();
    for e in script.emissions() {
        if kept.iter().all(|k| !is_prefix(k, e) && !is_prefix(e, k)) {
            kept.push(*e);
        }
    }
    EnumeratorScript::new(kept)
}

/// The machine built from a prefix-free enumeration: it scans the emissions
/// in order and only reads another input bit once some emission properly
/// extends the bits read so far; it halts when the bits read so far are
/// themselves emitted.
#[derive(Clone, Debug)]
pub struct WaitingMachine {
    script: EnumeratorScript,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WaitingState {
    prefix: BitString,
    scan: u16,
    target: Option<u16>,
    expecting_bit: bool,
}

impl WaitingMachine {
    pub fn script(&self) -> &EnumeratorScript {
        &self.script
    }
}

impl StoppingMachine for WaitingMachine {
    type State = WaitingState;

    fn initial_state(&self) -> WaitingState {
        WaitingState {
            prefix: BitString::EMPTY,
            scan: 0,
            target: None,
            expecting_bit: false,
        }
    }

    fn step(&self, state: &WaitingState, last_bit: Option<bool>) -> (WaitingState, Action) {
        let mut s = *state;
        if s.expecting_bit {
            // The bit requested on the previous step has been delivered.
            s.prefix = s.prefix.child(last_bit.expect("runner delivers a bit after a read"));
            s.expecting_bit = false;
        }
        if let Some(t) = s.target {
            let tv = self.script.emissions()[t as usize];
            if !is_prefix(&s.prefix, &tv) {
                // The input diverged from the tentative target; resume the scan.
                s.target = None;
            } else if s.prefix == tv {
                return (s, Action::Halt);
            } else {
                s.expecting_bit = true;
                return (s, Action::RequestBit);
            }
        }
        if (s.scan as usize) < self.script.len() {
            let u = self.script.emissions()[s.scan as usize];
            s.scan += 1;
            if u == s.prefix {
                return (s, Action::Halt);
            }
            if is_prefix(&s.prefix, &u) {
                s.target = Some(s.scan - 1);
            }
            return (s, Action::InternalStep);
        }
        // Nothing emitted extends the bits read so far: idle forever.
        (s, Action::InternalStep)
    }
}

/// Builds the waiting machine for a prefix-free script.
pub fn machine_from_enumerator(script: &EnumeratorScript) -> Result<WaitingMachine, MachineError> {
    let mut sorted = script.emissions().to_vec();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] || is_prefix(&w[0], &w[1]) {
            return Err(MachineError::ScriptNotPrefixFree {
                shorter: w[0],
                longer: w[1],
            });
        }
    }
    Ok(WaitingMachine { script: script.clone() })
}

/// Fuel that is always sufficient for a waiting machine to resolve any input
/// it can resolve: one scan of the script plus one step per input bit, with
/// slack.
pub fn ample_fuel(script: &EnumeratorScript) -> u64 {
    (script.len() as u64) * (script.max_emission_len() as u64 + 1) * 4 + 16
}

/// Enumerates the stop set of a machine in the discovery order of a fair
/// interleaved simulation over all inputs up to `depth`: earlier halting
/// times first, ties broken breadth-first (shorter inputs first, then
/// lexicographic).
pub fn enumerator_from_machine<M: StoppingMachine>(
    m: &M,
    depth: usize,
    fuel: u64,
) -> EnumeratorScript {
    let mut timed = stop_set_with_times(m, depth, fuel);
    timed.sort_by_key(|(z, steps)| (*steps, z.len(), *z));
    EnumeratorScript::new(timed.into_iter().map(|(z, _)| z).collect())
}

/// A few concrete machines, used by the command-line tool and as fixtures.
#[derive(Clone, Debug)]
pub enum BuiltinMachine {
    /// Halts immediately; stops at the empty string.
    ImmediateHalt,
    /// Reads exactly `n` bits, then halts.
    HaltAfterReads(u32),
    /// Computes forever without reading.
    LoopForever,
    /// Reads bits until it has seen `n` ones, then halts.
    HaltOnOnes(u32),
}

impl StoppingMachine for BuiltinMachine {
    type State = u32;

    fn initial_state(&self) -> u32 {
        0
    }

    fn step(&self, state: &u32, last_bit: Option<bool>) -> (u32, Action) {
        match self {
            BuiltinMachine::ImmediateHalt => (*state, Action::Halt),
            BuiltinMachine::HaltAfterReads(n) => {
                if *state == *n {
                    (*state, Action::Halt)
                } else {
                    (*state + 1, Action::RequestBit)
                }
            }
            BuiltinMachine::LoopForever => (*state, Action::InternalStep),
            BuiltinMachine::HaltOnOnes(n) => {
                // Every non-halting step issues exactly one read, so each
                // step sees one fresh bit and may count it once.
                let ones = *state + u32::from(last_bit == Some(true));
                if ones >= *n {
                    (ones, Action::Halt)
                } else {
                    (ones, Action::RequestBit)
                }
            }
        }
    }
}

/// A finite-control machine given by an explicit transition table, used to
/// exercise the simulator on arbitrary (possibly divergent) behavior.
#[derive(Clone, Debug)]
pub struct TableMachine {
    /// `transitions[state][ctx]` with ctx 0 = no bit read yet, 1 = last bit
    /// was 0, 2 = last bit was 1.
    pub transitions: Vec<[(u16, Action); 3]>,
}

impl StoppingMachine for TableMachine {
    type State = u16;

    fn initial_state(&self) -> u16 {
        0
    }

    fn step(&self, state: &u16, last_bit: Option<bool>) -> (u16, Action) {
        let ctx = match last_bit {
            None => 0,
            Some(false) => 1,
            Some(true) => 2,
        };
        let (next, action) = self.transitions[*state as usize][ctx];
        (next.min(self.transitions.len() as u16 - 1), action)
    }
}

/// Parses a script file: one emission per line, `-` for the empty string,
/// `#` starts a comment.
pub fn parse_script_file(text: &str) -> Result<EnumeratorScript, ScriptFileError> {
    let mut emissions = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let s = if line == "-" {
            BitString::EMPTY
        } else {
            BitString::parse(line).map_err(|e| ScriptFileError {
                line: idx + 1,
                reason: e.to_string(),
            })?
        };
        emissions.push(s);
    }
    Ok(EnumeratorScript::new(emissions))
}

/// Renders a script in the file format accepted by [`parse_script_file`].
pub fn write_script_file(script: &EnumeratorScript) -> String {
    let mut out = String::new();
    for e in script.emissions() {
        if e.is_empty() {
            out.push('-');
        } else {
            out.push_str(&e.to_string());
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("script file line {line}: {reason}")]
pub struct ScriptFileError {
    pub line: usize,
    pub reason: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::strings_up_to;

    fn bs(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    fn script(strs: &[&str]) -> EnumeratorScript {
        EnumeratorScript::new(strs.iter().map(|s| bs(s)).collect())
    }

    /// The obvious reference: run every input separately.
    fn stop_set_by_runs<M: StoppingMachine>(m: &M, depth: usize, fuel: u64) -> BTreeSet<BitString> {
        let mut out = BTreeSet::new();
        for z in strings_up_to(depth) {
            if run_on(m, &z, fuel) == RunOutcome::StopsAt(z) {
                out.insert(z);
            }
        }
        out
    }

    #[test]
    fn two_reads_machine_stops_at_every_two_bit_string() {
        let m = BuiltinMachine::HaltAfterReads(2);
        let set = stop_set(&m, 3, 100);
        let want: BTreeSet<BitString> =
            ["00", "01", "10", "11"].iter().map(|s| bs(s)).collect();
        assert_eq!(set, want);
    }

    #[test]
    fn immediate_halt_stops_at_root_only() {
        let m = BuiltinMachine::ImmediateHalt;
        assert_eq!(run_on(&m, &bs("0110"), 10), RunOutcome::StopsAt(bs("")));
        let set = stop_set(&m, 4, 10);
        assert_eq!(set.len(), 1);
        assert!(set.contains(&bs("")));
    }

    #[test]
    fn loop_forever_exhausts_fuel_and_stops_nowhere() {
        let m = BuiltinMachine::LoopForever;
        assert_eq!(run_on(&m, &bs("01"), 50), RunOutcome::FuelExhausted);
        assert!(stop_set(&m, 4, 50).is_empty());
        assert!(enumerator_from_machine(&m, 4, 50).is_empty());
    }

    #[test]
    fn empty_script_machine_never_halts() {
        let s = script(&[]);
        let m = machine_from_enumerator(&s).unwrap();
        assert!(stop_set(&m, 3, 1000).is_empty());
    }

    #[test]
    fn short_input_runs_off() {
        let m = BuiltinMachine::HaltAfterReads(2);
        assert_eq!(run_on(&m, &bs("1"), 100), RunOutcome::RanOffInput);
    }

    #[test]
    fn halt_on_ones_stops_after_first_one() {
        let m = BuiltinMachine::HaltOnOnes(1);
        assert_eq!(run_on(&m, &bs("01"), 100), RunOutcome::StopsAt(bs("01")));
        assert_eq!(run_on(&m, &bs("011"), 100), RunOutcome::StopsAt(bs("01")));
        let set = stop_set(&m, 3, 100);
        let want: BTreeSet<BitString> = ["1", "01", "001"].iter().map(|s| bs(s)).collect();
        assert_eq!(set, want);
    }

    #[test]
    fn waiting_machine_recovers_script_set() {
        let s = script(&["1", "00", "01"]);
        let m = machine_from_enumerator(&s).unwrap();
        let set = stop_set(&m, 4, ample_fuel(&s));
        assert_eq!(set, s.emitted_set());
    }

    #[test]
    fn waiting_machine_on_single_empty_emission() {
        let s = script(&[""]);
        let m = machine_from_enumerator(&s).unwrap();
        assert_eq!(run_on(&m, &bs("101"), ample_fuel(&s)), RunOutcome::StopsAt(bs("")));
        let set = stop_set(&m, 3, ample_fuel(&s));
        assert_eq!(set, s.emitted_set());
    }

    #[test]
    fn waiting_machine_rejects_comparable_script() {
        let err = machine_from_enumerator(&script(&["10", "1"])).unwrap_err();
        assert_eq!(
            err,
            MachineError::ScriptNotPrefixFree { shorter: bs("1"), longer: bs("10") }
        );
    }

    #[test]
    fn trim_drops_later_comparable_emissions() {
        assert_eq!(trim_script(&script(&["10", "1"])), script(&["10"]));
        assert_eq!(trim_script(&script(&["1", "10"])), script(&["1"]));
        let t = trim_script(&script(&["0", "10", "0", "101", "11"]));
        assert_eq!(t, script(&["0", "10", "11"]));
        assert_eq!(trim_script(&t), t);
    }

    #[test]
    fn enumeration_of_two_reads_machine_is_breadth_first() {
        let m = BuiltinMachine::HaltAfterReads(2);
        let e = enumerator_from_machine(&m, 2, 100);
        assert_eq!(e, script(&["00", "01", "10", "11"]));
    }

    #[test]
    fn tree_walk_matches_per_input_runs_on_builtins() {
        for m in [
            BuiltinMachine::ImmediateHalt,
            BuiltinMachine::HaltAfterReads(1),
            BuiltinMachine::HaltAfterReads(3),
            BuiltinMachine::LoopForever,
        ] {
            for fuel in [0u64, 1, 2, 5, 50] {
                assert_eq!(stop_set(&m, 5, fuel), stop_set_by_runs(&m, 5, fuel));
            }
        }
    }

    #[test]
    fn script_file_roundtrip() {
        let s = script(&["01", "", "1"]);
        let text = write_script_file(&s);
        assert_eq!(text, "01\n-\n1\n");
        assert_eq!(parse_script_file(&text).unwrap(), s);
        let commented = "# header\n01  # trailing\n\n-\n1\n";
        assert_eq!(parse_script_file(commented).unwrap(), s);
    }

    proptest::proptest! {
        #[test]
        fn random_table_machines_have_prefix_free_stop_sets(seed in proptest::arbitrary::any::<u64>()) {
            let m = crate::testing::random_table_machine(
                &mut crate::testing::rng(seed, 0), 5);
            let set: Vec<BitString> = stop_set(&m, 6, 64).into_iter().collect();
            proptest::prop_assert!(check_prefix_free(&set));
        }

        #[test]
        fn tree_walk_matches_per_input_runs_on_random_machines(seed in proptest::arbitrary::any::<u64>()) {
            let m = crate::testing::random_table_machine(
                &mut crate::testing::rng(seed, 1), 6);
            for fuel in [3u64, 17, 64] {
                proptest::prop_assert_eq!(stop_set(&m, 5, fuel), stop_set_by_runs(&m, 5, fuel));
            }
        }

        #[test]
        fn more_fuel_never_flips_a_resolved_outcome(seed in proptest::arbitrary::any::<u64>()) {
            let m = crate::testing::random_table_machine(
                &mut crate::testing::rng(seed, 2), 5);
            for z in strings_up_to(4) {
                let small = run_on(&m, &z, 20);
                if small != RunOutcome::FuelExhausted {
                    proptest::prop_assert_eq!(run_on(&m, &z, 200), small);
                }
            }
        }

        #[test]
        fn script_roundtrip_random(seed in proptest::arbitrary::any::<u64>()) {
            let s = crate::testing::random_prefix_free_script(
                &mut crate::testing::rng(seed, 3), 20, 8);
            let m = machine_from_enumerator(&s).unwrap();
            proptest::prop_assert_eq!(stop_set(&m, 8, ample_fuel(&s)), s.emitted_set());
        }
    }
}
