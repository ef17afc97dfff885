//! Worst-oracle complexity over finite modes.
//!
//! An oracle is an infinite branch of the binary tree; at finite scale it is
//! represented by its length-`horizon` prefix, since stored conditions never
//! reach deeper. A description `p` works for object `x` under oracle `X`
//! when some stored `(p, z, x)` has `z` a prefix of `X`; the function
//! computed here is the worst case over all oracles extending `x`:
//!
//! `S(x) = max over X ⊒ x of min { |p| : (p, z, x) stored, z ⊂ X }`.
//!
//! Coverage of the extension subtree by condition intervals decides, at a
//! finite horizon, whether every oracle admits a short description — the
//! finite form of the compactness argument, exact because conditions stop
//! at the mode depth.

use std::collections::{BTreeMap, BTreeSet};

use crate::modes::FiniteDescriptionMode;
use crate::tree::{is_prefix, path_to_root, strings_of_length, BitString};

/// Stored conditions under which `p` describes `x`; each is the root of an
/// interval of oracles.
pub fn describes_with_oracle(
    mode: &FiniteDescriptionMode,
    p: &BitString,
    x: &BitString,
) -> BTreeSet<BitString> {
    mode.triples()
        .iter()
        .filter(|t| t.description == *p && t.object == *x)
        .map(|t| t.condition)
        .collect()
}

/// Minimum description length per activation condition: condition `z` maps
/// to the shortest `p` with `(p, z, object)` stored.
fn activation_map(mode: &FiniteDescriptionMode, object: &BitString) -> BTreeMap<BitString, u32> {
    let mut map = BTreeMap::new();
    for t in mode.triples() {
        if t.object == *object {
            let len = t.description.len() as u32;
            map.entry(t.condition).and_modify(|m: &mut u32| *m = (*m).min(len)).or_insert(len);
        }
    }
    map
}

const NO_DESCRIPTION: u32 = u32::MAX;

/// Max over length-`horizon` extensions of `v` of the running minimum `m`
/// refined by conditions activated on the way down.
fn worst_case_below(map: &BTreeMap<BitString, u32>, v: &BitString, m: u32, horizon: usize) -> u32 {
    if m == 0 || v.len() == horizon {
        return m;
    }
    let mut worst = 0;
    for bit in [false, true] {
        let child = v.child(bit);
        let mc = m.min(map.get(&child).copied().unwrap_or(NO_DESCRIPTION));
        worst = worst.max(worst_case_below(map, &child, mc, horizon));
        if worst == NO_DESCRIPTION {
            break;
        }
    }
    worst
}

/// Worst-oracle complexity of describing `object` when the oracle is only
/// known to extend `vertex`: max over length-`horizon` extensions of the
/// minimal stored description active there. `None` when some oracle gives
/// `object` no description at all.
pub fn max_over_extensions_at(
    mode: &FiniteDescriptionMode,
    object: &BitString,
    vertex: &BitString,
    horizon: usize,
) -> Option<u32> {
    assert!(vertex.len() <= horizon && horizon <= mode.depth().max(vertex.len()));
    let map = activation_map(mode, object);
    let m = path_to_root(vertex)
        .into_iter()
        .filter_map(|z| map.get(&z).copied())
        .min()
        .unwrap_or(NO_DESCRIPTION);
    match worst_case_below(&map, vertex, m, horizon) {
        NO_DESCRIPTION => None,
        s => Some(s),
    }
}

/// `S(x)`: the worst-oracle complexity of `x` over oracles extending `x`.
pub fn max_over_extensions(mode: &FiniteDescriptionMode, x: &BitString, horizon: usize) -> Option<u32> {
    max_over_extensions_at(mode, x, x, horizon)
}

/// True iff every oracle extending `x` admits a description of `x` shorter
/// than `n`, decided by covering the length-`horizon` extension tree with
/// stored condition intervals.
pub fn covered_below(mode: &FiniteDescriptionMode, x: &BitString, n: u32, horizon: usize) -> bool {
    match max_over_extensions(mode, x, horizon) {
        Some(s) => s < n,
        None => false,
    }
}

/// Reference implementation: enumerate every length-`horizon` extension
/// outright and take the max of per-oracle minima.
pub fn max_over_extensions_brute(
    mode: &FiniteDescriptionMode,
    x: &BitString,
    horizon: usize,
) -> Option<u32> {
    assert!(x.len() <= horizon);
    let mut worst = 0u32;
    for tail in strings_of_length(horizon - x.len()) {
        let leaf = x.concat(&tail);
        let best = mode
            .triples()
            .iter()
            .filter(|t| t.object == *x && is_prefix(&t.condition, &leaf))
            .map(|t| t.description.len() as u32)
            .min()?;
        worst = worst.max(best);
    }
    Some(worst)
}

/// The exact half of the oracle characterization: the worst-oracle
/// complexity never exceeds the monotone-conditional complexity of `x` at
/// its own vertex (`None` counting as infinite).
pub fn check_oracle_inequality(mode: &FiniteDescriptionMode, x: &BitString, horizon: usize) -> bool {
    match (max_over_extensions(mode, x, horizon), mode.complexity_monotone(x, x)) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(s), Some(c)) => s <= c,
    }
}

/// Cardinality discipline of the worst-oracle function: on every branch and
/// for every `n`, fewer than `2^n` prefixes have `S < n`. Only objects of
/// the mode can have finite `S`, so those are the candidates.
pub fn cardinality_check_oracle(mode: &FiniteDescriptionMode, horizon: usize) -> bool {
    let objects: BTreeSet<BitString> = mode
        .triples()
        .iter()
        .map(|t| t.object)
        .filter(|y| y.len() <= horizon)
        .collect();
    let s_of: BTreeMap<BitString, u32> = objects
        .iter()
        .filter_map(|y| max_over_extensions(mode, y, horizon).map(|s| (*y, s)))
        .collect();
    let max_len = mode.max_description_len() as u32;
    for n in 1..=max_len + 1 {
        let set: BTreeSet<&BitString> = s_of.iter().filter(|(_, s)| **s < n).map(|(y, _)| y).collect();
        let worst_chain = set
            .iter()
            .map(|w| set.iter().filter(|u| is_prefix(u, w)).count() as u64)
            .max()
            .unwrap_or(0);
        if worst_chain >= 1u64 << n.min(63) {
            return false;
        }
    }
    true
}

/// Worst-oracle complexity of `x` at every horizon from `|x|` up to `max`;
/// the profile is non-increasing, and its final entry is the value the
/// covering argument stabilizes on.
pub fn extension_profile(mode: &FiniteDescriptionMode, x: &BitString, max: usize) -> Vec<Option<u32>> {
    (x.len()..=max).map(|h| max_over_extensions(mode, x, h)).collect()
}
