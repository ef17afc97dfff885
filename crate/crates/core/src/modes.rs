//! Finite description modes.
//!
//! A mode is a finite set of (description, condition, object) triples. A
//! stored triple `(p, z, y)` semantically also describes `y` at every
//! condition extending `z`; the monotone closure is never materialized, every
//! query walks the prefix order instead. The uniqueness discipline says that
//! a pair (description, condition) may reach at most one object; since a
//! stored condition only interacts with conditions comparable to it, a mode
//! is valid exactly when no two stored triples share a description, carry
//! comparable conditions and name different objects.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::machines::EnumeratorScript;
use crate::tree::{are_compatible, is_prefix, strings_of_length, strings_up_to, BitString, PrefixFreeSet};

/// One stored (description, condition, object) triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub description: BitString,
    pub condition: BitString,
    pub object: BitString,
}

impl Triple {
    pub fn new(description: BitString, condition: BitString, object: BitString) -> Self {
        Triple { description, condition, object }
    }
}

/// A pair of stored triples that jointly violate uniqueness: same
/// description, comparable conditions, different objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniquenessViolation {
    pub first: Triple,
    pub second: Triple,
}

fn conflicts(a: &Triple, b: &Triple) -> bool {
    a.description == b.description
        && a.object != b.object
        && are_compatible(&a.condition, &b.condition)
}

/// A finite description mode: stored triples plus the condition depth used
/// as the evaluation horizon by the depth-dependent transformers.
#[derive(Clone, Debug)]
pub struct FiniteDescriptionMode {
    triples: Vec<Triple>,
    depth: usize,
}

impl FiniteDescriptionMode {
    /// Stores the triples as given (exact duplicates collapsed, first
    /// occurrence kept). Use [`FiniteDescriptionMode::validate`] to check
    /// uniqueness.
    pub fn new(triples: Vec<Triple>, depth: usize) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        let triples = triples.into_iter().filter(|t| seen.insert(*t)).collect();
        FiniteDescriptionMode { triples, depth }
    }

    pub fn empty(depth: usize) -> Self {
        FiniteDescriptionMode { triples: Vec::new(), depth }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// The stored triples as a canonical sorted set, for comparisons.
    pub fn triple_set(&self) -> std::collections::BTreeSet<Triple> {
        self.triples.iter().copied().collect()
    }

    /// Reports every uniqueness violation as the pair of stored triples that
    /// clash. The mode is valid iff the report is empty.
    pub fn validate(&self) -> Vec<UniquenessViolation> {
        let mut report = Vec::new();
        for (i, a) in self.triples.iter().enumerate() {
            for b in self.triples.iter().skip(i + 1) {
                if conflicts(a, b) {
                    report.push(UniquenessViolation { first: *a, second: *b });
                }
            }
        }
        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// True iff `(description, condition, object)` is in the monotone
    /// closure of the stored triples.
    pub fn semantically_contains(&self, description: &BitString, condition: &BitString, object: &BitString) -> bool {
        self.triples.iter().any(|t| {
            t.description == *description
                && t.object == *object
                && is_prefix(&t.condition, condition)
        })
    }

    /// Minimum description length for `object` under condition `x`, counting
    /// every stored triple whose condition is a prefix of `x`. `None` means
    /// no description reaches the object there.
    pub fn complexity_monotone(&self, object: &BitString, x: &BitString) -> Option<u32> {
        self.triples
            .iter()
            .filter(|t| t.object == *object && is_prefix(&t.condition, x))
            .map(|t| t.description.len() as u32)
            .min()
    }

    /// Minimum description length for `object` among triples stored at
    /// exactly condition `x` (no closure).
    pub fn complexity_plain(&self, object: &BitString, x: &BitString) -> Option<u32> {
        self.triples
            .iter()
            .filter(|t| t.object == *object && t.condition == *x)
            .map(|t| t.description.len() as u32)
            .min()
    }

    /// Largest description length appearing in the mode.
    pub fn max_description_len(&self) -> usize {
        self.triples.iter().map(|t| t.description.len()).max().unwrap_or(0)
    }
}

/// Replays a stream of triples in order, admitting each one only if it keeps
/// the mode valid together with everything admitted before; conflicting
/// triples are ignored. The result is always a valid mode, and the operation
/// depends on stream order.
pub fn trim_to_mode(stream: &[Triple], depth: usize) -> FiniteDescriptionMode {
    let mut kept: Vec<Triple> = Vec::new();
    for t in stream {
        if kept.iter().all(|k| !conflicts(k, t)) && !kept.contains(t) {
            kept.push(*t);
        }
    }
    FiniteDescriptionMode { triples: kept, depth }
}

/// Joins a list of modes into one: the `m`-th mode's triples are re-framed
/// with descriptions `0^m 1 p`, so a description under the join is exactly
/// `m + 1` bits longer than under the mode it came from.
pub fn join_modes(modes: &[FiniteDescriptionMode]) -> FiniteDescriptionMode {
    let mut triples = Vec::new();
    for (m, mode) in modes.iter().enumerate() {
        let mut frame = BitString::EMPTY;
        for _ in 0..m {
            frame = frame.child(false);
        }
        frame = frame.child(true);
        for t in mode.triples() {
            triples.push(Triple::new(frame.concat(&t.description), t.condition, t.object));
        }
    }
    let depth = modes.iter().map(|m| m.depth()).max().unwrap_or(0);
    FiniteDescriptionMode::new(triples, depth)
}

/// Width of the fixed-width binary encoding of lengths `0..=depth`.
pub fn length_encoding_width(depth: usize) -> usize {
    if depth == 0 {
        0
    } else {
        (usize::BITS - depth.leading_zeros()) as usize
    }
}

/// Fixed-width binary encoding of a length.
pub fn encode_length(n: usize, width: usize) -> BitString {
    BitString::from_value(n as u64, width)
}

/// Value of a fixed-width length encoding.
pub fn decode_length(s: &BitString) -> usize {
    let mut v = 0usize;
    for b in s.iter_bits() {
        v = (v << 1) | usize::from(b);
    }
    v
}

/// Why a triple was dropped by [`to_length_mode`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropReason {
    /// Replacing the object by its length collided with an earlier kept
    /// triple under uniqueness.
    Conflict { kept: Triple },
    /// The object is longer than the mode depth, so its length does not fit
    /// the fixed encoding width.
    ObjectTooLong,
}

/// A triple dropped by a transformer, with the reason.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DroppedTriple {
    pub triple: Triple,
    pub reason: DropReason,
}

/// Replaces every object by the fixed-width encoding of its length. Triples
/// that would break uniqueness after the replacement are dropped in stored
/// order and reported.
pub fn to_length_mode(mode: &FiniteDescriptionMode) -> (FiniteDescriptionMode, Vec<DroppedTriple>) {
    let width = length_encoding_width(mode.depth());
    let mut kept: Vec<Triple> = Vec::new();
    let mut dropped = Vec::new();
    for t in mode.triples() {
        if t.object.len() > mode.depth() {
            dropped.push(DroppedTriple { triple: *t, reason: DropReason::ObjectTooLong });
            continue;
        }
        let mapped = Triple::new(t.description, t.condition, encode_length(t.object.len(), width));
        match kept.iter().find(|k| conflicts(k, &mapped)) {
            Some(k) => dropped.push(DroppedTriple { triple: *t, reason: DropReason::Conflict { kept: *k } }),
            None => {
                if !kept.contains(&mapped) {
                    kept.push(mapped);
                }
            }
        }
    }
    (FiniteDescriptionMode { triples: kept, depth: mode.depth() }, dropped)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModeError {
    #[error("object {object:?} of triple with description {description:?} is not a width-{width} length encoding")]
    InvalidLengthEncoding {
        description: BitString,
        object: BitString,
        width: usize,
    },
}

/// Inverts a length mode: whenever the input semantically holds
/// `(p, u, enc(n))` with `|u| >= n`, the output describes the `n`-bit prefix
/// of `u` by `p` at condition `u`.
///
/// Stored compactly: a stored `(p, w, enc(n))` with `|w| >= n` becomes
/// `(p, w, w[..n])`, and with `|w| < n` becomes one diagonal triple
/// `(p, v, v)` for every length-`n` extension `v` of `w`; the monotone
/// closures coincide. Objects must be fixed-width length encodings.
pub fn from_length_mode(mode: &FiniteDescriptionMode) -> Result<FiniteDescriptionMode, ModeError> {
    let width = length_encoding_width(mode.depth());
    let mut triples = Vec::new();
    for t in mode.triples() {
        if t.object.len() != width {
            return Err(ModeError::InvalidLengthEncoding {
                description: t.description,
                object: t.object,
                width,
            });
        }
        let n = decode_length(&t.object);
        if n > mode.depth() {
            // No condition within the horizon is long enough.
            continue;
        }
        if t.condition.len() >= n {
            triples.push(Triple::new(t.description, t.condition, t.condition.truncate(n)));
        } else {
            let w = &t.condition;
            for tail in strings_of_length(n - w.len()) {
                let v = w.concat(&tail);
                triples.push(Triple::new(t.description, v, v));
            }
        }
    }
    Ok(FiniteDescriptionMode::new(triples, mode.depth()))
}

/// For each description `p`, the set of objects the mode describes "at
/// themselves": `y` is in the family of `p` iff `(p, y, y)` is in the
/// semantic closure. For a valid mode every family is prefix-free.
///
/// # Panics
///
/// Panics if the mode is invalid in a way that makes some family contain
/// comparable strings; validate first.
pub fn mode_to_families(mode: &FiniteDescriptionMode) -> BTreeMap<BitString, PrefixFreeSet> {
    let mut families: BTreeMap<BitString, PrefixFreeSet> = BTreeMap::new();
    for t in mode.triples() {
        if is_prefix(&t.condition, &t.object) {
            families
                .entry(t.description)
                .or_default()
                .insert(t.object)
                .expect("families of a valid mode are prefix-free");
        }
    }
    families.retain(|_, fam| !fam.is_empty());
    families
}

/// Builds the diagonal mode of a family map: for every description `p` and
/// every emission `y` of its script, stores `(p, y, y)`.
///
/// # Panics
///
/// Panics if some script is not prefix-free; trim scripts first.
pub fn families_to_mode(families: &BTreeMap<BitString, EnumeratorScript>) -> FiniteDescriptionMode {
    let mut triples = Vec::new();
    let mut depth = 0usize;
    for (p, script) in families {
        assert!(script.is_prefix_free(), "family script for {p:?} is not prefix-free");
        for y in script.emissions() {
            depth = depth.max(y.len());
            triples.push(Triple::new(*p, *y, *y));
        }
    }
    FiniteDescriptionMode::new(triples, depth)
}

/// Materializes the monotone closure out to the mode depth, storing one
/// exact-condition triple per (description, condition, object). Exponential
/// in depth; meant for cross-checking the lazy closure on small modes.
pub fn expand_to_depth(mode: &FiniteDescriptionMode) -> FiniteDescriptionMode {
    let mut triples = Vec::new();
    for x in strings_up_to(mode.depth()) {
        for t in mode.triples() {
            if is_prefix(&t.condition, &x) {
                triples.push(Triple::new(t.description, x, t.object));
            }
        }
    }
    FiniteDescriptionMode::new(triples, mode.depth())
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("mode file line {line}: {reason}")]
pub struct ModeFileError {
    pub line: usize,
    pub reason: String,
}

/// Parses a mode file: one `description<TAB>condition<TAB>object` triple per
/// line, `-` for the empty string, `#` starts a comment.
pub fn parse_mode_file(text: &str) -> Result<Vec<Triple>, ModeFileError> {
    let mut triples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(ModeFileError {
                line: idx + 1,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let parse = |f: &str| -> Result<BitString, ModeFileError> {
            if f == "-" {
                Ok(BitString::EMPTY)
            } else {
                BitString::parse(f).map_err(|e| ModeFileError { line: idx + 1, reason: e.to_string() })
            }
        };
        triples.push(Triple::new(parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
    }
    Ok(triples)
}

fn field(s: &BitString) -> String {
    if s.is_empty() {
        "-".to_string()
    } else {
        s.to_string()
    }
}

/// Renders triples in the file format accepted by [`parse_mode_file`].
pub fn write_mode_file(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&field(&t.description));
        out.push('\t');
        out.push_str(&field(&t.condition));
        out.push('\t');
        out.push_str(&field(&t.object));
        out.push('\n');
    }
    out
}
