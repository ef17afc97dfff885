//! The label-placement game separating prefix-stable from prefix-free play.
//!
//! A builder places labels on tree vertices under the prefix-stable
//! discipline (comparable labeled vertices carry equal labels) and tries to
//! make some labeled vertex unreachable for a finite team of opponents, each
//! of which labels a prefix-free set of vertices (no two of its emissions
//! comparable). The builder wins with a claim `(v, y)` once no opponent has
//! emitted label `y` at `v` or a prefix of `v` and none ever can.
//!
//! The strategy climbs a spine: it places a fresh label deep inside a
//! reserved subtree and answers an exact replication by relabeling the
//! parent — each opponent can replicate at most once on a path — while an
//! emission of the current label at a proper prefix `z` sends the game into
//! the untouched child subtree just off the spine below `z`, where the
//! intruder can never emit again, against a team smaller by one.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{are_compatible, is_prefix, path_to_root, BitString};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BeatingError {
    #[error("a game against {team} opponents needs depth {needed}, have {depth}")]
    DepthExhausted { team: usize, needed: usize, depth: usize },
    #[error("labeled vertices {first} and {second} are comparable; the domain must be prefix-free")]
    DomainNotPrefixFree { first: BitString, second: BitString },
}

/// Prefix-stable closure of a finite labeling out to `depth`: every
/// extension of a labeled vertex inherits its label. The domain must be
/// prefix-free, which makes the closure single-valued.
pub fn prefix_stable_extension(
    f: &BTreeMap<BitString, BitString>,
    depth: usize,
) -> Result<BTreeMap<BitString, BitString>, BeatingError> {
    let keys: Vec<&BitString> = f.keys().collect();
    for (i, a) in keys.iter().enumerate() {
        for b in keys.iter().skip(i + 1) {
            if are_compatible(a, b) {
                return Err(BeatingError::DomainNotPrefixFree { first: **a, second: **b });
            }
        }
    }
    let mut g = BTreeMap::new();
    for (u, y) in f {
        let mut frontier = vec![*u];
        while let Some(v) = frontier.pop() {
            if v.len() > depth {
                continue;
            }
            g.insert(v, *y);
            if v.len() < depth {
                frontier.push(v.child(false));
                frontier.push(v.child(true));
            }
        }
    }
    Ok(g)
}

/// Roots of the reserved subtrees along the all-ones spine: the `i`-th root
/// is `1^i 0`, hosting games against teams of size `i`.
pub fn split_subtrees(depth: usize) -> Vec<BitString> {
    let mut roots = Vec::new();
    let mut root = BitString::EMPTY;
    loop {
        let r = root.child(false);
        if r.len() > depth {
            return roots;
        }
        roots.push(r);
        root = root.child(true);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaceReason {
    /// Opening move of a (sub)game: a fresh label at the spine bottom.
    Open,
    /// Response to an exact replication: same label at the parent.
    Climb,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum GameEvent {
    BuilderPlace {
        round: usize,
        vertex: BitString,
        label: BitString,
        reason: PlaceReason,
    },
    OpponentEmit {
        round: usize,
        opponent: usize,
        vertex: BitString,
        label: BitString,
    },
    /// The emission was rejected (comparable with the opponent's own earlier
    /// emission) and the opponent plays no further part.
    OpponentDisqualified {
        round: usize,
        opponent: usize,
        vertex: BitString,
        label: BitString,
    },
    /// An intrusion at `at` sent the game into the subtree at `root`,
    /// dropping the intruding opponent.
    RecursionStart {
        round: usize,
        opponent: usize,
        at: BitString,
        root: BitString,
    },
}

/// Append-only public record of the game.
#[derive(Clone, Debug, Default)]
pub struct Transcript {
    events: Vec<GameEvent>,
}

impl Transcript {
    pub fn events(&self) -> &[GameEvent] {
        &self.events
    }

    fn push(&mut self, e: GameEvent) {
        self.events.push(e);
    }

    pub fn latest_builder_placement(&self) -> Option<(BitString, BitString)> {
        self.events.iter().rev().find_map(|e| match e {
            GameEvent::BuilderPlace { vertex, label, .. } => Some((*vertex, *label)),
            _ => None,
        })
    }

    pub fn builder_placements(&self) -> Vec<(BitString, BitString)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                GameEvent::BuilderPlace { vertex, label, .. } => Some((*vertex, *label)),
                _ => None,
            })
            .collect()
    }

    pub fn accepted_emissions(&self, opponent: usize) -> Vec<(BitString, BitString)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                GameEvent::OpponentEmit { opponent: j, vertex, label, .. } if *j == opponent => {
                    Some((*vertex, *label))
                }
                _ => None,
            })
            .collect()
    }

    fn labels_in_use(&self) -> BTreeSet<BitString> {
        self.events
            .iter()
            .filter_map(|e| match e {
                GameEvent::BuilderPlace { label, .. } | GameEvent::OpponentEmit { label, .. } => {
                    Some(*label)
                }
                _ => None,
            })
            .collect()
    }
}

/// Comparable builder placements always carry equal labels.
pub fn builder_labeling_prefix_stable(transcript: &Transcript) -> bool {
    let placed = transcript.builder_placements();
    for (i, (v, y)) in placed.iter().enumerate() {
        for (w, z) in placed.iter().skip(i + 1) {
            if are_compatible(v, w) && y != z {
                return false;
            }
        }
    }
    true
}

/// Max over paths of the number of accepted opponent emissions on the path,
/// counting all opponents together (multiplicity included).
pub fn max_emissions_on_a_path(transcript: &Transcript, team: usize) -> usize {
    let all: Vec<BitString> = (0..team)
        .flat_map(|j| transcript.accepted_emissions(j).into_iter().map(|(v, _)| v))
        .collect();
    all.iter()
        .map(|w| all.iter().filter(|u| is_prefix(u, w)).count())
        .max()
        .unwrap_or(0)
}

struct Context {
    root: BitString,
    m: usize,
    climbed: usize,
    label: BitString,
    active: BTreeSet<usize>,
}

impl Context {
    fn target(&self) -> BitString {
        let mut v = self.root;
        for _ in 0..self.m - self.climbed {
            v = v.child(true);
        }
        v
    }
}

/// The builder: one running context (subtree root, spine position, current
/// label, opponents still unaccounted for) plus a cursor into the transcript
/// marking which emissions have been answered.
pub struct Builder {
    depth: usize,
    context: Context,
    placed: bool,
    scanned: usize,
    counter: u64,
}

impl Builder {
    /// Sets up the game against `team` opponents in the subtree `1^team 0`.
    pub fn new(team: usize, depth: usize) -> Result<Self, BeatingError> {
        let mut root = BitString::EMPTY;
        for _ in 0..team {
            root = root.child(true);
        }
        root = root.child(false);
        let m = team + 2;
        if root.len() + m > depth {
            return Err(BeatingError::DepthExhausted { team, needed: root.len() + m, depth });
        }
        Ok(Builder {
            depth,
            context: Context {
                root,
                m,
                climbed: 0,
                label: BitString::EMPTY,
                active: (0..team).collect(),
            },
            placed: false,
            scanned: 0,
            counter: 0,
        })
    }

    pub fn current_claim(&self) -> Option<(BitString, BitString)> {
        self.placed.then(|| (self.context.target(), self.context.label))
    }

    fn fresh_label(&mut self, transcript: &Transcript) -> BitString {
        let used = transcript.labels_in_use();
        loop {
            let candidate = BitString::minimal_binary(self.counter);
            self.counter += 1;
            if !used.contains(&candidate) {
                return candidate;
            }
        }
    }

    fn place(&self, transcript: &mut Transcript, round: usize, reason: PlaceReason) {
        transcript.push(GameEvent::BuilderPlace {
            round,
            vertex: self.context.target(),
            label: self.context.label,
            reason,
        });
    }

    /// One builder move: open the spine if the context has no label yet,
    /// else answer the oldest unanswered emission of the current label at or
    /// above the target (climb on replication, recurse on intrusion), else
    /// wait.
    pub fn take_turn(&mut self, transcript: &mut Transcript, round: usize) -> Result<(), BeatingError> {
        if !self.placed {
            self.context.label = self.fresh_label(transcript);
            self.placed = true;
            self.place(transcript, round, PlaceReason::Open);
            return Ok(());
        }
        let mut threat = None;
        for idx in self.scanned..transcript.events().len() {
            if let GameEvent::OpponentEmit { opponent, vertex, label, .. } = &transcript.events()[idx] {
                if *label == self.context.label && is_prefix(vertex, &self.context.target()) {
                    threat = Some((idx, *opponent, *vertex));
                    break;
                }
            }
        }
        let Some((idx, opponent, vertex)) = threat else {
            self.scanned = transcript.events().len();
            return Ok(());
        };
        self.scanned = idx + 1;
        if vertex == self.context.target() {
            debug_assert!(self.context.climbed + 2 <= self.context.m, "spine slack exhausted");
            self.context.climbed += 1;
            self.place(transcript, round, PlaceReason::Climb);
            return Ok(());
        }
        // Intrusion at a proper prefix. The new subtree hangs just off the
        // spine below the intrusion, clamped to the context root when the
        // intrusion landed above it; either way it extends the intrusion
        // vertex, so the intruder can never emit inside it.
        self.context.active.remove(&opponent);
        let zeff = if vertex.len() < self.context.root.len() { self.context.root } else { vertex };
        let root = zeff.child(false);
        let m = self.context.active.len() + 2;
        if root.len() + m > self.depth {
            return Err(BeatingError::DepthExhausted {
                team: self.context.active.len(),
                needed: root.len() + m,
                depth: self.depth,
            });
        }
        transcript.push(GameEvent::RecursionStart { round, opponent, at: vertex, root });
        let label = self.fresh_label(transcript);
        self.context = Context { root, m, climbed: 0, label, active: self.context.active.clone() };
        self.place(transcript, round, PlaceReason::Open);
        Ok(())
    }
}

/// An opponent is polled once per round with the public transcript and may
/// emit one labeled vertex; `done` promises it will never emit again.
pub trait Opponent {
    fn name(&self) -> &'static str;
    fn act(&mut self, transcript: &Transcript) -> Option<(BitString, BitString)>;
    fn done(&self) -> bool;
}

/// Never emits.
pub struct Silent;

impl Opponent for Silent {
    fn name(&self) -> &'static str {
        "silent"
    }

    fn act(&mut self, _: &Transcript) -> Option<(BitString, BitString)> {
        None
    }

    fn done(&self) -> bool {
        true
    }
}

/// Plays a fixed slot list, one slot per poll — `None` passes — legal or not.
pub struct Scripted {
    slots: Vec<Option<(BitString, BitString)>>,
    pos: usize,
}

impl Scripted {
    pub fn new(slots: Vec<Option<(BitString, BitString)>>) -> Self {
        Scripted { slots, pos: 0 }
    }

    pub fn emissions(emissions: Vec<(BitString, BitString)>) -> Self {
        Scripted::new(emissions.into_iter().map(Some).collect())
    }
}

impl Opponent for Scripted {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn act(&mut self, _: &Transcript) -> Option<(BitString, BitString)> {
        let e = self.slots.get(self.pos).copied().flatten();
        self.pos += 1;
        e
    }

    fn done(&self) -> bool {
        self.pos >= self.slots.len()
    }
}

fn legal_for(own: &[BitString], v: &BitString) -> bool {
    own.iter().all(|w| !are_compatible(w, v))
}

/// Copies the builder's newest placement verbatim whenever its own
/// prefix-free discipline allows it.
#[derive(Default)]
pub struct Replicator {
    own: Vec<BitString>,
}

impl Opponent for Replicator {
    fn name(&self) -> &'static str {
        "replicator"
    }

    fn act(&mut self, transcript: &Transcript) -> Option<(BitString, BitString)> {
        let (v, y) = transcript.latest_builder_placement()?;
        if legal_for(&self.own, &v) {
            self.own.push(v);
            Some((v, y))
        } else {
            None
        }
    }

    fn done(&self) -> bool {
        false
    }
}

/// Emits the builder's current label at the shallowest legal proper prefix
/// of the builder's newest placement — the root first.
#[derive(Default)]
pub struct PrefixSniper {
    own: Vec<BitString>,
}

impl Opponent for PrefixSniper {
    fn name(&self) -> &'static str {
        "sniper"
    }

    fn act(&mut self, transcript: &Transcript) -> Option<(BitString, BitString)> {
        let (v, y) = transcript.latest_builder_placement()?;
        let mut prefixes = path_to_root(&v);
        prefixes.reverse();
        for z in prefixes {
            if z.len() < v.len() && legal_for(&self.own, &z) {
                self.own.push(z);
                return Some((z, y));
            }
        }
        None
    }

    fn done(&self) -> bool {
        false
    }
}

/// Emits at random legal vertices with labels from a fixed-width namespace
/// the builder's fresh-label counter does not reach at game scale, until a
/// finite budget runs out.
pub struct RandomLegal {
    rng: ChaCha8Rng,
    depth: usize,
    budget: u32,
    own: Vec<BitString>,
}

impl RandomLegal {
    const LABEL_BITS: usize = 12;

    pub fn new(rng: ChaCha8Rng, depth: usize, budget: u32) -> Self {
        RandomLegal { rng, depth, budget, own: Vec::new() }
    }
}

impl Opponent for RandomLegal {
    fn name(&self) -> &'static str {
        "random"
    }

    fn act(&mut self, transcript: &Transcript) -> Option<(BitString, BitString)> {
        if self.budget == 0 || transcript.latest_builder_placement().is_none() {
            return None;
        }
        if self.rng.gen_range(0..3) == 0 {
            return None; // idle round
        }
        for _ in 0..8 {
            let len = self.rng.gen_range(0..=self.depth);
            let v = BitString::from_value(self.rng.gen::<u64>() & ((1u64 << len) - 1), len);
            if legal_for(&self.own, &v) {
                self.budget -= 1;
                self.own.push(v);
                let label = BitString::from_value(
                    self.rng.gen::<u64>() & ((1u64 << Self::LABEL_BITS) - 1),
                    Self::LABEL_BITS,
                );
                return Some((v, label));
            }
        }
        None
    }

    fn done(&self) -> bool {
        self.budget == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpponentKind {
    Replicator,
    Sniper,
    Silent,
    Random,
}

impl std::str::FromStr for OpponentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replicator" => Ok(OpponentKind::Replicator),
            "sniper" => Ok(OpponentKind::Sniper),
            "silent" => Ok(OpponentKind::Silent),
            "random" => Ok(OpponentKind::Random),
            other => Err(format!(
                "unknown opponent {other:?} (expected replicator, sniper, silent, or random)"
            )),
        }
    }
}

/// Instantiates a team; random members get independent streams split off
/// the seed by position.
pub fn make_team(kinds: &[OpponentKind], depth: usize, seed: u64) -> Vec<Box<dyn Opponent>> {
    kinds
        .iter()
        .enumerate()
        .map(|(pos, kind)| -> Box<dyn Opponent> {
            match kind {
                OpponentKind::Replicator => Box::new(Replicator::default()),
                OpponentKind::Sniper => Box::new(PrefixSniper::default()),
                OpponentKind::Silent => Box::new(Silent),
                OpponentKind::Random => {
                    Box::new(RandomLegal::new(crate::testing::rng(seed, 100 + pos as u64), depth, 6))
                }
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Won(usize),
    Undecided,
}

#[derive(Debug)]
pub struct GameReport {
    pub verdict: Verdict,
    pub transcript: Transcript,
    pub winning_claim: Option<(BitString, BitString)>,
    /// Builder labeling stayed prefix-stable, opponent domains stayed
    /// prefix-free, and no path ever carried more than team-many emissions,
    /// checked after every round.
    pub sound: bool,
}

/// Runs the full game: each round the builder moves, then every opponent is
/// polled once; emissions comparable with the opponent's own earlier ones
/// disqualify it. The verdict is `Won(team size)` as soon as the builder's
/// claim is out of every opponent's reach.
pub fn run_beating_game(
    mut opponents: Vec<Box<dyn Opponent>>,
    depth: usize,
    max_rounds: usize,
) -> Result<GameReport, BeatingError> {
    let team = opponents.len();
    let mut builder = Builder::new(team, depth)?;
    let mut transcript = Transcript::default();
    let mut accepted: Vec<Vec<(BitString, BitString)>> = vec![Vec::new(); team];
    let mut disqualified = vec![false; team];
    let mut sound = true;

    for round in 0..max_rounds {
        builder.take_turn(&mut transcript, round)?;
        for (j, opponent) in opponents.iter_mut().enumerate() {
            if disqualified[j] {
                continue;
            }
            if let Some((vertex, label)) = opponent.act(&transcript) {
                if vertex.len() > depth || !legal_for(
                    &accepted[j].iter().map(|(v, _)| *v).collect::<Vec<_>>(),
                    &vertex,
                ) {
                    disqualified[j] = true;
                    transcript.push(GameEvent::OpponentDisqualified { round, opponent: j, vertex, label });
                } else {
                    accepted[j].push((vertex, label));
                    transcript.push(GameEvent::OpponentEmit { round, opponent: j, vertex, label });
                }
            }
        }

        sound &= builder_labeling_prefix_stable(&transcript)
            && accepted.iter().all(|emis| {
                emis.iter().enumerate().all(|(a, (v, _))| {
                    emis.iter().skip(a + 1).all(|(w, _)| !are_compatible(v, w))
                })
            })
            && max_emissions_on_a_path(&transcript, team) <= team;

        if let Some((v, y)) = builder.current_claim() {
            let won = (0..team).all(|j| {
                let covered = accepted[j].iter().any(|(w, yo)| *yo == y && is_prefix(w, &v));
                let blocked = accepted[j].iter().any(|(w, _)| are_compatible(w, &v));
                !covered && (blocked || disqualified[j] || opponents[j].done())
            });
            if won {
                return Ok(GameReport {
                    verdict: Verdict::Won(team),
                    transcript,
                    winning_claim: Some((v, y)),
                    sound,
                });
            }
        }
    }
    Ok(GameReport { verdict: Verdict::Undecided, transcript, winning_claim: None, sound })
}
