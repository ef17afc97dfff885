//! Description allocation under growing conditions: the pointwise-minimal
//! schedule construction, the layered allocator that serves every legal
//! declaration stream with descriptions of length `2k + 4`, and the
//! adversary that forces any shorter-description assigner into a
//! contradiction.
//!
//! Objects are opaque integer ids; they become bit strings only when an
//! allocator run is exported as a description mode. A declaration, an
//! allocation, or a served description at vertex `v` is inherited by the
//! whole `v`-subtree, so "present in the subtree of `u`" always means
//! "recorded at a vertex comparable with `u`".

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::modes::{FiniteDescriptionMode, Triple};
use crate::tree::{are_compatible, is_prefix, path_to_root, strings_of_length, BitString, MAX_BITS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AllocationError {
    #[error("object {object} at {vertex} rejected by every layer")]
    Rejected { object: u64, vertex: BitString },
    #[error("declaring object {object} at {vertex} would put {count} objects there, budget {budget}")]
    BudgetExceeded { object: u64, vertex: BitString, count: usize, budget: usize },
    #[error("vertex {vertex} is deeper than {depth}")]
    DepthExceeded { vertex: BitString, depth: usize },
}

/// Pointwise bounds on an object's description length under a growing
/// condition: an announcement `(object, vertex, bound)` asserts the bound at
/// the vertex and, by inheritance, at every extension.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConditionalSchedule {
    announcements: Vec<(u64, BitString, u32)>,
}

impl ConditionalSchedule {
    pub fn new(announcements: Vec<(u64, BitString, u32)>) -> Self {
        ConditionalSchedule { announcements }
    }

    pub fn announcements(&self) -> &[(u64, BitString, u32)] {
        &self.announcements
    }

    pub fn is_empty(&self) -> bool {
        self.announcements.is_empty()
    }

    /// Effective bound at `(object, vertex)`: the least announced bound on
    /// the path down to the vertex. `None` means unbounded.
    pub fn bound_at(&self, object: u64, vertex: &BitString) -> Option<u32> {
        self.announcements
            .iter()
            .filter(|(o, w, _)| *o == object && is_prefix(w, vertex))
            .map(|(_, _, b)| *b)
            .min()
    }

    /// At most `2^n` objects may have a bound below `n` at any vertex.
    pub fn check_class_invariant(&self) -> bool {
        let max_bound = match self.announcements.iter().map(|(_, _, b)| *b).max() {
            Some(b) => b,
            None => return true,
        };
        let vertices: BTreeSet<BitString> =
            self.announcements.iter().map(|(_, w, _)| *w).collect();
        for u in vertices {
            for n in 1..=(max_bound + 1).min(62) {
                let below: BTreeSet<u64> = self
                    .announcements
                    .iter()
                    .filter(|(_, w, b)| is_prefix(w, &u) && *b < n)
                    .map(|(o, _, _)| *o)
                    .collect();
                if (below.len() as u64) > 1u64 << n {
                    return false;
                }
            }
        }
        true
    }
}

/// Pointwise minimum over a list of schedules, charging schedule `m` an
/// extra `m + 1`. The geometric series `2^{n-1} + 2^{n-2} + …  < 2^n` keeps
/// the output inside the cardinality class when every input is.
pub fn minimal_in_class(schedules: &[ConditionalSchedule]) -> ConditionalSchedule {
    let mut points: BTreeSet<(u64, BitString)> = BTreeSet::new();
    for s in schedules {
        for (o, w, _) in s.announcements() {
            points.insert((*o, *w));
        }
    }
    let mut announcements = Vec::new();
    for (o, w) in points {
        let best = schedules
            .iter()
            .enumerate()
            .filter_map(|(m, s)| s.bound_at(o, &w).map(|b| b + m as u32 + 1))
            .min();
        if let Some(b) = best {
            announcements.push((o, w, b));
        }
    }
    ConditionalSchedule::new(announcements)
}

/// A time-ordered list of (object, vertex) declarations with the per-vertex
/// budget enforced under inheritance.
#[derive(Clone, Debug)]
pub struct DeclarationStream {
    declarations: Vec<(u64, BitString)>,
    budget: usize,
    depth: usize,
}

impl DeclarationStream {
    pub fn new(budget: usize, depth: usize) -> Self {
        DeclarationStream { declarations: Vec::new(), budget, depth }
    }

    pub fn declarations(&self) -> &[(u64, BitString)] {
        &self.declarations
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Distinct objects declared at `v` or an ancestor.
    pub fn objects_at(&self, v: &BitString) -> BTreeSet<u64> {
        self.declarations
            .iter()
            .filter(|(_, w)| is_prefix(w, v))
            .map(|(o, _)| *o)
            .collect()
    }

    /// Admits the declaration unless some descendant vertex would then see
    /// more than `budget` distinct objects. Counts only change at
    /// declaration vertices, so those are the only ones checked.
    pub fn push(&mut self, object: u64, vertex: BitString) -> Result<(), AllocationError> {
        if vertex.len() > self.depth {
            return Err(AllocationError::DepthExceeded { vertex, depth: self.depth });
        }
        self.declarations.push((object, vertex));
        let mut worst: Option<(BitString, usize)> = None;
        for (_, u) in self.declarations.iter().filter(|(_, u)| is_prefix(&vertex, u)) {
            let count = self.objects_at(u).len();
            if count > worst.as_ref().map_or(0, |(_, c)| *c) {
                worst = Some((*u, count));
            }
        }
        match worst {
            Some((u, count)) if count > self.budget => {
                self.declarations.pop();
                Err(AllocationError::BudgetExceeded { object, vertex: u, count, budget: self.budget })
            }
            _ => Ok(()),
        }
    }
}

/// One layer's record: a description id bound to an object at the vertex of
/// the request that placed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Allocation {
    pub description: usize,
    pub vertex: BitString,
    pub object: u64,
}

/// A layer of the allocator: a pool of `pool` description ids and the
/// allocations it has made so far.
#[derive(Clone, Debug)]
pub struct LayerState {
    pool: usize,
    served: Vec<Allocation>,
}

impl LayerState {
    pub fn new(pool: usize) -> Self {
        LayerState { pool, served: Vec::new() }
    }

    pub fn with_allocations(pool: usize, served: Vec<Allocation>) -> Self {
        LayerState { pool, served }
    }

    pub fn pool(&self) -> usize {
        self.pool
    }

    pub fn served(&self) -> &[Allocation] {
        &self.served
    }

    /// Objects this layer serves somewhere in the `v`-subtree; an
    /// allocation at an ancestor of `v` is inherited by the whole subtree,
    /// so any allocation at a vertex comparable with `v` counts.
    pub fn objects_in_subtree(&self, v: &BitString) -> BTreeSet<u64> {
        self.served
            .iter()
            .filter(|a| are_compatible(&a.vertex, v))
            .map(|a| a.object)
            .collect()
    }

    /// An object is acceptable at `v` while serving it there keeps the
    /// subtree regular: fewer than `pool` objects live under `v`, or
    /// exactly `pool` and the object is one of them.
    pub fn is_acceptable(&self, object: u64, v: &BitString) -> bool {
        let objs = self.objects_in_subtree(v);
        objs.len() < self.pool || (objs.len() == self.pool && objs.contains(&object))
    }

    fn serve(&mut self, object: u64, vertex: &BitString) -> Option<usize> {
        if !self.is_acceptable(object, vertex) {
            return None;
        }
        // Walk toward the root while the object stays acceptable;
        // unacceptability propagates upward, so the acceptable region of
        // the path is contiguous.
        let mut anchor = *vertex;
        for w in path_to_root(vertex).into_iter().skip(1) {
            if self.is_acceptable(object, &w) {
                anchor = w;
            } else {
                break;
            }
        }
        let description = match self
            .served
            .iter()
            .find(|a| a.object == object && are_compatible(&a.vertex, &anchor))
        {
            Some(a) => a.description,
            None => {
                let used: BTreeSet<usize> = self
                    .served
                    .iter()
                    .filter(|a| are_compatible(&a.vertex, &anchor))
                    .map(|a| a.description)
                    .collect();
                (0..self.pool)
                    .find(|d| !used.contains(d))
                    .expect("a regular subtree keeps a free description")
            }
        };
        self.served.push(Allocation { description, vertex: *vertex, object });
        Some(description)
    }
}

/// Full invariant of a layer: along any chain the allocation relation is a
/// bijection, and within any subtree holding at most `pool` objects the
/// objects match their descriptions one-to-one.
pub fn verify_layer(layer: &LayerState) -> bool {
    let served = layer.served();
    for (i, a) in served.iter().enumerate() {
        for b in served.iter().skip(i + 1) {
            if are_compatible(&a.vertex, &b.vertex)
                && ((a.description == b.description) != (a.object == b.object))
            {
                return false;
            }
        }
    }
    let mut scopes: BTreeSet<BitString> = BTreeSet::new();
    for a in served {
        scopes.extend(path_to_root(&a.vertex));
    }
    for u in scopes {
        let in_scope: Vec<&Allocation> =
            served.iter().filter(|a| are_compatible(&a.vertex, &u)).collect();
        let objects: BTreeSet<u64> = in_scope.iter().map(|a| a.object).collect();
        if objects.len() > layer.pool() {
            continue; // overloaded: the bijection requirement is waived
        }
        for (i, a) in in_scope.iter().enumerate() {
            for b in in_scope.iter().skip(i + 1) {
                if (a.description == b.description) != (a.object == b.object) {
                    return false;
                }
            }
        }
    }
    true
}

/// Offers the request to each layer in turn; the first layer where the
/// object is acceptable serves it and reports its index and the chosen
/// description id.
pub fn serve_request(
    layers: &mut [LayerState],
    object: u64,
    vertex: &BitString,
) -> Result<(usize, usize), AllocationError> {
    for (index, layer) in layers.iter_mut().enumerate() {
        if let Some(description) = layer.serve(object, vertex) {
            return Ok((index, description));
        }
    }
    Err(AllocationError::Rejected { object, vertex: *vertex })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AllocatorConfig {
    /// Per-vertex budget of distinct declared objects.
    pub n: usize,
    /// Width parameter: descriptions are framed in `2k + 4` bits.
    pub k: usize,
    /// Pool size per layer.
    pub pool: usize,
    /// Number of layers.
    pub layers: usize,
    pub depth: usize,
}

impl AllocatorConfig {
    pub fn new(n: usize, depth: usize) -> Self {
        assert!(n >= 1, "budget must be positive");
        let k = (n as u64 - 1).checked_ilog2().map_or(0, |b| b as usize + 1);
        AllocatorConfig { n, k, pool: 3 * n, layers: n + 2, depth }
    }

    pub fn description_len(&self) -> usize {
        2 * self.k + 4
    }
}

/// Fixed-width framing: layer index then pool id, each in `k + 2` bits
/// (layers ≤ n + 2 < 2^{k+2} and pool ids < 3n < 2^{k+2}).
pub fn encode_description(k: usize, layer: usize, id: usize) -> BitString {
    BitString::from_value(layer as u64, k + 2).concat(&BitString::from_value(id as u64, k + 2))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum AllocEvent {
    Declare { object: u64, vertex: BitString },
    Reject { object: u64, vertex: BitString, layer: usize },
    Escalate { object: u64, vertex: BitString, to_layer: usize },
    Serve { object: u64, vertex: BitString, layer: usize, description: usize },
}

/// The layered allocator driven by a declaration stream.
pub struct Allocator {
    config: AllocatorConfig,
    layers: Vec<LayerState>,
    stream: DeclarationStream,
    events: Vec<AllocEvent>,
}

impl Allocator {
    pub fn new(config: AllocatorConfig) -> Self {
        Allocator {
            config,
            layers: (0..config.layers).map(|_| LayerState::new(config.pool)).collect(),
            stream: DeclarationStream::new(config.n, config.depth),
            events: Vec::new(),
        }
    }

    pub fn config(&self) -> &AllocatorConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerState] {
        &self.layers
    }

    pub fn stream(&self) -> &DeclarationStream {
        &self.stream
    }

    pub fn events(&self) -> &[AllocEvent] {
        &self.events
    }

    /// Declares the object, cascades the request through the layers, and
    /// returns `(layer, description id)`.
    pub fn declare(&mut self, object: u64, vertex: BitString) -> Result<(usize, usize), AllocationError> {
        self.stream.push(object, vertex)?;
        self.events.push(AllocEvent::Declare { object, vertex });
        for (index, layer) in self.layers.iter_mut().enumerate() {
            if let Some(description) = layer.serve(object, &vertex) {
                self.events.push(AllocEvent::Serve { object, vertex, layer: index, description });
                return Ok((index, description));
            }
            self.events.push(AllocEvent::Reject { object, vertex, layer: index });
            if index + 1 < self.config.layers {
                self.events.push(AllocEvent::Escalate { object, vertex, to_layer: index + 1 });
            }
        }
        Err(AllocationError::Rejected { object, vertex })
    }

    /// The served allocations as a description mode: each serve becomes a
    /// triple (layer++id framed in 2k+4 bits, request vertex, object id in
    /// minimal binary).
    pub fn to_mode(&self) -> FiniteDescriptionMode {
        let triples: Vec<Triple> = self
            .events
            .iter()
            .filter_map(|e| match e {
                AllocEvent::Serve { object, vertex, layer, description } => Some(Triple {
                    description: encode_description(self.config.k, *layer, *description),
                    condition: *vertex,
                    object: BitString::minimal_binary(*object),
                }),
                _ => None,
            })
            .collect();
        FiniteDescriptionMode::new(triples, self.config.depth)
    }
}

/// Runs a whole stream through a fresh allocator and exports the mode.
pub fn allocator_to_mode(
    config: AllocatorConfig,
    declarations: &[(u64, BitString)],
) -> Result<FiniteDescriptionMode, AllocationError> {
    let mut allocator = Allocator::new(config);
    for (object, vertex) in declarations {
        allocator.declare(*object, *vertex)?;
    }
    Ok(allocator.to_mode())
}

/// A rejection above the ground layer is always explained by an earlier
/// rejection one layer lower, for a different object, at an extension of
/// the vertex.
pub fn check_escalation_witnesses(events: &[AllocEvent]) -> bool {
    for (t, e) in events.iter().enumerate() {
        if let AllocEvent::Reject { object, vertex, layer } = e {
            if *layer == 0 {
                continue;
            }
            let witnessed = events[..t].iter().any(|earlier| {
                matches!(earlier, AllocEvent::Reject { object: o, vertex: w, layer: l }
                    if *l == layer - 1 && o != object && is_prefix(vertex, w))
            });
            if !witnessed {
                return false;
            }
        }
    }
    true
}

/// The description-length opponent: responds to each declaration with a
/// description of length at most the stated budget, or passes.
pub trait Assigner {
    fn name(&self) -> &'static str;
    fn respond(&mut self, object: u64, vertex: &BitString, max_len: usize) -> Option<BitString>;
}

/// Never responds; loses to the first declaration.
pub struct SilentAssigner;

impl Assigner for SilentAssigner {
    fn name(&self) -> &'static str {
        "silent"
    }

    fn respond(&mut self, _: u64, _: &BitString, _: usize) -> Option<BitString> {
        None
    }
}

/// Allocates the shortest description never used before, anywhere; passes
/// once the pool of short strings is exhausted.
#[derive(Default)]
pub struct GreedyAssigner {
    used: BTreeSet<BitString>,
}

impl Assigner for GreedyAssigner {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn respond(&mut self, _: u64, _: &BitString, max_len: usize) -> Option<BitString> {
        for len in 0..=max_len {
            for candidate in strings_of_length(len) {
                if self.used.insert(candidate) {
                    return Some(candidate);
                }
            }
        }
        None
    }
}

/// Serves every request with the shortest description unused at the exact
/// request vertex, ignoring inheritance — the strawman the pigeonhole
/// stage punishes.
#[derive(Default)]
pub struct AlwaysServeAssigner {
    at_vertex: BTreeMap<BitString, Vec<(BitString, u64)>>,
}

impl Assigner for AlwaysServeAssigner {
    fn name(&self) -> &'static str {
        "always-serve"
    }

    fn respond(&mut self, object: u64, vertex: &BitString, max_len: usize) -> Option<BitString> {
        let here = self.at_vertex.entry(*vertex).or_default();
        for len in 0..=max_len {
            for candidate in strings_of_length(len) {
                if here.iter().all(|(d, o)| *d != candidate || *o == object) {
                    here.push((candidate, object));
                    return Some(candidate);
                }
            }
        }
        None
    }
}

/// Reuses descriptions as aggressively as legality allows: the shortest
/// string not bound to a different object at any comparable vertex.
#[derive(Default)]
pub struct FrugalAssigner {
    allocations: Vec<(BitString, u64, BitString)>,
}

impl Assigner for FrugalAssigner {
    fn name(&self) -> &'static str {
        "frugal"
    }

    fn respond(&mut self, object: u64, vertex: &BitString, max_len: usize) -> Option<BitString> {
        for len in 0..=max_len {
            for candidate in strings_of_length(len) {
                let legal = self.allocations.iter().all(|(d, o, w)| {
                    *d != candidate || *o == object || !are_compatible(w, vertex)
                });
                if legal {
                    self.allocations.push((candidate, object, *vertex));
                    return Some(candidate);
                }
            }
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignerKind {
    Silent,
    Greedy,
    AlwaysServe,
    Frugal,
}

impl std::str::FromStr for AssignerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "silent" => Ok(AssignerKind::Silent),
            "greedy" => Ok(AssignerKind::Greedy),
            "always-serve" => Ok(AssignerKind::AlwaysServe),
            "frugal" => Ok(AssignerKind::Frugal),
            other => Err(format!(
                "unknown assigner {other:?} (expected silent, greedy, always-serve, or frugal)"
            )),
        }
    }
}

pub fn make_assigner(kind: AssignerKind) -> Box<dyn Assigner> {
    match kind {
        AssignerKind::Silent => Box::new(SilentAssigner),
        AssignerKind::Greedy => Box::new(GreedyAssigner::default()),
        AssignerKind::AlwaysServe => Box::new(AlwaysServeAssigner::default()),
        AssignerKind::Frugal => Box::new(FrugalAssigner::default()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryOutcome {
    /// A declared object never received a description of legal length at
    /// its vertex.
    GoalAchieved { object: u64, vertex: BitString },
    /// The assigner violated its own constraint: an overlong description,
    /// or one already bound to a different object at a comparable vertex.
    AssignerContradiction {
        description: BitString,
        object: u64,
        vertex: BitString,
        earlier_object: u64,
        earlier_vertex: BitString,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("the strategy needs a per-vertex budget of at least 2, so n must be at least 2 (got {n})")]
    InvalidBudget { n: usize },
    #[error("gap constant must be at least 1 for the pigeonhole stage (got {c})")]
    GapTooSmall { c: usize },
    #[error("stage {stage}: the per-vertex budget or tree depth cannot host another band")]
    BudgetSaturated { stage: usize },
    #[error("internal budget accounting failed: {0}")]
    BudgetViolation(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum AdversaryEvent {
    Declare { stage: usize, object: u64, vertex: BitString },
    Allocate { object: u64, vertex: BitString, description: BitString },
    Pass { object: u64, vertex: BitString },
    Collision { description: BitString, object: u64, vertex: BitString, other_object: u64, other_vertex: BitString },
    Descend { stage: usize, root: BitString },
}

#[derive(Debug)]
pub struct AdversaryReport {
    pub outcome: AdversaryOutcome,
    pub events: Vec<AdversaryEvent>,
    pub stages: usize,
    pub objects_used: u64,
    pub max_declarations_at_a_vertex: usize,
}

struct AdversaryRun<'a> {
    assigner: &'a mut dyn Assigner,
    max_len: usize,
    stream: DeclarationStream,
    allocations: Vec<(BitString, u64, BitString)>,
    events: Vec<AdversaryEvent>,
    next_object: u64,
}

enum Step {
    Description(BitString),
    Finished(AdversaryOutcome),
}

impl AdversaryRun<'_> {
    /// One declaration: budget-checked, offered to the assigner, response
    /// validated against length and comparable-reuse constraints.
    fn declare(&mut self, stage: usize, object: u64, vertex: BitString) -> Result<Step, AdversaryError> {
        self.stream
            .push(object, vertex)
            .map_err(|e| AdversaryError::BudgetViolation(e.to_string()))?;
        self.events.push(AdversaryEvent::Declare { stage, object, vertex });
        let Some(description) = self.assigner.respond(object, &vertex, self.max_len) else {
            self.events.push(AdversaryEvent::Pass { object, vertex });
            return Ok(Step::Finished(AdversaryOutcome::GoalAchieved { object, vertex }));
        };
        self.events.push(AdversaryEvent::Allocate { object, vertex, description });
        if description.len() > self.max_len {
            return Ok(Step::Finished(AdversaryOutcome::AssignerContradiction {
                description,
                object,
                vertex,
                earlier_object: object,
                earlier_vertex: vertex,
            }));
        }
        let clash = self
            .allocations
            .iter()
            .find(|(d, o, w)| *d == description && *o != object && are_compatible(w, &vertex));
        if let Some((d, o, w)) = clash {
            return Ok(Step::Finished(AdversaryOutcome::AssignerContradiction {
                description: *d,
                object,
                vertex,
                earlier_object: *o,
                earlier_vertex: *w,
            }));
        }
        self.allocations.push((description, object, vertex));
        Ok(Step::Description(description))
    }

    fn fresh_object(&mut self) -> u64 {
        let o = self.next_object;
        self.next_object += 1;
        o
    }
}

/// The factor-2 lower-bound strategy: spread fresh objects over the full
/// level `2n` below the band root, find two of them sharing a description
/// by pigeonhole, re-declare one at the band root to force a second
/// description for it, then descend into the collision vertex and repeat
/// with the neutralized object carried along.
pub fn run_adversary(
    n: usize,
    assigner: &mut dyn Assigner,
    c: usize,
) -> Result<AdversaryReport, AdversaryError> {
    if n < 2 {
        return Err(AdversaryError::InvalidBudget { n });
    }
    if c < 1 {
        return Err(AdversaryError::GapTooSmall { c });
    }
    let budget = 1usize << (n - 1);
    let band = 2 * n;
    let max_len = (2 * n).saturating_sub(c);
    let mut run = AdversaryRun {
        assigner,
        max_len,
        stream: DeclarationStream::new(budget, MAX_BITS),
        allocations: Vec::new(),
        events: Vec::new(),
        next_object: 0,
    };
    let mut root = BitString::EMPTY;
    let mut protected: BTreeSet<u64> = BTreeSet::new();

    for stage in 0.. {
        if protected.len() + 1 > budget || root.len() + band > MAX_BITS {
            return Err(AdversaryError::BudgetSaturated { stage });
        }
        // Spread: one fresh object per vertex of the level `band` below the
        // root. More vertices than short descriptions forces a repeat.
        let mut spread: Vec<(u64, BitString, BitString)> = Vec::new();
        let mut seen: BTreeMap<BitString, (u64, BitString)> = BTreeMap::new();
        let mut collision = None;
        for suffix in strings_of_length(band) {
            let vertex = root.concat(&suffix);
            let object = run.fresh_object();
            match run.declare(stage, object, vertex)? {
                Step::Finished(outcome) => return Ok(finish(run, outcome, stage)),
                Step::Description(d) => {
                    if let Some((o2, v2)) = seen.get(&d) {
                        if collision.is_none() {
                            collision = Some((d, object, vertex, *o2, *v2));
                        }
                    }
                    seen.insert(d, (object, vertex));
                    spread.push((object, vertex, d));
                }
            }
        }
        let Some((d, object, vertex, other_object, other_vertex)) = collision else {
            return Err(AdversaryError::BudgetViolation(format!(
                "stage {stage}: {} served spread requests produced no repeated description",
                spread.len()
            )));
        };
        run.events.push(AdversaryEvent::Collision {
            description: d,
            object,
            vertex,
            other_object,
            other_vertex,
        });
        // Re-declare the collision object at the band root: its shared
        // description is now illegal there, so a legal assigner must spend
        // a second description on it.
        match run.declare(stage, object, root)? {
            Step::Finished(outcome) => return Ok(finish(run, outcome, stage)),
            Step::Description(_) => {}
        }
        protected.insert(object);
        root = vertex;
        run.events.push(AdversaryEvent::Descend { stage: stage + 1, root });
    }
    unreachable!("the stage loop always returns")
}

fn finish(run: AdversaryRun<'_>, outcome: AdversaryOutcome, stage: usize) -> AdversaryReport {
    let max_declarations_at_a_vertex = run
        .stream
        .declarations()
        .iter()
        .map(|(_, v)| run.stream.objects_at(v).len())
        .max()
        .unwrap_or(0);
    AdversaryReport {
        outcome,
        events: run.events,
        stages: stage + 1,
        objects_used: run.next_object,
        max_declarations_at_a_vertex,
    }
}
