//! Online antichain coloring games on the binary tree.
//!
//! An adversary marks vertices one at a time under the promise that no
//! root-to-leaf path ever carries more than `k` marks; the strategies assign
//! each mark one of `k` colors, immediately and irrevocably, so that
//! comparable marks never share a color. Two strategies are implemented:
//! first-fit (the lowest color unused on any vertex comparable with the
//! mark) and a rank-based strategy that maintains a reservation set of
//! exactly `r(x)` colors at every vertex `x`, where `r(x)` is the maximum
//! number of marks on any downward path from `x`.
//!
//! A schedule of decreasing upper-bound announcements compiles into
//! prefix-free families by running one `k = 2^n` game per level `n` and
//! reading each color class off as a family.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::tree::{are_compatible, is_prefix, path_to_root, BitString, PrefixFreeSet};

/// A set of colors drawn from 1..=32, as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct ColorSet(u32);

impl ColorSet {
    pub const EMPTY: ColorSet = ColorSet(0);

    pub fn contains(self, color: u32) -> bool {
        (1..=32).contains(&color) && self.0 & (1 << (color - 1)) != 0
    }

    pub fn insert(&mut self, color: u32) {
        debug_assert!((1..=32).contains(&color));
        self.0 |= 1 << (color - 1);
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Lowest color not in the set.
    pub fn lowest_absent(self) -> u32 {
        self.0.trailing_ones() + 1
    }

    pub fn union(self, other: ColorSet) -> ColorSet {
        ColorSet(self.0 | other.0)
    }

    /// Colors in `self` but not in `other`.
    pub fn difference(self, other: ColorSet) -> ColorSet {
        ColorSet(self.0 & !other.0)
    }

    pub fn lowest(self) -> Option<u32> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() + 1)
        }
    }

    pub fn is_subset_of(self, other: ColorSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// One of the two sets contains the other.
    pub fn comparable(a: ColorSet, b: ColorSet) -> bool {
        a.is_subset_of(b) || b.is_subset_of(a)
    }

    pub fn iter(self) -> impl Iterator<Item = u32> {
        (1..=32).filter(move |c| self.contains(*c))
    }
}

impl std::fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColoringError {
    #[error("color budget must be between 1 and 32, got {0}")]
    InvalidBudget(u32),
    #[error("vertex {vertex} is deeper than the depth bound {depth}")]
    DepthExceeded { vertex: BitString, depth: usize },
    #[error("marking {vertex} would put {count} marks on one path, budget is {k}")]
    PathBudgetExceeded { vertex: BitString, count: u32, k: u32 },
    #[error("vertex {0} is already marked")]
    AlreadyMarked(BitString),
    #[error("vertex {0} is not marked")]
    NotMarked(BitString),
    #[error("vertex {0} is already colored")]
    AlreadyColored(BitString),
}

/// One coloring game: the marked set, the colors assigned so far, and the
/// budget `k` that legal play may never exceed on a single path.
#[derive(Clone, Debug)]
pub struct ColoringGame {
    k: u32,
    depth: usize,
    marked: BTreeSet<BitString>,
    color_of: BTreeMap<BitString, u32>,
}

impl ColoringGame {
    pub fn new(k: u32, depth: usize) -> Result<Self, ColoringError> {
        if k == 0 || k > 32 {
            return Err(ColoringError::InvalidBudget(k));
        }
        Ok(ColoringGame { k, depth, marked: BTreeSet::new(), color_of: BTreeMap::new() })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn marked(&self) -> &BTreeSet<BitString> {
        &self.marked
    }

    pub fn colors(&self) -> &BTreeMap<BitString, u32> {
        &self.color_of
    }

    pub fn color_usage(&self) -> ColorSet {
        let mut used = ColorSet::EMPTY;
        for c in self.color_of.values() {
            used.insert(*c);
        }
        used
    }

    /// Maximum number of marks on any downward path starting at `v`.
    pub fn marked_rank(&self, v: &BitString) -> u32 {
        self.marked
            .iter()
            .filter(|w| is_prefix(v, w))
            .map(|w| self.marked.iter().filter(|m| is_prefix(v, m) && is_prefix(m, w)).count() as u32)
            .max()
            .unwrap_or(0)
    }

    fn marked_ancestors(&self, v: &BitString) -> u32 {
        self.marked.iter().filter(|a| a.len() < v.len() && is_prefix(a, v)).count() as u32
    }

    /// Marks `v`. Illegal if some path through `v` would then carry more
    /// than `k` marks.
    pub fn mark(&mut self, v: BitString) -> Result<(), ColoringError> {
        if v.len() > self.depth {
            return Err(ColoringError::DepthExceeded { vertex: v, depth: self.depth });
        }
        if self.marked.contains(&v) {
            return Err(ColoringError::AlreadyMarked(v));
        }
        let count = self.marked_ancestors(&v) + 1 + self.marked_rank(&v);
        if count > self.k {
            return Err(ColoringError::PathBudgetExceeded { vertex: v, count, k: self.k });
        }
        self.marked.insert(v);
        Ok(())
    }

    /// Whether marking `v` now would be a legal move.
    pub fn can_mark(&self, v: &BitString) -> bool {
        v.len() <= self.depth
            && !self.marked.contains(v)
            && self.marked_ancestors(v) + 1 + self.marked_rank(v) <= self.k
    }

    fn claim_uncolored(&self, v: &BitString) -> Result<(), ColoringError> {
        if !self.marked.contains(v) {
            return Err(ColoringError::NotMarked(*v));
        }
        if self.color_of.contains_key(v) {
            return Err(ColoringError::AlreadyColored(*v));
        }
        Ok(())
    }

    /// First-fit: the lowest color unused on every vertex comparable with
    /// `v`. Legal play keeps the result within 1..=k.
    pub fn color_first_fit(&mut self, v: &BitString) -> Result<u32, ColoringError> {
        self.claim_uncolored(v)?;
        let mut blocked = ColorSet::EMPTY;
        for (w, c) in &self.color_of {
            if are_compatible(w, v) {
                blocked.insert(*c);
            }
        }
        let color = blocked.lowest_absent();
        self.color_of.insert(*v, color);
        Ok(color)
    }

    /// True iff no comparable pair shares a color and all colors are in
    /// 1..=k.
    pub fn verify_coloring(&self) -> bool {
        if self.color_of.values().any(|c| *c < 1 || *c > self.k) {
            return false;
        }
        let entries: Vec<(&BitString, &u32)> = self.color_of.iter().collect();
        for (i, (v, c)) in entries.iter().enumerate() {
            for (w, d) in entries.iter().skip(i + 1) {
                if c == d && are_compatible(v, w) {
                    return false;
                }
            }
        }
        true
    }

    /// Force a color without any checks, for building counterexample states
    /// in tests and fixtures.
    pub fn force_color(&mut self, v: BitString, color: u32) {
        self.marked.insert(v);
        self.color_of.insert(v, color);
    }
}

/// Subtree statistics at one vertex: colors used on marks in the subtree
/// and the marked rank, both computed bottom-up over the ancestors of marks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SupportRow {
    pub subtree_colors: ColorSet,
    pub rank: u32,
}

/// Bottom-up pass over every ancestor of a mark. Vertices outside the
/// support have empty colors and rank 0.
pub fn analyze_support(game: &ColoringGame) -> BTreeMap<BitString, SupportRow> {
    let mut support: BTreeSet<BitString> = BTreeSet::new();
    for m in game.marked() {
        support.extend(path_to_root(m));
    }
    let mut rows: BTreeMap<BitString, SupportRow> = BTreeMap::new();
    // Children sort after parents, so reverse order is bottom-up.
    for v in support.iter().rev() {
        let child = |rows: &BTreeMap<BitString, SupportRow>, bit| -> SupportRow {
            if v.len() < crate::tree::MAX_BITS {
                rows.get(&v.child(bit)).copied().unwrap_or_default()
            } else {
                SupportRow::default()
            }
        };
        let c0 = child(&rows, false);
        let c1 = child(&rows, true);
        let mut row = SupportRow {
            subtree_colors: c0.subtree_colors.union(c1.subtree_colors),
            rank: c0.rank.max(c1.rank),
        };
        if game.marked().contains(v) {
            row.rank += 1;
        }
        if let Some(c) = game.colors().get(v) {
            row.subtree_colors.insert(*c);
        }
        rows.insert(*v, row);
    }
    rows
}

/// Colors of colored proper ancestors for every support vertex.
fn path_color_map(game: &ColoringGame, rows: &BTreeMap<BitString, SupportRow>) -> BTreeMap<BitString, ColorSet> {
    let mut path: BTreeMap<BitString, ColorSet> = BTreeMap::new();
    // Parents sort before children, so forward order is top-down.
    for v in rows.keys() {
        let set = match v.parent() {
            None => ColorSet::EMPTY,
            Some(p) => {
                let mut set = path.get(&p).copied().unwrap_or_default();
                if let Some(c) = game.colors().get(&p) {
                    set.insert(*c);
                }
                set
            }
        };
        path.insert(*v, set);
    }
    path
}

fn is_initial_segment_of_complement(t: ColorSet, p: ColorSet, k: u32) -> bool {
    let mut gap_seen = false;
    for c in 1..=k {
        if p.contains(c) {
            if t.contains(c) {
                return false;
            }
            continue;
        }
        if t.contains(c) {
            if gap_seen {
                return false;
            }
        } else {
            gap_seen = true;
        }
    }
    true
}

/// The five structural properties the first-fit argument maintains, checked
/// on the current state: writing `T_x` for the colors in the x-subtree and
/// `P_x` for the colors of proper ancestors of x,
/// (i) comparable marks have distinct colors; (ii) a mark colored `i` has
/// every smaller color on a comparable vertex; (iii) `T_x` is disjoint from
/// `P_x` and is an initial segment of its complement; (iv) `T_x0` and `T_x1`
/// are comparable under inclusion; (v) `|T_x|` equals the marked rank of x.
pub fn first_fit_bullets_hold(game: &ColoringGame) -> bool {
    if !game.verify_coloring() {
        return false; // (i)
    }
    let rows = analyze_support(game);
    let paths = path_color_map(game, &rows);
    for (v, row) in &rows {
        let p = paths[v];
        let t = row.subtree_colors;
        if let Some(c) = game.colors().get(v) {
            let below = ColorSet(if *c > 1 { (1 << (c - 1)) - 1 } else { 0 });
            if !below.is_subset_of(p.union(t)) {
                return false; // (ii)
            }
        }
        if !is_initial_segment_of_complement(t, p, game.k()) {
            return false; // (iii)
        }
        if v.len() < crate::tree::MAX_BITS {
            let t0 = rows.get(&v.child(false)).map_or(ColorSet::EMPTY, |r| r.subtree_colors);
            let t1 = rows.get(&v.child(true)).map_or(ColorSet::EMPTY, |r| r.subtree_colors);
            if !ColorSet::comparable(t0, t1) {
                return false; // (iv)
            }
        }
        if t.len() != row.rank {
            return false; // (v)
        }
    }
    true
}

/// Reservation state for the rank-based strategy: the cached rank `r(x)`
/// and a color set `C(x)` with exactly `r(x)` members at every vertex.
#[derive(Clone, Debug, Default)]
pub struct RankCache {
    r: BTreeMap<BitString, u32>,
    cset: BTreeMap<BitString, ColorSet>,
}

impl RankCache {
    pub fn new() -> Self {
        RankCache::default()
    }

    pub fn rank(&self, v: &BitString) -> u32 {
        self.r.get(v).copied().unwrap_or(0)
    }

    pub fn colors(&self, v: &BitString) -> ColorSet {
        self.cset.get(v).copied().unwrap_or_default()
    }

    fn sibling_ranks(&self, w_child: &BitString) -> (u32, u32) {
        let sib = w_child.sibling().expect("path vertices below an ancestor have siblings");
        (self.rank(w_child), self.rank(&sib))
    }

    /// Colors a freshly marked vertex. Walks from `v` toward the root: the
    /// rank increase stops at the first proper ancestor whose other child
    /// already carries a strictly larger rank. If it stops at `w`, the color
    /// is the lowest one reserved in the sibling subtree but not on `v`'s
    /// side; if it propagates to the root, the color is the lowest one not
    /// yet reserved at the root. Either way every vertex whose rank rose
    /// reserves the new color, keeping `|C(x)| = r(x)` everywhere.
    pub fn color_rank_based(&mut self, game: &mut ColoringGame, v: &BitString) -> Result<u32, ColoringError> {
        game.claim_uncolored(v)?;
        let path = path_to_root(v);
        let mut stop = None;
        for (i, child) in path.iter().enumerate() {
            if i + 1 >= path.len() {
                break; // child is the root: no ancestor left to stop at
            }
            let (r_in, r_out) = self.sibling_ranks(child);
            if r_in < r_out {
                stop = Some(i);
                break;
            }
        }
        let (color, raised) = match stop {
            Some(i) => {
                let sib = path[i].sibling().expect("non-root vertex");
                let color = self
                    .colors(&sib)
                    .difference(self.colors(&path[i]))
                    .lowest()
                    .expect("sibling with larger rank reserves a spare color");
                (color, &path[..=i])
            }
            None => (self.colors(&path[path.len() - 1]).lowest_absent(), &path[..]),
        };
        for x in raised {
            *self.r.entry(*x).or_insert(0) += 1;
            let set = self.cset.entry(*x).or_default();
            debug_assert!(!set.contains(color));
            set.insert(color);
        }
        debug_assert!(color <= game.k());
        game.color_of.insert(*v, color);
        Ok(color)
    }

    /// Full structural check against the game state: cached ranks match the
    /// recomputed ones, every reservation set has exactly rank-many colors,
    /// children's sets nest into the parent's minus its own color, sibling
    /// sets are inclusion-comparable, and each mark's color is reserved at
    /// the mark but not below it.
    pub fn check_invariants(&self, game: &ColoringGame) -> bool {
        let rows = analyze_support(game);
        for (v, r) in &self.r {
            if *r > 0 && !rows.contains_key(v) {
                return false;
            }
        }
        for (v, row) in &rows {
            let cv = self.colors(v);
            if self.rank(v) != row.rank || cv.len() != row.rank {
                return false;
            }
            let mut child_sets = ColorSet::EMPTY;
            if v.len() < crate::tree::MAX_BITS {
                let c0 = self.colors(&v.child(false));
                let c1 = self.colors(&v.child(true));
                child_sets = c0.union(c1);
                let mut bound = cv;
                if let Some(c) = game.colors().get(v) {
                    bound = bound.difference(ColorSet(1 << (c - 1)));
                }
                if !c0.is_subset_of(bound) || !c1.is_subset_of(bound) {
                    return false;
                }
                if !ColorSet::comparable(c0, c1) {
                    return false;
                }
            }
            if let Some(c) = game.colors().get(v) {
                if !cv.contains(*c) || child_sets.contains(*c) {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Strategy {
    FirstFit,
    RankBased,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first-fit" => Ok(Strategy::FirstFit),
            "rank" => Ok(Strategy::RankBased),
            other => Err(format!("unknown strategy {other:?} (expected first-fit or rank)")),
        }
    }
}

/// One mark-and-color move as recorded in traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveRecord {
    pub index: usize,
    pub vertex: BitString,
    pub color: u32,
    pub rank_root: u32,
    pub ok: bool,
}

/// Plays a whole episode: marks the given vertices in order, colors each
/// with the chosen strategy, and records after every move whether the
/// coloring and the strategy's structural properties still hold.
pub fn play(
    k: u32,
    depth: usize,
    marks: &[BitString],
    strategy: Strategy,
) -> Result<Vec<MoveRecord>, ColoringError> {
    let mut game = ColoringGame::new(k, depth)?;
    let mut cache = RankCache::new();
    let mut records = Vec::with_capacity(marks.len());
    for (index, v) in marks.iter().enumerate() {
        game.mark(*v)?;
        let color = match strategy {
            Strategy::FirstFit => game.color_first_fit(v)?,
            Strategy::RankBased => cache.color_rank_based(&mut game, v)?,
        };
        let ok = match strategy {
            Strategy::FirstFit => first_fit_bullets_hold(&game),
            Strategy::RankBased => game.verify_coloring() && cache.check_invariants(&game),
        } && game.color_usage().len() <= k;
        records.push(MoveRecord { index, vertex: *v, color, rank_root: game.marked_rank(&BitString::EMPTY), ok });
    }
    Ok(records)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("announced bound for {0} must be at least 1")]
    ZeroBound(BitString),
    #[error("bound for {vertex} announced as {announced} but already at {previous}; bounds must strictly decrease")]
    NonDecreasingBound { vertex: BitString, previous: u32, announced: u32 },
}

/// A time-ordered sequence of announcements `(v, b)`, each certifying that
/// the stopping-time value at `v` is below `b`; later announcements for the
/// same vertex must strictly improve the bound.
#[derive(Clone, Debug, Default)]
pub struct UpperBoundSchedule {
    announcements: Vec<(BitString, u32)>,
}

impl UpperBoundSchedule {
    pub fn new() -> Self {
        UpperBoundSchedule::default()
    }

    pub fn push(&mut self, vertex: BitString, bound: u32) -> Result<(), ScheduleError> {
        if bound == 0 {
            return Err(ScheduleError::ZeroBound(vertex));
        }
        if let Some(previous) = self.final_bound(&vertex) {
            if bound >= previous {
                return Err(ScheduleError::NonDecreasingBound { vertex, previous, announced: bound });
            }
        }
        self.announcements.push((vertex, bound));
        Ok(())
    }

    pub fn announcements(&self) -> &[(BitString, u32)] {
        &self.announcements
    }

    pub fn is_empty(&self) -> bool {
        self.announcements.is_empty()
    }

    /// Best (smallest) bound announced for `v` so far.
    pub fn final_bound(&self, v: &BitString) -> Option<u32> {
        self.announcements.iter().filter(|(w, _)| w == v).map(|(_, b)| *b).min()
    }

    pub fn max_bound(&self) -> u32 {
        self.announcements.iter().map(|(_, b)| *b).max().unwrap_or(0)
    }

    fn vertices_within(&self, n: u32) -> BTreeSet<BitString> {
        self.announcements.iter().filter(|(_, b)| *b <= n).map(|(v, _)| *v).collect()
    }

    /// The cardinality discipline: for every level `n`, fewer than `2^n`
    /// vertices with final bound ≤ n lie on any single path.
    pub fn check_class_invariant(&self) -> bool {
        for n in 1..=self.max_bound() {
            let set = self.vertices_within(n);
            let worst = set
                .iter()
                .map(|w| set.iter().filter(|u| is_prefix(u, w)).count() as u64)
                .max()
                .unwrap_or(0);
            if worst >= 1u64 << n.min(63) {
                return false;
            }
        }
        true
    }
}

/// Renders a 1-based color as an `n`-bit string.
pub fn render_color(color: u32, n: u32) -> BitString {
    BitString::from_value(u64::from(color - 1), n as usize)
}

/// Runs one first-fit game per level `n = 1..=max bound` with budget `2^n`,
/// feeding it the vertices in announcement order as their bounds qualify,
/// and returns each nonempty color class as a prefix-free family keyed by
/// `(n, color rendered as an n-bit string)`.
pub fn schedule_to_families(
    schedule: &UpperBoundSchedule,
    depth: usize,
) -> Result<BTreeMap<(u32, BitString), PrefixFreeSet>, ColoringError> {
    let mut families: BTreeMap<(u32, BitString), PrefixFreeSet> = BTreeMap::new();
    for n in 1..=schedule.max_bound() {
        if n > 5 {
            return Err(ColoringError::InvalidBudget(1 << n));
        }
        let mut game = ColoringGame::new(1 << n, depth)?;
        for (v, b) in schedule.announcements() {
            if *b <= n && !game.marked().contains(v) {
                game.mark(*v)?;
                game.color_first_fit(v)?;
            }
        }
        for (v, c) in game.colors() {
            families
                .entry((n, render_color(*c, n)))
                .or_default()
                .insert(*v)
                .expect("a color class is an antichain");
        }
    }
    Ok(families)
}
