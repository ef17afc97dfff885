//! A desk-scale laboratory for stopping-time complexity.
//!
//! The crate implements, at explicit finite depth, the constructions that
//! relate several equivalent views of the complexity of "halting exactly
//! here" on a one-way input tape:
//!
//! * [`tree`]: bit strings as tree vertices, prefix order, antichains.
//! * [`modes`]: finite description modes, i.e. sets of
//!   (description, condition, object) triples that are monotone in the
//!   condition, with the uniqueness discipline and the transformers between
//!   them (joins, length modes, prefix-free families).
//! * [`machines`]: machines that read bits one-way and halt, their stopping
//!   sets, and the conversions between machines and prefix-free enumerators.
//! * [`coloring`]: the online game of coloring marked tree vertices so that
//!   comparable vertices never share a color, with two strategies, and the
//!   bridge from upper-bound announcement schedules to prefix-free families.
//! * [`oracle`]: the oracle view; maximal plain complexity over all infinite
//!   extensions of a vertex, evaluated as finite-horizon cylinder covers.
//! * [`beating`]: the builder-versus-team labeling game on disjoint subtrees
//!   and the prefix-stable extension operator.
//! * [`allocation`]: the layered description allocator for objects declared
//!   simple along branches, the class-minimization of announcement
//!   schedules, and the adversary that corners description assigners.
//!
//! Everything is deterministic: a fixed seed yields byte-identical traces.

pub mod allocation;
pub mod beating;
pub mod coloring;
pub mod machines;
pub mod modes;
pub mod oracle;
pub mod testing;
pub mod trace;
pub mod tree;
pub mod verify;

pub use tree::{BitString, PrefixFreeSet, DEFAULT_DEPTH_MAX};
