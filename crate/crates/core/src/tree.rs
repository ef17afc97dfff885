//! Rooted binary tree primitives.
//!
//! Vertices of the infinite binary tree are finite bit strings; the root is
//! the empty string and the two children of `x` are `x0` and `x1`. Everything
//! else in this crate (description modes, coloring games, allocation games)
//! is built on the prefix order of these strings, so the representation keeps
//! the length explicit: `""`, `"0"` and `"00"` are three different vertices.

use std::fmt;

use thiserror::Error;

/// Default bound on vertex depth used by the games and the CLI.
///
/// It can be overridden per run; the hard capacity of [`BitString`] is
/// [`MAX_BITS`] bits, which is far above anything the finite-scale games
/// construct.
pub const DEFAULT_DEPTH_MAX: usize = 16;

/// Hard capacity of a [`BitString`] in bits.
pub const MAX_BITS: usize = 63;

/// A finite string over {0, 1}, stored as an explicit (length, bits) pair.
///
/// Bit `i` of the string is kept in bit position `i` of the packed word, so
/// prefix tests and parent/child moves are mask operations. The `Ord`
/// implementation is lexicographic with a proper prefix ordered before its
/// extensions, which makes sorted output stable and lets prefix-freeness be
/// checked on adjacent elements of a sorted slice.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: u8,
    bits: u64,
}

/// Error returned when parsing a bit string from text.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitStringError {
    #[error("invalid character {0:?} in bit string (expected '0' or '1')")]
    InvalidChar(char),
    #[error("bit string longer than {MAX_BITS} bits")]
    TooLong,
}

impl BitString {
    /// The empty string, i.e. the root of the tree.
    pub const EMPTY: BitString = BitString { len: 0, bits: 0 };

    pub fn empty() -> Self {
        Self::EMPTY
    }

    /// Builds a string from an iterator of bits, first bit outermost.
    pub fn from_bits<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut s = Self::EMPTY;
        for b in iter {
            s = s.child(b);
        }
        s
    }

    /// The `width`-bit big-endian rendering of `value`.
    ///
    /// Used for fixed-width length encodings, color names and pool ids.
    pub fn from_value(value: u64, width: usize) -> Self {
        assert!(width <= MAX_BITS, "width {width} exceeds capacity");
        assert!(
            width == 64 || value < (1u64 << width),
            "value {value} does not fit in {width} bits"
        );
        let mut s = Self::EMPTY;
        for i in (0..width).rev() {
            s = s.child((value >> i) & 1 == 1);
        }
        s
    }

    /// Minimal binary rendering of `n` ("0", "1", "10", "11", ...).
    ///
    /// Injective on unsigned integers; used to render opaque ids as strings.
    pub fn minimal_binary(n: u64) -> Self {
        let width = if n == 0 { 1 } else { 64 - n.leading_zeros() as usize };
        Self::from_value(n, width)
    }

    pub fn parse(text: &str) -> Result<Self, BitStringError> {
        if text.len() > MAX_BITS {
            return Err(BitStringError::TooLong);
        }
        let mut s = Self::EMPTY;
        for c in text.chars() {
            match c {
                '0' => s = s.child(false),
                '1' => s = s.child(true),
                other => return Err(BitStringError::InvalidChar(other)),
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `i`, counted from the start of the string.
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        (self.bits >> i) & 1 == 1
    }

    pub fn iter_bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    /// The child `x0` or `x1`.
    pub fn child(&self, bit: bool) -> Self {
        assert!(self.len() < MAX_BITS, "bit string capacity exceeded");
        BitString {
            len: self.len + 1,
            bits: self.bits | ((bit as u64) << self.len),
        }
    }

    /// Drops the last bit; `None` at the root.
    pub fn parent(&self) -> Option<Self> {
        if self.len == 0 {
            return None;
        }
        let len = self.len - 1;
        Some(BitString {
            len,
            bits: self.bits & ((1u64 << len) - 1),
        })
    }

    /// The prefix of length `n`.
    pub fn truncate(&self, n: usize) -> Self {
        assert!(n <= self.len());
        BitString {
            len: n as u8,
            bits: if n == 64 { self.bits } else { self.bits & ((1u64 << n) - 1) },
        }
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &BitString) -> Self {
        assert!(self.len() + other.len() <= MAX_BITS, "bit string capacity exceeded");
        BitString {
            len: self.len + other.len,
            bits: self.bits | (other.bits << self.len),
        }
    }

    /// The sibling of this vertex (last bit flipped); `None` at the root.
    pub fn sibling(&self) -> Option<Self> {
        if self.len == 0 {
            return None;
        }
        Some(BitString {
            len: self.len,
            bits: self.bits ^ (1u64 << (self.len - 1)),
        })
    }
}

/// True iff `a` is a (not necessarily proper) prefix of `b`.
pub fn is_prefix(a: &BitString, b: &BitString) -> bool {
    a.len <= b.len && (b.bits & low_mask(a.len)) == a.bits
}

/// True iff one of the strings is a prefix of the other, i.e. the two
/// vertices lie on a common root-to-leaf path.
pub fn are_compatible(a: &BitString, b: &BitString) -> bool {
    let n = a.len.min(b.len);
    (a.bits & low_mask(n)) == (b.bits & low_mask(n))
}

fn low_mask(n: u8) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Checks that no string in the slice is a prefix of another.
///
/// Sorts a copy and inspects adjacent pairs: in lexicographic-with-prefix
/// order, if some `a` is a proper prefix of some `b` then `a` is a prefix of
/// everything between them, in particular of its immediate successor.
pub fn check_prefix_free(strings: &[BitString]) -> bool {
    let mut sorted: Vec<BitString> = strings.to_vec();
    sorted.sort();
    sorted.windows(2).all(|w| w[0] != w[1] && !is_prefix(&w[0], &w[1]))
}

/// The path from `v` up to the root, starting at `v` itself.
pub fn path_to_root(v: &BitString) -> Vec<BitString> {
    let mut path = Vec::with_capacity(v.len() + 1);
    let mut cur = *v;
    loop {
        path.push(cur);
        match cur.parent() {
            Some(p) => cur = p,
            None => break,
        }
    }
    path
}

/// All strings of exactly length `n`, in lexicographic order.
pub fn strings_of_length(n: usize) -> impl Iterator<Item = BitString> {
    assert!(n <= 32, "enumeration of length {n} is not desk-scale");
    (0..(1u64 << n)).map(move |v| {
        // from_value is big-endian, which enumerates lexicographically.
        BitString::from_value(v, n)
    })
}

/// All strings of length at most `n`, shortest first, lexicographic within a
/// length.
pub fn strings_up_to(n: usize) -> impl Iterator<Item = BitString> {
    (0..=n).flat_map(strings_of_length)
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter_bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let n = self.len().min(other.len());
        for i in 0..n {
            match (self.bit(i), other.bit(i)) {
                (false, true) => return std::cmp::Ordering::Less,
                (true, false) => return std::cmp::Ordering::Greater,
                _ => {}
            }
        }
        self.len().cmp(&other.len())
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::str::FromStr for BitString {
    type Err = BitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BitString::parse(s)
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BitString::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Error returned when a set fails the prefix-free requirement.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("set is not prefix-free: {shorter:?} is a prefix of {longer:?}")]
pub struct NotPrefixFree {
    pub shorter: BitString,
    pub longer: BitString,
}

/// A set of bit strings that is maintained prefix-free (an antichain).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrefixFreeSet {
    members: std::collections::BTreeSet<BitString>,
}

impl PrefixFreeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from the given strings, rejecting comparable pairs.
    pub fn from_strings<I: IntoIterator<Item = BitString>>(iter: I) -> Result<Self, NotPrefixFree> {
        let mut set = Self::new();
        for s in iter {
            set.insert(s)?;
        }
        Ok(set)
    }

    /// Inserts a string; fails if it is comparable with an existing member.
    /// Re-inserting an existing member is a no-op.
    pub fn insert(&mut self, s: BitString) -> Result<bool, NotPrefixFree> {
        if self.members.contains(&s) {
            return Ok(false);
        }
        for m in &self.members {
            if is_prefix(m, &s) {
                return Err(NotPrefixFree { shorter: *m, longer: s });
            }
            if is_prefix(&s, m) {
                return Err(NotPrefixFree { shorter: s, longer: *m });
            }
        }
        self.members.insert(s);
        Ok(true)
    }

    pub fn contains(&self, s: &BitString) -> bool {
        self.members.contains(s)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BitString> {
        self.members.iter()
    }

    pub fn as_set(&self) -> &std::collections::BTreeSet<BitString> {
        &self.members
    }
}

impl IntoIterator for PrefixFreeSet {
    type Item = BitString;
    type IntoIter = std::collections::btree_set::IntoIter<BitString>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.into_iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    #[test]
    fn empty_zero_and_double_zero_are_distinct() {
        assert_ne!(bs(""), bs("0"));
        assert_ne!(bs("0"), bs("00"));
        assert_ne!(bs(""), bs("00"));
    }

    #[test]
    fn prefix_examples() {
        assert!(is_prefix(&bs(""), &bs("0")));
        assert!(is_prefix(&bs("01"), &bs("011")));
        assert!(!is_prefix(&bs("1"), &bs("01")));
        assert!(is_prefix(&bs(""), &bs("")));
    }

    #[test]
    fn compatibility_examples() {
        assert!(are_compatible(&bs("0"), &bs("01")));
        assert!(are_compatible(&bs("01"), &bs("0")));
        assert!(!are_compatible(&bs("00"), &bs("01")));
        assert!(are_compatible(&bs(""), &bs("110")));
    }

    #[test]
    fn prefix_free_examples() {
        assert!(check_prefix_free(&[bs("00"), bs("01"), bs("1")]));
        assert!(!check_prefix_free(&[bs("0"), bs("01")]));
        assert!(check_prefix_free(&[]));
        assert!(check_prefix_free(&[bs("")]));
        assert!(!check_prefix_free(&[bs(""), bs("1")]));
        assert!(!check_prefix_free(&[bs("1"), bs("1")]));
    }

    #[test]
    fn path_to_root_example() {
        let path = path_to_root(&bs("10"));
        assert_eq!(path, vec![bs("10"), bs("1"), bs("")]);
    }

    #[test]
    fn parent_child_roundtrip() {
        let v = bs("0110");
        assert_eq!(v.parent(), Some(bs("011")));
        assert_eq!(bs("011").child(false), v);
        assert_eq!(bs("").parent(), None);
    }

    #[test]
    fn sibling_flips_last_bit() {
        assert_eq!(bs("01").sibling(), Some(bs("00")));
        assert_eq!(bs("").sibling(), None);
    }

    #[test]
    fn fixed_width_and_minimal_renderings() {
        assert_eq!(BitString::from_value(2, 3), bs("010"));
        assert_eq!(BitString::from_value(0, 0), bs(""));
        assert_eq!(BitString::minimal_binary(0), bs("0"));
        assert_eq!(BitString::minimal_binary(5), bs("101"));
    }

    #[test]
    fn ordering_puts_prefix_before_extension() {
        let mut v = vec![bs("1"), bs("01"), bs("0"), bs(""), bs("00")];
        v.sort();
        assert_eq!(v, vec![bs(""), bs("0"), bs("00"), bs("01"), bs("1")]);
    }

    #[test]
    fn enumeration_orders() {
        let all: Vec<BitString> = strings_of_length(2).collect();
        assert_eq!(all, vec![bs("00"), bs("01"), bs("10"), bs("11")]);
        let upto: Vec<BitString> = strings_up_to(1).collect();
        assert_eq!(upto, vec![bs(""), bs("0"), bs("1")]);
    }

    #[test]
    fn prefix_free_set_rejects_comparable() {
        let mut set = PrefixFreeSet::new();
        set.insert(bs("01")).unwrap();
        set.insert(bs("1")).unwrap();
        let err = set.insert(bs("011")).unwrap_err();
        assert_eq!(err.shorter, bs("01"));
        assert!(!set.contains(&bs("011")));
        assert_eq!(set.insert(bs("1")), Ok(false));
    }

    // An independent pairwise oracle for prefix-freeness; the production
    // check sorts and looks at neighbors only.
    fn prefix_free_pairwise(strings: &[BitString]) -> bool {
        for (i, a) in strings.iter().enumerate() {
            for b in strings.iter().skip(i + 1) {
                if is_prefix(a, b) || is_prefix(b, a) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn prefix_free_matches_pairwise_oracle_exhaustively() {
        // Every multiset of at most 3 strings drawn from all strings of
        // length <= 3, plus randomized larger sets below.
        let universe: Vec<BitString> = strings_up_to(3).collect();
        for a in 0..universe.len() {
            for b in a..universe.len() {
                for c in b..universe.len() {
                    let set = [universe[a], universe[b], universe[c]];
                    assert_eq!(
                        check_prefix_free(&set),
                        prefix_free_pairwise(&set),
                        "disagreement on {set:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn is_prefix_laws_exhaustive() {
        let universe: Vec<BitString> = strings_up_to(5).collect();
        for a in &universe {
            assert!(is_prefix(a, a));
        }
        for a in &universe {
            for b in &universe {
                if is_prefix(a, b) && is_prefix(b, a) {
                    assert_eq!(a, b);
                }
                for c in &universe {
                    if is_prefix(a, b) && is_prefix(b, c) {
                        assert!(is_prefix(a, c));
                    }
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn prefix_free_matches_pairwise_oracle_random(
            lens in proptest::collection::vec(0usize..6, 0..8),
            seed in proptest::arbitrary::any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let strings: Vec<BitString> = lens
                .iter()
                .map(|&l| BitString::from_bits((0..l).map(|_| rng.gen())))
                .collect();
            proptest::prop_assert_eq!(
                check_prefix_free(&strings),
                prefix_free_pairwise(&strings)
            );
        }

        #[test]
        fn compatibility_is_mutual_prefix(
            la in 0usize..8, lb in 0usize..8, seed in proptest::arbitrary::any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = BitString::from_bits((0..la).map(|_| rng.gen()));
            let b = BitString::from_bits((0..lb).map(|_| rng.gen()));
            proptest::prop_assert_eq!(
                are_compatible(&a, &b),
                is_prefix(&a, &b) || is_prefix(&b, &a)
            );
        }
    }
}
