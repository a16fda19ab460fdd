//! Dense bitsets used for winning regions and allowed-action sets.

use std::fmt;

use crate::game::ActionId;

/// Maximum number of actions a game may declare; allowed sets are one `u64`.
pub const MAX_ACTIONS: usize = 64;

/// A set of action ids backed by a single machine word.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ActionSet(u64);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_ACTIONS);
        if n == MAX_ACTIONS {
            ActionSet(u64::MAX)
        } else {
            ActionSet((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        ActionSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn insert(&mut self, a: ActionId) {
        self.0 |= 1u64 << a;
    }

    pub fn remove(&mut self, a: ActionId) {
        self.0 &= !(1u64 << a);
    }

    pub fn contains(self, a: ActionId) -> bool {
        (a as usize) < MAX_ACTIONS && self.0 & (1u64 << a) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Smallest member.
    pub fn first(self) -> Option<ActionId> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as ActionId)
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = ActionId> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let a = rest.trailing_zeros();
            rest &= rest - 1;
            Some(a as ActionId)
        })
    }
}

impl FromIterator<ActionId> for ActionSet {
    fn from_iter<I: IntoIterator<Item = ActionId>>(iter: I) -> Self {
        let mut set = ActionSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Fixed-length bitset over `u64` words. Bit `i` lives in word `i / 64` at
/// position `i % 64`, which is also the on-disk layout.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut set = BitSet {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        set.trim();
        set
    }

    /// Rebuilds a bitset from raw words; bits beyond `len` must be clear.
    pub fn from_words(len: usize, words: Vec<u64>) -> Option<Self> {
        if words.len() != len.div_ceil(64) {
            return None;
        }
        let set = BitSet { len, words };
        let mut trimmed = set.clone();
        trimmed.trim();
        (trimmed == set).then_some(set)
    }

    fn trim(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i >> 6] & (1u64 << (i & 63)) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn clear(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] &= !(1u64 << (i & 63));
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Whether any bit in `start..end` is set.
    pub fn any_in(&self, start: usize, end: usize) -> bool {
        debug_assert!(start <= end && end <= self.len);
        if start == end {
            return false;
        }
        let (first, last) = (start >> 6, (end - 1) >> 6);
        let lo_mask = u64::MAX << (start & 63);
        let hi_mask = u64::MAX >> (63 - ((end - 1) & 63));
        if first == last {
            return self.words[first] & lo_mask & hi_mask != 0;
        }
        self.words[first] & lo_mask != 0
            || self.words[first + 1..last].iter().any(|&w| w != 0)
            || self.words[last] & hi_mask != 0
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSet({}/{})", self.count_ones(), self.len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn action_set_basics() {
        let mut s = ActionSet::full(3);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        s.remove(1);
        assert!(!s.contains(1));
        assert_eq!(s.first(), Some(0));
        assert_eq!(ActionSet::full(64).len(), 64);
        assert!(!ActionSet::full(3).contains(70));
    }

    #[test]
    fn full_bitset_has_no_stray_bits() {
        let s = BitSet::full(70);
        assert_eq!(s.count_ones(), 70);
        assert!(BitSet::from_words(70, vec![u64::MAX, u64::MAX]).is_none());
    }

    proptest! {
        #[test]
        fn any_in_matches_scan(bits in proptest::collection::vec(any::<bool>(), 1..300), a in 0usize..300, b in 0usize..300) {
            let mut set = BitSet::new(bits.len());
            for (i, &on) in bits.iter().enumerate() {
                if on { set.set(i); }
            }
            let (lo, hi) = (a.min(b).min(bits.len()), a.max(b).min(bits.len()));
            prop_assert_eq!(set.any_in(lo, hi), bits[lo..hi].iter().any(|&x| x));
            prop_assert_eq!(set.ones().collect::<Vec<_>>(), (0..bits.len()).filter(|&i| bits[i]).collect::<Vec<_>>());
        }
    }
}
