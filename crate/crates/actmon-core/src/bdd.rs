//! Reduced ordered BDD engine for sets of activation-pattern code words.
//!
//! Variables are fixed to neuron-major order with the most significant code
//! bit first: the variable for bit `b` of the neuron at position `p` is
//! `p * bits_per_neuron + b`. A stored pattern cube constrains each neuron's
//! code to a contiguous range, so cubes are inserted by a per-neuron range
//! split that never enumerates the underlying word set.
//!
//! The node table only grows; the apply cache is a pure memo. Construction
//! must be externally serialized, while [`Bdd::contains`] and
//! [`Bdd::count_words`] on a finished diagram are safe for concurrent readers.

use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BddError {
    #[error("word has {got} bits, expected {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("cube has {got} ranges, expected {expected} for {vars} variables")]
    CubeArityMismatch {
        expected: usize,
        got: usize,
        vars: usize,
    },
    #[error("code range [{lo}, {hi}] invalid for {bits} bits per neuron")]
    BadCodeRange { lo: u32, hi: u32, bits: u32 },
    #[error("bits_per_neuron must be in 1..=32, got {0}")]
    BadBitWidth(u32),
}

/// Handle to a node inside one [`Bdd`] manager. Handles from different
/// managers must never be mixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef(u32);

impl NodeRef {
    fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }
}

/// Inclusive code range for one monitored neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CodeRange {
    pub lo: u32,
    pub hi: u32,
}

impl CodeRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        CodeRange { lo, hi }
    }

    /// Number of codes in the range (always at least one).
    pub fn count(&self) -> u64 {
        u64::from(self.hi) - u64::from(self.lo) + 1
    }
}

/// One admissible-pattern cube: a contiguous code range per monitored neuron.
/// Its expansion is the Cartesian product of the per-neuron code sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CodeCube {
    ranges: Vec<CodeRange>,
}

impl CodeCube {
    pub fn new(ranges: Vec<CodeRange>) -> Self {
        CodeCube { ranges }
    }

    pub fn ranges(&self) -> &[CodeRange] {
        &self.ranges
    }

    pub fn arity(&self) -> usize {
        self.ranges.len()
    }

    /// Number of concrete words the cube expands to.
    pub fn word_count(&self) -> u128 {
        self.ranges.iter().map(|r| u128::from(r.count())).product()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    low: NodeRef,
    high: NodeRef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum BoolOp {
    And,
    Or,
    Xor,
}

/// A reduced ordered BDD manager over a fixed number of variables.
#[derive(Clone, Debug)]
pub struct Bdd {
    var_count: usize,
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeRef>,
    apply_cache: HashMap<(BoolOp, NodeRef, NodeRef), NodeRef>,
}

impl Bdd {
    pub const FALSE: NodeRef = NodeRef(0);
    pub const TRUE: NodeRef = NodeRef(1);

    /// Sentinel variable index for terminals; compares above every real var.
    const TERMINAL_VAR: u32 = u32::MAX;

    pub fn new(var_count: usize) -> Self {
        let terminal = |r| Node {
            var: Self::TERMINAL_VAR,
            low: r,
            high: r,
        };
        Bdd {
            var_count,
            nodes: vec![terminal(Self::FALSE), terminal(Self::TRUE)],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn var_of(&self, r: NodeRef) -> u32 {
        self.nodes[r.index()].var
    }

    /// Find-or-create with the two reduction rules applied.
    fn mk(&mut self, var: u32, low: NodeRef, high: NodeRef) -> NodeRef {
        if low == high {
            return low;
        }
        debug_assert!(var < self.var_of(low) && var < self.var_of(high));
        let node = Node { var, low, high };
        if let Some(&r) = self.unique.get(&node) {
            return r;
        }
        let r = NodeRef(self.nodes.len() as u32);
        self.nodes.push(node);
        self.unique.insert(node, r);
        r
    }

    /// The function that is true exactly when variable `var` equals `value`.
    pub fn literal(&mut self, var: u32, value: bool) -> NodeRef {
        debug_assert!((var as usize) < self.var_count);
        if value {
            self.mk(var, Self::FALSE, Self::TRUE)
        } else {
            self.mk(var, Self::TRUE, Self::FALSE)
        }
    }

    pub fn or(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        self.apply(BoolOp::Or, a, b)
    }

    pub fn and(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        self.apply(BoolOp::And, a, b)
    }

    /// Negation as `xor` with the constant true function.
    pub fn not(&mut self, a: NodeRef) -> NodeRef {
        self.apply(BoolOp::Xor, a, Self::TRUE)
    }

    fn apply(&mut self, op: BoolOp, a: NodeRef, b: NodeRef) -> NodeRef {
        if let Some(r) = Self::apply_shortcut(op, a, b) {
            return r;
        }
        // And/Or/Xor are commutative; normalize the cache key.
        let key = (op, a.min(b), a.max(b));
        if let Some(&r) = self.apply_cache.get(&key) {
            return r;
        }
        let (va, vb) = (self.var_of(a), self.var_of(b));
        let split = va.min(vb);
        let (a_lo, a_hi) = if va == split {
            let n = self.nodes[a.index()];
            (n.low, n.high)
        } else {
            (a, a)
        };
        let (b_lo, b_hi) = if vb == split {
            let n = self.nodes[b.index()];
            (n.low, n.high)
        } else {
            (b, b)
        };
        let low = self.apply(op, a_lo, b_lo);
        let high = self.apply(op, a_hi, b_hi);
        let r = self.mk(split, low, high);
        self.apply_cache.insert(key, r);
        r
    }

    fn apply_shortcut(op: BoolOp, a: NodeRef, b: NodeRef) -> Option<NodeRef> {
        match op {
            BoolOp::Or => {
                if a == Self::TRUE || b == Self::TRUE {
                    Some(Self::TRUE)
                } else if a == Self::FALSE {
                    Some(b)
                } else if b == Self::FALSE || a == b {
                    Some(a)
                } else {
                    None
                }
            }
            BoolOp::And => {
                if a == Self::FALSE || b == Self::FALSE {
                    Some(Self::FALSE)
                } else if a == Self::TRUE {
                    Some(b)
                } else if b == Self::TRUE || a == b {
                    Some(a)
                } else {
                    None
                }
            }
            BoolOp::Xor => {
                if a == b {
                    Some(Self::FALSE)
                } else if a == Self::FALSE {
                    Some(b)
                } else if b == Self::FALSE {
                    Some(a)
                } else {
                    None
                }
            }
        }
    }

    /// Unions `cube` into the set rooted at `root` and returns the new root.
    ///
    /// Cost is polynomial in the diagram size: each neuron's range becomes a
    /// decision subgraph over its own bits via binary span splitting, so the
    /// expansion of the cube is never enumerated.
    pub fn insert_cube(
        &mut self,
        root: NodeRef,
        cube: &CodeCube,
        bits_per_neuron: u32,
    ) -> Result<NodeRef, BddError> {
        if bits_per_neuron == 0 || bits_per_neuron > 32 {
            return Err(BddError::BadBitWidth(bits_per_neuron));
        }
        let expected = self.var_count / bits_per_neuron as usize;
        if cube.arity() != expected || cube.arity() * bits_per_neuron as usize != self.var_count {
            return Err(BddError::CubeArityMismatch {
                expected,
                got: cube.arity(),
                vars: self.var_count,
            });
        }
        let max_code = if bits_per_neuron == 32 {
            u32::MAX
        } else {
            (1u32 << bits_per_neuron) - 1
        };
        for range in cube.ranges() {
            if range.lo > range.hi || range.hi > max_code {
                return Err(BddError::BadCodeRange {
                    lo: range.lo,
                    hi: range.hi,
                    bits: bits_per_neuron,
                });
            }
        }
        // Build the cube bottom-up, last neuron first, so each range test
        // chains into the already-built suffix.
        let mut acc = Self::TRUE;
        for (pos, range) in cube.ranges().iter().enumerate().rev() {
            let base = (pos as u32) * bits_per_neuron;
            let span_hi = u64::from(max_code);
            acc = self.range_node(
                base,
                0,
                span_hi,
                u64::from(range.lo),
                u64::from(range.hi),
                acc,
            );
        }
        Ok(self.or(root, acc))
    }

    /// Decision subgraph testing whether the code spelled by the variables
    /// `base..base+bits` lies in `[lo, hi]`, continuing with `then` on
    /// success. `depth` bits have been consumed; the node's span of still
    /// reachable codes is `[span_lo, span_hi]`.
    fn range_node(
        &mut self,
        base: u32,
        span_lo: u64,
        span_hi: u64,
        lo: u64,
        hi: u64,
        then: NodeRef,
    ) -> NodeRef {
        self.range_rec(base, 0, span_lo, span_hi, lo, hi, then)
    }

    #[allow(clippy::too_many_arguments)]
    fn range_rec(
        &mut self,
        base: u32,
        depth: u32,
        span_lo: u64,
        span_hi: u64,
        lo: u64,
        hi: u64,
        then: NodeRef,
    ) -> NodeRef {
        if span_hi < lo || span_lo > hi {
            return Self::FALSE;
        }
        if lo <= span_lo && span_hi <= hi {
            // Remaining bits are don't-cares; the chain collapses to `then`.
            return then;
        }
        let mid = span_lo + (span_hi - span_lo) / 2;
        let low = self.range_rec(base, depth + 1, span_lo, mid, lo, hi, then);
        let high = self.range_rec(base, depth + 1, mid + 1, span_hi, lo, hi, then);
        self.mk(base + depth, low, high)
    }

    /// Membership of one concrete word, most significant bit of neuron 0
    /// first.
    pub fn contains(&self, root: NodeRef, word: &[bool]) -> Result<bool, BddError> {
        if word.len() != self.var_count {
            return Err(BddError::ArityMismatch {
                expected: self.var_count,
                got: word.len(),
            });
        }
        let mut cur = root;
        while !cur.is_terminal() {
            let node = self.nodes[cur.index()];
            cur = if word[node.var as usize] {
                node.high
            } else {
                node.low
            };
        }
        Ok(cur == Self::TRUE)
    }

    /// Number of satisfying assignments over all `var_count` variables,
    /// saturating at `u128::MAX` for very wide monitors.
    pub fn count_words(&self, root: NodeRef) -> u128 {
        let mut memo: HashMap<NodeRef, u128> = HashMap::new();
        let below_root = self.count_below(root, &mut memo);
        Self::scale(below_root, self.gap(None, root))
    }

    /// `count * 2^levels`, saturating.
    fn scale(count: u128, levels: u32) -> u128 {
        if count == 0 {
            return 0;
        }
        if levels > count.leading_zeros() {
            return u128::MAX;
        }
        count << levels
    }

    /// Satisfying assignments over the variables at or below `r`'s level.
    fn count_below(&self, r: NodeRef, memo: &mut HashMap<NodeRef, u128>) -> u128 {
        if r == Self::FALSE {
            return 0;
        }
        if r == Self::TRUE {
            return 1;
        }
        if let Some(&c) = memo.get(&r) {
            return c;
        }
        let node = self.nodes[r.index()];
        let low = Self::scale(
            self.count_below(node.low, memo),
            self.gap(Some(r), node.low),
        );
        let high = Self::scale(
            self.count_below(node.high, memo),
            self.gap(Some(r), node.high),
        );
        let total = low.saturating_add(high);
        memo.insert(r, total);
        total
    }

    /// Count of skipped (unconstrained) variable levels between a node and
    /// one of its children; `None` means "above the root".
    fn gap(&self, parent: Option<NodeRef>, child: NodeRef) -> u32 {
        let parent_level = match parent {
            Some(p) => self.var_of(p) + 1,
            None => 0,
        };
        let child_level = if child.is_terminal() {
            self.var_count as u32
        } else {
            self.var_of(child)
        };
        child_level - parent_level
    }

    /// True when the two roots (possibly from different managers with the
    /// same variable order) denote the same Boolean function. For reduced
    /// ordered diagrams this is structural isomorphism.
    pub fn same_function(&self, a: NodeRef, other: &Bdd, b: NodeRef) -> bool {
        if self.var_count != other.var_count {
            return false;
        }
        let mut memo: HashMap<(NodeRef, NodeRef), bool> = HashMap::new();
        self.same_rec(a, other, b, &mut memo)
    }

    fn same_rec(
        &self,
        a: NodeRef,
        other: &Bdd,
        b: NodeRef,
        memo: &mut HashMap<(NodeRef, NodeRef), bool>,
    ) -> bool {
        if a.is_terminal() || b.is_terminal() {
            return a == b;
        }
        if let Some(&r) = memo.get(&(a, b)) {
            return r;
        }
        let na = self.nodes[a.index()];
        let nb = other.nodes[b.index()];
        let r = na.var == nb.var
            && self.same_rec(na.low, other, nb.low, memo)
            && self.same_rec(na.high, other, nb.high, memo);
        memo.insert((a, b), r);
        r
    }

    /// Walks every stored node and checks the two ROBDD structural
    /// invariants: strictly increasing variables along edges and no
    /// redundant or duplicate nodes.
    pub fn check_invariants(&self) -> bool {
        let mut seen = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate().skip(2) {
            if node.low == node.high {
                return false;
            }
            if node.var as usize >= self.var_count {
                return false;
            }
            if node.var >= self.var_of(node.low) || node.var >= self.var_of(node.high) {
                return false;
            }
            if seen.insert(*node, i).is_some() {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;
    use std::collections::HashSet;

    fn word(bits: &str) -> Vec<bool> {
        bits.chars().map(|c| c == '1').collect()
    }

    /// All concrete words of a cube, for brute-force comparison.
    fn expand(cube: &CodeCube, bits: u32, vars: usize) -> HashSet<Vec<bool>> {
        let mut words = HashSet::new();
        let mut stack = vec![Vec::new()];
        for range in cube.ranges() {
            let mut next = Vec::new();
            for prefix in &stack {
                for code in range.lo..=range.hi {
                    let mut w: Vec<bool> = prefix.clone();
                    for b in (0..bits).rev() {
                        w.push(code >> b & 1 == 1);
                    }
                    next.push(w);
                }
            }
            stack = next;
        }
        for w in stack {
            assert_eq!(w.len(), vars);
            words.insert(w);
        }
        words
    }

    fn cube(ranges: &[(u32, u32)]) -> CodeCube {
        CodeCube::new(
            ranges
                .iter()
                .map(|&(lo, hi)| CodeRange::new(lo, hi))
                .collect(),
        )
    }

    #[test]
    fn or_identity_and_complement() {
        let mut m = Bdd::new(3);
        let x = m.literal(1, true);
        assert_eq!(m.or(x, Bdd::FALSE), x);
        let nx = m.not(x);
        assert_eq!(m.or(x, nx), Bdd::TRUE);
        assert!(m.check_invariants());
    }

    #[test]
    fn or_matches_brute_force() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(17);
        let vars = 8;
        for _ in 0..20 {
            let mut m = Bdd::new(vars);
            let mut set_a: HashSet<Vec<bool>> = HashSet::new();
            let mut set_b: HashSet<Vec<bool>> = HashSet::new();
            let mut a = Bdd::FALSE;
            let mut b = Bdd::FALSE;
            for _ in 0..rng.gen_range(1..6) {
                let c = cube(
                    &(0..vars)
                        .map(|_| {
                            let bit = rng.gen_range(0..2);
                            (bit, bit)
                        })
                        .collect::<Vec<_>>(),
                );
                set_a.extend(expand(&c, 1, vars));
                a = m.insert_cube(a, &c, 1).unwrap();
            }
            for _ in 0..rng.gen_range(1..6) {
                let c = cube(
                    &(0..vars)
                        .map(|_| {
                            let bit = rng.gen_range(0..2);
                            (bit, bit)
                        })
                        .collect::<Vec<_>>(),
                );
                set_b.extend(expand(&c, 1, vars));
                b = m.insert_cube(b, &c, 1).unwrap();
            }
            let union = m.or(a, b);
            for assignment in 0..(1u32 << vars) {
                let w: Vec<bool> = (0..vars)
                    .map(|i| assignment >> (vars - 1 - i) & 1 == 1)
                    .collect();
                let expected = set_a.contains(&w) || set_b.contains(&w);
                assert_eq!(m.contains(union, &w).unwrap(), expected);
            }
            assert!(m.check_invariants());
        }
    }

    #[test]
    fn dont_care_cube_collapses_to_two_literals() {
        // (b1, b2, b3, b4) = (1, -, -, 0): represented as b1 AND NOT b4.
        let mut m = Bdd::new(4);
        let c = cube(&[(1, 1), (0, 1), (0, 1), (0, 0)]);
        let root = m.insert_cube(Bdd::FALSE, &c, 1).unwrap();
        let b1 = m.literal(0, true);
        let b4 = m.literal(3, true);
        let nb4 = m.not(b4);
        let expected = m.and(b1, nb4);
        assert_eq!(root, expected);
        assert_eq!(m.count_words(root), 4);
        assert_eq!(c.word_count(), 4);
        assert!(m.contains(root, &word("1000")).unwrap());
        assert!(m.contains(root, &word("1110")).unwrap());
        assert!(!m.contains(root, &word("0000")).unwrap());
        assert!(!m.contains(root, &word("1001")).unwrap());
    }

    #[test]
    fn two_bit_cube_matches_formula() {
        // ({00,01}, {01,10,11}, {10}) over 3 neurons of 2 bits each.
        let mut m = Bdd::new(6);
        let c = cube(&[(0, 1), (1, 3), (2, 2)]);
        let root = m.insert_cube(Bdd::FALSE, &c, 2).unwrap();
        // (!b10) & (b20 | b21) & (b30 & !b31)
        let b10 = m.literal(0, true);
        let nb10 = m.not(b10);
        let b20 = m.literal(2, true);
        let b21 = m.literal(3, true);
        let b30 = m.literal(4, true);
        let b31 = m.literal(5, true);
        let or2 = m.or(b20, b21);
        let nb31 = m.not(b31);
        let and3 = m.and(b30, nb31);
        let formula = m.and(nb10, or2);
        let formula = m.and(formula, and3);
        assert_eq!(root, formula);
        assert_eq!(m.count_words(root), 2 * 3);
        assert_eq!(c.word_count(), m.count_words(root));
    }

    #[test]
    fn insert_is_idempotent() {
        let mut m = Bdd::new(6);
        let c = cube(&[(0, 1), (1, 2), (3, 3)]);
        let once = m.insert_cube(Bdd::FALSE, &c, 2).unwrap();
        let twice = m.insert_cube(once, &c, 2).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn insert_order_does_not_matter() {
        let mut m = Bdd::new(8);
        let cubes = [
            cube(&[(0, 1), (2, 3), (1, 1), (0, 3)]),
            cube(&[(2, 2), (0, 0), (0, 3), (1, 2)]),
            cube(&[(1, 3), (1, 1), (2, 3), (2, 2)]),
        ];
        let mut forward = Bdd::FALSE;
        for c in &cubes {
            forward = m.insert_cube(forward, c, 2).unwrap();
        }
        let mut backward = Bdd::FALSE;
        for c in cubes.iter().rev() {
            backward = m.insert_cube(backward, c, 2).unwrap();
        }
        assert_eq!(forward, backward);
        assert!(m.check_invariants());
    }

    #[test]
    fn empty_set_contains_nothing() {
        let m = Bdd::new(4);
        for assignment in 0..16u32 {
            let w: Vec<bool> = (0..4).map(|i| assignment >> (3 - i) & 1 == 1).collect();
            assert!(!m.contains(Bdd::FALSE, &w).unwrap());
        }
    }

    #[test]
    fn contains_checks_arity() {
        let m = Bdd::new(4);
        assert!(matches!(
            m.contains(Bdd::FALSE, &word("101")),
            Err(BddError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn insert_rejects_malformed_cubes() {
        let mut m = Bdd::new(4);
        assert!(matches!(
            m.insert_cube(Bdd::FALSE, &cube(&[(0, 1), (0, 1)]), 1),
            Err(BddError::CubeArityMismatch { .. })
        ));
        assert!(matches!(
            m.insert_cube(Bdd::FALSE, &cube(&[(0, 2), (0, 1), (0, 1), (0, 1)]), 1),
            Err(BddError::BadCodeRange { .. })
        ));
    }

    #[test]
    fn count_words_terminals() {
        let m = Bdd::new(5);
        assert_eq!(m.count_words(Bdd::FALSE), 0);
        assert_eq!(m.count_words(Bdd::TRUE), 32);
    }

    #[test]
    fn random_monitors_match_explicit_sets() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
        for _ in 0..30 {
            let neurons = rng.gen_range(2..5usize);
            let bits = rng.gen_range(1..=3u32);
            let vars = neurons * bits as usize;
            if vars > 12 {
                continue;
            }
            let mut m = Bdd::new(vars);
            let mut root = Bdd::FALSE;
            let mut explicit: HashSet<Vec<bool>> = HashSet::new();
            for _ in 0..rng.gen_range(1..8) {
                let max = (1u32 << bits) - 1;
                let ranges: Vec<(u32, u32)> = (0..neurons)
                    .map(|_| {
                        let lo = rng.gen_range(0..=max);
                        let hi = rng.gen_range(lo..=max);
                        (lo, hi)
                    })
                    .collect();
                let c = cube(&ranges);
                explicit.extend(expand(&c, bits, vars));
                root = m.insert_cube(root, &c, bits).unwrap();
            }
            for assignment in 0..(1u32 << vars) {
                let w: Vec<bool> = (0..vars)
                    .map(|i| assignment >> (vars - 1 - i) & 1 == 1)
                    .collect();
                assert_eq!(m.contains(root, &w).unwrap(), explicit.contains(&w));
            }
            assert_eq!(m.count_words(root), explicit.len() as u128);
            assert!(m.check_invariants());
        }
    }

    #[test]
    fn same_function_across_managers() {
        let mut m1 = Bdd::new(4);
        let mut m2 = Bdd::new(4);
        let c1 = cube(&[(1, 1), (0, 1), (0, 1), (0, 0)]);
        let c2 = cube(&[(0, 0), (1, 1), (0, 1), (1, 1)]);
        let mut r1 = m1.insert_cube(Bdd::FALSE, &c1, 1).unwrap();
        r1 = m1.insert_cube(r1, &c2, 1).unwrap();
        // Same set, other insertion order, different manager.
        let mut r2 = m2.insert_cube(Bdd::FALSE, &c2, 1).unwrap();
        r2 = m2.insert_cube(r2, &c1, 1).unwrap();
        assert!(m1.same_function(r1, &m2, r2));
        let r3 = m2.insert_cube(r2, &cube(&[(0, 1); 4]), 1).unwrap();
        assert!(!m1.same_function(r1, &m2, r3));
    }
}
