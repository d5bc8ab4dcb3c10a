//! Cayley-graph balls and finite-order testing.
//!
//! Normal forms of a length-reducing convergent system are geodesics, so the
//! ball `B(r)` is exactly the set of normal forms of length at most `r`, and it
//! can be grown sphere by sphere: every element at distance `k` is a normal form
//! at distance `k - 1` extended by one letter.
//!
//! Finite-order testing iterates powers against the cutoff `|B(r_T + 2)|`: every
//! finite subgroup of a plain group presented this way is conjugate into that
//! ball, so a finite order never exceeds its size.

use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::rewriting::RewritingSystem;
use crate::word::{Letter, Word};

pub const DEFAULT_BALL_CAP: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BallError {
    #[error("ball of radius {radius} exceeds the cap of {cap} elements")]
    BallTooLarge { radius: usize, cap: usize },
}

#[derive(Clone, Debug)]
pub struct Ball {
    radius: usize,
    elements: Vec<Word>,
    index: HashMap<Word, usize>,
    sphere_starts: Vec<usize>,
}

impl Ball {
    pub fn build(rs: &RewritingSystem, radius: usize, cap: usize) -> Result<Ball, BallError> {
        let mut elements = vec![Word::empty()];
        let mut index = HashMap::new();
        index.insert(Word::empty(), 0);
        let mut sphere_starts = vec![0];
        let mut frontier = 0..1;
        for k in 1..=radius {
            let start = elements.len();
            let mut seen = HashSet::new();
            for i in frontier.clone() {
                for x in rs.letters() {
                    let w = rs.multiply(&elements[i], &[x]);
                    if w.len() == k && !index.contains_key(&w) {
                        seen.insert(w);
                    }
                }
            }
            if start + seen.len() > cap {
                return Err(BallError::BallTooLarge { radius, cap });
            }
            let mut sphere: Vec<Word> = seen.into_iter().collect();
            sphere.sort();
            for w in sphere {
                index.insert(w.clone(), elements.len());
                elements.push(w);
            }
            sphere_starts.push(start);
            frontier = start..elements.len();
        }
        Ok(Ball { radius, elements, index, sphere_starts })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// All elements in shortlex order, `λ` first.
    pub fn elements(&self) -> &[Word] {
        &self.elements
    }

    pub fn contains(&self, nf: &Word) -> bool {
        self.index.contains_key(nf)
    }

    pub fn position(&self, nf: &Word) -> Option<usize> {
        self.index.get(nf).copied()
    }

    /// Elements at distance exactly `k`.
    pub fn sphere(&self, k: usize) -> &[Word] {
        if k > self.radius {
            return &[];
        }
        let end = self.sphere_starts.get(k + 1).copied().unwrap_or(self.elements.len());
        &self.elements[self.sphere_starts[k]..end]
    }
}

/// `B_e(r)` with the default element cap.
pub fn ball(rs: &RewritingSystem, r: usize) -> Result<Ball, BallError> {
    Ball::build(rs, r, DEFAULT_BALL_CAP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum OrderResult {
    Finite(u64),
    Infinite,
}

impl OrderResult {
    pub fn is_finite(self) -> bool {
        matches!(self, OrderResult::Finite(_))
    }
}

/// Normal form of `t g t⁻¹`.
pub fn conjugate_nf(rs: &RewritingSystem, t: &[Letter], g: &[Letter]) -> Word {
    let mut stack = Vec::with_capacity(2 * t.len() + g.len());
    rs.reduce_onto(&mut stack, t);
    rs.reduce_onto(&mut stack, g);
    rs.reduce_onto(&mut stack, &rs.formal_inverse(t));
    Word::from_letters(stack)
}

/// One-shot order test; builds `B(r_T + 2)` to obtain the cutoff.
pub fn has_finite_order(rs: &RewritingSystem, w: &[Letter]) -> Result<OrderResult, BallError> {
    Ok(OrderOracle::new(rs)?.order(w))
}

/// Memoizing finite-order oracle for one system.
///
/// `order` returns the exact order when it is at most the cutoff and
/// `Infinite` otherwise. Before iterating powers the element is replaced by a
/// shortest cyclic conjugate found by rotation and single-letter conjugation;
/// the order is a class function, so this is exact. Iteration stops early with
/// `Infinite` when some power `w = gᵏ` satisfies `|w| ≥ max|lhs| − 1` and `w·w`
/// is irreducible, because then every power of `w` is irreducible and non-empty.
#[derive(Debug)]
pub struct OrderOracle<'a> {
    rs: &'a RewritingSystem,
    bound: u64,
    cache: Mutex<HashMap<Word, OrderResult>>,
}

const CACHE_LIMIT: usize = 1 << 20;

impl<'a> OrderOracle<'a> {
    pub fn new(rs: &'a RewritingSystem) -> Result<Self, BallError> {
        let b = Ball::build(rs, rs.max_rhs() + 2, DEFAULT_BALL_CAP)?;
        Ok(Self::with_bound(rs, b.len() as u64))
    }

    /// Uses an explicit cutoff; `bound` should be `|B(r_T + 2)|`.
    pub fn with_bound(rs: &'a RewritingSystem, bound: u64) -> Self {
        OrderOracle { rs, bound, cache: Mutex::new(HashMap::new()) }
    }

    pub fn system(&self) -> &'a RewritingSystem {
        self.rs
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn is_finite(&self, w: &[Letter]) -> bool {
        self.order(w).is_finite()
    }

    pub fn order(&self, w: &[Letter]) -> OrderResult {
        let g = self.rs.reduce(w);
        if g.is_empty() {
            return OrderResult::Finite(1);
        }
        if let Some(&r) = self.cache.lock().unwrap().get(&g) {
            return r;
        }
        let key = cyclic_key(self.rs, g.clone());
        let cached = self.cache.lock().unwrap().get(&key).copied();
        let result = cached.unwrap_or_else(|| self.power_iteration(&key));
        let mut cache = self.cache.lock().unwrap();
        if cache.len() > CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, result);
        cache.insert(g, result);
        result
    }

    fn power_iteration(&self, g: &[Letter]) -> OrderResult {
        let mut power = g.to_vec();
        let mut k: u64 = 1;
        let mut next_check = 1;
        loop {
            if power.is_empty() {
                return OrderResult::Finite(k);
            }
            if k >= self.bound {
                return OrderResult::Infinite;
            }
            if k == next_check {
                if power.len() + 1 >= self.rs.max_lhs() && self.square_irreducible(&power) {
                    return OrderResult::Infinite;
                }
                next_check *= 2;
            }
            self.rs.reduce_onto(&mut power, g);
            k += 1;
        }
    }

    // w is irreducible; checks the windows of w·w that straddle the seam.
    fn square_irreducible(&self, w: &[Letter]) -> bool {
        !self.rs.rules().iter().any(|rule| {
            let l = &rule.lhs;
            (1..l.len()).any(|s| {
                s <= w.len() && l.len() - s <= w.len() && w.ends_with(&l[..s]) && w.starts_with(&l[s..])
            })
        })
    }
}

/// A shortest representative of the conjugacy class reachable by cyclic
/// rotation and single-letter conjugation, smallest rotation in shortlex.
pub fn cyclic_key(rs: &RewritingSystem, nf: Word) -> Word {
    let mut w = nf;
    'shrink: loop {
        for i in 1..w.len() {
            let r = rs.reduce(&w.rotate(i));
            if r.len() < w.len() {
                w = r;
                continue 'shrink;
            }
        }
        for x in rs.letters() {
            let c = conjugate_nf(rs, &[x], &w);
            if c.len() < w.len() {
                w = c;
                continue 'shrink;
            }
        }
        break;
    }
    (0..w.len().max(1)).map(|i| w.rotate(i)).min().unwrap_or(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z: &str = "letters: a A\ninverse: a A\nrule: a A ->\nrule: A a ->\n";
    const Z2Z3: &str = "letters: t b B\ninverse: t t\ninverse: b B\n\
        rule: t t ->\nrule: b B ->\nrule: B b ->\nrule: b b -> B\nrule: B B -> b\n";

    fn sys(text: &str) -> RewritingSystem {
        RewritingSystem::parse_validated(text).unwrap()
    }

    /// Brute force: reduce every word of length ≤ r.
    fn brute_ball(rs: &RewritingSystem, r: usize) -> HashSet<Word> {
        let mut out = HashSet::new();
        let mut layer = vec![Vec::new()];
        for _ in 0..=r {
            let mut next = Vec::new();
            for w in &layer {
                out.insert(rs.reduce(w));
                for x in rs.letters() {
                    let mut v = w.clone();
                    v.push(x);
                    next.push(v);
                }
            }
            layer = next;
        }
        out
    }

    #[test]
    fn z_ball() {
        let z = sys(Z);
        let b = ball(&z, 3).unwrap();
        assert_eq!(b.len(), 7);
        let shown: HashSet<String> = b.elements().iter().map(|w| z.show(w)).collect();
        for s in ["λ", "a", "a a", "a a a", "A", "A A", "A A A"] {
            assert!(shown.contains(s), "{s}");
        }
        assert_eq!(ball(&z, 0).unwrap().elements(), &[Word::empty()]);
    }

    #[test]
    fn z2z3_ball_matches_brute_force() {
        let g = sys(Z2Z3);
        let b = ball(&g, 3).unwrap();
        assert_eq!(b.len(), 14);
        let brute = brute_ball(&g, 3);
        assert_eq!(brute.len(), 14);
        assert!(b.elements().iter().all(|w| brute.contains(w)));
        assert_eq!(b.sphere(3).len(), 6);
    }

    #[test]
    fn ball_cap() {
        let g = sys(Z2Z3);
        assert_eq!(
            Ball::build(&g, 3, 10).unwrap_err(),
            BallError::BallTooLarge { radius: 3, cap: 10 }
        );
    }

    #[test]
    fn orders() {
        let g = sys(Z2Z3);
        let w = |s: &str| g.parse_word(s).unwrap();
        assert_eq!(has_finite_order(&g, &w("b")).unwrap(), OrderResult::Finite(3));
        assert_eq!(has_finite_order(&g, &w("t b")).unwrap(), OrderResult::Infinite);
        assert_eq!(has_finite_order(&g, &w("b t B")).unwrap(), OrderResult::Finite(2));
        assert_eq!(has_finite_order(&g, &[]).unwrap(), OrderResult::Finite(1));
        let z = sys(Z);
        assert_eq!(has_finite_order(&z, &z.parse_word("a").unwrap()).unwrap(), OrderResult::Infinite);
    }

    #[test]
    fn conjugates() {
        let g = sys(Z2Z3);
        let w = |s: &str| g.parse_word(s).unwrap();
        assert_eq!(g.show(&conjugate_nf(&g, &[], &w("b"))), "b");
        assert_eq!(g.show(&conjugate_nf(&g, &w("b"), &w("t"))), "b t B");
        let z = sys(Z);
        let a = z.parse_word("a").unwrap();
        assert_eq!(conjugate_nf(&z, &a, &a), a);
    }

    #[test]
    fn cyclic_key_shrinks_conjugates() {
        let g = sys(Z2Z3);
        let w = |s: &str| g.parse_word(s).unwrap();
        assert_eq!(cyclic_key(&g, w("b t B")), w("t"));
        assert_eq!(cyclic_key(&g, w("b t b")).len(), 2);
    }
}
