//! Maximal finite subgroups inside `B(r_T + 2)`, their conjugacy classes, and
//! isomorphism of finite subgroups.
//!
//! In a plain group every nontrivial element of finite order lies in exactly
//! one maximal finite subgroup, and `h` belongs to the one containing `g` iff
//! both `h` and `g·h` have finite order. Every maximal finite subgroup is
//! conjugate to one lying inside `B(r_T + 2)`.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::balls::{conjugate_nf, Ball, BallError, OrderOracle, DEFAULT_BALL_CAP};
use crate::rewriting::RewritingSystem;
use crate::slp::{evaluate, SlpError, StraightLineSeq};
use crate::word::Word;

/// Largest `B(5 r_T + 4)` that the exhaustive conjugator search will build.
pub const DEFAULT_CONJUGATOR_BALL_CAP: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubgroupError {
    #[error("element {0:?} does not have finite order")]
    NotTorsion(Word),
    #[error("element {0:?} lies outside B(r_T + 2)")]
    NotInBall(Word),
    #[error("element set is not closed: product {0:?} is missing")]
    NotClosed(Word),
    #[error("found {count} conjugacy classes, more than the bound n_T² = {bound}")]
    ClassBoundViolated { count: usize, bound: usize },
    #[error("conjugator of length {length} exceeds 5 r_T + 4 = {bound}")]
    ConjugatorTooLong { length: usize, bound: usize },
    #[error(transparent)]
    Ball(#[from] BallError),
}

/// A finite subgroup with its elements in shortlex order (`λ` at index 0), a
/// full multiplication table, and a generating list chosen greedily.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSubgroup {
    elements: Vec<Word>,
    index: HashMap<Word, usize>,
    table: Vec<usize>,
    inverses: Vec<usize>,
    gens: Vec<usize>,
}

impl FiniteSubgroup {
    pub const IDENTITY: usize = 0;

    /// Materializes the subgroup on the given normal forms; `λ` is added if
    /// missing. Fails with `NotClosed` if some product leaves the set.
    pub fn from_elements(rs: &RewritingSystem, elements: Vec<Word>) -> Result<Self, SubgroupError> {
        let mut elements: Vec<Word> = elements.into_iter().map(|w| rs.reduce(&w)).collect();
        elements.push(Word::empty());
        elements.sort();
        elements.dedup();
        let index: HashMap<Word, usize> = elements.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let n = elements.len();
        let mut table = vec![0; n * n];
        for (i, x) in elements.iter().enumerate() {
            for (j, y) in elements.iter().enumerate() {
                let p = rs.multiply(x, y);
                table[i * n + j] = *index.get(&p).ok_or(SubgroupError::NotClosed(p))?;
            }
        }
        let mut inverses = vec![0; n];
        for (i, x) in elements.iter().enumerate() {
            let inv = rs.reduce(&rs.formal_inverse(x));
            inverses[i] = *index.get(&inv).ok_or(SubgroupError::NotClosed(inv))?;
        }
        let mut h = FiniteSubgroup { elements, index, table, inverses, gens: Vec::new() };
        h.gens = h.greedy_generators();
        Ok(h)
    }

    fn greedy_generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut covered = self.closure(&gens).len();
        while covered < self.order() {
            let mut best = (0, 0);
            for x in 1..self.order() {
                gens.push(x);
                let size = self.closure(&gens).len();
                gens.pop();
                if size > best.0 {
                    best = (size, x);
                }
            }
            gens.push(best.1);
            covered = best.0;
        }
        gens
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Word] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Word {
        &self.elements[i]
    }

    pub fn index_of(&self, nf: &Word) -> Option<usize> {
        self.index.get(nf).copied()
    }

    pub fn contains(&self, nf: &Word) -> bool {
        self.index.contains_key(nf)
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.table[i * self.order() + j]
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inverses[i]
    }

    /// Indices of the generators.
    pub fn gen_indices(&self) -> &[usize] {
        &self.gens
    }

    pub fn gens(&self) -> Vec<Word> {
        self.gens.iter().map(|&g| self.elements[g].clone()).collect()
    }

    /// The subgroup generated by `gens`, as sorted indices.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order()];
        seen[Self::IDENTITY] = true;
        let mut queue = VecDeque::from([Self::IDENTITY]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        (0..self.order()).filter(|&i| seen[i]).collect()
    }

    pub fn element_order(&self, i: usize) -> usize {
        let mut k = 1;
        let mut x = i;
        while x != Self::IDENTITY {
            x = self.mul(x, i);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order()).all(|i| (0..i).all(|j| self.mul(i, j) == self.mul(j, i)))
    }
}

/// Finiteness test for the subgroup generated by `gens`: every
/// `aᵢ` and every `a₁aᵢ` has finite order.
pub fn is_finite_genset(oracle: &OrderOracle<'_>, gens: &[Word]) -> bool {
    let rs = oracle.system();
    let Some(first) = gens.first() else { return true };
    gens.iter().all(|a| oracle.is_finite(a)) && gens[1..].iter().all(|a| oracle.is_finite(&rs.multiply(first, a)))
}

/// How conjugators between ball subgroups were found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassStrategy {
    /// Every `t ∈ B(5 r_T + 4)` was tried.
    Exhaustive,
    /// Single-letter conjugations between ball subgroups, composed along paths.
    LetterGraph,
}

#[derive(Clone, Debug)]
pub struct ConjClass {
    pub representative: FiniteSubgroup,
    /// Every member with a conjugator `t` such that `t·M·t⁻¹` is the
    /// representative; the representative itself comes first with `t = λ`.
    pub members: Vec<(FiniteSubgroup, Word)>,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub classes: Vec<ConjClass>,
    pub strategy: ClassStrategy,
}

/// The finite-order machinery for one system: order oracle, `B(r_T + 2)`,
/// and its nontrivial elements of finite order.
pub struct Torsion<'a> {
    rs: &'a RewritingSystem,
    oracle: OrderOracle<'a>,
    ball: Ball,
    finite: Vec<Word>,
}

impl<'a> Torsion<'a> {
    pub fn new(rs: &'a RewritingSystem) -> Result<Self, SubgroupError> {
        let ball = Ball::build(rs, rs.max_rhs() + 2, DEFAULT_BALL_CAP)?;
        let oracle = OrderOracle::with_bound(rs, ball.len() as u64);
        let finite = ball.elements()[1..].iter().filter(|w| oracle.is_finite(w)).cloned().collect();
        Ok(Torsion { rs, oracle, ball, finite })
    }

    pub fn system(&self) -> &'a RewritingSystem {
        self.rs
    }

    pub fn oracle(&self) -> &OrderOracle<'a> {
        &self.oracle
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    /// Nontrivial finite-order elements of `B(r_T + 2)`, shortlex.
    pub fn torsion_elements(&self) -> &[Word] {
        &self.finite
    }

    /// `{λ} ∪ {h ∈ B(r_T+2) : h and g·h have finite order}`.
    pub fn maximal_subgroup_of(&self, g: &Word) -> Result<FiniteSubgroup, SubgroupError> {
        let g = self.rs.reduce(g);
        if g.is_empty() || !self.oracle.is_finite(&g) {
            return Err(SubgroupError::NotTorsion(g));
        }
        if !self.ball.contains(&g) {
            return Err(SubgroupError::NotInBall(g));
        }
        let elements = self
            .finite
            .iter()
            .filter(|h| self.oracle.is_finite(&self.rs.multiply(&g, h)))
            .cloned()
            .collect();
        FiniteSubgroup::from_elements(self.rs, elements)
    }

    /// Distinct maximal finite subgroups lying in the ball, sorted by order
    /// and then by element list.
    pub fn enumerate_maximal(&self) -> Result<Vec<FiniteSubgroup>, SubgroupError> {
        let mut covered: HashSet<Word> = HashSet::new();
        let mut subs = Vec::new();
        for g in &self.finite {
            if covered.contains(g) {
                continue;
            }
            let h = self.maximal_subgroup_of(g)?;
            covered.extend(h.elements()[1..].iter().cloned());
            subs.push(h);
        }
        subs.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.elements().cmp(b.elements())));
        Ok(subs)
    }

    /// Partitions `subs` into conjugacy classes.
    ///
    /// When `B(5 r_T + 4)` has at most `exhaustive_cap` elements every
    /// conjugator in it is tried. Otherwise subgroups are joined when a single
    /// letter conjugates one into the other, and conjugators are composed
    /// along shortest paths of such steps.
    pub fn conjugacy_classes(
        &self,
        subs: &[FiniteSubgroup],
        exhaustive_cap: usize,
    ) -> Result<Classification, SubgroupError> {
        let rs = self.rs;
        let bound = 5 * rs.max_rhs() + 4;
        // nontrivial element -> subgroup
        let mut owner: HashMap<&Word, usize> = HashMap::new();
        for (i, h) in subs.iter().enumerate() {
            for e in &h.elements()[1..] {
                owner.entry(e).or_insert(i);
            }
        }
        let n = subs.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }

        let conj_ball = if n > 1 { Ball::build(rs, bound, exhaustive_cap).ok() } else { None };
        let strategy = if conj_ball.is_some() || n <= 1 { ClassStrategy::Exhaustive } else { ClassStrategy::LetterGraph };
        // witness[i] = t with t·subs[i]·t⁻¹ = subs[rep]
        let mut witness: Vec<Option<Word>> = vec![None; n];

        match &conj_ball {
            Some(ball) => {
                // classes are settled in canonical order; the first subgroup of
                // each class is its representative
                for i in 0..n {
                    if witness[i].is_some() || find(&mut parent, i) != i {
                        continue;
                    }
                    witness[i] = Some(Word::empty());
                    let g = subs[i].element(subs[i].gen_indices()[0]).clone();
                    for t in ball.elements() {
                        // t⁻¹ g t ∈ subs[j]  ⇔  t·subs[j]·t⁻¹ ∋ g
                        let ti = rs.formal_inverse(t);
                        let c = conjugate_nf(rs, &ti, &g);
                        if let Some(&j) = owner.get(&c) {
                            if j != i && witness[j].is_none() {
                                witness[j] = Some(t.clone());
                                parent[j] = i;
                            }
                        }
                    }
                }
            }
            None => {
                let mut adj: Vec<Vec<(usize, crate::word::Letter)>> = vec![Vec::new(); n];
                for (i, h) in subs.iter().enumerate() {
                    let g = h.element(h.gen_indices()[0]);
                    for x in rs.letters() {
                        let c = conjugate_nf(rs, &[x], g);
                        if let Some(&j) = owner.get(&c) {
                            if j != i {
                                // x·subs[i]·x⁻¹ = subs[j]
                                adj[i].push((j, x));
                                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                                if a != b {
                                    parent[a.max(b)] = a.min(b);
                                }
                            }
                        }
                    }
                }
                // BFS from each representative along reversed edges
                for r in 0..n {
                    if find(&mut parent, r) != r {
                        continue;
                    }
                    witness[r] = Some(Word::empty());
                    let mut queue = VecDeque::from([r]);
                    while let Some(j) = queue.pop_front() {
                        let tj = witness[j].clone().unwrap_or_default();
                        for i in 0..n {
                            if witness[i].is_some() {
                                continue;
                            }
                            if let Some(&(_, x)) = adj[i].iter().find(|(k, _)| *k == j) {
                                // tj·x·subs[i]·x⁻¹·tj⁻¹ = subs[r]
                                witness[i] = Some(rs.multiply(&tj, &[x]));
                                queue.push_back(i);
                            }
                        }
                    }
                }
            }
        }

        let mut classes: Vec<ConjClass> = Vec::new();
        let mut class_of: HashMap<usize, usize> = HashMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            let t = witness[i].clone().expect("every subgroup reached from its representative");
            if t.len() > bound {
                return Err(SubgroupError::ConjugatorTooLong { length: t.len(), bound });
            }
            debug_assert!(subs[i]
                .gens()
                .iter()
                .all(|g| subs[r].contains(&conjugate_nf(rs, &t, g))));
            match class_of.get(&r) {
                Some(&c) => classes[c].members.push((subs[i].clone(), t)),
                None => {
                    class_of.insert(r, classes.len());
                    classes.push(ConjClass {
                        representative: subs[r].clone(),
                        members: vec![(subs[i].clone(), t)],
                    });
                }
            }
        }
        let limit = rs.size_n() * rs.size_n();
        if classes.len() > limit {
            return Err(SubgroupError::ClassBoundViolated { count: classes.len(), bound: limit });
        }
        Ok(Classification { classes, strategy })
    }
}

pub fn maximal_subgroup_of(rs: &RewritingSystem, g: &Word) -> Result<FiniteSubgroup, SubgroupError> {
    Torsion::new(rs)?.maximal_subgroup_of(g)
}

pub fn enumerate_maximal(rs: &RewritingSystem) -> Result<Vec<FiniteSubgroup>, SubgroupError> {
    Torsion::new(rs)?.enumerate_maximal()
}

pub fn conjugacy_classes(rs: &RewritingSystem, subs: &[FiniteSubgroup]) -> Result<Vec<ConjClass>, SubgroupError> {
    Ok(Torsion::new(rs)?.conjugacy_classes(subs, DEFAULT_CONJUGATOR_BALL_CAP)?.classes)
}

/// Images in `b` of the generators of `a` under some isomorphism, if one exists.
///
/// Backtracks over generator images with matching element orders; every
/// partial assignment is extended along the Cayley graph of the subgroup the
/// assigned generators generate and rejected as soon as it stops being a
/// well-defined injection. A complete assignment is accepted only if it is a
/// bijection with `f(g)f(h)f((gh)⁻¹) = e` for all `g, h`.
pub fn finite_iso(a: &FiniteSubgroup, b: &FiniteSubgroup) -> Option<Vec<usize>> {
    if a.order() != b.order() {
        return None;
    }
    let gens = a.gen_indices();
    let b_orders: Vec<usize> = (0..b.order()).map(|i| b.element_order(i)).collect();
    let candidates: Vec<Vec<usize>> = gens
        .iter()
        .map(|&g| {
            let o = a.element_order(g);
            (0..b.order()).filter(|&y| b_orders[y] == o).collect()
        })
        .collect();
    let mut images = Vec::with_capacity(gens.len());
    if iso_search(a, b, gens, &candidates, &mut images) {
        Some(images)
    } else {
        None
    }
}

fn iso_search(
    a: &FiniteSubgroup,
    b: &FiniteSubgroup,
    gens: &[usize],
    candidates: &[Vec<usize>],
    images: &mut Vec<usize>,
) -> bool {
    let k = images.len();
    if k == gens.len() {
        return extend_map(a, b, gens, images).is_some_and(|f| is_isomorphism(a, b, &f));
    }
    for &y in &candidates[k] {
        images.push(y);
        if extend_map(a, b, &gens[..=k], images).is_some() && iso_search(a, b, gens, candidates, images) {
            return true;
        }
        images.pop();
    }
    false
}

/// The map on `⟨gens⟩` determined by `gens[j] ↦ images[j]`, if well defined
/// and injective. Unreached elements map to `usize::MAX`.
fn extend_map(a: &FiniteSubgroup, b: &FiniteSubgroup, gens: &[usize], images: &[usize]) -> Option<Vec<usize>> {
    let mut f = vec![usize::MAX; a.order()];
    let mut used = vec![false; b.order()];
    f[FiniteSubgroup::IDENTITY] = FiniteSubgroup::IDENTITY;
    used[FiniteSubgroup::IDENTITY] = true;
    let mut queue = VecDeque::from([FiniteSubgroup::IDENTITY]);
    while let Some(x) = queue.pop_front() {
        for (&g, &img) in gens.iter().zip(images) {
            let y = a.mul(x, g);
            let fy = b.mul(f[x], img);
            if f[y] == usize::MAX {
                if used[fy] {
                    return None;
                }
                used[fy] = true;
                f[y] = fy;
                queue.push_back(y);
            } else if f[y] != fy {
                return None;
            }
        }
    }
    Some(f)
}

fn is_isomorphism(a: &FiniteSubgroup, b: &FiniteSubgroup, f: &[usize]) -> bool {
    if f.contains(&usize::MAX) {
        return false;
    }
    (0..a.order()).all(|g| {
        (0..a.order()).all(|h| {
            let ginv = a.inverse(a.mul(g, h));
            b.mul(b.mul(f[g], f[h]), f[ginv]) == FiniteSubgroup::IDENTITY
        })
    })
}

/// One challenge of the generator-isomorphism check: `Y(a) = λ` exactly when
/// `Y(b) = λ`. Evaluations are capped at `cap_a` and `cap_b` respectively.
pub fn check_slp_criterion(
    rs_g: &RewritingSystem,
    rs_h: &RewritingSystem,
    a_gens: &[Word],
    b_gens: &[Word],
    y: &StraightLineSeq,
    cap_a: usize,
    cap_b: usize,
) -> Result<bool, SlpError> {
    let left = evaluate(rs_g, y, a_gens, cap_a)?;
    let right = evaluate(rs_h, y, b_gens, cap_b)?;
    Ok(left.is_empty() == right.is_empty())
}
