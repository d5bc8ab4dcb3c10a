//! The certificate predicate and tools to attack it.
//!
//! [`Verifier::verify`] runs, in order: the rank comparison, finiteness of
//! every generated subgroup, containment of each subgroup in its ball as seen
//! from `u` and `v`, the non-conjugacy pre-step on `s` and `s'`, conjugation
//! of `u` and `v` into some pair by `t` and `t'`, membership via `Z₁` and
//! `Z₂`, and finally the generator-isomorphism check with each `Yᵢ`.

use std::cell::OnceCell;
use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::certificate::{ExistResponse, ExistWitness, UniversalChallenge};
use crate::abelian::torsion_free_rank;
use crate::balls::{conjugate_nf, Ball, BallError, OrderOracle, DEFAULT_BALL_CAP};
use crate::rewriting::RewritingSystem;
use crate::slp::{build_slp, compressed_equal, Instruction, StraightLineSeq};
use crate::subgroups::{check_slp_criterion, FiniteSubgroup};
use crate::word::Word;

/// The predicate step that rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Step {
    WitnessShape,
    Rank,
    FiniteGenset,
    BallClosure,
    ConjugacyPreStep,
    ConjugateInto,
    Membership,
    GeneratorIsomorphism,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::WitnessShape => "witness_shape",
            Step::Rank => "rank",
            Step::FiniteGenset => "finite_genset",
            Step::BallClosure => "ball_closure",
            Step::ConjugacyPreStep => "conjugacy_prestep",
            Step::ConjugateInto => "conjugate_into",
            Step::Membership => "membership",
            Step::GeneratorIsomorphism => "generator_isomorphism",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Accepted,
    Rejected(Step),
    /// The challenge violates a length cap; it is outside the quantified range.
    MalformedChallenge(String),
    MalformedResponse(String),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted)
    }
}

/// One side of the predicate.
struct Side<'a> {
    rs: &'a RewritingSystem,
    oracle: OrderOracle<'a>,
    ball: Ball,
    rank: usize,
    conj_ball: OnceCell<Option<Ball>>,
}

impl<'a> Side<'a> {
    fn new(rs: &'a RewritingSystem) -> Result<Self, BallError> {
        let ball = Ball::build(rs, rs.max_rhs() + 2, DEFAULT_BALL_CAP)?;
        let oracle = OrderOracle::with_bound(rs, ball.len() as u64);
        Ok(Side { rs, oracle, ball, rank: torsion_free_rank(rs), conj_ball: OnceCell::new() })
    }

    fn k(&self) -> usize {
        self.rs.max_rhs() + 2
    }

    fn conj_bound(&self) -> usize {
        5 * self.rs.max_rhs() + 4
    }

    /// `B(5 r_T + 4)` if it has at most `cap` elements. Built on first use;
    /// after a failed build, larger caps stay inconclusive too.
    fn conjugator_ball(&self, cap: usize) -> Option<&Ball> {
        self.conj_ball
            .get_or_init(|| Ball::build(self.rs, self.conj_bound(), cap).ok())
            .as_ref()
            .filter(|b| b.len() <= cap)
    }

    fn nontrivial_torsion(&self, u: &Word) -> Option<Word> {
        let nf = self.rs.reduce(u);
        (!nf.is_empty() && self.oracle.is_finite(&nf)).then_some(nf)
    }

    fn finite_gensets(&self, gens: &[&[Word]]) -> bool {
        gens.iter().all(|a| {
            a.iter().all(|x| self.oracle.is_finite(x))
                && a[1..].iter().all(|x| self.oracle.is_finite(&self.rs.multiply(&a[0], x)))
        })
    }

    fn ball_closure(&self, gens: &[&[Word]], u: &Word) -> bool {
        let Some(u) = self.nontrivial_torsion(u) else { return true };
        let k = self.k();
        gens.iter().all(|a| {
            !self.oracle.is_finite(&self.rs.multiply(&u, &a[0]))
                || a.iter().all(|x| {
                    self.rs.multiply(&u, x).len() <= k && self.rs.multiply(&u, &self.rs.formal_inverse(x)).len() <= k
                })
        })
    }

    fn prestep(&self, gens: &[&[Word]], s: &Word) -> bool {
        let si = self.rs.formal_inverse(s);
        (0..gens.len()).all(|i| {
            (0..gens.len()).filter(|&k| k != i).all(|k| {
                let mut stack = Vec::new();
                for part in [&gens[i][0][..], s, &gens[k][0], &si] {
                    self.rs.reduce_onto(&mut stack, part);
                }
                !self.oracle.is_finite(&stack)
            })
        })
    }

    fn conjugates_into(&self, gens: &[&[Word]], u: &Word, t: &Word) -> bool {
        let Some(u) = self.nontrivial_torsion(u) else { return true };
        gens.iter().any(|a| self.oracle.is_finite(&self.rs.multiply(&u, &conjugate_nf(self.rs, t, &a[0]))))
    }

    fn membership(&self, gens: &[&[Word]], u: &Word, z: &StraightLineSeq) -> bool {
        let Some(u) = self.nontrivial_torsion(u) else { return true };
        gens.iter().all(|a| {
            !self.oracle.is_finite(&self.rs.multiply(&u, &a[0]))
                || compressed_equal(self.rs, z, a, &u, self.k()).unwrap_or(false)
        })
    }
}

/// Answer of an exhaustive search for an accepted response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResponseSearch {
    Found(ExistResponse),
    /// No response in the bounded space is accepted.
    NoneExists,
    /// The bounded space is too large to search at this scale.
    Inconclusive,
}

pub struct Verifier<'a> {
    g: Side<'a>,
    h: Side<'a>,
    n: u64,
}

impl<'a> Verifier<'a> {
    pub fn new(g: &'a RewritingSystem, h: &'a RewritingSystem) -> Result<Self, BallError> {
        let n = g.size_n().max(h.size_n()) as u64;
        Ok(Verifier { g: Side::new(g)?, h: Side::new(h)?, n })
    }

    pub fn systems(&self) -> (&'a RewritingSystem, &'a RewritingSystem) {
        (self.g.rs, self.h.rs)
    }

    /// `max(n_T, n_T')`.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn slp_cap(&self) -> u64 {
        3 * self.n.pow(4) + 2
    }

    pub fn response_cap(&self) -> u64 {
        self.n.pow(4)
    }

    fn witness_shape(&self, x: &ExistWitness) -> bool {
        let n2 = (self.n * self.n) as usize;
        x.p() <= n2
            && x.pairs.iter().all(|p| {
                !p.a.is_empty()
                    && p.a.len() == p.b.len()
                    && p.a.len() <= n2
                    && p.a.iter().all(|w| w.len() <= self.g.k())
                    && p.b.iter().all(|w| w.len() <= self.h.k())
            })
    }

    /// Length caps on a challenge for this witness.
    pub fn check_challenge(&self, x: &ExistWitness, y: &UniversalChallenge) -> Result<(), String> {
        let caps = [
            ("u", y.u.len(), self.g.k()),
            ("v", y.v.len(), self.h.k()),
            ("s", y.s.len(), self.g.conj_bound()),
            ("s'", y.s_prime.len(), self.h.conj_bound()),
        ];
        for (name, len, cap) in caps {
            if len > cap {
                return Err(format!("|{name}| = {len} exceeds {cap}"));
            }
        }
        if y.y.len() != x.p() {
            return Err(format!("{} sequences given for {} pairs", y.y.len(), x.p()));
        }
        for (i, (seq, pair)) in y.y.iter().zip(&x.pairs).enumerate() {
            if seq.rank() != pair.a.len() {
                return Err(format!("Y{} has rank {} but pair {} has {} generators", i + 1, seq.rank(), i + 1, pair.a.len()));
            }
            if seq.len() as u64 > self.slp_cap() {
                return Err(format!("Y{} has length {} over {}", i + 1, seq.len(), self.slp_cap()));
            }
        }
        Ok(())
    }

    pub fn check_response(&self, z: &ExistResponse) -> Result<(), String> {
        if z.t.len() > self.g.conj_bound() {
            return Err(format!("|t| = {} exceeds {}", z.t.len(), self.g.conj_bound()));
        }
        if z.t_prime.len() > self.h.conj_bound() {
            return Err(format!("|t'| = {} exceeds {}", z.t_prime.len(), self.h.conj_bound()));
        }
        for (name, seq) in [("Z1", &z.z1), ("Z2", &z.z2)] {
            if seq.len() as u64 > self.response_cap() {
                return Err(format!("{name} has length {} over {}", seq.len(), self.response_cap()));
            }
        }
        Ok(())
    }

    fn sides(x: &ExistWitness) -> (Vec<&[Word]>, Vec<&[Word]>) {
        (
            x.pairs.iter().map(|p| p.a.as_slice()).collect(),
            x.pairs.iter().map(|p| p.b.as_slice()).collect(),
        )
    }

    /// Steps that depend only on the witness.
    pub fn check_witness(&self, x: &ExistWitness) -> Result<(), Step> {
        if !self.witness_shape(x) {
            return Err(Step::WitnessShape);
        }
        if self.g.rank != self.h.rank {
            return Err(Step::Rank);
        }
        let (a, b) = Self::sides(x);
        if !self.g.finite_gensets(&a) || !self.h.finite_gensets(&b) {
            return Err(Step::FiniteGenset);
        }
        Ok(())
    }

    /// The first step that fails for every response, if any. The challenge
    /// is assumed to satisfy its caps.
    pub fn refutes(&self, x: &ExistWitness, y: &UniversalChallenge) -> Option<Step> {
        self.check_witness(x).err().or_else(|| self.challenge_steps(x, y))
    }

    fn challenge_steps(&self, x: &ExistWitness, y: &UniversalChallenge) -> Option<Step> {
        let (a, b) = Self::sides(x);
        if !self.g.ball_closure(&a, &y.u) || !self.h.ball_closure(&b, &y.v) {
            return Some(Step::BallClosure);
        }
        if !self.g.prestep(&a, &y.s) || !self.h.prestep(&b, &y.s_prime) {
            return Some(Step::ConjugacyPreStep);
        }
        None
    }

    fn isomorphism_step(&self, x: &ExistWitness, y: &UniversalChallenge) -> bool {
        x.pairs.iter().zip(&y.y).all(|(p, seq)| {
            check_slp_criterion(self.g.rs, self.h.rs, &p.a, &p.b, seq, self.g.k(), self.h.k()).unwrap_or(false)
        })
    }

    pub fn verify(&self, x: &ExistWitness, y: &UniversalChallenge, z: &ExistResponse) -> Verdict {
        if let Err(m) = self.check_challenge(x, y) {
            return Verdict::MalformedChallenge(m);
        }
        if let Err(step) = self.check_witness(x) {
            return Verdict::Rejected(step);
        }
        if let Err(m) = self.check_response(z) {
            return Verdict::MalformedResponse(m);
        }
        self.verify_checked(x, y, z)
    }

    /// Like [`verify`](Self::verify) for a witness that already passed
    /// [`check_witness`](Self::check_witness) and well-formed `y`, `z`.
    pub fn verify_checked(&self, x: &ExistWitness, y: &UniversalChallenge, z: &ExistResponse) -> Verdict {
        if let Some(step) = self.challenge_steps(x, y) {
            return Verdict::Rejected(step);
        }
        let (a, b) = Self::sides(x);
        if !self.g.conjugates_into(&a, &y.u, &z.t) || !self.h.conjugates_into(&b, &y.v, &z.t_prime) {
            return Verdict::Rejected(Step::ConjugateInto);
        }
        if !self.g.membership(&a, &y.u, &z.z1) || !self.h.membership(&b, &y.v, &z.z2) {
            return Verdict::Rejected(Step::Membership);
        }
        if !self.isomorphism_step(x, y) {
            return Verdict::Rejected(Step::GeneratorIsomorphism);
        }
        Verdict::Accepted
    }

    /// Searches the bounded response space. Conjugators range over all of
    /// `B(5 r_T + 4)`, which is built only when it has at most `conj_cap`
    /// elements; membership sequences exist iff `u` lies in the group the
    /// pair generates.
    pub fn search_response(&self, x: &ExistWitness, y: &UniversalChallenge, conj_cap: usize) -> ResponseSearch {
        if self.check_challenge(x, y).is_err() {
            return ResponseSearch::Inconclusive;
        }
        if self.refutes(x, y).is_some() || !self.isomorphism_step(x, y) {
            return ResponseSearch::NoneExists;
        }
        let (a, b) = Self::sides(x);
        let rank0 = a.first().map_or(0, |g| g.len());
        let (t, z1) = match (search_t(&self.g, &a, &y.u, conj_cap), search_z(&self.g, &a, &y.u, rank0)) {
            (Search::Found(t), Search::Found(z)) => (t, z),
            (Search::Absent, _) | (_, Search::Absent) => return ResponseSearch::NoneExists,
            _ => return ResponseSearch::Inconclusive,
        };
        let (t_prime, z2) = match (search_t(&self.h, &b, &y.v, conj_cap), search_z(&self.h, &b, &y.v, rank0)) {
            (Search::Found(t), Search::Found(z)) => (t, z),
            (Search::Absent, _) | (_, Search::Absent) => return ResponseSearch::NoneExists,
            _ => return ResponseSearch::Inconclusive,
        };
        let z = ExistResponse { t, t_prime, z1, z2 };
        debug_assert!(self.verify(x, y, &z).is_accepted());
        ResponseSearch::Found(z)
    }

    /// Nontrivial finite-order elements of `B(r_T + 2)` on each side.
    pub fn torsion_elements(&self) -> (Vec<Word>, Vec<Word>) {
        let pick = |s: &Side<'_>| -> Vec<Word> {
            s.ball.elements()[1..].iter().filter(|w| s.oracle.is_finite(w)).cloned().collect()
        };
        (pick(&self.g), pick(&self.h))
    }
}

/// One-shot form of [`Verifier::verify`].
pub fn verify_predicate(
    g: &RewritingSystem,
    h: &RewritingSystem,
    x: &ExistWitness,
    y: &UniversalChallenge,
    z: &ExistResponse,
) -> Result<Verdict, BallError> {
    Ok(Verifier::new(g, h)?.verify(x, y, z))
}

enum Search<T> {
    Found(T),
    Absent,
    Unknown,
}

fn search_t(side: &Side<'_>, gens: &[&[Word]], u: &Word, conj_cap: usize) -> Search<Word> {
    if side.nontrivial_torsion(u).is_none() || side.conjugates_into(gens, u, &Word::empty()) {
        return Search::Found(Word::empty());
    }
    match side.conjugator_ball(conj_cap) {
        Some(ball) => ball
            .elements()
            .iter()
            .find(|t| side.conjugates_into(gens, u, t))
            .map_or(Search::Absent, |t| Search::Found(t.clone())),
        None => Search::Unknown,
    }
}

fn search_z(side: &Side<'_>, gens: &[&[Word]], u: &Word, default_rank: usize) -> Search<StraightLineSeq> {
    let Some(nf) = side.nontrivial_torsion(u) else {
        return Search::Found(StraightLineSeq::identity(default_rank));
    };
    let rs = side.rs;
    let owners: Vec<usize> =
        (0..gens.len()).filter(|&i| side.oracle.is_finite(&rs.multiply(&nf, &gens[i][0]))).collect();
    let Some(&first) = owners.first() else {
        return Search::Found(StraightLineSeq::identity(default_rank));
    };
    let mut candidate = None;
    for &i in &owners {
        // the generated group is finite (checked earlier); materialize it
        let Some(elems) = generated(rs, gens[i], side.oracle.bound() as usize) else { return Search::Unknown };
        if !elems.contains(&nf) {
            return Search::Absent;
        }
        if i == first {
            let Ok(h) = FiniteSubgroup::from_elements(rs, elems.into_iter().collect()) else { return Search::Unknown };
            match build_slp(rs, &h, gens[i], &nf) {
                Ok(z) => candidate = Some(z),
                Err(_) => return Search::Unknown,
            }
        }
    }
    let z = candidate.expect("first owner visited");
    if owners.iter().all(|&i| compressed_equal(rs, &z, gens[i], &nf, side.k()).unwrap_or(false)) {
        Search::Found(z)
    } else {
        Search::Unknown
    }
}

fn generated(rs: &RewritingSystem, gens: &[Word], limit: usize) -> Option<HashSet<Word>> {
    let gens: Vec<Word> = gens.iter().map(|g| rs.reduce(g)).collect();
    let mut seen = HashSet::from([Word::empty()]);
    let mut queue = VecDeque::from([Word::empty()]);
    while let Some(x) = queue.pop_front() {
        for g in &gens {
            let y = rs.multiply(&x, g);
            if seen.insert(y.clone()) {
                if seen.len() > limit {
                    return None;
                }
                queue.push_back(y);
            }
        }
    }
    Some(seen)
}

/// Draws challenges for a fixed witness: uniformly random words and
/// sequences, or adversarial templates aimed at each predicate step.
pub struct ChallengeSampler<'v, 'a> {
    verifier: &'v Verifier<'a>,
    ranks: Vec<usize>,
    torsion_g: Vec<Word>,
    torsion_h: Vec<Word>,
    max_order: usize,
}

impl<'v, 'a> ChallengeSampler<'v, 'a> {
    pub fn new(verifier: &'v Verifier<'a>, x: &ExistWitness) -> Self {
        let (torsion_g, torsion_h) = verifier.torsion_elements();
        let ranks = x.pairs.iter().map(|p| p.a.len()).collect();
        let max_order = x
            .pairs
            .iter()
            .flat_map(|p| p.a.iter())
            .filter_map(|a| match verifier.g.oracle.order(a) {
                crate::balls::OrderResult::Finite(k) => Some(k as usize),
                crate::balls::OrderResult::Infinite => None,
            })
            .max()
            .unwrap_or(2);
        ChallengeSampler { verifier, ranks, torsion_g, torsion_h, max_order }
    }

    fn word<R: Rng + ?Sized>(rs: &RewritingSystem, max: usize, rng: &mut R) -> Word {
        let n = rs.alphabet_len() as u32;
        let len = rng.gen_range(0..=max);
        (0..len).map(|_| crate::word::Letter(rng.gen_range(0..n))).collect()
    }

    fn element<R: Rng + ?Sized>(side: &Side<'_>, torsion: &[Word], rng: &mut R) -> Word {
        match rng.gen_range(0..4) {
            0 => Self::word(side.rs, side.k(), rng),
            1 => side.ball.elements().choose(rng).cloned().unwrap_or_default(),
            _ => torsion.choose(rng).cloned().unwrap_or_default(),
        }
    }

    fn conjugator<R: Rng + ?Sized>(side: &Side<'_>, rng: &mut R) -> Word {
        if rng.gen_bool(0.5) {
            side.ball.elements().choose(rng).cloned().unwrap_or_default()
        } else {
            let w = Self::word(side.rs, side.conj_bound(), rng);
            // keep it within the cap after reduction, too
            side.rs.reduce(&w)
        }
    }

    fn sequence<R: Rng + ?Sized>(&self, rank: usize, rng: &mut R) -> StraightLineSeq {
        let j = rng.gen_range(0..rank);
        match rng.gen_range(0..5) {
            0 => StraightLineSeq::power(rank, j, rng.gen_range(-(2 * self.max_order as i64)..=2 * self.max_order as i64))
                .expect("generator in range"),
            1 => {
                // commutator [x_j, x_k]
                let k = rng.gen_range(0..rank);
                StraightLineSeq::new(
                    rank,
                    vec![
                        Instruction::Gen(j),
                        Instruction::Gen(k),
                        Instruction::Inverse(0),
                        Instruction::Inverse(1),
                        Instruction::Product(0, 1),
                        Instruction::Product(4, 2),
                        Instruction::Product(5, 3),
                    ],
                )
                .expect("well formed")
            }
            2 => {
                // a short relator candidate, letter by letter
                let len = rng.gen_range(1..=8);
                let mut ins = Vec::new();
                let mut acc = None;
                for _ in 0..len {
                    ins.push(Instruction::Gen(rng.gen_range(0..rank)));
                    let mut cur = ins.len() - 1;
                    if rng.gen_bool(0.3) {
                        ins.push(Instruction::Inverse(cur));
                        cur = ins.len() - 1;
                    }
                    if let Some(a) = acc {
                        ins.push(Instruction::Product(a, cur));
                        cur = ins.len() - 1;
                    }
                    acc = Some(cur);
                }
                StraightLineSeq::new(rank, ins).expect("well formed")
            }
            _ => StraightLineSeq::random(rank, rng.gen_range(1..=24), rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UniversalChallenge {
        let (g, h) = (&self.verifier.g, &self.verifier.h);
        UniversalChallenge {
            u: Self::element(g, &self.torsion_g, rng),
            v: Self::element(h, &self.torsion_h, rng),
            s: Self::conjugator(g, rng),
            s_prime: Self::conjugator(h, rng),
            y: self.ranks.iter().map(|&m| self.sequence(m, rng)).collect(),
        }
    }

    /// Challenges aimed at one side's `u` or `v`: every torsion element of
    /// the ball in turn, with trivial `s` and identity sequences.
    pub fn sweep_elements(&self) -> Vec<UniversalChallenge> {
        let ids: Vec<StraightLineSeq> = self.ranks.iter().map(|&m| StraightLineSeq::identity(m)).collect();
        let blank = UniversalChallenge {
            u: Word::empty(),
            v: Word::empty(),
            s: Word::empty(),
            s_prime: Word::empty(),
            y: ids,
        };
        let mut out = Vec::new();
        for u in &self.torsion_g {
            out.push(UniversalChallenge { u: u.clone(), ..blank.clone() });
        }
        for v in &self.torsion_h {
            out.push(UniversalChallenge { v: v.clone(), ..blank.clone() });
        }
        out
    }
}
