//! Straight-line sequences over abstract generators `x₁ … x_m`.
//!
//! A sequence is a list of instructions, each producing one word: a generator,
//! the empty word, the inverse of an earlier entry, or the product of two
//! earlier entries. The sequence yields the word of its last entry. The text
//! form (`.sls`) is `rank m` followed by one instruction per line: `G j`, `E`,
//! `I j` or `P j k`, all indices 1-based.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::rewriting::RewritingSystem;
use crate::subgroups::FiniteSubgroup;
use crate::word::Word;

pub const DEFAULT_EXPANSION_CAP: u64 = 1_000_000;

/// One stored instruction; positions and generators are 0-based in memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Gen(usize),
    Empty,
    Inverse(usize),
    Product(usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlpError {
    #[error("a straight-line sequence needs at least one instruction")]
    NoInstructions,
    #[error("instruction {position} refers to a later or missing position")]
    ForwardReference { position: usize },
    #[error("instruction {position} uses generator {generator} but the rank is {rank}")]
    GeneratorOutOfRange { position: usize, generator: usize, rank: usize },
    #[error("expanded word has {length} symbols, over the cap of {cap}")]
    ExpansionTooLarge { length: u128, cap: u64 },
    #[error("instruction {position} evaluates to a word of length {length}, over the cap {cap}")]
    LengthCapExceeded { position: usize, length: usize, cap: usize },
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("expected {expected} generator words, got {found}")]
    GeneratorCount { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("target is not an element of the subgroup")]
    NotInSubgroup,
    #[error("the given words do not generate the subgroup")]
    GenerationFailure,
}

/// A symbol `x_j` or `x_j⁻¹` of a yielded word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AbstractLetter {
    pub generator: usize,
    pub inverse: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StraightLineSeq {
    rank: usize,
    instructions: Vec<Instruction>,
}

impl StraightLineSeq {
    pub fn new(rank: usize, instructions: Vec<Instruction>) -> Result<Self, SlpError> {
        if instructions.is_empty() {
            return Err(SlpError::NoInstructions);
        }
        for (i, ins) in instructions.iter().enumerate() {
            let position = i + 1;
            match *ins {
                Instruction::Gen(j) if j >= rank => {
                    return Err(SlpError::GeneratorOutOfRange { position, generator: j + 1, rank })
                }
                Instruction::Inverse(j) if j >= i => return Err(SlpError::ForwardReference { position }),
                Instruction::Product(j, k) if j >= i || k >= i => {
                    return Err(SlpError::ForwardReference { position })
                }
                _ => {}
            }
        }
        Ok(StraightLineSeq { rank, instructions })
    }

    /// `((λ,+))`.
    pub fn identity(rank: usize) -> Self {
        StraightLineSeq { rank, instructions: vec![Instruction::Empty] }
    }

    /// `((x_j,+))`, `j` 0-based.
    pub fn generator(rank: usize, j: usize) -> Result<Self, SlpError> {
        StraightLineSeq::new(rank, vec![Instruction::Gen(j)])
    }

    /// `x_j^e` by square-and-multiply, `j` 0-based; negative `e` inverts.
    pub fn power(rank: usize, j: usize, e: i64) -> Result<Self, SlpError> {
        if e == 0 {
            return Ok(StraightLineSeq::identity(rank));
        }
        let mut ins = vec![Instruction::Gen(j)];
        let n = e.unsigned_abs();
        let bits = 64 - n.leading_zeros();
        let mut acc = 0;
        for b in (0..bits - 1).rev() {
            ins.push(Instruction::Product(acc, acc));
            acc = ins.len() - 1;
            if n >> b & 1 == 1 {
                ins.push(Instruction::Product(acc, 0));
                acc = ins.len() - 1;
            }
        }
        if e < 0 {
            ins.push(Instruction::Inverse(acc));
        }
        StraightLineSeq::new(rank, ins)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    /// Length of the yielded word, computed without expanding it.
    pub fn yield_len(&self) -> u128 {
        let mut lens: Vec<u128> = Vec::with_capacity(self.instructions.len());
        for ins in &self.instructions {
            let l = match *ins {
                Instruction::Gen(_) => 1,
                Instruction::Empty => 0,
                Instruction::Inverse(j) => lens[j],
                Instruction::Product(j, k) => lens[j].saturating_add(lens[k]),
            };
            lens.push(l);
        }
        lens.last().copied().unwrap_or(0)
    }

    /// The fully expanded word over `x_j^{±1}`, without free cancellation.
    pub fn yield_word(&self, cap: u64) -> Result<Vec<AbstractLetter>, SlpError> {
        let length = self.yield_len();
        if length > cap as u128 {
            return Err(SlpError::ExpansionTooLarge { length, cap });
        }
        let mut words: Vec<Vec<AbstractLetter>> = Vec::with_capacity(self.instructions.len());
        for ins in &self.instructions {
            let w = match *ins {
                Instruction::Gen(j) => vec![AbstractLetter { generator: j, inverse: false }],
                Instruction::Empty => Vec::new(),
                Instruction::Inverse(j) => words[j]
                    .iter()
                    .rev()
                    .map(|a| AbstractLetter { generator: a.generator, inverse: !a.inverse })
                    .collect(),
                Instruction::Product(j, k) => {
                    let mut v = words[j].clone();
                    v.extend_from_slice(&words[k]);
                    v
                }
            };
            words.push(w);
        }
        Ok(words.pop().unwrap_or_default())
    }

    /// `[PQ]`: the instructions of `P`, then those of `Q` shifted, then their product.
    pub fn product(&self, other: &StraightLineSeq) -> Result<StraightLineSeq, SlpError> {
        if self.rank != other.rank {
            return Err(SlpError::RankMismatch { left: self.rank, right: other.rank });
        }
        let c = self.instructions.len();
        let mut ins = self.instructions.clone();
        ins.extend(other.instructions.iter().map(|i| match *i {
            Instruction::Inverse(j) => Instruction::Inverse(j + c),
            Instruction::Product(j, k) => Instruction::Product(j + c, k + c),
            other => other,
        }));
        ins.push(Instruction::Product(c - 1, ins.len() - 1));
        Ok(StraightLineSeq { rank: self.rank, instructions: ins })
    }

    /// Parses the `.sls` text form.
    pub fn parse(text: &str) -> Result<Self, SlpError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, message: &str| SlpError::Parse { line, message: message.to_string() };
        let (line, header) = lines.next().ok_or_else(|| perr(0, "missing `rank` line"))?;
        let rank = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["rank", m] => m.parse::<usize>().map_err(|_| perr(line, "bad rank"))?,
            _ => return Err(perr(line, "expected `rank m`")),
        };
        let mut ins = Vec::new();
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let num = |s: &str| -> Result<usize, SlpError> {
                match s.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(perr(line, "indices are positive integers")),
                }
            };
            let i = match parts[..] {
                ["G", j] => Instruction::Gen(num(j)?),
                ["E"] => Instruction::Empty,
                ["I", j] => Instruction::Inverse(num(j)?),
                ["P", j, k] => Instruction::Product(num(j)?, num(k)?),
                _ => return Err(perr(line, "expected `G j`, `E`, `I j` or `P j k`")),
            };
            ins.push(i);
        }
        StraightLineSeq::new(rank, ins)
    }

    /// A random well-formed sequence of exactly `len` instructions.
    pub fn random<R: Rng + ?Sized>(rank: usize, len: usize, rng: &mut R) -> Self {
        let mut ins = Vec::with_capacity(len.max(1));
        for i in 0..len.max(1) {
            let roll = rng.gen_range(0..10);
            let next = if i == 0 || roll < 2 {
                if rank == 0 || rng.gen_bool(0.1) {
                    Instruction::Empty
                } else {
                    Instruction::Gen(rng.gen_range(0..rank))
                }
            } else if roll < 4 {
                Instruction::Inverse(rng.gen_range(0..i))
            } else {
                // bias towards recent entries so the last one depends on most of the sequence
                let j = i - 1 - rng.gen_range(0..i.min(3));
                Instruction::Product(j, rng.gen_range(0..i))
            };
            ins.push(next);
        }
        StraightLineSeq { rank, instructions: ins }
    }
}

impl fmt::Display for StraightLineSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rank {}", self.rank)?;
        for ins in &self.instructions {
            match *ins {
                Instruction::Gen(j) => writeln!(f, "G {}", j + 1)?,
                Instruction::Empty => writeln!(f, "E")?,
                Instruction::Inverse(j) => writeln!(f, "I {}", j + 1)?,
                Instruction::Product(j, k) => writeln!(f, "P {} {}", j + 1, k + 1)?,
            }
        }
        Ok(())
    }
}

/// Normal form of `Y(a₁, …, a_m)`, storing one reduced word per instruction.
/// Fails as soon as an intermediate word is longer than `cap`.
pub fn evaluate(
    rs: &RewritingSystem,
    y: &StraightLineSeq,
    gens: &[Word],
    cap: usize,
) -> Result<Word, SlpError> {
    if gens.len() != y.rank {
        return Err(SlpError::GeneratorCount { expected: y.rank, found: gens.len() });
    }
    let mut vals: Vec<Word> = Vec::with_capacity(y.len());
    for (i, ins) in y.instructions.iter().enumerate() {
        let v = match *ins {
            Instruction::Gen(j) => rs.reduce(&gens[j]),
            Instruction::Empty => Word::empty(),
            Instruction::Inverse(j) => rs.reduce(&rs.formal_inverse(&vals[j])),
            Instruction::Product(j, k) => rs.multiply(&vals[j], &vals[k]),
        };
        if v.len() > cap {
            return Err(SlpError::LengthCapExceeded { position: i + 1, length: v.len(), cap });
        }
        vals.push(v);
    }
    Ok(vals.pop().unwrap_or_default())
}

/// Whether `Y(a₁, …, a_m)` and `u` spell the same element.
pub fn compressed_equal(
    rs: &RewritingSystem,
    y: &StraightLineSeq,
    gens: &[Word],
    u: &Word,
    cap: usize,
) -> Result<bool, SlpError> {
    let v = evaluate(rs, y, gens, cap)?;
    Ok(rs.multiply(&v, &rs.formal_inverse(u)).is_empty())
}

/// `⌊(log₂|H| + 1)²⌋`, the reachability length bound for a group of this order.
pub fn reachability_bound(order: usize) -> usize {
    let l = (order.max(1) as f64).log2() + 1.0;
    (l * l + 1e-9).floor() as usize
}

/// A short sequence `Y` with `Y(gens) = target` inside the finite subgroup `h`.
///
/// Grows a cube sequence `h₁, …, h_s`: while the set `C⁻¹C` of quotients of
/// subproducts `h₁^{ε₁}⋯h_i^{ε_i}` is not all of `h`, some `c⁻¹·d·a_j` falls
/// outside it and becomes the next cube element, doubling `|C|`. The target is
/// then `c⁻¹·d` for two subproducts. The result is compared against a
/// letter-by-letter sequence along a shortest word in the generators and the
/// shorter one is returned.
pub fn build_slp(
    rs: &RewritingSystem,
    h: &FiniteSubgroup,
    gens: &[Word],
    target: &Word,
) -> Result<StraightLineSeq, BuildError> {
    let rank = gens.len();
    let target = h.index_of(&rs.reduce(target)).ok_or(BuildError::NotInSubgroup)?;
    let gen_idx = gens
        .iter()
        .map(|g| h.index_of(&rs.reduce(g)).ok_or(BuildError::GenerationFailure))
        .collect::<Result<Vec<_>, _>>()?;
    if h.closure(&gen_idx).len() != h.order() {
        return Err(BuildError::GenerationFailure);
    }
    if target == FiniteSubgroup::IDENTITY {
        return Ok(StraightLineSeq::identity(rank));
    }
    if let Some(j) = gen_idx.iter().position(|&g| g == target) {
        return Ok(StraightLineSeq { rank, instructions: vec![Instruction::Gen(j)] });
    }
    let cube = CubeBuilder::new(h, &gen_idx).build(target);
    let path = shortest_word_slp(h, &gen_idx, target);
    let best = if path.len() < cube.len() { path } else { cube };
    Ok(StraightLineSeq { rank, instructions: best })
}

struct CubeBuilder<'h> {
    h: &'h FiniteSubgroup,
    gens: &'h [usize],
    ins: Vec<Instruction>,
    // element index -> first position evaluating to it
    pos: HashMap<usize, usize>,
    cube: Vec<usize>,
    subproducts: HashMap<usize, u64>,
}

impl<'h> CubeBuilder<'h> {
    fn new(h: &'h FiniteSubgroup, gens: &'h [usize]) -> Self {
        let mut subproducts = HashMap::new();
        subproducts.insert(FiniteSubgroup::IDENTITY, 0u64);
        CubeBuilder { h, gens, ins: Vec::new(), pos: HashMap::new(), cube: Vec::new(), subproducts }
    }

    fn emit(&mut self, ins: Instruction, value: usize) -> usize {
        if let Some(&p) = self.pos.get(&value) {
            return p;
        }
        self.ins.push(ins);
        let p = self.ins.len() - 1;
        self.pos.insert(value, p);
        p
    }

    fn gen_pos(&mut self, j: usize) -> usize {
        self.emit(Instruction::Gen(j), self.gens[j])
    }

    fn mul_pos(&mut self, a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
        let v = self.h.mul(a.1, b.1);
        (self.emit(Instruction::Product(a.0, b.0), v), v)
    }

    /// Position and value of `h_{i₁}⋯h_{i_k}` for the bits of `mask`.
    fn subproduct(&mut self, mask: u64) -> Option<(usize, usize)> {
        let mut acc: Option<(usize, usize)> = None;
        for i in 0..self.cube.len() {
            if mask >> i & 1 == 1 {
                let hi = self.cube[i];
                let cur = (self.pos[&hi], hi);
                acc = Some(match acc {
                    None => cur,
                    Some(a) => self.mul_pos(a, cur),
                });
            }
        }
        acc
    }

    /// Position of `c⁻¹·d`; `None` for the identity.
    fn quotient(&mut self, c: u64, d: u64) -> Option<(usize, usize)> {
        let c = self.subproduct(c).map(|(p, v)| {
            let inv = self.h.inverse(v);
            (self.emit(Instruction::Inverse(p), inv), inv)
        });
        let d = self.subproduct(d);
        match (c, d) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x),
            (Some(x), Some(y)) => Some(self.mul_pos(x, y)),
        }
    }

    fn quotients(&self) -> HashMap<usize, (u64, u64)> {
        let mut q: HashMap<usize, (u64, u64)> = HashMap::new();
        let mut items: Vec<(&usize, &u64)> = self.subproducts.iter().collect();
        items.sort_by_key(|(&e, &m)| (m.count_ones(), e));
        for &(&c, &cm) in &items {
            for &(&d, &dm) in &items {
                let v = self.h.mul(self.h.inverse(c), d);
                let cost = cm.count_ones() + dm.count_ones();
                let better = match q.get(&v) {
                    None => true,
                    Some(&(a, b)) => cost < a.count_ones() + b.count_ones(),
                };
                if better {
                    q.insert(v, (cm, dm));
                }
            }
        }
        q
    }

    fn build(mut self, target: usize) -> Vec<Instruction> {
        loop {
            let q = self.quotients();
            if q.len() == self.h.order() {
                if let Some(&p) = self.pos.get(&target) {
                    self.ins.truncate(p + 1);
                    return self.ins;
                }
                let (c, d) = q[&target];
                self.quotient(c, d);
                return self.ins;
            }
            // cheapest c⁻¹·d·a_j outside C⁻¹C
            let mut best: Option<(u32, usize, u64, u64, usize)> = None;
            for (&x, &(cm, dm)) in &q {
                for (j, &a) in self.gens.iter().enumerate() {
                    let y = self.h.mul(x, a);
                    if q.contains_key(&y) {
                        continue;
                    }
                    let cost = cm.count_ones() + dm.count_ones();
                    let key = (cost, y, cm, dm, j);
                    if best.is_none_or(|b| key < b) {
                        best = Some(key);
                    }
                }
            }
            let (_, y, cm, dm, j) = best.expect("a proper subset closed under generators is not possible");
            let g = (self.gen_pos(j), self.gens[j]);
            let p = match self.quotient(cm, dm) {
                None => g.0,
                Some(x) => self.mul_pos(x, g).0,
            };
            debug_assert_eq!(self.ins.len() - 1, p.max(self.ins.len() - 1));
            self.pos.entry(y).or_insert(p);
            let bit = 1u64 << self.cube.len();
            self.cube.push(y);
            let old: Vec<(usize, u64)> = self.subproducts.iter().map(|(&e, &m)| (e, m)).collect();
            for (e, m) in old {
                self.subproducts.entry(self.h.mul(e, y)).or_insert(m | bit);
            }
        }
    }
}

/// Letter-by-letter sequence along a shortest word over the generators and
/// their inverses.
fn shortest_word_slp(h: &FiniteSubgroup, gens: &[usize], target: usize) -> Vec<Instruction> {
    // BFS over (element) with steps ·a_j or ·a_j⁻¹
    let mut prev: HashMap<usize, (usize, usize, bool)> = HashMap::new();
    let mut queue = VecDeque::from([FiniteSubgroup::IDENTITY]);
    let mut seen = vec![false; h.order()];
    seen[FiniteSubgroup::IDENTITY] = true;
    while let Some(x) = queue.pop_front() {
        if x == target {
            break;
        }
        for (j, &a) in gens.iter().enumerate() {
            for inv in [false, true] {
                let s = if inv { h.inverse(a) } else { a };
                let y = h.mul(x, s);
                if !seen[y] {
                    seen[y] = true;
                    prev.insert(y, (x, j, inv));
                    queue.push_back(y);
                }
            }
        }
    }
    let mut steps = Vec::new();
    let mut cur = target;
    while cur != FiniteSubgroup::IDENTITY {
        let (p, j, inv) = prev[&cur];
        steps.push((j, inv));
        cur = p;
    }
    steps.reverse();
    let mut ins = Vec::new();
    let mut gen_pos: HashMap<(usize, bool), usize> = HashMap::new();
    let mut acc: Option<usize> = None;
    for (j, inv) in steps {
        let g = *gen_pos.entry((j, false)).or_insert_with(|| {
            ins.push(Instruction::Gen(j));
            ins.len() - 1
        });
        let s = if inv {
            *gen_pos.entry((j, true)).or_insert_with(|| {
                ins.push(Instruction::Inverse(g));
                ins.len() - 1
            })
        } else {
            g
        };
        acc = Some(match acc {
            None => s,
            Some(a) => {
                ins.push(Instruction::Product(a, s));
                ins.len() - 1
            }
        });
    }
    ins
}
