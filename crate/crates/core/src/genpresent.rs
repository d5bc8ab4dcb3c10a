//! Rewriting systems for free products `A₁ ∗ ⋯ ∗ A_p ∗ F_r` of finite groups
//! given by multiplication tables, and a table-level isomorphism oracle.
//!
//! Each nontrivial element of each factor becomes a letter and every product
//! of two nontrivial elements of the same factor becomes a rule `g h → (gh)`
//! (or `g h → λ`); free generators only get cancellation rules. All left-hand
//! sides have length two.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::rewriting::{RewritingSystem, Rule, SystemError};
use crate::word::{Letter, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid group table: {0}")]
    InvalidTable(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("the specification describes the trivial group, which has no letters")]
    TrivialGroup,
    #[error("generated system failed validation: {0}")]
    Invalid(#[from] SystemError),
}

/// A finite group as a Cayley table over `0..n`, identity `0`.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteGroupTable {
    n: usize,
    table: Vec<usize>,
}

impl FiniteGroupTable {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self, GenError> {
        let n = rows.len();
        let bad = |m: String| Err(GenError::InvalidTable(m));
        if n == 0 {
            return bad("empty table".into());
        }
        if rows.iter().any(|r| r.len() != n) {
            return bad("table is not square".into());
        }
        let table: Vec<usize> = rows.into_iter().flatten().collect();
        if table.iter().any(|&x| x >= n) {
            return bad("entry out of range".into());
        }
        let g = FiniteGroupTable { n, table };
        for i in 0..n {
            if g.mul(0, i) != i || g.mul(i, 0) != i {
                return bad("element 0 is not the identity".into());
            }
            let mut row = vec![false; n];
            let mut col = vec![false; n];
            for j in 0..n {
                row[g.mul(i, j)] = true;
                col[g.mul(j, i)] = true;
            }
            if row.contains(&false) || col.contains(&false) {
                return bad(format!("row or column {i} is not a permutation"));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if g.mul(g.mul(a, b), c) != g.mul(a, g.mul(b, c)) {
                        return bad(format!("not associative at ({a}, {b}, {c})"));
                    }
                }
            }
        }
        Ok(g)
    }

    fn from_fn(n: usize, f: impl Fn(usize, usize) -> usize) -> Self {
        let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        FiniteGroupTable::new(rows).expect("built-in constructions are groups")
    }

    pub fn cyclic(n: usize) -> Self {
        Self::from_fn(n.max(1), |i, j| (i + j) % n.max(1))
    }

    /// `a × b`, element `(x, y)` numbered `x·|b| + y`.
    pub fn direct_product(a: &Self, b: &Self) -> Self {
        let m = b.n;
        Self::from_fn(a.n * m, |i, j| a.mul(i / m, j / m) * m + b.mul(i % m, j % m))
    }

    /// Dihedral group of order `2n`: `rᵏ` is `k`, `rᵏs` is `n + k`.
    pub fn dihedral(n: usize) -> Self {
        Self::from_fn(2 * n, |i, j| {
            let (a, s) = (i % n, i >= n);
            let (b, t) = (j % n, j >= n);
            // rᵃsˢ · rᵇsᵗ = r^(a ± b) s^(s+t)
            let k = if s { (a + n - b) % n } else { (a + b) % n };
            if s != t {
                n + k
            } else {
                k
            }
        })
    }

    /// Quaternion group `{±1, ±i, ±j, ±k}`.
    pub fn quaternion() -> Self {
        // unit u ∈ {1, i, j, k} as 0..4, sign as bit; element = 2·u + sign
        const UNIT: [[(usize, bool); 4]; 4] = [
            [(0, false), (1, false), (2, false), (3, false)],
            [(1, false), (0, true), (3, false), (2, true)],
            [(2, false), (3, true), (0, true), (1, false)],
            [(3, false), (2, false), (1, true), (0, true)],
        ];
        Self::from_fn(8, |x, y| {
            let (u, v) = (x / 2, y / 2);
            let (w, neg) = UNIT[u][v];
            let sign = (x % 2 == 1) ^ (y % 2 == 1) ^ neg;
            2 * w + sign as usize
        })
    }

    /// Symmetric group on three points.
    pub fn symmetric3() -> Self {
        let perms: [[usize; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
        let find = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
        Self::from_fn(6, |i, j| {
            let (a, b) = (perms[i], perms[j]);
            find([a[b[0]], a[b[1]], a[b[2]]])
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.table[i * self.n + j]
    }

    pub fn inverse(&self, i: usize) -> usize {
        (0..self.n).find(|&j| self.mul(i, j) == 0).expect("group table")
    }

    pub fn element_order(&self, i: usize) -> usize {
        let (mut x, mut k) = (i, 1);
        while x != 0 {
            x = self.mul(x, i);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.mul(i, j) == self.mul(j, i)))
    }

    /// The same group with element `i` renamed `perm[i]`; `perm[0]` must be 0.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        assert_eq!(perm[0], 0, "the identity keeps index 0");
        let mut rows = vec![vec![0; self.n]; self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                rows[perm[i]][perm[j]] = perm[self.mul(i, j)];
            }
        }
        FiniteGroupTable::new(rows).expect("relabelling preserves the group axioms")
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.n).map(|r| r.to_vec()).collect()
    }
}

impl fmt::Debug for FiniteGroupTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteGroupTable(order {})", self.n)
    }
}

/// `A₁ ∗ ⋯ ∗ A_p ∗ F_r`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PlainSpec {
    pub factors: Vec<FiniteGroupTable>,
    pub free_rank: usize,
}

impl PlainSpec {
    pub fn new(factors: Vec<FiniteGroupTable>, free_rank: usize) -> Self {
        PlainSpec { factors, free_rank }
    }

    /// Parses the `.fp` format: `free_rank: r`, then one `table:` block per
    /// factor followed by its rows.
    pub fn parse(text: &str) -> Result<Self, GenError> {
        let perr = |line: usize, m: &str| GenError::Parse { line, message: m.to_string() };
        let mut free_rank = None;
        let mut blocks: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix("free_rank:") {
                if free_rank.is_some() || !blocks.is_empty() {
                    return Err(perr(line, "`free_rank:` must come first, once"));
                }
                free_rank = Some(rest.trim().parse::<usize>().map_err(|_| perr(line, "bad free rank"))?);
            } else if l == "table:" {
                blocks.push((line, Vec::new()));
            } else {
                let row = l
                    .split_whitespace()
                    .map(|x| x.parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| perr(line, "table rows are whitespace-separated indices"))?;
                blocks.last_mut().ok_or_else(|| perr(line, "row outside a `table:` block"))?.1.push(row);
            }
        }
        let free_rank = free_rank.ok_or_else(|| perr(0, "missing `free_rank:` line"))?;
        let factors = blocks
            .into_iter()
            .map(|(line, rows)| {
                FiniteGroupTable::new(rows).map_err(|e| match e {
                    GenError::InvalidTable(m) => GenError::InvalidTable(format!("table at line {line}: {m}")),
                    e => e,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PlainSpec { factors, free_rank })
    }

    pub fn to_fp(&self) -> String {
        let mut out = format!("free_rank: {}\n", self.free_rank);
        for f in &self.factors {
            out.push_str("table:\n");
            for row in f.rows() {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// The length-two-lhs system for `spec`, validated before it is returned.
pub fn gen_system(spec: &PlainSpec) -> Result<RewritingSystem, GenError> {
    let mut tokens = Vec::new();
    let mut inverse = Vec::new();
    let mut rules = Vec::new();
    for (k, f) in spec.factors.iter().enumerate() {
        if f.order() == 1 {
            log::warn!("dropping trivial factor {}", k + 1);
            continue;
        }
        let base = tokens.len();
        let letter = |j: usize| Letter((base + j - 1) as u32);
        for j in 1..f.order() {
            tokens.push(format!("f{}_{}", k + 1, j));
            inverse.push(letter(f.inverse(j)));
        }
        for g in 1..f.order() {
            for h in 1..f.order() {
                let p = f.mul(g, h);
                let rhs = if p == 0 { Word::empty() } else { Word::single(letter(p)) };
                rules.push(Rule { lhs: Word::from_letters(vec![letter(g), letter(h)]), rhs });
            }
        }
    }
    for i in 1..=spec.free_rank {
        let (x, xi) = (Letter(tokens.len() as u32), Letter(tokens.len() as u32 + 1));
        tokens.push(format!("z{i}"));
        tokens.push(format!("z{i}_inv"));
        inverse.push(xi);
        inverse.push(x);
        rules.push(Rule { lhs: Word::from_letters(vec![x, xi]), rhs: Word::empty() });
        rules.push(Rule { lhs: Word::from_letters(vec![xi, x]), rhs: Word::empty() });
    }
    if tokens.is_empty() {
        return Err(GenError::TrivialGroup);
    }
    let mut rs = RewritingSystem::new(tokens, inverse, rules).map_err(SystemError::from)?;
    rs.validate().map_err(SystemError::from)?;
    Ok(rs)
}

/// Whether two free products are isomorphic: same free rank and the same
/// multiset of nontrivial factor isomorphism types.
pub fn ground_truth_iso(a: &PlainSpec, b: &PlainSpec) -> bool {
    if a.free_rank != b.free_rank {
        return false;
    }
    let fa: Vec<&FiniteGroupTable> = a.factors.iter().filter(|f| f.order() > 1).collect();
    let fb: Vec<&FiniteGroupTable> = b.factors.iter().filter(|f| f.order() > 1).collect();
    if fa.len() != fb.len() {
        return false;
    }
    let mut used = vec![false; fb.len()];
    for x in fa {
        match (0..fb.len()).find(|&j| !used[j] && tables_isomorphic(x, fb[j])) {
            Some(j) => used[j] = true,
            None => return false,
        }
    }
    true
}

/// Backtracking over images of a generating set, checked against both tables.
pub fn tables_isomorphic(a: &FiniteGroupTable, b: &FiniteGroupTable) -> bool {
    if a.order() != b.order() || a.is_abelian() != b.is_abelian() {
        return false;
    }
    let mut ord_a: Vec<usize> = (0..a.order()).map(|i| a.element_order(i)).collect();
    let mut ord_b: Vec<usize> = (0..b.order()).map(|i| b.element_order(i)).collect();
    let gens = generating_set(a);
    let cand: Vec<Vec<usize>> =
        gens.iter().map(|&g| (0..b.order()).filter(|&y| ord_b[y] == ord_a[g]).collect()).collect();
    ord_a.sort_unstable();
    ord_b.sort_unstable();
    if ord_a != ord_b {
        return false;
    }
    let mut img = Vec::new();
    search(a, b, &gens, &cand, &mut img)
}

fn generating_set(a: &FiniteGroupTable) -> Vec<usize> {
    let mut gens = Vec::new();
    let mut span = span_of(a, &gens);
    for x in 1..a.order() {
        if !span[x] {
            gens.push(x);
            span = span_of(a, &gens);
        }
    }
    gens
}

fn span_of(a: &FiniteGroupTable, gens: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; a.order()];
    seen[0] = true;
    let mut q = VecDeque::from([0]);
    while let Some(x) = q.pop_front() {
        for &g in gens {
            let y = a.mul(x, g);
            if !seen[y] {
                seen[y] = true;
                q.push_back(y);
            }
        }
    }
    seen
}

fn search(a: &FiniteGroupTable, b: &FiniteGroupTable, gens: &[usize], cand: &[Vec<usize>], img: &mut Vec<usize>) -> bool {
    if img.len() == gens.len() {
        // words for every element of a, as products of generators
        let mut f = vec![usize::MAX; a.order()];
        f[0] = 0;
        let mut q = VecDeque::from([0]);
        while let Some(x) = q.pop_front() {
            for (&g, &h) in gens.iter().zip(img.iter()) {
                let y = a.mul(x, g);
                if f[y] == usize::MAX {
                    f[y] = b.mul(f[x], h);
                    q.push_back(y);
                }
            }
        }
        let mut hit = vec![false; b.order()];
        for &y in &f {
            if y == usize::MAX || hit[y] {
                return false;
            }
            hit[y] = true;
        }
        return (0..a.order()).all(|x| (0..a.order()).all(|y| f[a.mul(x, y)] == b.mul(f[x], f[y])));
    }
    for &c in &cand[img.len()] {
        if img.contains(&c) {
            continue;
        }
        img.push(c);
        if search(a, b, gens, cand, img) {
            return true;
        }
        img.pop();
    }
    false
}

/// The factor pool of the test corpus, by name.
pub fn standard_factors() -> Vec<(&'static str, FiniteGroupTable)> {
    let z2 = FiniteGroupTable::cyclic(2);
    vec![
        ("Z2", z2.clone()),
        ("Z3", FiniteGroupTable::cyclic(3)),
        ("Z4", FiniteGroupTable::cyclic(4)),
        ("Z2xZ2", FiniteGroupTable::direct_product(&z2, &z2)),
        ("Z5", FiniteGroupTable::cyclic(5)),
        ("Z6", FiniteGroupTable::cyclic(6)),
        ("S3", FiniteGroupTable::symmetric3()),
        ("D4", FiniteGroupTable::dihedral(4)),
        ("Q8", FiniteGroupTable::quaternion()),
    ]
}

/// A random spec with at most `max_factors` factors from the pool and free
/// rank at most `max_rank`; never the trivial group.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, max_factors: usize, max_rank: usize) -> PlainSpec {
    let pool = standard_factors();
    loop {
        let k = rng.gen_range(0..=max_factors);
        let factors = (0..k).map(|_| pool.choose(rng).expect("nonempty pool").1.clone()).collect();
        let spec = PlainSpec::new(factors, rng.gen_range(0..=max_rank));
        if !spec.factors.is_empty() || spec.free_rank > 0 {
            return spec;
        }
    }
}

/// An isomorphic copy: factors shuffled and every table relabelled.
pub fn disguise<R: Rng + ?Sized>(spec: &PlainSpec, rng: &mut R) -> PlainSpec {
    let mut factors: Vec<FiniteGroupTable> = spec
        .factors
        .iter()
        .map(|f| {
            let mut perm: Vec<usize> = (1..f.order()).collect();
            perm.shuffle(rng);
            perm.insert(0, 0);
            f.relabel(&perm)
        })
        .collect();
    factors.shuffle(rng);
    PlainSpec::new(factors, spec.free_rank)
}

/// A nearby spec that differs in one factor, in the factor count, or in rank.
/// It is usually, not always, non-isomorphic; label it with
/// [`ground_truth_iso`].
pub fn perturb<R: Rng + ?Sized>(spec: &PlainSpec, rng: &mut R, max_factors: usize, max_rank: usize) -> PlainSpec {
    let pool = standard_factors();
    let mut out = disguise(spec, rng);
    loop {
        match rng.gen_range(0..3) {
            0 if !out.factors.is_empty() => {
                let i = rng.gen_range(0..out.factors.len());
                out.factors[i] = pool.choose(rng).expect("nonempty pool").1.clone();
            }
            1 if out.factors.len() < max_factors.max(1) => {
                out.factors.push(pool.choose(rng).expect("nonempty pool").1.clone())
            }
            1 if !out.factors.is_empty() => {
                out.factors.pop();
            }
            2 => {
                let r = rng.gen_range(0..=max_rank);
                out.free_rank = if r == out.free_rank { (r + 1) % (max_rank + 1) } else { r };
            }
            _ => continue,
        }
        if out.factors.is_empty() && out.free_rank == 0 {
            out.free_rank = 1;
        }
        return out;
    }
}

/// `n` labelled pairs: the first half disguised clones, the second half
/// perturbations that `ground_truth_iso` rejects.
pub fn corpus<R: Rng + ?Sized>(rng: &mut R, n: usize, max_factors: usize, max_rank: usize) -> Vec<(PlainSpec, PlainSpec, bool)> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let a = random_spec(rng, max_factors, max_rank);
        if k < n / 2 {
            let b = disguise(&a, rng);
            out.push((a, b, true));
        } else {
            let b = loop {
                let b = perturb(&a, rng, max_factors, max_rank);
                if !ground_truth_iso(&a, &b) {
                    break b;
                }
            };
            out.push((a, b, false));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z3_system() {
        let rs = gen_system(&PlainSpec::new(vec![FiniteGroupTable::cyclic(3)], 0)).unwrap();
        assert_eq!(rs.tokens(), ["f1_1", "f1_2"]);
        let rules: Vec<String> = rs
            .rules()
            .iter()
            .map(|r| format!("{} -> {}", rs.format_word(&r.lhs), rs.format_word(&r.rhs)))
            .collect();
        assert_eq!(rules, ["f1_1 f1_1 -> f1_2", "f1_1 f1_2 -> ", "f1_2 f1_1 -> ", "f1_2 f1_2 -> f1_1"]);
        assert_eq!(rs.max_rhs(), 1);
    }

    #[test]
    fn free_and_z2() {
        let z = gen_system(&PlainSpec::new(vec![], 1)).unwrap();
        assert_eq!(z.tokens(), ["z1", "z1_inv"]);
        assert_eq!(z.rules().len(), 2);
        assert_eq!(z.max_rhs(), 0);
        let t = gen_system(&PlainSpec::new(vec![FiniteGroupTable::cyclic(2)], 0)).unwrap();
        assert_eq!(t.tokens(), ["f1_1"]);
        assert_eq!(t.rules().len(), 1);
        assert!(matches!(gen_system(&PlainSpec::default()), Err(GenError::TrivialGroup)));
        // trivial factors are dropped
        let d = gen_system(&PlainSpec::new(vec![FiniteGroupTable::cyclic(1)], 1)).unwrap();
        assert_eq!(d.alphabet_len(), 2);
    }

    #[test]
    fn invalid_tables() {
        assert!(FiniteGroupTable::new(vec![vec![0, 1], vec![1, 1]]).is_err());
        assert!(FiniteGroupTable::new(vec![vec![1, 0], vec![0, 1]]).is_err());
        assert!(FiniteGroupTable::new(vec![vec![0, 1, 2], vec![1, 0, 2]]).is_err());
        // a Latin square with identity that is not associative
        let loop5 = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(FiniteGroupTable::new(loop5), Err(GenError::InvalidTable(m)) if m.contains("associative")));
    }

    #[test]
    fn standard_groups() {
        let q = FiniteGroupTable::quaternion();
        let d4 = FiniteGroupTable::dihedral(4);
        assert_eq!((q.order(), d4.order()), (8, 8));
        assert!(!q.is_abelian() && !d4.is_abelian());
        assert!(!FiniteGroupTable::symmetric3().is_abelian());
        // Q8 has one involution, D4 has five
        let inv = |g: &FiniteGroupTable| (1..8).filter(|&i| g.element_order(i) == 2).count();
        assert_eq!((inv(&q), inv(&d4)), (1, 5));
        assert!(!tables_isomorphic(&q, &d4));
        let z6 = FiniteGroupTable::cyclic(6);
        let z2z3 = FiniteGroupTable::direct_product(&FiniteGroupTable::cyclic(2), &FiniteGroupTable::cyclic(3));
        assert!(tables_isomorphic(&z6, &z2z3));
        assert!(!tables_isomorphic(&z6, &FiniteGroupTable::symmetric3()));
        assert!(tables_isomorphic(&FiniteGroupTable::dihedral(3), &FiniteGroupTable::symmetric3()));
        let v4 = FiniteGroupTable::direct_product(&FiniteGroupTable::cyclic(2), &FiniteGroupTable::cyclic(2));
        assert!(!tables_isomorphic(&v4, &FiniteGroupTable::cyclic(4)));
        let perm = [0, 3, 1, 5, 2, 4];
        assert!(tables_isomorphic(&FiniteGroupTable::symmetric3(), &FiniteGroupTable::symmetric3().relabel(&perm)));
    }

    #[test]
    fn ground_truth_oracle() {
        let z2 = FiniteGroupTable::cyclic(2);
        let z3 = FiniteGroupTable::cyclic(3);
        let a = PlainSpec::new(vec![z2.clone(), z3.clone()], 0);
        let b = PlainSpec::new(vec![z3, z2], 0);
        assert!(ground_truth_iso(&a, &b));
        let z6 = PlainSpec::new(vec![FiniteGroupTable::cyclic(6)], 0);
        let s3 = PlainSpec::new(vec![FiniteGroupTable::symmetric3()], 0);
        assert!(!ground_truth_iso(&z6, &s3));
        assert!(ground_truth_iso(&PlainSpec::new(vec![], 2), &PlainSpec::new(vec![], 2)));
        assert!(!ground_truth_iso(&PlainSpec::new(vec![], 2), &PlainSpec::new(vec![], 1)));
    }

    #[test]
    fn fp_roundtrip() {
        let spec = PlainSpec::new(vec![FiniteGroupTable::cyclic(3), FiniteGroupTable::symmetric3()], 2);
        let text = spec.to_fp();
        assert!(text.starts_with("free_rank: 2\ntable:\n0 1 2\n"));
        assert_eq!(PlainSpec::parse(&text).unwrap(), spec);
        assert!(matches!(PlainSpec::parse("table:\n0\n"), Err(GenError::Parse { .. })));
        assert!(matches!(PlainSpec::parse("free_rank: 0\n0 1\n"), Err(GenError::Parse { line: 2, .. })));
        assert!(matches!(
            PlainSpec::parse("free_rank: 0\ntable:\n0 1\n1 1\n"),
            Err(GenError::InvalidTable(_))
        ));
    }
}
