//! Inverse-closed finite convergent length-reducing rewriting systems.
//!
//! A [`RewritingSystem`] owns its alphabet (display tokens mapped to dense
//! [`Letter`] ids), the declared inverse involution and the rule list. Parsing
//! only checks structure; [`RewritingSystem::validate`] runs the semantic checks
//! (local confluence over all critical pairs, then inverse closure) and records
//! the result.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::word::{Letter, Word};

/// A length-reducing rule `lhs -> rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub lhs: Word,
    pub rhs: Word,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate letter `{token}`")]
    DuplicateToken { line: usize, token: String },
    #[error("line {line}: rule is not length-reducing (|lhs| = {lhs}, |rhs| = {rhs})")]
    LengthNotReducing { line: usize, lhs: usize, rhs: usize },
    #[error("line {line}: unknown letter `{token}`")]
    UnknownToken { line: usize, token: String },
    #[error("letter `{token}` has no inverse declaration")]
    MissingInverse { token: String },
    #[error("line {line}: inverse of `{token}` is declared more than once")]
    NonInvolutiveInverse { line: usize, token: String },
}

impl ParseError {
    fn at(self, line: usize) -> Self {
        match self {
            ParseError::Syntax { message, .. } => ParseError::Syntax { line, message },
            ParseError::DuplicateToken { token, .. } => ParseError::DuplicateToken { line, token },
            ParseError::LengthNotReducing { lhs, rhs, .. } => {
                ParseError::LengthNotReducing { line, lhs, rhs }
            }
            ParseError::UnknownToken { token, .. } => ParseError::UnknownToken { line, token },
            ParseError::NonInvolutiveInverse { token, .. } => {
                ParseError::NonInvolutiveInverse { line, token }
            }
            e @ ParseError::MissingInverse { .. } => e,
        }
    }
}

/// Two one-step reducts of an overlap or containment of rule left-hand sides,
/// together with their normal forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalPair {
    pub rules: (usize, usize),
    pub word: Word,
    pub left: Word,
    pub right: Word,
    pub left_nf: Word,
    pub right_nf: Word,
}

impl CriticalPair {
    pub fn joins(&self) -> bool {
        self.left_nf == self.right_nf
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConvergenceReport {
    pub pairs: Vec<CriticalPair>,
}

impl ConvergenceReport {
    pub fn is_confluent(&self) -> bool {
        self.pairs.iter().all(CriticalPair::joins)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("critical pair of rules {} and {} on {:?} does not join: {:?} vs {:?}", .pair.rules.0 + 1, .pair.rules.1 + 1, .pair.word, .pair.left_nf, .pair.right_nf)]
    NonConfluent { pair: Box<CriticalPair> },
    #[error("letter `{letter}` times its declared inverse does not reduce to the empty word")]
    NotInverseClosed { letter: String },
}

#[derive(Clone, Debug)]
pub struct RewritingSystem {
    tokens: Vec<String>,
    index: HashMap<String, Letter>,
    inverse: Vec<Letter>,
    rules: Vec<Rule>,
    // rule ids keyed by the last letter of their lhs
    by_last: Vec<Vec<usize>>,
    max_lhs: usize,
    convergent: bool,
    inverse_closed: bool,
}

impl RewritingSystem {
    /// Builds a system from already-resolved parts. `inverse[i]` is the
    /// declared inverse of letter `i`.
    pub fn new(
        tokens: Vec<String>,
        inverse: Vec<Letter>,
        rules: Vec<Rule>,
    ) -> Result<Self, ParseError> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(ParseError::Syntax {
                    line: 0,
                    message: format!("invalid letter token `{t}`"),
                });
            }
            if index.insert(t.clone(), Letter(i as u32)).is_some() {
                return Err(ParseError::DuplicateToken { line: 0, token: t.clone() });
            }
        }
        if tokens.is_empty() {
            return Err(ParseError::Syntax { line: 0, message: "empty alphabet".into() });
        }
        if inverse.len() != tokens.len() {
            let missing = tokens[inverse.len().min(tokens.len() - 1)].clone();
            return Err(ParseError::MissingInverse { token: missing });
        }
        for (i, &inv) in inverse.iter().enumerate() {
            if inv.index() >= tokens.len() || inverse[inv.index()].index() != i {
                return Err(ParseError::NonInvolutiveInverse { line: 0, token: tokens[i].clone() });
            }
        }
        let mut by_last = vec![Vec::new(); tokens.len()];
        let mut max_lhs = 0;
        for (k, rule) in rules.iter().enumerate() {
            if rule.lhs.len() <= rule.rhs.len() {
                return Err(ParseError::LengthNotReducing {
                    line: 0,
                    lhs: rule.lhs.len(),
                    rhs: rule.rhs.len(),
                });
            }
            for l in rule.lhs.iter().chain(rule.rhs.iter()) {
                if l.index() >= tokens.len() {
                    return Err(ParseError::UnknownToken { line: 0, token: format!("#{}", l.0) });
                }
            }
            by_last[rule.lhs[rule.lhs.len() - 1].index()].push(k);
            max_lhs = max_lhs.max(rule.lhs.len());
        }
        Ok(RewritingSystem {
            tokens,
            index,
            inverse,
            rules,
            by_last,
            max_lhs,
            convergent: false,
            inverse_closed: false,
        })
    }

    /// Parses the `.lrs` text format.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        #[derive(PartialEq, PartialOrd)]
        enum Section {
            Start,
            Letters,
            Inverses,
            Rules,
        }
        let mut section = Section::Start;
        let mut tokens: Vec<String> = Vec::new();
        let mut index: HashMap<String, Letter> = HashMap::new();
        let mut inverse: Vec<Option<Letter>> = Vec::new();
        let mut rules = Vec::new();

        let resolve = |index: &HashMap<String, Letter>, tok: &str, line: usize| {
            index
                .get(tok)
                .copied()
                .ok_or_else(|| ParseError::UnknownToken { line, token: tok.to_string() })
        };

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, rest) = content.split_once(':').ok_or_else(|| ParseError::Syntax {
                line,
                message: format!("expected `letters:`, `inverse:` or `rule:`, found `{content}`"),
            })?;
            match key.trim() {
                "letters" => {
                    if section != Section::Start {
                        return Err(ParseError::Syntax {
                            line,
                            message: "exactly one `letters:` line is allowed, and it comes first"
                                .into(),
                        });
                    }
                    section = Section::Letters;
                    for tok in rest.split_whitespace() {
                        if index.contains_key(tok) {
                            return Err(ParseError::DuplicateToken { line, token: tok.into() });
                        }
                        index.insert(tok.to_string(), Letter(tokens.len() as u32));
                        tokens.push(tok.to_string());
                    }
                    if tokens.is_empty() {
                        return Err(ParseError::Syntax { line, message: "empty alphabet".into() });
                    }
                    inverse = vec![None; tokens.len()];
                }
                "inverse" => {
                    if section < Section::Letters || section > Section::Inverses {
                        return Err(ParseError::Syntax {
                            line,
                            message: "`inverse:` lines must follow `letters:` and precede rules"
                                .into(),
                        });
                    }
                    section = Section::Inverses;
                    let toks: Vec<&str> = rest.split_whitespace().collect();
                    if toks.len() != 2 {
                        return Err(ParseError::Syntax {
                            line,
                            message: "`inverse:` takes exactly two letters".into(),
                        });
                    }
                    let a = resolve(&index, toks[0], line)?;
                    let b = resolve(&index, toks[1], line)?;
                    if let Some(x) = [a, b].into_iter().find(|x| inverse[x.index()].is_some()) {
                        return Err(ParseError::NonInvolutiveInverse {
                            line,
                            token: tokens[x.index()].clone(),
                        });
                    }
                    inverse[a.index()] = Some(b);
                    inverse[b.index()] = Some(a);
                }
                "rule" => {
                    if section < Section::Letters {
                        return Err(ParseError::Syntax {
                            line,
                            message: "`rule:` before `letters:`".into(),
                        });
                    }
                    section = Section::Rules;
                    let (l, r) = rest.split_once("->").ok_or_else(|| ParseError::Syntax {
                        line,
                        message: "rule needs `->`".into(),
                    })?;
                    let lhs: Word = l
                        .split_whitespace()
                        .map(|t| resolve(&index, t, line))
                        .collect::<Result<_, _>>()?;
                    let rhs: Word = r
                        .split_whitespace()
                        .map(|t| resolve(&index, t, line))
                        .collect::<Result<_, _>>()?;
                    if lhs.len() <= rhs.len() {
                        return Err(ParseError::LengthNotReducing {
                            line,
                            lhs: lhs.len(),
                            rhs: rhs.len(),
                        });
                    }
                    rules.push(Rule { lhs, rhs });
                }
                other => {
                    return Err(ParseError::Syntax {
                        line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        if tokens.is_empty() {
            return Err(ParseError::Syntax { line: 0, message: "missing `letters:` line".into() });
        }
        let inverse = inverse
            .iter()
            .enumerate()
            .map(|(i, inv)| inv.ok_or_else(|| ParseError::MissingInverse { token: tokens[i].clone() }))
            .collect::<Result<Vec<_>, _>>()?;
        RewritingSystem::new(tokens, inverse, rules).map_err(|e| e.at(0))
    }

    /// Serializes to the `.lrs` text format.
    pub fn to_lrs(&self) -> String {
        let mut out = String::new();
        out.push_str("letters: ");
        out.push_str(&self.tokens.join(" "));
        out.push('\n');
        for (i, inv) in self.inverse.iter().enumerate() {
            if inv.index() >= i {
                out.push_str(&format!("inverse: {} {}\n", self.tokens[i], self.tokens[inv.index()]));
            }
        }
        for rule in &self.rules {
            let lhs = self.format_word(&rule.lhs);
            let rhs = self.format_word(&rule.rhs);
            if rhs.is_empty() {
                out.push_str(&format!("rule: {lhs} ->\n"));
            } else {
                out.push_str(&format!("rule: {lhs} -> {rhs}\n"));
            }
        }
        out
    }

    pub fn alphabet_len(&self) -> usize {
        self.tokens.len()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.tokens.len() as u32).map(Letter)
    }

    pub fn token(&self, l: Letter) -> &str {
        &self.tokens[l.index()]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn letter(&self, token: &str) -> Option<Letter> {
        self.index.get(token).copied()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn inverse_letter(&self, l: Letter) -> Letter {
        self.inverse[l.index()]
    }

    /// `n_T = |S| + Σ |ℓ r|`.
    pub fn size_n(&self) -> usize {
        self.tokens.len()
            + self.rules.iter().map(|r| r.lhs.len() + r.rhs.len()).sum::<usize>()
    }

    /// `r_T`, the longest right-hand side (0 without rules).
    pub fn max_rhs(&self) -> usize {
        self.rules.iter().map(|r| r.rhs.len()).max().unwrap_or(0)
    }

    pub fn max_lhs(&self) -> usize {
        self.max_lhs
    }

    pub fn is_convergent(&self) -> bool {
        self.convergent
    }

    pub fn is_inverse_closed(&self) -> bool {
        self.inverse_closed
    }

    pub fn is_validated(&self) -> bool {
        self.convergent && self.inverse_closed
    }

    /// Parses a whitespace-separated word. `λ` and the empty string denote the
    /// empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word, ParseError> {
        let text = text.trim();
        if text == "λ" {
            return Ok(Word::empty());
        }
        text.split_whitespace()
            .map(|t| {
                self.letter(t)
                    .ok_or_else(|| ParseError::UnknownToken { line: 0, token: t.to_string() })
            })
            .collect()
    }

    /// Tokens joined by single spaces; the empty word is the empty string.
    pub fn format_word(&self, w: &[Letter]) -> String {
        let toks: Vec<&str> = w.iter().map(|&l| self.token(l)).collect();
        toks.join(" ")
    }

    /// Like [`format_word`](Self::format_word) but prints `λ` for the empty word.
    pub fn show(&self, w: &[Letter]) -> String {
        if w.is_empty() {
            "λ".to_string()
        } else {
            self.format_word(w)
        }
    }

    /// The rule whose lhs is a suffix of `stack`, lowest rule id first.
    fn suffix_redex(&self, stack: &[Letter]) -> Option<usize> {
        let last = *stack.last()?;
        self.by_last[last.index()]
            .iter()
            .copied()
            .find(|&k| stack.ends_with(&self.rules[k].lhs))
    }

    /// Appends `w` to `stack` and rewrites until irreducible. `stack` must be
    /// irreducible on entry; it is irreducible on exit.
    pub fn reduce_onto(&self, stack: &mut Vec<Letter>, w: &[Letter]) {
        let mut pending: Vec<Letter> = w.iter().rev().copied().collect();
        while let Some(x) = pending.pop() {
            stack.push(x);
            if let Some(k) = self.suffix_redex(stack) {
                let rule = &self.rules[k];
                stack.truncate(stack.len() - rule.lhs.len());
                pending.extend(rule.rhs.iter().rev());
            }
        }
    }

    /// The irreducible descendant of `w` under leftmost-innermost rewriting.
    pub fn reduce(&self, w: &[Letter]) -> Word {
        let mut stack = Vec::with_capacity(w.len());
        self.reduce_onto(&mut stack, w);
        Word::from_letters(stack)
    }

    /// Normal form of the product `u · v`.
    pub fn multiply(&self, u: &[Letter], v: &[Letter]) -> Word {
        let mut stack = Vec::with_capacity(u.len() + v.len());
        self.reduce_onto(&mut stack, u);
        self.reduce_onto(&mut stack, v);
        Word::from_letters(stack)
    }

    pub fn is_irreducible(&self, w: &[Letter]) -> bool {
        (1..=w.len()).all(|end| self.suffix_redex(&w[..end]).is_none())
    }

    /// Rewrites at uniformly random redex positions until irreducible.
    pub fn reduce_random<R: Rng + ?Sized>(&self, w: &[Letter], rng: &mut R) -> Word {
        let mut cur = w.to_vec();
        loop {
            let mut redexes = Vec::new();
            for (k, rule) in self.rules.iter().enumerate() {
                let n = rule.lhs.len();
                if n > cur.len() {
                    continue;
                }
                for start in 0..=cur.len() - n {
                    if cur[start..start + n] == rule.lhs[..] {
                        redexes.push((start, k));
                    }
                }
            }
            if redexes.is_empty() {
                return Word::from_letters(cur);
            }
            let (start, k) = redexes[rng.gen_range(0..redexes.len())];
            let rule = &self.rules[k];
            cur.splice(start..start + rule.lhs.len(), rule.rhs.iter().copied());
        }
    }

    /// Reverse of `w` with every letter replaced by its declared inverse.
    pub fn formal_inverse(&self, w: &[Letter]) -> Word {
        w.iter().rev().map(|&l| self.inverse_letter(l)).collect()
    }

    /// Whether `u` and `v` spell the same group element.
    pub fn word_problem(&self, u: &[Letter], v: &[Letter]) -> bool {
        self.multiply(u, &self.formal_inverse(v)).is_empty()
    }

    /// Every critical pair: proper overlaps of two left-hand sides (including a
    /// rule with itself) and containments of one lhs inside another.
    pub fn critical_pairs(&self) -> Vec<CriticalPair> {
        let mut pairs = Vec::new();
        let mut push = |rules: (usize, usize), word: Word, left: Word, right: Word| {
            let left_nf = self.reduce(&left);
            let right_nf = self.reduce(&right);
            pairs.push(CriticalPair { rules, word, left, right, left_nf, right_nf });
        };
        for (i, r1) in self.rules.iter().enumerate() {
            for (j, r2) in self.rules.iter().enumerate() {
                let (l1, l2) = (&r1.lhs, &r2.lhs);
                // suffix of l1 equals prefix of l2
                for k in 1..l1.len().min(l2.len()) {
                    if l1[l1.len() - k..] == l2[..k] {
                        let word = l1.concat(&l2[k..]);
                        let left = r1.rhs.concat(&l2[k..]);
                        let right = Word::from_letters(l1[..l1.len() - k].to_vec()).concat(&r2.rhs);
                        push((i, j), word, left, right);
                    }
                }
                // l2 occurs inside l1
                if i != j && l2.len() <= l1.len() {
                    for p in 0..=l1.len() - l2.len() {
                        if l1[p..p + l2.len()] == l2[..] {
                            let right = Word::from_letters(l1[..p].to_vec())
                                .concat(&r2.rhs)
                                .concat(&l1[p + l2.len()..]);
                            push((i, j), l1.clone(), r1.rhs.clone(), right);
                        }
                    }
                }
            }
        }
        pairs
    }

    /// Checks local confluence on all critical pairs; the system terminates
    /// because it is length-reducing, so this decides confluence.
    pub fn validate_convergent(&self) -> Result<ConvergenceReport, ValidationError> {
        let report = ConvergenceReport { pairs: self.critical_pairs() };
        if let Some(bad) = report.pairs.iter().find(|p| !p.joins()) {
            return Err(ValidationError::NonConfluent { pair: Box::new(bad.clone()) });
        }
        Ok(report)
    }

    pub fn validate_inverse_closed(&self) -> Result<(), ValidationError> {
        for a in self.letters() {
            let b = self.inverse_letter(a);
            if !self.reduce(&[a, b]).is_empty() || !self.reduce(&[b, a]).is_empty() {
                return Err(ValidationError::NotInverseClosed { letter: self.token(a).to_string() });
            }
        }
        Ok(())
    }

    /// Runs both semantic checks and records them on success.
    pub fn validate(&mut self) -> Result<ConvergenceReport, ValidationError> {
        let report = self.validate_convergent()?;
        self.convergent = true;
        self.validate_inverse_closed()?;
        self.inverse_closed = true;
        Ok(report)
    }

    /// Parses and validates in one step.
    pub fn parse_validated(text: &str) -> Result<Self, SystemError> {
        let mut rs = RewritingSystem::parse(text)?;
        rs.validate()?;
        Ok(rs)
    }
}

/// Either stage of loading a system from text.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystemError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

impl fmt::Display for RewritingSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_lrs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    pub(crate) const Z: &str = "letters: a A\ninverse: a A\nrule: a A ->\nrule: A a ->\n";
    pub(crate) const Z2Z3: &str = "letters: t b B\ninverse: t t\ninverse: b B\n\
        rule: t t ->\nrule: b B ->\nrule: B b ->\nrule: b b -> B\nrule: B B -> b\n";

    fn sys(text: &str) -> RewritingSystem {
        RewritingSystem::parse_validated(text).unwrap()
    }

    #[test]
    fn sizes() {
        let z = RewritingSystem::parse(Z).unwrap();
        assert_eq!((z.size_n(), z.max_rhs()), (6, 0));
        let g = RewritingSystem::parse(Z2Z3).unwrap();
        assert_eq!((g.size_n(), g.max_rhs()), (15, 1));
    }

    #[test]
    fn parse_errors() {
        let e = RewritingSystem::parse("letters: a\ninverse: a a\nrule: a -> a a\n").unwrap_err();
        assert!(matches!(e, ParseError::LengthNotReducing { line: 3, lhs: 1, rhs: 2 }));
        let e = RewritingSystem::parse("letters: a a\n").unwrap_err();
        assert!(matches!(e, ParseError::DuplicateToken { line: 1, .. }));
        let e = RewritingSystem::parse("letters: a A\ninverse: a A\nrule: a c ->\n").unwrap_err();
        assert!(matches!(e, ParseError::UnknownToken { line: 3, .. }));
        let e = RewritingSystem::parse("letters: a A\ninverse: a a\n").unwrap_err();
        assert!(matches!(e, ParseError::MissingInverse { .. }));
        let e = RewritingSystem::parse("letters: a A b\ninverse: a A\ninverse: a b\n").unwrap_err();
        assert!(matches!(e, ParseError::NonInvolutiveInverse { line: 3, .. }));
        let e = RewritingSystem::parse("letters: a A\nwhat\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 2, .. }));
        let e = RewritingSystem::parse("rule: a ->\nletters: a\n").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 1, .. }));
    }

    #[test]
    fn reduce_examples() {
        let z = sys(Z);
        assert_eq!(z.show(&z.reduce(&z.parse_word("a A a").unwrap())), "a");
        let g = sys(Z2Z3);
        assert!(g.reduce(&g.parse_word("b b b").unwrap()).is_empty());
        assert!(g.reduce(&g.parse_word("b B").unwrap()).is_empty());
    }

    #[test]
    fn convergence() {
        let z = sys(Z);
        let report = z.validate_convergent().unwrap();
        // aAa from aA/Aa, AaA from Aa/aA
        assert_eq!(report.pairs.len(), 2);
        assert!(report.pairs.iter().any(|p| z.format_word(&p.word) == "a A a"
            && z.format_word(&p.left_nf) == "a"));
        assert!(sys(Z2Z3).validate_convergent().unwrap().is_confluent());

        let bad = RewritingSystem::parse("letters: a b\ninverse: a a\ninverse: b b\nrule: a a -> b\nrule: a a ->\n")
            .unwrap();
        assert!(matches!(bad.validate_convergent(), Err(ValidationError::NonConfluent { .. })));
    }

    #[test]
    fn inverse_closure() {
        assert!(sys(Z).validate_inverse_closed().is_ok());
        assert!(sys(Z2Z3).validate_inverse_closed().is_ok());
        let rs = RewritingSystem::parse("letters: a b\ninverse: a b\nrule: a a ->\n").unwrap();
        assert_eq!(
            rs.validate_inverse_closed(),
            Err(ValidationError::NotInverseClosed { letter: "a".into() })
        );
    }

    #[test]
    fn word_problem_and_inverse() {
        let z = sys(Z);
        let w = |rs: &RewritingSystem, s: &str| rs.parse_word(s).unwrap();
        assert!(z.word_problem(&w(&z, "a a A"), &w(&z, "a")));
        let g = sys(Z2Z3);
        assert!(g.word_problem(&w(&g, "b b"), &w(&g, "B")));
        assert!(!g.word_problem(&w(&g, "t b"), &w(&g, "b t")));
        assert_eq!(z.show(&z.formal_inverse(&w(&z, "a a"))), "A A");
        assert_eq!(g.show(&g.formal_inverse(&w(&g, "t b"))), "B t");
        assert!(g.formal_inverse(&[]).is_empty());
    }

    #[test]
    fn random_strategy_matches() {
        let g = sys(Z2Z3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(0..12);
            let w: Vec<Letter> = (0..n).map(|_| Letter(rng.gen_range(0..3))).collect();
            assert_eq!(g.reduce_random(&w, &mut rng), g.reduce(&w));
        }
    }

    #[test]
    fn lrs_roundtrip() {
        let g = sys(Z2Z3);
        let again = RewritingSystem::parse(&g.to_lrs()).unwrap();
        assert_eq!(again.rules(), g.rules());
        assert_eq!(again.tokens(), g.tokens());
    }
}
