//! Certificates for isomorphic pairs and their text encoding.
//!
//! A certificate has three layers. The witness fixes generator lists `𝒜ᵢ` in
//! `G` and `ℬᵢ` in `H`, one pair per conjugacy class of maximal finite
//! subgroups. A challenge picks short words `u`, `v`, `s`, `s'` and one
//! straight-line sequence `Yᵢ` per pair. A response supplies conjugators `t`,
//! `t'` and straight-line sequences `Z₁`, `Z₂` spelling `u` and `v` over the
//! generators of the pair they belong to. The text encoding:
//!
//! ```text
//! [exist]
//! p 2
//! pair 1 m 1
//! a: f1_1
//! b: f2_1
//! ...
//! ```
//!
//! Challenges are `u:`, `v:`, `s:`, `s':` lines followed by `[slp i]` blocks
//! (1-based pair index); responses are `t:`, `t':`, `[slp Z1]` and
//! `[slp Z2]`. An empty word is written as nothing after the colon. A
//! certificate may carry recorded transcripts in `[respond]` sections.

use std::fmt::Write as _;

use thiserror::Error;

use super::{DeciderError, Decision, Evidence, Matching, SideAnalysis};
use crate::rewriting::{ParseError, RewritingSystem};
use crate::slp::{build_slp, SlpError, StraightLineSeq};
use crate::word::Word;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertificateError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Word { line: usize, source: ParseError },
    #[error("line {line}: {source}")]
    Slp { line: usize, source: SlpError },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct WitnessPair {
    pub a: Vec<Word>,
    pub b: Vec<Word>,
}

/// The outer existential layer.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExistWitness {
    pub pairs: Vec<WitnessPair>,
}

/// The universal layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniversalChallenge {
    pub u: Word,
    pub v: Word,
    pub s: Word,
    pub s_prime: Word,
    pub y: Vec<StraightLineSeq>,
}

/// The inner existential layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExistResponse {
    pub t: Word,
    pub t_prime: Word,
    pub z1: StraightLineSeq,
    pub z2: StraightLineSeq,
}

impl ExistWitness {
    pub fn p(&self) -> usize {
        self.pairs.len()
    }

    pub fn to_text(&self, g: &RewritingSystem, h: &RewritingSystem) -> String {
        let mut out = String::from("[exist]\n");
        let _ = writeln!(out, "p {}", self.pairs.len());
        for (i, pair) in self.pairs.iter().enumerate() {
            let _ = writeln!(out, "pair {} m {}", i + 1, pair.a.len());
            for a in &pair.a {
                let _ = writeln!(out, "a: {}", g.format_word(a));
            }
            for b in &pair.b {
                let _ = writeln!(out, "b: {}", h.format_word(b));
            }
        }
        trim_blank_values(out)
    }

    /// Parses the `[exist]` section; anything after it is ignored.
    pub fn parse(text: &str, g: &RewritingSystem, h: &RewritingSystem) -> Result<Self, CertificateError> {
        let mut lines = content_lines(text);
        let (line, first) = lines.next().ok_or_else(|| syntax(0, "empty certificate"))?;
        if first != "[exist]" {
            return Err(syntax(line, "expected `[exist]`"));
        }
        let (line, pl) = lines.next().ok_or_else(|| syntax(line, "missing `p` line"))?;
        let p = match pl.split_whitespace().collect::<Vec<_>>()[..] {
            ["p", n] => n.parse::<usize>().map_err(|_| syntax(line, "bad p"))?,
            _ => return Err(syntax(line, "expected `p N`")),
        };
        let mut pairs: Vec<WitnessPair> = Vec::new();
        let mut expect_m = 0;
        for (line, l) in lines {
            if l.starts_with('[') {
                break;
            }
            if let Some(rest) = l.strip_prefix("pair ") {
                let nums: Vec<&str> = rest.split_whitespace().collect();
                let (i, m) = match nums[..] {
                    [i, "m", m] => (
                        i.parse::<usize>().map_err(|_| syntax(line, "bad pair index"))?,
                        m.parse::<usize>().map_err(|_| syntax(line, "bad m"))?,
                    ),
                    _ => return Err(syntax(line, "expected `pair i m k`")),
                };
                check_pair_complete(&pairs, expect_m, line)?;
                if i != pairs.len() + 1 {
                    return Err(syntax(line, "pairs must be numbered 1, 2, …"));
                }
                pairs.push(WitnessPair::default());
                expect_m = m;
            } else if let Some(w) = field(l, "a") {
                let pair = pairs.last_mut().ok_or_else(|| syntax(line, "`a:` before any pair"))?;
                if !pair.b.is_empty() || pair.a.len() == expect_m {
                    return Err(syntax(line, "unexpected `a:` line"));
                }
                pair.a.push(parse_word(g, w, line)?);
            } else if let Some(w) = field(l, "b") {
                let pair = pairs.last_mut().ok_or_else(|| syntax(line, "`b:` before any pair"))?;
                if pair.a.len() != expect_m || pair.b.len() == expect_m {
                    return Err(syntax(line, "unexpected `b:` line"));
                }
                pair.b.push(parse_word(h, w, line)?);
            } else {
                return Err(syntax(line, "unrecognized line"));
            }
        }
        check_pair_complete(&pairs, expect_m, 0)?;
        if pairs.len() != p {
            return Err(syntax(0, &format!("p is {p} but {} pairs are listed", pairs.len())));
        }
        Ok(ExistWitness { pairs })
    }
}

impl UniversalChallenge {
    pub fn to_text(&self, g: &RewritingSystem, h: &RewritingSystem) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "u: {}", g.format_word(&self.u));
        let _ = writeln!(out, "v: {}", h.format_word(&self.v));
        let _ = writeln!(out, "s: {}", g.format_word(&self.s));
        let _ = writeln!(out, "s': {}", h.format_word(&self.s_prime));
        for (i, y) in self.y.iter().enumerate() {
            let _ = write!(out, "[slp {}]\n{y}", i + 1);
        }
        trim_blank_values(out)
    }

    pub fn parse(text: &str, g: &RewritingSystem, h: &RewritingSystem) -> Result<Self, CertificateError> {
        let blocks = blocks(text)?;
        let mut c = UniversalChallenge { u: Word::empty(), v: Word::empty(), s: Word::empty(), s_prime: Word::empty(), y: vec![] };
        let mut seen = [false; 4];
        for b in blocks {
            match b {
                Block::Field { line, key, value } => {
                    let (k, rs, slot) = match key.as_str() {
                        "u" => (0, g, &mut c.u),
                        "v" => (1, h, &mut c.v),
                        "s" => (2, g, &mut c.s),
                        "s'" => (3, h, &mut c.s_prime),
                        _ => return Err(syntax(line, &format!("unknown field `{key}`"))),
                    };
                    if seen[k] {
                        return Err(syntax(line, &format!("duplicate field `{key}`")));
                    }
                    seen[k] = true;
                    *slot = parse_word(rs, &value, line)?;
                }
                Block::Slp { line, name, seq } => {
                    if name != (c.y.len() + 1).to_string() {
                        return Err(syntax(line, "challenge sequences must be `[slp 1]`, `[slp 2]`, …"));
                    }
                    c.y.push(seq);
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(syntax(0, &format!("missing field `{}`", ["u", "v", "s", "s'"][k])));
        }
        Ok(c)
    }
}

impl ExistResponse {
    pub fn to_text(&self, g: &RewritingSystem, h: &RewritingSystem) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "t: {}", g.format_word(&self.t));
        let _ = writeln!(out, "t': {}", h.format_word(&self.t_prime));
        let _ = write!(out, "[slp Z1]\n{}[slp Z2]\n{}", self.z1, self.z2);
        trim_blank_values(out)
    }

    pub fn parse(text: &str, g: &RewritingSystem, h: &RewritingSystem) -> Result<Self, CertificateError> {
        let (mut t, mut tp, mut z1, mut z2) = (None, None, None, None);
        for b in blocks(text)? {
            match b {
                Block::Field { line, key, value } => match key.as_str() {
                    "t" if t.is_none() => t = Some(parse_word(g, &value, line)?),
                    "t'" if tp.is_none() => tp = Some(parse_word(h, &value, line)?),
                    _ => return Err(syntax(line, &format!("unexpected field `{key}`"))),
                },
                Block::Slp { line, name, seq } => match name.as_str() {
                    "Z1" if z1.is_none() => z1 = Some(seq),
                    "Z2" if z2.is_none() => z2 = Some(seq),
                    _ => return Err(syntax(line, &format!("unexpected sequence `{name}`"))),
                },
            }
        }
        let missing = |what: &str| syntax(0, &format!("missing {what}"));
        Ok(ExistResponse {
            t: t.ok_or_else(|| missing("`t:`"))?,
            t_prime: tp.ok_or_else(|| missing("`t':`"))?,
            z1: z1.ok_or_else(|| missing("`[slp Z1]`"))?,
            z2: z2.ok_or_else(|| missing("`[slp Z2]`"))?,
        })
    }
}

/// An honest prover for an isomorphic pair: the witness plus a responder.
pub struct Certificate<'s, 'a> {
    pub witness: ExistWitness,
    pub matching: Matching,
    g: &'s SideAnalysis<'a>,
    h: &'s SideAnalysis<'a>,
}

/// Builds the witness from a yes-decision: pair `i` holds the generators of
/// `G`'s class `i` and their images in the matched `H` class.
pub fn build_certificate<'s, 'a>(
    g: &'s SideAnalysis<'a>,
    h: &'s SideAnalysis<'a>,
    d: &Decision,
) -> Result<Certificate<'s, 'a>, DeciderError> {
    let Evidence::Isomorphic(m) = &d.evidence else {
        return Err(DeciderError::CertificateUnavailable);
    };
    let pairs = m.pairs.iter().map(|p| WitnessPair { a: p.a.clone(), b: p.b.clone() }).collect();
    Ok(Certificate { witness: ExistWitness { pairs }, matching: m.clone(), g, h })
}

impl Certificate<'_, '_> {
    /// The honest response: `t` conjugates `u` into the pair of its class and
    /// `Z₁` spells `u` over that pair's generators when `u` lies in it.
    pub fn respond(&self, y: &UniversalChallenge) -> ExistResponse {
        let a: Vec<&[Word]> = self.witness.pairs.iter().map(|p| p.a.as_slice()).collect();
        let b: Vec<&[Word]> = self.witness.pairs.iter().map(|p| p.b.as_slice()).collect();
        let g_classes: Vec<usize> = self.matching.pairs.iter().map(|p| p.g_class).collect();
        let h_classes: Vec<usize> = self.matching.pairs.iter().map(|p| p.h_class).collect();
        let (t, z1) = side_response(self.g, &g_classes, &a, &y.u);
        let (t_prime, z2) = side_response(self.h, &h_classes, &b, &y.v);
        ExistResponse { t, t_prime, z1, z2 }
    }

    /// The witness followed by recorded transcripts.
    pub fn to_text(&self, transcripts: &[(UniversalChallenge, ExistResponse)]) -> String {
        let (g, h) = (self.g.system(), self.h.system());
        let mut out = self.witness.to_text(g, h);
        for (y, z) in transcripts {
            out.push_str("[respond]\n");
            out.push_str(&y.to_text(g, h));
            out.push_str(&z.to_text(g, h));
        }
        out
    }
}

/// The `[respond]` transcripts recorded after the witness, in order.
pub fn parse_transcripts(
    text: &str,
    g: &RewritingSystem,
    h: &RewritingSystem,
) -> Result<Vec<(UniversalChallenge, ExistResponse)>, CertificateError> {
    let lines: Vec<&str> = text.lines().collect();
    let starts: Vec<usize> = (0..lines.len()).filter(|&i| lines[i].trim() == "[respond]").collect();
    let mut out = Vec::with_capacity(starts.len());
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(lines.len());
        let body = &lines[start + 1..end];
        let split = body
            .iter()
            .position(|l| field(l.trim(), "t").is_some())
            .ok_or_else(|| syntax(start + 1, "transcript has no `t:` line"))?;
        // keep line numbers meaningful by padding with blank lines
        let pad = |from: usize, part: &[&str]| "\n".repeat(from) + &part.join("\n");
        let y = UniversalChallenge::parse(&pad(start + 1, &body[..split]), g, h)?;
        let z = ExistResponse::parse(&pad(start + 1 + split, &body[split..]), g, h)?;
        out.push((y, z));
    }
    Ok(out)
}

fn side_response(
    side: &SideAnalysis<'_>,
    classes: &[usize],
    gens: &[&[Word]],
    u: &Word,
) -> (Word, StraightLineSeq) {
    let rs = side.system();
    let default_rank = gens.first().map_or(0, |g| g.len());
    let fallback = (Word::empty(), StraightLineSeq::identity(default_rank));
    let nf = rs.reduce(u);
    if nf.is_empty() {
        return fallback;
    }
    let Some((class, w)) = side.placement(&nf) else { return fallback };
    let Some(i) = classes.iter().position(|c| c == class) else { return fallback };
    // w·nf·w⁻¹ lies in the representative, so nf lies in t·A·t⁻¹ for t = w⁻¹
    let t = rs.reduce(&rs.formal_inverse(w));
    let rep = side.representative(*class);
    let z = if rep.contains(&nf) {
        build_slp(rs, rep, gens[i], &nf).unwrap_or_else(|_| StraightLineSeq::identity(gens[i].len()))
    } else {
        StraightLineSeq::identity(default_rank)
    };
    (t, z)
}

// ---- text helpers ----

fn syntax(line: usize, message: &str) -> CertificateError {
    CertificateError::Syntax { line, message: message.to_string() }
}

fn parse_word(rs: &RewritingSystem, text: &str, line: usize) -> Result<Word, CertificateError> {
    rs.parse_word(text).map_err(|source| CertificateError::Word { line, source })
}

fn field<'t>(line: &'t str, key: &str) -> Option<&'t str> {
    line.strip_prefix(key)?.strip_prefix(':').map(str::trim)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn check_pair_complete(pairs: &[WitnessPair], m: usize, line: usize) -> Result<(), CertificateError> {
    match pairs.last() {
        Some(p) if p.a.len() != m || p.b.len() != m => {
            Err(syntax(line, &format!("pair {} needs {m} `a:` and {m} `b:` lines", pairs.len())))
        }
        _ => Ok(()),
    }
}

// `u: ` with an empty word leaves a trailing space; drop it
fn trim_blank_values(text: String) -> String {
    text.lines().map(|l| format!("{}\n", l.trim_end())).collect()
}

enum Block {
    Field { line: usize, key: String, value: String },
    Slp { line: usize, name: String, seq: StraightLineSeq },
}

fn blocks(text: &str) -> Result<Vec<Block>, CertificateError> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String, String)> = None;
    let flush = |p: Option<(usize, String, String)>, out: &mut Vec<Block>| -> Result<(), CertificateError> {
        if let Some((line, name, body)) = p {
            let seq = StraightLineSeq::parse(&body).map_err(|source| match source {
                SlpError::Parse { line: l, message } => CertificateError::Syntax { line: line + l, message },
                source => CertificateError::Slp { line, source },
            })?;
            out.push(Block::Slp { line, name, seq });
        }
        Ok(())
    };
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        if l.starts_with('#') {
            continue;
        }
        if let Some(name) = l.strip_prefix("[slp ").and_then(|r| r.strip_suffix(']')) {
            flush(pending.take(), &mut out)?;
            pending = Some((line, name.trim().to_string(), String::new()));
        } else if let Some((key, value)) = l.split_once(':') {
            flush(pending.take(), &mut out)?;
            out.push(Block::Field { line, key: key.trim().to_string(), value: value.trim().to_string() });
        } else if let Some((_, _, body)) = pending.as_mut() {
            // blank lines inside a sequence are skipped by the sequence parser
            body.push_str(l);
            body.push('\n');
        } else if !l.is_empty() {
            return Err(syntax(line, "unrecognized line"));
        }
    }
    flush(pending, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decider::decide_analyzed;
    use crate::slp::evaluate;

    const Z2Z3: &str = "letters: t b B\ninverse: t t\ninverse: b B\n\
        rule: t t ->\nrule: b B ->\nrule: B b ->\nrule: b b -> B\nrule: B B -> b\n";
    const Z3Z2: &str = "letters: c C s\ninverse: c C\ninverse: s s\n\
        rule: c C ->\nrule: C c ->\nrule: c c -> C\nrule: C C -> c\nrule: s s ->\n";

    #[test]
    fn witness_roundtrip_and_response() {
        let g = RewritingSystem::parse_validated(Z2Z3).unwrap();
        let h = RewritingSystem::parse_validated(Z3Z2).unwrap();
        let (ga, ha) = (SideAnalysis::new(&g).unwrap(), SideAnalysis::new(&h).unwrap());
        let d = decide_analyzed(&ga, &ha);
        let cert = build_certificate(&ga, &ha, &d).unwrap();
        assert_eq!(cert.witness.p(), 2);
        assert!(cert.witness.pairs.iter().all(|p| p.a.len() == 1 && p.b.len() == 1));
        let text = cert.witness.to_text(&g, &h);
        assert_eq!(ExistWitness::parse(&text, &g, &h).unwrap(), cert.witness);

        let y = UniversalChallenge {
            u: g.parse_word("b").unwrap(),
            v: Word::empty(),
            s: Word::empty(),
            s_prime: Word::empty(),
            y: cert.witness.pairs.iter().map(|_| StraightLineSeq::identity(1)).collect(),
        };
        let z = cert.respond(&y);
        let i = cert.witness.pairs.iter().position(|p| p.a[0].len() == 1 && g.show(&p.a[0]) != "t").unwrap();
        assert_eq!(g.show(&evaluate(&g, &z.z1, &cert.witness.pairs[i].a, 3).unwrap()), "b");
        assert_eq!(UniversalChallenge::parse(&y.to_text(&g, &h), &g, &h).unwrap(), y);
        assert_eq!(ExistResponse::parse(&z.to_text(&g, &h), &g, &h).unwrap(), z);
    }

    #[test]
    fn no_certificate_for_no_instance() {
        let g = RewritingSystem::parse_validated(Z2Z3).unwrap();
        let z = RewritingSystem::parse_validated("letters: a A\ninverse: a A\nrule: a A ->\nrule: A a ->\n").unwrap();
        let (ga, za) = (SideAnalysis::new(&g).unwrap(), SideAnalysis::new(&z).unwrap());
        let d = decide_analyzed(&ga, &za);
        assert!(matches!(build_certificate(&ga, &za, &d), Err(DeciderError::CertificateUnavailable)));
    }

    #[test]
    fn malformed_text() {
        let g = RewritingSystem::parse_validated(Z2Z3).unwrap();
        assert!(ExistWitness::parse("p 1\n", &g, &g).is_err());
        assert!(ExistWitness::parse("[exist]\np 1\n", &g, &g).is_err());
        assert!(ExistWitness::parse("[exist]\np 1\npair 1 m 1\na: t\n", &g, &g).is_err());
        assert!(matches!(
            ExistWitness::parse("[exist]\np 1\npair 1 m 1\na: x\nb: t\n", &g, &g),
            Err(CertificateError::Word { line: 4, .. })
        ));
        assert!(UniversalChallenge::parse("u: t\nv:\ns:\n", &g, &g).is_err());
        assert!(ExistResponse::parse("t:\nt':\n[slp Z1]\nrank 1\nP 1 1\n[slp Z2]\nrank 0\nE\n", &g, &g).is_err());
    }
}
