//! Isomorphism decision for two plain groups.
//!
//! Two plain groups are isomorphic iff their abelianizations have the same
//! torsion-free rank and their maximal finite subgroups fall into the same
//! number of conjugacy classes with pairwise isomorphic representatives. The
//! decider checks exactly that, in that order, and keeps the data needed to
//! produce a checkable certificate ([`certificate`]) that [`verify`] can audit.

pub mod certificate;
pub mod verify;

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::abelian::torsion_free_rank;
use crate::rewriting::RewritingSystem;
use crate::subgroups::{
    finite_iso, Classification, FiniteSubgroup, SubgroupError, Torsion, DEFAULT_CONJUGATOR_BALL_CAP,
};
use crate::word::Word;

pub use certificate::{build_certificate, parse_transcripts, CertificateError, Certificate, ExistResponse, ExistWitness, UniversalChallenge};
pub use verify::{verify_predicate, ChallengeSampler, ResponseSearch, Step, Verdict, Verifier};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeciderError {
    #[error("system has not been validated as convergent and inverse-closed")]
    NotValidated,
    #[error(transparent)]
    Subgroup(#[from] SubgroupError),
    #[error("no certificate exists for a no-instance")]
    CertificateUnavailable,
}

/// Everything the decider learns about one group.
pub struct SideAnalysis<'a> {
    pub torsion: Torsion<'a>,
    pub subgroups: Vec<FiniteSubgroup>,
    pub classification: Classification,
    pub rank: usize,
    // nontrivial ball subgroup element -> (class, conjugator into the representative)
    placement: HashMap<Word, (usize, Word)>,
}

impl<'a> SideAnalysis<'a> {
    pub fn new(rs: &'a RewritingSystem) -> Result<Self, DeciderError> {
        Self::with_conjugator_cap(rs, DEFAULT_CONJUGATOR_BALL_CAP)
    }

    pub fn with_conjugator_cap(rs: &'a RewritingSystem, cap: usize) -> Result<Self, DeciderError> {
        if !rs.is_validated() {
            return Err(DeciderError::NotValidated);
        }
        let rank = torsion_free_rank(rs);
        let torsion = Torsion::new(rs)?;
        let subgroups = torsion.enumerate_maximal()?;
        let classification = torsion.conjugacy_classes(&subgroups, cap)?;
        let mut placement = HashMap::new();
        for (c, class) in classification.classes.iter().enumerate() {
            for (m, t) in &class.members {
                for e in &m.elements()[1..] {
                    placement.insert(e.clone(), (c, t.clone()));
                }
            }
        }
        Ok(SideAnalysis { torsion, subgroups, classification, rank, placement })
    }

    pub fn system(&self) -> &'a RewritingSystem {
        self.torsion.system()
    }

    pub fn class_count(&self) -> usize {
        self.classification.classes.len()
    }

    pub fn representative(&self, class: usize) -> &FiniteSubgroup {
        &self.classification.classes[class].representative
    }

    /// For a nontrivial finite-order element of `B(r_T + 2)`: its class and a
    /// conjugator `w` with `w·g·w⁻¹` in that class's representative.
    pub fn placement(&self, nf: &Word) -> Option<&(usize, Word)> {
        self.placement.get(nf)
    }
}

/// Images of one side's class representatives in the other.
#[derive(Clone, Debug, Serialize)]
pub struct FactorPair {
    pub g_class: usize,
    pub h_class: usize,
    pub order: usize,
    /// Generators of the `G` representative.
    pub a: Vec<Word>,
    /// Their images under an isomorphism onto the `H` representative.
    pub b: Vec<Word>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Matching {
    pub rank: usize,
    /// `sigma[i]` is the `H` class matched with `G` class `i`.
    pub sigma: Vec<usize>,
    pub pairs: Vec<FactorPair>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// Different torsion-free ranks of the abelianizations.
    RankMismatch { g: usize, h: usize },
    /// Different numbers of conjugacy classes of maximal finite subgroups.
    ClassCountMismatch { g: usize, h: usize },
    /// No isomorphism-respecting matching of class representatives; `g_class`
    /// has no partner among the `H` classes left over.
    NoFactorMatching { g_class: usize, g_order: usize, g_orders: Vec<usize>, h_orders: Vec<usize> },
}

impl Violation {
    /// The failing condition of the isomorphism checklist.
    pub fn condition(&self) -> &'static str {
        match self {
            Violation::RankMismatch { .. } => "condition5",
            Violation::ClassCountMismatch { .. } => "condition3",
            Violation::NoFactorMatching { .. } => "condition4",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum Evidence {
    Isomorphic(Matching),
    NotIsomorphic(Violation),
}

#[derive(Clone, Debug, Serialize)]
pub struct Decision {
    pub isomorphic: bool,
    pub evidence: Evidence,
}

impl Decision {
    pub fn violation(&self) -> Option<&Violation> {
        match &self.evidence {
            Evidence::NotIsomorphic(v) => Some(v),
            Evidence::Isomorphic(_) => None,
        }
    }

    pub fn matching(&self) -> Option<&Matching> {
        match &self.evidence {
            Evidence::Isomorphic(m) => Some(m),
            Evidence::NotIsomorphic(_) => None,
        }
    }

    fn no(v: Violation) -> Self {
        Decision { isomorphic: false, evidence: Evidence::NotIsomorphic(v) }
    }
}

/// Decides `G ≅ H`; the rank comparison runs before any subgroup work.
pub fn decide(g: &RewritingSystem, h: &RewritingSystem) -> Result<Decision, DeciderError> {
    if !g.is_validated() || !h.is_validated() {
        return Err(DeciderError::NotValidated);
    }
    let (rg, rh) = (torsion_free_rank(g), torsion_free_rank(h));
    if rg != rh {
        return Ok(Decision::no(Violation::RankMismatch { g: rg, h: rh }));
    }
    let ga = SideAnalysis::new(g)?;
    let ha = SideAnalysis::new(h)?;
    Ok(decide_analyzed(&ga, &ha))
}

pub fn decide_analyzed(ga: &SideAnalysis<'_>, ha: &SideAnalysis<'_>) -> Decision {
    if ga.rank != ha.rank {
        return Decision::no(Violation::RankMismatch { g: ga.rank, h: ha.rank });
    }
    let (p, q) = (ga.class_count(), ha.class_count());
    if p != q {
        return Decision::no(Violation::ClassCountMismatch { g: p, h: q });
    }
    let reps_g: Vec<&FiniteSubgroup> = (0..p).map(|i| ga.representative(i)).collect();
    let reps_h: Vec<&FiniteSubgroup> = (0..q).map(|i| ha.representative(i)).collect();
    let mut sigma = Vec::with_capacity(p);
    let mut images = Vec::with_capacity(p);
    let mut used = vec![false; q];
    if match_classes(&reps_g, &reps_h, &mut used, &mut sigma, &mut images) {
        let pairs = sigma
            .iter()
            .zip(images)
            .enumerate()
            .map(|(i, (&j, img))| FactorPair {
                g_class: i,
                h_class: j,
                order: reps_g[i].order(),
                a: reps_g[i].gens(),
                b: img.iter().map(|&k: &usize| reps_h[j].element(k).clone()).collect(),
            })
            .collect();
        return Decision { isomorphic: true, evidence: Evidence::Isomorphic(Matching { rank: ga.rank, sigma, pairs }) };
    }
    let g_class = (0..p)
        .find(|&i| reps_h.iter().all(|b| finite_iso(reps_g[i], b).is_none()))
        .unwrap_or(0);
    Decision::no(Violation::NoFactorMatching {
        g_class,
        g_order: reps_g[g_class].order(),
        g_orders: reps_g.iter().map(|r| r.order()).collect(),
        h_orders: reps_h.iter().map(|r| r.order()).collect(),
    })
}

// Backtracking; H candidates are tried by order, then by element list.
fn match_classes(
    g: &[&FiniteSubgroup],
    h: &[&FiniteSubgroup],
    used: &mut [bool],
    sigma: &mut Vec<usize>,
    images: &mut Vec<Vec<usize>>,
) -> bool {
    let i = sigma.len();
    if i == g.len() {
        return true;
    }
    for j in 0..h.len() {
        if used[j] {
            continue;
        }
        if let Some(img) = finite_iso(g[i], h[j]) {
            used[j] = true;
            sigma.push(j);
            images.push(img);
            if match_classes(g, h, used, sigma, images) {
                return true;
            }
            used[j] = false;
            sigma.pop();
            images.pop();
        }
    }
    false
}
