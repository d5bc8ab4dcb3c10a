//! Plain groups presented by inverse-closed, finite, convergent,
//! length-reducing rewriting systems: normal forms, Cayley balls, finite-order
//! tests, maximal finite subgroups, abelianization rank, straight-line
//! programs, and an isomorphism decider with checkable certificates.

pub mod abelian;
pub mod balls;
pub mod decider;
pub mod genpresent;
pub mod rewriting;
pub mod slp;
pub mod subgroups;
pub mod word;

pub use balls::{ball, has_finite_order, Ball, BallError, OrderOracle, OrderResult};
pub use decider::{decide, Decision, DeciderError, Verdict, Verifier};
pub use genpresent::{gen_system, FiniteGroupTable, GenError, PlainSpec};
pub use rewriting::{ParseError, RewritingSystem, Rule, SystemError, ValidationError};
pub use slp::{build_slp, compressed_equal, evaluate, Instruction, SlpError, StraightLineSeq};
pub use subgroups::{finite_iso, ConjClass, FiniteSubgroup, SubgroupError, Torsion};
pub use word::{Letter, Word};
