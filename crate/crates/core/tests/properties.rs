//! Algebraic invariants over generated systems and random data.

use std::collections::HashSet;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plaingroups::abelian::{exponent_matrix, smith_normal_form, torsion_free_rank};
use plaingroups::decider::{build_certificate, decide, decide_analyzed, ExistWitness, SideAnalysis, UniversalChallenge};
use plaingroups::genpresent::{disguise, gen_system, ground_truth_iso, standard_factors, FiniteGroupTable, PlainSpec};
use plaingroups::slp::{evaluate, reachability_bound, StraightLineSeq};
use plaingroups::{Ball, Letter, OrderOracle, OrderResult, RewritingSystem, Word};

fn spec_strategy(max_factors: usize, max_rank: usize) -> impl Strategy<Value = PlainSpec> {
    let n = standard_factors().len();
    (prop::collection::vec(0..n, 0..=max_factors), 0..=max_rank)
        .prop_filter("not trivial", |(f, r)| !f.is_empty() || *r > 0)
        .prop_map(|(f, r)| {
            let pool = standard_factors();
            PlainSpec::new(f.into_iter().map(|i| pool[i].1.clone()).collect(), r)
        })
}

fn system_and_words(k: usize) -> impl Strategy<Value = (RewritingSystem, Vec<Vec<Letter>>)> {
    spec_strategy(3, 2).prop_flat_map(move |spec| {
        let rs = gen_system(&spec).unwrap();
        let n = rs.alphabet_len() as u32;
        let words = prop::collection::vec(prop::collection::vec((0..n).prop_map(Letter), 0..16), k);
        (Just(rs), words)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_is_idempotent_and_shortening((rs, ws) in system_and_words(4)) {
        for w in &ws {
            let nf = rs.reduce(w);
            prop_assert_eq!(rs.reduce(&nf), nf.clone());
            prop_assert!(rs.is_irreducible(&nf));
            prop_assert!(nf.len() <= w.len());
        }
    }

    #[test]
    fn formal_inverse_cancels((rs, ws) in system_and_words(3)) {
        for w in &ws {
            let inv = rs.formal_inverse(w);
            prop_assert!(rs.multiply(w, &inv).is_empty());
            prop_assert!(rs.multiply(&inv, w).is_empty());
            prop_assert_eq!(rs.formal_inverse(&inv).to_vec(), w.clone());
        }
    }

    #[test]
    fn multiplication_is_associative((rs, ws) in system_and_words(3)) {
        let (a, b, c) = (&ws[0], &ws[1], &ws[2]);
        prop_assert_eq!(rs.multiply(&rs.multiply(a, b), c), rs.multiply(a, &rs.multiply(b, c)));
    }

    #[test]
    fn rewriting_order_does_not_matter((rs, ws) in system_and_words(4), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &ws {
            prop_assert_eq!(rs.reduce_random(w, &mut rng), rs.reduce(w));
        }
    }

    #[test]
    fn balls_are_nested_spheres_of_normal_forms(spec in spec_strategy(2, 2), r in 0usize..4) {
        let rs = gen_system(&spec).unwrap();
        let big = Ball::build(&rs, r + 1, 1_000_000).unwrap();
        let small = Ball::build(&rs, r, 1_000_000).unwrap();
        prop_assert!(small.elements().iter().all(|w| big.contains(w)));
        for k in 0..=r + 1 {
            prop_assert!(big.sphere(k).iter().all(|w| w.len() == k && rs.is_irreducible(w)));
        }
        // every element one letter further out is in the next sphere or closer
        for w in small.elements() {
            for l in rs.letters() {
                let x = rs.multiply(w, &[l]);
                prop_assert!(big.contains(&x));
            }
        }
    }

    #[test]
    fn orders_divide_factor_orders(spec in spec_strategy(2, 1)) {
        let rs = gen_system(&spec).unwrap();
        let oracle = OrderOracle::new(&rs).unwrap();
        // every single letter of factor k has order dividing |A_k|
        for l in rs.letters() {
            let tok = rs.token(l);
            match oracle.order(&[l]) {
                OrderResult::Finite(o) => {
                    prop_assert!(tok.starts_with('f'));
                    let k: usize = tok[1..tok.find('_').unwrap()].parse().unwrap();
                    prop_assert_eq!(spec.factors[k - 1].order() as u64 % o, 0);
                }
                OrderResult::Infinite => prop_assert!(tok.starts_with('z')),
            }
        }
    }

    #[test]
    fn smith_forms_certify(rows in 0usize..5, cols in 0usize..5, cells in prop::collection::vec(-20i64..=20, 25)) {
        let m: Vec<Vec<i64>> = (0..rows).map(|i| cells[i * 5..i * 5 + cols].to_vec()).collect();
        let s = smith_normal_form(&m, cols);
        prop_assert!(s.certifies(&m, cols));
    }

    #[test]
    fn rank_is_the_free_rank(spec in spec_strategy(3, 3)) {
        let rs = gen_system(&spec).unwrap();
        prop_assert_eq!(torsion_free_rank(&rs), spec.free_rank);
        prop_assert_eq!(exponent_matrix(&rs).rows.len(), rs.rules().len());
    }

    #[test]
    fn product_lengths_add(m in 1usize..4, a in 1usize..30, b in 1usize..30, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = StraightLineSeq::random(m, a, &mut rng);
        let q = StraightLineSeq::random(m, b, &mut rng);
        let pq = p.product(&q).unwrap();
        prop_assert_eq!(pq.len(), a + b + 1);
        prop_assert_eq!(pq.yield_len(), p.yield_len() + q.yield_len());
    }

    #[test]
    fn slp_text_round_trips(m in 1usize..4, len in 1usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = StraightLineSeq::random(m, len, &mut rng);
        prop_assert_eq!(StraightLineSeq::parse(&y.to_string()).unwrap(), y);
    }

    #[test]
    fn powers_evaluate_to_repeated_words(e in -40i64..=40) {
        let z = gen_system(&PlainSpec::new(vec![], 1)).unwrap();
        let a = Word::single(Letter(0));
        let y = StraightLineSeq::power(1, 0, e).unwrap();
        let v = evaluate(&z, &y, &[a], 64).unwrap();
        let want = if e >= 0 { Letter(0) } else { z.inverse_letter(Letter(0)) };
        prop_assert_eq!(v.len() as i64, e.abs());
        prop_assert!(v.iter().all(|&l| l == want));
    }

    #[test]
    fn lrs_and_fp_round_trip(spec in spec_strategy(3, 2)) {
        prop_assert_eq!(PlainSpec::parse(&spec.to_fp()).unwrap(), spec.clone());
        let rs = gen_system(&spec).unwrap();
        let back = RewritingSystem::parse_validated(&rs.to_lrs()).unwrap();
        prop_assert_eq!(back.to_lrs(), rs.to_lrs());
    }

    #[test]
    fn relabelled_tables_stay_isomorphic(i in 0usize..9, seed in any::<u64>()) {
        let t = standard_factors()[i].1.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = PlainSpec::new(vec![t], 0);
        let copy = disguise(&spec, &mut rng);
        prop_assert!(ground_truth_iso(&spec, &copy));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decisions_are_reflexive_and_symmetric(a in spec_strategy(2, 2), b in spec_strategy(2, 2), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, h) = (gen_system(&a).unwrap(), gen_system(&b).unwrap());
        let g2 = gen_system(&disguise(&a, &mut rng)).unwrap();
        prop_assert!(decide(&g, &g2).unwrap().isomorphic);
        let gh = decide(&g, &h).unwrap().isomorphic;
        prop_assert_eq!(gh, decide(&h, &g).unwrap().isomorphic);
        prop_assert_eq!(gh, ground_truth_iso(&a, &b));
    }

    #[test]
    fn ball_subgroups_are_closed_and_generated(spec in spec_strategy(2, 1)) {
        let rs = gen_system(&spec).unwrap();
        let side = SideAnalysis::new(&rs).unwrap();
        prop_assert_eq!(side.class_count(), spec.factors.len());
        for s in &side.subgroups {
            let all: HashSet<Word> = s.elements().iter().cloned().collect();
            for x in s.elements() {
                for y in s.elements() {
                    prop_assert!(all.contains(&rs.multiply(x, y)));
                }
            }
            prop_assert_eq!(s.closure(s.gen_indices()).len(), s.order());
            prop_assert!(s.gen_indices().len() as f64 <= (s.order() as f64).log2() + 1.0 + 1e-9);
        }
    }

    #[test]
    fn class_representatives_match_factors(spec in spec_strategy(3, 1)) {
        let rs = gen_system(&spec).unwrap();
        let side = SideAnalysis::new(&rs).unwrap();
        let mut used = vec![false; spec.factors.len()];
        for c in 0..side.class_count() {
            let rep = side.representative(c);
            let table: Vec<Vec<usize>> = (0..rep.order()).map(|i| (0..rep.order()).map(|j| rep.mul(i, j)).collect()).collect();
            let t = FiniteGroupTable::new(table).unwrap();
            let j = (0..spec.factors.len()).find(|&j| !used[j] && plaingroups::genpresent::tables_isomorphic(&t, &spec.factors[j]));
            prop_assert!(j.is_some());
            used[j.unwrap()] = true;
        }
    }

    #[test]
    fn certificate_text_round_trips(a in spec_strategy(2, 1), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = disguise(&a, &mut rng);
        let (g, h) = (gen_system(&a).unwrap(), gen_system(&b).unwrap());
        let (ga, ha) = (SideAnalysis::new(&g).unwrap(), SideAnalysis::new(&h).unwrap());
        let d = decide_analyzed(&ga, &ha);
        let cert = build_certificate(&ga, &ha, &d).unwrap();
        let x = ExistWitness::parse(&cert.witness.to_text(&g, &h), &g, &h).unwrap();
        prop_assert_eq!(&x, &cert.witness);
        let v = plaingroups::decider::Verifier::new(&g, &h).unwrap();
        let sampler = plaingroups::decider::ChallengeSampler::new(&v, &x);
        for _ in 0..8 {
            let y = sampler.sample(&mut rng);
            let z = cert.respond(&y);
            prop_assert_eq!(UniversalChallenge::parse(&y.to_text(&g, &h), &g, &h).unwrap(), y.clone());
            prop_assert!(v.verify(&x, &y, &z).is_accepted());
        }
    }
}

#[test]
fn reachability_bound_values() -> Result<(), TestCaseError> {
    // (log₂ n + 1)² for powers of two
    for (n, want) in [(1, 1), (2, 4), (4, 9), (8, 16), (16, 25)] {
        prop_assert_eq!(reachability_bound(n), want);
    }
    Ok(())
}
