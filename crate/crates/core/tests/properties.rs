mod common;

use ccg_nca::ccg::{cky_parse, Supervisor};
use ccg_nca::error::Error;
use ccg_nca::lexical::tokenize;
use ccg_nca::lf::{lf_to_edges, parse_lf};
use ccg_nca::neural::model::{NcaConfig, NcaModel};
use ccg_nca::neural::nca::{nca_step, predict, readout, rollout, BatchInput};
use ccg_nca::training::trajectorize;
use common::{cone_violation, inference_is_deterministic, random_state, rollout_composes, small_corpus};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(seed: u64) -> NcaModel {
    NcaModel::new(NcaConfig::test_scale(25, 6, 9), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn influence_stays_inside_the_cone(seed in 0u64..1000, len in 2usize..14, t in prop::sample::select(vec![1usize, 3, 5])) {
        let m = model(seed);
        prop_assert_eq!(cone_violation(&m, len, t, seed ^ 0x5eed), None);
    }

    #[test]
    fn rollout_is_repeated_step(seed in 0u64..1000, len in 1usize..10, t in 1usize..8) {
        let m = model(seed);
        let s = random_state(&m, 2, len, seed);
        prop_assert_eq!(rollout(&m.params, &s, len, 1), nca_step(&m.params, &s, len));
        prop_assert!(rollout_composes(&m, &s, len, t));
    }

    #[test]
    fn readout_is_row_local(seed in 0u64..1000, len in 2usize..10, row in 0usize..10) {
        let m = model(seed);
        let s = random_state(&m, 1, len, seed);
        let row = row % len;
        let mut bumped = s.clone();
        bumped.row_mut(row).mapv_inplace(|v| v * -2.0 + 0.1);
        let (a, b) = (readout(&m.params, &s), readout(&m.params, &bumped));
        for i in 0..len {
            prop_assert_eq!(a.row(i) == b.row(i), i != row);
        }
    }

    #[test]
    fn inference_ignores_noise(seed in 0u64..1000, ids in prop::collection::vec(0usize..9, 1..12)) {
        let m = model(seed);
        let input = BatchInput { len: ids.len(), ids, vectors: None };
        prop_assert!(inference_is_deterministic(&m, &input));
        prop_assert_eq!(predict(&m, &input, 4), predict(&m, &input, 4));
    }

    /// Conjunct order never changes the edge set or the trajectory.
    #[test]
    fn lf_conjunct_order_is_irrelevant(corpus_seed in 0u64..50, pick in 0usize..60, shuffle in 0u64..1000) {
        let (train, _) = small_corpus(60, 1, corpus_seed);
        let e = &train[pick % train.len()];
        let (prefix, body) = match e.lf_text.rfind(';') {
            Some(i) => (&e.lf_text[..=i], &e.lf_text[i + 1..]),
            None => ("", e.lf_text.as_str()),
        };
        let mut conjuncts: Vec<&str> = body.split(" AND ").map(str::trim).collect();
        conjuncts.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let permuted = format!("{prefix} {}", conjuncts.join(" AND "));
        let tokens = tokenize(&e.sentence);
        let a = lf_to_edges(&parse_lf(&e.lf_text).unwrap(), &tokens).unwrap();
        let b = lf_to_edges(&parse_lf(&permuted).unwrap(), &tokens).unwrap();
        prop_assert_eq!(&a.edges, &b.edges);
        let sup = Supervisor::default();
        let ta = sup.build_trajectory(&e.sentence, &e.lf_text).unwrap();
        let tb = sup.build_trajectory(&e.sentence, &permuted).unwrap();
        prop_assert_eq!(ta.initial_types, tb.initial_types);
        prop_assert_eq!(ta.final_types, tb.final_types);
    }

    /// Any derivation CKY returns re-checks rule by rule, and its leaves are the input.
    #[test]
    fn cky_derivations_are_sound(types in prop::collection::vec(0usize..24, 1..9)) {
        let sup = Supervisor::default();
        let ids: Vec<_> = types.iter().map(|&i| sup.table.iter().nth(i).unwrap().id).collect();
        match cky_parse(&ids, &sup.table) {
            Ok(d) => {
                prop_assert!(d.verify(&sup.table));
                prop_assert!(d.directions_ok());
                prop_assert_eq!(&d.leaf_types, &ids);
                prop_assert_eq!(d.root_node().span, (0, ids.len()));
            }
            Err(Error::NoParse(_)) | Err(Error::AmbiguousParse { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn gold_derivations_are_sound_and_recover_edges() {
    let sup = Supervisor::default();
    let (train, gen) = small_corpus(400, 50, 9);
    let all: Vec<_> = train.into_iter().chain(gen).collect();
    for (e, t) in all.iter().zip(trajectorize(&sup, &all, 1)) {
        let t = t.unwrap_or_else(|err| panic!("{}: {err}", e.sentence));
        assert!(t.derivation.verify(&sup.table), "{}", e.sentence);
        assert_eq!(
            sup.edges_for(&t.initial_types, &t).unwrap(),
            t.gold_edges,
            "{}",
            e.sentence
        );
    }
}

#[test]
fn synthetic_train_set_has_no_ambiguous_parse() {
    let sup = Supervisor::default();
    let (train, _) = small_corpus(3000, 1, 0);
    let ambiguous = trajectorize(&sup, &train, 0)
        .into_iter()
        .filter(|t| matches!(t, Err(Error::AmbiguousParse { .. })))
        .count();
    assert_eq!(ambiguous, 0);
}

#[test]
fn activations_stay_finite_for_long_rollouts() {
    let m = NcaModel::new(NcaConfig::new(32, 64, 128, 25, 16, 30), 4).unwrap();
    let s = random_state(&m, 3, 20, 1).mapv(|v| v * 50.0);
    assert!(rollout(&m.params, &s, 20, 60).iter().all(|v| v.is_finite()));
}
