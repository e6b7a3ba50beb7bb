mod common;

use ctcbias::decoder::{decode, DecodeConfig, EmissionMatrix};
use ctcbias::wfst::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exhaustive_decode, random_emissions, toy_system};

fn biases(sys: &common::ToySystem) -> Vec<ctcbias::biasing::BiasFst> {
    sys.class.iter().map(|(_, b)| b.clone()).collect()
}

#[test]
fn beam_free_decode_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let sys = toy_system(&mut rng);
        let frames = rng.gen_range(1..=4);
        let em = random_emissions(&mut rng, frames, 5);
        let (want, words) = exhaustive_decode(&sys, &em);
        let got = decode(&em, &sys.graph, &sys.g, &biases(&sys), &DecodeConfig::exhaustive()).unwrap();
        if want.is_finite() {
            let best = &got[0];
            assert!((best.cost - want).abs() < 1e-9, "{} vs {} ({:?} vs {:?})", best.cost, want, best.words, words);
        } else {
            assert!(got.is_empty() || got[0].cost.is_infinite());
        }
    }
}

fn one_hot(labels: &[Label], vocab: usize) -> EmissionMatrix {
    let mut costs = Vec::new();
    for &l in labels {
        for v in 1..=vocab as Label {
            costs.push(if v == l { 0.0 } else { 30.0 });
        }
    }
    EmissionMatrix::new(labels.len(), vocab, costs).unwrap()
}

#[test]
fn entity_is_recovered_through_bias_fst() {
    use ctcbias::biasing::{build_bias, build_gc, build_lc, EntityList, LcConfig, PronLexicon};
    use ctcbias::decoder::build_decoding_graph;
    use ctcbias::ngram::{train_ngram, TrainConfig};
    use ctcbias::tokenize::{build_l, build_t, NormConfig, WordpieceModel};

    let wp = WordpieceModel::new(["▁a", "▁b", "a", "b"]).unwrap();
    let corpus = vec![vec!["a", "@C"], vec!["b"], vec!["a", "b"]];
    let g = train_ngram(&corpus, &TrainConfig::new(2)).unwrap();
    let g_uni = train_ngram(&corpus, &TrainConfig::new(1)).unwrap();
    let t = build_t(&wp, None, &NormConfig::unnormalized(), false).unwrap();
    let l = build_l(&wp, g.vocab(), &["@C".to_string()]).unwrap();
    let graph = build_decoding_graph(&t, &l, &g_uni).unwrap();
    let list = EntityList::new("@C", ["bab", "ba"]).unwrap();
    let lc = build_lc(&list, &wp, &PronLexicon::new(), None, None, &LcConfig::default()).unwrap();
    let bias = build_bias(&lc, &build_gc(&list).unwrap(), &list).unwrap();
    // ▁a ▁b a b
    let blank = 1;
    let id = |p: &str| wp.id(p).unwrap();
    let em = one_hot(&[id("▁a"), blank, id("▁b"), id("a"), id("b")], 5);
    let hyps = decode(&em, &graph, &g, &[bias], &DecodeConfig::default()).unwrap();
    assert_eq!(hyps[0].words, vec!["a", "bab"]);
    assert_eq!(hyps[0].lm_tokens, vec!["a", "@C"]);
    assert_eq!(hyps[0].pieces, vec!["▁a", "▁b", "a", "b"]);
}

#[test]
fn missing_bias_is_an_error() {
    use ctcbias::decoder::build_decoding_graph;
    use ctcbias::ngram::{train_ngram, TrainConfig};
    use ctcbias::tokenize::{build_l, build_t, NormConfig, WordpieceModel};

    let wp = WordpieceModel::new(["▁a"]).unwrap();
    let corpus = vec![vec!["a", "@C"]];
    let g = train_ngram(&corpus, &TrainConfig::new(2)).unwrap();
    let t = build_t(&wp, None, &NormConfig::unnormalized(), false).unwrap();
    let l = build_l(&wp, g.vocab(), &["@C".to_string()]).unwrap();
    let graph = build_decoding_graph(&t, &l, &g).unwrap();
    let em = one_hot(&[2], 2);
    assert!(decode(&em, &graph, &g, &[], &DecodeConfig::default()).is_err());
}

#[test]
fn wrong_emission_width_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sys = toy_system(&mut rng);
    let em = random_emissions(&mut rng, 2, 3);
    assert!(decode(&em, &sys.graph, &sys.g, &biases(&sys), &DecodeConfig::default()).is_err());
}

#[test]
fn nbest_outputs_are_distinct_and_sorted() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = DecodeConfig {
        nbest: 5,
        ..DecodeConfig::exhaustive()
    };
    for _ in 0..20 {
        let sys = toy_system(&mut rng);
        let em = random_emissions(&mut rng, 4, 5);
        let hyps = decode(&em, &sys.graph, &sys.g, &biases(&sys), &cfg).unwrap();
        for w in hyps.windows(2) {
            assert!(w[0].cost <= w[1].cost);
            assert_ne!(w[0].words, w[1].words);
        }
    }
}

#[test]
fn lm_delta_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sys = toy_system(&mut rng);
    let em = random_emissions(&mut rng, 3, 5);
    let plain = decode(&em, &sys.graph, &sys.g, &biases(&sys), &DecodeConfig::exhaustive()).unwrap();
    let cfg = DecodeConfig {
        lm_scale: 0.0,
        ..DecodeConfig::exhaustive()
    };
    let off = decode(&em, &sys.graph, &sys.g, &biases(&sys), &cfg).unwrap();
    assert_eq!(off[0].lm_delta, 0.0);
    assert!(plain[0].lm_delta.is_finite());
}
