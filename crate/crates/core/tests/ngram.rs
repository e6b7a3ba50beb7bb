mod common;

use ctcbias::ngram::{
    apply_class_spans, entropy_prune, prior_table, prune_delta, read_arpa, train_ngram, train_weighted,
    write_arpa, ClassSpan, NgramModel, TrainConfig, BOS_ID,
};
use ctcbias::tokenize::WordpieceModel;
use ctcbias::wfst::Label;
use proptest::prelude::*;

use common::{brute_force_delta, sentence_cost};

const FIVE_LINES: [&str; 5] = ["a b c", "a b", "b c a", "c a b c", "a c d"];

fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
    lines
        .iter()
        .map(|s| s.split_whitespace().map(String::from).collect())
        .collect()
}

fn max_norm_error(m: &NgramModel) -> f64 {
    let mut worst: f64 = 0.0;
    let mut hs = m.histories();
    hs.push(vec![BOS_ID]);
    for h in hs {
        let s: f64 = m.predictable().map(|w| m.prob(&h, w).exp()).sum();
        worst = worst.max((s - 1.0).abs());
    }
    worst
}

#[test]
fn trained_models_are_normalized() {
    for order in 1..=4 {
        let m = train_ngram(&corpus(&FIVE_LINES), &TrainConfig::new(order)).unwrap();
        assert!(max_norm_error(&m) < 1e-6, "order {order}");
        for t in [1e-4, 1e-2, 1.0] {
            let p = entropy_prune(&m, t).unwrap();
            assert!(max_norm_error(&p) < 1e-6, "order {order} threshold {t}");
        }
    }
}

#[test]
fn closed_form_delta_matches_brute_force() {
    for order in 2..=3 {
        let m = train_ngram(&corpus(&FIVE_LINES), &TrainConfig::new(order)).unwrap();
        for (k, e) in m.ngrams(order) {
            if e.backoff.is_some() {
                continue;
            }
            let a = prune_delta(&m, k);
            let b = brute_force_delta(&m, k);
            assert!((a - b).abs() < 1e-9, "{k:?}: {a} vs {b}");
        }
    }
}

fn thresholds(deltas: &[f64]) -> Vec<f64> {
    let mut d = deltas.to_vec();
    d.sort_by(f64::total_cmp);
    d.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    d.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

#[test]
fn pruned_membership_matches_recomputed_deltas() {
    // Bigram: one pruning pass, fully checked.
    let m = train_ngram(&corpus(&FIVE_LINES), &TrainConfig::new(2)).unwrap();
    let deltas: Vec<(Vec<Label>, f64)> = m.ngrams(2).map(|(k, _)| (k.clone(), brute_force_delta(&m, k))).collect();
    let ds: Vec<f64> = deltas.iter().map(|d| d.1).collect();
    for t in thresholds(&ds) {
        let p = entropy_prune(&m, t).unwrap();
        for (k, d) in &deltas {
            assert_eq!(p.entry(k).is_some(), *d >= t, "{k:?} delta {d} threshold {t}");
        }
    }
    // Trigram: the highest order is pruned first against the full model.
    let m = train_ngram(&corpus(&FIVE_LINES), &TrainConfig::new(3)).unwrap();
    let deltas: Vec<(Vec<Label>, f64)> = m.ngrams(3).map(|(k, _)| (k.clone(), brute_force_delta(&m, k))).collect();
    let ds: Vec<f64> = deltas.iter().map(|d| d.1).collect();
    for t in thresholds(&ds) {
        let p = entropy_prune(&m, t).unwrap();
        for (k, d) in &deltas {
            assert_eq!(p.entry(k).is_some(), *d >= t, "{k:?} delta {d} threshold {t}");
        }
    }
}

#[test]
fn zero_threshold_prunes_nothing() {
    for order in 1..=4 {
        let m = train_ngram(&corpus(&FIVE_LINES), &TrainConfig::new(order)).unwrap();
        let p = entropy_prune(&m, 0.0).unwrap();
        assert_eq!(write_arpa(&p), write_arpa(&m));
    }
}

#[test]
fn arpa_round_trip_through_a_file() {
    let m = train_ngram(&corpus(&FIVE_LINES), &TrainConfig::new(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lm.arpa");
    std::fs::write(&path, write_arpa(&m)).unwrap();
    let back = read_arpa(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let s: Vec<Label> = ["a", "b", "c"].iter().map(|t| m.token_id(t)).collect();
    let s2: Vec<Label> = ["a", "b", "c"].iter().map(|t| back.token_id(t)).collect();
    // Six decimals of log10 per value.
    assert!((m.sentence_logprob(&s) - back.sentence_logprob(&s2)).abs() < 1e-4);
    assert_eq!(write_arpa(&back), write_arpa(&m));
}

#[test]
fn sentence_probability_is_the_chain_rule() {
    let m = train_ngram(&corpus(&FIVE_LINES), &TrainConfig::new(3)).unwrap();
    let s: Vec<Label> = ["c", "a", "b", "d"].iter().map(|t| m.token_id(t)).collect();
    assert!((m.sentence_logprob(&s) + sentence_cost(&m, &s)).abs() < 1e-12);
}

#[test]
fn class_spans_replace_tokens() {
    let toks = ["call", "john", "smith", "now"];
    let spans = [ClassSpan {
        class: "@CONTACT".into(),
        start: 1,
        end: 3,
    }];
    assert_eq!(apply_class_spans(&toks, &spans).unwrap(), vec!["call", "@CONTACT", "now"]);
    let bad = [ClassSpan {
        class: "@CONTACT".into(),
        start: 3,
        end: 5,
    }];
    assert!(apply_class_spans(&toks, &bad).is_err());
}

#[test]
fn sentence_weights_scale_counts() {
    let a = ["x", "y"];
    let b = ["x", "z"];
    let once = train_weighted(&[(&a[..], 1.0), (&b[..], 1.0), (&b[..], 1.0)], &[] as &[&str], &TrainConfig::new(2)).unwrap();
    let twice = train_weighted(&[(&a[..], 1.0), (&b[..], 2.0)], &[] as &[&str], &TrainConfig::new(2)).unwrap();
    let z = once.token_id("z");
    let x = once.token_id("x");
    assert!((once.prob(&[], z) - twice.prob(&[], twice.token_id("z"))).abs() < 1e-12);
    assert!(once.prob(&[x], z) > once.prob(&[x], once.token_id("y")));
}

#[test]
fn prior_costs_form_a_distribution() {
    let wp = WordpieceModel::new(["▁a", "▁b", "a", "b"]).unwrap();
    let text = corpus(&["▁a b", "▁a a b", "▁b"]);
    let prior = prior_table(&text, &wp).unwrap();
    let total: f64 = prior.iter().map(|(_, c)| (-c).exp()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(prior.cost("▁a").unwrap() < prior.cost("▁b").unwrap());
    let back = ctcbias::ngram::PriorTable::from_tsv(&prior.to_tsv()).unwrap();
    assert_eq!(back.to_tsv(), prior.to_tsv());
}

fn sentences() -> impl Strategy<Value = Vec<Vec<String>>> {
    let word = prop::sample::select(vec!["a", "b", "c", "d", "e"]).prop_map(String::from);
    prop::collection::vec(prop::collection::vec(word, 1..6), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_corpora_give_normalized_models(text in sentences(), order in 1usize..=4, t in 0.0f64..0.05) {
        let m = train_ngram(&text, &TrainConfig::new(order)).unwrap();
        prop_assert!(max_norm_error(&m) < 1e-6);
        let p = entropy_prune(&m, t).unwrap();
        prop_assert!(max_norm_error(&p) < 1e-6);
        prop_assert!(p.num_entries() <= m.num_entries());
    }
}
