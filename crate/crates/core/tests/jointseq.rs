mod common;

use std::collections::BTreeMap;

use ctcbias::jointseq::{
    align, expected_counts, nbest, prune_units, read_joint, write_joint,
    AlignConfig, TrainingPair,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_segmentations, enumerate_outputs, random_pair, tiny_model, unit_names, IN};

#[test]
fn expected_counts_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let pairs: Vec<TrainingPair> = (0..3).map(|_| random_pair(&mut rng, 6)).collect();
        let max_p = rng.gen_range(1..=3);
        // Random probabilities for some units; the rest use the default.
        let mut probs = BTreeMap::new();
        for p in &pairs {
            for seg in all_segmentations(&p.input, &p.output, max_p) {
                for u in unit_names(&seg) {
                    if rng.gen_bool(0.5) {
                        probs.insert(u, rng.gen_range(0.01..1.0));
                    }
                }
            }
        }
        let default = 0.3;
        let (counts, ll) = expected_counts(&pairs, &probs, default, max_p);
        let mut want: BTreeMap<String, f64> = BTreeMap::new();
        let mut want_ll = 0.0;
        for p in &pairs {
            let segs = all_segmentations(&p.input, &p.output, max_p);
            let scores: Vec<f64> = segs
                .iter()
                .map(|s| unit_names(s).iter().map(|u| probs.get(u).copied().unwrap_or(default)).product())
                .collect();
            let z: f64 = scores.iter().sum();
            if z <= 0.0 {
                continue;
            }
            want_ll += p.weight * z.ln();
            for (s, sc) in segs.iter().zip(&scores) {
                for u in unit_names(s) {
                    *want.entry(u).or_insert(0.0) += p.weight * sc / z;
                }
            }
        }
        assert!((ll - want_ll).abs() < 1e-9);
        assert_eq!(counts.len(), want.len());
        for (k, v) in &want {
            assert!((counts[k] - v).abs() < 1e-9, "{k}: {} vs {v}", counts[k]);
        }
    }
}

#[test]
fn em_log_likelihood_never_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let pairs: Vec<TrainingPair> = (0..8).map(|_| random_pair(&mut rng, 6)).collect();
        let cfg = AlignConfig {
            max_p: 3,
            max_iters: 15,
            tol: 0.0,
        };
        let r = align(&pairs, &cfg).unwrap();
        for w in r.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{:?}", r.log_likelihoods);
        }
    }
}

#[test]
fn nbest_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut compared = 0;
    for _ in 0..50 {
        let model = tiny_model(&mut rng);
        let input: Vec<String> = (0..rng.gen_range(1..=4)).map(|_| IN[rng.gen_range(0..3)].to_string()).collect();
        let n = rng.gen_range(1..=5);
        let got = nbest(&model, &input, n);
        let want = enumerate_outputs(&model, &input);
        assert_eq!(got.hyps.len(), want.len().min(n));
        for (i, (out, c)) in got.hyps.iter().enumerate() {
            assert!((c - want[i].1).abs() < 1e-9, "rank {i}: {c} vs {}", want[i].1);
            let exact = want.iter().find(|(o, _)| o == out).unwrap();
            assert!((exact.1 - c).abs() < 1e-9);
            compared += 1;
        }
        if want.is_empty() {
            assert!(got.hyps.is_empty());
        }
    }
    assert!(compared > 50);
}

#[test]
fn unit_beam_postcondition() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let model = tiny_model(&mut rng);
        let beam = rng.gen_range(0.0..3.0);
        let pruned = prune_units(&model, beam).unwrap();
        let before = model.unigram_costs();
        let after = pruned.unigram_costs();
        for (input, units) in &before {
            let best = units.iter().map(|u| u.1).fold(f64::INFINITY, f64::min);
            let want: Vec<&String> = units.iter().filter(|u| u.1 - best <= beam).map(|u| &u.0).collect();
            let mut got: Vec<&String> = after.get(input).map(|v| v.iter().map(|u| &u.0).collect()).unwrap_or_default();
            got.sort();
            let mut want = want;
            want.sort();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn joint_model_text_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = tiny_model(&mut rng);
    let text = write_joint(&model);
    assert_eq!(write_joint(&read_joint(&text).unwrap()), text);
}

#[test]
fn uncovered_positions_are_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = tiny_model(&mut rng);
    let r = nbest(&model, &["p", "unknown"], 3);
    assert!(r.hyps.is_empty());
    assert!(r.uncovered.contains(&1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn viterbi_sequences_reproduce_the_pair(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<TrainingPair> = (0..4).map(|_| random_pair(&mut rng, 6)).collect();
        let r = align(&pairs, &AlignConfig::default()).unwrap();
        let good: Vec<&TrainingPair> = pairs.iter().filter(|p| p.input.len() <= 4 * p.output.len()).collect();
        prop_assert_eq!(r.sequences.len(), good.len());
        for ((seq, w), p) in r.sequences.iter().zip(good) {
            prop_assert_eq!(*w, p.weight);
            let mut inp = Vec::new();
            let mut out = Vec::new();
            for u in seq {
                let (i, o) = ctcbias::jointseq::parse_unit(u).unwrap();
                inp.extend(i.iter().map(|s| s.to_string()));
                out.push(o.to_string());
            }
            prop_assert_eq!(&inp, &p.input);
            prop_assert_eq!(&out, &p.output);
        }
    }
}
