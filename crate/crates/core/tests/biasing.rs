mod common;

use std::collections::{BTreeMap, BTreeSet};

use ctcbias::biasing::{
    build_lg_baseline, read_pron_lexicon, write_pron_lexicon, BiasFst, EntityList, PronTokenizer, TokSource,
};
use ctcbias::wfst::{shortest_paths, EncodeTable};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{bias_inventory, expected_bias_paths, path_map, random_bias, random_entity_list};

#[test]
fn bias_fst_invariants_on_random_lists() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let list = random_entity_list(&mut rng);
        let b = random_bias(&mut rng, &list);
        let mut enc = EncodeTable::new();
        assert_eq!(enc.encode(&b.fst).ilabel_conflicts(), 0);
        let paths = path_map(&b.fst);
        assert_eq!(paths.len(), expected_bias_paths(&b, &list));
        let ln_n = (list.len() as f64).ln();
        let mut best: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for ((_, out), w) in &paths {
            assert!((w - ln_n).abs() < 1e-9, "{w} vs {ln_n}");
            let e = best.entry(out.clone()).or_insert(f64::INFINITY);
            *e = e.min(*w);
        }
        assert_eq!(best.len(), list.len());
        let mass: f64 = best.values().map(|w| (-w).exp()).sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }
}

#[test]
fn spelling_comes_first_and_is_never_duplicated() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let list = random_entity_list(&mut rng);
        let b = random_bias(&mut rng, &list);
        for (w, toks) in &b.tokenizations {
            assert_eq!(toks[0].source, TokSource::Orthographic);
            assert_eq!(toks[0].pieces, bias_inventory().tokenize_word_str(w).unwrap());
            let distinct: BTreeSet<&Vec<String>> = toks.iter().map(|t| &t.pieces).collect();
            assert_eq!(distinct.len(), toks.len());
        }
    }
}

#[test]
fn bias_texts_round_trip_through_files() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let list = random_entity_list(&mut rng);
    let b = random_bias(&mut rng, &list);
    let (fst, words, meta) = b.to_texts();
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("bias.fst", &fst), ("bias.words", &words), ("bias.json", &meta)] {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    let back = BiasFst::from_texts(&read("bias.fst"), &read("bias.words"), &read("bias.json"), &bias_inventory()).unwrap();
    assert_eq!(back.to_texts(), (fst, words, meta));
}

#[test]
fn empty_list_is_rejected() {
    assert!(EntityList::new("@CONTACT", Vec::<String>::new()).is_err());
    assert!(EntityList::new("contact", ["x"]).is_err());
}

#[test]
fn lg_baseline_spells_homophones() {
    let wp = bias_inventory();
    let lex = read_pron_lexicon("ab\tx y\nba\tx y\nc\tz\n").unwrap();
    assert_eq!(read_pron_lexicon(&write_pron_lexicon(&lex)).unwrap(), lex);
    let lg = build_lg_baseline(&lex, &wp, None).unwrap();
    assert!(lg.num_arcs() > 0);
    let got: BTreeSet<Vec<String>> = lg
        .tokenizations(&["x".to_string(), "y".to_string()], 5)
        .into_iter()
        .collect();
    let want: BTreeSet<Vec<String>> = [vec!["▁ab".to_string()], vec!["▁ba".to_string()]].into_iter().collect();
    assert_eq!(got, want);
    assert!(lg.tokenizations(&["q".to_string()], 5).is_empty());
}

#[test]
fn best_path_outputs_the_entity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let list = EntityList::new("@CONTACT", ["ab c"]).unwrap();
    let b = random_bias(&mut rng, &list);
    let p = shortest_paths(&b.fst, 1).unwrap();
    let words: Vec<&str> = p[0].olabels.iter().map(|&l| b.words().symbol(l).unwrap()).collect();
    assert_eq!(words, vec!["ab", "c"]);
    assert!(p[0].weight.value().abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn entity_mass_sums_to_one(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let list = random_entity_list(&mut rng);
        let b = random_bias(&mut rng, &list);
        let mut best: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for ((_, out), w) in path_map(&b.fst) {
            let e = best.entry(out).or_insert(f64::INFINITY);
            *e = e.min(w);
        }
        let mass: f64 = best.values().map(|w| (-w).exp()).sum();
        prop_assert!((mass - 1.0).abs() < 1e-6);
    }
}
