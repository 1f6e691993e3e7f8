use std::fs;

use proptest::prelude::*;
use tesa_core::corpus::{CategoryRecord, PageRecord};
use tesa_core::fixtures::oracle::DenseEsa;
use tesa_core::fixtures::{self, ThemedSpec};
use tesa_core::{
    build_index, load_index, BuildOptions, Corpus, EsaModel, FilterThresholds, LambdaSchedule, PipelineConfig,
};

fn arb_corpus() -> impl Strategy<Value = Corpus> {
    // pages × (words, category choice)
    prop::collection::vec((prop::collection::vec(0u8..7, 1..10), 0usize..4), 2..8).prop_map(|rows| {
        let mut categories = vec![CategoryRecord {
            id: "root".into(),
            title: String::new(),
            parents: vec![],
        }];
        for (id, parent) in [("a", "root"), ("b", "root"), ("a1", "a"), ("b1", "b")] {
            categories.push(CategoryRecord {
                id: id.into(),
                title: String::new(),
                parents: vec![parent.into()],
            });
        }
        let leaves = ["a", "b", "a1", "b1"];
        let pages = rows
            .iter()
            .enumerate()
            .map(|(i, (words, cat))| PageRecord {
                id: format!("p{i}"),
                title: String::new(),
                text: words.iter().map(|w| format!("w{w}")).collect::<Vec<_>>().join(" "),
                links_out: vec![],
                categories: vec![leaves[*cat].to_string()],
            })
            .collect();
        Corpus::from_records(pages, categories, "root").unwrap()
    })
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sparse_vectors_match_dense_oracle(corpus in arb_corpus()) {
        let cfg = PipelineConfig::default();
        let model = EsaModel::build(&corpus, &cfg).unwrap();
        let dense = DenseEsa::new(&corpus, &cfg);
        let space = model.space();
        for word in &dense.terms {
            let w = dense.term(word);
            let sparse = space.concept_vector_of(word).unwrap().to_dense(dense.pages.len());
            prop_assert!(close(&sparse, &dense.concept(w)));
        }
        for (c, id) in model.descendants.category_ids().iter().enumerate() {
            let family = DenseEsa::family(&model.acyclic, id);
            if family.is_empty() {
                continue;
            }
            for word in &dense.terms {
                let t = space.term(word).unwrap();
                let got = tesa_core::weighting::categorical_tfidf(c, t, &model.stats, &model.descendants).unwrap();
                prop_assert!((got - dense.categorical(&family, dense.term(word))).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn reinforcement_never_lowers_a_weight(corpus in arb_corpus(), l1 in 0.0f64..2.0, l2 in 0.0f64..1.0) {
        let model = EsaModel::build(&corpus, &PipelineConfig::default()).unwrap();
        let rs = model.reinforced().unwrap();
        let lambda = LambdaSchedule::new(vec![l1, l2]).unwrap();
        for t in 0..model.vocab.len() {
            let t = tesa_core::TermId(t as u32);
            for p in 0..model.space().dim() {
                prop_assert!(rs.reinforced_tfidf(p, t, &lambda) >= model.stats.tfidf(p, t));
            }
        }
    }
}

#[test]
fn index_on_disk_answers_like_the_in_memory_model() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = fixtures::themed(&ThemedSpec::eval_fix());
    let (pages, categories) = (dir.path().join("pages.jsonl"), dir.path().join("categories.jsonl"));
    corpus.write_jsonl(&pages, &categories).unwrap();
    let options = BuildOptions {
        thresholds: FilterThresholds::none(),
        pipeline: PipelineConfig::default(),
    };
    let out = dir.path().join("idx");
    let (built, summary) = build_index(&pages, &categories, "root", &options, &out).unwrap();
    assert_eq!(summary.pages, corpus.page_count());
    let (loaded, manifest) = load_index(&out).unwrap();
    assert_eq!(manifest.root, "root");
    assert_eq!(manifest.files.len(), fs::read_dir(&out).unwrap().count() - 1);
    let lambda = LambdaSchedule::parse("1,0.5").unwrap();
    let (a, b) = (built.reinforced().unwrap(), loaded.reinforced().unwrap());
    for (w, v) in [
        ("anchor0x0", "anchor0x1"),
        ("anchor0x0", "anchor3x1"),
        ("word1x0x2", "noise3"),
    ] {
        assert_eq!(
            a.relatedness(w, v, &lambda).unwrap().to_bits(),
            b.relatedness(w, v, &lambda).unwrap().to_bits()
        );
    }
}

#[test]
fn same_theme_is_more_related_under_reinforcement() {
    let (model, _) = fixtures::eval_fix_built();
    let rs = model.reinforced().unwrap();
    let lambda = LambdaSchedule::parse("1,0.5").unwrap();
    let sibling = rs.relatedness("anchor0x0", "anchor0x1", &lambda).unwrap();
    let stranger = rs.relatedness("anchor0x0", "anchor2x1", &lambda).unwrap();
    assert!(sibling > stranger, "{sibling} vs {stranger}");
    // without reinforcement the anchors never share a page
    let zero = LambdaSchedule::zero();
    assert_eq!(rs.relatedness("anchor0x0", "anchor0x1", &zero).unwrap(), 0.0);
}
