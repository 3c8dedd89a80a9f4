use luxkit::align::{align, filter_by_threshold, top_k_by_similarity, AlignPolicy, FilterThreshold};
use luxkit::corpus::{LangCode, LanguagePair, ParallelCorpus, Segment, SegmentPair, Stage};
use luxkit::embed::MockProvider;
use luxkit::preprocess::{dedup, filter_min_source_length, strip_quotes, word_count};
use proptest::prelude::*;

fn lp() -> LanguagePair {
    "lb-fr".parse().unwrap()
}

fn seg(id: usize, text: &str, lang: &str) -> Segment {
    Segment::new(id.to_string(), text, LangCode::new(lang).unwrap()).unwrap()
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["Moien", "de", "Kaz", "ass", "«gutt»", "d'Haus", "„jo“"]), 1..8)
        .prop_map(|w| w.join(" "))
}

fn corpus() -> impl Strategy<Value = ParallelCorpus> {
    prop::collection::vec((words(), words(), 0u32..=1000), 0..200).prop_map(|rows| {
        let pairs = rows
            .into_iter()
            .enumerate()
            .map(|(i, (s, t, sim))| SegmentPair::aligned(seg(i, &s, "lb"), seg(i, &t, "fr"), f64::from(sim) / 1000.0))
            .collect();
        ParallelCorpus::from_pairs(lp(), pairs).unwrap()
    })
}

fn sims(pairs: &[SegmentPair]) -> Vec<f64> {
    pairs.iter().map(|p| p.similarity.unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn threshold_composition_is_max(c in corpus(), a in 0u32..=100, b in 0u32..=100) {
        let (ta, tb) = (FilterThreshold::new(f64::from(a) / 100.0).unwrap(), FilterThreshold::new(f64::from(b) / 100.0).unwrap());
        let tmax = if a >= b { ta } else { tb };
        let twice = filter_by_threshold(&filter_by_threshold(&c.pairs, ta).unwrap().pairs, tb).unwrap();
        let once = filter_by_threshold(&c.pairs, tmax).unwrap();
        prop_assert_eq!(twice.pairs, once.pairs.clone());
        prop_assert!(once.pairs.iter().all(|p| p.similarity.unwrap() >= tmax.theta()));
    }

    #[test]
    fn top_k_is_sorted_prefix(c in corpus(), k in 0usize..220, extra in 0usize..50) {
        let small = top_k_by_similarity(&c.pairs, k).unwrap();
        let large = top_k_by_similarity(&c.pairs, k + extra).unwrap();
        prop_assert_eq!(small.len(), k.min(c.len()));
        prop_assert_eq!(&large[..small.len()], &small[..]);
        let s = sims(&large);
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        if let Some(min_kept) = sims(&small).last() {
            let dropped = c.pairs.iter().filter(|p| !small.contains(p));
            prop_assert!(dropped.map(|p| p.similarity.unwrap()).all(|x| x <= *min_kept));
        }
    }

    #[test]
    fn dedup_and_filter_idempotent(c in corpus(), k in 1usize..6) {
        let d = dedup(&c);
        prop_assert_eq!(&dedup(&d).pairs, &d.pairs);
        prop_assert!(d.len() <= c.len());
        prop_assert_eq!(d.stage, Stage::Deduped);
        let f = filter_min_source_length(&c, k);
        prop_assert_eq!(&filter_min_source_length(&f, k).pairs, &f.pairs);
        prop_assert!(f.pairs.iter().all(|p| word_count(&p.source.text) >= k));
    }

    #[test]
    fn strip_idempotent(t in "\\PC{0,40}") {
        let once = strip_quotes(&t);
        prop_assert_eq!(strip_quotes(&once), once);
    }

    #[test]
    fn self_alignment_is_identity(texts in prop::collection::hash_set("[a-zäëé]{1,12}( [a-z]{1,6}){0,4}", 1..40)) {
        let texts: Vec<String> = texts.into_iter().collect();
        let src: Vec<Segment> = texts.iter().enumerate().map(|(i, t)| seg(i, t, "lb")).collect();
        let tgt: Vec<Segment> = texts.iter().enumerate().map(|(i, t)| seg(i, t, "fr")).collect();
        for policy in [AlignPolicy::GreedyOneToOne, AlignPolicy::Nearest] {
            let pairs = align(&src, &tgt, &MockProvider::default(), policy).unwrap();
            prop_assert_eq!(pairs.len(), texts.len());
            for (i, p) in pairs.iter().enumerate() {
                prop_assert_eq!(&p.source.id, &i.to_string());
                prop_assert_eq!(&p.target.id, &i.to_string());
                prop_assert!((p.similarity.unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }
}
