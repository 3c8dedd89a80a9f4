use luxkit::corpus::{load_corpus, save_corpus, CorpusFormat, LangCode, LanguagePair, ParallelCorpus, Segment, SegmentPair, Stage};
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    "[A-Za-zäëéÄ«»„“”‘’'\"\\\\\t.,!? -]{0,30}[a-zë«»„“]"
}

fn corpus() -> impl Strategy<Value = ParallelCorpus> {
    prop::collection::vec((text(), text(), prop::option::of(-1_000_000i32..=1_000_000)), 0..30).prop_map(|rows| {
        let lp: LanguagePair = "lb-de".parse().unwrap();
        let lb = LangCode::new("lb").unwrap();
        let de = LangCode::new("de").unwrap();
        let pairs = rows
            .into_iter()
            .enumerate()
            .map(|(i, (s, t, sim))| {
                let id = (i + 1).to_string();
                let mut p = SegmentPair::given(Segment::new(&id, &s, lb.clone()).unwrap(), Segment::new(&id, &t, de.clone()).unwrap());
                p.similarity = sim.map(|v| f64::from(v) / 1e6);
                p
            })
            .collect();
        let mut c = ParallelCorpus::from_pairs(lp, pairs).unwrap();
        c.stage = Stage::Filtered;
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip(c in corpus()) {
        let dir = tempfile::tempdir().unwrap();
        for format in [CorpusFormat::Jsonl, CorpusFormat::Tsv] {
            let path = dir.path().join("corpus");
            save_corpus(&c, &path, format).unwrap();
            let back = load_corpus(&path, format, None).unwrap();
            prop_assert_eq!(&back, &c);
        }
    }
}
