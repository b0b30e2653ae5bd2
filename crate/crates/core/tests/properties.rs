use proptest::prelude::*;
use std::collections::{BTreeMap, HashMap};
use sumbias::input_bias::{classify_topic, fightin_words_counts, TextDocument, TopicLists};
use sumbias::measures::{
    bag_of_words, bootstrap, cosine, entity_inclusion, tvd, word_list_inclusion, Axis, GroupDistribution,
    InclusionTable, Reference, Unit,
};

fn distribution(weights: &[u32]) -> GroupDistribution {
    let total: u32 = weights.iter().sum();
    GroupDistribution(
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| (format!("g{i}"), *w as f64 / total as f64))
            .collect(),
    )
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 0..20)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

proptest! {
    #[test]
    fn tvd_is_a_bounded_metric(
        p in prop::collection::vec(1u32..50, 2..6),
        q in prop::collection::vec(1u32..50, 2..6),
    ) {
        let (p, q) = (distribution(&p), distribution(&q));
        let d = tvd(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - tvd(&q, &p)).abs() < 1e-12);
        prop_assert!(tvd(&p, &p).abs() < 1e-12);
    }

    #[test]
    fn cosine_is_bounded_and_reflexive(a in words(), b in words()) {
        let (va, vb) = (bag_of_words(&a), bag_of_words(&b));
        let s = cosine(&va, &vb);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        if !a.is_empty() {
            prop_assert_eq!(cosine(&va, &va), 1.0);
        }
    }

    #[test]
    fn word_list_matches_its_own_distribution(counts in prop::collection::vec(0u64..40, 2..5)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let counts: BTreeMap<String, u64> =
            counts.iter().enumerate().map(|(i, c)| (format!("g{i}"), *c)).collect();
        let own = GroupDistribution::from_counts(&counts).unwrap();
        let v = word_list_inclusion(&counts, &Reference::Given(own)).unwrap();
        prop_assert!(v.abs() < 1e-12);
    }

    #[test]
    fn entity_inclusion_ignores_group_labels(
        cells in prop::collection::vec((0u64..30, 0u64..30), 2..5),
        smoothing in 0.1f64..2.0,
    ) {
        let table = |names: &dyn Fn(usize) -> String| {
            let mut t = InclusionTable::default();
            for (i, (inc, exc)) in cells.iter().enumerate() {
                for _ in 0..*inc { t.add(&names(i), true); }
                for _ in 0..*exc { t.add(&names(i), false); }
            }
            t
        };
        let n = cells.len();
        let a = table(&|i| format!("g{i}"));
        let b = table(&|i| format!("h{}", n - i));
        if a.groups.len() >= 2 {
            let (x, y) = (entity_inclusion(&a, smoothing).unwrap(), entity_inclusion(&b, smoothing).unwrap());
            prop_assert!((x - y).abs() < 1e-9);
            prop_assert!(x >= 0.0);
        }
    }

    #[test]
    fn bootstrap_interval_is_ordered(values in prop::collection::vec(-5.0f64..5.0, 4..30), seed in any::<u64>()) {
        let units: Vec<Unit<f64>> = values
            .iter()
            .enumerate()
            .map(|(i, v)| Unit { original: format!("o{}", i / 2), variant: (i % 2) as u32, item: *v })
            .collect();
        let mean = |s: &[sumbias::measures::Resampled<'_, f64>]| {
            Some(s.iter().map(|r| r.unit.item).sum::<f64>() / s.len() as f64)
        };
        for axis in [Axis::D, Axis::S] {
            let (lo, hi) = bootstrap(&units, mean, axis, 50, seed).unwrap();
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn fightin_words_is_antisymmetric(a in words(), b in words()) {
        prop_assume!(!a.is_empty() && !b.is_empty());
        let count = |ws: &[String]| {
            let mut m = HashMap::new();
            for w in ws { *m.entry(w.clone()).or_insert(0.0) += 1.0; }
            m
        };
        let (ca, cb) = (count(&a), count(&b));
        let ab = fightin_words_counts(&ca, &cb, 0.01);
        let ba = fightin_words_counts(&cb, &ca, 0.01);
        for (w, z) in &ab {
            prop_assert!((z + ba[w]).abs() < 1e-9);
        }
    }

    #[test]
    fn topic_is_order_invariant(mut tokens in prop::collection::vec(
        prop::sample::select(vec!["league", "team", "wife", "baby", "said", "the"]), 0..30,
    ), rot in 0usize..30) {
        let doc = |ts: &[&str]| TextDocument {
            id: "d".into(),
            sentences: vec![ts.iter().map(|s| s.to_string()).collect()],
        };
        let lists = TopicLists::default();
        let before = classify_topic(&doc(&tokens), &lists);
        if !tokens.is_empty() {
            let k = rot % tokens.len();
            tokens.rotate_left(k);
            tokens.reverse();
        }
        prop_assert_eq!(before, classify_topic(&doc(&tokens), &lists));
    }
}
