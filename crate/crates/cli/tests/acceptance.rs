//! Acceptance checks, one printed verdict line per criterion.
//!
//! Runs with a custom harness so the lines appear in order in the plain
//! `cargo test` output. Any failed criterion makes the binary exit non-zero.

use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;
use sumbias::align::{align_corpus, AlignmentStatus};
use sumbias::ingest::{read_conll_corpus, AnnotatedDocument};
use sumbias::input_bias::{simulation_experiment, Baseline, TopicLists};
use sumbias::jsonl::read_jsonl;
use sumbias::measures::{
    bag_of_words, count_identifiers, distinguishability, entity_inclusion, hallucination_bias, neutralize,
    score_with_ci, word_list_inclusion, DistinguishItem, GroupDistribution, InclusionTable, Reference,
};
use sumbias::names::{load_census, GenderNameTable, IdentifierWordList};
use sumbias::perturb::{
    generate_corpus, identity_assignments, render, AssignmentScheme, GeneratedInput, NameInventory, SchemeKind,
};
use sumbias::pipeline::{build_templates, run_pipeline, score_inclusion, summary_units, PipelineConfig};
use sumbias::seed::derive_rng;
use sumbias::summary::{join_summaries, Lexicon, SummaryRow};
use sumbias::synthetic::{constructed_summaries, fixture_corpus, inclusion_biased_summaries, topic_corpus, TopicCorpusConfig};
use sumbias::template::{ContentWordAnnotation, DocumentTemplate};
use sumbias::Gender;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn toy_documents() -> Vec<AnnotatedDocument> {
    read_conll_corpus(&fixtures().join("toy_corpus.conll")).expect("toy corpus parses")
}

fn toy_templates() -> Vec<DocumentTemplate> {
    let content: Vec<ContentWordAnnotation> = read_jsonl(&fixtures().join("content_words.jsonl")).expect("content words");
    build_templates(&toy_documents(), &content).expect("templates build")
}

fn census() -> GenderNameTable {
    load_census(&fixtures().join("census_male.txt"), &fixtures().join("census_female.txt")).expect("census loads")
}

fn generate(templates: &[DocumentTemplate], kind: SchemeKind, seed: u64) -> Vec<GeneratedInput> {
    let inventory = NameInventory::new(&census(), None);
    generate_corpus(templates, &AssignmentScheme::new(kind), &inventory, seed)
        .expect("generation succeeds")
        .inputs
}

fn round_trip() -> Outcome {
    let docs = toy_documents();
    let templates = toy_templates();
    let mut mismatches = 0;
    for (d, t) in docs.iter().zip(&templates) {
        let original: Vec<String> = d.tokens.iter().map(|t| t.text.clone()).collect();
        let rendered = render(t, &identity_assignments(t)).map_err(|e| format!("{}: {e}", t.id))?;
        if t.fill_original() != original || rendered.tokens != original {
            mismatches += 1;
        }
    }
    ensure(docs.len() == 50, format!("expected 50 documents, found {}", docs.len()))?;
    ensure(mismatches == 0, format!("{mismatches} mismatching documents"))?;
    Ok(format!("{} documents, 0 mismatches", docs.len()))
}

fn balance() -> Outcome {
    let templates = toy_templates();
    let local = generate(&templates, SchemeKind::GenderLocal, 11);
    let originals: BTreeSet<&str> = local.iter().map(|i| i.original_id.as_str()).collect();
    let mut pairs: BTreeMap<&str, Vec<&GeneratedInput>> = BTreeMap::new();
    for input in &local {
        let m = input.assignments.iter().filter(|a| a.gender == Gender::Male).count() as i64;
        let f = input.assignments.len() as i64 - m;
        ensure((m - f).abs() <= 1, format!("{}: {m} male vs {f} female", input.id))?;
        let pair = input.pair_id.as_deref().ok_or(format!("{} has no pair id", input.id))?;
        pairs.entry(pair).or_default().push(input);
    }
    for (pair, members) in &pairs {
        let [a, b] = members.as_slice() else {
            return Err(format!("{pair} has {} members", members.len()));
        };
        ensure(a.variant + 1 == b.variant && a.variant % 2 == 0, format!("{pair}: variants {} and {}", a.variant, b.variant))?;
        for (x, y) in a.assignments.iter().zip(&b.assignments) {
            ensure(x.entity == y.entity && x.gender == y.gender.inverse(), format!("{pair}: entity {} not inverted", x.entity))?;
            ensure(x.paired_first.as_ref() == Some(&y.first), format!("{pair}: entity {} name list differs", x.entity))?;
        }
        for g in [Gender::Male, Gender::Female] {
            let names = |v: &GeneratedInput| -> BTreeSet<String> {
                v.assignments.iter().filter(|x| x.gender == g).map(|x| x.first.clone()).collect()
            };
            let (x, y) = (names(a), names(b));
            ensure(x.is_subset(&y) || y.is_subset(&x), format!("{pair}: {g} names {x:?} vs {y:?}"))?;
        }
    }
    ensure(local.len() == originals.len() * 20, "C_loc: not 20 variants per original")?;

    let global = generate(&templates, SchemeKind::GenderGlobal, 11);
    let mut split: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for input in &global {
        let genders: BTreeSet<Gender> = input.assignments.iter().map(|a| a.gender).collect();
        ensure(genders.len() == 1, format!("{}: mixed genders in C_glob", input.id))?;
        let e = split.entry(input.original_id.as_str()).or_default();
        match genders.into_iter().next() {
            Some(Gender::Male) => e.0 += 1,
            _ => e.1 += 1,
        }
    }
    for (orig, (m, f)) in &split {
        ensure((*m, *f) == (10, 10), format!("{orig}: C_glob split {m}/{f}"))?;
    }
    Ok(format!(
        "C_loc {} inputs / {} pairs balanced and inverted; C_glob {} originals at 10/10",
        local.len(),
        pairs.len(),
        split.len()
    ))
}

fn brute_tvd(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let keys: BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    keys.into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

fn brute_cosine(a: &[String], b: &[String]) -> f64 {
    let vocab: BTreeSet<&String> = a.iter().chain(b).collect();
    let count = |v: &[String], w: &String| v.iter().filter(|x| *x == w).count() as f64;
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for w in vocab {
        let (x, y) = (count(a, w), count(b, w));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

fn measure_oracles() -> Outcome {
    const INSTANCES: usize = 25;
    let lists = IdentifierWordList::helm_gender();
    let vocab: Vec<&str> = ["he", "She", "HIS", "mother", "father", "sons", "the", "team", "won", "girls", "aunt", "car"].to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..INSTANCES {
        let mut rng = derive_rng(3, &["oracle", &k.to_string()]);

        let texts: Vec<Vec<String>> = (0..rng.gen_range(1..6))
            .map(|_| (0..rng.gen_range(3..15)).map(|_| vocab.choose(&mut rng).unwrap().to_string()).collect())
            .collect();
        let mut raw: BTreeMap<String, f64> = BTreeMap::new();
        for t in texts.iter().flatten() {
            for (g, words) in &lists.groups {
                if words.iter().any(|w| *w == t.to_lowercase()) {
                    *raw.entry(g.clone()).or_default() += 1.0;
                }
            }
        }
        let total: f64 = raw.values().sum();
        let pref = rng.gen_range(0.05..0.95);
        let reference: BTreeMap<String, f64> = [("female".to_string(), pref), ("male".to_string(), 1.0 - pref)].into();
        let got = word_list_inclusion(
            &count_identifiers(texts.iter().map(Vec::as_slice), &lists),
            &Reference::Given(GroupDistribution::new(reference.clone()).unwrap()),
        );
        if total == 0.0 {
            ensure(got.is_err(), "word list: expected no-data without identifiers")?;
        } else {
            let p_obs: BTreeMap<String, f64> = raw.iter().map(|(g, c)| (g.clone(), c / total)).collect();
            worst = worst.max((got.map_err(|e| e.to_string())? - brute_tvd(&p_obs, &reference)).abs());
        }

        let groups = ["a", "b", "c"];
        let rates: Vec<f64> = groups.iter().map(|_| rng.gen_range(0.1..0.9)).collect();
        let records: Vec<(&str, bool)> = (0..rng.gen_range(6..40))
            .map(|_| {
                let g = rng.gen_range(0..groups.len());
                (groups[g], rng.gen_bool(rates[g]))
            })
            .collect();
        let mut table = InclusionTable::default();
        for (g, inc) in &records {
            table.add(g, *inc);
        }
        let odds: Vec<f64> = groups
            .iter()
            .filter(|g| records.iter().any(|r| r.0 == **g))
            .map(|g| {
                let inc = records.iter().filter(|r| r.0 == *g && r.1).count() as f64;
                let tot = records.iter().filter(|r| r.0 == *g).count() as f64;
                (inc + 0.5) / (tot - inc + 0.5)
            })
            .collect();
        let mut best = f64::NEG_INFINITY;
        for x in &odds {
            for y in &odds {
                best = best.max(x / y - 1.0);
            }
        }
        worst = worst.max((entity_inclusion(&table, 0.5).map_err(|e| e.to_string())? - best).abs());

        let (m, f) = (rng.gen_range(0..300u64), rng.gen_range(1..300u64));
        let counts: BTreeMap<String, u64> = [("male".to_string(), m), ("female".to_string(), f)].into();
        let n = (m + f) as f64;
        let brute = ((m as f64 / n - 0.5).abs() + (f as f64 / n - 0.5).abs()) / 2.0;
        worst = worst.max((hallucination_bias(&counts, &["male", "female"]).map_err(|e| e.to_string())? - brute).abs());

        let words = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"];
        let mut items = Vec::new();
        for o in 0..rng.gen_range(1..4) {
            for g in ["m", "f"] {
                for _ in 0..rng.gen_range(2..5) {
                    let toks: Vec<String> = (0..rng.gen_range(2..8)).map(|_| words.choose(&mut rng).unwrap().to_string()).collect();
                    items.push((format!("o{o}"), g, toks));
                }
            }
        }
        let mut hits = 0;
        for (i, (oi, gi, ti)) in items.iter().enumerate() {
            let (mut s_same, mut n_same, mut s_other, mut n_other) = (0.0, 0.0, 0.0, 0.0);
            for (j, (oj, gj, tj)) in items.iter().enumerate() {
                if i == j || oi != oj {
                    continue;
                }
                let s = brute_cosine(ti, tj);
                if gi == gj {
                    s_same += s;
                    n_same += 1.0;
                } else {
                    s_other += s;
                    n_other += 1.0;
                }
            }
            if s_same / n_same > s_other / n_other + 1e-12 {
                hits += 1;
            }
        }
        let brute = 2.0 * hits as f64 / items.len() as f64 - 1.0;
        let dist_items: Vec<DistinguishItem> = items
            .iter()
            .map(|(o, g, t)| DistinguishItem {
                original: o.clone(),
                group: g.to_string(),
                vector: bag_of_words(t),
            })
            .collect();
        worst = worst.max((distinguishability(&dist_items).map_err(|e| e.to_string())?.score - brute).abs());
    }
    ensure(worst <= 1e-9, format!("largest oracle deviation {worst:e}"))?;
    let counts: BTreeMap<String, u64> = [("male".to_string(), 238), ("female".to_string(), 29)].into();
    let tvd = hallucination_bias(&counts, &["male", "female"]).map_err(|e| e.to_string())?;
    ensure((tvd - 0.39).abs() <= 0.005, format!("238/29 gives {tvd:.4}, not 0.39 +- 0.005"))?;
    Ok(format!(
        "4 measures x {INSTANCES} random instances, max deviation {worst:.1e}; 238/29 hallucination TVD = {tvd:.4}"
    ))
}

fn toy_config(out: &Path, systems: &[&str]) -> PipelineConfig {
    let mut c = PipelineConfig::load(&fixtures().join("toy_run.toml")).expect("toy config loads");
    c.output_dir = out.to_path_buf();
    c.summaries.retain(|k, _| systems.contains(&k.as_str()));
    c
}

fn identity_null() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = run_pipeline(&toy_config(dir.path(), &["identity"])).map_err(|e| e.to_string())?;
    let score = |m: &str| {
        out.report
            .scores
            .iter()
            .find(|s| s.measure == m)
            .and_then(|s| s.point)
            .ok_or(format!("{m} has no score"))
    };
    let wl = score("word_list")?;
    let ei = score("entity_inclusion")?;
    let halluc = out.alignment.counts["identity"].hallucinated;
    ensure(wl == 0.0, format!("adjusted word-list inclusion {wl}"))?;
    ensure(ei <= 0.05, format!("entity inclusion {ei}"))?;
    ensure(halluc == 0 && out.hallucinations.is_empty(), format!("{halluc} hallucinations"))?;
    Ok(format!(
        "{} inputs: word_list = {wl}, entity_inclusion = {ei:.4}, hallucinations = 0",
        out.report.inputs
    ))
}

/// Entity-inclusion score and d-axis interval for a keep-rate summarizer.
fn induced(inputs: &[GeneratedInput], keep_male: f64, keep_female: f64, replicates: usize) -> Result<(f64, (f64, f64)), String> {
    let keep: BTreeMap<String, f64> = [("male".into(), keep_male), ("female".into(), keep_female)].into();
    let rows = inclusion_biased_summaries(inputs, &keep, 5, "biased");
    let lexicon = Lexicon::from_inputs(inputs, None);
    let records = join_summaries(rows, inputs, &lexicon).map_err(|e| e.to_string())?;
    let alignment = align_corpus(&records, inputs);
    let by_id: HashMap<&str, &GeneratedInput> = inputs.iter().map(|i| (i.id.as_str(), i)).collect();
    let recs: Vec<_> = records.iter().collect();
    let units = summary_units(&recs, &by_id, &alignment, &[], &IdentifierWordList::helm_gender(), None);
    let s = score_with_ci(&units, |r| score_inclusion(r, 0.5), false, replicates, 17).map_err(|e| e.to_string())?;
    Ok((s.point, s.ci_d.ok_or("no d interval")?))
}

fn induced_bias() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    pool.install(|| {
        let start = Instant::now();
        let corpus = fixture_corpus(150, 99);
        let templates = build_templates(&corpus.documents, &corpus.content_words).map_err(|e| e.to_string())?;
        let inputs = generate(&templates, SchemeKind::GenderLocal, 5);
        ensure(inputs.len() >= 2000, format!("only {} inputs", inputs.len()))?;
        let (point, (lo, hi)) = induced(&inputs, 0.8, 0.4, 1000)?;
        let secs = start.elapsed().as_secs_f64();
        let analytic = (0.8 / 0.2) / (0.4 / 0.6) - 1.0;
        ensure(lo > 0.0, format!("CI ({lo:.3}, {hi:.3}) includes 0"))?;
        ensure(lo <= analytic && analytic <= hi, format!("analytic {analytic} outside CI ({lo:.3}, {hi:.3})"))?;
        ensure(secs < 60.0, format!("took {secs:.1} s"))?;
        let (p2, (lo2, hi2)) = induced(&inputs, 0.5, 0.25, 1000)?;
        ensure(lo2 <= 2.0 && 2.0 <= hi2, format!("0.5/0.25 case: 2.0 outside ({lo2:.3}, {hi2:.3})"))?;
        Ok(format!(
            "{} inputs, keep 0.8/0.4: {point:.3} CI_d ({lo:.3}, {hi:.3}) covers the analytic odds-ratio value {analytic:.1} \
             and excludes 0, {secs:.1} s on one thread; the stated 2.0 is the analytic value for keep 0.5/0.25, \
             measured {p2:.3} CI_d ({lo2:.3}, {hi2:.3})",
            inputs.len()
        ))
    })
}

fn simulation_ordering() -> Outcome {
    let start = Instant::now();
    let docs = topic_corpus(&TopicCorpusConfig::default(), 42);
    ensure(docs.len() >= 5000, "corpus too small")?;
    let r = simulation_experiment(&docs, &IdentifierWordList::helm_gender(), &TopicLists::default(), 42).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let row = |b: Baseline| r.rows.iter().find(|x| x.algorithm == b).expect("every baseline scored");
    let val = |x: Option<f64>| x.ok_or("no data".to_string());
    let (random, lead, topic, sexist) = (row(Baseline::Random), row(Baseline::Lead), row(Baseline::Topic), row(Baseline::Sexist));
    let (ra, la, ta) = (val(random.adjusted)?, val(lead.adjusted)?, val(topic.adjusted)?);
    let (tu, su) = (val(topic.uniform)?, val(sexist.uniform)?);
    ensure(ra <= 0.02 && la <= 0.02, format!("Random {ra:.4} / Lead {la:.4} adjusted above 0.02"))?;
    ensure(su < tu, format!("Sexist uniform {su:.4} not below Topic uniform {tu:.4}"))?;
    ensure(ta > ra, format!("Topic adjusted {ta:.4} not above Random {ra:.4}"))?;
    ensure(secs < 300.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "{} docs: adjusted Random {ra:.4}, Lead {la:.4}, Topic {ta:.4}; uniform Sexist {su:.4} < Topic {tu:.4}; {secs:.1} s",
        docs.len()
    ))
}

fn distinguishability_endpoints() -> Outcome {
    let inputs = generate(&toy_templates(), SchemeKind::GenderGlobal, 23);
    let item = |input: &GeneratedInput, extra: Vec<String>| {
        let mut tokens = input.sentence_tokens().into_iter().take(2).flatten().collect::<Vec<_>>();
        tokens.extend(extra);
        DistinguishItem {
            original: input.original_id.clone(),
            group: input.assignments[0].group.clone(),
            vector: bag_of_words(&neutralize(&tokens, &input.assignments)),
        }
    };
    let separated: Vec<DistinguishItem> = inputs
        .iter()
        .map(|i| {
            let words = if i.assignments[0].gender == Gender::Male { ["match", "striker"] } else { ["recipe", "garden"] };
            item(i, words.iter().map(|w| w.to_string()).collect())
        })
        .collect();
    let perfect = distinguishability(&separated).map_err(|e| e.to_string())?.score;
    ensure(perfect == 1.0, format!("separated summaries score {perfect}"))?;

    let noise = ["market", "rain", "vote", "price", "court", "road", "school", "film", "river", "bank", "song", "storm"];
    let mut noisy: Vec<DistinguishItem> = inputs
        .iter()
        .map(|i| {
            let mut rng = derive_rng(23, &["noise", &i.id]);
            item(i, (0..6).map(|_| noise.choose(&mut rng).unwrap().to_string()).collect())
        })
        .collect();
    let mut by_original: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (k, it) in noisy.iter().enumerate() {
        by_original.entry(it.original.clone()).or_default().push(k);
    }
    const PERMUTATIONS: usize = 1000;
    let mut rng = derive_rng(23, &["shuffle"]);
    let mut sum = 0.0;
    for _ in 0..PERMUTATIONS {
        for idx in by_original.values() {
            let mut labels: Vec<String> = idx.iter().map(|&k| noisy[k].group.clone()).collect();
            labels.shuffle(&mut rng);
            for (&k, l) in idx.iter().zip(labels) {
                noisy[k].group = l;
            }
        }
        sum += distinguishability(&noisy).map_err(|e| e.to_string())?.score;
    }
    let mean = sum / PERMUTATIONS as f64;
    ensure(mean.abs() <= 0.05, format!("shuffled mean {mean:.4}"))?;
    Ok(format!(
        "separated = {perfect:.1} over {} summaries; label-shuffled mean over {PERMUTATIONS} permutations = {mean:+.4}",
        separated.len()
    ))
}

fn alignment_harness() -> Outcome {
    let inputs = generate(&toy_templates(), SchemeKind::GenderLocal, 31);
    let subset: Vec<GeneratedInput> = inputs.iter().step_by(inputs.len() / 200).take(200).cloned().collect();
    ensure(subset.len() == 200, "could not pick 200 inputs")?;
    let census = census().resolve_ambiguous();
    let firsts: Vec<&String> = census.male.keys().chain(census.female.keys()).collect();
    let lasts = [
        "Albright", "Beaumont", "Calloway", "Delacroix", "Eastwood", "Fairbanks", "Gallagher", "Hargrove", "Ivers",
        "Jennings", "Kincaid", "Lockhart", "Montague", "Northcott", "Oakes", "Pendleton", "Levin", "Hartley",
        "Okafor", "Brennan",
    ];
    let mut rng = derive_rng(31, &["planted"]);
    let planted: Vec<String> = (0..50)
        .map(|_| {
            let f = firsts.choose(&mut rng).unwrap();
            let mut chars = f.chars();
            let f = chars.next().unwrap().to_uppercase().chain(chars).collect::<String>();
            format!("{f} {}", lasts.choose(&mut rng).unwrap())
        })
        .collect();
    let built = constructed_summaries(&subset, &planted, 31, "constructed");
    let rows: Vec<SummaryRow> = built.iter().map(|b| b.row.clone()).collect();
    let lexicon = Lexicon::from_inputs(&subset, Some(&census));
    let records = join_summaries(rows, &subset, &lexicon).map_err(|e| e.to_string())?;
    let alignment = align_corpus(&records, &subset);
    let mut constructed_total = 0;
    let mut constructed_ok = 0;
    let mut tagged = 0;
    for b in &built {
        let rows: Vec<_> = alignment.rows.iter().filter(|r| r.input_id == b.row.input_id).collect();
        let planted_tokens: Vec<Vec<String>> =
            b.planted.iter().map(|p| p.split(' ').map(str::to_string).collect()).collect();
        let matched: BTreeSet<&String> = rows
            .iter()
            .filter(|r| !planted_tokens.contains(&r.entity_tokens))
            .filter(|r| r.status == AlignmentStatus::Aligned)
            .filter_map(|r| r.matched_entity.as_ref())
            .collect();
        constructed_total += b.constructed.len();
        constructed_ok += b.constructed.iter().filter(|e| matched.contains(e)).count();
        let stray = rows
            .iter()
            .filter(|r| !planted_tokens.contains(&r.entity_tokens) && r.status != AlignmentStatus::Aligned)
            .count();
        ensure(stray == 0, format!("{}: {stray} constructed mentions not aligned", b.row.input_id))?;
        tagged += rows
            .iter()
            .filter(|r| planted_tokens.contains(&r.entity_tokens) && r.status == AlignmentStatus::Hallucinated)
            .count();
    }
    ensure(constructed_ok == constructed_total, format!("{constructed_ok}/{constructed_total} constructed entities aligned"))?;
    ensure(tagged >= 48, format!("{tagged}/50 planted hallucinations tagged"))?;
    Ok(format!(
        "{} summaries: {constructed_ok}/{constructed_total} constructed entities aligned, {tagged}/50 planted hallucinations tagged",
        built.len()
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixtures().join("toy_run.toml");
    let max = std::thread::available_parallelism().map_or(8, |n| n.get()).max(4) * 2;
    let run = |name: &str, threads: usize| -> Result<PathBuf, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_sumbias"))
            .args(["--threads", &threads.to_string(), "run", "--config"])
            .arg(&config)
            .arg("--output-dir")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), format!("run {name} exited with {status}"))?;
        Ok(out)
    };
    let a = run("a", 1)?;
    let b = run("b", max)?;
    let c = run("a", max)?;
    for file in ["report.md", "report.json", "scores.csv"] {
        let bytes = |d: &Path| std::fs::read(d.join(file)).map_err(|e| e.to_string());
        let first = bytes(&a)?;
        ensure(first == bytes(&b)?, format!("{file} differs between 1 and {max} threads"))?;
        ensure(first == bytes(&c)?, format!("{file} differs after resuming from artifacts"))?;
    }
    Ok(format!("report.md, report.json, scores.csv byte-identical across 1 thread, {max} threads and a resumed run"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("round-trip fidelity", round_trip),
        ("balance invariants", balance),
        ("measure oracles", measure_oracles),
        ("identity-summarizer null", identity_null),
        ("induced-bias detection", induced_bias),
        ("simulation ordering", simulation_ordering),
        ("distinguishability endpoints", distinguishability_endpoints),
        ("alignment precision harness", alignment_harness),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
