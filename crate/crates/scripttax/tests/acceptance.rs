//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with the measured values. Tolerances are pinned in code.
//!
//! Timing-sensitive criteria take a shared lock so concurrent test threads
//! cannot perturb wall-clock measurements; the oracle suites take it too,
//! since they saturate the CPU.

use std::collections::{HashMap, HashSet};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use scripttax::corpus::{Orthography, PairedCorpus, SentencePair};
use scripttax::convert::{apply_mapping, DefaultPolicy, MappingTable};
use scripttax::latency::{attention_cost, run_benchmark, Encoder, EncoderConfig, TimedSequence};
use scripttax::metrics::{bpc, edit_distance};
use scripttax::report::{
    load_report, replay_summaries, run_audit, structured_report_string, AuditOptions,
    BenchOptions, ConverterPair, ModelSummary, ScorerSource,
};
use scripttax::scorer::{parse_external_scores, plan_masks, score_masked, train_ngram};
use scripttax::tokenizer::{segment_wordpiece, TokenizationResult, TokenizerSpec};

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

// ---------------------------------------------------------------------------
// Criterion 1 — summary-replay arithmetic
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_summary_replay_arithmetic() {
    let _gate = gate();
    let start = Instant::now();

    let summaries = vec![
        ModelSummary {
            model: "mbert-like".to_string(),
            fertility_a: 2.35,
            fertility_b: 6.73,
            bpc_a: 8.06,
            bpc_b: 9.65,
            median_latency_a_s: None,
            median_latency_b_s: None,
            throughput_a_sps: Some(3.8),
            throughput_b_sps: Some(0.23),
            cer_rt: Some(0.31),
        },
        ModelSummary {
            model: "xlmr-like".to_string(),
            fertility_a: 2.10,
            fertility_b: 6.85,
            bpc_a: 12.19,
            bpc_b: 17.94,
            median_latency_a_s: None,
            median_latency_b_s: None,
            throughput_a_sps: Some(3.8),
            throughput_b_sps: Some(0.23),
            cer_rt: Some(0.31),
        },
    ];
    let reports = replay_summaries(&summaries).unwrap();
    let mbert = &reports[0];
    let xlmr = &reports[1];

    // Latency tax 3.8 / 0.23 = 16.52 ± 0.01 (16.5× at one decimal).
    let rho = mbert.latency.as_ref().unwrap().rho_lat;
    assert!((rho - 16.52).abs() <= 0.01, "rho = {rho}");
    assert!((rho - 3.8 / 0.23).abs() < 1e-12);

    // BPC tax (8.06 → 9.65) = +19.7% ± 0.05pp.
    assert!(
        (mbert.delta_bpc - 0.197).abs() <= 0.0005,
        "delta_bpc mbert = {}",
        mbert.delta_bpc
    );

    // BPC tax (12.19 → 17.94): exact arithmetic on these inputs gives
    // +47.17%; asserted at the same ± 0.05pp window around that value
    // (the one-decimal +47.1% headline rounds differently than its own
    // quoted inputs do).
    assert!(
        (xlmr.delta_bpc - 0.4717).abs() <= 0.0005,
        "delta_bpc xlmr = {}",
        xlmr.delta_bpc
    );

    // Fertility-gap endpoints, exact up to f64 evaluation of the same
    // expressions.
    assert_eq!(mbert.delta_f, 6.73 - 2.35);
    assert!((mbert.delta_f - 4.38).abs() < 1e-12);
    assert_eq!(xlmr.delta_f, 6.85 - 2.10);
    assert_eq!(xlmr.delta_f, 4.75);

    // Ingested CER summary is re-reported untouched.
    assert_eq!(mbert.cer_rt, Some(0.31));

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "replay took {elapsed}s");
    println!(
        "[PASS] criterion 1: rho={rho:.4} (16.52±0.01), dBPC={:+.4}/{:+.4} \
         (0.197/0.4717±0.0005), dF={}/{} (4.38/4.75), {elapsed:.3}s",
        mbert.delta_bpc, xlmr.delta_bpc, mbert.delta_f, xlmr.delta_f
    );
}

// ---------------------------------------------------------------------------
// Criterion 2 — the full published experiment is out of desk-scale reach;
// the substitution surfaces (external scores + summary replay) must work.
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_external_substitution_paths_work() {
    let _gate = gate();

    // Checkpoints, evaluation corpus, and hardware behind the published
    // mBERT/XLM-R numbers are not available here; the toolkit substitutes
    // ingestion. Per-sentence external scores:
    let corpus = PairedCorpus {
        pairs: vec![SentencePair {
            id: "s1".to_string(),
            text_a: "ab cd".to_string(),
            text_b: "xy zw".to_string(),
        }],
        label_a: "A".to_string(),
        label_b: "B".to_string(),
        nfc_normalized: false,
    };
    let records = parse_external_scores(
        "{\"sentence_id\":\"s1\",\"orthography\":\"A\",\"model\":\"m\",\"mean_nll_nats\":1.2,\"masked_count\":3}\n",
        &corpus,
    )
    .unwrap();
    assert_eq!(records.len(), 1);
    // BPC from an ingested record: (1.2 / ln 2) · (3 / 4).
    let value = bpc(records[0].mean_nll_nats, records[0].masked_count, 4).unwrap();
    assert!((value - 1.2 / std::f64::consts::LN_2 * 0.75).abs() < 1e-12);

    // Aggregate summary replay (exercised fully by criterion 1).
    let reports = replay_summaries(&[ModelSummary {
        model: "m".to_string(),
        fertility_a: 1.0,
        fertility_b: 2.0,
        bpc_a: 1.0,
        bpc_b: 1.5,
        median_latency_a_s: Some(0.01),
        median_latency_b_s: Some(0.05),
        throughput_a_sps: None,
        throughput_b_sps: None,
        cer_rt: None,
    }])
    .unwrap();
    assert!((reports[0].latency.as_ref().unwrap().rho_lat - 5.0).abs() < 1e-12);

    println!(
        "[PASS] criterion 2: full mBERT/XLM-R reproduction out of scope; \
         external-score ingestion and summary replay stand in and are functional"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3 — edit-distance oracle and metric axioms
// ---------------------------------------------------------------------------

/// Brute-force memoized recursion, written independently of the DP in the
/// library.
fn oracle_edit_distance(a: &[char], b: &[char]) -> usize {
    fn go(
        a: &[char],
        b: &[char],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let substitute = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let delete = go(a, b, i + 1, j, memo) + 1;
        let insert = go(a, b, i, j + 1, memo) + 1;
        let best = substitute.min(delete).min(insert);
        memo.insert((i, j), best);
        best
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut all = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
        for stem in &frontier {
            for &c in alphabet {
                let mut s = stem.clone();
                s.push(c);
                next.push(s);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

#[test]
fn criterion_3_edit_distance_oracle_and_axioms() {
    let _gate = gate();
    let start = Instant::now();

    // Exhaustive over the 3-symbol set: 364 strings, 132,496 ordered pairs.
    let strings = all_strings(&['a', 'b', 'c'], 5);
    assert_eq!(strings.len(), 364);
    let chars: Vec<Vec<char>> = strings.iter().map(|s| s.chars().collect()).collect();

    let mut table = vec![vec![0usize; strings.len()]; strings.len()];
    for i in 0..strings.len() {
        for j in 0..strings.len() {
            let ours = edit_distance(&strings[i], &strings[j]).distance;
            let expected = oracle_edit_distance(&chars[i], &chars[j]);
            assert_eq!(ours, expected, "({:?}, {:?})", strings[i], strings[j]);
            table[i][j] = ours;
        }
    }

    // Metric axioms on the exhaustive table.
    for i in 0..strings.len() {
        for j in 0..strings.len() {
            assert_eq!(table[i][j], table[j][i], "symmetry");
            assert_eq!(table[i][j] == 0, strings[i] == strings[j], "identity");
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(303);
    for _ in 0..10_000 {
        let (i, j, k) = (
            rng.gen_range(0..strings.len()),
            rng.gen_range(0..strings.len()),
            rng.gen_range(0..strings.len()),
        );
        assert!(table[i][k] <= table[i][j] + table[j][k], "triangle");
    }

    // A 10,000-pair random subset of the 5-symbol set (3,906 strings).
    let wide = all_strings(&['a', 'b', 'c', 'd', 'e'], 5);
    assert_eq!(wide.len(), 3906);
    for _ in 0..10_000 {
        let a = &wide[rng.gen_range(0..wide.len())];
        let b = &wide[rng.gen_range(0..wide.len())];
        let a_chars: Vec<char> = a.chars().collect();
        let b_chars: Vec<char> = b.chars().collect();
        assert_eq!(
            edit_distance(a, b).distance,
            oracle_edit_distance(&a_chars, &b_chars)
        );
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "oracle suite took {elapsed}s");
    println!(
        "[PASS] criterion 3: 132,496 exhaustive 3-symbol pairs + 10,000 random \
         5-symbol pairs match the memoized oracle; metric axioms hold; {elapsed:.1}s"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4 — WordPiece segmentation oracle
// ---------------------------------------------------------------------------

/// Independent greedy-longest-prefix segmenter: enumerates prefixes of the
/// remaining word by decreasing length and takes the first vocabulary hit.
fn oracle_wordpiece(vocab: &HashSet<String>, unk: &str, word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut hit = None;
        for len in (1..=chars.len() - start).rev() {
            let fragment: String = chars[start..start + len].iter().collect();
            let candidate = if start == 0 {
                fragment
            } else {
                format!("##{fragment}")
            };
            if vocab.contains(&candidate) {
                hit = Some((len, candidate));
                break;
            }
        }
        match hit {
            Some((len, piece)) => {
                pieces.push(piece);
                start += len;
            }
            None => return vec![unk.to_string()],
        }
    }
    pieces
}

#[test]
fn criterion_4_wordpiece_segmentation_oracle() {
    let _gate = gate();
    let mut rng = ChaCha20Rng::seed_from_u64(404);
    let mut agreements = 0;

    for _ in 0..1000 {
        // Random vocab of at most 12 pieces (incl. [UNK]).
        let piece_budget = rng.gen_range(1..=11);
        let mut tokens = vec!["[UNK]".to_string()];
        for _ in 0..piece_budget {
            let len = rng.gen_range(1..=3);
            let fragment: String = (0..len)
                .map(|_| (b'a' + rng.gen_range(0..3u8)) as char)
                .collect();
            let piece = if rng.gen_bool(0.5) {
                format!("##{fragment}")
            } else {
                fragment
            };
            if !tokens.contains(&piece) {
                tokens.push(piece);
            }
        }
        let spec = TokenizerSpec::wordpiece("instance", tokens.clone(), "[UNK]").unwrap();
        let vocab: HashSet<String> = tokens.into_iter().collect();

        let word_len = rng.gen_range(1..=6);
        let word: String = (0..word_len)
            .map(|_| (b'a' + rng.gen_range(0..3u8)) as char)
            .collect();

        let ours = segment_wordpiece(&spec, &word);
        let expected = oracle_wordpiece(&vocab, "[UNK]", &word);
        assert_eq!(ours, expected, "word {word:?} vocab {vocab:?}");
        assert!(!ours.is_empty(), "each word yields at least one token");
        agreements += 1;
    }

    assert_eq!(agreements, 1000);
    println!(
        "[PASS] criterion 4: 1000/1000 random instances agree with the \
         independent greedy-longest-prefix oracle; every word yields >= 1 token"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5 — BPC redistribution invariance
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_bpc_redistribution_invariance() {
    let _gate = gate();
    let mut rng = ChaCha20Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;

    for _ in 0..500 {
        let total_nats = rng.gen_range(0.01..100.0);
        let chars = rng.gen_range(1..=10_000usize);
        let reference = bpc(total_nats, 1, chars).unwrap();
        for masked in 1..=20usize {
            // The same total loss split across `masked` tokens.
            let split = bpc(total_nats / masked as f64, masked, chars).unwrap();
            worst = worst.max((split - reference).abs());
        }
    }

    assert!(worst < 1e-12, "worst spread {worst:e}");
    println!(
        "[PASS] criterion 5: BPC invariant under loss redistribution across \
         |M| in 1..=20 for 500 random (T, C) pairs; worst spread {worst:.2e} < 1e-12"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6 — built-in scorer oracle
// ---------------------------------------------------------------------------

/// From-scratch probability recount: rescans the training lists per query
/// instead of using the scorer's tables. Contexts are the `order - 1`
/// preceding tokens, with positions before the sentence start padded.
fn oracle_ngram_prob(
    lists: &[Vec<String>],
    order: usize,
    k: f64,
    preceding: &[String],
    token: &str,
) -> f64 {
    let pad = |tokens: &[String]| -> Vec<Option<String>> {
        let width = order - 1;
        (0..width)
            .map(|offset| {
                let back = width - offset;
                tokens.len().checked_sub(back).map(|i| tokens[i].clone())
            })
            .collect()
    };
    let mut vocab = HashSet::new();
    for list in lists {
        for t in list {
            vocab.insert(t.clone());
        }
    }
    let v = (vocab.len() + 1) as f64;

    let wanted = pad(preceding);
    let mut count = 0u64;
    let mut total = 0u64;
    for list in lists {
        for (i, t) in list.iter().enumerate() {
            if pad(&list[..i]) == wanted {
                total += 1;
                if t == token {
                    count += 1;
                }
            }
        }
    }
    (count as f64 + k) / (total as f64 + k * v)
}

fn fixture_result(id: &str, tokens: Vec<String>) -> TokenizationResult {
    let token_count = tokens.len();
    TokenizationResult {
        sentence_id: id.to_string(),
        orthography: Orthography::A,
        token_count,
        word_count: token_count,
        char_count: tokens.iter().map(|t| t.chars().count()).sum(),
        fertility: 1.0,
        tokens,
    }
}

#[test]
fn criterion_6_scorer_oracle_and_plan_determinism() {
    let _gate = gate();
    let alphabet = ["a", "b", "c", "d"];
    let mut worst: f64 = 0.0;
    let mut checked = 0;

    // Fixed fixture set: 30 seeded corpora of <= 5 sentences × <= 4 tokens,
    // crossed with orders {1, 2} and smoothing {1.0, 0.5}.
    for fixture in 0..30u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(600 + fixture);
        let sentences = rng.gen_range(1..=5);
        let results: Vec<TokenizationResult> = (0..sentences)
            .map(|s| {
                let len = rng.gen_range(1..=4);
                let tokens: Vec<String> = (0..len)
                    .map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string())
                    .collect();
                fixture_result(&format!("f{fixture}-s{s}"), tokens)
            })
            .collect();
        let lists: Vec<Vec<String>> = results.iter().map(|r| r.tokens.clone()).collect();

        for (order, k) in [(1usize, 1.0f64), (2, 1.0), (2, 0.5)] {
            let scorer = train_ngram(&lists, order, k).unwrap();
            for result in &results {
                let plan = plan_masks(result, 606, 0.5).unwrap();
                let again = plan_masks(result, 606, 0.5).unwrap();
                assert_eq!(plan, again, "mask plans must be bit-identical");

                let record = score_masked(
                    &scorer,
                    &result.tokens,
                    &plan,
                    Orthography::A,
                    "fixture",
                )
                .unwrap();
                let oracle_nll: f64 = plan
                    .masked_positions
                    .iter()
                    .map(|&p| {
                        -oracle_ngram_prob(
                            &lists,
                            order,
                            k,
                            &result.tokens[..p],
                            &result.tokens[p],
                        )
                        .ln()
                    })
                    .sum::<f64>()
                    / plan.masked_positions.len() as f64;
                worst = worst.max((record.mean_nll_nats - oracle_nll).abs());
                checked += 1;
            }
        }
    }

    assert!(worst <= 1e-12, "worst deviation {worst:e}");
    println!(
        "[PASS] criterion 6: {checked} sentence scorings match the from-scratch \
         recount (worst {worst:.2e} <= 1e-12); mask plans bit-identical across runs"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7 — latency harness sanity
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_latency_harness_sanity() {
    let _gate = gate();
    let start = Instant::now();
    let config = EncoderConfig::reference();

    // (a) analytic attention sub-term is exactly quadratic.
    for len in [64usize, 128, 256, 512] {
        assert_eq!(attention_cost(&config, 2 * len), 4 * attention_cost(&config, len));
    }

    // (b) measured median latency strictly increases over L.
    let encoder = Encoder::new(config).unwrap();
    let mut medians = Vec::new();
    for len in [64usize, 128, 256, 512] {
        let ids: Vec<u32> = (0..len as u32).map(|i| i % config.vocab_size as u32).collect();
        encoder.forward(&ids).unwrap(); // warmup
        let mut samples = Vec::new();
        for _ in 0..3 {
            samples.push(encoder.forward(&ids).unwrap().seconds);
        }
        medians.push(scripttax::latency::median(&samples));
    }
    assert!(
        medians.windows(2).all(|w| w[0] < w[1]),
        "medians not strictly increasing: {medians:?}"
    );

    // (c) self-comparison: identical sequences on both sides, with the
    // median ratio over repeated benchmark runs absorbing environment noise.
    let sequences = |side: Orthography| -> Vec<TimedSequence> {
        (0..5)
            .map(|i| TimedSequence {
                sentence_id: format!("s{i}"),
                orthography: side,
                token_ids: (0..64u32).map(|t| (t * 7 + i) % config.vocab_size as u32).collect(),
            })
            .collect()
    };
    let ratios: Vec<f64> = (0..3)
        .map(|_| {
            let run = run_benchmark(
                &config,
                &sequences(Orthography::A),
                &sequences(Orthography::B),
                1,
                5,
            )
            .unwrap();
            run.summary_b.median_seconds / run.summary_a.median_seconds
        })
        .collect();
    let rho = scripttax::latency::median(&ratios);
    assert!(
        (0.9..=1.1).contains(&rho),
        "self-comparison rho = {rho} (runs: {ratios:?})"
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "harness sanity took {elapsed}s");
    println!(
        "[PASS] criterion 7: attention ratio 4 exact; medians strictly increasing \
         {medians:?}; self-comparison rho = {rho:.3} in [0.9, 1.1]; {elapsed:.1}s < 5 min"
    );
}

// ---------------------------------------------------------------------------
// Supplementary: superlinear regime. With B sequences 3× the length of A
// at L_A = 256, the quadratic attention term dominates and the measured
// tax exceeds the 3× that linear scaling alone would give.
// ---------------------------------------------------------------------------

#[test]
fn latency_superlinear_regime_at_long_sequences() {
    let _gate = gate();
    let config = EncoderConfig::reference();
    let sequence = |side: Orthography, len: u32| -> Vec<TimedSequence> {
        vec![TimedSequence {
            sentence_id: "s0".to_string(),
            orthography: side,
            token_ids: (0..len).map(|t| t % config.vocab_size as u32).collect(),
        }]
    };
    let run = run_benchmark(
        &config,
        &sequence(Orthography::A, 256),
        &sequence(Orthography::B, 768),
        1,
        3,
    )
    .unwrap();
    let rho = run.summary_b.median_seconds / run.summary_a.median_seconds;
    assert!(rho > 3.0, "measured rho = {rho} at a 3x length ratio");
    println!("[PASS] supplementary: 3x longer sequences at L=256 cost {rho:.2}x (> 3x)");
}

// ---------------------------------------------------------------------------
// Criterion 8 — end-to-end synthetic audit
// ---------------------------------------------------------------------------

fn synthetic_fixture() -> (PairedCorpus, TokenizerSpec, ConverterPair) {
    let latin: Vec<char> = ('a'..='j').collect();
    let greek: Vec<char> = ('\u{3b1}'..='\u{3ba}').collect(); // α..κ

    let forward_rules: Vec<(String, String)> = latin
        .iter()
        .zip(&greek)
        .map(|(&l, &g)| (l.to_string(), g.to_string()))
        .collect();
    let backward_rules: Vec<(String, String)> = forward_rules
        .iter()
        .map(|(l, g)| (g.clone(), l.clone()))
        .collect();
    let forward = MappingTable::new("latin-to-greek", forward_rules, DefaultPolicy::Copy).unwrap();
    let backward = MappingTable::new("greek-to-latin", backward_rules, DefaultPolicy::Copy).unwrap();

    // 20-word lexicon over the latin letters, then 100 sentences.
    let mut rng = ChaCha20Rng::seed_from_u64(808);
    let lexicon: Vec<String> = (0..20)
        .map(|_| {
            let len = rng.gen_range(3..=7);
            (0..len)
                .map(|_| latin[rng.gen_range(0..latin.len())])
                .collect()
        })
        .collect();
    let pairs: Vec<SentencePair> = (0..100)
        .map(|i| {
            let words = rng.gen_range(6..=12);
            let text_a = (0..words)
                .map(|_| lexicon[rng.gen_range(0..lexicon.len())].clone())
                .collect::<Vec<_>>()
                .join(" ");
            let text_b = apply_mapping(&forward, &text_a);
            SentencePair {
                id: format!("s{i:03}"),
                text_a,
                text_b,
            }
        })
        .collect();
    let corpus = PairedCorpus {
        pairs,
        label_a: "latin".to_string(),
        label_b: "greek".to_string(),
        nfc_normalized: false,
    };

    // Whole words on side A; bare characters (with continuations) on side B.
    let mut tokens: Vec<String> = vec!["[UNK]".to_string()];
    let mut seen = HashSet::new();
    for word in &lexicon {
        if seen.insert(word.clone()) {
            tokens.push(word.clone());
        }
    }
    for &g in &greek {
        tokens.push(g.to_string());
        tokens.push(format!("##{g}"));
    }
    let spec = TokenizerSpec::wordpiece("synthetic", tokens, "[UNK]").unwrap();

    (corpus, spec, ConverterPair { forward, backward })
}

fn strip_latency(report_json: &str) -> serde_json::Value {
    let mut value: serde_json::Value = serde_json::from_str(report_json).unwrap();
    for model in value["models"].as_array_mut().unwrap() {
        model["latency"] = serde_json::Value::Null;
    }
    value
}

#[test]
fn criterion_8_end_to_end_synthetic_audit() {
    let _gate = gate();
    let (corpus, spec, converter) = synthetic_fixture();
    assert_eq!(corpus.n(), 100);

    let options = AuditOptions {
        mask_seed: 42,
        mask_rate: 0.15,
        scorer: ScorerSource::BuiltIn {
            order: 2,
            smoothing_k: 1.0,
        },
        bench: Some(BenchOptions {
            config: EncoderConfig::small(),
            warmup: 1,
            repeats: 3,
            add_special_tokens: true,
        }),
        converter: Some(converter),
    };

    let outcome = run_audit(&corpus, std::slice::from_ref(&spec), &options);
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    let report = &outcome.reports[0];

    // Fragmentation tax present: side A segments whole words, side B falls
    // back to characters.
    assert!((report.fertility_a - 1.0).abs() < 1e-12);
    assert!(report.delta_f > 0.0, "delta_f = {}", report.delta_f);

    // Measured latency tax present.
    let block = report.latency.as_ref().expect("live latency block");
    assert!(block.live);
    assert!(block.rho_lat > 1.0, "rho = {}", block.rho_lat);

    // BPC tax reported with full provenance.
    assert!(report.delta_bpc.is_finite());
    assert!(report.bpc_a > 0.0 && report.bpc_b > 0.0);
    let prov = &report.provenance;
    assert_eq!(prov.mask_seed, Some(42));
    assert_eq!(prov.mask_rate, Some(0.15));
    assert!(prov.corpus_hash.as_deref().is_some_and(|h| h.len() == 64));
    assert!(prov
        .tokenizer
        .as_ref()
        .is_some_and(|t| t.name == "synthetic" && t.hash.len() == 64));
    assert_eq!(prov.corpus_n, Some(100));

    // Exact-inverse mapping tables reconstruct side A perfectly.
    assert_eq!(report.cer_rt, Some(0.0));

    // The triple is assembled and internally consistent.
    let triple = report.triple().expect("summary triple");
    assert_eq!(triple.delta_f, report.delta_f);
    report.validate().unwrap();

    // Emit → reload → re-emit is byte-equal.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synthetic-report.json");
    scripttax::report::emit_report(
        &outcome.reports,
        &path,
        scripttax::report::ReportFormat::Structured,
    )
    .unwrap();
    let emitted = std::fs::read_to_string(&path).unwrap();
    let reloaded = load_report(&path).unwrap();
    assert_eq!(reloaded, outcome.reports);
    assert_eq!(structured_report_string(&reloaded).unwrap(), emitted);

    // A second full run with the same seeds is identical outside the live
    // timing block.
    let again = run_audit(&corpus, &[spec], &options);
    assert!(again.failures.is_empty());
    let second = structured_report_string(&again.reports).unwrap();
    assert_eq!(strip_latency(&emitted), strip_latency(&second));

    println!(
        "[PASS] criterion 8: synthetic audit dF={:.3} (>0), rho={:.2} (>1), \
         dBPC={:+.4}, CER_rt=0 exact; report reloads byte-equal and is \
         deterministic outside the timing block",
        report.delta_f, block.rho_lat, report.delta_bpc
    );
}
