//! The complete audit pipeline over a synthetic paired corpus.
//!
//! Generates 40 sentence pairs whose B side is a character-for-character
//! transliteration of the A side, audits them with a tokenizer that keeps
//! A as whole words but fragments B to characters, and writes the
//! structured report plus plot-ready series to `target/audit-demo/`.
//!
//! Run optimized; the latency axis is a live benchmark:
//! ```bash
//! cargo run --release --example full_audit
//! ```

use scripttax::convert::{apply_mapping, DefaultPolicy, MappingTable};
use scripttax::corpus::{PairedCorpus, SentencePair};
use scripttax::latency::EncoderConfig;
use scripttax::report::{
    emit_plot_data, emit_report, run_audit, AuditOptions, BenchOptions, ConverterPair,
    ReportFormat, ScorerSource,
};
use scripttax::tokenizer::TokenizerSpec;

fn main() -> scripttax::Result<()> {
    // Deterministic toy lexicon and corpus.
    let lexicon = [
        "mara", "toki", "sela", "pona", "kala", "moku", "suno", "tomo", "lipu", "kule",
    ];
    let latin: Vec<char> = "aeiklmnopstu".chars().collect();
    let greek: Vec<char> = "\u{3b1}\u{3b5}\u{3b9}\u{3ba}\u{3bb}\u{3bc}\u{3bd}\u{3bf}\u{3c0}\u{3c3}\u{3c4}\u{3c5}"
        .chars()
        .collect();
    let forward = MappingTable::new(
        "latin-to-greek",
        latin.iter().zip(&greek).map(|(&l, &g)| (l.to_string(), g.to_string())).collect(),
        DefaultPolicy::Copy,
    )?;
    let backward = MappingTable::new(
        "greek-to-latin",
        greek.iter().zip(&latin).map(|(&g, &l)| (g.to_string(), l.to_string())).collect(),
        DefaultPolicy::Copy,
    )?;

    let pairs: Vec<SentencePair> = (0..40)
        .map(|i| {
            let words = 5 + (i * 7) % 4;
            let text_a = (0..words)
                .map(|w| lexicon[(i * 3 + w * 5) % lexicon.len()])
                .collect::<Vec<_>>()
                .join(" ");
            let text_b = apply_mapping(&forward, &text_a);
            SentencePair {
                id: format!("s{i:02}"),
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

    // Whole words on side A, character fallback on side B.
    let tokens: Vec<String> = std::iter::once("[UNK]".to_string())
        .chain(lexicon.iter().map(|w| w.to_string()))
        .chain(greek.iter().map(|c| c.to_string()))
        .chain(greek.iter().map(|c| format!("##{c}")))
        .collect();
    let spec = TokenizerSpec::wordpiece("synthetic-wp", tokens, "[UNK]")?;

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
        converter: Some(ConverterPair { forward, backward }),
    };

    let outcome = run_audit(&corpus, &[spec], &options);
    for failure in &outcome.failures {
        eprintln!("model {:?} failed: {}", failure.model_name, failure.diagnostic);
    }
    let report = &outcome.reports[0];
    let block = report.latency.as_ref().expect("latency block");
    println!("model {}:", report.model_name);
    println!("  fertility    {:.3} -> {:.3}  (dF = {:+.3})", report.fertility_a, report.fertility_b, report.delta_f);
    println!("  BPC          {:.3} -> {:.3}  (dBPC = {:+.1}%)", report.bpc_a, report.bpc_b, 100.0 * report.delta_bpc);
    println!(
        "  latency      {:.3}ms -> {:.3}ms  (rho = {:.2}x, quadratic model {:.2}x)",
        block.median_a_seconds * 1e3,
        block.median_b_seconds * 1e3,
        block.rho_lat,
        block.quadratic_predicted_ratio.unwrap_or(f64::NAN),
    );
    println!("  CER_rt       {:?}", report.cer_rt);
    println!("  triple       {:?}", report.triple().unwrap());

    let out_dir = std::path::Path::new("target/audit-demo");
    std::fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join("report.json");
    emit_report(&outcome.reports, &report_path, ReportFormat::Structured)?;
    emit_report(&outcome.reports, out_dir.join("report.tsv"), ReportFormat::Tabular)?;
    let (fertility_path, points_path) = emit_plot_data(&outcome.reports, out_dir)?;
    println!("\nwrote {}", report_path.display());
    println!("wrote {}", out_dir.join("report.tsv").display());
    println!("wrote {}", fertility_path.display());
    println!("wrote {}", points_path.display());
    Ok(())
}
