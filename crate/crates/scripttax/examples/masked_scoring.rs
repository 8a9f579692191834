//! Masked scoring and bits per character.
//!
//! Plans seeded masks over tokenized sentences, scores them with the
//! built-in n-gram scorer, converts the losses to BPC, and shows why BPC
//! is the right unit: redistributing the same total loss over more, smaller
//! tokens lowers per-token NLL but leaves BPC untouched.
//!
//! Usage:
//! ```bash
//! cargo run --example masked_scoring
//! ```

use scripttax::corpus::{parse_corpus, CorpusFormat, CorpusOptions};
use scripttax::metrics::{bpc, bpc_tax, kahan_mean};
use scripttax::scorer::{plan_masks, score_masked, train_ngram};
use scripttax::tokenizer::{tokenize_corpus, TokenizerSpec};

fn main() -> scripttax::Result<()> {
    let corpus = parse_corpus(
        "s1\tthe cat sat here\t\u{3b6}\u{3b7} \u{3b8}\u{3b9} \u{3ba}\u{3b6} \u{3b7}\u{3b8}\n\
         s2\tthe cat ran far\t\u{3b6}\u{3b9} \u{3b7}\u{3ba} \u{3b8}\u{3b6} \u{3b9}\u{3b7}\n\
         s3\tthe cat was near\t\u{3ba}\u{3b8} \u{3b6}\u{3b7} \u{3b9}\u{3ba} \u{3b8}\u{3b9}\n",
        CorpusFormat::Tsv,
        &CorpusOptions::default(),
    )?;
    let tokens: Vec<String> = ["[UNK]", "the", "cat", "sat", "here", "ran", "far", "was", "near"]
        .map(String::from)
        .into_iter()
        .chain(('\u{3b6}'..='\u{3ba}').map(|c| c.to_string()))
        .chain(('\u{3b6}'..='\u{3ba}').map(|c| format!("##{c}")))
        .collect();
    let spec = TokenizerSpec::wordpiece("scoring-demo", tokens, "[UNK]")?;
    let (side_a, side_b) = tokenize_corpus(&spec, &corpus)?;

    let seed = 42;
    let mask_rate = 0.3;
    let mut means = Vec::new();
    for (label, results) in [("A", &side_a), ("B", &side_b)] {
        let lists: Vec<Vec<String>> = results.iter().map(|r| r.tokens.clone()).collect();
        let scorer = train_ngram(&lists, 2, 1.0)?;
        let mut values = Vec::new();
        println!("side {label}:");
        for result in results {
            let plan = plan_masks(result, seed, mask_rate)?;
            let record =
                score_masked(&scorer, &result.tokens, &plan, result.orthography, &spec.name)?;
            let value = bpc(record.mean_nll_nats, record.masked_count, result.char_count)?;
            println!(
                "  {}  masked {:?}  nll {:.4} nats  bpc {:.4}",
                result.sentence_id, plan.masked_positions, record.mean_nll_nats, value
            );
            values.push(value);
        }
        means.push(kahan_mean(values)?);
    }
    let tax = bpc_tax(means[0], means[1])?;
    println!(
        "\nmean BPC A = {:.4}, mean BPC B = {:.4}, BPC tax = {:+.1}%",
        means[0],
        means[1],
        100.0 * tax
    );

    // The per-token-loss artifact: same total information, more tokens.
    let total_nats = 6.0;
    let chars = 24;
    println!("\nsame {total_nats} nats over {chars} chars:");
    for masked in [1usize, 3, 12] {
        let per_token = total_nats / masked as f64;
        let value = bpc(per_token, masked, chars)?;
        println!(
            "  |M| = {masked:2}: per-token NLL {per_token:.3} nats (looks {}), BPC {value:.4}",
            if masked > 1 { "lower" } else { "higher" }
        );
    }
    println!("per-token loss moves with the split; BPC does not.");
    Ok(())
}
