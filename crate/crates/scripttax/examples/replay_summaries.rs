//! Replay pre-aggregated per-orthography summaries through the
//! delta/ratio layer.
//!
//! This is how published numbers flow through the toolkit when the
//! underlying corpus, checkpoints, and hardware are unavailable: supply
//! mean fertilities, mean BPC, and throughput (or median latency) per
//! side, and only the gap/tax formulas run.
//!
//! Usage:
//! ```bash
//! cargo run --example replay_summaries
//! ```

use scripttax::report::{parse_summaries, replay_summaries, tabular_report_string};

const SUMMARIES: &str = r#"{"model":"mbert-like","fertility_a":2.35,"fertility_b":6.73,"bpc_a":8.06,"bpc_b":9.65,"throughput_a_sps":3.8,"throughput_b_sps":0.23,"cer_rt":0.31}
{"model":"xlmr-like","fertility_a":2.10,"fertility_b":6.85,"bpc_a":12.19,"bpc_b":17.94,"throughput_a_sps":3.8,"throughput_b_sps":0.23,"cer_rt":0.31}
"#;

fn main() -> scripttax::Result<()> {
    let summaries = parse_summaries(SUMMARIES)?;
    let reports = replay_summaries(&summaries)?;

    for report in &reports {
        let triple = report.triple().expect("latency supplied, triple present");
        println!(
            "{:<12} dF = {:+.2} tokens/word   rho = {:.2}x   dBPC = {:+.1}%   CER_rt = {}",
            report.model_name,
            triple.delta_f,
            triple.rho_lat,
            100.0 * triple.delta_bpc,
            report.cer_rt.map_or("-".to_string(), |c| format!("{c}")),
        );
    }

    println!("\ntabular rendering:\n{}", tabular_report_string(&reports)?);
    Ok(())
}
