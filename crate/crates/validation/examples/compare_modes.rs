//! Trains every loss mode on the default synthetic benchmark and prints
//! failure-detection metrics per setting.
//!
//! ```text
//! cargo run --release -p tal-validation --example compare_modes -- [seeds] [epochs]
//! ```

use tal_core::metrics::Setting;
use tal_core::scoring::ScoreKind;
use tal_validation::run_seed;

fn main() -> tal_core::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200);
    for seed in 0..seeds {
        let run = run_seed(seed, epochs)?;
        for (name, model, kind) in [
            ("ce", &run.ce, ScoreKind::Msp),
            ("fixed-t", &run.fixed_t, ScoreKind::Cosine),
            ("tal", &run.tal, ScoreKind::Cosine),
        ] {
            print!("seed {seed} {name:8} {kind:8}");
            for setting in Setting::ALL {
                let m = run.metrics(model, kind, setting)?;
                print!(
                    " | {setting} aurc {:.1} auroc {:.2}",
                    m.aurc.unwrap_or(f64::NAN) * 1e3,
                    m.auroc.unwrap_or(f64::NAN) * 100.0
                );
            }
            println!();
        }
    }
    Ok(())
}
