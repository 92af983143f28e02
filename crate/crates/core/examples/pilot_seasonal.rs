use augcast::forecast::{seasonality_benchmark, SeasonalityConfig};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let cfg = SeasonalityConfig::default();
    eprintln!("config: {cfg:?}");
    let outcomes = seasonality_benchmark::<f64>(&cfg).unwrap();
    for o in &outcomes {
        eprintln!("== condition {} (period {}) ==", o.label, o.period);
        for r in &o.reports {
            let (m50, s50) = r.mean_sd(0.5);
            let (m90, s90) = r.mean_sd(0.9);
            eprintln!("  {:<10} QL0.5 {m50:.4} ± {s50:.4}   QL0.9 {m90:.4} ± {s90:.4}", r.mode.to_string());
            for t in &r.trials {
                eprintln!("     trial {} seed {}: {:?}", t.trial, t.seed, t.ql);
            }
        }
    }
    eprintln!("total wall: {:.1}s", t0.elapsed().as_secs_f64());
}
