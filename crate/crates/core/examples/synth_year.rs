//! Writes a synthetic year of market data plus two regulation signals, so
//! the CLI can be exercised without real market archives:
//!
//! ```sh
//! cargo run --release -p bess-core --example synth_year -- /tmp/demo
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

fn main() {
    let root: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "demo-data".to_string())
        .into();
    let (days, _) = bess_core::synth::planted_year(2021, 5, 2024, 0.03);
    bess_core::synth::write_price_tree(&root.join("prices"), &days).unwrap();

    // fast regulation trace and a slower low-pass-like companion
    let mut regd = String::from("index,value\n");
    let mut rega = String::from("index,value\n");
    for i in 0..3600 {
        let x = i as f64;
        let fast = (0.8 * (x * 0.37).sin() + 0.2 * (x * 2.11).cos()).clamp(-1.0, 1.0);
        let slow = (0.75 * (x * 0.12).sin()).clamp(-1.0, 1.0);
        let _ = writeln!(regd, "{i},{fast}");
        let _ = writeln!(rega, "{i},{slow}");
    }
    std::fs::write(root.join("regd.csv"), regd).unwrap();
    std::fs::write(root.join("rega.csv"), rega).unwrap();
    println!("wrote {} days under {}", days.len(), root.display());
}
