//! Generate a synthetic household CSV so the CLI can be tried without
//! a real acquisition campaign.
//!
//! Usage: gen_demo_data <out.csv> [days] [seed]

use loadcast_core::pipeline::synth::{write_synth_csv, SynthSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "demo_house.csv".to_string());
    let days: usize = args.next().and_then(|v| v.parse().ok()).unwrap_or(40);
    let seed: u64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(1);
    let spec = SynthSpec {
        days,
        seed,
        ..Default::default()
    };
    write_synth_csv(&spec, std::path::Path::new(&out), 300).expect("write csv");
    println!("wrote {days} days of synthetic 1/300 Hz load to {out}");
}
