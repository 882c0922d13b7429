//! Smooth a stats CSV into the moving-average curves used for plots.
//!
//! ```text
//! cargo run --release --example plot_data -- runs/aa/stats.csv 500
//! ```

use std::path::PathBuf;

use artic::harness::plot;

fn main() -> artic::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(stats) = args.next().map(PathBuf::from) else {
        eprintln!("usage: plot_data <stats.csv> [window]");
        std::process::exit(2);
    };
    let window: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let rows = plot::smooth(&plot::read_stats(&stats)?, window)?;
    plot::write_smoothed(&rows, &mut std::io::stdout().lock())
}
