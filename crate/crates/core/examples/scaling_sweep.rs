//! Full acceptance sweep; pass `--geometry` to skip the eigenproblems.

use slaglab::config::Config;
use slaglab::report::{render_table, run_sweep};
use slaglab::sweep::Lab;

fn main() -> slaglab::Result<()> {
    let cfg = Config {
        geometry_only: std::env::args().any(|a| a == "--geometry"),
        ..Config::default()
    };
    let lab = Lab::new(&cfg, None)?;
    let report = run_sweep(&lab, &[0.2, 0.1, 0.05, 0.025])?;
    print!("{}", render_table(&report));
    println!("{:.1} s", report.metadata.seconds);
    Ok(())
}
