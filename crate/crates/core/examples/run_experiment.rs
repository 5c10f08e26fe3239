//! Run a config-driven experiment into a temporary directory and list what it wrote.
//!
//! Usage: `cargo run --release --example run_experiment -- [config.json]`

use transport_filter::experiment::{run_experiment, ExperimentConfig};

fn main() -> transport_filter::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/duffing_linear_maps.json").into());
    let dir = tempfile::tempdir()?;
    let config = ExperimentConfig {
        output_dir: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::from_path(&path)?
    };
    let result = run_experiment(&config);

    let mut files: Vec<_> = std::fs::read_dir(dir.path())?.filter_map(|e| e.ok()).collect();
    files.sort_by_key(|e| e.file_name());
    for entry in files {
        println!("{:<16} {:>10} bytes", entry.file_name().to_string_lossy(), entry.metadata()?.len());
    }
    let report = result?;
    let [a, d, b] = report.parameter_means(80.0, 100.0);
    println!(
        "{} steps in {:.2} s; mean over t in [80, 100]: alpha {a:+.4}, delta {d:+.4}, beta {b:+.4}",
        report.steps.len(),
        report.total_wall_time
    );
    Ok(())
}
