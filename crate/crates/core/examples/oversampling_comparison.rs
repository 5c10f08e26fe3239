//! Compare posterior parameter spread without and with likelihood oversampling.
//!
//! Usage: `cargo run --release --example oversampling_comparison -- [config.json] [seeds]`
//! with seeds as a comma-separated list, default `1,2,3`.

use transport_filter::experiment::{compare_oversampling, ExperimentConfig};

fn main() -> transport_filter::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/duffing_linear_maps.json").into());
    let seeds: Vec<u64> = args
        .next()
        .unwrap_or_else(|| "1,2,3".into())
        .split(',')
        .filter_map(|s| s.trim().parse().ok())
        .collect();
    let config = ExperimentConfig::from_path(&path)?;
    println!("{}", compare_oversampling(&config, &seeds)?);
    Ok(())
}
