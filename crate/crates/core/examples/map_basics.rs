//! Build a small triangular map by hand, push a point through it, invert it
//! back and round-trip the map through JSON.

use transport_filter::map::{InversionOptions, Rectifier, TriangularTransportMap};

fn main() -> transport_filter::Result<()> {
    // Three inputs, the first held fixed: components take 2 and 3 inputs.
    let mut map = TriangularTransportMap::total_order(3, 1, 2, Rectifier::Exponential, 32)?;
    let coefficients: Vec<f64> = (0..map.num_coefficients())
        .map(|k| 0.1 * ((k as f64) * 0.7).sin())
        .collect();
    map.set_coefficients(&coefficients)?;
    println!("{} components, {} coefficients", map.output_dim(), map.num_coefficients());
    for (k, c) in map.components().iter().enumerate() {
        println!("  component {k}: {} inputs, {} terms", c.input_dim(), c.num_coefficients());
    }

    let x = [0.4, -1.1, 0.8];
    let z = map.evaluate(&x)?;
    println!("S({x:?}) = {z:?}");
    println!("log det = {:.6}", map.log_det_jacobian(&x)?);

    let back = map.condition_inverse(&x[..1], &z, &InversionOptions::default())?;
    let err = back.iter().zip(&x[1..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("inverse {back:?}, max error {err:.2e}");

    let json = map.to_json();
    let reread = TriangularTransportMap::from_json(&json)?;
    println!("JSON round trip exact: {}", reread.coefficients() == map.coefficients());
    Ok(())
}
