// Draw spatially correlated Gaussian fields on a set of points and check
// the correlation matrix repair.
//
// ```bash
// cargo run --example correlated_field
// ```

use subthz::channel::Location;
use subthz::field::{correlation_matrix, repair_psd, CorrelatedField, FieldSpec, Seed};
use subthz::spatial::CorrShape;

pub fn run_example() -> subthz::Result<()> {
    let shape = CorrShape::exp_decay_sinusoid(6.2, 2.8)?;
    // 12 m x 12 m grid at 3 m spacing
    let mut points = Vec::new();
    for gx in 0..5 {
        for gy in 0..5 {
            points.push(Location::new(points.len() as u32, 3.0 * gx as f64, 3.0 * gy as f64, 1.5)?);
        }
    }
    let repair = repair_psd(&correlation_matrix(&points, &shape));
    println!(
        "min eigenvalue {:+.4}, Frobenius repair {:.4} ({:.2}% relative)",
        repair.min_eigenvalue,
        repair.frobenius_distance,
        100.0 * repair.relative_distance
    );

    let field = CorrelatedField::new(&points, &shape)?;
    let spec = FieldSpec::new(shape, 0.0, 7.1, None)?;
    for i in 0..3 {
        let v = field.sample(&spec, Seed(5).derive(i));
        let row: Vec<String> = v[..5].iter().map(|x| format!("{x:+6.2}")).collect();
        println!("realization {i}, first column: {}", row.join(" "));
    }

    // clipped, non-negative parameter such as a delay spread
    let ds = FieldSpec::new(CorrShape::exp_decay_sinusoid(25.5, 8.9)?, 10.0, 8.0, Some(0.0))?;
    let v = field.sample(&ds, Seed(6));
    println!("clipped draw min {:.2}", v.iter().copied().fold(f64::INFINITY, f64::min));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
