// Evaluate the exponential and exponentially decaying sinusoid correlation
// functions and their correlation distances.
//
// ```bash
// cargo run --example correlation_models
// ```

use subthz::spatial::{CorrModel, CorrShape};

pub fn run_example() -> subthz::Result<()> {
    let models = [
        ("shadow fading", CorrShape::exp_decay_sinusoid(6.2, 2.8)?),
        ("delay spread", CorrShape::exp_decay_sinusoid(25.5, 8.9)?),
        ("angular spread", CorrShape::exp_decay_sinusoid(55.6, 9.4)?),
        ("exponential", CorrShape::exponential(10.0)?),
    ];
    for (name, shape) in models {
        let m = CorrModel::new(shape)?;
        let h = 1e-6;
        println!(
            "{name:>15}: corr distance {:6.2} m, slope at 0 {:+.1e}",
            m.corr_distance_m,
            (m.eval(h) - m.eval(0.0)) / h
        );
    }

    println!("\n   d [m]   SF       DS       AS");
    for i in 0..=10 {
        let d = 2.0 * i as f64;
        let row: Vec<String> = models[..3].iter().map(|(_, s)| format!("{:+.3}", s.eval(d))).collect();
        println!("{d:8.1}   {}", row.join("   "));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
