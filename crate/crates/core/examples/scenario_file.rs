// Load a route scenario from TOML, tweak it and simulate.
//
// ```bash
// cargo run --example scenario_file
// ```

use std::path::Path;

use subthz::io::{parse_scenario, scenario_toml};
use subthz::route::{default_paper_scenario, simulate};

pub fn run_example() -> subthz::Result<()> {
    let text = scenario_toml(&default_paper_scenario());
    println!("{}", text.lines().take(12).collect::<Vec<_>>().join("\n"));

    // double the NLOS shadow fading
    let edited = text.replacen("sigma_db = 7.1", "sigma_db = 14.2", 1);
    let sc = parse_scenario(&edited, Path::new("edited.toml"))?;
    println!("...\nNLOS sigma now {} dB", sc.nlos_model.sigma_db);

    let out = simulate(&sc, 200)?;
    let i = sc.waypoints.iter().position(|w| w.location.id == 12).unwrap();
    let pl: Vec<f64> = out.iter().map(|r| r.records[i].omni_path_loss_db).collect();
    let mean = pl.iter().sum::<f64>() / pl.len() as f64;
    let sd = (pl.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / pl.len() as f64).sqrt();
    println!("RX12 path loss over {} realizations: {mean:.1} +/- {sd:.1} dB", pl.len());

    let broken = text.replacen("ple = 2.01", "ple = -1.0", 1);
    match parse_scenario(&broken, Path::new("broken.toml")) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
