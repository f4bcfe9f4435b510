// Turn simulated route records into a directional-PDP campaign file, then
// read it back and run the measurement pipeline on it.
//
// ```bash
// cargo run --example synthetic_campaign
// ```

use subthz::channel::LinkBudget;
use subthz::io::{campaign_records, read_campaign, write_campaign};
use subthz::route::{analyze_route, default_paper_scenario, simulate, AnalysisConfig, Param};
use subthz::synth::synthesize_campaign;

pub fn run_example() -> subthz::Result<()> {
    let sc = default_paper_scenario();
    let records = simulate(&sc, 1)?.remove(0).records;
    let campaign = synthesize_campaign(sc.tx, &records, LinkBudget::default(), 2.0)?;

    let dir = std::env::temp_dir().join(format!("subthz-example-{}", std::process::id()));
    let path = dir.join("campaign.csv");
    write_campaign(&path, &campaign)?;
    println!("wrote {} PDPs for {} locations to {}", campaign.pdps.len(), campaign.sites.len(), path.display());

    let measured = campaign_records(&read_campaign(&path)?)?;
    let worst = records
        .iter()
        .zip(&measured)
        .map(|(a, b)| (a.omni_path_loss_db - b.omni_path_loss_db).abs())
        .fold(0.0, f64::max);
    println!("largest path-loss difference after the round trip: {worst:.1e} dB");

    let report = analyze_route(&measured, &AnalysisConfig::new(sc.freq_ghz))?;
    for p in Param::ALL {
        let r = report.param(p).expect("all parameters analyzed");
        println!("{}: {} bins, corr distance {:.2} m", p.tag(), r.estimate.bins.len(), r.model.corr_distance_m);
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
