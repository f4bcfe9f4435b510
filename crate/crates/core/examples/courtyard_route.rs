// Simulate the 34-location courtyard route and analyze the ensemble.
//
// ```bash
// cargo run --release --example courtyard_route
// ```

use subthz::route::{analyze_ensemble, default_paper_scenario, AnalysisConfig, Param, Simulator};

pub fn run_example() -> subthz::Result<()> {
    let sc = default_paper_scenario();
    let sim = Simulator::new(sc.clone())?;
    println!("PSD repair of the route kernels: {:.3}%", 100.0 * sim.max_relative_repair());

    let one = sim.realization(0)?;
    println!("realization 0:");
    for r in one.records.iter().step_by(6) {
        println!(
            "  RX{:<2} {:>4} d = {:5.1} m  PL = {:6.1} dB  DS = {:5.1} ns  AS = {:.2} rad",
            r.location.id, r.los.as_str(), r.tr_distance_m, r.omni_path_loss_db, r.delay_spread_ns, r.angular_spread_rad
        );
    }

    let results = sim.run(300)?;
    let rep = analyze_ensemble(&results, &AnalysisConfig::new(sc.freq_ghz))?;
    println!("{} realizations:", rep.realizations);
    if let (Some(los), Some(nlos)) = (rep.ci_mean.los, rep.ci_mean.nlos) {
        println!("  LOS  n = {:.2}, sigma = {:.2} dB", los.ple, los.sigma_db);
        println!("  NLOS n = {:.2}, sigma = {:.2} dB", nlos.ple, nlos.sigma_db);
    }
    for p in Param::ALL {
        if let Some(m) = rep.model(p) {
            println!("  {} correlation distance {:.2} m", p.tag(), m.corr_distance_m);
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
