// Reduce one receiver's directional sweep to omni path loss, RMS delay
// spread and angular spread.
//
// ```bash
// cargo run --example pdp_statistics
// ```

use subthz::channel::{from_db, DirectionalPdp, LinkBudget, PdpSample, PointingAngle};
use subthz::pdp::{angular_spectrum, location_stats, DelayGrid};

fn sweep(rx_az: f64, paths: &[(f64, f64)]) -> subthz::Result<DirectionalPdp> {
    Ok(DirectionalPdp {
        rx_id: 7,
        tx_angle: PointingAngle::new(200.0, 0.0)?,
        rx_angle: PointingAngle::new(rx_az, 0.0)?,
        samples: paths
            .iter()
            .map(|&(delay_ns, dbm)| PdpSample::new(delay_ns, from_db(dbm)))
            .collect(),
    })
}

pub fn run_example() -> subthz::Result<()> {
    // boresight plus two reflections seen at other RX pointings
    let pdps = vec![
        sweep(20.0, &[(110.0, -72.0), (118.0, -84.0), (140.0, -90.0)])?,
        sweep(60.0, &[(110.9, -86.0), (152.0, -80.0)])?,
        sweep(300.0, &[(171.0, -88.5)])?,
    ];
    let budget = LinkBudget::default();
    let stats = location_stats(&pdps, &budget, &DelayGrid::default())?;

    println!("omni PDP ({} bins):", stats.omni.samples.len());
    for s in &stats.omni.samples {
        println!("  {:7.1} ns  {:7.2} dBm", s.delay_ns, 10.0 * s.power_mw.log10());
    }
    println!("path loss      {:.2} dB", stats.path_loss_db);
    println!("delay spread   {:.2} ns", stats.delay_spread_ns);
    println!("angular spread {:.3} rad", stats.angular_spread_rad);
    for m in angular_spectrum(&pdps) {
        println!("  AoA {:6.1} deg  {:.3e} mW", m.aoa_azimuth_rad.to_degrees(), m.power_mw);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
