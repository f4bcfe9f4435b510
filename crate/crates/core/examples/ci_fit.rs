// Fit close-in path-loss models per LOS class and read off shadow fading.
//
// ```bash
// cargo run --example ci_fit
// ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use subthz::channel::LosClass;
use subthz::pathloss::{fit_ci_by_class, fspl_1m, shadow_fading, CiModel, PathLossSample};

pub fn run_example() -> subthz::Result<()> {
    let freq = 142.0;
    let truth = [
        (LosClass::Los, CiModel::new(freq, 2.01, 2.9)?),
        (LosClass::Nlos, CiModel::new(freq, 3.20, 7.1)?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut samples = Vec::new();
    for (class, model) in &truth {
        let chi = Normal::new(0.0, model.sigma_db).unwrap();
        for _ in 0..400 {
            let d = rng.random_range(24.0..53.0);
            samples.push(PathLossSample {
                rx_id: samples.len() as u32,
                distance_m: d,
                path_loss_db: model.mean_path_loss(d)? + chi.sample(&mut rng),
                los: *class,
            });
        }
    }

    println!("FSPL at 1 m, {freq} GHz: {:.2} dB", fspl_1m(freq));
    let fits = fit_ci_by_class(&samples, freq, 3)?;
    for (class, model) in &truth {
        let fit = fits.get(*class).expect("both classes present");
        println!(
            "{class:>4}: n = {:.3} (true {:.2}), sigma = {:.2} dB (true {:.1})",
            fit.ple, model.ple, fit.sigma_db, model.sigma_db
        );
    }

    let los: Vec<_> = samples.iter().filter(|s| s.los == LosClass::Los).copied().collect();
    let chi = shadow_fading(&los, fits.los.as_ref().unwrap());
    let worst = chi.iter().map(|(_, x)| x.abs()).fold(0.0, f64::max);
    println!("largest LOS shadow-fading magnitude: {worst:.2} dB");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
