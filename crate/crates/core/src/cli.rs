//! Command-line front end. The `subthz` binary parses arguments and hands
//! them to [`run`], which returns the process exit code.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{exit, Error};
use crate::io::{
    campaign_records, fits_json, format_autocorr, format_locations, parse_campaign,
    parse_locations, quantize, quantize_record, read_autocorr, read_scenario, summary_json,
    write_atomic, ClassMeans, FitsReport, LocationRow, ParamAutocorr, SummaryReport,
    WaypointSummary,
};
use crate::route::{
    analyze_ensemble, default_paper_scenario, route_series, AnalysisConfig, Param, SimResult,
    Simulator,
};
use crate::spatial::{estimate_autocorr, fit_corr_model, CorrFamily, FitOptions};

#[derive(Debug, Parser)]
#[command(name = "subthz", version, about = "Spatial statistics for sub-THz channel measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-location statistics, autocorrelation and model fits for a campaign
    Analyze(AnalyzeArgs),
    /// Simulate realizations of a route scenario
    Simulate(SimulateArgs),
    /// Fit a correlation model to an autocorrelation table
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Exp,
    Expsin,
}

impl From<FamilyArg> for CorrFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Exp => CorrFamily::Exponential,
            FamilyArg::Expsin => CorrFamily::ExpDecaySinusoid,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Campaign file, or a `locations.csv` written by `simulate`
    pub input: PathBuf,
    /// Output directory
    #[arg(short, long, default_value = "out")]
    pub out: PathBuf,
    /// Carrier frequency for `locations.csv` input (campaign files carry their own)
    #[arg(long, default_value_t = 142.0)]
    pub freq_ghz: f64,
    /// Autocorrelation bin width in metres
    #[arg(long, default_value_t = crate::spatial::DEFAULT_DELTA_D_M)]
    pub delta_d: f64,
    /// Bins with fewer pairs are dropped
    #[arg(long, default_value_t = crate::spatial::DEFAULT_MIN_PAIRS)]
    pub min_pairs: usize,
    /// Correlation family fitted to every parameter
    #[arg(long, value_enum, default_value_t = FamilyArg::Expsin)]
    pub family: FamilyArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario TOML file
    #[arg(long, conflicts_with = "paper_default", required_unless_present = "paper_default")]
    pub scenario: Option<PathBuf>,
    /// Use the built-in 142 GHz courtyard route
    #[arg(long)]
    pub paper_default: bool,
    /// Number of realizations
    #[arg(short = 'n', long, default_value_t = 1)]
    pub realizations: usize,
    /// Overrides the scenario seed
    #[arg(long, env = "SUBTHZ_SEED")]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(short, long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Autocorrelation CSV with columns d_k, rho, pair_count
    pub autocorr_csv: PathBuf,
    #[arg(long, value_enum, default_value_t = FamilyArg::Expsin)]
    pub family: FamilyArg,
    /// Bin width the table was estimated with
    #[arg(long, default_value_t = crate::spatial::DEFAULT_DELTA_D_M)]
    pub delta_d: f64,
    /// Weight bins by pair count
    #[arg(long)]
    pub weighted: bool,
    /// Also write the model JSON here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// An error together with the step that raised it.
#[derive(Debug)]
pub struct Failure {
    pub op: String,
    pub error: Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.op, self.error)
    }
}

trait Context<T> {
    fn op(self, op: impl Into<String>) -> Result<T, Failure>;
}

impl<T> Context<T> for crate::Result<T> {
    fn op(self, op: impl Into<String>) -> Result<T, Failure> {
        self.map_err(|error| Failure {
            op: op.into(),
            error,
        })
    }
}

/// Runs a parsed command and returns its exit code. Failures are reported on
/// stderr.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Fit(a) => fit(&a).map(|json| print!("{json}")),
    };
    match result {
        Ok(()) => exit::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.error.exit_code()
        }
    }
}

fn is_campaign(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim_start().starts_with('#'))
        .is_some_and(|header| header.split(',').any(|c| c.trim() == "power_dbm"))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomic(path, contents.as_bytes()).op("write")
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.input)
        .map_err(|e| Error::Io {
            path: a.input.clone(),
            source: e,
        })
        .op("read")?;
    let (records, freq_ghz) = if is_campaign(&text) {
        let file = parse_campaign(&text, &a.input).op("parse campaign")?;
        let recs = campaign_records(&file).op("location statistics")?;
        (recs, file.header.budget.center_freq_ghz)
    } else {
        let rows = parse_locations(&text, &a.input).op("parse locations")?;
        (rows.into_iter().map(|r| r.record).collect(), a.freq_ghz)
    };
    let family = a.family.into();
    let cfg = AnalysisConfig {
        freq_ghz,
        delta_d_m: a.delta_d,
        min_pairs: a.min_pairs,
        families: [family; 3],
        ..AnalysisConfig::new(freq_ghz)
    };
    let locations_path = a.out.join("locations.csv");

    let series = match route_series(&records, &cfg) {
        Ok(s) => s,
        Err(e) => {
            if matches!(
                e,
                Error::InsufficientSamples { .. } | Error::DegenerateDistances
            ) {
                let rows: Vec<LocationRow> = records
                    .iter()
                    .map(|r| LocationRow {
                        record: r.clone(),
                        shadow_fading_db: None,
                    })
                    .collect();
                write(&locations_path, &format_locations(&rows))?;
                log::warn!("autocorrelation skipped: path-loss fit failed");
            }
            return Err(e).op("fit_ci");
        }
    };
    let rows: Vec<LocationRow> = records
        .iter()
        .map(|r| LocationRow {
            record: r.clone(),
            shadow_fading_db: series
                .shadow_fading
                .iter()
                .find(|(id, _)| *id == r.location.id)
                .map(|&(_, x)| x),
        })
        .collect();
    write(&locations_path, &format_locations(&rows))?;

    let mut correlation = std::collections::BTreeMap::new();
    for (p, s) in Param::ALL.into_iter().zip(&series.series) {
        let tag = p.tag();
        let est = estimate_autocorr(s, cfg.delta_d_m, cfg.min_pairs)
            .op(format!("estimate_autocorr({tag})"))?;
        write(&a.out.join(format!("autocorr_{tag}.csv")), &format_autocorr(&est))?;
        let model = fit_corr_model(&est, cfg.family(p), &cfg.fit)
            .op(format!("fit_corr_model({tag})"))?;
        correlation.insert(tag.to_string(), Some(model));
    }
    let report = FitsReport {
        freq_ghz,
        delta_d_m: cfg.delta_d_m,
        path_loss: series.ci,
        correlation,
    };
    write(&a.out.join("fits.json"), &fits_json(&report))
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let mut scenario = match &a.scenario {
        Some(path) => read_scenario(path).op("read scenario")?,
        None => default_paper_scenario(),
    };
    if let Some(seed) = a.seed {
        scenario.seed = crate::field::Seed(seed);
    }
    if a.realizations == 0 {
        return Err(Error::invalid("--realizations must be at least 1")).op("simulate");
    }
    let sim = Simulator::new(scenario).op("simulate")?;
    let results: Vec<SimResult> = sim
        .run(a.realizations)
        .op("simulate")?
        .into_iter()
        .map(|mut r| {
            r.records = r.records.iter().map(quantize_record).collect();
            r.shadow_fading_db = r.shadow_fading_db.iter().map(|&x| quantize(x, 6)).collect();
            r
        })
        .collect();

    for r in &results {
        let rows: Vec<LocationRow> = r
            .records
            .iter()
            .zip(&r.shadow_fading_db)
            .map(|(rec, &chi)| LocationRow {
                record: rec.clone(),
                shadow_fading_db: Some(chi),
            })
            .collect();
        let dir = a.out.join(format!("realization_{:04}", r.realization_index));
        write(&dir.join("locations.csv"), &format_locations(&rows))?;
    }

    let sc = sim.scenario();
    let report = analyze_ensemble(&results, &AnalysisConfig::new(sc.freq_ghz)).op("analyze ensemble")?;
    let n = results.len() as f64;
    let waypoints = sc
        .waypoints
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let pl: Vec<f64> = results.iter().map(|r| r.records[i].omni_path_loss_db).collect();
            let mean = pl.iter().sum::<f64>() / n;
            let var = pl.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            WaypointSummary {
                rx_id: w.location.id,
                los: w.los,
                distance_m: results[0].records[i].tr_distance_m,
                path_loss_mean_db: mean,
                path_loss_std_db: var.sqrt(),
            }
        })
        .collect();
    let autocorrelation = report
        .estimates
        .iter()
        .map(|(p, est)| (p.tag().to_string(), ParamAutocorr::new(est, report.model(*p).copied())))
        .collect();
    let summary = SummaryReport {
        seed: sc.seed.0,
        realizations: results.len(),
        freq_ghz: sc.freq_ghz,
        waypoints,
        path_loss: report.ci_mean,
        delay_spread_mean_ns: ClassMeans {
            los: report.ds_mean.los,
            nlos: report.ds_mean.nlos,
        },
        angular_spread_mean_rad: ClassMeans {
            los: report.as_mean.los,
            nlos: report.as_mean.nlos,
        },
        autocorrelation,
    };
    write(&a.out.join("summary.json"), &summary_json(&summary))
}

/// Fits the table and returns the model as JSON.
pub fn fit(a: &FitArgs) -> Result<String, Failure> {
    let est = read_autocorr(&a.autocorr_csv, a.delta_d).op("parse autocorrelation")?;
    let opts = FitOptions {
        weighted: a.weighted,
        ..FitOptions::default()
    };
    let model = fit_corr_model(&est, a.family.into(), &opts).op("fit_corr_model")?;
    let mut json = serde_json::to_string_pretty(&model).expect("model serializes");
    json.push('\n');
    if let Some(out) = &a.out {
        write(out, &json)?;
    }
    Ok(json)
}
