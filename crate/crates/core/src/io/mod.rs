//! File formats: campaign CSV, per-location tables, autocorrelation CSV,
//! JSON reports and TOML scenario files.
//!
//! Every writer goes through [`write_atomic`], so readers never observe a
//! half-written file.

mod campaign;
mod report;
mod scenario;
mod tables;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use campaign::{
    campaign_records, format_campaign, parse_campaign, read_campaign, write_campaign,
    CampaignFile, CampaignHeader, CampaignSite, CAMPAIGN_COLUMNS,
};
pub use report::{
    fits_json, summary_json, BinJson, ClassMeans, FitsReport, ParamAutocorr, SummaryReport,
    WaypointSummary,
};
pub use scenario::{parse_scenario, read_scenario, scenario_toml, ScenarioFile};
pub use tables::{
    format_autocorr, format_locations, parse_autocorr, parse_locations, quantize_record,
    read_autocorr, read_locations, LocationRow, AUTOCORR_COLUMNS, LOCATION_COLUMNS,
};

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Writes `contents` to a sibling temp file, syncs it and renames it over
/// `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

/// Formats with a fixed number of decimals, mapping negative zero to zero so
/// outputs stay byte-stable.
pub(crate) fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Rounds through the decimal text form, so the result survives a write and
/// re-read unchanged.
pub(crate) fn quantize(v: f64, decimals: usize) -> f64 {
    fixed(v, decimals).parse().expect("formatted float parses")
}

pub(crate) fn parse_f64(
    path: &Path,
    line: usize,
    column: usize,
    name: &str,
    raw: &str,
) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: format!("{name}: expected a number, got {raw:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: format!("{name}: value must be finite, got {raw:?}"),
        });
    }
    Ok(v)
}
