use std::collections::BTreeMap;
use std::path::Path;

use crate::channel::{Location, LosClass, RxRecord};
use crate::error::{Error, Result};
use crate::spatial::{AutocorrBin, AutocorrEstimate};

use super::{fixed, parse_f64, quantize, read_text};

pub const LOCATION_COLUMNS: [&str; 11] = [
    "rx_id",
    "x",
    "y",
    "z",
    "los",
    "distance_m",
    "path_loss_db",
    "shadow_fading_db",
    "delay_spread_ns",
    "angular_spread_rad",
    "excess_loss_db",
];

pub const AUTOCORR_COLUMNS: [&str; 3] = ["d_k", "rho", "pair_count"];

/// One row of `locations.csv`. Shadow fading is blank when no path-loss model
/// covers the location's class.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationRow {
    pub record: RxRecord,
    pub shadow_fading_db: Option<f64>,
}

/// Rounds a record to the precision `locations.csv` stores.
pub fn quantize_record(r: &RxRecord) -> RxRecord {
    RxRecord {
        location: Location {
            id: r.location.id,
            x: quantize(r.location.x, 6),
            y: quantize(r.location.y, 6),
            z: quantize(r.location.z, 6),
        },
        los: r.los,
        tr_distance_m: quantize(r.tr_distance_m, 6),
        omni_path_loss_db: quantize(r.omni_path_loss_db, 6),
        delay_spread_ns: quantize(r.delay_spread_ns, 3),
        angular_spread_rad: quantize(r.angular_spread_rad, 6),
        excess_loss_db: r.excess_loss_db.map(|x| quantize(x, 6)),
    }
}

pub fn format_locations(rows: &[LocationRow]) -> String {
    let mut out = LOCATION_COLUMNS.join(",");
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| fixed(x, 6));
    for row in rows {
        let r = &row.record;
        let cells = [
            r.location.id.to_string(),
            fixed(r.location.x, 6),
            fixed(r.location.y, 6),
            fixed(r.location.z, 6),
            r.los.to_string(),
            fixed(r.tr_distance_m, 6),
            fixed(r.omni_path_loss_db, 6),
            opt(row.shadow_fading_db),
            fixed(r.delay_spread_ns, 3),
            fixed(r.angular_spread_rad, 6),
            opt(r.excess_loss_db),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Maps each expected column to its index; all of `required` must be there
/// and nothing outside `known`.
fn column_map(
    rdr: &mut csv::Reader<&[u8]>,
    path: &Path,
    known: &[&str],
    required: &[&str],
) -> Result<BTreeMap<String, usize>> {
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, 1, e.to_string()))?
        .clone();
    let mut col = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        if !known.contains(&name) {
            return Err(parse_err(path, 1, i + 1, format!("unknown column {name:?}")));
        }
        if col.insert(name.to_string(), i).is_some() {
            return Err(parse_err(path, 1, i + 1, format!("duplicate column {name:?}")));
        }
    }
    for name in required {
        if !col.contains_key(*name) {
            return Err(parse_err(path, 1, 1, format!("missing column {name:?}")));
        }
    }
    Ok(col)
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

pub fn read_locations(path: &Path) -> Result<Vec<LocationRow>> {
    parse_locations(&read_text(path)?, path)
}

pub fn parse_locations(text: &str, path: &Path) -> Result<Vec<LocationRow>> {
    let mut rdr = reader(text);
    let optional = ["shadow_fading_db", "excess_loss_db"];
    let required: Vec<&str> = LOCATION_COLUMNS
        .iter()
        .copied()
        .filter(|c| !optional.contains(c))
        .collect();
    let col = column_map(&mut rdr, path, &LOCATION_COLUMNS, &required)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(1, |p| p.line() as usize);
            parse_err(path, line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(1, |p| p.line() as usize);
        let cell = |name: &str| col.get(name).map(|&i| (i + 1, rec.get(i).unwrap_or("")));
        let num = |name: &str| {
            let (c, raw) = cell(name).expect("required column");
            parse_f64(path, line, c, name, raw)
        };
        let opt = |name: &str| match cell(name) {
            None | Some((_, "")) => Ok(None),
            Some((c, raw)) => parse_f64(path, line, c, name, raw).map(Some),
        };
        let (c, raw) = cell("rx_id").expect("required column");
        let id: u32 = raw
            .parse()
            .map_err(|_| parse_err(path, line, c, format!("rx_id: expected an unsigned integer, got {raw:?}")))?;
        let (c, raw) = cell("los").expect("required column");
        let los: LosClass = raw
            .parse()
            .map_err(|e: Error| parse_err(path, line, c, e.to_string()))?;
        let location = Location::new(id, num("x")?, num("y")?, num("z")?)
            .map_err(|e| parse_err(path, line, col["x"] + 1, e.to_string()))?;
        rows.push(LocationRow {
            record: RxRecord {
                location,
                los,
                tr_distance_m: num("distance_m")?,
                omni_path_loss_db: num("path_loss_db")?,
                delay_spread_ns: num("delay_spread_ns")?,
                angular_spread_rad: num("angular_spread_rad")?,
                excess_loss_db: opt("excess_loss_db")?,
            },
            shadow_fading_db: opt("shadow_fading_db")?,
        });
    }
    Ok(rows)
}

pub fn format_autocorr(est: &AutocorrEstimate) -> String {
    let mut out = AUTOCORR_COLUMNS.join(",");
    out.push('\n');
    for b in &est.bins {
        out.push_str(&format!(
            "{},{},{}\n",
            fixed(b.distance_m, 6),
            fixed(b.rho, 9),
            b.pair_count
        ));
    }
    out
}

pub fn read_autocorr(path: &Path, delta_d_m: f64) -> Result<AutocorrEstimate> {
    parse_autocorr(&read_text(path)?, path, delta_d_m)
}

/// Parses an autocorrelation table. Bin indices are recovered from the
/// distances using `delta_d_m`.
pub fn parse_autocorr(text: &str, path: &Path, delta_d_m: f64) -> Result<AutocorrEstimate> {
    if !(delta_d_m > 0.0 && delta_d_m.is_finite()) {
        return Err(Error::invalid(format!("bin width must be positive, got {delta_d_m}")));
    }
    let mut rdr = reader(text);
    let col = column_map(&mut rdr, path, &AUTOCORR_COLUMNS, &AUTOCORR_COLUMNS)?;
    let mut bins: Vec<AutocorrBin> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(1, |p| p.line() as usize);
            parse_err(path, line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(1, |p| p.line() as usize);
        let cell = |name: &str| (col[name] + 1, rec.get(col[name]).unwrap_or(""));
        let (c, raw) = cell("d_k");
        let d = parse_f64(path, line, c, "d_k", raw)?;
        if d < 0.0 || bins.last().is_some_and(|b| d <= b.distance_m) {
            return Err(parse_err(path, line, c, "d_k must be non-negative and strictly increasing"));
        }
        let (c, raw) = cell("rho");
        let rho = parse_f64(path, line, c, "rho", raw)?;
        if !(-1.0..=1.0).contains(&rho) {
            return Err(parse_err(path, line, c, format!("rho must lie in [-1, 1], got {rho}")));
        }
        let (c, raw) = cell("pair_count");
        let pair_count: usize = raw
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| parse_err(path, line, c, format!("pair_count: expected a positive integer, got {raw:?}")))?;
        bins.push(AutocorrBin {
            k: (d / delta_d_m + 0.5).floor() as i64,
            distance_m: d,
            rho,
            pair_count,
        });
    }
    Ok(AutocorrEstimate { delta_d_m, bins })
}
