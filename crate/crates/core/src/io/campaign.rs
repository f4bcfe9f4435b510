use std::collections::BTreeMap;
use std::path::Path;

use crate::channel::{
    from_db, to_db, validate_campaign, DirectionalPdp, IngestLimits, LinkBudget, Location,
    LosClass, PdpSample, PointingAngle, RxRecord,
};
use crate::error::{Error, Result};
use crate::pdp::{location_stats, DelayGrid};

use super::{fixed, parse_f64, read_text, write_atomic};

/// Row columns of a campaign file, in written order. `excess_loss_db` may be
/// omitted on input.
pub const CAMPAIGN_COLUMNS: [&str; 12] = [
    "rx_id",
    "x",
    "y",
    "z",
    "los",
    "tx_az",
    "tx_el",
    "rx_az",
    "rx_el",
    "delay_ns",
    "power_dbm",
    "excess_loss_db",
];

const HEADER_KEYS: [&str; 9] = [
    "freq_ghz",
    "tx_power_dbm",
    "tx_gain_dbi",
    "rx_gain_dbi",
    "noise_threshold_db",
    "bin_width_ns",
    "tx_x",
    "tx_y",
    "tx_z",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignHeader {
    pub budget: LinkBudget,
    pub bin_width_ns: f64,
    pub tx: Location,
}

impl CampaignHeader {
    pub fn limits(&self) -> IngestLimits {
        IngestLimits {
            bin_width_ns: self.bin_width_ns,
            noise_threshold_db: self.budget.noise_threshold_db_below_peak,
        }
    }
}

/// Per-location annotations carried on every row of that location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignSite {
    pub location: Location,
    pub los: LosClass,
    pub excess_loss_db: Option<f64>,
}

/// A campaign file: header, one site per receiver (in first-seen order) and
/// the directional PDPs.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignFile {
    pub header: CampaignHeader,
    pub sites: Vec<CampaignSite>,
    pub pdps: Vec<DirectionalPdp>,
}

pub fn read_campaign(path: &Path) -> Result<CampaignFile> {
    parse_campaign(&read_text(path)?, path)
}

pub fn write_campaign(path: &Path, file: &CampaignFile) -> Result<()> {
    write_atomic(path, format_campaign(file).as_bytes())
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_header(text: &str, path: &Path) -> Result<(CampaignHeader, usize)> {
    let mut values: BTreeMap<&str, f64> = BTreeMap::new();
    let mut consumed = 0;
    for (i, line) in text.lines().enumerate() {
        let Some(body) = line.trim_start().strip_prefix('#') else {
            break;
        };
        consumed = i + 1;
        let Some((key, value)) = body.split_once('=') else {
            continue;
        };
        let key = key.trim();
        let Some(&known) = HEADER_KEYS.iter().find(|k| **k == key) else {
            return Err(parse_err(path, i + 1, 1, format!("unknown header key {key:?}")));
        };
        if values.contains_key(known) {
            return Err(parse_err(path, i + 1, 1, format!("header key {key:?} repeated")));
        }
        let col = line.find('=').map_or(1, |c| c + 2);
        values.insert(known, parse_f64(path, i + 1, col, known, value)?);
    }
    let defaults = LinkBudget::default();
    let get = |k: &str| values.get(k).copied();
    let require = |k: &'static str| {
        get(k).ok_or_else(|| parse_err(path, consumed.max(1), 1, format!("missing header key {k:?}")))
    };
    let freq = require("freq_ghz")?;
    let tx = Location::new(0, require("tx_x")?, require("tx_y")?, require("tx_z")?);
    let header_err = |e: Error| parse_err(path, consumed.max(1), 1, e.to_string());
    let budget = LinkBudget::new(
        get("tx_power_dbm").unwrap_or(defaults.tx_power_dbm),
        get("tx_gain_dbi").unwrap_or(defaults.tx_gain_dbi),
        get("rx_gain_dbi").unwrap_or(defaults.rx_gain_dbi),
        freq,
        get("noise_threshold_db").unwrap_or(defaults.noise_threshold_db_below_peak),
    )
    .map_err(header_err)?;
    let bin_width_ns = get("bin_width_ns").unwrap_or(DelayGrid::default().bin_width_ns);
    DelayGrid::new(bin_width_ns).map_err(header_err)?;
    Ok((
        CampaignHeader {
            budget,
            bin_width_ns,
            tx: tx.map_err(header_err)?,
        },
        consumed,
    ))
}

type PdpKey = (u32, [u64; 4]);

/// Parses campaign text. `path` is only used in diagnostics.
pub fn parse_campaign(text: &str, path: &Path) -> Result<CampaignFile> {
    let (header, header_lines) = parse_header(text, path)?;
    let body: String = text
        .lines()
        .skip(header_lines)
        .flat_map(|l| [l, "\n"])
        .collect();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let line_of = |pos: Option<&csv::Position>| header_lines + pos.map_or(1, |p| p.line() as usize);

    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, header_lines + 1, 1, e.to_string()))?
        .clone();
    let mut col = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        if !CAMPAIGN_COLUMNS.contains(&name) {
            return Err(parse_err(path, header_lines + 1, i + 1, format!("unknown column {name:?}")));
        }
        if col.insert(name, i).is_some() {
            return Err(parse_err(path, header_lines + 1, i + 1, format!("duplicate column {name:?}")));
        }
    }
    for name in &CAMPAIGN_COLUMNS[..11] {
        if !col.contains_key(name) {
            return Err(parse_err(path, header_lines + 1, 1, format!("missing column {name:?}")));
        }
    }

    let mut sites: Vec<CampaignSite> = Vec::new();
    let mut site_index: BTreeMap<u32, usize> = BTreeMap::new();
    let mut pdps: Vec<DirectionalPdp> = Vec::new();
    let mut pdp_index: BTreeMap<PdpKey, usize> = BTreeMap::new();

    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(header_lines + 1, |p| header_lines + p.line() as usize);
            parse_err(path, line, 1, e.to_string())
        })?;
        let line = line_of(rec.position());
        let field = |name: &str| -> (usize, &str) {
            let i = col[name];
            (i + 1, rec.get(i).unwrap_or(""))
        };
        let num = |name: &str| {
            let (c, raw) = field(name);
            parse_f64(path, line, c, name, raw)
        };
        let (c, raw) = field("rx_id");
        let rx_id: u32 = raw
            .parse()
            .map_err(|_| parse_err(path, line, c, format!("rx_id: expected an unsigned integer, got {raw:?}")))?;
        let (c, raw) = field("los");
        let los: LosClass = raw
            .parse()
            .map_err(|e: Error| parse_err(path, line, c, e.to_string()))?;
        let excess = match col.get("excess_loss_db") {
            Some(_) => match field("excess_loss_db") {
                (_, "") => None,
                _ => Some(num("excess_loss_db")?),
            },
            None => None,
        };
        let location = Location::new(rx_id, num("x")?, num("y")?, num("z")?)
            .map_err(|e| parse_err(path, line, col["x"] + 1, e.to_string()))?;
        let site = CampaignSite {
            location,
            los,
            excess_loss_db: excess,
        };
        match site_index.get(&rx_id) {
            Some(&i) if sites[i] != site => {
                return Err(parse_err(
                    path,
                    line,
                    1,
                    format!("rx_id {rx_id}: location, los or excess loss differ from earlier rows"),
                ));
            }
            Some(_) => {}
            None => {
                site_index.insert(rx_id, sites.len());
                sites.push(site);
            }
        }

        let angle = |az: &str, el: &str| -> Result<PointingAngle> {
            PointingAngle::new(num(az)?, num(el)?)
                .map_err(|e| parse_err(path, line, col[az] + 1, e.to_string()))
        };
        let tx_angle = angle("tx_az", "tx_el")?;
        let rx_angle = angle("rx_az", "rx_el")?;
        let delay = num("delay_ns")?;
        let power = from_db(num("power_dbm")?);
        let key = (
            rx_id,
            [
                tx_angle.azimuth_deg.to_bits(),
                tx_angle.elevation_deg.to_bits(),
                rx_angle.azimuth_deg.to_bits(),
                rx_angle.elevation_deg.to_bits(),
            ],
        );
        let idx = *pdp_index.entry(key).or_insert_with(|| {
            pdps.push(DirectionalPdp {
                rx_id,
                tx_angle,
                rx_angle,
                samples: Vec::new(),
            });
            pdps.len() - 1
        });
        pdps[idx].samples.push(PdpSample::new(delay, power));
    }
    Ok(CampaignFile {
        header,
        sites,
        pdps,
    })
}

pub fn format_campaign(file: &CampaignFile) -> String {
    let h = &file.header;
    let b = &h.budget;
    let mut out = String::new();
    for (k, v) in [
        ("freq_ghz", b.center_freq_ghz),
        ("tx_power_dbm", b.tx_power_dbm),
        ("tx_gain_dbi", b.tx_gain_dbi),
        ("rx_gain_dbi", b.rx_gain_dbi),
        ("noise_threshold_db", b.noise_threshold_db_below_peak),
        ("bin_width_ns", h.bin_width_ns),
        ("tx_x", h.tx.x),
        ("tx_y", h.tx.y),
        ("tx_z", h.tx.z),
    ] {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(&CAMPAIGN_COLUMNS.join(","));
    out.push('\n');
    let sites: BTreeMap<u32, &CampaignSite> =
        file.sites.iter().map(|s| (s.location.id, s)).collect();
    for pdp in &file.pdps {
        let site = sites[&pdp.rx_id];
        let loc = &site.location;
        for s in &pdp.samples {
            let row = [
                pdp.rx_id.to_string(),
                fixed(loc.x, 6),
                fixed(loc.y, 6),
                fixed(loc.z, 6),
                site.los.to_string(),
                fixed(pdp.tx_angle.azimuth_deg, 6),
                fixed(pdp.tx_angle.elevation_deg, 6),
                fixed(pdp.rx_angle.azimuth_deg, 6),
                fixed(pdp.rx_angle.elevation_deg, 6),
                fixed(s.delay_ns, 3),
                fixed(to_db(s.power_mw), 6),
                site.excess_loss_db.map_or(String::new(), |x| fixed(x, 6)),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

/// Validates the campaign and reduces each receiver's sweep to a record.
pub fn campaign_records(file: &CampaignFile) -> Result<Vec<RxRecord>> {
    let h = &file.header;
    let locations = file.sites.iter().map(|s| s.location).collect();
    let campaign = validate_campaign(file.pdps.clone(), locations, &h.limits())?;
    let grid = DelayGrid::new(h.bin_width_ns)?;
    file.sites
        .iter()
        .map(|site| {
            let stats = location_stats(campaign.pdps_for(site.location.id), &h.budget, &grid)?;
            Ok(RxRecord {
                location: site.location,
                los: site.los,
                tr_distance_m: h.tx.distance_2d(&site.location),
                omni_path_loss_db: stats.path_loss_db,
                delay_spread_ns: stats.delay_spread_ns,
                angular_spread_rad: stats.angular_spread_rad,
                excess_loss_db: site.excess_loss_db,
            })
        })
        .collect()
}
