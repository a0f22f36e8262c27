//! File formats for sounder scenes, power-angular-delay profiles, extracted
//! paths, and per-link statistics.
//!
//! Every format is plain text so runs can be diffed and inspected:
//!
//! * **PADP** (`*.padp`) — one JSON header line carrying the sounder
//!   configuration and link metadata, followed by a CSV body with one row
//!   per azimuth pointing (ascending) and one column per delay bin
//!   (ascending), values in dB.  Numbers are written with the shortest
//!   representation that parses back to the identical `f64`, so
//!   write → read → write is byte-identical.
//! * **Scene** (`*.scene`) — one JSON header line (configuration, link
//!   metadata, path count), a CSV column header, then one row per planted
//!   propagation path: `delay_ns,aoa_deg,path_gain_db`.
//! * **Path list** (`*.mpc.csv`) — CSV with the same three columns, used
//!   for extracted multipath components.
//! * **Link statistics** (`*.stats.csv`) — flat CSV, one row per link.
//!
//! Readers validate dimensions and report failures with file, line, and —
//! for malformed fields — the 1-based CSV column.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sounder::Scene;
use crate::types::{BandConfig, LinkStats, LosState, Mpc, Padp};

/// Format tag expected on the first line of a PADP file.
pub const PADP_FORMAT: &str = "mmchan.padp/1";
/// Format tag expected on the first line of a scene file.
pub const SCENE_FORMAT: &str = "mmchan.scene/1";

#[derive(Serialize, Deserialize)]
struct PadpHeader {
    format: String,
    link_id: String,
    tx_rx_distance_m: f64,
    los: LosState,
    noise_floor_db: f64,
    delay_start_s: f64,
    n_delay: usize,
    n_azimuth: usize,
    band: BandConfig,
}

#[derive(Serialize, Deserialize)]
struct SceneHeader {
    format: String,
    link_id: String,
    tx_rx_distance_m: f64,
    los: LosState,
    n_paths: usize,
    band: BandConfig,
}

const PATH_COLUMNS: &str = "delay_ns,aoa_deg,path_gain_db";
const STATS_COLUMNS: &str = "link_id,band,distance_m,omni_pathloss_db,\
rms_delay_spread_s,azimuth_spread_deg,n_paths_30db,n_paths_15db";

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parse one CSV field, attributing failures to a 1-based line and column.
fn parse_field<T: FromStr>(
    field: &str,
    path: &Path,
    line: usize,
    column: usize,
    what: &str,
) -> Result<T> {
    field.trim().parse::<T>().map_err(|_| {
        Error::parse(
            path,
            line,
            Some(column),
            format!("cannot parse {what} from {field:?}"),
        )
    })
}

fn split_header<'a>(path: &Path, text: &'a str) -> Result<(&'a str, Vec<(usize, &'a str)>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, None, "empty file"))?;
    let body: Vec<(usize, &str)> = lines
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    Ok((header, body))
}

fn check_format(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::parse(
            path,
            1,
            None,
            format!("format tag {found:?} does not match expected {expected:?}"),
        ));
    }
    Ok(())
}

/// Write a power-angular-delay profile.
///
/// The profile is validated first; the on-disk form re-parses to a
/// bit-identical [`Padp`].
pub fn write_padp(path: impl AsRef<Path>, padp: &Padp) -> Result<()> {
    let path = path.as_ref();
    padp.validate()?;
    let header = PadpHeader {
        format: PADP_FORMAT.to_string(),
        link_id: padp.link_id.clone(),
        tx_rx_distance_m: padp.tx_rx_distance_m,
        los: padp.los,
        noise_floor_db: padp.noise_floor_db,
        delay_start_s: padp.delay_start_s,
        n_delay: padp.n_delay,
        n_azimuth: padp.band.n_azimuth(),
        band: padp.band.clone(),
    };
    let mut out = serde_json::to_string(&header)
        .map_err(|e| Error::invalid("padp header", e.to_string()))?;
    out.push('\n');
    for row in padp.power_db.chunks(padp.n_delay) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Read a power-angular-delay profile written by [`write_padp`].
pub fn read_padp(path: impl AsRef<Path>) -> Result<Padp> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let (header_line, body) = split_header(path, &text)?;
    let header: PadpHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::parse(path, 1, None, format!("bad header: {e}")))?;
    check_format(path, &header.format, PADP_FORMAT)?;
    header.band.validate()?;
    if header.n_azimuth != header.band.n_azimuth() {
        return Err(Error::parse(
            path,
            1,
            None,
            format!(
                "header claims {} azimuth rows but the azimuth step implies {}",
                header.n_azimuth,
                header.band.n_azimuth()
            ),
        ));
    }
    if body.len() != header.n_azimuth {
        return Err(Error::parse(
            path,
            body.last().map_or(1, |(n, _)| *n),
            None,
            format!("expected {} data rows, found {}", header.n_azimuth, body.len()),
        ));
    }
    let mut power_db = Vec::with_capacity(header.n_azimuth * header.n_delay);
    for (line_no, line) in &body {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.n_delay {
            return Err(Error::parse(
                path,
                *line_no,
                None,
                format!("expected {} fields, found {}", header.n_delay, fields.len()),
            ));
        }
        for (col, field) in fields.iter().enumerate() {
            power_db.push(parse_field::<f64>(field, path, *line_no, col + 1, "power in dB")?);
        }
    }
    let padp = Padp {
        band: header.band,
        link_id: header.link_id,
        tx_rx_distance_m: header.tx_rx_distance_m,
        los: header.los,
        noise_floor_db: header.noise_floor_db,
        delay_start_s: header.delay_start_s,
        n_delay: header.n_delay,
        power_db,
    };
    padp.validate()?;
    Ok(padp)
}

fn push_path_row(out: &mut String, mpc: &Mpc) {
    let _ = writeln!(
        out,
        "{},{},{}",
        mpc.delay_s * 1e9,
        mpc.aoa_deg,
        mpc.path_gain_db
    );
}

fn parse_path_row(path: &Path, line_no: usize, line: &str) -> Result<Mpc> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 3 {
        return Err(Error::parse(
            path,
            line_no,
            None,
            format!("expected 3 fields ({PATH_COLUMNS}), found {}", fields.len()),
        ));
    }
    let delay_ns: f64 = parse_field(fields[0], path, line_no, 1, "delay in ns")?;
    let aoa: f64 = parse_field(fields[1], path, line_no, 2, "azimuth in degrees")?;
    let gain: f64 = parse_field(fields[2], path, line_no, 3, "path gain in dB")?;
    Mpc::new(delay_ns * 1e-9, aoa, gain)
}

/// Write a sounder scene: the planted ground-truth paths of one link.
pub fn write_scene(path: impl AsRef<Path>, scene: &Scene) -> Result<()> {
    let path = path.as_ref();
    scene.validate()?;
    let header = SceneHeader {
        format: SCENE_FORMAT.to_string(),
        link_id: scene.link_id.clone(),
        tx_rx_distance_m: scene.tx_rx_distance_m,
        los: scene.los,
        n_paths: scene.paths.len(),
        band: scene.band.clone(),
    };
    let mut out = serde_json::to_string(&header)
        .map_err(|e| Error::invalid("scene header", e.to_string()))?;
    out.push('\n');
    out.push_str(PATH_COLUMNS);
    out.push('\n');
    for mpc in &scene.paths {
        push_path_row(&mut out, mpc);
    }
    write_text(path, &out)
}

/// Read a sounder scene written by [`write_scene`].
pub fn read_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let (header_line, body) = split_header(path, &text)?;
    let header: SceneHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::parse(path, 1, None, format!("bad header: {e}")))?;
    check_format(path, &header.format, SCENE_FORMAT)?;
    header.band.validate()?;
    let Some(((_, columns), rows)) = body.split_first() else {
        return Err(Error::parse(path, 2, None, "missing column header"));
    };
    if columns.trim() != PATH_COLUMNS {
        return Err(Error::parse(
            path,
            2,
            None,
            format!("expected column header {PATH_COLUMNS:?}, found {columns:?}"),
        ));
    }
    if rows.len() != header.n_paths {
        return Err(Error::parse(
            path,
            rows.last().map_or(2, |(n, _)| *n),
            None,
            format!("header claims {} paths, found {}", header.n_paths, rows.len()),
        ));
    }
    let mut paths = Vec::with_capacity(rows.len());
    for (line_no, line) in rows {
        paths.push(parse_path_row(path, *line_no, line)?);
    }
    let scene = Scene {
        band: header.band,
        link_id: header.link_id,
        tx_rx_distance_m: header.tx_rx_distance_m,
        los: header.los,
        paths,
    };
    scene.validate()?;
    Ok(scene)
}

/// Write extracted multipath components as CSV.
pub fn write_mpcs(path: impl AsRef<Path>, mpcs: &[Mpc]) -> Result<()> {
    let mut out = String::from(PATH_COLUMNS);
    out.push('\n');
    for mpc in mpcs {
        push_path_row(&mut out, mpc);
    }
    write_text(path.as_ref(), &out)
}

/// Read a multipath component CSV written by [`write_mpcs`].
pub fn read_mpcs(path: impl AsRef<Path>) -> Result<Vec<Mpc>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, columns)) = lines.next() else {
        return Err(Error::parse(path, 1, None, "empty file"));
    };
    if columns.trim() != PATH_COLUMNS {
        return Err(Error::parse(
            path,
            1,
            None,
            format!("expected column header {PATH_COLUMNS:?}, found {columns:?}"),
        ));
    }
    lines
        .map(|(line_no, line)| parse_path_row(path, line_no, line))
        .collect()
}

/// Write per-link statistics as CSV, one row per link.
///
/// Link ids are stored verbatim in the first column, so ids containing a
/// comma or line break are rejected rather than silently corrupting the
/// table.
pub fn write_link_stats(path: impl AsRef<Path>, stats: &[LinkStats]) -> Result<()> {
    let mut out = String::from(STATS_COLUMNS);
    out.push('\n');
    for s in stats {
        if s.link_id.contains(',') || s.link_id.contains('\n') || s.link_id.contains('\r') {
            return Err(Error::invalid(
                "link stats",
                format!("link id {:?} contains a CSV delimiter", s.link_id),
            ));
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.link_id,
            s.band,
            s.distance_m,
            s.omni_pathloss_db,
            s.rms_delay_spread_s,
            s.azimuth_spread_deg,
            s.n_paths_30db,
            s.n_paths_15db
        );
    }
    write_text(path.as_ref(), &out)
}

/// Read per-link statistics written by [`write_link_stats`].
pub fn read_link_stats(path: impl AsRef<Path>) -> Result<Vec<LinkStats>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, columns)) = lines.next() else {
        return Err(Error::parse(path, 1, None, "empty file"));
    };
    if columns.trim() != STATS_COLUMNS {
        return Err(Error::parse(
            path,
            1,
            None,
            format!("expected column header {STATS_COLUMNS:?}, found {columns:?}"),
        ));
    }
    let mut out = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(
                path,
                line_no,
                None,
                format!("expected 8 fields, found {}", fields.len()),
            ));
        }
        out.push(LinkStats {
            link_id: parse_field(fields[0], path, line_no, 1, "link id")?,
            band: parse_field(fields[1], path, line_no, 2, "band label")?,
            distance_m: parse_field(fields[2], path, line_no, 3, "distance in m")?,
            omni_pathloss_db: parse_field(fields[3], path, line_no, 4, "pathloss in dB")?,
            rms_delay_spread_s: parse_field(fields[4], path, line_no, 5, "delay spread in s")?,
            azimuth_spread_deg: parse_field(fields[5], path, line_no, 6, "azimuth spread in degrees")?,
            n_paths_30db: parse_field(fields[6], path, line_no, 7, "path count")?,
            n_paths_15db: parse_field(fields[7], path, line_no, 8, "path count")?,
        });
    }
    Ok(out)
}
