//! Comma-separated tables with a `#`-prefixed header block.
//!
//! Header lines of the form `# key: value` are collected as metadata; other
//! comment lines are free text. Floats are written with Rust's shortest
//! round-trip formatting, so reading a table back is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DRay, SPEED_OF_LIGHT};
use crate::metrics::{ChannelTrace, EmpiricalCdf};
use crate::qd::{ChannelInstance, MpcKind};

pub const DRAY_COLUMNS: [&str; 10] = [
    "rx_index",
    "order",
    "delay_ns",
    "tau_ns",
    "pg_det_db",
    "aod_az",
    "aod_el",
    "aoa_az",
    "aoa_el",
    "materials",
];

pub const MPC_COLUMNS: [&str; 11] = [
    "rx_index",
    "cluster_id",
    "kind",
    "tau_ns",
    "delay_abs_ns",
    "pg_db",
    "aod_az",
    "aod_el",
    "aoa_az",
    "aoa_el",
    "phase_rad",
];

/// Ordered `# key: value` metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    pub title: String,
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(title: impl Into<String>) -> Self {
        Header {
            title: title.into(),
            entries: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn render(&self) -> String {
        let mut s = format!("# {}\n", self.title);
        for (k, v) in &self.entries {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }

    fn parse(text: &str) -> Self {
        let mut header = Header::default();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            match body.split_once(": ") {
                Some((k, v)) if !k.contains(' ') => {
                    header.entries.push((k.to_string(), v.to_string()))
                }
                _ if header.title.is_empty() => header.title = body.to_string(),
                _ => {}
            }
        }
        header
    }
}

fn write_table(path: &Path, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.render().into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        let fail = |e: csv::Error| Error::Domain(format!("cannot encode table: {e}"));
        w.write_record(columns).map_err(fail)?;
        for r in rows {
            w.write_record(r).map_err(fail)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Raw records with their 1-based line numbers.
struct RawTable {
    header: Header,
    columns: BTreeMap<String, usize>,
    records: Vec<(u64, csv::StringRecord)>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = Header::parse(&text);
    let display = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: display.clone(),
        line,
        reason,
    };
    let cols = rdr
        .headers()
        .map_err(|e| parse_err(0, e.to_string()))?
        .clone();
    let columns = cols
        .iter()
        .enumerate()
        .map(|(i, c)| (c.to_string(), i))
        .collect();
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    Ok(RawTable {
        header,
        columns,
        records,
    })
}

struct Row<'a> {
    path: &'a str,
    line: u64,
    rec: &'a csv::StringRecord,
    columns: &'a BTreeMap<String, usize>,
}

impl Row<'_> {
    fn err(&self, reason: String) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line: self.line,
            reason,
        }
    }

    fn field(&self, name: &str) -> Option<&str> {
        self.columns
            .get(name)
            .and_then(|&i| self.rec.get(i))
            .filter(|s| !s.is_empty())
    }

    fn required(&self, name: &str) -> Result<&str> {
        self.field(name)
            .ok_or_else(|| self.err(format!("missing value for `{name}`")))
    }

    fn f64(&self, name: &str) -> Result<f64> {
        let raw = self.required(name)?;
        raw.parse()
            .map_err(|_| self.err(format!("`{name}` is not a number: {raw:?}")))
    }

    fn usize(&self, name: &str) -> Result<usize> {
        let raw = self.required(name)?;
        raw.parse()
            .map_err(|_| self.err(format!("`{name}` is not a non-negative integer: {raw:?}")))
    }

    fn opt_usize(&self, name: &str) -> Result<Option<usize>> {
        self.field(name).map(|_| self.usize(name)).transpose()
    }

    fn opt_f64(&self, name: &str) -> Result<Option<f64>> {
        self.field(name).map(|_| self.f64(name)).transpose()
    }
}

fn require_columns(raw: &RawTable, path: &Path, required: &[&str]) -> Result<()> {
    for c in required {
        if !raw.columns.contains_key(*c) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1 + raw.header.entries.len() as u64 + u64::from(!raw.header.title.is_empty()),
                reason: format!("missing column `{c}`"),
            });
        }
    }
    Ok(())
}

/// One D-ray table row.
#[derive(Clone, Debug, PartialEq)]
pub struct DRayRecord {
    pub rx_index: usize,
    pub ray: DRay,
}

pub fn write_dray_table(path: &Path, header: &Header, rays: &[DRayRecord]) -> Result<()> {
    let rows: Vec<Vec<String>> = rays
        .iter()
        .map(|r| {
            let d = &r.ray;
            vec![
                r.rx_index.to_string(),
                d.order.to_string(),
                d.delay_abs_ns.to_string(),
                d.tau_ns.to_string(),
                d.pg_det_db.to_string(),
                d.aod_az.to_string(),
                d.aod_el.to_string(),
                d.aoa_az.to_string(),
                d.aoa_el.to_string(),
                d.materials.join(";"),
            ]
        })
        .collect();
    write_table(path, header, &DRAY_COLUMNS, &rows)
}

/// Reads and validates a D-ray table. Material names are not resolved here;
/// unknown names fail later, at generation time.
pub fn read_dray_table(path: &Path) -> Result<(Header, Vec<DRayRecord>)> {
    let raw = read_table(path)?;
    require_columns(&raw, path, &DRAY_COLUMNS)?;
    let display = path.display().to_string();
    let mut out = Vec::with_capacity(raw.records.len());
    for (line, rec) in &raw.records {
        let row = Row {
            path: &display,
            line: *line,
            rec,
            columns: &raw.columns,
        };
        let materials: Vec<String> = row
            .field("materials")
            .map(|m| m.split(';').map(|s| s.trim().to_string()).collect())
            .unwrap_or_default();
        let delay = row.f64("delay_ns")?;
        let ray = DRay {
            order: row.usize("order")?,
            delay_abs_ns: delay,
            tau_ns: row.f64("tau_ns")?,
            path_length_m: delay * 1e-9 * SPEED_OF_LIGHT,
            pg_det_db: row.f64("pg_det_db")?,
            aod_az: row.f64("aod_az")?,
            aod_el: row.f64("aod_el")?,
            aoa_az: row.f64("aoa_az")?,
            aoa_el: row.f64("aoa_el")?,
            materials,
            bounce_points: Vec::new(),
        };
        ray.validate().map_err(|e| row.err(e.to_string()))?;
        out.push(DRayRecord {
            rx_index: row.usize("rx_index")?,
            ray,
        });
    }
    Ok((raw.header, out))
}

/// One MPC table row. Reference traces may leave `cluster_id`, `kind` and
/// `phase_rad` empty.
#[derive(Clone, Debug, PartialEq)]
pub struct MpcRecord {
    pub rx_index: usize,
    pub cluster_id: Option<usize>,
    pub kind: Option<MpcKind>,
    pub tau_ns: f64,
    pub delay_abs_ns: f64,
    pub pg_db: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub phase_rad: Option<f64>,
    /// Source line, when read from a file.
    pub line: u64,
}

fn opt_string<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn mpc_records(rx_index: usize, channel: &ChannelInstance) -> Vec<MpcRecord> {
    channel
        .mpcs()
        .map(|(cluster, m)| MpcRecord {
            rx_index,
            cluster_id: Some(cluster),
            kind: Some(m.kind),
            tau_ns: m.tau_ns,
            delay_abs_ns: channel.t_dir_ns + m.tau_ns,
            pg_db: m.pg_db,
            aod_az: m.angles.aod_az,
            aod_el: m.angles.aod_el,
            aoa_az: m.angles.aoa_az,
            aoa_el: m.angles.aoa_el,
            phase_rad: Some(m.phase_rad),
            line: 0,
        })
        .collect()
}

pub fn write_mpc_table(path: &Path, header: &Header, rows: &[MpcRecord]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.rx_index.to_string(),
                opt_string(r.cluster_id),
                opt_string(r.kind.map(MpcKind::as_str)),
                r.tau_ns.to_string(),
                r.delay_abs_ns.to_string(),
                r.pg_db.to_string(),
                r.aod_az.to_string(),
                r.aod_el.to_string(),
                r.aoa_az.to_string(),
                r.aoa_el.to_string(),
                opt_string(r.phase_rad),
            ]
        })
        .collect();
    write_table(path, header, &MPC_COLUMNS, &rows)
}

pub fn read_mpc_table(path: &Path) -> Result<(Header, Vec<MpcRecord>)> {
    let raw = read_table(path)?;
    let required: Vec<&str> = MPC_COLUMNS
        .iter()
        .copied()
        .filter(|c| !matches!(*c, "cluster_id" | "kind" | "phase_rad"))
        .collect();
    require_columns(&raw, path, &required)?;
    let display = path.display().to_string();
    let mut out = Vec::with_capacity(raw.records.len());
    for (line, rec) in &raw.records {
        let row = Row {
            path: &display,
            line: *line,
            rec,
            columns: &raw.columns,
        };
        let kind = match row.field("kind") {
            None => None,
            Some(k) => {
                Some(MpcKind::parse(k).ok_or_else(|| row.err(format!("unknown kind {k:?}")))?)
            }
        };
        let rec = MpcRecord {
            rx_index: row.usize("rx_index")?,
            cluster_id: row.opt_usize("cluster_id")?,
            kind,
            tau_ns: row.f64("tau_ns")?,
            delay_abs_ns: row.f64("delay_abs_ns")?,
            pg_db: row.f64("pg_db")?,
            aod_az: row.f64("aod_az")?,
            aod_el: row.f64("aod_el")?,
            aoa_az: row.f64("aoa_az")?,
            aoa_el: row.f64("aoa_el")?,
            phase_rad: row.opt_f64("phase_rad")?,
            line: *line,
        };
        if !rec.pg_db.is_finite() || !rec.delay_abs_ns.is_finite() {
            return Err(row.err("non-finite gain or delay".into()));
        }
        out.push(rec);
    }
    Ok((raw.header, out))
}

/// Groups rows by receiver, ordered by `rx_index`.
pub fn traces_from_records(rows: &[MpcRecord]) -> Vec<ChannelTrace> {
    let mut by_rx: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_rx
            .entry(r.rx_index)
            .or_default()
            .push((r.delay_abs_ns, r.pg_db));
    }
    by_rx
        .into_iter()
        .map(|(rx_index, mpcs)| ChannelTrace { rx_index, mpcs })
        .collect()
}

/// Two-column `value,cdf` breakpoint table.
pub fn write_cdf_table(path: &Path, title: &str, cdf: &EmpiricalCdf) -> Result<()> {
    let header = Header::new(title).with("samples", cdf.len());
    let rows: Vec<Vec<String>> = cdf
        .breakpoints()
        .into_iter()
        .map(|(x, f)| vec![x.to_string(), f.to_string()])
        .collect();
    write_table(path, &header, &["value", "cdf"], &rows)
}

pub fn read_cdf_table(path: &Path) -> Result<EmpiricalCdf> {
    let raw = read_table(path)?;
    require_columns(&raw, path, &["value", "cdf"])?;
    let display = path.display().to_string();
    let n: usize = raw
        .header
        .get("samples")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            path: display.clone(),
            line: 1,
            reason: "header lacks `samples`".into(),
        })?;
    let mut points = Vec::with_capacity(raw.records.len());
    for (line, rec) in &raw.records {
        let row = Row {
            path: &display,
            line: *line,
            rec,
            columns: &raw.columns,
        };
        points.push((row.f64("value")?, row.f64("cdf")?));
    }
    EmpiricalCdf::from_breakpoints(&points, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_ray(order: usize, tau: f64) -> DRay {
        DRay {
            order,
            delay_abs_ns: 12.5 + tau,
            tau_ns: tau,
            path_length_m: 0.0,
            pg_det_db: -71.25,
            aod_az: 33.1,
            aod_el: 91.0,
            aoa_az: 213.1,
            aoa_el: 89.0,
            materials: (0..order).map(|i| format!("M{i}")).collect(),
            bounce_points: vec![],
        }
    }

    #[test]
    fn header_parses_keys() {
        let h = Header::new("qdchan test")
            .with("seed", 7)
            .with("model", "reduced");
        let parsed = Header::parse(&h.render());
        assert_eq!(parsed, h);
        assert_eq!(parsed.get("seed"), Some("7"));
    }

    #[test]
    fn dray_table_rejects_negative_tau() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut bad = sample_ray(1, 2.0);
        bad.tau_ns = -1.0;
        let rows = [
            DRayRecord {
                rx_index: 0,
                ray: sample_ray(0, 0.0),
            },
            DRayRecord {
                rx_index: 0,
                ray: bad,
            },
        ];
        write_dray_table(&path, &Header::new("t"), &rows).unwrap();
        match read_dray_table(&path) {
            Err(Error::Parse { line, reason, .. }) => {
                // title, header row, first data row
                assert_eq!(line, 4);
                assert!(reason.contains("tau"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unparsable_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(
            &path,
            "# t\nrx_index,tau_ns,delay_abs_ns,pg_db,aod_az,aod_el,aoa_az,aoa_el\n0,0,10,-70,0,90,0,90\n0,1,11,abc,0,90,0,90\n",
        )
        .unwrap();
        match read_mpc_table(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reference_rows_may_omit_optional_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(
            &path,
            "rx_index,tau_ns,delay_abs_ns,pg_db,aod_az,aod_el,aoa_az,aoa_el\n3,0,10,-70,0,90,0,90\n",
        )
        .unwrap();
        let (_, rows) = read_mpc_table(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rx_index, 3);
        assert!(
            rows[0].kind.is_none() && rows[0].cluster_id.is_none() && rows[0].phase_rad.is_none()
        );
    }

    #[test]
    fn missing_column_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "rx_index,tau_ns\n0,1\n").unwrap();
        let err = read_mpc_table(&path).unwrap_err().to_string();
        assert!(err.contains("delay_abs_ns"), "{err}");
    }

    #[test]
    fn cdf_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let cdf = EmpiricalCdf::new(&[-80.125, -91.0, -80.125, -100.5, 1.0 / 3.0]).unwrap();
        write_cdf_table(&path, "pg", &cdf).unwrap();
        assert_eq!(read_cdf_table(&path).unwrap(), cdf);
    }
}
