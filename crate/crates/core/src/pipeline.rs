//! Batch operations behind the command-line front end: trace, generate,
//! compare and validate.
//!
//! Receivers are processed in parallel. Each receiver owns the stream
//! `seed / rx_index`, and rows are always emitted in `(rx_index, cluster_id)`
//! order, so output bytes do not depend on the thread count.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::geometry::{trace, Propagation};
use crate::materials::MaterialLibrary;
use crate::metrics::{
    compare_traces, ChannelTrace, CompareOptions, ComparisonReport, EnsembleCdfs,
};
use crate::qd::{
    channel_from_drays, complete_model_bound, generate_channel, ChannelInstance, ModelVariant,
    MpcKind, PruneReference,
};
use crate::scenario::ScenarioConfig;
use crate::tables::{
    mpc_records, read_dray_table, read_mpc_table, traces_from_records, write_cdf_table,
    write_dray_table, write_mpc_table, DRayRecord, Header, MpcRecord,
};

fn base_header(title: &str, config: &ScenarioConfig) -> Header {
    Header::new(title)
        .with("seed", config.seed)
        .with("config_hash", config.hash())
        .with("model", config.qd.model.as_str())
        .with("max_order", config.qd.max_order)
        .with("n_pre", config.qd.n_pre)
        .with("n_post", config.qd.n_post)
        .with(
            "prune_reference",
            match config.qd.prune_reference {
                PruneReference::Realized => "realized",
                PruneReference::Deterministic => "deterministic",
            },
        )
        .with("carrier_frequency_hz", config.qd.carrier_frequency_hz)
}

/// Traces every receiver position. Ignores `drays_file`.
pub fn trace_all(config: &ScenarioConfig, library: &MaterialLibrary) -> Result<Vec<DRayRecord>> {
    let prop = Propagation::at_frequency(config.qd.carrier_frequency_hz, library);
    let per_rx: Vec<Vec<DRayRecord>> = config
        .rx_positions()
        .par_iter()
        .enumerate()
        .map(|(i, &rx)| {
            let rays = trace(&config.room, config.tx, rx, config.qd.max_order, &prop)?;
            Ok(rays
                .into_iter()
                .map(|ray| DRayRecord { rx_index: i, ray })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_rx.into_iter().flatten().collect())
}

/// One channel per receiver, from the tracer or from `drays_file`.
pub fn generate_all(
    config: &ScenarioConfig,
    library: &MaterialLibrary,
) -> Result<Vec<(usize, ChannelInstance)>> {
    let root = RngStream::new(config.seed);
    let positions = config.rx_positions();
    if let Some(path) = &config.drays_file {
        let (_, records) = read_dray_table(path)?;
        let mut grouped: BTreeMap<usize, Vec<_>> = BTreeMap::new();
        for r in records {
            grouped.entry(r.rx_index).or_default().push(r.ray);
        }
        let grouped: Vec<_> = grouped.into_iter().collect();
        return grouped
            .par_iter()
            .map(|(rx_index, rays)| {
                let t_dir = rays
                    .iter()
                    .find(|r| r.order == 0)
                    .map_or(rays[0].delay_abs_ns - rays[0].tau_ns, |r| r.delay_abs_ns);
                let mut ch = channel_from_drays(
                    rays,
                    t_dir,
                    library,
                    &config.qd,
                    &root.child(*rx_index as u64),
                )?;
                ch.tx = Some(config.tx);
                ch.rx = positions.get(*rx_index).copied();
                Ok((*rx_index, ch))
            })
            .collect();
    }
    positions
        .par_iter()
        .enumerate()
        .map(|(i, &rx)| {
            let ch = generate_channel(
                &config.room,
                config.tx,
                rx,
                library,
                &config.qd,
                &root.child(i as u64),
            )?;
            Ok((i, ch))
        })
        .collect()
}

/// Writes the D-ray table; returns the number of rows.
pub fn run_trace(config: &ScenarioConfig, library: &MaterialLibrary, out: &Path) -> Result<usize> {
    let rows = trace_all(config, library)?;
    let header = base_header("qdchan d-ray table", config).with(
        "units",
        "delay_ns=ns tau_ns=ns pg_det_db=dB angles=deg (az [0,360), el polar [0,180])",
    );
    write_dray_table(out, &header, &rows)?;
    Ok(rows.len())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerateSummary {
    pub channels: usize,
    pub rows: usize,
}

pub fn run_generate(
    config: &ScenarioConfig,
    library: &MaterialLibrary,
    out: &Path,
) -> Result<GenerateSummary> {
    let channels = generate_all(config, library)?;
    let rows: Vec<MpcRecord> = channels
        .iter()
        .flat_map(|(i, ch)| mpc_records(*i, ch))
        .collect();
    let mut header = base_header("qdchan mpc table", config).with(
        "units",
        "tau_ns=ns delay_abs_ns=ns pg_db=dB angles=deg phase_rad=rad",
    );
    if config.qd.model == ModelVariant::Complete {
        header = header.with(
            "note",
            "complete-model gain/delay inheritance across bounces is a heuristic extension",
        );
    }
    write_mpc_table(out, &header, &rows)?;
    Ok(GenerateSummary {
        channels: channels.len(),
        rows: rows.len(),
    })
}

/// Files written by [`run_compare`].
#[derive(Clone, Debug)]
pub struct CompareOutputs {
    pub report: ComparisonReport,
    pub files: Vec<PathBuf>,
}

fn load_traces(path: &Path) -> Result<Vec<ChannelTrace>> {
    let (_, rows) = read_mpc_table(path)?;
    Ok(traces_from_records(&rows))
}

/// Compares two MPC tables, writing per-side CDF breakpoint tables plus the
/// report as `report.txt` and `report.json` into `out_dir`.
pub fn run_compare(
    sim: &Path,
    reference: &Path,
    opts: &CompareOptions,
    out_dir: &Path,
) -> Result<CompareOutputs> {
    let sim_traces = load_traces(sim)?;
    let ref_traces = load_traces(reference)?;
    let report = compare_traces(&sim_traces, &ref_traces, opts)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let floor = opts.floor_db.unwrap_or(f64::NEG_INFINITY);
    let mut files = Vec::new();
    for (label, traces) in [("sim", &sim_traces), ("ref", &ref_traces)] {
        let cdfs = EnsembleCdfs::build(traces, floor, label)?;
        for (stat, cdf) in [
            ("pg", &cdfs.pg),
            ("delay", &cdfs.delay),
            ("rmsds", &cdfs.rmsds),
        ] {
            let path = out_dir.join(format!("{label}_{stat}_cdf.csv"));
            write_cdf_table(&path, &format!("{label} {stat} CDF"), cdf)?;
            files.push(path);
        }
    }
    let txt = out_dir.join("report.txt");
    std::fs::write(&txt, report.summary()).map_err(|e| Error::io(&txt, e))?;
    let json = out_dir.join("report.json");
    std::fs::write(&json, report.to_json() + "\n").map_err(|e| Error::io(&json, e))?;
    files.push(txt);
    files.push(json);
    Ok(CompareOutputs { report, files })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub rows: usize,
    pub clusters: usize,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn header_usize(h: &Header, key: &str) -> Option<usize> {
    h.get(key).and_then(|v| v.parse().ok())
}

/// Re-reads an MPC table and checks every row against the generator's
/// invariants. Cluster-level checks need the `kind` and `cluster_id` columns
/// and the header written by [`run_generate`].
pub fn validate_mpc_file(path: &Path) -> Result<ValidationReport> {
    let (header, rows) = read_mpc_table(path)?;
    let mut report = ValidationReport {
        rows: rows.len(),
        ..Default::default()
    };
    let mut v = |line: u64, msg: String| report.violations.push(format!("line {line}: {msg}"));

    let mut t_dir: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &rows {
        if !(r.tau_ns >= 0.0) {
            v(r.line, format!("negative tau {}", r.tau_ns));
        }
        if r.delay_abs_ns < r.tau_ns {
            v(
                r.line,
                format!("absolute delay {} below tau {}", r.delay_abs_ns, r.tau_ns),
            );
        }
        let t = *t_dir.entry(r.rx_index).or_insert(r.delay_abs_ns - r.tau_ns);
        if ((r.delay_abs_ns - r.tau_ns) - t).abs() > 1e-6 {
            v(
                r.line,
                format!("inconsistent line-of-sight delay for rx {}", r.rx_index),
            );
        }
        for (name, az) in [("aod_az", r.aod_az), ("aoa_az", r.aoa_az)] {
            if !(0.0..360.0).contains(&az) {
                v(r.line, format!("{name} {az} outside [0, 360)"));
            }
        }
        for (name, el) in [("aod_el", r.aod_el), ("aoa_el", r.aoa_el)] {
            if !(0.0..=180.0).contains(&el) {
                v(r.line, format!("{name} {el} outside [0, 180]"));
            }
        }
        if let Some(p) = r.phase_rad {
            if !(0.0..TAU).contains(&p) {
                v(r.line, format!("phase {p} outside [0, 2pi)"));
            }
        }
        if r.kind == Some(MpcKind::Direct) && r.tau_ns != 0.0 {
            v(r.line, format!("direct ray with tau {}", r.tau_ns));
        }
    }

    let realized = header.get("prune_reference") != Some("deterministic");
    let bound = match (header.get("model"), header_usize(&header, "max_order")) {
        (Some("drays_only"), _) => Some(1),
        (Some(model), Some(order)) => {
            let cfg = crate::qd::QdConfig {
                n_pre: header_usize(&header, "n_pre").unwrap_or(3),
                n_post: header_usize(&header, "n_post").unwrap_or(16),
                ..Default::default()
            };
            match model {
                "reduced" => Some(order * (cfg.n_pre + cfg.n_post) + 1),
                "complete" => complete_model_bound(&cfg, order),
                _ => None,
            }
        }
        _ => None,
    };

    let mut clusters: BTreeMap<(usize, usize), Vec<&MpcRecord>> = BTreeMap::new();
    for r in &rows {
        if let (Some(c), Some(k)) = (r.cluster_id, r.kind) {
            if k != MpcKind::Direct {
                clusters.entry((r.rx_index, c)).or_default().push(r);
            }
        }
    }
    report.clusters = clusters.len();
    for ((rx, id), members) in &clusters {
        let cursors: Vec<_> = members
            .iter()
            .filter(|m| m.kind == Some(MpcKind::Cursor))
            .collect();
        let line = members[0].line;
        if cursors.len() != 1 {
            v(
                line,
                format!("rx {rx} cluster {id} has {} cursors", cursors.len()),
            );
            continue;
        }
        let cursor = cursors[0];
        if let Some(b) = bound {
            if members.len() > b {
                v(
                    line,
                    format!(
                        "rx {rx} cluster {id} has {} components, bound {b}",
                        members.len()
                    ),
                );
            }
        }
        for m in members {
            match m.kind {
                Some(MpcKind::Pre) if m.tau_ns >= cursor.tau_ns => {
                    v(m.line, "pre-cursor not before its cursor".into())
                }
                Some(MpcKind::Post) if m.tau_ns <= cursor.tau_ns => {
                    v(m.line, "post-cursor not after its cursor".into())
                }
                _ => {}
            }
            if realized && m.kind.is_some_and(MpcKind::is_diffuse) && m.pg_db >= cursor.pg_db {
                v(
                    m.line,
                    format!(
                        "diffuse gain {} not below cursor gain {}",
                        m.pg_db, cursor.pg_db
                    ),
                );
            }
        }
    }
    Ok(report)
}
