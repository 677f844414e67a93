//! Channel statistics and two-sample Kolmogorov-Smirnov comparison of
//! channel ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qd::{ChannelInstance, Mpc};

/// Default dynamic-range floor, dB. Weaker components are ignored when
/// comparing ensembles.
pub const DEFAULT_FLOOR_DB: f64 = -120.0;

/// Right-continuous step CDF `F(x) = #{v <= x} / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empirical CDF of an empty sample".into()));
        }
        if let Some(v) = values.iter().find(|v| v.is_nan()) {
            return Err(Error::Domain(format!("empirical CDF sample contains {v}")));
        }
        let mut values = values.to_vec();
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Distinct sample values with the CDF level reached at each.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let n = self.values.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            let level = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = level,
                _ => out.push((v, level)),
            }
        }
        out
    }

    /// Rebuilds a CDF from its breakpoints and sample count.
    pub fn from_breakpoints(points: &[(f64, f64)], n: usize) -> Result<Self> {
        if n == 0 || points.is_empty() {
            return Err(Error::Domain("empty breakpoint table".into()));
        }
        let mut values = Vec::with_capacity(n);
        let mut prev = 0usize;
        for &(x, level) in points {
            let count = (level * n as f64).round() as usize;
            if count < prev || count > n {
                return Err(Error::Domain(format!(
                    "breakpoint level {level} is not monotone in [0, 1]"
                )));
            }
            values.extend(std::iter::repeat_n(x, count - prev));
            prev = count;
        }
        if prev != n {
            return Err(Error::Domain(format!(
                "breakpoints end at {prev} of {n} samples"
            )));
        }
        Self::new(&values)
    }

    /// One-sample KS distance to a continuous CDF.
    pub fn distance_to(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().enumerate().fold(0.0, |acc, (i, &x)| {
            let f = cdf(x);
            acc.max((f - i as f64 / n).abs())
                .max(((i + 1) as f64 / n - f).abs())
        })
    }
}

/// `sup_x |F_a(x) - F_b(x)|`, evaluated at every breakpoint of either CDF.
pub fn ks_statistic(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (xs, ys) = (&a.values, &b.values);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Power-weighted standard deviation of delays. Items are `(delay_ns, pg_db)`.
pub fn rms_delay_spread_of(items: &[(f64, f64)]) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::Domain("RMS delay spread of an empty channel".into()));
    }
    let peak = items
        .iter()
        .map(|&(_, pg)| pg)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = items
        .iter()
        .map(|&(_, pg)| 10f64.powf((pg - peak) / 10.0))
        .collect();
    let total: f64 = weights.iter().sum();
    let mean = items
        .iter()
        .zip(&weights)
        .map(|(&(t, _), w)| w * t)
        .sum::<f64>()
        / total;
    let var = items
        .iter()
        .zip(&weights)
        .map(|(&(t, _), w)| w * (t - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.max(0.0).sqrt())
}

pub fn rms_delay_spread(mpcs: &[Mpc]) -> Result<f64> {
    let items: Vec<(f64, f64)> = mpcs.iter().map(|m| (m.tau_ns, m.pg_db)).collect();
    rms_delay_spread_of(&items)
}

/// One channel's components reduced to what the comparison needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTrace {
    pub rx_index: usize,
    /// `(absolute delay ns, path gain dB)` per component.
    pub mpcs: Vec<(f64, f64)>,
}

impl ChannelTrace {
    pub fn from_instance(rx_index: usize, channel: &ChannelInstance) -> Self {
        ChannelTrace {
            rx_index,
            mpcs: channel
                .mpcs()
                .map(|(_, m)| (channel.t_dir_ns + m.tau_ns, m.pg_db))
                .collect(),
        }
    }
}

/// Pooled path-gain and delay CDFs plus the per-channel RMS delay spread CDF.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleCdfs {
    pub pg: EmpiricalCdf,
    pub delay: EmpiricalCdf,
    pub rmsds: EmpiricalCdf,
}

impl EnsembleCdfs {
    /// Components below `floor_db` are dropped first; channels left empty do
    /// not contribute a delay spread.
    pub fn build(traces: &[ChannelTrace], floor_db: f64, label: &str) -> Result<Self> {
        let mut pgs = Vec::new();
        let mut delays = Vec::new();
        let mut spreads = Vec::new();
        for t in traces {
            let kept: Vec<(f64, f64)> = t
                .mpcs
                .iter()
                .copied()
                .filter(|&(_, pg)| pg >= floor_db)
                .collect();
            if kept.is_empty() {
                continue;
            }
            pgs.extend(kept.iter().map(|&(_, pg)| pg));
            delays.extend(kept.iter().map(|&(d, _)| d));
            spreads.push(rms_delay_spread_of(&kept)?);
        }
        if pgs.is_empty() {
            return Err(Error::Domain(format!(
                "{label} ensemble is empty after applying the {floor_db} dB floor"
            )));
        }
        Ok(EnsembleCdfs {
            pg: EmpiricalCdf::new(&pgs)?,
            delay: EmpiricalCdf::new(&delays)?,
            rmsds: EmpiricalCdf::new(&spreads)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionKs {
    pub rx_index: usize,
    pub ks_pg: f64,
    pub ks_delay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ks_pg: f64,
    pub ks_delay: f64,
    pub ks_rmsds: f64,
    pub sim_mpcs: usize,
    pub ref_mpcs: usize,
    pub sim_channels: usize,
    pub ref_channels: usize,
    /// `None` when no floor was applied.
    pub floor_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_position: Vec<PositionKs>,
}

impl ComparisonReport {
    pub fn summary(&self) -> String {
        let floor = self
            .floor_db
            .map_or_else(|| "none".to_string(), |f| format!("{f} dB"));
        let mut s = format!(
            "KS comparison (floor: {floor})\n\
             \x20 path gain        {:.4}\n\
             \x20 absolute delay   {:.4}\n\
             \x20 RMS delay spread {:.4}\n\
             \x20 samples: sim {} MPCs / {} channels, ref {} MPCs / {} channels\n",
            self.ks_pg,
            self.ks_delay,
            self.ks_rmsds,
            self.sim_mpcs,
            self.sim_channels,
            self.ref_mpcs,
            self.ref_channels
        );
        for p in &self.per_position {
            s.push_str(&format!(
                "  rx {:>4}: pg {:.4}  delay {:.4}\n",
                p.rx_index, p.ks_pg, p.ks_delay
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareOptions {
    /// `None` keeps every component.
    pub floor_db: Option<f64>,
    pub per_position: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            floor_db: Some(DEFAULT_FLOOR_DB),
            per_position: false,
        }
    }
}

pub fn compare_traces(
    sim: &[ChannelTrace],
    reference: &[ChannelTrace],
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    let floor = opts.floor_db.unwrap_or(f64::NEG_INFINITY);
    let a = EnsembleCdfs::build(sim, floor, "simulated")?;
    let b = EnsembleCdfs::build(reference, floor, "reference")?;
    let mut per_position = Vec::new();
    if opts.per_position {
        for s in sim {
            let Some(r) = reference.iter().find(|r| r.rx_index == s.rx_index) else {
                continue;
            };
            let (Ok(sa), Ok(rb)) = (
                EnsembleCdfs::build(std::slice::from_ref(s), floor, "simulated"),
                EnsembleCdfs::build(std::slice::from_ref(r), floor, "reference"),
            ) else {
                continue;
            };
            per_position.push(PositionKs {
                rx_index: s.rx_index,
                ks_pg: ks_statistic(&sa.pg, &rb.pg),
                ks_delay: ks_statistic(&sa.delay, &rb.delay),
            });
        }
    }
    Ok(ComparisonReport {
        ks_pg: ks_statistic(&a.pg, &b.pg),
        ks_delay: ks_statistic(&a.delay, &b.delay),
        ks_rmsds: ks_statistic(&a.rmsds, &b.rmsds),
        sim_mpcs: a.pg.len(),
        ref_mpcs: b.pg.len(),
        sim_channels: a.rmsds.len(),
        ref_channels: b.rmsds.len(),
        floor_db: opts.floor_db,
        per_position,
    })
}

/// Compares generated channels (indexed by position in `sim`) with a
/// reference trace ensemble.
pub fn compare_ensembles(
    sim: &[ChannelInstance],
    reference: &[ChannelTrace],
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    let traces: Vec<ChannelTrace> = sim
        .iter()
        .enumerate()
        .map(|(i, c)| ChannelTrace::from_instance(i, c))
        .collect();
    compare_traces(&traces, reference, opts)
}
