//! Scenario configuration documents.

use std::collections::BTreeMap;
use std::env;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Face, Point3, Room, MAX_TRACE_ORDER};
use crate::materials::MaterialLibrary;
use crate::metrics::DEFAULT_FLOOR_DB;
use crate::qd::QdConfig;

/// Colon-separated directories searched for relative material library paths.
pub const MATLIB_PATH_ENV: &str = "QDCHAN_MATLIB_PATH";

/// Receiver positions evenly spaced around a rectangle at fixed height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RxLoop {
    pub center: [f64; 2],
    pub half_size: [f64; 2],
    pub z: f64,
    pub count: usize,
}

impl RxLoop {
    pub fn positions(&self) -> Vec<Point3> {
        let [cx, cy] = self.center;
        let [hx, hy] = self.half_size;
        let perimeter = 4.0 * (hx + hy);
        (0..self.count)
            .map(|i| {
                let s = perimeter * i as f64 / self.count as f64;
                let (x, y) = if s < 2.0 * hx {
                    (cx - hx + s, cy - hy)
                } else if s < 2.0 * (hx + hy) {
                    (cx + hx, cy - hy + (s - 2.0 * hx))
                } else if s < 4.0 * hx + 2.0 * hy {
                    (cx + hx - (s - 2.0 * (hx + hy)), cy + hy)
                } else {
                    (cx - hx, cy + hy - (s - 4.0 * hx - 2.0 * hy))
                };
                Point3::new(x, y, self.z)
            })
            .collect()
    }
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR_DB
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    /// Library file; the bundled lecture-room library when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material_library: Option<PathBuf>,
    /// D-ray table to use instead of the box-room tracer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drays_file: Option<PathBuf>,
    /// Dynamic-range floor for comparisons; `-inf` disables it.
    #[serde(default = "default_floor")]
    pub floor_db: f64,
    pub tx: Point3,
    #[serde(default)]
    pub rx: Vec<Point3>,
    pub room: Room,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_loop: Option<RxLoop>,
    #[serde(default)]
    pub qd: QdConfig,
    /// Surfaces without their own parameters, mapped to the material whose
    /// reflection loss they borrow.
    #[serde(default)]
    pub fallback: BTreeMap<String, String>,
}

impl ScenarioConfig {
    /// Lecture room, TX at (2, 3, 2.5) m, 108 receivers looped around the
    /// center at 1.5 m.
    pub fn lecture_room() -> Self {
        ScenarioConfig {
            seed: 0,
            material_library: None,
            drays_file: None,
            floor_db: DEFAULT_FLOOR_DB,
            tx: Point3::new(2.0, 3.0, 2.5),
            rx: Vec::new(),
            room: Room::lecture_room(),
            rx_loop: Some(RxLoop {
                center: [5.0, 9.5],
                half_size: [2.0, 4.0],
                z: 1.5,
                count: 108,
            }),
            qd: QdConfig::default(),
            fallback: BTreeMap::from([("Floor".to_string(), "Ceiling (TX1)".to_string())]),
        }
    }

    pub fn parse(doc: &str) -> Result<Self> {
        toml::from_str(doc).map_err(|e| {
            let line = e
                .span()
                .map(|span| doc[..span.start.min(doc.len())].lines().count().max(1) as u64)
                .unwrap_or(0);
            Error::Parse {
                path: "scenario".into(),
                line,
                reason: e.message().to_string(),
            }
        })
    }

    /// Reads a config file. Relative paths inside it resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&doc).map_err(|e| match e {
            Error::Parse { line, reason, .. } => Error::Parse {
                path: path.display().to_string(),
                line,
                reason,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = cfg.drays_file.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = cfg.material_library.as_mut() {
            if p.is_relative() {
                *p = locate_library(p, base);
            }
        }
        Ok(cfg)
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical document.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_document().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn rx_positions(&self) -> Vec<Point3> {
        let mut out = self.rx.clone();
        if let Some(l) = &self.rx_loop {
            out.extend(l.positions());
        }
        out
    }

    pub fn load_library(&self) -> Result<MaterialLibrary> {
        let mut lib = match &self.material_library {
            None => MaterialLibrary::lecture_room(),
            Some(path) => {
                let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                MaterialLibrary::load(&doc).map_err(|e| match e {
                    Error::Parse { line, reason, .. } => Error::Parse {
                        path: path.display().to_string(),
                        line,
                        reason,
                    },
                    other => other,
                })?
            }
        };
        lib.set_fallbacks(self.fallback.clone());
        Ok(lib)
    }

    /// Structural checks plus resolution of every face material.
    pub fn validate(&self, library: &MaterialLibrary) -> Result<()> {
        let qd = &self.qd;
        if !(qd.carrier_frequency_hz > 0.0 && qd.carrier_frequency_hz.is_finite()) {
            return Err(Error::validation(
                "qd.carrier_frequency_hz",
                format!("must be > 0, got {}", qd.carrier_frequency_hz),
            ));
        }
        if qd.max_order > MAX_TRACE_ORDER {
            return Err(Error::validation(
                "qd.max_order",
                format!("must be <= {MAX_TRACE_ORDER}, got {}", qd.max_order),
            ));
        }
        if self.floor_db.is_nan() {
            return Err(Error::validation("floor_db", "must be a number"));
        }
        let rx = self.rx_positions();
        if rx.is_empty() {
            return Err(Error::validation(
                "rx",
                "no receiver positions (set `rx` or `rx_loop`)",
            ));
        }
        for (name, target) in &self.fallback {
            if library.get(target).is_none() {
                return Err(Error::validation(
                    format!("fallback.{name}"),
                    format!("unknown material `{target}`"),
                ));
            }
        }
        if self.drays_file.is_some() {
            return Ok(());
        }
        self.room.validate()?;
        for face in Face::ALL {
            let name = self.room.faces.get(face);
            if !library.contains(name) {
                return Err(Error::validation(
                    format!("room.faces.{}", face.key()),
                    format!("unknown material `{name}`"),
                ));
            }
        }
        if !self.room.strictly_contains(self.tx) {
            return Err(Error::validation(
                "tx",
                format!("{} is not strictly inside the room", self.tx),
            ));
        }
        for (i, p) in rx.iter().enumerate() {
            if !self.room.strictly_contains(*p) {
                return Err(Error::validation(
                    format!("rx[{i}]"),
                    format!("{p} is not strictly inside the room"),
                ));
            }
            if *p == self.tx {
                return Err(Error::validation(format!("rx[{i}]"), "coincides with tx"));
            }
        }
        Ok(())
    }
}

fn locate_library(rel: &Path, base: &Path) -> PathBuf {
    let local = base.join(rel);
    if local.exists() {
        return local;
    }
    if let Some(dirs) = env::var_os(MATLIB_PATH_ENV) {
        for dir in env::split_paths(&dirs) {
            let candidate = dir.join(rel);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    local
}
