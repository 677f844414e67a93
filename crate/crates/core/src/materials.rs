//! Per-material parameter sets and the library that holds them.

use std::borrow::Cow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LECTURE_ROOM: &str = include_str!("../data/lecture_room.matlib");

/// `(s, sigma)` parameters of a Rician law.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct RicianParams {
    pub s: f64,
    pub sigma: f64,
}

impl RicianParams {
    pub const ZERO: RicianParams = RicianParams { s: 0.0, sigma: 0.0 };

    pub const fn new(s: f64, sigma: f64) -> Self {
        RicianParams { s, sigma }
    }

    pub fn is_zero(&self) -> bool {
        self.s == 0.0 && self.sigma == 0.0
    }

    /// Law with zero spread: every draw returns `value`.
    pub const fn fixed(value: f64) -> Self {
        RicianParams {
            s: value,
            sigma: 0.0,
        }
    }
}

impl From<[f64; 2]> for RicianParams {
    fn from([s, sigma]: [f64; 2]) -> Self {
        RicianParams { s, sigma }
    }
}

impl From<RicianParams> for [f64; 2] {
    fn from(p: RicianParams) -> Self {
        [p.s, p.sigma]
    }
}

/// Which side of the cursor a diffuse family sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Pre,
    Post,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Pre, Side::Post];

    pub fn index(self) -> u64 {
        match self {
            Side::Pre => 0,
            Side::Post => 1,
        }
    }
}

/// The four parameter laws shaping one cursor side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyParams {
    pub k_db: RicianParams,
    pub gamma_ns: RicianParams,
    pub sigma_s: RicianParams,
    pub lambda_per_ns: RicianParams,
}

impl FamilyParams {
    /// All four laws at `(0, 0)` marks a side that was never characterized.
    pub fn is_disabled(&self) -> bool {
        self.k_db.is_zero()
            && self.gamma_ns.is_zero()
            && self.sigma_s.is_zero()
            && self.lambda_per_ns.is_zero()
    }
}

/// Units: `k_*` dB, `gamma_*` ns, `sigma_s_*` nepers, `lambda_*` 1/ns,
/// `sigma_alpha_*` degrees, `rl` and `mu_rl_db` dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub name: String,
    pub mu_rl_db: f64,
    pub k_pre: RicianParams,
    pub k_post: RicianParams,
    pub gamma_pre: RicianParams,
    pub gamma_post: RicianParams,
    pub sigma_s_pre: RicianParams,
    pub sigma_s_post: RicianParams,
    pub lambda_pre: RicianParams,
    pub lambda_post: RicianParams,
    pub sigma_alpha_az: RicianParams,
    pub sigma_alpha_el: RicianParams,
    pub rl: RicianParams,
}

impl MaterialParams {
    /// A material with no diffuse families and a fixed reflection loss.
    pub fn specular(name: impl Into<String>, mu_rl_db: f64) -> Self {
        MaterialParams {
            name: name.into(),
            mu_rl_db,
            k_pre: RicianParams::ZERO,
            k_post: RicianParams::ZERO,
            gamma_pre: RicianParams::ZERO,
            gamma_post: RicianParams::ZERO,
            sigma_s_pre: RicianParams::ZERO,
            sigma_s_post: RicianParams::ZERO,
            lambda_pre: RicianParams::ZERO,
            lambda_post: RicianParams::ZERO,
            sigma_alpha_az: RicianParams::ZERO,
            sigma_alpha_el: RicianParams::ZERO,
            rl: RicianParams::fixed(mu_rl_db),
        }
    }

    pub fn family(&self, side: Side) -> FamilyParams {
        match side {
            Side::Pre => FamilyParams {
                k_db: self.k_pre,
                gamma_ns: self.gamma_pre,
                sigma_s: self.sigma_s_pre,
                lambda_per_ns: self.lambda_pre,
            },
            Side::Post => FamilyParams {
                k_db: self.k_post,
                gamma_ns: self.gamma_post,
                sigma_s: self.sigma_s_post,
                lambda_per_ns: self.lambda_post,
            },
        }
    }

    /// Turns off both diffuse sides, keeping reflection-loss statistics.
    pub fn without_cursors(mut self) -> Self {
        for p in [
            &mut self.k_pre,
            &mut self.k_post,
            &mut self.gamma_pre,
            &mut self.gamma_post,
            &mut self.sigma_s_pre,
            &mut self.sigma_s_post,
            &mut self.lambda_pre,
            &mut self.lambda_post,
        ] {
            *p = RicianParams::ZERO;
        }
        self
    }

    fn pairs(&self) -> [(&'static str, RicianParams); 11] {
        [
            ("k_pre", self.k_pre),
            ("k_post", self.k_post),
            ("gamma_pre", self.gamma_pre),
            ("gamma_post", self.gamma_post),
            ("sigma_s_pre", self.sigma_s_pre),
            ("sigma_s_post", self.sigma_s_post),
            ("lambda_pre", self.lambda_pre),
            ("lambda_post", self.lambda_post),
            ("sigma_alpha_az", self.sigma_alpha_az),
            ("sigma_alpha_el", self.sigma_alpha_el),
            ("rl", self.rl),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("{}.{}", self.name, f);
        if self.name.is_empty() {
            return Err(Error::validation("name", "material name is empty"));
        }
        if !(self.mu_rl_db >= 0.0 && self.mu_rl_db.is_finite()) {
            return Err(Error::validation(
                field("mu_rl_db"),
                format!("must be >= 0, got {}", self.mu_rl_db),
            ));
        }
        for (key, p) in self.pairs() {
            if !(p.s >= 0.0 && p.s.is_finite()) {
                return Err(Error::validation(
                    field(key),
                    format!("s must be >= 0, got {}", p.s),
                ));
            }
            if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
                return Err(Error::validation(
                    field(key),
                    format!("sigma must be >= 0, got {}", p.sigma),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct LibraryDoc {
    #[serde(default)]
    material: Vec<MaterialParams>,
}

/// Named material parameter sets, plus an optional fallback map for
/// surfaces that have no characterization of their own.
///
/// A fallback borrows the reflection-loss statistics of its target and has
/// both diffuse sides disabled.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaterialLibrary {
    materials: Vec<MaterialParams>,
    index: BTreeMap<String, usize>,
    fallbacks: BTreeMap<String, String>,
}

impl MaterialLibrary {
    pub fn new(materials: Vec<MaterialParams>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, m) in materials.iter().enumerate() {
            m.validate()?;
            if index.insert(m.name.clone(), i).is_some() {
                return Err(Error::validation(
                    "name",
                    format!("duplicate material `{}`", m.name),
                ));
            }
        }
        Ok(MaterialLibrary {
            materials,
            index,
            fallbacks: BTreeMap::new(),
        })
    }

    /// Parses a library document.
    pub fn load(doc: &str) -> Result<Self> {
        let parsed: LibraryDoc = toml::from_str(doc).map_err(|e| {
            let line = e
                .span()
                .map(|span| doc[..span.start.min(doc.len())].lines().count().max(1) as u64)
                .unwrap_or(0);
            Error::Parse {
                path: "material library".into(),
                line,
                reason: e.message().to_string(),
            }
        })?;
        Self::new(parsed.material)
    }

    pub fn to_document(&self) -> String {
        let doc = LibraryDoc {
            material: self.materials.clone(),
        };
        toml::to_string(&doc).expect("material library serializes")
    }

    /// The bundled lecture-room library (no fallbacks configured).
    pub fn lecture_room() -> Self {
        Self::load(LECTURE_ROOM).expect("bundled library is valid")
    }

    pub fn with_fallback(mut self, name: impl Into<String>, target: impl Into<String>) -> Self {
        self.fallbacks.insert(name.into(), target.into());
        self
    }

    pub fn set_fallbacks(&mut self, fallbacks: BTreeMap<String, String>) {
        self.fallbacks = fallbacks;
    }

    pub fn fallbacks(&self) -> &BTreeMap<String, String> {
        &self.fallbacks
    }

    pub fn get(&self, name: &str) -> Option<&MaterialParams> {
        self.index.get(name).map(|&i| &self.materials[i])
    }

    pub fn resolve(&self, name: &str) -> Result<Cow<'_, MaterialParams>> {
        if let Some(m) = self.get(name) {
            return Ok(Cow::Borrowed(m));
        }
        let target = self
            .fallbacks
            .get(name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))?;
        let base = self
            .get(target)
            .ok_or_else(|| Error::UnknownMaterial(target.clone()))?;
        let mut params = base.clone().without_cursors();
        params.name = name.to_string();
        Ok(Cow::Owned(params))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name) || self.fallbacks.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MaterialParams> {
        self.materials.iter()
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }
}
