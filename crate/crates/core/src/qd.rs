//! Quasi-deterministic cluster generation.
//!
//! Each reflected D-ray becomes the cursor of a cluster. The cursor gain is
//! perturbed by a random reflection-loss residual per bounce, then pre- and
//! post-cursor diffuse components are drawn around it:
//!
//! * arrivals follow a Poisson process with a per-cluster Rician rate,
//! * powers decay exponentially with delay from the cursor, offset by a
//!   Rician `K` factor and a normal shadowing term,
//! * angles are the cursor angles plus Laplacian offsets,
//! * phases are uniform.
//!
//! Higher-order rays use either the reduced heuristic (one diffuse family per
//! bounce, all anchored on the cursor) or the complete heuristic (every
//! component spawns a new family at each subsequent bounce).
//!
//! Stream layout under a cluster stream `C`:
//! `C/0` cursor reflection losses, `C/(1+k)/side` the family generated at
//! bounce `k`. Inside a family stream `F`: `F/0` per-family parameters and
//! `F/b/i` per-component draws for MPC `i` (`b` = 1 arrival, 2 shadowing,
//! 3 angles, 4 phase, 5 other-bounce losses, 6 child node for the complete
//! model).

use std::borrow::Cow;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::distributions::{
    sample_exponential, sample_laplacian, sample_normal, sample_phase, sample_rician, RngStream,
};
use crate::error::{Error, Result};
use crate::geometry::{
    fold_elevation, trace, wrap_azimuth, DRay, Point3, Propagation, Room, SPEED_OF_LIGHT,
};
use crate::materials::{MaterialLibrary, MaterialParams, Side};

/// `10 log10(e)`: converts nepers of power to dB.
pub fn db_per_neper() -> f64 {
    10.0 * E.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpcKind {
    Direct,
    Cursor,
    Pre,
    Post,
}

impl MpcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MpcKind::Direct => "direct",
            MpcKind::Cursor => "cursor",
            MpcKind::Pre => "pre",
            MpcKind::Post => "post",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(MpcKind::Direct),
            "cursor" => Some(MpcKind::Cursor),
            "pre" => Some(MpcKind::Pre),
            "post" => Some(MpcKind::Post),
            _ => None,
        }
    }

    pub fn is_diffuse(self) -> bool {
        matches!(self, MpcKind::Pre | MpcKind::Post)
    }
}

impl From<Side> for MpcKind {
    fn from(side: Side) -> Self {
        match side {
            Side::Pre => MpcKind::Pre,
            Side::Post => MpcKind::Post,
        }
    }
}

/// Departure and arrival directions in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angles {
    pub aod_az: f64,
    pub aod_el: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
}

impl From<&DRay> for Angles {
    fn from(r: &DRay) -> Self {
        Angles {
            aod_az: r.aod_az,
            aod_el: r.aod_el,
            aoa_az: r.aoa_az,
            aoa_el: r.aoa_el,
        }
    }
}

/// One multipath component. `tau_ns` is relative to the direct-ray arrival.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpc {
    pub kind: MpcKind,
    pub tau_ns: f64,
    pub pg_db: f64,
    pub angles: Angles,
    pub phase_rad: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Cursors only, with mean reflection losses.
    DraysOnly,
    #[default]
    Reduced,
    Complete,
}

impl ModelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::DraysOnly => "drays_only",
            ModelVariant::Reduced => "reduced",
            ModelVariant::Complete => "complete",
        }
    }
}

/// Gain that diffuse components must stay strictly below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReference {
    /// The cursor gain after the random reflection-loss residuals.
    #[default]
    Realized,
    /// The deterministic gain with mean reflection losses only.
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QdConfig {
    pub n_pre: usize,
    pub n_post: usize,
    pub carrier_frequency_hz: f64,
    pub max_order: usize,
    pub model: ModelVariant,
    pub prune_reference: PruneReference,
    /// Upper bound on components per cluster for the complete model.
    pub max_cluster_mpcs: usize,
    /// Drop the direct ray to emulate a blocked line of sight.
    pub drop_direct: bool,
}

impl Default for QdConfig {
    fn default() -> Self {
        QdConfig {
            n_pre: 3,
            n_post: 16,
            carrier_frequency_hz: 60e9,
            max_order: 2,
            model: ModelVariant::Reduced,
            prune_reference: PruneReference::Realized,
            max_cluster_mpcs: 10_000,
            drop_direct: false,
        }
    }
}

impl QdConfig {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn count(&self, side: Side) -> usize {
        match side {
            Side::Pre => self.n_pre,
            Side::Post => self.n_post,
        }
    }
}

/// A cursor plus its diffuse components. Pre-cursors are sorted by
/// decreasing delay, post-cursors by increasing delay.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub dray: DRay,
    pub cursor: Mpc,
    pub pre: Vec<Mpc>,
    pub post: Vec<Mpc>,
    pub realized_pg0_db: f64,
    /// Threshold every diffuse component was pruned against.
    pub comparison_db: f64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        1 + self.pre.len() + self.post.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cursor first, then pre-cursors, then post-cursors.
    pub fn mpcs(&self) -> impl Iterator<Item = &Mpc> {
        std::iter::once(&self.cursor)
            .chain(&self.pre)
            .chain(&self.post)
    }

    pub fn diffuse(&self) -> impl Iterator<Item = &Mpc> {
        self.pre.iter().chain(&self.post)
    }
}

/// Settings recorded with each generated channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigSnapshot {
    pub seed: u64,
    pub n_pre: usize,
    pub n_post: usize,
    pub carrier_frequency_hz: f64,
    pub model: ModelVariant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelInstance {
    pub tx: Option<Point3>,
    pub rx: Option<Point3>,
    /// Line-of-sight propagation time; absolute delay is `t_dir + tau`.
    pub t_dir_ns: f64,
    pub direct: Option<Mpc>,
    /// Clusters paired with the index of their D-ray in the traced list.
    pub clusters: Vec<(usize, Cluster)>,
    pub config: ConfigSnapshot,
}

impl ChannelInstance {
    /// Every component with its cluster id (0 for the direct ray).
    pub fn mpcs(&self) -> impl Iterator<Item = (usize, &Mpc)> {
        self.direct.iter().map(|m| (0, m)).chain(
            self.clusters
                .iter()
                .flat_map(|(id, c)| c.mpcs().map(move |m| (*id, m))),
        )
    }

    pub fn mpc_count(&self) -> usize {
        self.mpcs().count()
    }
}

/// Cursor gain after the per-bounce reflection-loss residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedGain {
    pub pg0_db: f64,
    /// `RL_i - mu_RL_i` for each bounce, in bounce order.
    pub residuals_db: Vec<f64>,
}

/// Draws one reflection loss per bounce material and subtracts the residuals
/// from the deterministic gain.
pub fn realize_cursor_gain<M: AsRef<MaterialParams>>(
    pg_det_db: f64,
    materials: &[M],
    rng: &mut RngStream,
) -> Result<RealizedGain> {
    let mut residuals = Vec::with_capacity(materials.len());
    for m in materials {
        let m = m.as_ref();
        let rl = sample_rician(rng, m.rl.s, m.rl.sigma)?;
        residuals.push(rl - m.mu_rl_db);
    }
    Ok(RealizedGain {
        pg0_db: pg_det_db - residuals.iter().sum::<f64>(),
        residuals_db: residuals,
    })
}

impl AsRef<MaterialParams> for MaterialParams {
    fn as_ref(&self) -> &MaterialParams {
        self
    }
}

/// Per-family random parameters, drawn once per cluster side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyDraws {
    pub lambda_per_ns: f64,
    pub k_db: f64,
    pub gamma_ns: f64,
    pub sigma_s: f64,
    pub sigma_alpha_az: f64,
    pub sigma_alpha_el: f64,
}

impl FamilyDraws {
    pub fn sample(material: &MaterialParams, side: Side, rng: &mut RngStream) -> Result<Self> {
        let f = material.family(side);
        let lambda_per_ns = sample_rician(rng, f.lambda_per_ns.s, f.lambda_per_ns.sigma)?;
        let k_db = sample_rician(rng, f.k_db.s, f.k_db.sigma)?;
        let gamma_ns = sample_rician(rng, f.gamma_ns.s, f.gamma_ns.sigma)?;
        let sigma_s = sample_rician(rng, f.sigma_s.s, f.sigma_s.sigma)?;
        let sigma_alpha_az = sample_rician(
            rng,
            material.sigma_alpha_az.s,
            material.sigma_alpha_az.sigma,
        )?;
        let sigma_alpha_el = sample_rician(
            rng,
            material.sigma_alpha_el.s,
            material.sigma_alpha_el.sigma,
        )?;
        Ok(FamilyDraws {
            lambda_per_ns,
            k_db,
            gamma_ns,
            sigma_s,
            sigma_alpha_az,
            sigma_alpha_el,
        })
    }
}

/// A candidate diffuse arrival. `index` is its position in the unpruned
/// Poisson sequence and keys its per-component streams.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arrival {
    pub index: usize,
    pub tau_ns: f64,
}

const BRANCH_PARAMS: u64 = 0;
const BRANCH_ARRIVAL: u64 = 1;
const BRANCH_SHADOW: u64 = 2;
const BRANCH_ANGLES: u64 = 3;
const BRANCH_PHASE: u64 = 4;
const BRANCH_OTHER_LOSS: u64 = 5;
const BRANCH_CHILD: u64 = 6;

/// Poisson arrivals at rate `lambda_per_ns` stepping away from `tau0`.
/// Pre-cursors that would arrive before the direct ray are dropped.
pub fn generate_arrivals(
    tau0_ns: f64,
    lambda_per_ns: f64,
    side: Side,
    count: usize,
    family: &RngStream,
) -> Result<Vec<Arrival>> {
    if !(tau0_ns >= 0.0) {
        return Err(Error::Parameter(format!(
            "cursor delay must be >= 0, got {tau0_ns}"
        )));
    }
    if lambda_per_ns == 0.0 || count == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(count);
    let mut offset = 0.0;
    for i in 0..count {
        let mut rng = family.child(BRANCH_ARRIVAL).child(i as u64);
        offset += sample_exponential(&mut rng, lambda_per_ns)?;
        let tau = match side {
            Side::Post => tau0_ns + offset,
            Side::Pre => tau0_ns - offset,
        };
        if tau < 0.0 {
            // every later pre-cursor is earlier still
            break;
        }
        out.push(Arrival {
            index: i,
            tau_ns: tau,
        });
    }
    Ok(out)
}

/// Diffuse component gain relative to its cursor:
/// `PG0 - K - 10log10(e) |tau - tau0| / gamma + 10log10(e) S`.
pub fn diffuse_gain_db(
    pg0_db: f64,
    tau0_ns: f64,
    tau_ns: f64,
    k_db: f64,
    gamma_ns: f64,
    shadow: f64,
) -> f64 {
    pg0_db - k_db - db_per_neper() * (tau_ns - tau0_ns).abs() / gamma_ns + db_per_neper() * shadow
}

/// Gains for each arrival; components at or above `comparison_db` are dropped.
/// A zero decay constant disables the family.
pub fn generate_cursor_powers(
    pg0_db: f64,
    tau0_ns: f64,
    arrivals: &[Arrival],
    draws: &FamilyDraws,
    comparison_db: f64,
    family: &RngStream,
) -> Result<Vec<(Arrival, f64)>> {
    if draws.gamma_ns == 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(arrivals.len());
    for a in arrivals {
        let mut rng = family.child(BRANCH_SHADOW).child(a.index as u64);
        let shadow = sample_normal(&mut rng, 0.0, draws.sigma_s)?;
        let pg = diffuse_gain_db(
            pg0_db,
            tau0_ns,
            a.tau_ns,
            draws.k_db,
            draws.gamma_ns,
            shadow,
        );
        if pg < comparison_db {
            out.push((*a, pg));
        }
    }
    Ok(out)
}

/// Base angles plus independent Laplacian offsets with standard deviations
/// `sigma_az` (azimuths) and `sigma_el` (elevations).
pub fn perturb_angles(
    base: Angles,
    sigma_az: f64,
    sigma_el: f64,
    rng: &mut RngStream,
) -> Result<Angles> {
    let (var_az, var_el) = (sigma_az * sigma_az, sigma_el * sigma_el);
    let aod_az = base.aod_az + sample_laplacian(rng, 0.0, var_az)?;
    let aod_el = base.aod_el + sample_laplacian(rng, 0.0, var_el)?;
    let aoa_az = base.aoa_az + sample_laplacian(rng, 0.0, var_az)?;
    let aoa_el = base.aoa_el + sample_laplacian(rng, 0.0, var_el)?;
    Ok(Angles {
        aod_az: wrap_azimuth(aod_az),
        aod_el: fold_elevation(aod_el),
        aoa_az: wrap_azimuth(aoa_az),
        aoa_el: fold_elevation(aoa_el),
    })
}

pub fn generate_cursor_angles(
    base: Angles,
    draws: &FamilyDraws,
    indices: &[usize],
    family: &RngStream,
) -> Result<Vec<Angles>> {
    indices
        .iter()
        .map(|&i| {
            let mut rng = family.child(BRANCH_ANGLES).child(i as u64);
            perturb_angles(base, draws.sigma_alpha_az, draws.sigma_alpha_el, &mut rng)
        })
        .collect()
}

/// The anchor a diffuse family is generated around.
#[derive(Clone, Copy, Debug)]
struct Anchor {
    tau_ns: f64,
    pg_db: f64,
    comparison_db: f64,
    angles: Angles,
}

/// A generated diffuse component and the stream index it came from.
struct Diffuse {
    index: usize,
    mpc: Mpc,
}

/// One pre- or post-cursor family around `anchor` with `material`'s laws.
fn generate_family(
    anchor: Anchor,
    material: &MaterialParams,
    side: Side,
    count: usize,
    family: &RngStream,
) -> Result<Vec<Diffuse>> {
    if count == 0 || material.family(side).is_disabled() {
        return Ok(Vec::new());
    }
    let draws = FamilyDraws::sample(material, side, &mut family.child(BRANCH_PARAMS))?;
    let arrivals = generate_arrivals(anchor.tau_ns, draws.lambda_per_ns, side, count, family)?;
    let powered = generate_cursor_powers(
        anchor.pg_db,
        anchor.tau_ns,
        &arrivals,
        &draws,
        anchor.comparison_db,
        family,
    )?;
    let indices: Vec<usize> = powered.iter().map(|(a, _)| a.index).collect();
    let angles = generate_cursor_angles(anchor.angles, &draws, &indices, family)?;
    Ok(powered
        .into_iter()
        .zip(angles)
        .map(|((a, pg), angles)| {
            let phase = sample_phase(&mut family.child(BRANCH_PHASE).child(a.index as u64));
            Diffuse {
                index: a.index,
                mpc: Mpc {
                    kind: side.into(),
                    tau_ns: a.tau_ns,
                    pg_db: pg,
                    angles,
                    phase_rad: phase,
                },
            }
        })
        .collect())
}

fn family_stream(node: &RngStream, bounce: usize, side: Side) -> RngStream {
    node.child(1 + bounce as u64).child(side.index())
}

fn resolve_all<'a>(
    dray: &DRay,
    library: &'a MaterialLibrary,
) -> Result<Vec<Cow<'a, MaterialParams>>> {
    dray.materials
        .iter()
        .map(|name| library.resolve(name))
        .collect()
}

fn cursor_mpc(dray: &DRay, pg_db: f64) -> Mpc {
    Mpc {
        kind: MpcKind::Cursor,
        tau_ns: dray.tau_ns,
        pg_db,
        angles: dray.into(),
        phase_rad: 0.0,
    }
}

fn comparison(config: &QdConfig, realized: f64, deterministic: f64) -> f64 {
    match config.prune_reference {
        PruneReference::Realized => realized,
        PruneReference::Deterministic => deterministic,
    }
}

/// Splits diffuse components by arrival relative to the cursor and sorts
/// each side away from it.
fn assemble(
    dray: &DRay,
    cursor: Mpc,
    realized: f64,
    comparison_db: f64,
    diffuse: Vec<Mpc>,
) -> Cluster {
    let tau0 = cursor.tau_ns;
    let (mut pre, mut post): (Vec<Mpc>, Vec<Mpc>) =
        diffuse.into_iter().partition(|m| m.tau_ns < tau0);
    for m in pre.iter_mut() {
        m.kind = MpcKind::Pre;
    }
    for m in post.iter_mut() {
        m.kind = MpcKind::Post;
    }
    pre.sort_by(|a, b| b.tau_ns.total_cmp(&a.tau_ns));
    post.sort_by(|a, b| a.tau_ns.total_cmp(&b.tau_ns));
    Cluster {
        dray: dray.clone(),
        cursor,
        pre,
        post,
        realized_pg0_db: realized,
        comparison_db,
    }
}

fn require_order(dray: &DRay, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} cannot dress a ray of order {}",
            dray.order
        )))
    }
}

/// Single-reflection generator.
pub fn generate_cluster_first_order(
    dray: &DRay,
    library: &MaterialLibrary,
    config: &QdConfig,
    stream: &RngStream,
) -> Result<Cluster> {
    require_order(dray, dray.order == 1, "first-order generator")?;
    generate_cluster_reduced(dray, library, config, stream)
}

/// Reduced multi-reflection generator: one family per bounce, each anchored
/// on the cursor, then attenuated by the residual losses of the other bounces.
pub fn generate_cluster_reduced(
    dray: &DRay,
    library: &MaterialLibrary,
    config: &QdConfig,
    stream: &RngStream,
) -> Result<Cluster> {
    require_order(dray, dray.order >= 1, "reduced generator")?;
    let materials = resolve_all(dray, library)?;
    let realized = realize_cursor_gain(dray.pg_det_db, &materials, &mut stream.child(0))?;
    let cluster_cmp = comparison(config, realized.pg0_db, dray.pg_det_db);

    let mut diffuse = Vec::new();
    for (k, material) in materials.iter().enumerate() {
        let base = dray.pg_det_db - realized.residuals_db[k];
        let anchor = Anchor {
            tau_ns: dray.tau_ns,
            pg_db: base,
            comparison_db: comparison(config, base, dray.pg_det_db),
            angles: dray.into(),
        };
        for side in Side::BOTH {
            let family = family_stream(stream, k, side);
            for mut d in generate_family(anchor, material, side, config.count(side), &family)? {
                let mut rng = family.child(BRANCH_OTHER_LOSS).child(d.index as u64);
                for (j, other) in materials.iter().enumerate() {
                    if j == k {
                        continue;
                    }
                    let rl = sample_rician(&mut rng, other.rl.s, other.rl.sigma)?;
                    d.mpc.pg_db -= rl - other.mu_rl_db;
                }
                if d.mpc.pg_db < cluster_cmp {
                    diffuse.push(d.mpc);
                }
            }
        }
    }
    Ok(assemble(
        dray,
        cursor_mpc(dray, realized.pg0_db),
        realized.pg0_db,
        cluster_cmp,
        diffuse,
    ))
}

/// Upper bound `(n_pre + 1 + n_post)^order` on the complete model's cluster size.
pub fn complete_model_bound(config: &QdConfig, order: usize) -> Option<usize> {
    let per_bounce = config.n_pre.checked_add(config.n_post)?.checked_add(1)?;
    per_bounce.checked_pow(u32::try_from(order).ok()?)
}

/// Complete multi-reflection generator: at bounce `k` every existing
/// component spawns its own family with material `k`'s laws, anchored at its
/// own delay, gain and angles.
pub fn generate_cluster_complete(
    dray: &DRay,
    library: &MaterialLibrary,
    config: &QdConfig,
    stream: &RngStream,
) -> Result<Cluster> {
    require_order(dray, dray.order >= 1, "complete generator")?;
    match complete_model_bound(config, dray.order) {
        Some(bound) if bound <= config.max_cluster_mpcs => {}
        bound => {
            return Err(Error::Resource(format!(
                "complete model for order {} may produce {} components, cap is {}",
                dray.order,
                bound.map_or_else(|| "overflowing".to_string(), |b| b.to_string()),
                config.max_cluster_mpcs
            )))
        }
    }
    let materials = resolve_all(dray, library)?;
    let realized = realize_cursor_gain(dray.pg_det_db, &materials, &mut stream.child(0))?;
    let cluster_cmp = comparison(config, realized.pg0_db, dray.pg_det_db);
    let cursor = cursor_mpc(dray, realized.pg0_db);

    // (component, its stream node, its own comparison threshold)
    let mut frontier = vec![(cursor.clone(), stream.clone(), cluster_cmp)];
    let mut diffuse = Vec::new();
    for (k, material) in materials.iter().enumerate() {
        let mut spawned = Vec::new();
        for (parent, node, parent_cmp) in &frontier {
            let anchor = Anchor {
                tau_ns: parent.tau_ns,
                pg_db: parent.pg_db,
                comparison_db: *parent_cmp,
                angles: parent.angles,
            };
            for side in Side::BOTH {
                let family = family_stream(node, k, side);
                for d in generate_family(anchor, material, side, config.count(side), &family)? {
                    let child_node = family.child(BRANCH_CHILD).child(d.index as u64);
                    let cmp = d.mpc.pg_db;
                    spawned.push((d.mpc, child_node, cmp));
                }
            }
        }
        diffuse.extend(spawned.iter().map(|(m, _, _)| m.clone()));
        frontier.extend(spawned);
    }
    Ok(assemble(
        dray,
        cursor,
        realized.pg0_db,
        cluster_cmp,
        diffuse,
    ))
}

/// Cursor with its deterministic gain and no diffuse components.
pub fn generate_cluster_drays_only(dray: &DRay) -> Cluster {
    Cluster {
        dray: dray.clone(),
        cursor: cursor_mpc(dray, dray.pg_det_db),
        pre: Vec::new(),
        post: Vec::new(),
        realized_pg0_db: dray.pg_det_db,
        comparison_db: dray.pg_det_db,
    }
}

pub fn generate_cluster(
    dray: &DRay,
    library: &MaterialLibrary,
    config: &QdConfig,
    stream: &RngStream,
) -> Result<Cluster> {
    match config.model {
        ModelVariant::DraysOnly => Ok(generate_cluster_drays_only(dray)),
        ModelVariant::Reduced => generate_cluster_reduced(dray, library, config, stream),
        ModelVariant::Complete => generate_cluster_complete(dray, library, config, stream),
    }
}

/// Dresses an already traced (or ingested) set of D-rays. The D-ray at list
/// position `i` uses sub-stream `i` and becomes cluster id `i`.
pub fn channel_from_drays(
    drays: &[DRay],
    t_dir_ns: f64,
    library: &MaterialLibrary,
    config: &QdConfig,
    stream: &RngStream,
) -> Result<ChannelInstance> {
    let mut direct = None;
    let mut clusters = Vec::new();
    for (i, ray) in drays.iter().enumerate() {
        if ray.order == 0 {
            if !config.drop_direct {
                direct = Some(Mpc {
                    kind: MpcKind::Direct,
                    tau_ns: 0.0,
                    pg_db: ray.pg_det_db,
                    angles: ray.into(),
                    phase_rad: 0.0,
                });
            }
            continue;
        }
        clusters.push((
            i,
            generate_cluster(ray, library, config, &stream.child(i as u64))?,
        ));
    }
    Ok(ChannelInstance {
        tx: None,
        rx: None,
        t_dir_ns,
        direct,
        clusters,
        config: ConfigSnapshot {
            seed: stream.seed(),
            n_pre: config.n_pre,
            n_post: config.n_post,
            carrier_frequency_hz: config.carrier_frequency_hz,
            model: config.model,
        },
    })
}

/// Traces the room and generates one channel realization.
pub fn generate_channel(
    room: &Room,
    tx: Point3,
    rx: Point3,
    library: &MaterialLibrary,
    config: &QdConfig,
    stream: &RngStream,
) -> Result<ChannelInstance> {
    if !(config.carrier_frequency_hz > 0.0) {
        return Err(Error::validation("carrier_frequency_hz", "must be > 0"));
    }
    let prop = Propagation::at_frequency(config.carrier_frequency_hz, library);
    let drays = trace(room, tx, rx, config.max_order, &prop)?;
    let t_dir_ns = drays[0].delay_abs_ns;
    let mut channel = channel_from_drays(&drays, t_dir_ns, library, config, stream)?;
    channel.tx = Some(tx);
    channel.rx = Some(rx);
    Ok(channel)
}
