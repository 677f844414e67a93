//! Method-of-images ray tracing in empty axis-aligned box rooms.
//!
//! Delays are reported both absolutely and relative to the line-of-sight
//! arrival `t_dir = d(tx, rx) / c`, so the direct ray sits at `tau = 0` and
//! every reflection at `tau > 0`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::MaterialLibrary;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Highest reflection order the tracer will enumerate.
pub const MAX_TRACE_ORDER: usize = 3;

const FACE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn coord(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    fn coord_mut(&mut self, axis: usize) -> &mut f64 {
        match axis {
            0 => &mut self.x,
            1 => &mut self.y,
            _ => &mut self.z,
        }
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Point3 { x, y, z }
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// One of the six walls of a box room.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    /// Floor.
    ZMin,
    /// Ceiling.
    ZMax,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::XMin,
        Face::XMax,
        Face::YMin,
        Face::YMax,
        Face::ZMin,
        Face::ZMax,
    ];

    pub fn axis(self) -> usize {
        match self {
            Face::XMin | Face::XMax => 0,
            Face::YMin | Face::YMax => 1,
            Face::ZMin | Face::ZMax => 2,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(self, Face::XMax | Face::YMax | Face::ZMax)
    }

    /// Inward unit normal.
    pub fn normal(self) -> Point3 {
        let sign = if self.is_max() { -1.0 } else { 1.0 };
        let mut n = Point3::default();
        *n.coord_mut(self.axis()) = sign;
        n
    }

    pub fn key(self) -> &'static str {
        match self {
            Face::XMin => "x_min",
            Face::XMax => "x_max",
            Face::YMin => "y_min",
            Face::YMax => "y_max",
            Face::ZMin => "z_min",
            Face::ZMax => "z_max",
        }
    }
}

/// Material names for the six faces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceMaterials {
    pub x_min: String,
    pub x_max: String,
    pub y_min: String,
    pub y_max: String,
    pub z_min: String,
    pub z_max: String,
}

impl FaceMaterials {
    pub fn uniform(name: &str) -> Self {
        FaceMaterials {
            x_min: name.into(),
            x_max: name.into(),
            y_min: name.into(),
            y_max: name.into(),
            z_min: name.into(),
            z_max: name.into(),
        }
    }

    pub fn get(&self, face: Face) -> &str {
        match face {
            Face::XMin => &self.x_min,
            Face::XMax => &self.x_max,
            Face::YMin => &self.y_min,
            Face::YMax => &self.y_max,
            Face::ZMin => &self.z_min,
            Face::ZMax => &self.z_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    /// `(Lx, Ly, Lz)` in meters; the room spans `[0, L]` on each axis.
    pub dimensions: [f64; 3],
    pub faces: FaceMaterials,
}

impl Room {
    pub fn new(dimensions: [f64; 3], faces: FaceMaterials) -> Result<Self> {
        let room = Room { dimensions, faces };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, &l) in self.dimensions.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::validation(
                    format!("room.dimensions[{axis}]"),
                    format!("must be > 0, got {l}"),
                ));
            }
        }
        for face in Face::ALL {
            if self.faces.get(face).trim().is_empty() {
                return Err(Error::validation(
                    format!("room.faces.{}", face.key()),
                    "no material assigned",
                ));
            }
        }
        Ok(())
    }

    /// 10 m x 19 m x 3 m lecture room with the bundled library's surface names.
    /// The floor is named `Floor` and needs a fallback to resolve.
    pub fn lecture_room() -> Self {
        Room {
            dimensions: [10.0, 19.0, 3.0],
            faces: FaceMaterials {
                x_min: "Left Wall (TX2)".into(),
                x_max: "Right Wall (TX1)".into(),
                y_min: "Bottom Wall (TX3)".into(),
                y_max: "Top Wall (TX1)".into(),
                z_min: "Floor".into(),
                z_max: "Ceiling (TX1)".into(),
            },
        }
    }

    fn face_coord(&self, face: Face) -> f64 {
        if face.is_max() {
            self.dimensions[face.axis()]
        } else {
            0.0
        }
    }

    pub fn strictly_contains(&self, p: Point3) -> bool {
        p.is_finite() && (0..3).all(|a| p.coord(a) > 0.0 && p.coord(a) < self.dimensions[a])
    }

    fn on_face(&self, p: Point3, face: Face) -> bool {
        (0..3).filter(|&a| a != face.axis()).all(|a| {
            let c = p.coord(a);
            c >= -FACE_TOL && c <= self.dimensions[a] + FACE_TOL
        })
    }

    /// Mirror image of `p` across the plane of `face`.
    pub fn mirror(&self, p: Point3, face: Face) -> Point3 {
        let mut q = p;
        let c = self.face_coord(face);
        let axis = face.axis();
        *q.coord_mut(axis) = 2.0 * c - p.coord(axis);
        q
    }
}

/// Purely geometric specular path.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecularPath {
    pub faces: Vec<Face>,
    pub bounce_points: Vec<Point3>,
    pub path_length: f64,
}

impl SpecularPath {
    pub fn order(&self) -> usize {
        self.faces.len()
    }
}

/// A deterministic ray: the direct path or one specular reflection path.
#[derive(Clone, Debug, PartialEq)]
pub struct DRay {
    /// Number of reflections; 0 is the direct ray.
    pub order: usize,
    pub delay_abs_ns: f64,
    /// Delay relative to the direct-ray arrival.
    pub tau_ns: f64,
    pub path_length_m: f64,
    /// Path gain with mean reflection losses only.
    pub pg_det_db: f64,
    pub aod_az: f64,
    pub aod_el: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    pub materials: Vec<String>,
    pub bounce_points: Vec<Point3>,
}

impl DRay {
    /// Checks the structural invariants of a ray that did not come from the tracer.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Err(Error::validation(field, reason));
        if self.materials.len() != self.order {
            return bad(
                "materials",
                format!(
                    "{} materials for order {}",
                    self.materials.len(),
                    self.order
                ),
            );
        }
        for (name, v) in [
            ("delay_ns", self.delay_abs_ns),
            ("tau_ns", self.tau_ns),
            ("pg_det_db", self.pg_det_db),
        ] {
            if !v.is_finite() {
                return bad(name, format!("not finite: {v}"));
            }
        }
        if self.order == 0 && self.tau_ns != 0.0 {
            return bad(
                "tau_ns",
                format!("direct ray must have tau 0, got {}", self.tau_ns),
            );
        }
        if self.order > 0 && self.tau_ns <= 0.0 {
            return bad(
                "tau_ns",
                format!("reflected ray must have tau > 0, got {}", self.tau_ns),
            );
        }
        if self.delay_abs_ns < self.tau_ns {
            return bad(
                "delay_ns",
                format!(
                    "absolute delay {} below tau {}",
                    self.delay_abs_ns, self.tau_ns
                ),
            );
        }
        for (name, az) in [("aod_az", self.aod_az), ("aoa_az", self.aoa_az)] {
            if !(0.0..360.0).contains(&az) {
                return bad(name, format!("azimuth {az} outside [0, 360)"));
            }
        }
        for (name, el) in [("aod_el", self.aod_el), ("aoa_el", self.aoa_el)] {
            if !(0.0..=180.0).contains(&el) {
                return bad(name, format!("elevation {el} outside [0, 180]"));
            }
        }
        Ok(())
    }
}

/// Carrier wavelength plus the material library used to fold mean
/// reflection losses into the deterministic gain.
#[derive(Clone, Copy, Debug)]
pub struct Propagation<'a> {
    pub wavelength_m: f64,
    pub library: &'a MaterialLibrary,
}

impl<'a> Propagation<'a> {
    pub fn at_frequency(carrier_hz: f64, library: &'a MaterialLibrary) -> Self {
        Propagation {
            wavelength_m: SPEED_OF_LIGHT / carrier_hz,
            library,
        }
    }
}

/// Wraps an azimuth into `[0, 360)`.
pub fn wrap_azimuth(az: f64) -> f64 {
    let w = az.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Folds a polar angle into `[0, 180]` by mirroring at the poles.
pub fn fold_elevation(el: f64) -> f64 {
    let w = el.rem_euclid(360.0);
    if w > 180.0 {
        360.0 - w
    } else {
        w
    }
}

/// Azimuth and polar angle (from +z) of the direction `a -> b`, in degrees.
/// Azimuth is 0 when the direction is vertical.
pub fn compute_angles(a: Point3, b: Point3) -> Result<(f64, f64)> {
    let d = b - a;
    let r = d.norm();
    if !(r > 0.0) {
        return Err(Error::Geometry(format!(
            "direction undefined between coincident points {a}"
        )));
    }
    let az = if d.x == 0.0 && d.y == 0.0 {
        0.0
    } else {
        wrap_azimuth(d.y.atan2(d.x).to_degrees())
    };
    let el = (d.z / r).clamp(-1.0, 1.0).acos() * 180.0 / PI;
    Ok((az, el))
}

/// Friis free-space gain `20 log10(lambda / (4 pi d))` in dB.
pub fn free_space_gain_db(path_length_m: f64, wavelength_m: f64) -> Result<f64> {
    if !(path_length_m > 0.0 && wavelength_m > 0.0) {
        return Err(Error::Parameter(format!(
            "free-space gain needs positive length and wavelength (d={path_length_m}, lambda={wavelength_m})"
        )));
    }
    Ok(20.0 * (wavelength_m / (4.0 * PI * path_length_m)).log10())
}

/// Free-space gain minus the mean reflection loss of every bounce.
pub fn deterministic_gain_db(
    ray: &DRay,
    library: &MaterialLibrary,
    wavelength_m: f64,
) -> Result<f64> {
    let mut loss = 0.0;
    for name in &ray.materials {
        loss += library.resolve(name)?.mu_rl_db;
    }
    Ok(free_space_gain_db(ray.path_length_m, wavelength_m)? - loss)
}

fn check_endpoints(room: &Room, tx: Point3, rx: Point3) -> Result<()> {
    room.validate()?;
    if !room.strictly_contains(tx) {
        return Err(Error::Geometry(format!(
            "tx {tx} is not strictly inside the room"
        )));
    }
    if !room.strictly_contains(rx) {
        return Err(Error::Geometry(format!(
            "rx {rx} is not strictly inside the room"
        )));
    }
    if tx == rx {
        return Err(Error::Geometry("tx and rx coincide".into()));
    }
    Ok(())
}

/// Unfolds one face sequence into a specular path, if it is realizable.
fn unfold(room: &Room, tx: Point3, rx: Point3, faces: &[Face]) -> Option<SpecularPath> {
    let mut images = Vec::with_capacity(faces.len());
    let mut img = tx;
    for &f in faces {
        img = room.mirror(img, f);
        images.push(img);
    }
    let mut points = vec![Point3::default(); faces.len()];
    let mut from = rx;
    for k in (0..faces.len()).rev() {
        let face = faces[k];
        let axis = face.axis();
        let target = images[k];
        let denom = target.coord(axis) - from.coord(axis);
        if denom == 0.0 {
            return None;
        }
        let t = (room.face_coord(face) - from.coord(axis)) / denom;
        if !(t > FACE_TOL && t < 1.0 - FACE_TOL) {
            return None;
        }
        let mut p = from + (target - from) * t;
        *p.coord_mut(axis) = room.face_coord(face);
        if !room.on_face(p, face) {
            return None;
        }
        points[k] = p;
        from = p;
    }
    Some(SpecularPath {
        faces: faces.to_vec(),
        bounce_points: points,
        path_length: images.last().map_or(tx, |&i| i).distance(rx),
    })
}

/// Every specular path of order `1..=max_order`, ordered by reflection order
/// and then by face sequence. Consecutive bounces on the same face are skipped.
pub fn image_paths(
    room: &Room,
    tx: Point3,
    rx: Point3,
    max_order: usize,
) -> Result<Vec<SpecularPath>> {
    check_endpoints(room, tx, rx)?;
    if max_order > MAX_TRACE_ORDER {
        return Err(Error::Geometry(format!(
            "max_order {max_order} exceeds the supported ceiling {MAX_TRACE_ORDER}"
        )));
    }
    let mut out = Vec::new();
    let mut sequences: Vec<Vec<Face>> = vec![Vec::new()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for seq in &sequences {
            for f in Face::ALL {
                if seq.last() == Some(&f) {
                    continue;
                }
                let mut s = seq.clone();
                s.push(f);
                if let Some(path) = unfold(room, tx, rx, &s) {
                    out.push(path);
                }
                next.push(s);
            }
        }
        sequences = next;
    }
    Ok(out)
}

/// Direct ray plus all specular reflections up to `max_order`.
pub fn trace(
    room: &Room,
    tx: Point3,
    rx: Point3,
    max_order: usize,
    prop: &Propagation<'_>,
) -> Result<Vec<DRay>> {
    let paths = image_paths(room, tx, rx, max_order)?;
    let d_direct = tx.distance(rx);
    let t_dir_ns = d_direct / SPEED_OF_LIGHT * 1e9;

    let (aod_az, aod_el) = compute_angles(tx, rx)?;
    let (aoa_az, aoa_el) = compute_angles(rx, tx)?;
    let mut rays = Vec::with_capacity(paths.len() + 1);
    rays.push(DRay {
        order: 0,
        delay_abs_ns: t_dir_ns,
        tau_ns: 0.0,
        path_length_m: d_direct,
        pg_det_db: free_space_gain_db(d_direct, prop.wavelength_m)?,
        aod_az,
        aod_el,
        aoa_az,
        aoa_el,
        materials: Vec::new(),
        bounce_points: Vec::new(),
    });

    for path in paths {
        let first = path.bounce_points[0];
        let last = *path.bounce_points.last().unwrap();
        let (aod_az, aod_el) = compute_angles(tx, first)?;
        let (aoa_az, aoa_el) = compute_angles(rx, last)?;
        let delay_abs_ns = path.path_length / SPEED_OF_LIGHT * 1e9;
        let mut ray = DRay {
            order: path.order(),
            delay_abs_ns,
            tau_ns: delay_abs_ns - t_dir_ns,
            path_length_m: path.path_length,
            pg_det_db: 0.0,
            aod_az,
            aod_el,
            aoa_az,
            aoa_el,
            materials: path
                .faces
                .iter()
                .map(|&f| room.faces.get(f).to_string())
                .collect(),
            bounce_points: path.bounce_points,
        };
        ray.pg_det_db = deterministic_gain_db(&ray, prop.library, prop.wavelength_m)?;
        rays.push(ray);
    }
    Ok(rays)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plain_library() -> MaterialLibrary {
        MaterialLibrary::new(vec![crate::materials::MaterialParams::specular(
            "concrete", 5.0,
        )])
        .unwrap()
    }

    fn plain_room(dims: [f64; 3]) -> Room {
        Room::new(dims, FaceMaterials::uniform("concrete")).unwrap()
    }

    #[test]
    fn direct_ray_hand_geometry() {
        let lib = plain_library();
        let prop = Propagation::at_frequency(60e9, &lib);
        let rays = trace(
            &plain_room([19.0, 10.0, 3.0]),
            Point3::new(2.0, 3.0, 2.5),
            Point3::new(5.0, 5.0, 1.5),
            0,
            &prop,
        )
        .unwrap();
        assert_eq!(rays.len(), 1);
        assert_abs_diff_eq!(rays[0].path_length_m, 14f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(rays[0].delay_abs_ns, 12.481, epsilon = 1e-3);
        assert_eq!(rays[0].tau_ns, 0.0);
        assert!(rays[0].materials.is_empty());
    }

    #[test]
    fn floor_bounce_hand_geometry() {
        let room = plain_room([4.0, 4.0, 4.0]);
        let paths = image_paths(
            &room,
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(3.0, 1.0, 1.0),
            1,
        )
        .unwrap();
        let floor = paths.iter().find(|p| p.faces == [Face::ZMin]).unwrap();
        assert_abs_diff_eq!(floor.path_length, 8f64.sqrt(), epsilon = 1e-12);
        let b = floor.bounce_points[0];
        assert_abs_diff_eq!(b.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn box_has_six_first_order_paths() {
        let room = plain_room([5.0, 6.0, 3.0]);
        let paths = image_paths(
            &room,
            Point3::new(1.0, 2.0, 1.0),
            Point3::new(4.0, 4.5, 2.0),
            1,
        )
        .unwrap();
        assert_eq!(paths.len(), 6);
    }

    #[test]
    fn taus_of_reflections_are_positive() {
        let lib = plain_library();
        let prop = Propagation::at_frequency(60e9, &lib);
        let rays = trace(
            &plain_room([7.0, 5.0, 3.0]),
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(6.0, 4.0, 2.0),
            3,
            &prop,
        )
        .unwrap();
        assert!(rays.len() > 30);
        for r in &rays[1..] {
            assert!(r.tau_ns > 0.0);
            assert_eq!(r.materials.len(), r.order);
            r.validate().unwrap();
            // delay_abs = length / c
            assert_abs_diff_eq!(
                r.delay_abs_ns,
                r.path_length_m / SPEED_OF_LIGHT * 1e9,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn endpoint_errors() {
        let room = plain_room([4.0, 4.0, 4.0]);
        let inside = Point3::new(1.0, 1.0, 1.0);
        assert!(matches!(
            image_paths(&room, Point3::new(5.0, 1.0, 1.0), inside, 1),
            Err(Error::Geometry(_))
        ));
        assert!(matches!(
            image_paths(&room, inside, Point3::new(1.0, 0.0, 1.0), 1),
            Err(Error::Geometry(_))
        ));
        assert!(matches!(
            image_paths(&room, inside, inside, 1),
            Err(Error::Geometry(_))
        ));
        assert!(image_paths(&room, inside, Point3::new(2.0, 2.0, 2.0), 4).is_err());
    }

    #[test]
    fn angle_conventions() {
        let o = Point3::default();
        assert_eq!(
            compute_angles(o, Point3::new(1.0, 0.0, 0.0)).unwrap(),
            (0.0, 90.0)
        );
        assert_eq!(
            compute_angles(o, Point3::new(0.0, 0.0, 1.0)).unwrap(),
            (0.0, 0.0)
        );
        let (az, el) = compute_angles(o, Point3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(az, 180.0, epsilon = 1e-12);
        assert_abs_diff_eq!(el, 90.0, epsilon = 1e-12);
        let (az, _) = compute_angles(o, Point3::new(0.0, -1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(az, 270.0, epsilon = 1e-12);
        assert!(compute_angles(o, o).is_err());
    }

    #[test]
    fn wrap_and_fold() {
        assert_abs_diff_eq!(wrap_azimuth(359.0 + 2.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_azimuth(-1.0), 359.0, epsilon = 1e-12);
        assert!(wrap_azimuth(-1e-18) < 360.0);
        assert_abs_diff_eq!(fold_elevation(179.0 + 3.0), 178.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fold_elevation(-5.0), 5.0, epsilon = 1e-12);
        assert_eq!(fold_elevation(180.0), 180.0);
    }

    #[test]
    fn friis_values() {
        let lambda = SPEED_OF_LIGHT / 60e9;
        let g = free_space_gain_db(1.0, lambda).unwrap();
        assert_abs_diff_eq!(g, -68.0, epsilon = 0.1);
        assert_abs_diff_eq!(
            free_space_gain_db(lambda / (4.0 * PI), lambda).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let halved = free_space_gain_db(2.0, lambda).unwrap();
        assert_abs_diff_eq!(g - halved, 20.0 * 2f64.log10(), epsilon = 1e-12);
        assert!(free_space_gain_db(0.0, lambda).is_err());
        assert!(free_space_gain_db(1.0, -1.0).is_err());
    }

    #[test]
    fn deterministic_gain_subtracts_mean_losses() {
        let lib = MaterialLibrary::lecture_room();
        let lambda = SPEED_OF_LIGHT / 60e9;
        let mut ray = DRay {
            order: 0,
            delay_abs_ns: 10.0,
            tau_ns: 0.0,
            path_length_m: 3.0,
            pg_det_db: 0.0,
            aod_az: 0.0,
            aod_el: 90.0,
            aoa_az: 180.0,
            aoa_el: 90.0,
            materials: vec![],
            bounce_points: vec![],
        };
        let fs = free_space_gain_db(3.0, lambda).unwrap();
        assert_eq!(deterministic_gain_db(&ray, &lib, lambda).unwrap(), fs);
        ray.order = 1;
        ray.materials = vec!["Left Wall (TX2)".into()];
        assert_abs_diff_eq!(
            deterministic_gain_db(&ray, &lib, lambda).unwrap(),
            fs - 10.7,
            epsilon = 1e-12
        );
        ray.order = 2;
        ray.materials = vec!["Tables (TX1)".into(), "Ceiling (TX1)".into()];
        assert_abs_diff_eq!(
            deterministic_gain_db(&ray, &lib, lambda).unwrap(),
            fs - 13.48,
            epsilon = 1e-12
        );
        ray.materials = vec!["Tables (TX1)".into(), "Nope".into()];
        assert!(matches!(
            deterministic_gain_db(&ray, &lib, lambda),
            Err(Error::UnknownMaterial(_))
        ));
    }

    #[test]
    fn reciprocity_swaps_angles() {
        let lib = plain_library();
        let prop = Propagation::at_frequency(60e9, &lib);
        let room = plain_room([6.0, 8.0, 3.0]);
        let (a, b) = (Point3::new(1.0, 2.0, 2.5), Point3::new(4.5, 6.0, 1.2));
        let fwd = trace(&room, a, b, 2, &prop).unwrap();
        let rev = trace(&room, b, a, 2, &prop).unwrap();
        assert_eq!(fwd.len(), rev.len());
        for r in &fwd {
            let mirror = rev
                .iter()
                .find(|q| {
                    (q.path_length_m - r.path_length_m).abs() < 1e-9
                        && (q.aoa_az - r.aod_az).abs() < 1e-6
                        && (q.aoa_el - r.aod_el).abs() < 1e-6
                })
                .expect("reciprocal path");
            assert!((mirror.aod_az - r.aoa_az).abs() < 1e-6);
            assert!((mirror.aod_el - r.aoa_el).abs() < 1e-6);
        }
    }
}
