//! Beam geometry, user drops and channel synthesis.
//!
//! All angles handed to the radiation pattern are off-boresight angles seen
//! from the geostationary satellite. Earth is a sphere of radius
//! [`EARTH_RADIUS_KM`]; the satellite sits on the equator at
//! [`GEO_RADIUS_KM`] from the Earth centre.
//!
//! Beam indices are zero-based: beam 0 is the central beam and beams 1..=6
//! form its hexagonal ring, numbered counter-clockwise starting east.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const GEO_RADIUS_KM: f64 = 42164.0;

/// Satellite orbital slot, degrees East.
pub const DEFAULT_SATELLITE_LONGITUDE: f64 = 19.2;
/// Centre of the central beam (Munich).
pub const DEFAULT_CENTER: GeoPoint = GeoPoint {
    lat_deg: 48.75,
    lon_deg: 11.9,
};

const MAX_BEAMS: usize = 7;
const MAX_DROP_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Self {
        Self { lat_deg, lon_deg }
    }

    fn to_ecef(self, radius_km: f64) -> Vector3<f64> {
        let lat = self.lat_deg.to_radians();
        let lon = self.lon_deg.to_radians();
        Vector3::new(
            radius_km * lat.cos() * lon.cos(),
            radius_km * lat.cos() * lon.sin(),
            radius_km * lat.sin(),
        )
    }

    fn from_ecef(p: &Vector3<f64>) -> Self {
        let r = p.norm();
        Self {
            lat_deg: (p.z / r).asin().to_degrees(),
            lon_deg: p.y.atan2(p.x).to_degrees(),
        }
    }
}

/// Gaussian main lobe clamped at a sidelobe floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadiationPattern {
    /// Full -3 dB beamwidth in degrees.
    pub beamwidth_deg: f64,
    /// Peak gain in dBi.
    pub max_gain_dbi: f64,
    /// Floor relative to peak, dB (negative).
    pub sidelobe_floor_db: f64,
}

impl Default for RadiationPattern {
    fn default() -> Self {
        Self {
            beamwidth_deg: 0.5,
            max_gain_dbi: 50.0,
            sidelobe_floor_db: -30.0,
        }
    }
}

impl RadiationPattern {
    pub fn validate(&self) -> Result<()> {
        if !(self.beamwidth_deg.is_finite() && self.beamwidth_deg > 0.0) {
            return Err(Error::Config(format!(
                "beamwidth must be positive, got {}",
                self.beamwidth_deg
            )));
        }
        if !(self.sidelobe_floor_db.is_finite() && self.sidelobe_floor_db < 0.0) {
            return Err(Error::Config(format!(
                "sidelobe floor must be below 0 dB, got {}",
                self.sidelobe_floor_db
            )));
        }
        Ok(())
    }

    /// Linear power gain relative to the peak, in (0, 1].
    pub fn relative_gain(&self, off_axis_deg: f64) -> f64 {
        let x = 2.0 * off_axis_deg / self.beamwidth_deg;
        let floor = 10f64.powf(self.sidelobe_floor_db / 10.0);
        (-LN_2 * x * x).exp().max(floor)
    }

    pub fn gain_dbi(&self, off_axis_deg: f64) -> f64 {
        self.max_gain_dbi + 10.0 * self.relative_gain(off_axis_deg).log10()
    }

    pub fn half_beamwidth_deg(&self) -> f64 {
        0.5 * self.beamwidth_deg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamLayout {
    pub beam_centers: Vec<GeoPoint>,
    pub pattern: RadiationPattern,
    pub satellite_longitude_deg: f64,
    /// Angular separation between adjacent beam centres, degrees.
    pub spacing_deg: f64,
}

impl BeamLayout {
    pub fn beam_count(&self) -> usize {
        self.beam_centers.len()
    }

    pub fn satellite_position(&self) -> Vector3<f64> {
        GeoPoint::new(0.0, self.satellite_longitude_deg).to_ecef(GEO_RADIUS_KM)
    }

    /// Unit vector from the satellite towards a point on the ground.
    pub fn look_direction(&self, point: GeoPoint) -> Vector3<f64> {
        (point.to_ecef(EARTH_RADIUS_KM) - self.satellite_position()).normalize()
    }

    /// Angle, seen from the satellite, between two ground points.
    pub fn separation_deg(&self, a: GeoPoint, b: GeoPoint) -> f64 {
        angle_between(&self.look_direction(a), &self.look_direction(b)).to_degrees()
    }

    pub fn off_axis_deg(&self, beam: usize, point: GeoPoint) -> f64 {
        self.separation_deg(self.beam_centers[beam], point)
    }

    /// Hex neighbours: centre separation within one spacing.
    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        a != b && self.separation_deg(self.beam_centers[a], self.beam_centers[b]) <= self.spacing_deg * (1.0 + 1e-6)
    }

    /// Whether `point` lies inside the -3 dB contour of `beam`.
    pub fn covers(&self, beam: usize, point: GeoPoint) -> bool {
        self.off_axis_deg(beam, point) <= self.pattern.half_beamwidth_deg()
    }
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Orthonormal pair spanning the plane normal to `d` (east-ish, north-ish).
fn transverse_frame(d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let z = Vector3::z();
    let north = (z - d * z.dot(d)).normalize();
    let east = north.cross(d).normalize();
    (east, north)
}

/// Direction tilted from `d` by `tilt` radians towards azimuth `azimuth`
/// (measured from east towards north in the transverse plane).
fn tilt(d: &Vector3<f64>, tilt: f64, azimuth: f64) -> Vector3<f64> {
    let (east, north) = transverse_frame(d);
    let lateral = east * azimuth.cos() + north * azimuth.sin();
    (d * tilt.cos() + lateral * tilt.sin()).normalize()
}

/// First intersection of the ray `origin + t * dir` with the Earth sphere.
fn earth_intersection(origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<GeoPoint> {
    let b = origin.dot(dir);
    let c = origin.norm_squared() - EARTH_RADIUS_KM * EARTH_RADIUS_KM;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    if t <= 0.0 {
        return None;
    }
    Some(GeoPoint::from_ecef(&(origin + dir * t)))
}

/// Central beam plus up to six ring beams on hexagon vertices.
///
/// `spacing_deg` is the angular separation seen from the satellite between
/// the centre and each ring beam. Passing the pattern beamwidth makes
/// adjacent -3 dB contours touch.
pub fn build_hex_layout(
    b: usize,
    center: GeoPoint,
    spacing_deg: f64,
    pattern: RadiationPattern,
    satellite_longitude_deg: f64,
) -> Result<BeamLayout> {
    if b == 0 || b > MAX_BEAMS {
        return Err(Error::Config(format!("beam count must be in 1..={MAX_BEAMS}, got {b}")));
    }
    if !(spacing_deg.is_finite() && spacing_deg > 0.0) {
        return Err(Error::Config(format!(
            "beam spacing must be positive, got {spacing_deg}"
        )));
    }
    pattern.validate()?;

    let mut layout = BeamLayout {
        beam_centers: vec![center],
        pattern,
        satellite_longitude_deg,
        spacing_deg,
    };
    let sat = layout.satellite_position();
    let boresight = layout.look_direction(center);
    for k in 0..b - 1 {
        let azimuth = (k as f64) * PI / 3.0;
        let dir = tilt(&boresight, spacing_deg.to_radians(), azimuth);
        let point = earth_intersection(&sat, &dir)
            .ok_or_else(|| Error::Config(format!("ring beam {} misses the Earth", k + 1)))?;
        layout.beam_centers.push(point);
    }
    Ok(layout)
}

/// Default 7-beam (or smaller) cluster around Munich with touching contours.
pub fn default_layout(b: usize) -> Result<BeamLayout> {
    let pattern = RadiationPattern::default();
    build_hex_layout(
        b,
        DEFAULT_CENTER,
        pattern.beamwidth_deg,
        pattern,
        DEFAULT_SATELLITE_LONGITUDE,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTerminal {
    pub position: GeoPoint,
    pub home_beam: usize,
    pub generation: usize,
    /// Carrier phase shared by every feed this user couples into.
    pub phase_rad: f64,
}

/// Independent RNG stream for one generation of a seeded campaign.
pub fn generation_rng(seed: u64, generation: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation as u64);
    rng
}

/// One user per beam for a single generation, uniform inside each -3 dB
/// contour.
pub fn drop_generation(layout: &BeamLayout, generation: usize, seed: u64) -> Result<Vec<UserTerminal>> {
    let mut rng = generation_rng(seed, generation);
    let sat = layout.satellite_position();
    let radius = layout.pattern.half_beamwidth_deg().to_radians();

    (0..layout.beam_count())
        .map(|beam| {
            let boresight = layout.look_direction(layout.beam_centers[beam]);
            for _ in 0..MAX_DROP_ATTEMPTS {
                let u = rng.gen_range(-radius..=radius);
                let v = rng.gen_range(-radius..=radius);
                let rho = u.hypot(v);
                if rho > radius {
                    continue;
                }
                let dir = tilt(&boresight, rho, v.atan2(u));
                let Some(position) = earth_intersection(&sat, &dir) else {
                    continue;
                };
                if !layout.covers(beam, position) {
                    continue;
                }
                let phase_rad = rng.gen_range(0.0..2.0 * PI);
                return Ok(UserTerminal {
                    position,
                    home_beam: beam,
                    generation,
                    phase_rad,
                });
            }
            Err(Error::Synthesis(format!(
                "could not place a user in beam {beam} after {MAX_DROP_ATTEMPTS} attempts"
            )))
        })
        .collect()
}

/// `n_ch` generations, each with exactly one user per beam.
pub fn drop_users(layout: &BeamLayout, n_ch: usize, seed: u64) -> Result<Vec<Vec<UserTerminal>>> {
    if n_ch == 0 {
        return Err(Error::Config("n_ch must be at least 1".into()));
    }
    (0..n_ch)
        .into_par_iter()
        .map(|c| drop_generation(layout, c, seed))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Noise spectral density (linear). Covariance is `n0 * I`.
    pub n0: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { n0: 1.0 }
    }
}

impl NoiseModel {
    pub fn new(n0: f64) -> Result<Self> {
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(Error::Config(format!("n0 must be positive, got {n0}")));
        }
        Ok(Self { n0 })
    }
}

/// Square complex gain matrix: row = receiving beam feed, column = user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: DMatrix<C64>,
    pub generation: usize,
    pub snr_db: f64,
}

impl ChannelMatrix {
    pub fn from_entries(entries: DMatrix<C64>, generation: usize) -> Self {
        Self {
            entries,
            generation,
            snr_db: f64::NAN,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.ncols()
    }

    /// Row index of the largest-magnitude entry in `col`.
    pub fn dominant_row(&self, col: usize) -> usize {
        let column = self.entries.column(col);
        (0..column.len())
            .max_by(|&a, &b| column[a].norm_sqr().total_cmp(&column[b].norm_sqr()))
            .unwrap_or(0)
    }

    /// B rows, B columns, cells formatted as `re+imj`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.entries.nrows() {
            let row: Vec<String> = (0..self.entries.ncols())
                .map(|j| format_complex(self.entries[(i, j)]))
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn format_complex(z: C64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Channel matrix for one generation. A user at the boresight of its own
/// beam receives `snr_db` there.
pub fn synthesize_channel(
    layout: &BeamLayout,
    users: &[UserTerminal],
    noise: NoiseModel,
    snr_db: f64,
) -> Result<ChannelMatrix> {
    let b = layout.beam_count();
    if users.len() != b {
        return Err(Error::Synthesis(format!(
            "expected {b} users (one per beam), got {}",
            users.len()
        )));
    }
    let mut seen = vec![false; b];
    for u in users {
        if u.home_beam >= b || std::mem::replace(&mut seen[u.home_beam], true) {
            return Err(Error::Synthesis(format!("home beams must cover 0..{b} exactly once")));
        }
    }
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("snr_db must be finite, got {snr_db}")));
    }

    let scale = db_to_linear(snr_db) * noise.n0;
    let generation = users[0].generation;
    let mut entries = DMatrix::<C64>::zeros(b, b);
    for user in users {
        let half = layout.pattern.half_beamwidth_deg();
        if !(0..b).any(|beam| layout.off_axis_deg(beam, user.position) <= half * (1.0 + 1e-9)) {
            return Err(Error::Synthesis(format!(
                "user of beam {} at ({}, {}) lies outside every beam",
                user.home_beam, user.position.lat_deg, user.position.lon_deg
            )));
        }
        let col = user.home_beam;
        let phase = C64::from_polar(1.0, user.phase_rad);
        for beam in 0..b {
            let gain = layout.pattern.relative_gain(layout.off_axis_deg(beam, user.position));
            entries[(beam, col)] = phase * (scale * gain).sqrt();
        }
    }
    Ok(ChannelMatrix {
        entries,
        generation,
        snr_db,
    })
}

/// Drops users and synthesizes channel matrices for generations
/// `0..n_ch`. Each generation draws from its own RNG stream, so the result
/// does not depend on the thread count.
pub fn generate_channels(
    layout: &BeamLayout,
    n_ch: usize,
    seed: u64,
    noise: NoiseModel,
    snr_db: f64,
) -> Result<Vec<ChannelMatrix>> {
    if n_ch == 0 {
        return Err(Error::Config("n_ch must be at least 1".into()));
    }
    (0..n_ch)
        .into_par_iter()
        .map(|c| {
            let users = drop_generation(layout, c, seed)?;
            synthesize_channel(layout, &users, noise, snr_db)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_beam_layout_starts_at_munich() {
        let layout = default_layout(7).unwrap();
        assert_eq!(layout.beam_count(), 7);
        assert_eq!(layout.beam_centers[0], GeoPoint::new(48.75, 11.9));
    }

    #[test]
    fn single_beam_layout_has_no_ring() {
        let layout = default_layout(1).unwrap();
        assert_eq!(layout.beam_count(), 1);
    }

    #[test]
    fn rejects_unsupported_beam_counts() {
        assert!(matches!(default_layout(0), Err(Error::Config(_))));
        assert!(matches!(default_layout(8), Err(Error::Config(_))));
        let p = RadiationPattern::default();
        assert!(build_hex_layout(3, DEFAULT_CENTER, 0.0, p, 19.2).is_err());
    }

    #[test]
    fn ring_is_equidistant_from_center() {
        let layout = default_layout(7).unwrap();
        let sat = layout.satellite_position();
        let center = (layout.beam_centers[0].to_ecef(EARTH_RADIUS_KM) - sat).normalize();
        for k in 1..7 {
            let ring = (layout.beam_centers[k].to_ecef(EARTH_RADIUS_KM) - sat).normalize();
            let sep = center.dot(&ring).clamp(-1.0, 1.0).acos().to_degrees();
            assert!(
                (sep - layout.spacing_deg).abs() <= 1e-9 * layout.spacing_deg.max(1.0) * 10.0,
                "beam {k}: {sep}"
            );
        }
    }

    #[test]
    fn hex_adjacency() {
        let layout = default_layout(7).unwrap();
        for k in 1..7 {
            assert!(layout.are_adjacent(0, k));
        }
        assert!(layout.are_adjacent(1, 2));
        assert!(layout.are_adjacent(6, 1));
        assert!(!layout.are_adjacent(1, 3));
        assert!(!layout.are_adjacent(2, 5));
    }

    #[test]
    fn pattern_is_three_db_down_at_half_beamwidth() {
        let p = RadiationPattern::default();
        let g = p.relative_gain(p.half_beamwidth_deg());
        assert!((10.0 * g.log10() + 3.0103).abs() < 1e-3);
        assert_eq!(p.relative_gain(0.0), 1.0);
        assert!((10.0 * p.relative_gain(10.0).log10() - p.sidelobe_floor_db).abs() < 1e-9);
    }

    #[test]
    fn pattern_is_monotone_to_the_floor() {
        let p = RadiationPattern::default();
        let mut last = f64::INFINITY;
        for k in 0..2000 {
            let g = p.relative_gain(k as f64 * 0.001);
            assert!(g <= last);
            last = g;
        }
    }

    #[test]
    fn drop_is_reproducible_and_in_beam() {
        let layout = default_layout(7).unwrap();
        let a = drop_users(&layout, 500, 11).unwrap();
        let b = drop_users(&layout, 500, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        for (c, generation) in a.iter().enumerate() {
            assert_eq!(generation.len(), 7);
            for (beam, u) in generation.iter().enumerate() {
                assert_eq!(u.home_beam, beam);
                assert_eq!(u.generation, c);
                assert!(layout.covers(beam, u.position));
            }
        }
    }

    #[test]
    fn single_user_drop() {
        let layout = default_layout(1).unwrap();
        let users = drop_users(&layout, 1, 0).unwrap();
        assert_eq!(users.len(), 1);
        assert_eq!(users[0].len(), 1);
    }

    #[test]
    fn boresight_user_gets_reference_snr() {
        let layout = default_layout(7).unwrap();
        let mut users = drop_generation(&layout, 0, 3).unwrap();
        users[0].position = layout.beam_centers[0];
        let h = synthesize_channel(&layout, &users, NoiseModel::default(), 15.0).unwrap();
        let p = h.entries[(0, 0)].norm_sqr();
        assert!((p - 10f64.powf(1.5)).abs() < 1e-9, "{p}");
    }

    #[test]
    fn columns_dominated_by_home_beam() {
        let layout = default_layout(7).unwrap();
        let channels = generate_channels(&layout, 200, 5, NoiseModel::default(), 15.0).unwrap();
        for h in &channels {
            for j in 0..7 {
                assert_eq!(h.dominant_row(j), j);
                for i in 0..7 {
                    assert!(h.entries[(i, j)].re.is_finite());
                    if layout.are_adjacent(i, j) {
                        assert!(h.entries[(i, j)].norm_sqr() < h.entries[(j, j)].norm_sqr());
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_wrong_user_count() {
        let layout = default_layout(3).unwrap();
        let users = drop_generation(&layout, 0, 0).unwrap();
        let r = synthesize_channel(&layout, &users[..2], NoiseModel::default(), 15.0);
        assert!(matches!(r, Err(Error::Synthesis(_))));
    }

    #[test]
    fn rejects_user_outside_coverage() {
        let layout = default_layout(1).unwrap();
        let mut users = drop_generation(&layout, 0, 0).unwrap();
        users[0].position = GeoPoint::new(0.0, 0.0);
        let r = synthesize_channel(&layout, &users, NoiseModel::default(), 15.0);
        assert!(matches!(r, Err(Error::Synthesis(_))));
    }

    #[test]
    fn csv_cells_use_re_im_j() {
        let m = DMatrix::from_row_slice(1, 2, &[C64::new(1.5, -2.0), C64::new(0.0, 0.25)]);
        let h = ChannelMatrix::from_entries(m, 0);
        assert_eq!(h.to_csv(), "1.5-2j,0+0.25j\n");
    }
}
