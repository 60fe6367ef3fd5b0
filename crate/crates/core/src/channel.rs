//! Cell geometry, Rician link sampling and composite channel assembly.
//!
//! The BS sits at the origin of a 2-D cell. RISs are placed on the cell edge,
//! circular obstacles decide whether a UE sees the BS directly, and each UE is
//! served by the RIS with the largest average channel power gain (the nearest
//! one, since all RIS-UE links share a pathloss exponent).

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{complex_normal, CMat, CVec};
use crate::units::dbm_to_mw;
use crate::{Error, Result};

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteeringConfig {
    /// BS antenna count `M`.
    pub num_bs_antennas: usize,
    /// RIS grid size along x.
    pub ris_nx: usize,
    /// RIS grid size along y.
    pub ris_ny: usize,
    /// Element spacing over wavelength.
    pub spacing: f64,
}

impl SteeringConfig {
    pub fn ris_elements(&self) -> usize {
        self.ris_nx * self.ris_ny
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_bs_antennas == 0 || self.ris_nx == 0 || self.ris_ny == 0 {
            return Err(Error::InvalidConfig(
                "antenna and RIS grid counts must be at least 1".into(),
            ));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::InvalidConfig("antenna spacing must be positive".into()));
        }
        Ok(())
    }
}

/// Number of scattered paths, either absolute or as a multiple of the number
/// of array elements the link touches (`M`, `N` or `N·M`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathCount {
    Fixed(usize),
    Scaled { per_element: usize },
}

impl PathCount {
    pub fn resolve(self, elements: usize) -> usize {
        match self {
            PathCount::Fixed(n) => n,
            PathCount::Scaled { per_element } => per_element * elements,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    /// Linear Rician factor; `inf` gives a pure LoS link.
    pub rician_k: f64,
    pub pathloss_exponent: f64,
    pub n_paths: PathCount,
}

impl LinkParams {
    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.rician_k >= 0.0) {
            return Err(Error::InvalidConfig(format!("{name}: Rician factor must be >= 0")));
        }
        if !(self.pathloss_exponent > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{name}: pathloss exponent must be > 0"
            )));
        }
        Ok(())
    }

    /// Amplitude weights of the LoS and scattered components.
    fn weights(&self) -> (f64, f64) {
        if self.rician_k.is_infinite() {
            (1.0, 0.0)
        } else {
            let k = self.rician_k;
            ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
        }
    }
}

/// Parameter set applied to a UE once it has been classified LoS or NLoS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkClass {
    pub direct: LinkParams,
    pub ris_ue: LinkParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Cell radius `R_N` in meters.
    pub cell_radius: f64,
    pub num_ues: usize,
    pub num_ris: usize,
    pub num_obstacles: usize,
    /// Obstacle radius in meters.
    pub obstacle_radius: f64,
    /// BS to obstacle-center distance in meters.
    pub obstacle_center_distance: f64,
    /// Angle of the first obstacle center; the rest are evenly spaced.
    pub obstacle_angle_offset: f64,
    /// UEs closer than this to the BS or to any RIS are resampled.
    pub min_distance: f64,
    pub los: LinkClass,
    pub nlos: LinkClass,
    pub bs_ris: LinkParams,
    pub steering: SteeringConfig,
    pub noise_power_dbm: f64,
    pub tx_power_dbm: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Default multi-UE parameter table: 12 UEs, 8 BS antennas, four 10×10
    /// RISs on the cell edge and four obstacles.
    pub fn table1(cell_radius: f64) -> Self {
        let los = LinkClass {
            direct: LinkParams {
                rician_k: 2.0,
                pathloss_exponent: 2.0,
                n_paths: PathCount::Scaled { per_element: 2 },
            },
            ris_ue: LinkParams {
                rician_k: 2.5,
                pathloss_exponent: 2.0,
                n_paths: PathCount::Scaled { per_element: 2 },
            },
        };
        let nlos = LinkClass {
            direct: LinkParams {
                rician_k: 0.0,
                pathloss_exponent: 4.0,
                n_paths: PathCount::Scaled { per_element: 2 },
            },
            ris_ue: LinkParams {
                rician_k: 0.0,
                pathloss_exponent: 4.0,
                n_paths: PathCount::Scaled { per_element: 2 },
            },
        };
        Self {
            cell_radius,
            num_ues: 12,
            num_ris: 4,
            num_obstacles: 4,
            obstacle_radius: cell_radius / 4.0,
            obstacle_center_distance: cell_radius / 4.0 + cell_radius / 5.0,
            obstacle_angle_offset: FRAC_PI_4,
            min_distance: 1.0,
            los,
            nlos,
            bs_ris: LinkParams {
                rician_k: 2.5,
                pathloss_exponent: 2.0,
                n_paths: PathCount::Scaled { per_element: 2 },
            },
            steering: SteeringConfig {
                num_bs_antennas: 8,
                ris_nx: 10,
                ris_ny: 10,
                spacing: 0.5,
            },
            noise_power_dbm: -80.0,
            tx_power_dbm: 24.0,
            seed: 0,
        }
    }

    /// Changes `R_N`, scaling obstacle geometry by the same factor.
    pub fn with_cell_radius(mut self, cell_radius: f64) -> Self {
        let scale = cell_radius / self.cell_radius;
        self.obstacle_radius *= scale;
        self.obstacle_center_distance *= scale;
        self.cell_radius = cell_radius;
        self
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_mw(self.noise_power_dbm)
    }

    pub fn tx_power(&self) -> f64 {
        dbm_to_mw(self.tx_power_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.cell_radius > 0.0) {
            return bad("cell_radius must be > 0");
        }
        if self.num_ues == 0 {
            return bad("num_ues must be >= 1");
        }
        if self.num_ris == 0 {
            return bad("num_ris must be >= 1");
        }
        if !(self.obstacle_radius >= 0.0) || !(self.obstacle_center_distance >= 0.0) {
            return bad("obstacle geometry must be non-negative");
        }
        if self.num_obstacles > 0 && self.obstacle_center_distance <= self.obstacle_radius {
            return bad("obstacles may not cover the BS");
        }
        if !(self.min_distance > 0.0) {
            return bad("min_distance must be > 0");
        }
        if !self.noise_power_dbm.is_finite() || !self.tx_power_dbm.is_finite() {
            return bad("powers must be finite");
        }
        self.steering.validate()?;
        self.los.direct.validate("los.direct")?;
        self.los.ris_ue.validate("los.ris_ue")?;
        self.nlos.direct.validate("nlos.direct")?;
        self.nlos.ris_ue.validate("nlos.ris_ue")?;
        self.bs_ris.validate("bs_ris")?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn polar(r: f64, angle: f64) -> Self {
        Self {
            x: r * angle.cos(),
            y: r * angle.sin(),
        }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Direction from `self` towards `other`, in `[0, 2π)`.
    pub fn angle_to(self, other: Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).rem_euclid(TAU)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Point,
    pub radius: f64,
}

impl Obstacle {
    pub fn contains(&self, p: Point) -> bool {
        self.center.dist(p) < self.radius
    }

    /// Whether the segment `a → b` passes through the disk.
    pub fn blocks(&self, a: Point, b: Point) -> bool {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((self.center.x - a.x) * dx + (self.center.y - a.y) * dy) / len2).clamp(0.0, 1.0)
        };
        let closest = Point {
            x: a.x + t * dx,
            y: a.y + t * dy,
        };
        closest.dist(self.center) < self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisSite {
    pub position: Point,
    /// BS-RIS distance `d_1`.
    pub distance: f64,
    /// Arrival azimuth `ψ_{A,x}` (elevation is zero in the 2-D model).
    pub aoa: f64,
    /// Departure angle at the BS `ψ_D`.
    pub aod: f64,
}

impl RisSite {
    /// RIS on a circle around the BS, facing it.
    pub fn facing_bs(distance: f64, angle: f64) -> Self {
        Self {
            position: Point::polar(distance, angle),
            distance,
            aoa: (angle + PI).rem_euclid(TAU),
            aod: angle.rem_euclid(TAU),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub ris: Vec<RisSite>,
    pub obstacles: Vec<Obstacle>,
}

impl CellGeometry {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let ris = (0..cfg.num_ris)
            .map(|r| RisSite::facing_bs(cfg.cell_radius, TAU * r as f64 / cfg.num_ris as f64))
            .collect();
        let obstacles = (0..cfg.num_obstacles)
            .map(|o| Obstacle {
                center: Point::polar(
                    cfg.obstacle_center_distance,
                    cfg.obstacle_angle_offset + TAU * o as f64 / cfg.num_obstacles as f64,
                ),
                radius: cfg.obstacle_radius,
            })
            .collect();
        Self { ris, obstacles }
    }

    pub fn is_los(&self, ue: Point) -> bool {
        let bs = Point { x: 0.0, y: 0.0 };
        !self.obstacles.iter().any(|o| o.blocks(bs, ue))
    }

    /// Index of the serving RIS: largest `d_2^{-β} N`, i.e. the nearest site.
    /// Exact ties are broken uniformly at random.
    pub fn assign_ris<R: Rng + ?Sized>(&self, ue: Point, rng: &mut R) -> usize {
        let dists: Vec<f64> = self.ris.iter().map(|s| s.position.dist(ue)).collect();
        let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let tied: Vec<usize> = (0..dists.len()).filter(|&i| dists[i] == best).collect();
        if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.random_range(0..tied.len())]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UePlacement {
    pub position: Point,
    /// BS-UE distance `d_k`.
    pub d_k: f64,
    /// AoD from the BS `θ_k`.
    pub theta_k: f64,
    pub is_los: bool,
    pub assigned_ris: usize,
    /// RIS-UE distance `d_{2,k}`.
    pub d_2k: f64,
    /// Departure angle from the RIS towards the UE `ψ_k`.
    pub psi_k: f64,
}

impl UePlacement {
    pub fn new(position: Point, is_los: bool, assigned_ris: usize, ris: &RisSite) -> Self {
        let bs = Point { x: 0.0, y: 0.0 };
        Self {
            position,
            d_k: position.norm(),
            theta_k: bs.angle_to(position),
            is_los,
            assigned_ris,
            d_2k: ris.position.dist(position),
            psi_k: ris.position.angle_to(position),
        }
    }
}

/// ULA response `[1, e^{j2πδcosθ}, …, e^{j2πδ(M-1)cosθ}]ᵀ`.
pub fn ula_steering(theta: f64, m: usize, delta: f64) -> CVec {
    let step = TAU * delta * theta.cos();
    CVec::from_fn(m, |i, _| Complex64::from_polar(1.0, step * i as f64))
}

/// Planar-array response `b_z ⊗ b_x` for an `N_x × N_y` RIS.
pub fn pla_steering(psi_z: f64, psi_x: f64, nx: usize, ny: usize, delta: f64) -> CVec {
    let z_step = -TAU * delta * psi_z.sin() * psi_x.cos();
    let x_step = -TAU * delta * psi_x.cos() * psi_z.cos();
    // Kronecker order: the z-factor index is the slow one.
    CVec::from_fn(nx * ny, |idx, _| {
        let (iz, ix) = (idx / nx, idx % nx);
        Complex64::from_polar(1.0, z_step * iz as f64 + x_step * ix as f64)
    })
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.0..TAU)
}

fn check_link(params: &LinkParams, paths: usize, name: &'static str) -> Result<()> {
    if params.rician_k == 0.0 && paths == 0 {
        return Err(Error::DegenerateLink(name));
    }
    Ok(())
}

/// Rician BS-UE channel with a ULA at the BS.
pub fn sample_direct_channel<R: Rng + ?Sized>(
    placement: &UePlacement,
    params: &LinkParams,
    steering: &SteeringConfig,
    rng: &mut R,
) -> Result<CVec> {
    let m = steering.num_bs_antennas;
    let paths = params.n_paths.resolve(m);
    check_link(params, paths, "BS-UE")?;
    let gain = placement.d_k.powf(-params.pathloss_exponent);
    let (w_los, w_nlos) = params.weights();

    let mut h = ula_steering(placement.theta_k, m, steering.spacing) * Complex64::from(w_los * gain.sqrt());
    if paths > 0 && w_nlos > 0.0 {
        let scale = w_nlos * (gain / paths as f64).sqrt();
        for _ in 0..paths {
            let eta = complex_normal(rng);
            let theta = uniform_angle(rng);
            h += ula_steering(theta, m, steering.spacing) * (eta * scale);
        }
    }
    Ok(h)
}

/// Rician BS-RIS channel `G` (N×M). `psi_a` is `(ψ_{A,z}, ψ_{A,x})`.
pub fn sample_bs_ris_channel<R: Rng + ?Sized>(
    d_1: f64,
    psi_a: (f64, f64),
    psi_d: f64,
    params: &LinkParams,
    steering: &SteeringConfig,
    rng: &mut R,
) -> Result<CMat> {
    let (m, nx, ny, delta) = (
        steering.num_bs_antennas,
        steering.ris_nx,
        steering.ris_ny,
        steering.spacing,
    );
    let n = nx * ny;
    let paths = params.n_paths.resolve(n * m);
    check_link(params, paths, "BS-RIS")?;
    let gain = d_1.powf(-params.pathloss_exponent);
    let (w_los, w_nlos) = params.weights();

    let b = pla_steering(psi_a.0, psi_a.1, nx, ny, delta);
    let a = ula_steering(psi_d, m, delta);
    let mut g = (&b * a.adjoint()) * Complex64::from(w_los * gain.sqrt());

    if paths > 0 && w_nlos > 0.0 {
        let scale = w_nlos * (gain / paths as f64).sqrt();
        for _ in 0..paths {
            let bp = pla_steering(0.0, uniform_angle(rng), nx, ny, delta);
            let ap = ula_steering(uniform_angle(rng), m, delta);
            for c in 0..m {
                let ac = ap[c].conj() * scale;
                for r in 0..n {
                    g[(r, c)] += complex_normal(rng) * bp[r] * ac;
                }
            }
        }
    }
    Ok(g)
}

/// Rician RIS-UE channel `h_k` (N-vector) with a planar RIS.
pub fn sample_ris_ue_channel<R: Rng + ?Sized>(
    placement: &UePlacement,
    params: &LinkParams,
    steering: &SteeringConfig,
    rng: &mut R,
) -> Result<CVec> {
    let (nx, ny, delta) = (steering.ris_nx, steering.ris_ny, steering.spacing);
    let n = nx * ny;
    let paths = params.n_paths.resolve(n);
    check_link(params, paths, "RIS-UE")?;
    let gain = placement.d_2k.powf(-params.pathloss_exponent);
    let (w_los, w_nlos) = params.weights();

    let mut h = pla_steering(0.0, placement.psi_k, nx, ny, delta) * Complex64::from(w_los * gain.sqrt());
    if paths > 0 && w_nlos > 0.0 {
        let scale = w_nlos * (gain / paths as f64).sqrt();
        for _ in 0..paths {
            let eta = complex_normal(rng);
            let psi = uniform_angle(rng);
            h += pla_steering(0.0, psi, nx, ny, delta) * (eta * scale);
        }
    }
    Ok(h)
}

/// `H̄_k = [diag(h_kᴴ) G ; h_{d,k}ᴴ]`, so that `vᴴ H̄_k w = (h_kᴴ Φ G + h_{d,k}ᴴ) w`.
pub fn composite_channel(h_ris_k: &CVec, g: &CMat, h_d_k: &CVec) -> Result<CMat> {
    let (n, m) = g.shape();
    if h_ris_k.len() != n || h_d_k.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "G is {n}x{m}, h_k has {} entries, h_d has {}",
            h_ris_k.len(),
            h_d_k.len()
        )));
    }
    let mut h_bar = CMat::zeros(n + 1, m);
    for r in 0..n {
        let hk = h_ris_k[r].conj();
        for c in 0..m {
            h_bar[(r, c)] = hk * g[(r, c)];
        }
    }
    for c in 0..m {
        h_bar[(n, c)] = h_d_k[c].conj();
    }
    Ok(h_bar)
}

/// One draw of every channel in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_d: Vec<CVec>,
    pub g_per_ris: Vec<CMat>,
    pub h_ris: Vec<CVec>,
    pub assigned_ris: Vec<usize>,
    pub h_bar: Vec<CMat>,
}

impl ChannelRealization {
    /// Builds the realization from raw channels, assembling `H̄_k`.
    pub fn assemble(
        h_d: Vec<CVec>,
        g_per_ris: Vec<CMat>,
        h_ris: Vec<CVec>,
        assigned_ris: Vec<usize>,
    ) -> Result<Self> {
        if h_d.len() != h_ris.len() || h_d.len() != assigned_ris.len() || h_d.is_empty() {
            return Err(Error::DimensionMismatch("per-UE channel lists disagree".into()));
        }
        let h_bar = (0..h_d.len())
            .map(|k| {
                let g = g_per_ris.get(assigned_ris[k]).ok_or_else(|| {
                    Error::DimensionMismatch(format!("UE {k} assigned to missing RIS"))
                })?;
                composite_channel(&h_ris[k], g, &h_d[k])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            h_d,
            g_per_ris,
            h_ris,
            assigned_ris,
            h_bar,
        })
    }

    /// Realization given only composite matrices (tests, synthetic instances).
    pub fn from_composite(h_bar: Vec<CMat>) -> Self {
        let n = h_bar[0].nrows() - 1;
        let h_d = h_bar
            .iter()
            .map(|h| h.row(n).adjoint())
            .collect::<Vec<CVec>>();
        let k = h_bar.len();
        Self {
            h_d,
            g_per_ris: Vec::new(),
            h_ris: Vec::new(),
            assigned_ris: vec![0; k],
            h_bar,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.h_bar.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.h_bar[0].ncols()
    }

    pub fn num_ris_elements(&self) -> usize {
        self.h_bar[0].nrows() - 1
    }

    /// `H_d = [h_{d,1}, …, h_{d,K}]` (M×K).
    pub fn direct_matrix(&self) -> CMat {
        CMat::from_columns(&self.h_d)
    }
}

fn sample_placement<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    geometry: &CellGeometry,
    rng: &mut R,
) -> Result<UePlacement> {
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let r = cfg.cell_radius * rng.random::<f64>().sqrt();
        let p = Point::polar(r, uniform_angle(rng));
        if r < cfg.min_distance
            || geometry.obstacles.iter().any(|o| o.contains(p))
            || geometry
                .ris
                .iter()
                .any(|s| s.position.dist(p) < cfg.min_distance)
        {
            continue;
        }
        let is_los = geometry.is_los(p);
        let ris = geometry.assign_ris(p, rng);
        return Ok(UePlacement::new(p, is_los, ris, &geometry.ris[ris]));
    }
    Err(Error::PlacementFailed(MAX_PLACEMENT_ATTEMPTS))
}

/// Drops UEs uniformly in the cell, classifies LoS, assigns RISs and samples
/// every channel. RNG consumption order: placements, then one `G` per RIS,
/// then per UE the direct and RIS-UE links.
pub fn generate_scenario<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<(Vec<UePlacement>, ChannelRealization)> {
    cfg.validate()?;
    let geometry = CellGeometry::from_config(cfg);
    let placements = (0..cfg.num_ues)
        .map(|_| sample_placement(cfg, &geometry, rng))
        .collect::<Result<Vec<_>>>()?;

    let g_per_ris = geometry
        .ris
        .iter()
        .map(|s| sample_bs_ris_channel(s.distance, (0.0, s.aoa), s.aod, &cfg.bs_ris, &cfg.steering, rng))
        .collect::<Result<Vec<_>>>()?;

    let mut h_d = Vec::with_capacity(cfg.num_ues);
    let mut h_ris = Vec::with_capacity(cfg.num_ues);
    for p in &placements {
        let class = if p.is_los { &cfg.los } else { &cfg.nlos };
        h_d.push(sample_direct_channel(p, &class.direct, &cfg.steering, rng)?);
        h_ris.push(sample_ris_ue_channel(p, &class.ris_ue, &cfg.steering, rng)?);
    }
    let assigned = placements.iter().map(|p| p.assigned_ris).collect();
    let realization = ChannelRealization::assemble(h_d, g_per_ris, h_ris, assigned)?;
    Ok((placements, realization))
}

/// Single-UE layout: one RIS at `ris_distance` along `ris_aod`, the UE at
/// `ue_distance` along `ue_aod`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleUeConfig {
    pub ris_distance: f64,
    pub ris_aod: f64,
    pub ris_aoa: f64,
    pub ue_aod: f64,
    pub ue_distance: f64,
    pub direct: LinkParams,
    pub ris_ue: LinkParams,
    pub bs_ris: LinkParams,
    pub steering: SteeringConfig,
}

impl SingleUeConfig {
    /// 5×5 RIS at 25 m, NLoS direct link, LoS RIS-UE link.
    pub fn reference(ue_distance: f64) -> Self {
        Self {
            ris_distance: 25.0,
            ris_aod: FRAC_PI_4,
            ris_aoa: 5.0 * FRAC_PI_4,
            ue_aod: 0.0,
            ue_distance,
            direct: LinkParams {
                rician_k: 0.0,
                pathloss_exponent: 4.0,
                n_paths: PathCount::Scaled { per_element: 2 },
            },
            ris_ue: LinkParams {
                rician_k: 2.5,
                pathloss_exponent: 2.0,
                n_paths: PathCount::Scaled { per_element: 2 },
            },
            bs_ris: LinkParams {
                rician_k: 2.5,
                pathloss_exponent: 2.0,
                n_paths: PathCount::Scaled { per_element: 2 },
            },
            steering: SteeringConfig {
                num_bs_antennas: 8,
                ris_nx: 5,
                ris_ny: 5,
                spacing: 0.5,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ris_distance > 0.0) || !(self.ue_distance > 0.0) {
            return Err(Error::InvalidConfig("single-UE distances must be > 0".into()));
        }
        self.steering.validate()?;
        self.direct.validate("single_ue.direct")?;
        self.ris_ue.validate("single_ue.ris_ue")?;
        self.bs_ris.validate("single_ue.bs_ris")
    }

    pub fn placement(&self) -> (RisSite, UePlacement) {
        let ris = RisSite {
            position: Point::polar(self.ris_distance, self.ris_aod),
            distance: self.ris_distance,
            aoa: self.ris_aoa,
            aod: self.ris_aod,
        };
        let ue = Point::polar(self.ue_distance, self.ue_aod);
        (ris, UePlacement::new(ue, false, 0, &ris))
    }
}

pub fn generate_single_ue<R: Rng + ?Sized>(
    cfg: &SingleUeConfig,
    rng: &mut R,
) -> Result<(UePlacement, ChannelRealization)> {
    cfg.validate()?;
    let (ris, ue) = cfg.placement();
    let g = sample_bs_ris_channel(ris.distance, (0.0, ris.aoa), ris.aod, &cfg.bs_ris, &cfg.steering, rng)?;
    let h_d = sample_direct_channel(&ue, &cfg.direct, &cfg.steering, rng)?;
    let h_k = sample_ris_ue_channel(&ue, &cfg.ris_ue, &cfg.steering, rng)?;
    let realization = ChannelRealization::assemble(vec![h_d], vec![g], vec![h_k], vec![0])?;
    Ok((ue, realization))
}
