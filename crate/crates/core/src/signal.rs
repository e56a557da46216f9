//! Snapshot simulation for non-circular sources and the sum-difference
//! virtual observation built from the extended covariance.

use std::io::{self, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coupling::{coupling_matrix, CouplingModel};
use crate::error::{Error, Result};
use crate::geometry::SensorArray;
use crate::scalar::Real;
use crate::{CMatrix, CVector};

/// Source and noise configuration for one experiment.
///
/// `powers` and `nc_phases` may be left empty, meaning unit power and zero
/// non-circularity phase for every source. `snr_db = None` is noiseless.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub angles_deg: Vec<f64>,
    #[serde(default)]
    pub powers: Vec<f64>,
    #[serde(default)]
    pub nc_phases: Vec<f64>,
    pub snr_db: Option<f64>,
    pub snapshots: usize,
    #[serde(default)]
    pub seed: u64,
}

/// `first + span·(z-1)/(count-1)` for `z = 1..=count`.
pub fn equispaced_angles(first: f64, span: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![first];
    }
    (0..count)
        .map(|z| first + span * z as f64 / (count - 1) as f64)
        .collect()
}

impl Scenario {
    /// Equal-power, zero-phase sources.
    pub fn new(angles_deg: Vec<f64>, snr_db: Option<f64>, snapshots: usize, seed: u64) -> Self {
        Scenario {
            angles_deg,
            powers: Vec::new(),
            nc_phases: Vec::new(),
            snr_db,
            snapshots,
            seed,
        }
    }

    /// 55 sources over `-49° + 98°(z-1)/54`, 0 dB, 600 snapshots.
    pub fn fig12() -> Self {
        Scenario::new(equispaced_angles(-49.0, 98.0, 55), Some(0.0), 600, 1)
    }

    /// 27 sources over `-59° + 118°(z-1)/26`, 0 dB, 1000 snapshots. Meant to
    /// be run with the `paper-v` coupling preset.
    pub fn fig13() -> Self {
        Scenario::new(equispaced_angles(-59.0, 118.0, 27), Some(0.0), 1000, 1)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig12" => Ok(Self::fig12()),
            "fig13" => Ok(Self::fig13()),
            _ => Err(Error::Validation(format!(
                "unknown scenario preset {name:?}"
            ))),
        }
    }

    pub fn num_sources(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn power(&self, z: usize) -> f64 {
        self.powers.get(z).copied().unwrap_or(1.0)
    }

    pub fn nc_phase(&self, z: usize) -> f64 {
        self.nc_phases.get(z).copied().unwrap_or(0.0)
    }

    /// Noise variance `p_n = 10^{-SNR/10}`, relative to unit source power.
    pub fn noise_power(&self) -> f64 {
        self.snr_db.map_or(0.0, |snr| 10f64.powf(-snr / 10.0))
    }

    /// Pseudo-power `p̂_z = p_z·e^{j2φ_z}`.
    pub fn pseudo_power(&self, z: usize) -> Complex<f64> {
        Complex::from_polar(self.power(z), 2.0 * self.nc_phase(z))
    }

    pub fn validate(&self) -> Result<()> {
        let z = self.num_sources();
        let bad = |msg: String| Err(Error::Validation(msg));
        if z == 0 {
            return bad("scenario needs at least one source".into());
        }
        if self.snapshots == 0 {
            return bad("scenario needs at least one snapshot".into());
        }
        if let Some(a) = self
            .angles_deg
            .iter()
            .find(|a| a.is_nan() || a.abs() >= 90.0)
        {
            return bad(format!("source angle {a}° outside (-90°, 90°)"));
        }
        let mut sorted = self.angles_deg.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("source angles must be distinct".into());
        }
        if !self.powers.is_empty() && self.powers.len() != z {
            return bad(format!("{} powers for {z} sources", self.powers.len()));
        }
        if self.powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("source powers must be finite and nonnegative".into());
        }
        if !self.nc_phases.is_empty() && self.nc_phases.len() != z {
            return bad(format!(
                "{} non-circularity phases for {z} sources",
                self.nc_phases.len()
            ));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return bad("snr_db must be finite (use null for noiseless)".into());
            }
        }
        Ok(())
    }
}

/// Counter-based generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if theta_deg.abs() < 90.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "angle {theta_deg}° outside (-90°, 90°)"
        )))
    }
}

fn steering_f64(p: &SensorArray, theta_deg: f64) -> DMatrix<Complex<f64>> {
    let u = theta_deg.to_radians().sin();
    DMatrix::from_iterator(
        p.len(),
        1,
        p.positions()
            .iter()
            .map(|&m| Complex::from_polar(1.0, -std::f64::consts::PI * m as f64 * u)),
    )
}

fn narrow<T: Real>(m: &DMatrix<Complex<f64>>) -> CMatrix<T> {
    m.map(|z| Complex::new(T::lit(z.re), T::lit(z.im)))
}

/// `a(θ)_n = e^{-jπ m_n sin θ}` for half-wavelength units.
pub fn steering_vector<T: Real>(p: &SensorArray, theta_deg: f64) -> Result<CVector<T>> {
    check_angle(theta_deg)?;
    let a = steering_f64(p, theta_deg);
    Ok(CVector::from_iterator(
        a.nrows(),
        a.iter().map(|z| Complex::new(T::lit(z.re), T::lit(z.im))),
    ))
}

/// Direction matrix `A` (or `C·A` under coupling), evaluated in `f64`.
fn direction_matrix(
    p: &SensorArray,
    sc: &Scenario,
    coupling: Option<&CouplingModel>,
) -> DMatrix<Complex<f64>> {
    let mut a = DMatrix::zeros(p.len(), sc.num_sources());
    for (z, &theta) in sc.angles_deg.iter().enumerate() {
        a.set_column(z, &steering_f64(p, theta).column(0));
    }
    match coupling {
        Some(model) => coupling_matrix::<f64>(p, model) * a,
        None => a,
    }
}

/// Draws `T` snapshots `x(t) = C·A·s(t) + n(t)` using stream 0 of the
/// scenario seed.
pub fn simulate_snapshots<T: Real>(
    p: &SensorArray,
    sc: &Scenario,
    coupling: Option<&CouplingModel>,
) -> Result<CMatrix<T>> {
    simulate_snapshots_with(p, sc, coupling, &mut trial_rng(sc.seed, 0))
}

/// As [`simulate_snapshots`], drawing from `rng`.
///
/// Source `z` emits `√p_z · r_z(t) · e^{jφ_z}` with `r_z(t)` real standard
/// Gaussian; noise is circular complex Gaussian of variance `p_n`. Per
/// snapshot the draws are ordered sources first, then `(re, im)` per sensor.
pub fn simulate_snapshots_with<T: Real, R: Rng>(
    p: &SensorArray,
    sc: &Scenario,
    coupling: Option<&CouplingModel>,
    rng: &mut R,
) -> Result<CMatrix<T>> {
    sc.validate()?;
    let a = direction_matrix(p, sc, coupling);
    let n = p.len();
    let zs = sc.num_sources();
    let amps: Vec<Complex<f64>> = (0..zs)
        .map(|z| Complex::from_polar(sc.power(z).sqrt(), sc.nc_phase(z)))
        .collect();
    let noise_std = (sc.noise_power() / 2.0).sqrt();
    let mut x = DMatrix::<Complex<f64>>::zeros(n, sc.snapshots);
    let mut s = vec![Complex::new(0.0, 0.0); zs];
    for t in 0..sc.snapshots {
        for (sz, amp) in s.iter_mut().zip(&amps) {
            let r: f64 = rng.sample(StandardNormal);
            *sz = amp * r;
        }
        for row in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let mut acc = Complex::new(noise_std * re, noise_std * im);
            for (z, sz) in s.iter().enumerate() {
                acc += a[(row, z)] * sz;
            }
            x[(row, t)] = acc;
        }
    }
    Ok(narrow(&x))
}

/// Sample covariance `R_s`, pseudo-covariance `R̂_s`, and their 2N×2N
/// extended form.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedCovariance<T: Real> {
    pub rs: CMatrix<T>,
    pub rhat: CMatrix<T>,
}

impl<T: Real> ExtendedCovariance<T> {
    pub fn n(&self) -> usize {
        self.rs.nrows()
    }

    /// `[[R_s, R̂_s], [R̂_s*, R_s*]]`.
    pub fn rso(&self) -> CMatrix<T> {
        let n = self.n();
        let mut out = CMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&self.rs);
        out.view_mut((0, n), (n, n)).copy_from(&self.rhat);
        out.view_mut((n, 0), (n, n))
            .copy_from(&self.rhat.map(|z| z.conj()));
        out.view_mut((n, n), (n, n))
            .copy_from(&self.rs.map(|z| z.conj()));
        out
    }

    /// Population statistics `A R_x Aᴴ + p_n I` and `A R̂_x Aᵀ`.
    pub fn from_model(
        p: &SensorArray,
        sc: &Scenario,
        coupling: Option<&CouplingModel>,
    ) -> Result<Self> {
        sc.validate()?;
        let a = direction_matrix(p, sc, coupling);
        let n = p.len();
        let mut rs = DMatrix::<Complex<f64>>::identity(n, n) * Complex::new(sc.noise_power(), 0.0);
        let mut rhat = DMatrix::<Complex<f64>>::zeros(n, n);
        for z in 0..sc.num_sources() {
            let col = a.column(z);
            rs += col * col.adjoint() * Complex::new(sc.power(z), 0.0);
            rhat += col * col.transpose() * sc.pseudo_power(z);
        }
        Ok(ExtendedCovariance {
            rs: narrow(&rs),
            rhat: narrow(&rhat),
        })
    }
}

/// `R_s = X Xᴴ / T`, `R̂_s = X Xᵀ / T`.
pub fn extended_covariance<T: Real>(x: &CMatrix<T>) -> ExtendedCovariance<T> {
    let scale = Complex::new(T::one() / T::lit(x.ncols().max(1) as f64), T::zero());
    let rs = x * x.adjoint() * scale;
    let rhat = x * x.transpose() * scale;
    ExtendedCovariance { rs, rhat }
}

/// Lag carried by entry `(row, col)` of the extended covariance: the R_s
/// block maps to `m_u - m_v`, R̂_s to `m_u + m_v`, and the conjugate blocks
/// to the negatives.
pub fn rso_lag(p: &SensorArray, row: usize, col: usize) -> i64 {
    let n = p.len();
    let pos = p.positions();
    let (u, v) = (row % n, col % n);
    match (row < n, col < n) {
        (true, true) => pos[u] - pos[v],
        (true, false) => pos[u] + pos[v],
        (false, true) => -(pos[u] + pos[v]),
        (false, false) => pos[v] - pos[u],
    }
}

/// Lags of `vec(R_so)` in column-major order.
pub fn rso_lags(p: &SensorArray) -> Vec<i64> {
    let n2 = 2 * p.len();
    (0..n2)
        .flat_map(|col| (0..n2).map(move |row| (row, col)))
        .map(|(row, col)| rso_lag(p, row, col))
        .collect()
}

/// Averaged co-array samples on the contiguous segment `⟨-m, m⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualObservation<T: Real> {
    pub lags: Vec<i64>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> VirtualObservation<T> {
    /// One-sided reach `m`.
    pub fn reach(&self) -> usize {
        self.lags.len() / 2
    }

    pub fn value_at(&self, lag: i64) -> Option<Complex<T>> {
        let m = self.reach() as i64;
        (lag.abs() <= m).then(|| self.values[(lag + m) as usize])
    }
}

/// Maps every entry of `vec(R_so)` to its co-array lag, averages entries that
/// share a lag, and keeps the zero-centred contiguous segment.
pub fn virtual_observation<T: Real>(
    ec: &ExtendedCovariance<T>,
    p: &SensorArray,
) -> VirtualObservation<T> {
    let rso = ec.rso();
    let span = p.positions().iter().map(|m| m.abs()).max().unwrap_or(0) * 2;
    let width = (2 * span + 1) as usize;
    let mut sums = vec![Complex::new(T::zero(), T::zero()); width];
    let mut counts = vec![0u32; width];
    for (value, lag) in rso.iter().zip(rso_lags(p)) {
        let k = (lag + span) as usize;
        sums[k] += *value;
        counts[k] += 1;
    }
    let zero = span as usize;
    let m = (1..=zero)
        .take_while(|&d| counts[zero + d] > 0 && counts[zero - d] > 0)
        .count();
    let (lags, values) = (zero - m..=zero + m)
        .map(|k| {
            let mean = sums[k] * (T::one() / T::lit(counts[k] as f64));
            (k as i64 - span, mean)
        })
        .unzip();
    VirtualObservation { lags, values }
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"CALB";

/// Little-endian complex64 dump: 16-byte header (`"CALB"`, `u32` N, `u32` T,
/// `u32` reserved = 0) followed by `(re, im)` `f32` pairs, snapshot-major.
pub fn write_snapshots<T: Real, W: Write>(mut w: W, x: &CMatrix<T>) -> io::Result<()> {
    let dim = |v: usize| {
        u32::try_from(v)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension too large"))
    };
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&dim(x.nrows())?.to_le_bytes())?;
    w.write_all(&dim(x.ncols())?.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for t in 0..x.ncols() {
        for n in 0..x.nrows() {
            let z = x[(n, t)];
            w.write_all(&(z.re.as_f64() as f32).to_le_bytes())?;
            w.write_all(&(z.im.as_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_snapshots<T: Real, R: Read>(mut r: R) -> io::Result<CMatrix<T>> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != SNAPSHOT_MAGIC {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "bad snapshot magic",
        ));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (n, t) = (word(4), word(8));
    let mut x = CMatrix::zeros(n, t);
    let mut buf = [0u8; 8];
    for col in 0..t {
        for row in 0..n {
            r.read_exact(&mut buf)?;
            let re = f32::from_le_bytes(buf[..4].try_into().unwrap());
            let im = f32::from_le_bytes(buf[4..].try_into().unwrap());
            x[(row, col)] = Complex::new(T::lit(re as f64), T::lit(im as f64));
        }
    }
    Ok(x)
}
