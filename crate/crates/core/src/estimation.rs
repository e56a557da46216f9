//! Co-array MUSIC: spatial smoothing, pseudo-spectrum, peak picking and
//! Monte-Carlo scoring.

use std::io::Write;

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarray::{contiguous_reach, sum_difference_coarray};
use crate::coupling::CouplingModel;
use crate::error::{Error, Result};
use crate::geometry::SensorArray;
use crate::scalar::Real;
use crate::signal::{
    extended_covariance, simulate_snapshots_with, trial_rng, virtual_observation, Scenario,
    VirtualObservation,
};
use crate::CMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MusicConfig {
    pub grid_start: f64,
    pub grid_stop: f64,
    pub grid_points: usize,
    pub num_sources: usize,
    /// Smoothing subarray length; defaults to `m + 1`.
    #[serde(default)]
    pub subarray_len: Option<usize>,
}

impl MusicConfig {
    pub const DEFAULT_STEP: f64 = 0.01;

    /// Grid over `[-90°, 90°]` at 0.01°.
    pub fn new(num_sources: usize) -> Self {
        Self::with_step(-90.0, 90.0, Self::DEFAULT_STEP, num_sources)
    }

    pub fn with_step(start: f64, stop: f64, step: f64, num_sources: usize) -> Self {
        let points = ((stop - start) / step).round() as usize + 1;
        MusicConfig {
            grid_start: start,
            grid_stop: stop,
            grid_points: points.max(2),
            num_sources,
            subarray_len: None,
        }
    }

    pub fn step(&self) -> f64 {
        (self.grid_stop - self.grid_start) / (self.grid_points - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.grid_points)
            .map(|i| self.grid_start + step * i as f64)
            .collect()
    }

    /// Error charged to each source a trial fails to detect.
    pub fn miss_penalty(&self) -> f64 {
        (self.grid_stop - self.grid_start) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::Validation("grid needs at least two points".into()));
        }
        if self.grid_start.is_nan()
            || self.grid_start >= self.grid_stop
            || self.grid_start < -90.0
            || self.grid_stop > 90.0
        {
            return Err(Error::Validation(format!(
                "grid [{}, {}] must be increasing within [-90°, 90°]",
                self.grid_start, self.grid_stop
            )));
        }
        if self.num_sources == 0 {
            return Err(Error::Validation("MUSIC needs at least one source".into()));
        }
        Ok(())
    }
}

/// `R_ss = (1/K) Σ v_i v_iᴴ` over the `K = 2m + 2 - L` length-`L` windows of
/// the contiguous observation. With the default `L = m + 1`, `K = L`.
pub fn spatial_smoothing<T: Real>(
    v: &VirtualObservation<T>,
    num_sources: usize,
    subarray_len: Option<usize>,
) -> Result<CMatrix<T>> {
    let m = v.reach();
    if m < num_sources {
        return Err(Error::InsufficientDof {
            sources: num_sources,
            reach: m as u64,
        });
    }
    let len = subarray_len.unwrap_or(m + 1);
    if len <= num_sources || len > m + 1 {
        return Err(Error::Domain(format!(
            "subarray length {len} must lie in ({num_sources}, {}]",
            m + 1
        )));
    }
    let windows = 2 * m + 2 - len;
    let hankel = CMatrix::from_fn(len, windows, |k, i| v.values[i + k]);
    let scale = Complex::new(T::one() / T::lit(windows as f64), T::zero());
    Ok(&hankel * hankel.adjoint() * scale)
}

/// MUSIC pseudo-spectrum sampled on the configured grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub angles_deg: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    /// `10·log10(P / max P)`.
    pub fn normalized_db(&self) -> Vec<f64> {
        let peak = self
            .values
            .iter()
            .copied()
            .fold(f64::MIN_POSITIVE, f64::max);
        self.values
            .iter()
            .map(|v| 10.0 * (v / peak).log10())
            .collect()
    }

    /// CSV with columns `angle_deg,power_db`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["angle_deg", "power_db"])?;
        for (a, db) in self.angles_deg.iter().zip(self.normalized_db()) {
            out.write_record([format!("{a:.4}"), format!("{db:.6}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn hermitian_defect<T: Real>(r: &CMatrix<T>) -> (f64, f64) {
    let mut defect = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..r.ncols() {
        for i in 0..r.nrows() {
            let d = r[(i, j)] - r[(j, i)].conj();
            defect = defect.max(d.norm_sqr().as_f64().sqrt());
            scale = scale.max(r[(i, j)].norm_sqr().as_f64().sqrt());
        }
    }
    (defect, scale)
}

/// `P(θ) = 1 / ‖E_nᴴ a_L(θ)‖²`, with `E_n` the eigenvectors of the `L - Z`
/// smallest eigenvalues and `a_L(θ)_k = e^{-jπ k sin θ}`.
pub fn music_spectrum<T: Real>(r: &CMatrix<T>, cfg: &MusicConfig) -> Result<Spectrum> {
    cfg.validate()?;
    if !r.is_square() {
        return Err(Error::Domain("covariance must be square".into()));
    }
    let (defect, scale) = hermitian_defect(r);
    if defect > 1e-5 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian(defect));
    }
    let len = r.nrows();
    let z = cfg.num_sources;
    if z >= len {
        return Err(Error::InsufficientDof {
            sources: z,
            reach: len.saturating_sub(1) as u64,
        });
    }
    let half = Complex::new(T::lit(0.5), T::zero());
    let sym = (r + r.adjoint()) * half;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let noise_dim = len - z;
    // Rows of E_nᴴ, stored contiguously.
    let noise_h: Vec<Vec<Complex<T>>> = order[..noise_dim]
        .iter()
        .map(|&c| {
            eig.eigenvectors
                .column(c)
                .iter()
                .map(|e| e.conj())
                .collect()
        })
        .collect();

    let floor = T::lit(1e-30);
    let pi = T::pi();
    let mut steer = vec![Complex::new(T::zero(), T::zero()); len];
    let angles = cfg.grid();
    let values = angles
        .iter()
        .map(|&theta| {
            let u = T::lit(theta.to_radians().sin());
            for (k, s) in steer.iter_mut().enumerate() {
                let phase = -pi * T::lit(k as f64) * u;
                *s = Complex::new(phase.cos(), phase.sin());
            }
            let denom = noise_h.iter().fold(T::zero(), |acc, row| {
                let dot = row
                    .iter()
                    .zip(&steer)
                    .fold(Complex::new(T::zero(), T::zero()), |d, (e, s)| d + *e * *s);
                acc + dot.norm_sqr()
            });
            (T::one() / denom.max(floor)).as_f64()
        })
        .collect();
    Ok(Spectrum {
        angles_deg: angles,
        values,
    })
}

/// The `z` largest strict interior local maxima, sorted by angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peaks {
    pub angles_deg: Vec<f64>,
    /// Fewer than `z` local maxima were found.
    pub under_detected: bool,
}

/// Ties in height resolve to the lower angle.
pub fn pick_peaks(spectrum: &Spectrum, z: usize) -> Peaks {
    let v = &spectrum.values;
    let mut maxima: Vec<usize> = (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .collect();
    maxima.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let under_detected = maxima.len() < z;
    maxima.truncate(z);
    maxima.sort_unstable();
    Peaks {
        angles_deg: maxima.iter().map(|&i| spectrum.angles_deg[i]).collect(),
        under_detected,
    }
}

/// Absolute error per true source after order-preserving matching.
///
/// Equal counts pair the sorted lists element-wise. With fewer estimates the
/// order-preserving assignment of least squared error is used, and every
/// unmatched source is charged `penalty`.
pub fn per_source_errors(estimates: &[f64], truth: &[f64], penalty: f64) -> Vec<f64> {
    let mut est = estimates.to_vec();
    est.sort_by(f64::total_cmp);
    let mut tru: Vec<(usize, f64)> = truth.iter().copied().enumerate().collect();
    tru.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut errors = vec![penalty; truth.len()];
    if est.len() >= tru.len() {
        for ((idx, t), e) in tru.iter().zip(&est) {
            errors[*idx] = (e - t).abs();
        }
        return errors;
    }
    // cost[i][j]: best cost aligning est[..i] into tru[..j].
    let (p, q) = (est.len(), tru.len());
    let mut cost = vec![vec![f64::INFINITY; q + 1]; p + 1];
    cost[0].iter_mut().for_each(|c| *c = 0.0);
    for i in 1..=p {
        for j in i..=q {
            let skip = cost[i][j - 1];
            let take = cost[i - 1][j - 1] + (est[i - 1] - tru[j - 1].1).powi(2);
            cost[i][j] = skip.min(take);
        }
    }
    let (mut i, mut j) = (p, q);
    while i > 0 {
        let take = cost[i - 1][j - 1] + (est[i - 1] - tru[j - 1].1).powi(2);
        if cost[i][j] == take {
            errors[tru[j - 1].0] = (est[i - 1] - tru[j - 1].1).abs();
            i -= 1;
        }
        j -= 1;
    }
    errors
}

/// `sqrt(mean(err²))` over all trials and sources.
pub fn rmse(trial_estimates: &[Vec<f64>], truth: &[f64], penalty: f64) -> f64 {
    let errors: Vec<f64> = trial_estimates
        .iter()
        .flat_map(|est| per_source_errors(est, truth, penalty))
        .collect();
    rmse_of(&errors)
}

fn rmse_of(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Outcome of one simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub spectrum: Spectrum,
    pub estimates: Vec<f64>,
    pub under_detected: bool,
    pub per_source_error: Vec<f64>,
    pub rmse: f64,
}

impl EstimationResult {
    /// All sources found and every error below `tol_deg`.
    pub fn resolved(&self, tol_deg: f64) -> bool {
        !self.under_detected && self.per_source_error.iter().all(|e| *e < tol_deg)
    }
}

/// Virtual observation → smoothing → spectrum → peaks, on `cfg`'s grid.
pub fn estimate_from_observation<T: Real>(
    v: &VirtualObservation<T>,
    truth: &[f64],
    cfg: &MusicConfig,
) -> Result<EstimationResult> {
    let r = spatial_smoothing(v, cfg.num_sources, cfg.subarray_len)?;
    let spectrum = music_spectrum(&r, cfg)?;
    let peaks = pick_peaks(&spectrum, cfg.num_sources);
    let per_source_error = per_source_errors(&peaks.angles_deg, truth, cfg.miss_penalty());
    Ok(EstimationResult {
        rmse: rmse_of(&per_source_error),
        spectrum,
        estimates: peaks.angles_deg,
        under_detected: peaks.under_detected,
        per_source_error,
    })
}

/// Runs trial `trial` of the pipeline (stream `trial` of the scenario seed).
pub fn run_trial<T: Real>(
    p: &SensorArray,
    sc: &Scenario,
    cfg: &MusicConfig,
    coupling: Option<&CouplingModel>,
    trial: u64,
) -> Result<EstimationResult> {
    cfg.validate()?;
    let x = simulate_snapshots_with::<T, _>(p, sc, coupling, &mut trial_rng(sc.seed, trial))?;
    let v = virtual_observation(&extended_covariance(&x), p);
    estimate_from_observation(&v, &sc.angles_deg, cfg)
}

/// Per-trial record kept by [`monte_carlo`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub estimates: Vec<f64>,
    pub under_detected: bool,
    pub per_source_error: Vec<f64>,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub array: String,
    pub rmse_deg: f64,
    pub detection_rate: f64,
    pub trials: Vec<TrialOutcome>,
}

impl MonteCarloResult {
    /// Fraction of trials that found every source within `tol_deg`.
    pub fn resolution_rate(&self, tol_deg: f64) -> f64 {
        let ok = self
            .trials
            .iter()
            .filter(|t| !t.under_detected && t.per_source_error.iter().all(|e| *e < tol_deg))
            .count();
        ok as f64 / self.trials.len().max(1) as f64
    }
}

/// Independent trials on counter-derived streams, run in parallel. Trial `k`
/// is the same whatever the total count or scheduling.
pub fn monte_carlo<T: Real>(
    p: &SensorArray,
    sc: &Scenario,
    cfg: &MusicConfig,
    trials: usize,
    coupling: Option<&CouplingModel>,
) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::Validation(
            "monte carlo needs at least one trial".into(),
        ));
    }
    sc.validate()?;
    cfg.validate()?;
    let reach = contiguous_reach(&sum_difference_coarray(p))?;
    if reach < cfg.num_sources as u64 {
        return Err(Error::InsufficientDof {
            sources: cfg.num_sources,
            reach,
        });
    }
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            run_trial::<T>(p, sc, cfg, coupling, k).map(|r| TrialOutcome {
                trial: k,
                estimates: r.estimates,
                under_detected: r.under_detected,
                per_source_error: r.per_source_error,
                rmse: r.rmse,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_errors: Vec<f64> = outcomes
        .iter()
        .flat_map(|t| t.per_source_error.iter().copied())
        .collect();
    let detected = outcomes.iter().filter(|t| !t.under_detected).count();
    Ok(MonteCarloResult {
        array: p.name().to_string(),
        rmse_deg: rmse_of(&all_errors),
        detection_rate: detected as f64 / trials as f64,
        trials: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{design_nested, design_saulas, design_tsaulas};
    use crate::signal::ExtendedCovariance;

    fn coarse(z: usize) -> MusicConfig {
        MusicConfig::with_step(-90.0, 90.0, 0.05, z)
    }

    fn spectrum(values: &[f64]) -> Spectrum {
        Spectrum {
            angles_deg: (0..values.len()).map(|i| i as f64).collect(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn default_grid() {
        let cfg = MusicConfig::new(3);
        assert_eq!(cfg.grid_points, 18001);
        let g = cfg.grid();
        assert_eq!((g[0], g[18000]), (-90.0, 90.0));
        assert!((g[9000]).abs() < 1e-12);
        assert_eq!(cfg.miss_penalty(), 90.0);
        assert!(MusicConfig::new(0).validate().is_err());
    }

    #[test]
    fn smoothing_of_single_source_is_rank_one_and_hermitian() {
        let p = design_saulas(9).unwrap();
        let sc = Scenario::new(vec![20.0], None, 1, 0);
        let ec = ExtendedCovariance::<f64>::from_model(&p, &sc, None).unwrap();
        let v = virtual_observation(&ec, &p);
        let r = spatial_smoothing(&v, 1, None).unwrap();
        assert_eq!(r.nrows(), v.reach() + 1);
        assert!((&r - r.adjoint()).norm() < 1e-10);
        let sv = r.singular_values();
        assert!(sv[1] < 1e-9 * sv[0]);
        assert!(spatial_smoothing(&v, 1, Some(v.reach() + 2)).is_err());
        assert!(matches!(
            spatial_smoothing(&v, v.reach() + 1, None),
            Err(Error::InsufficientDof { .. })
        ));
    }

    #[test]
    fn single_source_peak() {
        let p = design_tsaulas(9).unwrap();
        let sc = Scenario::new(vec![0.0], Some(20.0), 200, 4);
        let r = run_trial::<f64>(&p, &sc, &coarse(1), None, 0).unwrap();
        assert!(r.estimates[0].abs() <= 0.05 + 1e-9);
        assert!(r.spectrum.values.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn single_precision_pipeline() {
        let p = design_saulas(9).unwrap();
        let sc = Scenario::new(vec![-30.0, 10.0, 45.0], Some(20.0), 2000, 8);
        let r = run_trial::<f32>(&p, &sc, &coarse(3), None, 0).unwrap();
        assert!(r.resolved(0.2), "{:?}", r.estimates);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut r = CMatrix::<f64>::identity(4, 4);
        r[(0, 1)] = Complex::new(0.5, 0.0);
        assert!(matches!(
            music_spectrum(&r, &coarse(1)),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn white_noise_spectrum_is_flat() {
        let r = CMatrix::<f64>::identity(10, 10);
        let s = music_spectrum(&r, &coarse(2)).unwrap();
        let mut sorted = s.values.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        assert!(s.values.iter().all(|v| *v <= 3.0 * median));
    }

    #[test]
    fn peak_picking() {
        let s = spectrum(&[0.0, 1.0, 0.0, 3.0, 0.0, 3.0, 0.0, 2.0, 0.0]);
        assert_eq!(pick_peaks(&s, 1).angles_deg, vec![3.0]);
        assert_eq!(pick_peaks(&s, 3).angles_deg, vec![3.0, 5.0, 7.0]);
        let all = pick_peaks(&s, 5);
        assert!(all.under_detected);
        assert_eq!(all.angles_deg, vec![1.0, 3.0, 5.0, 7.0]);
        // Endpoints and plateaus are not strict interior maxima.
        let flat = spectrum(&[5.0, 1.0, 2.0, 2.0, 1.0]);
        assert!(pick_peaks(&flat, 1).under_detected);
    }

    #[test]
    fn error_matching() {
        assert_eq!(rmse(&[vec![1.0, 2.0]], &[2.0, 1.0], 90.0), 0.0);
        assert_eq!(rmse(&[vec![11.0]], &[10.0], 90.0), 1.0);
        // A missing source costs the penalty; the rest align by order.
        let e = per_source_errors(&[0.1, 20.2], &[0.0, 10.0, 20.0], 90.0);
        assert!((e[0] - 0.1).abs() < 1e-12 && e[1] == 90.0 && (e[2] - 0.2).abs() < 1e-12);
        let e = per_source_errors(&[], &[1.0], 90.0);
        assert_eq!(e, vec![90.0]);
        let r = rmse(&[vec![0.0], vec![]], &[0.0], 90.0);
        assert!((r - (90.0f64 * 90.0 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_trial_deterministic() {
        let p = design_saulas(9).unwrap();
        let sc = Scenario::new(vec![-20.0, 15.0], Some(0.0), 100, 7);
        let cfg = coarse(2);
        let one = monte_carlo::<f64>(&p, &sc, &cfg, 1, None).unwrap();
        let single = run_trial::<f64>(&p, &sc, &cfg, None, 0).unwrap();
        assert_eq!(one.trials[0].estimates, single.estimates);
        let two = monte_carlo::<f64>(&p, &sc, &cfg, 2, None).unwrap();
        let four = monte_carlo::<f64>(&p, &sc, &cfg, 4, None).unwrap();
        assert_eq!(two.trials[..], four.trials[..2]);
        assert_eq!(four.trials[3].trial, 3);
        assert!(monte_carlo::<f64>(&p, &sc, &cfg, 0, None).is_err());
    }

    #[test]
    fn too_many_sources() {
        let p = design_nested(6, 6).unwrap();
        let sc = Scenario::fig12();
        let err = monte_carlo::<f64>(&p, &sc, &coarse(55), 1, None).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientDof {
                sources: 55,
                reach: 47
            }
        ));
    }

    #[test]
    fn spectrum_csv() {
        let s = spectrum(&[1.0, 10.0, 1.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "angle_deg,power_db\n0.0000,-10.000000\n1.0000,0.000000\n2.0000,-10.000000\n"
        );
    }
}
