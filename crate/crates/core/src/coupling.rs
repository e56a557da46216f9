//! Banded Toeplitz mutual-coupling model.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorArray;
use crate::scalar::Real;
use crate::CMatrix;

/// Coupling coefficients `c_0 = 1`, `c_q = c1 · e^{-j(q-1)δ} / q` for
/// `1 ≤ q ≤ B`, and zero beyond the band limit `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    pub c1_magnitude: f64,
    /// Phase of `c1`, radians.
    pub c1_phase: f64,
    /// Phase decrement `δ` per coefficient index, radians.
    pub phase_decrement: f64,
    pub band_limit: u64,
}

impl CouplingModel {
    /// Default band limit.
    pub const DEFAULT_BAND: u64 = 100;

    /// `c1 = 0.3·e^{jπ/3}`, `δ = π/8`, `B = 100`.
    pub fn paper_v() -> Self {
        CouplingModel {
            c1_magnitude: 0.3,
            c1_phase: std::f64::consts::FRAC_PI_3,
            phase_decrement: std::f64::consts::FRAC_PI_8,
            band_limit: Self::DEFAULT_BAND,
        }
    }

    /// Coupling-free model; its matrix is the identity.
    pub fn identity() -> Self {
        CouplingModel {
            c1_magnitude: 0.0,
            c1_phase: 0.0,
            phase_decrement: 0.0,
            band_limit: Self::DEFAULT_BAND,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-v" => Ok(Self::paper_v()),
            "none" | "identity" => Ok(Self::identity()),
            _ => Err(Error::Validation(format!(
                "unknown coupling preset {name:?}"
            ))),
        }
    }

    pub fn coefficient(&self, q: u64) -> Complex<f64> {
        match q {
            0 => Complex::new(1.0, 0.0),
            q if q > self.band_limit => Complex::new(0.0, 0.0),
            q => {
                let phase = self.c1_phase - (q - 1) as f64 * self.phase_decrement;
                Complex::from_polar(self.c1_magnitude / q as f64, phase)
            }
        }
    }

    /// `1 ≥ |c1| > |c2| > …`. The `1/q` law always decreases, so only
    /// `|c1| > 1` breaks the ordering.
    pub fn is_monotone(&self) -> bool {
        self.c1_magnitude.abs() <= 1.0
    }
}

/// `[C]_{uv} = c_{|m_u - m_v|}`, zero outside the band. Complex symmetric,
/// unit diagonal.
pub fn coupling_matrix<T: Real>(p: &SensorArray, model: &CouplingModel) -> CMatrix<T> {
    if !model.is_monotone() {
        log::warn!(
            "coupling model has |c1| = {} > 1; coefficient ordering does not hold",
            model.c1_magnitude
        );
    }
    let pos = p.positions();
    CMatrix::from_fn(pos.len(), pos.len(), |u, v| {
        let c = model.coefficient(pos[u].abs_diff(pos[v]));
        Complex::new(T::lit(c.re), T::lit(c.im))
    })
}

/// `‖C - diag(C)‖_F / ‖C‖_F`.
pub fn coupling_leakage<T: Real>(c: &CMatrix<T>) -> Result<T> {
    if !c.is_square() {
        return Err(Error::Domain(format!(
            "coupling matrix must be square, got {}×{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let mut total = T::zero();
    let mut off = T::zero();
    for v in 0..c.ncols() {
        for u in 0..c.nrows() {
            let e = c[(u, v)].norm_sqr();
            total += e;
            if u != v {
                off += e;
            }
        }
    }
    if total == T::zero() {
        return Err(Error::Domain(
            "coupling leakage of a zero matrix is undefined".into(),
        ));
    }
    Ok((off / total).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::*;
    use approx::assert_abs_diff_eq;

    fn leakage(a: &SensorArray) -> f64 {
        coupling_leakage(&coupling_matrix::<f64>(a, &CouplingModel::paper_v())).unwrap()
    }

    #[test]
    fn identity_model() {
        let a = design_aulas(12).unwrap();
        let c = coupling_matrix::<f64>(&a, &CouplingModel::identity());
        assert_eq!(c, CMatrix::<f64>::identity(12, 12));
        assert_eq!(coupling_leakage(&c).unwrap(), 0.0);
    }

    #[test]
    fn coefficient_law() {
        let m = CouplingModel::paper_v();
        assert_eq!(m.coefficient(0), Complex::new(1.0, 0.0));
        let c1 = m.coefficient(1);
        assert_abs_diff_eq!(c1.norm(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(c1.arg(), std::f64::consts::FRAC_PI_3, epsilon = 1e-15);
        let c3 = m.coefficient(3);
        assert_abs_diff_eq!(c3.norm(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(
            c3.arg(),
            std::f64::consts::FRAC_PI_3 - std::f64::consts::FRAC_PI_4,
            epsilon = 1e-15
        );
        assert_eq!(m.coefficient(101), Complex::new(0.0, 0.0));
    }

    #[test]
    fn band_limit_zeroes_far_pairs() {
        let a = from_positions("pair", &[0, 150]).unwrap();
        let c = coupling_matrix::<f64>(&a, &CouplingModel::paper_v());
        assert_eq!(c[(0, 1)], Complex::new(0.0, 0.0));
        assert_eq!(c[(1, 0)], Complex::new(0.0, 0.0));
    }

    #[test]
    fn twelve_sensor_leakage() {
        assert_abs_diff_eq!(leakage(&design_aulas(12).unwrap()), 0.249, epsilon = 0.005);
        assert_abs_diff_eq!(leakage(&design_saulas(12).unwrap()), 0.249, epsilon = 0.005);
        assert_abs_diff_eq!(
            leakage(&design_tsaulas(12).unwrap()),
            0.140,
            epsilon = 0.005
        );
        assert_abs_diff_eq!(
            leakage(&design_cotsaulas(12).unwrap()),
            0.189,
            epsilon = 0.005
        );
        assert_abs_diff_eq!(
            leakage(&design_nested(6, 6).unwrap()),
            0.33,
            epsilon = 0.005
        );
    }

    #[test]
    fn leakage_ordering() {
        let t = leakage(&design_tsaulas(12).unwrap());
        let c = leakage(&design_cotsaulas(12).unwrap());
        let a = leakage(&design_aulas(12).unwrap());
        let s = leakage(&design_saulas(12).unwrap());
        let na = leakage(&design_nested(6, 6).unwrap());
        assert!(t < c && c < a && (a - s).abs() < 1e-12 && s < na);
    }

    #[test]
    fn matrix_is_complex_symmetric() {
        let c = coupling_matrix::<f64>(&design_tsaulas(9).unwrap(), &CouplingModel::paper_v());
        assert_eq!(c, c.transpose());
        assert!(c.diagonal().iter().all(|z| *z == Complex::new(1.0, 0.0)));
    }

    #[test]
    fn errors() {
        assert!(coupling_leakage(&CMatrix::<f64>::zeros(3, 3)).is_err());
        assert!(coupling_leakage(&CMatrix::<f64>::zeros(2, 3)).is_err());
        assert!(CouplingModel::preset("bogus").is_err());
    }

    #[test]
    fn single_precision_agrees() {
        let a = design_tsaulas(12).unwrap();
        let l32 = coupling_leakage(&coupling_matrix::<f32>(&a, &CouplingModel::paper_v())).unwrap();
        assert_abs_diff_eq!(l32 as f64, leakage(&a), epsilon = 1e-5);
    }
}
