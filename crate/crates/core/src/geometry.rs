//! Closed-form sensor layouts.
//!
//! Positions are integers in units of d = λ/2. The AULAs family is driven by
//! the maximum inter-element spacing `M = 2⌈N/4⌉` and the first-ULA length
//! `N1`; see [`AulasParams`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit tag carried by every array descriptor.
pub const UNIT: &str = "half-wavelength";

/// A named, strictly increasing set of sensor positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ArrayDescriptor", into = "ArrayDescriptor")]
pub struct SensorArray {
    name: String,
    positions: Vec<i64>,
}

/// JSON interchange form: `{"name": .., "unit": "half-wavelength", "positions": [..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArrayDescriptor {
    pub name: String,
    pub unit: String,
    pub positions: Vec<i64>,
}

impl TryFrom<ArrayDescriptor> for SensorArray {
    type Error = Error;

    fn try_from(d: ArrayDescriptor) -> Result<Self> {
        if d.unit != UNIT {
            return Err(Error::Validation(format!(
                "unsupported unit {:?}, expected {UNIT:?}",
                d.unit
            )));
        }
        from_positions(&d.name, &d.positions)
    }
}

impl From<SensorArray> for ArrayDescriptor {
    fn from(a: SensorArray) -> Self {
        ArrayDescriptor {
            name: a.name,
            unit: UNIT.to_string(),
            positions: a.positions,
        }
    }
}

impl SensorArray {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `max - min` of the physical positions.
    pub fn aperture(&self) -> i64 {
        self.positions.last().unwrap() - self.positions[0]
    }

    /// Consecutive gaps between sorted positions.
    pub fn spacings(&self) -> Vec<i64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The same layout moved by `shift` units.
    pub fn translated(&self, shift: i64) -> SensorArray {
        SensorArray {
            name: self.name.clone(),
            positions: self.positions.iter().map(|p| p + shift).collect(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> SensorArray {
        self.name = name.into();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serialises")
    }

    pub fn from_json(s: &str) -> Result<SensorArray> {
        serde_json::from_str(s).map_err(|e| Error::Validation(e.to_string()))
    }
}

impl fmt::Display for SensorArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.name, self.positions)
    }
}

/// Structural parameters shared by the AULAs family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AulasParams {
    pub n: usize,
    /// Maximum inter-element spacing, always even.
    pub m: i64,
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
}

/// `M = 2⌈N/4⌉`.
pub fn max_spacing(n: usize) -> i64 {
    2 * (n as i64 + 3).div_euclid(4)
}

impl AulasParams {
    /// AULAs / SAULAs parameters, valid for `N ≥ 9`.
    pub fn aulas(n: usize) -> Result<Self> {
        if n < 9 {
            return Err(Error::Domain(format!("AULAs requires N ≥ 9 (got {n})")));
        }
        let m = max_spacing(n);
        Ok(AulasParams {
            n,
            m,
            n1: n as i64 - m + 1,
            n2: m / 2 - 1,
            n3: m / 2 - 2,
        })
    }

    /// TSAULAs parameters, valid for `N ≥ 5`.
    pub fn tsaulas(n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::Domain(format!("TSAULAs requires N ≥ 5 (got {n})")));
        }
        let m = max_spacing(n);
        Ok(AulasParams {
            n,
            m,
            n1: n as i64 - m + 1,
            n2: m / 2 - 1,
            n3: m / 2 - 1,
        })
    }

    /// Co-TSAULAs parameters: `N1 = N - M`, requires `N1 ≥ 1` and `M ≥ 6`.
    pub fn cotsaulas(n: usize) -> Result<Self> {
        let m = max_spacing(n);
        let n1 = n as i64 - m;
        if n1 < 1 || m < 6 {
            return Err(Error::Domain(format!(
                "Co-TSAULAs requires N - M ≥ 1 and M ≥ 6 (got N = {n}, M = {m})"
            )));
        }
        Ok(AulasParams {
            n,
            m,
            n1,
            n2: m / 2 - 1,
            n3: m / 2 - 1,
        })
    }
}

fn assemble(name: String, n: usize, parts: impl IntoIterator<Item = i64>) -> SensorArray {
    let mut positions: Vec<i64> = parts.into_iter().collect();
    positions.sort_unstable();
    positions.dedup();
    debug_assert_eq!(
        positions.len(),
        n,
        "{name} layout must have N distinct sensors"
    );
    SensorArray { name, positions }
}

/// AULAs: a sparse ULA of spacing `M`, two dense ULAs and two separate sensors.
pub fn design_aulas(n: usize) -> Result<SensorArray> {
    let AulasParams { m, n1, .. } = AulasParams::aulas(n)?;
    let h = m / 2;
    let sparse = (0..n1).map(|i| i * m);
    let dense_a = (1..=h).map(|k| n1 * m - h - 1 + k);
    let dense_b = (1..h).map(|k| n1 * m + k);
    Ok(assemble(
        "aulas".into(),
        n,
        sparse.chain(dense_a).chain(dense_b),
    ))
}

/// SAULAs: AULAs translated by `M/2`, which moves the sum co-array by `M`.
pub fn design_saulas(n: usize) -> Result<SensorArray> {
    let AulasParams { m, n1, .. } = AulasParams::aulas(n)?;
    let h = m / 2;
    let sparse = (0..n1).map(|i| h + i * m);
    let dense_a = (1..=h).map(|k| n1 * m - 1 + k);
    let dense_b = (1..h).map(|k| n1 * m + h + k);
    Ok(assemble(
        "saulas".into(),
        n,
        sparse.chain(dense_a).chain(dense_b),
    ))
}

/// TSAULAs: the dense parts of SAULAs thinned to spacing 2, plus one sensor
/// relocated to `-N1·M - M/2 + 1`. No two sensors are one unit apart.
pub fn design_tsaulas(n: usize) -> Result<SensorArray> {
    let AulasParams { m, n1, .. } = AulasParams::tsaulas(n)?;
    Ok(assemble("tsaulas".into(), n, transformed_core(m, n1)))
}

/// Co-TSAULAs: TSAULAs with the last sparse-ULA sensor moved to the tail of
/// the third ULA at unit spacing.
pub fn design_cotsaulas(n: usize) -> Result<SensorArray> {
    let AulasParams { m, n1, .. } = AulasParams::cotsaulas(n)?;
    let tail = n1 * m + 3 * m / 2 - 2;
    Ok(assemble(
        "cotsaulas".into(),
        n,
        transformed_core(m, n1).chain(std::iter::once(tail)),
    ))
}

fn transformed_core(m: i64, n1: i64) -> impl Iterator<Item = i64> {
    let h = m / 2;
    let sparse = (0..n1).map(move |i| h + i * m);
    let second = (1..h).map(move |k| n1 * m - h + 2 * k);
    let lone = std::iter::once(-n1 * m - h + 1);
    let third = (1..h).map(move |k| n1 * m + h - 1 + 2 * k);
    sparse.chain(second).chain(lone).chain(third)
}

pub fn design_ula(n: usize) -> Result<SensorArray> {
    if n < 1 {
        return Err(Error::Domain("ULA requires N ≥ 1".into()));
    }
    Ok(assemble("ula".into(), n, 0..n as i64))
}

/// Two-level nested array: a dense ULA of `n1` sensors followed by a sparse
/// ULA of `n2` sensors at spacing `n1 + 1`, anchored so the first sensor sits
/// at 0: `{0..n1-1} ∪ {(n1+1)k - 1 : k = 1..n2}`.
pub fn design_nested(n1: usize, n2: usize) -> Result<SensorArray> {
    if n1 < 1 || n2 < 1 {
        return Err(Error::Domain(format!(
            "nested array requires N1, N2 ≥ 1 (got {n1}, {n2})"
        )));
    }
    let step = n1 as i64 + 1;
    let dense = 0..n1 as i64;
    let sparse = (1..=n2 as i64).map(|k| step * k - 1);
    Ok(assemble("nested".into(), n1 + n2, dense.chain(sparse)))
}

/// Validates and sorts a user-supplied layout.
pub fn from_positions(name: &str, positions: &[i64]) -> Result<SensorArray> {
    if positions.is_empty() {
        return Err(Error::Validation(
            "array must contain at least one sensor".into(),
        ));
    }
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Validation(format!(
            "duplicate sensor position {}",
            w[0]
        )));
    }
    Ok(SensorArray {
        name: name.to_string(),
        positions: sorted,
    })
}

/// Positions present in both arrays.
pub fn inbuilt_shared_locations(a: &SensorArray, b: &SensorArray) -> BTreeSet<i64> {
    let b: BTreeSet<i64> = b.positions.iter().copied().collect();
    a.positions
        .iter()
        .copied()
        .filter(|p| b.contains(p))
        .collect()
}

/// Generated array families, as named on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Aulas,
    Saulas,
    Tsaulas,
    Cotsaulas,
    Ula,
    Nested,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Aulas,
        Family::Saulas,
        Family::Tsaulas,
        Family::Cotsaulas,
        Family::Ula,
        Family::Nested,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Aulas => "aulas",
            Family::Saulas => "saulas",
            Family::Tsaulas => "tsaulas",
            Family::Cotsaulas => "cotsaulas",
            Family::Ula => "ula",
            Family::Nested => "nested",
        }
    }

    /// Smallest sensor count the family accepts.
    pub fn min_sensors(self) -> usize {
        match self {
            Family::Aulas | Family::Saulas | Family::Cotsaulas => 9,
            Family::Tsaulas => 5,
            Family::Ula => 1,
            Family::Nested => 2,
        }
    }

    /// Builds the `n`-sensor member. Nested arrays split `n` as
    /// `N1 = ⌊n/2⌋`, `N2 = n - N1`.
    pub fn design(self, n: usize) -> Result<SensorArray> {
        match self {
            Family::Aulas => design_aulas(n),
            Family::Saulas => design_saulas(n),
            Family::Tsaulas => design_tsaulas(n),
            Family::Cotsaulas => design_cotsaulas(n),
            Family::Ula => design_ula(n),
            Family::Nested => design_nested(n / 2, n - n / 2),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key || (key == "na" && *f == Family::Nested))
            .ok_or_else(|| Error::Validation(format!("unknown array family {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aulas_nine_and_twelve() {
        assert_eq!(
            design_aulas(9).unwrap().positions(),
            &[0, 6, 12, 18, 21, 22, 23, 25, 26]
        );
        assert_eq!(
            design_aulas(12).unwrap().positions(),
            &[0, 6, 12, 18, 24, 30, 36, 39, 40, 41, 43, 44]
        );
    }

    #[test]
    fn aulas_rejects_small_n() {
        let err = design_aulas(8).unwrap_err();
        assert_eq!(err, Error::Domain("AULAs requires N ≥ 9 (got 8)".into()));
        assert!(design_saulas(8).is_err());
    }

    #[test]
    fn saulas_nine_and_twelve() {
        assert_eq!(
            design_saulas(9).unwrap().positions(),
            &[3, 9, 15, 21, 24, 25, 26, 28, 29]
        );
        assert_eq!(
            design_saulas(12).unwrap().positions(),
            &[3, 9, 15, 21, 27, 33, 39, 42, 43, 44, 46, 47]
        );
    }

    #[test]
    fn tsaulas_nine_and_twelve() {
        assert_eq!(
            design_tsaulas(9).unwrap().positions(),
            &[-26, 3, 9, 15, 21, 23, 25, 28, 30]
        );
        assert_eq!(
            design_tsaulas(12).unwrap().positions(),
            &[-44, 3, 9, 15, 21, 27, 33, 39, 41, 43, 46, 48]
        );
        assert!(design_tsaulas(4).is_err());
        assert_eq!(design_tsaulas(5).unwrap().len(), 5);
    }

    #[test]
    fn cotsaulas_nine_and_twelve() {
        assert_eq!(
            design_cotsaulas(9).unwrap().positions(),
            &[-20, 3, 9, 15, 17, 19, 22, 24, 25]
        );
        assert_eq!(
            design_cotsaulas(12).unwrap().positions(),
            &[-38, 3, 9, 15, 21, 27, 33, 35, 37, 40, 42, 43]
        );
        // N = 8 gives M = 4 < 6.
        assert!(design_cotsaulas(8).is_err());
    }

    #[test]
    fn ula_and_nested() {
        assert_eq!(design_ula(3).unwrap().positions(), &[0, 1, 2]);
        assert_eq!(design_ula(1).unwrap().positions(), &[0]);
        assert!(design_ula(0).is_err());
        assert_eq!(
            design_nested(6, 6).unwrap().positions(),
            &[0, 1, 2, 3, 4, 5, 6, 13, 20, 27, 34, 41]
        );
        assert_eq!(design_nested(1, 1).unwrap().positions(), &[0, 1]);
        assert!(design_nested(0, 3).is_err());
    }

    #[test]
    fn from_positions_sorts_and_validates() {
        assert_eq!(
            from_positions("x", &[0, 6, 3]).unwrap().positions(),
            &[0, 3, 6]
        );
        assert!(matches!(
            from_positions("x", &[0, 0, 1]),
            Err(Error::Validation(_))
        ));
        assert!(from_positions("x", &[]).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        // OCA-SDCA, N = 10: {3, 6, 9, 12} and {5, 10, ..., 30} (P = 3, Q = 5, L = 1).
        let json = r#"{"name": "oca-sdca", "unit": "half-wavelength",
                       "positions": [3, 5, 6, 9, 10, 12, 15, 20, 25, 30]}"#;
        let a = SensorArray::from_json(json).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(SensorArray::from_json(&a.to_json()).unwrap(), a);

        let bad_unit = r#"{"name": "x", "unit": "m", "positions": [0, 1]}"#;
        assert!(SensorArray::from_json(bad_unit).is_err());
        let dup = r#"{"name": "x", "unit": "half-wavelength", "positions": [1, 1]}"#;
        assert!(SensorArray::from_json(dup).is_err());
    }

    #[test]
    fn shared_locations() {
        let a9 = design_aulas(9).unwrap();
        let a12 = design_aulas(12).unwrap();
        assert!(inbuilt_shared_locations(&a9, &a12).len() >= 4);
        assert_eq!(
            inbuilt_shared_locations(&a9, &a9)
                .into_iter()
                .collect::<Vec<_>>(),
            a9.positions()
        );
        let far = a9.translated(1000);
        assert!(inbuilt_shared_locations(&a9, &far).is_empty());

        let s9 = design_saulas(9).unwrap();
        let s10 = design_saulas(10).unwrap();
        assert_eq!(inbuilt_shared_locations(&s9, &s10).len(), 4);
    }

    #[test]
    fn family_parse() {
        assert_eq!("Co-TSAULAs".parse::<Family>().unwrap(), Family::Cotsaulas);
        assert_eq!("na".parse::<Family>().unwrap(), Family::Nested);
        assert!("misc".parse::<Family>().is_err());
        assert_eq!(
            Family::Nested.design(12).unwrap(),
            design_nested(6, 6).unwrap()
        );
    }
}
