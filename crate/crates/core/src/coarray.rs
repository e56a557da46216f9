//! Exact difference, sum and sum-difference co-array analytics.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorArray;

/// Sorted, duplicate-free set of integer lags.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LagSet {
    lags: Vec<i64>,
}

impl LagSet {
    pub fn from_unsorted(mut lags: Vec<i64>) -> LagSet {
        lags.sort_unstable();
        lags.dedup();
        LagSet { lags }
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.lags
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.lags.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn contains(&self, lag: i64) -> bool {
        self.lags.binary_search(&lag).is_ok()
    }

    pub fn min(&self) -> Option<i64> {
        self.lags.first().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.lags.last().copied()
    }

    pub fn union(&self, other: &LagSet) -> LagSet {
        LagSet::from_unsorted(self.lags.iter().chain(&other.lags).copied().collect())
    }

    /// Lags that are strictly positive.
    pub fn positive(&self) -> impl Iterator<Item = i64> + '_ {
        self.iter().filter(|&l| l > 0)
    }
}

impl FromIterator<i64> for LagSet {
    fn from_iter<I: IntoIterator<Item = i64>>(iter: I) -> Self {
        LagSet::from_unsorted(iter.into_iter().collect())
    }
}

/// `{b_v - a_u}` over all pairs.
pub fn difference_set(a: &SensorArray, b: &SensorArray) -> LagSet {
    a.positions()
        .iter()
        .flat_map(|&u| b.positions().iter().map(move |&v| v - u))
        .collect()
}

/// `±{a_u + b_v}`: the pairwise sums together with their negatives.
pub fn sum_set(a: &SensorArray, b: &SensorArray) -> LagSet {
    a.positions()
        .iter()
        .flat_map(|&u| b.positions().iter().flat_map(move |&v| [u + v, -(u + v)]))
        .collect()
}

/// Union of the self-difference set and the symmetric self-sum set.
pub fn sum_difference_coarray(p: &SensorArray) -> LagSet {
    difference_set(p, p).union(&sum_set(p, p))
}

/// Largest `m` with `⟨-m, m⟩ ⊆ l`.
pub fn contiguous_reach(l: &LagSet) -> Result<u64> {
    let zero = l
        .lags
        .binary_search(&0)
        .map_err(|_| Error::Domain("lag set does not contain 0".into()))?;
    let up = l.lags[zero..]
        .iter()
        .enumerate()
        .take_while(|&(i, &lag)| lag == i as i64)
        .count() as u64
        - 1;
    let down = l.lags[..=zero]
        .iter()
        .rev()
        .enumerate()
        .take_while(|&(i, &lag)| lag == -(i as i64))
        .count() as u64
        - 1;
    Ok(up.min(down))
}

/// `(uDOFs, CVA) = (2m + 1, 2m)` for the zero-centred contiguous segment.
pub fn contiguous_stats(l: &LagSet) -> Result<(u64, u64)> {
    let m = contiguous_reach(l)?;
    Ok((2 * m + 1, 2 * m))
}

/// Integers strictly between `min(l)` and `max(l)` missing from `l`.
pub fn holes(l: &LagSet) -> Vec<i64> {
    l.lags.windows(2).flat_map(|w| (w[0] + 1)..w[1]).collect()
}

/// Contiguous one-sided length over the one-sided span of the positive lags,
/// `m / max(l)`; a set whose largest lag is 0 has efficiency 1.
pub fn spatial_efficiency(l: &LagSet) -> Result<Ratio<u64>> {
    let m = contiguous_reach(l)?;
    let span = l.max().unwrap_or(0);
    if span <= 0 {
        return Ok(Ratio::from_integer(1));
    }
    Ok(Ratio::new(m, span as u64))
}

/// Number of ordered sensor pairs `(m1, m2)` with `m1 - m2 = f`.
///
/// For `f > 0` each unordered pair at separation `f` contributes exactly one
/// ordered pair, so this also counts the unordered pairs at spacing `f`.
pub fn weight_function(p: &SensorArray, f: i64) -> u64 {
    let pos = p.positions();
    pos.iter()
        .filter(|&&m2| pos.binary_search(&(m2 + f)).is_ok())
        .count() as u64
}

/// `w(f)` for every `f` in the difference co-array.
pub fn weight_table(p: &SensorArray) -> BTreeMap<i64, u64> {
    let mut table = BTreeMap::new();
    for &u in p.positions() {
        for &v in p.positions() {
            *table.entry(u - v).or_insert(0) += 1;
        }
    }
    table
}

/// Full co-array characterisation of one array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarrayReport {
    pub array: String,
    pub n: usize,
    pub dc: LagSet,
    pub sc: LagSet,
    pub sdc: LagSet,
    pub udofs: u64,
    pub cva: u64,
    /// `max(SDC) - min(SDC)`, distinct from the contiguous aperture `cva`.
    pub virtual_aperture: i64,
    pub holes: Vec<i64>,
    pub spatial_efficiency: Ratio<u64>,
    /// `w(f)` for `f ≥ 0`.
    pub weights: BTreeMap<i64, u64>,
}

impl CoarrayReport {
    pub fn hole_count(&self) -> usize {
        self.holes.len()
    }

    pub fn weight(&self, f: i64) -> u64 {
        self.weights.get(&f.abs()).copied().unwrap_or(0)
    }

    pub fn spatial_efficiency_f64(&self) -> f64 {
        *self.spatial_efficiency.numer() as f64 / *self.spatial_efficiency.denom() as f64
    }
}

pub fn analyze(p: &SensorArray) -> CoarrayReport {
    let dc = difference_set(p, p);
    let sc = sum_set(p, p);
    let sdc = dc.union(&sc);
    // The SDC of a non-empty array always holds 0.
    let (udofs, cva) = contiguous_stats(&sdc).expect("SDC contains 0");
    let spatial_efficiency = spatial_efficiency(&sdc).expect("SDC contains 0");
    let virtual_aperture = sdc.max().unwrap_or(0) - sdc.min().unwrap_or(0);
    let holes = holes(&sdc);
    let weights = weight_table(p)
        .into_iter()
        .filter(|&(f, _)| f >= 0)
        .collect();
    CoarrayReport {
        array: p.name().to_string(),
        n: p.len(),
        dc,
        sc,
        sdc,
        udofs,
        cva,
        virtual_aperture,
        holes,
        spatial_efficiency,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::*;

    fn arr(p: &[i64]) -> SensorArray {
        from_positions("t", p).unwrap()
    }

    #[test]
    fn small_sets() {
        let a = arr(&[0, 1]);
        assert_eq!(difference_set(&a, &a).as_slice(), &[-1, 0, 1]);
        assert_eq!(difference_set(&arr(&[0]), &arr(&[5])).as_slice(), &[5]);
        assert_eq!(sum_set(&arr(&[0]), &arr(&[0])).as_slice(), &[0]);
        assert_eq!(sum_difference_coarray(&a).as_slice(), &[-2, -1, 0, 1, 2]);
    }

    #[test]
    fn aulas9_difference_hole() {
        let a = design_aulas(9).unwrap();
        let dc = difference_set(&a, &a);
        let missing: Vec<i64> = (0..=26).filter(|&l| !dc.contains(l)).collect();
        assert_eq!(missing, vec![24]);
    }

    #[test]
    fn self_sum_segments() {
        let a = design_aulas(9).unwrap();
        let sc = sum_set(&a, &a);
        assert!((21..=52).all(|l| sc.contains(l)));
        assert_eq!(sc.max(), Some(52));
        let s = design_saulas(9).unwrap();
        let sc = sum_set(&s, &s);
        assert!((27..=58).all(|l| sc.contains(l)));
        assert_eq!(sc.max(), Some(58));
    }

    #[test]
    fn contiguous_stats_cases() {
        let l = LagSet::from_unsorted(vec![-1, 0, 1]);
        assert_eq!(contiguous_stats(&l).unwrap(), (3, 2));
        // Asymmetric input: the shorter side bounds the segment.
        let l = LagSet::from_unsorted(vec![-1, 0, 1, 2, 3]);
        assert_eq!(contiguous_stats(&l).unwrap(), (3, 2));
        assert!(contiguous_stats(&LagSet::from_unsorted(vec![1, 2])).is_err());
        assert_eq!(
            contiguous_stats(&LagSet::from_unsorted(vec![0])).unwrap(),
            (1, 0)
        );
    }

    #[test]
    fn holes_and_efficiency() {
        assert_eq!(holes(&LagSet::from_unsorted(vec![0, 2])), vec![1]);
        let full = LagSet::from_unsorted((-5..=5).collect());
        assert!(holes(&full).is_empty());
        assert_eq!(spatial_efficiency(&full).unwrap(), Ratio::from_integer(1));
        assert_eq!(
            spatial_efficiency(&LagSet::from_unsorted(vec![0])).unwrap(),
            Ratio::from_integer(1)
        );
    }

    #[test]
    fn twelve_sensor_characteristics() {
        let cases = [
            (design_aulas(12).unwrap(), 177, 0, Ratio::from_integer(1)),
            (design_saulas(12).unwrap(), 189, 0, Ratio::from_integer(1)),
            (design_tsaulas(12).unwrap(), 185, 4, Ratio::new(92, 96)),
            (
                design_cotsaulas(12).unwrap(),
                173,
                0,
                Ratio::from_integer(1),
            ),
            (design_nested(6, 6).unwrap(), 95, 60, Ratio::new(47, 82)),
        ];
        for (a, udofs, nholes, se) in cases {
            let r = analyze(&a);
            assert_eq!(r.udofs, udofs, "{}", a.name());
            assert_eq!(r.cva, udofs - 1);
            assert_eq!(r.hole_count(), nholes, "{}", a.name());
            assert_eq!(r.spatial_efficiency, se, "{}", a.name());
        }
        let t = analyze(&design_tsaulas(12).unwrap());
        assert_eq!(t.holes, vec![-95, -93, 93, 95]);
    }

    #[test]
    fn ula4() {
        let r = analyze(&design_ula(4).unwrap());
        assert_eq!((r.udofs, r.cva, r.hole_count()), (13, 12, 0));
        assert_eq!(r.sdc.as_slice(), &(-6..=6).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn twelve_sensor_weights() {
        let w = |a: SensorArray| [1, 2, 3].map(|f| weight_function(&a, f));
        assert_eq!(w(design_aulas(12).unwrap()), [3, 2, 3]);
        assert_eq!(w(design_saulas(12).unwrap()), [3, 2, 3]);
        assert_eq!(w(design_tsaulas(12).unwrap()), [0, 3, 1]);
        assert_eq!(w(design_cotsaulas(12).unwrap()), [1, 3, 2]);
        assert_eq!(w(design_nested(6, 6).unwrap()), [6, 5, 4]);
        let a = design_aulas(12).unwrap();
        assert_eq!(weight_function(&a, 0), 12);
        assert_eq!(weight_function(&a, -1), 3);
    }
}
