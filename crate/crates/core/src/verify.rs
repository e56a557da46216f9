//! Brute-force oracle for the closed-form co-array properties of the AULAs
//! family. Everything observed here comes from enumerating difference and
//! sum sets; the closed forms only supply the expected values.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarray::{analyze, difference_set, sum_set, CoarrayReport, LagSet};
use crate::error::{Error, Result};
use crate::geometry::{design_aulas, inbuilt_shared_locations, max_spacing, Family, SensorArray};

/// Default sweep for AULAs, SAULAs and Co-TSAULAs.
pub const SWEEP_RANGE: RangeInclusive<usize> = 9..=64;
/// Default sweep for TSAULAs.
pub const TSAULAS_SWEEP_RANGE: RangeInclusive<usize> = 5..=64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl Claim {
    fn check<T: std::fmt::Debug + PartialEq>(name: &str, expected: T, observed: T) -> Claim {
        Claim {
            name: name.to_string(),
            pass: expected == observed,
            expected: format!("{expected:?}"),
            observed: format!("{observed:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub family: Family,
    #[serde(rename = "N")]
    pub n: usize,
    pub closed_form_udofs: u64,
    pub brute_force_udofs: u64,
    /// Nonnegative lags missing from the difference set below its maximum.
    pub dc_hole_positions: Vec<i64>,
    /// Contiguous self-sum segment asserted by the lemma, where it has one.
    pub sc_segment: Option<(i64, i64)>,
    pub claims: Vec<Claim>,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Claim> {
        self.claims.iter().filter(|c| !c.pass)
    }
}

/// Enumerated sets for one array, independent of the coarray metrics code.
struct Oracle {
    dc: LagSet,
    sc: LagSet,
    sdc: BTreeSet<i64>,
    positions: Vec<i64>,
}

impl Oracle {
    fn new(p: &SensorArray) -> Oracle {
        let dc = difference_set(p, p);
        let sc = sum_set(p, p);
        let sdc = dc.iter().chain(sc.iter()).collect();
        Oracle {
            dc,
            sc,
            sdc,
            positions: p.positions().to_vec(),
        }
    }

    fn reach(&self) -> i64 {
        let mut k = 0;
        while self.sdc.contains(&(k + 1)) && self.sdc.contains(&-(k + 1)) {
            k += 1;
        }
        k
    }

    fn udofs(&self) -> u64 {
        2 * self.reach() as u64 + 1
    }

    fn sdc_max(&self) -> i64 {
        *self.sdc.iter().next_back().unwrap()
    }

    fn sdc_holes(&self, positive: bool) -> Vec<i64> {
        let max = self.sdc_max();
        let lags: Vec<i64> = if positive {
            (1..=max).collect()
        } else {
            (-max..=-1).rev().map(|l| -l).collect()
        };
        lags.into_iter()
            .filter(|&l| !self.sdc.contains(&if positive { l } else { -l }))
            .collect()
    }

    fn dc_holes_in(&self, hi: i64) -> Vec<i64> {
        (0..=hi).filter(|&l| !self.dc.contains(l)).collect()
    }

    fn sc_covers(&self, lo: i64, hi: i64) -> bool {
        (lo..=hi).all(|l| self.sc.contains(l))
    }

    fn weights(&self) -> (u64, u64, u64) {
        let w = |f: i64| {
            let mut c = 0;
            for a in &self.positions {
                for b in &self.positions {
                    if a - b == f {
                        c += 1;
                    }
                }
            }
            c
        };
        (w(1), w(2), w(3))
    }
}

fn report(
    family: Family,
    n: usize,
    closed_form_udofs: u64,
    o: &Oracle,
    sc_segment: Option<(i64, i64)>,
    mut claims: Vec<Claim>,
) -> LemmaReport {
    let brute_force_udofs = o.udofs();
    claims.insert(
        0,
        Claim::check("udofs", closed_form_udofs, brute_force_udofs),
    );
    LemmaReport {
        family,
        n,
        closed_form_udofs,
        brute_force_udofs,
        dc_hole_positions: o.dc_holes_in(o.dc.max().unwrap_or(0)),
        sc_segment,
        claims,
    }
}

fn require(family: Family, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::Domain(format!(
            "{family} check requires N ≥ {min} (got {n})"
        )));
    }
    Ok(())
}

fn aulas_like(family: Family, n: usize) -> Result<LemmaReport> {
    require(family, n, 9)?;
    let p = family.design(n)?;
    let o = Oracle::new(&p);
    let m = max_spacing(n);
    let n1 = n as i64 - m + 1;
    let hole = n1 * m;
    let shifted = family == Family::Saulas;
    let (lo, hi, closed) = if shifted {
        (hole + m / 2, 2 * hole + 2 * m - 2, 4 * hole + 4 * m - 3)
    } else {
        (hole - m / 2, 2 * hole + m - 2, 4 * hole + 2 * m - 3)
    };
    let w3 = if m > 6 { m - 5 } else { m / 2 } as u64;
    let mut claims = vec![
        Claim::check(
            "dc_single_hole",
            vec![hole],
            o.dc_holes_in(hole + m / 2 - 1),
        ),
        Claim::check("sc_segment", true, o.sc_covers(lo, hi)),
        Claim::check("sc_max", Some(hi), o.sc.max()),
        Claim::check("sc_fills_dc_hole", true, o.sc.contains(hole)),
        Claim::check("weights", ((m - 3) as u64, (m - 4) as u64, w3), o.weights()),
    ];
    if shifted {
        let tail = [hole + 1, hole + 2];
        claims.push(Claim::check(
            "sc_tail_holes_filled_by_dc",
            (false, true),
            (
                tail.iter().any(|&l| o.sc.contains(l)),
                tail.iter().all(|&l| o.dc.contains(l)),
            ),
        ));
    }
    Ok(report(family, n, closed as u64, &o, Some((lo, hi)), claims))
}

/// AULAs: single difference hole at `N1·M` filled by the self-sum set, sum
/// segment `⟨N1M - M/2, 2N1M + M - 2⟩`, `4N1M + 2M - 3` uDOFs, and
/// `w = (M-3, M-4, M-5)` (`w(3) = M/2` when `M = 6`).
pub fn check_lemma1(n: usize) -> Result<LemmaReport> {
    aulas_like(Family::Aulas, n)
}

/// SAULAs: as AULAs with sum segment `⟨N1M + M/2, 2N1M + 2M - 2⟩`,
/// `4N1M + 4M - 3` uDOFs, and sum holes at `N1M + 1, N1M + 2` covered by the
/// difference set.
pub fn check_lemma2(n: usize) -> Result<LemmaReport> {
    aulas_like(Family::Saulas, n)
}

/// TSAULAs: contiguous on `±l` with `l = 2N1M + 2M - 4`, `4N1M + 4M - 7`
/// uDOFs, `M/2 - 1` holes per side at `l + 1, l + 3, …` up to the span end
/// `l + M - 2`, and `w = (0, M-3, 1)`.
pub fn check_lemma3(n: usize) -> Result<LemmaReport> {
    let family = Family::Tsaulas;
    require(family, n, 5)?;
    let p = family.design(n)?;
    let o = Oracle::new(&p);
    let m = max_spacing(n);
    let n1 = n as i64 - m + 1;
    let l = 2 * n1 * m + 2 * m - 4;
    let holes: Vec<i64> = (0..m / 2 - 1).map(|k| l + 1 + 2 * k).collect();
    let mut claims = vec![
        Claim::check("contiguous_reach", l, o.reach()),
        Claim::check("span", l + m - 2, o.sdc_max()),
        Claim::check("holes_positive", holes.clone(), o.sdc_holes(true)),
        Claim::check("holes_negative", holes, o.sdc_holes(false)),
        Claim::check("weights", (0, (m - 3) as u64, 1), o.weights()),
    ];
    if m == 6 {
        claims.push(Claim::check(
            "two_holes_per_side",
            2,
            o.sdc_holes(true).len(),
        ));
    }
    Ok(report(
        family,
        n,
        (4 * n1 * m + 4 * m - 7) as u64,
        &o,
        None,
        claims,
    ))
}

/// Co-TSAULAs (`N1 = N - M`): hole-free over `±(2N1M + 3M - 4)`,
/// `4N1M + 6M - 7` uDOFs, `w = (1, M-3, 2)`.
pub fn check_lemma4(n: usize) -> Result<LemmaReport> {
    let family = Family::Cotsaulas;
    let p = family.design(n)?;
    let o = Oracle::new(&p);
    let m = max_spacing(n);
    let n1 = n as i64 - m;
    let l = 2 * n1 * m + 3 * m - 4;
    let claims = vec![
        Claim::check("contiguous_reach", l, o.reach()),
        Claim::check("span", l, o.sdc_max()),
        Claim::check("hole_free", Vec::<i64>::new(), o.sdc_holes(true)),
        Claim::check("weights", (1, (m - 3) as u64, 2), o.weights()),
    ];
    Ok(report(
        family,
        n,
        (4 * n1 * m + 6 * m - 7) as u64,
        &o,
        None,
        claims,
    ))
}

pub fn check_lemma(family: Family, n: usize) -> Result<LemmaReport> {
    match family {
        Family::Aulas => check_lemma1(n),
        Family::Saulas => check_lemma2(n),
        Family::Tsaulas => check_lemma3(n),
        Family::Cotsaulas => check_lemma4(n),
        other => Err(Error::Validation(format!(
            "no closed-form lemma for {other}"
        ))),
    }
}

/// All four checks over the given ranges, ordered by family then N.
pub fn sweep_lemmas(
    range: RangeInclusive<usize>,
    tsaulas_range: RangeInclusive<usize>,
) -> Result<Vec<LemmaReport>> {
    let jobs: Vec<(Family, usize)> = [Family::Aulas, Family::Saulas]
        .into_iter()
        .flat_map(|f| range.clone().map(move |n| (f, n)))
        .chain(tsaulas_range.map(|n| (Family::Tsaulas, n)))
        .chain(range.clone().map(|n| (Family::Cotsaulas, n)))
        .collect();
    jobs.into_par_iter()
        .map(|(f, n)| check_lemma(f, n))
        .collect()
}

/// AULAs(N) translated by `shift`; a shift of `M/2` gives SAULAs.
pub fn shift_study(n: usize, shift: i64) -> Result<CoarrayReport> {
    require(Family::Aulas, n, 9)?;
    let base = design_aulas(n)?;
    let name = format!("{}+{shift}", base.name());
    Ok(analyze(&base.translated(shift).with_name(name)))
}

/// `|AULAs(N) ∩ AULAs(N+1)| ≥ M - 2`, for `N` where both share the same `M`.
/// `None` when `M` changes between `N` and `N + 1`.
pub fn check_inbuilt(n: usize) -> Result<Option<Claim>> {
    let m = max_spacing(n);
    if m != max_spacing(n + 1) {
        return Ok(None);
    }
    let shared = inbuilt_shared_locations(&design_aulas(n)?, &design_aulas(n + 1)?).len() as i64;
    Ok(Some(Claim {
        name: format!("inbuilt_{n}"),
        expected: format!(">= {}", m - 2),
        observed: shared.to_string(),
        pass: shared >= m - 2,
    }))
}

/// Plain-text pass/fail table, one line per report.
pub fn render_table(reports: &[LemmaReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>3} {:>6} {:>6}  result",
        "family", "N", "closed", "brute"
    );
    for r in reports {
        let failed: Vec<&str> = r.failures().map(|c| c.name.as_str()).collect();
        let verdict = if failed.is_empty() {
            "pass".to_string()
        } else {
            format!("FAIL {}", failed.join(","))
        };
        let _ = writeln!(
            out,
            "{:<10} {:>3} {:>6} {:>6}  {verdict}",
            r.family.name(),
            r.n,
            r.closed_form_udofs,
            r.brute_force_udofs
        );
    }
    out
}
