//! Limit sets, the boundary map, and regularity diagnostics.
//!
//! Everything here works on finite samples: a set is replaced by the sample
//! points of its balls, and an image ω(X) by the images of those points.
//! Diameters are therefore sampled diameters, which under-estimate the true
//! ones by at most twice the (image of the) covering radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{antipodality_margin, attracting_flag, flag_distance, regularity_gap, Flag, FlagType};
use crate::freeprod::{enumerate_words, BoundaryPoint, ReducedWord};
use crate::linalg::GroupElement;
use crate::pingpong::{BallSet, Cover, PingPongSystem};

/// Distances at or below this are indistinguishable from zero for unit
/// frames in double precision.
pub const DISTANCE_RESOLUTION: f64 = 1e-14;

/// Sampling density shared by the limit-set routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleOptions {
    pub samples_per_ball: usize,
    pub seed: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self { samples_per_ball: 16, seed: 0 }
    }
}

/// Sample points of a ball union, flattened.
pub fn sample_set(set: &BallSet, opts: &SampleOptions) -> Result<Vec<Flag>> {
    Ok(Cover::new(set, opts.samples_per_ball, opts.seed)?
        .points
        .into_iter()
        .flatten()
        .collect())
}

/// Largest pairwise distance, with values below [`DISTANCE_RESOLUTION`]
/// reported as 0.
pub fn sampled_diameter(points: &[Flag]) -> Result<f64> {
    let mut diam = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            diam = diam.max(flag_distance(&points[i], &points[j])?);
        }
    }
    Ok(if diam <= DISTANCE_RESOLUTION { 0.0 } else { diam })
}

/// Index of the point minimizing the largest distance to the others.
pub fn one_center(points: &[Flag]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::Invalid("no points".into()));
    }
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let mut worst = 0.0f64;
        for q in points {
            worst = worst.max(flag_distance(p, q)?);
            if worst >= best.1 {
                break;
            }
        }
        if worst < best.1 {
            best = (i, worst);
        }
    }
    Ok(best.0)
}

/// Sampled source region of a word: the union of the sets other than the
/// one belonging to its initial letter's factor.
struct Sources<'a> {
    system: &'a PingPongSystem,
    opts: SampleOptions,
    cache: Vec<Option<Vec<Flag>>>,
}

impl<'a> Sources<'a> {
    fn new(system: &'a PingPongSystem, opts: SampleOptions) -> Self {
        Self { system, opts, cache: vec![None; system.sets.len() + 1] }
    }

    fn for_word(&mut self, w: &ReducedWord) -> Result<&[Flag]> {
        let slot = w.initial_factor().unwrap_or(self.system.sets.len());
        if self.cache[slot].is_none() {
            let set = self.system.union_except(w.initial_factor())?;
            self.cache[slot] = Some(sample_set(&set, &self.opts)?);
        }
        Ok(self.cache[slot].as_deref().expect("filled"))
    }
}

fn image_of(w: &ReducedWord, points: &[Flag]) -> Result<Vec<Flag>> {
    points.iter().map(|p| w.act_on(p)).collect()
}

/// Result of following a nested chain of images.
#[derive(Debug, Clone)]
pub struct LimitPoint {
    pub flag: Flag,
    pub diameter: f64,
    pub n_used: usize,
    /// Sampled diameter of each image along the chain.
    pub diameters: Vec<f64>,
}

/// Checks that each word is a proper terminal subword of the next.
pub fn check_chain(prefixes: &[ReducedWord]) -> Result<()> {
    if let Some(i) = prefixes.iter().position(ReducedWord::is_empty) {
        return Err(Error::NotAlternating(format!("prefix {i} is empty")));
    }
    for (i, pair) in prefixes.windows(2).enumerate() {
        if pair[1].rel_length() <= pair[0].rel_length() || !pair[0].is_terminal_subword_of(&pair[1]) {
            return Err(Error::NotAlternating(format!(
                "prefix {} does not extend prefix {i}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Follows the nested images ω₁(X₁) ⊃ ω₂(X₂) ⊃ … (X_n the sets not owned by
/// the initial letter of ω_n) until the sampled diameter drops below `eps`,
/// and returns the 1-center of the last image.
pub fn limit_point(
    prefixes: &[ReducedWord],
    system: &PingPongSystem,
    eps: f64,
    n_max: usize,
    opts: &SampleOptions,
) -> Result<LimitPoint> {
    check_chain(prefixes)?;
    let mut sources = Sources::new(system, *opts);
    let mut diameters = Vec::new();
    let steps = n_max.min(prefixes.len());
    for (n, w) in prefixes.iter().take(steps).enumerate() {
        let image = image_of(w, sources.for_word(w)?)?;
        let diam = sampled_diameter(&image)?;
        if let Some(&prev) = diameters.last() {
            if diam > prev {
                return Err(Error::NestingBroken { step: n + 1, previous: prev, current: diam });
            }
        }
        diameters.push(diam);
        if diam < eps {
            let c = one_center(&image)?;
            return Ok(LimitPoint {
                flag: image[c].clone(),
                diameter: diam,
                n_used: n + 1,
                diameters,
            });
        }
    }
    Err(Error::NoConvergence {
        eps,
        n_max: steps,
        last: diameters.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Sampled diameters of ω_n(X_n) for every prefix, without stopping early.
pub fn diameter_trajectory(prefixes: &[ReducedWord], system: &PingPongSystem, opts: &SampleOptions) -> Result<Vec<f64>> {
    check_chain(prefixes)?;
    let mut sources = Sources::new(system, *opts);
    prefixes
        .iter()
        .map(|w| sampled_diameter(&image_of(w, sources.for_word(w)?)?))
        .collect()
}

/// One limit-set sample point.
#[derive(Debug, Clone)]
pub struct LimitSamplePoint {
    pub flag: Flag,
    pub word: ReducedWord,
    pub diam: f64,
}

#[derive(Debug, Clone)]
pub struct LimitSample {
    pub flag_type: FlagType,
    pub points: Vec<LimitSamplePoint>,
}

/// One point per reduced word of relative length exactly `depth`: the
/// 1-center of the sampled image of its source region. Depth 0 gives the
/// ball centers.
pub fn limit_set_sample(system: &PingPongSystem, depth: usize, identity_tol: f64, opts: &SampleOptions) -> Result<LimitSample> {
    let mut points = Vec::new();
    if depth == 0 {
        for set in &system.sets {
            let cover = Cover::new(set, opts.samples_per_ball, opts.seed)?;
            for (ball, pts) in set.balls().iter().zip(&cover.points) {
                points.push(LimitSamplePoint {
                    flag: ball.center.clone(),
                    word: ReducedWord::empty(),
                    diam: sampled_diameter(pts)?,
                });
            }
        }
    } else {
        let alphabets = system.alphabets(identity_tol)?;
        let mut sources = Sources::new(system, *opts);
        for w in enumerate_words(&alphabets, depth).filter(|w| w.rel_length() == depth) {
            let image = image_of(&w, sources.for_word(&w)?)?;
            let c = one_center(&image)?;
            points.push(LimitSamplePoint {
                flag: image[c].clone(),
                diam: sampled_diameter(&image)?,
                word: w,
            });
        }
    }
    Ok(LimitSample { flag_type: system.flag_type.clone(), points })
}

/// ξ(ε): Type I points map to translates of attracting flags of factor
/// elements, Type II points to limits along their letter expansion.
pub fn boundary_map(point: &BoundaryPoint, system: &PingPongSystem, eps: f64, n_max: usize, opts: &SampleOptions) -> Result<Flag> {
    match point {
        BoundaryPoint::TypeI { prefix, tail } => {
            let f = attracting_flag(tail.element(), &system.flag_type)?;
            prefix.act_on(&f)
        }
        BoundaryPoint::TypeII { .. } => {
            let start = point.prefix().rel_length() + 1;
            let prefixes = (start..=start + n_max)
                .map(|n| point.truncation(n))
                .collect::<Result<Vec<_>>>()?;
            Ok(limit_point(&prefixes, system, eps, n_max, opts)?.flag)
        }
    }
}

/// Options of [`flag_convergence_diagnostic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticOptions {
    /// Gap that counts as "large" for the regular verdict.
    pub gap_threshold: f64,
    /// Diameter the probe images must shrink below.
    pub eps: f64,
    pub sampling: SampleOptions,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self { gap_threshold: 5.0, eps: 1e-6, sampling: SampleOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub n: usize,
    pub gap: f64,
    pub diameter: f64,
    pub center_to_attractor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticVerdict {
    RegularConverging,
    NotRegular,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub rows: Vec<DiagnosticRow>,
    pub verdict: DiagnosticVerdict,
}

/// Gaps of g_n, diameters of g_n(probe), and how far the image sits from the
/// attracting flag of g_n.
pub fn flag_convergence_diagnostic(
    seq: &[GroupElement],
    t: &FlagType,
    probe: &BallSet,
    opts: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    let pts = sample_set(probe, &opts.sampling)?;
    let mut rows = Vec::new();
    for (n, g) in seq.iter().enumerate() {
        let image: Vec<Flag> = pts.iter().map(|p| crate::flags::act(g, p)).collect::<Result<_>>()?;
        let diameter = sampled_diameter(&image)?;
        let center = &image[one_center(&image)?];
        let center_to_attractor = attracting_flag(g, t).ok().and_then(|a| flag_distance(&a, center).ok());
        rows.push(DiagnosticRow { n: n + 1, gap: regularity_gap(g, t), diameter, center_to_attractor });
    }
    let verdict = match rows.last() {
        None => DiagnosticVerdict::Inconclusive,
        Some(last) => {
            let monotone = rows.windows(2).all(|w| w[1].diameter <= w[0].diameter);
            if last.gap >= opts.gap_threshold && last.gap > rows[0].gap && monotone && last.diameter < opts.eps {
                DiagnosticVerdict::RegularConverging
            } else if rows.iter().all(|r| r.gap < opts.gap_threshold) {
                DiagnosticVerdict::NotRegular
            } else {
                DiagnosticVerdict::Inconclusive
            }
        }
    };
    Ok(DiagnosticReport { rows, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub first: usize,
    pub second: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub pairs_checked: usize,
    pub merged_pairs: usize,
    /// Smallest antipodality margin over pairs that were not merged.
    pub min_margin: Option<f64>,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Pairs with equal words, or closer than `merge_threshold`, are taken to be
/// the same limit point; every other pair must be antipodal with margin
/// above `tol`.
pub fn antipodality_audit(sample: &LimitSample, tol: f64, merge_threshold: f64) -> Result<AuditReport> {
    let pts = &sample.points;
    let mut report = AuditReport { pairs_checked: 0, merged_pairs: 0, min_margin: None, violations: Vec::new() };
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            report.pairs_checked += 1;
            if pts[i].word.same_letters(&pts[j].word) && !pts[i].word.is_empty()
                || flag_distance(&pts[i].flag, &pts[j].flag)? < merge_threshold
            {
                report.merged_pairs += 1;
                continue;
            }
            let m = antipodality_margin(&pts[i].flag, &pts[j].flag)?;
            report.min_margin = Some(report.min_margin.map_or(m, |x: f64| x.min(m)));
            if m <= tol {
                report.violations.push(AuditViolation { first: i, second: j, margin: m });
            }
        }
    }
    Ok(report)
}
