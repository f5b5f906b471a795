//! Ball-union compacta on flag manifolds and certified ping-pong.
//!
//! An inclusion g(B) ⊂ Int(A) is certified in two stages. First the image
//! of each source ball is enclosed in a ball around the image of its center,
//! using an image-radius bound computed from g and the center. When that
//! is too coarse the source ball is replaced by a low-discrepancy sample with
//! an estimated covering radius, and each sample point contributes its own
//! enclosing ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{act, antipodality_margin, attracting_flag, flag_distance, regularity_gap, Flag, FlagType};
use crate::freeprod::{enumerate_words, Factor, GeneratorWord, Letter, ReducedWord};
use crate::linalg::{cartan, smallest_singular_value, spectral_norm, GroupElement, Matrix};
use crate::sampling::{covering_radius, sample_ball};

/// Closed metric ball in a flag manifold.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: Flag,
    pub radius: f64,
}

/// Finite union of closed balls, all of one flag type.
#[derive(Debug, Clone)]
pub struct BallSet {
    flag_type: FlagType,
    balls: Vec<Ball>,
}

impl BallSet {
    pub fn new(balls: Vec<Ball>) -> Result<Self> {
        let first = balls
            .first()
            .ok_or_else(|| Error::InvalidBallSet("no balls".into()))?;
        let flag_type = first.center.flag_type().clone();
        for b in &balls {
            if b.center.flag_type() != &flag_type {
                return Err(Error::TypeMismatch {
                    left: flag_type.dims().to_vec(),
                    right: b.center.flag_type().dims().to_vec(),
                });
            }
            if !(b.radius > 0.0 && b.radius < std::f64::consts::FRAC_PI_2) {
                return Err(Error::InvalidBallSet(format!(
                    "radius {} outside (0, pi/2)",
                    b.radius
                )));
            }
        }
        Ok(Self { flag_type, balls })
    }

    pub fn single(center: Flag, radius: f64) -> Result<Self> {
        Self::new(vec![Ball { center, radius }])
    }

    pub fn union<'a>(sets: impl IntoIterator<Item = &'a BallSet>) -> Result<Self> {
        Self::new(sets.into_iter().flat_map(|s| s.balls.iter().cloned()).collect())
    }

    pub fn flag_type(&self) -> &FlagType {
        &self.flag_type
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    /// Largest r − d(f, c) over the balls: how deep `f` sits inside the set
    /// (negative outside).
    pub fn depth(&self, f: &Flag) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for b in &self.balls {
            best = best.max(b.radius - flag_distance(f, &b.center)?);
        }
        Ok(best)
    }

    pub fn contains(&self, f: &Flag) -> Result<bool> {
        Ok(self.depth(f)? >= 0.0)
    }
}

/// max(0, min over balls of d(f, c) − r); zero exactly on the set.
pub fn set_distance_to(s: &BallSet, f: &Flag) -> Result<f64> {
    Ok((-s.depth(f)?).max(0.0))
}

/// Global Lipschitz constant (σ₁/σ_d)² of the action of g.
pub fn lipschitz_bound(g: &GroupElement) -> f64 {
    match cartan(g) {
        Ok(c) => {
            let ratio = c.sigma[0] / c.sigma[c.sigma.len() - 1];
            (ratio * ratio).max(1.0)
        }
        Err(_) => f64::INFINITY,
    }
}

/// Radius of a ball around g·c containing the image of the ball (c, r).
///
/// For each i ∈ Θ, a subspace at angle ≤ r from V_i = span(Q) is the span of
/// Q + Q⊥X with ‖X‖ ≤ tan r. With P spanning gV_i, its image has
/// tangent ‖A X (B + C X)⁻¹‖ ≤ a·t / (b − c·t), where
/// A = P⊥ᵀgQ⊥, B = PᵀgQ, C = PᵀgQ⊥. The result is capped by K(g)·r.
pub fn image_radius(g: &GroupElement, center: &Flag, radius: f64) -> Result<f64> {
    let image = act(g, center)?;
    Ok(image_radius_at(g, center, &image, radius))
}

fn image_radius_at(g: &GroupElement, center: &Flag, image: &Flag, radius: f64) -> f64 {
    let cap = (lipschitz_bound(g) * radius).min(std::f64::consts::FRAC_PI_2);
    if radius <= 0.0 {
        return 0.0;
    }
    let d = center.dim();
    let t = radius.tan();
    // normalize so the blocks stay in range
    let scale = g.matrix().max_abs();
    let gq = g.matrix().scale(1.0 / scale).mul(center.frame());
    let mut worst = 0.0f64;
    for &i in center.flag_type().dims() {
        let p = image.frame().columns(0, i);
        let p_perp = image.frame().columns(i, d);
        let q = gq.columns(0, i);
        let q_perp = gq.columns(i, d);
        let a = spectral_norm(&p_perp.tr_mul(&q_perp));
        let b = smallest_singular_value(&p.tr_mul(&q));
        let c = spectral_norm(&p.tr_mul(&q_perp));
        let denom = b - c * t;
        if !(denom > 0.0) {
            return cap;
        }
        worst = worst.max((a * t / denom).atan());
    }
    worst.min(cap)
}

/// Sample points of every ball of a set, with per-ball covering radii.
#[derive(Debug, Clone)]
pub struct Cover {
    pub points: Vec<Vec<Flag>>,
    pub covering_radii: Vec<f64>,
}

impl Cover {
    pub fn new(set: &BallSet, samples_per_ball: usize, seed: u64) -> Result<Self> {
        let mut points = Vec::new();
        let mut covering_radii = Vec::new();
        for (k, b) in set.balls.iter().enumerate() {
            let pts = sample_ball(&b.center, b.radius, samples_per_ball.max(1), seed, k as u64)?;
            covering_radii.push(covering_radius(&b.center, b.radius, &pts, seed, k as u64)?);
            points.push(pts);
        }
        Ok(Self { points, covering_radii })
    }
}

/// How an inclusion was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Center,
    Sampled,
}

/// Result of an inclusion check g(src) ⊂ Int(dst).
#[derive(Debug, Clone)]
pub enum Inclusion {
    /// Every image lies at least `clearance` (≥ margin) inside dst.
    Certified { clearance: f64, method: Method },
    /// `witness` ∈ src maps outside dst, by `distance`.
    Violated { witness: Flag, distance: f64 },
    /// No point found outside, but the clearance could not be brought above
    /// the margin.
    MarginFailure { clearance: f64 },
}

impl Inclusion {
    pub fn is_certified(&self) -> bool {
        matches!(self, Inclusion::Certified { .. })
    }
}

/// Certifies g(src) ⊂ Int(dst) with the given margin, sampling `samples_per_ball`
/// points per ball when the center bound is not enough.
pub fn certify_inclusion(
    g: &GroupElement,
    src: &BallSet,
    dst: &BallSet,
    margin: f64,
    samples_per_ball: usize,
    seed: u64,
) -> Result<Inclusion> {
    let mut cover = None;
    certify_inclusion_with(g, src, dst, margin, &mut || {
        if cover.is_none() {
            cover = Some(Cover::new(src, samples_per_ball, seed)?);
        }
        Ok(cover.clone().expect("just built"))
    })
}

/// As [`certify_inclusion`], with a caller-supplied (possibly cached) cover.
pub fn certify_inclusion_with(
    g: &GroupElement,
    src: &BallSet,
    dst: &BallSet,
    margin: f64,
    cover: &mut dyn FnMut() -> Result<Cover>,
) -> Result<Inclusion> {
    if src.flag_type != dst.flag_type {
        return Err(Error::TypeMismatch {
            left: src.flag_type.dims().to_vec(),
            right: dst.flag_type.dims().to_vec(),
        });
    }
    if !(margin > 0.0) {
        return Err(Error::Invalid(format!("margin must be positive, got {margin}")));
    }
    let mut overall = f64::INFINITY;
    let mut method = Method::Center;
    let mut pending = Vec::new();
    for (k, b) in src.balls.iter().enumerate() {
        let image = act(g, &b.center)?;
        let r = image_radius_at(g, &b.center, &image, b.radius);
        let clearance = dst.depth(&image)? - r;
        if clearance >= margin {
            overall = overall.min(clearance);
        } else {
            pending.push(k);
        }
    }
    if pending.is_empty() {
        return Ok(Inclusion::Certified { clearance: overall, method });
    }
    method = Method::Sampled;
    let cover = cover()?;
    let mut short = false;
    for k in pending {
        let rho = cover.covering_radii[k];
        let mut ball_clearance = f64::INFINITY;
        for s in &cover.points[k] {
            let image = act(g, s)?;
            let depth = dst.depth(&image)?;
            if depth < 0.0 {
                return Ok(Inclusion::Violated { witness: s.clone(), distance: -depth });
            }
            let r = image_radius_at(g, s, &image, rho);
            ball_clearance = ball_clearance.min(depth - r);
        }
        overall = overall.min(ball_clearance);
        short |= ball_clearance < margin;
    }
    if short {
        Ok(Inclusion::MarginFailure { clearance: overall })
    } else {
        Ok(Inclusion::Certified { clearance: overall, method })
    }
}

/// Contraction record covering all powers of a cyclic factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCertificate {
    /// Radii of the invariant neighborhoods of the attracting flags of α and α⁻¹.
    pub rho_plus: f64,
    pub rho_minus: f64,
    /// Least powers with α^{±K}(B) inside the neighborhoods.
    pub k_plus: u32,
    pub k_minus: u32,
    /// Clearance of α(N₊) ⊂ N₊ and α⁻¹(N₋) ⊂ N₋.
    pub invariance_clearance: f64,
    /// Clearance of the entry inclusions α^{±K}(B) ⊂ N±.
    pub entry_clearance: f64,
    /// Smallest clearance of the direct checks for 1 ≤ |k| < K, if any.
    pub direct_clearance: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum TailOutcome {
    Certified(TailCertificate),
    Failed { check: String },
}

/// Parameters of the cyclic tail search.
#[derive(Debug, Clone, Copy)]
pub struct TailOptions {
    pub margin: f64,
    pub samples_per_ball: usize,
    pub seed: u64,
    /// Largest power tried when waiting for α^k(B) to enter N±.
    pub max_power: u32,
    /// Number of radii tried for N±, geometrically decreasing.
    pub radius_steps: usize,
}

impl TailOptions {
    pub fn new(margin: f64, samples_per_ball: usize, seed: u64) -> Self {
        Self {
            margin,
            samples_per_ball,
            seed,
            max_power: 64,
            radius_steps: 16,
        }
    }
}

fn invariant_neighborhood(g: &GroupElement, fixed: &Flag, a: &BallSet, opts: &TailOptions, side: &'static str) -> Result<(BallSet, f64)> {
    let room = a.depth(fixed)? - opts.margin;
    if !(room > 0.0) {
        return Err(Error::NoInvariantNeighborhood { side });
    }
    let mut rho = 0.95 * room;
    for _ in 0..opts.radius_steps {
        let n = BallSet::single(fixed.clone(), rho.min(1.5))?;
        let inc = certify_inclusion(g, &n, &n, opts.margin.min(0.25 * rho), opts.samples_per_ball, opts.seed)?;
        if let Inclusion::Certified { clearance, .. } = inc {
            return Ok((n, clearance));
        }
        rho *= 0.7;
    }
    Err(Error::NoInvariantNeighborhood { side })
}

/// Certifies α^k(B) ⊂ Int(A) for every k ≠ 0 by trapping high powers in
/// α-invariant neighborhoods of the attracting and repelling flags.
pub fn certify_cyclic_tail(
    alpha: &GroupElement,
    t: &FlagType,
    b: &BallSet,
    a: &BallSet,
    opts: &TailOptions,
) -> Result<TailOutcome> {
    if regularity_gap(alpha, t) <= 0.0 {
        return Err(Error::DegenerateGap {
            index: t.dims()[0],
            detail: "cyclic generator has no singular value gap".into(),
        });
    }
    let a_plus = attracting_flag(alpha, t)?;
    let a_minus = attracting_flag(&alpha.inverse(), t)?;
    let (n_plus, inv_plus) = invariant_neighborhood(alpha, &a_plus, a, opts, "attracting")?;
    let (n_minus, inv_minus) = invariant_neighborhood(&alpha.inverse(), &a_minus, a, opts, "repelling")?;

    let mut entry = f64::INFINITY;
    let mut ks = [0u32; 2];
    for (slot, (sign, n)) in [(1i64, &n_plus), (-1i64, &n_minus)].into_iter().enumerate() {
        let mut found = None;
        for k in 1..=opts.max_power {
            let g = alpha.pow(sign * k as i64);
            if let Inclusion::Certified { clearance, .. } =
                certify_inclusion(&g, b, n, opts.margin.min(0.25 * n.balls[0].radius), opts.samples_per_ball, opts.seed)?
            {
                entry = entry.min(clearance);
                found = Some(k);
                break;
            }
        }
        match found {
            Some(k) => ks[slot] = k,
            None => {
                return Ok(TailOutcome::Failed {
                    check: format!(
                        "alpha^{}k(B) does not enter the invariant neighborhood for k <= {}",
                        if sign > 0 { "" } else { "-" },
                        opts.max_power
                    ),
                })
            }
        }
    }

    let mut direct: Option<f64> = None;
    for (sign, kmax) in [(1i64, ks[0]), (-1i64, ks[1])] {
        for k in 1..kmax {
            let g = alpha.pow(sign * k as i64);
            match certify_inclusion(&g, b, a, opts.margin, opts.samples_per_ball, opts.seed)? {
                Inclusion::Certified { clearance, .. } => {
                    direct = Some(direct.map_or(clearance, |d| d.min(clearance)));
                }
                _ => {
                    return Ok(TailOutcome::Failed {
                        check: format!("direct check alpha^{}(B) in A", sign * k as i64),
                    })
                }
            }
        }
    }
    Ok(TailOutcome::Certified(TailCertificate {
        rho_plus: n_plus.balls[0].radius,
        rho_minus: n_minus.balls[0].radius,
        k_plus: ks[0],
        k_minus: ks[1],
        invariance_clearance: inv_plus.min(inv_minus),
        entry_clearance: entry,
        direct_clearance: direct,
    }))
}

/// A candidate ping-pong system: factor groups and their sets.
#[derive(Debug, Clone)]
pub struct PingPongSystem {
    pub flag_type: FlagType,
    pub factors: Vec<Factor>,
    pub sets: Vec<BallSet>,
}

impl PingPongSystem {
    pub fn new(flag_type: FlagType, factors: Vec<Factor>, sets: Vec<BallSet>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::Invalid("need at least two factors".into()));
        }
        if factors.len() != sets.len() {
            return Err(Error::Invalid(format!(
                "{} factors but {} sets",
                factors.len(),
                sets.len()
            )));
        }
        for f in &factors {
            if f.dim() != flag_type.dim() {
                return Err(Error::DimensionMismatch { expected: flag_type.dim(), found: f.dim() });
            }
        }
        for s in &sets {
            if s.flag_type() != &flag_type {
                return Err(Error::TypeMismatch {
                    left: flag_type.dims().to_vec(),
                    right: s.flag_type().dims().to_vec(),
                });
            }
        }
        Ok(Self { flag_type, factors, sets })
    }

    pub fn names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }

    /// Enumerated nontrivial letters of every factor.
    pub fn alphabets(&self, tol: f64) -> Result<Vec<Vec<Letter>>> {
        self.factors.iter().enumerate().map(|(i, f)| f.letters(i, tol)).collect()
    }

    /// Union of all sets except `skip` (all sets when `None`).
    pub fn union_except(&self, skip: Option<usize>) -> Result<BallSet> {
        BallSet::union(self.sets.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(_, s)| s))
    }
}

/// Parameters of [`certify_ping_pong`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyOptions {
    pub margin: f64,
    pub samples_per_ball: usize,
    pub seed: u64,
    /// Words up to this relative length enter the discreteness probe.
    pub rel_length: usize,
    /// Multiplier on the ball-perturbation bound in the antipodality test.
    pub antipodal_slack: f64,
    pub identity_tol: f64,
    pub tail_max_power: u32,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            margin: 0.01,
            samples_per_ball: 64,
            seed: 0,
            rel_length: 4,
            antipodal_slack: 1.0,
            identity_tol: crate::freeprod::IDENTITY_THRESHOLD,
            tail_max_power: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntipodalityRecord {
    pub first: usize,
    pub second: usize,
    pub margin: f64,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub factor: usize,
    pub element: String,
    pub source: usize,
    pub clearance: f64,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Violated {
        factor: usize,
        element: String,
        source: usize,
        /// Row-major frame of the source flag whose image leaves the target.
        witness_frame: Vec<f64>,
        distance: f64,
    },
    MarginFailure {
        factor: usize,
        element: String,
        clearance: f64,
        reason: String,
    },
}

/// Everything a certification run checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PingPongCertificate {
    pub flag_dims: Vec<usize>,
    pub factor_truncations: Vec<usize>,
    pub checked_rel_length: usize,
    pub options: CertifyOptions,
    pub antipodality: Vec<AntipodalityRecord>,
    pub checks: Vec<CheckRecord>,
    pub min_clearance: Option<f64>,
    pub tail_certificates: Vec<Option<TailCertificate>>,
    pub discreteness: Option<InjectivityReport>,
    /// True when every factor is cyclic with a tail certificate, so no
    /// truncation is involved.
    pub complete: bool,
    pub verdict: Verdict,
}

impl PingPongCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

/// Bound on how far two antipodality margins can drift when the flags move
/// within the given radii.
pub fn antipodality_perturbation(r1: f64, r2: f64) -> f64 {
    let x = 2.0 * (r1 / 2.0).sin();
    let y = 2.0 * (r2 / 2.0).sin();
    (x * x + y * y).sqrt()
}

/// Checks that every pair of balls from different sets is antipodal
/// throughout.
pub fn check_set_antipodality(sets: &[BallSet], slack: f64) -> Result<Vec<AntipodalityRecord>> {
    let mut out = Vec::new();
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            let mut worst: Option<AntipodalityRecord> = None;
            for p in &sets[i].balls {
                for q in &sets[j].balls {
                    let margin = antipodality_margin(&p.center, &q.center)?;
                    let required = slack * antipodality_perturbation(p.radius, q.radius);
                    let rec = AntipodalityRecord { first: i, second: j, margin, required };
                    if margin <= required {
                        return Err(Error::AntipodalityUnverified { first: i, second: j, margin, required });
                    }
                    if worst.as_ref().is_none_or(|w| margin - required < w.margin - w.required) {
                        worst = Some(rec);
                    }
                }
            }
            out.extend(worst);
        }
    }
    Ok(out)
}

fn frame_data(f: &Flag) -> Vec<f64> {
    f.frame().as_slice().to_vec()
}

/// Runs the full ping-pong certification: set antipodality, every enumerated
/// letter against every other set, cyclic tails, and a discreteness probe.
pub fn certify_ping_pong(system: &PingPongSystem, opts: &CertifyOptions) -> Result<PingPongCertificate> {
    let antipodality = check_set_antipodality(&system.sets, opts.antipodal_slack)?;
    let alphabets = system.alphabets(opts.identity_tol)?;
    let mut covers: Vec<Option<Cover>> = vec![None; system.sets.len()];
    let mut checks = Vec::new();
    let mut verdict = Verdict::Certified;

    'outer: for (i, letters) in alphabets.iter().enumerate() {
        for letter in letters {
            let label = letter.word().to_string();
            for j in (0..system.sets.len()).filter(|&j| j != i) {
                let src = &system.sets[j];
                let slot = &mut covers[j];
                let inc = certify_inclusion_with(letter.element(), src, &system.sets[i], opts.margin, &mut || {
                    if slot.is_none() {
                        *slot = Some(Cover::new(src, opts.samples_per_ball, opts.seed)?);
                    }
                    Ok(slot.clone().expect("just built"))
                })?;
                match inc {
                    Inclusion::Certified { clearance, method } => checks.push(CheckRecord {
                        factor: i,
                        element: label.clone(),
                        source: j,
                        clearance,
                        method: Some(method),
                    }),
                    Inclusion::Violated { witness, distance } => {
                        checks.push(CheckRecord {
                            factor: i,
                            element: label.clone(),
                            source: j,
                            clearance: -distance,
                            method: None,
                        });
                        verdict = Verdict::Violated {
                            factor: i,
                            element: label.clone(),
                            source: j,
                            witness_frame: frame_data(&witness),
                            distance,
                        };
                        break 'outer;
                    }
                    Inclusion::MarginFailure { clearance } => {
                        checks.push(CheckRecord {
                            factor: i,
                            element: label.clone(),
                            source: j,
                            clearance,
                            method: None,
                        });
                        if verdict == Verdict::Certified {
                            verdict = Verdict::MarginFailure {
                                factor: i,
                                element: label.clone(),
                                clearance,
                                reason: format!("image of set {j} not inside set {i} with the required margin"),
                            };
                        }
                    }
                }
            }
        }
    }

    let mut tails = vec![None; system.factors.len()];
    if verdict == Verdict::Certified {
        for (i, f) in system.factors.iter().enumerate() {
            if !f.cyclic {
                continue;
            }
            let b = system.union_except(Some(i))?;
            let mut topts = TailOptions::new(opts.margin, opts.samples_per_ball, opts.seed);
            topts.max_power = opts.tail_max_power;
            let outcome = match certify_cyclic_tail(&f.generators[0], &system.flag_type, &b, &system.sets[i], &topts) {
                Ok(o) => o,
                Err(e @ (Error::NoInvariantNeighborhood { .. } | Error::DegenerateGap { .. })) => {
                    TailOutcome::Failed { check: e.to_string() }
                }
                Err(e) => return Err(e),
            };
            match outcome {
                TailOutcome::Certified(c) => tails[i] = Some(c),
                TailOutcome::Failed { check } => {
                    verdict = Verdict::MarginFailure {
                        factor: i,
                        element: "tail".into(),
                        clearance: 0.0,
                        reason: check,
                    };
                    break;
                }
            }
        }
    }

    let discreteness = if verdict == Verdict::Certified {
        Some(injectivity_probe(system, opts.rel_length, opts.identity_tol)?)
    } else {
        None
    };
    let complete = verdict == Verdict::Certified
        && system.factors.iter().zip(&tails).all(|(f, t)| f.cyclic && t.is_some());
    let min_clearance = checks.iter().map(|c| c.clearance).reduce(f64::min);
    Ok(PingPongCertificate {
        flag_dims: system.flag_type.dims().to_vec(),
        factor_truncations: system.factors.iter().map(|f| f.depth).collect(),
        checked_rel_length: opts.rel_length,
        options: *opts,
        antipodality,
        checks,
        min_clearance,
        tail_certificates: tails,
        discreteness,
        complete,
        verdict,
    })
}

/// Distances of enumerated group elements from the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub max_rel_length: usize,
    pub words_checked: usize,
    pub min_distance: Option<f64>,
    pub closest_word: Option<String>,
    /// Words within 1e-6 of the identity (first 20).
    pub near_identity: Vec<String>,
}

/// Operator-norm distance to the identity of every enumerated reduced word
/// of relative length 1..=L.
pub fn injectivity_probe(system: &PingPongSystem, max_rel_length: usize, tol: f64) -> Result<InjectivityReport> {
    const NEAR: f64 = 1e-6;
    let alphabets = system.alphabets(tol)?;
    let names = system.names();
    let d = system.flag_type.dim();
    let mut report = InjectivityReport {
        max_rel_length,
        words_checked: 0,
        min_distance: None,
        closest_word: None,
        near_identity: Vec::new(),
    };
    for w in enumerate_words(&alphabets, max_rel_length).filter(|w| !w.is_empty()) {
        let dist = w.evaluate(d)?.distance_to_identity();
        report.words_checked += 1;
        if report.min_distance.is_none_or(|m| dist < m) {
            report.min_distance = Some(dist);
            report.closest_word = Some(w.encode(&names));
        }
        if dist < NEAR && report.near_identity.len() < 20 {
            report.near_identity.push(w.encode(&names));
        }
    }
    Ok(report)
}

/// Letter for the `k`-th power of a cyclic factor's generator.
pub fn power_letter(factor: &Factor, index: usize, k: i64, tol: f64) -> Result<Letter> {
    factor.letter(index, GeneratorWord::power(1, k), tol)
}

/// Re-evaluates a witness: the distance of g·f outside dst.
pub fn witness_distance(g: &GroupElement, witness: &Flag, dst: &BallSet) -> Result<f64> {
    set_distance_to(dst, &act(g, witness)?)
}

/// Word whose letters are the given factor elements, for diagnostics.
pub fn word_of(letters: Vec<Letter>) -> Result<ReducedWord> {
    ReducedWord::from_letters(letters)
}

/// Flag whose frame is given row-major.
pub fn flag_from_data(t: &FlagType, data: &[f64]) -> Result<Flag> {
    let d = t.dim();
    Flag::new(t.clone(), Matrix::from_row_major(d, d, data.to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn line_ball(angle: f64, r: f64) -> Ball {
        Ball { center: Flag::line_at_angle(angle), radius: r }
    }

    fn schottky() -> PingPongSystem {
        let a = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let b = a.conjugate_by(&GroupElement::rotation(2, FRAC_PI_4)).unwrap();
        let t = FlagType::new(2, vec![1]).unwrap();
        let fa = Factor::new("A", vec![a], 1, true).unwrap();
        let fb = Factor::new("B", vec![b], 1, true).unwrap();
        let sa = BallSet::new(vec![line_ball(0.0, 0.25), line_ball(FRAC_PI_4 * 2.0, 0.25)]).unwrap();
        let sb = BallSet::new(vec![line_ball(FRAC_PI_4, 0.25), line_ball(-FRAC_PI_4, 0.25)]).unwrap();
        PingPongSystem::new(t, vec![fa, fb], vec![sa, sb]).unwrap()
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(lipschitz_bound(&GroupElement::identity(3)), 1.0);
        assert!((lipschitz_bound(&GroupElement::rotation(2, 0.7)) - 1.0).abs() < 1e-12);
        let g = GroupElement::diagonal(&[2.0, 0.5]).unwrap();
        assert!((lipschitz_bound(&g) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn set_distance_examples() {
        let s = BallSet::single(Flag::line_at_angle(0.0), 0.2).unwrap();
        assert_eq!(set_distance_to(&s, &Flag::line_at_angle(0.0)).unwrap(), 0.0);
        assert!((set_distance_to(&s, &Flag::line_at_angle(0.3)).unwrap() - 0.1).abs() < 1e-12);
        let two = BallSet::new(vec![line_ball(0.0, 0.1), line_ball(1.0, 0.1)]).unwrap();
        assert!((set_distance_to(&two, &Flag::line_at_angle(0.6)).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn radii_are_validated() {
        assert!(BallSet::single(Flag::line_at_angle(0.0), 0.0).is_err());
        assert!(BallSet::single(Flag::line_at_angle(0.0), 2.0).is_err());
        assert!(BallSet::new(vec![]).is_err());
    }

    #[test]
    fn image_radius_on_the_line_is_exact_at_the_fixed_point() {
        let g = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let r = image_radius(&g, &Flag::line_at_angle(0.0), 0.3).unwrap();
        assert!((r - (0.3f64.tan() / 81.0).atan()).abs() < 1e-14);
    }

    #[test]
    fn identity_inclusions() {
        let id = GroupElement::identity(2);
        let big = BallSet::single(Flag::line_at_angle(0.0), 0.5).unwrap();
        let small = BallSet::single(Flag::line_at_angle(0.0), 0.3).unwrap();
        assert!(certify_inclusion(&id, &small, &big, 0.1, 16, 0).unwrap().is_certified());
        assert!(!certify_inclusion(&id, &big, &big, 0.1, 16, 0).unwrap().is_certified());
    }

    #[test]
    fn hyperbolic_inclusions() {
        let g = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let e1 = BallSet::single(Flag::line_at_angle(0.0), 0.3).unwrap();
        let e2 = BallSet::single(Flag::line_at_angle(2.0 * FRAC_PI_4), 0.3).unwrap();
        // the repelling line is fixed, so its neighborhood cannot map near e1
        assert!(matches!(
            certify_inclusion(&g, &e2, &e1, 0.05, 32, 0).unwrap(),
            Inclusion::Violated { .. }
        ));
        match certify_inclusion(&g, &e1, &e1, 0.05, 32, 0).unwrap() {
            Inclusion::Certified { clearance, method } => {
                assert_eq!(method, Method::Center);
                let expected = 0.3 - (0.3f64.tan() / 81.0).atan();
                assert!((clearance - expected).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let off = BallSet::single(Flag::line_at_angle(FRAC_PI_4), 0.3).unwrap();
        assert!(certify_inclusion(&g, &off, &e1, 0.05, 32, 0).unwrap().is_certified());
    }

    #[test]
    fn violated_witness_re_evaluates() {
        let g = GroupElement::rotation(2, 1.0);
        let src = BallSet::single(Flag::line_at_angle(0.0), 0.2).unwrap();
        let dst = BallSet::single(Flag::line_at_angle(0.0), 0.3).unwrap();
        match certify_inclusion(&g, &src, &dst, 0.01, 16, 5).unwrap() {
            Inclusion::Violated { witness, distance } => {
                let again = witness_distance(&g, &witness, &dst).unwrap();
                assert!(again > 0.0 && (again - distance).abs() < 1e-15);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn tail_examples() {
        let g = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let t = FlagType::new(2, vec![1]).unwrap();
        let b = BallSet::single(Flag::line_at_angle(FRAC_PI_4), 0.2).unwrap();
        let a = BallSet::new(vec![line_ball(0.0, 0.4), line_ball(2.0 * FRAC_PI_4, 0.4)]).unwrap();
        let opts = TailOptions::new(0.01, 32, 0);
        match certify_cyclic_tail(&g, &t, &b, &a, &opts).unwrap() {
            TailOutcome::Certified(c) => assert!(c.k_plus <= 3 && c.k_minus <= 3),
            TailOutcome::Failed { check } => panic!("{check}"),
        }
        let rot = GroupElement::rotation(2, 0.3);
        assert!(matches!(certify_cyclic_tail(&rot, &t, &b, &a, &opts), Err(Error::DegenerateGap { .. })));
        let bad = BallSet::single(Flag::line_at_angle(2.0 * FRAC_PI_4), 0.2).unwrap();
        assert!(matches!(certify_cyclic_tail(&g, &t, &bad, &a, &opts).unwrap(), TailOutcome::Failed { .. }));
    }

    #[test]
    fn schottky_system_certifies_and_swapped_is_violated() {
        let sys = schottky();
        let opts = CertifyOptions::default();
        let cert = certify_ping_pong(&sys, &opts).unwrap();
        assert_eq!(cert.verdict, Verdict::Certified);
        assert!(cert.complete);
        assert!(cert.tail_certificates.iter().all(Option::is_some));

        let swapped = PingPongSystem::new(
            sys.flag_type.clone(),
            sys.factors.clone(),
            vec![sys.sets[1].clone(), sys.sets[0].clone()],
        )
        .unwrap();
        let cert = certify_ping_pong(&swapped, &opts).unwrap();
        assert!(matches!(cert.verdict, Verdict::Violated { .. }));
    }

    #[test]
    fn identical_factors_give_near_identity_words() {
        let sys = schottky();
        let twin = PingPongSystem::new(
            sys.flag_type.clone(),
            vec![sys.factors[0].clone(), Factor { name: "B".into(), ..sys.factors[0].clone() }],
            sys.sets.clone(),
        )
        .unwrap();
        let rep = injectivity_probe(&twin, 2, 1e-9).unwrap();
        assert!(rep.min_distance.unwrap() < 1e-6);
        assert!(!rep.near_identity.is_empty());
    }

    #[test]
    fn overlapping_sets_fail_antipodality() {
        let s1 = BallSet::single(Flag::line_at_angle(0.0), 0.3).unwrap();
        let s2 = BallSet::single(Flag::line_at_angle(0.4), 0.3).unwrap();
        assert!(matches!(
            check_set_antipodality(&[s1, s2], 1.0),
            Err(Error::AntipodalityUnverified { .. })
        ));
    }
}
