//! Axial elements, antipodality scans over one-parameter families, and the
//! search for n with ⟨α, βⁿ⟩ a ping-pong (Schottky) pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{act, antipodal, antipodality_margin, attracting_flag, regularity_gap, Flag, FlagType};
use crate::freeprod::Factor;
use crate::linalg::GroupElement;
use crate::pingpong::{
    certify_inclusion, certify_ping_pong, image_radius, Ball, BallSet, CertifyOptions, Inclusion, PingPongCertificate,
    PingPongSystem,
};

/// Attracting and repelling fixed flags of an axial element.
#[derive(Debug, Clone)]
pub struct AxialData {
    pub a_plus: Flag,
    pub a_minus: Flag,
    pub margin: f64,
}

/// Fixed flags of g, after checking that its singular value gaps grow
/// linearly along powers (a proxy for real diagonalizability with
/// eigenvalue-modulus gaps at Θ).
pub fn axial_data(g: &GroupElement, t: &FlagType, tol: f64) -> Result<AxialData> {
    let gap1 = regularity_gap(g, t);
    if !(gap1 > 0.0) {
        return Err(Error::DegenerateGap { index: t.dims()[0], detail: "no singular value gap".into() });
    }
    let g2 = g.pow(2);
    let g4 = g2.pow(2);
    let g8 = g4.pow(2);
    let (s2, s4, s8) = (regularity_gap(&g2, t), regularity_gap(&g4, t), regularity_gap(&g8, t));
    // linear growth doubles the increment when the exponent step doubles
    if !(s4 - s2 > 0.0 && s8 - s4 >= 0.8 * 2.0 * (s4 - s2)) {
        return Err(Error::NotAxial(format!(
            "gaps of g^2, g^4, g^8 are {s2:.4}, {s4:.4}, {s8:.4}: growth is not linear"
        )));
    }
    let a_plus = attracting_flag(g, t)?;
    let a_minus = attracting_flag(&g.inverse(), t)?;
    let check = antipodal(&a_plus, &a_minus, tol)?;
    if !check.antipodal {
        return Err(Error::NotAntipodal(format!(
            "attracting and repelling flags have margin {:.3e}",
            check.margin
        )));
    }
    Ok(AxialData { a_plus, a_minus, margin: check.margin })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureInterval {
    /// First and last failing parameter of a maximal failing run.
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub parameters: Vec<f64>,
    pub margins: Vec<f64>,
    pub intervals: Vec<FailureInterval>,
}

impl ScanReport {
    pub fn failure_count(&self) -> usize {
        self.intervals.len()
    }
}

/// Margin of {b₊, b₋} against h·{b₊, b₋}: the smallest antipodality margin
/// over the four cross pairs.
pub fn pair_margin(h: &GroupElement, b_pair: (&Flag, &Flag)) -> Result<f64> {
    let moved = [act(h, b_pair.0)?, act(h, b_pair.1)?];
    let mut m = f64::INFINITY;
    for x in [b_pair.0, b_pair.1] {
        for y in &moved {
            m = m.min(antipodality_margin(x, y)?);
        }
    }
    Ok(m)
}

/// Evaluates [`pair_margin`] along a sampled family h(s) and reports the
/// maximal runs of samples where the margin is at most `tol`.
pub fn antipodality_scan(family: &[GroupElement], parameters: &[f64], b_pair: (&Flag, &Flag), tol: f64) -> Result<ScanReport> {
    if family.len() != parameters.len() {
        return Err(Error::Invalid(format!(
            "{} family elements but {} parameters",
            family.len(),
            parameters.len()
        )));
    }
    let margins: Vec<f64> = family.iter().map(|h| pair_margin(h, b_pair)).collect::<Result<_>>()?;
    let mut intervals = Vec::new();
    let mut run: Option<usize> = None;
    for (k, &m) in margins.iter().enumerate() {
        match (m <= tol, run) {
            (true, None) => run = Some(k),
            (false, Some(s)) => {
                intervals.push(FailureInterval { start: parameters[s], end: parameters[k - 1] });
                run = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run {
        intervals.push(FailureInterval { start: parameters[s], end: parameters[margins.len() - 1] });
    }
    Ok(ScanReport { parameters: parameters.to_vec(), margins, intervals })
}

/// Options of [`schottky_power_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    /// Powers α^k, 1 ≤ |k| ≤ k0, checked for condition 2 and used to place balls.
    pub k0: u32,
    pub antipodal_tol: f64,
    pub certify: CertifyOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { k0: 20, antipodal_tol: 1e-6, certify: CertifyOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: u32,
    pub radius: f64,
    pub verdict: String,
    pub min_clearance: Option<f64>,
}

/// A successful search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub n: u32,
    pub radius: f64,
    pub system: PingPongSystem,
    pub certificate: PingPongCertificate,
    /// Every (n, radius) attempt, in order.
    pub trajectory: Vec<TrajectoryRow>,
}

/// The ball systems tried by the search: B = balls of radius r at b±;
/// A = balls of radius r at a± plus enclosures of α^k(B) for 1 ≤ |k| ≤ k0
/// that are not already deep inside the a± balls.
pub fn search_sets(alpha: &GroupElement, ax: &AxialData, bx: &AxialData, r: f64, k0: u32, margin: f64) -> Result<(BallSet, BallSet)> {
    let b = BallSet::new(vec![
        Ball { center: bx.a_plus.clone(), radius: r },
        Ball { center: bx.a_minus.clone(), radius: r },
    ])?;
    let core = BallSet::new(vec![
        Ball { center: ax.a_plus.clone(), radius: r },
        Ball { center: ax.a_minus.clone(), radius: r },
    ])?;
    let mut balls = core.balls().to_vec();
    for k in 1..=k0 as i64 {
        for sign in [1, -1] {
            let g = alpha.pow(sign * k);
            for c in [&bx.a_plus, &bx.a_minus] {
                let center = act(&g, c)?;
                let radius = image_radius(&g, c, r)? + 2.0 * margin;
                if core.depth(&center)? >= radius + margin || radius >= std::f64::consts::FRAC_PI_2 {
                    continue;
                }
                balls.push(Ball { center, radius });
            }
        }
    }
    Ok((BallSet::new(balls)?, b))
}

/// Clearance of β^{±n}(A) ⊂ B, or `None` when not certified.
pub fn power_clearance(beta: &GroupElement, n: u32, a: &BallSet, b: &BallSet, margin: f64, samples: usize, seed: u64) -> Result<Option<f64>> {
    let mut worst = f64::INFINITY;
    for sign in [1i64, -1] {
        match certify_inclusion(&beta.pow(sign * n as i64), a, b, margin, samples, seed)? {
            Inclusion::Certified { clearance, .. } => worst = worst.min(clearance),
            _ => return Ok(None),
        }
    }
    Ok(Some(worst))
}

/// Least n ≤ n_max (and for it the first radius in the grid) for which
/// ⟨α⟩ and ⟨βⁿ⟩ certify as a ping-pong pair with cyclic tails.
pub fn schottky_power_search(
    alpha: &GroupElement,
    beta: &GroupElement,
    t: &FlagType,
    radius_grid: &[f64],
    n_max: u32,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    let ax = axial_data(alpha, t, opts.antipodal_tol)?;
    let bx = axial_data(beta, t, opts.antipodal_tol)?;
    let fixed = [&ax.a_plus, &ax.a_minus, &bx.a_plus, &bx.a_minus];
    for i in 0..4 {
        for j in (i + 1)..4 {
            let m = antipodality_margin(fixed[i], fixed[j])?;
            if m <= opts.antipodal_tol {
                return Err(Error::NotAntipodal(format!(
                    "fixed flags {i} and {j} are not antipodal (margin {m:.3e})"
                )));
            }
        }
    }
    for k in 1..=opts.k0 as i64 {
        for sign in [1, -1] {
            let m = pair_margin(&alpha.pow(sign * k), (&bx.a_plus, &bx.a_minus))?;
            if m <= opts.antipodal_tol {
                return Err(Error::NotAntipodal(format!(
                    "alpha^{} moves the fixed flags of beta onto non-antipodal position (margin {m:.3e})",
                    sign * k
                )));
            }
        }
    }

    let mut trajectory = Vec::new();
    let mut best: Option<f64> = None;
    for n in 1..=n_max {
        let beta_n = beta.pow(n as i64);
        for &r in radius_grid {
            let (a_set, b_set) = match search_sets(alpha, &ax, &bx, r, opts.k0, opts.certify.margin) {
                Ok(s) => s,
                Err(Error::InvalidBallSet(_)) => continue,
                Err(e) => return Err(e),
            };
            let system = PingPongSystem::new(
                t.clone(),
                vec![
                    Factor::new("A", vec![alpha.clone()], 1, true)?,
                    Factor::new("B", vec![beta_n.clone()], 1, true)?,
                ],
                vec![a_set, b_set],
            )?;
            let cert = match certify_ping_pong(&system, &opts.certify) {
                Ok(c) => c,
                Err(Error::AntipodalityUnverified { .. }) => {
                    trajectory.push(TrajectoryRow { n, radius: r, verdict: "antipodality_unverified".into(), min_clearance: None });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let status = match &cert.verdict {
                crate::pingpong::Verdict::Certified => "certified",
                crate::pingpong::Verdict::Violated { .. } => "violated",
                crate::pingpong::Verdict::MarginFailure { .. } => "margin_failure",
            };
            trajectory.push(TrajectoryRow { n, radius: r, verdict: status.into(), min_clearance: cert.min_clearance });
            if let Some(c) = cert.min_clearance {
                best = Some(best.map_or(c, |b: f64| b.max(c)));
            }
            if cert.is_certified() && cert.complete {
                return Ok(SearchResult { n, radius: r, system, certificate: cert, trajectory });
            }
        }
    }
    Err(Error::SearchExhausted(match best {
        Some(b) => format!("no certificate for n <= {n_max}; best clearance {b:.4e}"),
        None => format!("no certificate for n <= {n_max}"),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn sl2() -> FlagType {
        FlagType::new(2, vec![1]).unwrap()
    }

    #[test]
    fn axial_examples() {
        let g = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let ax = axial_data(&g, &sl2(), 1e-6).unwrap();
        assert!(crate::flags::flag_distance(&ax.a_plus, &Flag::line_at_angle(0.0)).unwrap() < 1e-12);
        assert!(crate::flags::flag_distance(&ax.a_minus, &Flag::line_at_angle(PI / 2.0)).unwrap() < 1e-12);

        let t = FlagType::full(3).unwrap();
        let h = GroupElement::diagonal(&[4.0, 1.0, 0.25]).unwrap();
        let ax = axial_data(&h, &t, 1e-6).unwrap();
        assert!(crate::flags::flag_distance(&ax.a_plus, &Flag::standard(t.clone())).unwrap() < 1e-12);
    }

    #[test]
    fn parabolic_is_not_axial() {
        let u = GroupElement::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(axial_data(&u, &sl2(), 1e-6), Err(Error::NotAxial(_))));
        let r = GroupElement::rotation(2, 0.5);
        assert!(matches!(axial_data(&r, &sl2(), 1e-6), Err(Error::DegenerateGap { .. })));
    }

    #[test]
    fn rotation_scan_has_three_intervals() {
        let n = 1000;
        let params: Vec<f64> = (0..=n).map(|k| PI * k as f64 / n as f64).collect();
        let fam: Vec<GroupElement> = params.iter().map(|&s| GroupElement::rotation(2, s)).collect();
        let (e1, e2) = (Flag::line_at_angle(0.0), Flag::line_at_angle(PI / 2.0));
        let rep = antipodality_scan(&fam, &params, (&e1, &e2), 1e-2).unwrap();
        assert_eq!(rep.failure_count(), 3);
    }

    #[test]
    fn constant_identity_fails_everywhere() {
        let params: Vec<f64> = (0..10).map(f64::from).collect();
        let fam = vec![GroupElement::identity(2); 10];
        let (b1, b2) = (Flag::line_at_angle(FRAC_PI_4), Flag::line_at_angle(-FRAC_PI_4));
        let rep = antipodality_scan(&fam, &params, (&b1, &b2), 1e-6).unwrap();
        assert_eq!(rep.intervals, vec![FailureInterval { start: 0.0, end: 9.0 }]);
    }

    #[test]
    fn diagonal_powers_keep_diagonal_lines_apart() {
        let a = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let params: Vec<f64> = (1..=20).map(f64::from).collect();
        let fam: Vec<GroupElement> = (1..=20).map(|k| a.pow(k)).collect();
        let (b1, b2) = (Flag::line_at_angle(FRAC_PI_4), Flag::line_at_angle(-FRAC_PI_4));
        assert_eq!(antipodality_scan(&fam, &params, (&b1, &b2), 1e-6).unwrap().failure_count(), 0);
    }

    #[test]
    fn shared_fixed_line_fails_precondition() {
        let a = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let b = GroupElement::from_rows(&[vec![3.0, 1.0], vec![0.0, 1.0 / 3.0]]).unwrap();
        assert!(matches!(
            schottky_power_search(&a, &b, &sl2(), &[0.1], 4, &SearchOptions::default()),
            Err(Error::NotAntipodal(_))
        ));
    }

    #[test]
    fn zero_budget_is_exhausted() {
        let a = GroupElement::diagonal(&[9.0, 1.0 / 9.0]).unwrap();
        let b = a.conjugate_by(&GroupElement::rotation(2, FRAC_PI_4)).unwrap();
        assert!(matches!(
            schottky_power_search(&a, &b, &sl2(), &[0.1], 0, &SearchOptions::default()),
            Err(Error::SearchExhausted(_))
        ));
    }
}
