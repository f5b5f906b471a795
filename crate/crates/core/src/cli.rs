//! Command-line front end.
//!
//! Exit codes: 0 success or certified, 1 usage or configuration error,
//! 2 ping-pong violated (or not certifiable at the margin), 3 sets not
//! antipodal, 4 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::flags::{Flag, FlagType};
use crate::freeprod::{BoundaryPoint, ReducedWord};
use crate::limits::{boundary_map, flag_convergence_diagnostic, limit_set_sample, DiagnosticOptions, LimitSample};
use crate::linalg::{GroupElement, Matrix};
use crate::pingpong::{certify_ping_pong, PingPongCertificate, Verdict};
use crate::schottky::{antipodality_scan, schottky_power_search, SearchOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATED: i32 = 2;
pub const EXIT_NOT_ANTIPODAL: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "flag-pingpong", version, about = "Ping-pong certificates and limit sets on flag manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify a ping-pong system and write a certificate.
    Certify {
        /// Config file, or a certificate file with --recheck.
        input: PathBuf,
        /// Certificate path (default: <config stem>.certificate.json).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-run the certification embedded in a certificate and compare.
        #[arg(long)]
        recheck: bool,
    },
    /// Sample the limit set at a given word depth.
    LimitSet {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Points whose image diameter is at least eps are counted as coarse.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// 1-based coordinate indices of the SVG projection.
        #[arg(long, default_value = "1,2")]
        proj: String,
    },
    /// Evaluate the boundary map at an encoded boundary point.
    Boundary {
        config: PathBuf,
        /// `I:<prefix>|<letter>` or `II:<prefix>|<period>`, e.g. `II:e|A[1].B[1]`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 60)]
        nmax: usize,
    },
    /// Regularity and convergence report along a sequence of words.
    Diagnose {
        config: PathBuf,
        /// Comma-separated words, e.g. `A[1],A[1^2],A[1^3]`.
        #[arg(long, allow_hyphen_values = true)]
        sequence: String,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 5.0)]
        gap_threshold: f64,
    },
    /// Search the least n making <alpha, beta^n> a certified ping-pong pair.
    Schottky {
        config: PathBuf,
        #[arg(long, default_value_t = 64)]
        nmax: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Antipodality scan over a one-parameter family.
    Scan {
        config: PathBuf,
        #[arg(long)]
        family: PathBuf,
        /// `a:b:steps`, steps sample points from a to b inclusive.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Write the full report (every margin) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A certificate together with the exact configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub config: Config,
    pub certificate: PingPongCertificate,
}

/// A one-parameter family for `scan`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// h(s) = rotation by s in the coordinate plane (i, j), 0-based.
    Rotation {
        #[serde(default = "default_plane")]
        plane: [usize; 2],
        pair: [Vec<Vec<f64>>; 2],
        #[serde(default = "default_scan_tol")]
        tol: f64,
    },
    /// h(s) = g^s for integer parameters s.
    Powers {
        element: Vec<Vec<f64>>,
        pair: [Vec<Vec<f64>>; 2],
        #[serde(default = "default_scan_tol")]
        tol: f64,
    },
    /// Explicit samples h(s_k) = matrices[k].
    Samples {
        parameters: Vec<f64>,
        matrices: Vec<Vec<Vec<f64>>>,
        pair: [Vec<Vec<f64>>; 2],
        #[serde(default = "default_scan_tol")]
        tol: f64,
    },
}

fn default_plane() -> [usize; 2] {
    [0, 1]
}

fn default_scan_tol() -> f64 {
    1e-3
}

/// Maps an error to the documented exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::AntipodalityUnverified { .. } => EXIT_NOT_ANTIPODAL,
        Error::Invalid(_)
        | Error::InvalidFlagType(_)
        | Error::DimensionMismatch { .. }
        | Error::TypeMismatch { .. }
        | Error::NotAFace { .. }
        | Error::InvalidBallSet(_)
        | Error::NotReduced { .. }
        | Error::OutOfRange { .. }
        | Error::InsufficientLetters { .. }
        | Error::NotAlternating(_)
        | Error::SingularMatrix { .. } => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Runs the tool on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Certify { input, out, recheck } => {
            if recheck {
                recheck_certificate(&input)
            } else {
                certify(&input, out)
            }
        }
        Command::LimitSet { config, depth, eps, out, svg, proj } => limit_set(&config, depth, eps, &out, svg.as_deref(), &proj),
        Command::Boundary { config, point, eps, nmax } => boundary(&config, &point, eps, nmax),
        Command::Diagnose { config, sequence, eps, gap_threshold } => diagnose(&config, &sequence, eps, gap_threshold),
        Command::Schottky { config, nmax, out } => schottky(&config, nmax, out),
        Command::Scan { config, family, grid, out } => scan(&config, &family, grid.as_deref(), out.as_deref()),
    }
}

/// Writes via a temporary file in the same directory and renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Invalid(format!("cannot write {}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Invalid(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn default_out(config: &Path, suffix: &str) -> PathBuf {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    PathBuf::from(format!("{stem}.{suffix}"))
}

fn verdict_code(cert: &PingPongCertificate) -> i32 {
    match cert.verdict {
        Verdict::Certified => EXIT_OK,
        _ => EXIT_VIOLATED,
    }
}

fn describe(cert: &PingPongCertificate, names: &[String]) -> String {
    let name = |i: usize| names.get(i).cloned().unwrap_or_else(|| i.to_string());
    match &cert.verdict {
        Verdict::Certified => {
            let scope = if cert.complete {
                "complete (all factors cyclic with tail certificates)".to_string()
            } else {
                format!("up to factor word length {:?}", cert.factor_truncations)
            };
            let clearance = cert.min_clearance.map_or("n/a".into(), |c| format!("{c:.4e}"));
            format!("certified, {scope}; min clearance {clearance}")
        }
        Verdict::Violated { factor, element, source, distance, .. } => format!(
            "violated: {}[{element}] maps a point of set {} outside set {} by {distance:.4e}",
            name(*factor),
            name(*source),
            name(*factor)
        ),
        Verdict::MarginFailure { factor, element, clearance, reason } => {
            format!("not certified at the margin: {}[{element}]: {reason} (clearance {clearance:.4e})", name(*factor))
        }
    }
}

fn certificate_json(file: &CertificateFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("certificate serializes");
    s.push('\n');
    s
}

fn certify(path: &Path, out: Option<PathBuf>) -> Result<i32> {
    let config = Config::load(path)?;
    let system = config.system()?;
    let cert = certify_ping_pong(&system, &config.certify_options())?;
    let out = out.unwrap_or_else(|| default_out(path, "certificate.json"));
    let file = CertificateFile { config, certificate: cert };
    write_atomic(&out, certificate_json(&file).as_bytes())?;
    println!("{}", describe(&file.certificate, &system.names()));
    if let Some(d) = &file.certificate.discreteness {
        if let Some(m) = d.min_distance {
            println!("discreteness: {} words up to length {}, min distance to identity {m:.4e}", d.words_checked, d.max_rel_length);
        }
    }
    println!("certificate written to {}", out.display());
    Ok(verdict_code(&file.certificate))
}

fn recheck_certificate(path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let stored: CertificateFile =
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("not a certificate file: {e}")))?;
    let system = stored.config.system()?;
    let cert = certify_ping_pong(&system, &stored.config.certify_options())?;
    let fresh = CertificateFile { config: stored.config.clone(), certificate: cert };
    if certificate_json(&fresh) != certificate_json(&stored) {
        eprintln!("recheck failed: re-running the embedded configuration gives a different certificate");
        return Ok(EXIT_VIOLATED);
    }
    println!("recheck ok: {}", describe(&fresh.certificate, &system.names()));
    Ok(verdict_code(&fresh.certificate))
}

/// CSV with header `word,diam,frame_00,…` (frames row-major).
pub fn limit_sample_csv(sample: &LimitSample, names: &[String]) -> String {
    let d = sample.flag_type.dim();
    let mut s = String::from("word,diam");
    for i in 0..d {
        for j in 0..d {
            let _ = write!(s, ",frame_{i}{j}");
        }
    }
    s.push('\n');
    for p in &sample.points {
        let _ = write!(s, "{},{:e}", p.word.encode(names), p.diam);
        for x in p.flag.frame().as_slice() {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}

/// 800×800 scatter of (|v₁·e_i|, |v₁·e_j|), v₁ the first frame vector.
pub fn limit_sample_svg(sample: &LimitSample, proj: (usize, usize)) -> String {
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n\
         <rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n\
         <line x1=\"40\" y1=\"760\" x2=\"760\" y2=\"760\" stroke=\"gray\"/>\n\
         <line x1=\"40\" y1=\"760\" x2=\"40\" y2=\"40\" stroke=\"gray\"/>\n",
    );
    let _ = writeln!(s, "<text x=\"400\" y=\"790\" font-size=\"14\" text-anchor=\"middle\">|v1.e{}|</text>", proj.0 + 1);
    let _ = writeln!(s, "<text x=\"15\" y=\"400\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 15 400)\">|v1.e{}|</text>", proj.1 + 1);
    for p in &sample.points {
        let v = p.flag.leading_vector();
        let x = 40.0 + 720.0 * v[proj.0].abs();
        let y = 760.0 - 720.0 * v[proj.1].abs();
        let _ = writeln!(s, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"2\" fill=\"black\"/>");
    }
    s.push_str("</svg>\n");
    s
}

fn parse_proj(text: &str, d: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').collect();
    let idx = |t: &str| -> Result<usize> {
        let k: usize = t.trim().parse().map_err(|_| Error::Invalid(format!("bad projection index '{t}'")))?;
        if k == 0 || k > d {
            return Err(Error::Invalid(format!("projection index {k} outside 1..={d}")));
        }
        Ok(k - 1)
    };
    match parts.as_slice() {
        [a, b] => Ok((idx(a)?, idx(b)?)),
        _ => Err(Error::Invalid(format!("projection must be 'i,j', got '{text}'"))),
    }
}

fn limit_set(path: &Path, depth: usize, eps: f64, out: &Path, svg: Option<&Path>, proj: &str) -> Result<i32> {
    let config = Config::load(path)?;
    let system = config.system()?;
    let proj = parse_proj(proj, config.dim)?;
    let sample = limit_set_sample(&system, depth, config.tolerances.identity, &config.sample_options())?;
    write_atomic(out, limit_sample_csv(&sample, &system.names()).as_bytes())?;
    if let Some(svg) = svg {
        write_atomic(svg, limit_sample_svg(&sample, proj).as_bytes())?;
    }
    let coarse = sample.points.iter().filter(|p| p.diam >= eps).count();
    println!("{} points written to {} ({coarse} with image diameter >= {eps:e})", sample.points.len(), out.display());
    Ok(EXIT_OK)
}

fn boundary(path: &Path, point: &str, eps: f64, nmax: usize) -> Result<i32> {
    let config = Config::load(path)?;
    let system = config.system()?;
    let p = BoundaryPoint::parse(point, &system.factors, config.tolerances.identity)?;
    let f = boundary_map(&p, &system, eps, nmax, &config.sample_options())?;
    let report = serde_json::json!({
        "point": p.encode(&system.names()),
        "flag_dims": config.flag_dims,
        "frame": f.frame().to_rows(),
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(EXIT_OK)
}

fn diagnose(path: &Path, sequence: &str, eps: f64, gap_threshold: f64) -> Result<i32> {
    let config = Config::load(path)?;
    let system = config.system()?;
    let words = sequence
        .split(',')
        .map(|w| ReducedWord::parse(w, &system.factors, config.tolerances.identity))
        .collect::<Result<Vec<_>>>()?;
    let last = words.last().ok_or_else(|| Error::Invalid("empty sequence".into()))?;
    let probe = system.union_except(last.initial_factor())?;
    let seq = words.iter().map(|w| w.evaluate(config.dim)).collect::<Result<Vec<_>>>()?;
    let opts = DiagnosticOptions { gap_threshold, eps, sampling: config.sample_options() };
    let report = flag_convergence_diagnostic(&seq, &system.flag_type, &probe, &opts)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(EXIT_OK)
}

fn schottky(path: &Path, nmax: u32, out: Option<PathBuf>) -> Result<i32> {
    let config = Config::load(path)?;
    let sc = config
        .schottky
        .clone()
        .ok_or_else(|| Error::Invalid("config has no 'schottky' section".into()))?;
    let t = config.flag_type()?;
    let alpha = config.element(&sc.alpha)?;
    let beta = config.element(&sc.beta)?;
    let opts = SearchOptions { k0: sc.k0, antipodal_tol: config.tolerances.antipodal, certify: config.certify_options() };
    let found = schottky_power_search(&alpha, &beta, &t, &sc.radius_grid, nmax, &opts)?;
    println!("{:>4} {:>8} {:>24} {:>14}", "n", "radius", "verdict", "clearance");
    for row in &found.trajectory {
        let c = row.min_clearance.map_or("-".into(), |c| format!("{c:.4e}"));
        println!("{:>4} {:>8} {:>24} {:>14}", row.n, row.radius, row.verdict, c);
    }
    // record the produced system as a plain config, and certify exactly what
    // a recheck will reload
    let produced = config.with_system(&found.system);
    let produced = Config::from_json(&produced.to_json())?;
    let cert = certify_ping_pong(&produced.system()?, &produced.certify_options())?;
    let out = out.unwrap_or_else(|| default_out(path, "certificate.json"));
    let file = CertificateFile { config: produced, certificate: cert };
    write_atomic(&out, certificate_json(&file).as_bytes())?;
    println!("n = {} (radius {}): {}", found.n, found.radius, describe(&file.certificate, &found.system.names()));
    println!("certificate written to {}", out.display());
    Ok(verdict_code(&file.certificate))
}

/// `a:b:steps` → steps points from a to b inclusive.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Invalid(format!("grid must be a:b:steps, got '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 {
        return Err(Error::Invalid("grid needs at least 2 steps".into()));
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn pair_flags(t: &FlagType, pair: &[Vec<Vec<f64>>; 2]) -> Result<(Flag, Flag)> {
    let f = |rows: &Vec<Vec<f64>>| Flag::from_spanning(t.clone(), &Matrix::from_rows(rows)?);
    Ok((f(&pair[0])?, f(&pair[1])?))
}

fn rotation_in_plane(d: usize, plane: [usize; 2], s: f64) -> Result<GroupElement> {
    let [i, j] = plane;
    if i >= d || j >= d || i == j {
        return Err(Error::Invalid(format!("bad rotation plane {plane:?} in dimension {d}")));
    }
    let mut m = Matrix::identity(d);
    let (sn, cs) = s.sin_cos();
    m[(i, i)] = cs;
    m[(j, j)] = cs;
    m[(i, j)] = -sn;
    m[(j, i)] = sn;
    GroupElement::new(m)
}

fn scan(path: &Path, family: &Path, grid: Option<&str>, out: Option<&Path>) -> Result<i32> {
    let config = Config::load(path)?;
    let t = config.flag_type()?;
    let text = std::fs::read_to_string(family).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", family.display())))?;
    let fam: FamilyConfig = serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("family file: {e}")))?;
    let grid = grid.map(parse_grid).transpose()?;
    let need_grid = || grid.clone().ok_or_else(|| Error::Invalid("this family needs --grid".into()));
    let (params, elements, pair, tol) = match &fam {
        FamilyConfig::Rotation { plane, pair, tol } => {
            let params = need_grid()?;
            let els = params.iter().map(|&s| rotation_in_plane(config.dim, *plane, s)).collect::<Result<Vec<_>>>()?;
            (params, els, pair, *tol)
        }
        FamilyConfig::Powers { element, pair, tol } => {
            let g = config.element(element)?;
            let params = need_grid()?;
            let els = params.iter().map(|&s| g.pow(s.round() as i64)).collect();
            (params, els, pair, *tol)
        }
        FamilyConfig::Samples { parameters, matrices, pair, tol } => {
            if grid.is_some() {
                return Err(Error::Invalid("sampled families carry their own parameters; drop --grid".into()));
            }
            let els = matrices.iter().map(|m| config.element(m)).collect::<Result<Vec<_>>>()?;
            (parameters.clone(), els, pair, *tol)
        }
    };
    let (b1, b2) = pair_flags(&t, pair)?;
    let report = antipodality_scan(&elements, &params, (&b1, &b2), tol)?;
    if let Some(out) = out {
        let mut s = serde_json::to_string_pretty(&report).expect("json");
        s.push('\n');
        write_atomic(out, s.as_bytes())?;
    }
    let summary = serde_json::json!({
        "samples": report.parameters.len(),
        "tol": tol,
        "min_margin": report.margins.iter().copied().fold(f64::INFINITY, f64::min),
        "failure_intervals": report.failure_count(),
        "intervals": report.intervals,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    Ok(EXIT_OK)
}
