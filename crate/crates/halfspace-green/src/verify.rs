//! Check records, verification reports and the property suites behind
//! `halfspace-green verify`. Each record names the identity it exercises,
//! the worst defect observed, and the tolerance it was held to. Checks that
//! cannot run for the given system (a construction route is unavailable)
//! are reported as skipped with the reason, not as failures.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::QuadratureConfig;
use crate::dirichlet::{solve, BoundaryDatum};
use crate::error::{Error, Result};
use crate::fundamental::{BumpProfile, FundamentalEvaluator};
use crate::halfspace::{GreenSampleSpec, HalfSpaceKernels};
use crate::nontangential::{ball_mean, hl_maximal, nt_max, weighted_integral, ConeProbe, ExcludedRegion};
use crate::system::{Builtin, EllipticSystem};

#[derive(Serialize, Clone, Debug)]
pub struct CheckRecord {
    pub check_id: String,
    /// The identity under test, written as a formula.
    pub anchor: String,
    pub max_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Present when the check could not run (e.g. a route is unavailable);
    /// skipped records do not fail the report.
    pub skipped: Option<String>,
}

impl CheckRecord {
    pub fn measured(id: &str, anchor: &str, max_defect: f64, tolerance: f64) -> Self {
        CheckRecord {
            check_id: id.to_string(),
            anchor: anchor.to_string(),
            max_defect,
            tolerance,
            pass: max_defect <= tolerance,
            skipped: None,
        }
    }

    pub fn skipped(id: &str, anchor: &str, reason: impl Into<String>) -> Self {
        CheckRecord {
            check_id: id.to_string(),
            anchor: anchor.to_string(),
            max_defect: f64::NAN,
            tolerance: f64::NAN,
            pass: true,
            skipped: Some(reason.into()),
        }
    }
}

#[derive(Serialize, Clone, Debug, Default)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
    }

    /// Overall verdict: every executed check passed.
    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<40} {:>12} {:>10}  {:<6} {}\n",
            "check", "max_defect", "tolerance", "status", "anchor"
        ));
        for r in &self.records {
            let status = match (&r.skipped, r.pass) {
                (Some(_), _) => "skip",
                (None, true) => "pass",
                (None, false) => "FAIL",
            };
            let defect = if r.max_defect.is_nan() {
                "-".to_string()
            } else {
                format!("{:.3e}", r.max_defect)
            };
            let tol = if r.tolerance.is_nan() {
                "-".to_string()
            } else {
                format!("{:.1e}", r.tolerance)
            };
            out.push_str(&format!(
                "{:<40} {:>12} {:>10}  {:<6} {}\n",
                r.check_id,
                defect,
                tol,
                status,
                r.skipped.as_deref().unwrap_or(&r.anchor)
            ));
        }
        out.push_str(&format!(
            "summary: {}\n",
            if self.pass() { "pass" } else { "FAIL" }
        ));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Fundamental,
    Green,
    Poisson,
    Dirichlet,
    Maximal,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fundamental" => Suite::Fundamental,
            "green" => Suite::Green,
            "poisson" => Suite::Poisson,
            "dirichlet" => Suite::Dirichlet,
            "maximal" => Suite::Maximal,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite `{other}`"))),
        })
    }
}

/// Sample counts for the suites. Defaults match the acceptance grade.
#[derive(Clone, Debug)]
pub struct SuiteParams {
    pub seed: u64,
    /// Random points for closed-form comparisons.
    pub closed_form_points: usize,
    /// Points for sampled algebraic identities (evenness, scaling, ...).
    pub sample_points: usize,
    pub green: GreenSampleSpec,
    /// Bump positions/scales for the distributional identity.
    pub delta_bumps: usize,
    /// Interior points for the Dirichlet operator residual.
    pub interior_points: usize,
    /// Continuity points for trace certificates.
    pub trace_points: usize,
    /// Boundary samples for the maximal-function domination constant.
    pub domination_vertices: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            seed: 7,
            closed_form_points: 100,
            sample_points: 20,
            green: GreenSampleSpec {
                pairs: 50,
                convolution_pairs: 50,
                ..GreenSampleSpec::default()
            },
            delta_bumps: 3,
            interior_points: 20,
            trace_points: 10,
            domination_vertices: 30,
        }
    }
}

impl SuiteParams {
    /// A lighter grade for interactive runs.
    pub fn quick() -> Self {
        SuiteParams {
            closed_form_points: 25,
            sample_points: 8,
            green: GreenSampleSpec::default(),
            delta_bumps: 2,
            interior_points: 6,
            trace_points: 4,
            domination_vertices: 10,
            ..Default::default()
        }
    }
}

pub fn run_suite(
    suite: Suite,
    system: &EllipticSystem,
    cfg: &QuadratureConfig,
    params: &SuiteParams,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    match suite {
        Suite::Fundamental => report.merge(fundamental_suite(system, cfg, params)?),
        Suite::Green => report.merge(green_suite(system, cfg, params)?),
        Suite::Poisson => report.merge(poisson_suite(system, cfg, params)?),
        Suite::Dirichlet => report.merge(dirichlet_suite(system, cfg, params)?),
        Suite::Maximal => report.merge(maximal_suite(system.dimension(), params)?),
        Suite::All => {
            report.merge(fundamental_suite(system, cfg, params)?);
            report.merge(green_suite(system, cfg, params)?);
            report.merge(poisson_suite(system, cfg, params)?);
            report.merge(dirichlet_suite(system, cfg, params)?);
            report.merge(maximal_suite(system.dimension(), params)?);
        }
    }
    Ok(report)
}

fn is_laplacian(system: &EllipticSystem) -> bool {
    EllipticSystem::builtin(&Builtin::Laplacian, system.dimension())
        .map(|l| system.operator_eq(&l))
        .unwrap_or(false)
}

fn sample_point(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
        let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.05 * scale {
            return p;
        }
    }
}

/// Fundamental-solution battery: closed forms, parity, homogeneity or log
/// structure, transposition, operator scaling, decay envelopes and the
/// distributional identity.
pub fn fundamental_suite(
    system: &EllipticSystem,
    cfg: &QuadratureConfig,
    params: &SuiteParams,
) -> Result<VerificationReport> {
    use std::f64::consts::PI;
    let mut report = VerificationReport::default();
    let n = system.dimension();
    let m = system.size();
    let ev = match FundamentalEvaluator::new(system.clone(), cfg.clone()) {
        Ok(ev) => ev,
        Err(Error::NotWeaklyElliptic { min_abs_det }) => {
            report.push(CheckRecord::skipped(
                "fs_all",
                "E exists for weakly elliptic systems",
                format!("system is not weakly elliptic (min |det L| = {min_abs_det:.3e})"),
            ));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    if is_laplacian(system) {
        let mut defect = 0.0f64;
        for _ in 0..params.closed_form_points {
            let x = sample_point(&mut rng, n, 3.0);
            let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let expected = if n == 2 {
                (r / 2.0).ln() / (2.0 * PI)
            } else {
                -1.0 / (4.0 * PI * r)
            };
            let got = ev.eval(&x)?.get(0, 0);
            let rel = (got - Complex64::new(expected, 0.0)).norm()
                / expected.abs().max(1e-6);
            defect = defect.max(rel);
        }
        report.push(CheckRecord::measured(
            "fs_closed_form",
            if n == 2 {
                "E(x) = ln(|x|/2)/(2 pi)"
            } else {
                "E(x) = -1/(4 pi |x|)"
            },
            defect,
            1e-8,
        ));

        // Rotation invariance of the radial fundamental solution.
        let mut d_rot = 0.0f64;
        for _ in 0..params.sample_points {
            let x = sample_point(&mut rng, n, 2.0);
            let angle = rng.gen_range(0.0..2.0 * PI);
            let (c, s) = (angle.cos(), angle.sin());
            let rx = if n == 2 {
                vec![c * x[0] - s * x[1], s * x[0] + c * x[1]]
            } else {
                vec![c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]]
            };
            d_rot = d_rot.max(ev.eval(&x)?.sub(&ev.eval(&rx)?).max_abs());
        }
        report.push(CheckRecord::measured(
            "fs_rotation_invariance",
            "E(R x) = E(x) for rotations R",
            d_rot,
            1e-10,
        ));
    } else {
        report.push(CheckRecord::skipped(
            "fs_closed_form",
            "closed-form comparison",
            "closed form is pinned for the Laplacian only",
        ));
    }

    // Parity.
    let mut d_even = 0.0f64;
    for _ in 0..params.sample_points {
        let x = sample_point(&mut rng, n, 2.0);
        let xm: Vec<f64> = x.iter().map(|v| -v).collect();
        d_even = d_even.max(ev.eval(&x)?.sub(&ev.eval(&xm)?).max_abs());
    }
    report.push(CheckRecord::measured("fs_evenness", "E(-x) = E(x)", d_even, 1e-10));

    // Homogeneity (n = 3) or the log splitting (n = 2).
    let mut d_hom = 0.0f64;
    for _ in 0..params.sample_points.min(8) {
        let x = sample_point(&mut rng, n, 2.0);
        let e = ev.eval(&x)?;
        for l in [0.5, 2.0, 10.0] {
            let xl: Vec<f64> = x.iter().map(|v| v * l).collect();
            let el = ev.eval(&xl)?;
            if n == 3 {
                d_hom = d_hom.max(el.scale(Complex64::new(l, 0.0)).sub(&e).max_abs());
            } else {
                let shift = ev.log_coefficient().scale(Complex64::new(l.ln(), 0.0));
                d_hom = d_hom.max(el.sub(&e).sub(&shift).max_abs());
            }
        }
    }
    report.push(CheckRecord::measured(
        "fs_homogeneity",
        if n == 3 {
            "E(l x) = l^{2-n} E(x)"
        } else {
            "E(l x) - E(x) = C ln(l)"
        },
        d_hom,
        1e-10,
    ));

    // Transposition and operator scaling.
    let evt = FundamentalEvaluator::new(system.transposed(), cfg.clone())?;
    let lambda = Complex64::new(2.0, -0.5);
    let evs = FundamentalEvaluator::new(system.scaled(lambda), cfg.clone())?;
    let mut d_t = 0.0f64;
    let mut d_s = 0.0f64;
    for _ in 0..params.sample_points.min(8) {
        let x = sample_point(&mut rng, n, 2.0);
        let e = ev.eval(&x)?;
        d_t = d_t.max(evt.eval(&x)?.sub(&e.transpose()).max_abs());
        d_s = d_s.max(evs.eval(&x)?.scale(lambda).sub(&e).max_abs());
    }
    report.push(CheckRecord::measured(
        "fs_transposition",
        "E_{L^T} = (E_L)^T",
        d_t,
        cfg.tol,
    ));
    report.push(CheckRecord::measured(
        "fs_operator_scaling",
        "E_{c L} = E_L / c",
        d_s,
        cfg.tol,
    ));

    // First-derivative homogeneity.
    let mut d_dh = 0.0f64;
    for _ in 0..params.sample_points.min(8) {
        let x = sample_point(&mut rng, n, 2.0);
        let mut gamma = vec![0usize; n];
        gamma[rng.gen_range(0..n)] = 1;
        let d1 = ev.eval_derivative(&x, &gamma)?;
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let d2 = ev.eval_derivative(&x2, &gamma)?;
        let factor = 2f64.powi(n as i32 - 1);
        d_dh = d_dh.max(d2.scale(Complex64::new(factor, 0.0)).sub(&d1).max_abs());
    }
    report.push(CheckRecord::measured(
        "fs_derivative_homogeneity",
        "dE(2x) = 2^{1-n} dE(x)",
        d_dh,
        10.0 * cfg.tol,
    ));

    // Decay envelopes per derivative order: per-decade peaks of the
    // normalized magnitude must be stable.
    for order in 0..=2usize {
        let mut gamma = vec![0usize; n];
        if order >= 1 {
            gamma[0] = order.min(2);
        }
        let mut peaks = vec![0.0f64; 3];
        for (d, peak) in peaks.iter_mut().enumerate() {
            for k in 0..6 {
                let r = 10f64.powf(d as f64 - 1.0 + k as f64 / 6.0);
                let mut x = sample_point(&mut rng, n, 1.0);
                let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v *= r / nx);
                let mag = ev.eval_derivative(&x, &gamma)?.max_abs();
                let q = if n == 2 && order == 0 {
                    mag / (1.0 + r.ln().abs())
                } else {
                    mag * r.powi((n + order) as i32 - 2)
                };
                *peak = peak.max(q);
            }
        }
        let hi = peaks.iter().copied().fold(0.0, f64::max);
        let lo = peaks.iter().copied().fold(f64::INFINITY, f64::min);
        report.push(CheckRecord::measured(
            &format!("fs_decay_order_{order}"),
            "|d^g E(x)| <= C |x|^{2-n-|g|} (log-normalized for n=2, |g|=0)",
            if lo > 0.0 { hi / lo } else { f64::INFINITY },
            5.0,
        ));
    }

    // Distributional identity over several bump positions and scales.
    let mut d_delta = 0.0f64;
    for b in 0..params.delta_bumps {
        let scale = 0.6 + 0.4 * b as f64;
        let mut center = vec![0.0; n];
        if b > 0 {
            for c in center.iter_mut() {
                *c = rng.gen_range(-0.3..0.3);
            }
        }
        let bump = BumpProfile::new(center, scale)?;
        for alpha in 0..m {
            let mut dir = vec![Complex64::new(0.0, 0.0); m];
            dir[alpha] = Complex64::new(1.0, 0.0);
            let r = ev.delta_identity_residual(&bump, &dir)?;
            d_delta = d_delta.max(r.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    report.push(CheckRecord::measured(
        "fs_delta_identity",
        "L E(. - y) = delta_y I (tested against bump fields)",
        d_delta,
        1e-3,
    ));

    Ok(report)
}

/// Green-function battery; delegates to the kernel's own identity checks.
pub fn green_suite(
    system: &EllipticSystem,
    cfg: &QuadratureConfig,
    params: &SuiteParams,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let kernels = match HalfSpaceKernels::new(system.clone(), cfg.clone()) {
        Ok(k) => k,
        Err(Error::RouteUnavailable(reason)) => {
            report.push(CheckRecord::skipped(
                "green_all",
                "G(x,y) = E(x-y) - E(x-y~) and derived identities",
                format!("RouteUnavailable: {reason}"),
            ));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let mut spec = params.green.clone();
    spec.seed = params.seed;
    report.merge(kernels.verify_identities(&spec)?);
    Ok(report)
}

/// Poisson-kernel battery: closed form (Laplacian), normalization, decay,
/// parabolic dilation scaling and the null-solution property of the
/// dilation kernel.
pub fn poisson_suite(
    system: &EllipticSystem,
    cfg: &QuadratureConfig,
    params: &SuiteParams,
) -> Result<VerificationReport> {
    use std::f64::consts::PI;
    let mut report = VerificationReport::default();
    let n = system.dimension();
    let kernels = match HalfSpaceKernels::new(system.clone(), cfg.clone()) {
        Ok(k) => k,
        Err(Error::RouteUnavailable(reason)) => {
            report.push(CheckRecord::skipped(
                "poisson_all",
                "P from the boundary normal derivative of G",
                format!("RouteUnavailable: {reason}"),
            ));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let p = match kernels.poisson_kernel() {
        Ok(p) => p,
        Err(Error::RouteUnavailable(reason)) => {
            report.push(CheckRecord::skipped(
                "poisson_all",
                "P from the boundary normal derivative of G",
                format!("RouteUnavailable: {reason}"),
            ));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    if is_laplacian(system) {
        // (2/omega_{n-1}) (1 + |x'|^2)^{-n/2} on |x'| <= 10.
        let omega = crate::dirichlet::sphere_area(n);
        let mut defect = 0.0f64;
        for k in 0..=20 {
            let s = -10.0 + k as f64;
            let xp = if n == 2 { vec![s] } else { vec![s, 0.35 * s] };
            let r2: f64 = xp.iter().map(|v| v * v).sum();
            if r2 > 100.0 {
                continue;
            }
            let expected = 2.0 / omega * (1.0 + r2).powf(-(n as f64) / 2.0);
            let got = p.value(&xp)?.get(0, 0);
            defect = defect.max((got - Complex64::new(expected, 0.0)).norm());
        }
        report.push(CheckRecord::measured(
            "poisson_closed_form",
            "P(x') = (2/omega_{n-1}) (1+|x'|^2)^{-n/2}",
            defect,
            1e-6,
        ));
    } else {
        report.push(CheckRecord::skipped(
            "poisson_closed_form",
            "closed-form comparison",
            "closed form is pinned for the Laplacian only",
        ));
    }

    report.push(CheckRecord::measured(
        "poisson_normalization",
        "integral of P over the boundary = I",
        p.normalization_defect(),
        1e-3,
    ));

    // Decay envelope: per-decade peaks of |P| (1+|x'|^2)^{n/2}.
    let mut peaks = vec![0.0f64; 2];
    for (d, peak) in peaks.iter_mut().enumerate() {
        for k in 0..6 {
            let r = 10f64.powf(d as f64 + k as f64 / 6.0);
            let mut xp = vec![0.0; n - 1];
            let th: f64 = rng.gen_range(0.0..2.0 * PI);
            xp[0] = r * th.cos();
            if n == 3 {
                xp[1] = r * th.sin();
            }
            let mag = p.value(&xp)?.max_abs();
            *peak = peak.max(mag * (1.0 + r * r).powf(n as f64 / 2.0));
        }
    }
    let hi = peaks.iter().copied().fold(0.0, f64::max);
    let lo = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(CheckRecord::measured(
        "poisson_decay",
        "|P(x')| <= C (1+|x'|^2)^{-n/2}, C stable across decades",
        if lo > 0.0 { hi / lo } else { f64::INFINITY },
        5.0,
    ));

    // K(l x', l t) = l^{1-n} K(x', t).
    let mut d_dil = 0.0f64;
    for _ in 0..params.sample_points.min(10) {
        let l: f64 = rng.gen_range(0.3..3.0);
        let t: f64 = rng.gen_range(0.2..2.0);
        let xp: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a = p.dilated(&xp, t)?;
        let xl: Vec<f64> = xp.iter().map(|v| v * l).collect();
        let b = p.dilated(&xl, l * t)?;
        let factor = l.powi(n as i32 - 1);
        d_dil = d_dil.max(b.scale(Complex64::new(factor, 0.0)).sub(&a).max_abs());
    }
    report.push(CheckRecord::measured(
        "poisson_dilation_scaling",
        "K(l x', l t) = l^{1-n} K(x', t)",
        d_dil,
        1e-8,
    ));

    // L K = 0 pointwise (finite differences on the dilation kernel).
    let mut d_null = 0.0f64;
    let h = 1e-3;
    for &(s, t) in &[(0.0, 1.0), (0.5, 0.8), (-1.0, 1.5)] {
        let base: Vec<f64> = if n == 2 { vec![s, t] } else { vec![s, 0.3, t] };
        let kf = |x: &[f64]| -> Result<crate::linalg::CMat> {
            p.dilated(&x[..n - 1], x[n - 1])
        };
        // Apply the coefficient tensor through second differences.
        let mut lk = crate::linalg::CMat::zeros(system.size());
        let mut scale = 0.0f64;
        for r in 0..n {
            for sdx in 0..n {
                let second = if r == sdx {
                    let mut xp2 = base.clone();
                    xp2[r] += h;
                    let mut xm = base.clone();
                    xm[r] -= h;
                    let c = kf(&base)?;
                    kf(&xp2)?
                        .add(&kf(&xm)?)
                        .sub(&c.scale(Complex64::new(2.0, 0.0)))
                        .scale(Complex64::new(1.0 / (h * h), 0.0))
                } else {
                    let mut pp = base.clone();
                    pp[r] += h;
                    pp[sdx] += h;
                    let mut pm = base.clone();
                    pm[r] += h;
                    pm[sdx] -= h;
                    let mut mp = base.clone();
                    mp[r] -= h;
                    mp[sdx] += h;
                    let mut mm = base.clone();
                    mm[r] -= h;
                    mm[sdx] -= h;
                    kf(&pp)?
                        .sub(&kf(&pm)?)
                        .sub(&kf(&mp)?)
                        .add(&kf(&mm)?)
                        .scale(Complex64::new(1.0 / (4.0 * h * h), 0.0))
                };
                for alpha in 0..system.size() {
                    for beta in 0..system.size() {
                        let a = system.coeff(alpha, beta, r, sdx);
                        if a.norm() == 0.0 {
                            continue;
                        }
                        for col in 0..system.size() {
                            let term = a * second.get(beta, col);
                            let cur = lk.get(alpha, col);
                            lk.set(alpha, col, cur + term);
                            scale = scale.max(term.norm());
                        }
                    }
                }
            }
        }
        d_null = d_null.max(lk.max_abs() / scale.max(1e-300));
    }
    report.push(CheckRecord::measured(
        "poisson_null_solution",
        "L K = 0 in the half-space (relative FD residual)",
        d_null,
        1e-5,
    ));

    Ok(report)
}

/// Dirichlet-problem battery: constant-datum exactness, the harmonic
/// semigroup oracle, interior operator residuals, trace certificates and
/// the maximal-function domination constant.
pub fn dirichlet_suite(
    system: &EllipticSystem,
    cfg: &QuadratureConfig,
    params: &SuiteParams,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let n = system.dimension();
    let m = system.size();
    let dim = n - 1;
    let kernels = match HalfSpaceKernels::new(system.clone(), cfg.clone()) {
        Ok(k) => k,
        Err(Error::RouteUnavailable(reason)) => {
            report.push(CheckRecord::skipped(
                "dirichlet_all",
                "u = P_t * f solves the Dirichlet problem",
                format!("RouteUnavailable: {reason}"),
            ));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let p = match kernels.poisson_kernel() {
        Ok(p) => p,
        Err(Error::RouteUnavailable(reason)) => {
            report.push(CheckRecord::skipped(
                "dirichlet_all",
                "u = P_t * f solves the Dirichlet problem",
                format!("RouteUnavailable: {reason}"),
            ));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Constant datum reproduced up to the normalization defect.
    let ones = vec![Complex64::new(1.0, 0.0); m];
    let sol_const = solve(&p, BoundaryDatum::constant(dim, ones.clone())?)?;
    let mut d_const = 0.0f64;
    for _ in 0..params.sample_points.min(6) {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        x.push(rng.gen_range(0.3..2.0));
        let u = sol_const.eval(&x)?;
        let gap = u
            .iter()
            .zip(ones.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        d_const = d_const.max(gap);
    }
    report.push(CheckRecord::measured(
        "dirichlet_constant_datum",
        "f = 1 gives u = 1 (normalization)",
        d_const,
        (2.0 * p.normalization_defect()).max(1e-3),
    ));

    // Harmonic semigroup: P_t * P_s = P_{t+s} (Laplacian, n = 2).
    if is_laplacian(system) && n == 2 {
        let sol = solve(&p, BoundaryDatum::harmonic_kernel_slice(dim, 1.0)?)?;
        let mut d_semi = 0.0f64;
        for (xp, t) in [(0.0, 0.5), (1.5, 1.0), (-1.0, 0.25), (3.0, 2.0)] {
            let u = sol.eval(&[xp, t])?;
            let s = 1.0 + t;
            let expected = (1.0 / std::f64::consts::PI) * s / (s * s + xp * xp);
            d_semi = d_semi.max((u[0] - Complex64::new(expected, 0.0)).norm());
        }
        report.push(CheckRecord::measured(
            "dirichlet_semigroup",
            "P_t * P_s = P_{t+s} for the harmonic kernel",
            d_semi,
            1e-5,
        ));
    } else {
        report.push(CheckRecord::skipped(
            "dirichlet_semigroup",
            "P_t * P_s = P_{t+s}",
            "semigroup oracle is pinned for the n = 2 Laplacian",
        ));
    }

    // Interior operator residual on a bump datum.
    let datum = BoundaryDatum::gaussian(dim, vec![0.0; dim], 1.0, ones.clone())?;
    let sol = solve(&p, datum)?;
    let mut d_res = 0.0f64;
    for _ in 0..params.interior_points {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        x.push(rng.gen_range(0.4..1.6));
        d_res = d_res.max(sol.residual_relative(&x, 0.02)?);
    }
    report.push(CheckRecord::measured(
        "dirichlet_interior_residual",
        "L u = 0 in the half-space (relative FD residual)",
        d_res,
        1e-3,
    ));

    // Trace certificates at continuity points.
    let mut trace_fail = 0.0f64;
    for k in 0..params.trace_points {
        let mut xp = vec![0.0; dim];
        xp[0] = -1.0 + 2.0 * k as f64 / params.trace_points.max(1) as f64;
        for kappa in [0.5, 1.0, 2.0] {
            let rec = sol.trace_check(&xp, kappa, 1e-3)?;
            if !rec.converged {
                trace_fail += 1.0;
            }
        }
    }
    report.push(CheckRecord::measured(
        "dirichlet_trace",
        "u -> f nontangentially at continuity points",
        trace_fail,
        0.0,
    ));

    // N_k u <= C M f with a stable fitted constant across two data.
    let domination = |datum: BoundaryDatum| -> Result<Vec<f64>> {
        let f_scalar = {
            let d = datum.clone();
            move |z: &[f64]| -> Complex64 {
                let v = d.eval(z);
                Complex64::new(v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(), 0.0)
            }
        };
        let sol = solve(&p, datum)?;
        let mut cs = Vec::new();
        for kappa in [0.5, 1.0, 2.0] {
            let mut c_fit = 0.0f64;
            let vertices = params.domination_vertices.max(4);
            for j in 0..vertices {
                let mut xp = vec![0.0; dim];
                xp[0] = -3.0 + 6.0 * j as f64 / (vertices - 1) as f64;
                if dim == 2 {
                    xp[1] = 0.4 * xp[0];
                }
                let probe = ConeProbe {
                    t_min: 0.05,
                    t_max: 4.0,
                    radial_levels: if dim == 1 { 10 } else { 6 },
                    angular_samples: if dim == 1 { 6 } else { 8 },
                    ..ConeProbe::new(xp.clone(), kappa)
                };
                let u = |pt: &[f64]| -> Result<Vec<Complex64>> { sol.eval(pt) };
                let nu = nt_max(&u, &probe, &ExcludedRegion::none())?;
                let mf = hl_maximal(&f_scalar, dim, &xp, 1e2, 25);
                if mf > 1e-12 {
                    c_fit = c_fit.max(nu / mf);
                }
            }
            cs.push(c_fit);
        }
        Ok(cs)
    };
    let c1 = domination(BoundaryDatum::gaussian(dim, vec![0.0; dim], 1.0, ones.clone())?)?;
    let c2 = domination(BoundaryDatum::indicator(dim, vec![0.5; dim], 1.0, ones)?)?;
    let mut d_dom = 0.0f64;
    for (a, b) in c1.iter().zip(c2.iter()) {
        if *a > 0.0 && *b > 0.0 {
            d_dom = d_dom.max((a / b).max(b / a));
        } else {
            d_dom = f64::INFINITY;
        }
    }
    report.push(CheckRecord::measured(
        "dirichlet_maximal_domination",
        "N_k u <= C M f, fitted C stable across data (factor 3)",
        d_dom,
        3.0,
    ));

    Ok(report)
}

/// Maximal-operator battery: frozen values, asymptotics, monotonicity and
/// weighted norms.
pub fn maximal_suite(n: usize, params: &SuiteParams) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let dim = n - 1;
    if dim != 1 && dim != 2 {
        return Err(Error::UnsupportedDimension(n));
    }

    if dim == 1 {
        let f = |p: &[f64]| -> Complex64 {
            Complex64::new(if (0.0..=1.0).contains(&p[0]) { 1.0 } else { 0.0 }, 0.0)
        };
        let got = hl_maximal(&f, 1, &[2.0], 1e3, 60);
        report.push(CheckRecord::measured(
            "maximal_indicator_value",
            "M 1_{[0,1]}(2) = 1/4 at the optimal radius r = 2",
            (got - 0.25).abs(),
            1e-3,
        ));
        let v = weighted_integral(&|p: &[f64]| f(p).norm(), 1, 1.0)?;
        report.push(CheckRecord::measured(
            "maximal_weighted_l1",
            "int_0^1 dx/(1+|x|) = ln 2",
            (v - std::f64::consts::LN_2).abs(),
            1e-6,
        ));
    }

    let c = |_: &[f64]| Complex64::new(1.0, 0.0);
    let mut x0 = vec![0.0; dim];
    x0[0] = 1.0;
    report.push(CheckRecord::measured(
        "maximal_constant",
        "M 1 = 1",
        (hl_maximal(&c, dim, &x0, 1e3, 40) - 1.0).abs(),
        1e-5,
    ));

    // M f ~ (1 + log+|x'|) / (1 + |x'|^{n-1}) for f = (1+|x'|)^{1-n}.
    let f = move |p: &[f64]| -> Complex64 {
        let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        Complex64::new((1.0 + r).powi(-(dim as i32)), 0.0)
    };
    let mut ratios = Vec::new();
    for s in [0.0, 1.0, 10.0, 100.0] {
        let mut x = vec![0.0; dim];
        x[0] = s;
        let mf = hl_maximal(&f, dim, &x, 1e3, 60);
        let model = (1.0 + s.max(1.0).ln()) / (1.0 + s.powi(dim as i32));
        ratios.push(mf / model);
    }
    let hi = ratios.iter().copied().fold(0.0f64, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(CheckRecord::measured(
        "maximal_asymptotics",
        "M (1+|.|)^{1-n} ~ (1+log+|x'|)/(1+|x'|^{n-1}), bracket < 20",
        hi / lo,
        20.0,
    ));

    // Divergence detection for the critical weight.
    let diverged = matches!(
        weighted_integral(&|p: &[f64]| c(p).norm(), dim, dim as f64),
        Err(Error::DivergentNorm)
    );
    report.push(CheckRecord::measured(
        "maximal_critical_weight_divergence",
        "f = 1 is not integrable against dx'/(1+|x'|^{n-1})",
        if diverged { 0.0 } else { 1.0 },
        0.0,
    ));

    // Pointwise domination at continuity points and aperture monotonicity.
    let g = |p: &[f64]| -> Complex64 {
        let r2: f64 = p.iter().map(|v| v * v).sum();
        Complex64::new((-r2).exp(), 0.0)
    };
    let mut d_dom = 0.0f64;
    for s in [0.0, 0.5, 1.5] {
        let mut x = vec![0.0; dim];
        x[0] = s;
        let mf = hl_maximal(&g, dim, &x, 1e3, 50);
        d_dom = d_dom.max(g(&x).norm() - mf);
    }
    report.push(CheckRecord::measured(
        "maximal_pointwise_domination",
        "|f(x')| <= M f(x') at continuity points",
        d_dom,
        1e-6,
    ));

    let u = |p: &[f64]| -> Result<Vec<Complex64>> {
        let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(vec![Complex64::new(1.0 / (1.0 + r), 0.0)])
    };
    let vertex = vec![0.7; dim];
    let mut last = 0.0f64;
    let mut monotone_defect = 0.0f64;
    for kappa in [0.5, 1.0, 2.0] {
        let probe = ConeProbe {
            t_min: 1e-3,
            t_max: 1e2,
            radial_levels: 24,
            angular_samples: 16,
            ..ConeProbe::new(vertex.clone(), kappa)
        };
        let sup = nt_max(&u, &probe, &ExcludedRegion::none())?;
        monotone_defect = monotone_defect.max(last - sup);
        last = sup;
    }
    report.push(CheckRecord::measured(
        "nt_max_aperture_monotonicity",
        "N_k u is nondecreasing in the aperture",
        monotone_defect,
        0.0,
    ));

    let _ = params;
    let _ = ball_mean(&c, dim, &x0, 1.0);
    Ok(report)
}

/// Convenience: full suite for one system, as run by `verify --suite all`.
pub fn verify_all(
    system: &EllipticSystem,
    cfg: &QuadratureConfig,
    params: &SuiteParams,
) -> Result<VerificationReport> {
    run_suite(Suite::All, system, cfg, params)
}
