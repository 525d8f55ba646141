//! The canonical fundamental solution `E` of a weakly elliptic system.
//!
//! For n = 3 the sphere-integral formula reduces, after one distributional
//! Laplacian, to a great-circle integral of the inverse symbol:
//!
//! ```text
//! E(x) = -1/(8 pi^2 |x|) * integral over { xi in S^2 : xi . x = 0 } of
//!        [L(xi)]^{-1} dH^1(xi)
//! ```
//!
//! For n = 2 the solution splits as `E(x) = Phi(x/|x|) + C ln|x|` where `C`
//! is the matrix `1/(4 pi^2) int_{S^1} [L(xi)]^{-1}` and `Phi` involves the
//! log-kernel `ln |cos(theta - phi)|`. That kernel has the classical Fourier
//! expansion `-ln 2 + sum_k (-1)^{k+1} cos(2k psi)/k`, so pairing it with the
//! Fourier coefficients of the (smooth, periodic) inverse symbol gives a
//! product quadrature that converges spectrally and is exact for symbols
//! with constant inverse. The symbol FFT is computed once per evaluator.
//!
//! Derivatives use nested central differences with Richardson extrapolation
//! on the relative step; both the circle quadrature and the difference
//! stencils commute exactly with dilations, so homogeneity checks are sharp.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::config::QuadratureConfig;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::quad::gauss_legendre;
use crate::system::{EllipticSystem, EllipticityReport};

/// Per-derivative-order multipliers on the relative step: higher orders need
/// larger steps to keep the rounding error of the nested differences below
/// the truncation error.
const FD_STEP_SCALE: [f64; 3] = [1.0, 100.0, 500.0];

#[derive(Debug)]
struct LogKernelSpectral {
    /// Fourier coefficients of theta -> [L(xi(theta))]^{-1} at even
    /// frequencies: `plus[k]` holds frequency +2k, `minus[k-1]` holds -2k.
    plus: Vec<CMat>,
    minus: Vec<CMat>,
    kmax: usize,
}

#[derive(Debug)]
pub struct FundamentalEvaluator {
    system: EllipticSystem,
    cfg: QuadratureConfig,
    report: EllipticityReport,
    log_coefficient: CMat,
    spectral: Option<LogKernelSpectral>,
}

impl FundamentalEvaluator {
    /// Build an evaluator; requires weak ellipticity and n in {2, 3}.
    pub fn new(system: EllipticSystem, cfg: QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let n = system.dimension();
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        let report = system.classify(&cfg);
        if !report.weakly_elliptic {
            return Err(Error::NotWeaklyElliptic { min_abs_det: report.min_abs_det });
        }
        let m = system.size();
        let (log_coefficient, spectral) = if n == 2 {
            let spectral = build_spectral(&system, cfg.circle_nodes)?;
            // C = H_hat_0 / (2 pi), from C = 1/(4 pi^2) int_{S^1} H.
            let c2 = spectral.plus[0].scale(Complex64::new(1.0 / (2.0 * PI), 0.0));
            (c2, Some(spectral))
        } else {
            (CMat::zeros(m), None)
        };
        Ok(FundamentalEvaluator { system, cfg, report, log_coefficient, spectral })
    }

    pub fn system(&self) -> &EllipticSystem {
        &self.system
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    pub fn classification(&self) -> &EllipticityReport {
        &self.report
    }

    /// The matrix multiplying ln|x| in the n = 2 splitting; zero for n = 3.
    pub fn log_coefficient(&self) -> &CMat {
        &self.log_coefficient
    }

    /// E(x) for x != 0.
    pub fn eval(&self, x: &[f64]) -> Result<CMat> {
        let n = self.system.dimension();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let r = norm(x);
        if r < 1e-300 {
            return Err(Error::PointAtSingularity);
        }
        match n {
            2 => Ok(self.eval_n2(x, r)),
            3 => self.eval_n3(x, r),
            _ => unreachable!(),
        }
    }

    fn eval_n2(&self, x: &[f64], r: f64) -> CMat {
        let spectral = self.spectral.as_ref().expect("n = 2 evaluator");
        let phi = x[1].atan2(x[0]);
        // I(phi) = -2 pi ln2 * H_0 + sum_k pi (-1)^{k+1}/k *
        //          (H_{+2k} e^{2ik phi} + H_{-2k} e^{-2ik phi})
        let mut acc = spectral.plus[0].scale(Complex64::new(-2.0 * PI * std::f64::consts::LN_2, 0.0));
        let w = Complex64::from_polar(1.0, 2.0 * phi);
        let mut wp = Complex64::new(1.0, 0.0);
        for k in 1..=spectral.kmax {
            wp *= w;
            let ck = PI * if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            acc.add_assign_scaled(&spectral.plus[k], ck * wp);
            acc.add_assign_scaled(&spectral.minus[k - 1], ck * wp.conj());
        }
        let mut out = acc.scale(Complex64::new(1.0 / (4.0 * PI * PI), 0.0));
        out.add_assign_scaled(&self.log_coefficient, Complex64::new(r.ln(), 0.0));
        out
    }

    fn eval_n3(&self, x: &[f64], r: f64) -> Result<CMat> {
        let xhat = [x[0] / r, x[1] / r, x[2] / r];
        let (u, v) = orthonormal_complement(&xhat);
        let nodes = self.cfg.circle_nodes;
        let m = self.system.size();
        let mut acc = CMat::zeros(m);
        let mut xi = [0.0f64; 3];
        for j in 0..nodes {
            let t = 2.0 * PI * j as f64 / nodes as f64;
            let (s, c) = t.sin_cos();
            for i in 0..3 {
                xi[i] = c * u[i] + s * v[i];
            }
            let inv = self
                .system
                .symbol_inverse(&xi)?
                .ok_or(Error::NotWeaklyElliptic { min_abs_det: 0.0 })?;
            acc.add_assign_scaled(&inv, Complex64::new(1.0, 0.0));
        }
        let weight = 2.0 * PI / nodes as f64;
        Ok(acc.scale(Complex64::new(-weight / (8.0 * PI * PI * r), 0.0)))
    }

    /// d^gamma E(x) by nested central differences with Richardson
    /// extrapolation; |gamma| <= 3.
    pub fn eval_derivative(&self, x: &[f64], gamma: &[usize]) -> Result<CMat> {
        self.eval_derivative_with_levels(x, gamma, self.cfg.richardson_levels)
    }

    pub(crate) fn eval_derivative_with_levels(
        &self,
        x: &[f64],
        gamma: &[usize],
        levels: usize,
    ) -> Result<CMat> {
        let n = self.system.dimension();
        if x.len() != n || gamma.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len().min(gamma.len()) });
        }
        let order: usize = gamma.iter().sum();
        if order == 0 {
            return self.eval(x);
        }
        if order > 3 {
            return Err(Error::InvalidConfig(format!(
                "derivative order {order} exceeds the supported maximum of 3"
            )));
        }
        let r = norm(x);
        if r < 1e-300 {
            return Err(Error::PointAtSingularity);
        }
        if self.cfg.fd_step * r < 1e-12 {
            return Err(Error::StepUnderflow(self.cfg.fd_step * r));
        }
        let h0 = self.cfg.fd_step * FD_STEP_SCALE[order - 1] * r;
        let mut table: Vec<CMat> = (0..=levels)
            .map(|i| self.nested_fd(x, gamma, h0 / (1 << i) as f64))
            .collect::<Result<_>>()?;
        for j in 1..=levels {
            let factor = (4.0f64).powi(j as i32);
            for i in 0..=(levels - j) {
                let hi = table[i + 1].scale(Complex64::new(factor, 0.0));
                let lo = &table[i];
                table[i] = hi.sub(lo).scale(Complex64::new(1.0 / (factor - 1.0), 0.0));
            }
        }
        Ok(table.swap_remove(0))
    }

    fn nested_fd(&self, x: &[f64], gamma: &[usize], h: f64) -> Result<CMat> {
        let Some(axis) = gamma.iter().position(|&g| g > 0) else {
            return self.eval(x);
        };
        let mut reduced = gamma.to_vec();
        reduced[axis] -= 1;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[axis] += h;
        xm[axis] -= h;
        let fp = self.nested_fd(&xp, &reduced, h)?;
        let fm = self.nested_fd(&xm, &reduced, h)?;
        Ok(fp.sub(&fm).scale(Complex64::new(0.5 / h, 0.0)))
    }

    /// Residual of the defining identity tested against the field
    /// `phi = bump * direction`: returns, for each column index beta,
    ///
    /// ```text
    /// r_beta = int E(x)^T (L^T phi)(x) dx  -  phi_beta(0)
    /// ```
    ///
    /// The integral splits a polar patch around the singularity from the
    /// smooth remainder of the bump support.
    pub fn delta_identity_residual(
        &self,
        bump: &BumpProfile,
        direction: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let n = self.system.dimension();
        let m = self.system.size();
        if bump.center.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: bump.center.len() });
        }
        if direction.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: direction.len() });
        }
        let transposed = self.system.transposed();
        let field = |x: &[f64]| -> Vec<Complex64> {
            lt_phi(&transposed, bump, direction, x)
        };
        let integral = self.integrate_against_field(&field, &bump.center, bump.radius)?;
        let phi0 = bump.value(&vec![0.0; n]);
        Ok((0..m)
            .map(|beta| integral[beta] - phi0 * direction[beta])
            .collect())
    }

    /// Integral of `E(x)^T field(x)` over the ball |x - center| <= radius,
    /// in polar coordinates around the singularity of E at the origin.
    pub(crate) fn integrate_against_field(
        &self,
        field: &dyn Fn(&[f64]) -> Vec<Complex64>,
        center: &[f64],
        radius: f64,
    ) -> Result<Vec<Complex64>> {
        let n = self.system.dimension();
        let m = self.system.size();
        let dist = norm(center);
        let r_hi = dist + radius;
        let origin_inside = dist < radius;

        let integrand = |x: &[f64]| -> Result<Vec<Complex64>> {
            let f = field(x);
            if f.iter().all(|z| z.norm() == 0.0) {
                return Ok(vec![Complex64::new(0.0, 0.0); m]);
            }
            let e = self.eval(x)?;
            Ok(e.transpose().mul_vec(&f))
        };

        if !origin_inside {
            // No singularity inside the support: integrate over the ball
            // around the field's own center instead, where the resolution
            // is spent on the field and not on empty arcs.
            return Ok(crate::quad::integrate_ball_vec(n, center, radius, 8, |x: &[f64]| {
                integrand(x).expect("integrand is smooth off the singularity")
            }));
        }

        let mut edges: Vec<f64> = Vec::new();
        let patch = self.cfg.delta_test_radius.min(0.5 * (radius - dist)).min(0.5 * r_hi);
        // Geometric sub-panels absorb the mild radial singularity of the
        // integrand (r ln r for n = 2).
        edges.extend_from_slice(&[0.0, patch / 64.0, patch / 8.0, patch]);
        let outer = 8;
        for i in 1..=outer {
            edges.push(patch + (r_hi - patch) * i as f64 / outer as f64);
        }

        let radial_rule = gauss_legendre(16);
        let zero = Complex64::new(0.0, 0.0);
        let mut total = vec![zero; m];
        match n {
            2 => {
                let n_ang = 320;
                let mut pt = [0.0f64; 2];
                for w in edges.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b <= a {
                        continue;
                    }
                    for (xi, wi) in radial_rule.0.iter().zip(radial_rule.1.iter()) {
                        let r = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                        let wr = 0.5 * (b - a) * wi * r;
                        for j in 0..n_ang {
                            let t = 2.0 * PI * j as f64 / n_ang as f64;
                            pt[0] = r * t.cos();
                            pt[1] = r * t.sin();
                            let v = integrand(&pt)?;
                            let w_total = wr * 2.0 * PI / n_ang as f64;
                            for (acc, val) in total.iter_mut().zip(v.iter()) {
                                *acc += w_total * val;
                            }
                        }
                    }
                }
            }
            3 => {
                let mu_rule = gauss_legendre(20);
                let n_phi = 40;
                let mut pt = [0.0f64; 3];
                for w in edges.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b <= a {
                        continue;
                    }
                    for (xi, wi) in radial_rule.0.iter().zip(radial_rule.1.iter()) {
                        let r = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                        let wr = 0.5 * (b - a) * wi * r * r;
                        for (mu, wmu) in mu_rule.0.iter().zip(mu_rule.1.iter()) {
                            let s = (1.0 - mu * mu).max(0.0).sqrt();
                            for j in 0..n_phi {
                                let t = 2.0 * PI * j as f64 / n_phi as f64;
                                pt[0] = r * s * t.cos();
                                pt[1] = r * s * t.sin();
                                pt[2] = r * mu;
                                let v = integrand(&pt)?;
                                let w_total = wr * wmu * 2.0 * PI / n_phi as f64;
                                for (acc, val) in total.iter_mut().zip(v.iter()) {
                                    *acc += w_total * val;
                                }
                            }
                        }
                    }
                }
            }
            _ => return Err(Error::UnsupportedDimension(n)),
        }
        Ok(total)
    }
}

/// `(L^T phi)_gamma(x)` for `phi = psi * v` with analytic bump Hessian.
pub(crate) fn lt_phi(
    transposed: &EllipticSystem,
    bump: &BumpProfile,
    direction: &[Complex64],
    x: &[f64],
) -> Vec<Complex64> {
    let n = transposed.dimension();
    let m = transposed.size();
    let zero = Complex64::new(0.0, 0.0);
    let hess = match bump.hessian(x) {
        Some(h) => h,
        None => return vec![zero; m],
    };
    (0..m)
        .map(|gamma| {
            let mut acc = zero;
            for (alpha, v) in direction.iter().enumerate() {
                if v.norm() == 0.0 {
                    continue;
                }
                let mut term = zero;
                for r in 0..n {
                    for s in 0..n {
                        // Transposed tensor: (L^T)^{gamma alpha} = a^{alpha gamma}.
                        term += transposed.coeff(gamma, alpha, r, s) * hess[r * n + s];
                    }
                }
                acc += term * v;
            }
            acc
        })
        .collect()
}

/// The standard compactly supported bump
/// `psi(x) = exp(1 / (|x - c|^2 / rho^2 - 1))` on `|x - c| < rho`, with
/// analytic gradient and Hessian.
#[derive(Clone, Debug)]
pub struct BumpProfile {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BumpProfile {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("bump radius must be positive, got {radius}")));
        }
        Ok(BumpProfile { center, radius })
    }

    fn s(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(self.center.iter())
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        d2 / (self.radius * self.radius)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let s = self.s(x);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 / (s - 1.0)).exp()
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let s = self.s(x);
        if s >= 1.0 {
            return None;
        }
        let g = (1.0 / (s - 1.0)).exp();
        let gp = -g / ((s - 1.0) * (s - 1.0));
        let rho2 = self.radius * self.radius;
        Some(
            x.iter()
                .zip(self.center.iter())
                .map(|(a, c)| gp * 2.0 * (a - c) / rho2)
                .collect(),
        )
    }

    /// Row-major Hessian; `None` (identically zero) outside the support.
    pub fn hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        let s = self.s(x);
        if s >= 1.0 {
            return None;
        }
        let n = x.len();
        let g = (1.0 / (s - 1.0)).exp();
        let sm1 = s - 1.0;
        let gp = -g / (sm1 * sm1);
        let gpp = g * (2.0 * s - 1.0) / (sm1 * sm1 * sm1 * sm1);
        let rho2 = self.radius * self.radius;
        let d: Vec<f64> = x.iter().zip(self.center.iter()).map(|(a, c)| a - c).collect();
        let mut h = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                let mut v = gpp * 4.0 * d[r] * d[c] / (rho2 * rho2);
                if r == c {
                    v += gp * 2.0 / rho2;
                }
                h[r * n + c] = v;
            }
        }
        Some(h)
    }
}

fn build_spectral(system: &EllipticSystem, nodes: usize) -> Result<LogKernelSpectral> {
    let m = system.size();
    // Sample the inverse symbol on the uniform angular grid.
    let mut samples: Vec<CMat> = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let t = 2.0 * PI * j as f64 / nodes as f64;
        let inv = system
            .symbol_inverse(&[t.cos(), t.sin()])?
            .ok_or(Error::NotWeaklyElliptic { min_abs_det: 0.0 })?;
        samples.push(inv);
    }
    // Entrywise FFT -> Fourier coefficients H_hat_m = X_m / N.
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nodes);
    let mut coeffs: Vec<CMat> = vec![CMat::zeros(m); nodes];
    let mut buf = vec![Complex64::new(0.0, 0.0); nodes];
    for a in 0..m {
        for b in 0..m {
            for (dst, sample) in buf.iter_mut().zip(samples.iter()) {
                *dst = sample.get(a, b);
            }
            fft.process(&mut buf);
            for (j, c) in buf.iter().enumerate() {
                coeffs[j].set(a, b, c / nodes as f64);
            }
        }
    }
    let kmax_budget = nodes / 4;
    let plus: Vec<CMat> = (0..=kmax_budget).map(|k| coeffs[2 * k % nodes].clone()).collect();
    let minus: Vec<CMat> = (1..=kmax_budget)
        .map(|k| coeffs[(nodes - 2 * k) % nodes].clone())
        .collect();
    // Trim trailing negligible coefficients; the series then costs O(kmax)
    // per evaluation (a single term for symbols with constant inverse).
    let scale = plus[0].max_abs().max(1e-300);
    let mut kmax = 0;
    for k in 1..=kmax_budget {
        if plus[k].max_abs() > 1e-16 * scale || minus[k - 1].max_abs() > 1e-16 * scale {
            kmax = k;
        }
    }
    Ok(LogKernelSpectral {
        plus: plus.into_iter().take(kmax + 1).collect(),
        minus: minus.into_iter().take(kmax).collect(),
        kmax,
    })
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Two orthonormal vectors spanning the plane orthogonal to a unit vector.
fn orthonormal_complement(xhat: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let k = (0..3)
        .min_by(|&i, &j| xhat[i].abs().total_cmp(&xhat[j].abs()))
        .unwrap();
    let mut u = [0.0f64; 3];
    u[k] = 1.0;
    let dot = u[0] * xhat[0] + u[1] * xhat[1] + u[2] * xhat[2];
    for i in 0..3 {
        u[i] -= dot * xhat[i];
    }
    let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    for v in u.iter_mut() {
        *v /= nu;
    }
    let v = [
        xhat[1] * u[2] - xhat[2] * u[1],
        xhat[2] * u[0] - xhat[0] * u[2],
        xhat[0] * u[1] - xhat[1] * u[0],
    ];
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Builtin;
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn evaluator(kind: &Builtin, n: usize) -> FundamentalEvaluator {
        let sys = EllipticSystem::builtin(kind, n).unwrap();
        FundamentalEvaluator::new(sys, QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn laplacian_log_coefficient_n2() {
        let ev = evaluator(&Builtin::Laplacian, 2);
        assert_relative_eq!(
            ev.log_coefficient().get(0, 0).re,
            1.0 / (2.0 * PI),
            epsilon = 1e-13
        );
        assert_relative_eq!(ev.log_coefficient().get(0, 0).im, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn laplacian_n3_log_coefficient_is_zero() {
        let ev = evaluator(&Builtin::Laplacian, 3);
        assert_relative_eq!(ev.log_coefficient().max_abs(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn l_lambda_log_coefficient_closed_form() {
        // 1/(4 pi^2) int dtheta / (cos^2 + lambda sin^2) = 1/(2 pi sqrt(lambda)).
        for lambda in [cx(2.0, 0.0), cx(2.0, 1.0), cx(0.5, -0.3)] {
            let sys = EllipticSystem::builtin(&Builtin::LLambda(lambda), 2).unwrap();
            let ev = FundamentalEvaluator::new(sys, QuadratureConfig::default()).unwrap();
            let expected = (2.0 * PI * lambda.sqrt()).inv();
            let got = ev.log_coefficient().get(0, 0);
            assert_relative_eq!(got.re, expected.re, epsilon = 1e-12);
            assert_relative_eq!(got.im, expected.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn lame_log_coefficient_closed_form() {
        // (1/(4 pi mu)) (lambda + 3 mu)/(lambda + 2 mu) I for the 2d system.
        let sys = EllipticSystem::builtin(&Builtin::Lame { mu: 1.0, lambda: 1.0 }, 2).unwrap();
        let ev = FundamentalEvaluator::new(sys, QuadratureConfig::default()).unwrap();
        let expected = 1.0 / (3.0 * PI);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { expected } else { 0.0 };
                assert_relative_eq!(ev.log_coefficient().get(i, j).re, want, epsilon = 1e-12);
                assert_relative_eq!(ev.log_coefficient().get(i, j).im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn not_weakly_elliptic_is_rejected() {
        let sys = EllipticSystem::builtin(&Builtin::LLambda(cx(-1.0, 0.0)), 2).unwrap();
        match FundamentalEvaluator::new(sys, QuadratureConfig::default()) {
            Err(Error::NotWeaklyElliptic { .. }) => {}
            other => panic!("expected NotWeaklyElliptic, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_dimension_is_rejected() {
        let sys = EllipticSystem::builtin(&Builtin::Laplacian, 4).unwrap();
        match FundamentalEvaluator::new(sys, QuadratureConfig::default()) {
            Err(Error::UnsupportedDimension(4)) => {}
            other => panic!("expected UnsupportedDimension, got {other:?}"),
        }
    }

    #[test]
    fn laplacian_closed_form_n2() {
        // E(x) = ln(|x|/2) / (2 pi); zero at |x| = 2.
        let ev = evaluator(&Builtin::Laplacian, 2);
        let e = ev.eval(&[2.0, 0.0]).unwrap();
        assert!(e.get(0, 0).norm() < 1e-12);
        let e = ev.eval(&[0.3, -0.4]).unwrap();
        assert_relative_eq!(e.get(0, 0).re, (0.5f64 / 2.0).ln() / (2.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn laplacian_closed_form_n3() {
        let ev = evaluator(&Builtin::Laplacian, 3);
        let e = ev.eval(&[0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(e.get(0, 0).re, -1.0 / (4.0 * PI), epsilon = 1e-12);
        let e = ev.eval(&[1.0, 2.0, -2.0]).unwrap();
        assert_relative_eq!(e.get(0, 0).re, -1.0 / (4.0 * PI * 3.0), epsilon = 1e-12);
    }

    #[test]
    fn l_lambda_n3_closed_form() {
        // Anisotropic rescaling of the Laplacian:
        // E(x) = -1/(4 pi sqrt(lambda)) (|x'|^2 + x_3^2/lambda)^{-1/2};
        // at (0,0,1) this equals -1/(4 pi) for every admissible lambda.
        for lambda in [cx(2.0, 0.0), cx(2.0, 1.0)] {
            let sys = EllipticSystem::builtin(&Builtin::LLambda(lambda), 3).unwrap();
            let ev = FundamentalEvaluator::new(sys, QuadratureConfig::default()).unwrap();
            let e = ev.eval(&[0.0, 0.0, 1.0]).unwrap();
            assert_relative_eq!(e.get(0, 0).re, -1.0 / (4.0 * PI), epsilon = 1e-10);
            assert_relative_eq!(e.get(0, 0).im, 0.0, epsilon = 1e-10);
            let e = ev.eval(&[1.0, 0.0, 0.0]).unwrap();
            let expected = -(4.0 * PI * lambda.sqrt()).inv();
            assert_relative_eq!(e.get(0, 0).re, expected.re, epsilon = 1e-10);
            assert_relative_eq!(e.get(0, 0).im, expected.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn lame_n3_matches_kelvin_matrix() {
        // E(x) = -1/(8 pi mu) [ (l+3m)/(l+2m) I / r + (l+m)/(l+2m) x x^T / r^3 ].
        let (mu, la) = (1.0, 1.0);
        let sys = EllipticSystem::builtin(&Builtin::Lame { mu, lambda: la }, 3).unwrap();
        let ev = FundamentalEvaluator::new(sys, QuadratureConfig::default()).unwrap();
        let x = [0.3, -1.1, 0.7];
        let r = norm(&x);
        let e = ev.eval(&x).unwrap();
        let c1 = (la + 3.0 * mu) / (la + 2.0 * mu);
        let c2 = (la + mu) / (la + 2.0 * mu);
        for i in 0..3 {
            for j in 0..3 {
                let diag = if i == j { c1 / r } else { 0.0 };
                let expected = -(diag + c2 * x[i] * x[j] / (r * r * r)) / (8.0 * PI * mu);
                assert_relative_eq!(e.get(i, j).re, expected, epsilon = 1e-10);
                assert_relative_eq!(e.get(i, j).im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn evenness_and_homogeneity() {
        let ev = evaluator(&Builtin::DiagAnisotropic(vec![cx(2.0, 0.0), cx(3.0, 0.0)]), 2);
        let x = [0.7, -0.2];
        let e1 = ev.eval(&x).unwrap();
        let e2 = ev.eval(&[-x[0], -x[1]]).unwrap();
        assert!(e1.sub(&e2).max_abs() < 1e-13);
        // n = 2 log structure: E(lx) - E(x) = C ln(l).
        for l in [0.5, 2.0, 10.0] {
            let el = ev.eval(&[l * x[0], l * x[1]]).unwrap();
            let diff = el.sub(&e1);
            let expected = ev.log_coefficient().scale(cx(l.ln(), 0.0));
            assert!(diff.sub(&expected).max_abs() < 1e-13);
        }

        let ev3 = evaluator(&Builtin::Laplacian, 3);
        let x3 = [0.3, 0.5, -0.9];
        let e1 = ev3.eval(&x3).unwrap();
        for l in [0.5, 2.0, 10.0] {
            let el = ev3.eval(&[l * x3[0], l * x3[1], l * x3[2]]).unwrap();
            assert!(el.scale(cx(l, 0.0)).sub(&e1).max_abs() < 1e-13);
        }
    }

    #[test]
    fn transposition_and_scaling_laws() {
        let one = cx(1.0, 0.0);
        let sys = EllipticSystem::from_entries(
            2,
            2,
            &[
                (0, 0, 0, 0, one),
                (0, 0, 1, 1, one),
                (1, 1, 0, 0, one),
                (1, 1, 1, 1, one),
                (0, 1, 0, 0, cx(0.8, 0.2)),
            ],
        )
        .unwrap();
        let cfg = QuadratureConfig::default();
        let ev = FundamentalEvaluator::new(sys.clone(), cfg.clone()).unwrap();
        let evt = FundamentalEvaluator::new(sys.transposed(), cfg.clone()).unwrap();
        let x = [0.4, 0.9];
        let e = ev.eval(&x).unwrap();
        let et = evt.eval(&x).unwrap();
        assert!(e.transpose().sub(&et).max_abs() < 1e-12);

        // E^{lambda L} = lambda^{-1} E^L.
        let lambda = cx(2.0, -1.0);
        let evs = FundamentalEvaluator::new(sys.scaled(lambda), cfg).unwrap();
        let es = evs.eval(&x).unwrap();
        assert!(es.scale(lambda).sub(&e).max_abs() < 1e-12);
    }

    #[test]
    fn rotation_invariance_of_laplacian() {
        let ev = evaluator(&Builtin::Laplacian, 2);
        let x = [1.3, -0.4];
        let (c, s) = (1.1f64.cos(), 1.1f64.sin());
        let rx = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
        let d = ev.eval(&x).unwrap().sub(&ev.eval(&rx).unwrap());
        assert!(d.max_abs() < 1e-13);
    }

    #[test]
    fn derivative_closed_forms() {
        let ev3 = evaluator(&Builtin::Laplacian, 3);
        let d = ev3.eval_derivative(&[0.0, 0.0, 1.0], &[0, 0, 1]).unwrap();
        assert_relative_eq!(d.get(0, 0).re, 1.0 / (4.0 * PI), epsilon = 1e-9);

        let ev2 = evaluator(&Builtin::Laplacian, 2);
        let d = ev2.eval_derivative(&[1.0, 0.0], &[1, 0]).unwrap();
        assert_relative_eq!(d.get(0, 0).re, 1.0 / (2.0 * PI), epsilon = 1e-9);
    }

    #[test]
    fn derivative_homogeneity() {
        // |gamma| = 1: degree 2 - n - 1.
        let ev = evaluator(&Builtin::DiagAnisotropic(vec![cx(2.0, 0.0), cx(3.0, 0.0)]), 2);
        let x = [0.6, 0.8];
        let d1 = ev.eval_derivative(&x, &[1, 0]).unwrap();
        let d2 = ev.eval_derivative(&[2.0 * x[0], 2.0 * x[1]], &[1, 0]).unwrap();
        assert!(d2.scale(cx(2.0, 0.0)).sub(&d1).max_abs() < 1e-9);
        // |gamma| = 2 for the n = 3 Laplacian: degree -3.
        let ev3 = evaluator(&Builtin::Laplacian, 3);
        let x3 = [0.5, -0.2, 0.8];
        let d1 = ev3.eval_derivative(&x3, &[1, 0, 1]).unwrap();
        let d2 = ev3
            .eval_derivative(&[3.0 * x3[0], 3.0 * x3[1], 3.0 * x3[2]], &[1, 0, 1])
            .unwrap();
        assert!(d2.scale(cx(27.0, 0.0)).sub(&d1).max_abs() < 1e-8 * d1.max_abs().max(1.0));
    }

    #[test]
    fn derivative_errors() {
        let ev = evaluator(&Builtin::Laplacian, 2);
        match ev.eval_derivative(&[0.0, 0.0], &[1, 0]) {
            Err(Error::PointAtSingularity) => {}
            other => panic!("expected PointAtSingularity, got {other:?}"),
        }
        match ev.eval_derivative(&[1e-9, 0.0], &[1, 0]) {
            Err(Error::StepUnderflow(_)) => {}
            other => panic!("expected StepUnderflow, got {other:?}"),
        }
        match ev.eval_derivative(&[1.0, 0.0], &[2, 2]) {
            Err(Error::InvalidConfig(_)) => {}
            other => panic!("expected order cap error, got {other:?}"),
        }
    }

    #[test]
    fn delta_identity_laplacian_n2() {
        let ev = evaluator(&Builtin::Laplacian, 2);
        let bump = BumpProfile::new(vec![0.0, 0.0], 1.0).unwrap();
        let r = ev.delta_identity_residual(&bump, &[cx(1.0, 0.0)]).unwrap();
        assert!(r[0].norm() < 1e-4, "residual {}", r[0].norm());
        // Shifted bump not containing the singularity: integral must vanish.
        let bump = BumpProfile::new(vec![2.0, 0.5], 0.8).unwrap();
        let r = ev.delta_identity_residual(&bump, &[cx(1.0, 0.0)]).unwrap();
        assert!(r[0].norm() < 1e-6, "residual {}", r[0].norm());
    }

    #[test]
    fn delta_identity_laplacian_n3() {
        let ev = evaluator(&Builtin::Laplacian, 3);
        let bump = BumpProfile::new(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let r = ev.delta_identity_residual(&bump, &[cx(1.0, 0.0)]).unwrap();
        assert!(r[0].norm() < 1e-4, "residual {}", r[0].norm());
    }

    #[test]
    fn delta_identity_complex_system() {
        let sys = EllipticSystem::builtin(&Builtin::LLambda(cx(2.0, 1.0)), 2).unwrap();
        let ev = FundamentalEvaluator::new(sys, QuadratureConfig::default()).unwrap();
        let bump = BumpProfile::new(vec![0.2, -0.1], 1.0).unwrap();
        let r = ev.delta_identity_residual(&bump, &[cx(1.0, 0.0)]).unwrap();
        assert!(r[0].norm() < 1e-3, "residual {}", r[0].norm());
    }

    #[test]
    fn bump_hessian_matches_finite_differences() {
        let bump = BumpProfile::new(vec![0.1, -0.2], 0.9).unwrap();
        let x = [0.3, 0.2];
        let h = 1e-5;
        let hess = bump.hessian(&x).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let mut xpp = x;
                let mut xpm = x;
                let mut xmp = x;
                let mut xmm = x;
                xpp[r] += h;
                xpp[c] += h;
                xpm[r] += h;
                xpm[c] -= h;
                xmp[r] -= h;
                xmp[c] += h;
                xmm[r] -= h;
                xmm[c] -= h;
                let fd = (bump.value(&xpp) - bump.value(&xpm) - bump.value(&xmp)
                    + bump.value(&xmm))
                    / (4.0 * h * h);
                assert_relative_eq!(hess[r * 2 + c], fd, epsilon = 1e-5);
            }
        }
    }
}
