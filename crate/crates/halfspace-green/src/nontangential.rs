//! Cones, nontangential maximal functions and limits, the Hardy-Littlewood
//! maximal operator, and weighted integral functionals.
//!
//! Suprema are taken over grids, so they under-approximate the true
//! supremum; every envelope check built on them is therefore one-sided (a
//! grid sup must still satisfy the claimed upper bound).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{adaptive_gk_vec, gauss_legendre, geometric_edges, golden_section};

/// The cone `{ (y', t) : |y' - vertex| < kappa t }` truncated to
/// `t in [t_min, t_max]`, with its sampling resolution.
#[derive(Clone, Debug)]
pub struct ConeProbe {
    /// Vertex in R^{n-1}.
    pub vertex: Vec<f64>,
    pub kappa: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub radial_levels: usize,
    pub angular_samples: usize,
}

impl ConeProbe {
    pub fn new(vertex: Vec<f64>, kappa: f64) -> Self {
        ConeProbe {
            vertex,
            kappa,
            t_min: 1e-4,
            t_max: 1e3,
            radial_levels: 40,
            angular_samples: 64,
        }
    }

    /// Boundary dimension n - 1.
    pub fn dim(&self) -> usize {
        self.vertex.len()
    }

    /// Membership test for a full point (y', t).
    pub fn contains(&self, point: &[f64]) -> bool {
        let d = self.dim();
        let t = point[d];
        if !(t > 0.0) {
            return false;
        }
        let dist: f64 = point[..d]
            .iter()
            .zip(self.vertex.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        dist < self.kappa * t
    }

    /// Sampling grid: log-spaced heights, sunflower cross-sections.
    pub fn grid_points(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut points = Vec::new();
        let levels = self.radial_levels.max(2);
        let ratio = (self.t_max / self.t_min).ln();
        for k in 0..levels {
            let t = self.t_min * (ratio * k as f64 / (levels - 1) as f64).exp();
            let rho_max = 0.98 * self.kappa * t;
            match d {
                1 => {
                    let half = (self.angular_samples / 2).max(1);
                    points.push(vec![self.vertex[0], t]);
                    for j in 0..half {
                        let rho = rho_max * (j as f64 + 1.0) / half as f64;
                        points.push(vec![self.vertex[0] + rho, t]);
                        points.push(vec![self.vertex[0] - rho, t]);
                    }
                }
                2 => {
                    points.push(vec![self.vertex[0], self.vertex[1], t]);
                    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
                    for j in 0..self.angular_samples {
                        let rho = rho_max * ((j as f64 + 0.5) / self.angular_samples as f64).sqrt();
                        let th = golden * j as f64;
                        points.push(vec![
                            self.vertex[0] + rho * th.cos(),
                            self.vertex[1] + rho * th.sin(),
                            t,
                        ]);
                    }
                }
                _ => unreachable!("boundary dimension is 1 or 2"),
            }
        }
        points
    }
}

#[derive(Clone, Debug)]
pub enum ExcludedRegion {
    None,
    ClosedBall { center: Vec<f64>, radius: f64 },
}

impl ExcludedRegion {
    pub fn none() -> Self {
        ExcludedRegion::None
    }

    pub fn closed_ball(center: Vec<f64>, radius: f64) -> Self {
        ExcludedRegion::ClosedBall { center, radius }
    }

    pub fn excludes(&self, point: &[f64]) -> bool {
        match self {
            ExcludedRegion::None => false,
            ExcludedRegion::ClosedBall { center, radius } => {
                let d: f64 = point
                    .iter()
                    .zip(center.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                d <= *radius
            }
        }
    }
}

/// Grid supremum of |u| over the truncated cone minus the excluded region.
pub fn nt_max<F>(u: &F, probe: &ConeProbe, excl: &ExcludedRegion) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>> + ?Sized,
{
    let mut sup = f64::NEG_INFINITY;
    let mut any = false;
    for p in probe.grid_points() {
        if excl.excludes(&p) {
            continue;
        }
        any = true;
        let v = u(&p)?;
        let mag = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        sup = sup.max(mag);
    }
    if !any {
        return Err(Error::EmptyCone);
    }
    Ok(sup)
}

#[derive(Clone, Debug)]
pub struct NtLimit {
    pub limit: Vec<Complex64>,
    /// Max deviation from the limit over the tail of the descent.
    pub oscillation: f64,
    pub converged: bool,
    pub heights: Vec<f64>,
}

/// Nontangential limit along a geometric descent inside the cone. The
/// certificate fails (converged = false) when the tail oscillation exceeds
/// `tol`; no exception is raised for non-convergence.
pub fn nt_limit<F>(u: &F, probe: &ConeProbe, tol: f64) -> Result<NtLimit>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>> + ?Sized,
{
    let d = probe.dim();
    let mut heights = Vec::new();
    let mut t = probe.t_max.min(1.0);
    while t >= probe.t_min {
        heights.push(t);
        t *= 0.5;
    }
    if heights.len() < 3 {
        return Err(Error::InvalidConfig("cone truncation leaves too few levels".into()));
    }
    // Axis values plus one off-axis sample per level keep the limit honest
    // about the conical (not just vertical) approach.
    let mut axis_values = Vec::new();
    let mut off_values = Vec::new();
    for (k, &t) in heights.iter().enumerate() {
        let mut p = probe.vertex.clone();
        p.push(t);
        axis_values.push(u(&p)?);
        let mut q = probe.vertex.clone();
        let side = if k % 2 == 0 { 1.0 } else { -1.0 };
        q[0] += side * 0.5 * probe.kappa * t;
        q.push(t);
        off_values.push(u(&q)?);
    }
    let limit = axis_values.last().unwrap().clone();
    let tail = 4.min(heights.len());
    let mut oscillation = 0.0f64;
    for k in heights.len() - tail..heights.len() {
        for values in [&axis_values, &off_values] {
            let dev = values[k]
                .iter()
                .zip(limit.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            oscillation = oscillation.max(dev);
        }
    }
    let _ = d;
    Ok(NtLimit { converged: oscillation <= tol, limit, oscillation, heights })
}

/// Mean of |f| over the ball B(x', r) in dimension `dim` (1 or 2).
pub fn ball_mean<F>(f: &F, dim: usize, x: &[f64], r: f64) -> f64
where
    F: Fn(&[f64]) -> Complex64 + ?Sized,
{
    match dim {
        1 => {
            let g = |z: f64| vec![Complex64::new(f(&[z]).norm(), 0.0)];
            let (v, _) = adaptive_gk_vec(&g, x[0] - r, x[0] + r, 1e-10, 120);
            v[0].re / (2.0 * r)
        }
        2 => {
            let rule = gauss_legendre(8);
            let n_ang = 48;
            let edges = {
                let mut e = vec![0.0];
                e.extend(geometric_edges(r * 1e-3, r, 1.6));
                e
            };
            let two_pi = 2.0 * std::f64::consts::PI;
            let mut acc = 0.0;
            for w in edges.windows(2) {
                for (xi, wi) in rule.0.iter().zip(rule.1.iter()) {
                    let rr = 0.5 * (w[0] + w[1]) + 0.5 * (w[1] - w[0]) * xi;
                    let wr = 0.5 * (w[1] - w[0]) * wi * rr * two_pi / n_ang as f64;
                    for j in 0..n_ang {
                        let th = two_pi * j as f64 / n_ang as f64;
                        acc += wr * f(&[x[0] + rr * th.cos(), x[1] + rr * th.sin()]).norm();
                    }
                }
            }
            acc / (std::f64::consts::PI * r * r)
        }
        _ => unreachable!("boundary dimension is 1 or 2"),
    }
}

/// Hardy-Littlewood maximal function by a geometric radius sweep with a
/// golden-section refinement around the best level (a coarse grid alone can
/// miss the optimal radius by the grid ratio).
pub fn hl_maximal<F>(f: &F, dim: usize, x: &[f64], r_max: f64, levels: usize) -> f64
where
    F: Fn(&[f64]) -> Complex64 + ?Sized,
{
    let r_min = 1e-3f64;
    let levels = levels.max(2);
    let mut best = (r_min, f64::NEG_INFINITY);
    for k in 0..levels {
        let r = r_min * (r_max / r_min).powf(k as f64 / (levels - 1) as f64);
        let mean = ball_mean(f, dim, x, r);
        if mean > best.1 {
            best = (r, mean);
        }
    }
    // Refine on log-radius around the best grid level.
    let ratio = (r_max / r_min).powf(1.0 / (levels - 1) as f64);
    let lo = (best.0 / ratio).max(r_min).ln();
    let hi = (best.0 * ratio).min(r_max).ln();
    let (_, neg_max) = golden_section(|lr: f64| -ball_mean(f, dim, x, lr.exp()), lo, hi, 40);
    best.1.max(-neg_max)
}

#[derive(Clone, Debug)]
pub struct WeightedNorms {
    /// int |f| dx' / (1 + |x'|^m)
    pub weighted_l1: f64,
    /// int (M f) dx' / (1 + |x'|^m)
    pub z_norm: f64,
}

/// Truncated weighted integral of |g| against dx'/(1 + |x'|^m) over doubling
/// annuli, with divergence detection: the partial sums must stabilize.
pub fn weighted_integral<G>(g: &G, dim: usize, m: f64) -> Result<f64>
where
    G: Fn(&[f64]) -> f64 + ?Sized,
{
    let weight = move |p: &[f64]| -> f64 {
        let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        1.0 / (1.0 + r.powf(m))
    };
    let mut total = 0.0;
    let mut increments: Vec<f64> = Vec::new();
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..24 {
        let inc = match dim {
            1 => {
                let h = |z: f64| vec![Complex64::new(g(&[z]).abs() * weight(&[z]), 0.0)];
                let (a, _) = adaptive_gk_vec(&h, lo, hi, 1e-9, 80);
                let (b, _) = adaptive_gk_vec(&h, -hi, -lo, 1e-9, 80);
                a[0].re + b[0].re
            }
            2 => {
                let rule = gauss_legendre(10);
                let n_ang = 32;
                let two_pi = 2.0 * std::f64::consts::PI;
                let mut acc = 0.0;
                let panels = 4;
                for p in 0..panels {
                    let a = lo + (hi - lo) * p as f64 / panels as f64;
                    let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
                    for (xi, wi) in rule.0.iter().zip(rule.1.iter()) {
                        let rr = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                        let wr = 0.5 * (b - a) * wi * rr * two_pi / n_ang as f64;
                        for j in 0..n_ang {
                            let th = two_pi * j as f64 / n_ang as f64;
                            let pt = [rr * th.cos(), rr * th.sin()];
                            acc += wr * g(&pt).abs() * weight(&pt);
                        }
                    }
                }
                acc
            }
            _ => return Err(Error::UnsupportedDimension(dim + 1)),
        };
        total += inc;
        increments.push(inc);
        lo = hi;
        hi *= 2.0;
    }
    // Divergence: tail increments neither small nor geometrically decaying.
    let tail = &increments[increments.len() - 4..];
    let decaying = tail.windows(2).all(|w| w[1] <= 0.7 * w[0] + 1e-300);
    let small = tail.iter().all(|v| *v < 1e-9 * (1.0 + total.abs()));
    if !decaying && !small {
        return Err(Error::DivergentNorm);
    }
    // Geometric tail estimate from the final increment.
    let last = *increments.last().unwrap();
    let prev = increments[increments.len() - 2];
    if prev > 0.0 {
        let q = (last / prev).min(0.9);
        total += last * q / (1.0 - q);
    }
    Ok(total)
}

/// Weighted L^1 norm of |f| and of its Hardy-Littlewood maximal function.
pub fn weighted_norms<F>(f: &F, dim: usize, m: f64) -> Result<WeightedNorms>
where
    F: Fn(&[f64]) -> Complex64 + ?Sized,
{
    let abs_f = |p: &[f64]| f(p).norm();
    let weighted_l1 = weighted_integral(&abs_f, dim, m)?;
    let maximal = |p: &[f64]| hl_maximal(f, dim, p, 1e3, 40);
    let z_norm = weighted_integral(&maximal, dim, m)?;
    Ok(WeightedNorms { weighted_l1, z_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nt_max_monotone_radial_decay() {
        // u(y) = 1/(1 + |y|): the sup over the truncated cone sits at the tip.
        let u = |p: &[f64]| -> Result<Vec<Complex64>> {
            let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(vec![Complex64::new(1.0 / (1.0 + r), 0.0)])
        };
        let probe = ConeProbe { t_min: 1e-4, ..ConeProbe::new(vec![0.0], 1.0) };
        let sup = nt_max(&u, &probe, &ExcludedRegion::none()).unwrap();
        assert!((sup - 1.0).abs() < 1e-3, "sup = {sup}");
    }

    #[test]
    fn nt_max_constant_and_monotone_in_aperture() {
        let u = |_: &[f64]| -> Result<Vec<Complex64>> { Ok(vec![Complex64::new(0.7, 0.0)]) };
        let probe = ConeProbe::new(vec![1.0], 1.0);
        assert_relative_eq!(
            nt_max(&u, &probe, &ExcludedRegion::none()).unwrap(),
            0.7,
            epsilon = 1e-12
        );
        // Monotone in aperture for a fixed function.
        let v = |p: &[f64]| -> Result<Vec<Complex64>> {
            Ok(vec![Complex64::new(p[0], 0.0)])
        };
        let narrow = ConeProbe::new(vec![0.0], 0.5);
        let wide = ConeProbe::new(vec![0.0], 2.0);
        let s1 = nt_max(&v, &narrow, &ExcludedRegion::none()).unwrap();
        let s2 = nt_max(&v, &wide, &ExcludedRegion::none()).unwrap();
        assert!(s2 >= s1);
    }

    #[test]
    fn nt_max_restricted_below_full() {
        let u = |p: &[f64]| -> Result<Vec<Complex64>> {
            let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(vec![Complex64::new(1.0 / (1.0 + r), 0.0)])
        };
        let probe = ConeProbe::new(vec![0.0], 1.0);
        let full = nt_max(&u, &probe, &ExcludedRegion::none()).unwrap();
        let restricted =
            nt_max(&u, &probe, &ExcludedRegion::closed_ball(vec![0.0, 0.0], 0.5)).unwrap();
        assert!(restricted <= full);
    }

    #[test]
    fn nt_max_empty_cone() {
        let u = |_: &[f64]| -> Result<Vec<Complex64>> { Ok(vec![Complex64::new(1.0, 0.0)]) };
        let probe = ConeProbe {
            t_min: 0.1,
            t_max: 0.2,
            ..ConeProbe::new(vec![0.0], 1.0)
        };
        let excl = ExcludedRegion::closed_ball(vec![0.0, 0.15], 10.0);
        match nt_max(&u, &probe, &excl) {
            Err(Error::EmptyCone) => {}
            other => panic!("expected EmptyCone, got {other:?}"),
        }
    }

    #[test]
    fn nt_limit_linear_height() {
        let u = |p: &[f64]| -> Result<Vec<Complex64>> {
            Ok(vec![Complex64::new(p[1], 0.0)])
        };
        let probe = ConeProbe { t_min: 1e-6, ..ConeProbe::new(vec![0.0], 1.0) };
        let lim = nt_limit(&u, &probe, 1e-3).unwrap();
        assert!(lim.converged);
        assert!(lim.limit[0].norm() < 1e-5);
    }

    #[test]
    fn hl_maximal_frozen_values() {
        // Indicator of [0,1] seen from x = 2: the best radius is r = 2 with
        // mean (r-1)/(2r) -> 1/4.
        let f = |p: &[f64]| -> Complex64 {
            Complex64::new(if (0.0..=1.0).contains(&p[0]) { 1.0 } else { 0.0 }, 0.0)
        };
        let m = hl_maximal(&f, 1, &[2.0], 1e3, 60);
        assert_relative_eq!(m, 0.25, epsilon = 1e-3);
        // Constant function.
        let c = |_: &[f64]| Complex64::new(1.0, 0.0);
        assert_relative_eq!(hl_maximal(&c, 1, &[5.0], 1e3, 60), 1.0, epsilon = 1e-9);
        assert_relative_eq!(hl_maximal(&c, 2, &[1.0, 2.0], 1e3, 40), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn hl_maximal_dominates_at_continuity_points() {
        let f = |p: &[f64]| Complex64::new((-p[0] * p[0]).exp(), 0.0);
        for x in [0.0, 0.7, 2.0] {
            let m = hl_maximal(&f, 1, &[x], 1e3, 60);
            assert!(m >= f(&[x]).norm() * (1.0 - 1e-6));
        }
    }

    #[test]
    fn weighted_l1_frozen_value() {
        // int_0^1 dx/(1+|x|) = ln 2.
        let f = |p: &[f64]| -> Complex64 {
            Complex64::new(if (0.0..=1.0).contains(&p[0]) { 1.0 } else { 0.0 }, 0.0)
        };
        let v = weighted_integral(&|p: &[f64]| f(p).norm(), 1, 1.0).unwrap();
        assert_relative_eq!(v, std::f64::consts::LN_2, epsilon = 1e-8);
    }

    #[test]
    fn weighted_norm_divergence_detected() {
        // f = 1 with weight 1/(1+|x|^{n-1}) diverges in R^{n-1}.
        let f = |_: &[f64]| Complex64::new(1.0, 0.0);
        match weighted_integral(&|p: &[f64]| f(p).norm(), 1, 1.0) {
            Err(Error::DivergentNorm) => {}
            other => panic!("expected DivergentNorm, got {other:?}"),
        }
        match weighted_integral(&|p: &[f64]| f(p).norm(), 2, 2.0) {
            Err(Error::DivergentNorm) => {}
            other => panic!("expected DivergentNorm, got {other:?}"),
        }
        // Zero function is trivially fine.
        let z = weighted_norms(&|_: &[f64]| Complex64::new(0.0, 0.0), 1, 1.0).unwrap();
        assert_eq!(z.weighted_l1, 0.0);
        assert_eq!(z.z_norm, 0.0);
    }

    #[test]
    fn maximal_asymptotics_ratio_bracket() {
        // For f = (1+|x'|)^{1-n}, M f is comparable to
        // (1 + log+ |x'|)/(1 + |x'|^{n-1}) with dimensional constants.
        for dim in [1usize, 2] {
            let f = move |p: &[f64]| -> Complex64 {
                let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                Complex64::new((1.0 + r).powi(-(dim as i32)), 0.0)
            };
            let mut ratios = Vec::new();
            for s in [0.0, 1.0, 10.0, 100.0] {
                let mut x = vec![0.0; dim];
                x[0] = s;
                let m = hl_maximal(&f, dim, &x, 1e3, 60);
                let model = (1.0 + s.max(1.0).ln()) / (1.0 + s.powi(dim as i32));
                ratios.push(m / model);
            }
            let hi = ratios.iter().copied().fold(0.0f64, f64::max);
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(hi / lo < 20.0, "dim {dim}: bracket {}", hi / lo);
        }
    }
}
