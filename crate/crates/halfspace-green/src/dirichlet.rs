//! The half-space Dirichlet problem by Poisson convolution:
//! `u(x', t) = int P_t(x' - z') f(z') dz'`.
//!
//! Admissible data are integrable against `dx'/(1 + |x'|^n)`; the solver
//! truncates the convolution according to the datum's decay class and the
//! kernel decay, with exact truncation for compactly supported data.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfspace::PoissonKernel;
use crate::nontangential::weighted_integral;
use crate::quad::{adaptive_gk_vec, gauss_legendre};

#[derive(Clone, Debug)]
pub enum DecayClass {
    /// Supported in the ball of the given radius around the origin.
    CompactSupport { radius: f64 },
    /// |f(z')| = O(|z'|^{-power}).
    Algebraic { power: f64 },
    Bounded,
}

type DatumFn = dyn Fn(&[f64]) -> Vec<Complex64> + Send + Sync;

/// A boundary datum f : R^{n-1} -> C^M with its decay class and weighted
/// L^1 norm (computed at construction; non-integrable data are rejected).
#[derive(Clone)]
pub struct BoundaryDatum {
    dim: usize,
    components: usize,
    f: Arc<DatumFn>,
    decay: DecayClass,
    weighted_l1: f64,
}

impl BoundaryDatum {
    pub fn new(
        dim: usize,
        components: usize,
        decay: DecayClass,
        f: Arc<DatumFn>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim + 1));
        }
        let m = (dim + 1) as f64;
        let g = {
            let f = f.clone();
            move |p: &[f64]| -> f64 {
                f(p).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            }
        };
        let weighted_l1 = weighted_integral(&g, dim, m).map_err(|e| match e {
            Error::DivergentNorm => Error::DatumNotIntegrable,
            other => other,
        })?;
        Ok(BoundaryDatum { dim, components, f, decay, weighted_l1 })
    }

    pub fn constant(dim: usize, value: Vec<Complex64>) -> Result<Self> {
        let components = value.len();
        let v = value.clone();
        Self::new(
            dim,
            components,
            DecayClass::Bounded,
            Arc::new(move |_: &[f64]| v.clone()),
        )
    }

    pub fn gaussian(dim: usize, center: Vec<f64>, sigma: f64, amplitude: Vec<Complex64>) -> Result<Self> {
        let components = amplitude.len();
        let amp = amplitude.clone();
        let c = center.clone();
        let reach = 12.0 * sigma + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Self::new(
            dim,
            components,
            DecayClass::CompactSupport { radius: reach },
            Arc::new(move |p: &[f64]| {
                let d2: f64 = p.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                let g = (-d2 / (2.0 * sigma * sigma)).exp();
                amp.iter().map(|a| a * g).collect()
            }),
        )
    }

    /// Indicator of the ball |z' - center| <= radius.
    pub fn indicator(dim: usize, center: Vec<f64>, radius: f64, amplitude: Vec<Complex64>) -> Result<Self> {
        let components = amplitude.len();
        let amp = amplitude.clone();
        let c = center.clone();
        let reach = radius + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Self::new(
            dim,
            components,
            DecayClass::CompactSupport { radius: reach },
            Arc::new(move |p: &[f64]| {
                let d2: f64 = p.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2.sqrt() <= radius {
                    amp.clone()
                } else {
                    vec![Complex64::new(0.0, 0.0); amp.len()]
                }
            }),
        )
    }

    /// The harmonic Poisson kernel at height s, as a scalar datum:
    /// `(2/omega_{n-1}) s / (s^2 + |z'|^2)^{n/2}`.
    pub fn harmonic_kernel_slice(dim: usize, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::NonpositiveT(s));
        }
        let n = dim + 1;
        let omega = sphere_area(n);
        Self::new(
            dim,
            1,
            DecayClass::Algebraic { power: n as f64 },
            Arc::new(move |p: &[f64]| {
                let r2: f64 = p.iter().map(|v| v * v).sum();
                vec![Complex64::new(
                    2.0 / omega * s / (s * s + r2).powf(n as f64 / 2.0),
                    0.0,
                )]
            }),
        )
    }

    /// Piecewise-linear interpolation of samples on a 1-d grid (zero outside
    /// the sampled range). Sample abscissae must be strictly increasing.
    pub fn grid(xs: Vec<f64>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(Error::Parse("grid datum needs matching xs/values, len >= 2".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("grid abscissae must be strictly increasing".into()));
        }
        let components = values[0].len();
        if values.iter().any(|v| v.len() != components) {
            return Err(Error::Parse("grid rows must have equal component counts".into()));
        }
        let reach = xs.first().unwrap().abs().max(xs.last().unwrap().abs());
        let zero = vec![Complex64::new(0.0, 0.0); components];
        Self::new(
            1,
            components,
            DecayClass::CompactSupport { radius: reach },
            Arc::new(move |p: &[f64]| {
                let x = p[0];
                if x < xs[0] || x > *xs.last().unwrap() {
                    return zero.clone();
                }
                let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
                    Ok(i) => return values[i].clone(),
                    Err(i) => i,
                };
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = (x - x0) / (x1 - x0);
                values[i - 1]
                    .iter()
                    .zip(values[i].iter())
                    .map(|(a, b)| a * (1.0 - w) + b * w)
                    .collect()
            }),
        )
    }

    /// Pointwise linear combination `a f + b g` of equal-shape data.
    pub fn linear_combination(
        a: Complex64,
        f: &BoundaryDatum,
        b: Complex64,
        g: &BoundaryDatum,
    ) -> Result<Self> {
        if f.dim != g.dim || f.components != g.components {
            return Err(Error::DimensionMismatch { expected: f.components, got: g.components });
        }
        let (ff, gg) = (f.f.clone(), g.f.clone());
        let decay = match (&f.decay, &g.decay) {
            (
                DecayClass::CompactSupport { radius: r1 },
                DecayClass::CompactSupport { radius: r2 },
            ) => DecayClass::CompactSupport { radius: r1.max(*r2) },
            (DecayClass::Algebraic { power: p1 }, DecayClass::Algebraic { power: p2 }) => {
                DecayClass::Algebraic { power: p1.min(*p2) }
            }
            (DecayClass::CompactSupport { .. }, DecayClass::Algebraic { power }) => {
                DecayClass::Algebraic { power: *power }
            }
            (DecayClass::Algebraic { power }, DecayClass::CompactSupport { .. }) => {
                DecayClass::Algebraic { power: *power }
            }
            _ => DecayClass::Bounded,
        };
        Self::new(
            f.dim,
            f.components,
            decay,
            Arc::new(move |p: &[f64]| {
                ff(p)
                    .iter()
                    .zip(gg(p).iter())
                    .map(|(x, y)| a * x + b * y)
                    .collect()
            }),
        )
    }

    pub fn eval(&self, p: &[f64]) -> Vec<Complex64> {
        (self.f)(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn decay(&self) -> &DecayClass {
        &self.decay
    }

    pub fn weighted_l1_norm(&self) -> f64 {
        self.weighted_l1
    }
}

/// A solution bound to its kernel and datum; values are produced on demand
/// by truncated convolution.
pub struct Solution {
    kernel: Arc<PoissonKernel>,
    datum: BoundaryDatum,
}

/// Bind the Poisson kernel to an admissible datum.
pub fn solve(kernel: &Arc<PoissonKernel>, datum: BoundaryDatum) -> Result<Solution> {
    let n = kernel.system().dimension();
    if datum.dim() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, got: datum.dim() });
    }
    if datum.components() != kernel.system().size() {
        return Err(Error::DimensionMismatch {
            expected: kernel.system().size(),
            got: datum.components(),
        });
    }
    Ok(Solution { kernel: kernel.clone(), datum })
}

impl Solution {
    pub fn datum(&self) -> &BoundaryDatum {
        &self.datum
    }

    pub fn kernel(&self) -> &Arc<PoissonKernel> {
        &self.kernel
    }

    /// Truncation radius (around the evaluation abscissa) for the target
    /// height, from the kernel decay and the datum decay class.
    fn truncation(&self, xp: &[f64], t: f64) -> f64 {
        let base = 60.0_f64.max(40.0 * t);
        match self.datum.decay() {
            DecayClass::CompactSupport { radius } => {
                // Exact: cover the support seen from xp.
                let off: f64 = xp.iter().map(|v| v.abs()).fold(0.0, f64::max);
                radius + off + 1.0
            }
            DecayClass::Algebraic { .. } => base.max(200.0),
            // Kernel tail ~ t/R^{n-1} per unit datum: push R for small tails.
            DecayClass::Bounded => (2e4 * t).max(2e3),
        }
    }

    /// u(x', t) by truncated convolution.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let n = self.kernel.system().dimension();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let t = x[n - 1];
        if !(t > 0.0) {
            return Err(Error::OutsideHalfSpace(t));
        }
        let xp = &x[..n - 1];
        let m = self.kernel.system().size();
        let radius = self.truncation(xp, t);
        match n {
            2 => {
                let f = |z: f64| -> Vec<Complex64> {
                    let fv = self.datum.eval(&[z]);
                    if fv.iter().all(|c| c.norm() == 0.0) {
                        return vec![Complex64::new(0.0, 0.0); m];
                    }
                    let p = self
                        .kernel
                        .dilated_fast(&[xp[0] - z], t)
                        .expect("kernel evaluation at finite offset");
                    p.mul_vec(&fv)
                };
                // Panel edges at the kernel peak; adaptive refinement does
                // the rest (datum jumps included).
                let mut edges = vec![
                    xp[0] - radius,
                    xp[0] - 8.0 * t,
                    xp[0] - t,
                    xp[0] + t,
                    xp[0] + 8.0 * t,
                    xp[0] + radius,
                ];
                edges.retain(|e| (xp[0] - radius..=xp[0] + radius).contains(e));
                edges.sort_by(f64::total_cmp);
                edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
                let mut acc = vec![Complex64::new(0.0, 0.0); m];
                for w in edges.windows(2) {
                    if w[1] <= w[0] {
                        continue;
                    }
                    let (v, _) = adaptive_gk_vec(&f, w[0], w[1], 1e-9, 160);
                    for (a, b) in acc.iter_mut().zip(v.iter()) {
                        *a += b;
                    }
                }
                Ok(acc)
            }
            3 => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let rule = gauss_legendre(10);
                let n_ang = 40;
                let mut edges: Vec<f64> = vec![0.0];
                let mut r = t.max(1e-3);
                while r < radius {
                    edges.push(r);
                    r *= 2.0;
                }
                // Edges at the datum's reach seen from xp.
                if let DecayClass::CompactSupport { radius: sup } = self.datum.decay() {
                    let off: f64 = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for e in [sup - off, sup + off] {
                        if e > 0.0 && e < radius {
                            edges.push(e);
                        }
                    }
                }
                edges.push(radius);
                edges.sort_by(f64::total_cmp);
                edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                let mut acc = vec![Complex64::new(0.0, 0.0); m];
                for w in edges.windows(2) {
                    if w[1] <= w[0] {
                        continue;
                    }
                    for (xi, wi) in rule.0.iter().zip(rule.1.iter()) {
                        let rr = 0.5 * (w[0] + w[1]) + 0.5 * (w[1] - w[0]) * xi;
                        let wr = 0.5 * (w[1] - w[0]) * wi * rr * two_pi / n_ang as f64;
                        for j in 0..n_ang {
                            let th = two_pi * j as f64 / n_ang as f64;
                            let z = [xp[0] + rr * th.cos(), xp[1] + rr * th.sin()];
                            let fv = self.datum.eval(&z);
                            if fv.iter().all(|c| c.norm() == 0.0) {
                                continue;
                            }
                            let p = self
                                .kernel
                                .dilated_fast(&[xp[0] - z[0], xp[1] - z[1]], t)
                                .expect("kernel evaluation at finite offset");
                            let v = p.mul_vec(&fv);
                            for (a, b) in acc.iter_mut().zip(v.iter()) {
                                *a += wr * b;
                            }
                        }
                    }
                }
                Ok(acc)
            }
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    /// `(L u)(x)` by second-order central differences with step h.
    pub fn residual_operator(&self, x: &[f64], h: f64) -> Result<Vec<Complex64>> {
        Ok(self.residual_parts(x, h)?.0)
    }

    /// `|L u| / sum_{r,s} |a^{..}_{rs} D_{rs} u|`: the residual relative to
    /// the natural cancellation scale of the second differences.
    pub fn residual_relative(&self, x: &[f64], h: f64) -> Result<f64> {
        let (lu, scale) = self.residual_parts(x, h)?;
        let num = lu.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(num / scale.max(1e-300))
    }

    fn residual_parts(&self, x: &[f64], h: f64) -> Result<(Vec<Complex64>, f64)> {
        let system = self.kernel.system();
        let n = system.dimension();
        let m = system.size();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let t = x[n - 1];
        if h >= t / 3.0 {
            return Err(Error::StepTooLarge { h, xn: t });
        }
        // Second differences D_{rs} u for all (r, s), deduplicating stencil
        // evaluations by offset.
        let mut cache: std::collections::HashMap<Vec<i64>, Vec<Complex64>> =
            std::collections::HashMap::new();
        let mut eval_at = |offsets: &[i64]| -> Result<Vec<Complex64>> {
            if let Some(v) = cache.get(offsets) {
                return Ok(v.clone());
            }
            let mut p = x.to_vec();
            for (k, o) in offsets.iter().enumerate() {
                p[k] += h * *o as f64;
            }
            let v = self.eval(&p)?;
            cache.insert(offsets.to_vec(), v.clone());
            Ok(v)
        };
        let zero_off = vec![0i64; n];
        let center = eval_at(&zero_off)?;
        let mut second_diffs: Vec<Vec<Complex64>> = Vec::with_capacity(n * n);
        for r in 0..n {
            for s in 0..n {
                let d = if r == s {
                    let mut op = zero_off.clone();
                    op[r] = 1;
                    let mut om = zero_off.clone();
                    om[r] = -1;
                    let up = eval_at(&op)?;
                    let dn = eval_at(&om)?;
                    (0..m)
                        .map(|i| (up[i] - 2.0 * center[i] + dn[i]) / (h * h))
                        .collect::<Vec<_>>()
                } else {
                    let mut opp = zero_off.clone();
                    opp[r] = 1;
                    opp[s] = 1;
                    let mut opm = zero_off.clone();
                    opm[r] = 1;
                    opm[s] = -1;
                    let mut omp = zero_off.clone();
                    omp[r] = -1;
                    omp[s] = 1;
                    let mut omm = zero_off.clone();
                    omm[r] = -1;
                    omm[s] = -1;
                    let pp = eval_at(&opp)?;
                    let pm = eval_at(&opm)?;
                    let mp = eval_at(&omp)?;
                    let mm = eval_at(&omm)?;
                    (0..m)
                        .map(|i| (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h))
                        .collect::<Vec<_>>()
                };
                second_diffs.push(d);
            }
        }
        let mut lu = vec![Complex64::new(0.0, 0.0); m];
        let mut scale = 0.0f64;
        for alpha in 0..m {
            for beta in 0..m {
                for r in 0..n {
                    for s in 0..n {
                        let a = system.coeff(alpha, beta, r, s);
                        if a.norm() == 0.0 {
                            continue;
                        }
                        let term = a * second_diffs[r * n + s][beta];
                        lu[alpha] += term;
                        scale = scale.max(term.norm());
                    }
                }
            }
        }
        Ok((lu, scale))
    }

    /// Sample u along a conical descent to (x', 0) and compare with f(x').
    pub fn trace_check(&self, xp: &[f64], kappa: f64, tol: f64) -> Result<TraceRecord> {
        let f0 = self.datum.eval(xp);
        let mut heights = Vec::new();
        let mut gaps = Vec::new();
        for k in 0..=11 {
            let t = 2f64.powi(-k);
            let mut p = xp.to_vec();
            // Approach inside the cone, alternating sides.
            let side = if k % 2 == 0 { 1.0 } else { -1.0 };
            p[0] += side * 0.5 * kappa * t;
            p.push(t);
            let u = self.eval(&p)?;
            let gap = u
                .iter()
                .zip(f0.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            heights.push(t);
            gaps.push(gap);
        }
        let last = *gaps.last().unwrap();
        let tail_ok = gaps[gaps.len() - 3..]
            .windows(2)
            .all(|w| w[1] <= 1.2 * w[0] + 1e-12);
        Ok(TraceRecord { converged: last <= tol && tail_ok, heights, gaps })
    }
}

#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub heights: Vec<f64>,
    pub gaps: Vec<f64>,
    pub converged: bool,
}

pub(crate) fn sphere_area(n: usize) -> f64 {
    // |S^{n-1}|: 2 pi for n = 2, 4 pi for n = 3.
    match n {
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("supported dimensions are 2 and 3"),
    }
}

/// Parse a datum from JSON:
/// `{"type": "gaussian"|"indicator"|"constant"|"poisson_kernel_slice"|"grid",
///   ...params}`.
pub fn datum_from_json(value: &serde_json::Value, dim: usize, m: usize) -> Result<BoundaryDatum> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse("datum spec must be a JSON object".into()))?;
    let kind = obj
        .get("type")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Parse("datum spec needs a string `type`".into()))?;
    let amplitude = |key: &str| -> Result<Vec<Complex64>> {
        match obj.get(key) {
            None => Ok(vec![Complex64::new(1.0, 0.0); m]),
            Some(serde_json::Value::Array(a)) => a
                .iter()
                .map(|v| {
                    v.as_f64()
                        .map(|x| Complex64::new(x, 0.0))
                        .ok_or_else(|| Error::Parse(format!("`{key}` entries must be numbers")))
                })
                .collect(),
            Some(serde_json::Value::Number(x)) => {
                Ok(vec![Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0); m])
            }
            _ => Err(Error::Parse(format!("`{key}` must be a number or array"))),
        }
    };
    let center = || -> Vec<f64> {
        obj.get("center")
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
            .unwrap_or_else(|| vec![0.0; dim])
    };
    match kind {
        "constant" => BoundaryDatum::constant(dim, amplitude("value")?),
        "gaussian" => {
            let sigma = obj.get("sigma").and_then(|v| v.as_f64()).unwrap_or(1.0);
            BoundaryDatum::gaussian(dim, center(), sigma, amplitude("amplitude")?)
        }
        "indicator" => {
            let radius = obj.get("radius").and_then(|v| v.as_f64()).unwrap_or(1.0);
            BoundaryDatum::indicator(dim, center(), radius, amplitude("amplitude")?)
        }
        "poisson_kernel_slice" => {
            if m != 1 {
                return Err(Error::Parse(
                    "poisson_kernel_slice is a scalar datum (M = 1)".into(),
                ));
            }
            let s = obj.get("s").and_then(|v| v.as_f64()).unwrap_or(1.0);
            BoundaryDatum::harmonic_kernel_slice(dim, s)
        }
        "grid" => {
            if dim != 1 {
                return Err(Error::Parse("grid data are supported on a 1-d boundary".into()));
            }
            let xs: Vec<f64> = obj
                .get("xs")
                .and_then(|v| v.as_array())
                .map(|a| a.iter().filter_map(|x| x.as_f64()).collect())
                .ok_or_else(|| Error::Parse("grid datum needs `xs`".into()))?;
            let values: Vec<Vec<Complex64>> = obj
                .get("values")
                .and_then(|v| v.as_array())
                .map(|rows| {
                    rows.iter()
                        .map(|row| match row {
                            serde_json::Value::Array(cells) => cells
                                .iter()
                                .map(|c| Complex64::new(c.as_f64().unwrap_or(f64::NAN), 0.0))
                                .collect(),
                            serde_json::Value::Number(x) => {
                                vec![Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)]
                            }
                            _ => vec![Complex64::new(f64::NAN, 0.0)],
                        })
                        .collect()
                })
                .ok_or_else(|| Error::Parse("grid datum needs `values`".into()))?;
            BoundaryDatum::grid(xs, values)
        }
        other => Err(Error::Parse(format!("unknown datum type `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::QuadratureConfig;
    use crate::halfspace::HalfSpaceKernels;
    use crate::system::{Builtin, EllipticSystem};
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn laplacian_kernel(n: usize) -> Arc<PoissonKernel> {
        let sys = EllipticSystem::builtin(&Builtin::Laplacian, n).unwrap();
        HalfSpaceKernels::new(sys, QuadratureConfig::fast())
            .unwrap()
            .poisson_kernel()
            .unwrap()
    }

    #[test]
    fn constant_datum_reproduced() {
        let p = laplacian_kernel(2);
        let datum = BoundaryDatum::constant(1, vec![cx(1.0, 0.0)]).unwrap();
        let sol = solve(&p, datum).unwrap();
        for x in [[0.0, 0.5], [2.0, 1.0], [-1.0, 3.0]] {
            let u = sol.eval(&x).unwrap();
            assert!(
                (u[0] - cx(1.0, 0.0)).norm() < 2.0 * p.normalization_defect().max(1e-4),
                "u = {:?}",
                u[0]
            );
        }
    }

    #[test]
    fn semigroup_identity_n2() {
        // Convolving the harmonic kernel slice at height 1 gives the slice
        // at height 1 + t.
        let p = laplacian_kernel(2);
        let datum = BoundaryDatum::harmonic_kernel_slice(1, 1.0).unwrap();
        let sol = solve(&p, datum).unwrap();
        for (xp, t) in [(0.0, 0.5), (1.0, 1.0), (-2.0, 0.25)] {
            let u = sol.eval(&[xp, t]).unwrap();
            let s = 1.0 + t;
            let expected = (1.0 / std::f64::consts::PI) * s / (s * s + xp * xp);
            assert_relative_eq!(u[0].re, expected, epsilon = 1e-5);
            assert!(u[0].im.abs() < 1e-9);
        }
    }

    #[test]
    fn interior_residual_gaussian_n2() {
        let p = laplacian_kernel(2);
        let datum = BoundaryDatum::gaussian(1, vec![0.0], 1.0, vec![cx(1.0, 0.0)]).unwrap();
        let sol = solve(&p, datum).unwrap();
        let rel = sol.residual_relative(&[0.3, 0.8], 0.02).unwrap();
        assert!(rel < 1e-3, "relative residual {rel}");
    }

    #[test]
    fn step_too_large_rejected() {
        let p = laplacian_kernel(2);
        let datum = BoundaryDatum::constant(1, vec![cx(1.0, 0.0)]).unwrap();
        let sol = solve(&p, datum).unwrap();
        match sol.residual_operator(&[0.0, 0.3], 0.2) {
            Err(Error::StepTooLarge { .. }) => {}
            other => panic!("expected StepTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn trace_convergence_indicator() {
        let p = laplacian_kernel(2);
        let datum =
            BoundaryDatum::indicator(1, vec![0.5], 0.5, vec![cx(1.0, 0.0)]).unwrap();
        let sol = solve(&p, datum).unwrap();
        // x' = 0.5 is an interior continuity point of the indicator.
        let rec = sol.trace_check(&[0.5], 1.0, 1e-3).unwrap();
        assert!(rec.converged, "gaps {:?}", rec.gaps);
    }

    #[test]
    fn linearity_of_solve() {
        let p = laplacian_kernel(2);
        let f = BoundaryDatum::gaussian(1, vec![0.0], 1.0, vec![cx(1.0, 0.0)]).unwrap();
        let g = BoundaryDatum::indicator(1, vec![1.0], 0.5, vec![cx(1.0, 0.0)]).unwrap();
        let (a, b) = (cx(2.0, 0.0), cx(0.0, -1.5));
        let combo = BoundaryDatum::linear_combination(a, &f, b, &g).unwrap();
        let s_f = solve(&p, f).unwrap();
        let s_g = solve(&p, g).unwrap();
        let s_c = solve(&p, combo).unwrap();
        let x = [0.4, 0.7];
        let want = a * s_f.eval(&x).unwrap()[0] + b * s_g.eval(&x).unwrap()[0];
        let got = s_c.eval(&x).unwrap()[0];
        assert!((want - got).norm() < 1e-7);
    }

    #[test]
    fn non_integrable_datum_rejected() {
        // |f| growing like |z|^2 is not integrable against dz/(1+|z|^2).
        let f: Arc<DatumFn> =
            Arc::new(|p: &[f64]| vec![Complex64::new(p[0] * p[0] + 1.0, 0.0)]);
        match BoundaryDatum::new(1, 1, DecayClass::Bounded, f) {
            Err(Error::DatumNotIntegrable) => {}
            Err(other) => panic!("expected DatumNotIntegrable, got {other:?}"),
            Ok(_) => panic!("expected DatumNotIntegrable, got a datum"),
        }
    }

    #[test]
    fn grid_datum_interpolates() {
        let xs = vec![-1.0, 0.0, 1.0];
        let values = vec![
            vec![cx(0.0, 0.0)],
            vec![cx(1.0, 0.0)],
            vec![cx(0.0, 0.0)],
        ];
        let d = BoundaryDatum::grid(xs, values).unwrap();
        assert_relative_eq!(d.eval(&[0.5])[0].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(d.eval(&[2.0])[0].re, 0.0, epsilon = 1e-12);
    }
}
