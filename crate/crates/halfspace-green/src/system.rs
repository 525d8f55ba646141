//! Constant-coefficient second-order M x M systems
//! `L = (a^{ab}_{rs} d_r d_s)` and their algebraic classification: weak
//! ellipticity (nonvanishing symbol determinant), the Legendre-Hadamard
//! condition, reflection invariance and composition with linear maps.
//!
//! Two coefficient tensors describe the same operator exactly when their
//! symmetrizations in (r, s) agree, so all comparisons go through the
//! symmetrized tensor while the raw tensor is kept as given.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::QuadratureConfig;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::quad::{fibonacci_sphere, nelder_mead};

/// Tolerance for exact-zero tests on symmetrized coefficients.
pub const SYMMETRIZED_ZERO_TOL: f64 = 1e-14;
/// Degeneracy thresholds on normalized classification quantities.
pub const DET_TOLERANCE: f64 = 1e-9;
pub const LH_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct EllipticSystem {
    n: usize,
    m: usize,
    /// Row-major a^{alpha beta}_{r s}: index ((alpha*M + beta)*n + r)*n + s.
    coeff: Vec<Complex64>,
}

/// Outcome of sampling-based classification.
#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    pub weakly_elliptic: bool,
    /// Raw min over sampled unit xi of |det L(xi)| (after local refinement).
    pub min_abs_det: f64,
    pub legendre_hadamard: bool,
    /// Best coercivity constant found: min over sampled xi of the smallest
    /// eigenvalue of the Hermitian part of L(xi). Meaningful when positive.
    pub lh_constant: f64,
    pub reflection_invariant: bool,
    pub samples: usize,
}

/// Named coefficient tensors used throughout the test suites.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    Laplacian,
    LLambda(Complex64),
    Lame { mu: f64, lambda: f64 },
    LD,
    DiagAnisotropic(Vec<Complex64>),
}

impl EllipticSystem {
    pub fn new(n: usize, m: usize, coeff: Vec<Complex64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        if m < 1 {
            return Err(Error::InvalidConfig("system size M must be >= 1".into()));
        }
        if coeff.len() != m * m * n * n {
            return Err(Error::DimensionMismatch {
                expected: m * m * n * n,
                got: coeff.len(),
            });
        }
        if coeff.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidConfig("coefficients must be finite".into()));
        }
        Ok(EllipticSystem { n, m, coeff })
    }

    /// Build from sparse (alpha, beta, r, s, value) entries, zero elsewhere.
    /// Indices are zero-based.
    pub fn from_entries(
        n: usize,
        m: usize,
        entries: &[(usize, usize, usize, usize, Complex64)],
    ) -> Result<Self> {
        let mut coeff = vec![Complex64::new(0.0, 0.0); m * m * n * n];
        for &(a, b, r, s, v) in entries {
            if a >= m || b >= m {
                return Err(Error::DimensionMismatch { expected: m, got: a.max(b) + 1 });
            }
            if r >= n || s >= n {
                return Err(Error::DimensionMismatch { expected: n, got: r.max(s) + 1 });
            }
            coeff[((a * m + b) * n + r) * n + s] += v;
        }
        Self::new(n, m, coeff)
    }

    pub fn builtin(kind: &Builtin, n: usize) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        match kind {
            Builtin::Laplacian => {
                let mut entries = Vec::new();
                for r in 0..n {
                    entries.push((0, 0, r, r, one));
                }
                Self::from_entries(n, 1, &entries)
            }
            Builtin::LLambda(lambda) => {
                let mut entries = Vec::new();
                for r in 0..n - 1 {
                    entries.push((0, 0, r, r, one));
                }
                entries.push((0, 0, n - 1, n - 1, *lambda));
                Self::from_entries(n, 1, &entries)
            }
            Builtin::Lame { mu, lambda } => {
                // a^{ab}_{rs} = mu d_{rs} d_{ab} + (lambda + mu) d_{ra} d_{sb}
                let m = n;
                let mut coeff = vec![Complex64::new(0.0, 0.0); m * m * n * n];
                for a in 0..m {
                    for b in 0..m {
                        for r in 0..n {
                            for s in 0..n {
                                let mut v = 0.0;
                                if r == s && a == b {
                                    v += mu;
                                }
                                if r == a && s == b {
                                    v += lambda + mu;
                                }
                                coeff[((a * m + b) * n + r) * n + s] = Complex64::new(v, 0.0);
                            }
                        }
                    }
                }
                Self::new(n, m, coeff)
            }
            Builtin::LD => {
                // a^{ab}_{rs} = d_{rs} d_{ab} - 2 d_{ra} d_{sb}
                let m = n;
                let mut coeff = vec![Complex64::new(0.0, 0.0); m * m * n * n];
                for a in 0..m {
                    for b in 0..m {
                        for r in 0..n {
                            for s in 0..n {
                                let mut v = 0.0;
                                if r == s && a == b {
                                    v += 1.0;
                                }
                                if r == a && s == b {
                                    v -= 2.0;
                                }
                                coeff[((a * m + b) * n + r) * n + s] = Complex64::new(v, 0.0);
                            }
                        }
                    }
                }
                Self::new(n, m, coeff)
            }
            Builtin::DiagAnisotropic(cs) => {
                if cs.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: cs.len() });
                }
                let entries: Vec<_> = cs
                    .iter()
                    .enumerate()
                    .map(|(r, c)| (0usize, 0usize, r, r, *c))
                    .collect();
                Self::from_entries(n, 1, &entries)
            }
        }
    }

    pub fn builtin_by_name(name: &str, n: usize, params: &BuiltinParams) -> Result<Self> {
        let kind = match name {
            "laplacian" => Builtin::Laplacian,
            "l_lambda" => Builtin::LLambda(params.lambda.ok_or_else(|| {
                Error::InvalidConfig("l_lambda requires a lambda parameter".into())
            })?),
            "lame" => Builtin::Lame {
                mu: params.mu.unwrap_or(1.0),
                lambda: params.lam.unwrap_or(1.0),
            },
            "l_d" => Builtin::LD,
            "diag_anisotropic" => Builtin::DiagAnisotropic(
                params
                    .diag
                    .clone()
                    .ok_or_else(|| Error::InvalidConfig("diag_anisotropic requires diag".into()))?,
            ),
            other => return Err(Error::UnknownBuiltin(other.to_string())),
        };
        Self::builtin(&kind, n)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn coeff(&self, alpha: usize, beta: usize, r: usize, s: usize) -> Complex64 {
        self.coeff[((alpha * self.m + beta) * self.n + r) * self.n + s]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeff
    }

    /// a^{ab}_{rs} + a^{ab}_{sr}; two tensors describe the same operator iff
    /// these agree.
    pub fn symmetrized(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeff.len()];
        for a in 0..self.m {
            for b in 0..self.m {
                for r in 0..self.n {
                    for s in 0..self.n {
                        out[((a * self.m + b) * self.n + r) * self.n + s] =
                            self.coeff(a, b, r, s) + self.coeff(a, b, s, r);
                    }
                }
            }
        }
        out
    }

    /// Operator equality: symmetrized tensors agree entrywise.
    pub fn operator_eq(&self, other: &EllipticSystem) -> bool {
        if self.n != other.n || self.m != other.m {
            return false;
        }
        self.symmetrized()
            .iter()
            .zip(other.symmetrized().iter())
            .all(|(x, y)| (x - y).norm() <= SYMMETRIZED_ZERO_TOL)
    }

    /// The M x M symbol L(xi) = (a^{ab}_{rs} xi_r xi_s).
    pub fn characteristic_matrix(&self, xi: &[f64]) -> Result<CMat> {
        if xi.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: xi.len() });
        }
        let mut out = CMat::zeros(self.m);
        for a in 0..self.m {
            for b in 0..self.m {
                let mut v = Complex64::new(0.0, 0.0);
                for r in 0..self.n {
                    for s in 0..self.n {
                        v += self.coeff(a, b, r, s) * xi[r] * xi[s];
                    }
                }
                out.set(a, b, v);
            }
        }
        Ok(out)
    }

    /// Symbol inverse [L(xi)]^{-1}; `None` if L(xi) is singular.
    pub fn symbol_inverse(&self, xi: &[f64]) -> Result<Option<CMat>> {
        Ok(self.characteristic_matrix(xi)?.inverse())
    }

    /// The transposed system, with tensor a^{ba}_{rs}. Involutive.
    pub fn transposed(&self) -> EllipticSystem {
        let mut coeff = vec![Complex64::new(0.0, 0.0); self.coeff.len()];
        for a in 0..self.m {
            for b in 0..self.m {
                for r in 0..self.n {
                    for s in 0..self.n {
                        coeff[((a * self.m + b) * self.n + r) * self.n + s] =
                            self.coeff(b, a, r, s);
                    }
                }
            }
        }
        EllipticSystem { n: self.n, m: self.m, coeff }
    }

    /// The system lambda * L.
    pub fn scaled(&self, lambda: Complex64) -> EllipticSystem {
        EllipticSystem {
            n: self.n,
            m: self.m,
            coeff: self.coeff.iter().map(|c| c * lambda).collect(),
        }
    }

    /// L composed with the linear change of variables W: the tensor
    /// b^{ab}_{jk} = a^{ab}_{rs} w_{rj} w_{sk}. `w` is row-major n x n.
    pub fn compose_with(&self, w: &[f64]) -> Result<EllipticSystem> {
        let n = self.n;
        if w.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: w.len() });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("composition matrix must be finite".into()));
        }
        let mut coeff = vec![Complex64::new(0.0, 0.0); self.coeff.len()];
        for a in 0..self.m {
            for b in 0..self.m {
                for j in 0..n {
                    for k in 0..n {
                        let mut v = Complex64::new(0.0, 0.0);
                        for r in 0..n {
                            for s in 0..n {
                                v += self.coeff(a, b, r, s) * w[r * n + j] * w[s * n + k];
                            }
                        }
                        coeff[((a * self.m + b) * n + j) * n + k] = v;
                    }
                }
            }
        }
        Ok(EllipticSystem { n, m: self.m, coeff })
    }

    /// The reflection (x', x_n) -> (x', -x_n) as a row-major matrix.
    pub fn reflection_matrix(n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = if i + 1 == n { -1.0 } else { 1.0 };
        }
        w
    }

    /// True iff the symmetrized cross coefficients a^{ab}_{jn} + a^{ab}_{nj}
    /// vanish for all j < n, i.e. L commutes with the reflection across the
    /// boundary hyperplane.
    pub fn is_reflection_invariant(&self) -> bool {
        let n = self.n;
        for a in 0..self.m {
            for b in 0..self.m {
                for j in 0..n - 1 {
                    let v = self.coeff(a, b, j, n - 1) + self.coeff(a, b, n - 1, j);
                    if v.norm() > SYMMETRIZED_ZERO_TOL {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The matrix (a^{ba}_{nn})_{b a}, used when recovering the Poisson
    /// kernel from the normal derivative of the Green function.
    pub fn a_nn_transposed(&self) -> CMat {
        let n = self.n;
        CMat::from_fn(self.m, |b, a| self.coeff(b, a, n - 1, n - 1))
    }

    /// Sampling-based classification with one local refinement pass from the
    /// worst sample (the symbol is polynomial on the sphere, so a fine grid
    /// plus a simplex descent locates near-degeneracies reliably at these
    /// sizes).
    pub fn classify(&self, cfg: &QuadratureConfig) -> EllipticityReport {
        let samples = cfg.sphere_samples_for(self.n);
        let dirs: Vec<Vec<f64>> = match self.n {
            2 => (0..samples)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            3 => fibonacci_sphere(samples)
                .into_iter()
                .map(|p| p.to_vec())
                .collect(),
            _ => {
                // Higher n never reaches the evaluators; still classify by
                // lattice sampling of a few thousand random directions.
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
                (0..samples)
                    .map(|_| {
                        let mut v: Vec<f64> =
                            (0..self.n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
                        v.iter_mut().for_each(|x| *x /= norm);
                        v
                    })
                    .collect()
            }
        };

        let eval_det = |xi: &[f64]| -> f64 {
            self.characteristic_matrix(xi)
                .map(|l| l.det().norm())
                .unwrap_or(f64::INFINITY)
        };
        let eval_lh = |xi: &[f64]| -> f64 {
            self.characteristic_matrix(xi)
                .map(|l| l.hermitian_part().min_eigenvalue_hermitian())
                .unwrap_or(f64::INFINITY)
        };
        let eval_scale = |xi: &[f64]| -> f64 {
            self.characteristic_matrix(xi).map(|l| l.max_abs()).unwrap_or(0.0)
        };

        let stats: Vec<(f64, f64, f64)> = dirs
            .par_iter()
            .map(|xi| (eval_det(xi), eval_lh(xi), eval_scale(xi)))
            .collect();

        let mut min_det = f64::INFINITY;
        let mut max_det = 0.0f64;
        let mut min_lh = f64::INFINITY;
        let mut max_scale = 0.0f64;
        let mut worst_det_idx = 0;
        let mut worst_lh_idx = 0;
        for (i, (d, l, s)) in stats.iter().enumerate() {
            if *d < min_det {
                min_det = *d;
                worst_det_idx = i;
            }
            max_det = max_det.max(*d);
            if *l < min_lh {
                min_lh = *l;
                worst_lh_idx = i;
            }
            max_scale = max_scale.max(*s);
        }

        // Local refinement from the worst samples, in tangent coordinates.
        let refine = |idx: usize, f: &dyn Fn(&[f64]) -> f64, current: f64| -> f64 {
            let base = &dirs[idx];
            let spacing = (4.0 / samples as f64).sqrt().max(1e-4);
            let objective = |p: &[f64]| -> f64 {
                let mut xi = base.clone();
                match self.n {
                    2 => {
                        let phi = base[1].atan2(base[0]) + p[0];
                        xi = vec![phi.cos(), phi.sin()];
                    }
                    _ => {
                        let tangent = tangent_frame(base);
                        for (k, t) in tangent.iter().enumerate() {
                            for (x, tv) in xi.iter_mut().zip(t.iter()) {
                                *x += p[k] * tv;
                            }
                        }
                        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                        xi.iter_mut().for_each(|x| *x /= norm);
                    }
                }
                f(&xi)
            };
            let dim = if self.n == 2 { 1 } else { 2 };
            let (_, refined) = nelder_mead(objective, &vec![0.0; dim], spacing, 120);
            refined.min(current)
        };

        min_det = refine(worst_det_idx, &eval_det, min_det);
        min_lh = refine(worst_lh_idx, &eval_lh, min_lh);

        let det_norm = if max_det > 0.0 { min_det / max_det } else { 0.0 };
        let lh_norm = if max_scale > 0.0 { min_lh / max_scale } else { 0.0 };

        EllipticityReport {
            weakly_elliptic: det_norm > DET_TOLERANCE,
            min_abs_det: min_det,
            legendre_hadamard: lh_norm > LH_TOLERANCE,
            lh_constant: min_lh,
            reflection_invariant: self.is_reflection_invariant(),
            samples,
        }
    }
}

/// Two orthonormal vectors spanning the tangent space at a unit vector.
fn tangent_frame(base: &[f64]) -> Vec<Vec<f64>> {
    let n = base.len();
    let mut frame = Vec::new();
    // Pick the axis least aligned with `base`.
    let k = (0..n)
        .min_by(|&i, &j| base[i].abs().total_cmp(&base[j].abs()))
        .unwrap();
    let mut u: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
    let dot: f64 = u.iter().zip(base.iter()).map(|(a, b)| a * b).sum();
    for (ui, bi) in u.iter_mut().zip(base.iter()) {
        *ui -= dot * bi;
    }
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
    frame.push(u.clone());
    if n == 3 {
        let v = vec![
            base[1] * u[2] - base[2] * u[1],
            base[2] * u[0] - base[0] * u[2],
            base[0] * u[1] - base[1] * u[0],
        ];
        frame.push(v);
    }
    frame
}

/// Optional parameters for builtin lookup by name (CLI and JSON specs).
#[derive(Clone, Debug, Default)]
pub struct BuiltinParams {
    pub lambda: Option<Complex64>,
    pub mu: Option<f64>,
    pub lam: Option<f64>,
    pub diag: Option<Vec<Complex64>>,
}

/// Parse a system from the JSON spec
/// `{"n": int, "M": int, "coeff": [{"alpha","beta","r","s","re","im"}...]}`
/// with 1-based indices and omitted entries zero. A builtin name (with its
/// parameters as sibling keys) is accepted in place of the entry list.
pub fn system_from_json(value: &serde_json::Value) -> Result<EllipticSystem> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse("system spec must be a JSON object".into()))?;
    let n = obj
        .get("n")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Parse("missing integer field `n`".into()))? as usize;

    let coeff_field = obj.get("coeff").or_else(|| obj.get("builtin"));
    match coeff_field {
        Some(serde_json::Value::String(name)) => {
            let params = BuiltinParams {
                lambda: obj.get("lambda").map(parse_complex).transpose()?,
                mu: obj.get("mu").and_then(|v| v.as_f64()),
                lam: obj.get("lam").and_then(|v| v.as_f64()),
                diag: obj
                    .get("diag")
                    .map(|v| {
                        v.as_array()
                            .ok_or_else(|| Error::Parse("`diag` must be an array".into()))?
                            .iter()
                            .map(parse_complex)
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?,
            };
            EllipticSystem::builtin_by_name(name, n, &params)
        }
        Some(serde_json::Value::Array(entries)) => {
            let m = obj
                .get("M")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::Parse("missing integer field `M`".into()))?
                as usize;
            let mut list = Vec::with_capacity(entries.len());
            for (i, e) in entries.iter().enumerate() {
                let eo = e
                    .as_object()
                    .ok_or_else(|| Error::Parse(format!("coeff[{i}] must be an object")))?;
                let idx = |key: &str| -> Result<usize> {
                    eo.get(key)
                        .and_then(|v| v.as_u64())
                        .map(|v| v as usize)
                        .ok_or_else(|| Error::Parse(format!("coeff[{i}]: missing index `{key}`")))
                };
                let (alpha, beta, r, s) = (idx("alpha")?, idx("beta")?, idx("r")?, idx("s")?);
                if alpha == 0 || beta == 0 || r == 0 || s == 0 {
                    return Err(Error::Parse(format!(
                        "coeff[{i}]: indices are 1-based and must be >= 1"
                    )));
                }
                let re = eo.get("re").and_then(|v| v.as_f64()).unwrap_or(0.0);
                let im = eo.get("im").and_then(|v| v.as_f64()).unwrap_or(0.0);
                list.push((alpha - 1, beta - 1, r - 1, s - 1, Complex64::new(re, im)));
            }
            EllipticSystem::from_entries(n, m, &list)
        }
        _ => Err(Error::Parse(
            "field `coeff` must be an entry array or a builtin name".into(),
        )),
    }
}

fn parse_complex(v: &serde_json::Value) -> Result<Complex64> {
    match v {
        serde_json::Value::Number(x) => Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        serde_json::Value::Object(o) => Ok(Complex64::new(
            o.get("re").and_then(|x| x.as_f64()).unwrap_or(0.0),
            o.get("im").and_then(|x| x.as_f64()).unwrap_or(0.0),
        )),
        _ => Err(Error::Parse("complex values are numbers or {re, im}".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn characteristic_matrix_examples() {
        let lap2 = EllipticSystem::builtin(&Builtin::Laplacian, 2).unwrap();
        let l = lap2.characteristic_matrix(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(l.get(0, 0).re, 2.0, epsilon = 1e-15);

        let li = EllipticSystem::builtin(&Builtin::LLambda(cx(0.0, 1.0)), 2).unwrap();
        let l = li.characteristic_matrix(&[0.0, 1.0]).unwrap();
        assert_relative_eq!(l.get(0, 0).re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(l.get(0, 0).im, 1.0, epsilon = 1e-15);

        let ld = EllipticSystem::builtin(&Builtin::LD, 2).unwrap();
        let l = ld.characteristic_matrix(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(l.get(0, 0).re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(l.get(0, 1).re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(l.get(1, 0).re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(l.get(1, 1).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn classify_laplacian_n3() {
        let sys = EllipticSystem::builtin(&Builtin::Laplacian, 3).unwrap();
        let rep = sys.classify(&QuadratureConfig::default());
        assert!(rep.weakly_elliptic);
        assert!(rep.legendre_hadamard);
        assert!(rep.reflection_invariant);
        assert_relative_eq!(rep.min_abs_det, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.lh_constant, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn classify_l_lambda_boundary_cases() {
        // Legendre-Hadamard iff Re(lambda) > 0; weakly elliptic iff lambda
        // is off the closed negative real axis.
        let cases = [
            (cx(2.0, 0.0), true, true),
            (cx(1.0, 0.0), true, true),
            (cx(0.0, 1.0), true, false),
            (cx(-1.0, 0.1), true, false),
            (cx(-1.0, 0.0), false, false),
        ];
        for (lambda, weak, lh) in cases {
            let sys = EllipticSystem::builtin(&Builtin::LLambda(lambda), 2).unwrap();
            let rep = sys.classify(&QuadratureConfig::default());
            assert_eq!(rep.weakly_elliptic, weak, "weak ellipticity at lambda={lambda}");
            assert_eq!(rep.legendre_hadamard, lh, "LH at lambda={lambda}");
            if rep.legendre_hadamard {
                assert!(rep.weakly_elliptic);
            }
        }
    }

    #[test]
    fn classify_l_d_weakly_but_not_lh() {
        let sys = EllipticSystem::builtin(&Builtin::LD, 2).unwrap();
        let rep = sys.classify(&QuadratureConfig::default());
        assert!(rep.weakly_elliptic);
        assert!(!rep.legendre_hadamard);
        // At eta = xi the form equals -|xi|^4, so the LH constant is -1.
        assert_relative_eq!(rep.lh_constant, -1.0, epsilon = 1e-10);
    }

    #[test]
    fn reflection_invariance_cases() {
        assert!(EllipticSystem::builtin(&Builtin::Laplacian, 3)
            .unwrap()
            .is_reflection_invariant());
        assert!(EllipticSystem::builtin(&Builtin::LLambda(cx(-3.0, 7.0)), 2)
            .unwrap()
            .is_reflection_invariant());
        // Lame couples tangential and normal derivatives:
        // a^{12}_{12} + a^{12}_{21} = lambda + mu = 2.
        let lame = EllipticSystem::builtin(&Builtin::Lame { mu: 1.0, lambda: 1.0 }, 2).unwrap();
        assert!(!lame.is_reflection_invariant());
    }

    #[test]
    fn transpose_is_involutive_and_swaps_indices() {
        let one = cx(1.0, 0.0);
        let sys = EllipticSystem::from_entries(
            2,
            2,
            &[
                (0, 0, 0, 0, one),
                (0, 0, 1, 1, one),
                (1, 1, 0, 0, one),
                (1, 1, 1, 1, one),
                (0, 1, 0, 0, one),
            ],
        )
        .unwrap();
        let t = sys.transposed();
        assert_relative_eq!(t.coeff(1, 0, 0, 0).re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.coeff(0, 1, 0, 0).re, 0.0, epsilon = 1e-15);
        assert!(t.transposed().operator_eq(&sys));
        // Same classification verdicts.
        let cfg = QuadratureConfig::default();
        let (r1, r2) = (sys.classify(&cfg), t.classify(&cfg));
        assert_eq!(r1.weakly_elliptic, r2.weakly_elliptic);
        assert_eq!(r1.legendre_hadamard, r2.legendre_hadamard);
    }

    #[test]
    fn compose_with_identity_and_rotation_preserves_laplacian() {
        let lap = EllipticSystem::builtin(&Builtin::Laplacian, 2).unwrap();
        let id = vec![1.0, 0.0, 0.0, 1.0];
        assert!(lap.compose_with(&id).unwrap().operator_eq(&lap));
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = vec![c, -s, s, c];
        assert!(lap.compose_with(&rot).unwrap().operator_eq(&lap));
    }

    #[test]
    fn reflection_invariance_matches_composition() {
        // L_lambda composed with the reflection has the same symmetrization.
        let sys = EllipticSystem::builtin(&Builtin::LLambda(cx(2.0, 0.0)), 2).unwrap();
        let w = EllipticSystem::reflection_matrix(2);
        let composed = sys.compose_with(&w).unwrap();
        assert!(sys.operator_eq(&composed));
        // And Lame does not.
        let lame = EllipticSystem::builtin(&Builtin::Lame { mu: 1.0, lambda: 1.0 }, 2).unwrap();
        let w = EllipticSystem::reflection_matrix(2);
        assert!(!lame.operator_eq(&lame.compose_with(&w).unwrap()));
    }

    #[test]
    fn json_spec_roundtrip() {
        let spec: serde_json::Value = serde_json::from_str(
            r#"{"n": 2, "M": 1, "coeff": [
                {"alpha":1,"beta":1,"r":1,"s":1,"re":1.0},
                {"alpha":1,"beta":1,"r":2,"s":2,"re":2.0,"im":0.5}]}"#,
        )
        .unwrap();
        let sys = system_from_json(&spec).unwrap();
        assert_eq!(sys.dimension(), 2);
        assert_eq!(sys.size(), 1);
        assert_relative_eq!(sys.coeff(0, 0, 1, 1).im, 0.5, epsilon = 1e-15);

        let spec: serde_json::Value =
            serde_json::from_str(r#"{"n": 3, "coeff": "laplacian"}"#).unwrap();
        let sys = system_from_json(&spec).unwrap();
        assert!(sys.operator_eq(&EllipticSystem::builtin(&Builtin::Laplacian, 3).unwrap()));

        let spec: serde_json::Value =
            serde_json::from_str(r#"{"n": 2, "builtin": "l_lambda", "lambda": {"re":2,"im":1}}"#)
                .unwrap();
        let sys = system_from_json(&spec).unwrap();
        assert_relative_eq!(sys.coeff(0, 0, 1, 1).im, 1.0, epsilon = 1e-15);
    }
}
