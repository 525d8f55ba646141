//! Quadrature and optimization primitives shared by the evaluators:
//! Gauss-Legendre panels, an adaptive Gauss-Kronrod driver for
//! complex-vector integrands, sphere sampling and a small Nelder-Mead.

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrate a complex-vector integrand over [a, b] with a fixed-order
/// Gauss-Legendre rule.
pub fn gl_integrate_vec<F>(f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> Vec<Complex64>
where
    F: Fn(f64) -> Vec<Complex64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc: Option<Vec<Complex64>> = None;
    for (x, w) in rule.0.iter().zip(rule.1.iter()) {
        let v = f(c + h * x);
        let acc = acc.get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); v.len()]);
        for (s, t) in acc.iter_mut().zip(v.iter()) {
            *s += w * h * t;
        }
    }
    acc.unwrap_or_default()
}

// 7-point Gauss / 15-point Kronrod pair (standard published abscissae).
#[allow(clippy::excessive_precision)]
const GK15_XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const GK15_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];
#[allow(clippy::excessive_precision)]
const GK15_WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// One 15-point Gauss-Kronrod panel for a complex-vector integrand; returns
/// (kronrod value, error estimate = |K15 - G7| in the max norm).
pub fn qk15_vec<F>(f: &F, a: f64, b: f64) -> (Vec<Complex64>, f64)
where
    F: Fn(f64) -> Vec<Complex64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let m = fc.len();
    let mut gauss: Vec<Complex64> = fc.iter().map(|v| v * GK15_WG[3]).collect();
    let mut kron: Vec<Complex64> = fc.iter().map(|v| v * GK15_WGK[7]).collect();
    for j in 0..7 {
        let dx = h * GK15_XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..m {
            let sum = f1[i] + f2[i];
            kron[i] += GK15_WGK[j] * sum;
            if j % 2 == 1 {
                gauss[i] += GK15_WG[j / 2] * sum;
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..m {
        kron[i] *= h;
        gauss[i] *= h;
        err = err.max((kron[i] - gauss[i]).norm());
    }
    (kron, err)
}

/// Adaptive Gauss-Kronrod integration over [a, b]: bisect the panel with the
/// largest error estimate until the total estimate falls below `tol` or the
/// panel budget is exhausted. Returns (value, error estimate).
pub fn adaptive_gk_vec<F>(f: &F, a: f64, b: f64, tol: f64, max_panels: usize) -> (Vec<Complex64>, f64)
where
    F: Fn(f64) -> Vec<Complex64>,
{
    struct Panel {
        a: f64,
        b: f64,
        val: Vec<Complex64>,
        err: f64,
    }
    let (val, err) = qk15_vec(f, a, b);
    let m = val.len();
    let mut panels = vec![Panel { a, b, val, err }];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= tol || panels.len() >= max_panels {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            panels.push(p);
            break;
        }
        let (v1, e1) = qk15_vec(f, p.a, mid);
        let (v2, e2) = qk15_vec(f, mid, p.b);
        panels.push(Panel {
            a: p.a,
            b: mid,
            val: v1,
            err: e1,
        });
        panels.push(Panel {
            a: mid,
            b: p.b,
            val: v2,
            err: e2,
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let mut err = 0.0;
    for p in &panels {
        for (o, v) in out.iter_mut().zip(p.val.iter()) {
            *o += v;
        }
        err += p.err;
    }
    (out, err)
}

/// Edges of geometrically growing panels covering [r0, r1] (r0 > 0).
pub fn geometric_edges(r0: f64, r1: f64, ratio: f64) -> Vec<f64> {
    assert!(r0 > 0.0 && r1 > r0 && ratio > 1.0);
    let mut edges = vec![r0];
    let mut r = r0;
    while r * ratio < r1 {
        r *= ratio;
        edges.push(r);
    }
    edges.push(r1);
    edges
}

/// Integral of a complex-vector field over the ball |x - center| <= radius
/// in dimension n in {2, 3}, for integrands smooth on the ball. Polar
/// coordinates around the center with Gauss-Legendre radial panels.
pub fn integrate_ball_vec<F>(
    n: usize,
    center: &[f64],
    radius: f64,
    radial_panels: usize,
    f: F,
) -> Vec<Complex64>
where
    F: Fn(&[f64]) -> Vec<Complex64>,
{
    assert!(n == 2 || n == 3);
    let radial_rule = gauss_legendre(14);
    let mut total: Option<Vec<Complex64>> = None;
    let mut add = |w: f64, v: Vec<Complex64>| {
        let acc = total.get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); v.len()]);
        for (a, b) in acc.iter_mut().zip(v.iter()) {
            *a += w * b;
        }
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    for p in 0..radial_panels {
        let a = radius * p as f64 / radial_panels as f64;
        let b = radius * (p + 1) as f64 / radial_panels as f64;
        for (xi, wi) in radial_rule.0.iter().zip(radial_rule.1.iter()) {
            let r = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let wr = 0.5 * (b - a) * wi;
            if n == 2 {
                let n_ang = 128;
                for j in 0..n_ang {
                    let t = two_pi * j as f64 / n_ang as f64;
                    let pt = [center[0] + r * t.cos(), center[1] + r * t.sin()];
                    add(wr * r * two_pi / n_ang as f64, f(&pt));
                }
            } else {
                let mu_rule = gauss_legendre(14);
                let n_phi = 28;
                for (mu, wmu) in mu_rule.0.iter().zip(mu_rule.1.iter()) {
                    let s = (1.0 - mu * mu).max(0.0).sqrt();
                    for j in 0..n_phi {
                        let t = two_pi * j as f64 / n_phi as f64;
                        let pt = [
                            center[0] + r * s * t.cos(),
                            center[1] + r * s * t.sin(),
                            center[2] + r * mu,
                        ];
                        add(wr * r * r * wmu * two_pi / n_phi as f64, f(&pt));
                    }
                }
            }
        }
    }
    total.unwrap_or_default()
}

/// Quasi-uniform unit vectors on S^2 (Fibonacci lattice).
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Nelder-Mead simplex minimization in low dimension. Returns (argmin, min).
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        if (worst - best).abs() < 1e-15 * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|(x, _)| x[k]).sum::<f64>() / d as f64)
            .collect();
        let xr: Vec<f64> = (0..d)
            .map(|k| centroid[k] + (centroid[k] - simplex[d].0[k]))
            .collect();
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe: Vec<f64> = (0..d)
                .map(|k| centroid[k] + 2.0 * (centroid[k] - simplex[d].0[k]))
                .collect();
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let xc: Vec<f64> = (0..d)
                .map(|k| centroid[k] + 0.5 * (simplex[d].0[k] - centroid[k]))
                .collect();
            let fc = f(&xc);
            if fc < simplex[d].1 {
                simplex[d] = (xc, fc);
            } else {
                let x0c = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    for k in 0..d {
                        item.0[k] = x0c[k] + 0.5 * (item.0[k] - x0c[k]);
                    }
                    item.1 = f(&item.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Golden-section minimization of a univariate function on [a, b].
pub fn golden_section<F>(f: F, a: f64, b: f64, iters: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        // Order-n GL is exact for polynomials of degree 2n-1.
        let rule = gauss_legendre(6);
        let exact = 2.0 / 12.0 + 2.0 / 4.0; // int_{-1}^{1} (x^10/... ) pick x^10? use x^10: 2/11
        let _ = exact;
        let val: f64 = rule
            .0
            .iter()
            .zip(rule.1.iter())
            .map(|(x, w)| w * x.powi(10))
            .sum();
        assert_relative_eq!(val, 2.0 / 11.0, epsilon = 1e-13);
    }

    #[test]
    fn adaptive_gk_handles_peaked_integrand() {
        // int_{-1}^{1} 1/(x^2 + 1e-4) dx = 2/eps * atan(1/eps), eps = 1e-2.
        let eps = 1e-2;
        let f = |x: f64| vec![Complex64::new(1.0 / (x * x + eps * eps), 0.0)];
        let (val, err) = adaptive_gk_vec(&f, -1.0, 1.0, 1e-10, 200);
        let exact = 2.0 / eps * (1.0 / eps).atan();
        assert!(err < 1e-8);
        assert_relative_eq!(val[0].re, exact, epsilon = 1e-9);
    }

    #[test]
    fn fibonacci_sphere_is_unit_and_balanced() {
        let pts = fibonacci_sphere(500);
        let mut mean = [0.0f64; 3];
        for p in &pts {
            let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
            for k in 0..3 {
                mean[k] += p[k] / 500.0;
            }
        }
        for v in mean {
            assert!(v.abs() < 0.01);
        }
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.5) * (x[0] - 1.5) + 3.0 * (x[1] + 0.5) * (x[1] + 0.5);
        let (xmin, fmin) = nelder_mead(f, &[0.0, 0.0], 0.5, 200);
        assert!(fmin < 1e-12);
        assert_relative_eq!(xmin[0], 1.5, epsilon = 1e-5);
        assert_relative_eq!(xmin[1], -0.5, epsilon = 1e-5);
    }

    #[test]
    fn golden_section_minimum() {
        let (x, _) = golden_section(|x| (x - 2.0) * (x - 2.0), 0.0, 5.0, 60);
        assert_relative_eq!(x, 2.0, epsilon = 1e-9);
    }
}
