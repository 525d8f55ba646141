use crate::error::{Error, Result};

/// Node counts, steps and tolerances shared by all integrals and derivatives.
#[derive(Clone, Debug)]
pub struct QuadratureConfig {
    /// Nodes for trapezoid rules on circles (S^1 and great circles of S^2).
    pub circle_nodes: usize,
    /// Central-difference step, relative to |x|.
    pub fd_step: f64,
    /// Richardson extrapolation levels on top of the base step.
    pub richardson_levels: usize,
    /// Radius of the polar patch isolating the singularity in the
    /// distributional-identity quadrature.
    pub delta_test_radius: f64,
    /// Truncation radius for convolutions over R^{n-1}; `None` picks it
    /// adaptively from fitted decay constants.
    pub truncation_radius: Option<f64>,
    /// Target relative tolerance for smooth integrands.
    pub tol: f64,
    /// Sphere sample count for ellipticity classification; `None` uses the
    /// per-dimension default (2048 angles for n = 2, 8192 lattice nodes for
    /// n = 3).
    pub sphere_samples: Option<usize>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            circle_nodes: 4096,
            fd_step: 1e-5,
            richardson_levels: 2,
            delta_test_radius: 0.1,
            truncation_radius: None,
            tol: 1e-8,
            sphere_samples: None,
        }
    }
}

impl QuadratureConfig {
    /// A cheaper preset for batch evaluation (convolution routes, grids).
    /// The circle integrands are smooth and periodic, so the trapezoid rule
    /// is already at machine precision well below the default node count.
    pub fn fast() -> Self {
        QuadratureConfig {
            circle_nodes: 512,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.circle_nodes < 8 || self.circle_nodes % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "circle_nodes must be even and >= 8, got {}",
                self.circle_nodes
            )));
        }
        for (name, v) in [
            ("fd_step", self.fd_step),
            ("delta_test_radius", self.delta_test_radius),
            ("tol", self.tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(r) = self.truncation_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "truncation_radius must be positive, got {r}"
                )));
            }
        }
        if let Some(s) = self.sphere_samples {
            if s < 64 {
                return Err(Error::InvalidConfig(format!(
                    "sphere_samples must be >= 64, got {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn sphere_samples_for(&self, n: usize) -> usize {
        self.sphere_samples.unwrap_or(match n {
            2 => 2048,
            _ => 8192,
        })
    }
}
