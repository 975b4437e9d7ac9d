use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A point `(ξ, τ)` with `‖ξ, τ‖ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePoint {
    pub xi: Vec<f64>,
    pub tau: Complex64,
}

impl SpherePoint {
    /// Anisotropic dilation `(Rξ, R^w τ)`.
    pub fn dilate(&self, r: f64, w: u32) -> (Vec<f64>, Complex64) {
        let xi = self.xi.iter().map(|v| v * r).collect();
        (xi, self.tau * r.powi(w as i32))
    }
}

/// Finite grid used to certify sup-norm estimates: unit pseudo-sphere
/// samples, radial shells and a compact box in `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub seed: u64,
    pub sphere_samples: usize,
    pub shells: Vec<f64>,
    pub x_half_width: f64,
    pub x_points: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            seed: 0x5eed,
            sphere_samples: 64,
            shells: vec![1.0, 10.0, 100.0, 1000.0],
            x_half_width: 1.0,
            x_points: 3,
        }
    }
}

impl GridPolicy {
    pub fn with_seed(seed: u64) -> Self {
        GridPolicy {
            seed,
            ..GridPolicy::default()
        }
    }

    /// Structured extremes (pure `ξ`, pure `τ`, the balanced point) plus
    /// `sphere_samples` random points. With `half_plane` false, `τ` is real.
    pub fn sphere(&self, n: usize, w: u32, half_plane: bool) -> Vec<SpherePoint> {
        let mut out = Vec::new();
        let phis: &[f64] = if half_plane {
            &[0.0, -std::f64::consts::FRAC_PI_2, -std::f64::consts::PI]
        } else {
            &[0.0, -std::f64::consts::PI]
        };
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        for &s in &[0.0, 0.5, 1.0] {
            for &phi in phis {
                for sign in [1.0, -1.0] {
                    let dir: Vec<f64> = e1.iter().map(|v| v * sign).collect();
                    out.push(on_sphere(&dir, s, phi, w));
                    if s == 0.0 {
                        break;
                    }
                }
                if s == 0.0 {
                    break;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.sphere_samples {
            let dir = random_direction(&mut rng, n);
            let s: f64 = rng.gen();
            let phi = if half_plane {
                -rng.gen::<f64>() * std::f64::consts::PI
            } else if rng.gen::<bool>() {
                0.0
            } else {
                -std::f64::consts::PI
            };
            out.push(on_sphere(&dir, s, phi, w));
        }
        out
    }

    /// Tensor grid on `[-h, h]^n` with `x_points` nodes per axis.
    pub fn x_box(&self, n: usize) -> Vec<Vec<f64>> {
        let k = self.x_points.max(1);
        let nodes: Vec<f64> = if k == 1 {
            vec![0.0]
        } else {
            (0..k)
                .map(|i| -self.x_half_width + 2.0 * self.x_half_width * i as f64 / (k - 1) as f64)
                .collect()
        };
        let mut out = vec![Vec::new()];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    nodes.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn describe(&self, n: usize, half_plane: bool) -> String {
        format!(
            "unit pseudo-sphere ({} random + extremes, {}) x shells {:?} x box [-{h}, {h}]^{n} ({} nodes/axis), seed {}",
            self.sphere_samples,
            if half_plane { "closed lower half-plane" } else { "real tau" },
            self.shells,
            self.x_points,
            self.seed,
            h = self.x_half_width,
        )
    }
}

fn on_sphere(dir: &[f64], s: f64, phi: f64, w: u32) -> SpherePoint {
    let r = (1.0 - s).max(0.0).powf(1.0 / w as f64);
    SpherePoint {
        xi: dir.iter().map(|v| v * r).collect(),
        tau: Complex64::from_polar(s, phi),
    }
}

pub(crate) fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r2: f64 = v.iter().map(|a| a * a).sum();
        if r2 > 1e-4 && r2 <= 1.0 {
            let r = r2.sqrt();
            return v.into_iter().map(|a| a / r).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::pseudo_norm;

    #[test]
    fn sphere_points_have_unit_norm() {
        for w in [2, 4] {
            for half in [false, true] {
                for p in GridPolicy::default().sphere(2, w, half) {
                    let nrm = pseudo_norm(&p.xi, p.tau, w).unwrap();
                    assert!((nrm - 1.0).abs() < 1e-14, "{nrm}");
                    if !half {
                        assert!(p.tau.im.abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn dilation_scales_norm_linearly() {
        let p = &GridPolicy::default().sphere(1, 2, true)[20];
        let (xi, tau) = p.dilate(10.0, 2);
        assert!((pseudo_norm(&xi, tau, 2).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn x_box_size() {
        let g = GridPolicy::default();
        assert_eq!(g.x_box(2).len(), 9);
        assert_eq!(g.x_box(1), vec![vec![-1.0], vec![0.0], vec![1.0]]);
    }
}
