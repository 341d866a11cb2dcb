//! Spherical geometry and quadrature.
//!
//! Grids are product rules: Gauss-Legendre in cos(theta) times equispaced
//! azimuth, exact on spherical polynomials up to the stated degree. Cap grids
//! use the same construction on [cos R, 1], rotated so the pole lands on the
//! cap center. All reductions are pairwise sums in fixed node order so results
//! do not depend on thread count.

use crate::error::{Error, Result};
use crate::hurwitz::{rotation_group_image, Rotation};
use nalgebra::Vector3;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Volume of a spherical cap of geodesic radius R: 4*pi*sin^2(R/2).
pub fn cap_volume(radius: f64) -> f64 {
    FOUR_PI * (radius / 2.0).sin().powi(2)
}

/// Pairwise summation in the given order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], exact to degree 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            if n == 1 {
                p1 = x;
            }
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Product quadrature rule on S^2 (or on a cap), with nodes as unit vectors.
#[derive(Debug, Clone)]
pub struct SphericalGrid {
    pub nodes: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl SphericalGrid {
    /// Sum of w_i * f(x_i), pairwise in fixed node order.
    pub fn integrate<F: Fn(&Vector3<f64>) -> f64>(&self, f: F) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.nodes.len());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "integrand is not finite at node {x:?}"
                )));
            }
            terms.push(w * v);
        }
        Ok(pairwise_sum(&terms))
    }

    /// Integrate from precomputed per-node values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .collect();
        pairwise_sum(&terms)
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

/// Full-sphere product grid exact on spherical polynomials of the given degree.
pub fn build_grid(degree: usize) -> SphericalGrid {
    let n_theta = (degree + 2) / 2; // ceil((degree+1)/2)
    let n_phi = degree + 1;
    let (t_nodes, t_weights) = gauss_legendre(n_theta.max(1));
    let w_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (t, wt) in t_nodes.iter().zip(&t_weights) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = w_phi * j as f64;
            nodes.push(Vector3::new(s * phi.cos(), s * phi.sin(), *t));
            weights.push(wt * w_phi);
        }
    }
    SphericalGrid {
        nodes,
        weights,
        exactness_degree: degree,
    }
}

static GRID_CACHE: Lazy<Mutex<HashMap<usize, Arc<SphericalGrid>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared, cached full-sphere grid of at least the requested exactness.
pub fn shared_grid(degree: usize) -> Arc<SphericalGrid> {
    let mut cache = GRID_CACHE.lock().unwrap();
    cache
        .entry(degree)
        .or_insert_with(|| Arc::new(build_grid(degree)))
        .clone()
}

/// A spherical cap: center on S^2 and geodesic radius in (0, pi].
#[derive(Debug, Clone)]
pub struct CapSpec {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl CapSpec {
    pub fn new(center: Vector3<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= std::f64::consts::PI) {
            return Err(Error::Domain(format!(
                "cap radius must lie in (0, pi], got {radius}"
            )));
        }
        let n = center.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("cap center must be a unit vector".into()));
        }
        Ok(Self {
            center: center / n,
            radius,
        })
    }

    pub fn volume(&self) -> f64 {
        cap_volume(self.radius)
    }

    /// True iff the cap stays geodesic in the quotient by the tetrahedral
    /// rotation image, i.e. R < half the distance to the nearest orbit point.
    pub fn geodesic_in_quotient(&self) -> bool {
        self.radius < quotient_injectivity_radius(&self.center)
    }
}

/// A rotation taking the north pole (0,0,1) to the given unit vector.
pub fn rotation_to(target: &Vector3<f64>) -> Rotation {
    let pole = Vector3::z();
    let c = pole.dot(target).clamp(-1.0, 1.0);
    if c > 1.0 - 1e-14 {
        return Rotation::identity();
    }
    let axis = if c < -1.0 + 1e-14 {
        Vector3::x()
    } else {
        pole.cross(target).normalize()
    };
    let angle = c.acos();
    let m = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
        .into_inner();
    Rotation { m }
}

/// Quadrature rule over the closed cap, exact on polynomials of the given
/// degree restricted to the cap. Total weight is the cap volume.
pub fn cap_grid(cap: &CapSpec, degree: usize) -> Result<SphericalGrid> {
    let n_t = ((degree + 2) / 2).max(1);
    let n_phi = degree + 1;
    let (gl_nodes, gl_weights) = gauss_legendre(n_t);
    let lo = cap.radius.cos();
    let hi = 1.0;
    let half = (hi - lo) / 2.0;
    let mid = (hi + lo) / 2.0;
    let w_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let frame = rotation_to(&cap.center);
    let mut nodes = Vec::with_capacity(n_t * n_phi);
    let mut weights = Vec::with_capacity(n_t * n_phi);
    for (u, wu) in gl_nodes.iter().zip(&gl_weights) {
        let t = mid + half * u;
        let s = (1.0 - t * t).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = w_phi * j as f64;
            let local = Vector3::new(s * phi.cos(), s * phi.sin(), t);
            nodes.push(frame.apply(&local));
            weights.push(wu * half * w_phi);
        }
    }
    Ok(SphericalGrid {
        nodes,
        weights,
        exactness_degree: degree,
    })
}

/// Half the spherical distance from w to the nearest distinct point of its
/// orbit under the tetrahedral rotation image; 0 if w is a fixed point.
pub fn quotient_injectivity_radius(w: &Vector3<f64>) -> f64 {
    let mut min_angle = f64::INFINITY;
    for r in rotation_group_image() {
        if r.distance(&Rotation::identity()) < 1e-9 {
            continue;
        }
        let angle = r.apply(w).dot(w).clamp(-1.0, 1.0).acos();
        if angle < min_angle {
            min_angle = angle;
        }
    }
    0.5 * min_angle
}

/// First `count` points of a deterministic golden-angle sequence on S^2,
/// rotated by a seeded random frame. Prefixes nest, so enlarging the sample
/// only adds points.
pub fn center_sequence(count: usize, seed: u64) -> Vec<Vector3<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let axis = Vector3::new(
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
    );
    let angle = rng.gen::<f64>() * std::f64::consts::TAU;
    let frame = if axis.norm() > 1e-9 {
        nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
            .into_inner()
    } else {
        nalgebra::Matrix3::identity()
    };
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            // van der Corput base 2 in z, golden-ratio rotation in azimuth
            let mut v = 0.0;
            let mut denom = 0.5;
            let mut k = i + 1;
            while k > 0 {
                if k & 1 == 1 {
                    v += denom;
                }
                denom *= 0.5;
                k >>= 1;
            }
            let z: f64 = 1.0 - 2.0 * v;
            let phi = std::f64::consts::TAU * (((i + 1) as f64) * golden).fract();
            let s = (1.0 - z * z).max(0.0).sqrt();
            frame * Vector3::new(s * phi.cos(), s * phi.sin(), z)
        })
        .collect()
}
