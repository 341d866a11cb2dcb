//! Cap-averaging kernels on S^2 and their spherical transforms.
//!
//! k_R(z,w) = 1_{d(z,w) <= R} / vol(B_R) is a point-pair invariant, so it
//! acts on H_l by the scalar h_R(l) (its spherical transform). The closed
//! form used here follows from the antiderivative identity
//! (P_{l+1} - P_{l-1})' = (2l+1) P_l:
//!
//!   h_R(l) = [P_{l-1}(cos R) - P_{l+1}(cos R)] / [2 (2l+1) sin^2(R/2)],
//!
//! with h_R(0) = 1. The defining integral is kept as an independent
//! quadrature oracle. Convolutions k_R * k_rho are normalized intersection
//! areas of two caps, evaluated by polar reduction around the smaller cap's
//! center.

use crate::error::{Error, Result};
use crate::harmonics::legendre;
use crate::hecke::EigenLibrary;
use crate::hurwitz::rotation_group_image;
use crate::quad::{cap_volume, gauss_legendre, pairwise_sum};
use nalgebra::Vector3;
use std::f64::consts::PI;

/// Table of spherical-transform values h_R(l), l = 0..=L.
#[derive(Debug, Clone)]
pub struct TransformTable {
    pub radius: f64,
    pub values: Vec<f64>,
}

impl TransformTable {
    #[inline]
    pub fn get(&self, l: usize) -> f64 {
        self.values[l]
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= PI) {
        return Err(Error::Domain(format!("cap radius {r} outside (0, pi]")));
    }
    Ok(())
}

/// h_R(l) by the closed form.
pub fn shc_value(r: f64, l: usize) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let c = r.cos();
    let denom = 2.0 * (2 * l + 1) as f64 * (r / 2.0).sin().powi(2);
    (legendre(l - 1, c) - legendre(l + 1, c)) / denom
}

/// Spherical transform table for l <= L.
pub fn shc_transform(r: f64, l_max: usize) -> Result<TransformTable> {
    check_radius(r)?;
    let values = (0..=l_max).map(|l| shc_value(r, l)).collect();
    Ok(TransformTable { radius: r, values })
}

/// Oracle: h_R(l) = (2 pi / vol(B_R)) * int_{cos R}^{1} P_l(t) dt by
/// Gauss-Legendre, exact for the polynomial integrand.
pub fn shc_transform_by_quadrature(r: f64, l: usize) -> Result<f64> {
    check_radius(r)?;
    let n = l / 2 + 2;
    let (t, w) = gauss_legendre(n);
    let (a, b) = (r.cos(), 1.0);
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    let integral: f64 = t
        .iter()
        .zip(&w)
        .map(|(t, w)| half * w * legendre(l, mid + half * t))
        .sum();
    Ok(2.0 * PI * integral / cap_volume(r))
}

/// Envelope report for the transform decay: the smallest C with
/// |h_R(m)| <= C for m <= 1/R and |h_R(m)| <= C / (R m)^{3/2} for m >= 1/R.
#[derive(Debug, Clone)]
pub struct ShcDecayReport {
    pub radius: f64,
    pub l_max: usize,
    pub fitted_c: f64,
    /// ratio of the two branch envelopes at the crossover m = ceil(1/R)
    pub boundary_ratio: f64,
}

pub fn shc_decay_check(r: f64, l_max: usize) -> Result<ShcDecayReport> {
    if r > PI - 0.1 {
        return Err(Error::Domain(format!(
            "decay envelope requires R <= pi - 0.1, got {r}"
        )));
    }
    check_radius(r)?;
    let table = shc_transform(r, l_max)?;
    let m_star = (1.0 / r).ceil() as usize;
    let mut c = 0.0f64;
    for m in 1..=l_max {
        let h = table.get(m).abs();
        let need = if m <= m_star {
            h
        } else {
            h * (r * m as f64).powf(1.5)
        };
        c = c.max(need);
    }
    let boundary_ratio = if m_star <= l_max {
        let flat = 1.0f64;
        let decay = 1.0 / (r * m_star as f64).powf(1.5);
        flat.max(decay) / flat.min(decay)
    } else {
        1.0
    };
    Ok(ShcDecayReport {
        radius: r,
        l_max,
        fitted_c: c,
        boundary_ratio,
    })
}

/// Cap average of a function given by its degree decomposition evaluated at
/// the cap center: (1/vol) int_{B_R(w)} f = sum_l h_R(l) * f_l(w).
pub fn cap_average_components(parts: &[(usize, f64)], r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(parts.iter().map(|(l, v)| shc_value(r, *l) * v).sum())
}

/// The point-pair invariant k_R * k_rho, i.e. the normalized area of the
/// intersection of caps of radii R and rho at geodesic distance d.
#[derive(Debug, Clone)]
pub struct ConvolutionKernel {
    pub r: f64,
    pub rho: f64,
    vol_r: f64,
    vol_rho: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ConvolutionKernel {
    pub fn new(r: f64, rho: f64) -> Result<Self> {
        check_radius(r)?;
        if !(rho > 0.0 && rho < r) {
            return Err(Error::Domain(format!(
                "convolution requires 0 < rho < R, got rho = {rho}, R = {r}"
            )));
        }
        let (nodes, weights) = gauss_legendre(200);
        Ok(Self {
            r,
            rho,
            vol_r: cap_volume(r),
            vol_rho: cap_volume(rho),
            nodes,
            weights,
        })
    }

    /// Azimuthal arc angle (0..2pi) of the circle at polar angle theta from
    /// the rho-cap center that lies inside the R-cap at distance d.
    fn arc(&self, theta: f64, d: f64) -> f64 {
        // distance to z along the circle: cos(dist) = B + A cos(azimuth)
        let cr = self.r.cos();
        let a = d.sin() * theta.sin();
        let b = d.cos() * theta.cos();
        if a.abs() <= 1e-15 {
            return if b >= cr { 2.0 * PI } else { 0.0 };
        }
        let u = (cr - b) / a;
        if u <= -1.0 {
            2.0 * PI
        } else if u >= 1.0 {
            0.0
        } else {
            2.0 * u.acos()
        }
    }

    /// Intersection area of the two caps at center distance d.
    fn intersection_area(&self, d: f64) -> f64 {
        if d <= self.r - self.rho {
            return self.vol_rho;
        }
        if d > self.r + self.rho {
            return 0.0;
        }
        // polar reduction around the rho-cap center: area =
        // int_0^rho sin(theta) * arc(theta, d) d theta, split at the kink
        // theta = |R - d| where the circle first meets the R-cap boundary.
        let kink = (self.r - d).abs().min(self.rho);
        let mut total = 0.0;
        for (a, b) in [(0.0, kink), (kink, self.rho)] {
            if b - a < 1e-15 {
                continue;
            }
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            let terms: Vec<f64> = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(t, w)| {
                    let theta = mid + half * t;
                    half * w * theta.sin() * self.arc(theta, d)
                })
                .collect();
            total += pairwise_sum(&terms);
        }
        total
    }

    /// k_R * k_rho at geodesic distance d.
    pub fn eval_distance(&self, d: f64) -> f64 {
        self.intersection_area(d) / (self.vol_r * self.vol_rho)
    }

    pub fn eval(&self, z: &Vector3<f64>, w: &Vector3<f64>) -> f64 {
        self.eval_distance(z.dot(w).clamp(-1.0, 1.0).acos())
    }

    /// Spherical transform of the convolution at degree l by Funk-Hecke:
    /// lambda(l) = 2 pi int_{-1}^{1} K(arccos t) P_l(t) dt, with the
    /// integration split at the kinks cos(R +- rho).
    pub fn transform_by_quadrature(&self, l: usize) -> f64 {
        let c_in = (self.r - self.rho).cos(); // constant 1/vol_R above this
        let c_out = if self.r + self.rho <= PI {
            (self.r + self.rho).cos()
        } else {
            -1.0
        };
        // flat inner region: (1/vol_R) * 2 pi int_{c_in}^{1} P_l
        let n = l / 2 + 2;
        let (t, w) = gauss_legendre(n);
        let (mid, half) = ((c_in + 1.0) / 2.0, (1.0 - c_in) / 2.0);
        let flat: f64 = t
            .iter()
            .zip(&w)
            .map(|(t, w)| half * w * legendre(l, mid + half * t))
            .sum::<f64>()
            / self.vol_r;
        // annulus
        let (t2, w2) = gauss_legendre(120);
        let (mid2, half2) = ((c_out + c_in) / 2.0, (c_in - c_out) / 2.0);
        let ann: f64 = t2
            .iter()
            .zip(&w2)
            .map(|(t, w)| {
                let u: f64 = mid2 + half2 * t;
                half2 * w * self.eval_distance(u.clamp(-1.0, 1.0).acos()) * legendre(l, u)
            })
            .sum();
        2.0 * PI * (flat + ann)
    }
}

/// The three constraints of the convolution sandwich at one distance.
pub fn sandwich_violation(k: &ConvolutionKernel, d: f64) -> f64 {
    let v = k.eval_distance(d);
    let cap = 1.0 / cap_volume(k.r);
    let mut worst = (-v).max(v - cap).max(0.0); // 0 <= v <= 1/vol(B_R)
    if d <= k.r - k.rho {
        worst = worst.max((v - cap).abs());
    }
    if d > k.r + k.rho {
        worst = worst.max(v.abs());
    }
    worst
}

/// Residuals of the truncated spectral expansion of K_R * K_rho.
#[derive(Debug, Clone)]
pub struct ExpansionCheck {
    /// |truncated eigenfunction expansion - direct quadrature|; contains the
    /// true spectral tail above the library's cutoff
    pub residual_raw: f64,
    /// |truncated eigenfunction expansion - degreewise-truncated kernel|;
    /// isolates eigenbasis completeness from the tail, near machine precision
    pub residual_truncated: f64,
    /// |direct - degreewise truncation|, the exact tail above the cutoff
    pub tail: f64,
}

/// Truncated spectral expansion of K_R * K_rho against direct quadrature.
///
/// LHS: 12/vol(quotient) + 12 sum_phi h_R(l_phi) h_rho(l_phi) phi(z) phi(w)
/// over quotient-normalized eigenfunctions with l_phi <= lib.ell_max.
/// Direct: 12 sum over the 12 rotations g of k_R * k_rho(g z, w).
/// Truncated kernel: the same sum with each k_R * k_rho(g z, w) replaced by
/// its Legendre expansion sum_{l <= L} h_R(l) h_rho(l) (2l+1)/(4 pi) P_l,
/// which equals the LHS exactly when the eigenbasis spans every invariant
/// subspace up to L.
pub fn spectral_expansion_check(
    lib: &EigenLibrary,
    r: f64,
    rho: f64,
    z: &Vector3<f64>,
    w: &Vector3<f64>,
) -> Result<ExpansionCheck> {
    let kernel = ConvolutionKernel::new(r, rho)?;
    let l_max = lib.ell_max;
    let h_r = shc_transform(r, l_max)?;
    let h_rho = shc_transform(rho, l_max)?;
    let mut lhs = 36.0 / PI; // 12 / (pi/3); equivalently the l = 0 term
    for phi in lib.all().filter(|phi| phi.degree > 0) {
        let f = phi.as_harmonic();
        let l = phi.degree;
        lhs += 12.0 * h_r.get(l) * h_rho.get(l) * f.eval(z) * f.eval(w);
    }
    let mut direct = 0.0;
    let mut truncated = 0.0;
    for g in rotation_group_image() {
        let gz = g.apply(z);
        direct += 12.0 * kernel.eval(&gz, w);
        let c = gz.dot(w).clamp(-1.0, 1.0);
        let partial: f64 = (0..=l_max)
            .map(|l| {
                h_r.get(l) * h_rho.get(l) * (2 * l + 1) as f64 / crate::quad::FOUR_PI
                    * legendre(l, c)
            })
            .sum();
        truncated += 12.0 * partial;
    }
    Ok(ExpansionCheck {
        residual_raw: (lhs - direct).abs(),
        residual_truncated: (lhs - truncated).abs(),
        tail: (direct - truncated).abs(),
    })
}
