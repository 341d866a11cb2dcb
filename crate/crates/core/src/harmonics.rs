//! Legendre polynomials, real spherical harmonics, and rotation of harmonics.
//!
//! The fixed basis of H_l is the real spherical-harmonic family
//!
//!   Y_{l,0}  = Pbar_{l,0}(cos theta)
//!   Y_{l,m}  = sqrt(2) * Pbar_{l,m}(cos theta) * cos(m phi)   (m > 0)
//!   Y_{l,-m} = sqrt(2) * Pbar_{l,m}(cos theta) * sin(m phi)   (m > 0)
//!
//! where Pbar is the fully normalized associated Legendre function without the
//! Condon-Shortley phase, seeded so that every Y_{l,m} has unit L^2(S^2) norm
//! against the round measure (sigma(S^2) = 4*pi). Coefficient vectors are
//! indexed by m + l. This convention is identified in persisted files as
//! `real-sh-orthonormal-v1`.
//!
//! Rotation acts by sampling and re-projecting on a grid of exactness 2l,
//! which is exact for polynomials and avoids Wigner-D machinery.

use crate::hurwitz::Rotation;
use crate::quad::{shared_grid, SphericalGrid};
use nalgebra::{DMatrix, DVector, Vector3};
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Identifier for the basis convention used by persisted coefficient vectors.
pub const BASIS_CONVENTION_ID: &str = "real-sh-orthonormal-v1";

/// Legendre polynomial P_l(t) by the three-term recurrence
/// (m+1) P_{m+1} = (2m+1) t P_m - m P_{m-1}. The argument is clamped to [-1,1].
pub fn legendre(l: usize, t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    if l == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, t);
    for m in 1..l {
        let p2 = ((2 * m + 1) as f64 * t * p1 - m as f64 * p0) / (m + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Number of coefficients below degree l in the flat (l^2 + l + m) layout.
#[inline]
pub fn flat_base(l: usize) -> usize {
    l * l
}

/// Evaluate all orthonormal real spherical harmonics of degree <= lmax at the
/// point with polar cosine `t` and azimuth `phi`, writing Y_{l,m} into
/// `out[l^2 + l + m]`. `out` must have length (lmax+1)^2.
pub fn sh_eval_upto(lmax: usize, t: f64, phi: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), (lmax + 1) * (lmax + 1));
    let t = t.clamp(-1.0, 1.0);
    let s = (1.0 - t * t).max(0.0).sqrt();
    let inv_sqrt_4pi = 0.5 / std::f64::consts::PI.sqrt();
    let sqrt2 = std::f64::consts::SQRT_2;
    let (c1, s1) = (phi.cos(), phi.sin());
    let mut cm = 1.0; // cos(m*phi)
    let mut sm = 0.0; // sin(m*phi)
    let mut pmm = inv_sqrt_4pi;
    for m in 0..=lmax {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
            let c_next = cm * c1 - sm * s1;
            let s_next = sm * c1 + cm * s1;
            cm = c_next;
            sm = s_next;
        }
        let (az_c, az_s) = if m == 0 {
            (1.0, 0.0)
        } else {
            (sqrt2 * cm, sqrt2 * sm)
        };
        // ascend in degree at fixed order m
        let mut p_prev = 0.0f64;
        let mut p_curr = pmm;
        for l in m..=lmax {
            let base = l * l + l;
            out[base + m] = p_curr * az_c;
            if m > 0 {
                out[base - m] = p_curr * az_s;
            }
            if l < lmax {
                let p_next = if l == m {
                    ((2 * m + 3) as f64).sqrt() * t * p_curr
                } else {
                    let lf = (l + 1) as f64;
                    let mf = m as f64;
                    let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                    let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                        / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                        .sqrt();
                    a * (t * p_curr - b * p_prev)
                };
                p_prev = p_curr;
                p_curr = p_next;
            }
        }
    }
}

/// Polar cosine and azimuth of a unit vector.
#[inline]
pub fn to_angles(x: &Vector3<f64>) -> (f64, f64) {
    (x.z, x.y.atan2(x.x))
}

/// Values Y_{l,m}(x) for the single degree l, indexed by m + l.
pub fn basis_row(l: usize, x: &Vector3<f64>) -> Vec<f64> {
    let (t, phi) = to_angles(x);
    let mut scratch = vec![0.0; (l + 1) * (l + 1)];
    sh_eval_upto(l, t, phi, &mut scratch);
    scratch[flat_base(l)..].to_vec()
}

/// Degree-l basis values at many points, as a (2l+1) x N matrix.
pub fn basis_values_at_points(l: usize, points: &[Vector3<f64>]) -> DMatrix<f64> {
    let dim = 2 * l + 1;
    let mut m = DMatrix::zeros(dim, points.len());
    let mut scratch = vec![0.0; (l + 1) * (l + 1)];
    for (k, x) in points.iter().enumerate() {
        let (t, phi) = to_angles(x);
        sh_eval_upto(l, t, phi, &mut scratch);
        for (i, v) in scratch[flat_base(l)..].iter().enumerate() {
            m[(i, k)] = *v;
        }
    }
    m
}

/// An element of H_l over the fixed orthonormal real basis.
#[derive(Debug, Clone)]
pub struct HarmonicFunction {
    pub degree: usize,
    pub coeffs: DVector<f64>,
}

impl HarmonicFunction {
    pub fn new(degree: usize, coeffs: DVector<f64>) -> Self {
        assert_eq!(coeffs.len(), 2 * degree + 1);
        Self { degree, coeffs }
    }

    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        let row = basis_row(self.degree, x);
        row.iter()
            .zip(self.coeffs.iter())
            .map(|(y, c)| y * c)
            .sum()
    }

    /// S^2 norm; equals |coeffs| by orthonormality of the basis.
    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }
}

/// The L^2-normalized zonal harmonic sqrt((2l+1)/4pi) * P_l(<x, pole>).
#[derive(Debug, Clone)]
pub struct ZonalHarmonic {
    pub degree: usize,
    pub pole: Vector3<f64>,
}

impl ZonalHarmonic {
    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        let scale = ((2 * self.degree + 1) as f64 / crate::quad::FOUR_PI).sqrt();
        scale * legendre(self.degree, x.dot(&self.pole))
    }
}

/// Cached per-degree data: the exactness-2l grid, basis values at its nodes,
/// and the weight-scaled copy used for projections.
pub struct BasisTable {
    pub degree: usize,
    pub grid: Arc<SphericalGrid>,
    /// (2l+1) x N values of the degree-l basis at the grid nodes.
    pub values: DMatrix<f64>,
    /// values with column k scaled by weight w_k.
    pub weighted: DMatrix<f64>,
}

static BASIS_CACHE: Lazy<Mutex<HashMap<usize, Arc<BasisTable>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

pub fn basis_table(l: usize) -> Arc<BasisTable> {
    if let Some(t) = BASIS_CACHE.lock().unwrap().get(&l) {
        return t.clone();
    }
    let grid = shared_grid(2 * l);
    let values = basis_values_at_points(l, &grid.nodes);
    let mut weighted = values.clone();
    for (k, w) in grid.weights.iter().enumerate() {
        for i in 0..weighted.nrows() {
            weighted[(i, k)] *= *w;
        }
    }
    let table = Arc::new(BasisTable {
        degree: l,
        grid,
        values,
        weighted,
    });
    BASIS_CACHE
        .lock()
        .unwrap()
        .entry(l)
        .or_insert(table)
        .clone()
}

/// Coefficients of z -> f(r z), computed by sampling at rotated nodes and
/// projecting back; exact since rotation preserves degree.
pub fn rotate(f: &HarmonicFunction, r: &Rotation) -> HarmonicFunction {
    let tbl = basis_table(f.degree);
    let rotated: Vec<Vector3<f64>> = tbl.grid.nodes.iter().map(|x| r.apply(x)).collect();
    let b_r = basis_values_at_points(f.degree, &rotated);
    let sampled = b_r.transpose() * &f.coeffs; // f(r x_k)
    let coeffs = &tbl.weighted * sampled;
    HarmonicFunction::new(f.degree, coeffs)
}

/// Matrix M of the action f -> f o r on H_l in the fixed basis:
/// coeffs(f o r) = M * coeffs(f), with M_{ij} = <Y_j o r, Y_i>.
pub fn rotation_action_matrix(l: usize, r: &Rotation) -> DMatrix<f64> {
    let tbl = basis_table(l);
    let rotated: Vec<Vector3<f64>> = tbl.grid.nodes.iter().map(|x| r.apply(x)).collect();
    let b_r = basis_values_at_points(l, &rotated);
    &tbl.weighted * b_r.transpose()
}

/// Sum over rotations of the sampled basis matrices B_r (basis values at
/// the r-rotated grid nodes). Group-averaged operators built from this need
/// a single projection product instead of one per rotation.
pub fn summed_rotated_basis(l: usize, rotations: &[Rotation]) -> DMatrix<f64> {
    let tbl = basis_table(l);
    let n = tbl.grid.nodes.len();
    let mut sum = DMatrix::<f64>::zeros(2 * l + 1, n);
    let mut rotated = Vec::with_capacity(n);
    for r in rotations {
        rotated.clear();
        rotated.extend(tbl.grid.nodes.iter().map(|x| r.apply(x)));
        sum += basis_values_at_points(l, &rotated);
    }
    sum
}

/// Matrix of f -> sum_r f o r on H_l in the fixed basis.
pub fn summed_action_matrix(l: usize, rotations: &[Rotation]) -> DMatrix<f64> {
    let tbl = basis_table(l);
    &tbl.weighted * summed_rotated_basis(l, rotations).transpose()
}

/// The full orthonormal basis of H_l as coefficient vectors (the identity),
/// mainly useful for tests and enumeration.
pub fn real_sh_basis(l: usize) -> Vec<HarmonicFunction> {
    (0..2 * l + 1)
        .map(|i| {
            let mut c = DVector::zeros(2 * l + 1);
            c[i] = 1.0;
            HarmonicFunction::new(l, c)
        })
        .collect()
}
