//! Invariant subspaces and Hecke operators.
//!
//! Let G < SO(3) be the 12-element rotation image of the Hurwitz unit group.
//! H_l^G is the G-invariant part of H_l; the Hecke operator at odd n acts on
//! invariant functions by
//!
//!   T_n f(z) = (1/24) sum_{gamma in O(n)} f(r(gamma) z)
//!            = sum_{i=1}^{sigma(n)} f(r(gamma_i) z)
//!
//! where the gamma_i are left O^x-coset representatives; the two forms agree
//! exactly on invariant f because each coset contributes 24 equal terms. The
//! operators are self-adjoint and commute, so H_l^G has an orthonormal basis
//! of joint eigenfunctions; ties under one T_p are split recursively with
//! further primes.

use crate::error::{Error, Result};
use crate::harmonics::{rotation_action_matrix, HarmonicFunction};
use crate::hurwitz::{coset_representatives, rotation_group_image};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use once_cell::sync::Lazy;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// dim H_l^G by the character formula for the tetrahedral rotation group:
/// d(l) = [(2l+1) + 8 e3(l) + 3 (-1)^l] / 12 with e3 = 1, 0, -1 for
/// l = 0, 1, 2 mod 3.
pub fn invariant_dimension(l: usize) -> usize {
    let e3: i64 = match l % 3 {
        0 => 1,
        1 => 0,
        _ => -1,
    };
    let sign: i64 = if l % 2 == 0 { 3 } else { -3 };
    let num = (2 * l as i64 + 1) + 8 * e3 + sign;
    debug_assert!(num >= 0 && num % 12 == 0);
    (num / 12) as usize
}

/// Orthonormal basis of H_l^G, as columns over the fixed real SH basis.
pub struct InvariantSubspace {
    pub degree: usize,
    /// (2l+1) x d matrix with orthonormal columns spanning H_l^G.
    pub basis: DMatrix<f64>,
}

impl InvariantSubspace {
    /// Build by symmetrizing: P = (1/12) sum_{r in G} M(r) is the orthogonal
    /// projector onto H_l^G; its eigenvalue-1 eigenvectors give the basis.
    pub fn build(l: usize) -> Result<Self> {
        let dim = 2 * l + 1;
        let p = crate::harmonics::summed_action_matrix(l, rotation_group_image()) / 12.0;
        // enforce exact symmetry before the eigensolve
        let p = (&p + p.transpose()) * 0.5;
        let eig = SymmetricEigen::new(p);
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for (i, lam) in eig.eigenvalues.iter().enumerate() {
            if *lam > 0.5 {
                if (*lam - 1.0).abs() > 1e-8 {
                    return Err(Error::Numeric(format!(
                        "projector eigenvalue {lam} at l = {l} is not near 0 or 1"
                    )));
                }
                cols.push(eig.eigenvectors.column(i).into_owned());
            } else if lam.abs() > 1e-8 {
                return Err(Error::Numeric(format!(
                    "projector eigenvalue {lam} at l = {l} is not near 0 or 1"
                )));
            }
        }
        let d = invariant_dimension(l);
        if cols.len() != d {
            return Err(Error::Numeric(format!(
                "invariant subspace at l = {l}: found {} dims, character formula gives {d}",
                cols.len()
            )));
        }
        let mut basis = DMatrix::zeros(dim, d);
        for (j, c) in cols.iter().enumerate() {
            basis.set_column(j, c);
        }
        Ok(Self { degree: l, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

static SUBSPACE_CACHE: Lazy<Mutex<HashMap<usize, Arc<InvariantSubspace>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Cached invariant subspace; the basis is deterministic per degree.
pub fn invariant_subspace(l: usize) -> Result<Arc<InvariantSubspace>> {
    if let Some(s) = SUBSPACE_CACHE.lock().unwrap().get(&l) {
        return Ok(s.clone());
    }
    let sub = Arc::new(InvariantSubspace::build(l)?);
    Ok(SUBSPACE_CACHE
        .lock()
        .unwrap()
        .entry(l)
        .or_insert(sub)
        .clone())
}

/// Matrix of T_n on H_l^G in the subspace basis, via coset representatives:
/// (T_n)_{ab} = sum_i <v_b o r(gamma_i), v_a>.
pub fn hecke_matrix(sub: &InvariantSubspace, n: u64) -> Result<DMatrix<f64>> {
    if n % 2 == 0 {
        return Err(Error::Domain(format!(
            "Hecke operators are defined for odd n, got {n}"
        )));
    }
    let reps = coset_representatives(n as i64)?;
    let l = sub.degree;
    let rots: Vec<_> = reps
        .iter()
        .map(|g| g.to_rotation())
        .collect::<Result<_>>()?;
    let tbl = crate::harmonics::basis_table(l);
    let s = crate::harmonics::summed_rotated_basis(l, &rots);
    let t = (sub.basis.transpose() * &tbl.weighted) * s.transpose() * &sub.basis;
    let asym = (&t - t.transpose()).amax();
    let scale = t.amax().max(1.0);
    if asym > 1e-9 * scale {
        return Err(Error::Numeric(format!(
            "Hecke matrix at l = {l}, n = {n} asymmetric by {asym}"
        )));
    }
    Ok((&t + t.transpose()) * 0.5)
}

/// Same operator assembled from the full 24 sigma(n) sum with the 1/24
/// prefactor; used as a cross-check oracle for the coset reduction.
pub fn hecke_matrix_full_sum(sub: &InvariantSubspace, n: u64) -> Result<DMatrix<f64>> {
    if n % 2 == 0 {
        return Err(Error::Domain(format!(
            "Hecke operators are defined for odd n, got {n}"
        )));
    }
    let elts = crate::hurwitz::norm_n_elements(n as i64)?;
    let l = sub.degree;
    let d = sub.dim();
    let mut t = DMatrix::<f64>::zeros(d, d);
    for g in &elts {
        let r = g.to_rotation()?;
        let m = rotation_action_matrix(l, &r);
        t += sub.basis.transpose() * m * &sub.basis;
    }
    Ok(t / 24.0)
}

/// One joint eigenfunction: unit coefficient vector in the quotient
/// normalization (squared S^2 norm 12), with its Hecke eigenvalues at the
/// primes used to resolve it.
#[derive(Debug, Clone)]
pub struct EigenFunction {
    pub degree: usize,
    /// Coefficients over the fixed real SH basis, scaled so the S^2 norm
    /// squared is 12 (unit norm on the 12-fold quotient).
    pub coeffs: DVector<f64>,
    /// Eigenvalues at the resolving primes, in the same order as `primes`.
    pub eigenvalues: Vec<f64>,
    pub primes: Vec<u64>,
}

impl EigenFunction {
    pub fn as_harmonic(&self) -> HarmonicFunction {
        HarmonicFunction::new(self.degree, self.coeffs.clone())
    }

    /// The same function with unit S^2 norm (divide by sqrt 12).
    pub fn sphere_normalized(&self) -> HarmonicFunction {
        HarmonicFunction::new(self.degree, self.coeffs.clone() / 12f64.sqrt())
    }
}

const CLUSTER_GAP: f64 = 1e-6;

fn eigen_sign_fix(v: &mut DVector<f64>) {
    // deterministic sign: first coordinate exceeding 1e-8 in absolute
    // value is made positive
    for x in v.iter() {
        if x.abs() > 1e-8 {
            if *x < 0.0 {
                *v *= -1.0;
            }
            return;
        }
    }
}

/// Joint diagonalization of { T_p : p in primes } on H_l^G.
///
/// Diagonalizes T_{p_1}, then recursively refines any eigenvalue cluster
/// (relative gap below 1e-6) with the next prime. Returns eigenfunctions
/// sorted by eigenvalue sequence (lexicographic, descending), in quotient
/// normalization.
pub fn eigenbasis(l: usize, primes: &[u64]) -> Result<Vec<EigenFunction>> {
    if primes.is_empty() {
        return Err(Error::Domain("need at least one Hecke prime".into()));
    }
    for p in primes {
        if *p % 2 == 0 {
            return Err(Error::Domain(format!("even prime {p} not allowed")));
        }
    }
    let sub = invariant_subspace(l)?;
    let d = sub.dim();
    if d == 0 {
        return Ok(Vec::new());
    }
    // vectors currently spanning each unresolved cluster, as columns
    let init = DMatrix::<f64>::identity(d, d);
    let mats: Vec<DMatrix<f64>> = primes
        .iter()
        .map(|p| hecke_matrix(&sub, *p))
        .collect::<Result<_>>()?;
    let mut resolved: Vec<(Vec<f64>, DVector<f64>)> = Vec::new();
    refine_cluster(&mats, 0, &init, &mut Vec::new(), &mut resolved, l, primes)?;
    resolved.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal)
    });
    let scale = 12f64.sqrt();
    Ok(resolved
        .into_iter()
        .map(|(vals, vec)| {
            let mut c = &sub.basis * vec;
            eigen_sign_fix(&mut c);
            EigenFunction {
                degree: l,
                coeffs: c * scale,
                eigenvalues: vals,
                primes: primes.to_vec(),
            }
        })
        .collect())
}

fn refine_cluster(
    mats: &[DMatrix<f64>],
    depth: usize,
    span: &DMatrix<f64>, // d x k, orthonormal columns
    vals_so_far: &mut Vec<f64>,
    out: &mut Vec<(Vec<f64>, DVector<f64>)>,
    l: usize,
    primes: &[u64],
) -> Result<()> {
    let k = span.ncols();
    if k == 1 {
        let mut vals = vals_so_far.clone();
        // fill remaining eigenvalues by Rayleigh quotient
        for m in mats.iter().skip(depth) {
            let v = span.column(0);
            vals.push((v.transpose() * m * v)[(0, 0)]);
        }
        out.push((vals, span.column(0).into_owned()));
        return Ok(());
    }
    if depth >= mats.len() {
        return Err(Error::UnresolvedCluster {
            degree: l,
            cluster_size: k,
            primes: primes.to_vec(),
        });
    }
    let t = span.transpose() * &mats[depth] * span;
    let t = (&t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(t);
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|a, b| {
        eig.eigenvalues[*b]
            .partial_cmp(&eig.eigenvalues[*a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut i = 0;
    while i < k {
        let mut j = i + 1;
        while j < k
            && (eig.eigenvalues[order[j - 1]] - eig.eigenvalues[order[j]]).abs()
                < CLUSTER_GAP * scale
        {
            j += 1;
        }
        let cluster: Vec<usize> = order[i..j].to_vec();
        let mean: f64 =
            cluster.iter().map(|c| eig.eigenvalues[*c]).sum::<f64>() / cluster.len() as f64;
        let mut next = DMatrix::zeros(span.nrows(), cluster.len());
        for (col, c) in cluster.iter().enumerate() {
            next.set_column(col, &(span * eig.eigenvectors.column(*c)));
        }
        vals_so_far.push(mean);
        refine_cluster(mats, depth + 1, &next, vals_so_far, out, l, primes)?;
        vals_so_far.pop();
        i = j;
    }
    Ok(())
}

/// Eigenvalue of T_n on a given eigenfunction, for arbitrary odd n, by
/// evaluating lambda_n = <T_n psi, psi> / <psi, psi> on coefficient vectors.
pub fn hecke_eigenvalue(psi: &EigenFunction, n: u64) -> Result<f64> {
    if n % 2 == 0 {
        return Err(Error::Domain(format!(
            "Hecke operators are defined for odd n, got {n}"
        )));
    }
    let reps = coset_representatives(n as i64)?;
    let c = &psi.coeffs;
    let rots: Vec<_> = reps
        .iter()
        .map(|g| g.to_rotation())
        .collect::<Result<_>>()?;
    let tbl = crate::harmonics::basis_table(psi.degree);
    let s = crate::harmonics::summed_rotated_basis(psi.degree, &rots);
    let acc = ((c.transpose() * &tbl.weighted) * s.transpose() * c)[(0, 0)];
    Ok(acc / c.norm_squared())
}

/// The eigenvalue of T_n on the constant function: sigma(n) for odd n.
pub fn constant_eigenvalue(n: u64) -> u64 {
    crate::hurwitz::divisor_sum(n as i64) as u64
}

/// Per-degree eigenbasis library. Degrees with d(l) = 0 get empty entries.
pub struct EigenLibrary {
    pub ell_max: usize,
    pub primes: Vec<u64>,
    pub by_degree: Vec<Vec<EigenFunction>>,
}

impl EigenLibrary {
    pub fn build(ell_max: usize, primes: &[u64]) -> Result<Self> {
        let by_degree: Vec<Vec<EigenFunction>> = (0..=ell_max)
            .into_par_iter()
            .map(|l| eigenbasis(l, primes))
            .collect::<Result<_>>()?;
        Ok(Self {
            ell_max,
            primes: primes.to_vec(),
            by_degree,
        })
    }

    pub fn all(&self) -> impl Iterator<Item = &EigenFunction> {
        self.by_degree.iter().flatten()
    }

    /// d(l) summed over l <= L: the eigenvalue count for Weyl-law checks.
    pub fn count_up_to(&self, ell: usize) -> usize {
        (0..=ell.min(self.ell_max))
            .map(|l| self.by_degree[l].len())
            .sum()
    }
}

/// Sum of d(l) for l <= ell from the character formula alone.
pub fn cumulative_dimension(ell: usize) -> usize {
    (0..=ell).map(invariant_dimension).sum()
}
