//! Theta lift of a Hecke eigenfunction to a weight-(2 l + 2) level-2 form.
//!
//! For an L^2(S^2)-normalized eigenfunction psi of degree l, the n-th
//! Fourier coefficient of the lift is the period sum
//!
//!   a_n = (1/24) sum_{gamma in O(n)} n^l <psi, psi o r(gamma)>_{L^2(S^2)},
//!
//! the factor n^l coming from the homogeneous degree-l extension of psi to
//! R^3. On invariant psi the sum reduces to sigma(n) coset terms as with the
//! Hecke operators, and a_n = n^l lambda_n for odd n — the deepest
//! cross-module identity in this crate.

use crate::error::{Error, Result};
use crate::hecke::{hecke_eigenvalue, EigenFunction};
use crate::hurwitz::coset_representatives;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct ThetaCoefficients {
    pub source_degree: usize,
    /// modular weight 2 l + 2
    pub weight: usize,
    pub coeffs: BTreeMap<u64, f64>,
    /// indices n with even n, outside the odd-n Hecke correspondence
    pub even_flagged: Vec<u64>,
}

/// Fourier coefficients a_n, n = 1..=n_max. The eigenfunction is rescaled
/// internally to unit L^2(S^2) norm so that a_1 = 1.
pub fn theta_coefficients(psi: &EigenFunction, n_max: u64) -> Result<ThetaCoefficients> {
    if n_max < 1 {
        return Err(Error::Domain(format!("need n_max >= 1, got {n_max}")));
    }
    let l = psi.degree;
    let c = &psi.coeffs;
    let norm2 = c.norm_squared(); // 12 in quotient normalization
    let mut coeffs = BTreeMap::new();
    let mut even_flagged = Vec::new();
    let tbl = crate::harmonics::basis_table(l);
    let cw = c.transpose() * &tbl.weighted;
    for n in 1..=n_max {
        let reps = coset_representatives(n as i64)?;
        let rots: Vec<_> = reps
            .iter()
            .map(|g| g.to_rotation())
            .collect::<crate::Result<_>>()?;
        let s = crate::harmonics::summed_rotated_basis(l, &rots);
        let acc = (&cw * s.transpose() * c)[(0, 0)];
        let a = (n as f64).powi(l as i32) * acc / norm2;
        if n % 2 == 0 {
            even_flagged.push(n);
        }
        coeffs.insert(n, a);
    }
    Ok(ThetaCoefficients {
        source_degree: l,
        weight: 2 * l + 2,
        coeffs,
        even_flagged,
    })
}

/// a_n = n^l lambda_n for odd n, via the independent Hecke-eigenvalue route.
pub fn theta_coefficient_via_hecke(psi: &EigenFunction, n: u64) -> Result<f64> {
    let lam = hecke_eigenvalue(psi, n)?;
    Ok((n as f64).powi(psi.degree as i32) * lam)
}

/// External newform fixture: exact integer coefficients with provenance.
#[derive(Debug, Clone)]
pub struct NewformFixture {
    pub weight: usize,
    pub level: usize,
    pub label: String,
    pub coeffs: BTreeMap<u64, i64>,
}

pub fn parse_fixture(path: &Path) -> Result<NewformFixture> {
    let text = std::fs::read_to_string(path)?;
    let mut weight = None;
    let mut level = None;
    let mut label = None;
    let mut coeffs = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        let val = parts
            .next()
            .ok_or_else(|| Error::Format(format!("{}: line {} truncated", path.display(), lineno + 1)))?;
        match key {
            "weight" => weight = Some(val.parse().map_err(|e| Error::Format(format!("weight: {e}")))?),
            "level" => level = Some(val.parse().map_err(|e| Error::Format(format!("level: {e}")))?),
            "label" => label = Some(val.to_string()),
            _ => {
                let n: u64 = key
                    .parse()
                    .map_err(|e| Error::Format(format!("index {key:?}: {e}")))?;
                let a: i64 = val
                    .parse()
                    .map_err(|e| Error::Format(format!("coefficient for n = {n}: {e}")))?;
                coeffs.insert(n, a);
            }
        }
    }
    Ok(NewformFixture {
        weight: weight.ok_or_else(|| Error::Format("fixture missing weight".into()))?,
        level: level.ok_or_else(|| Error::Format("fixture missing level".into()))?,
        label: label.ok_or_else(|| Error::Format("fixture missing label".into()))?,
        coeffs,
    })
}

#[derive(Debug, Clone)]
pub struct NewformReport {
    pub multiplicativity_worst: f64,
    pub deligne_worst_excess: f64,
    /// worst relative mismatch against fixture odd-n coefficients, if a
    /// fixture was supplied
    pub fixture_worst: Option<f64>,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Verify newform-style identities on computed coefficients: coprime odd
/// multiplicativity, the Deligne bound at odd primes, and (optionally)
/// proportionality to a fixture's odd-indexed coefficients.
pub fn newform_consistency(
    theta: &ThetaCoefficients,
    fixture: Option<&NewformFixture>,
) -> Result<NewformReport> {
    let n_max = *theta.coeffs.keys().last().unwrap_or(&1);
    let a = |n: u64| theta.coeffs[&n];
    let mut mult_worst = 0.0f64;
    for m in (3..=n_max).step_by(2) {
        for n in (3..=n_max / m).step_by(2) {
            if gcd(m, n) == 1 {
                let lhs = a(m * n);
                let rhs = a(m) * a(n);
                let rel = (lhs - rhs).abs() / rhs.abs().max(1.0);
                mult_worst = mult_worst.max(rel);
            }
        }
    }
    let half = (theta.weight as f64 - 1.0) / 2.0;
    let mut deligne_worst = 0.0f64;
    for p in (3..=n_max).step_by(2).filter(|p| is_prime(*p)) {
        let bound = 2.0 * (p as f64).powf(half);
        deligne_worst = deligne_worst.max((a(p).abs() - bound) / bound);
    }
    let fixture_worst = match fixture {
        None => None,
        Some(fx) => {
            if fx.weight != theta.weight {
                return Err(Error::Format(format!(
                    "fixture weight {} does not match lift weight {}",
                    fx.weight, theta.weight
                )));
            }
            // normalization a_1 = 1 on both sides, so compare directly
            let mut worst = 0.0f64;
            for (n, val) in &fx.coeffs {
                if *n % 2 == 1 && *n <= n_max {
                    let rel = (a(*n) - *val as f64).abs() / (*val as f64).abs().max(1.0);
                    worst = worst.max(rel);
                }
            }
            Some(worst)
        }
    };
    Ok(NewformReport {
        multiplicativity_worst: mult_worst,
        deligne_worst_excess: deligne_worst,
        fixture_worst,
    })
}
