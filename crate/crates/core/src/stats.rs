//! Equidistribution statistics for Hecke eigenfunctions: spectral
//! coefficients of |psi|^2, the Gaunt/Catalan zonal identity, cap masses,
//! variance (spectral identity vs direct quadrature), spherical-cap
//! discrepancy and Berry-Esseen Wasserstein bounds.
//!
//! All quotient inner products are computed as (1/12) times the S^2 grid
//! integral; the factor is pinned by vol(quotient) = pi/3 = 4 pi / 12 and
//! centralized in `quotient_integral` so the two normalizations cannot mix.

use crate::error::{Error, Result};
use crate::harmonics::{flat_base, sh_eval_upto, HarmonicFunction};
use crate::hecke::{EigenFunction, EigenLibrary};
use crate::kernels::shc_value;
use crate::quad::{
    build_grid, cap_grid, cap_volume, center_sequence, pairwise_sum,
    quotient_injectivity_radius, shared_grid, CapSpec, FOUR_PI,
};
use nalgebra::{DVector, Vector3};
use std::f64::consts::PI;

/// Quotient measure normalization: sigma(quotient) = pi/3 = 4 pi / 12.
pub const QUOTIENT_FRACTION: f64 = 1.0 / 12.0;

/// Quotient integral of an O^x-invariant integrand: (1/12) * S^2 integral.
pub fn quotient_integral(grid: &crate::quad::SphericalGrid, f: impl Fn(&Vector3<f64>) -> f64) -> Result<f64> {
    Ok(grid.integrate(f)? * QUOTIENT_FRACTION)
}

/// The quotient-normalized constant function f0 = sqrt(3/pi).
pub fn normalized_constant() -> f64 {
    (3.0 / PI).sqrt()
}

/// One spectral coefficient of |psi|^2 against an eigenfunction.
#[derive(Debug, Clone)]
pub struct SpectralEntry {
    /// degree l_phi of the eigenfunction phi
    pub degree: usize,
    /// index of phi within its degree's eigenbasis
    pub index: usize,
    /// c_phi = <|psi|^2, phi> in the quotient inner product
    pub c: f64,
}

/// Spectral coefficients c_phi = <|psi|^2, phi>_{quotient} over the basis.
#[derive(Debug, Clone)]
pub struct SpectralCoefficientTable {
    pub source_degree: usize,
    /// <|psi|^2, f0> against the quotient-normalized constant; equals
    /// sqrt(3/pi) whenever psi is quotient-normalized
    pub constant_term: f64,
    /// entries for l_phi >= 1; degrees beyond 2 l_psi are identically zero
    /// and omitted
    pub entries: Vec<SpectralEntry>,
}

impl SpectralCoefficientTable {
    /// sum of c_phi^2 over stored entries
    pub fn sum_squares(&self) -> f64 {
        let terms: Vec<f64> = self.entries.iter().map(|e| e.c * e.c).collect();
        pairwise_sum(&terms)
    }
}

/// Single triple product <|psi|^2, phi>_{quotient} at exactness
/// 2 l_psi + l_phi, as an independent oracle for the batched table.
pub fn triple_product(psi: &EigenFunction, phi: &EigenFunction) -> Result<f64> {
    let grid = build_grid(2 * psi.degree + phi.degree);
    let f = psi.as_harmonic();
    let g = phi.as_harmonic();
    quotient_integral(&grid, |x| {
        let v = f.eval(x);
        v * v * g.eval(x)
    })
}

/// All spectral coefficients of |psi|^2 against the library's basis, batched
/// on one grid of exactness 4 l_psi (covers every l_phi <= 2 l_psi). One
/// harmonic pyramid is computed per node and shared across all phi.
pub fn triple_products(psi: &EigenFunction, lib: &EigenLibrary) -> Result<SpectralCoefficientTable> {
    let l_top = (2 * psi.degree).min(lib.ell_max);
    let mut targets: Vec<(usize, usize, DVector<f64>)> = Vec::new();
    for l in 1..=l_top {
        for (i, phi) in lib.by_degree[l].iter().enumerate() {
            targets.push((l, i, phi.coeffs.clone()));
        }
    }
    spectral_table(psi, targets)
}

/// Spectral table against the quotient-normalized invariant-subspace basis
/// itself, no Hecke diagonalization. Per-degree sums of c^2 are
/// basis-independent inside H_l^G, so this is interchangeable with
/// `triple_products` wherever only degree aggregates are consumed (variance,
/// Wasserstein scans), at a fraction of the setup cost for large cutoffs.
pub fn spectral_table_invariant(psi: &EigenFunction, ell_max: usize) -> Result<SpectralCoefficientTable> {
    let l_top = (2 * psi.degree).min(ell_max);
    let mut targets: Vec<(usize, usize, DVector<f64>)> = Vec::new();
    for l in 1..=l_top {
        let sub = crate::hecke::invariant_subspace(l)?;
        for i in 0..sub.dim() {
            // scale to quotient normalization (squared S^2 norm 12)
            targets.push((l, i, sub.basis.column(i) * 12f64.sqrt()));
        }
    }
    spectral_table(psi, targets)
}

/// Shared core: project psi^2 onto quotient-normalized degree-l coefficient
/// vectors, one basis pyramid per grid node.
fn spectral_table(
    psi: &EigenFunction,
    targets: Vec<(usize, usize, DVector<f64>)>,
) -> Result<SpectralCoefficientTable> {
    let lp = psi.degree;
    let l_top = targets.iter().map(|(l, _, _)| *l).max().unwrap_or(0);
    let grid = shared_grid(4 * lp.max(1));
    let n = grid.nodes.len();

    // per-target integrand samples, filled node by node
    let mut contrib: Vec<Vec<f64>> = vec![vec![0.0; n]; targets.len()];
    let mut const_contrib = vec![0.0; n];

    let lmax = l_top.max(lp);
    let mut pyramid = vec![0.0; (lmax + 1) * (lmax + 1)];
    for k in 0..n {
        let (t, az) = crate::harmonics::to_angles(&grid.nodes[k]);
        sh_eval_upto(lmax, t, az, &mut pyramid);
        let psi_val: f64 = pyramid[flat_base(lp)..flat_base(lp) + 2 * lp + 1]
            .iter()
            .zip(psi.coeffs.iter())
            .map(|(y, c)| y * c)
            .sum();
        let base = grid.weights[k] * psi_val * psi_val;
        const_contrib[k] = base * normalized_constant();
        for (j, (l, _, coeffs)) in targets.iter().enumerate() {
            let phi_val: f64 = pyramid[flat_base(*l)..flat_base(*l) + 2 * l + 1]
                .iter()
                .zip(coeffs.iter())
                .map(|(y, c)| y * c)
                .sum();
            contrib[j][k] = base * phi_val;
        }
    }

    let constant_term = pairwise_sum(&const_contrib) * QUOTIENT_FRACTION;
    let entries = targets
        .iter()
        .zip(&contrib)
        .map(|((l, i, _), terms)| SpectralEntry {
            degree: *l,
            index: *i,
            c: pairwise_sum(terms) * QUOTIENT_FRACTION,
        })
        .collect();
    Ok(SpectralCoefficientTable {
        source_degree: lp,
        constant_term,
        entries,
    })
}

/// <|psi|^2, |psi|^2> in the quotient inner product (the L^4 mass).
pub fn l4_mass(psi: &EigenFunction) -> Result<f64> {
    let grid = build_grid(4 * psi.degree.max(1));
    let f = psi.as_harmonic();
    quotient_integral(&grid, |x| f.eval(x).powi(4))
}

/// n-th Catalan number, exact (n <= 66).
pub fn catalan_u128(n: usize) -> u128 {
    // C_n = binom(2n, n) / (n+1), built incrementally to stay exact
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        // C_{k+1} = C_k * 2(2k+1)/(k+2)
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

/// log of the n-th Catalan number via log-factorials.
pub fn catalan_log(n: usize) -> f64 {
    let log_fact = |m: usize| (2..=m).map(|k| (k as f64).ln()).sum::<f64>();
    log_fact(2 * n) - log_fact(n + 1) - log_fact(n)
}

/// Closed form for the zonal triple integral
/// int_{S^2} Y_{lp}(<x,k>)^2 Y_{lf}(<x,k>) dsigma with L^2-normalized zonal
/// harmonics, nonzero only for even lf <= 2 lp. Both the exact-integer and
/// the log-factorial Catalan routes are computed and must agree.
pub fn gaunt_zonal_closed_form(lp: usize, lf: usize) -> f64 {
    if lf % 2 != 0 || lf > 2 * lp {
        return 0.0;
    }
    let m = lf / 2;
    let scale = FOUR_PI * (2 * lp + 1) as f64 * ((2 * lf + 1) as f64).sqrt();
    let pref = 1.0 / (8.0 * PI.powf(1.5));
    let num_log = 2.0 * ((m + 1) as f64).ln()
        + ((lp - m + 1) as f64).ln()
        + 2.0 * catalan_log(m)
        + catalan_log(lp - m);
    let den_log = ((2 * lp + lf + 1) as f64).ln()
        + ((lp + m + 1) as f64).ln()
        + catalan_log(lp + m);
    let by_log = scale * pref * (num_log - den_log).exp();
    if lp + m <= 66 {
        let num = ((m + 1) * (m + 1) * (lp - m + 1)) as f64
            * (catalan_u128(m) as f64).powi(2)
            * catalan_u128(lp - m) as f64;
        let den = ((2 * lp + lf + 1) * (lp + m + 1)) as f64 * catalan_u128(lp + m) as f64;
        let by_int = scale * pref * num / den;
        debug_assert!(
            ((by_int - by_log) / by_int.abs().max(1e-300)).abs() < 1e-10,
            "Catalan routes disagree at lp={lp} lf={lf}"
        );
        by_int
    } else {
        by_log
    }
}

/// Quadrature value of the same zonal triple integral.
pub fn gaunt_zonal_quadrature(lp: usize, lf: usize) -> f64 {
    let deg = 2 * lp + lf;
    let (t, w) = crate::quad::gauss_legendre(deg / 2 + 2);
    let np = ((2 * lp + 1) as f64 / FOUR_PI).sqrt();
    let nf = ((2 * lf + 1) as f64 / FOUR_PI).sqrt();
    let terms: Vec<f64> = t
        .iter()
        .zip(&w)
        .map(|(t, w)| {
            let yp = np * crate::harmonics::legendre(lp, *t);
            let yf = nf * crate::harmonics::legendre(lf, *t);
            w * yp * yp * yf
        })
        .collect();
    2.0 * PI * pairwise_sum(&terms)
}

/// Quadrature vs closed form; returns (integral, closed_form, relative error
/// where defined).
pub fn gaunt_zonal_check(lp: usize, lf: usize) -> (f64, f64, f64) {
    let integral = gaunt_zonal_quadrature(lp, lf);
    let closed = gaunt_zonal_closed_form(lp, lf);
    let rel = if closed != 0.0 {
        ((integral - closed) / closed).abs()
    } else {
        integral.abs()
    };
    (integral, closed, rel)
}

/// Watson-Ichino period proxy: |c_phi|^2 scaled by the archimedean factor,
/// tracking the central L-value ratio up to constants. Reported, never
/// asserted against a bound.
pub fn l_value_proxy(table: &SpectralCoefficientTable) -> Vec<(usize, usize, f64)> {
    let lp = table.source_degree as f64;
    table
        .entries
        .iter()
        .map(|e| {
            let lf = e.degree as f64;
            let proxy = e.c * e.c
                * (lf + 1.0)
                * (1.0 + 2.0 * lp - lf).sqrt()
                * (2.0 * lp + lf).sqrt();
            (e.degree, e.index, proxy)
        })
        .collect()
}

/// Harmonic decomposition of psi^2, used for spectral cap masses and the
/// direct variance path. Components live in even degrees <= 2 l_psi.
pub struct CapMassEvaluator {
    pub source_degree: usize,
    /// (degree, component of psi^2 in H_degree); includes degree 0
    pub components: Vec<(usize, HarmonicFunction)>,
}

impl CapMassEvaluator {
    pub fn new(psi: &EigenFunction) -> Result<Self> {
        let lp = psi.degree;
        let lmax = 2 * lp.max(1);
        let grid = shared_grid(4 * lp.max(1));
        let degrees: Vec<usize> = (0..=2 * lp).step_by(2).collect();
        // one pyramid per node serves every component degree at once;
        // Neumaier-compensated accumulation keeps the projection at
        // machine precision without per-coefficient term buffers
        let mut sums: Vec<DVector<f64>> =
            degrees.iter().map(|l| DVector::zeros(2 * l + 1)).collect();
        let mut comps: Vec<DVector<f64>> =
            degrees.iter().map(|l| DVector::zeros(2 * l + 1)).collect();
        let mut pyramid = vec![0.0; (lmax + 1) * (lmax + 1)];
        for (x, wt) in grid.nodes.iter().zip(&grid.weights) {
            let (t, az) = crate::harmonics::to_angles(x);
            sh_eval_upto(lmax, t, az, &mut pyramid);
            let psi_val: f64 = pyramid[flat_base(lp)..flat_base(lp) + 2 * lp + 1]
                .iter()
                .zip(psi.coeffs.iter())
                .map(|(y, c)| y * c)
                .sum();
            let base = wt * psi_val * psi_val;
            for ((l, sum), comp) in degrees.iter().zip(&mut sums).zip(&mut comps) {
                let row = &pyramid[flat_base(*l)..flat_base(*l) + 2 * l + 1];
                for (i, y) in row.iter().enumerate() {
                    let term = base * y;
                    let s = sum[i] + term;
                    comp[i] += if sum[i].abs() >= term.abs() {
                        (sum[i] - s) + term
                    } else {
                        (term - s) + sum[i]
                    };
                    sum[i] = s;
                }
            }
        }
        let components = degrees
            .iter()
            .zip(sums)
            .zip(comps)
            .map(|((l, s), c)| (*l, HarmonicFunction::new(*l, s + c)))
            .collect();
        Ok(Self {
            source_degree: lp,
            components,
        })
    }

    /// Component values at w, as (degree, value) pairs sharing one pyramid.
    pub fn component_values(&self, w: &Vector3<f64>) -> Vec<(usize, f64)> {
        let lmax = 2 * self.source_degree;
        let mut pyramid = vec![0.0; (lmax + 1) * (lmax + 1)];
        let (t, az) = crate::harmonics::to_angles(w);
        sh_eval_upto(lmax, t, az, &mut pyramid);
        self.components
            .iter()
            .map(|(l, f)| {
                let v: f64 = pyramid[flat_base(*l)..flat_base(*l) + 2 * l + 1]
                    .iter()
                    .zip(f.coeffs.iter())
                    .map(|(y, c)| y * c)
                    .sum();
                (*l, v)
            })
            .collect()
    }

    /// Spectral cap mass (1/vol) int_{B_R(w)} psi^2 = sum_l h_R(l) f_l(w).
    pub fn cap_mass(&self, cap: &CapSpec) -> f64 {
        self.component_values(&cap.center)
            .iter()
            .map(|(l, v)| shc_value(cap.radius, *l) * v)
            .sum()
    }
}

/// Cap mass via direct quadrature over the cap, exactness 2 l_psi.
pub fn cap_mass_direct(psi: &EigenFunction, cap: &CapSpec) -> Result<f64> {
    let grid = cap_grid(cap, 2 * psi.degree)?;
    let f = psi.as_harmonic();
    Ok(grid.integrate(|x| f.eval(x).powi(2))? / cap.volume())
}

/// Cap mass computed both ways, cross-checked to 1e-8; returns the spectral
/// value.
pub fn cap_mass(psi: &EigenFunction, cap: &CapSpec) -> Result<f64> {
    let eval = CapMassEvaluator::new(psi)?;
    let a = eval.cap_mass(cap);
    let b = cap_mass_direct(psi, cap)?;
    if (a - b).abs() > 1e-8 * a.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "cap mass paths disagree: spectral {a} vs direct {b}"
        )));
    }
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct VarianceReport {
    pub source_degree: usize,
    pub radius: f64,
    pub spectral_value: f64,
    pub direct_value: f64,
    pub residual: f64,
}

/// Var(psi; R) = sum_phi h_R(l_phi)^2 c_phi^2, checked against the direct
/// double quadrature (1/12) int (cap_mass(w) - 3/pi)^2 dsigma(w). The
/// integrand in w is a polynomial of degree <= 4 l_psi, so both sides are
/// exact.
pub fn variance(psi: &EigenFunction, r: f64, table: &SpectralCoefficientTable) -> Result<VarianceReport> {
    variance_with(&CapMassEvaluator::new(psi)?, r, table)
}

/// `variance` with a caller-supplied evaluator, so one psi^2 decomposition
/// can serve several radii and statistics.
pub fn variance_with(
    eval: &CapMassEvaluator,
    r: f64,
    table: &SpectralCoefficientTable,
) -> Result<VarianceReport> {
    if !(r > 0.0 && r <= PI) {
        return Err(Error::Domain(format!("cap radius {r} outside (0, pi]")));
    }
    let terms: Vec<f64> = table
        .entries
        .iter()
        .map(|e| (shc_value(r, e.degree) * e.c).powi(2))
        .collect();
    let spectral = pairwise_sum(&terms);

    let grid = shared_grid(4 * eval.source_degree.max(1));
    let mean = 3.0 / PI;
    let dev: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(w, wt)| {
            let mass: f64 = eval
                .component_values(w)
                .iter()
                .map(|(l, v)| shc_value(r, *l) * v)
                .sum();
            wt * (mass - mean).powi(2)
        })
        .collect();
    let direct = pairwise_sum(&dev) * QUOTIENT_FRACTION;
    Ok(VarianceReport {
        source_degree: eval.source_degree,
        radius: r,
        spectral_value: spectral,
        direct_value: direct,
        residual: (spectral - direct).abs(),
    })
}

/// A sampled cap and its deviation |sigma_psi(B) - vol(B) * 3/pi|.
#[derive(Debug, Clone)]
pub struct DiscrepancyReport {
    pub sup_estimate: f64,
    pub argmax: Option<CapSpec>,
    pub centers_used: usize,
    pub centers_skipped: usize,
    /// true if radii were allowed past the quotient-injectivity radius
    pub extended: bool,
}

/// Sup over sampled geodesic caps of |int_B psi^2 - vol(B) * 3/pi|. Centers
/// come from the nested low-discrepancy sequence; per center, `radii_per
/// center` radii are spaced evenly in (0, r_max] with r_max the
/// quotient-injectivity radius (or pi/2 in extended mode).
pub fn discrepancy(
    psi: &EigenFunction,
    centers: usize,
    radii_per_center: usize,
    seed: u64,
    extended: bool,
) -> Result<DiscrepancyReport> {
    discrepancy_with(&CapMassEvaluator::new(psi)?, centers, radii_per_center, seed, extended)
}

/// `discrepancy` with a caller-supplied evaluator.
pub fn discrepancy_with(
    eval: &CapMassEvaluator,
    centers: usize,
    radii_per_center: usize,
    seed: u64,
    extended: bool,
) -> Result<DiscrepancyReport> {
    let pts = center_sequence(centers, seed);
    let mean = 3.0 / PI;
    let mut sup = 0.0;
    let mut argmax = None;
    let mut skipped = 0;
    for w in &pts {
        let r_max = if extended {
            PI / 2.0
        } else {
            quotient_injectivity_radius(w)
        };
        if r_max < 1e-9 {
            skipped += 1;
            continue;
        }
        let values = eval.component_values(w);
        for j in 1..=radii_per_center {
            let r = r_max * j as f64 / radii_per_center as f64;
            let mass: f64 = values
                .iter()
                .map(|(l, v)| shc_value(r, *l) * v)
                .sum();
            let dev = (cap_volume(r) * (mass - mean)).abs();
            if dev > sup {
                sup = dev;
                argmax = Some(CapSpec::new(*w, r)?);
            }
        }
    }
    Ok(DiscrepancyReport {
        sup_estimate: sup,
        argmax,
        centers_used: pts.len() - skipped,
        centers_skipped: skipped,
        extended,
    })
}

/// Berry-Esseen Wasserstein bound scan: b(T) = 1/T +
/// sqrt(sum_{l_phi <= T} c_phi^2 / (l_phi (l_phi + 1))), T = 1 .. 2 l_psi,
/// with the proposition's absolute constant set to 1 (bound shape only).
pub fn wasserstein_bound(table: &SpectralCoefficientTable) -> (usize, f64, Vec<(usize, f64)>) {
    let t_max = (2 * table.source_degree).max(1);
    let mut scan = Vec::with_capacity(t_max);
    let mut best = (1usize, f64::INFINITY);
    for t in 1..=t_max {
        let sum: f64 = table
            .entries
            .iter()
            .filter(|e| e.degree <= t)
            .map(|e| e.c * e.c / (e.degree * (e.degree + 1)) as f64)
            .sum();
        let b = 1.0 / t as f64 + sum.sqrt();
        if b < best.1 {
            best = (t, b);
        }
        scan.push((t, b));
    }
    (best.0, best.1, scan)
}

/// Quotient measure of {w : |cap_mass(w) - 3/pi| > c} together with the
/// Chebyshev bound Var/c^2 computed on the same grid, so the inequality
/// holds discretely as well.
pub fn almost_all_centers_fraction(
    psi: &EigenFunction,
    r: f64,
    c: f64,
) -> Result<(f64, f64)> {
    if c <= 0.0 {
        return Err(Error::Domain(format!("threshold must be positive, got {c}")));
    }
    let eval = CapMassEvaluator::new(psi)?;
    let grid = shared_grid(4 * psi.degree.max(1));
    let mean = 3.0 / PI;
    let mut frac_terms = Vec::with_capacity(grid.nodes.len());
    let mut var_terms = Vec::with_capacity(grid.nodes.len());
    for (w, wt) in grid.nodes.iter().zip(&grid.weights) {
        let mass: f64 = eval
            .component_values(w)
            .iter()
            .map(|(l, v)| shc_value(r, *l) * v)
            .sum();
        let dev = mass - mean;
        frac_terms.push(if dev.abs() > c { *wt } else { 0.0 });
        var_terms.push(wt * dev * dev);
    }
    let fraction = pairwise_sum(&frac_terms) * QUOTIENT_FRACTION / (PI / 3.0);
    let var = pairwise_sum(&var_terms) * QUOTIENT_FRACTION;
    Ok((fraction, var / (c * c) / (PI / 3.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::eigenbasis;
    use once_cell::sync::Lazy;
    use rand::{Rng, SeedableRng};

    static LIB: Lazy<EigenLibrary> =
        Lazy::new(|| EigenLibrary::build(20, &[3, 5, 7]).unwrap());

    fn first_psi(l: usize) -> EigenFunction {
        LIB.by_degree[l][0].clone()
    }

    #[test]
    fn invariant_table_matches_eigenbasis_degree_sums() {
        for l in [4usize, 7, 9] {
            let psi = first_psi(l);
            let eigen = triple_products(&psi, &LIB).unwrap();
            let inv = spectral_table_invariant(&psi, LIB.ell_max).unwrap();
            assert!((eigen.constant_term - inv.constant_term).abs() < 1e-12);
            for d in 1..=2 * l {
                let sum = |t: &SpectralCoefficientTable| -> f64 {
                    t.entries
                        .iter()
                        .filter(|e| e.degree == d)
                        .map(|e| e.c * e.c)
                        .sum()
                };
                assert!(
                    (sum(&eigen) - sum(&inv)).abs() < 1e-12,
                    "degree {d} sums differ at l = {l}"
                );
            }
        }
    }

    #[test]
    fn constant_term_is_sqrt_3_over_pi() {
        for l in [3usize, 4, 6, 9] {
            let table = triple_products(&first_psi(l), &LIB).unwrap();
            assert!(
                (table.constant_term - normalized_constant()).abs() < 1e-9,
                "l = {l}"
            );
        }
        assert!((normalized_constant() - 0.9772050238058398).abs() < 1e-12);
    }

    #[test]
    fn selection_rules() {
        for lp in [3usize, 4, 6, 7] {
            let psi = first_psi(lp);
            let table = triple_products(&psi, &LIB).unwrap();
            for e in &table.entries {
                if e.degree % 2 == 1 || e.degree > 2 * lp {
                    assert!(e.c.abs() < 1e-9, "lp={lp} lf={}", e.degree);
                }
            }
            // a degree beyond the cutoff, via the single-product oracle
            for phi in LIB.by_degree.iter().flatten() {
                if phi.degree > 2 * lp && phi.degree <= 2 * lp + 6 {
                    let c = triple_product(&psi, phi).unwrap();
                    assert!(c.abs() < 1e-9, "lp={lp} lf={}", phi.degree);
                }
            }
        }
    }

    #[test]
    fn batched_table_matches_single_oracle() {
        let psi = first_psi(6);
        let table = triple_products(&psi, &LIB).unwrap();
        for e in &table.entries {
            let phi = &LIB.by_degree[e.degree][e.index];
            let c = triple_product(&psi, phi).unwrap();
            assert!((c - e.c).abs() < 1e-10, "lf={}", e.degree);
        }
    }

    #[test]
    fn parseval_closure() {
        for lp in [3usize, 4, 6, 9, 10] {
            let psi = first_psi(lp);
            let table = triple_products(&psi, &LIB).unwrap();
            let lhs = l4_mass(&psi).unwrap();
            let rhs = table.sum_squares() + 3.0 / PI;
            assert!(
                ((lhs - rhs) / lhs).abs() < 1e-8,
                "lp = {lp}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn catalan_routes() {
        let expect: [u128; 11] = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        for (n, c) in expect.iter().enumerate() {
            assert_eq!(catalan_u128(n), *c);
            assert!(
                (catalan_log(n).exp() - *c as f64).abs() < 1e-6 * *c as f64,
                "n = {n}"
            );
        }
    }

    #[test]
    fn gaunt_anchor_value() {
        let (integral, closed, rel) = gaunt_zonal_check(1, 2);
        let anchor = 1.0 / (5.0 * PI).sqrt();
        assert!((integral - anchor).abs() < 1e-12, "integral {integral}");
        assert!((closed - anchor).abs() < 1e-12, "closed {closed}");
        assert!(rel < 1e-10);
    }

    #[test]
    fn gaunt_identity_all_valid_pairs() {
        for lp in 1..=10usize {
            for lf in (2..=2 * lp).step_by(2) {
                let (_, _, rel) = gaunt_zonal_check(lp, lf);
                assert!(rel < 1e-9, "lp={lp} lf={lf} rel={rel}");
            }
            // odd and out-of-range cases vanish
            for lf in [1usize, 3, 2 * lp + 2] {
                let (integral, closed, _) = gaunt_zonal_check(lp, lf);
                assert_eq!(closed, 0.0);
                assert!(integral.abs() < 1e-10, "lp={lp} lf={lf}");
            }
        }
    }

    #[test]
    fn proxy_nonnegative_and_zero_iff_c_zero() {
        let table = triple_products(&first_psi(6), &LIB).unwrap();
        for (l, i, p) in l_value_proxy(&table) {
            assert!(p >= 0.0);
            let c = table
                .entries
                .iter()
                .find(|e| e.degree == l && e.index == i)
                .unwrap()
                .c;
            assert_eq!(p == 0.0, c == 0.0);
        }
    }

    #[test]
    fn cap_mass_constant_density() {
        // the quotient-normalized constant has squared density 3/pi
        let psi0 = LIB.by_degree[0][0].clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let w = Vector3::new(
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            )
            .normalize();
            let r = 0.1 + rng.gen::<f64>() * 2.0;
            let cap = CapSpec::new(w, r).unwrap();
            let m = cap_mass(&psi0, &cap).unwrap();
            assert!((m - 3.0 / PI).abs() < 1e-10);
        }
    }

    #[test]
    fn cap_mass_full_sphere() {
        for lp in [3usize, 6] {
            let cap = CapSpec::new(Vector3::z(), PI).unwrap();
            let m = cap_mass(&first_psi(lp), &cap).unwrap();
            assert!((m - 3.0 / PI).abs() < 1e-10, "lp = {lp}");
        }
    }

    #[test]
    fn cap_mass_dual_path_seeded_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let degrees = [3usize, 4, 6, 7, 9];
        for i in 0..50 {
            let lp = degrees[i % degrees.len()];
            let idx = rng.gen_range(0..LIB.by_degree[lp].len());
            let psi = LIB.by_degree[lp][idx].clone();
            let w = Vector3::new(
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            )
            .normalize();
            let r = 0.1 + rng.gen::<f64>() * (PI - 0.1);
            let cap = CapSpec::new(w, r).unwrap();
            // cap_mass errors if the two paths disagree beyond 1e-8
            cap_mass(&psi, &cap).unwrap();
        }
    }

    #[test]
    fn variance_identity() {
        for lp in [3usize, 4, 6, 7, 9, 10] {
            let psi = first_psi(lp);
            let table = triple_products(&psi, &LIB).unwrap();
            for r in [0.3f64, 0.7, 1.2, PI] {
                let rep = variance(&psi, r, &table).unwrap();
                let scale = rep.spectral_value.abs().max(1e-12);
                assert!(
                    rep.residual / scale < 1e-6 || rep.residual < 1e-12,
                    "lp={lp} R={r}: {} vs {}",
                    rep.spectral_value,
                    rep.direct_value
                );
                if (r - PI).abs() < 1e-15 {
                    assert!(rep.spectral_value.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn variance_zero_for_constant() {
        let psi0 = LIB.by_degree[0][0].clone();
        let table = triple_products(&psi0, &LIB).unwrap();
        let rep = variance(&psi0, 0.7, &table).unwrap();
        assert!(rep.spectral_value.abs() < 1e-12);
        assert!(rep.direct_value.abs() < 1e-12);
    }

    #[test]
    fn discrepancy_constant_is_zero() {
        let psi0 = LIB.by_degree[0][0].clone();
        let rep = discrepancy(&psi0, 100, 4, 9, false).unwrap();
        assert!(rep.sup_estimate < 1e-10);
    }

    #[test]
    fn discrepancy_monotone_under_nested_refinement() {
        let psi = first_psi(6);
        let small = discrepancy(&psi, 100, 4, 9, false).unwrap();
        let big = discrepancy(&psi, 200, 4, 9, false).unwrap();
        assert!(big.sup_estimate >= small.sup_estimate - 1e-14);
        assert!(small.sup_estimate > 0.0);
        assert!(small.argmax.is_some());
    }

    #[test]
    fn wasserstein_uniform_case() {
        for lp in [3usize, 6, 10] {
            let empty = SpectralCoefficientTable {
                source_degree: lp,
                constant_term: normalized_constant(),
                entries: Vec::new(),
            };
            let (best_t, bound, scan) = wasserstein_bound(&empty);
            assert_eq!(best_t, 2 * lp);
            assert_eq!(bound, 1.0 / (2 * lp) as f64);
            assert_eq!(scan.len(), 2 * lp);
        }
    }

    #[test]
    fn wasserstein_real_eigenfunction() {
        let psi = first_psi(6);
        let table = triple_products(&psi, &LIB).unwrap();
        let (_, bound, scan) = wasserstein_bound(&table);
        assert!(bound > 0.0 && bound <= scan[0].1);
        for (t, b) in &scan {
            assert!(*b >= 1.0 / *t as f64);
        }
    }

    #[test]
    fn chebyshev_consistency() {
        for (lp, r, c) in [(3usize, 0.5f64, 0.3f64), (6, 0.3, 0.2), (9, 0.7, 0.1)] {
            let psi = first_psi(lp);
            let (frac, cheb) = almost_all_centers_fraction(&psi, r, c).unwrap();
            assert!((0.0..=1.0).contains(&frac), "lp={lp}");
            assert!(frac <= cheb + 1e-6, "lp={lp}: {frac} vs {cheb}");
        }
        let psi0 = LIB.by_degree[0][0].clone();
        let (frac, _) = almost_all_centers_fraction(&psi0, 0.5, 0.1).unwrap();
        assert_eq!(frac, 0.0);
        assert!(almost_all_centers_fraction(&psi0, 0.5, 0.0).is_err());
    }

    #[test]
    fn eigenbasis_orthogonality_of_distinct_degrees_in_quotient() {
        // quotient inner product between psi in different degrees vanishes
        let a = first_psi(6);
        let b = first_psi(9);
        let grid = build_grid(15);
        let fa = a.as_harmonic();
        let fb = b.as_harmonic();
        let ip = quotient_integral(&grid, |x| fa.eval(x) * fb.eval(x)).unwrap();
        assert!(ip.abs() < 1e-9);
        let _ = eigenbasis(3, &[3]).unwrap();
    }
}
