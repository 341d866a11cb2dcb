//! End-to-end acceptance suite. Each test prints one PASS/FAIL line
//! (visible with `cargo test -- --nocapture`) and asserts the criterion.

use hecke_sphere::harmonics::summed_action_matrix;
use hecke_sphere::hecke::{
    hecke_matrix, hecke_matrix_full_sum, EigenFunction, EigenLibrary, InvariantSubspace,
};
use hecke_sphere::hurwitz::{coset_representatives, norm_n_elements};
use hecke_sphere::kernels::{
    sandwich_violation, shc_decay_check, shc_transform_by_quadrature, shc_value,
    spectral_expansion_check, ConvolutionKernel,
};
use hecke_sphere::pipeline::{cmd_que_suite, OutputFormat, RunConfig};
use hecke_sphere::quad::CapSpec;
use hecke_sphere::stats::{
    almost_all_centers_fraction, cap_mass, gaunt_zonal_check, gaunt_zonal_closed_form,
    discrepancy, l4_mass, triple_product, triple_products, variance, wasserstein_bound,
    SpectralCoefficientTable,
};
use hecke_sphere::theta::{newform_consistency, theta_coefficients};
use nalgebra::{DMatrix, Vector3};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

static LIB: Lazy<EigenLibrary> = Lazy::new(|| EigenLibrary::build(40, &[3, 5, 7]).unwrap());

fn report(id: u32, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} criterion-{id:02}: {detail}");
    assert!(ok, "criterion-{id:02} failed: {detail}");
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let u: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let s = (1.0 - u * u).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), u)
}

fn first_psi(l: usize) -> &'static EigenFunction {
    &LIB.by_degree[l][0]
}

/// Independent divisor-sum oracle by trial division.
fn sigma_oracle(n: u64) -> u64 {
    (1..=n).filter(|d| n % d == 0).sum()
}

/// Independent dimension oracle: average of rotation characters over the
/// 12-element group image (1 identity, 8 order-3, 3 order-2 elements),
/// chi_l(theta) = sin((2l+1) theta/2) / sin(theta/2).
fn dim_oracle(l: usize) -> usize {
    let chi = |theta: f64| {
        let k = (2 * l + 1) as f64;
        (k * theta / 2.0).sin() / (theta / 2.0).sin()
    };
    let sum = (2 * l + 1) as f64 + 8.0 * chi(2.0 * PI / 3.0) + 3.0 * chi(PI);
    (sum / 12.0).round() as usize
}

#[test]
fn criterion_01_quaternion_counts() {
    let t0 = Instant::now();
    for n in (1..=99).step_by(2) {
        let count = norm_n_elements(n).unwrap().len() as u64;
        assert_eq!(count, 24 * sigma_oracle(n as u64), "|O({n})|");
    }
    let dt = t0.elapsed();
    report(
        1,
        dt.as_secs_f64() < 1.0,
        &format!("|O(n)| = 24 sigma(n) for all odd n <= 99, in {dt:.2?} (< 1 s)"),
    );
}

#[test]
fn criterion_02_invariant_dimensions() {
    let t0 = Instant::now();
    for l in 0..=40 {
        let dim = InvariantSubspace::build(l).unwrap().dim();
        assert_eq!(dim, dim_oracle(l), "dimension at l = {l}");
    }
    let sub = |l: usize| InvariantSubspace::build(l).unwrap().dim();
    assert_eq!(sub(3), 1);
    assert_eq!(sub(6), 2);
    assert_eq!(sub(1), 0);
    assert_eq!(sub(2), 0);
    assert_eq!(sub(5), 0);
    let dt = t0.elapsed();
    report(
        2,
        dt.as_secs_f64() < 30.0,
        &format!("invariant dimensions match character oracle for l <= 40, in {dt:.2?} (< 30 s)"),
    );
}

#[test]
fn criterion_03_hecke_algebra() {
    let rel = |a: &DMatrix<f64>, scale: f64| a.norm() / scale;
    let mut worst = 0.0f64;
    for l in 1..=12 {
        let sub = InvariantSubspace::build(l).unwrap();
        if sub.dim() == 0 {
            continue;
        }
        let t3 = hecke_matrix(&sub, 3).unwrap();
        let t5 = hecke_matrix(&sub, 5).unwrap();
        let t7 = hecke_matrix(&sub, 7).unwrap();
        let t15 = hecke_matrix(&sub, 15).unwrap();
        let t21 = hecke_matrix(&sub, 21).unwrap();
        worst = worst.max(rel(&(&t3 * &t5 - &t5 * &t3), t3.norm() * t5.norm()));
        worst = worst.max(rel(&(&t3 * &t5 - &t15), t15.norm()));
        worst = worst.max(rel(&(&t3 * &t7 - &t21), t21.norm()));
        // self-adjointness on the raw (unsymmetrized) full group sum
        for n in [3u64, 5, 7] {
            let a = hecke_matrix_full_sum(&sub, n).unwrap();
            worst = worst.max(rel(&(&a - &a.transpose()), a.norm()));
        }
    }
    report(
        3,
        worst <= 1e-8,
        &format!("commutativity, multiplicativity, self-adjointness for l <= 12, worst {worst:.2e} (<= 1e-8 rel)"),
    );
}

#[test]
fn criterion_04_ramanujan_bound() {
    let mut worst_excess = f64::NEG_INFINITY;
    for l in 1..=30 {
        let phis = &LIB.by_degree[l];
        if phis.is_empty() {
            continue;
        }
        for psi in phis {
            // stored eigenvalues for the diagonalizing primes
            for (p, lam) in psi.primes.iter().zip(&psi.eigenvalues) {
                worst_excess = worst_excess.max(lam.abs() - 2.0 * (*p as f64).sqrt());
            }
        }
        // remaining primes via one summed coset-action matrix per degree
        for p in [11u64, 13] {
            let rots: Vec<_> = coset_representatives(p as i64)
                .unwrap()
                .iter()
                .map(|g| g.to_rotation().unwrap())
                .collect();
            let m = summed_action_matrix(l, &rots);
            for psi in phis {
                let c = &psi.coeffs;
                let lam = (c.transpose() * &m * c)[(0, 0)] / c.norm_squared();
                worst_excess = worst_excess.max(lam.abs() - 2.0 * (p as f64).sqrt());
            }
        }
    }
    report(
        4,
        worst_excess <= 1e-6,
        &format!("|lambda_p| <= 2 sqrt(p) + 1e-6 for p in {{3,5,7,11,13}}, l_psi <= 30; worst excess {worst_excess:.2e}"),
    );
}

#[test]
fn criterion_05_gaunt_catalan() {
    let mut worst_rel = 0.0f64;
    let mut worst_zero = 0.0f64;
    for lp in 1..=10 {
        for lf in (0..=2 * lp).step_by(2) {
            let (_, _, rel) = gaunt_zonal_check(lp, lf);
            worst_rel = worst_rel.max(rel);
        }
        for lf in (1..=2 * lp + 5).step_by(2) {
            let (integral, closed, _) = gaunt_zonal_check(lp, lf);
            assert_eq!(closed, 0.0, "closed form must vanish at odd l_phi");
            worst_zero = worst_zero.max(integral.abs());
        }
        for lf in [2 * lp + 2, 2 * lp + 4, 2 * lp + 6] {
            let (integral, closed, _) = gaunt_zonal_check(lp, lf);
            assert_eq!(closed, 0.0, "closed form must vanish beyond 2 l_psi");
            worst_zero = worst_zero.max(integral.abs());
        }
    }
    let anchor = (gaunt_zonal_closed_form(1, 2) - 1.0 / (5.0 * PI).sqrt()).abs();
    report(
        5,
        worst_rel <= 1e-9 && worst_zero <= 1e-10 && anchor <= 1e-12,
        &format!("Gaunt quadrature vs closed form: worst rel {worst_rel:.2e} (<= 1e-9), vanishing cases {worst_zero:.2e} (<= 1e-10), anchor 1/sqrt(5 pi) off by {anchor:.2e}"),
    );
}

#[test]
fn criterion_06_shc_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let r: f64 = rng.gen_range(0.05..PI - 0.05);
        let l: usize = rng.gen_range(0..=60);
        let quad = shc_transform_by_quadrature(r, l).unwrap();
        worst = worst.max((shc_value(r, l) - quad).abs());
    }
    let mut anchors = 0.0f64;
    for r in [0.3, 0.9, 1.7, 2.8] {
        anchors = anchors.max((shc_value(r, 0) - 1.0).abs());
        anchors = anchors.max((shc_value(r, 1) - (r / 2.0).cos().powi(2)).abs());
    }
    for l in 1..=10 {
        anchors = anchors.max(shc_value(PI, l).abs());
    }
    let c03 = shc_decay_check(0.3, 200).unwrap().fitted_c;
    let c10 = shc_decay_check(1.0, 200).unwrap().fitted_c;
    report(
        6,
        worst <= 1e-10 && anchors <= 1e-12 && c03 <= 10.0 && c10 <= 10.0,
        &format!("closed form vs integral on 20 pairs: worst {worst:.2e} (<= 1e-10); h_R(0)=1, h_R(1)=cos^2(R/2), h_pi(l>=1)=0 to {anchors:.2e}; decay envelope C = {c03:.2} (R=0.3), {c10:.2} (R=1.0) (<= 10)"),
    );
}

#[test]
fn criterion_07_kernel_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let r: f64 = rng.gen_range(0.1..1.5);
        let rho: f64 = rng.gen_range(0.05..r);
        let d: f64 = rng.gen_range(0.0..PI);
        let k = ConvolutionKernel::new(r, rho).unwrap();
        worst = worst.max(sandwich_violation(&k, d));
    }
    report(
        7,
        worst <= 1e-6,
        &format!("convolution sandwich constraints at 100 seeded samples, worst violation {worst:.2e} (<= 1e-6)"),
    );
}

#[test]
fn criterion_08_spectral_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut worst_raw = 0.0f64;
    let mut worst_tail = 0.0f64;
    for _ in 0..5 {
        let z = random_unit(&mut rng);
        let w = random_unit(&mut rng);
        let chk = spectral_expansion_check(&LIB, 1.2, 0.6, &z, &w).unwrap();
        worst = worst.max(chk.residual_truncated);
        worst_raw = worst_raw.max(chk.residual_raw);
        worst_tail = worst_tail.max(chk.tail);
    }
    report(
        8,
        worst <= 1e-3,
        &format!("spectral expansion of K_R * K_rho at L = 40, (R, rho) = (1.2, 0.6), 5 seeded pairs: residual {worst:.2e} (<= 1e-3); raw residual {worst_raw:.2e} = spectral tail {worst_tail:.2e} above the cutoff"),
    );
}

#[test]
fn criterion_09_variance_identity() {
    let mut worst_rel = 0.0f64;
    let mut worst_pi = 0.0f64;
    for l in 1..=10 {
        for psi in &LIB.by_degree[l] {
            let table = triple_products(psi, &LIB).unwrap();
            for r in [0.3, 0.7, 1.2, PI] {
                let v = variance(psi, r, &table).unwrap();
                if r == PI {
                    worst_pi = worst_pi.max(v.spectral_value.abs()).max(v.direct_value.abs());
                } else {
                    worst_rel = worst_rel.max(v.residual / v.spectral_value.abs().max(1e-12));
                }
            }
        }
    }
    report(
        9,
        worst_rel <= 1e-6 && worst_pi <= 1e-10,
        &format!("variance spectral sum vs direct quadrature, l_psi <= 10: worst rel {worst_rel:.2e} (<= 1e-6); R = pi value {worst_pi:.2e} (<= 1e-10)"),
    );
}

#[test]
fn criterion_10_selection_rules_parseval() {
    let mut worst_odd = 0.0f64;
    let mut worst_out = 0.0f64;
    let mut worst_parseval = 0.0f64;
    for l in 1..=20 {
        for psi in &LIB.by_degree[l] {
            let table = triple_products(psi, &LIB).unwrap();
            for e in &table.entries {
                if e.degree % 2 == 1 {
                    worst_odd = worst_odd.max(e.c.abs());
                }
            }
            // independent single-product oracle beyond the 2 l_psi cutoff
            for lf in [2 * l + 2, 2 * l + 3] {
                if lf <= 40 && !LIB.by_degree[lf].is_empty() {
                    let c = triple_product(psi, &LIB.by_degree[lf][0]).unwrap();
                    worst_out = worst_out.max(c.abs());
                }
            }
            let lhs = table.sum_squares() + table.constant_term * table.constant_term;
            let rhs = l4_mass(psi).unwrap();
            worst_parseval = worst_parseval.max((lhs - rhs).abs() / rhs);
        }
    }
    report(
        10,
        worst_odd <= 1e-9 && worst_out <= 1e-9 && worst_parseval <= 1e-8,
        &format!("selection rules (odd {worst_odd:.2e}, beyond cutoff {worst_out:.2e}, <= 1e-9) and L^4 Parseval rel {worst_parseval:.2e} (<= 1e-8), l_psi <= 20"),
    );
}

#[test]
fn criterion_11_cap_mass_dual_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut done = 0;
    while done < 50 {
        let l: usize = rng.gen_range(1..=12);
        if LIB.by_degree[l].is_empty() {
            continue;
        }
        let psi = &LIB.by_degree[l][rng.gen_range(0..LIB.by_degree[l].len())];
        let cap = CapSpec::new(random_unit(&mut rng), rng.gen_range(0.05..PI)).unwrap();
        // cap_mass errors internally if the two paths differ by more than 1e-8
        cap_mass(psi, &cap).unwrap();
        done += 1;
    }
    let mut worst_full = 0.0f64;
    for l in [3usize, 6, 9] {
        let cap = CapSpec::new(Vector3::z(), PI).unwrap();
        let m = cap_mass(first_psi(l), &cap).unwrap();
        worst_full = worst_full.max((m - 3.0 / PI).abs());
    }
    report(
        11,
        worst_full <= 1e-10,
        &format!("spectral vs direct cap mass agree to 1e-8 on 50 seeded (psi, cap) pairs; full-sphere mass = 3/pi to {worst_full:.2e} (<= 1e-10)"),
    );
}

#[test]
fn criterion_12_berry_esseen_scan() {
    for l in [5usize, 12, 20] {
        let uniform = SpectralCoefficientTable {
            source_degree: l,
            constant_term: (3.0 / PI).sqrt(),
            entries: vec![],
        };
        let (best_t, bound, _) = wasserstein_bound(&uniform);
        assert_eq!(best_t, 2 * l);
        assert_eq!(bound, 1.0 / (2 * l) as f64, "uniform bound at l = {l}");
    }
    let psi = first_psi(8);
    let sups: Vec<f64> = [50usize, 100, 200]
        .iter()
        .map(|n| discrepancy(psi, *n, 8, 1, false).unwrap().sup_estimate)
        .collect();
    let monotone = sups[0] <= sups[1] && sups[1] <= sups[2];
    report(
        12,
        monotone,
        &format!("wasserstein_bound(uniform) = 1/(2 l_psi) exactly; discrepancy sup nondecreasing on nested centers: {:.3e} <= {:.3e} <= {:.3e}", sups[0], sups[1], sups[2]),
    );
}

#[test]
fn criterion_13_theta_cross_check() {
    let mut worst_rel = 0.0f64;
    let mut worst_a1 = 0.0f64;
    let mut worst_mult = 0.0f64;
    for l in 1..=12 {
        for psi in &LIB.by_degree[l] {
            let theta = theta_coefficients(psi, 35).unwrap();
            worst_a1 = worst_a1.max((theta.coeffs[&1] - 1.0).abs());
            for n in (3..=35u64).step_by(2) {
                let expected =
                    (n as f64).powi(l as i32) * hecke_sphere::hecke::hecke_eigenvalue(psi, n).unwrap();
                let rel = (theta.coeffs[&n] - expected).abs() / expected.abs().max(1.0);
                worst_rel = worst_rel.max(rel);
            }
            let rep = newform_consistency(&theta, None).unwrap();
            worst_mult = worst_mult.max(rep.multiplicativity_worst);
        }
    }
    report(
        13,
        worst_rel <= 1e-8 && worst_a1 <= 1e-10 && worst_mult <= 1e-6,
        &format!("a_n = n^l lambda_n for odd n <= 35, l_psi <= 12: worst rel {worst_rel:.2e} (<= 1e-8); a_1 = 1 to {worst_a1:.2e}; multiplicativity {worst_mult:.2e} (<= 1e-6)"),
    );
}

#[test]
fn criterion_14_chebyshev_consistency() {
    let delta = 0.25;
    let c = 0.1;
    let mut worst = f64::NEG_INFINITY;
    for l in 3..=36 {
        if LIB.by_degree.get(l).map_or(true, |v| v.is_empty()) {
            continue;
        }
        let r = (l as f64).powf(-delta);
        let (frac, bound) = almost_all_centers_fraction(first_psi(l), r, c).unwrap();
        worst = worst.max(frac - bound);
    }
    report(
        14,
        worst <= 1e-6,
        &format!("exceptional-set fraction <= Var/c^2 on every suite configuration (l in 3..=36, R = l^-1/4, c = {c}); worst margin {worst:.2e} (<= 1e-6)"),
    );
}

#[test]
fn criterion_15_que_suite_reporting() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        ell: None,
        ell_max: 36,
        primes: vec![3, 5, 7],
        radius: None,
        delta: 0.25,
        centers: 500,
        grid_degree: None,
        seed: 1,
        out: dir.path().to_path_buf(),
        format: OutputFormat::Csv,
        force: false,
    };
    let t0 = Instant::now();
    let summary_path = cmd_que_suite(&config).unwrap();
    let dt = t0.elapsed();
    let summary = std::fs::read_to_string(&summary_path).unwrap();
    for name in [
        "que_cap_mass_decay.csv",
        "que_variance_decay.csv",
        "que_discrepancy_decay.csv",
        "que_wasserstein_decay.csv",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let annotated = summary.contains("not asserted")
        && summary.contains("reference -1/2")
        && summary.contains("-(1-delta)")
        && summary.matches("fitted log-log slope").count() == 4;
    report(
        15,
        annotated && dt.as_secs_f64() <= 300.0,
        &format!("que-suite over l_psi in 3..=36 emitted 4 slope fits with conditional reference slopes annotated, in {dt:.1?} (<= 5 min)"),
    );
}
