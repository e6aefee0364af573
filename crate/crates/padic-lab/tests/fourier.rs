use num_complex::Complex64;
use padic_lab::curves::{a_theta, moment_curve_eval, moment_frame};
use padic_lab::fourier::*;
use padic_lab::padic::{PadicContext, PadicMatrix, PadicVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ctx(p: u64) -> PadicContext {
    PadicContext::new(p, 24).unwrap()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_function(rng: &mut ChaCha8Rng, p: u64, n: usize, a: u32, b: u32) -> LatticeFunction {
    LatticeFunction::from_index_fn(p, n, a, b, |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .unwrap()
}

#[test]
fn character_examples() {
    let k = ctx(3);
    for x in [0, 1, -7, 81] {
        assert!((character(&k.int(x)) - c(1.0)).norm() < 1e-15);
    }
    let w = character(&k.rational(1, 3).unwrap());
    let want = Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0);
    assert!((w - want).norm() < 1e-14);
    assert!((w.powu(3) - c(1.0)).norm() < 1e-12);
    let k5 = ctx(5);
    let x = k5.rational(1, 5).unwrap();
    let y = k5.rational(2, 25).unwrap();
    let lhs = character(&(&x + &y));
    assert!((lhs - character(&x) * character(&y)).norm() < 1e-12);
    // negative representatives: -1/5 has fractional part 4/5
    assert!((character(&k5.rational(-1, 5).unwrap()) - character(&x).conj()).norm() < 1e-12);
}

#[test]
fn character_is_additive_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &p in &[2u64, 3, 7] {
        let k = ctx(p);
        for _ in 0..500 {
            let x = k
                .rational(
                    rng.random_range(-10_000..10_000),
                    p.pow(rng.random_range(0..5)) as i64,
                )
                .unwrap();
            let y = k
                .rational(
                    rng.random_range(-10_000..10_000),
                    p.pow(rng.random_range(0..5)) as i64,
                )
                .unwrap();
            let z = character(&(&x + &y)) - character(&x) * character(&y);
            assert!(z.norm() < 1e-12);
            assert!((character(&x).norm() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn unit_lattice_is_self_dual() {
    for &(p, n, a, b) in &[
        (2u64, 1usize, 0u32, 0u32),
        (3, 2, 1, 2),
        (5, 1, 2, 1),
        (2, 3, 2, 1),
    ] {
        let f = LatticeFunction::ball_indicator(p, n, a, b, 0).unwrap();
        let fh = fourier_transform(&f);
        let want = LatticeFunction::ball_indicator(p, n, b, a, 0).unwrap();
        assert!(fh.max_abs_diff(&want).unwrap() < 1e-12);
    }
}

#[test]
fn lattice_indicator_transform_scales() {
    // (1_{p^{-j} Z^n})^vee = p^{nj} 1_{p^j Z^n}
    for &(p, n, j) in &[(3u64, 1usize, 1i64), (3, 2, 2), (2, 2, 1), (5, 1, 2)] {
        let f = LatticeFunction::ball_indicator(p, n, j as u32, j as u32, -j).unwrap();
        let g = inverse_fourier_transform(&f);
        let want = LatticeFunction::ball_indicator(p, n, j as u32, j as u32, j)
            .unwrap()
            .scale(c((p as f64).powi((n as i64 * j) as i32)));
        assert!(g.max_abs_diff(&want).unwrap() < 1e-9);
    }
}

#[test]
fn psi_delta_inverse_transform() {
    // psi = 1_{B(0, delta^{-1} p^{-kappa})} with delta = p^{-l}: the ball p^{-(l-kappa)} Z_p^n
    let (p, n, l, kappa) = (3u64, 2usize, 3i64, 1i64);
    let r = l - kappa;
    let psi = LatticeFunction::ball_indicator(p, n, r as u32, r as u32, -r).unwrap();
    let got = inverse_fourier_transform(&psi);
    let want = LatticeFunction::ball_indicator(p, n, r as u32, r as u32, r)
        .unwrap()
        .scale(c((p as f64).powi((n as i64 * (l - kappa)) as i32)));
    assert!(got.max_abs_diff(&want).unwrap() < 1e-9);
}

#[test]
fn fast_transform_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for &(p, n, a, b) in &[
        (2u64, 1usize, 2u32, 1u32),
        (3, 2, 1, 1),
        (5, 1, 1, 1),
        (2, 3, 1, 1),
        (3, 1, 2, 2),
    ] {
        let f = random_function(&mut rng, p, n, a, b);
        let fast = fourier_transform(&f);
        let slow = fourier_transform_direct(&f);
        assert_eq!((fast.a(), fast.b()), (b, a));
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-10);
    }
}

#[test]
fn plancherel_and_round_trip_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let p = [2u64, 3, 5][rng.random_range(0..3)];
        let n = rng.random_range(1..=2);
        let a = rng.random_range(0..=4);
        let b = rng.random_range(0..=4 - a);
        let f = random_function(&mut rng, p, n, a, b);
        let fh = fourier_transform(&f);
        let lhs = lq_norm(&f, 2.0).unwrap();
        let rhs = lq_norm(&fh, 2.0).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * lhs, "Plancherel {lhs} vs {rhs}");
        let back = inverse_fourier_transform(&fh);
        assert!(back.max_abs_diff(&f).unwrap() < 1e-9);
    }
}

#[test]
fn double_transform_is_parity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for &(p, n, a, b) in &[(3u64, 2usize, 1u32, 2u32), (2, 1, 3, 1), (5, 2, 1, 1)] {
        let f = random_function(&mut rng, p, n, a, b);
        let ff = fourier_transform(&fourier_transform(&f));
        for flat in 0..f.len() {
            let k = f.unflatten(flat);
            let neg: Vec<u64> = k
                .iter()
                .map(|&x| (f.side() as u64 - x) % f.side() as u64)
                .collect();
            assert!((ff.values()[f.flatten(&neg)] - f.values()[flat]).norm() < 1e-9);
        }
    }
}

#[test]
fn lq_norm_examples() {
    for q in [1.0, 2.0, 3.5, f64::INFINITY] {
        let one = LatticeFunction::ball_indicator(3, 2, 1, 1, 0).unwrap();
        assert!((lq_norm(&one, q).unwrap() - 1.0).abs() < 1e-12);
        for p in [2u64, 3, 7] {
            let f = LatticeFunction::ball_indicator(p, 1, 0, 2, 1).unwrap();
            let want = if q.is_infinite() {
                1.0
            } else {
                (p as f64).powf(-1.0 / q)
            };
            assert!((lq_norm(&f, q).unwrap() - want).abs() < 1e-12);
        }
    }
    let one = LatticeFunction::ball_indicator(3, 1, 0, 0, 0).unwrap();
    assert!(lq_norm(&one, 0.5).is_err());
}

fn g_a(k: PadicContext, n: usize, ell: u32, a: i64) -> LatticeFunction {
    let base =
        LatticeFunction::ball_indicator(k.p, n, ell * n as u32, 0, -((ell as usize * n) as i64))
            .unwrap();
    base.modulate(&moment_curve_eval(k, n, &k.int(a)).unwrap())
        .unwrap()
}

#[test]
fn single_packet_moment_is_the_support_volume() {
    // |g_a| = 1 on p^{-ln} Z_p^n, whose Haar measure is p^{l n^2}
    let k = ctx(3);
    let g = g_a(k, 2, 1, 1);
    let s = 2.0;
    let m = lq_norm(&g, 2.0 * s).unwrap().powf(2.0 * s);
    assert!((m - 81.0).abs() < 1e-9);
}

#[test]
fn packet_fourier_support_is_a_translated_lattice() {
    let k = ctx(5);
    let (n, ell) = (2usize, 1u32);
    for a in 0..5 {
        let g = g_a(k, n, ell, a);
        let supp = fourier_support(&g, k, 1e-9);
        // f^ is constant on p^{ln} Z_p^n-cells, so the support is a single cell
        assert_eq!(supp.len(), 1);
        let gamma = moment_curve_eval(k, n, &k.int(a)).unwrap();
        let d = supp[0].sub(&gamma);
        assert!(d
            .iter()
            .all(|e| e.valuation().is_none_or(|v| v >= (ell as usize * n) as i64)));
        let gh = fourier_transform(&g);
        let peak = gh.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        // the peak is the measure of p^{-ln} Z_p^n
        assert!((peak - 625.0).abs() < 1e-9);
    }
}

/// Tube `T = c_T + A_{theta,alpha}^{-T} Z_p^n` with `alpha = p^l` and `c_T = A_{-theta,1}^T (x, 0)`.
fn tube_coset(
    k: PadicContext,
    n: usize,
    m: usize,
    theta: i64,
    l: i64,
    x: &[i64],
) -> (PadicVector, PadicMatrix) {
    let th = k.int(theta);
    let a = moment_frame(k, n, &th, &k.p_power(l), &k.one(), m).unwrap();
    let gens = a.inverse().unwrap().transpose();
    let mut xv: Vec<i64> = x.to_vec();
    xv.resize(n, 0);
    let center = a_theta(k, n, &k.int(-theta))
        .unwrap()
        .transpose()
        .mul_vec(&PadicVector::from_ints(k, &xv));
    (center, gens)
}

#[test]
fn tube_indicator_transform_is_a_modulated_plate() {
    let k = ctx(5);
    let (n, m, l, theta) = (3usize, 1usize, 2i64, 2i64);
    let (ct, gens) = tube_coset(k, n, m, theta, l, &[3]);
    let one_t = LatticeFunction::indicator_coset(k, 0, l as u32, &ct, &gens).unwrap();
    let hat = fourier_transform(&one_t);
    // tau = A_{theta,delta^{-1}} Z_p^n
    let frame = moment_frame(k, n, &k.int(theta), &k.p_power(l), &k.one(), m).unwrap();
    let tau = LatticeFunction::indicator_coset(k, l as u32, 0, &PadicVector::zeros(k, n), &frame)
        .unwrap();
    let plate = tau.scale(c(5f64.powi(-(m as i32) * l as i32)));
    let neg_ct = ct.scale(&k.int(-1));
    let want = plate.modulate(&neg_ct).unwrap();
    assert!(hat.max_abs_diff(&want).unwrap() < 1e-9);
}

#[test]
fn tube_convolved_with_psi_is_a_fattened_tube() {
    let k = ctx(5);
    let (n, m, l, kappa, theta) = (3usize, 1usize, 2i64, 1i64, 2i64);
    let (ct, gens) = tube_coset(k, n, m, theta, l, &[3]);
    let one_t = LatticeFunction::indicator_coset(k, 0, l as u32, &ct, &gens).unwrap();
    let r = l - kappa;
    let psi_vee = LatticeFunction::ball_indicator(5, n, 0, l as u32, r)
        .unwrap()
        .scale(c(5f64.powi((n as i64 * r) as i32)));
    let conv = convolve(&one_t, &psi_vee).unwrap();
    let (_, fat_gens) = tube_coset(k, n, m, theta, r, &[3]);
    let fat = LatticeFunction::indicator_coset(k, 0, l as u32, &ct, &fat_gens)
        .unwrap()
        .scale(c(5f64.powi(-((m as i64 * kappa) as i32))));
    assert!(conv.max_abs_diff(&fat).unwrap() < 1e-9);
}

#[test]
fn unit_lattice_convolution_is_idempotent() {
    let one = LatticeFunction::ball_indicator(3, 2, 1, 1, 0).unwrap();
    let conv = convolve(&one, &one).unwrap();
    assert!(conv.max_abs_diff(&one).unwrap() < 1e-12);
}

fn direct_convolution(f: &LatticeFunction, g: &LatticeFunction) -> LatticeFunction {
    let side = f.side() as u64;
    let w = f.cell_measure();
    LatticeFunction::from_index_fn(f.prime(), f.dim(), f.a(), f.b(), |x| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (iy, fy) in f.values().iter().enumerate() {
            let y = f.unflatten(iy);
            let d: Vec<u64> = x
                .iter()
                .zip(&y)
                .map(|(&a, &b)| (a + side - b) % side)
                .collect();
            acc += fy * g.values()[g.flatten(&d)];
        }
        acc * w
    })
    .unwrap()
}

#[test]
fn convolution_against_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let f = random_function(&mut rng, 3, 1, 2, 2);
        let g = random_function(&mut rng, 3, 1, 2, 2);
        let conv = convolve(&f, &g).unwrap();
        assert!(conv.max_abs_diff(&direct_convolution(&f, &g)).unwrap() < 1e-9);
        let lhs = fourier_transform(&conv);
        let rhs = fourier_transform(&f).mul(&fourier_transform(&g)).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);
    }
}

#[test]
fn young_l1_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let f = random_function(&mut rng, 2, 2, 1, 2);
        let g = random_function(&mut rng, 2, 2, 2, 1);
        let conv = convolve(&f, &g).unwrap();
        let lhs = lq_norm(&conv, 1.0).unwrap();
        let rhs = lq_norm(&f, 1.0).unwrap() * lq_norm(&g, 1.0).unwrap();
        assert!(lhs <= rhs * (1.0 + 1e-12));
        let fa = LatticeFunction::from_values(
            2,
            2,
            f.a(),
            f.b(),
            f.values().iter().map(|z| c(z.norm())).collect(),
        )
        .unwrap();
        let ga = LatticeFunction::from_values(
            2,
            2,
            g.a(),
            g.b(),
            g.values().iter().map(|z| c(z.norm())).collect(),
        )
        .unwrap();
        let eq = lq_norm(&convolve(&fa, &ga).unwrap(), 1.0).unwrap();
        let prod = lq_norm(&fa, 1.0).unwrap() * lq_norm(&ga, 1.0).unwrap();
        assert!((eq - prod).abs() < 1e-9 * prod);
    }
}

#[test]
fn frequency_projection_properties() {
    let k = ctx(3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_function(&mut rng, 3, 2, 1, 2);
    let all = freq_restrict(&f, &FrequencyRegion::everything(), k).unwrap();
    assert!(all.max_abs_diff(&f).unwrap() < 1e-12);
    let none = freq_restrict(&f, &FrequencyRegion::nothing(), k).unwrap();
    assert!(lq_norm(&none, f64::INFINITY).unwrap() < 1e-15);

    let omega = FrequencyRegion::ball(PadicVector::from_ints(k, &[1, 2]), 0);
    let inside = freq_restrict(&f, &omega, k).unwrap();
    let outside = freq_restrict(&f, &omega.complement(), k).unwrap();
    assert!(inside.add(&outside).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
    let twice = freq_restrict(&inside, &omega, k).unwrap();
    assert!(twice.max_abs_diff(&inside).unwrap() < 1e-12);
    let hat = fourier_transform(&inside);
    for i in hat.support(1e-12) {
        assert!(omega.contains(&hat.point_of(k, &hat.unflatten(i))));
    }

    // f^ lives in p^{-2} Z_p^2, so a frequency region outside it kills f
    let far = FrequencyRegion::ball(PadicVector::new(k, vec![k.p_power(-3), k.zero()]), 0);
    let z = freq_restrict(&f, &far, k).unwrap();
    assert!(lq_norm(&z, f64::INFINITY).unwrap() < 1e-15);
}

#[test]
fn non_constant_region_is_rejected() {
    let k = ctx(3);
    let f = LatticeFunction::ball_indicator(3, 1, 1, 1, 0).unwrap();
    // f^ is constant on 3Z_3-cells; a ball of radius 1/9 splits them
    let fine = FrequencyRegion::ball(PadicVector::from_ints(k, &[0]), 2);
    assert!(freq_restrict(&f, &fine, k).is_err());
    let sneaky = FrequencyRegion::from_predicate("undeclared", None, |x: &PadicVector| {
        x[0].valuation().is_none_or(|v| v >= 2)
    });
    let err = freq_restrict(&f, &sneaky, k).unwrap_err();
    assert!(err.to_string().contains("not constant"));
}

#[test]
fn coset_region_matches_coset_indicator() {
    let k = ctx(5);
    let v = PadicVector::from_ints(k, &[1, 3]);
    let m = PadicMatrix::from_ints(k, &[&[5, 0], &[10, 25]]);
    let region = FrequencyRegion::coset(v.clone(), &m).unwrap();
    let ind = LatticeFunction::indicator_coset(k, 0, 2, &v, &m).unwrap();
    for flat in 0..ind.len() {
        let x = ind.point_of(k, &ind.unflatten(flat));
        assert_eq!(region.contains(&x), ind.values()[flat].re == 1.0);
    }
    assert!((lq_norm(&ind, 1.0).unwrap() - 1.0 / 125.0).abs() < 1e-15);
}

#[test]
fn budget_guard() {
    assert!(LatticeFunction::zeros(3, 3, 8, 8).is_err());
    let err = LatticeFunction::zeros(2, 4, 4, 3).unwrap_err();
    assert!(matches!(err, padic_lab::LabError::BudgetExceeded(_)));
    assert!(LatticeFunction::zeros(2, 4, 3, 3).is_ok());
}

#[test]
fn json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = random_function(&mut rng, 3, 2, 1, 1);
    let s = serde_json::to_string(&f).unwrap();
    assert!(s.starts_with("{\"p\":3,\"n\":2,\"a\":1,\"b\":1,\"values\":[["));
    let g: LatticeFunction = serde_json::from_str(&s).unwrap();
    assert_eq!(g.max_abs_diff(&f).unwrap(), 0.0);
    assert!(serde_json::from_str::<LatticeFunction>(
        "{\"p\":3,\"n\":1,\"a\":0,\"b\":1,\"values\":[[1,0]]}"
    )
    .is_err());
}

#[test]
fn refine_preserves_norms_and_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = random_function(&mut rng, 2, 2, 1, 1);
    let g = f.refine(2, 3).unwrap();
    for q in [1.0, 2.0, f64::INFINITY] {
        assert!((lq_norm(&f, q).unwrap() - lq_norm(&g, q).unwrap()).abs() < 1e-12);
    }
    let fh = fourier_transform(&f).refine(3, 2).unwrap();
    assert!(fourier_transform(&g).max_abs_diff(&fh).unwrap() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wave_packet_support_is_exact(theta in 0i64..125, x0 in 0i64..25) {
        // chi(x.gamma(theta)) 1_T(x) has Fourier support exactly gamma(theta) + tau_theta
        let k = ctx(5);
        let (n, m, l) = (2usize, 1usize, 1i64);
        let (ct, gens) = tube_coset(k, n, m, theta, l, &[x0]);
        let t = LatticeFunction::indicator_coset(k, 1, l as u32, &ct, &gens).unwrap();
        let g = moment_curve_eval(k, n, &k.int(theta)).unwrap();
        let packet = t.modulate(&g).unwrap();
        let hat = fourier_transform(&packet);
        let frame = moment_frame(k, n, &k.int(theta), &k.p_power(l), &k.one(), m).unwrap();
        let cap = LatticeFunction::indicator_coset(k, l as u32, 1, &g, &frame).unwrap();
        for i in 0..hat.len() {
            let on = hat.values()[i].norm() > 1e-9;
            prop_assert_eq!(on, cap.values()[i].re == 1.0);
        }
    }
}
