use num_rational::Ratio;
use padic_lab::curves::a_theta;
use padic_lab::padic::random::{random_integer, random_residue};
use padic_lab::padic::{PadicContext, PadicMatrix, PadicVector};
use padic_lab::projection::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ctx(p: u64) -> PadicContext {
    PadicContext::with_default_precision(p).unwrap()
}

fn ints(c: PadicContext, xs: &[i64]) -> PadicVector {
    PadicVector::from_ints(c, xs)
}

#[test]
fn project_at_zero_is_coordinate_projection() {
    let c = ctx(5);
    let f = FiniteFractalSet::alpha_regular(5, 3, 2, 1.0, 3).unwrap();
    let pts = f.to_padic(c);
    for m in 1..=3 {
        let img = project(c, &f, &c.zero(), m).unwrap();
        for (x, y) in pts.iter().zip(&img) {
            assert!(y.eq_padic(&PadicVector::new(c, x.entries()[..m].to_vec())));
        }
    }
}

#[test]
fn project_rank_one_closed_form() {
    let c = ctx(7);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let half = c.rational(1, 2).unwrap();
    for _ in 0..50 {
        let t = random_integer(c, &mut rng);
        let x: Vec<u64> = (0..3).map(|_| rng.random_range(0..343)).collect();
        let f = FiniteFractalSet::from_points(7, 3, 3, vec![x.clone()]).unwrap();
        let y = &project(c, &f, &t, 1).unwrap()[0];
        let xs: Vec<_> = x.iter().map(|&v| c.int(v as i64)).collect();
        let expect = &xs[0] + &t * &xs[1] + &t * &t * &half * &xs[2];
        assert!(y[0].eq_padic(&expect));
    }
}

#[test]
fn projection_matrix_matches_frame_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for &(p, n) in &[(5u64, 3usize), (7, 4), (3, 2), (11, 5)] {
        let c = ctx(p);
        for _ in 0..20 {
            let t = random_integer(c, &mut rng);
            let at = a_theta(c, n, &t).unwrap().transpose();
            for m in 1..=n {
                let pm = projection_matrix(c, n, m, &t).unwrap();
                let rows = PadicMatrix::from_fn(c, m, n, |i, j| at.get(i, j).clone());
                assert!(pm.eq_padic(&rows), "p={p} n={n} m={m}");
            }
        }
    }
}

#[test]
fn projection_needs_unit_factorials() {
    let c = ctx(2);
    let f = FiniteFractalSet::full_grid(2, 4, 1).unwrap();
    assert!(project(c, &f, &c.one(), 1).is_err());
    assert!(ProjectionKernel::new(3, 4, 1, 1, 2).is_err());
    assert!(ProjectionKernel::new(3, 3, 1, 1, 2).is_ok());
    assert!(projection_matrix(ctx(5), 3, 0, &ctx(5).one()).is_err());
    assert!(projection_matrix(ctx(5), 3, 1, &ctx(5).rational(1, 5).unwrap()).is_err());
}

#[test]
fn modular_kernel_matches_exact_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = FiniteFractalSet::alpha_regular(5, 3, 3, 1.5, 9).unwrap();
    let c = ctx(5);
    for _ in 0..20 {
        let t = rng.random_range(0..125u64);
        for m in 1..=3 {
            let exact = project(c, &f, &c.int(t as i64), m).unwrap();
            for k in 0..=3 {
                let ker = ProjectionKernel::new(5, 3, m, t, k).unwrap();
                for (x, y) in f.points().iter().zip(&exact) {
                    assert_eq!(ker.apply(x), y.residues_u64(k).unwrap());
                }
            }
        }
    }
}

#[test]
fn generators_are_deterministic_and_sized() {
    let a = FiniteFractalSet::alpha_regular(5, 3, 4, 1.2, 42).unwrap();
    let b = FiniteFractalSet::alpha_regular(5, 3, 4, 1.2, 42).unwrap();
    let d = FiniteFractalSet::alpha_regular(5, 3, 4, 1.2, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.points(), d.points());
    assert_eq!(a.len(), 7usize.pow(4));
    assert_eq!(
        a.generator(),
        &Generator::AlphaRegular {
            alpha: 1.2,
            branching: 7,
            seed: 42
        }
    );
    // every node keeps exactly 7 children
    for k in 1..=4 {
        let parents = a.ball_counts(k - 1).unwrap();
        let kids = a.ball_counts(k).unwrap();
        assert_eq!(kids.len(), parents.len() * 7);
    }
    let cantor = FiniteFractalSet::cantor(5, 2, 3, &[0, 1]).unwrap();
    assert_eq!(cantor.len(), 64);
    assert!(cantor
        .points()
        .iter()
        .flatten()
        .all(|&x| (0..3).all(|i| (x / 5u64.pow(i)) % 5 <= 1)));
    assert!(FiniteFractalSet::cantor(5, 2, 3, &[5]).is_err());
    assert!(FiniteFractalSet::from_points(5, 1, 2, vec![vec![3], vec![3]]).is_err());
    assert!(FiniteFractalSet::from_points(5, 1, 2, vec![vec![25]]).is_err());
}

#[test]
fn frostman_full_grid_is_one() {
    for &(p, n, l) in &[(2u64, 2usize, 4u32), (3, 2, 3), (5, 1, 3), (3, 3, 2)] {
        let f = FiniteFractalSet::full_grid(p, n, l).unwrap();
        let r = frostman_constant(&f, n as f64, l, 0).unwrap();
        assert!(r.ln_constant.abs() < 1e-12, "{r:?}");
        for s in &r.profile {
            assert_eq!(s.max_count, p.pow((l - s.k) * n as u32));
        }
    }
}

#[test]
fn frostman_singleton_witness_at_b0() {
    let f = FiniteFractalSet::from_points(5, 2, 4, vec![vec![7, 3]]).unwrap();
    for &(k0, k1, alpha) in &[(4u32, 0u32, 0.7), (3, 1, 1.5), (2, 2, 1.0)] {
        let r = frostman_constant(&f, alpha, k0, k1).unwrap();
        assert_eq!(r.witness_k, k0);
        let expect = alpha * (k0 - k1) as f64 * 5f64.ln();
        assert!((r.ln_constant - expect).abs() < 1e-12);
        assert_eq!(r.witness_mass(), Ratio::new(1, 1));
    }
}

#[test]
fn frostman_cantor_digits_bounded() {
    let f = FiniteFractalSet::cantor(5, 1, 6, &[0, 1]).unwrap();
    let alpha = 2f64.ln() / 5f64.ln();
    let r = frostman_constant(&f, alpha, 6, 0).unwrap();
    assert!(r.constant <= 2.0 + 1e-12, "{}", r.constant);
    for s in &r.profile {
        assert_eq!(s.max_count, 1 << (6 - s.k));
    }
}

#[test]
fn frostman_lower_bound_and_errors() {
    let f = FiniteFractalSet::alpha_regular(3, 2, 3, 1.3, 1).unwrap();
    for k0 in 0..=3 {
        for k1 in 0..=k0 {
            let r = frostman_constant(&f, 1.3, k0, k1).unwrap();
            let floor = -(f.len() as f64).ln() + 1.3 * (k0 - k1) as f64 * 3f64.ln();
            assert!(r.ln_constant >= floor - 1e-12);
        }
    }
    assert!(frostman_constant(&f, 1.0, 1, 2).is_err());
    assert!(frostman_constant(&f, 1.0, 4, 0).is_err());
    let empty = FiniteFractalSet::from_points(3, 2, 3, vec![]).unwrap();
    assert!(frostman_constant(&empty, 1.0, 2, 0).is_err());
}

#[test]
fn frostman_product_multiplies() {
    let f1 = FiniteFractalSet::alpha_regular(3, 1, 3, 0.6, 2).unwrap();
    let f2 = FiniteFractalSet::cantor(3, 1, 3, &[0, 2]).unwrap();
    let g = f1.product(&f2).unwrap();
    let (a1, a2) = (0.6, 2f64.ln() / 3f64.ln());
    let r1 = frostman_constant(&f1, a1, 3, 0).unwrap();
    let r2 = frostman_constant(&f2, a2, 3, 0).unwrap();
    let r = frostman_constant(&g, a1 + a2, 3, 0).unwrap();
    for k in 0..=3 {
        let (s1, s2, s) = (&r1.profile[k], &r2.profile[k], &r.profile[k]);
        assert_eq!(s.max_count, s1.max_count * s2.max_count);
    }
    assert!(r.ln_constant <= r1.ln_constant + r2.ln_constant + 1e-12);
}

#[test]
fn nu_t_is_a_probability() {
    let f = FiniteFractalSet::alpha_regular(5, 3, 3, 1.7, 4).unwrap();
    for t in [0u64, 1, 7, 24, 124] {
        for m in 1..=3 {
            for k in 0..=3 {
                let rows = nu_t_masses(&f, t, m, k).unwrap();
                let total = rows.iter().fold(Ratio::new(0u64, 1), |a, r| a + r.mass);
                assert_eq!(total, Ratio::new(1, 1));
            }
        }
    }
}

#[test]
fn single_fiber_is_fully_bad() {
    // {x1 = 0} is one fiber of Pi_0 for m = 1
    let pts: Vec<Vec<u64>> = (0..25u64)
        .flat_map(|a| (0..25u64).map(move |b| vec![0, a, b]))
        .collect();
    let f = FiniteFractalSet::from_points(5, 3, 2, pts).unwrap();
    let mut par = ExceptionalParams::new(1, 1.2, 0.01, 2);
    par.threshold = Some(Threshold::Exponent(0.5));
    for k in 1..=2 {
        let rec = exceptional_sets(&f, &par, k).unwrap();
        assert_eq!(rec.cells[0].bad_mass, Ratio::new(1, 1));
        assert!(rec.cells[0].bad);
        assert_eq!(rec.worst().t, 0);
    }
}

#[test]
fn full_grid_has_no_bad_t() {
    let f = FiniteFractalSet::full_grid(3, 3, 3).unwrap();
    for m in 1..=2 {
        let mut par = ExceptionalParams::new(m, 3.0 - 0.05, 0.01, 3);
        par.threshold = Some(Threshold::Exponent(m as f64 - 0.05));
        for k in 0..=3 {
            let rec = exceptional_sets(&f, &par, k).unwrap();
            assert_eq!(rec.bad_t_fraction(), Ratio::new(0, 1), "m={m} k={k}");
            assert_eq!(rec.bad_w_fraction(), Ratio::new(0, 1));
            let rows = nu_t_masses(&f, 1, m, k).unwrap();
            assert!(rows
                .iter()
                .all(|r| r.mass == Ratio::new(1, 3u64.pow(k * m as u32))));
        }
    }
}

#[test]
fn default_threshold_is_vacuous_at_desk_scale() {
    let f = FiniteFractalSet::alpha_regular(5, 3, 3, 1.2, 42).unwrap();
    let par = ExceptionalParams::new(1, 1.2, 0.01, 3);
    assert!(default_threshold_exponent(3, 1.2, 0.01) < -1e29);
    let rec = exceptional_sets(&f, &par, 2).unwrap();
    assert_eq!(rec.bad_w_fraction(), Ratio::new(0, 1));
}

#[test]
fn bad_mass_grows_with_b_at_fixed_threshold_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..12 {
        let f =
            FiniteFractalSet::alpha_regular(3, 3, 3, rng.random_range(0.5..2.5), trial).unwrap();
        let mut par = ExceptionalParams::new(rng.random_range(1..=2), 1.0, 0.01, 3);
        par.threshold = Some(Threshold::Value(rng.random_range(0.01..0.5)));
        let recs: Vec<_> = (0..=3)
            .map(|k| exceptional_sets(&f, &par, k).unwrap())
            .collect();
        for k in 1..=3usize {
            // t cell of the coarser scale containing each finer t
            for c in &recs[k].cells {
                let coarse = &recs[k - 1].cells[(c.t % 3u64.pow(k as u32 - 1)) as usize];
                assert!(
                    coarse.bad_mass >= c.bad_mass,
                    "trial {trial} k {k} t {}",
                    c.t
                );
            }
        }
    }
}

#[test]
fn fixed_exponent_threshold_is_not_monotone_in_b() {
    // two parallel planes x1 = 0 and x1 = 3; under Pi_0 they give half the mass at b = 1/9
    // and all of it at b = 1/3, while the threshold only moves by a factor 3^{-0.1}
    let pts: Vec<Vec<u64>> = [0u64, 3]
        .iter()
        .flat_map(|&a| (0..9u64).flat_map(move |b| (0..9u64).map(move |c| vec![a, b, c])))
        .collect();
    let f = FiniteFractalSet::from_points(3, 3, 2, pts).unwrap();
    let mut par = ExceptionalParams::new(1, 0.9, 0.01, 2);
    par.threshold = Some(Threshold::Exponent(0.1));
    let fine = exceptional_sets(&f, &par, 2).unwrap();
    let coarse = exceptional_sets(&f, &par, 1).unwrap();
    assert_eq!(fine.cells[0].bad_mass, Ratio::new(0, 1));
    assert_eq!(coarse.cells[0].bad_mass, Ratio::new(1, 1));
}

#[test]
fn exceptional_regression_shape() {
    let f = FiniteFractalSet::alpha_regular(5, 3, 4, 1.2, 42).unwrap();
    let mut par = ExceptionalParams::new(1, 1.2, 0.01, 4);
    par.threshold = Some(Threshold::Exponent(0.6));
    let rec = exceptional_sets(&f, &par, 2).unwrap();
    assert_eq!(rec.cells.len(), 25);
    assert!(rec.bad_t_fraction() <= Ratio::new(1, 5));
}

#[test]
fn tube_contains_its_anchor() {
    let c = ctx(5);
    let fam = tube_family(c, 3, 1, 2, 2, None).unwrap();
    for theta in [0u64, 3, 17] {
        let t = fam.tube(theta, &[11]).unwrap();
        assert_eq!(
            fam.incidence_count(std::slice::from_ref(&t), &t.center)
                .unwrap(),
            1
        );
        assert!(fam.contains_by_projection(&t, &t.center).unwrap());
    }
}

#[test]
fn tubes_through_origin() {
    let c = ctx(3);
    for m in 1..=2 {
        let fam = tube_family(c, 3, m, 2, 2, None).unwrap();
        let w: Vec<Tube> = fam
            .slopes()
            .iter()
            .map(|&th| fam.tube(th, &vec![0; m]).unwrap())
            .collect();
        assert!(w.iter().all(|t| t.center.iter().all(|e| e.is_zero())));
        assert_eq!(
            fam.incidence_count(&w, &PadicVector::zeros(c, 3)).unwrap(),
            9
        );
        // a point off every tube through 0 at slope 0
        let y = ints(c, &[1, 0, 0]);
        assert!(!fam.contains(&w[0], &y).unwrap());
    }
}

#[test]
fn tube_geometry_exhaustive_small() {
    let c = ctx(3);
    for &(n, m, k, l) in &[
        (2usize, 1usize, 1u32, 2u32),
        (3, 1, 2, 2),
        (3, 2, 1, 2),
        (2, 2, 2, 2),
    ] {
        let fam = tube_family(c, n, m, k, l, None).unwrap();
        let r = fam.geometry_check().unwrap();
        assert!(r.exact(), "{n} {m} {k} {l}: {r:?}");
        assert_eq!(r.tubes, 3u64.pow(k) * 3u64.pow(k * m as u32));
    }
}

#[test]
fn tube_cell_count_direct() {
    let c = ctx(3);
    let fam = tube_family(c, 3, 1, 2, 2, Some(&[4])).unwrap();
    for t in fam.tubes(4).unwrap().iter().take(3) {
        assert_eq!(fam.tube_cells(t).unwrap(), 3u64.pow(2 * 2));
    }
}

#[test]
fn tube_membership_random_points() {
    let c = ctx(5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let fam = tube_family(c, 3, 1, 2, 3, Some(&[0, 1, 13])).unwrap();
    for _ in 0..300 {
        let theta = [0u64, 1, 13][rng.random_range(0..3)];
        let t = fam.tube(theta, &[rng.random_range(0..25)]).unwrap();
        let y = PadicVector::new(c, (0..3).map(|_| random_residue(c, &mut rng, 6)).collect());
        assert_eq!(
            fam.contains(&t, &y).unwrap(),
            fam.contains_by_projection(&t, &y).unwrap()
        );
    }
}

#[test]
fn tube_family_rejects_bad_resolution() {
    let c = ctx(3);
    assert!(tube_family(c, 3, 1, 3, 2, None).is_err());
    assert!(tube_family(c, 3, 4, 1, 2, None).is_err());
    assert!(tube_family(c, 3, 1, 1, 2, Some(&[0, 0])).is_err());
    assert!(tube_family(c, 3, 1, 1, 2, Some(&[3])).is_err());
    assert!(tube_family(ctx(2), 4, 1, 1, 2, None).is_err());
}

#[test]
fn kakeya_full_cover_incidence() {
    let f = FiniteFractalSet::alpha_regular(5, 3, 3, 1.2, 42).unwrap();
    let par = KakeyaParams {
        m: 1,
        alpha: 1.2,
        eps: 0.01,
        k0: 3,
        min_points: 1,
    };
    for k in 0..3 {
        let row = kakeya_experiment(&f, &par, k).unwrap();
        assert_eq!(row.incidence_min, 5u64.pow(k));
        assert_eq!(row.incidence_max, 5u64.pow(k));
        assert!(row.w_count >= 5u64.pow(k));
        assert_eq!(row.bound_holds, Some(true));
    }
    assert!(kakeya_experiment(&f, &par, 3).is_err());
    let heavy = KakeyaParams {
        min_points: 1000,
        ..par
    };
    let row = kakeya_experiment(&f, &heavy, 2).unwrap();
    assert_eq!(row.incidence_min, 0);
    assert!(row.log_bound.is_nan());
}

#[test]
fn xi_examples() {
    let c = ctx(5);
    let w = PadicMatrix::from_ints(c, &[&[3, 7], &[2, -3]]);
    assert!(xi_map(&w, &c.zero()).unwrap().eq_padic(&c.int(7)));
    let d = PadicMatrix::from_ints(c, &[&[1, 0], &[0, -1]]);
    assert!(xi_map(&d, &c.one()).unwrap().eq_padic(&c.int(-2)));
    let bad = PadicMatrix::from_ints(c, &[&[1, 0], &[0, 1]]);
    assert!(xi_map(&bad, &c.one()).is_err());
    assert!(ad_check(&bad, &c.one()).is_err());
}

#[test]
fn ad_check_random() {
    let c = PadicContext::new(5, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let a = random_integer(c, &mut rng);
        let w = PadicMatrix::from_fn(c, 2, 2, |i, j| match (i, j) {
            (0, 0) => a.clone(),
            (1, 1) => -&a,
            _ => random_integer(c, &mut rng),
        });
        let r = random_integer(c, &mut rng);
        ad_check(&w, &r).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pushforward_total_mass_one(seed in 0u64..1000, t in 0u64..27, m in 1usize..=3, k in 0u32..=3) {
        let f = FiniteFractalSet::alpha_regular(3, 3, 3, 1.4, seed).unwrap();
        let counts = pushforward_counts(&f, t, m, k).unwrap();
        prop_assert_eq!(counts.values().sum::<u64>(), f.len() as u64);
    }

    #[test]
    fn bad_t_fraction_in_range(seed in 0u64..1000, s in 0.0f64..2.0) {
        let f = FiniteFractalSet::alpha_regular(3, 2, 3, 1.0, seed).unwrap();
        let mut par = ExceptionalParams::new(1, 1.0, 0.01, 3);
        par.threshold = Some(Threshold::Exponent(s));
        let rec = exceptional_sets(&f, &par, 2).unwrap();
        prop_assert!(rec.bad_t_fraction() <= Ratio::new(1, 1));
        prop_assert!(rec.worst().bad_mass >= rec.bad_w_fraction());
    }
}
