//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p padic-lab --test acceptance -- --nocapture` to see them.

use std::time::Instant;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use padic_lab::curves::{a_theta, moment_curve_eval, vandermonde_valuation};
use padic_lab::decoupling::{
    cone_classify, constant_evaluator, in_class, in_slice, lemma_harness, rescaled_gamma_check,
    rescaling_op, sample_omega_coordinates, whitney_check, ConeClass, ConeRegionSpec, ConstantKind,
    ConstantParams, HarnessInstance, LemmaId, RescaleKind, RescaleParams, RescaleStep, Strategy,
};
use padic_lab::fourier::{fourier_transform, inverse_fourier_transform, lq_norm, LatticeFunction};
use padic_lab::padic::random::{random_integer, random_unit};
use padic_lab::padic::{PadicContext, PadicMatrix, PadicVector};
use padic_lab::projection::{run_projection_experiment, tube_family, ProjectionConfig};
use padic_lab::vinogradov::{
    count_solutions, count_solutions_naive, moment_identity_check, VinoInstance,
};

fn report(id: u32, ok: bool, detail: impl AsRef<str>) -> bool {
    println!(
        "{} criterion {id}: {}",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    ok
}

fn ctx(p: u64) -> PadicContext {
    PadicContext::with_default_precision(p).unwrap()
}

#[test]
fn criterion_01_vandermonde_valuation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = Vec::new();
    let mut done = 0;
    for &p in &[7u64, 11, 13] {
        let k = PadicContext::new(p, 40).unwrap();
        for i in 0..1000 {
            let n = rng.random_range(2..=5);
            let kk = rng.random_range(1..n);
            let t = random_integer(k, &mut rng);
            // half the pairs are p-adically close
            let s = if i % 2 == 0 {
                &t + &(k.p_power(rng.random_range(1..5)) * random_unit(k, &mut rng))
            } else {
                random_integer(k, &mut rng)
            };
            if t.eq_padic(&s) {
                continue;
            }
            let r = vandermonde_valuation(k, n, kk, &t, &s).unwrap();
            if !r.holds {
                bad.push((p, n, kk, r.det_valuation, r.expected));
            }
            done += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = bad.is_empty() && secs < 10.0;
    assert!(
        report(
            1,
            ok,
            format!("{done} determinants, {} mismatches, {secs:.2}s", bad.len())
        ),
        "{bad:?}"
    );
}

#[test]
fn criterion_02_frame_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for i in 0..1000 {
        let p = [5u64, 7, 11][i % 3];
        let k = ctx(p);
        let n = 1 + (i / 3) % 4;
        let th = random_integer(k, &mut rng);
        let prod = a_theta(k, n, &th)
            .unwrap()
            .mul(&a_theta(k, n, &-&th).unwrap());
        if !prod.eq_padic(&PadicMatrix::identity(k, n)) {
            bad += 1;
        }
    }
    assert!(report(
        2,
        bad == 0,
        format!("1000 products A_t A_-t, {bad} differ from I")
    ));
}

#[test]
fn criterion_03_plancherel_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let p = [2u64, 3, 5][i % 3];
        let n = 1 + (i / 3) % 2;
        let a = rng.random_range(0..=4);
        let b = rng.random_range(0..=4 - a);
        let f = LatticeFunction::from_index_fn(p, n, a, b, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap();
        let fh = fourier_transform(&f);
        let n2 = lq_norm(&f, 2.0).unwrap();
        worst = worst.max((lq_norm(&fh, 2.0).unwrap() - n2).abs() / n2);
        let back = inverse_fourier_transform(&fh);
        worst = worst.max(lq_norm(&back.sub(&f).unwrap(), 2.0).unwrap() / n2);
    }
    assert!(report(
        3,
        worst <= 1e-9,
        format!("1000 functions, max relative error {worst:.2e}")
    ));
}

#[test]
fn criterion_04_wave_packet_support() {
    let (p, n, l) = (3u64, 2usize, 1u32);
    let k = ctx(p);
    let depth = l * n as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut thetas: Vec<_> = (0..p.pow(l) as i64).map(|a| k.int(a)).collect();
    thetas.extend((0..20).map(|_| random_integer(k, &mut rng)));
    let mut worst = 0.0f64;
    for th in &thetas {
        let g = moment_curve_eval(k, n, th).unwrap();
        let packet = LatticeFunction::from_point_fn(k, n, depth, 1, |x| {
            padic_lab::fourier::character(&x.dot(&g))
        })
        .unwrap();
        let hat = fourier_transform(&packet);
        let at = hat
            .index_of(&g)
            .unwrap()
            .expect("gamma(a) lies on the frequency grid");
        let total: f64 = hat.values().iter().map(|v| v.norm_sqr()).sum();
        let outside: f64 = hat
            .values()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != at)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        worst = worst.max(outside / total);
    }
    assert!(report(
        4,
        worst <= 1e-9,
        format!(
            "{} packets, max mass fraction off the cap {worst:.2e}",
            thetas.len()
        )
    ));
}

#[test]
fn criterion_05_moment_identity() {
    // The lattice moment equals p^{l n^2} J_{s,n}(p^l): the indicator of p^{-ln} Z_p^n has Haar
    // measure p^{l n * n}. The stated p^{l n} J is off by p^{l n (n-1)}.
    let mut lines = Vec::new();
    let mut literal_ok = true;
    for (p, l, s, n) in [(3u64, 1u32, 2u32, 2u32), (5, 1, 2, 2)] {
        let r = moment_identity_check(p, l, s, n).unwrap();
        assert!(r.corrected_rel_error() <= 1e-6, "{r:?}");
        literal_ok &= r.literal_rel_error() <= 1e-6;
        lines.push(format!(
            "p={p}: moment {:.3} vs p^(ln)J = {} (ratio {:.1}), p^(ln^2)J = {}",
            r.moment,
            r.literal_rhs,
            r.moment / r.literal_rhs,
            r.corrected_rhs
        ));
    }
    report(
        5,
        literal_ok,
        format!(
            "{}; literal identity off by p^(ln(n-1)), corrected form holds to 1e-6",
            lines.join("; ")
        ),
    );
}

#[test]
#[ignore = "the literal normalisation p^(ln) J does not hold; see criterion_05_moment_identity"]
fn criterion_05_moment_identity_literal() {
    for (p, l, s, n) in [(3u64, 1u32, 2u32, 2u32), (5, 1, 2, 2)] {
        let r = moment_identity_check(p, l, s, n).unwrap();
        assert!(r.literal_rel_error() <= 1e-6, "{r:?}");
    }
}

#[test]
fn criterion_06_counter() {
    let mut bad = Vec::new();
    let mut compared = 0;
    for s in 1..=3u32 {
        for n in 1..=3u32 {
            for big_n in 1..=12u64 {
                let inst = VinoInstance::new(s, n, big_n).unwrap();
                let (a, b) = (
                    count_solutions(&inst).unwrap(),
                    count_solutions_naive(&inst).unwrap(),
                );
                compared += 1;
                if a != b {
                    bad.push((s, n, big_n, a, b));
                }
            }
        }
    }
    for big_n in 1..=50u64 {
        for n in 1..=3 {
            if count_solutions(&VinoInstance::new(1, n, big_n).unwrap()).unwrap() != big_n as u128 {
                bad.push((1, n, big_n, 0, 0));
            }
        }
        let j22 = count_solutions(&VinoInstance::new(2, 2, big_n).unwrap()).unwrap();
        if j22 != (2 * big_n * big_n - big_n) as u128 {
            bad.push((2, 2, big_n, j22, 0));
        }
    }
    let ok = bad.is_empty();
    assert!(
        report(
            6,
            ok,
            format!("{compared} counts against brute force, closed forms to N = 50")
        ),
        "{bad:?}"
    );
}

#[test]
fn criterion_07_flat_decoupling() {
    let mut lines = Vec::new();
    let mut ok = true;
    for (p, count) in [(3u64, 3usize), (2, 4), (3, 9)] {
        for r in [4.0, 6.0, f64::INFINITY] {
            let recs: Vec<_> = (0..1000u64)
                .into_par_iter()
                .map(|t| {
                    let inst = HarnessInstance {
                        p,
                        dim: 2,
                        count,
                        q: 2.0,
                        r,
                        strategy: Strategy::ALL[(t % 4) as usize],
                        seed: 7,
                        trial: t,
                    };
                    lemma_harness(LemmaId::Flat, &inst).unwrap()
                })
                .collect();
            let pass = recs.iter().filter(|r| r.pass).count();
            let strict = recs.iter().filter(|r| r.lhs < r.rhs).count();
            ok &= pass == recs.len();
            lines.push(format!("N={count} r={r}: {pass}/1000 ({strict} strict)"));
        }
    }
    assert!(report(7, ok, lines.join(", ")));
}

#[test]
fn criterion_08_structural_lemmas() {
    let mut lines = Vec::new();
    let mut ok = true;
    for lemma in [
        LemmaId::AffineInvariance,
        LemmaId::Tensorization,
        LemmaId::Cylindrical,
        LemmaId::Recoupling,
    ] {
        let recs: Vec<_> = (0..100u64)
            .into_par_iter()
            .map(|t| {
                let (p, count) = if t % 2 == 0 { (3, 3) } else { (2, 4) };
                let inst = HarnessInstance {
                    p,
                    dim: 2,
                    count,
                    q: 2.0,
                    r: [4.0, 6.0][(t / 2 % 2) as usize],
                    strategy: Strategy::ALL[(t % 4) as usize],
                    seed: 8,
                    trial: t,
                };
                lemma_harness(lemma, &inst).unwrap()
            })
            .collect();
        let pass = recs.iter().filter(|r| r.pass).count();
        ok &= pass == recs.len();
        lines.push(format!("{lemma} {pass}/100"));
    }
    assert!(report(8, ok, lines.join(", ")));
}

#[test]
fn criterion_09_whitney() {
    // Level j holds p^j (p - 1) squares; p^j (p^j - 1) is right only at j = 1.
    let mut literal_ok = true;
    let mut lines = Vec::new();
    for p in [2u64, 3] {
        for depth in 1..=3 {
            let r = whitney_check(p, depth).unwrap();
            assert!(r.partition_exact && r.corrected_counts_hold(), "{r:?}");
            literal_ok &= r.literal_counts_hold();
        }
        let r = whitney_check(p, 3).unwrap();
        let seen: Vec<String> = r
            .counts
            .iter()
            .map(|&(j, s, lit, _)| format!("j={j}:{s} (literal {lit})"))
            .collect();
        lines.push(format!("p={p} {}", seen.join(" ")));
    }
    report(
        9,
        literal_ok,
        format!(
            "partition exact, counts p^j(p-1) not p^j(p^j-1): {}",
            lines.join("; ")
        ),
    );
}

#[test]
#[ignore = "the literal count p^j (p^j - 1) fails for j >= 2; see criterion_09_whitney"]
fn criterion_09_whitney_literal() {
    for p in [2u64, 3] {
        assert!(whitney_check(p, 3).unwrap().literal_counts_hold());
    }
}

#[test]
fn criterion_10_cone_partition_and_rescaling() {
    let s = ConeRegionSpec::new(ctx(5), 3, 2, 4, 1, 0, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut bad = 0;
    for _ in 0..10_000 {
        let lam = sample_omega_coordinates(&s, &mut rng);
        let theta = s.ctx.int(rng.random_range(0..25) * 5);
        let xi = s.point(&lam, &theta).unwrap();
        let ConeClass::Inside(cell) = cone_classify(&xi, &theta, &s).unwrap() else {
            bad += 1;
            continue;
        };
        let classes: Vec<usize> = (1..=s.m).filter(|&m1| in_class(&s, &lam, m1)).collect();
        let kmax = s.slice_count(cell.m1).unwrap();
        let slices: Vec<u32> = (1..=kmax)
            .filter(|&k| in_slice(&s, &lam, cell.m1, k).unwrap())
            .collect();
        if classes != vec![cell.m1] || slices != vec![cell.k] {
            bad += 1;
        }
    }
    let k = ctx(7);
    let mut resc_bad = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let m = rng.random_range(1..=n);
        let l = rng.random_range(1..=2);
        let steps = (0..rng.random_range(1..4))
            .map(|_| RescaleStep {
                m1: rng.random_range(1..=m),
                n1: rng.random_range(m..=n),
                e: l * rng.random_range(0..3),
            })
            .collect();
        let par = RescaleParams {
            ctx: k,
            n,
            m,
            l,
            steps,
        };
        let t = random_integer(k, &mut rng);
        let xi = PadicVector::new(k, (0..n).map(|_| random_integer(k, &mut rng)).collect());
        let back = rescaling_op(
            RescaleKind::LInverse,
            &par,
            &rescaling_op(RescaleKind::L, &par, &xi).unwrap(),
        )
        .unwrap();
        if !rescaled_gamma_check(&par, &t).unwrap() || !back.eq_padic(&xi) {
            resc_bad += 1;
        }
    }
    let ok = bad == 0 && resc_bad == 0;
    assert!(report(
        10,
        ok,
        format!("10000 points, {bad} not in exactly one class and slice; 100 rescalings, {resc_bad} failures")
    ));
}

#[test]
fn criterion_11_tube_geometry() {
    let start = Instant::now();
    let fam = tube_family(ctx(3), 3, 1, 3, 3, None).unwrap();
    let g = fam.geometry_check().unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(report(
        11,
        g.exact(),
        format!(
            "{} tubes, {} cells, {} disagreements, {}..{} cells per tube (expected {}), {secs:.2}s",
            g.tubes, g.cells, g.disagreements, g.min_cells, g.max_cells, g.expected_cells
        )
    ));
}

#[test]
fn criterion_12_exceptional_regression() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let cfg: ProjectionConfig = serde_json::from_str(
        &std::fs::read_to_string(format!("{dir}/exceptional_config.json")).unwrap(),
    )
    .unwrap();
    let want = std::fs::read_to_string(format!("{dir}/exceptional.csv")).unwrap();
    let out = run_projection_experiment(&cfg).unwrap();
    let ok = out.exceptional == want;
    assert!(report(
        12,
        ok,
        format!(
            "exceptional table {} the fixture",
            if ok { "matches" } else { "differs from" }
        )
    ));
}

const PREC: usize = 512;
const RM: RoundingMode = RoundingMode::ToEven;

fn bf(x: f64) -> BigFloat {
    BigFloat::from_f64(x, PREC)
}

fn bf_f64(x: &BigFloat, cc: &mut Consts) -> f64 {
    x.format(Radix::Dec, RM, cc).unwrap().parse().unwrap()
}

/// `ln C` recomputed at 512 bits with `pow` and `powi` in place of `exp(ln)`.
fn oracle(kind: ConstantKind, par: &ConstantParams, cc: &mut Consts) -> BigFloat {
    let nf = par.n as f64;
    let tower = |a: f64, b: u32, cc: &mut Consts| {
        let ln_n = bf(nf).ln(PREC, RM, cc);
        let eps_pow = bf(par.eps).pow(&bf(-a * nf).mul(&ln_n, PREC, RM), PREC, RM, cc);
        let n_pow = bf(nf).powi((b * par.n * par.n) as usize, PREC, RM);
        let ln_p = bf(par.p as f64).ln(PREC, RM, cc);
        bf(1e4)
            .mul(&ln_p, PREC, RM)
            .mul(&eps_pow, PREC, RM)
            .mul(&n_pow, PREC, RM)
    };
    match kind {
        ConstantKind::DecProp => tower(5.0, 10, cc),
        ConstantKind::MomentCurve => tower(4.0, 10, cc),
        ConstantKind::Proj => {
            let head = bf(4.0).mul(&bf(par.c.max(1.0)), PREC, RM).ln(PREC, RM, cc);
            head.add(&tower(5.0, 20, cc), PREC, RM)
        }
        ConstantKind::Kakeya => {
            let head = if par.c >= 1.0 {
                bf(0.0)
            } else {
                bf(par.c).ln(PREC, RM, cc).div(&bf(par.eps), PREC, RM)
            };
            head.sub(&tower(5.0, 20, cc), PREC, RM)
        }
        ConstantKind::VinoBound => {
            let s = par.s as usize;
            let ln_big_n = bf(par.ln_big_n);
            let big_n = ln_big_n.exp(PREC, RM, cc);
            let expo = bf(1.0).sub(
                &bf(1.0).div(&bf(4.0 * nf * nf.ln() + 1.0), PREC, RM),
                PREC,
                RM,
            );
            let e3n = bf(3.0 * nf).exp(PREC, RM, cc);
            let head = bf(1e5 * par.s as f64).mul(&e3n, PREC, RM).mul(
                &ln_big_n.pow(&expo, PREC, RM, cc),
                PREC,
                RM,
            );
            let t = 2 * par.s as i64 - (par.n * (par.n + 1) / 2) as i64;
            let second = if t >= 0 {
                big_n.powi(t as usize, PREC, RM)
            } else {
                bf(1.0).div(&big_n.powi((-t) as usize, PREC, RM), PREC, RM)
            };
            let tail = big_n
                .powi(s, PREC, RM)
                .add(&second, PREC, RM)
                .ln(PREC, RM, cc);
            head.add(&tail, PREC, RM)
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn criterion_13_constants() {
    let mut cc = Consts::new().unwrap();
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let base = [(1u32, 3u64), (2, 3), (3, 5), (4, 7), (6, 13)];
    let eps_grid = [1e-4, 3e-4, 1e-3, 2e-3, 5e-3, 9e-3];
    for &(n, p) in &base {
        for kind in [
            ConstantKind::Proj,
            ConstantKind::Kakeya,
            ConstantKind::DecProp,
            ConstantKind::MomentCurve,
        ] {
            for c in [0.5, 1.0, 20.0] {
                let mut prev = f64::INFINITY;
                for &eps in &eps_grid {
                    let par = ConstantParams {
                        n,
                        p,
                        eps,
                        c,
                        alpha: 1.0,
                        ..Default::default()
                    };
                    let v = constant_evaluator(kind, &par).unwrap();
                    if !v.log10_abs_ln.is_finite() {
                        problems.push(format!("{kind} {par:?} not finite"));
                    }
                    // at n = 1 the tower does not depend on eps
                    let decreasing = if n == 1 {
                        v.log10_abs_ln <= prev
                    } else {
                        v.log10_abs_ln < prev
                    };
                    if !decreasing {
                        problems.push(format!("{kind} not decreasing in eps at {par:?}"));
                    }
                    prev = v.log10_abs_ln;
                    let o = oracle(kind, &par, &mut cc);
                    let want = bf_f64(&o.abs().log10(PREC, RM, &mut cc), &mut cc);
                    worst = worst.max(rel(v.log10_abs_ln, want));
                    if v.ln.is_finite() {
                        worst = worst.max(rel(v.ln, bf_f64(&o, &mut cc)));
                    }
                    if v.negative != o.is_negative() {
                        problems.push(format!("{kind} sign at {par:?}"));
                    }
                }
            }
        }
    }
    for n in 2..=4u32 {
        for s in [2u32, 3, 6, 10] {
            let mut prev = f64::NEG_INFINITY;
            for ln_big_n in [2.0, 10.0, 1e3, 1e6] {
                let par = ConstantParams {
                    n,
                    s,
                    ln_big_n,
                    ..Default::default()
                };
                let v = constant_evaluator(ConstantKind::VinoBound, &par).unwrap();
                if !(v.ln.is_finite() && v.ln > prev) {
                    problems.push(format!(
                        "vinobound not finite or not increasing in N at {par:?}"
                    ));
                }
                prev = v.ln;
                let o = oracle(ConstantKind::VinoBound, &par, &mut cc);
                worst = worst.max(rel(v.ln, bf_f64(&o, &mut cc)));
            }
        }
    }
    let ok = problems.is_empty() && worst <= 1e-9;
    assert!(
        report(
            13,
            ok,
            format!("five constants against a 512-bit oracle, max relative error {worst:.2e}")
        ),
        "{problems:?}"
    );
}
