use std::time::Instant;

use anyhow::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use padic_lab::curves::{a_theta, vandermonde_valuation};
use padic_lab::decoupling::whitney_check;
use padic_lab::fourier::{fourier_transform, inverse_fourier_transform, lq_norm, LatticeFunction};
use padic_lab::padic::random::{random_integer, random_unit};
use padic_lab::padic::{PadicContext, PadicMatrix};
use padic_lab::projection::{ad_check, tube_family};
use padic_lab::vinogradov::{
    count_solutions, count_solutions_naive, moment_identity_check, VinoInstance,
};

use crate::config::Output;
use crate::PropertyFailure;

const SEED: u64 = 20_240_601;

type Check = (&'static str, fn(bool) -> Result<(bool, String)>);

fn vandermonde(quick: bool) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let trials = if quick { 100 } else { 1000 };
    let mut done = 0;
    for &p in &[7u64, 11, 13] {
        let ctx = PadicContext::new(p, 40)?;
        for _ in 0..trials / 3 {
            let n = rng.random_range(2..=5);
            let k = rng.random_range(1..n);
            let t = random_integer(ctx, &mut rng);
            let s = &t + ctx.p_power(rng.random_range(0..4)) * random_unit(ctx, &mut rng);
            let r = vandermonde_valuation(ctx, n, k, &t, &s)?;
            if !r.holds {
                return Ok((
                    false,
                    format!("p={p} n={n} k={k}: {} vs {}", r.det_valuation, r.expected),
                ));
            }
            done += 1;
        }
    }
    Ok((true, format!("{done} determinants")))
}

fn frame_inverse(quick: bool) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let trials = if quick { 100 } else { 1000 };
    for i in 0..trials {
        let n = 1 + i % 4;
        let ctx = PadicContext::with_default_precision(5)?;
        let th = random_integer(ctx, &mut rng);
        let prod = a_theta(ctx, n, &th)?.mul(&a_theta(ctx, n, &-&th)?);
        if !prod.eq_padic(&PadicMatrix::identity(ctx, n)) {
            return Ok((false, format!("n={n} theta={th}")));
        }
    }
    Ok((true, format!("{trials} frames")))
}

fn plancherel(quick: bool) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let trials = if quick { 60 } else { 1000 };
    let mut worst = 0.0f64;
    for i in 0..trials {
        let p = [2u64, 3, 5][i % 3];
        let n = 1 + (i / 3) % 2;
        let a = rng.random_range(0..=2);
        let b = rng.random_range(0..=(4 - a).min(2));
        let f = LatticeFunction::from_index_fn(p, n, a, b, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })?;
        let fh = fourier_transform(&f);
        let n2 = lq_norm(&f, 2.0)?;
        worst = worst.max((lq_norm(&fh, 2.0)? - n2).abs() / n2);
        let back = inverse_fourier_transform(&fh);
        let diff = back.sub(&f)?;
        worst = worst.max(lq_norm(&diff, 2.0)? / n2);
    }
    Ok((worst <= 1e-9, format!("max relative error {worst:.2e}")))
}

fn counter(quick: bool) -> Result<(bool, String)> {
    let top = if quick { 8 } else { 12 };
    for s in 1..=3u32 {
        for n in 1..=3u32 {
            for big_n in 1..=top {
                let inst = VinoInstance::new(s, n, big_n)?;
                if s == 3 && big_n > 9 {
                    continue;
                }
                let (a, b) = (count_solutions(&inst)?, count_solutions_naive(&inst)?);
                if a != b {
                    return Ok((false, format!("s={s} n={n} N={big_n}: {a} vs {b}")));
                }
            }
        }
    }
    Ok((true, format!("N <= {top}")))
}

fn whitney(_: bool) -> Result<(bool, String)> {
    for p in [2u64, 3] {
        let r = whitney_check(p, 3)?;
        if !(r.partition_exact && r.corrected_counts_hold()) {
            return Ok((false, format!("p={p}")));
        }
    }
    Ok((true, "p^j(p-1) squares at level j, exact partition".into()))
}

fn moment(_: bool) -> Result<(bool, String)> {
    let r = moment_identity_check(3, 1, 2, 2)?;
    let err = r.corrected_rel_error();
    Ok((
        err <= 1e-6,
        format!("moment {:.6} = p^(l n^2) J = {}", r.moment, r.corrected_rhs),
    ))
}

fn adjoint(quick: bool) -> Result<(bool, String)> {
    let ctx = PadicContext::new(5, 10)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let trials = if quick { 200 } else { 1000 };
    for _ in 0..trials {
        let a = random_integer(ctx, &mut rng);
        let (b, c) = (random_integer(ctx, &mut rng), random_integer(ctx, &mut rng));
        let w = PadicMatrix::from_fn(ctx, 2, 2, |i, j| match (i, j) {
            (0, 0) => a.clone(),
            (0, 1) => b.clone(),
            (1, 0) => c.clone(),
            _ => -&a,
        });
        ad_check(&w, &random_integer(ctx, &mut rng))?;
    }
    Ok((true, format!("{trials} conjugations")))
}

fn tubes(quick: bool) -> Result<(bool, String)> {
    let (n, depth) = if quick { (2, 2) } else { (3, 3) };
    let fam = tube_family(
        PadicContext::with_default_precision(3)?,
        n,
        1,
        depth,
        depth,
        None,
    )?;
    let g = fam.geometry_check()?;
    Ok((
        g.exact(),
        format!(
            "{} tubes, {} cells each (expected {})",
            g.tubes, g.max_cells, g.expected_cells
        ),
    ))
}

const CHECKS: [Check; 8] = [
    ("vandermonde", vandermonde),
    ("frame-inverse", frame_inverse),
    ("plancherel", plancherel),
    ("counter", counter),
    ("whitney", whitney),
    ("moment", moment),
    ("adjoint", adjoint),
    ("tubes", tubes),
];

pub fn run(quick: bool, out: &Output) -> Result<()> {
    println!("seed {SEED}");
    let mut failures = Vec::new();
    for (name, check) in CHECKS {
        let start = Instant::now();
        let (ok, detail) = match check(quick) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "{} {name}: {detail} ({:.2}s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !ok {
            failures.push(json!({"check": name, "detail": detail, "quick": quick, "seed": SEED}));
        }
    }
    if failures.is_empty() {
        return Ok(());
    }
    let path = out.write_replay("replay_selftest.json", &serde_json::Value::Array(failures))?;
    Err(PropertyFailure(format!("selftest failed; replay in {}", path.display())).into())
}
