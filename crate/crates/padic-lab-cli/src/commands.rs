use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use padic_lab::decoupling::{
    constant_evaluator, estimate, flat_bound, run_harness, CapSystem, ConstantKind, ConstantParams,
    HarnessInstance, LemmaId, Strategy, VerificationRecord,
};
use padic_lab::fourier::{fourier_transform, inverse_fourier_transform, lq_norm, LatticeFunction};
use padic_lab::padic::PadicContext;
use padic_lab::projection::{
    run_projection_experiment, tube_family, GeneratorConfig, ProjectionConfig,
};
use padic_lab::vinogradov::{
    bound_value, count_solutions_with_budget, moment_identity_check, VinoInstance,
    DEFAULT_TABLE_BUDGET,
};

use crate::config::{config_error, FileConfig, Output};
use crate::*;

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Selftest { quick } => crate::selftest::run(*quick, &output(cli, &cfg)),
        Command::Fourier(FourierCmd::Roundtrip(a)) => roundtrip(cli, &mut cfg, a),
        Command::Decoupling(DecouplingCmd::Estimate(a)) => decoupling_estimate(cli, &mut cfg, a),
        Command::Decoupling(DecouplingCmd::Harness(a)) => decoupling_harness(cli, &mut cfg, a),
        Command::Vinogradov(VinogradovCmd::Count(a)) => vino_count(cli, &mut cfg, a),
        Command::Vinogradov(VinogradovCmd::Bound(a)) => vino_bound(cli, &mut cfg, a),
        Command::Vinogradov(VinogradovCmd::Moment(a)) => vino_moment(cli, &mut cfg, a),
        Command::Projection(ProjectionCmd::Run(a)) => projection_run(cli, &cfg, a),
        Command::Kakeya(KakeyaCmd::Run(a)) => kakeya_run(cli, &mut cfg, a),
        Command::Constants(ConstantsCmd::Eval(a)) => constants_eval(cli, &mut cfg, a),
    }
}

fn output(cli: &Cli, cfg: &FileConfig) -> Output {
    Output {
        dir: cli.out.clone(),
        hash: cfg.hash(),
    }
}

fn roundtrip(cli: &Cli, cfg: &mut FileConfig, a: &RoundtripArgs) -> Result<()> {
    let p = cfg.pick("p", a.p, 3)?;
    let n = cfg.pick("n", a.n, 1)?;
    let ea = cfg.pick("a", a.a, 1)?;
    let eb = cfg.pick("b", a.b, 1)?;
    let trials = cfg.pick("trials", a.trials, 100)?;
    let seed = cfg.pick("seed", a.seed, 0)?;
    let out = output(cli, cfg);
    println!("seed {seed}");
    let mut body = String::from("trial,roundtrip_error,plancherel_error\n");
    let mut worst = (0.0f64, 0u64);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let f = LatticeFunction::from_index_fn(p, n, ea, eb, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })?;
        let fh = fourier_transform(&f);
        let back = inverse_fourier_transform(&fh);
        let scale = f
            .values()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let rt = back
            .values()
            .iter()
            .zip(f.values())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale;
        let n2 = lq_norm(&f, 2.0)?;
        let pl = (lq_norm(&fh, 2.0)? - n2).abs() / n2.max(f64::MIN_POSITIVE);
        writeln!(body, "{t},{rt:.6e},{pl:.6e}")?;
        if rt.max(pl) > worst.0 {
            worst = (rt.max(pl), t);
        }
    }
    let path = out.write_csv("roundtrip.csv", &body)?;
    println!(
        "max relative error {:.3e} over {trials} trials ({})",
        worst.0,
        path.display()
    );
    if worst.0 > 1e-9 {
        let replay = out.write_replay(
            "replay_roundtrip.json",
            &json!({"p": p, "n": n, "a": ea, "b": eb, "seed": seed, "trial": worst.1, "error": worst.0}),
        )?;
        return Err(PropertyFailure(format!(
            "round trip error {:.3e}; replay in {}",
            worst.0,
            replay.display()
        ))
        .into());
    }
    Ok(())
}

fn decoupling_estimate(cli: &Cli, cfg: &mut FileConfig, a: &EstimateArgs) -> Result<()> {
    let p = cfg.pick("p", a.p, 3)?;
    let n = cfg.pick("n", a.n, 2)?;
    let level = cfg.pick("level", a.level, 1)?;
    let q = cfg.pick("q", a.q, 2.0)?;
    let r = cfg.pick("r", a.r, 4.0)?;
    let trials = cfg.pick("trials", a.trials, 20)?;
    let seed = cfg.pick("seed", a.seed, 0)?;
    let out = output(cli, cfg);
    println!("seed {seed}");
    let ctx = PadicContext::with_default_precision(p)?;
    let caps = CapSystem::moment_boxes(ctx, n, level)?;
    let est = estimate(&caps, caps.grid(), q, r, trials, seed)?;
    let mut body =
        String::from("caps,count,q,r,lower_bound,flat_bound,witness_strategy,witness_trial,seed\n");
    writeln!(
        body,
        "{},{},{q},{r},{:.12e},{:.12e},{},{},{seed}",
        caps.label(),
        caps.len(),
        est.lower_bound,
        flat_bound(caps.len(), q, r),
        est.witness_strategy,
        est.witness_trial
    )?;
    let path = out.write_csv("estimate.csv", &body)?;
    println!(
        "lower bound {:.6} from {} ({})",
        est.lower_bound,
        est.witness_strategy,
        path.display()
    );
    Ok(())
}

fn decoupling_harness(cli: &Cli, cfg: &mut FileConfig, a: &HarnessArgs) -> Result<()> {
    let lemma_name = cfg.pick("lemma", a.lemma.clone(), "flat".to_string())?;
    let lemma = LemmaId::from_str(&lemma_name)?;
    let strategy_name = cfg.pick("strategy", a.strategy.clone(), "gaussian".to_string())?;
    let base = HarnessInstance {
        p: cfg.pick("p", a.p, 3)?,
        dim: cfg.pick("dim", a.dim, 1)?,
        count: cfg.pick("count", a.count, 3)?,
        q: cfg.pick("q", a.q, 2.0)?,
        r: cfg.pick("r", a.r, 4.0)?,
        strategy: Strategy::from_str(&strategy_name)?,
        seed: cfg.pick("seed", a.seed, 0)?,
        trial: 0,
    };
    let trials = cfg.pick("trials", a.trials, 100)?;
    let out = output(cli, cfg);
    println!("seed {}", base.seed);
    let records = run_harness(lemma, &base, trials)?;
    let mut body = format!("{}\n", VerificationRecord::CSV_HEADER);
    for r in &records {
        writeln!(body, "{}", r.csv_row())?;
    }
    let path = out.write_csv(&format!("harness_{lemma}.csv"), &body)?;
    let failed: Vec<(u64, &VerificationRecord)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.pass)
        .map(|(i, r)| (i as u64, r))
        .collect();
    println!(
        "{lemma}: {}/{} pass ({})",
        records.len() - failed.len(),
        records.len(),
        path.display()
    );
    if let Some((trial, rec)) = failed.first() {
        let replay = out.write_replay(
            &format!("replay_{lemma}.json"),
            &json!({
                "lemma": lemma.to_string(), "p": base.p, "dim": base.dim, "count": base.count,
                "q": base.q, "r": base.r, "strategy": base.strategy.to_string(), "seed": base.seed,
                "trial": trial, "instance_hash": rec.instance_hash, "lhs": rec.lhs, "rhs": rec.rhs,
            }),
        )?;
        return Err(PropertyFailure(format!(
            "{} failing instances; replay in {}",
            failed.len(),
            replay.display()
        ))
        .into());
    }
    Ok(())
}

fn vino_instance(cfg: &mut FileConfig, a: &VinoArgs) -> Result<VinoInstance> {
    let s = cfg.pick("s", a.s, 2)?;
    let n = cfg.pick("n", a.n, 2)?;
    let big_n = cfg.pick("N", a.big_n, 10)?;
    Ok(VinoInstance::new(s, n, big_n)?)
}

fn vino_count(cli: &Cli, cfg: &mut FileConfig, a: &VinoArgs) -> Result<()> {
    let inst = vino_instance(cfg, a)?;
    let budget = cfg.pick("budget", a.budget, DEFAULT_TABLE_BUDGET)?;
    let j = count_solutions_with_budget(&inst, budget)?;
    output(cli, cfg).print_csv(&format!(
        "s,n,N,J\n{},{},{},{j}\n",
        inst.s, inst.n, inst.big_n
    ));
    Ok(())
}

fn vino_bound(cli: &Cli, cfg: &mut FileConfig, a: &VinoArgs) -> Result<()> {
    let inst = vino_instance(cfg, a)?;
    let b = bound_value(&inst)?;
    output(cli, cfg).print_csv(&format!(
        "s,n,N,ln_bound,below_threshold\n{},{},{},{:.12e},{}\n",
        inst.s, inst.n, inst.big_n, b.ln_bound, b.below_threshold
    ));
    Ok(())
}

fn vino_moment(cli: &Cli, cfg: &mut FileConfig, a: &MomentArgs) -> Result<()> {
    let p = cfg.pick("p", a.p, 3)?;
    let l = cfg.pick("l", a.l, 1)?;
    let s = cfg.pick("s", a.s, 2)?;
    let n = cfg.pick("n", a.n, 2)?;
    let rec = moment_identity_check(p, l, s, n)?;
    output(cli, cfg).print_csv(&format!(
        "p,l,s,n,moment,count,literal_rhs,corrected_rhs\n{p},{l},{s},{n},{:.9},{},{},{}\n",
        rec.moment, rec.count, rec.literal_rhs, rec.corrected_rhs
    ));
    Ok(())
}

fn projection_config(cfg: &FileConfig, seed: Option<u64>) -> Result<ProjectionConfig> {
    if cfg.raw().is_empty() {
        return config_error("this command needs --config <file>");
    }
    let mut pc: ProjectionConfig =
        match serde_json::from_value(serde_json::Value::Object(cfg.raw().clone())) {
            Ok(pc) => pc,
            Err(e) => return config_error(e.to_string()),
        };
    if let (Some(s), GeneratorConfig::AlphaRegular { seed, .. }) = (seed, &mut pc.generator) {
        *seed = s;
    }
    if let Err(e) = pc.validate() {
        return config_error(e.to_string());
    }
    Ok(pc)
}

fn projection_run(cli: &Cli, cfg: &FileConfig, a: &ProjectionArgs) -> Result<()> {
    let pc = projection_config(cfg, a.seed)?;
    let mut hashed = FileConfig::default();
    hashed.note("projection", &pc);
    let out = output(cli, &hashed);
    if let GeneratorConfig::AlphaRegular { seed, .. } = pc.generator {
        println!("seed {seed}");
    }
    let res = run_projection_experiment(&pc)?;
    for (name, body) in [
        ("nu_t_masses.csv", &res.nu_t_masses),
        ("exceptional.csv", &res.exceptional),
        ("kakeya.csv", &res.kakeya),
    ] {
        let path = out.write_csv(name, body)?;
        println!("wrote {}", path.display());
    }
    print!("{}", res.exceptional);
    Ok(())
}

fn kakeya_run(cli: &Cli, cfg: &mut FileConfig, a: &KakeyaArgs) -> Result<()> {
    let pc = projection_config(cfg, a.seed)?;
    let depth = a.tube_depth.unwrap_or(2);
    let mut hashed = FileConfig::default();
    hashed.note("projection", &pc);
    hashed.note("tube_depth", depth);
    let out = output(cli, &hashed);
    let res = run_projection_experiment(&pc)?;
    let path = out.write_csv("kakeya.csv", &res.kakeya)?;
    println!("wrote {}", path.display());
    print!("{}", res.kakeya);
    let ctx = PadicContext::with_default_precision(pc.p)?;
    let fam = tube_family(ctx, pc.n, pc.m, depth, depth, None)?;
    let g = fam.geometry_check().context("tube geometry check")?;
    let body = format!(
        "p,n,m,k,l,tubes,cells,disagreements,min_cells,max_cells,expected_cells\n{},{},{},{depth},{depth},{},{},{},{},{},{}\n",
        pc.p, pc.n, pc.m, g.tubes, g.cells, g.disagreements, g.min_cells, g.max_cells, g.expected_cells
    );
    let path = out.write_csv("tube_geometry.csv", &body)?;
    println!(
        "tube geometry {} ({})",
        if g.exact() { "exact" } else { "MISMATCH" },
        path.display()
    );
    if !g.exact() {
        let replay = out.write_replay(
            "replay_tubes.json",
            &json!({"p": pc.p, "n": pc.n, "m": pc.m, "k": depth, "l": depth, "disagreements": g.disagreements}),
        )?;
        return Err(PropertyFailure(format!(
            "tube geometry mismatch; replay in {}",
            replay.display()
        ))
        .into());
    }
    Ok(())
}

fn constants_eval(cli: &Cli, cfg: &mut FileConfig, a: &ConstantsArgs) -> Result<()> {
    let d = ConstantParams::default();
    let par = ConstantParams {
        n: cfg.pick("n", a.n, d.n)?,
        p: cfg.pick("p", a.p, d.p)?,
        eps: cfg.pick("eps", a.eps, 0.001)?,
        c: cfg.pick("c", a.c, d.c)?,
        alpha: cfg.pick("alpha", a.alpha, d.alpha)?,
        s: cfg.pick("s", a.s, d.s)?,
        ln_big_n: cfg.pick("ln_n", a.ln_n, d.ln_big_n)?,
    };
    let kinds = match cfg.pick("kind", a.kind.clone(), String::new())?.as_str() {
        "" | "all" => ConstantKind::ALL.to_vec(),
        k => vec![ConstantKind::from_str(k)?],
    };
    let mut body =
        String::from("kind,ln,log10_abs_ln,negative,sqrt_eps_loss,threshold_met,ln_decimal\n");
    for k in kinds {
        let v = constant_evaluator(k, &par)?;
        let opt = |x: Option<String>| x.unwrap_or_default();
        writeln!(
            body,
            "{k},{:.12e},{:.12},{},{},{},{}",
            v.ln,
            v.log10_abs_ln,
            v.negative,
            opt(v.sqrt_eps_loss.map(|x| format!("{x:.6e}"))),
            opt(v.threshold_met.map(|x| x.to_string())),
            v.decimal
        )?;
    }
    output(cli, cfg).print_csv(&body);
    Ok(())
}
