//! The subcommands. Each writes `config.echo.json` plus its own artifacts and
//! reports whether its assertions held.

use std::path::Path;

use gamehomog_core::env::{Bounds, EnvSpec, Environment};
use gamehomog_core::game::{certify_constants, shift_momentum, verify_localization, GameHamiltonian};
use gamehomog_core::hash::{derive_seed, SplitMix64};
use gamehomog_core::homog::{
    check_concentration, effective_h_properties, estimate_u, extract_effective_h, rate_experiment, spread_profile,
    strip_experiment, EffectiveEstimate, RateSetup, UTable, Verdict,
};
use gamehomog_core::pde::{
    check_comparison, check_lipschitz, check_scaling, cost_region, solve_trajectory, InitialDatum, SolveConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format, HamiltonianBlock};
use crate::io::{rate_rows, sample_rows, OutDir, RATE_HEADER};
use crate::{LabError, Pool};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SampleEnv,
    Solve,
    Estimate,
    Effective,
    Rate,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SampleEnv => "sample-env",
            Command::Solve => "solve",
            Command::Estimate => "estimate",
            Command::Effective => "effective",
            Command::Rate => "rate",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Every assertion of the subcommand held.
    pub ok: bool,
    /// One line per assertion or headline number.
    pub lines: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            2
        }
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    gh: GameHamiltonian,
    family: EnvSpec,
    out: OutDir,
    pool: Pool,
}

impl Ctx<'_> {
    fn wants(&self, f: Format) -> bool {
        self.cfg.output.formats.contains(&f)
    }
}

#[derive(Serialize)]
struct Echo<'a> {
    command: &'a str,
    workers: usize,
    config: &'a ExperimentConfig,
}

/// Run `cmd` with a validated config, writing into `cfg.output.dir`.
/// `workers` overrides `campaign.workers`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Outcome, LabError> {
    let gh = cfg.game()?;
    let ctx = Ctx {
        cfg,
        family: cfg.family(),
        gh,
        out: OutDir::create(Path::new(&cfg.output.dir), cfg.hash())?,
        pool: Pool::new(workers.or(cfg.campaign.workers)),
    };
    ctx.out.json(
        "config.echo.json",
        "config",
        Echo {
            command: cmd.name(),
            workers: ctx.pool.workers(),
            config: cfg,
        },
    )?;
    match cmd {
        Command::SampleEnv => sample_env(&ctx),
        Command::Solve => solve(&ctx),
        Command::Estimate => estimate(&ctx).map(|(o, _)| o),
        Command::Effective => effective(&ctx),
        Command::Rate => rate(&ctx),
        Command::Verify => verify(&ctx),
    }
}

fn sample_env(ctx: &Ctx) -> Result<Outcome, LabError> {
    let env = Environment::sample(&ctx.family)?;
    let dim = ctx.family.dim;
    let dump = env.dump(ctx.cfg.solver.dx)?;
    let mut header = vec!["x0"];
    if dim > 1 {
        header.push("x1");
    }
    header.extend(["a", "b", "value"]);
    let rows = dump.iter().map(|(x, a, b, v)| {
        let mut r: Vec<String> = x[..dim].iter().map(|c| c.to_string()).collect();
        r.extend([a.to_string(), b.to_string(), v.to_string()]);
        r
    });
    ctx.out.csv("field.csv", &header, rows)?;
    let values: Vec<f64> = dump.iter().map(|d| d.3).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sup = ctx.family.sup_bound();
    ctx.out.json(
        "field.json",
        "field-summary",
        json!({"points": values.len(), "min": min, "max": max, "sup_bound": sup, "offset": env.offset()}),
    )?;
    let ok = min >= 0.0 && max <= sup;
    Ok(Outcome {
        ok,
        lines: vec![format!("field values in [{min}, {max}], certified sup {sup}")],
    })
}

/// An environment covering `bounds` and every cost region of `cfgs`.
fn env_covering(
    family: &EnvSpec,
    gh: &GameHamiltonian,
    cfgs: &[&SolveConfig],
    pad: f64,
) -> Result<Environment, LabError> {
    let dim = family.dim;
    let mut lo = family.bounds.lo.clone();
    let mut hi = family.bounds.hi.clone();
    for c in cfgs {
        let r = cost_region(gh, c)?;
        for k in 0..dim {
            lo[k] = lo[k].min(r.lo[k] - pad);
            hi[k] = hi[k].max(r.hi[k] + pad);
        }
    }
    Ok(Environment::sample(&family.with_bounds(&lo, &hi))?)
}

fn solve(ctx: &Ctx) -> Result<Outcome, LabError> {
    let cfg = ctx.cfg.solve_config();
    let env = env_covering(&ctx.family, &ctx.gh, &[&cfg], 0.0)?;
    let traj = solve_trajectory(&ctx.gh, &env, &cfg)?;
    let dim = cfg.dim();
    let mut rows = Vec::new();
    for f in &traj {
        for (_, _, x, u) in f.nodes_in(&cfg.report.lo, &cfg.report.hi) {
            let mut r = vec![f.t.to_string()];
            r.extend(x[..dim].iter().map(|c| c.to_string()));
            r.push(u.to_string());
            rows.push(r);
        }
    }
    let mut header = vec!["t", "x0"];
    if dim > 1 {
        header.push("x1");
    }
    header.push("u");
    if ctx.wants(Format::Csv) {
        ctx.out.csv("trajectory.csv", &header, rows)?;
    }
    let constants = certify_constants(&ctx.gh, env.spec(), None)?;
    let lip = check_lipschitz(&traj, &constants, cfg.datum.lipschitz(dim) * cfg.eps.recip().max(1.0));
    let last = traj.last().unwrap();
    let finals: Vec<(Vec<f64>, f64)> = last
        .nodes_in(&cfg.report.lo, &cfg.report.hi)
        .map(|(_, _, x, u)| (x[..dim].to_vec(), u))
        .collect();
    ctx.out.json(
        "solve.json",
        "solve",
        json!({"t": last.t, "constants": constants, "lipschitz": lip, "final": finals}),
    )?;
    Ok(Outcome {
        ok: lip.ok,
        lines: vec![format!(
            "solved to t = {} on {} reported nodes; Lipschitz bounds {}",
            last.t,
            finals.len(),
            if lip.ok { "hold" } else { "VIOLATED" }
        )],
    })
}

fn tables(ctx: &Ctx) -> Result<Vec<UTable>, LabError> {
    let c = &ctx.cfg.campaign;
    let disc = ctx.cfg.discretization();
    c.theta
        .iter()
        .map(|th| {
            Ok(estimate_u(
                &ctx.gh,
                &ctx.family,
                th,
                &c.times,
                c.samples,
                c.base_seed,
                &disc,
                &ctx.pool,
            )?)
        })
        .collect()
}

fn estimate(ctx: &Ctx) -> Result<(Outcome, Vec<UTable>), LabError> {
    let t = tables(ctx)?;
    if ctx.wants(Format::Json) {
        ctx.out.json("utable.json", "utable", &t)?;
    }
    if ctx.wants(Format::Csv) {
        ctx.out
            .csv("samples.csv", &["theta_index", "t", "sample", "value"], sample_rows(&t))?;
    }
    let lines = t
        .iter()
        .map(|u| {
            let k = u.times.len() - 1;
            format!(
                "theta {:?}: U({}) = {} +- {}",
                u.theta,
                u.times[k],
                u.means[k],
                u.std_err(k)
            )
        })
        .collect();
    Ok((Outcome { ok: true, lines }, t))
}

#[derive(Serialize)]
struct EffectiveOut<'a> {
    estimates: &'a [EffectiveEstimate],
    properties: Option<gamehomog_core::homog::PropertiesReport>,
    concentration: Vec<gamehomog_core::homog::ConcentrationReport>,
    spread: Vec<gamehomog_core::homog::SpreadReport>,
}

fn effective(ctx: &Ctx) -> Result<Outcome, LabError> {
    let (_, t) = estimate(ctx)?;
    let est: Vec<EffectiveEstimate> = t
        .iter()
        .map(|u| extract_effective_h(u, None))
        .collect::<Result<_, _>>()?;
    let beta = certify_constants(&ctx.gh, &ctx.family, None)?.beta;
    let properties = if est.len() >= 2 {
        Some(effective_h_properties(&est, beta)?)
    } else {
        None
    };
    let mut concentration = Vec::new();
    let mut spread = Vec::new();
    for u in &t {
        concentration.push(check_concentration(u, u.t_max(), &ctx.cfg.campaign.m_grid)?);
        spread.push(spread_profile(u, &u.times)?);
    }
    let mut ok = true;
    let mut lines = Vec::new();
    for (e, c) in est.iter().zip(&concentration) {
        lines.push(format!(
            "theta {:?}: Hbar = {} +- {} (defects stable: {}, concentration: {:?})",
            e.theta, e.h_hat, e.ci_halfwidth, e.defects.stable, c.verdict
        ));
        ok &= e.defects.stable && !c.verdict.is_failure();
    }
    if let Some(p) = &properties {
        lines.push(format!(
            "growth bound: {}, Lipschitz bound: {}",
            p.growth_ok, p.lipschitz_ok
        ));
        ok &= p.growth_ok && p.lipschitz_ok;
    }
    ctx.out.json(
        "effective.json",
        "effective",
        EffectiveOut {
            estimates: &est,
            properties,
            concentration,
            spread,
        },
    )?;
    Ok(Outcome { ok, lines })
}

fn rate(ctx: &Ctx) -> Result<Outcome, LabError> {
    let c = &ctx.cfg.campaign;
    let theta = &c.theta[0];
    let h_bar = match c.h_bar {
        Some(h) => h,
        None => {
            let disc = ctx.cfg.discretization();
            let u = estimate_u(
                &ctx.gh,
                &ctx.family,
                theta,
                &c.times,
                c.samples,
                c.base_seed,
                &disc,
                &ctx.pool,
            )?;
            extract_effective_h(&u, None)?.h_hat
        }
    };
    let setup = RateSetup {
        eps: c.eps.clone(),
        radius: c.rate_radius,
        horizon: c.rate_horizon,
        samples: c.rate_samples.unwrap_or(c.samples),
        base_seed: c.base_seed,
        disc: ctx.cfg.discretization(),
        h_bar,
    };
    let r = rate_experiment(&ctx.gh, &ctx.family, theta, &setup, &ctx.pool)?;
    if ctx.wants(Format::Csv) {
        ctx.out.csv("rate.csv", &RATE_HEADER, rate_rows(&r))?;
    }
    if ctx.wants(Format::Json) {
        ctx.out
            .json("rate.json", "rate", json!({"h_bar": h_bar, "report": &r}))?;
    }
    let slope = r.slope.map(|s| s.slope);
    let verdict = match r.verdict {
        Verdict::Pass => "pass".to_string(),
        Verdict::Fail => "FAIL".to_string(),
        Verdict::Inconclusive => "INCONCLUSIVE within error bars".to_string(),
        Verdict::Degenerate => "degenerate (no random cost), slope not tested".to_string(),
    };
    Ok(Outcome {
        ok: r.ok,
        lines: vec![
            format!("rate slope {slope:?} +- {}: {verdict}", r.slope_se),
            format!(
                "split-sample K = {}; exceedances within 5 eps^2: {}",
                r.k_hat, r.calibration_ok
            ),
        ],
    })
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    ok: bool,
    detail: Value,
}

/// Random probes of the growth, momentum-Lipschitz and space-Lipschitz bounds.
fn probe_bounds(gh: &GameHamiltonian, env: &Environment, beta: f64, seed: u64) -> Result<(bool, Value), LabError> {
    let dim = gh.dim();
    let b = &env.spec().bounds;
    let mut rng = SplitMix64::new(seed);
    let mut worst = [f64::NEG_INFINITY; 3];
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    for _ in 0..1000 {
        let x: Vec<f64> = (0..dim).map(|k| rng.uniform(b.lo[k], b.hi[k])).collect();
        let y: Vec<f64> = (0..dim).map(|k| rng.uniform(b.lo[k], b.hi[k])).collect();
        let p: Vec<f64> = (0..dim).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let q: Vec<f64> = (0..dim).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let hp = gh.eval_h(&x, &p, env)?;
        let hq = gh.eval_h(&x, &q, env)?;
        let hy = gh.eval_h(&y, &p, env)?;
        let dpq: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
        let dxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        worst[0] = worst[0].max(hp.abs() - beta * (1.0 + norm(&p)));
        worst[1] = worst[1].max((hp - hq).abs() - beta * norm(&dpq));
        worst[2] = worst[2].max((hp - hy).abs() - beta * norm(&dxy));
    }
    let ok = worst.iter().all(|&w| w <= 1e-12);
    Ok((
        ok,
        json!({"probes": 1000, "beta": beta, "growth_excess": worst[0], "momentum_excess": worst[1], "space_excess": worst[2]}),
    ))
}

fn verify(ctx: &Ctx) -> Result<Outcome, LabError> {
    let gh = &ctx.gh;
    let family = &ctx.family;
    let seed = derive_seed(ctx.cfg.campaign.base_seed, 7);
    let theta = &ctx.cfg.campaign.theta[0];
    let mut checks = Vec::new();

    let constants = certify_constants(gh, family, None)?;
    checks.push(Check {
        name: "orientation",
        ok: constants.is_oriented(),
        detail: json!(constants),
    });

    let probe_env = Environment::sample(family)?;
    let (ok, detail) = probe_bounds(gh, &probe_env, constants.beta, seed)?;
    checks.push(Check {
        name: "h1-h3",
        ok,
        detail,
    });

    let base = SolveConfig {
        eps: 1.0,
        datum: InitialDatum::Zero,
        ..ctx.cfg.solve_config()
    };
    let dim = base.dim();
    let rho = family.range;
    if constants.is_oriented() {
        let shift = 3.0 * rho;
        let env = env_covering(family, gh, &[&base], shift)?;
        let region = cost_region(gh, &base)?;
        let e = &constants.e;
        let mut span = [f64::INFINITY, f64::NEG_INFINITY];
        for corner in 0..(1usize << dim) {
            let s: f64 = (0..dim)
                .map(|k| {
                    e[k] * if corner >> k & 1 == 0 {
                        region.lo[k]
                    } else {
                        region.hi[k]
                    }
                })
                .sum();
            span = [span[0].min(s), span[1].max(s)];
        }
        let w = (span[1] - span[0]) / 3.0;
        let sh: Vec<f64> = (0..dim).map(|k| shift * e[k]).collect();
        let r = strip_experiment(gh, &env, span[0] + w, span[0] + 2.0 * w, &sh, theta, &base)?;
        checks.push(Check {
            name: "strip",
            ok: r.ok,
            detail: json!(r),
        });
    }

    let shifted = shift_momentum(gh, theta)?;
    let lip_cfg = base.clone().with_datum(InitialDatum::Linear { theta: theta.clone() });
    let env = env_covering(family, gh, &[&lip_cfg], 0.0)?;
    let traj = solve_trajectory(gh, &env, &lip_cfg)?;
    let lip = check_lipschitz(&traj, &constants, lip_cfg.datum.lipschitz(dim));
    checks.push(Check {
        name: "lipschitz",
        ok: lip.ok,
        detail: json!(lip),
    });

    let capped = InitialDatum::CappedNorm { cap: 1.0 };
    let below = check_comparison(&InitialDatum::Zero, &capped, gh, &env, &base)?;
    let above = check_comparison(&capped, &InitialDatum::Zero, gh, &env, &base)?;
    checks.push(Check {
        name: "comparison",
        ok: below.ok && above.ok,
        detail: json!({"zero_vs_capped": below, "capped_vs_zero": above}),
    });

    let eps = 0.5;
    let scaled = SolveConfig {
        dt: base.dt * eps,
        dx: base.dx * eps,
        horizon: base.horizon * eps,
        eps,
        report: Bounds {
            lo: base.report.lo.iter().map(|v| v * eps).collect(),
            hi: base.report.hi.iter().map(|v| v * eps).collect(),
        },
        ..base.clone()
    };
    let unit = scaled.unit_scale();
    let env = env_covering(family, &shifted, &[&scaled, &unit], 0.0)?;
    let s = check_scaling(gh, &env, theta, &scaled, &unit)?;
    checks.push(Check {
        name: "scaling",
        ok: s.max_abs_diff <= 1e-9,
        detail: json!(s),
    });

    match &ctx.cfg.hamiltonian {
        HamiltonianBlock::Localized { v, .. } => {
            let rep = verify_localization(gh, &probe_env, 200, seed)?;
            let vnorm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            checks.push(Check {
                name: "localization",
                ok: constants.delta == vnorm,
                detail: json!({"report": rep, "delta": constants.delta, "v_norm": vnorm}),
            });
        }
        _ => checks.push(Check {
            name: "localization",
            ok: true,
            detail: json!({"skipped": "the Hamiltonian is not a localized one"}),
        }),
    }

    let ok = checks.iter().all(|c| c.ok);
    let lines = checks
        .iter()
        .map(|c| format!("{} {}", if c.ok { "ok  " } else { "FAIL" }, c.name))
        .collect();
    ctx.out
        .json("verify.report.json", "verify", json!({"all_ok": ok, "checks": checks}))?;
    Ok(Outcome { ok, lines })
}
