use std::path::Path;
use std::sync::Arc;

use equimean::dyadics::{chain_decompose, validate_chain, Dyadic};
use equimean::homotopy::{
    fixed_set_deformation, random_dyadic_pairs, symmetrize, ContractionBuilder, Extension, FnHomotopy, Homotopy,
    Retraction,
};
use equimean::means::{
    check_anonymity, check_contractive, check_equivariance, check_strict_betweenness, check_unanimity,
    collapse_to_quasi_mean, estimate_lambda, solomonic_witness_search, LambdaEstimate, Law, QuasiMeanMap,
};
use equimean::rng;
use serde_json::{json, Value};

use crate::config::{BaseSpec, ExperimentConfig, RetractionSpec, SCHEMA};
use crate::{output, plot, Cli, CliError, Command};

/// Runs one subcommand; `Ok(passed)` on completion.
pub fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    let name = match &cli.command {
        Command::Schema => {
            print!("{SCHEMA}");
            return Ok(true);
        }
        Command::Plot { input } => return run_plot(input, &cli.out),
        Command::VerifyMean => "verify-mean",
        Command::EstimateLambda => "estimate-lambda",
        Command::Chain { .. } => "chain",
        Command::BuildHomotopy => "build-homotopy",
        Command::VerifyClaim1 => "verify-claim1",
        Command::VerifyHolder => "verify-holder",
        Command::Symmetrize => "symmetrize",
        Command::DeformFixed => "deform-fixed",
        Command::SolomonicSearch => "solomonic-search",
    };
    let mut cfg = match (&cli.config, &cli.command) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Command::Chain { s: Some(_), t: Some(_) }) => ExperimentConfig::empty(),
        (None, _) => return Err(CliError::Usage(format!("{name} needs --config <path>"))),
    };
    if let Some(exp) = &cfg.experiment {
        if exp != name {
            return Err(CliError::Config(format!("config is for `{exp}`, not `{name}`")));
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(seed) = cfg.seed {
        if let Some(lc) = cfg.lambda_config.as_mut() {
            lc.seed = seed;
        }
        if let Some(b) = cfg.budget.as_mut() {
            b.seed = seed;
        }
    }
    output::prepare_dir(&cli.out)?;
    let out = cli.out.as_path();

    let result = match &cli.command {
        Command::VerifyMean => verify_mean(&cfg),
        Command::EstimateLambda => run_estimate_lambda(&cfg, out),
        Command::Chain { s, t } => run_chain(&cfg, s.as_deref(), t.as_deref()),
        Command::BuildHomotopy => build_homotopy(&cfg, out),
        Command::VerifyClaim1 => verify_claim1(&cfg),
        Command::VerifyHolder => verify_holder(&cfg),
        Command::Symmetrize => run_symmetrize(&cfg),
        Command::DeformFixed => deform_fixed(&cfg),
        Command::SolomonicSearch => solomonic(&cfg),
        Command::Plot { .. } | Command::Schema => unreachable!("handled above"),
    };
    let (passed, mut report) = match result {
        Ok(r) => r,
        Err(e) if e.exit_code() == 1 => (false, json!({ "error": e.to_string() })),
        Err(e) => return Err(e),
    };
    report["experiment"] = json!(name);
    report["passed"] = json!(passed);
    let path = output::write_json(out, "report.json", &report)?;
    println!("{name}: {} ({})", if passed { "passed" } else { "FAILED" }, path.display());
    Ok(passed)
}

type Outcome = Result<(bool, Value), CliError>;

fn to_value(v: impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn verify_mean(cfg: &ExperimentConfig) -> Outcome {
    let p = cfg.build_mean()?;
    let space = p.space();
    let laws = match &cfg.laws {
        Some(l) => l.clone(),
        None if cfg.action.is_some() => vec![Law::M1, Law::M2, Law::Equivariance],
        None => vec![Law::M1, Law::M2],
    };
    let (tol, n) = (cfg.tol(), cfg.samples());
    let points = space.sample_seeded(cfg.seed(), n);
    let tuples = space.sample_tuples(&mut rng::seeded(cfg.seed().wrapping_add(1)), p.arity(), n);
    let mut reports = Vec::new();
    for law in laws {
        let r = match law {
            Law::M1 => check_unanimity(&p, &points, tol)?,
            Law::M2 => check_anonymity(&p, &tuples, tol)?,
            Law::Equivariance => check_equivariance(&p, &cfg.build_action()?, &tuples, tol)?,
            Law::Contractive => check_contractive(&p, &tuples, *ExperimentConfig::require(&cfg.lambda, "lambda")?, tol)?,
            Law::StrictBetweenness => check_strict_betweenness(&p, &tuples, tol)?,
        };
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed);
    Ok((passed, json!({ "mean": p.label(), "space": space.to_string(), "laws": reports })))
}

fn lambda_for(cfg: &ExperimentConfig, p: &QuasiMeanMap) -> Result<LambdaEstimate, CliError> {
    let mut lc = cfg.lambda_config.clone().unwrap_or_default();
    if let Some(seed) = cfg.seed {
        lc.seed = seed;
    }
    Ok(estimate_lambda(p, &lc)?)
}

fn run_estimate_lambda(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    let p = cfg.build_mean()?;
    let est = lambda_for(cfg, &p)?;
    let passed = cfg.lambda.is_none_or(|bound| est.lambda_hat <= bound + cfg.tol());
    let mut header = vec!["mean".to_string()];
    header.extend(LambdaEstimate::CSV_HEADER.iter().map(|s| s.to_string()));
    let mut row = vec![p.label().to_string()];
    row.extend(est.csv_record());
    output::write_csv(out, "lambda.csv", &header, [row])?;
    Ok((passed, json!({ "mean": p.label(), "space": p.space().to_string(), "estimate": est, "bound": cfg.lambda })))
}

fn parse_dyadic(s: &str) -> Result<Dyadic, CliError> {
    s.parse().map_err(|e: equimean::Error| CliError::Usage(e.to_string()))
}

fn run_chain(cfg: &ExperimentConfig, s: Option<&str>, t: Option<&str>) -> Outcome {
    let s = match s {
        Some(s) => parse_dyadic(s)?,
        None => *ExperimentConfig::require(&cfg.s, "s")?,
    };
    let t = match t {
        Some(t) => parse_dyadic(t)?,
        None => *ExperimentConfig::require(&cfg.t, "t")?,
    };
    let c = chain_decompose(s, t)?;
    let violations: Vec<String> = validate_chain(s, t, &c).iter().map(|v| v.to_string()).collect();
    let body = json!({ "s": s, "t": t, "s_chain": c.s_chain, "t_chain": c.t_chain, "violations": violations });
    println!("{}", serde_json::to_string(&body).expect("chains serialize"));
    Ok((violations.is_empty(), body))
}

/// The builder for `mean`, collapsing wider means to arity 2 and estimating `λ` when absent.
fn builder_for(cfg: &ExperimentConfig) -> Result<(ContractionBuilder, Value), CliError> {
    let mut p = cfg.build_mean()?;
    let collapsed = p.arity() > 2;
    if collapsed {
        p = collapse_to_quasi_mean(&p);
    }
    let (lambda, source) = match cfg.lambda {
        Some(l) => (l, "config"),
        None => {
            let est = lambda_for(cfg, &p)?;
            if est.lambda_hat >= 1.0 {
                return Err(CliError::Core(equimean::Error::ViolatedHypothesis {
                    law: "contractive".into(),
                    detail: format!("{} has sampled ratio {} >= 1", p.label(), est.lambda_hat),
                }));
            }
            (est.lambda_hat, "estimate")
        }
    };
    let theta = ExperimentConfig::require(&cfg.theta, "theta")?.clone();
    let b = ContractionBuilder::new(p, lambda, theta)?;
    let info = json!({
        "mean": b.mean().label(),
        "collapsed": collapsed,
        "lambda": lambda,
        "lambda_source": source,
        "alpha": b.alpha(),
        "theta": b.theta(),
        "warnings": b.warnings(),
    });
    Ok((b, info))
}

fn build_homotopy(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    let (b, mut info) = builder_for(cfg)?;
    let x = ExperimentConfig::require(&cfg.x, "x")?;
    let eps = cfg.eps.unwrap_or(1e-3);
    let steps = cfg.steps.unwrap_or(64);
    let traj = b.trajectory(x, steps, eps)?;
    let header = output::trajectory_header(x.dim());
    let csv_path = output::write_csv(out, "trajectory.csv", &header, output::trajectory_rows(&traj))?;
    if cfg.plot.unwrap_or(false) {
        let t = plot::read_trajectory(&csv_path)?;
        output::write_text(out, "trajectory.svg", &plot::render_svg(&t, &format!("{} contraction", b.mean().label())))?;
    }
    let max_err = traj.iter().map(|tp| tp.certified_error).fold(0.0, f64::max);
    info["x"] = json!(x);
    info["eps"] = json!(eps);
    info["level"] = json!(traj[0].level);
    info["holder_constant"] = json!(b.holder_constant(x));
    info["points"] = json!(traj.len());
    info["max_certified_error"] = json!(max_err);
    Ok((b.warnings().is_empty() && max_err <= eps, info))
}

fn verify_claim1(cfg: &ExperimentConfig) -> Outcome {
    let (b, mut info) = builder_for(cfg)?;
    let x = ExperimentConfig::require(&cfg.x, "x")?;
    let rep = b.verify_claim1(x, cfg.depth.unwrap_or(12))?;
    info["x"] = json!(x);
    info["claim"] = to_value(&rep);
    Ok((rep.passed, info))
}

fn verify_holder(cfg: &ExperimentConfig) -> Outcome {
    let (b, mut info) = builder_for(cfg)?;
    let x = ExperimentConfig::require(&cfg.x, "x")?;
    let pairs = random_dyadic_pairs(cfg.seed(), cfg.pairs.unwrap_or(10_000), cfg.depth.unwrap_or(12))?;
    let rep = b.verify_holder(x, &pairs)?;
    info["x"] = json!(x);
    info["depth"] = json!(cfg.depth.unwrap_or(12));
    info["holder"] = to_value(&rep);
    Ok((rep.passed, info))
}

fn optional_mean(cfg: &ExperimentConfig) -> Result<Option<QuasiMeanMap>, CliError> {
    match &cfg.mean {
        Some(m) => Ok(Some(m.build(cfg.space()?)?)),
        None => Ok(None),
    }
}

fn run_symmetrize(cfg: &ExperimentConfig) -> Outcome {
    let action = cfg.build_action()?;
    let space = cfg.space()?.clone();
    let theta = ExperimentConfig::require(&cfg.theta, "theta")?.clone();
    let base: Arc<dyn Homotopy> = match cfg.base.clone().unwrap_or(BaseSpec::StraightLine) {
        BaseSpec::StraightLine => {
            space.check_member(&theta)?;
            Arc::new(FnHomotopy::straight_line(space.clone(), move |_| theta.clone())?)
        }
        BaseSpec::Contraction { mean, lambda } => Arc::new(ContractionBuilder::new(mean.build(&space)?, lambda, theta)?),
    };
    let opts = cfg.symmetrize_options();
    let g = symmetrize(base, &action, optional_mean(cfg)?, &opts)?;
    let rep = g.report().expect("symmetrize measures").clone();
    let tol = opts.tol;
    let passed = rep.equivariance_defect <= tol
        && (rep.base_start_defect > tol || rep.start_defect <= tol)
        && (rep.base_end_spread > tol || rep.end_spread <= tol);
    Ok((passed, json!({ "action": action.label(), "symmetry": rep, "tol": tol })))
}

fn deform_fixed(cfg: &ExperimentConfig) -> Outcome {
    let action = cfg.build_action()?;
    let h = cfg.subgroup(&action)?;
    let retraction = match cfg.retraction.clone().unwrap_or(RetractionSpec::OrbitAverage) {
        RetractionSpec::OrbitAverage => Retraction::OrbitAverage,
        RetractionSpec::CoordinateZero(axis) => Retraction::CoordinateZero(axis),
    };
    let opts = cfg.symmetrize_options();
    let (_, rep) = fixed_set_deformation(&action, &h, retraction, optional_mean(cfg)?, Extension::StraightLine, &opts)
        .map_err(|e| match e {
            equimean::Error::Precondition(msg) => CliError::Core(equimean::Error::ViolatedHypothesis {
                law: "boundary data".into(),
                detail: msg,
            }),
            other => other.into(),
        })?;
    Ok((rep.passed, json!({ "action": action.label(), "subgroup": h.members(), "deformation": rep })))
}

fn solomonic(cfg: &ExperimentConfig) -> Outcome {
    let p = cfg.build_mean()?;
    let k = *ExperimentConfig::require(&cfg.threshold, "threshold")?;
    let mut budget = cfg.budget.clone().unwrap_or_default();
    if let Some(seed) = cfg.seed {
        budget.seed = seed;
    }
    let search = solomonic_witness_search(&p, k, &budget)?;
    Ok((true, json!({ "mean": p.label(), "found": search.witness.is_some(), "search": search, "budget": to_value(&budget) })))
}

fn run_plot(input: &Path, out: &Path) -> Result<bool, CliError> {
    let traj = plot::read_trajectory(input)?;
    output::prepare_dir(out)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    let path = output::write_text(out, &format!("{stem}.svg"), &plot::render_svg(&traj, stem))?;
    println!("plot: {}", path.display());
    Ok(true)
}
