//! Command-line front end for the positional-goods toolkit: solves for
//! optimal mechanisms, emits approximation-ratio tables, and runs the
//! verification battery.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posmech::{
    best_menu_exhaustive, best_menu_search, check_weak_majorization, evaluate, ic_check,
    negative_status_optimum, optimal_exclusion, phi_transformed_optimum, revmax_no_exclusion,
    single_good_optimum, social_optimum, suffering_optimum, two_level_optimum, DiscreteEconomy,
    DiscreteMechanism, Mechanism, Objective, PartitionMenu, PhiTransform, StatusAllocation,
    StatusMode, TypeDistribution, ValueFunction,
};

#[derive(Parser)]
#[command(name = "posmech", version, about = "Optimal mechanisms for positional goods")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for an optimal mechanism and write mechanism.csv / report.json.
    Solve(RunArgs),
    /// Emit the posted-price approximation-ratio table (ratio.csv).
    Ratio(RunArgs),
    /// Run the verification battery and write verify.json.
    Verify(RunArgs),
}

#[derive(Args, Default, Clone)]
struct RunArgs {
    /// TOML config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Distribution spec: uniform(a,b), exp(rate), power(beta),
    /// pareto(shape,scale), empirical(path.csv).
    #[arg(long)]
    dist: Option<String>,
    /// Value function spec: zero, const(c), linear(a), poly(c0,c1,...).
    #[arg(long)]
    value: Option<String>,
    /// Objective: revenue, cs, or welfare.
    #[arg(long)]
    objective: Option<String>,
    /// Welfare weight on revenue (welfare objective only).
    #[arg(long)]
    lambda: Option<f64>,
    /// Forbid exclusion; the lowest level is free.
    #[arg(long)]
    no_exclusion: bool,
    /// Restrict to nonnegative prices (cs / welfare objectives).
    #[arg(long)]
    nonneg_prices: bool,
    /// Same-level status weighting in [0, 1].
    #[arg(long)]
    gamma: Option<f64>,
    /// Status transform: identity, sqrt, pow(k).
    #[arg(long)]
    phi: Option<String>,
    /// Suffering regime (value slope <= -1 everywhere).
    #[arg(long)]
    suffering: bool,
    /// Allow negative statuses down to -M (waiting-time construction).
    #[arg(long, value_name = "M")]
    neg_status: Option<f64>,
    /// Output grid size (rows of mechanism.csv).
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, serde::Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dist: Option<String>,
    value: Option<String>,
    objective: Option<String>,
    lambda: Option<f64>,
    no_exclusion: Option<bool>,
    nonneg_prices: Option<bool>,
    gamma: Option<f64>,
    phi: Option<String>,
    suffering: Option<bool>,
    neg_status: Option<f64>,
    grid: Option<usize>,
    out: Option<String>,
}

/// Fully resolved run configuration (flags over file over defaults).
#[derive(Debug, Clone, serde::Serialize)]
struct RunConfig {
    dist: String,
    value: String,
    objective: String,
    lambda: f64,
    no_exclusion: bool,
    nonneg_prices: bool,
    gamma: f64,
    phi: String,
    suffering: bool,
    neg_status: Option<f64>,
    grid: usize,
    out: PathBuf,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }
}

impl From<posmech::Error> for Failure {
    fn from(e: posmech::Error) -> Self {
        use posmech::Error::*;
        let code = match &e {
            Parse(_) | InvalidParameter(_) | WeightSum { .. } | InvalidValueFunction(_) => 2,
            Inapplicable(_) | NotSuffering | UnboundedSupport => 3,
            _ => 4,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(4, format!("io error: {e}"))
    }
}

fn resolve(args: &RunArgs) -> Result<RunConfig, Failure> {
    let file: FileConfig = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::new(2, format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Failure::new(2, format!("config: {e}")))?
        }
        None => FileConfig::default(),
    };
    let objective = args
        .objective
        .clone()
        .or(file.objective)
        .unwrap_or_else(|| "revenue".into());
    if !matches!(objective.as_str(), "revenue" | "cs" | "welfare") {
        return Err(Failure::new(
            2,
            format!("unknown objective '{objective}' (expected revenue, cs, or welfare)"),
        ));
    }
    let gamma = args.gamma.or(file.gamma).unwrap_or(0.5);
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Failure::new(2, format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(RunConfig {
        dist: args
            .dist
            .clone()
            .or(file.dist)
            .unwrap_or_else(|| "uniform(0,1)".into()),
        value: args.value.clone().or(file.value).unwrap_or_else(|| "zero".into()),
        objective,
        lambda: args.lambda.or(file.lambda).unwrap_or(1.0),
        no_exclusion: args.no_exclusion || file.no_exclusion.unwrap_or(false),
        nonneg_prices: args.nonneg_prices || file.nonneg_prices.unwrap_or(false),
        gamma,
        phi: args
            .phi
            .clone()
            .or(file.phi)
            .unwrap_or_else(|| "identity".into()),
        suffering: args.suffering || file.suffering.unwrap_or(false),
        neg_status: args.neg_status.or(file.neg_status),
        grid: args.grid.or(file.grid).unwrap_or(2048),
        out: args
            .out
            .clone()
            .or(file.out.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out")),
    })
}

/// 12-significant-digit deterministic formatting for CSV output.
fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000e0".into();
    }
    format!("{x:.11e}")
}

fn write_rows_csv(path: &Path, rows: &[posmech::MechanismRow]) -> Result<(), Failure> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "theta,s,p,u\n")?;
    for r in rows {
        write!(
            f,
            "{},{},{},{}\n",
            fmt12(r.theta),
            fmt12(r.s),
            fmt12(r.p),
            fmt12(r.u)
        )?;
    }
    Ok(())
}

/// Trapezoid aggregates over sampled rows in CDF weight; used for the
/// round-trip invariant (re-ingesting the CSV reproduces these numbers).
fn row_aggregates(rows: &[posmech::MechanismRow], dist: &TypeDistribution) -> (f64, f64) {
    let mut rev = 0.0;
    let mut cs = 0.0;
    for w in rows.windows(2) {
        let dw = dist.cdf(w[1].theta) - dist.cdf(w[0].theta);
        rev += 0.5 * (w[0].p + w[1].p) * dw;
        cs += 0.5 * (w[0].u + w[1].u) * dw;
    }
    (rev, cs)
}

fn parse_rows_csv(path: &Path) -> Result<Vec<posmech::MechanismRow>, Failure> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Failure::new(2, format!("{}: bad row {}", path.display(), i + 1)));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
        rows.push(posmech::MechanismRow { theta: nums[0], s: nums[1], p: nums[2], u: nums[3] });
    }
    Ok(rows)
}

fn cmd_solve(cfg: &RunConfig) -> Result<(), Failure> {
    let dist = TypeDistribution::parse(&cfg.dist)?;
    let v = ValueFunction::parse(&cfg.value)?;
    let phi = PhiTransform::parse(&cfg.phi)?;
    std::fs::create_dir_all(&cfg.out)?;

    // countervailing detection happens here for every run
    let mode = v.mode_on(&dist, 512)?;
    if cfg.suffering && mode != posmech::ValueMode::Suffering {
        return Err(posmech::Error::NotSuffering.into());
    }

    let mut extra = serde_json::Map::new();

    if cfg.suffering {
        let opt = suffering_optimum(&dist, &v)?;
        let rows = posmech::extensions::suffering_rows(&dist, &v, opt.cutoff, cfg.grid);
        write_rows_csv(&cfg.out.join("mechanism.csv"), &rows)?;
        let (rev_rows, cs_rows) = row_aggregates(&rows, &dist);
        let report = serde_json::json!({
            "config": cfg,
            "suffering": {
                "cutoff": opt.cutoff,
                "revenue": opt.revenue,
                "no_exclusion_condition": opt.no_exclusion_condition,
                "single_good": opt.single_good,
                "cs_max_mode": opt.cs_max_mode,
            },
            "row_aggregates": {"revenue": rev_rows, "consumer_surplus": cs_rows},
            "classification": dist.classify(),
        });
        std::fs::write(
            cfg.out.join("report.json"),
            serde_json::to_string_pretty(&report).unwrap(),
        )?;
        return Ok(());
    }

    let mech: Mechanism = if let Some(m) = cfg.neg_status {
        let bound = if m > 0.0 { Some(m) } else { None };
        let opt = negative_status_optimum(&dist, &v, bound)?;
        extra.insert("negative_status".into(), serde_json::json!({
            "revenue": opt.revenue,
            "consumer_surplus": opt.consumer_surplus,
            "delta_revenue_vs_exclusion": opt.delta_revenue_vs_exclusion,
            "delta_cs_vs_exclusion": opt.delta_cs_vs_exclusion,
            "switch": opt.switch,
        }));
        opt.mech
    } else if !phi.is_identity() {
        let opt = phi_transformed_optimum(&dist, &v, &phi)?;
        extra.insert("phi".into(), serde_json::json!({
            "cutoff": opt.cutoff,
            "revenue": opt.revenue,
            "conditions": posmech::phi_condition_check(&dist, &phi, cfg.lambda),
        }));
        opt.mech
    } else {
        match cfg.objective.as_str() {
            "revenue" => {
                if cfg.no_exclusion {
                    let (mech, max_r) = revmax_no_exclusion(&dist, &v);
                    extra.insert("no_exclusion_revenue".into(), serde_json::json!(max_r));
                    mech
                } else {
                    let opt = optimal_exclusion(&dist, &v);
                    let (_, max_r) = revmax_no_exclusion(&dist, &v);
                    let gain_pct = if max_r.abs() > 1e-12 {
                        (opt.revenue / max_r - 1.0) * 100.0
                    } else {
                        f64::NAN
                    };
                    extra.insert("cutoff".into(), serde_json::json!(opt.cutoff));
                    extra.insert("no_exclusion_revenue".into(), serde_json::json!(max_r));
                    extra.insert("exclusion_gain_pct".into(), serde_json::json!(gain_pct));
                    let u0 = v.v(opt.cutoff);
                    Mechanism::from_alloc(opt.alloc, u0)
                }
            }
            "cs" => {
                if cfg.nonneg_prices {
                    posmech::cs_max_nonneg_price(&dist, &v)?
                } else {
                    posmech::cs_max_budget_balanced(&dist)
                }
            }
            "welfare" => social_optimum(&dist, &v, cfg.lambda, cfg.nonneg_prices)?,
            _ => unreachable!("objective validated in resolve"),
        }
    };

    let report = evaluate(&mech, &dist, &v, cfg.lambda)?;
    let rows = mech.rows(&dist, &v, cfg.grid);
    write_rows_csv(&cfg.out.join("mechanism.csv"), &rows)?;
    // recompute the row aggregates from the rounded values that were
    // actually written, so re-ingestion reproduces them bit-for-bit
    let written = parse_rows_csv(&cfg.out.join("mechanism.csv"))?;
    let (rev_rows, cs_rows) = row_aggregates(&written, &dist);

    let classification = dist.classify();
    if !classification.regular {
        let cutoff = mech.alloc.exclusion_cutoff;
        let res = posmech::iron(&dist, cutoff, posmech::ironing::HULL_GRID);
        let mut f = std::io::BufWriter::new(std::fs::File::create(cfg.out.join("hull.csv"))?);
        write!(f, "tau,jtilde,hull\n")?;
        for i in 0..res.grid.len() {
            write!(
                f,
                "{},{},{}\n",
                fmt12(res.grid[i]),
                fmt12(res.jtilde[i]),
                fmt12(res.hull[i])
            )?;
        }
    }

    let json = serde_json::json!({
        "config": cfg,
        "revenue": report.revenue,
        "consumer_surplus": report.consumer_surplus,
        "social_welfare": report.social_welfare,
        "lambda": report.lambda,
        "exclusion_mass": report.exclusion_mass,
        "expected_status": report.expected_status,
        "min_utility": report.min_utility,
        "row_aggregates": {"revenue": rev_rows, "consumer_surplus": cs_rows},
        "classification": classification,
        "extras": extra,
    });
    std::fs::write(
        cfg.out.join("report.json"),
        serde_json::to_string_pretty(&json).unwrap(),
    )?;
    Ok(())
}

fn cmd_ratio(cfg: &RunConfig) -> Result<(), Failure> {
    std::fs::create_dir_all(&cfg.out)?;
    let specs: Vec<String> = if cfg.dist != "uniform(0,1)" {
        vec![cfg.dist.clone()]
    } else {
        vec![
            "uniform(0,1)".into(),
            "exp(1)".into(),
            "power(0.25)".into(),
            "power(0.5)".into(),
            "power(1)".into(),
            "power(2)".into(),
            "power(4)".into(),
            "pareto(2,1)".into(),
        ]
    };
    let v = ValueFunction::parse(&cfg.value)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(cfg.out.join("ratio.csv"))?);
    if cfg.no_exclusion {
        write!(f, "distribution,r2,max_r,ratio\n")?;
        for spec in &specs {
            let dist = TypeDistribution::parse(spec)?;
            let tl = two_level_optimum(&dist);
            write!(
                f,
                "{spec},{},{},{}\n",
                fmt12(tl.r2),
                fmt12(tl.max_r),
                fmt12(tl.ratio)
            )?;
        }
    } else {
        write!(f, "distribution,r1,max_r,ratio\n")?;
        for spec in &specs {
            let dist = TypeDistribution::parse(spec)?;
            let sg = single_good_optimum(&dist, &v);
            let max_r = sg.revenue / sg.ratio;
            write!(
                f,
                "{spec},{},{},{}\n",
                fmt12(sg.revenue),
                fmt12(max_r),
                fmt12(sg.ratio)
            )?;
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct Check {
    name: &'static str,
    status: &'static str,
    margin: f64,
    detail: String,
}

fn check(name: &'static str, pass: bool, margin: f64, detail: String) -> Check {
    Check {
        name,
        status: if pass { "pass" } else { "fail" },
        margin,
        detail,
    }
}

fn cmd_verify(cfg: &RunConfig) -> Result<(), Failure> {
    std::fs::create_dir_all(&cfg.out)?;
    let uniform = TypeDistribution::uniform(0.0, 1.0).map_err(Failure::from)?;
    let vzero = ValueFunction::zero();
    let mut checks: Vec<Check> = Vec::new();

    // 1. constructed allocations are feasible
    {
        let menu = PartitionMenu::new(vec![0.0, 0.4, 1.0]).map_err(Failure::from)?;
        let allocs = vec![
            StatusAllocation::full_separation(&uniform, 0.5),
            StatusAllocation::total_pooling(&uniform, 0.25),
            StatusAllocation::induced(&menu, &uniform, StatusMode::Quantile, cfg.gamma)
                .map_err(Failure::from)?,
        ];
        let mut worst = 0.0_f64;
        let mut all = true;
        for a in &allocs {
            let rep = check_weak_majorization(&a, &uniform, 1e-8).map_err(Failure::from)?;
            all &= rep.feasible;
            worst = worst.max(rep.worst_violation);
        }
        checks.push(check(
            "feasibility_constructed",
            all,
            worst,
            format!("{} allocations, worst violation {worst:.3e}", allocs.len()),
        ));
    }

    // 2. an infeasible allocation is detected
    {
        let mut bad = StatusAllocation::total_pooling(&uniform, 0.0);
        if let Some(posmech::Segment::Pool { level, .. }) = bad.segments.first_mut() {
            *level = 0.8;
        }
        let rep = check_weak_majorization(&bad, &uniform, 1e-8).map_err(Failure::from)?;
        checks.push(check(
            "feasibility_fault_detected",
            !rep.feasible && rep.worst_violation > 0.01,
            rep.worst_violation,
            format!("pool at level 0.8 flagged with violation {:.3e}", rep.worst_violation),
        ));
    }

    // 3. envelope payments are incentive compatible at K = 500
    let econ = DiscreteEconomy::discretize(&uniform, &vzero, 500).map_err(Failure::from)?;
    let opt = optimal_exclusion(&uniform, &vzero);
    let mech = Mechanism::from_alloc(opt.alloc.clone(), 0.0);
    let d = DiscreteMechanism::from_mechanism(&mech, &uniform, &vzero, &econ);
    {
        let rep = ic_check(&d, &econ, 1e-7);
        checks.push(check(
            "ic_envelope_k500",
            rep.ok,
            rep.worst_deviation,
            format!("worst deviation {:.3e}", rep.worst_deviation),
        ));
    }

    // 4. a tampered price is caught
    {
        let mut bad = d.clone();
        if let Some(p) = bad.payment.last_mut() {
            *p *= 0.9;
        }
        let rep = ic_check(&bad, &econ, 1e-7);
        checks.push(check(
            "ic_fault_detected",
            !rep.ok,
            rep.worst_deviation,
            format!("top price cut 10%, worst deviation {:.3e}", rep.worst_deviation),
        ));
    }

    // 5. discrete search agrees with the analytic optimum
    {
        let econ40 = DiscreteEconomy::discretize(&uniform, &vzero, 40).map_err(Failure::from)?;
        let res =
            best_menu_search(&econ40, Objective::Revenue, 40, true).map_err(Failure::from)?;
        let gap = (res.value - 5.0 / 24.0).abs();
        checks.push(check(
            "oracle_vs_analytic_k40",
            gap < 1e-2,
            gap,
            format!("search value {:.6} vs 5/24", res.value),
        ));
    }

    // 6. exhaustive enumeration agrees with the dynamic program
    {
        let econ14 = DiscreteEconomy::discretize(&uniform, &vzero, 14).map_err(Failure::from)?;
        match best_menu_exhaustive(&econ14, Objective::Revenue, 3, true) {
            Ok(ex) => {
                let dp = best_menu_search(&econ14, Objective::Revenue, 3, true)
                    .map_err(Failure::from)?;
                let gap = (ex.value - dp.value).abs();
                checks.push(check(
                    "oracle_exhaustive_agreement",
                    gap < 1e-10,
                    gap,
                    format!("K=14 m=3 gap {gap:.3e}"),
                ));
            }
            Err(posmech::Error::SizeGuard(why)) => checks.push(Check {
                name: "oracle_exhaustive_agreement",
                status: "skipped",
                margin: 0.0,
                detail: why,
            }),
            Err(e) => return Err(e.into()),
        }
    }

    // 7. refining a menu never lowers optimal-side revenue
    {
        let mut prev = f64::NEG_INFINITY;
        let mut ok = true;
        let mut worst = 0.0_f64;
        for k in 1..=8 {
            let bps: Vec<f64> = (0..=(1 << k)).map(|i| i as f64 / (1 << k) as f64).collect();
            let menu = PartitionMenu::new(bps).map_err(Failure::from)?;
            let alloc = StatusAllocation::induced(&menu, &uniform, StatusMode::Quantile, 0.5)
                .map_err(Failure::from)?;
            let rev = evaluate(&Mechanism::from_alloc(alloc, 0.0), &uniform, &vzero, 1.0)
                .map_err(Failure::from)?
                .revenue;
            if rev < prev - 1e-9 {
                ok = false;
                worst = worst.max(prev - rev);
            }
            prev = rev;
        }
        checks.push(check(
            "refinement_chain_revenue",
            ok,
            worst,
            "8-step dyadic refinement, revenue nondecreasing".into(),
        ));
    }

    // 8. lowering statuses in the suffering regime never gains revenue
    {
        let v = ValueFunction::poly(&[2.0, -1.0]);
        let gain = posmech::extensions::suffering_lowering_gain(&uniform, &v)
            .map_err(Failure::from)?;
        checks.push(check(
            "suffering_lowering_never_gains",
            gain <= 1e-9,
            gain,
            format!("best lowering gain {gain:.3e}"),
        ));
    }

    let any_fail = checks.iter().any(|c| c.status == "fail");
    let json = serde_json::json!({
        "checks": checks,
        "all_pass": !any_fail,
    });
    std::fs::write(
        cfg.out.join("verify.json"),
        serde_json::to_string_pretty(&json).unwrap(),
    )?;
    println!("{}", serde_json::to_string_pretty(&json).unwrap());
    if any_fail {
        return Err(Failure::new(4, "verification failures (see verify.json)"));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&RunConfig) -> Result<(), Failure>) = match &cli.cmd {
        Cmd::Solve(a) => (a, cmd_solve),
        Cmd::Ratio(a) => (a, cmd_ratio),
        Cmd::Verify(a) => (a, cmd_verify),
    };
    let cfg = match resolve(args) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            return ExitCode::from(f.code);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
