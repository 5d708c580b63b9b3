//! `shrinktest`: command-line front end for the thresholding test and its
//! risk calculations.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use shrinktest::adaptive::{
    adaptive_bayes_risk_mc, adaptive_threshold_test, plug_in_constants, theorem3_bound,
    verify_condition4, Condition4Params, SimpleCount,
};
use shrinktest::harness::{
    emit_plot_script, mx_table, run_experiment, ExperimentConfig, PlotKind, ResultTable,
};
use shrinktest::prior::{certify, CertifiedConstants, FamilyName, GridSpec, PriorSpec};
use shrinktest::risk::{
    bayes_risk_analytic, bayes_risk_mc, fdr_fnr_mc, oracle_risk, separation_rate, theorem1_bound,
    theorem2_bound, RiskReport, SparseSignal,
};
use shrinktest::shrinkage::{calibrate_c1, ShrinkageCurve};
use shrinktest::testing::{
    bayes_oracle_test, benjamini_hochberg, threshold_test, RejectionRule, TwoGroupModel,
};
use shrinktest::{Error, Result};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "shrinktest",
    version,
    about = "Shrinkage-weight thresholding tests for sparse normal means"
)]
struct Cli {
    /// Seed for Monte Carlo subcommands (overrides the config seed for `simulate`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PriorArg {
    /// Prior as `key=value,...` (e.g. `family=horseshoe,n=10000,p=100`) or `@file.toml`.
    #[arg(long)]
    prior: String,
}

impl PriorArg {
    fn spec(&self) -> Result<PriorSpec> {
        match self.prior.strip_prefix('@') {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidParameter {
                    name: "prior",
                    reason: format!("{path}: {e}"),
                })?;
                PriorSpec::from_toml_str(&text)
            }
            None => PriorSpec::parse_inline(&self.prior),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcedureArg {
    Thresholding,
    Oracle,
    Bh,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Simple,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Horseshoe,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate `m_x` and the posterior mean on a grid.
    Mx {
        #[command(flatten)]
        prior: PriorArg,
        /// Evaluation points: `a,b,c` or `start:stop:count` (overrides the range flags).
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        x_min: f64,
        #[arg(long, default_value_t = 10.0)]
        x_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Also write a plotting script for the table.
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Decision threshold `x*(α)` for one or more levels.
    Threshold {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        alpha: Vec<f64>,
    },
    /// Test each observation in a data file (`-` for stdin).
    Test {
        #[arg(long, visible_alias = "input")]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "thresholding")]
        procedure: ProcedureArg,
        /// Required for `thresholding`.
        #[arg(long)]
        prior: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Sparsity `p_n` for the oracle.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c_psi: f64,
        /// Level for Benjamini-Hochberg.
        #[arg(long, default_value_t = 0.1)]
        q: f64,
    },
    /// Certify the prior conditions; one JSON record per condition.
    CheckPrior {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long)]
        u_max: Option<f64>,
        #[arg(long)]
        u_points: Option<usize>,
    },
    /// Bayes risk under the two-group model: analytic, Monte Carlo, oracle, bound.
    RiskBayes {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long, default_value_t = 1.0)]
        c_psi: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Monte Carlo replicates (0 skips the simulation).
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        /// Full JSON record instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// FDR + FNR at a flat signal, against the separation-rate bound.
    RiskMinimax {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 3.0)]
        v_n: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        /// Signal magnitude as a multiple of `ρ_n`.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Explicit signal magnitude (overrides `--scale`).
        #[arg(long)]
        magnitude: Option<f64>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long)]
        json: bool,
    },
    /// Plug-in sparsity estimation: test a data file, or verify the estimator by simulation.
    Adaptive {
        #[arg(long, value_enum, default_value = "simple")]
        estimator: EstimatorArg,
        #[arg(long, value_enum, default_value = "horseshoe")]
        prior_family: FamilyArg,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Data to test; without it, simulate from the two-group model.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c_psi: f64,
        #[arg(long, default_value_t = 2.0)]
        c_u: f64,
        #[arg(long, default_value_t = 0.0)]
        zeta: f64,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
    },
    /// Run an experiment config and write its result table.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Write a plotting script next to the CSV.
        #[arg(long)]
        plot: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .expect("thread pool");
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn output(cli: &Cli) -> Result<Box<dyn Write>> {
    match &cli.out {
        Some(path) => Ok(Box::new(
            std::fs::File::create(path).map_err(|e| io_error("out", path, e))?,
        )),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn io_error(name: &'static str, path: &Path, e: std::io::Error) -> Error {
    Error::InvalidParameter {
        name,
        reason: format!("{}: {e}", path.display()),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    let mut out = output(cli)?;
    out.write_all(text.as_bytes())
        .map_err(|e| io_error("out", Path::new("-"), e))
}

fn read_data(path: &Path) -> Result<Vec<f64>> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| io_error("data", path, e))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| io_error("data", path, e))?;
    }
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|_| Error::InvalidParameter {
                name: "data",
                reason: format!("not a number: {s:?}"),
            })
        })
        .collect()
}

fn seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(0)
}

fn decisions_csv(data: &[f64], decisions: &[bool]) -> String {
    let mut s = String::from("index,x,decision\n");
    for (i, (x, d)) in data.iter().zip(decisions).enumerate() {
        s.push_str(&format!("{i},{x},{}\n", u8::from(*d)));
    }
    s
}

fn json_line(v: serde_json::Value) -> String {
    format!("{v}\n")
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Mx {
            prior,
            x,
            x_min,
            x_max,
            points,
            plot_script,
        } => {
            let xs = match x {
                Some(text) => parse_points(text)?,
                None => linspace(*x_min, *x_max, *points)?,
            };
            let curve = ShrinkageCurve::new(prior.spec()?.build()?);
            let table = mx_table(&curve, &xs)?;
            emit(cli, &table.to_csv_string())?;
            if let Some(path) = plot_script {
                write_plot(&table, PlotKind::MxCurve, cli.out.as_deref(), path)?;
            }
            Ok(())
        }
        Command::Threshold { prior, alpha } => {
            let curve = ShrinkageCurve::new(prior.spec()?.build()?);
            let mut s = String::from("alpha,x_star\n");
            for &a in alpha {
                s.push_str(&format!("{a},{}\n", curve.decision_threshold(a)?));
            }
            emit(cli, &s)
        }
        Command::Test {
            data,
            procedure,
            prior,
            alpha,
            p,
            c_psi,
            q,
        } => {
            let x = read_data(data)?;
            let dv = match procedure {
                ProcedureArg::Thresholding => {
                    let prior = prior.clone().ok_or(Error::InvalidParameter {
                        name: "prior",
                        reason: "required for the thresholding procedure".into(),
                    })?;
                    let curve = ShrinkageCurve::new(PriorArg { prior }.spec()?.build()?);
                    threshold_test(&curve, &x, *alpha)?
                }
                ProcedureArg::Oracle => {
                    let p = p.ok_or(Error::InvalidParameter {
                        name: "p",
                        reason: "required for the oracle".into(),
                    })?;
                    bayes_oracle_test(&TwoGroupModel::from_c_psi(x.len() as u64, p, *c_psi)?, &x)?
                }
                ProcedureArg::Bh => benjamini_hochberg(&x, *q)?,
            };
            emit(cli, &decisions_csv(&x, &dv.decisions))
        }
        Command::CheckPrior {
            prior,
            u_max,
            u_points,
        } => {
            let prior = prior.spec()?.build()?;
            let mut grid = GridSpec::default();
            if let Some(u) = u_max {
                grid.u_max = *u;
            }
            if let Some(k) = u_points {
                grid.u_points = *k;
            }
            let certs = certify(&prior, &grid)?;
            let mut s = String::new();
            for rec in certs.records() {
                s.push_str(&json_line(serde_json::to_value(rec).expect("serializable")));
            }
            emit(cli, &s)
        }
        Command::RiskBayes {
            prior,
            c_psi,
            alpha,
            replicates,
            json,
        } => {
            let prior = prior.spec()?.build()?;
            let sp = prior.sparsity();
            let constants = CertifiedConstants::certify(&prior)?;
            let curve = ShrinkageCurve::new(prior);
            let x_star = curve.decision_threshold(*alpha)?;
            let model = TwoGroupModel::from_c_psi(sp.n(), sp.p(), *c_psi)?;
            let analytic = bayes_risk_analytic(&model, x_star)?;
            let mc = if *replicates > 0 {
                Some(bayes_risk_mc(
                    &model,
                    RejectionRule::Above(x_star),
                    *replicates,
                    seed(cli),
                )?)
            } else {
                None
            };
            let bound = theorem1_bound(&constants, &model, *alpha)?;
            if !json {
                let row = RiskRow {
                    n: sp.n(),
                    p: sp.p(),
                    alpha: *alpha,
                    x_star,
                    oracle_risk: Some(oracle_risk(&model)),
                    bound,
                    seed: seed(cli),
                };
                let mut reports = vec![("analytic", &analytic)];
                if let Some(mc) = &mc {
                    reports.push(("monte_carlo", mc));
                }
                return emit(cli, &risk_csv(&row, &reports));
            }
            let v = json!({
                "n": sp.n(), "p": sp.p(), "alpha": alpha, "c_psi": c_psi, "x_star": x_star,
                "constants": constants,
                "analytic": analytic, "monte_carlo": mc,
                "oracle_risk": oracle_risk(&model),
                "bound": bound,
                "seed": seed(cli),
            });
            emit(cli, &json_line(v))
        }
        Command::RiskMinimax {
            prior,
            alpha,
            v_n,
            lambda,
            scale,
            magnitude,
            c1,
            replicates,
            json,
        } => {
            let prior = prior.spec()?.build()?;
            let sp = prior.sparsity();
            let constants = CertifiedConstants::certify(&prior)?;
            let curve = ShrinkageCurve::new(prior.clone());
            let c1 = match c1 {
                Some(c) => *c,
                None => calibrate_c1(&curve, *alpha, constants.k, 0.01, curve.search_cap())?,
            };
            let rho = separation_rate(&prior, sp.p(), c1, *v_n)?;
            let m = magnitude.unwrap_or(scale * rho);
            if sp.p().fract() != 0.0 {
                return Err(Error::InvalidParameter {
                    name: "p",
                    reason: "must be an integer here".into(),
                });
            }
            let signal = SparseSignal::flat(sp.n() as usize, sp.p() as usize, m)?;
            let report = fdr_fnr_mc(&curve, &signal, *alpha, *replicates, seed(cli))?;
            let x_star = curve.decision_threshold(*alpha)?;
            let bound = theorem2_bound(*lambda, *alpha, constants.big_c, constants.c, *v_n)?;
            if !json {
                let row = RiskRow {
                    n: sp.n(),
                    p: sp.p(),
                    alpha: *alpha,
                    x_star,
                    oracle_risk: None,
                    bound,
                    seed: seed(cli),
                };
                return emit(cli, &risk_csv(&row, &[("monte_carlo", &report)]));
            }
            let v = json!({
                "n": sp.n(), "p": sp.p(), "alpha": alpha, "c1": c1, "v_n": v_n, "rho_n": rho,
                "signal": m, "x_star": x_star,
                "report": report,
                "bound": bound,
                "seed": seed(cli),
            });
            emit(cli, &json_line(v))
        }
        Command::Adaptive {
            estimator,
            prior_family,
            alpha,
            data,
            n,
            p,
            c_psi,
            c_u,
            zeta,
            replicates,
        } => {
            let (EstimatorArg::Simple, FamilyArg::Horseshoe) = (estimator, prior_family);
            let spec = PriorSpec {
                family: Some(FamilyName::Horseshoe),
                ..Default::default()
            };
            if let Some(path) = data {
                let x = read_data(path)?;
                let out = adaptive_threshold_test(&spec, &SimpleCount, &x, *alpha)?;
                eprintln!("p_hat = {}, x_star = {}", out.estimate.p_hat, out.x_star);
                return emit(cli, &decisions_csv(&x, &out.decisions.decisions));
            }
            let p = p.unwrap_or((*n as f64).sqrt());
            let model = TwoGroupModel::from_c_psi(*n, p, *c_psi)?;
            let params = Condition4Params {
                c_u: *c_u,
                zeta: *zeta,
                ..Default::default()
            };
            let c4 = verify_condition4(
                &SimpleCount,
                &model,
                &params,
                (*replicates).max(100),
                seed(cli),
            )?;
            let risk = adaptive_bayes_risk_mc(
                &spec,
                &SimpleCount,
                &model,
                *alpha,
                *replicates,
                seed(cli),
            )?;
            let constants = plug_in_constants(&spec, *n, &risk.distinct_p_hats())?;
            let v = json!({
                "condition4": c4,
                "risk": risk.risk,
                "mean_p_hat": risk.p_hats.iter().sum::<f64>() / risk.p_hats.len() as f64,
                "constants": constants,
                "bound": theorem3_bound(&constants, &model, *alpha, *c_u, *zeta)?,
                "seed": seed(cli),
            });
            emit(cli, &json_line(v))
        }
        Command::Simulate { config, plot } => {
            let mut config = ExperimentConfig::from_path(config)?;
            if let Some(s) = cli.seed {
                config.experiment.seed = Some(s);
            }
            let kind = plot.as_deref().map(str::parse::<PlotKind>).transpose()?;
            let outcome = run_experiment(&config);
            let target = cli
                .out
                .clone()
                .or(config.experiment.output.as_ref().map(PathBuf::from));
            let text = outcome.table.to_csv_string();
            match &target {
                Some(path) => std::fs::write(path, &text).map_err(|e| io_error("out", path, e))?,
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| io_error("out", Path::new("-"), e))?,
            }
            if let (Some(kind), None) = (kind, &outcome.error) {
                let csv = target.as_deref().ok_or(Error::InvalidParameter {
                    name: "plot",
                    reason: "needs --out or experiment.output".into(),
                })?;
                write_plot(&outcome.table, kind, Some(csv), &csv.with_extension("py"))?;
            }
            outcome.error.map_or(Ok(()), Err)
        }
    }
}

const RISK_CSV_COLUMNS: &str =
    "method,n,p,alpha,x_star,type1,type2,bayes_risk,oracle_risk,bound,fdr,fnr,rsup,\
se_type1,se_type2,se_bayes_risk,se_fdr,se_fnr,se_rsup,seed";

struct RiskRow {
    n: u64,
    p: f64,
    alpha: f64,
    x_star: f64,
    oracle_risk: Option<f64>,
    bound: f64,
    seed: u64,
}

fn risk_csv(row: &RiskRow, reports: &[(&str, &RiskReport)]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut s = format!("{RISK_CSV_COLUMNS}\n");
    for (method, r) in reports {
        // Standard errors are only meaningful for simulated rows.
        let se = |v: f64| {
            if r.n_replicates > 0 {
                v.to_string()
            } else {
                String::new()
            }
        };
        let fields = [
            method.to_string(),
            row.n.to_string(),
            row.p.to_string(),
            row.alpha.to_string(),
            row.x_star.to_string(),
            r.type1.to_string(),
            r.type2.to_string(),
            r.bayes_risk.to_string(),
            opt(row.oracle_risk),
            row.bound.to_string(),
            opt(r.fdr),
            opt(r.fnr),
            opt(r.rsup),
            se(r.se.type1),
            se(r.se.type2),
            se(r.se.bayes_risk),
            if r.fdr.is_some() {
                se(r.se.fdr)
            } else {
                String::new()
            },
            if r.fnr.is_some() {
                se(r.se.fnr)
            } else {
                String::new()
            },
            if r.rsup.is_some() {
                se(r.se.rsup)
            } else {
                String::new()
            },
            row.seed.to_string(),
        ];
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

fn linspace(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(hi > lo) {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: "need at least two points and stop > start".into(),
        });
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| lo + step * i as f64).collect())
}

/// `a,b,c` or `start:stop:count`.
fn parse_points(text: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidParameter {
                name: "x",
                reason: format!("not a finite number: {t:?}"),
            })
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let count = count
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter {
                    name: "x",
                    reason: format!("bad point count {count:?}"),
                })?;
            linspace(num(lo)?, num(hi)?, count)
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(Error::InvalidParameter {
            name: "x",
            reason: "expected a,b,c or start:stop:count".into(),
        }),
    }
}

fn write_plot(
    table: &ResultTable,
    kind: PlotKind,
    csv: Option<&Path>,
    script: &Path,
) -> Result<()> {
    let csv = csv.ok_or(Error::InvalidParameter {
        name: "plot",
        reason: "the table must be written with --out".into(),
    })?;
    // The script refers to the CSV relative to its own directory.
    let rel = match (csv.parent(), script.parent()) {
        (Some(a), Some(b)) if a == b => csv
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| csv.to_path_buf()),
        _ => csv.to_path_buf(),
    };
    let text = emit_plot_script(table, kind, &rel.to_string_lossy())?;
    std::fs::write(script, text).map_err(|e| io_error("plot", script, e))
}
