use super::config::{ExperimentConfig, ExperimentKind, SignalRule, SignalSection};
use super::table::{fmt_f64, fmt_opt, ResultTable};
use crate::adaptive::{
    adaptive_bayes_risk_mc, adaptive_fdr_fnr_mc, plug_in_constants, theorem3_bound, theorem4_bound,
    theorem4_rho, SimpleCount,
};
use crate::error::{Error, Result};
use crate::prior::CertifiedConstants;
use crate::risk::{
    bayes_risk_analytic, bayes_risk_mc_shared, fdr_fnr_mc_tallies, oracle_risk, separation_rate,
    summarize, theorem1_bound, theorem2_bound, RiskReport, SparseSignal, Tally,
};
use crate::shrinkage::{calibrate_c1, ShrinkageCurve};
use crate::testing::{RejectionRule, TwoGroupModel};

pub const RISK_COLUMNS: &[&str] = &[
    "row_type",
    "n",
    "p",
    "alpha",
    "signal",
    "x_star",
    "replicate",
    "p_hat",
    "type1",
    "type2",
    "bayes_risk",
    "oracle_risk",
    "bound",
    "fdr",
    "fnr",
    "rsup",
    "se_type1",
    "se_type2",
    "se_bayes_risk",
    "se_fdr",
    "se_fnr",
    "se_rsup",
    "within_bound",
    "seed",
    "note",
];

/// C₁ calibration grid step.
const C1_STEP: f64 = 0.01;

#[derive(Debug)]
pub struct ExperimentOutcome {
    /// Everything computed before any failure, ending in a `failure` row if one occurred.
    pub table: ResultTable,
    pub error: Option<Error>,
}

/// Run every parameter point of `config`. Rows come out in config order and
/// are bit-identical across runs and thread counts.
pub fn run_experiment(config: &ExperimentConfig) -> ExperimentOutcome {
    let mut table = ResultTable::new(RISK_COLUMNS);
    table
        .header_comments
        .push(format!("experiment {}", config.experiment.id));
    table.header_comments.push(config.to_toml_string());
    let mut sink = Sink { table, config };
    let error = run_points(&mut sink).err();
    if let Some(e) = &error {
        sink.push(&[("row_type", "failure".into()), ("note", e.to_string())]);
    }
    ExperimentOutcome {
        table: sink.table,
        error,
    }
}

struct Sink<'a> {
    table: ResultTable,
    config: &'a ExperimentConfig,
}

impl Sink<'_> {
    fn push(&mut self, fields: &[(&str, String)]) {
        let mut row = vec![String::new(); self.table.columns.len()];
        for (name, value) in fields {
            let i = self.table.column_index(name).expect("known column");
            row[i] = value.clone();
        }
        row[self.table.column_index("seed").unwrap()] = self.config.seed().to_string();
        self.table.push(row);
    }

    fn replicate_rows(
        &mut self,
        point: &[(&str, String)],
        tallies: &[Tally],
        p_hats: Option<&[f64]>,
    ) {
        if !self.config.experiment.replicate_rows {
            return;
        }
        for (r, t) in tallies.iter().enumerate() {
            let mut fields = point.to_vec();
            fields.extend([
                ("row_type", "replicate".to_string()),
                ("replicate", r.to_string()),
                ("type1", fmt_f64(t.type1())),
                ("type2", fmt_f64(t.type2())),
                ("bayes_risk", fmt_f64(t.loss())),
                ("fdr", fmt_f64(t.fdp())),
                ("fnr", fmt_f64(t.fnp())),
                ("rsup", fmt_f64(t.fdp() + t.fnp())),
            ]);
            if let Some(p) = p_hats {
                fields.push(("p_hat", fmt_f64(p[r])));
            }
            self.push(&fields);
        }
    }

    fn aggregate_row(
        &mut self,
        point: &[(&str, String)],
        r: &RiskReport,
        extra: &[(&str, String)],
    ) {
        let mut fields = point.to_vec();
        fields.extend([
            ("row_type", "aggregate".to_string()),
            ("type1", fmt_f64(r.type1)),
            ("type2", fmt_f64(r.type2)),
            ("bayes_risk", fmt_f64(r.bayes_risk)),
            ("fdr", fmt_opt(r.fdr)),
            ("fnr", fmt_opt(r.fnr)),
            ("rsup", fmt_opt(r.rsup)),
            ("se_type1", fmt_f64(r.se.type1)),
            ("se_type2", fmt_f64(r.se.type2)),
            ("se_bayes_risk", fmt_f64(r.se.bayes_risk)),
            ("se_fdr", fmt_f64(r.se.fdr)),
            ("se_fnr", fmt_f64(r.se.fnr)),
            ("se_rsup", fmt_f64(r.se.rsup)),
        ]);
        fields.extend(extra.iter().cloned());
        self.push(&fields);
    }
}

fn run_points(sink: &mut Sink) -> Result<()> {
    let config = sink.config;
    for &n in &config.model.n {
        for p in config.model.p_values(n) {
            match (config.experiment.kind, &config.signal) {
                (ExperimentKind::Bayes, _) => bayes_point(sink, n, p)?,
                (ExperimentKind::Minimax, Some(signal)) => minimax_point(sink, signal, n, p)?,
                (ExperimentKind::Adaptive, None) => adaptive_bayes_point(sink, n, p)?,
                (ExperimentKind::Adaptive, Some(signal)) => {
                    adaptive_minimax_point(sink, signal, n, p)?
                }
                (ExperimentKind::Minimax, None) => return Err(Error::invalid("signal", "missing")),
            }
        }
    }
    Ok(())
}

fn base_fields(config: &ExperimentConfig, n: u64, p: f64) -> Vec<(&'static str, String)> {
    vec![
        ("n", n.to_string()),
        ("p", fmt_f64(p)),
        ("alpha", fmt_f64(config.experiment.alpha)),
    ]
}

fn within(value: f64, bound: f64, slack: f64) -> String {
    (value <= bound * slack).to_string()
}

fn bayes_point(sink: &mut Sink, n: u64, p: f64) -> Result<()> {
    let config = sink.config;
    let e = &config.experiment;
    let prior = config.prior.with_sparsity(n, p).build()?;
    let constants = CertifiedConstants::certify(&prior)?;
    let curve = ShrinkageCurve::new(prior);
    let x_star = curve.decision_threshold(e.alpha)?;
    let model = TwoGroupModel::from_c_psi(n, p, config.model.c_psi)?;
    let bound = theorem1_bound(&constants, &model, e.alpha)?;
    let oracle = oracle_risk(&model);

    let mut point = base_fields(config, n, p);
    point.push(("x_star", fmt_f64(x_star)));

    let shared = bayes_risk_mc_shared(
        &model,
        &[RejectionRule::Above(x_star)],
        e.replicates,
        config.seed(),
    )?;
    sink.replicate_rows(&point, &shared.tallies(0), None);

    let analytic = bayes_risk_analytic(&model, x_star)?;
    let mut fields = point.clone();
    fields.extend([
        ("row_type", "analytic".to_string()),
        ("type1", fmt_f64(analytic.type1)),
        ("type2", fmt_f64(analytic.type2)),
        ("bayes_risk", fmt_f64(analytic.bayes_risk)),
        ("oracle_risk", fmt_f64(oracle)),
        ("bound", fmt_f64(bound)),
        ("within_bound", within(analytic.bayes_risk, bound, e.slack)),
    ]);
    sink.push(&fields);

    let r = shared.reports[0];
    sink.aggregate_row(
        &point,
        &r,
        &[
            ("oracle_risk", fmt_f64(oracle)),
            ("bound", fmt_f64(bound)),
            ("within_bound", within(r.bayes_risk, bound, e.slack)),
        ],
    );
    Ok(())
}

fn signal_magnitudes(
    signal: &SignalSection,
    rho: impl FnOnce() -> Result<f64>,
) -> Result<Vec<f64>> {
    Ok(match signal.rule {
        SignalRule::Fixed => signal.magnitudes.clone().unwrap_or_default(),
        SignalRule::RhoN => {
            let rho = rho()?;
            signal.scales.iter().map(|s| s * rho).collect()
        }
    })
}

fn c1_for(signal: &SignalSection, curve: &ShrinkageCurve, alpha: f64, k: f64) -> Result<f64> {
    match signal.c1 {
        Some(c1) => Ok(c1),
        None => calibrate_c1(curve, alpha, k, C1_STEP, curve.search_cap()),
    }
}

fn minimax_point(sink: &mut Sink, signal: &SignalSection, n: u64, p: f64) -> Result<()> {
    let config = sink.config;
    let e = &config.experiment;
    let prior = config.prior.with_sparsity(n, p).build()?;
    let constants = CertifiedConstants::certify(&prior)?;
    let curve = ShrinkageCurve::new(prior.clone());
    let x_star = curve.decision_threshold(e.alpha)?;
    let bound = theorem2_bound(e.lambda, e.alpha, constants.big_c, constants.c, signal.v_n)?;
    let magnitudes = signal_magnitudes(signal, || {
        let c1 = c1_for(signal, &curve, e.alpha, constants.k)?;
        separation_rate(&prior, p, c1, signal.v_n)
    })?;

    for m in magnitudes {
        let sparse = SparseSignal::flat(n as usize, p as usize, m)?;
        let tallies = fdr_fnr_mc_tallies(
            &sparse,
            RejectionRule::Above(x_star),
            e.replicates,
            config.seed(),
        )?;
        let mut point = base_fields(config, n, p);
        point.extend([("signal", fmt_f64(m)), ("x_star", fmt_f64(x_star))]);
        sink.replicate_rows(&point, &tallies, None);
        let r = summarize(&tallies);
        sink.aggregate_row(
            &point,
            &r,
            &[
                ("bound", fmt_f64(bound)),
                (
                    "within_bound",
                    within(r.rsup.unwrap_or(f64::NAN), bound, e.slack),
                ),
            ],
        );
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    crate::stats::MeanSe::from_samples(v).mean
}

fn adaptive_bayes_point(sink: &mut Sink, n: u64, p: f64) -> Result<()> {
    let config = sink.config;
    let e = &config.experiment;
    let a = config.adaptive.clone().unwrap_or_default();
    let model = TwoGroupModel::from_c_psi(n, p, config.model.c_psi)?;
    let report = adaptive_bayes_risk_mc(
        &config.prior,
        &SimpleCount,
        &model,
        e.alpha,
        e.replicates,
        config.seed(),
    )?;
    let constants = plug_in_constants(&config.prior, n, &report.distinct_p_hats())?;
    let bound = theorem3_bound(&constants, &model, e.alpha, a.c_u, a.zeta)?;

    let point = base_fields(config, n, p);
    sink.replicate_rows(&point, &report.tallies, Some(&report.p_hats));
    sink.aggregate_row(
        &point,
        &report.risk,
        &[
            ("p_hat", fmt_f64(mean(&report.p_hats))),
            ("oracle_risk", fmt_f64(oracle_risk(&model))),
            ("bound", fmt_f64(bound)),
            (
                "within_bound",
                within(report.risk.bayes_risk, bound, e.slack),
            ),
        ],
    );
    Ok(())
}

fn adaptive_minimax_point(sink: &mut Sink, signal: &SignalSection, n: u64, p: f64) -> Result<()> {
    let config = sink.config;
    let e = &config.experiment;
    let a = config.adaptive.clone().unwrap_or_default();
    let prior = config.prior.with_sparsity(n, p).build()?;
    let constants = CertifiedConstants::certify(&prior)?;
    let magnitudes = signal_magnitudes(signal, || {
        let curve = ShrinkageCurve::new(prior.clone());
        let c1 = c1_for(signal, &curve, e.alpha, constants.k)?;
        theorem4_rho(constants.k, constants.u0, n, a.gamma_n, c1, signal.v_n)
    })?;

    for m in magnitudes {
        let sparse = SparseSignal::flat(n as usize, p as usize, m)?;
        let report = adaptive_fdr_fnr_mc(
            &config.prior,
            &SimpleCount,
            &sparse,
            e.alpha,
            e.replicates,
            config.seed(),
        )?;
        let plug = plug_in_constants(&config.prior, n, &report.distinct_p_hats())?;
        let bound = theorem4_bound(e.lambda, e.alpha, plug.big_c, plug.c, a.c_u, signal.v_n)?;
        let mut point = base_fields(config, n, p);
        point.push(("signal", fmt_f64(m)));
        sink.replicate_rows(&point, &report.tallies, Some(&report.p_hats));
        sink.aggregate_row(
            &point,
            &report.risk,
            &[
                ("p_hat", fmt_f64(mean(&report.p_hats))),
                ("bound", fmt_f64(bound)),
                (
                    "within_bound",
                    within(report.risk.rsup.unwrap_or(f64::NAN), bound, e.slack),
                ),
            ],
        );
    }
    Ok(())
}

/// `x, m_x, posterior_mean` on the given grid.
pub fn mx_table(curve: &ShrinkageCurve, xs: &[f64]) -> Result<ResultTable> {
    let mut table = ResultTable::new(&["x", "m_x", "posterior_mean"]);
    for &x in xs {
        let m = curve.shrinkage_weight(x)?;
        table.push(vec![fmt_f64(x), fmt_f64(m), fmt_f64(m * x)]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            r#"
[experiment]
id = "unit"
kind = "bayes"
replicates = 1
seed = 11
{extra}

[prior]
family = "horseshoe"

[model]
n = [500]
p = [5.0]
"#
        ))
        .unwrap()
    }

    #[test]
    fn single_replicate_trivial_config() {
        let out = run_experiment(&config(""));
        assert!(out.error.is_none());
        let kinds: Vec<&str> = out.table.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(kinds, ["replicate", "analytic", "aggregate"]);
        let again = run_experiment(&config(""));
        assert_eq!(out.table.to_csv_string(), again.table.to_csv_string());
    }

    #[test]
    fn header_carries_resolved_defaults() {
        let csv = run_experiment(&config("")).table.to_csv_string();
        assert!(csv.starts_with("# experiment unit\n"));
        assert!(csv.contains("# slack = 1.05\n"));
        assert!(csv.contains("# lambda = 0.5\n"));
    }

    #[test]
    fn failure_flushes_partial_rows() {
        // p >= n/e is refused by the Condition-3 checker, after the first point is done.
        let mut c = config("");
        c.model.p = Some(vec![5.0, 400.0]);
        let out = run_experiment(&c);
        assert!(matches!(out.error, Some(Error::DegenerateSparsity { .. })));
        let kinds: Vec<&str> = out.table.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(kinds, ["replicate", "analytic", "aggregate", "failure"]);
        let last = out.table.rows.last().unwrap();
        assert!(!last[out.table.column_index("note").unwrap()].is_empty());
    }
}
