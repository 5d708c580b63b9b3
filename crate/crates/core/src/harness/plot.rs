use super::table::ResultTable;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    RiskVsSignal,
    RiskVsN,
    MxCurve,
}

impl PlotKind {
    pub fn required_columns(self) -> &'static [&'static str] {
        match self {
            PlotKind::RiskVsSignal => &["signal", "rsup", "bound"],
            PlotKind::RiskVsN => &["n", "bayes_risk", "oracle_risk", "bound"],
            PlotKind::MxCurve => &["x", "m_x"],
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "risk_vs_signal" => Ok(PlotKind::RiskVsSignal),
            "risk_vs_n" => Ok(PlotKind::RiskVsN),
            "mx_curve" => Ok(PlotKind::MxCurve),
            _ => Err(Error::invalid("kind", format!("unknown plot kind {s:?}"))),
        }
    }
}

/// A standalone matplotlib script that reads `csv_path` (relative to the
/// script's working directory) and draws the requested figure.
pub fn emit_plot_script(table: &ResultTable, kind: PlotKind, csv_path: &str) -> Result<String> {
    let missing: Vec<&str> = kind
        .required_columns()
        .iter()
        .copied()
        .filter(|c| table.column_index(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::invalid(
            "table",
            format!("missing columns: {}", missing.join(", ")),
        ));
    }

    let mut s = String::new();
    s.push_str("import csv\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    writeln!(s, "CSV = {csv_path:?}").unwrap();
    s.push_str(
        "\nwith open(CSV, newline=\"\") as fh:\n    rows = list(csv.DictReader(line for line in fh if not line.startswith(\"#\")))\n",
    );
    s.push_str("if rows and \"row_type\" in rows[0]:\n    rows = [r for r in rows if r[\"row_type\"] == \"aggregate\"]\n\n");
    s.push_str("def col(name):\n    return [float(r[name]) if r[name] else float(\"nan\") for r in rows]\n\n");
    s.push_str("fig, ax = plt.subplots()\n");
    let out = match kind {
        PlotKind::RiskVsSignal => {
            s.push_str("order = sorted(range(len(rows)), key=lambda i: col(\"signal\")[i])\n");
            s.push_str("x = [col(\"signal\")[i] for i in order]\n");
            s.push_str(
                "ax.plot(x, [col(\"rsup\")[i] for i in order], \"o-\", label=\"FDR + FNR\")\n",
            );
            s.push_str("ax.plot(x, [col(\"bound\")[i] for i in order], \"--\", label=\"bound\")\n");
            s.push_str("ax.set_xlabel(\"signal magnitude\")\nax.set_ylabel(\"risk\")\n");
            "risk_vs_signal.png"
        }
        PlotKind::RiskVsN => {
            s.push_str("order = sorted(range(len(rows)), key=lambda i: col(\"n\")[i])\n");
            s.push_str("x = [col(\"n\")[i] for i in order]\n");
            s.push_str("for name in (\"bayes_risk\", \"oracle_risk\", \"bound\"):\n");
            s.push_str("    ax.plot(x, [col(name)[i] for i in order], \"o-\", label=name)\n");
            s.push_str("ax.set_xscale(\"log\")\nax.set_yscale(\"log\")\n");
            s.push_str("ax.set_xlabel(\"n\")\nax.set_ylabel(\"risk\")\n");
            "risk_vs_n.png"
        }
        PlotKind::MxCurve => {
            s.push_str("ax.plot(col(\"x\"), col(\"m_x\"), \"-\", label=\"m_x\")\n");
            s.push_str("ax.set_xlabel(\"x\")\nax.set_ylabel(\"m_x\")\nax.set_ylim(0, 1)\n");
            "mx_curve.png"
        }
    };
    s.push_str("ax.legend()\n");
    writeln!(s, "fig.savefig({out:?}, dpi=150)").unwrap();
    Ok(s)
}
