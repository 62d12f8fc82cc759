//! Text and JSON rendering of solutions and KKT reports.

use serde_json::{json, Value};

use mimocap_core::{
    ChannelGram, ConstraintRegime, CovarianceSolution, HermitianMatrix, KktReport, PowerBudget,
    Provenance,
};

/// 12 significant digits, locale-independent. Negative zero prints as zero.
fn sig12(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

fn regime_name(regime: ConstraintRegime) -> &'static str {
    match regime {
        ConstraintRegime::TpcOnly => "tpc",
        ConstraintRegime::PacOnly => "pac",
        ConstraintRegime::Joint => "joint",
    }
}

fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::ClosedFormWf => "closed-form water-filling",
        Provenance::ClosedFormPac => "closed-form PAC",
        Provenance::ClosedFormJoint => "closed-form joint",
        Provenance::NumericalOracle => "numerical oracle",
    }
}

/// Matrix as nested `[re, im]` pairs, the covariance-file convention.
pub fn matrix_json(r: &HermitianMatrix) -> Value {
    let m = r.dim();
    let rows: Vec<Value> = (0..m)
        .map(|i| {
            let row: Vec<Value> = (0..m)
                .map(|j| {
                    let z = r.get(i, j);
                    json!([z.re, z.im])
                })
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

pub struct SolveRendering<'a> {
    pub label: Option<&'a str>,
    pub regime: ConstraintRegime,
    pub budget: &'a PowerBudget,
    pub gram: &'a ChannelGram,
    pub solution: &'a CovarianceSolution,
    pub kkt: &'a KktReport,
    pub bits: bool,
}

impl SolveRendering<'_> {
    pub fn to_json(&self) -> Value {
        let sol = self.solution;
        let mut value = json!({
            "label": self.label,
            "dim": self.gram.dim(),
            "regime": regime_name(self.regime),
            "provenance": provenance_name(sol.provenance),
            "capacity_nats": sol.capacity,
            "lambda": sol.lambda,
            "lambda_i": sol.lambda_i.iter().cloned().collect::<Vec<f64>>(),
            "per_antenna_powers": sol.per_antenna_powers().iter().cloned().collect::<Vec<f64>>(),
            "trace": sol.r.trace(),
            "tpc_active": sol.tpc_active,
            "pac_active": sol.pac_active,
            "r": matrix_json(&sol.r),
            "kkt": kkt_json(self.kkt),
        });
        if self.bits {
            value["capacity_bits"] = json!(sol.capacity / std::f64::consts::LN_2);
        }
        value
    }

    pub fn to_text(&self) -> String {
        let sol = self.solution;
        let mut out = String::new();
        if let Some(label) = self.label {
            out.push_str(&format!("scenario: {label}\n"));
        }
        out.push_str(&format!("regime: {}\n", regime_name(self.regime)));
        out.push_str(&format!(
            "provenance: {}\n",
            provenance_name(sol.provenance)
        ));
        if self.bits {
            out.push_str(&format!(
                "capacity: {} bits\n",
                sig12(sol.capacity / std::f64::consts::LN_2)
            ));
        } else {
            out.push_str(&format!("capacity: {} nats\n", sig12(sol.capacity)));
        }
        out.push_str(&format!("lambda (TPC multiplier): {}\n", sig12(sol.lambda)));
        out.push_str(&format!(
            "lambda_i (PAC multipliers): [{}]\n",
            sol.lambda_i
                .iter()
                .map(|&l| sig12(l))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out.push_str(&format!(
            "per-antenna powers: [{}]   (P = {})\n",
            sol.per_antenna_powers()
                .iter()
                .map(|&p| sig12(p))
                .collect::<Vec<_>>()
                .join(", "),
            self.budget.p_antenna()
        ));
        out.push_str(&format!(
            "trace: {}   (P_T = {}, TPC {})\n",
            sig12(sol.r.trace()),
            self.budget.p_total(),
            if sol.tpc_active { "active" } else { "inactive" }
        ));
        out.push_str(&format!(
            "pac activity: [{}]\n",
            sol.pac_active
                .iter()
                .map(|&a| if a { "active" } else { "inactive" })
                .collect::<Vec<_>>()
                .join(", ")
        ));
        out.push_str("R (real part):\n");
        out.push_str(&matrix_text(&sol.r, false));
        out.push_str("R (imaginary part):\n");
        out.push_str(&matrix_text(&sol.r, true));
        out.push_str(&kkt_text(self.kkt));
        out
    }
}

fn matrix_text(r: &HermitianMatrix, imaginary: bool) -> String {
    let m = r.dim();
    let mut out = String::new();
    for i in 0..m {
        let row: Vec<String> = (0..m)
            .map(|j| {
                let z = r.get(i, j);
                format!("{:>20}", sig12(if imaginary { z.im } else { z.re }))
            })
            .collect();
        out.push_str(&format!("  {}\n", row.join(" ")));
    }
    out
}

pub fn kkt_json(report: &KktReport) -> Value {
    json!({
        "pass": report.pass,
        "stationarity_residual": report.stationarity_residual,
        "complementary_residuals": report.complementary_residuals,
        "primal_violation": report.primal_violation,
        "dual_violation": report.dual_violation,
        "max_residual": report.max_residual(),
        "scale": report.scale,
    })
}

pub fn kkt_text(report: &KktReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "KKT: {} (max residual {:.3e}, scale {:.3e})\n",
        if report.pass { "pass" } else { "FAIL" },
        report.max_residual(),
        report.scale
    ));
    out.push_str(&format!(
        "  stationarity residual:     {:.6e}\n",
        report.stationarity_residual
    ));
    out.push_str(&format!(
        "  complementary (M R):       {:.6e}\n",
        report.complementary_residuals[0]
    ));
    out.push_str(&format!(
        "  complementary (TPC):       {:.6e}\n",
        report.complementary_residuals[1]
    ));
    out.push_str(&format!(
        "  complementary (PAC, max):  {:.6e}\n",
        report.complementary_residuals[2]
    ));
    out.push_str(&format!(
        "  primal violation:          {:.6e}\n",
        report.primal_violation
    ));
    out.push_str(&format!(
        "  dual violation:            {:.6e}\n",
        report.dual_violation
    ));
    out
}
