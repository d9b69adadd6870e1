//! Serializable output records. Field order is declaration order and all
//! maps are ordered, so identical inputs serialize byte-identically; no
//! timestamps anywhere in the payload.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{NoiseReport, ParadoxReport};
use crate::fock::QuantumState;
use crate::pipeline::DetectionTable;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, Serialize)]
pub struct JsonComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for JsonComplex {
    fn from(c: Complex64) -> Self {
        JsonComplex { re: c.re, im: c.im }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeEntry {
    pub state: String,
    pub amp: JsonComplex,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageDump {
    pub name: String,
    pub amplitudes: Vec<AmplitudeEntry>,
}

pub fn dump_state(name: &str, state: &QuantumState) -> StageDump {
    StageDump {
        name: name.to_string(),
        amplitudes: state
            .terms()
            .map(|(basis, amp)| AmplitudeEntry {
                state: basis.ket_label(state.modes()),
                amp: amp.into(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Record<I: Serialize, R: Serialize> {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub inputs: I,
    pub results: R,
}

impl<I: Serialize, R: Serialize> Record<I, R> {
    pub fn new(command: &'static str, inputs: I, results: R) -> Self {
        Record {
            schema_version: SCHEMA_VERSION,
            command,
            inputs,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialization is infallible")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HardyInputs {
    pub alpha: JsonComplex,
    pub beta: JsonComplex,
    pub gamma: JsonComplex,
    pub q: JsonComplex,
    pub pump_n_max: u8,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HardyResults {
    pub condition5_residual: f64,
    pub cancellation_residual: f64,
    pub stages: Vec<StageDump>,
    pub probabilities: DetectionTable,
    pub noise: NoiseReport,
    pub paradox: ParadoxReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunInputs {
    pub file: String,
    pub pump_n_max: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResults {
    pub condition5_residual: Option<f64>,
    pub cancellation_residual: Option<f64>,
    pub probabilities: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageDump>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanInputs {
    pub param: String,
    pub range: (f64, f64),
    pub steps: u32,
    pub satisfy_condition5: bool,
    pub pump_n_max: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub ratio_triple: f64,
    pub ratio_two_pair: f64,
    pub p_dd: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResults {
    pub rows: Vec<ScanRow>,
    pub slope_triple: f64,
    pub slope_two_pair: f64,
}

fn fmt_amp(c: JsonComplex) -> String {
    format!("{:+.9}{:+.9}i", c.re, c.im)
}

pub fn render_stage_text(stage: &StageDump, out: &mut String) {
    out.push_str(&format!("{}:\n", stage.name));
    for entry in &stage.amplitudes {
        out.push_str(&format!("  {}  {}\n", fmt_amp(entry.amp), entry.state));
    }
}

pub fn render_hardy_text(r: &HardyResults) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "cancellation condition residual: {:.3e}\n",
        r.condition5_residual
    ));
    out.push_str(&format!(
        "surviving u_S u_I residual:      {:.3e}\n\n",
        r.cancellation_residual
    ));
    for stage in &r.stages {
        render_stage_text(stage, &mut out);
        out.push('\n');
    }
    out.push_str("coincidence probabilities:\n");
    for (s, i, p) in r.probabilities.entries() {
        out.push_str(&format!("  {:10} {p:.9}\n", format!("{s} {i}")));
    }
    out.push_str(&format!(
        "\nnoise sectors: pair {:.3e}  triple {:.3e} (ratio {:.3e})  two-pair {:.3e} (ratio {:.3e})\n",
        r.noise.pair_amp,
        r.noise.triple_amp,
        r.noise.ratio_triple,
        r.noise.two_pair_amp,
        r.noise.ratio_two_pair
    ));
    out.push_str(&format!(
        "\nparadox checks: |<u_S u_I|pair>| = {:.3e}, |<d_S v_I|signal-final>| = {:.3e}, |<v_S d_I|idler-final>| = {:.3e}, P(d_S d_I) = {:.9}\n",
        r.paradox.amp_uu, r.paradox.amp_ds_vi, r.paradox.amp_vs_di, r.paradox.p_dd
    ));
    out.push_str(&format!("paradox verdict: {}\n", r.paradox.verdict));
    out
}

pub fn render_hardy_csv(r: &HardyResults) -> String {
    let mut out = String::from("key,value\n");
    out.push_str(&format!("condition5_residual,{}\n", r.condition5_residual));
    out.push_str(&format!(
        "cancellation_residual,{}\n",
        r.cancellation_residual
    ));
    for (s, i, p) in r.probabilities.entries() {
        out.push_str(&format!("p[{s} {i}],{p}\n"));
    }
    out.push_str(&format!("ratio_triple,{}\n", r.noise.ratio_triple));
    out.push_str(&format!("ratio_two_pair,{}\n", r.noise.ratio_two_pair));
    out.push_str(&format!("p_dd,{}\n", r.paradox.p_dd));
    out.push_str(&format!("verdict,{}\n", r.paradox.verdict));
    out
}

pub fn render_run_text(r: &RunResults) -> String {
    let mut out = String::new();
    if let Some(res) = r.condition5_residual {
        out.push_str(&format!("cancellation condition residual: {res:.3e}\n"));
    }
    if let Some(res) = r.cancellation_residual {
        out.push_str(&format!("surviving pair residual:         {res:.3e}\n"));
    }
    if let Some(stages) = &r.stages {
        out.push('\n');
        for stage in stages {
            render_stage_text(stage, &mut out);
            out.push('\n');
        }
    }
    out.push_str("detector outcome probabilities:\n");
    for (key, p) in &r.probabilities {
        out.push_str(&format!("  {key:12} {p:.9}\n"));
    }
    out
}

pub fn render_run_csv(r: &RunResults) -> String {
    let mut out = String::from("outcome,probability\n");
    for (key, p) in &r.probabilities {
        out.push_str(&format!("{key},{p}\n"));
    }
    out
}

pub fn render_scan_text(r: &ScanResults) -> String {
    let mut out = String::from("alpha        ratio_triple  ratio_two_pair  p_dd\n");
    for row in &r.rows {
        let p_dd = row
            .p_dd
            .map(|p| format!("{p:.9}"))
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{:<12.6} {:<13.6e} {:<15.6e} {p_dd}\n",
            row.alpha, row.ratio_triple, row.ratio_two_pair
        ));
    }
    out.push_str(&format!(
        "fitted slopes: triple/pair {:.6}, two-pair/pair {:.6}\n",
        r.slope_triple, r.slope_two_pair
    ));
    out
}

/// Column order is part of the output contract.
pub fn render_scan_csv(r: &ScanResults) -> String {
    let mut out = String::from("alpha,ratio_triple,ratio_two_pair,p_dd\n");
    for row in &r.rows {
        let p_dd = row.p_dd.map(|p| p.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{p_dd}\n",
            row.alpha, row.ratio_triple, row.ratio_two_pair
        ));
    }
    out
}
