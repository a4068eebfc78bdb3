//! SI-vs-oracle comparison harness: runs one benchmark problem on a fresh
//! machine, checks the result against the software reference, and records
//! cycle accounting in a serializable `Comparison` record.

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerConfig, Machine, RunError, RunOutcome, Trap};
use crate::fabric::FabricConfig;
use crate::isa::ProgramImage;

use super::cnn::{self, ConvLayerProblem, StreamPayload};
use super::sha3;
use super::sift::{self, SiftProblem};
use super::swe::{self, RiemannProblem};
use super::GenError;

/// Relative tolerance for the floating-point SWE comparison.
pub const SWE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub app: String,
    pub matched: bool,
    pub si_cycles: u64,
    pub retired: u64,
    pub stalled_cycles: u64,
    pub trap: Option<String>,
    /// Largest per-component |si - ref| / max(|ref|, 1), floating-point apps
    /// only.
    pub max_abs_rel_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sha3Problem {
    pub message: Vec<u8>,
}

fn default_macs() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CnnProblem {
    #[serde(flatten)]
    pub layer: ConvLayerProblem,
    /// Number of CNN-MAC slots to use (1 or 2).
    #[serde(default = "default_macs")]
    pub macs: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("machine setup failed: {0}")]
    Setup(String),
    #[error("run aborted: {0}")]
    Run(#[from] RunError),
}

fn trap_string(t: &Trap) -> String {
    format!("{} at cycle {}, pc {}", t.kind.name(), t.cycle, t.pc)
}

fn boot_and_run(
    image: &ProgramImage,
    streams: &StreamPayload,
    fabric_cfg: &FabricConfig,
) -> Result<(Machine, RunOutcome), HarnessError> {
    let ctrl = ControllerConfig {
        stall_threshold: fabric_cfg.stall_threshold,
        ..ControllerConfig::default()
    };
    let mut m = Machine::boot(image, ctrl, fabric_cfg)
        .map_err(|e| HarnessError::Setup(e.to_string()))?;
    for (slot, chan, words) in streams {
        for &w in words {
            m.fabric.stream_push(*slot, *chan, w);
        }
    }
    let out = m.run()?;
    Ok((m, out))
}

fn comparison(
    app: &str,
    out: &RunOutcome,
    matched_if_no_trap: bool,
    max_err: Option<f64>,
) -> Comparison {
    let trap = out.trap.as_ref().map(trap_string);
    Comparison {
        app: app.to_string(),
        matched: matched_if_no_trap && trap.is_none(),
        si_cycles: out.cycles,
        retired: out.retired,
        stalled_cycles: out.stalled,
        trap,
        max_abs_rel_error: max_err,
    }
}

fn rel_err(si: f64, reference: f64) -> f64 {
    (si - reference).abs() / reference.abs().max(1.0)
}

pub fn run_sift_comparison(
    p: &SiftProblem,
    fabric_cfg: &FabricConfig,
) -> Result<Comparison, HarnessError> {
    let image = sift::gen_sift_program(p)?;
    let (m, out) = boot_and_run(&image, &Vec::new(), fabric_cfg)?;
    let want = sift::ref_sift_match(p);
    let got = f32::from_bits(m.fabric.memory[sift::RESULT_ADDR as usize]);
    let matched = got.to_bits() == want.to_bits();
    let err = rel_err(got as f64, want as f64);
    Ok(comparison("sift", &out, matched, Some(err)))
}

pub fn run_swe_comparison(
    p: &RiemannProblem,
    fabric_cfg: &FabricConfig,
) -> Result<Comparison, HarnessError> {
    let (image, _markers) = swe::gen_swe_program(p)?;
    let (m, out) = boot_and_run(&image, &Vec::new(), fabric_cfg)?;
    if out.trap.is_some() {
        return Ok(comparison("swe", &out, false, None));
    }
    let want = swe::ref_swe_dispatch(p).as_array();
    let got = swe::read_si_result(&m.fabric.memory).as_array();
    let mut max_err = 0f64;
    for (g, w) in got.iter().zip(&want) {
        max_err = max_err.max(rel_err(*g as f64, *w as f64));
    }
    Ok(comparison("swe", &out, max_err <= SWE_REL_TOL, Some(max_err)))
}

pub fn run_cnn_comparison(
    p: &CnnProblem,
    fabric_cfg: &FabricConfig,
) -> Result<Comparison, HarnessError> {
    let (image, streams, _markers) = cnn::gen_cnn_program(&p.layer, p.macs)?;
    let (m, out) = boot_and_run(&image, &streams, fabric_cfg)?;
    if out.trap.is_some() {
        return Ok(comparison("cnn", &out, false, None));
    }
    let want = cnn::ref_conv_layer(&p.layer);
    let got = cnn::read_pool_output(&m.fabric.memory, &p.layer);
    Ok(comparison("cnn", &out, got == want, None))
}

pub fn run_sha3_comparison(
    p: &Sha3Problem,
    fabric_cfg: &FabricConfig,
) -> Result<Comparison, HarnessError> {
    let (image, streams) = sha3::gen_sha3_program(&p.message)?;
    let (m, out) = boot_and_run(&image, &streams, fabric_cfg)?;
    if out.trap.is_some() {
        return Ok(comparison("sha3", &out, false, None));
    }
    let want = sha3::ref_sha3_256(&p.message);
    let got = sha3::read_digest(&m.fabric.memory, sha3::DIGEST_ADDR);
    Ok(comparison("sha3", &out, got == want, None))
}

/// Digest of a single-pipeline SHA3 run, for the CLI's contractual stdout.
pub fn sha3_digest_hex(p: &Sha3Problem, fabric_cfg: &FabricConfig) -> Result<String, HarnessError> {
    let (image, streams) = sha3::gen_sha3_program(&p.message)?;
    let (m, _) = boot_and_run(&image, &streams, fabric_cfg)?;
    let d = sha3::read_digest(&m.fabric.memory, sha3::DIGEST_ADDR);
    Ok(d.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub total: usize,
    pub matched: usize,
    pub all_matched: bool,
    pub total_cycles: u64,
    pub total_stalled: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a> {
    pub results: &'a [Comparison],
    pub aggregate: Aggregate,
}

pub fn aggregate(results: &[Comparison]) -> Aggregate {
    let matched = results.iter().filter(|r| r.matched).count();
    Aggregate {
        total: results.len(),
        matched,
        all_matched: matched == results.len(),
        total_cycles: results.iter().map(|r| r.si_cycles).sum(),
        total_stalled: results.iter().map(|r| r.stalled_cycles).sum(),
    }
}

/// Deterministic JSON report: array of comparison records plus aggregates.
pub fn report_json(results: &[Comparison]) -> String {
    let rep = Report {
        results,
        aggregate: aggregate(results),
    };
    let mut s = serde_json::to_string_pretty(&rep).expect("report serialization");
    s.push('\n');
    s
}

pub const REPORT_CSV_HEADER: &str =
    "app,matched,si_cycles,retired,stalled_cycles,trap,max_abs_rel_error";

pub fn report_csv(results: &[Comparison]) -> String {
    let mut s = String::from(REPORT_CSV_HEADER);
    s.push('\n');
    for r in results {
        let trap = r.trap.as_deref().unwrap_or("");
        let err = r.max_abs_rel_error.map(|e| format!("{e:e}")).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.app, r.matched, r.si_cycles, r.retired, r.stalled_cycles, trap, err
        ));
    }
    s
}
