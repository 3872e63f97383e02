//! Command-line front end: argument parsing, input loading and report rendering.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 no feasible split,
//! 3 input that parses but fails validation.

use std::fmt::Write as _;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use splitplan_core::cost::{load_device_setup, DeviceSetup};
use splitplan_core::oracle::pareto_positions;
use splitplan_core::profile::{bundled_document, load_profile, BUNDLED_PROFILES};
use splitplan_core::{
    enumerate, plan_split, run_baseline, true_selection, BaselineKind, CostBreakdown, Error,
    GaConfig, Individual, ModelProfile, Normalization, ProblemInstance, SplitPlan,
    DEFAULT_MEMORY_CAP,
};

#[derive(Debug, Parser)]
#[command(name = "splitplan", version, about = "Plan where to split a CNN between a client and a server")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub options: GlobalOptions,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search the split space with NSGA-II and pick one plan.
    Optimize(Inputs),
    /// Evaluate every split index.
    Sweep(Inputs),
    /// Compare the planner with the baseline strategies.
    Compare(Inputs),
    /// Print the layer table of a model.
    Profile {
        /// Model profile document, or a bundled profile name.
        model: String,
    },
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Model profile document, or a bundled profile name (alexnet, vgg11, vgg13, vgg16, mobilenet_v2).
    pub model: String,
    /// Device/network document; the bundled reference devices when omitted.
    pub devices: Option<String>,
}

#[derive(Debug, Args)]
pub struct GlobalOptions {
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 40)]
    pub pop: usize,
    #[arg(long, global = true, default_value_t = 50)]
    pub gens: usize,
    #[arg(long, global = true, default_value_t = 0.3)]
    pub mutation: f64,
    #[arg(long, global = true, default_value_t = 0.9)]
    pub crossover: f64,
    #[arg(long, global = true, value_enum, default_value_t = NormalizationArg::Vector)]
    pub normalization: NormalizationArg,
    /// Client memory cap in bytes.
    #[arg(long, global = true, default_value_t = DEFAULT_MEMORY_CAP)]
    pub memory_cap: u64,
    /// Link bandwidth in Mbps; also sets upload and download throughput.
    #[arg(long, global = true)]
    pub bandwidth: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub output: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Vector,
    Minmax,
}

impl From<NormalizationArg> for Normalization {
    fn from(arg: NormalizationArg) -> Self {
        match arg {
            NormalizationArg::Vector => Normalization::Vector,
            NormalizationArg::Minmax => Normalization::MinMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
    Csv,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => 1,
            Error::NoFeasibleSolution => 2,
            _ => 3,
        };
        Self { code, message: e.to_string() }
    }
}

fn io_error(path: &str, e: std::io::Error) -> CliError {
    CliError { code: 1, message: format!("cannot read `{path}`: {e}") }
}

impl GlobalOptions {
    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            population_size: self.pop,
            generations: self.gens,
            mutation_rate: self.mutation,
            crossover_rate: self.crossover,
            seed: self.seed,
        }
    }
}

/// Loads a profile from a path, falling back to the bundled profile of that name.
pub fn load_model(spec: &str) -> Result<ModelProfile, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(spec, e))?;
        return Ok(load_profile(&text)?);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    match bundled_document(stem) {
        Some(doc) if path.parent().is_none_or(|p| p.as_os_str().is_empty()) => Ok(load_profile(doc)?),
        _ => Err(CliError {
            code: 1,
            message: format!(
                "cannot read `{spec}`: no such file or bundled profile ({})",
                BUNDLED_PROFILES.join(", ")
            ),
        }),
    }
}

fn load_devices(spec: Option<&str>) -> Result<DeviceSetup, CliError> {
    match spec {
        None => Ok(DeviceSetup::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            Ok(load_device_setup(&text)?)
        }
    }
}

pub fn build_instance(inputs: &Inputs, options: &GlobalOptions) -> Result<ProblemInstance, CliError> {
    let model = load_model(&inputs.model)?;
    let mut setup = load_devices(inputs.devices.as_deref())?;
    if let Some(bw) = options.bandwidth {
        setup.network.bandwidth_mbps = bw;
        setup.network.tau_u_mbps = bw;
        setup.network.tau_d_mbps = bw;
    }
    Ok(ProblemInstance::from_setup(model, setup, options.memory_cap)?)
}

/// One row of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub l1: usize,
    pub l2: usize,
    pub f1_s: f64,
    #[serde(rename = "f2_mJ")]
    pub f2_mj: f64,
    pub f3_bytes: f64,
    pub feasible: bool,
    pub pareto: bool,
    pub chosen: bool,
}

/// Plan document written by `optimize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub model: String,
    pub chosen_l1: usize,
    pub chosen_l2: usize,
    pub objectives: splitplan_core::ObjectiveVector,
    pub breakdown: CostBreakdown,
    pub distance: f64,
    pub pareto_set: Vec<Individual>,
    pub ga_config: GaConfig,
    pub seed: u64,
    pub normalization: Normalization,
    pub memory_cap: u64,
}

impl PlanDocument {
    fn new(plan: SplitPlan, memory_cap: u64) -> Self {
        Self {
            model: plan.model.clone(),
            chosen_l1: plan.chosen_l1(),
            chosen_l2: plan.chosen_l2(),
            objectives: plan.chosen.objectives,
            breakdown: plan.costs,
            distance: plan.distance,
            pareto_set: plan.pareto_set.members,
            seed: plan.ga_config.seed,
            ga_config: plan.ga_config,
            normalization: plan.normalization,
            memory_cap,
        }
    }
}

/// One row of the `compare` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub algorithm: String,
    pub l1: usize,
    pub l2: usize,
    pub f1_s: f64,
    #[serde(rename = "f2_mJ")]
    pub f2_mj: f64,
    pub f3_bytes: f64,
    pub in_feasible_set: bool,
}

/// Label of the planner's own row in comparisons.
pub const PLANNER_LABEL: &str = "NSGA2-TOPSIS";

/// One row of the `profile` layer table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub index: usize,
    pub kind: String,
    pub output_shape: Vec<usize>,
    pub params: u64,
    pub activation_bytes: u64,
    pub client_memory_bytes: u64,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("csv row serializes");
    }
    String::from_utf8(writer.into_inner().expect("csv flushes")).expect("csv is utf-8")
}

/// Right-aligned columns under a header row.
fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(rule.iter().map(String::as_str).collect(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

fn sweep_rows(instance: &ProblemInstance, normalization: Normalization) -> Result<Vec<SweepRow>, CliError> {
    let entries = enumerate(instance)?;
    let pareto = pareto_positions(&entries);
    let chosen = match true_selection(instance, normalization) {
        Ok(sel) => Some(sel.choice.individual.candidate.l1),
        Err(Error::NoFeasibleSolution) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(entries
        .iter()
        .enumerate()
        .map(|(i, e)| SweepRow {
            l1: e.candidate.l1,
            l2: e.candidate.l2,
            f1_s: e.objectives.f1,
            f2_mj: e.objectives.f2,
            f3_bytes: e.objectives.f3,
            feasible: e.feasible,
            pareto: pareto.contains(&i),
            chosen: chosen == Some(e.candidate.l1),
        })
        .collect())
}

fn objective_cells(l1: usize, l2: usize, f1: f64, f2: f64, f3: f64) -> Vec<String> {
    vec![
        l1.to_string(),
        l2.to_string(),
        format!("{f1:.6}"),
        format!("{f2:.3}"),
        format!("{f3:.0}"),
    ]
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

pub fn cmd_optimize(inputs: &Inputs, options: &GlobalOptions) -> Result<String, CliError> {
    let instance = build_instance(inputs, options)?;
    let plan = plan_split(&instance, &options.ga_config(), options.normalization.into())?;
    let doc = PlanDocument::new(plan, instance.memory_cap);
    Ok(match options.output.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => to_json(&doc),
        OutputFormat::Csv => {
            let rows: Vec<SweepRow> = doc
                .pareto_set
                .iter()
                .map(|m| SweepRow {
                    l1: m.candidate.l1,
                    l2: m.candidate.l2,
                    f1_s: m.objectives.f1,
                    f2_mj: m.objectives.f2,
                    f3_bytes: m.objectives.f3,
                    feasible: m.feasible,
                    pareto: true,
                    chosen: m.candidate.l1 == doc.chosen_l1,
                })
                .collect();
            to_csv(&rows)
        }
        OutputFormat::Table => {
            let b = &doc.breakdown;
            let mut out = format!(
                "model {}: run layers 1..={} on the client, {} on the server (distance {:.4})\n\
                 latency {:.6} s (client {:.6}, upload {:.6}, server {:.6}; download {:.6} not counted)\n\
                 energy {:.3} mJ (client {:.3}, upload {:.3}, download {:.3})\n\
                 client memory {:.0} bytes\n\n",
                doc.model, doc.chosen_l1, doc.chosen_l2, doc.distance,
                b.t_total, b.t_client, b.t_upload, b.t_server, b.t_download,
                b.e_total, b.e_client, b.e_upload, b.e_download,
                doc.objectives.f3,
            );
            let rows: Vec<Vec<String>> = doc
                .pareto_set
                .iter()
                .map(|m| {
                    let o = m.objectives;
                    let mut cells = objective_cells(m.candidate.l1, m.candidate.l2, o.f1, o.f2, o.f3);
                    cells.push(yes_no(m.feasible));
                    cells.push(if m.candidate.l1 == doc.chosen_l1 { "*".into() } else { String::new() });
                    cells
                })
                .collect();
            out.push_str(&render_table(&["l1", "l2", "f1_s", "f2_mJ", "f3_bytes", "feasible", "chosen"], &rows));
            out
        }
    })
}

pub fn cmd_sweep(inputs: &Inputs, options: &GlobalOptions) -> Result<String, CliError> {
    let instance = build_instance(inputs, options)?;
    let rows = sweep_rows(&instance, options.normalization.into())?;
    Ok(match options.output.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => to_csv(&rows),
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut c = objective_cells(r.l1, r.l2, r.f1_s, r.f2_mj, r.f3_bytes);
                    c.extend([yes_no(r.feasible), yes_no(r.pareto), yes_no(r.chosen)]);
                    c
                })
                .collect();
            render_table(
                &["l1", "l2", "f1_s", "f2_mJ", "f3_bytes", "feasible", "pareto", "chosen"],
                &cells,
            )
        }
    })
}

pub fn compare_rows(instance: &ProblemInstance, options: &GlobalOptions) -> Result<Vec<CompareRow>, CliError> {
    let plan = plan_split(instance, &options.ga_config(), options.normalization.into())?;
    let o = plan.chosen.objectives;
    let mut rows = vec![CompareRow {
        algorithm: PLANNER_LABEL.into(),
        l1: plan.chosen_l1(),
        l2: plan.chosen_l2(),
        f1_s: o.f1,
        f2_mj: o.f2,
        f3_bytes: o.f3,
        in_feasible_set: true,
    }];
    for kind in BaselineKind::ALL {
        let b = run_baseline(kind, instance, options.seed)?;
        rows.push(CompareRow {
            algorithm: kind.label().into(),
            l1: b.candidate.l1,
            l2: b.candidate.l2,
            f1_s: b.objectives.f1,
            f2_mj: b.objectives.f2,
            f3_bytes: b.objectives.f3,
            in_feasible_set: b.in_feasible_set,
        });
    }
    Ok(rows)
}

pub fn cmd_compare(inputs: &Inputs, options: &GlobalOptions) -> Result<String, CliError> {
    let instance = build_instance(inputs, options)?;
    let rows = compare_rows(&instance, options)?;
    Ok(match options.output.unwrap_or(OutputFormat::Table) {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => to_csv(&rows),
        OutputFormat::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut c = vec![r.algorithm.clone()];
                    c.extend(objective_cells(r.l1, r.l2, r.f1_s, r.f2_mj, r.f3_bytes));
                    c.push(if r.in_feasible_set { String::new() } else { "outside feasible set".into() });
                    c
                })
                .collect();
            format!(
                "model {}\n{}",
                instance.model.name(),
                render_table(&["algorithm", "l1", "l2", "f1_s", "f2_mJ", "f3_bytes", "note"], &cells)
            )
        }
    })
}

pub fn layer_rows(model: &ModelProfile) -> Vec<LayerRow> {
    model
        .layers()
        .iter()
        .zip(model.output_shapes())
        .zip(model.costs())
        .enumerate()
        .map(|(i, ((layer, shape), cost))| LayerRow {
            index: i + 1,
            kind: layer.kind.as_str().into(),
            output_shape: shape.dims().to_vec(),
            params: cost.param_count,
            activation_bytes: cost.activation_bytes,
            client_memory_bytes: model.client_memory(i + 1).expect("index within model"),
        })
        .collect()
}

pub fn cmd_profile(model: &str, options: &GlobalOptions) -> Result<String, CliError> {
    let model = load_model(model)?;
    let rows = layer_rows(&model);
    Ok(match options.output.unwrap_or(OutputFormat::Table) {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => {
            #[derive(Serialize)]
            struct Flat<'a> {
                index: usize,
                kind: &'a str,
                output_shape: String,
                params: u64,
                activation_bytes: u64,
                client_memory_bytes: u64,
            }
            let flat: Vec<Flat> = rows
                .iter()
                .map(|r| Flat {
                    index: r.index,
                    kind: &r.kind,
                    output_shape: r.output_shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x"),
                    params: r.params,
                    activation_bytes: r.activation_bytes,
                    client_memory_bytes: r.client_memory_bytes,
                })
                .collect();
            to_csv(&flat)
        }
        OutputFormat::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.index.to_string(),
                        r.kind.clone(),
                        format!("{:?}", r.output_shape),
                        r.params.to_string(),
                        r.activation_bytes.to_string(),
                        r.client_memory_bytes.to_string(),
                    ]
                })
                .collect();
            format!(
                "model {} ({} layers, input {})\n{}",
                model.name(),
                model.total_layers(),
                model.input_shape(),
                render_table(&["#", "kind", "output", "params", "act_bytes", "client_mem"], &cells)
            )
        }
    })
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Optimize(inputs) => cmd_optimize(inputs, &cli.options),
        Command::Sweep(inputs) => cmd_sweep(inputs, &cli.options),
        Command::Compare(inputs) => cmd_compare(inputs, &cli.options),
        Command::Profile { model } => cmd_profile(model, &cli.options),
    }
}
