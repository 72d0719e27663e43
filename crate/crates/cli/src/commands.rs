use std::io::Write;

use catgini::asymptotic::NormalTestResult;
use catgini::dist::SeededRng;
use catgini::sim::reproduce_study_grid;
use catgini::{
    estimate_delta, jel_test, normal_test, permutation_baseline, run_study, Dataset, JelResult,
    Method, Scenario, SimReport, Tolerances,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Cli, Command, DensityArgs, EstimateArgs, InputArgs, OutputFormat, ScenarioArg, SimMethod,
    SimulateArgs, TestArgs, TestMethod,
};
use crate::density::{density_series, DensitySeries};
use crate::error::Result;
use crate::input::{read_dataset, CsvSchema};
use crate::output::{num, table, to_json, Envelope};

/// Exit status for a test that ran but is undefined on the data.
pub const EXIT_DEGENERATE: u8 = 3;

pub const SIZE_REPS: usize = 2000;
pub const POWER_REPS: usize = 1000;

#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub exit: u8,
    /// Printed to stderr when set.
    pub note: Option<String>,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Test(a) => cmd_test(a, cli.seed, cli.output),
        Command::Estimate(a) => cmd_estimate(a, cli.seed, cli.output),
        Command::Simulate(a) => cmd_simulate(a, cli.seed, cli.output),
        Command::Density(a) => cmd_density(a, cli.seed, cli.output),
    }
}

/// Runs and writes stdout in one piece; returns the process exit status.
pub fn run_to(cli: &Cli, mut stdout: impl Write, mut stderr: impl Write) -> u8 {
    match run(cli) {
        Ok(out) => {
            if let Some(note) = &out.note {
                let _ = writeln!(stderr, "catgini: {note}");
            }
            match stdout
                .write_all(out.stdout.as_bytes())
                .and_then(|_| stdout.flush())
            {
                Ok(()) => out.exit,
                Err(e) => {
                    let _ = writeln!(stderr, "catgini: cannot write output: {e}");
                    1
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "catgini: {e}");
            e.exit_code()
        }
    }
}

fn load(input: &InputArgs) -> Result<Dataset> {
    let schema = CsvSchema::new(&input.x_col, &input.y_col, input.delimiter)?;
    read_dataset(&input.input, &schema)
}

fn input_echo(input: &InputArgs) -> serde_json::Value {
    json!({
        "input": input.input.display().to_string(),
        "x_col": input.x_col,
        "y_col": input.y_col,
        "delimiter": input.delimiter.to_string(),
    })
}

fn value_name(v: impl clap::ValueEnum) -> String {
    v.to_possible_value()
        .map_or_else(String::new, |p| p.get_name().to_string())
}

fn merge(mut base: serde_json::Value, extra: serde_json::Value) -> serde_json::Value {
    if let (Some(b), serde_json::Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn emit<I: Serialize, R: Serialize>(
    format: OutputFormat,
    envelope: Envelope<I, R>,
    text: impl FnOnce(&R) -> String,
) -> Result<String> {
    Ok(match format {
        OutputFormat::Json => to_json(&envelope).map_err(std::io::Error::from)?,
        OutputFormat::Table => text(&envelope.result),
    })
}

#[derive(Debug, Serialize)]
pub struct PermutationResult {
    pub delta_hat: f64,
    pub n: usize,
    pub reps: usize,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
}

#[derive(Debug, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TestPayload {
    Jel(JelResult),
    Normal(NormalTestResult),
    Permutation(PermutationResult),
}

fn cmd_test(a: &TestArgs, seed: u64, format: OutputFormat) -> Result<Outcome> {
    let d = load(&a.input)?;
    let mut exit = 0;
    let mut note = None;
    let payload = match a.method {
        TestMethod::Jel => {
            let r = jel_test(&d, a.alpha, &Tolerances::default())?;
            if let Some(kind) = r.degeneracy {
                exit = EXIT_DEGENERATE;
                note = Some(format!(
                    "degenerate test ({kind:?}); result follows the convention"
                ));
            }
            TestPayload::Jel(r)
        }
        TestMethod::Normal => {
            TestPayload::Normal(normal_test(&d, a.alpha, a.variance_source.into())?)
        }
        TestMethod::Permutation => {
            let est = estimate_delta(&d, catgini::EstimatorPath::Fast)?;
            let p = permutation_baseline(&d, a.reps, &mut SeededRng::new(seed, 0))?;
            TestPayload::Permutation(PermutationResult {
                delta_hat: est.delta_hat,
                n: d.n(),
                reps: a.reps,
                p_value: p,
                reject: p <= a.alpha,
                alpha: a.alpha,
            })
        }
    };
    let inputs = merge(
        input_echo(&a.input),
        json!({
            "method": value_name(a.method),
            "variance_source": value_name(a.variance_source),
            "alpha": a.alpha,
            "reps": a.reps,
        }),
    );
    let stdout = emit(
        format,
        Envelope::new("test", seed, inputs, payload),
        |p| match p {
            TestPayload::Jel(r) => table(&[
                ("method", "jackknife empirical likelihood".into()),
                ("n", r.n.to_string()),
                ("delta_hat", num(r.delta_hat)),
                ("statistic", num(r.statistic)),
                ("critical_value", num(r.critical_value)),
                ("p_value", num(r.p_value)),
                ("reject", r.reject.to_string()),
                (
                    "degenerate",
                    r.degeneracy.map_or("no".into(), |k| format!("{k:?}")),
                ),
            ]),
            TestPayload::Normal(r) => table(&[
                ("method", "normal (one-sided)".into()),
                ("variance_source", format!("{:?}", r.variance_source)),
                ("n", r.n.to_string()),
                ("delta_hat", num(r.delta_hat)),
                ("sigma0_sq", num(r.sigma0_sq)),
                ("statistic", num(r.statistic)),
                ("critical_value", num(r.critical_value)),
                ("p_value", num(r.p_value)),
                ("reject", r.reject.to_string()),
            ]),
            TestPayload::Permutation(r) => table(&[
                ("method", "permutation".into()),
                ("n", r.n.to_string()),
                ("reps", r.reps.to_string()),
                ("delta_hat", num(r.delta_hat)),
                ("p_value", num(r.p_value)),
                ("reject", r.reject.to_string()),
            ]),
        },
    )?;
    Ok(Outcome { stdout, exit, note })
}

#[derive(Debug, Serialize)]
pub struct CategoryEstimate {
    pub label: String,
    pub count: usize,
    pub p_hat: f64,
    pub delta_k: f64,
}

#[derive(Debug, Serialize)]
pub struct EstimatePayload {
    pub path: catgini::EstimatorPath,
    pub n: usize,
    pub delta_hat: f64,
    pub categories: Vec<CategoryEstimate>,
}

fn cmd_estimate(a: &EstimateArgs, seed: u64, format: OutputFormat) -> Result<Outcome> {
    let d = load(&a.input)?;
    let est = estimate_delta(&d, a.path.into())?;
    let counts = catgini::category_counts(&d);
    let payload = EstimatePayload {
        path: a.path.into(),
        n: est.n,
        delta_hat: est.delta_hat,
        categories: d
            .labels()
            .iter()
            .enumerate()
            .map(|(k, label)| CategoryEstimate {
                label: label.clone(),
                count: counts.counts[k],
                p_hat: est.p_hat[k],
                delta_k: est.delta_k[k],
            })
            .collect(),
    };
    let inputs = merge(input_echo(&a.input), json!({ "path": value_name(a.path) }));
    let stdout = emit(
        format,
        Envelope::new("estimate", seed, inputs, payload),
        |p| {
            let mut out = table(&[("n", p.n.to_string()), ("delta_hat", num(p.delta_hat))]);
            out.push_str(&format!(
                "\n{:<16} {:>6} {:>10} {:>10}\n",
                "category", "count", "p_hat", "delta_k"
            ));
            for c in &p.categories {
                out.push_str(&format!(
                    "{:<16} {:>6} {:>10} {:>10}\n",
                    c.label,
                    c.count,
                    num(c.p_hat),
                    num(c.delta_k)
                ));
            }
            out
        },
    )?;
    Ok(Outcome {
        stdout,
        exit: 0,
        note: None,
    })
}

fn scenario(a: &SimulateArgs) -> Option<Scenario> {
    Some(match a.scenario? {
        ScenarioArg::Type1Lognormal => Scenario::Type1Lognormal {
            mu: a.mu,
            sigma: a.sigma,
            k: a.categories,
        },
        ScenarioArg::MixBalanced => Scenario::MixBalanced,
        ScenarioArg::MixLight => Scenario::MixLight,
        ScenarioArg::MixHeavy => Scenario::MixHeavy,
    })
}

fn sim_table(rows: &Vec<SimReport>) -> String {
    let mut out = format!(
        "{:<28} {:>5} {:>6} {:>8} {:>8} {:>6} {:>6} {:>8}\n",
        "scenario", "n", "reps", "rate", "se", "hull", "zero", "secs"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<28} {:>5} {:>6} {:>8.4} {:>8.4} {:>6} {:>6} {:>8.3}\n",
            r.scenario.to_string(),
            r.n,
            r.reps,
            r.rejection_rate,
            r.mc_stderr,
            r.degenerate_hull,
            r.degenerate_zero,
            r.wall_time_secs
        ));
    }
    out
}

fn cmd_simulate(a: &SimulateArgs, seed: u64, format: OutputFormat) -> Result<Outcome> {
    let method = match a.method {
        SimMethod::Jel => Method::Jel,
        SimMethod::Normal => Method::Normal,
    };
    let (rows, inputs) = match scenario(a) {
        None => {
            let (size_reps, power_reps) = a.reps.map_or((SIZE_REPS, POWER_REPS), |r| (r, r));
            let rows = reproduce_study_grid(size_reps, power_reps, a.alpha, seed)?;
            let inputs = json!({
                "reproduce_paper": true,
                "size_reps": size_reps,
                "power_reps": power_reps,
                "alpha": a.alpha,
                "method": "jel",
            });
            (rows, inputs)
        }
        Some(s) => {
            let reps = a.reps.unwrap_or(match s {
                Scenario::Type1Lognormal { .. } => SIZE_REPS,
                _ => POWER_REPS,
            });
            let rows =
                a.n.iter()
                    .map(|&n| run_study(&s, n, reps, a.alpha, method, seed))
                    .collect::<catgini::Result<Vec<_>>>()?;
            let inputs = json!({
                "reproduce_paper": false,
                "scenario": s,
                "n": a.n,
                "reps": reps,
                "alpha": a.alpha,
                "method": method,
            });
            (rows, inputs)
        }
    };
    let stdout = emit(
        format,
        Envelope::new("simulate", seed, inputs, rows),
        sim_table,
    )?;
    Ok(Outcome {
        stdout,
        exit: 0,
        note: None,
    })
}

#[derive(Debug, Serialize)]
pub struct DensityPayload {
    pub grid_points: usize,
    pub series: Vec<DensitySeries>,
}

fn cmd_density(a: &DensityArgs, seed: u64, format: OutputFormat) -> Result<Outcome> {
    let d = load(&a.input)?;
    let payload = DensityPayload {
        grid_points: a.grid_points,
        series: density_series(&d, a.grid_points)?,
    };
    let inputs = merge(
        input_echo(&a.input),
        json!({ "grid_points": a.grid_points }),
    );
    let stdout = emit(
        format,
        Envelope::new("density", seed, inputs, payload),
        |p| {
            let mut out = format!(
                "{:<16} {:>6} {:>10} {:>10}\n",
                "category", "count", "bandwidth", "peak"
            );
            for s in &p.series {
                let peak = s.density.iter().cloned().fold(0.0, f64::max);
                out.push_str(&format!(
                    "{:<16} {:>6} {:>10} {:>10}\n",
                    s.category,
                    s.count,
                    num(s.bandwidth),
                    num(peak)
                ));
            }
            out
        },
    )?;
    Ok(Outcome {
        stdout,
        exit: 0,
        note: None,
    })
}
