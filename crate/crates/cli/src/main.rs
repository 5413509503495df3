//! `bess` — batch command-line surface over the battery storage life-cycle
//! simulator: data ingestion, single-day dispatch, clustering, life-cycle
//! ledgers, IRR/LCOS, and sensitivity tables.
//!
//! Exit codes: 0 on success, 1 on validation or data errors, 2 when an
//! optimization or root-finding outcome is empty (infeasible program,
//! IRR undefined, ledger never closing).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bess_core::cluster::{cluster_days, Metric};
use bess_core::config::{Config, Resolved, ScenarioSpec};
use bess_core::dispatch::{simulate_day, DispatchError};
use bess_core::finance::{
    build_cashflows, irr, lcos, npv, CashFlowSeries, Chemistry, FinanceError, LcosInputs, LcosYear,
};
use bess_core::lifecycle::{run_lifecycle, LifecycleError, LifecycleLedger, Method};
use bess_core::market::{
    day_files_exist, load_day_from_root, load_reg_signal, mileage_ratio, shift_series,
    write_market_day, SeriesField,
};

#[derive(Parser)]
#[command(
    name = "bess",
    version,
    about = "Battery storage life-cycle economics simulator"
)]
struct Cli {
    /// Configuration file (TOML); required by pipeline commands.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Force both chemistry presets (degradation and costs).
    #[arg(long, global = true, value_parser = parse_chemistry)]
    chemistry: Option<Chemistry>,
    #[command(subcommand)]
    command: Command,
}

fn parse_chemistry(s: &str) -> Result<Chemistry, String> {
    match s {
        "lfp" => Ok(Chemistry::Lfp),
        "ncm" => Ok(Chemistry::Ncm),
        other => Err(format!("unknown chemistry {other:?}, expected lfp or ncm")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "typical" => Ok(Method::Typical),
        "cluster" => Ok(Method::Cluster),
        other => Err(format!(
            "unknown method {other:?}, expected typical or cluster"
        )),
    }
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    match s {
        "dtw" => Ok(Metric::Dtw),
        "euclidean" => Ok(Metric::Euclidean),
        other => Err(format!(
            "unknown metric {other:?}, expected dtw or euclidean"
        )),
    }
}

#[derive(Args)]
struct LifecycleFlags {
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_metric)]
    metric: Option<Metric>,
    /// Capacity-loss fraction that ends the asset's life.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate one day's price files, emitting the day as JSON.
    Ingest {
        #[arg(long)]
        date: chrono::NaiveDate,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regulation-signal statistics: mileage, energy rate, mileage ratio.
    Mileage {
        /// RegD (fast) signal CSV.
        #[arg(long)]
        regd: PathBuf,
        /// RegA (slow) signal CSV for the mileage ratio.
        #[arg(long)]
        rega: Option<PathBuf>,
        /// Seconds per sample; overrides the config.
        #[arg(long)]
        cadence_s: Option<f64>,
    },
    /// Solve one day's dispatch and emit the income/cost decomposition.
    SimulateDay {
        #[arg(long)]
        date: chrono::NaiveDate,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the full dispatch solution (bids and SoC trajectory).
        #[arg(long)]
        solution_out: Option<PathBuf>,
    },
    /// Cluster the configured year by price shape.
    Cluster {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_metric)]
        metric: Option<Metric>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Export centroid price profiles as per-cluster CSV directories.
        #[arg(long)]
        centroids_dir: Option<PathBuf>,
    },
    /// Run the life-cycle simulation to end of life.
    Lifecycle {
        #[command(flatten)]
        flags: LifecycleFlags,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write cluster assignments as CSV (cluster method only).
        #[arg(long)]
        clusters_out: Option<PathBuf>,
    },
    /// Internal rate of return of a ledger or a raw flows CSV.
    Irr {
        #[arg(long, conflicts_with = "flows")]
        ledger: Option<PathBuf>,
        /// CSV with header year,flow.
        #[arg(long)]
        flows: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Levelized cost of storage from a ledger or explicit inputs JSON.
    Lcos {
        #[arg(long, conflicts_with = "inputs")]
        ledger: Option<PathBuf>,
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the pipeline under perturbed assumptions and tabulate.
    Sensitivity {
        /// Scenario CSV (name,price_scale,n100_scale,k_dec_override);
        /// defaults to the config's scenario list.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 2 for empty optimization/root outcomes, 1 for everything else.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(d) = cause.downcast_ref::<DispatchError>() {
            if matches!(d, DispatchError::Infeasible | DispatchError::Unbounded) {
                return 2;
            }
        }
        if let Some(f) = cause.downcast_ref::<FinanceError>() {
            if matches!(
                f,
                FinanceError::NoSignChange
                    | FinanceError::NoRootInBracket
                    | FinanceError::ZeroEnergy
            ) {
                return 2;
            }
        }
        if let Some(l) = cause.downcast_ref::<LifecycleError>() {
            match l {
                LifecycleError::NeverDies { .. } => return 2,
                LifecycleError::Dispatch(DispatchError::Infeasible) => return 2,
                _ => {}
            }
        }
    }
    1
}

fn load_resolved(cli_config: &Option<PathBuf>, chemistry: Option<Chemistry>) -> Result<Resolved> {
    let mut config = match cli_config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(chem) = chemistry {
        config.set_chemistry(chem);
    }
    Ok(config.resolve()?)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn run(cli: Cli) -> Result<()> {
    let resolved = load_resolved(&cli.config, cli.chemistry)?;
    match cli.command {
        Command::Ingest { date, out } => {
            let root = resolved.require_price_root()?;
            let mut day = load_day_from_root(root, date)?;
            if resolved.res_shift_hours != 0 {
                day = shift_series(&day, SeriesField::Res, resolved.res_shift_hours)?;
            }
            emit(&out, &to_json(&day)?)
        }
        Command::Mileage {
            regd,
            rega,
            cadence_s,
        } => {
            let cadence = cadence_s.unwrap_or(resolved.signal_cadence_s);
            let regd_signal = load_reg_signal(&regd, cadence)?;
            let mut report = serde_json::json!({
                "mileage_regd": regd_signal.mileage()?,
                "reg_energy_rate": regd_signal.reg_energy_rate()?,
            });
            if let Some(rega_path) = rega {
                let rega_signal = load_reg_signal(&rega_path, cadence)?;
                report["mileage_rega"] = serde_json::json!(rega_signal.mileage()?);
                report["mileage_ratio"] =
                    serde_json::json!(mileage_ratio(&rega_signal, &regd_signal)?);
            }
            emit(&None, &to_json(&report)?)
        }
        Command::SimulateDay {
            date,
            out,
            solution_out,
        } => {
            let root = resolved.require_price_root()?;
            let mut day = load_day_from_root(root, date)?;
            if resolved.res_shift_hours != 0 {
                day = shift_series(&day, SeriesField::Res, resolved.res_shift_hours)?;
            }
            let (solution, result) = simulate_day(&day, &resolved.battery, &resolved.degradation)?;
            if let Some(path) = solution_out {
                emit(&Some(path), &to_json(&solution)?)?;
            }
            emit(&out, &to_json(&result)?)
        }
        Command::Cluster {
            k,
            seed,
            metric,
            out,
            centroids_dir,
        } => {
            let root = resolved.require_price_root()?;
            let year = resolved.lifecycle.year;
            let mut days = Vec::new();
            let mut cursor = chrono::NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
            while chrono::Datelike::year(&cursor) == year {
                if !day_files_exist(root, cursor) {
                    bail!("clustering needs the complete year, {cursor} is missing");
                }
                let mut day = load_day_from_root(root, cursor)?;
                if resolved.res_shift_hours != 0 {
                    day = shift_series(&day, SeriesField::Res, resolved.res_shift_hours)?;
                }
                days.push(day);
                cursor = cursor.succ_opt().unwrap();
            }
            let model = cluster_days(
                &days,
                k.unwrap_or(resolved.lifecycle.k),
                metric.unwrap_or(resolved.lifecycle.metric),
                seed.unwrap_or(resolved.lifecycle.seed),
            )?;
            if let Some(dir) = centroids_dir {
                for (i, centroid) in model.centroid_days.iter().enumerate() {
                    write_market_day(centroid, &dir.join(format!("cluster_{i}")))?;
                }
            }
            emit(&out, &to_json(&model)?)
        }
        Command::Lifecycle {
            flags,
            out,
            clusters_out,
        } => {
            let mut adjusted = resolved;
            if let Some(m) = flags.method {
                adjusted.lifecycle.method = m;
            }
            if let Some(k) = flags.k {
                adjusted.lifecycle.k = k;
            }
            if let Some(seed) = flags.seed {
                adjusted.lifecycle.seed = seed;
            }
            if let Some(metric) = flags.metric {
                adjusted.lifecycle.metric = metric;
            }
            if let Some(threshold) = flags.threshold {
                adjusted.lifecycle.threshold = threshold;
            }
            let root = adjusted.require_price_root()?.to_path_buf();
            let run = run_lifecycle(&adjusted.run_spec(&root, 1.0))?;
            if let Some(path) = clusters_out {
                let model = run
                    .cluster
                    .as_ref()
                    .context("--clusters-out needs the cluster method")?;
                let mut text = String::from("date,cluster\n");
                for (date, cluster) in &model.assignments {
                    text.push_str(&format!("{date},{cluster}\n"));
                }
                emit(&Some(path), &text)?;
            }
            emit(&out, &to_json(&run.ledger)?)
        }
        Command::Irr { ledger, flows, out } => {
            let series = match (ledger, flows) {
                (Some(path), None) => {
                    let ledger = read_ledger(&path)?;
                    build_cashflows(&ledger, &resolved.costs)?
                }
                (None, Some(path)) => read_flows_csv(&path)?,
                _ => bail!("provide exactly one of --ledger or --flows"),
            };
            let solution = irr(&series)?;
            if solution.multiple_sign_changes {
                eprintln!("warning: flows change sign more than once; reporting the smallest root");
            }
            let report = serde_json::json!({
                "irr": solution.rate,
                "npv_check": npv(&series, solution.rate),
            });
            emit(&out, &to_json(&report)?)
        }
        Command::Lcos {
            ledger,
            inputs,
            out,
        } => {
            let inputs = match (ledger, inputs) {
                (Some(path), None) => {
                    let ledger = read_ledger(&path)?;
                    lcos_inputs_from_ledger(&ledger, &resolved)
                }
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    serde_json::from_str::<LcosInputs>(&text).with_context(|| {
                        format!("{} is not a valid inputs document", path.display())
                    })?
                }
                _ => bail!("provide exactly one of --ledger or --inputs"),
            };
            let value = lcos(&inputs)?;
            let report = serde_json::json!({ "lcos_usd_per_mwh": value });
            emit(&out, &to_json(&report)?)
        }
        Command::Sensitivity { scenarios, out } => {
            let specs: Vec<ScenarioSpec> = match scenarios {
                Some(path) => read_scenarios_csv(&path)?,
                None => resolved.scenarios.clone(),
            };
            for spec in &specs {
                spec.validate()?;
            }
            let rows = bess_core::scenario::run_sensitivity(&resolved, &specs)?;
            emit(&out, &bess_core::scenario::sensitivity_csv(&rows))
        }
    }
}

fn read_ledger(path: &Path) -> Result<LifecycleLedger> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} is not a valid ledger document", path.display()))
}

/// Reads a `year,flow` CSV into a cash-flow series; years must run 0..n.
fn read_flows_csv(path: &Path) -> Result<CashFlowSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["year", "flow"] {
        bail!(
            "{}: header is {:?}, expected year,flow",
            path.display(),
            headers
        );
    }
    let mut flows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let year: usize = record
            .get(0)
            .context("missing year")?
            .parse()
            .with_context(|| format!("row {}: bad year", i + 1))?;
        if year != i {
            bail!(
                "{}: years must run 0..n, row {} has {}",
                path.display(),
                i + 1,
                year
            );
        }
        let flow: f64 = record
            .get(1)
            .context("missing flow")?
            .parse()
            .with_context(|| format!("row {}: bad flow", i + 1))?;
        flows.push(flow);
    }
    Ok(CashFlowSeries::new(flows)?)
}

fn read_scenarios_csv(path: &Path) -> Result<Vec<ScenarioSpec>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let expected = ["name", "price_scale", "n100_scale", "k_dec_override"];
    if headers.iter().collect::<Vec<_>>() != expected {
        bail!(
            "{}: header is {:?}, expected {}",
            path.display(),
            headers,
            expected.join(",")
        );
    }
    let mut specs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let field = |idx: usize| record.get(idx).unwrap_or("").to_string();
        let parse_opt = |s: String, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse().with_context(|| {
                    format!("row {}: bad {what} {s:?}", i + 1)
                })?))
            }
        };
        specs.push(ScenarioSpec {
            name: field(0),
            price_scale: parse_opt(field(1), "price_scale")?.unwrap_or(1.0),
            n100_scale: parse_opt(field(2), "n100_scale")?.unwrap_or(1.0),
            k_dec_override: parse_opt(field(3), "k_dec_override")?,
        });
    }
    Ok(specs)
}

/// Assembles levelized-cost inputs from a completed ledger: capital cost
/// from the configured cost model, yearly opex and charging cost from the
/// ledger deltas, recycling income credited in the final year.
fn lcos_inputs_from_ledger(ledger: &LifecycleLedger, resolved: &Resolved) -> LcosInputs {
    let n = ledger.rows.len();
    let capex = resolved.costs.cost_bat_pur + resolved.costs.cost_equ + resolved.costs.cost_sta;
    let mut yearly = Vec::with_capacity(n);
    let mut prev_cost = 0.0;
    let mut prev_energy = 0.0;
    let mut prev_charge = 0.0;
    for (i, row) in ledger.rows.iter().enumerate() {
        yearly.push(LcosYear {
            opex: row.cost_op - prev_cost,
            capex_re: 0.0,
            charge_cost: row.charge_cost - prev_charge,
            other_income: if i + 1 == n {
                resolved.costs.income_rcy
            } else {
                0.0
            },
            energy_out: row.energy_out - prev_energy,
        });
        prev_cost = row.cost_op;
        prev_energy = row.energy_out;
        prev_charge = row.charge_cost;
    }
    LcosInputs {
        capex,
        yearly,
        discount_schedule: resolved.discount_schedule(n),
    }
}
