//! The `llds` command line.
//!
//! Every failure prints a single line `error[<kind>]: <message>` on stderr
//! and exits with status 1. Set `LLDS_NO_COLOR` to disable the colored
//! prefix on terminals.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::control::{rollout_controlled, solve_control};
use crate::error::{Error, Result};
use crate::io::{
    emit_plot, read_controls, read_model, read_problem, read_table, write_model, write_series,
    ModelFile, PlotLabels, SeriesTable,
};
use crate::model::exp_vector;
use crate::numerics::Vector;
use crate::predict::{free_run, log_rmse, one_step_predict};
use crate::simulate::{fixed_point, simulate, NoiseSpec};
use crate::sysid::{identify, identify_controlled};

#[derive(Debug, Parser)]
#[command(
    name = "llds",
    version,
    about = "Simulate, identify and control log-linear dynamical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Roll a model forward and write the states as CSV.
    Simulate(SimulateArgs),
    /// Fit a model to a series by least squares in log space.
    Fit(FitArgs),
    /// One-step-ahead (or free-run) predictions of a series.
    Predict(PredictArgs),
    /// Print the fixed point of an autonomous model.
    FixedPoint(FixedPointArgs),
    /// Solve a finite-horizon tracking problem.
    Control(ControlArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    x1: Vec<f64>,
    /// Number of states in the output, including x1.
    #[arg(long)]
    steps: usize,
    /// Standard deviation of the log-space noise.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input series (steps - 1 rows) for models with a control matrix.
    #[arg(long)]
    inputs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Residual CSV; defaults to `<out stem>_residuals.csv` beside the model.
    #[arg(long)]
    residuals: Option<PathBuf>,
    /// First step of the series to use.
    #[arg(long)]
    from: Option<i64>,
    /// Last step of the series to use.
    #[arg(long)]
    to: Option<i64>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    series: PathBuf,
    /// CSV with paired measured/predicted columns.
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG overlay plot.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Roll out from the first state instead of predicting one step ahead.
    #[arg(long)]
    free_run: bool,
    #[arg(long)]
    from: Option<i64>,
    #[arg(long)]
    to: Option<i64>,
    #[arg(long, default_value = "measured and predicted states")]
    title: String,
    #[arg(long, default_value = "value")]
    y_label: String,
}

#[derive(Debug, Args)]
struct FixedPointArgs {
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct ControlArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    /// CSV of the optimal inputs u_1..u_T.
    #[arg(long)]
    out: PathBuf,
    /// CSV of the predicted states; defaults to `<out stem>_states.csv`.
    #[arg(long)]
    states: Option<PathBuf>,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let color = std::env::var_os("LLDS_NO_COLOR").is_none() && std::io::stderr().is_terminal();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            report(err, color, "usage", first.trim_start_matches("error: "));
            return 1;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            report(err, color, e.kind(), &e.to_string());
            1
        }
    }
}

fn report(err: &mut dyn Write, color: bool, kind: &str, message: &str) {
    let message = message.replace('\n', " ");
    let _ = if color {
        writeln!(err, "\x1b[31merror[{kind}]\x1b[0m: {message}")
    } else {
        writeln!(err, "error[{kind}]: {message}")
    };
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::FixedPoint(a) => cmd_fixed_point(a, out),
        Command::Control(a) => cmd_control(a, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Rounds to 15 significant digits for human-facing output.
fn short(v: f64) -> f64 {
    format!("{v:.14e}").parse().unwrap_or(v)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let model = read_model(&a.model)?.model;
    let x1 = Vector::new(a.x1)?;
    let noise = a.sigma.map(|s| NoiseSpec::new(s, a.seed)).transpose()?;
    let controls = a.inputs.as_deref().map(read_controls).transpose()?;
    let traj = simulate(&model, &x1, controls.as_ref(), noise.as_ref(), a.steps)?;
    write_series(&a.out, &SeriesTable::from_trajectory(1, None, &traj)?)?;
    writeln!(out, "wrote {} states to {}", traj.len(), a.out.display()).map_err(stdout_err)
}

fn matrix_rows(name: &str, rows: usize, cols: usize, get: impl Fn(usize, usize) -> f64) -> String {
    let mut s = String::new();
    for i in 0..rows {
        let lead = if i == 0 {
            format!("{name} = ")
        } else {
            " ".repeat(name.len() + 3)
        };
        let cells: Vec<String> = (0..cols).map(|j| format!("{:>9.4}", get(i, j))).collect();
        s.push_str(&format!("{lead}[{} ]\n", cells.join("")));
    }
    s
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let table = read_table(&a.series, true)?.restrict(a.from, a.to);
    if table.is_empty() {
        return Err(Error::InvalidValue(
            "no rows left in the requested range".into(),
        ));
    }
    let x = table.to_trajectory()?;
    let result = match &a.inputs {
        Some(path) => {
            let last = table.t0 + x.len() as i64 - 2;
            let inputs = read_table(path, true)?.restrict(Some(table.t0), Some(last));
            if inputs.t0 != table.t0 && !inputs.is_empty() {
                return Err(Error::InvalidValue(format!(
                    "inputs start at t = {} but the series starts at t = {}",
                    inputs.t0, table.t0
                )));
            }
            identify_controlled(&x, &inputs.to_controls()?)?
        }
        None => identify(&x)?,
    };

    let model = &result.model;
    let residual_path = a
        .residuals
        .clone()
        .unwrap_or_else(|| sibling(&a.out, "residuals"));
    let names: Vec<String> = table.columns.iter().map(|c| format!("r_{c}")).collect();
    let residuals = SeriesTable::from_states(table.t0 + 1, Some(&names), &result.residuals)?;
    write_model(
        &a.out,
        &ModelFile {
            model: model.clone(),
            sigma_hat: Some(result.sigma_hat),
        },
    )?;
    write_series(&residual_path, &residuals)?;

    let mut report = format!(
        "fitted {} transitions (t = {}..{}), state order: {}\n",
        x.len() - 1,
        table.t0,
        table.t0 + x.len() as i64 - 1,
        table.columns.join(", ")
    );
    report.push_str(&matrix_rows("A", model.n(), model.n(), |i, j| {
        model.a().get(i, j)
    }));
    if let Some(b) = model.b() {
        report.push_str(&matrix_rows("B", model.n(), model.m(), |i, j| b.get(i, j)));
    }
    report.push_str(&matrix_rows("c", model.n(), 1, |i, _| model.c()[i]));
    report.push_str(&format!(
        "sigma_hat = {:.6}\nsse = {:.6e}\n",
        result.sigma_hat, result.sse
    ));
    report.push_str(&format!(
        "wrote model to {} and residuals to {}\n",
        a.out.display(),
        residual_path.display()
    ));
    out.write_all(report.as_bytes()).map_err(stdout_err)
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = read_model(&a.model)?.model;
    let table = read_table(&a.series, true)?.restrict(a.from, a.to);
    if table.is_empty() {
        return Err(Error::InvalidValue(
            "no rows left in the requested range".into(),
        ));
    }
    let x = table.to_trajectory()?;
    let predicted = if a.free_run {
        free_run(&model, &x)?
    } else {
        one_step_predict(&model, &x)?
    };
    let overlay = SeriesTable::overlay(table.t0, Some(&table.columns), &x, &predicted)?;
    write_series(&a.out, &overlay)?;
    if let Some(plot) = &a.plot {
        let labels = PlotLabels {
            title: a.title.clone(),
            x_label: "t".into(),
            y_label: a.y_label.clone(),
            series: table.columns.clone(),
            t0: table.t0,
        };
        emit_plot(plot, &x, &predicted, &labels)?;
    }
    let mode = if a.free_run { "free-run" } else { "one-step" };
    writeln!(out, "{mode} log_rmse = {:.6}", log_rmse(&x, &predicted)?).map_err(stdout_err)?;
    writeln!(out, "wrote predictions to {}", a.out.display()).map_err(stdout_err)
}

fn cmd_fixed_point(a: FixedPointArgs, out: &mut dyn Write) -> Result<()> {
    let model = read_model(&a.model)?.model;
    let x = fixed_point(&model)?;
    for (i, v) in x.iter().enumerate() {
        writeln!(out, "x{} = {}", i + 1, short(*v)).map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_control(a: ControlArgs, out: &mut dyn Write) -> Result<()> {
    let model = read_model(&a.model)?.model;
    let problem = read_problem(&a.problem, &model)?;
    let solution = solve_control(&problem)?;
    let x1 = exp_vector(problem.x1_log().as_slice())?;
    let states = rollout_controlled(&model, &x1, &solution)?;
    let states_path = a
        .states
        .clone()
        .unwrap_or_else(|| sibling(&a.out, "states"));
    write_series(
        &a.out,
        &SeriesTable::from_controls(1, None, &solution.primal_inputs)?,
    )?;
    write_series(
        &states_path,
        &SeriesTable::from_trajectory(1, None, &states)?,
    )?;
    writeln!(
        out,
        "objective = {:.9e}\nkkt_residual = {:.3e}\niterations = {}\nwrote inputs to {} and states to {}",
        solution.objective,
        solution.kkt_residual,
        solution.iterations,
        a.out.display(),
        states_path.display()
    )
    .map_err(stdout_err)
}
