use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use piezo_smc::controllers::{ControllerSpec, SmcpmcSpec};
use piezo_smc::error::{Error, Result};
use piezo_smc::harness::{
    cases_for, compare_controllers, compare_controllers_seq, descent_check, emit_comparison, emit_outputs, emit_phase,
    format_comparison, format_metrics, run_tracking, write_trace_csv, DatasetSource, Experiment, LabConfig, PhasePlane,
    TrackingRun,
};
use piezo_smc::plant::{simulate, SimConfig};
use piezo_smc::sysid::{format_fitted, identify, pulse_sweep, PulseDataset};

#[derive(Parser, Debug)]
#[command(
    name = "piezo-lab",
    version,
    about = "Piezo stage friction identification and tracking experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the friction coefficients to pulse plateaus and write `fitted.txt`.
    Identify {
        #[command(flatten)]
        common: Common,
        /// `u_volts,v_steady` CSV overriding the configured dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Open-loop plant response to the configured input.
    Simulate(Common),
    /// One closed-loop run with the configured controller.
    Track(Common),
    /// All configured controllers on the same reference, ranked by RMS error.
    Compare(Common),
    /// Closed-loop run plus the `(s, ṡ)` phase-plane samples.
    Phase(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration; every section is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized disturbances, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent runs; 0 uses every core, 1 runs
    /// sequentially.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
}

impl Common {
    fn load(&self) -> Result<(LabConfig, PathBuf)> {
        let (mut cfg, base) = match &self.config {
            Some(path) => {
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (LabConfig::load(path)?, base)
            }
            None => (LabConfig::default(), PathBuf::from(".")),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok((cfg, base))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let msg = err.to_string().replace('\n', " ");
            eprintln!("error: kind={} msg={msg}", err.kind());
            if err.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Identify { common, dataset } => cmd_identify(&common, dataset),
        Command::Simulate(common) => cmd_simulate(&common),
        Command::Track(common) => cmd_track(&common, false),
        Command::Phase(common) => cmd_track(&common, true),
        Command::Compare(common) => cmd_compare(&common),
    }
}

fn threads<R: Send>(common: &Common, f: impl FnOnce() -> R + Send) -> R {
    piezo_smc::parallel::with_threads(common.parallel, f)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_identify(common: &Common, dataset: Option<PathBuf>) -> Result<()> {
    let (cfg, base) = common.load()?;
    let params = cfg.plant.resolve(&base)?;
    let data = match dataset {
        Some(path) => PulseDataset::load_csv(&path)?,
        None => match &cfg.identify.dataset {
            DatasetSource::Reference => PulseDataset::reference(),
            DatasetSource::Csv { path } => PulseDataset::load_csv(&base.join(path))?,
            DatasetSource::Simulated { amplitudes_v, pulse } => {
                threads(common, || pulse_sweep(amplitudes_v, pulse, &params))?
            }
        },
    };
    let solution = identify(&data, params.alpha3)?;
    ensure_dir(&common.out)?;
    let fitted = format_fitted(&solution);
    write(&common.out.join("fitted.txt"), &fitted)?;
    let csv_path = common.out.join("dataset.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| Error::Io {
        path: csv_path.clone(),
        source: e,
    })?;
    data.write_csv(file).map_err(|e| Error::Csv {
        path: csv_path,
        source: e,
    })?;
    print!("{fitted}");
    Ok(())
}

fn cmd_simulate(common: &Common) -> Result<()> {
    let (cfg, base) = common.load()?;
    let params = cfg.plant.resolve(&base)?;
    let input = &cfg.simulate.input;
    input.validate()?;
    let duration = cfg.simulate.duration_s;
    let disturbance = cfg.disturbance.build(cfg.seed, duration)?;
    let config = SimConfig {
        dt: cfg.sim.dt_s,
        duration,
        u_sat: cfg.sim.u_sat_v,
        position_update: cfg.sim.position_update,
    };
    let trace = simulate(input, &disturbance, &config, &params)?;
    ensure_dir(&common.out)?;
    trace.save_csv(&common.out.join("trace.csv"), cfg.output.decimation)?;
    let (y_end, v_end) = (
        trace.y.last().copied().unwrap_or(0.0),
        trace.v.last().copied().unwrap_or(0.0),
    );
    println!("samples: {}", trace.len());
    println!("final_position_m: {y_end}");
    println!("final_velocity_m_s: {v_end}");
    Ok(())
}

/// Writes whatever was recorded before a divergence, then hands the error on.
fn keep_partial(err: Error, common: &Common, decimation: usize) -> Error {
    if let Error::Diverged { partial, .. } = &err {
        if ensure_dir(&common.out).is_ok() {
            let path = common.out.join("partial_trace.csv");
            if let Ok(file) = std::fs::File::create(&path) {
                let _ = write_trace_csv(partial, std::io::BufWriter::new(file), decimation);
            }
        }
    }
    err
}

fn cmd_track(common: &Common, phase: bool) -> Result<()> {
    let (cfg, base) = common.load()?;
    let exp = cfg.experiment(&base)?;
    let spec = &cfg.controller;
    let run = run_tracking(&exp, spec).map_err(|e| keep_partial(e, common, cfg.output.decimation))?;
    emit_outputs(&run, &common.out, "", cfg.output.decimation, cfg.output.plot_script)?;
    print!("{}", format_metrics(&run.metrics));
    if phase {
        report_phase(&run, &exp, spec, common, &cfg)?;
    }
    Ok(())
}

fn report_phase(
    run: &TrackingRun,
    exp: &Experiment,
    spec: &ControllerSpec,
    common: &Common,
    cfg: &LabConfig,
) -> Result<()> {
    let plane = PhasePlane::from_trace(&run.trace);
    emit_phase(&plane, &common.out, cfg.output.decimation)?;
    let gains = match spec {
        ControllerSpec::Smcpmc(s) => s.gains(),
        _ => SmcpmcSpec::default().gains(),
    };
    let band = 10.0 * gains.chattering_band();
    let report = descent_check(&plane, band, exp.metrics.window_start_s);
    println!("descent_band: {band}");
    println!("samples_outside_band: {}", report.outside);
    println!("descent_fraction: {}", report.descent_fraction());
    println!("max_abs_s_early: {}", report.max_s_early);
    println!("max_abs_s_late: {}", report.max_s_late);
    if cfg.output.plot_script {
        write(&common.out.join("phase_plot.py"), &phase_plot_script())?;
    }
    Ok(())
}

fn phase_plot_script() -> String {
    r#"#!/usr/bin/env python3
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "phase.csv")
with open(path, newline="") as f:
    rows = list(csv.DictReader(f))
s = [float(r["s"]) for r in rows]
sd = [float(r["s_dot"]) for r in rows]
fig, ax = plt.subplots(figsize=(6, 5))
ax.plot(s, sd, linewidth=0.6)
ax.set_xlabel("s")
ax.set_ylabel("ds/dt")
ax.set_title("phase plane")
fig.tight_layout()
out = os.path.splitext(path)[0] + ".png"
fig.savefig(out, dpi=150)
print(out)
"#
    .to_string()
}

fn cmd_compare(common: &Common) -> Result<()> {
    let (cfg, base) = common.load()?;
    if cfg.controllers.is_empty() {
        return Err(Error::Config("`controllers` must list at least one controller".into()));
    }
    let exp = cfg.experiment(&base)?;
    let cases = cases_for(&exp, &cfg.controllers);
    let cmp = if common.parallel == 1 {
        compare_controllers_seq(&cases)
    } else {
        threads(common, || compare_controllers(&cases))
    }
    .map_err(|e| keep_partial(e, common, cfg.output.decimation))?;
    emit_comparison(&cmp, &common.out, cfg.output.decimation, cfg.output.plot_script)?;
    print!("{}", format_comparison(&cmp));
    Ok(())
}
