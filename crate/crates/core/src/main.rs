use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hjhomog::experiments::{
    audit, dump_paths, effective_h_table, run_checks, run_rate_study, write_report, Evaluator, ExperimentConfig,
    CROSS_ORACLE_CELLS,
};
use hjhomog::oracle::{fd_solve_oscillatory, FdSettings, FdWindow};
use hjhomog::trajectories::Query;
use hjhomog::values::{u_eps, u_effective, ValueReport};
use hjhomog::Error;

#[derive(Parser)]
#[command(name = "hjhomog", version, about = "Homogenization experiments for 1-d Hamilton-Jacobi equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate u^eps and u at one probe.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Probe position; defaults to the first configured probe.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
        /// Defaults to the first epsilon of the ladder.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Convergence-rate study over the epsilon ladder.
    Rate {
        #[command(flatten)]
        common: Common,
    },
    /// Assumption audit and certificate table.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Trajectories of the winning paths and separatrices.
    DumpPaths {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the effective Hamiltonian.
    EffectiveH {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `evaluator` in the config.
    #[arg(long, value_parser = ["action", "fd", "both"])]
    evaluator: Option<String>,
    /// Run even when the assumption audit fails.
    #[arg(long)]
    force: bool,
}

enum Failure {
    Config(String),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Io { .. } => Failure::Config(e.to_string()),
            other => Failure::Assertion(other.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(e) = &self.evaluator {
            cfg.evaluator = Evaluator::parse(e).expect("clap restricts the values");
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        Ok(cfg)
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Failure> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Failure::from(Error::Io { path, source })
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(io(&path))?;
    Ok(path)
}

fn report_json(r: &ValueReport) -> String {
    format!(
        "{{\"value\": {}, \"normalized\": {}, \"winner\": \"{}\", \"endpoint\": {}}}",
        r.value, r.normalized, r.winner, r.endpoint
    )
}

fn solve(common: &Common, x0: Option<f64>, t0: Option<f64>, eps: Option<f64>) -> Outcome {
    let cfg = common.load()?;
    let models = cfg.models()?;
    let (px, pt) = cfg.probes[0];
    let eps = eps.unwrap_or(cfg.epsilons[0]);
    let q = Query::new(x0.unwrap_or(px), t0.unwrap_or(pt), eps, cfg.half_width, cfg.horizon)?;
    let mut fields = vec![
        format!("\"x0\": {}", q.x0),
        format!("\"t0\": {}", q.t0),
        format!("\"eps\": {}", q.eps),
        format!("\"config_hash\": \"{}\"", cfg.hash()),
    ];
    let mut action = None;
    if cfg.evaluator.uses_action() {
        let r = u_eps(&models, &q)?;
        action = Some(r.value);
        fields.push(format!("\"u_eps\": {}", report_json(&r)));
    }
    let mut ok = true;
    if cfg.evaluator.uses_fd() {
        let dx = cfg.dx(eps);
        let grid = fd_solve_oscillatory(&models, eps, &FdWindow::new(cfg.half_width, cfg.horizon, &[q.t0])?, &FdSettings::new(dx))?;
        let fd = grid.value_at(q.x0, q.t0)? - models.c0_shift * q.t0;
        fields.push(format!("\"u_eps_fd\": {fd}"));
        fields.push(format!("\"dx\": {dx}"));
        if let Some(a) = action {
            let gap = (a - fd).abs();
            ok = gap <= CROSS_ORACLE_CELLS * dx;
            fields.push(format!("\"cross_oracle_gap\": {gap}"));
        }
    }
    fields.push(format!("\"u\": {}", report_json(&u_effective(&models, &q)?)));
    println!("{{\n  {}\n}}", fields.join(",\n  "));
    Ok(ok)
}

fn rate(common: &Common) -> Outcome {
    let cfg = common.load()?;
    if !common.force {
        let report = audit(&cfg, &cfg.models()?);
        if !report.all_passed() {
            let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
            return Err(Failure::Assertion(format!(
                "assumption audit failed ({}); rerun with --force to proceed",
                failed.join(", ")
            )));
        }
    }
    let report = run_rate_study(&cfg)?;
    write_report(&report, &cfg.output)?;
    print!("{}", report.summary());
    println!("wrote {}", cfg.output.join("rate.csv").display());
    Ok(report.passed())
}

fn check(common: &Common) -> Outcome {
    let cfg = common.load()?;
    let report = run_checks(&cfg);
    let table = report.to_table();
    print!("{table}");
    write(&cfg.output, "check.txt", &table)?;
    Ok(report.all_passed())
}

fn dump(common: &Common, name: &str, f: fn(&ExperimentConfig) -> hjhomog::Result<String>) -> Outcome {
    let cfg = common.load()?;
    let path = write(&cfg.output, name, &f(&cfg)?)?;
    println!("wrote {}", path.display());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { common, x0, t0, eps } => solve(common, *x0, *t0, *eps),
        Command::Rate { common } => rate(common),
        Command::Check { common } => check(common),
        Command::DumpPaths { common } => dump(common, "paths.csv", dump_paths),
        Command::EffectiveH { common } => dump(common, "effective_h.csv", effective_h_table),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Assertion(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
