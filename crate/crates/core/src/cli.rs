//! Command-line driver. Every failure prints one `error=<Code> ...` line on
//! stderr; exit codes are 0 (success or check passed), 1 (check failed),
//! 2 (usage or input error) and 3 (numerical failure).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    bench_filter, bench_to_csv, loglog_slope, monte_carlo_walk_check, oversmoothing_profile, WalkConfig,
};
use crate::approx::{convergence_study, fit_polynomial, fit_rational, FitFamily, TargetSignal};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::filter::{make_preset_from, FilterSpec, SolverMethod, SolverOptions};
use crate::graph::Graph;
use crate::io::{self, fmt_f64};
use crate::operator::{Scheme, SparseOperator};
use crate::spectral::{check_equivalence_with, eigendecompose, frequency_response, uniform_grid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Filter,
    Spectrum,
    Response,
    Equivalence,
    Fit,
    Converge,
    Oversmooth,
    Walkcheck,
    Bench,
}

/// Settings for one run. Loaded from `--config` JSON, then overridden by
/// any flag given on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub graph: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub filter: Option<String>,
    pub filter_spec: Option<PathBuf>,
    pub params: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub dim: Option<usize>,
    pub scheme: Option<String>,
    pub method: Option<String>,
    pub family: Option<String>,
    pub degree: Option<usize>,
    pub num_degree: Option<usize>,
    pub den_degree: Option<usize>,
    pub degrees: Option<Vec<usize>>,
    pub depths: Option<Vec<usize>>,
    pub window: Option<usize>,
    pub walks: Option<usize>,
    pub walk_length: Option<usize>,
    pub budget: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub reps: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "unifilter", version, about = "Spatial and spectral graph filter experiments")]
struct Args {
    /// Subcommand to run.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge list: `u v [w]` per line, `#` comments.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Feature matrix, one node per row. Random features are used if absent.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Preset name (gcn, sage, gin, chebnet, dcnn, sgc, ar_lp, ppnp, arma).
    #[arg(long)]
    filter: Option<String>,
    /// Filter spec JSON file, used instead of --filter.
    #[arg(long)]
    filter_spec: Option<PathBuf>,
    /// Preset parameter `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid size (response points, or fitting nodes for fit/converge).
    #[arg(long)]
    grid: Option<usize>,
    /// Columns of random features.
    #[arg(long)]
    dim: Option<usize>,
    /// Operator for `spectrum`.
    #[arg(long)]
    scheme: Option<String>,
    /// Rational solver: auto, cg, fixed_point, dense.
    #[arg(long)]
    method: Option<String>,
    /// Fit family: polynomial or rational.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    num_degree: Option<usize>,
    #[arg(long)]
    den_degree: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    walks: Option<usize>,
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("invalid number in `{s}`"))?;
    Ok((k.trim().to_string(), v))
}

macro_rules! overlay {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $( if $args.$field.is_some() { $cfg.$field = $args.$field; } )*
    };
}

impl RunConfig {
    fn from_args(args: Args) -> Result<RunConfig> {
        let mut cfg = match &args.config {
            Some(p) => serde_json::from_str::<RunConfig>(&io::read_text(p)?).map_err(|e| Error::ParseError {
                line: e.line(),
                column: e.column(),
                reason: e.to_string(),
            })?,
            None => RunConfig::default(),
        };
        overlay!(
            cfg, args, command, graph, features, filter, filter_spec, out, tol, seed, grid, dim, scheme, method,
            family, degree, num_degree, den_degree, degrees, depths, window, walks, walk_length, budget, sizes,
            reps
        );
        cfg.params.extend(args.params);
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig(format!("tolerance must be positive, got {t}")));
            }
        }
        for (name, p) in [("graph", &self.graph), ("features", &self.features), ("out", &self.out)] {
            if p.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
                return Err(Error::InvalidConfig(format!("--{name} path is empty")));
            }
        }
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn graph(&self) -> Result<Graph> {
        let path = self
            .graph
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("--graph is required".into()))?;
        io::parse_edge_list(&io::read_text(path)?, None)
    }

    fn features(&self, n: usize) -> Result<FeatureMatrix> {
        match &self.features {
            Some(p) => io::parse_features(&io::read_text(p)?),
            None => Ok(FeatureMatrix::random(n, self.dim.unwrap_or(4), self.seed())),
        }
    }

    fn filter_spec(&self) -> Result<FilterSpec> {
        match (&self.filter_spec, &self.filter) {
            (Some(p), _) => io::filter_spec_from_json(&io::read_text(p)?),
            (None, Some(name)) => make_preset_from(name, &self.params),
            (None, None) => Err(Error::InvalidConfig("--filter or --filter-spec is required".into())),
        }
    }

    fn solver(&self) -> Result<SolverOptions> {
        let mut opts = SolverOptions::default();
        if let Some(m) = &self.method {
            opts.method = SolverMethod::parse(m)?;
        }
        Ok(opts)
    }

    fn fit_family(&self) -> Result<FitFamily> {
        FitFamily::parse(self.family.as_deref().unwrap_or("polynomial"))
    }

    /// The jump signal unless a filter is named, in which case its response.
    fn target(&self) -> Result<TargetSignal> {
        if self.filter.is_some() || self.filter_spec.is_some() {
            TargetSignal::closed_form(self.filter_spec()?, (0.0, 2.0))
        } else {
            Ok(TargetSignal::jump())
        }
    }
}

/// Text written to `--out` (or stdout) and key=value report lines.
struct Output {
    artifact: Option<String>,
    report: Vec<String>,
    status: i32,
}

impl Output {
    fn artifact(text: String) -> Output {
        Output {
            artifact: Some(text),
            report: Vec::new(),
            status: EXIT_OK,
        }
    }
}

fn execute(cfg: &RunConfig) -> Result<Output> {
    cfg.validate()?;
    let command = cfg
        .command
        .ok_or_else(|| Error::InvalidConfig("no command given".into()))?;
    match command {
        Command::Filter => {
            let g = cfg.graph()?;
            let x = cfg.features(g.num_nodes())?;
            let z = cfg.filter_spec()?.apply(&g, &x, &cfg.solver()?)?;
            Ok(Output::artifact(io::matrix_to_csv(z.as_matrix())))
        }
        Command::Spectrum => {
            let g = cfg.graph()?;
            let scheme = Scheme::parse(cfg.scheme.as_deref().unwrap_or("lap_sym"))?;
            let dec = eigendecompose(&SparseOperator::build(&g, scheme))?;
            let mut text = String::from("index,eigenvalue\n");
            for (i, l) in dec.eigenvalues.iter().enumerate() {
                text.push_str(&format!("{i},{}\n", fmt_f64(*l)));
            }
            Ok(Output::artifact(text))
        }
        Command::Response => {
            let f = cfg.filter_spec()?;
            let grid = uniform_grid(0.0, 2.0, cfg.grid.unwrap_or(crate::spectral::DEFAULT_GRID_POINTS));
            Ok(Output::artifact(frequency_response(&f, &grid)?.to_csv()))
        }
        Command::Equivalence => {
            let g = cfg.graph()?;
            let x = cfg.features(g.num_nodes())?;
            let tol = cfg.tol.unwrap_or(1e-8);
            let r = check_equivalence_with(&cfg.filter_spec()?, &g, &x, tol, &cfg.solver()?)?;
            Ok(Output {
                artifact: None,
                report: vec![
                    format!("max_rel_error={}", fmt_f64(r.max_rel_error)),
                    format!("tol={}", fmt_f64(tol)),
                    format!("pass={}", r.pass),
                ],
                status: if r.pass { EXIT_OK } else { EXIT_CHECK_FAILED },
            })
        }
        Command::Fit => {
            let target = cfg.target()?;
            let grid = cfg.grid.unwrap_or(512);
            let fit = match cfg.fit_family()? {
                FitFamily::Polynomial => fit_polynomial(&target, cfg.degree.unwrap_or(8), grid)?,
                FitFamily::Rational => {
                    let k = cfg.num_degree.or(cfg.degree).unwrap_or(4);
                    let n = cfg.den_degree.or(cfg.degree).unwrap_or(4);
                    fit_rational(&target, k, n, grid)?
                }
            };
            Ok(Output {
                artifact: Some(io::filter_spec_to_json(&fit.filter) + "\n"),
                report: vec![
                    format!("max_error={}", fmt_f64(fit.max_error)),
                    format!("rms_error={}", fmt_f64(fit.rms_error)),
                    format!("iterations={}", fit.iterations_used),
                ],
                status: EXIT_OK,
            })
        }
        Command::Converge => {
            let family = cfg.fit_family()?;
            let degrees = cfg.degrees.clone().unwrap_or_else(|| match family {
                FitFamily::Polynomial => vec![4, 8, 16, 32, 64],
                FitFamily::Rational => vec![2, 4, 6, 8, 10],
            });
            let study = convergence_study(&cfg.target()?, family, &degrees, cfg.grid.unwrap_or(512))?;
            Ok(Output {
                artifact: Some(study.to_csv()),
                report: vec![study.summary()],
                status: EXIT_OK,
            })
        }
        Command::Oversmooth => {
            let g = cfg.graph()?;
            let x = cfg.features(g.num_nodes())?;
            let depths = cfg
                .depths
                .clone()
                .unwrap_or_else(|| vec![0, 1, 2, 4, 8, 16, 32, 64, 128, 200]);
            let p = oversmoothing_profile(&g, &x, &cfg.filter_spec()?, &depths)?;
            let mut out = Output::artifact(p.to_csv());
            out.report.push(format!("connected={}", p.connected));
            Ok(out)
        }
        Command::Walkcheck => {
            let g = cfg.graph()?;
            let window = cfg.window.unwrap_or(1);
            let mut wc = WalkConfig::new(window, cfg.walks.unwrap_or(50_000), cfg.seed());
            wc.walk_length = cfg.walk_length.unwrap_or(window);
            if let Some(b) = cfg.budget {
                wc.budget = b;
            }
            let tol = cfg.tol.unwrap_or(0.01);
            let r = monte_carlo_walk_check(&g, &wc)?;
            let pass = r.max_abs_dev <= tol;
            Ok(Output {
                artifact: cfg.out.as_ref().map(|_| io::matrix_to_csv(&r.empirical)),
                report: vec![
                    format!("max_abs_dev={}", fmt_f64(r.max_abs_dev)),
                    format!("tol={}", fmt_f64(tol)),
                    format!("pass={pass}"),
                ],
                status: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
            })
        }
        Command::Bench => {
            let f = cfg.filter_spec()?;
            let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![1000, 2000, 4000]);
            let rows = bench_filter(&f, &sizes, cfg.dim.unwrap_or(32), cfg.reps.unwrap_or(5), cfg.seed())?;
            let mut out = Output::artifact(bench_to_csv(&rows));
            if rows.len() >= 2 {
                let xs: Vec<f64> = rows.iter().map(|r| r.num_nodes as f64).collect();
                let ys: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
                out.report.push(format!("slope_vs_n={}", fmt_f64(loglog_slope(&xs, &ys))));
            }
            Ok(out)
        }
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// exit code.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "error=Usage {first}");
            return EXIT_USAGE;
        }
    };
    let result = RunConfig::from_args(args).and_then(|cfg| {
        let out = execute(&cfg)?;
        if let Some(text) = &out.artifact {
            match &cfg.out {
                Some(p) => io::write_text(p, text)?,
                None => stdout.write_all(text.as_bytes())?,
            }
        }
        for line in &out.report {
            writeln!(stdout, "{line}")?;
        }
        Ok(out.status)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error={} {}", e.code(), e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
