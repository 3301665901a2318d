use clap::{Args, Parser, Subcommand, ValueEnum};
use lane_morse_cli::{
    limits_report, print_report_line, run_instance, run_sweep, write_eigenfunctions_csv,
    write_instance_files, write_sweep_files, AnnulusMode, SweepConfig,
};
use lane_morse::radial::ProfileSidecar;
use lane_morse::spectral::{choose_n, radial_spectrum, AnnulusSpec, SelectionMode};
use lane_morse::{solve_m_nodal, ProblemSpec};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lane-morse",
    about = "Nodal radial solutions of the Lane-Emden problem and the spectrum of the linearized operator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct InstanceArgs {
    /// Space dimension N >= 3
    #[arg(long, default_value_t = 3)]
    dim: u32,
    /// Number of nodal regions m >= 1
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Exponent p in (1, (N+2)/(N-2))
    #[arg(long)]
    p: f64,
    /// Annulus parameter: "auto" or an explicit integer
    #[arg(long, default_value = "auto")]
    n: String,
    /// Log-radius grid intervals
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    #[arg(long = "tol-ivp", default_value_t = 1e-10)]
    tol_ivp: f64,
    #[arg(long = "tol-eig", default_value_t = 1e-6)]
    tol_eig: f64,
    /// Sign margin below which eigenvalue signs are not committed
    #[arg(long, default_value_t = 1e-7)]
    margin: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl InstanceArgs {
    fn spec(&self) -> Result<ProblemSpec, String> {
        ProblemSpec::new(self.dim, self.p, self.m).map_err(|e| e.to_string())
    }

    fn config(&self) -> Result<SweepConfig, String> {
        let annulus = match self.n.as_str() {
            "auto" => AnnulusMode::Auto,
            k => AnnulusMode::Explicit(
                k.parse::<u64>().map_err(|_| format!("--n must be 'auto' or an integer, got {k}"))?,
            ),
        };
        Ok(SweepConfig {
            dim: self.dim,
            m_list: vec![self.m],
            p_list: vec![self.p],
            grid: self.grid,
            annulus,
            tol_ivp: self.tol_ivp,
            tol_eigen: self.tol_eig,
            sign_margin: self.margin,
            out_dir: self.out.clone(),
            ..SweepConfig::default()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the m-nodal radial problem and write the profile + nodal data
    Solve(InstanceArgs),
    /// Radial eigenvalues of the linearized operator on the annulus
    Spectrum(InstanceArgs),
    /// Morse index report for a single instance
    Morse(InstanceArgs),
    /// Full verification sweep over an exponent list
    Sweep {
        /// JSON config file mirroring the sweep configuration
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dim: Option<u32>,
        /// Comma-separated nodal counts
        #[arg(long = "m-list", value_delimiter = ',')]
        m_list: Option<Vec<u32>>,
        /// Comma-separated exponents (strictly increasing)
        #[arg(long = "p-list", value_delimiter = ',')]
        p_list: Option<Vec<f64>>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long = "tol-ivp")]
        tol_ivp: Option<f64>,
        #[arg(long = "tol-eig")]
        tol_eig: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form limit objects: constants and residuals
    Limits {
        /// Comma-separated dimensions
        #[arg(long, value_delimiter = ',', default_value = "3,4,5,6")]
        dims: Vec<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(args) => {
            let spec = args.spec()?;
            let (profile, nodal) = solve_m_nodal(&spec, args.tol_ivp).map_err(|e| e.to_string())?;
            fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
            let tag = format!("N{}_m{}_p{}", spec.dim(), spec.nodal_count(), spec.exponent());
            let mut csv = Vec::new();
            profile.write_csv(&mut csv).map_err(|e| e.to_string())?;
            fs::write(args.out.join(format!("solution_{tag}.csv")), csv).map_err(|e| e.to_string())?;
            let sidecar = ProfileSidecar {
                spec: &spec,
                nodal_radii: &nodal.nodal_radii,
                critical_radii: &nodal.critical_radii,
                extrema: &nodal.extrema,
                ivp_tolerance: profile.ivp_tolerance(),
                rescaling_radius: profile.scale(),
            };
            fs::write(
                args.out.join(format!("solution_{tag}.json")),
                serde_json::to_string_pretty(&sidecar).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            println!(
                "{spec}: nodal radii {:?}, extrema {:?}",
                nodal.nodal_radii, nodal.extrema
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum(args) => {
            let spec = args.spec()?;
            let cfg = args.config()?;
            let (profile, nodal) = solve_m_nodal(&spec, cfg.tol_ivp).map_err(|e| e.to_string())?;
            let annulus = match cfg.annulus {
                AnnulusMode::Explicit(n) => AnnulusSpec::explicit(n as f64),
                AnnulusMode::Auto => {
                    choose_n(&profile, &nodal, SelectionMode::Stabilized, cfg.grid.min(2048))
                        .map_err(|e| e.to_string())?
                }
            };
            let sp = radial_spectrum(
                &profile,
                &annulus,
                spec.nodal_count() as usize + 3,
                cfg.grid,
                cfg.sign_margin,
            );
            fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
            let tag = format!("N{}_m{}_p{}", spec.dim(), spec.nodal_count(), spec.exponent());
            fs::write(
                args.out.join(format!("spectrum_{tag}.json")),
                serde_json::to_string_pretty(&sp).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            if matches!(args.format, Format::Csv) {
                write_eigenfunctions_csv(&sp, &args.out, &tag).map_err(|e| e.to_string())?;
            }
            println!(
                "{spec}: n {:.3e}, weighted negatives {}, plain negatives {}, oscillation {}",
                sp.n, sp.negative_count_weighted, sp.negative_count_plain, sp.oscillation_count
            );
            for (i, e) in sp.weighted.iter().take(spec.nodal_count() as usize + 3).enumerate() {
                println!("  beta~_{} = {:+.9e} (grid error {:.1e})", i + 1, e.value, e.grid_error);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Morse(args) => {
            let spec = args.spec()?;
            let cfg = args.config()?;
            let run = run_instance(&spec, &cfg).map_err(|e| e.to_string())?;
            write_instance_files(&run, &args.out).map_err(|e| e.to_string())?;
            print_report_line(std::io::stdout(), &run).map_err(|e| e.to_string())?;
            Ok(if run.report.as_ref().is_some_and(|r| r.satisfies_lower_bound) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Sweep { config, dim, m_list, p_list, grid, tol_ivp, tol_eig, margin, out } => {
            let mut cfg: SweepConfig = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
                    serde_json::from_str(&text).map_err(|e| e.to_string())?
                }
                None => SweepConfig::default(),
            };
            if let Some(v) = dim {
                cfg.dim = v;
            }
            if let Some(v) = m_list {
                cfg.m_list = v;
            }
            if let Some(v) = p_list {
                cfg.p_list = v;
            }
            if let Some(v) = grid {
                cfg.grid = v;
            }
            if let Some(v) = tol_ivp {
                cfg.tol_ivp = v;
            }
            if let Some(v) = tol_eig {
                cfg.tol_eigen = v;
            }
            if let Some(v) = margin {
                cfg.sign_margin = v;
            }
            if let Some(v) = out {
                cfg.out_dir = v;
            }
            let output = run_sweep(&cfg).map_err(|e| e.to_string())?;
            write_sweep_files(&cfg, &output).map_err(|e| e.to_string())?;
            for run in &output.instances {
                print_report_line(std::io::stdout(), run).map_err(|e| e.to_string())?;
            }
            for (m, threshold) in &output.thresholds {
                match threshold {
                    Some(p) => println!("m = {m}: formula locked from p = {p}"),
                    None => println!("m = {m}: formula not locked on this sweep"),
                }
            }
            println!(
                "unresolved {}, lower-bound violations {}",
                output.unresolved, output.lower_bound_violations
            );
            Ok(if output.lower_bound_violations > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Limits { dims, out } => {
            let report = limits_report(&dims, 1e-10);
            fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            fs::write(
                out.join("limits.json"),
                serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            for (i, &d) in report.dims.iter().enumerate() {
                println!(
                    "N={d}: sobolev energy {:.9e}, bubble residual {:.2e}, minimizer residual {:.2e}, rayleigh {:+.9}",
                    report.constants[i].sobolev_energy,
                    report.bubble_residuals[i],
                    report.eta_residuals[i],
                    report.rayleigh_values[i]
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
