//! Sweep harness: run instances across an exponent sweep, enforce the
//! sign-margin refinement policy, and emit machine-readable reports.

use lane_morse::angular::AngularSpectrum;
use lane_morse::asymptotics::{diagnostics_row, sweep_diagnostics, DiagnosticsRow, SweepDiagnostics};
use lane_morse::estimates::energy_per_region;
use lane_morse::limit;
use lane_morse::morse::{combine_spectra, morse_report, CombineError, MorseReport};
use lane_morse::radial::{NodalData, ProfileSidecar, RadialProfile};
use lane_morse::spectral::{
    choose_n, radial_spectrum, window_tuned_annulus, AnnulusSpec, RadialSpectrum, SelectionMode,
};
use lane_morse::{critical_exponent, solve_m_nodal, ProblemSpec};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnulusMode {
    /// Stabilize counts, then tune the annulus so the m-th weighted
    /// eigenvalue sits mid-window.
    #[default]
    Auto,
    /// Fixed n.
    Explicit(u64),
}

fn default_eps() -> Vec<f64> {
    vec![0.5, 0.2, 0.1, 0.05, 0.02, 0.01]
}

/// Sweep configuration; every field has a sensible default so partial
/// JSON configs work.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub dim: u32,
    pub m_list: Vec<u32>,
    /// Explicit exponent list; when empty, `p_S - eps` over `eps_list`.
    pub p_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub grid: usize,
    pub grid_max: usize,
    pub annulus: AnnulusMode,
    pub tol_ivp: f64,
    pub tol_eigen: f64,
    pub sign_margin: f64,
    pub tol_quad: f64,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            m_list: vec![1, 2, 3],
            p_list: Vec::new(),
            eps_list: default_eps(),
            grid: 4096,
            grid_max: 16384,
            annulus: AnnulusMode::Auto,
            tol_ivp: 1e-10,
            tol_eigen: 1e-6,
            sign_margin: 1e-7,
            tol_quad: 1e-10,
            out_dir: PathBuf::from("out"),
            workers: 4,
        }
    }
}

impl SweepConfig {
    pub fn exponents(&self) -> Result<Vec<f64>, HarnessError> {
        let ps = critical_exponent(self.dim);
        let list: Vec<f64> = if self.p_list.is_empty() {
            let mut eps = self.eps_list.clone();
            eps.sort_by(|a, b| b.total_cmp(a));
            eps.iter().map(|e| ps - e).collect()
        } else {
            self.p_list.clone()
        };
        if list.is_empty() {
            return Err(HarnessError::EmptyExponentList);
        }
        if !list.windows(2).all(|w| w[0] < w[1]) {
            return Err(HarnessError::ExponentsNotIncreasing);
        }
        if list.iter().any(|&p| p <= 1.0 || p >= ps) {
            return Err(HarnessError::ExponentOutOfRange { ps });
        }
        Ok(list)
    }
}

#[derive(Debug)]
pub enum HarnessError {
    EmptyExponentList,
    ExponentsNotIncreasing,
    ExponentOutOfRange { ps: f64 },
    Io(std::io::Error),
    Json(serde_json::Error),
    Solve(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyExponentList => write!(f, "exponent list is empty"),
            Self::ExponentsNotIncreasing => write!(f, "exponent list must be strictly increasing"),
            Self::ExponentOutOfRange { ps } => {
                write!(f, "exponents must lie strictly inside (1, {ps})")
            }
            Self::Io(e) => write!(f, "io error: {e}"),
            Self::Json(e) => write!(f, "json error: {e}"),
            Self::Solve(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        Self::Json(e)
    }
}

/// One step of the refinement trail.
#[derive(Debug, Clone, Serialize)]
pub struct TrailEntry {
    pub stage: String,
    pub grid: usize,
    pub n: f64,
    pub detail: String,
}

/// Everything computed for one `(N, m, p)` instance. The serialized
/// report carries the verdict; the profile stays in memory for the
/// sweep-level diagnostics.
pub struct InstanceRun {
    pub spec: ProblemSpec,
    pub profile: RadialProfile,
    pub nodal: NodalData,
    pub spectrum: RadialSpectrum,
    pub report: Option<MorseReport>,
    pub unresolved: Option<String>,
    pub trail: Vec<TrailEntry>,
    pub region_energies: Vec<f64>,
}

/// Serializable instance verdict.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceReport {
    pub spec: ProblemSpec,
    pub resolved: bool,
    pub unresolved_reason: Option<String>,
    pub report: Option<MorseReport>,
    pub negative_count_plain: usize,
    pub negative_count_weighted: usize,
    pub oscillation_count: usize,
    pub trail: Vec<TrailEntry>,
}

/// Solve one instance end to end: solve, choose the annulus, compute
/// the spectrum with grid refinement until the eigenvalue tolerance is
/// met, combine with the sphere spectrum and report. Indeterminate
/// signs trigger grid then annulus refinement; exhaustion marks the
/// instance unresolved rather than fabricating a sign.
pub fn run_instance(spec: &ProblemSpec, cfg: &SweepConfig) -> Result<InstanceRun, HarnessError> {
    let (profile, nodal) =
        solve_m_nodal(spec, cfg.tol_ivp).map_err(|e| HarnessError::Solve(format!("{spec}: {e}")))?;
    let m = spec.nodal_count() as usize;
    let mut trail = Vec::new();

    let annulus = match cfg.annulus {
        AnnulusMode::Explicit(n) => AnnulusSpec::explicit(n as f64),
        AnnulusMode::Auto => {
            let stab = choose_n(&profile, &nodal, SelectionMode::Stabilized, cfg.grid.min(2048))
                .map_err(|e| HarnessError::Solve(format!("{spec}: {e}")))?;
            trail.push(TrailEntry {
                stage: "stabilize".into(),
                grid: cfg.grid.min(2048),
                n: stab.n,
                detail: "negative counts stable across two doublings".into(),
            });
            let tuned = window_tuned_annulus(&profile, m, 16.0, stab.n, cfg.grid.min(2048));
            trail.push(TrailEntry {
                stage: "window-tune".into(),
                grid: cfg.grid.min(2048),
                n: tuned.n,
                detail: "m-th weighted eigenvalue placed mid-window".into(),
            });
            tuned
        }
    };

    let angular_floor = |sp: &RadialSpectrum| sp.weighted.iter().map(|e| e.value).fold(0.0, f64::min);

    let mut grid = cfg.grid;
    let mut n_current = annulus;
    let mut spectrum;
    let outcome = 'refine: loop {
        spectrum = radial_spectrum(&profile, &n_current, m + 3, grid, cfg.sign_margin);
        let worst_err = spectrum
            .weighted
            .iter()
            .take(m + 1)
            .map(|e| e.grid_error)
            .fold(0.0, f64::max);
        if worst_err > cfg.tol_eigen && grid < cfg.grid_max {
            trail.push(TrailEntry {
                stage: "grid-refine".into(),
                grid,
                n: n_current.n,
                detail: format!("grid error {worst_err:.2e} above eigen tolerance"),
            });
            grid *= 2;
            continue;
        }
        let angular = AngularSpectrum::covering(spec.dim(), angular_floor(&spectrum) - 1.0);
        match combine_spectra(&spectrum, &angular) {
            Ok(comb) if comb.indeterminate.is_empty() => break 'refine Ok((comb, angular)),
            Ok(comb) => {
                trail.push(TrailEntry {
                    stage: "indeterminate-pairs".into(),
                    grid,
                    n: n_current.n,
                    detail: format!("{} near-zero combinations", comb.indeterminate.len()),
                });
                if grid < cfg.grid_max {
                    grid *= 2;
                    continue;
                }
                if n_current.n < 1e20 {
                    n_current = AnnulusSpec::explicit(n_current.n * 4.0);
                    grid = cfg.grid;
                    continue;
                }
                break 'refine Err(format!(
                    "{} combinations within the sign margin after refinement",
                    comb.indeterminate.len()
                ));
            }
            Err(CombineError::IndeterminateRadial { index, value, grid_error }) => {
                trail.push(TrailEntry {
                    stage: "indeterminate-radial".into(),
                    grid,
                    n: n_current.n,
                    detail: format!("beta~_{index} = {value:.3e} (grid error {grid_error:.1e})"),
                });
                if grid < cfg.grid_max {
                    grid *= 2;
                    continue;
                }
                if n_current.n < 1e20 {
                    n_current = AnnulusSpec::explicit(n_current.n * 4.0);
                    grid = cfg.grid;
                    continue;
                }
                break 'refine Err(format!("radial eigenvalue {index} undecidable at this exponent"));
            }
            Err(e) => break 'refine Err(e.to_string()),
        }
    };

    let energies: Vec<f64> = energy_per_region(&profile, &nodal, cfg.tol_quad)
        .iter()
        .map(|e| e.gradient)
        .collect();

    match outcome {
        Ok((comb, angular)) => {
            let report = morse_report(spec, &spectrum, &angular, &comb);
            Ok(InstanceRun {
                spec: *spec,
                profile,
                nodal,
                spectrum,
                report: Some(report),
                unresolved: None,
                trail,
                region_energies: energies,
            })
        }
        Err(reason) => Ok(InstanceRun {
            spec: *spec,
            profile,
            nodal,
            spectrum,
            report: None,
            unresolved: Some(reason),
            trail,
            region_energies: energies,
        }),
    }
}

impl InstanceRun {
    pub fn to_report(&self) -> InstanceReport {
        InstanceReport {
            spec: self.spec,
            resolved: self.unresolved.is_none(),
            unresolved_reason: self.unresolved.clone(),
            report: self.report.clone(),
            negative_count_plain: self.spectrum.negative_count_plain,
            negative_count_weighted: self.spectrum.negative_count_weighted,
            oscillation_count: self.spectrum.oscillation_count,
            trail: self.trail.clone(),
        }
    }

    pub fn summary_row(&self) -> String {
        let (n_used, grid, morse, formula, radial, matches) = match &self.report {
            Some(r) => (
                r.n_used,
                r.grid_size,
                r.morse_index.to_string(),
                r.formula_value.to_string(),
                r.radial_morse_index.to_string(),
                r.matches_formula.to_string(),
            ),
            None => (
                self.spectrum.n,
                self.spectrum.grid_size,
                "unresolved".into(),
                String::new(),
                self.spectrum.negative_count_weighted.to_string(),
                "false".into(),
            ),
        };
        let flags = if self.unresolved.is_some() { "unresolved" } else { "" };
        format!(
            "{},{},{},{:.6e},{},{},{},{},{},{}",
            self.spec.dim(),
            self.spec.nodal_count(),
            self.spec.exponent(),
            n_used,
            grid,
            morse,
            formula,
            radial,
            matches,
            flags
        )
    }
}

pub const SUMMARY_HEADER: &str =
    "N,m,p,n,grid,morse_index,formula_value,radial_index,match,threshold_flags";

/// Full sweep output.
pub struct SweepOutput {
    pub instances: Vec<InstanceRun>,
    pub diagnostics: Vec<(u32, SweepDiagnostics)>,
    pub constants: limit::LimitConstants,
    /// First exponent per m from which the formula match holds through
    /// the end of the sweep.
    pub thresholds: Vec<(u32, Option<f64>)>,
    pub lower_bound_violations: usize,
    pub unresolved: usize,
}

/// Run every `(m, p)` instance of the sweep on a small worker pool and
/// merge results in deterministic `(m, p)` order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput, HarnessError> {
    let exponents = cfg.exponents()?;
    let mut jobs = Vec::new();
    for &m in &cfg.m_list {
        for &p in &exponents {
            jobs.push(ProblemSpec::new(cfg.dim, p, m).map_err(|e| HarnessError::Solve(e.to_string()))?);
        }
    }
    let results: Vec<Option<Result<InstanceRun, HarnessError>>> =
        (0..jobs.len()).map(|_| None).collect();
    let results = Mutex::new(results);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let workers = cfg.workers.clamp(1, 16);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                let run = run_instance(&jobs[idx], cfg);
                results.lock().unwrap()[idx] = Some(run);
            });
        }
    });
    let mut instances = Vec::with_capacity(jobs.len());
    for slot in results.into_inner().unwrap() {
        instances.push(slot.expect("worker left a job unfinished")?);
    }

    // per-m diagnostics over the sweep
    let mut diagnostics = Vec::new();
    for &m in &cfg.m_list {
        let rows: Vec<DiagnosticsRow> = instances
            .iter()
            .filter(|r| r.spec.nodal_count() == m)
            .map(|r| {
                diagnostics_row(
                    r.spec.exponent(),
                    &r.profile,
                    &r.nodal,
                    &r.region_energies,
                    (0.1, 5.0),
                )
            })
            .collect();
        if rows.len() >= 3 {
            diagnostics.push((m, sweep_diagnostics(rows).expect("rows keyed by p")));
        }
    }

    let thresholds = cfg
        .m_list
        .iter()
        .map(|&m| {
            let per_m: Vec<&InstanceRun> =
                instances.iter().filter(|r| r.spec.nodal_count() == m).collect();
            let locked_from = (0..per_m.len()).find(|&i| {
                per_m[i..]
                    .iter()
                    .all(|r| r.report.as_ref().is_some_and(|rep| rep.matches_formula))
            });
            (m, locked_from.map(|i| per_m[i].spec.exponent()))
        })
        .collect();

    let lower_bound_violations = instances
        .iter()
        .filter(|r| r.report.as_ref().is_some_and(|rep| !rep.satisfies_lower_bound))
        .count();
    let unresolved = instances.iter().filter(|r| r.unresolved.is_some()).count();

    Ok(SweepOutput {
        diagnostics,
        constants: limit::constants(cfg.dim),
        thresholds,
        lower_bound_violations,
        unresolved,
        instances,
    })
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_instance_files(run: &InstanceRun, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let tag = format!(
        "N{}_m{}_p{}",
        run.spec.dim(),
        run.spec.nodal_count(),
        run.spec.exponent()
    );
    let mut csv = Vec::new();
    run.profile.write_csv(&mut csv)?;
    fs::write(dir.join(format!("solution_{tag}.csv")), csv)?;
    let sidecar = ProfileSidecar {
        spec: &run.spec,
        nodal_radii: &run.nodal.nodal_radii,
        critical_radii: &run.nodal.critical_radii,
        extrema: &run.nodal.extrema,
        ivp_tolerance: run.profile.ivp_tolerance(),
        rescaling_radius: run.profile.scale(),
    };
    fs::write(dir.join(format!("solution_{tag}.json")), to_json_pretty(&sidecar)?)?;
    fs::write(dir.join(format!("spectrum_{tag}.json")), to_json_pretty(&run.spectrum)?)?;
    fs::write(dir.join(format!("morse_{tag}.json")), to_json_pretty(&run.to_report())?)?;
    Ok(())
}

pub fn write_eigenfunctions_csv(spectrum: &RadialSpectrum, dir: &Path, tag: &str) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    for ef in &spectrum.eigenfunctions {
        let mut out = String::from("r,value\n");
        for (r, v) in ef.r.iter().zip(&ef.values) {
            out.push_str(&format!("{r:.17e},{v:.17e}\n"));
        }
        fs::write(dir.join(format!("eigenfunction_{tag}_{}.csv", ef.index)), out)?;
    }
    Ok(())
}

fn diag_columns(d: &SweepDiagnostics) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut cols: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut push = |name: String, values: Vec<(f64, f64)>| {
        if values.iter().all(|(_, v)| v.is_finite()) {
            cols.push((name, values));
        }
    };
    let rows = &d.rows;
    let width = |f: &dyn Fn(&DiagnosticsRow) -> &Vec<f64>| f(&rows[0]).len();
    macro_rules! vec_col {
        ($field:ident, $name:expr) => {
            for j in 0..width(&|r| &r.$field) {
                push(
                    format!("{}{}", $name, j + 1),
                    rows.iter().map(|r| (r.p, r.$field[j])).collect(),
                );
            }
        };
    }
    vec_col!(a_cols, "A");
    vec_col!(b_cols, "B");
    vec_col!(c_cols, "C");
    vec_col!(r_cols, "R");
    vec_col!(ratio_cols, "Mratio");
    push("M0".into(), rows.iter().map(|r| (r.p, r.m0)).collect());
    for j in 0..rows[0].bubble_distance.len() {
        push(
            format!("dist{j}"),
            rows.iter().map(|r| (r.p, r.bubble_distance[j])).collect(),
        );
    }
    for j in 0..rows[0].energies.len() {
        push(
            format!("energy{j}"),
            rows.iter().map(|r| (r.p, r.energies[j])).collect(),
        );
    }
    cols
}

pub fn write_sweep_files(cfg: &SweepConfig, out: &SweepOutput) -> Result<(), HarnessError> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), to_json_pretty(cfg)?)?;

    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for run in &out.instances {
        summary.push_str(&run.summary_row());
        summary.push('\n');
    }
    fs::write(dir.join("summary.csv"), summary)?;

    for run in &out.instances {
        write_instance_files(run, &dir.join("instances"))?;
    }

    for (m, d) in &out.diagnostics {
        let mut csv = String::from("p");
        let cols = diag_columns(d);
        for (name, _) in &cols {
            csv.push(',');
            csv.push_str(name);
        }
        csv.push('\n');
        for (i, row) in d.rows.iter().enumerate() {
            csv.push_str(&format!("{}", row.p));
            for (_, values) in &cols {
                csv.push_str(&format!(",{:.12e}", values[i].1));
            }
            csv.push('\n');
        }
        fs::write(dir.join(format!("diagnostics_N{}_m{m}.csv", cfg.dim)), csv)?;
        fs::write(
            dir.join(format!("trends_N{}_m{m}.json", cfg.dim)),
            to_json_pretty(&d.trends)?,
        )?;
        let plot_dir = dir.join("plotdata");
        fs::create_dir_all(&plot_dir)?;
        for (name, values) in &cols {
            let mut dat = String::new();
            for (p, v) in values {
                dat.push_str(&format!("{p} {v:.12e}\n"));
            }
            fs::write(plot_dir.join(format!("N{}_m{m}_{name}.dat", cfg.dim)), dat)?;
        }
    }

    fs::write(dir.join("limits.json"), to_json_pretty(&out.constants)?)?;

    #[derive(Serialize)]
    struct SweepVerdict<'a> {
        thresholds: &'a [(u32, Option<f64>)],
        lower_bound_violations: usize,
        unresolved: usize,
    }
    fs::write(
        dir.join("verdict.json"),
        to_json_pretty(&SweepVerdict {
            thresholds: &out.thresholds,
            lower_bound_violations: out.lower_bound_violations,
            unresolved: out.unresolved,
        })?,
    )?;
    Ok(())
}

/// Constants and closed-form residuals of the limit problem, serialized
/// for the `limits` subcommand.
#[derive(Debug, Serialize)]
pub struct LimitsReport {
    pub dims: Vec<u32>,
    pub constants: Vec<limit::LimitConstants>,
    pub bubble_residuals: Vec<f64>,
    pub eta_residuals: Vec<f64>,
    pub rayleigh_values: Vec<f64>,
}

pub fn limits_report(dims: &[u32], tol: f64) -> LimitsReport {
    let grid = limit::log_grid(1e-3, 1e3, 2000);
    LimitsReport {
        dims: dims.to_vec(),
        constants: dims.iter().map(|&d| limit::constants(d)).collect(),
        bubble_residuals: dims.iter().map(|&d| limit::bubble_residual(d, &grid)).collect(),
        eta_residuals: dims.iter().map(|&d| limit::eta_star_residual(d, &grid)).collect(),
        rayleigh_values: dims.iter().map(|&d| limit::rayleigh_of_eta(d, tol).value).collect(),
    }
}

pub fn print_report_line<W: Write>(mut w: W, run: &InstanceRun) -> std::io::Result<()> {
    match (&run.report, &run.unresolved) {
        (Some(r), _) => writeln!(
            w,
            "{}: morse {} (formula {}), radial {}, match {}, n {:.3e}, grid {}, min margin {:.2e}",
            run.spec,
            r.morse_index,
            r.formula_value,
            r.radial_morse_index,
            r.matches_formula,
            r.n_used,
            r.grid_size,
            r.min_margin
        ),
        (None, Some(reason)) => writeln!(w, "{}: unresolved ({reason})", run.spec),
        (None, None) => unreachable!(),
    }
}
