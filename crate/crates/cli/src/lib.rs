//! Suite configuration, execution and report emission for the `qloop` binary.

use qloop::checks::{self, CheckRow};
use qloop::{Algebra, LatticeConfig, C64};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Relations,
    Rmatrix,
    Lattice,
    Rqkz,
    All,
}

impl std::str::FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Suite, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CliError::Config(format!("unknown suite {s:?}; expected relations, rmatrix, lattice, rqkz or all")))
    }
}

/// `q` as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QValue {
    Real(f64),
    Complex([f64; 2]),
}

impl QValue {
    pub fn value(self) -> C64 {
        match self {
            QValue::Real(r) => C64::new(r, 0.0),
            QValue::Complex([re, im]) => C64::new(re, im),
        }
    }
}

fn default_q() -> QValue {
    QValue::Real(1.3)
}
fn default_suite() -> Suite {
    Suite::All
}
fn default_samples() -> usize {
    20
}
fn default_chain() -> usize {
    4
}
fn default_vertical() -> Vec<usize> {
    vec![1, 2]
}
fn default_open() -> usize {
    2
}
fn default_kappa() -> Vec<f64> {
    vec![0.0, 0.05]
}
fn default_alpha() -> Vec<f64> {
    vec![0.0, 0.1]
}
fn default_beta() -> f64 {
    0.5
}
fn default_trotter() -> Vec<usize> {
    vec![4, 8, 16]
}
fn default_widths() -> Vec<usize> {
    vec![2, 4, 8]
}
fn default_band() -> [f64; 2] {
    [1.6, 2.4]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeParams {
    /// Horizontal chain length for transfer, charge and Hamiltonian checks.
    #[serde(default = "default_chain")]
    pub chain_length: usize,
    /// Trotter half-numbers of the vertical lattices.
    #[serde(default = "default_vertical")]
    pub vertical_n: Vec<usize>,
    /// Open vertical lines in the reduced density operators.
    #[serde(default = "default_open")]
    pub open_lines: usize,
    /// Field values; each is applied to every node.
    #[serde(default = "default_kappa")]
    pub kappa: Vec<f64>,
    /// Disorder values; each is applied to every node.
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_trotter")]
    pub trotter_n: Vec<usize>,
    /// Expected band of successive Trotter error ratios.
    #[serde(default = "default_band")]
    pub trotter_band: [f64; 2],
    #[serde(default = "default_widths")]
    pub wing_widths: Vec<usize>,
    /// Explicit lattice replacing the generated ones in the rqkz suite.
    #[serde(default)]
    pub explicit: Option<LatticeConfig>,
}

impl Default for LatticeParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// Tolerance overrides per suite; unset entries keep each identity's own tolerance.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub relations: Option<f64>,
    pub rmatrix: Option<f64>,
    pub lattice: Option<f64>,
    pub rqkz: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub algebra: Algebra,
    #[serde(default = "default_q")]
    pub q: QValue,
    #[serde(default)]
    pub grading: Option<Vec<i64>>,
    #[serde(default = "default_suite")]
    pub suite: Suite,
    #[serde(default)]
    pub lattice: LatticeParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<SuiteConfig, CliError> {
        let cfg: SuiteConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<SuiteConfig, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        SuiteConfig::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [("relations", t.relations), ("rmatrix", t.rmatrix), ("lattice", t.lattice), ("rqkz", t.rqkz)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("tolerances.{name} must be positive, got {v}")));
                }
            }
        }
        let l = &self.lattice;
        if l.chain_length < 2 {
            return Err(CliError::Config("lattice.chain_length must be at least 2".into()));
        }
        if l.vertical_n.is_empty() || l.vertical_n.contains(&0) {
            return Err(CliError::Config("lattice.vertical_n entries must be at least 1".into()));
        }
        if l.open_lines == 0 {
            return Err(CliError::Config("lattice.open_lines must be at least 1".into()));
        }
        if l.kappa.is_empty() || l.alpha.is_empty() {
            return Err(CliError::Config("lattice.kappa and lattice.alpha need at least one value".into()));
        }
        if l.trotter_n.len() < 2 || l.wing_widths.len() < 2 {
            return Err(CliError::Config("lattice.trotter_n and lattice.wing_widths need at least two values".into()));
        }
        if l.trotter_band[0] >= l.trotter_band[1] {
            return Err(CliError::Config("lattice.trotter_band must be increasing".into()));
        }
        if self.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        if let Some(g) = &self.grading {
            qloop::build_cartan(self.algebra).with_grading(g).map_err(|e| CliError::Config(format!("grading: {e}")))?;
        }
        if let Some(e) = &l.explicit {
            e.validate(qloop::build_cartan(self.algebra).rank).map_err(|e| CliError::Config(format!("lattice.explicit: {e}")))?;
        }
        Ok(())
    }

    fn rank(&self) -> usize {
        qloop::build_cartan(self.algebra).rank
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub error: f64,
    /// `error(N) / error(2N)` when `2N` is in the series.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn from_series(series: &[(usize, f64)]) -> Result<ConvergenceTable, CliError> {
        if series.len() < 2 {
            return Err(CliError::Config("a convergence series needs at least two points".into()));
        }
        let rows = series
            .iter()
            .map(|&(n, error)| {
                let ratio = series.iter().find(|(m, _)| *m == 2 * n).map(|(_, e2)| error / e2);
                ConvergenceRow { n, error, ratio }
            })
            .collect();
        Ok(ConvergenceTable { rows })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,error,ratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|x| format!("{x:.17e}")).unwrap_or_default();
            out.push_str(&format!("{},{:.17e},{ratio}\n", r.n, r.error));
        }
        out
    }
}

/// Writes `convergence.csv` and `convergence.json` into `dir`.
pub fn emit_convergence(series: &[(usize, f64)], dir: &Path) -> Result<ConvergenceTable, CliError> {
    let table = ConvergenceTable::from_series(series)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv = dir.join("convergence.csv");
    fs::write(&csv, table.to_csv()).map_err(|e| CliError::io(&csv, e))?;
    let json = dir.join("convergence.json");
    let text = serde_json::to_string_pretty(&table).expect("serializable");
    fs::write(&json, text).map_err(|e| CliError::io(&json, e))?;
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub algebra: Algebra,
    pub q: [f64; 2],
    pub suite: Suite,
    pub seed: u64,
    pub rows: Vec<CheckRow>,
    pub budget_exceeded: bool,
    pub pass: bool,
    /// Trotter series `(N, error)` when the suite computes one.
    pub convergence: Option<Vec<(usize, f64)>>,
    pub notes: Vec<String>,
}

impl ReportBundle {
    pub fn exit_code(&self) -> u8 {
        if self.budget_exceeded {
            EXIT_BUDGET
        } else if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!(
                "{} {:<10} {:<52} {:<48} residual={:.3e} tol={:.1e} wall_ms={:.1} {}\n",
                if r.pass { "PASS" } else { "FAIL" },
                r.anchor,
                r.identity,
                r.params,
                r.residual,
                r.tolerance,
                r.wall_ms,
                r.note
            ));
        }
        out
    }
}

struct Jobs {
    rows: Vec<CheckRow>,
    budget_exceeded: bool,
}

impl Jobs {
    /// Runs one job; its error becomes a failing row so later jobs still run.
    fn run<F>(&mut self, anchor: &str, label: &str, tol: Option<f64>, f: F)
    where
        F: FnOnce() -> qloop::Result<Vec<CheckRow>>,
    {
        match checks::timed(f) {
            Ok(rows) => self.rows.extend(rows.into_iter().map(|r| match tol {
                Some(t) if r.tolerance > 0.0 => r.retolerate(t),
                _ => r,
            })),
            Err(e) => {
                if matches!(e, qloop::Error::TooLarge { .. }) {
                    self.budget_exceeded = true;
                }
                log::warn!("{label}: {e}");
                self.rows.push(CheckRow::new(anchor, label, String::new(), f64::NAN, tol.unwrap_or(0.0)).with_note(e.to_string()));
            }
        }
    }
}

fn vertical_config(cfg: &SuiteConfig, n_open: usize, big_n: usize, kappa: f64, alpha: f64) -> LatticeConfig {
    let q = cfg.q.value().norm();
    checks::generic_config(q, n_open, big_n, kappa, alpha, cfg.rank())
}

/// Executes the configured suite. Job order is fixed, so reports are reproducible.
pub fn run_suite(cfg: &SuiteConfig) -> Result<ReportBundle, CliError> {
    cfg.validate()?;
    let fam = checks::family(cfg.algebra, cfg.q.value(), cfg.grading.as_deref())
        .map_err(|e| CliError::Config(format!("cannot build the R-operator family: {e}")))?;
    let l = &cfg.lattice;
    let tol = &cfg.tolerances;
    let want = |s: Suite| cfg.suite == s || cfg.suite == Suite::All;
    let mut jobs = Jobs { rows: Vec::new(), budget_exceeded: false };
    let mut convergence = None;
    let mut notes = vec!["normalization branch c_V = +1".to_string()];

    if want(Suite::Relations) {
        jobs.run("djra", "defining relations", tol.relations, || Ok(checks::relation_checks(&fam, 1e-10)));
    }
    if want(Suite::Rmatrix) {
        jobs.run("urn", "R-operator identities", tol.rmatrix, || checks::rmatrix_checks(&fam, cfg.seed, cfg.samples, 1e-10));
        jobs.run("gzz", "ratio dependence", tol.rmatrix, || checks::scaling_checks(&fam, cfg.seed, 5, 1e-10));
    }
    if want(Suite::Lattice) {
        jobs.run("tvw", "horizontal transfer", tol.lattice, || checks::transfer_checks(&fam, l.chain_length, cfg.seed));
        jobs.run("hl", "locality", tol.lattice, || Ok(vec![checks::locality_check(&fam, l.chain_length)?]));
        for &big_n in &l.vertical_n {
            jobs.run("tst", "vertical column", tol.lattice, || {
                checks::vertical_checks(&fam, &vertical_config(cfg, l.open_lines, big_n, l.kappa[l.kappa.len() - 1], l.alpha[l.alpha.len() - 1]))
            });
        }
        // the bound is the measured subdominant ratio, not a residual tolerance
        jobs.run("dnm", "finite-m density", None, || {
            let mut c = vertical_config(cfg, 1, 1, l.kappa[l.kappa.len() - 1], l.alpha[l.alpha.len() - 1]);
            let q = cfg.q.value();
            c.zeta = vec![qloop::rep::qpow(q, C64::new(-0.5, 0.0))];
            c.xi = vec![qloop::rep::qpow(q, C64::new(0.5, 0.0))];
            checks::density_checks(&fam, &c, &l.wing_widths)
        });
    }
    if want(Suite::Lattice) || want(Suite::Rqkz) {
        let trotter_l = 3.min(l.chain_length);
        jobs.run("zlndln", "Trotter convergence", None, || {
            let s = checks::trotter_convergence(&fam, trotter_l, l.beta, &l.trotter_n)?;
            convergence = Some(s.points.clone());
            checks::trotter_checks(&fam, trotter_l, l.beta, &l.trotter_n, l.trotter_band[0], l.trotter_band[1])
        });
    }
    if want(Suite::Rqkz) {
        let default_tol = if cfg.algebra == Algebra::A1 { 1e-8 } else { 1e-7 };
        let base = tol.rqkz.unwrap_or(default_tol);
        let lattices: Vec<LatticeConfig> = match &l.explicit {
            Some(e) => vec![e.clone()],
            None => {
                let mut v = Vec::new();
                for &big_n in &l.vertical_n {
                    for &alpha in &l.alpha {
                        for &kappa in &l.kappa {
                            v.push(vertical_config(cfg, l.open_lines, big_n, kappa, alpha));
                        }
                    }
                }
                v
            }
        };
        for lat in &lattices {
            jobs.run("andnf", "reduced qKZ", None, || checks::rqkz_checks(&fam, lat, base));
        }
        jobs.rows.extend(checks::limit_rows());
        notes.push("zero-temperature forms: verified via finite-N precursor".into());
    }

    let pass = jobs.rows.iter().all(|r| r.pass);
    let q = cfg.q.value();
    Ok(ReportBundle {
        algebra: cfg.algebra,
        q: [q.re, q.im],
        suite: cfg.suite,
        seed: cfg.seed,
        rows: jobs.rows,
        budget_exceeded: jobs.budget_exceeded,
        pass,
        convergence,
        notes,
    })
}

/// Writes `report.json` (and the convergence files when present) into `dir`.
pub fn write_report(bundle: &ReportBundle, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("report.json");
    fs::write(&path, bundle.to_json()).map_err(|e| CliError::io(&path, e))?;
    if let Some(series) = &bundle.convergence {
        emit_convergence(series, dir)?;
    }
    Ok(())
}

/// Trotter series for the `convergence` command.
pub fn run_convergence(cfg: &SuiteConfig) -> Result<qloop::Result<ConvergenceTable>, CliError> {
    cfg.validate()?;
    let fam = checks::family(cfg.algebra, cfg.q.value(), cfg.grading.as_deref())
        .map_err(|e| CliError::Config(format!("cannot build the R-operator family: {e}")))?;
    let l = &cfg.lattice;
    Ok(checks::trotter_convergence(&fam, 3.min(l.chain_length), l.beta, &l.trotter_n)
        .map(|s| ConvergenceTable::from_series(&s.points).expect("validated length")))
}
