//! Python bindings: instances, solving, LP, and the verification experiments.

use bctree::bnc::{self, BncConfig, BranchMode};
use bctree::experiments::{self, Axis, ScanProblem, ScanSettings, ScorePair, SweepConfig};
use bctree::ip::{self, IpInstance};
use bctree::knapsack::{self, KnapsackSpec, KnapsackStructure};
use bctree::lp::{self, LpProblem, LpRow, Sense};
use bctree::scoring::{RuleKind, ScoreRuleId};
use bctree::tree::{canonical_hash, Limits};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: bctree::Error) -> PyErr {
    match e {
        bctree::Error::InvalidInput(_)
        | bctree::Error::Dimension(_)
        | bctree::Error::Parse { .. }
        | bctree::Error::UnknownRule(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn lower(v: impl std::fmt::Debug) -> String {
    format!("{v:?}").to_lowercase()
}

/// An integer program read from or written to the text instance format.
#[pyclass(name = "Instance", module = "bctree", frozen)]
struct PyInstance {
    ip: IpInstance,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyInstance { ip: ip::read_instance(text).map_err(err)? })
    }

    fn to_text(&self) -> String {
        ip::write_instance(&self.ip)
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.ip.num_vars
    }

    #[getter]
    fn objective(&self) -> Vec<f64> {
        self.ip.objective.clone()
    }

    /// Optimal value and point by enumeration (small instances only).
    fn brute_force<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let sol = ip::brute_force_ip(&self.ip).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("status", lower(sol.status))?;
        d.set_item("objective", sol.objective)?;
        d.set_item("solution", sol.solution)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Instance(num_vars={}, rows={})", self.ip.num_vars, self.ip.constraints.len())
    }
}

/// Search parameters shared by `solve`, `find_pieces` and `verify_rooted_subtree`.
#[pyclass(name = "Settings", module = "bctree", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PySettings {
    mu_branch: f64,
    mu_cut: f64,
    lambda_: f64,
    branch_mode: String,
    branch_rules: (String, String),
    pair: String,
    cuts_per_node: usize,
    depth_limit: Option<usize>,
    node_cap: usize,
    use_cuts: bool,
}

#[pymethods]
impl PySettings {
    #[new]
    #[pyo3(signature = (
        mu_branch = 0.5, mu_cut = 0.5, lambda_ = 0.5, branch_mode = "single".to_string(),
        branch_rules = ("mostfrac".to_string(), "sblinear:0.5".to_string()), pair = "ep".to_string(),
        cuts_per_node = 2, depth_limit = None, node_cap = 1_000_000, use_cuts = true
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mu_branch: f64,
        mu_cut: f64,
        lambda_: f64,
        branch_mode: String,
        branch_rules: (String, String),
        pair: String,
        cuts_per_node: usize,
        depth_limit: Option<usize>,
        node_cap: usize,
        use_cuts: bool,
    ) -> Self {
        PySettings {
            mu_branch,
            mu_cut,
            lambda_,
            branch_mode,
            branch_rules,
            pair,
            cuts_per_node,
            depth_limit,
            node_cap,
            use_cuts,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Settings(mu_branch={}, mu_cut={}, lambda_={}, branch_mode={:?}, pair={:?})",
            self.mu_branch, self.mu_cut, self.lambda_, self.branch_mode, self.pair
        )
    }
}

impl PySettings {
    fn problem(&self, ip: &IpInstance) -> Result<ScanProblem, bctree::Error> {
        let pool = match KnapsackStructure::detect(ip) {
            Some(s) if self.use_cuts => knapsack::extended_cover_cuts(&s),
            _ => Vec::new(),
        };
        let config = BncConfig {
            branch_mode: BranchMode::named(&self.branch_mode, ip.num_vars)?,
            cuts_per_node: self.cuts_per_node,
            ..BncConfig::default()
        };
        config.validate(ip.num_vars)?;
        let rules: (ScoreRuleId, ScoreRuleId) = (self.branch_rules.0.parse()?, self.branch_rules.1.parse()?);
        if rules.0.kind() != RuleKind::Branch || rules.1.kind() != RuleKind::Branch {
            return Err(bctree::Error::InvalidInput("branch_rules must name branching rules".into()));
        }
        let pair: ScorePair = self.pair.parse()?;
        let depth = self.depth_limit.unwrap_or_else(|| experiments::default_depth_limit(ip.num_vars));
        let params = bnc::params(self.mu_branch, self.mu_cut, self.lambda_, rules, pair.rules(), depth);
        params.validate(2)?;
        let limits = Limits { node_cap: self.node_cap, ..Limits::default() };
        Ok(ScanProblem { ip: ip.clone(), pool, config, params, limits })
    }
}

fn settings_or_default(settings: Option<PyRef<'_, PySettings>>) -> PySettings {
    settings.map(|s| s.clone()).unwrap_or_else(|| {
        PySettings::new(
            0.5,
            0.5,
            0.5,
            "single".into(),
            ("mostfrac".into(), "sblinear:0.5".into()),
            "ep".into(),
            2,
            None,
            1_000_000,
            true,
        )
    })
}

#[pyfunction]
#[pyo3(signature = (items, knapsacks, seed = 0, reverse = false, weight_mean = 50.0, weight_sd = 2.0))]
fn generate_knapsack(
    items: usize,
    knapsacks: usize,
    seed: u64,
    reverse: bool,
    weight_mean: f64,
    weight_sd: f64,
) -> PyResult<PyInstance> {
    let spec = KnapsackSpec { num_items: items, num_knapsacks: knapsacks, reverse, seed, weight_mean, weight_sd };
    Ok(PyInstance { ip: knapsack::generate(&spec).map_err(err)?.ip })
}

#[pyfunction]
fn jeroslow_instance(n: usize) -> PyResult<PyInstance> {
    Ok(PyInstance { ip: ip::jeroslow_instance(n).map_err(err)? })
}

/// Runs branch-and-cut and returns status, objective, tree size, incumbent and tree digest.
#[pyfunction]
#[pyo3(signature = (instance, settings = None))]
fn solve<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    settings: Option<PyRef<'py, PySettings>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = settings_or_default(settings).problem(&instance.ip).map_err(err)?;
    let out = py.detach(|| bnc::solve(&p.ip, p.pool, p.config, &p.params, &p.limits)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("status", lower(out.status))?;
    d.set_item("ip_status", lower(out.ip_status))?;
    d.set_item("objective", out.objective)?;
    d.set_item("tree_size", out.tree_size)?;
    d.set_item("incumbent", out.solution)?;
    d.set_item("digest", canonical_hash(&out.tree))?;
    Ok(d)
}

/// `max c·x` subject to `(coeffs, sense, rhs)` rows with sense one of
/// `"<="`, `">="`, `"="`, and per-variable `(lower, upper)` bounds.
#[pyfunction]
fn solve_lp<'py>(
    py: Python<'py>,
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, String, f64)>,
    bounds: Vec<(f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let constraints = rows
        .into_iter()
        .map(|(coeffs, sense, rhs)| {
            let sense = match sense.as_str() {
                "<=" => Sense::Le,
                ">=" => Sense::Ge,
                "=" | "==" => Sense::Eq,
                other => return Err(PyValueError::new_err(format!("unknown sense `{other}`"))),
            };
            Ok(LpRow { coeffs, sense, rhs })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let problem = LpProblem { num_vars: objective.len(), objective, constraints, bounds };
    let r = lp::solve_lp(&problem).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("status", lower(r.status))?;
    d.set_item("objective", r.objective)?;
    d.set_item("solution", r.solution)?;
    Ok(d)
}

/// Splits one parameter axis into closed pieces `(lo, hi, digest)`.
#[pyfunction]
#[pyo3(signature = (instance, axis = "mu-cut", settings = None, coarse_step = 1e-3, probes = 10, seed = 0))]
fn find_pieces<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    axis: &str,
    settings: Option<PyRef<'py, PySettings>>,
    coarse_step: f64,
    probes: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let axis: Axis = axis.parse().map_err(err)?;
    let p = settings_or_default(settings).problem(&instance.ip).map_err(err)?;
    let scan = ScanSettings { coarse_step, probes, seed };
    let r = py.detach(|| experiments::find_pieces(&p, axis, &scan)).map_err(err)?;
    let d = PyDict::new(py);
    let pieces: Vec<(f64, f64, String)> = r.pieces.iter().map(|p| (p.lo, p.hi, p.digest.clone())).collect();
    d.set_item("within_cap", r.within_cap())?;
    d.set_item("pieces", pieces)?;
    d.set_item("consistent", r.consistent)?;
    d.set_item("cap", r.theoretical_cap)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (instance, settings = None))]
fn verify_rooted_subtree<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    settings: Option<PyRef<'py, PySettings>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = settings_or_default(settings).problem(&instance.ip).map_err(err)?;
    let r = py.detach(|| experiments::verify_rooted_subtree(&p)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("passed", r.passed)?;
    d.set_item("skipped", r.skipped)?;
    d.set_item("nodes_checked", r.nodes_checked)?;
    d.set_item("first_failure", r.first_failure)?;
    Ok(d)
}

/// Mean tree size at each grid value of the cut weight, as `(mu, mean)` pairs.
#[pyfunction]
#[pyo3(signature = (items, knapsacks, pair = "ep", reverse = false, step = 0.01, samples = 100, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    items: usize,
    knapsacks: usize,
    pair: &str,
    reverse: bool,
    step: f64,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<(f64, f64)>> {
    let pair: ScorePair = pair.parse().map_err(err)?;
    let spec = KnapsackSpec { reverse, ..KnapsackSpec::chvatal(items, knapsacks, seed) };
    let cfg = SweepConfig { grid_step: step, samples, ..SweepConfig::new(spec, pair) };
    let rows = py.detach(|| experiments::sweep_mu(&cfg)).map_err(err)?;
    Ok(rows.iter().map(|r| (r.mu, r.mean)).collect())
}

#[pyfunction]
#[pyo3(signature = (delta, k, b, d = 2))]
fn theoretical_bounds<'py>(py: Python<'py>, delta: u32, k: u64, b: u64, d: u32) -> PyResult<Bound<'py, PyDict>> {
    let bounds = experiments::theoretical_bounds(delta, k, b, d).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("pieces_1d", bounds.pieces_1d)?;
    out.set_item("rects_2d", bounds.rects_2d)?;
    out.set_item("rects_2d_proof", bounds.rects_2d_proof)?;
    out.set_item("boxes_multi", bounds.boxes_multi)?;
    out.set_item("pdim_order", bounds.pdim_order)?;
    Ok(out)
}

#[pyfunction]
fn jeroslow<'py>(py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = py.detach(|| experiments::jeroslow(n)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("single_var_nodes", r.single_var_nodes)?;
    d.set_item("multivar_nodes", r.multivar_nodes)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "bctree")]
fn bctree_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySettings>()?;
    m.add_function(wrap_pyfunction!(generate_knapsack, m)?)?;
    m.add_function(wrap_pyfunction!(jeroslow_instance, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lp, m)?)?;
    m.add_function(wrap_pyfunction!(find_pieces, m)?)?;
    m.add_function(wrap_pyfunction!(verify_rooted_subtree, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(jeroslow, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
