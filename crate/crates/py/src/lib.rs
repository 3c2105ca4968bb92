//! Python bindings: `import graphlin`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use graphlin_core::corruption::{mask as mask_tokens, MaskStrategy, TargetClass};
use graphlin_core::graph::{AmrGraph, Triple};
use graphlin_core::metrics::bleu::{self, BleuReport};
use graphlin_core::metrics::regression::{self, Design, RegressionResult};
use graphlin_core::metrics::smatch::{self as sm, SmatchResult};
use graphlin_core::penman::{self, format_tree, tree_to_graph};
use graphlin_core::rdf::{self, RdfEntry, RdfTriple};
use graphlin_core::relinearize::{relinearize_tree, LinearizationKind};
use graphlin_core::rng::{seeded, DEFAULT_SEED};
use graphlin_core::tokens::TokenSeq;
use graphlin_core::tree::LinearTree;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A rooted, validated graph.
#[pyclass(frozen, eq, skip_from_py_object, module = "graphlin")]
#[derive(Clone, PartialEq)]
pub struct Graph(AmrGraph);

#[pymethods]
impl Graph {
    /// Parse PENMAN text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Tree::parse(text)?.to_graph()
    }

    #[getter]
    fn top(&self) -> String {
        self.0.top().to_string()
    }

    fn variables(&self) -> Vec<String> {
        self.0.variables().iter().map(|v| v.to_string()).collect()
    }

    /// Normalized triples as `(kind, source, role, target)` tuples, sorted.
    fn triples(&self) -> Vec<(String, String, String, String)> {
        self.0
            .sorted_triples()
            .into_iter()
            .map(|t| match t {
                Triple::Instance { var, concept } => ("instance".into(), var.to_string(), ":instance".into(), concept),
                Triple::Relation { source, role, target } => {
                    ("relation".into(), source.to_string(), role.to_string(), target.to_string())
                }
                Triple::Attribute { source, role, value } => ("attribute".into(), source.to_string(), role.to_string(), value),
            })
            .collect()
    }

    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    /// Equal triples, ignoring the top.
    fn same_triples(&self, other: &Graph) -> bool {
        self.0.same_triples(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("Graph(top={}, triples={})", self.0.top(), self.0.triples().len())
    }
}

/// A PENMAN spanning tree (one linearization of a graph).
#[pyclass(frozen, eq, skip_from_py_object, module = "graphlin")]
#[derive(Clone, PartialEq)]
pub struct Tree(LinearTree);

#[pymethods]
impl Tree {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        penman::parse_penman(text).map(Tree).map_err(value_err)
    }

    fn to_graph(&self) -> PyResult<Graph> {
        tree_to_graph(&self.0).map(Graph).map_err(value_err)
    }

    #[getter]
    fn top(&self) -> String {
        self.0.top().to_string()
    }

    /// Space-joined token sequence with variables and senses.
    fn tokens(&self) -> String {
        penman::serialize(&self.0).to_string()
    }

    /// Simplified tokens: senses stripped, variables replaced by concepts.
    fn simplified(&self) -> String {
        penman::simplify(&penman::serialize(&self.0)).to_string()
    }

    fn reentrancy_count(&self) -> usize {
        self.0.reentrancy_count()
    }

    fn __str__(&self) -> String {
        format_tree(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("Tree({})", penman::serialize(&self.0))
    }
}

#[pyfunction]
fn parse_penman(text: &str) -> PyResult<Tree> {
    Tree::parse(text)
}

/// Simplify a serialized token sequence.
#[pyfunction]
fn simplify(tokens: &str) -> String {
    penman::simplify(&TokenSeq::parse(tokens)).to_string()
}

#[pyfunction]
fn strip_sense(concept: &str) -> String {
    penman::strip_sense(concept).to_string()
}

fn kind(mode: &str) -> PyResult<LinearizationKind> {
    mode.parse().map_err(value_err)
}

/// Relinearize `tree` ("canonical", "reconfigured" or "randomized").
#[pyfunction]
#[pyo3(signature = (tree, mode = "canonical", seed = DEFAULT_SEED))]
fn relinearize(tree: &Tree, mode: &str, seed: u64) -> PyResult<Tree> {
    let g = tree_to_graph(&tree.0).map_err(value_err)?;
    relinearize_tree(&g, Some(&tree.0), kind(mode)?, &mut seeded(seed))
        .map(Tree)
        .map_err(value_err)
}

/// Simplified token string of a relinearized tree.
#[pyfunction]
#[pyo3(signature = (tree, mode = "canonical", seed = DEFAULT_SEED))]
fn linearize(tree: &Tree, mode: &str, seed: u64) -> PyResult<String> {
    Ok(relinearize(tree, mode, seed)?.simplified())
}

/// Mask a token sequence; returns `(input, target, masked_count)`.
#[pyfunction]
#[pyo3(signature = (tokens, strategy = "all", rate = 0.15, seed = DEFAULT_SEED))]
fn mask(tokens: &str, strategy: &str, rate: f64, seed: u64) -> PyResult<(String, String, usize)> {
    let class: TargetClass = strategy.parse().map_err(value_err)?;
    let pair = mask_tokens(
        &TokenSeq::parse(tokens),
        &MaskStrategy::new(class).with_rate(rate),
        &mut seeded(seed),
    )
    .map_err(value_err)?;
    Ok((pair.input.to_string(), pair.target.to_string(), pair.masked))
}

/// Linearize `(subject, predicate, object)` triples; shuffled when `seed` is given.
#[pyfunction]
#[pyo3(signature = (triples, seed = None))]
fn linearize_rdf(triples: Vec<(String, String, String)>, seed: Option<u64>) -> String {
    let mut entry = RdfEntry {
        id: String::new(),
        triples: triples.iter().map(|(s, p, o)| RdfTriple::new(s, p, o)).collect(),
        references: Vec::new(),
        category: String::new(),
    };
    if let Some(s) = seed {
        entry = rdf::randomize_rdf(&entry, &mut seeded(s));
    }
    rdf::linearize_rdf(&entry).to_string()
}

fn bleu_dict<'py>(py: Python<'py>, r: &BleuReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("score", r.score)?;
    d.set_item("precisions", r.precisions.to_vec())?;
    d.set_item("brevity_penalty", r.brevity_penalty)?;
    d.set_item("hypothesis_length", r.hypothesis_length)?;
    d.set_item("reference_length", r.reference_length)?;
    d.set_item("signature", &r.signature)?;
    Ok(d)
}

/// Corpus BLEU; `references[i]` lists the references of `hypotheses[i]`.
#[pyfunction]
fn corpus_bleu<'py>(
    py: Python<'py>,
    hypotheses: Vec<String>,
    references: Vec<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    bleu_dict(py, &bleu::corpus_bleu(&hypotheses, &references).map_err(value_err)?)
}

#[pyfunction]
fn sentence_bleu(hypothesis: &str, references: Vec<String>) -> PyResult<f64> {
    Ok(bleu::sentence_bleu(hypothesis, &references).map_err(value_err)?.score)
}

fn smatch_dict<'py>(py: Python<'py>, r: &SmatchResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("precision", r.precision)?;
    d.set_item("recall", r.recall)?;
    d.set_item("f", r.f_score)?;
    d.set_item("matched", r.matched)?;
    let mapping: Vec<(String, Option<String>)> = r
        .best_mapping
        .iter()
        .map(|(a, b)| (a.to_string(), b.as_ref().map(|v| v.to_string())))
        .collect();
    d.set_item("mapping", mapping)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (g1, g2, restarts = 4, seed = DEFAULT_SEED, exact = false))]
fn smatch<'py>(
    py: Python<'py>,
    g1: &Graph,
    g2: &Graph,
    restarts: usize,
    seed: u64,
    exact: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let r = if exact {
        sm::smatch_exact(&g1.0, &g2.0).map_err(value_err)?
    } else {
        sm::smatch(&g1.0, &g2.0, restarts, &mut seeded(seed))
    };
    smatch_dict(py, &r)
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    regression::pearson(&x, &y).map_err(value_err)
}

fn design(columns: Vec<(String, Vec<f64>)>) -> Design {
    columns
        .into_iter()
        .fold(Design::new(), |d, (name, col)| d.with(name, col))
}

fn fit_dict<'py>(py: Python<'py>, r: &RegressionResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let coef = PyDict::new(py);
    let se = PyDict::new(py);
    coef.set_item("intercept", r.intercept.estimate)?;
    se.set_item("intercept", r.intercept.std_error)?;
    for c in &r.coefficients {
        coef.set_item(&c.name, c.estimate)?;
        se.set_item(&c.name, c.std_error)?;
    }
    d.set_item("coefficients", coef)?;
    d.set_item("std_errors", se)?;
    d.set_item("bic", r.bic)?;
    d.set_item("r_squared", r.r_squared)?;
    d.set_item("adjusted_r_squared", r.adjusted_r_squared)?;
    d.set_item("n", r.n)?;
    Ok(d)
}

/// OLS with intercept; `columns` is a list of `(name, values)` pairs.
#[pyfunction]
fn ols<'py>(py: Python<'py>, columns: Vec<(String, Vec<f64>)>, y: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    fit_dict(py, &regression::ols_fit(&design(columns), &y).map_err(value_err)?)
}

/// Exhaustive BIC search; returns `(chosen names, fit)`.
#[pyfunction]
fn best_subset_bic<'py>(
    py: Python<'py>,
    columns: Vec<(String, Vec<f64>)>,
    y: Vec<f64>,
) -> PyResult<(Vec<String>, Bound<'py, PyDict>)> {
    let sel = regression::best_subset_bic(&design(columns), &y).map_err(value_err)?;
    Ok((sel.chosen, fit_dict(py, &sel.model)?))
}

#[pymodule]
fn graphlin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_SEED", DEFAULT_SEED)?;
    m.add_class::<Graph>()?;
    m.add_class::<Tree>()?;
    m.add_function(wrap_pyfunction!(parse_penman, m)?)?;
    m.add_function(wrap_pyfunction!(simplify, m)?)?;
    m.add_function(wrap_pyfunction!(strip_sense, m)?)?;
    m.add_function(wrap_pyfunction!(relinearize, m)?)?;
    m.add_function(wrap_pyfunction!(linearize, m)?)?;
    m.add_function(wrap_pyfunction!(mask, m)?)?;
    m.add_function(wrap_pyfunction!(linearize_rdf, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_bleu, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_bleu, m)?)?;
    m.add_function(wrap_pyfunction!(smatch, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(ols, m)?)?;
    m.add_function(wrap_pyfunction!(best_subset_bic, m)?)?;
    Ok(())
}
