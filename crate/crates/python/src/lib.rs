//! Python bindings: build or load an index, query relatedness and ancestor
//! paths, and run cross-validated evaluation.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tesa_core::corpus::load_eval_corpus;
use tesa_core::evaluation::{cross_validate, EvalStats};
use tesa_core::{build_index, load_index, BuildOptions, EsaModel, FilterThresholds, LambdaSchedule, SupportMode};

create_exception!(tesa, TesaError, PyException);

fn err(e: tesa_core::TesaError) -> PyErr {
    TesaError::new_err(e.to_string())
}

fn schedule(lambda: Option<Vec<f64>>) -> PyResult<LambdaSchedule> {
    LambdaSchedule::new(lambda.unwrap_or_default()).map_err(err)
}

fn support_mode(mode: &str) -> PyResult<SupportMode> {
    match mode {
        "inclusive" => Ok(SupportMode::Inclusive),
        "exclusive" => Ok(SupportMode::Exclusive),
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

/// A built index held in memory.
#[pyclass(frozen, module = "tesa")]
struct Index {
    model: EsaModel,
}

#[pymethods]
impl Index {
    /// Build from JSONL corpus files and write the index to `out`.
    #[staticmethod]
    #[pyo3(signature = (pages, categories, root, out, min_words=0, min_links_in=0, min_links_out=0))]
    #[allow(clippy::too_many_arguments)]
    fn build(
        py: Python<'_>,
        pages: PathBuf,
        categories: PathBuf,
        root: String,
        out: PathBuf,
        min_words: usize,
        min_links_in: usize,
        min_links_out: usize,
    ) -> PyResult<Index> {
        let options = BuildOptions {
            thresholds: FilterThresholds {
                min_words,
                min_links_in,
                min_links_out,
            },
            ..BuildOptions::default()
        };
        let (model, _) = py
            .detach(|| build_index(&pages, &categories, &root, &options, &out))
            .map_err(err)?;
        Ok(Index { model })
    }

    #[staticmethod]
    fn load(py: Python<'_>, path: PathBuf) -> PyResult<Index> {
        let (model, _) = py.detach(|| load_index(&path)).map_err(err)?;
        Ok(Index { model })
    }

    /// Page, category, term and edge counts plus the tree weight.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.model.summary();
        let d = PyDict::new(py);
        d.set_item("pages", s.pages)?;
        d.set_item("categories", s.categories)?;
        d.set_item("terms", s.terms)?;
        d.set_item("membership_edges", s.membership_edges)?;
        d.set_item("subcategory_edges", s.subcategory_edges)?;
        d.set_item("removed_edges", s.removed_edges)?;
        d.set_item("tree_weight", s.tree_weight)?;
        Ok(d)
    }

    /// μ_λ(word, other); an empty or missing `lam` gives standard ESA.
    #[pyo3(signature = (word, other, lam=None, mode="inclusive"))]
    fn relatedness(&self, word: &str, other: &str, lam: Option<Vec<f64>>, mode: &str) -> PyResult<f64> {
        let lambda = schedule(lam)?;
        let rs = self.model.reinforced().map_err(err)?.with_mode(support_mode(mode)?);
        rs.relatedness(word, other, &lambda).map_err(err)
    }

    /// Reinforced concept vector as `(page id, weight)` pairs.
    #[pyo3(signature = (word, lam=None, mode="inclusive"))]
    fn concept_vector(&self, word: &str, lam: Option<Vec<f64>>, mode: &str) -> PyResult<Vec<(String, f64)>> {
        let lambda = schedule(lam)?;
        let rs = self.model.reinforced().map_err(err)?.with_mode(support_mode(mode)?);
        let v = rs.concept_vector_of(word, &lambda).map_err(err)?;
        let ids = self.model.page_ids();
        Ok(v.iter().map(|(p, x)| (ids[p as usize].clone(), x)).collect())
    }

    /// Ancestors of `node` in the spanning tree, parent first.
    fn ancestor_path(&self, node: &str) -> PyResult<Vec<String>> {
        self.model.tree.ancestor_path(node).map_err(err)
    }

    /// Cross-validated precision for each schedule, as dicts.
    #[pyo3(signature = (docs, lambdas, folds=10, seed=42, mode="inclusive"))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        docs: PathBuf,
        lambdas: Vec<Vec<f64>>,
        folds: usize,
        seed: u64,
        mode: &str,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let mode = support_mode(mode)?;
        let schedules = lambdas
            .into_iter()
            .map(|l| LambdaSchedule::new(l).map_err(err))
            .collect::<PyResult<Vec<_>>>()?;
        let reports = py
            .detach(|| {
                let eval = load_eval_corpus(&docs)?;
                let rs = self.model.reinforced()?.with_mode(mode);
                let stats = EvalStats::build(&eval, &self.model.pipeline);
                schedules
                    .iter()
                    .map(|l| cross_validate(&rs, &eval, &stats, l, folds, seed))
                    .collect::<Result<Vec<_>, _>>()
            })
            .map_err(err)?;
        reports
            .into_iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("precision", r.precision)?;
                d.set_item("per_fold", r.per_fold)?;
                d.set_item("lambda", r.lambda.values().to_vec())?;
                d.set_item("folds", r.folds)?;
                d.set_item("seed", r.seed)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        let s = self.model.summary();
        format!(
            "Index(pages={}, categories={}, terms={})",
            s.pages, s.categories, s.terms
        )
    }
}

#[pymodule]
fn tesa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Index>()?;
    m.add("TesaError", m.py().get_type::<TesaError>())?;
    Ok(())
}
