use std::collections::BTreeMap;

use serde::Serialize;

use crate::arborification::WeightedDigraph;

/// Degree histograms over category nodes with log-log least-squares
/// exponents. An exponent is absent when fewer than two points qualify.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeDistribution {
    pub in_histogram: BTreeMap<usize, usize>,
    pub out_histogram: BTreeMap<usize, usize>,
    pub alpha_in: Option<f64>,
    pub alpha_out: Option<f64>,
}

pub fn degree_distribution(g: &WeightedDigraph) -> DegreeDistribution {
    let n_pages = g.n_pages();
    let mut indeg = vec![0usize; g.n_categories()];
    let mut outdeg = vec![0usize; g.n_categories()];
    for e in g.edges() {
        indeg[e.target - n_pages] += 1;
        if e.source >= n_pages {
            outdeg[e.source - n_pages] += 1;
        }
    }
    let histogram = |degrees: &[usize]| {
        let mut h = BTreeMap::new();
        for &d in degrees {
            *h.entry(d).or_insert(0) += 1;
        }
        h
    };
    let in_histogram = histogram(&indeg);
    let out_histogram = histogram(&outdeg);
    DegreeDistribution {
        alpha_in: fit_power_law(&in_histogram),
        alpha_out: fit_power_law(&out_histogram),
        in_histogram,
        out_histogram,
    }
}

/// `α` such that `count ∝ degree^(-α)`: negated slope of the least-squares
/// line through `(ln degree, ln count)` for degree ≥ 1 and count ≥ 1.
pub fn fit_power_law(histogram: &BTreeMap<usize, usize>) -> Option<f64> {
    let points: Vec<(f64, f64)> = histogram
        .iter()
        .filter(|&(&d, &c)| d >= 1 && c >= 1)
        .map(|(&d, &c)| ((d as f64).ln(), (c as f64).ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}
