//! Hecke intersection numbers as sums of degrees over `(alpha, theta)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cmdata::{enumerate_alphas, enumerate_thetas, AlphaElement, ThetaHom};
use crate::degrees::{degree_term, rational_string, ArithDegree, DegreeError, LengthBranch};
use crate::fields::CmPairConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub a: i64,
    pub theta_index: usize,
    pub theta: String,
    /// Primes of `Diff_theta(alpha)`.
    pub diff: Vec<String>,
    pub branch: Option<LengthBranch>,
    /// Length factor `L`, as an exact rational string.
    pub length: Option<String>,
    /// `rho(alpha a_theta^-1 p^-1 D)`.
    pub rho: Option<u64>,
    pub degree: ArithDegree,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub config: CmPairConfig,
    pub rows: Vec<ReportRow>,
    pub total: ArithDegree,
    /// Approximation of `sum c_p ln p`.
    pub numeric_total: f64,
}

fn pairs(config: &CmPairConfig) -> Vec<(AlphaElement, usize, ThetaHom)> {
    let thetas = enumerate_thetas(config);
    enumerate_alphas(config)
        .into_iter()
        .flat_map(|a| {
            thetas
                .iter()
                .enumerate()
                .map(move |(i, t)| (a, i, t.clone()))
        })
        .collect()
}

/// `I(T_m Y_1, Y_2)`: the sum of `deg(X_{theta, alpha})` over all
/// `alpha` and `theta`.
pub fn intersection_number(config: &CmPairConfig) -> Result<ArithDegree, DegreeError> {
    let terms: Vec<ArithDegree> = pairs(config)
        .par_iter()
        .map(|(a, _, t)| crate::degrees::degree_x(a, t, config))
        .collect::<Result<_, _>>()?;
    Ok(terms.into_iter().sum())
}

/// Itemized rows in `(a, theta)` order with their total.
pub fn report(config: &CmPairConfig) -> Result<IntersectionReport, DegreeError> {
    let rows: Vec<ReportRow> = pairs(config)
        .par_iter()
        .map(|(a, i, t)| {
            let term = degree_term(a, t, config)?;
            Ok(ReportRow {
                a: a.a(),
                theta_index: *i,
                theta: t.label(),
                diff: term.diff.iter().map(|p| p.to_string()).collect(),
                branch: term.branch,
                length: term.length.as_ref().map(rational_string),
                rho: term.rho,
                degree: term.degree,
            })
        })
        .collect::<Result<_, DegreeError>>()?;
    let total: ArithDegree = rows.iter().map(|r| r.degree.clone()).sum();
    let numeric_total = total.log_value();
    Ok(IntersectionReport {
        config: config.clone(),
        rows,
        total,
        numeric_total,
    })
}
