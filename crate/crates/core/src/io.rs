//! JSON file formats for correlations, inequalities, decompositions and
//! facet lists, plus the line-based strategy dump.
//!
//! Correlations: `{"scenario": {...}, "p": [x][y][a][b]}`. Inequalities:
//! `{"scenario": {...}, "b": [x][y][a][b], "local_bound": 2}` with the bound
//! optional. Decompositions: `{"scenario": {...}, "terms": [{"weight",
//! "class", "alpha": [4], "beta": [4]}]}`. Facet lists are JSON lines: a
//! header `{"scenario": {...}, "count": n}` followed by one inequality per
//! line.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::decomposition::{Decomposition, Term};
use crate::error::{Error, Result};
use crate::inequalities::BellInequality;
use crate::polytope::Facet;
use crate::scenario::{nest, CorrelationVector, Scenario};
use crate::strategies::{classify, DeterministicStrategy};

type Nested = Vec<Vec<Vec<Vec<f64>>>>;

#[derive(Serialize, Deserialize)]
struct CorrelationFile {
    scenario: Scenario,
    p: Nested,
}

pub fn parse_correlation(text: &str) -> Result<CorrelationVector> {
    let f: CorrelationFile = serde_json::from_str(text)?;
    CorrelationVector::from_nested(f.scenario, &f.p)
}

pub fn correlation_to_json(p: &CorrelationVector) -> String {
    let f = CorrelationFile { scenario: *p.scenario(), p: p.to_nested() };
    serde_json::to_string_pretty(&f).expect("plain data serializes")
}

#[derive(Serialize, Deserialize)]
struct InequalityFile {
    scenario: Scenario,
    b: Nested,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    local_bound: Option<f64>,
}

/// An inequality with the local bound recorded alongside it, if any.
#[derive(Clone, Debug)]
pub struct InequalityRecord {
    pub inequality: BellInequality,
    pub local_bound: Option<f64>,
}

pub fn parse_inequality(text: &str) -> Result<InequalityRecord> {
    let f: InequalityFile = serde_json::from_str(text)?;
    if let Some(v) = f.local_bound {
        if !v.is_finite() {
            return Err(Error::Parse("local_bound must be finite".into()));
        }
    }
    Ok(InequalityRecord { inequality: BellInequality::from_nested(f.scenario, &f.b)?, local_bound: f.local_bound })
}

pub fn inequality_to_json(b: &BellInequality, local_bound: Option<f64>) -> String {
    let f = InequalityFile { scenario: *b.scenario(), b: b.to_nested(), local_bound };
    serde_json::to_string_pretty(&f).expect("plain data serializes")
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    weight: f64,
    class: usize,
    alpha: [u16; 4],
    beta: [u16; 4],
}

#[derive(Serialize, Deserialize)]
struct DecompositionFile {
    scenario: Scenario,
    terms: Vec<TermRecord>,
}

pub fn parse_decomposition(text: &str) -> Result<Decomposition> {
    let f: DecompositionFile = serde_json::from_str(text)?;
    let mut terms = Vec::with_capacity(f.terms.len());
    for (i, t) in f.terms.into_iter().enumerate() {
        let class = classify(&t.alpha, &t.beta);
        if class.index() != t.class {
            return Err(Error::Parse(format!("terms[{i}]: declared class {} but the tables are in {class}", t.class)));
        }
        terms.push(Term { strategy: DeterministicStrategy::new(t.alpha, t.beta), weight: t.weight });
    }
    Decomposition::new(f.scenario, terms)
}

pub fn decomposition_to_json(dec: &Decomposition) -> String {
    let f = DecompositionFile {
        scenario: *dec.scenario(),
        terms: dec
            .terms()
            .iter()
            .map(|t| TermRecord {
                weight: t.weight,
                class: t.strategy.class().index(),
                alpha: t.strategy.alpha_table(),
                beta: t.strategy.beta_table(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&f).expect("plain data serializes")
}

#[derive(Serialize, Deserialize)]
struct FacetHeader {
    scenario: Scenario,
    count: usize,
}

/// Header line plus one compact inequality line per facet, with integer
/// coefficients.
pub fn facets_to_jsonl(s: &Scenario, facets: &[Facet]) -> String {
    let mut out = serde_json::to_string(&FacetHeader { scenario: *s, count: facets.len() }).expect("serializes");
    out.push('\n');
    for f in facets {
        let flat: Vec<f64> = f.coeffs.iter().map(|&c| c as f64).collect();
        let nested: Vec<Vec<Vec<Vec<i64>>>> =
            nest(s, &flat).into_iter().map(|x| x.into_iter().map(|y| y.into_iter().map(|a| a.into_iter().map(|v| v as i64).collect()).collect()).collect()).collect();
        let line = json!({ "scenario": s, "b": nested, "local_bound": f.bound });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_facet_export(text: &str) -> Result<(Scenario, Vec<InequalityRecord>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: FacetHeader =
        serde_json::from_str(lines.next().ok_or_else(|| Error::Parse("empty facet file".into()))?)?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let rec = parse_inequality(line).map_err(|e| Error::Parse(format!("facet line {}: {e}", i + 2)))?;
        if rec.inequality.scenario() != &header.scenario {
            return Err(Error::Parse(format!("facet line {}: scenario differs from the header", i + 2)));
        }
        out.push(rec);
    }
    if out.len() != header.count {
        return Err(Error::Parse(format!("header announces {} facets, file has {}", header.count, out.len())));
    }
    Ok((header.scenario, out))
}

/// One strategy per line in the `class=… alpha=… beta=…` format; blank
/// lines and `#` comments are skipped.
pub fn parse_strategy_dump(text: &str) -> Result<Vec<DeterministicStrategy>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| l.parse().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn strategy_dump(strategies: &[DeterministicStrategy]) -> String {
    strategies.iter().map(|s| format!("{s}\n")).collect()
}
