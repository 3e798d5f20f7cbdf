//! Published targets recomputed from scratch, one row each.

use std::cell::OnceCell;

use bellcomm::comm::{facet_rewrite_bounds, min_comm, Mode};
use bellcomm::inequalities::BellInequality;
use bellcomm::polytope::{certify_facet, enumerate_facets, polytope_dim, violated_facets, Facet};
use bellcomm::quantum::{chsh_optimal, cglmp_optimal, qutrit_example, Entanglement};
use bellcomm::scenario::{build_constraints, CorrelationVector, Scenario};
use bellcomm::strategies::CostModel;
use bellcomm::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub target: String,
    pub reference: f64,
    pub computed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Row {
    fn new(target: impl Into<String>, reference: f64, computed: f64, tolerance: f64) -> Self {
        let pass = (computed - reference).abs() <= tolerance;
        Self { target: target.into(), reference, computed, tolerance, pass }
    }
}

/// Default targets, in report order.
pub const TARGETS: &[&str] = &[
    "chsh",
    "cglmp-me",
    "cglmp-nme",
    "bound-me",
    "bound-nme",
    "qutrit-cglmp",
    "qutrit-gchsh",
    "qutrit-cost",
    "facet-bound",
    "facets",
    "violated",
    "saturating",
    "hull-dim",
];

/// Extra targets enabled by `--full`: saturation of the CGLMP bound by the
/// minimal communication for `d = 3..8`.
pub fn full_targets() -> Vec<String> {
    (3..=8).flat_map(|d| ["me", "nme"].map(|k| format!("saturation-d{d}-{k}"))).collect()
}

const FOUR_DECIMALS: f64 = 1e-4;

/// Shared intermediate results, computed on first use.
#[derive(Default)]
struct Cache {
    me3: OnceCell<CorrelationVector>,
    nme3: OnceCell<CorrelationVector>,
    facets3: OnceCell<Vec<Facet>>,
}

impl Cache {
    fn cglmp3(&self, ent: Entanglement) -> Result<&CorrelationVector> {
        let cell = match ent {
            Entanglement::Maximal => &self.me3,
            Entanglement::Optimized => &self.nme3,
        };
        if cell.get().is_none() {
            let _ = cell.set(cglmp_optimal(3, ent)?.0);
        }
        Ok(cell.get().expect("just set"))
    }

    fn facets(&self) -> Result<&[Facet]> {
        if self.facets3.get().is_none() {
            let _ = self.facets3.set(enumerate_facets(&Scenario::symmetric(3)?)?);
        }
        Ok(self.facets3.get().expect("just set"))
    }
}

fn cglmp_value(p: &CorrelationVector) -> Result<f64> {
    BellInequality::cglmp(p.scenario().outcomes_a())?.evaluate(p)
}

fn compute(target: &str, cache: &Cache) -> Result<Row> {
    let cost = CostModel::default();
    let sqrt2 = 2f64.sqrt();
    Ok(match target {
        "chsh" => Row::new(target, sqrt2 - 1.0, min_comm(&chsh_optimal(), &cost, Mode::Enumerate)?.value, 1e-6),
        "cglmp-me" => Row::new(target, 2.8729, cglmp_value(cache.cglmp3(Entanglement::Maximal)?)?, FOUR_DECIMALS),
        "cglmp-nme" => Row::new(target, 2.9149, cglmp_value(cache.cglmp3(Entanglement::Optimized)?)?, FOUR_DECIMALS),
        "bound-me" | "bound-nme" => {
            let (ent, published) =
                if target == "bound-me" { (Entanglement::Maximal, 0.4365) } else { (Entanglement::Optimized, 0.4575) };
            let b = BellInequality::cglmp(3)?.comm_bound(cache.cglmp3(ent)?, &cost)?;
            Row::new(target, published, b.value, FOUR_DECIMALS)
        }
        "qutrit-cglmp" => Row::new(target, 2.5523, cglmp_value(&qutrit_example())?, FOUR_DECIMALS),
        "qutrit-gchsh" => Row::new(target, 2.7364, BellInequality::chsh(3)?.evaluate(&qutrit_example())?, FOUR_DECIMALS),
        "qutrit-cost" => Row::new(target, 0.3682, min_comm(&qutrit_example(), &cost, Mode::Enumerate)?.value, FOUR_DECIMALS),
        "facet-bound" => {
            let s = Scenario::symmetric(3)?;
            let p = qutrit_example();
            let facets = cache.facets()?;
            let ineqs = violated_facets(&p, facets)
                .into_iter()
                .map(|(i, _)| facets[i].to_inequality(&s))
                .collect::<Result<Vec<_>>>()?;
            let bounds = facet_rewrite_bounds(&ineqs, &p, &cost, &build_constraints(&s), Mode::Enumerate)?;
            let best = bounds.iter().map(|b| b.value).fold(f64::NEG_INFINITY, f64::max);
            Row::new(target, 0.2764, best, FOUR_DECIMALS)
        }
        "facets" => Row::new(target, 1116.0, cache.facets()?.len() as f64, 0.0),
        "violated" => Row::new(target, 23.0, violated_facets(&qutrit_example(), cache.facets()?).len() as f64, 0.0),
        "saturating" => Row::new(target, 21.0, certify_facet(&BellInequality::chsh(3)?, None).saturating as f64, 0.0),
        "hull-dim" => Row::new(target, 24.0, polytope_dim(&Scenario::symmetric(3)?) as f64, 0.0),
        other => {
            let Some(rest) = other.strip_prefix("saturation-d") else {
                return Err(Error::Parse(format!("unknown target `{other}`")));
            };
            let (d, kind) = rest.split_once('-').ok_or_else(|| Error::Parse(format!("unknown target `{other}`")))?;
            let d: usize = d.parse().map_err(|_| Error::Parse(format!("unknown target `{other}`")))?;
            let ent = match kind {
                "me" => Entanglement::Maximal,
                "nme" => Entanglement::Optimized,
                _ => return Err(Error::Parse(format!("unknown target `{other}`"))),
            };
            let (p, _) = cglmp_optimal(d, ent)?;
            let half = cglmp_value(&p)? / 2.0 - 1.0;
            let mode = if d <= 5 { Mode::Enumerate } else { Mode::Lazy };
            Row::new(target, half, min_comm(&p, &cost, mode)?.value, 1e-5)
        }
    })
}

pub fn is_known(target: &str) -> bool {
    TARGETS.contains(&target) || full_targets().iter().any(|t| t == target)
}

/// Computes the requested targets in order. A target whose computation
/// fails is reported as a failing row with a `NaN` value.
pub fn run(targets: &[String]) -> Vec<Row> {
    let cache = Cache::default();
    targets
        .iter()
        .map(|t| {
            compute(t, &cache).unwrap_or_else(|e| {
                log::error!("{t}: {e}");
                Row { target: t.clone(), reference: f64::NAN, computed: f64::NAN, tolerance: 0.0, pass: false }
            })
        })
        .collect()
}
