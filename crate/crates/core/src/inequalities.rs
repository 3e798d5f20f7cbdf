//! Bell inequalities as coefficient vectors, their class bounds, and the
//! communication lower bounds they imply.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scenario::{flatten_nested, nest, CorrelationVector, Scenario};
use crate::strategies::{class_max_all, ClassMax, CommClass, CostModel};

const VIOLATION_EPS: f64 = 1e-9;

/// A linear functional `b · p` in the canonical `[x][y][a][b]` flattening.
/// Class bounds are computed on first use and cached.
#[derive(Clone, Debug)]
pub struct BellInequality {
    scenario: Scenario,
    coeffs: Vec<f64>,
    bounds: OnceLock<[ClassMax; 4]>,
}

impl PartialEq for BellInequality {
    fn eq(&self, other: &Self) -> bool {
        self.scenario == other.scenario && self.coeffs == other.coeffs
    }
}

impl BellInequality {
    pub fn new(scenario: Scenario, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != scenario.len() {
            return Err(Error::Shape {
                path: "b".into(),
                message: format!("expected {} coefficients, found {}", scenario.len(), coeffs.len()),
            });
        }
        if let Some(i) = coeffs.iter().position(|v| !v.is_finite()) {
            let (x, y, a, b) = scenario.coords(i);
            return Err(Error::Shape { path: format!("b[{x}][{y}][{a}][{b}]"), message: "not a finite number".into() });
        }
        Ok(Self { scenario, coeffs, bounds: OnceLock::new() })
    }

    pub fn from_nested(scenario: Scenario, nested: &[Vec<Vec<Vec<f64>>>]) -> Result<Self> {
        let flat = flatten_nested(&scenario, nested, "b")?;
        Self::new(scenario, flat)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        nest(&self.scenario, &self.coeffs)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.coeffs[self.scenario.index(x, y, a, b)]
    }

    /// `B(p) = b · p`.
    pub fn evaluate(&self, p: &CorrelationVector) -> Result<f64> {
        if p.scenario() != &self.scenario {
            return Err(Error::Shape {
                path: "p".into(),
                message: format!("scenario {:?} does not match inequality scenario {:?}", p.scenario(), self.scenario),
            });
        }
        Ok(self.coeffs.iter().zip(p.entries()).map(|(b, p)| b * p).sum())
    }

    /// Class maxima with witnesses.
    pub fn class_maxima(&self) -> &[ClassMax; 4] {
        self.bounds
            .get_or_init(|| class_max_all(&self.coeffs, &self.scenario).expect("shape checked at construction"))
    }

    /// `B₀ … B₃`.
    pub fn class_bounds(&self) -> [f64; 4] {
        self.class_maxima().map(|c| c.value)
    }

    pub fn local_bound(&self) -> f64 {
        self.class_maxima()[0].value
    }

    /// The class maximizing `(B_j − B₀)/c_j` among nonlocal classes with
    /// finite nonzero cost; ties go to the cheaper class.
    pub fn j_star(&self, cost: &CostModel) -> Option<(CommClass, f64)> {
        let bounds = self.class_bounds();
        let mut best: Option<(CommClass, f64)> = None;
        for class in &CommClass::ALL[1..] {
            let c = cost.cost(*class);
            if !c.is_finite() || c <= 0.0 {
                continue;
            }
            let ratio = (bounds[class.index()] - bounds[0]) / c;
            if best.is_none_or(|(_, r)| ratio > r) {
                best = Some((*class, ratio));
            }
        }
        best
    }

    pub fn comm_bound(&self, p: &CorrelationVector, cost: &CostModel) -> Result<CommBound> {
        let value = self.evaluate(p)?;
        let b0 = self.local_bound();
        let bounds = self.class_bounds();
        let Some((j, ratio)) = self.j_star(cost) else {
            let bound = if value > b0 + VIOLATION_EPS { f64::INFINITY } else { 0.0 };
            return Ok(CommBound { value: bound, bell_value: value, j_star: None, ratio: 0.0, exceeds: false });
        };
        let bj = bounds[j.index()];
        let bound = if bj > b0 {
            ((value - b0) / ratio).max(0.0)
        } else if value > b0 + VIOLATION_EPS {
            f64::INFINITY
        } else {
            0.0
        };
        Ok(CommBound { value: bound, bell_value: value, j_star: Some(j), ratio, exceeds: value > bj + VIOLATION_EPS })
    }

    /// Affine rescaling `b′ = c_{j*}/(B_{j*} − B₀) · (b − B₀/(M_A M_B) · 1)`,
    /// after which every class bound satisfies `B′_i ≤ c_i` and the local
    /// bound is 0.
    pub fn normalize(&self, cost: &CostModel) -> Result<BellInequality> {
        let (j, ratio) = self.j_star(cost).ok_or(Error::Undetectable)?;
        if ratio <= 0.0 {
            return Err(Error::Undetectable);
        }
        let b0 = self.local_bound();
        let blocks = self.scenario.blocks() as f64;
        let coeffs = self.coeffs.iter().map(|b| (b - b0 / blocks) / ratio).collect();
        let out = BellInequality::new(self.scenario, coeffs)?;
        let nb = out.class_bounds();
        for class in CommClass::ALL {
            let c = cost.cost(class);
            if nb[class.index()] > c + 1e-9 {
                return Err(Error::Precondition(format!(
                    "normalized bound {} for {class} exceeds its cost {c} (j* = {j})",
                    nb[class.index()]
                )));
            }
        }
        Ok(out)
    }

    /// CHSH sign pattern generalized to `d` outcomes: `+1` on agreement and
    /// `−1` on disagreement in every block except `(x,y) = (1,0)`, where the
    /// signs are reversed.
    pub fn chsh(d: usize) -> Result<Self> {
        let s = Scenario::symmetric(d)?;
        let mut coeffs = vec![0.0; s.len()];
        for x in 0..2 {
            for y in 0..2 {
                let sign = if (x, y) == (1, 0) { -1.0 } else { 1.0 };
                for a in 0..d {
                    for b in 0..d {
                        coeffs[s.index(x, y, a, b)] = if a == b { sign } else { -sign };
                    }
                }
            }
        }
        Self::new(s, coeffs)
    }

    /// CGLMP inequality for `d` outcomes, summed over `k = 0 .. ⌊d/2⌋ − 1`
    /// with weights `1 − 2k/(d−1)`. Shifts are taken mod `d`.
    pub fn cglmp(d: usize) -> Result<Self> {
        let s = Scenario::symmetric(d)?;
        let mut coeffs = vec![0.0; s.len()];
        // Adds `w · P(first = second + shift)` where `first` is Alice's
        // outcome in block (x, y) when `alice_first`, Bob's otherwise.
        let mut add = |x: usize, y: usize, alice_first: bool, shift: isize, w: f64| {
            let di = d as isize;
            for second in 0..d {
                let first = ((second as isize + shift).rem_euclid(di)) as usize;
                let (a, b) = if alice_first { (first, second) } else { (second, first) };
                coeffs[s.index(x, y, a, b)] += w;
            }
        };
        for k in 0..d / 2 {
            let w = 1.0 - 2.0 * k as f64 / (d as f64 - 1.0);
            let k = k as isize;
            add(0, 0, true, k, w);
            add(1, 0, false, k + 1, w);
            add(1, 1, true, k, w);
            add(0, 1, false, k, w);
            add(0, 0, true, -k - 1, -w);
            add(1, 0, false, -k, -w);
            add(1, 1, true, -k - 1, -w);
            add(0, 1, false, -k - 1, -w);
        }
        Self::new(s, coeffs)
    }
}

/// Lower bound on the average communication implied by one inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommBound {
    /// Bits; `+∞` when `p` violates the local bound but no nonlocal class is
    /// affordable.
    pub value: f64,
    pub bell_value: f64,
    pub j_star: Option<CommClass>,
    /// `(B_{j*} − B₀)/c_{j*}`.
    pub ratio: f64,
    /// `B(p) > B_{j*}`: the bound is valid but could be improved by mixing
    /// strategies from several classes.
    pub exceeds: bool,
}
