//! Deterministic strategies, their communication classes, and exact
//! class-restricted maximization of a linear functional.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scenario::{CorrelationVector, Scenario};

/// Default cap on the number of strategies an exhaustive enumeration may
/// visit. Seven outcomes (5.8M strategies) fit, eight do not.
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// Communication classes for two-setting scenarios, ordered by cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CommClass {
    /// Both parties answer from their own input only.
    Local = 0,
    /// One party needs the other's input.
    OneWay = 1,
    /// One input bit forward, a reply on only one of the first party's inputs.
    TwoRound = 2,
    /// Both parties need each other's input.
    TwoWay = 3,
}

impl CommClass {
    pub const ALL: [CommClass; 4] = [CommClass::Local, CommClass::OneWay, CommClass::TwoRound, CommClass::TwoWay];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for CommClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.index())
    }
}

/// Partition by the number of non-constant outcome functions on each side.
///
/// `alpha` and `beta` are indexed by `2x + y`. Alice's function `α_x` is
/// non-constant when `α(x,0) ≠ α(x,1)`; Bob's `β_y` when `β(0,y) ≠ β(1,y)`.
pub fn classify(alpha: &[u16; 4], beta: &[u16; 4]) -> CommClass {
    let na = (alpha[0] != alpha[1]) as u8 + (alpha[2] != alpha[3]) as u8;
    let nb = (beta[0] != beta[2]) as u8 + (beta[1] != beta[3]) as u8;
    class_of_counts(na, nb)
}

fn class_of_counts(na: u8, nb: u8) -> CommClass {
    match (na, nb) {
        (0, 0) => CommClass::Local,
        (0, _) | (_, 0) => CommClass::OneWay,
        (2, 2) => CommClass::TwoWay,
        _ => CommClass::TwoRound,
    }
}

/// Outcome tables `α(x,y)`, `β(x,y)` with their communication class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicStrategy {
    alpha: [u16; 4],
    beta: [u16; 4],
    class: CommClass,
}

impl DeterministicStrategy {
    pub fn new(alpha: [u16; 4], beta: [u16; 4]) -> Self {
        Self { alpha, beta, class: classify(&alpha, &beta) }
    }

    /// Local strategy from per-setting outcomes `α(x)`, `β(y)`.
    pub fn local(alpha: [u16; 2], beta: [u16; 2]) -> Self {
        Self::new([alpha[0], alpha[0], alpha[1], alpha[1]], [beta[0], beta[1], beta[0], beta[1]])
    }

    pub fn alpha_table(&self) -> [u16; 4] {
        self.alpha
    }

    pub fn beta_table(&self) -> [u16; 4] {
        self.beta
    }

    pub fn alpha(&self, x: usize, y: usize) -> usize {
        self.alpha[2 * x + y] as usize
    }

    pub fn beta(&self, x: usize, y: usize) -> usize {
        self.beta[2 * x + y] as usize
    }

    pub fn class(&self) -> CommClass {
        self.class
    }

    /// Number of non-constant functions `α_x` and `β_y`.
    pub fn nonconstant_counts(&self) -> (usize, usize) {
        let na = (self.alpha[0] != self.alpha[1]) as usize + (self.alpha[2] != self.alpha[3]) as usize;
        let nb = (self.beta[0] != self.beta[2]) as usize + (self.beta[1] != self.beta[3]) as usize;
        (na, nb)
    }

    pub fn fits(&self, s: &Scenario) -> bool {
        self.alpha.iter().all(|&a| (a as usize) < s.outcomes_a())
            && self.beta.iter().all(|&b| (b as usize) < s.outcomes_b())
    }

    /// Flat indices of the four unit entries, one per `(x, y)` block.
    pub fn entry_indices(&self, s: &Scenario) -> [usize; 4] {
        let mut out = [0; 4];
        for x in 0..2 {
            for y in 0..2 {
                out[2 * x + y] = s.index(x, y, self.alpha(x, y), self.beta(x, y));
            }
        }
        out
    }

    /// `b · d` for this strategy's 0/1 vector `d`.
    pub fn value(&self, s: &Scenario, b: &[f64]) -> f64 {
        self.entry_indices(s).iter().map(|&i| b[i]).sum()
    }

    pub fn correlation(&self, s: &Scenario) -> CorrelationVector {
        let mut entries = vec![0.0; s.len()];
        for i in self.entry_indices(s) {
            entries[i] = 1.0;
        }
        CorrelationVector::from_entries(*s, entries).expect("length matches scenario")
    }
}

/// Dump-line format: `class=<i> alpha=<a00,a01,a10,a11> beta=<b00,b01,b10,b11>`.
impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.alpha;
        let b = self.beta;
        write!(
            f,
            "class={} alpha={},{},{},{} beta={},{},{},{}",
            self.class.index(),
            a[0],
            a[1],
            a[2],
            a[3],
            b[0],
            b[1],
            b[2],
            b[3]
        )
    }
}

impl FromStr for DeterministicStrategy {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut class = None;
        let mut alpha = None;
        let mut beta = None;
        for field in line.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("field `{field}` is not key=value")))?;
            match key {
                "class" => {
                    let c: usize = value.parse().map_err(|_| Error::Parse(format!("bad class `{value}`")))?;
                    class = Some(CommClass::from_index(c).ok_or_else(|| Error::Parse(format!("class {c} out of range")))?);
                }
                "alpha" => alpha = Some(parse_table(value)?),
                "beta" => beta = Some(parse_table(value)?),
                other => return Err(Error::Parse(format!("unknown field `{other}`"))),
            }
        }
        let alpha = alpha.ok_or_else(|| Error::Parse("missing alpha".into()))?;
        let beta = beta.ok_or_else(|| Error::Parse("missing beta".into()))?;
        let strategy = DeterministicStrategy::new(alpha, beta);
        if let Some(c) = class {
            if c != strategy.class {
                return Err(Error::Parse(format!(
                    "declared class {} but tables classify as {}",
                    c.index(),
                    strategy.class.index()
                )));
            }
        }
        Ok(strategy)
    }
}

fn parse_table(v: &str) -> Result<[u16; 4]> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Parse(format!("table `{v}` must have 4 entries")));
    }
    let mut out = [0u16; 4];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| Error::Parse(format!("bad outcome `{p}`")))?;
    }
    Ok(out)
}

/// Per-class communication cost in bits. Entries may be `+∞` to forbid a
/// class (e.g. one-way-only protocols).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    costs: [f64; 4],
}

impl Default for CostModel {
    fn default() -> Self {
        Self { costs: [0.0, 1.0, 1.5, 2.0] }
    }
}

impl CostModel {
    pub fn new(costs: [f64; 4]) -> Result<Self> {
        if costs[0] != 0.0 {
            return Err(Error::CostModel("local strategies must cost 0".into()));
        }
        if costs.iter().any(|c| c.is_nan() || *c < 0.0) {
            return Err(Error::CostModel("costs must be nonnegative".into()));
        }
        if costs.iter().all(|c| c.is_finite()) && costs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::CostModel("costs must be nondecreasing in the class index".into()));
        }
        Ok(Self { costs })
    }

    /// Forbids the two-way classes.
    pub fn one_way() -> Self {
        Self { costs: [0.0, 1.0, f64::INFINITY, f64::INFINITY] }
    }

    pub fn cost(&self, class: CommClass) -> f64 {
        self.costs[class.index()]
    }

    pub fn costs(&self) -> [f64; 4] {
        self.costs
    }

    pub fn allows(&self, class: CommClass) -> bool {
        self.cost(class).is_finite()
    }
}

impl FromStr for CostModel {
    type Err = Error;

    /// Parses `c0,c1,c2,c3`; `inf` is accepted.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::CostModel(format!("expected 4 comma-separated costs, got `{s}`")));
        }
        let mut costs = [0.0; 4];
        for (c, p) in costs.iter_mut().zip(parts) {
            *c = match p {
                "inf" | "+inf" | "infinity" => f64::INFINITY,
                _ => p.parse().map_err(|_| Error::CostModel(format!("bad cost `{p}`")))?,
            };
        }
        Self::new(costs)
    }
}

/// Number of deterministic strategies in a scenario, `d_A⁴ · d_B⁴`.
pub fn strategy_count(s: &Scenario) -> u128 {
    (s.outcomes_a() as u128).pow(4) * (s.outcomes_b() as u128).pow(4)
}

/// Lexicographic iterator over `(α table, β table)`.
#[derive(Clone, Debug)]
pub struct StrategyIter {
    da: u16,
    db: u16,
    alpha: [u16; 4],
    beta: [u16; 4],
    filter: [bool; 4],
    done: bool,
}

fn increment(t: &mut [u16; 4], base: u16) -> bool {
    for v in t.iter_mut().rev() {
        *v += 1;
        if *v < base {
            return true;
        }
        *v = 0;
    }
    false
}

impl Iterator for StrategyIter {
    type Item = DeterministicStrategy;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let s = DeterministicStrategy::new(self.alpha, self.beta);
            if !increment(&mut self.beta, self.db) && !increment(&mut self.alpha, self.da) {
                self.done = true;
            }
            if self.filter[s.class.index()] {
                return Some(s);
            }
        }
        None
    }
}

/// Enumerates every strategy (optionally restricted to some classes) in
/// lexicographic order, refusing if the total exceeds [`ENUMERATION_CAP`].
pub fn enumerate(s: &Scenario, classes: Option<&[CommClass]>) -> Result<StrategyIter> {
    enumerate_with_cap(s, classes, ENUMERATION_CAP)
}

pub fn enumerate_with_cap(s: &Scenario, classes: Option<&[CommClass]>, cap: u128) -> Result<StrategyIter> {
    let count = strategy_count(s);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    if s.outcomes_a() > u16::MAX as usize || s.outcomes_b() > u16::MAX as usize {
        return Err(Error::Scenario("too many outcomes to enumerate".into()));
    }
    let mut filter = [classes.is_none(); 4];
    for c in classes.unwrap_or(&[]) {
        filter[c.index()] = true;
    }
    Ok(StrategyIter {
        da: s.outcomes_a() as u16,
        db: s.outcomes_b() as u16,
        alpha: [0; 4],
        beta: [0; 4],
        filter,
        done: false,
    })
}

/// Maximum of `b · d` over one class, with a maximizing strategy.
#[derive(Clone, Copy, Debug)]
pub struct ClassMax {
    pub value: f64,
    pub witness: DeterministicStrategy,
}

/// Exact maxima of `b · d` over all four classes in one pass.
///
/// Alice's tables are enumerated (`d_A⁴` of them); for each, Bob's best
/// response splits per setting `y` into a best constant function and a best
/// non-constant function, and the class is determined by how many of each
/// side's functions are non-constant. The first maximizer in lexicographic
/// order of Alice's table is kept.
pub fn class_max_all(b: &[f64], s: &Scenario) -> Result<[ClassMax; 4]> {
    if b.len() != s.len() {
        return Err(Error::Shape {
            path: "b".into(),
            message: format!("expected {} coefficients, found {}", s.len(), b.len()),
        });
    }
    let da = s.outcomes_a() as u16;
    let db = s.outcomes_b();
    let mut best: [Option<ClassMax>; 4] = [None; 4];
    let mut alpha = [0u16; 4];
    loop {
        let na = (alpha[0] != alpha[1]) as u8 + (alpha[2] != alpha[3]) as u8;
        // For each y: (constant value, constant b), (non-constant value, b at x=0, b at x=1).
        let mut per_y = [((0.0, 0usize), (f64::NEG_INFINITY, 0usize, 0usize)); 2];
        for (y, slot) in per_y.iter_mut().enumerate() {
            let r0 = s.index(0, y, alpha[y] as usize, 0);
            let r1 = s.index(1, y, alpha[2 + y] as usize, 0);
            let w0 = &b[r0..r0 + db];
            let w1 = &b[r1..r1 + db];
            let mut cst = (f64::NEG_INFINITY, 0);
            for v in 0..db {
                let t = w0[v] + w1[v];
                if t > cst.0 {
                    cst = (t, v);
                }
            }
            let mut non = (f64::NEG_INFINITY, 0, 0);
            for v0 in 0..db {
                for v1 in 0..db {
                    if v0 != v1 {
                        let t = w0[v0] + w1[v1];
                        if t > non.0 {
                            non = (t, v0, v1);
                        }
                    }
                }
            }
            *slot = (cst, non);
        }
        let beta_from = |choice: [bool; 2]| {
            let mut beta = [0u16; 4];
            for y in 0..2 {
                if choice[y] {
                    let (_, v0, v1) = per_y[y].1;
                    beta[y] = v0 as u16;
                    beta[2 + y] = v1 as u16;
                } else {
                    let (_, v) = per_y[y].0;
                    beta[y] = v as u16;
                    beta[2 + y] = v as u16;
                }
            }
            beta
        };
        let value_of = |choice: [bool; 2]| -> f64 {
            (0..2).map(|y| if choice[y] { per_y[y].1 .0 } else { per_y[y].0 .0 }).sum()
        };
        let one = if value_of([true, false]) >= value_of([false, true]) { [true, false] } else { [false, true] };
        for (nb, choice) in [(0u8, [false, false]), (1, one), (2, [true, true])] {
            let v = value_of(choice);
            let class = class_of_counts(na, nb);
            let slot = &mut best[class.index()];
            if slot.is_none_or(|c| v > c.value) {
                *slot = Some(ClassMax { value: v, witness: DeterministicStrategy::new(alpha, beta_from(choice)) });
            }
        }
        if !increment(&mut alpha, da) {
            break;
        }
    }
    Ok(best.map(|c| c.expect("every class is nonempty for two or more outcomes")))
}

/// `B_i = max_{d ∈ D_i} b · d` with a witness.
pub fn class_max(b: &[f64], class: CommClass, s: &Scenario) -> Result<ClassMax> {
    Ok(class_max_all(b, s)?[class.index()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_strategy_is_local() {
        assert_eq!(classify(&[0; 4], &[0; 4]), CommClass::Local);
    }

    #[test]
    fn one_way_example() {
        // Alice constant, Bob outputs Alice's input on y = 0.
        assert_eq!(classify(&[0; 4], &[0, 0, 1, 0]), CommClass::OneWay);
    }

    #[test]
    fn two_round_example() {
        // α₀ constant, α₁(y) = y, β₀(x) = x, β₁ constant.
        let alpha = [0, 0, 0, 1];
        let beta = [0, 0, 1, 0];
        assert_eq!(classify(&alpha, &beta), CommClass::TwoRound);
        // Mirror image.
        assert_eq!(classify(&[0, 1, 1, 0], &[0, 0, 1, 0]), CommClass::TwoRound);
        assert_eq!(classify(&[0, 1, 1, 0], &[0, 0, 1, 1]), CommClass::TwoWay);
    }

    #[test]
    fn counts_for_two_outcomes() {
        let s = Scenario::symmetric(2).unwrap();
        assert_eq!(enumerate(&s, None).unwrap().count(), 256);
        assert_eq!(enumerate(&s, Some(&[CommClass::Local])).unwrap().count(), 16);
    }

    #[test]
    fn enumeration_cap_enforced() {
        let s = Scenario::symmetric(8).unwrap();
        assert!(matches!(enumerate(&s, None), Err(Error::EnumerationCap { .. })));
        let s = Scenario::symmetric(7).unwrap();
        assert!(enumerate(&s, None).is_ok());
    }

    #[test]
    fn lexicographic_order() {
        let s = Scenario::symmetric(2).unwrap();
        let v: Vec<_> = enumerate(&s, None).unwrap().take(3).collect();
        assert_eq!(v[0].beta_table(), [0, 0, 0, 0]);
        assert_eq!(v[1].beta_table(), [0, 0, 0, 1]);
        assert_eq!(v[2].beta_table(), [0, 0, 1, 0]);
        let last = enumerate(&s, None).unwrap().last().unwrap();
        assert_eq!(last.alpha_table(), [1, 1, 1, 1]);
        assert_eq!(last.beta_table(), [1, 1, 1, 1]);
    }

    #[test]
    fn dump_line_roundtrip_and_class_check() {
        let s = DeterministicStrategy::new([0, 0, 0, 1], [0, 0, 1, 0]);
        let line = s.to_string();
        assert_eq!(line, "class=2 alpha=0,0,0,1 beta=0,0,1,0");
        assert_eq!(line.parse::<DeterministicStrategy>().unwrap(), s);
        assert!("class=0 alpha=0,0,0,1 beta=0,0,1,0".parse::<DeterministicStrategy>().is_err());
        assert!("alpha=0,0,0 beta=0,0,1,0".parse::<DeterministicStrategy>().is_err());
    }

    #[test]
    fn cost_model_parsing() {
        let c: CostModel = "0,1,inf,inf".parse().unwrap();
        assert_eq!(c, CostModel::one_way());
        assert!("1,1,1,1".parse::<CostModel>().is_err());
        assert!("0,2,1,3".parse::<CostModel>().is_err());
        assert!("0,1,2".parse::<CostModel>().is_err());
    }

    #[test]
    fn correlation_is_one_hot_per_block() {
        let s = Scenario::symmetric(3).unwrap();
        let st = DeterministicStrategy::new([0, 1, 2, 0], [2, 2, 1, 0]);
        let p = st.correlation(&s);
        for x in 0..2 {
            for y in 0..2 {
                let block: f64 = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| p.get(x, y, a, b)).sum();
                assert_eq!(block, 1.0);
                assert_eq!(p.get(x, y, st.alpha(x, y), st.beta(x, y)), 1.0);
            }
        }
    }
}
