//! Quantum correlations from Schmidt-form states measured with phase
//! settings followed by a (conjugate) Fourier transform.
//!
//! For a state `Σ_j c_j |jj⟩`, Alice's setting applies `|j⟩ → e^{iφ(j)}|j⟩`
//! and then `U_FT` with `⟨a|U_FT|j⟩ = e^{2πi·aj/d}/√d`; Bob does the same with
//! the complex-conjugate transform. Probabilities are quadratic in the
//! Schmidt coefficients, which is what the state optimizer exploits.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequalities::BellInequality;
use crate::scenario::{CorrelationVector, Scenario};

/// Largest local dimension accepted by the CGLMP generators.
pub const MAX_CGLMP_DIM: usize = 8;

const NORM_TOL: f64 = 1e-12;
const COEFF_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 20_000;
const RANDOM_STARTS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BipartiteState {
    schmidt: Vec<f64>,
}

impl BipartiteState {
    pub fn new(schmidt: Vec<f64>) -> Result<Self> {
        if schmidt.len() < 2 {
            return Err(Error::Quantum("a state needs at least two Schmidt coefficients".into()));
        }
        if schmidt.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Quantum("Schmidt coefficients must be finite and nonnegative".into()));
        }
        let norm: f64 = schmidt.iter().map(|c| c * c).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Quantum(format!("Schmidt coefficients have squared norm {norm}, expected 1")));
        }
        Ok(Self { schmidt })
    }

    /// Normalizes nonnegative weights `c_j` before building the state.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        let norm = weights.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Quantum("cannot normalize a zero or non-finite vector".into()));
        }
        Self::new(weights.iter().map(|c| c / norm).collect())
    }

    pub fn maximally_entangled(d: usize) -> Result<Self> {
        Self::normalized(&vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.schmidt.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.schmidt
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alice,
    Bob,
}

/// Diagonal phase map followed by the side's Fourier transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMeasurement {
    pub phases: Vec<f64>,
    pub side: Side,
}

impl PhaseMeasurement {
    pub fn new(side: Side, phases: Vec<f64>) -> Self {
        Self { phases, side }
    }

    /// `⟨o|U|j⟩` for this side's transform.
    fn fourier(&self, o: usize, j: usize, d: usize) -> Complex64 {
        let sign = match self.side {
            Side::Alice => 1.0,
            Side::Bob => -1.0,
        };
        Complex64::from_polar(1.0 / (d as f64).sqrt(), sign * 2.0 * PI * (o * j) as f64 / d as f64)
    }
}

/// Measurement settings for both parties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub alice: [PhaseMeasurement; 2],
    pub bob: [PhaseMeasurement; 2],
}

impl Settings {
    fn check(&self, d: usize) -> Result<()> {
        for m in &self.alice {
            if m.side != Side::Alice {
                return Err(Error::Quantum("Alice's settings must use the Alice transform".into()));
            }
        }
        for m in &self.bob {
            if m.side != Side::Bob {
                return Err(Error::Quantum("Bob's settings must use the Bob transform".into()));
            }
        }
        for m in self.alice.iter().chain(&self.bob) {
            if m.phases.len() != d {
                return Err(Error::Quantum(format!(
                    "phase list has {} entries for a {d}-dimensional state",
                    m.phases.len()
                )));
            }
            if m.phases.iter().any(|p| !p.is_finite()) {
                return Err(Error::Quantum("phases must be finite".into()));
            }
        }
        Ok(())
    }

    /// Amplitude contributions `A_{xyab}(j)`, so that the amplitude for
    /// outcome `(a,b)` is `Σ_j c_j A_{xyab}(j)`.
    fn amplitude_terms(&self, d: usize) -> Vec<Complex64> {
        let s = Scenario::symmetric(d).expect("d >= 2");
        let mut out = vec![Complex64::new(0.0, 0.0); s.len() * d];
        for x in 0..2 {
            for y in 0..2 {
                let ma = &self.alice[x];
                let mb = &self.bob[y];
                for a in 0..d {
                    for b in 0..d {
                        let i = s.index(x, y, a, b);
                        for j in 0..d {
                            let phase = Complex64::from_polar(1.0, ma.phases[j] + mb.phases[j]);
                            out[i * d + j] = phase * ma.fourier(a, j, d) * mb.fourier(b, j, d);
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn correlations(state: &BipartiteState, settings: &Settings) -> Result<CorrelationVector> {
    let d = state.dim();
    settings.check(d)?;
    let s = Scenario::symmetric(d)?;
    let terms = settings.amplitude_terms(d);
    let c = state.coefficients();
    let entries = (0..s.len())
        .map(|i| {
            let amp: Complex64 = (0..d).map(|j| terms[i * d + j] * c[j]).sum();
            amp.norm_sqr()
        })
        .collect();
    CorrelationVector::from_entries(s, entries)
}

/// Standard CGLMP settings: `φ^A_x(j) = 2πj·x̃/d` with `x̃ ∈ {0, 1/2}` and
/// `φ^B_y(j) = 2πj·ỹ/d` with `ỹ ∈ {1/4, −1/4}`.
pub fn cglmp_settings(d: usize) -> Settings {
    let ramp = |side, shift: f64| {
        PhaseMeasurement::new(side, (0..d).map(|j| 2.0 * PI * j as f64 * shift / d as f64).collect())
    };
    Settings {
        alice: [ramp(Side::Alice, 0.0), ramp(Side::Alice, 0.5)],
        bob: [ramp(Side::Bob, 0.25), ramp(Side::Bob, -0.25)],
    }
}

/// Qutrit settings with Alice phases `(0,0,0)`, `(0,0,π/2)` and Bob phases
/// `(0,0,π/4)`, `(0,0,−π/4)`.
pub fn qutrit_example_settings() -> Settings {
    let last = |side, p: f64| PhaseMeasurement::new(side, vec![0.0, 0.0, p]);
    Settings {
        alice: [last(Side::Alice, 0.0), last(Side::Alice, FRAC_PI_2)],
        bob: [last(Side::Bob, FRAC_PI_4), last(Side::Bob, -FRAC_PI_4)],
    }
}

/// The maximally entangled qutrit pair measured with
/// [`qutrit_example_settings`]: a point where the three-outcome CHSH
/// expression beats every facet inequality as a communication bound.
pub fn qutrit_example() -> CorrelationVector {
    let state = BipartiteState::maximally_entangled(3).expect("valid state");
    correlations(&state, &qutrit_example_settings()).expect("consistent dimensions")
}

/// Settings of the qubit point with correlators `(E₀₀, E₀₁, E₁₀, E₁₁) =
/// (1, 1, −1, 1)/√2`; these coincide with [`cglmp_settings`] at `d = 2`.
pub fn chsh_optimal_settings() -> Settings {
    let two = |side, p: f64| PhaseMeasurement::new(side, vec![0.0, p]);
    Settings {
        alice: [two(Side::Alice, 0.0), two(Side::Alice, FRAC_PI_2)],
        bob: [two(Side::Bob, FRAC_PI_4), two(Side::Bob, -FRAC_PI_4)],
    }
}

/// Maximally entangled qubits reaching `2√2` on the CHSH expression.
pub fn chsh_optimal() -> CorrelationVector {
    let state = BipartiteState::maximally_entangled(2).expect("valid state");
    correlations(&state, &chsh_optimal_settings()).expect("consistent dimensions")
}

/// Bell value `b · p(c)` as the quadratic form `cᵀ Q c` in the Schmidt
/// coefficients, for fixed measurement settings.
#[derive(Clone, Debug)]
pub struct SchmidtObjective {
    d: usize,
    q: Vec<f64>,
}

impl SchmidtObjective {
    pub fn new(inequality: &BellInequality, settings: &Settings) -> Result<Self> {
        let s = inequality.scenario();
        if s.outcomes_a() != s.outcomes_b() {
            return Err(Error::Quantum("Schmidt objective needs equal outcome counts".into()));
        }
        let d = s.outcomes_a();
        settings.check(d)?;
        let terms = settings.amplitude_terms(d);
        let mut q = vec![0.0; d * d];
        for (i, &w) in inequality.coeffs().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let t = &terms[i * d..(i + 1) * d];
            for j in 0..d {
                for k in 0..d {
                    q[j * d + k] += w * (t[j] * t[k].conj()).re;
                }
            }
        }
        Ok(Self { d, q })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Symmetric matrix `Q`, row-major.
    pub fn matrix(&self) -> &[f64] {
        &self.q
    }

    pub fn value(&self, c: &[f64]) -> f64 {
        let d = self.d;
        let mut v = 0.0;
        for j in 0..d {
            let row = &self.q[j * d..(j + 1) * d];
            v += c[j] * row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
        }
        v
    }

    fn value_squared(&self, s: &[f64]) -> f64 {
        let c: Vec<f64> = s.iter().map(|v| v.max(0.0).sqrt()).collect();
        self.value(&c)
    }
}

/// Golden-section search for a maximum of `g` on `[lo, hi]`, also checking
/// the endpoints.
fn golden_max(mut g: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    let width = 1e-14 * (hi - lo).max(1e-300);
    while b - a > width {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1);
        }
    }
    let mid = 0.5 * (a + b);
    [(mid, g(mid)), (lo, g(lo)), (hi, g(hi))]
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
}

/// Outcome of one coordinate-ascent run on the simplex of squared
/// coefficients.
#[derive(Clone, Debug)]
pub struct AscentRun {
    pub coefficients: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Pairwise coordinate ascent: each step moves weight between two squared
/// coefficients `s_j, s_k` (keeping `s_j + s_k`) to the golden-section
/// maximizer, accepting only strict improvements. Stops when a full sweep
/// changes no coefficient by more than `1e-10`.
pub fn coordinate_ascent(objective: &SchmidtObjective, start: &[f64]) -> AscentRun {
    let d = objective.dim();
    let total: f64 = start.iter().map(|c| c * c).sum();
    let mut s: Vec<f64> = start.iter().map(|c| c * c / total).collect();
    let mut current = objective.value_squared(&s);
    for sweep in 1..=MAX_SWEEPS {
        let mut max_change = 0.0_f64;
        for j in 0..d {
            for k in j + 1..d {
                let t = s[j] + s[k];
                if t <= 0.0 {
                    continue;
                }
                let mut trial = s.clone();
                let (u, val) = golden_max(
                    |u| {
                        trial[j] = u;
                        trial[k] = t - u;
                        objective.value_squared(&trial)
                    },
                    0.0,
                    t,
                );
                if val > current + 1e-14 * current.abs().max(1.0) {
                    let change = (u.sqrt() - s[j].sqrt()).abs().max(((t - u).sqrt() - s[k].sqrt()).abs());
                    max_change = max_change.max(change);
                    s[j] = u;
                    s[k] = t - u;
                    current = val;
                }
            }
        }
        if max_change < COEFF_TOL {
            return AscentRun { coefficients: s.iter().map(|v| v.sqrt()).collect(), value: current, sweeps: sweep, converged: true };
        }
    }
    AscentRun { coefficients: s.iter().map(|v| v.sqrt()).collect(), value: current, sweeps: MAX_SWEEPS, converged: false }
}

/// Maximizes `objective` over normalized nonnegative Schmidt vectors using
/// the uniform start plus five seeded random starts.
pub fn optimize_schmidt(objective: &SchmidtObjective, seed: u64) -> Result<(BipartiteState, f64)> {
    let d = objective.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![vec![1.0; d]];
    for _ in 0..RANDOM_STARTS {
        starts.push((0..d).map(|_| rng.gen_range(0.05..1.0)).collect());
    }
    let runs: Vec<AscentRun> = starts.par_iter().map(|st| coordinate_ascent(objective, st)).collect();
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .fold(None::<&AscentRun>, |acc, r| match acc {
            Some(b) if b.value >= r.value => Some(b),
            _ => Some(r),
        });
    match best {
        Some(r) => Ok((BipartiteState::normalized(&r.coefficients)?, r.value)),
        None => {
            let r = runs
                .iter()
                .max_by(|a, b| a.value.total_cmp(&b.value))
                .expect("at least one start");
            Err(Error::NoConvergence { sweeps: r.sweeps, value: r.value, best: r.coefficients.clone() })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entanglement {
    Maximal,
    Optimized,
}

/// Correlations maximizing the CGLMP expression at the standard settings,
/// either on the maximally entangled state or on the best Schmidt vector.
pub fn cglmp_optimal(d: usize, entanglement: Entanglement) -> Result<(CorrelationVector, BipartiteState)> {
    if !(2..=MAX_CGLMP_DIM).contains(&d) {
        return Err(Error::Quantum(format!("CGLMP generator supports 2 <= d <= {MAX_CGLMP_DIM}, got {d}")));
    }
    let settings = cglmp_settings(d);
    let state = match entanglement {
        Entanglement::Maximal => BipartiteState::maximally_entangled(d)?,
        Entanglement::Optimized => {
            let ineq = BellInequality::cglmp(d)?;
            let obj = SchmidtObjective::new(&ineq, &settings)?;
            optimize_schmidt(&obj, 0)?.0
        }
    };
    let p = correlations(&state, &settings)?;
    Ok((p, state))
}
