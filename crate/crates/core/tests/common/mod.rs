//! Independent reference computations used as test oracles. Nothing here
//! calls into the optimized paths it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use bellcomm::scenario::{CorrelationVector, Scenario};
use bellcomm::strategies::{classify, CommClass, DeterministicStrategy};

/// Every deterministic strategy, built with nested loops.
pub fn all_strategies(d: usize) -> Vec<DeterministicStrategy> {
    let mut out = Vec::new();
    let n = d.pow(4);
    let table = |mut k: usize| {
        let mut t = [0u16; 4];
        for v in t.iter_mut().rev() {
            *v = (k % d) as u16;
            k /= d;
        }
        t
    };
    for i in 0..n {
        for j in 0..n {
            out.push(DeterministicStrategy::new(table(i), table(j)));
        }
    }
    out
}

/// `b · d` straight from `d_{ab|xy} = δ(a, α(x,y)) δ(b, β(x,y))`.
pub fn strategy_value(b: &[f64], d: usize, st: &DeterministicStrategy) -> f64 {
    let mut v = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..d {
                for bb in 0..d {
                    if st.alpha(x, y) == a && st.beta(x, y) == bb {
                        v += b[((x * 2 + y) * d + a) * d + bb];
                    }
                }
            }
        }
    }
    v
}

/// Brute-force class maxima.
pub fn brute_class_max(b: &[f64], d: usize) -> [f64; 4] {
    let mut best = [f64::NEG_INFINITY; 4];
    for st in all_strategies(d) {
        let c = classify(&st.alpha_table(), &st.beta_table()).index();
        best[c] = best[c].max(strategy_value(b, d, &st));
    }
    best
}

/// CGLMP value from the shifted-agreement probabilities,
/// `P(A_x = B_y + k) = Σ_b p_{(b+k) b | xy}`.
pub fn cglmp_value(p: &CorrelationVector) -> f64 {
    let d = p.scenario().outcomes_a();
    let prob = |x: usize, y: usize, alice_minus_bob: i64| -> f64 {
        (0..d)
            .map(|b| {
                let a = (b as i64 + alice_minus_bob).rem_euclid(d as i64) as usize;
                p.get(x, y, a, b)
            })
            .sum()
    };
    let mut total = 0.0;
    for k in 0..(d / 2) as i64 {
        let w = 1.0 - 2.0 * k as f64 / (d as f64 - 1.0);
        let plus = prob(0, 0, k) + prob(1, 0, -(k + 1)) + prob(1, 1, k) + prob(0, 1, -k);
        let minus = prob(0, 0, -k - 1) + prob(1, 0, k) + prob(1, 1, -k - 1) + prob(0, 1, k + 1);
        total += w * (plus - minus);
    }
    total
}

/// Generalized CHSH from agreement probabilities.
pub fn gchsh_value(p: &CorrelationVector) -> f64 {
    let d = p.scenario().outcomes_a();
    let agree = |x, y| (0..d).map(|k| p.get(x, y, k, k)).sum::<f64>();
    let e = |x, y| 2.0 * agree(x, y) - 1.0;
    e(0, 0) + e(0, 1) - e(1, 0) + e(1, 1)
}

/// Measurement unitary `U_FT · diag(e^{iφ})` (Bob: conjugate transform).
fn unitary(phases: &[f64], bob: bool) -> DMatrix<Complex64> {
    let d = phases.len();
    let s = if bob { -1.0 } else { 1.0 };
    DMatrix::from_fn(d, d, |o, j| {
        Complex64::from_polar(1.0 / (d as f64).sqrt(), s * 2.0 * std::f64::consts::PI * (o * j) as f64 / d as f64)
            * Complex64::from_polar(1.0, phases[j])
    })
}

/// Probabilities from the full two-qudit state vector and a Kronecker
/// product of the local unitaries.
pub fn quantum_probs(schmidt: &[f64], alice: [&[f64]; 2], bob: [&[f64]; 2]) -> CorrelationVector {
    let d = schmidt.len();
    let mut psi = DVector::<Complex64>::zeros(d * d);
    for j in 0..d {
        psi[j * d + j] = Complex64::new(schmidt[j], 0.0);
    }
    let s = Scenario::symmetric(d).unwrap();
    let mut p = vec![0.0; s.len()];
    for x in 0..2 {
        for y in 0..2 {
            let u = unitary(alice[x], false).kronecker(&unitary(bob[y], true));
            let out = u * &psi;
            for a in 0..d {
                for b in 0..d {
                    p[s.index(x, y, a, b)] = out[a * d + b].norm_sqr();
                }
            }
        }
    }
    CorrelationVector::from_entries(s, p).unwrap()
}

pub fn cglmp_phases(d: usize) -> [Vec<f64>; 4] {
    let ramp = |t: f64| (0..d).map(|j| 2.0 * std::f64::consts::PI * j as f64 * t / d as f64).collect();
    [ramp(0.0), ramp(0.5), ramp(0.25), ramp(-0.25)]
}

pub fn cglmp_probs(schmidt: &[f64]) -> CorrelationVector {
    let [a0, a1, b0, b1] = cglmp_phases(schmidt.len());
    quantum_probs(schmidt, [&a0, &a1], [&b0, &b1])
}

/// Largest CGLMP value over real Schmidt vectors: the top eigenpair of the
/// quadratic form, assembled from basis-state evaluations
/// `Q_jk = (V(e_j + e_k) − V(e_j − e_k))/4` (polarization).
pub fn cglmp_top_eigen(d: usize) -> (f64, Vec<f64>) {
    let value = |c: &[f64]| cglmp_value(&cglmp_probs(c));
    let unit = |j: usize| (0..d).map(|i| (i == j) as u8 as f64).collect::<Vec<f64>>();
    let q = DMatrix::from_fn(d, d, |j, k| {
        let (ej, ek) = (unit(j), unit(k));
        let plus: Vec<f64> = ej.iter().zip(&ek).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = ej.iter().zip(&ek).map(|(a, b)| a - b).collect();
        (value(&plus) - value(&minus)) / 4.0
    });
    let eig = SymmetricEigen::new(q);
    let (i, &lambda) = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lambda, v)
}

/// Random local point: a random mixture of local deterministic strategies.
pub fn random_local(d: usize, terms: usize, rng: &mut impl Rng) -> CorrelationVector {
    let s = Scenario::symmetric(d).unwrap();
    let w: Vec<f64> = (0..terms).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let mut p = vec![0.0; s.len()];
    for wi in w {
        let st = DeterministicStrategy::local(
            [rng.gen_range(0..d as u16), rng.gen_range(0..d as u16)],
            [rng.gen_range(0..d as u16), rng.gen_range(0..d as u16)],
        );
        for i in st.entry_indices(&s) {
            p[i] += wi / total;
        }
    }
    CorrelationVector::from_entries(s, p).unwrap()
}

/// Random quantum point: random Schmidt vector and random phases.
pub fn random_quantum(d: usize, rng: &mut impl Rng) -> CorrelationVector {
    let c: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() + 0.05).collect();
    let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c: Vec<f64> = c.iter().map(|v| v / n).collect();
    let ph: Vec<Vec<f64>> = (0..4).map(|_| (0..d).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()).collect();
    quantum_probs(&c, [&ph[0], &ph[1]], [&ph[2], &ph[3]])
}

/// The two-outcome no-signalling box with maximal CHSH value 4.
pub fn pr_box() -> CorrelationVector {
    let s = Scenario::symmetric(2).unwrap();
    let mut p = vec![0.0; s.len()];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                let b = if (x, y) == (1, 0) { 1 - a } else { a };
                p[s.index(x, y, a, b)] = 0.5;
            }
        }
    }
    CorrelationVector::from_entries(s, p).unwrap()
}

pub fn class_counts(d: usize) -> [usize; 4] {
    let mut c = [0; 4];
    for st in all_strategies(d) {
        c[classify(&st.alpha_table(), &st.beta_table()).index()] += 1;
    }
    c
}

pub fn is_local(c: CommClass) -> bool {
    c == CommClass::Local
}
