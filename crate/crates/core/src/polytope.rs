//! Local-polytope geometry: exact facet enumeration by the double
//! description method, facet certificates, and facet violation checks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inequalities::BellInequality;
use crate::scenario::{CorrelationVector, Scenario};
use crate::strategies::DeterministicStrategy;

/// Facet enumeration keeps incidence sets in a `u128`.
pub const MAX_VERTICES: usize = 128;

const SATURATION_EPS: f64 = 1e-9;

/// The local deterministic points of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexSet {
    scenario: Scenario,
    vertices: Vec<Vec<i64>>,
}

impl VertexSet {
    /// All `d_A²·d_B²` local strategies in lexicographic order.
    pub fn local(s: &Scenario) -> Self {
        let (da, db) = (s.outcomes_a() as u16, s.outcomes_b() as u16);
        let mut vertices = Vec::with_capacity(s.block_len() * s.block_len());
        for a0 in 0..da {
            for a1 in 0..da {
                for b0 in 0..db {
                    for b1 in 0..db {
                        let d = DeterministicStrategy::local([a0, a1], [b0, b1]).correlation(s);
                        vertices.push(d.entries().iter().map(|&v| v as i64).collect());
                    }
                }
            }
        }
        Self { scenario: *s, vertices }
    }

    /// Same points in a different order (for order-independence checks).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.vertices.len()];
        if order.len() != self.vertices.len() || order.iter().any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Polytope("not a permutation of the vertex indices".into()));
        }
        Ok(Self { scenario: self.scenario, vertices: order.iter().map(|&i| self.vertices[i].clone()).collect() })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Affine dimension of the hull of `vertices[i]` for the given indices.
    pub fn affine_dim_of(&self, indices: &[usize]) -> usize {
        let Some(&first) = indices.first() else { return 0 };
        let v0 = &self.vertices[first];
        let rows: Vec<Vec<i128>> = indices[1..]
            .iter()
            .map(|&i| self.vertices[i].iter().zip(v0).map(|(a, b)| (a - b) as i128).collect())
            .collect();
        integer_rank(rows)
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn reduce(v: &mut [i128]) {
    let g = v.iter().fold(0, |g, &x| gcd(g, x));
    if g > 1 {
        for x in v.iter_mut() {
            *x /= g;
        }
    }
}

/// Exact rank by integer elimination with gcd-reduced rows.
pub fn integer_rank(mut rows: Vec<Vec<i128>>) -> usize {
    let Some(n) = rows.first().map(Vec::len) else { return 0 };
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[col];
            if f != 0 {
                for (x, &pv) in row.iter_mut().zip(&pivot) {
                    *x = *x * pivot[col] - f * pv;
                }
                reduce(row);
            }
        }
        rank += 1;
    }
    rank
}

/// Affine dimension of the local polytope.
pub fn polytope_dim(s: &Scenario) -> usize {
    let v = VertexSet::local(s);
    v.affine_dim_of(&(0..v.len()).collect::<Vec<_>>())
}

/// A facet `coeffs · p ≤ bound` in canonical integer form.
///
/// The representation is fixed by three rules: coefficients are zero on the
/// coordinates left out of the affine-hull projection (so every facet has
/// exactly one representative), the direction is the one valid on the
/// polytope, and the coefficients together with the bound are coprime.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Facet {
    pub coeffs: Vec<i64>,
    pub bound: i64,
}

impl Facet {
    pub fn to_inequality(&self, s: &Scenario) -> Result<BellInequality> {
        BellInequality::new(*s, self.coeffs.iter().map(|&c| c as f64).collect())
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(&c, v)| c as f64 * v).sum()
    }

    /// Vertices (by index) on which the facet is tight.
    pub fn incidence(&self, v: &VertexSet) -> u128 {
        v.vertices.iter().enumerate().fold(0u128, |acc, (i, x)| {
            let val: i64 = self.coeffs.iter().zip(x).map(|(c, x)| c * x).sum();
            if val == self.bound {
                acc | (1u128 << i)
            } else {
                acc
            }
        })
    }
}

/// Coordinates kept by the projection: greedily, in index order, every
/// coordinate that raises the rank of the vertex differences.
fn hull_coordinates(v: &VertexSet) -> Vec<usize> {
    let n = v.scenario.len();
    let v0 = &v.vertices[0];
    let diffs: Vec<Vec<i128>> = v.vertices[1..].iter().map(|x| x.iter().zip(v0).map(|(a, b)| (a - b) as i128).collect()).collect();
    let mut kept: Vec<usize> = Vec::new();
    let mut rank = 0;
    for i in 0..n {
        kept.push(i);
        let rows = diffs.iter().map(|d| kept.iter().map(|&k| d[k]).collect()).collect();
        let r = integer_rank(rows);
        if r > rank {
            rank = r;
        } else {
            kept.pop();
        }
    }
    kept
}

fn dot(a: &[i128], b: &[i128]) -> Result<i128> {
    a.iter().zip(b).try_fold(0i128, |acc, (x, y)| x.checked_mul(*y).and_then(|m| acc.checked_add(m)))
        .ok_or_else(|| Error::Polytope("integer overflow".into()))
}

#[derive(Clone, Debug)]
struct Ray {
    h: Vec<i128>,
    zeros: u128,
}

/// Extreme rays of `{h : A h ≥ 0}` for a square nonsingular `A`, as the
/// columns of the inverse scaled to primitive integer vectors.
fn initial_rays(a: &[Vec<i128>]) -> Result<Vec<Vec<i128>>> {
    let k = a.len();
    // Gauss-Jordan over the integers on [A | I].
    let mut m: Vec<Vec<i128>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| (i == j) as i128));
            r
        })
        .collect();
    for col in 0..k {
        let p = (col..k).find(|&r| m[r][col] != 0).ok_or_else(|| Error::Polytope("singular initial simplex".into()))?;
        m.swap(col, p);
        let pivot = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && row[col] != 0 {
                let f = row[col];
                for (x, &pv) in row.iter_mut().zip(&pivot) {
                    *x = x
                        .checked_mul(pivot[col])
                        .and_then(|v| v.checked_sub(f.checked_mul(pv)?))
                        .ok_or_else(|| Error::Polytope("integer overflow".into()))?;
                }
                reduce(row);
            }
        }
    }
    // Row i now reads D_i e_i | D_i (A⁻¹)_i; column j of A⁻¹ is the ray
    // tight on every constraint but j.
    let mut rays = Vec::with_capacity(k);
    for j in 0..k {
        // (A⁻¹)_{ij} = m[i][k+j] / m[i][i]; bring to a common denominator.
        let l = (0..k).fold(1i128, |l, i| {
            let d = m[i][i].abs();
            l / gcd(l, d) * d
        });
        let mut h: Vec<i128> = (0..k).map(|i| m[i][k + j] * (l / m[i][i])).collect();
        reduce(&mut h);
        if dot(&a[j], &h)? < 0 {
            h.iter_mut().for_each(|x| *x = -*x);
        }
        rays.push(h);
    }
    Ok(rays)
}

/// All facets of the polytope spanned by `v`, sorted.
pub fn enumerate_facets_of(v: &VertexSet) -> Result<Vec<Facet>> {
    if v.len() > MAX_VERTICES {
        return Err(Error::Polytope(format!(
            "{} vertices exceed the enumeration limit of {MAX_VERTICES} (at most three outcomes per side)",
            v.len()
        )));
    }
    let coords = hull_coordinates(v);
    let k = coords.len() + 1;
    let points: Vec<Vec<i128>> = v
        .vertices
        .iter()
        .map(|x| std::iter::once(1).chain(coords.iter().map(|&c| x[c] as i128)).collect())
        .collect();

    // Initial simplex: first affinely independent points in input order.
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        basis.push(i);
        if integer_rank(basis.iter().map(|&b| points[b].clone()).collect()) < basis.len() {
            basis.pop();
        }
        if basis.len() == k {
            break;
        }
    }
    if basis.len() != k {
        return Err(Error::Polytope("could not find an initial simplex".into()));
    }
    let a: Vec<Vec<i128>> = basis.iter().map(|&b| points[b].clone()).collect();
    let mut rays: Vec<Ray> = Vec::new();
    for h in initial_rays(&a)? {
        let mut zeros = 0u128;
        for &b in &basis {
            if dot(&points[b], &h)? == 0 {
                zeros |= 1 << b;
            }
        }
        rays.push(Ray { h, zeros });
    }

    let mut done: u128 = basis.iter().fold(0, |m, &b| m | (1 << b));
    for i in 0..points.len() {
        if done & (1 << i) != 0 {
            continue;
        }
        let a = &points[i];
        let vals: Vec<i128> = rays.iter().map(|r| dot(a, &r.h)).collect::<Result<_>>()?;
        let pos: Vec<usize> = (0..rays.len()).filter(|&r| vals[r] > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&r| vals[r] < 0).collect();
        let zero_sets: Vec<u128> = rays.iter().map(|r| r.zeros).collect();
        let new: Vec<Ray> = pos
            .par_iter()
            .map(|&p| {
                let mut out = Vec::new();
                for &n in &neg {
                    let inter = zero_sets[p] & zero_sets[n];
                    if (inter.count_ones() as usize) < k - 2 {
                        continue;
                    }
                    let adjacent = zero_sets
                        .iter()
                        .enumerate()
                        .all(|(r, &z)| r == p || r == n || z & inter != inter);
                    if !adjacent {
                        continue;
                    }
                    let (vp, vn) = (vals[p], vals[n]);
                    let mut h = Vec::with_capacity(k);
                    for (x, y) in rays[n].h.iter().zip(&rays[p].h) {
                        let c = vp
                            .checked_mul(*x)
                            .and_then(|u| vn.checked_mul(*y).and_then(|w| u.checked_sub(w)))
                            .ok_or_else(|| Error::Polytope("integer overflow".into()))?;
                        h.push(c);
                    }
                    reduce(&mut h);
                    out.push(Ray { h, zeros: inter | (1 << i) });
                }
                Ok(out)
            })
            .collect::<Result<Vec<Vec<Ray>>>>()?
            .into_iter()
            .flatten()
            .collect();
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + new.len());
        for (r, mut ray) in rays.into_iter().enumerate() {
            if vals[r] > 0 {
                next.push(ray);
            } else if vals[r] == 0 {
                ray.zeros |= 1 << i;
                next.push(ray);
            }
        }
        next.extend(new);
        rays = next;
        done |= 1 << i;
        log::debug!("vertex {i}: {} rays", rays.len());
    }

    let n = v.scenario.len();
    let mut facets: Vec<Facet> = rays
        .into_iter()
        .map(|r| {
            let mut coeffs = vec![0i64; n];
            for (j, &c) in coords.iter().enumerate() {
                coeffs[c] = i64::try_from(-r.h[j + 1]).map_err(|_| Error::Polytope("coefficient overflow".into()))?;
            }
            let bound = i64::try_from(r.h[0]).map_err(|_| Error::Polytope("coefficient overflow".into()))?;
            Ok(Facet { coeffs, bound })
        })
        .collect::<Result<_>>()?;
    facets.sort();
    facets.dedup();
    Ok(facets)
}

/// Facets of the local polytope of `s` (at most three outcomes per side).
pub fn enumerate_facets(s: &Scenario) -> Result<Vec<Facet>> {
    if s.outcomes_a() > 3 || s.outcomes_b() > 3 {
        return Err(Error::Polytope(format!(
            "facet enumeration supports at most three outcomes per side, got {}x{}",
            s.outcomes_a(),
            s.outcomes_b()
        )));
    }
    enumerate_facets_of(&VertexSet::local(s))
}

/// Facets whose tight vertices are exactly those of some positivity
/// constraint `p_i ≥ 0`.
pub fn is_trivial(f: &Facet, v: &VertexSet) -> bool {
    let inc = f.incidence(v);
    (0..v.scenario.len()).any(|i| {
        let pos = v.vertices.iter().enumerate().fold(0u128, |acc, (j, x)| if x[i] == 0 { acc | (1 << j) } else { acc });
        pos == inc
    })
}

/// `(trivial, nontrivial)` facet counts.
pub fn trivial_split(facets: &[Facet], v: &VertexSet) -> (usize, usize) {
    let t = facets.iter().filter(|f| is_trivial(f, v)).count();
    (t, facets.len() - t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Facet,
    NonFacet,
}

#[derive(Clone, Debug)]
pub struct FacetCertificate {
    pub inequality: BellInequality,
    pub bound: f64,
    /// Largest `b · v − bound` over local vertices; positive means `b` is not
    /// a valid inequality for this bound.
    pub max_violation: f64,
    pub saturating: usize,
    pub affine_dim: usize,
    pub polytope_dim: usize,
    pub verdict: Verdict,
}

/// Counts local vertices on which `b` reaches `bound` (its local bound when
/// `None`) and compares the affine dimension they span with the facet
/// dimension `polytope_dim − 1`.
pub fn certify_facet(b: &BellInequality, bound: Option<f64>) -> FacetCertificate {
    let v = VertexSet::local(b.scenario());
    let values: Vec<f64> = v
        .vertices
        .iter()
        .map(|x| x.iter().zip(b.coeffs()).map(|(&x, c)| x as f64 * c).sum())
        .collect();
    let local = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = bound.unwrap_or(local);
    let tight: Vec<usize> = (0..v.len()).filter(|&i| (values[i] - bound).abs() <= SATURATION_EPS).collect();
    let affine_dim = v.affine_dim_of(&tight);
    let dim = v.affine_dim_of(&(0..v.len()).collect::<Vec<_>>());
    let max_violation = local - bound;
    let verdict = if max_violation <= SATURATION_EPS && !tight.is_empty() && affine_dim + 1 == dim {
        Verdict::Facet
    } else {
        Verdict::NonFacet
    };
    FacetCertificate {
        inequality: b.clone(),
        bound,
        max_violation,
        saturating: tight.len(),
        affine_dim,
        polytope_dim: dim,
        verdict,
    }
}

/// Facets with `b · p > bound + 10⁻⁹`, most violated first, as
/// `(index into facets, violation)`.
pub fn violated_facets(p: &CorrelationVector, facets: &[Facet]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = facets
        .iter()
        .enumerate()
        .filter_map(|(i, f)| {
            let v = f.value(p.entries()) - f.bound as f64;
            (v > SATURATION_EPS).then_some((i, v))
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}
