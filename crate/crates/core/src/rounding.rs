//! Randomized rounding primitives used by the online algorithms.

use rand::seq::index;
use rand::Rng;

use crate::{Error, Instance, Result};

/// Values within this distance of 0 or 1 are treated as integral.
const INTEGRAL_TOL: f64 = 1e-12;

/// Independent Bernoulli draw of every edge with probability `x_e`.
pub fn independent_sample<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> Vec<bool> {
    x.iter().map(|&xe| rng.random::<f64>() < xe).collect()
}

/// At every offline vertex `u` with `E_X(u) ≠ ∅`, keeps `min(C_u, |E_X(u)|)`
/// sampled edges chosen uniformly without replacement (one edge for unit
/// capacity). Stars are processed in index order.
pub fn select_per_star<R: Rng + ?Sized>(sampled: &[bool], instance: &Instance, rng: &mut R) -> Vec<bool> {
    let mut y = vec![false; sampled.len()];
    let mut star = Vec::new();
    for u in 0..instance.num_offline() {
        star.clear();
        star.extend(instance.edges_at_u(u).iter().copied().filter(|&e| sampled[e]));
        if star.is_empty() {
            continue;
        }
        let keep = (instance.capacity(u) as usize).min(star.len());
        for i in index::sample(rng, star.len(), keep) {
            y[star[i]] = true;
        }
    }
    y
}

/// The sampled support `X` and the per-star selection `Y ≤ X` of the
/// contention-resolution algorithm, with `E_X(·)` indexed per vertex.
#[derive(Debug, Clone)]
pub struct SampledSupport {
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub by_u: Vec<Vec<usize>>,
    pub by_v: Vec<Vec<usize>>,
}

impl SampledSupport {
    pub fn draw<R: Rng + ?Sized>(x_star: &[f64], instance: &Instance, rng: &mut R) -> Self {
        let x = independent_sample(x_star, rng);
        let y = select_per_star(&x, instance, rng);
        let by_u = (0..instance.num_offline())
            .map(|u| instance.edges_at_u(u).iter().copied().filter(|&e| x[e]).collect())
            .collect();
        let by_v = (0..instance.num_online())
            .map(|v| instance.edges_at_v(v).iter().copied().filter(|&e| x[e]).collect())
            .collect();
        SampledSupport { x, y, by_u, by_v }
    }

    /// Edge ids in `X` and in `Y`, for debugging dumps.
    pub fn edge_lists(&self) -> (Vec<usize>, Vec<usize>) {
        let pick = |v: &[bool]| v.iter().enumerate().filter(|(_, b)| **b).map(|(e, _)| e).collect();
        (pick(&self.x), pick(&self.y))
    }
}

fn is_fractional(v: f64) -> bool {
    v > INTEGRAL_TOL && v < 1.0 - INTEGRAL_TOL
}

/// Moves mass between two coordinates keeping `a + b` fixed and both
/// marginals unchanged in expectation.
fn pair_round<R: Rng + ?Sized>(a: &mut f64, b: &mut f64, rng: &mut R) {
    let up = (1.0 - *a).min(*b);
    let down = (*a).min(1.0 - *b);
    if rng.random::<f64>() * (up + down) < down {
        *a += up;
        *b -= up;
    } else {
        *a -= down;
        *b += down;
    }
}

fn snap(v: f64) -> f64 {
    if v <= INTEGRAL_TOL {
        0.0
    } else if v >= 1.0 - INTEGRAL_TOL {
        1.0
    } else {
        v
    }
}

/// Dependent rounding performed independently at each offline star.
///
/// Within `δ(u)` the two lowest-index fractional coordinates are paired until
/// at most one remains, which is then rounded on its own. Marginals are
/// preserved, the star degree ends in `{⌊Σx⌋, ⌈Σx⌉}` and inclusions within a
/// star are negatively correlated.
pub fn dependent_round_stars<R: Rng + ?Sized>(x: &[f64], instance: &Instance, rng: &mut R) -> Result<Vec<bool>> {
    if x.len() != instance.num_edges() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} edges",
            x.len(),
            instance.num_edges()
        )));
    }
    let mut out = vec![false; x.len()];
    let mut vals = Vec::new();
    for u in 0..instance.num_offline() {
        let star = instance.edges_at_u(u);
        let total: f64 = star.iter().map(|&e| x[e]).sum();
        if total > instance.capacity(u) as f64 + 1e-9 {
            return Err(Error::InfeasibleSolution(format!(
                "star of offline vertex {u} carries {total} > capacity {}",
                instance.capacity(u)
            )));
        }
        vals.clear();
        vals.extend(star.iter().map(|&e| snap(x[e].clamp(0.0, 1.0))));
        let mut cursor = 0;
        while let Some(i) = (cursor..vals.len()).find(|&i| is_fractional(vals[i])) {
            let Some(j) = (i + 1..vals.len()).find(|&j| is_fractional(vals[j])) else {
                vals[i] = if rng.random::<f64>() < vals[i] { 1.0 } else { 0.0 };
                break;
            };
            let (head, tail) = vals.split_at_mut(j);
            pair_round(&mut head[i], &mut tail[0], rng);
            vals[i] = snap(vals[i]);
            vals[j] = snap(vals[j]);
            cursor = i;
        }
        for (&e, &val) in star.iter().zip(&vals) {
            out[e] = val > 0.5;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_for;

    fn star(k: usize) -> Instance {
        let edges: Vec<_> = (0..k).map(|v| (0, v)).collect();
        Instance::from_lists(&[1], &vec![1.0; k], &edges, k as u32, 1)
    }

    #[test]
    fn certain_edges_are_always_sampled() {
        let mut rng = rng_for(0, 0);
        assert_eq!(independent_sample(&[1.0, 1.0, 1.0], &mut rng), vec![true; 3]);
        assert_eq!(independent_sample(&[0.0, 0.0], &mut rng), vec![false; 2]);
    }

    #[test]
    fn independent_frequency_and_correlation() {
        let mut rng = rng_for(3, 0);
        let n = 100_000;
        let (mut a, mut b, mut ab) = (0u32, 0u32, 0u32);
        for _ in 0..n {
            let s = independent_sample(&[0.3, 0.6], &mut rng);
            a += s[0] as u32;
            b += s[1] as u32;
            ab += (s[0] && s[1]) as u32;
        }
        let (pa, pb, pab) = (a as f64 / n as f64, b as f64 / n as f64, ab as f64 / n as f64);
        let sigma = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((pa - 0.3).abs() <= 3.0 * sigma);
        let cov = pab - pa * pb;
        // Var of the product indicator bounds the covariance estimator noise.
        let sigma_cov = (0.18f64 * 0.82 / n as f64).sqrt();
        assert!(cov.abs() <= 3.0 * sigma_cov, "cov {cov}");
    }

    #[test]
    fn singleton_star_always_selected() {
        let inst = star(3);
        let mut rng = rng_for(1, 0);
        for _ in 0..100 {
            let y = select_per_star(&[false, true, false], &inst, &mut rng);
            assert_eq!(y, vec![false, true, false]);
        }
    }

    #[test]
    fn empty_star_selects_nothing() {
        let inst = star(3);
        let y = select_per_star(&[false; 3], &inst, &mut rng_for(1, 0));
        assert_eq!(y, vec![false; 3]);
    }

    #[test]
    fn uniform_selection_in_star_of_three() {
        let inst = star(3);
        let mut rng = rng_for(11, 0);
        let n = 10_000;
        let mut hits = [0u32; 3];
        for _ in 0..n {
            let y = select_per_star(&[true; 3], &inst, &mut rng);
            assert_eq!(y.iter().filter(|b| **b).count(), 1);
            for e in 0..3 {
                hits[e] += y[e] as u32;
            }
        }
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        for h in hits {
            assert!((h as f64 / n as f64 - 1.0 / 3.0).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn selection_respects_larger_capacity() {
        let inst = star(4).with_uniform_capacity(2);
        let y = select_per_star(&[true, true, true, false], &inst, &mut rng_for(2, 0));
        assert_eq!(y.iter().filter(|b| **b).count(), 2);
        assert!(!y[3]);
    }

    #[test]
    fn half_half_star_rounds_to_exactly_one() {
        let inst = star(2);
        let mut rng = rng_for(5, 0);
        let n = 10_000;
        let mut first = 0;
        for _ in 0..n {
            let m = dependent_round_stars(&[0.5, 0.5], &inst, &mut rng).unwrap();
            assert_eq!(m.iter().filter(|b| **b).count(), 1);
            first += m[0] as u32;
        }
        let sigma = (0.25f64 / n as f64).sqrt();
        assert!((first as f64 / n as f64 - 0.5).abs() <= 3.0 * sigma);
    }

    #[test]
    fn dependent_rounding_is_negatively_correlated() {
        let inst = star(2);
        let mut rng = rng_for(8, 0);
        let n = 100_000;
        let both = (0..n)
            .filter(|_| {
                let m = dependent_round_stars(&[0.3, 0.3], &inst, &mut rng).unwrap();
                m[0] && m[1]
            })
            .count();
        assert!(both as f64 / n as f64 <= 0.09);
    }

    #[test]
    fn dependent_rounding_rejects_overloaded_star() {
        let inst = star(2);
        assert!(matches!(
            dependent_round_stars(&[0.8, 0.8], &inst, &mut rng_for(0, 0)),
            Err(Error::InfeasibleSolution(_))
        ));
    }

    #[test]
    fn rounding_is_deterministic_per_seed() {
        let inst = star(5).with_uniform_capacity(2);
        let x = [0.3, 0.5, 0.2, 0.6, 0.4];
        let a = dependent_round_stars(&x, &inst, &mut rng_for(4, 0)).unwrap();
        let b = dependent_round_stars(&x, &inst, &mut rng_for(4, 0)).unwrap();
        assert_eq!(a, b);
        let s1 = SampledSupport::draw(&x, &inst, &mut rng_for(4, 0));
        let s2 = SampledSupport::draw(&x, &inst, &mut rng_for(4, 0));
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.y, s2.y);
    }
}
