//! Alignment search: exhaustive enumeration for small graphs and seeded
//! hill climbing for everything else.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::problem::PairProblem;

const IMPROVEMENT_EPS: f64 = 1e-12;

/// Globally optimal mapping by exhaustive enumeration over injective
/// assignments of A-vars into B-vars (padded with null slots when A is
/// larger).
pub(super) fn exact_oracle(p: &PairProblem) -> (Vec<usize>, f64) {
    let mut m = vec![usize::MAX; p.na];
    let mut used = vec![false; p.domain];
    let mut best_m = vec![usize::MAX; p.na];
    let mut best = f64::NEG_INFINITY;
    enumerate(p, 0, &mut m, &mut used, &mut best_m, &mut best);
    (best_m, best)
}

fn enumerate(
    p: &PairProblem,
    i: usize,
    m: &mut Vec<usize>,
    used: &mut Vec<bool>,
    best_m: &mut Vec<usize>,
    best: &mut f64,
) {
    if i == p.na {
        let s = p.score_mapping(m);
        if s > *best {
            *best = s;
            best_m.copy_from_slice(m);
        }
        return;
    }
    for d in 0..p.domain {
        if used[d] {
            continue;
        }
        used[d] = true;
        m[i] = d;
        enumerate(p, i + 1, m, used, best_m, best);
        used[d] = false;
    }
    m[i] = usize::MAX;
}

/// Restarted greedy hill climbing. Restart 0 seeds deterministically
/// (index-ordered greedy with first-index tie-breaks, which recovers the
/// identity alignment on renamed copies); later restarts randomize the
/// visit order and tie-breaks from the config seed.
pub(super) fn hill_climb(p: &PairProblem, restarts: u32, seed: u64) -> (Vec<usize>, f64) {
    let mut best_m: Option<Vec<usize>> = None;
    let mut best = f64::NEG_INFINITY;
    for r in 0..restarts.max(1) {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut m = greedy_seed(p, r == 0, &mut rng);
        let mut score = p.score_mapping(&m);
        loop {
            let (gain, next) = best_move(p, &m, score);
            if gain <= IMPROVEMENT_EPS {
                break;
            }
            m = next;
            score += gain;
        }
        if score > best {
            best = score;
            best_m = Some(m);
        }
    }
    (best_m.expect("at least one restart"), best)
}

fn greedy_seed(p: &PairProblem, deterministic: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.na).collect();
    if !deterministic {
        order.shuffle(rng);
    }
    let mut m = vec![usize::MAX; p.na];
    let mut used = vec![false; p.domain];
    for &i in &order {
        let mut best_credit = f64::NEG_INFINITY;
        let mut candidates: Vec<usize> = Vec::new();
        for (j, flag) in used.iter().enumerate().take(p.nb) {
            if *flag {
                continue;
            }
            let c = p.instance_credit(i, j);
            if c > best_credit + IMPROVEMENT_EPS {
                best_credit = c;
                candidates.clear();
                candidates.push(j);
            } else if (c - best_credit).abs() <= IMPROVEMENT_EPS {
                candidates.push(j);
            }
        }
        let choice = if candidates.is_empty() {
            // A is larger than B: fall back to a null slot.
            (p.nb..p.domain).find(|&d| !used[d]).expect("null slot free")
        } else if deterministic {
            candidates[0]
        } else {
            *candidates.choose(rng).expect("non-empty")
        };
        used[choice] = true;
        m[i] = choice;
    }
    m
}

/// Best strictly improving single move: swapping two A-vars' images or
/// reassigning one A-var to an unused slot.
fn best_move(p: &PairProblem, m: &[usize], current: f64) -> (f64, Vec<usize>) {
    let mut best_gain = 0.0;
    let mut best: Option<Vec<usize>> = None;
    let mut scratch = m.to_vec();

    for i in 0..p.na {
        for j in (i + 1)..p.na {
            scratch.swap(i, j);
            let s = p.score_mapping(&scratch);
            if s - current > best_gain + IMPROVEMENT_EPS {
                best_gain = s - current;
                best = Some(scratch.clone());
            }
            scratch.swap(i, j);
        }
    }

    let mut used = vec![false; p.domain];
    for &v in m {
        used[v] = true;
    }
    let unused: Vec<usize> = (0..p.domain).filter(|&d| !used[d]).collect();
    for i in 0..p.na {
        let old = scratch[i];
        for &d in &unused {
            scratch[i] = d;
            let s = p.score_mapping(&scratch);
            if s - current > best_gain + IMPROVEMENT_EPS {
                best_gain = s - current;
                best = Some(scratch.clone());
            }
        }
        scratch[i] = old;
    }

    match best {
        Some(next) => (best_gain, next),
        None => (0.0, m.to_vec()),
    }
}

/// Deterministic jitter helper for callers that derive per-item seeds.
pub(super) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut x = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x
}
