use crate::error::{OspError, Result};

/// Pareto dominance for minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(OspError::input(format!(
            "objective vectors differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates_unchecked(a, b))
}

#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sort. Each front lists indices in ascending order.
pub fn non_dominated_sort<V: AsRef<[f64]>>(vectors: &[V]) -> Vec<Vec<usize>> {
    let n = vectors.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            let (a, b) = (vectors[p].as_ref(), vectors[q].as_ref());
            if dominates_unchecked(a, b) {
                dominated_by[p].push(q);
                counts[q] += 1;
            } else if dominates_unchecked(b, a) {
                dominated_by[q].push(p);
                counts[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                counts[q] -= 1;
                if counts[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::take(&mut current));
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front`, in the order given.
///
/// Exact duplicates of an earlier member get 0; the distances of the
/// remaining members are computed as if the duplicates were absent.
pub fn crowding_distance<V: AsRef<[f64]>>(vectors: &[V], front: &[usize]) -> Vec<f64> {
    let len = front.len();
    let mut distance = vec![0.0; len];
    let unique: Vec<usize> = (0..len)
        .filter(|&a| {
            let va = vectors[front[a]].as_ref();
            !(0..a).any(|b| vectors[front[b]].as_ref() == va)
        })
        .collect();
    let u = unique.len();
    if u == 0 {
        return distance;
    }
    if u <= 2 {
        for &a in &unique {
            distance[a] = f64::INFINITY;
        }
        return distance;
    }
    let m = vectors[front[0]].as_ref().len();
    let mut order = unique.clone();
    for k in 0..m {
        let value = |pos: usize| vectors[front[pos]].as_ref()[k];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let lo = value(order[0]);
        let hi = value(order[u - 1]);
        distance[order[0]] = f64::INFINITY;
        distance[order[u - 1]] = f64::INFINITY;
        let spread = hi - lo;
        if !(spread > 0.0) {
            continue;
        }
        for w in 1..u - 1 {
            let gap = value(order[w + 1]) - value(order[w - 1]);
            distance[order[w]] += gap / spread;
        }
    }
    distance
}
