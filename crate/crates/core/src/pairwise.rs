//! Mirror-paired summation.
//!
//! Terms are combined as `t[k] + t[n-1-k]` before accumulating over `k`. If a
//! configuration is symmetric under `x -> -x` and the summand flips sign under
//! the reflection `k -> n-1-k`, the result is the exact negation of its mirror,
//! which keeps symmetric simulations symmetric to the last bit.

#[inline]
pub fn paired_sum<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    let half = n / 2;
    let mut acc = 0.0;
    for k in 0..half {
        acc += term(k) + term(n - 1 - k);
    }
    if n % 2 == 1 {
        acc += term(half);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_every_term_once() {
        for n in 0..9 {
            let s = paired_sum(n, |k| (k + 1) as f64);
            assert_eq!(s, (n * (n + 1) / 2) as f64);
        }
    }

    #[test]
    fn reflected_terms_give_exact_negation() {
        let t: Vec<f64> = (0..17).map(|k| ((k as f64) * 0.37).sin() * 1e3 + 0.1).collect();
        let forward = paired_sum(t.len(), |k| t[k]);
        let mirrored = paired_sum(t.len(), |k| -t[t.len() - 1 - k]);
        assert_eq!(forward, -mirrored);
    }
}
