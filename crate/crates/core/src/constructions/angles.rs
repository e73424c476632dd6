//! Harmonic angle accumulation `A_j = Σ_{i<j} w/(h + i·n)` and the chunk
//! count `K = min{k : A_k ≥ θ}`.

use serde::Serialize;

use crate::scalars::{ls_mul_f64, LogScalar};

/// Terms summed directly before switching to the digamma difference.
const DIRECT_TERMS: u64 = 64;

/// `A_j`, accurate to a few ulps for `h ≤ 2^53`.
pub fn angle_sum(h: f64, n: f64, w: f64, j: u64) -> f64 {
    let d = j.min(DIRECT_TERMS);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 0..d {
        let term = w / (h + i as f64 * n);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    let mut total = sum + comp;
    if j > DIRECT_TERMS {
        total += (w / n) * psi_diff(h / n + DIRECT_TERMS as f64, (j - DIRECT_TERMS) as f64);
    }
    total
}

/// `ψ(a + j) − ψ(a)` for `a ≥ 64`, free of cancellation in the leading term.
fn psi_diff(a: f64, j: f64) -> f64 {
    let b = a + j;
    let p = |x: f64, k: i32| x.powi(-k);
    (j / a).ln_1p() + j / (2.0 * a * b) - (p(b, 2) - p(a, 2)) / 12.0 + (p(b, 4) - p(a, 4)) / 120.0
        - (p(b, 6) - p(a, 6)) / 252.0
        + (p(b, 8) - p(a, 8)) / 240.0
}

/// First `k ≥ 1` with `A_k ≥ θ`.
pub fn harmonic_k(h: f64, n: f64, w: f64, theta: f64) -> u64 {
    let mut hi = 1u64;
    while angle_sum(h, n, w, hi) < theta {
        hi = hi.checked_mul(2).expect("chunk count overflow");
    }
    let mut lo = hi / 2 + 1;
    if hi == 1 {
        return 1;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if angle_sum(h, n, w, mid) >= theta {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Asymptotic chunk count `(h/n)(e^{θn/w} − 1)` and, for exact small `h`,
/// the harmonic count.
#[derive(Clone, Debug, Serialize)]
pub struct KmEstimate {
    pub estimate: LogScalar,
    pub exact: Option<u64>,
    pub relative_deviation: Option<f64>,
}

pub fn km_estimate(h: &LogScalar, n: u64, w: u64, theta: f64) -> KmEstimate {
    let factor = (theta * n as f64 / w as f64).exp_m1() / n as f64;
    let estimate = ls_mul_f64(h, factor).unwrap_or_else(|_| LogScalar::one());
    let rel = match h.to_f64() {
        Some(hf) => (n as f64 / hf).ln_1p(),
        None => 0.0,
    };
    let estimate = estimate.with_extra_error(rel);
    let exact = h
        .to_u64()
        .filter(|hv| (1..=1 << 50).contains(hv))
        .map(|hv| harmonic_k(hv as f64, n as f64, w as f64, theta));
    let relative_deviation = match (exact, estimate.to_f64()) {
        (Some(k), Some(e)) => Some((k as f64 - e) / e),
        _ => None,
    };
    KmEstimate {
        estimate,
        exact,
        relative_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(h: f64, n: f64, w: f64, j: u64) -> f64 {
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        for i in 0..j {
            let y = w / (h + i as f64 * n) - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    }

    fn brute_k(h: f64, n: f64, w: f64, theta: f64) -> u64 {
        let mut s = 0.0;
        let mut k = 0u64;
        while s < theta {
            s += w / (h + k as f64 * n);
            k += 1;
        }
        k
    }

    #[test]
    fn closed_form_matches_partial_sums() {
        for &(h, n) in &[(100.0, 2.0), (1660.0, 3.0), (35140.0, 4.0), (1.0, 1.0), (7.0, 5.0)] {
            for j in [1u64, 10, 64, 65, 100, 1000, 20000] {
                let a = angle_sum(h, n, 2.0, j);
                let b = direct(h, n, 2.0, j);
                assert!((a - b).abs() < 1e-13 * (1.0 + b), "h={h} n={n} j={j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn level_one_count() {
        let k = harmonic_k(100.0, 2.0, 2.0, 0.5);
        assert!((31..=34).contains(&k));
        assert_eq!(k, brute_k(100.0, 2.0, 2.0, 0.5));
        assert_eq!(harmonic_k(100.0, 2.0, 2.0, 0.039), 2);
    }

    #[test]
    fn counts_match_brute_force_at_small_levels() {
        for &(h, n) in &[(1660.0, 3.0), (35140.0, 4.0), (955_200.0, 5.0), (10.0, 2.0)] {
            assert_eq!(harmonic_k(h, n, 2.0, 0.5), brute_k(h, n, 2.0, 0.5));
        }
    }

    #[test]
    fn schedule_strictly_increasing_at_large_heights() {
        let (h, n) = (6_353_421_824_020.0, 9.0);
        let k = harmonic_k(h, n, 2.0, 0.5);
        let mut prev = angle_sum(h, n, 2.0, k - 2000);
        for j in (k - 1999)..=k {
            let a = angle_sum(h, n, 2.0, j);
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn estimate_examples() {
        let e = km_estimate(&LogScalar::from_u64(100), 2, 2, 0.5);
        let v = e.estimate.to_f64().unwrap();
        assert!((v - 32.436_063_535_006_4).abs() < 1e-9);
        let k = e.exact.unwrap();
        assert!((v - k as f64).abs() <= 2.0);
        let small = km_estimate(&LogScalar::from_u64(100), 2, 2, 0.039);
        assert!((small.estimate.to_f64().unwrap() - 1.96).abs() < 0.05);
        assert_eq!(small.exact, Some(2));
    }

    #[test]
    fn estimate_for_tower_heights() {
        let h = LogScalar::from_ln(164.0).unwrap();
        let e = km_estimate(&h, 3, 2, 0.5);
        assert!(e.exact.is_none());
        let want = 164.0 + (0.75f64).exp_m1().ln() - 3f64.ln();
        assert!((e.estimate.r() - want).abs() < 1e-12);
    }
}
