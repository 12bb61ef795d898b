//! Efficiency, max-min fair shares and the fairness index.

use crate::error::{Error, Result};

/// Per-connection end-of-run figures, all in Mbps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConnStats {
    /// Goodput: highest in-order byte delivered to the client over the run time.
    pub throughput: f64,
    /// Data the server scheduled over the run time.
    pub scheduled: f64,
    /// Max-min fair share.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkResult {
    pub efficiency: f64,
    pub fairness: f64,
    pub capacity_mbps: f64,
    pub total_throughput_mbps: f64,
    pub connections: usize,
    pub per_connection: Vec<ConnStats>,
}

impl NetworkResult {
    pub fn from_rates(throughput: &[f64], scheduled: &[f64], capacity_mbps: f64) -> Result<Self> {
        if throughput.len() != scheduled.len() {
            return Err(Error::Metric(
                "throughput and scheduled lists differ in length".into(),
            ));
        }
        let expected = compute_maxmin_shares(scheduled, capacity_mbps)?;
        let efficiency = compute_efficiency(throughput, capacity_mbps)?;
        let fairness = compute_fairness(throughput, &expected)?;
        let per_connection = throughput
            .iter()
            .zip(scheduled)
            .zip(&expected)
            .map(|((&x, &s), &e)| ConnStats {
                throughput: x,
                scheduled: s,
                expected: e,
            })
            .collect();
        Ok(Self {
            efficiency,
            fairness,
            capacity_mbps,
            total_throughput_mbps: throughput.iter().sum(),
            connections: throughput.len(),
            per_connection,
        })
    }
}

/// `E = Σx_i / C`.
pub fn compute_efficiency(throughput: &[f64], capacity: f64) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(Error::Metric(format!(
            "capacity must be positive (got {capacity})"
        )));
    }
    Ok(throughput.iter().sum::<f64>() / capacity)
}

/// Progressive filling: connections asking for less than the current equal
/// share get their demand, and the remainder is re-split among the rest
/// until everyone left wants at least the equal share.
pub fn compute_maxmin_shares(scheduled: &[f64], capacity: f64) -> Result<Vec<f64>> {
    if !(capacity > 0.0) {
        return Err(Error::Metric(format!(
            "capacity must be positive (got {capacity})"
        )));
    }
    if let Some(s) = scheduled.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::Metric(format!(
            "scheduled rates must be non-negative (got {s})"
        )));
    }
    let mut shares = vec![0.0; scheduled.len()];
    let mut open: Vec<usize> = (0..scheduled.len()).collect();
    let mut remaining = capacity;
    while !open.is_empty() {
        let share = remaining / open.len() as f64;
        let (below, above): (Vec<usize>, Vec<usize>) =
            open.iter().partition(|&&i| scheduled[i] < share);
        if below.is_empty() {
            for i in above {
                shares[i] = share;
            }
            break;
        }
        for &i in &below {
            shares[i] = scheduled[i];
            remaining -= scheduled[i];
        }
        open = above;
    }
    Ok(shares)
}

/// Jain's index over `x_i / e_i`. Connections with `e_i = 0` and no
/// throughput are left out; `e_i = 0` with positive throughput is an error.
pub fn compute_fairness(throughput: &[f64], expected: &[f64]) -> Result<f64> {
    if throughput.len() != expected.len() {
        return Err(Error::Metric(
            "throughput and expected lists differ in length".into(),
        ));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for (i, (&x, &e)) in throughput.iter().zip(expected).enumerate() {
        if e > 0.0 {
            let r = x / e;
            sum += r;
            sum_sq += r * r;
            n += 1;
        } else if x > 0.0 {
            return Err(Error::Metric(format!(
                "connection {i} has throughput {x} but zero expected share"
            )));
        }
    }
    if n == 0 {
        return Err(Error::Metric(
            "no connection has a positive expected share".into(),
        ));
    }
    if sum_sq == 0.0 {
        // Every ratio is zero, hence all equal.
        return Ok(1.0);
    }
    Ok(sum * sum / (n as f64 * sum_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn efficiency_examples() {
        assert!(close(compute_efficiency(&[37.80], 37.80).unwrap(), 1.0));
        assert_eq!(compute_efficiency(&[0.0, 0.0], 37.80).unwrap(), 0.0);
        let e = compute_efficiency(&[16.047], 37.80).unwrap();
        assert!((e - 0.4245).abs() < 5e-5, "{e}");
        assert!(compute_efficiency(&[1.0], 0.0).is_err());
    }

    #[test]
    fn maxmin_examples() {
        assert_eq!(
            compute_maxmin_shares(&[3.0, 20.0], 10.0).unwrap(),
            vec![3.0, 7.0]
        );
        assert_eq!(
            compute_maxmin_shares(&[2.0, 4.0, 20.0], 12.0).unwrap(),
            vec![2.0, 4.0, 6.0]
        );
        let e = compute_maxmin_shares(&[50.0; 4], 10.0).unwrap();
        assert!(e.iter().all(|&v| close(v, 2.5)));
        assert_eq!(
            compute_maxmin_shares(&[0.0, 5.0], 10.0).unwrap(),
            vec![0.0, 5.0]
        );
    }

    #[test]
    fn fairness_examples() {
        assert!(close(
            compute_fairness(&[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0]).unwrap(),
            1.0
        ));
        assert!(close(
            compute_fairness(&[1.0, 0.0], &[1.0, 1.0]).unwrap(),
            0.5
        ));
        assert!(close(
            compute_fairness(&[1.0, 1.0, 1.0, 0.0], &[1.0; 4]).unwrap(),
            0.75
        ));
    }

    #[test]
    fn fairness_zero_share_rules() {
        assert!(compute_fairness(&[1.0, 1.0], &[1.0, 0.0]).is_err());
        // Idle connection is excluded from N.
        assert!(close(
            compute_fairness(&[1.0, 0.0], &[1.0, 0.0]).unwrap(),
            1.0
        ));
    }

    /// Brute-force progressive filling on integers: raise every unfrozen
    /// connection by one step of `1/den` until its demand or capacity is hit.
    fn progressive_filling_oracle(demands: &[u32], capacity: u32) -> Vec<f64> {
        // Work in units of 1/den where den = n! covers every share denominator.
        let n = demands.len() as u64;
        let den: u64 = (1..=n.max(1)).product();
        let cap = capacity as u64 * den;
        let want: Vec<u64> = demands.iter().map(|&d| d as u64 * den).collect();
        let mut alloc = vec![0u64; demands.len()];
        let mut used = 0u64;
        loop {
            let growing: Vec<usize> = (0..alloc.len()).filter(|&i| alloc[i] < want[i]).collect();
            if growing.is_empty() || used + growing.len() as u64 > cap {
                break;
            }
            for i in growing {
                alloc[i] += 1;
                used += 1;
            }
        }
        alloc.iter().map(|&a| a as f64 / den as f64).collect()
    }

    #[test]
    fn maxmin_matches_oracle_exhaustively_small() {
        for n in 1..=3usize {
            let mut demands = vec![0u32; n];
            loop {
                for cap in 1..=12u32 {
                    let got = compute_maxmin_shares(
                        &demands.iter().map(|&d| d as f64).collect::<Vec<_>>(),
                        cap as f64,
                    )
                    .unwrap();
                    let want = progressive_filling_oracle(&demands, cap);
                    for (g, w) in got.iter().zip(&want) {
                        assert!(
                            (g - w).abs() < 1e-9,
                            "{demands:?} C={cap}: {got:?} vs {want:?}"
                        );
                    }
                }
                // odometer over 0..=10
                let mut k = 0;
                while k < n && demands[k] == 10 {
                    demands[k] = 0;
                    k += 1;
                }
                if k == n {
                    break;
                }
                demands[k] += 1;
            }
        }
    }

    proptest! {
        #[test]
        fn maxmin_matches_oracle(demands in proptest::collection::vec(0u32..=10, 1..=6), cap in 1u32..=40) {
            let s: Vec<f64> = demands.iter().map(|&d| d as f64).collect();
            let got = compute_maxmin_shares(&s, cap as f64).unwrap();
            let want = progressive_filling_oracle(&demands, cap);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-9);
            }
            let total: f64 = got.iter().sum();
            prop_assert!(total <= cap as f64 + 1e-9);
            if s.iter().sum::<f64>() >= cap as f64 {
                prop_assert!((total - cap as f64).abs() < 1e-9);
            }
            for (g, d) in got.iter().zip(&s) {
                prop_assert!(*g <= *d + 1e-12);
            }
        }

        #[test]
        fn fairness_scale_invariant(x in proptest::collection::vec(0.0f64..10.0, 1..20), k in 0.01f64..100.0) {
            let e = vec![1.0; x.len()];
            let f1 = compute_fairness(&x, &e).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
            let f2 = compute_fairness(&scaled, &e).unwrap();
            prop_assert!((f1 - f2).abs() < 1e-9);
            prop_assert!(f1 > 0.0 && f1 <= 1.0 + 1e-12);
        }
    }
}
