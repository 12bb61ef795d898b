//! Published numbers the model must reproduce through the public API.

use ubrsim::atm::{cells_for_segment, max_tcp_throughput, wire_bytes};
use ubrsim::kernel::SimTime;
use ubrsim::metrics::{compute_efficiency, compute_fairness, compute_maxmin_shares};
use ubrsim::network::{BufferLevel, DelayClass, Scenario};
use ubrsim::traffic::{generate_offered_load, TrafficParams, WwwServer, KB};

#[test]
fn segment_overheads() {
    assert_eq!(cells_for_segment(1024), 23);
    assert_eq!(wire_bytes(1024), 1219);
    assert_eq!(cells_for_segment(9180), 193);
    assert_eq!(cells_for_segment(0), 2);
    assert!((max_tcp_throughput(1024, 45e6) / 1e6 - 37.80).abs() <= 0.01);
    assert!((max_tcp_throughput(9180, 45e6) / 1e6 - 40.39).abs() <= 0.01);
}

#[test]
fn initial_ssthresh_per_class() {
    let got: Vec<u64> = DelayClass::ALL
        .iter()
        .map(|&d| Scenario::full(d).initial_ssthresh())
        .collect();
    assert_eq!(got, vec![56_250, 1_125_000, 3_093_750]);
}

#[test]
fn receive_windows_cover_the_pipe() {
    for dc in DelayClass::ALL {
        let sc = Scenario::full(dc);
        assert!(
            sc.tcp_params().rcv_wnd_max() >= sc.initial_ssthresh(),
            "{dc}"
        );
    }
    assert_eq!(
        Scenario::full(DelayClass::Meo).tcp_params().rcv_wnd_max(),
        2_097_120
    );
    assert_eq!(
        Scenario::full(DelayClass::Geo).tcp_params().rcv_wnd_max(),
        4_194_240
    );
}

#[test]
fn buffer_presets() {
    let sc = Scenario::full(DelayClass::Geo);
    let sizes: Vec<u32> = BufferLevel::ALL.iter().map(|&b| sc.buffer(b)).collect();
    assert_eq!(sizes, vec![29_190, 58_380, 116_760]);
    assert_eq!(Scenario::full(DelayClass::Wan).rtt_bandwidth_cells(), 1062);
}

#[test]
fn request_classes_follow_the_mix() {
    let params = TrafficParams::default();
    let n = 200_000;
    let mut counts = [0u32; 5];
    let mut bytes = 0u64;
    let mut server = WwwServer::new(11, 0);
    for _ in 0..n {
        let r = server.respond(&params).unwrap();
        counts[r.class_id as usize] += 1;
        bytes += r.response_bytes;
    }
    for (c, want) in counts.iter().zip([20.0, 28.0, 40.0, 11.2, 0.8]) {
        let pct = 100.0 * *c as f64 / n as f64;
        assert!((pct - want).abs() <= 0.5, "{pct} vs {want}");
    }
    let mean_kb = bytes as f64 / n as f64 / KB as f64;
    assert!((mean_kb - 117.5).abs() <= 2.0, "{mean_kb}");
}

#[test]
fn hundred_clients_offer_about_48_mbps() {
    let load =
        generate_offered_load(&TrafficParams::default(), 100, SimTime::from_secs(100), 3).unwrap();
    assert!((load.mbps() - 48.0).abs() <= 4.8, "{}", load.mbps());
}

#[test]
fn metric_examples() {
    assert!((compute_efficiency(&[10.0, 10.0], 40.0).unwrap() - 0.5).abs() < 1e-12);
    let shares = compute_maxmin_shares(&[2.0, 30.0, 30.0], 37.8).unwrap();
    assert!((shares[1] - 17.9).abs() < 1e-9);
    assert!((compute_fairness(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!((compute_fairness(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-12);
}

/// Exact max-min allocation by trying every set of capped connections.
/// Returns shares as (numerator, denominator) pairs.
fn maxmin_by_subsets(demands: &[i64], capacity: i64) -> Vec<(i64, i64)> {
    let n = demands.len();
    if demands.iter().sum::<i64>() <= capacity {
        return demands.iter().map(|&d| (d, 1)).collect();
    }
    for mask in 1u32..(1 << n) {
        let capped: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        let k = capped.iter().filter(|&&c| c).count() as i64;
        let rest: i64 = (0..n).filter(|&i| !capped[i]).map(|i| demands[i]).sum();
        let level = capacity - rest; // share = level / k
        if level < 0 {
            continue;
        }
        let ok = (0..n).all(|i| {
            if capped[i] {
                demands[i] * k >= level
            } else {
                demands[i] * k <= level
            }
        });
        if ok {
            return (0..n)
                .map(|i| {
                    if capped[i] {
                        (level, k)
                    } else {
                        (demands[i], 1)
                    }
                })
                .collect();
        }
    }
    unreachable!("some cap set is consistent");
}

#[test]
fn maxmin_matches_subset_oracle() {
    // Every non-decreasing demand vector with N ≤ 6 and entries ≤ 10, every
    // capacity up to the total demand, plus a reversed ordering of each.
    fn visit(prefix: &mut Vec<i64>, max_len: usize, f: &mut impl FnMut(&[i64])) {
        if !prefix.is_empty() {
            f(prefix);
        }
        if prefix.len() == max_len {
            return;
        }
        let lo = prefix.last().copied().unwrap_or(0);
        for d in lo..=10 {
            prefix.push(d);
            visit(prefix, max_len, f);
            prefix.pop();
        }
    }
    let mut instances = 0;
    visit(&mut Vec::new(), 6, &mut |demands| {
        let total: i64 = demands.iter().sum();
        for cap in 1..=total.max(1) + 1 {
            let want = maxmin_by_subsets(demands, cap);
            for order in [demands.to_vec(), demands.iter().rev().copied().collect()] {
                let want: Vec<(i64, i64)> = if order == demands {
                    want.clone()
                } else {
                    want.iter().rev().copied().collect()
                };
                let got = compute_maxmin_shares(
                    &order.iter().map(|&d| d as f64).collect::<Vec<_>>(),
                    cap as f64,
                )
                .unwrap();
                for (g, (num, den)) in got.iter().zip(&want) {
                    let w = *num as f64 / *den as f64;
                    assert!(
                        (g - w).abs() < 1e-9,
                        "{order:?} C={cap}: {got:?} vs {want:?}"
                    );
                }
                instances += 1;
            }
        }
    });
    assert!(instances > 100_000);
}
