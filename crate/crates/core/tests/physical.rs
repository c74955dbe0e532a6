//! Slot timing, filters, Bob's delay bank and the two routing probes.

mod common;

use std::collections::HashMap;

use common::{chi_square_gof, chi_square_homogeneity, within_sigma};
use permqkd::permutation::all_permutations;
use permqkd::{
    apply_filters, photon_number_attack, route_through_bob, sample_delay_bank, timing_attack,
    validate_timing, AttackInference, DelayBank, Error, Permutation, PortInjection, SeedTree,
    TimingConfig, TimingTrials, TimingVerdict,
};
use proptest::prelude::*;

fn verdict(tau: f64, rate: f64, ports: usize, multiplexed: bool) -> TimingVerdict {
    validate_timing(&TimingConfig {
        tau,
        rate,
        ports,
        multiplexed,
    })
    .unwrap()
    .verdict
}

#[test]
fn worked_timing_evaluations() {
    assert_eq!(verdict(1e-6, 1e6, 8, false), TimingVerdict::Secure);
    assert!(matches!(
        verdict(1e-5, 1e6, 8, false),
        TimingVerdict::Insecure { .. }
    ));
    assert_eq!(verdict(1e-5, 1e6, 8, true), TimingVerdict::Secure);
    assert!(validate_timing(&TimingConfig {
        tau: 0.0,
        rate: 1e6,
        ports: 8,
        multiplexed: false
    })
    .is_err());
}

#[test]
fn filter_and_shutter_examples() {
    let slot = TimingConfig {
        tau: 1e-6,
        rate: 1e6,
        ports: 4,
        multiplexed: false,
    };
    let three = [PortInjection {
        port: 1,
        arrival_time: 0.0,
        photon_count: 3,
    }];
    assert_eq!(apply_filters(&three, true, &slot)[0].photon_count, 1);
    assert_eq!(apply_filters(&three, false, &slot)[0].photon_count, 3);
    let late = [PortInjection {
        port: 0,
        arrival_time: 1.5e-6,
        photon_count: 1,
    }];
    assert!(apply_filters(&late, true, &slot).is_empty());
}

#[test]
fn routing_examples() {
    let one = [PortInjection {
        port: 0,
        arrival_time: 0.0,
        photon_count: 1,
    }];
    let e = route_through_bob(&Permutation::identity(2), None, &one)[0];
    assert_eq!((e.output_port, e.exit_time, e.photon_count), (0, 0.0, 1));
    let e = route_through_bob(&Permutation::transposition(2, 0, 1), None, &one)[0];
    assert_eq!((e.output_port, e.exit_time), (1, 0.0));
}

#[test]
fn photon_number_attack_exhaustive() {
    for p in all_permutations(4) {
        assert!(photon_number_attack(&p, false).is(&p));
        assert_eq!(
            photon_number_attack(&p, true),
            AttackInference::Undetermined
        );
    }
    let swap = Permutation::transposition(2, 0, 1);
    assert!(photon_number_attack(&swap, false).is(&swap));
}

#[test]
fn timing_attack_without_bank_always_wins() {
    for m in 1..=4 {
        for p in all_permutations(m) {
            assert!(timing_attack(&p, None, 1e-9).is(&p), "{p:?}");
        }
    }
}

#[test]
fn bank_exit_order_follows_assignment() {
    let unit = 1e-9;
    let delays: Vec<f64> = (0..5).map(|i| (5 + 4 * i) as f64 * unit).collect();
    let stagger = 1e-9;
    let mut rng = SeedTree::new(6).rng();
    let mut bank = DelayBank::new(delays, vec![0, 1, 2, 3]).unwrap();
    for _ in 0..200 {
        bank.reassign(&mut rng);
        let p = Permutation::random(4, &mut rng);
        let injections: Vec<PortInjection> = (0..4)
            .map(|port| PortInjection {
                port,
                arrival_time: port as f64 * stagger * 0.9,
                photon_count: 1,
            })
            .collect();
        let mut events = route_through_bob(&p, Some(&bank), &injections);
        events.sort_by(|a, b| a.exit_time.total_cmp(&b.exit_time));
        let mut by_delay: Vec<usize> = (0..4).collect();
        by_delay.sort_by(|&a, &b| bank.delay_for(a).total_cmp(&bank.delay_for(b)));
        let exit_ports: Vec<usize> = events.iter().map(|e| e.output_port).collect();
        let expected: Vec<usize> = by_delay.iter().map(|&j| p.image(j)).collect();
        assert_eq!(exit_ports, expected);
    }
}

#[test]
fn delay_bank_construction() {
    let mut rng = SeedTree::new(2).rng();
    let g = 3e-9;
    let bank = sample_delay_bank(8, 9, g, &mut rng).unwrap();
    let mut d = bank.delays().to_vec();
    assert_eq!(d.len(), 9);
    d.sort_by(f64::total_cmp);
    assert!(d.windows(2).all(|w| w[1] - w[0] >= g));
    assert!(bank.min_gap() >= g);
    assert!(matches!(
        sample_delay_bank(8, 8, g, &mut rng),
        Err(Error::DelayBankTooSmall {
            delays: 8,
            ports: 8
        })
    ));
    assert!(DelayBank::new(vec![1.0, 1.0, 2.0], vec![0, 1]).is_err());
    assert!(DelayBank::new(vec![1.0, 2.0, 3.0], vec![0, 0]).is_err());
}

#[test]
fn delay_assignments_are_uniform() {
    // m = 2 ports into D = 3 delays: six injective maps.
    let mut bank = DelayBank::new(vec![1.0, 2.0, 3.0], vec![0, 1]).unwrap();
    let mut rng = SeedTree::new(12).rng();
    let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for _ in 0..6000 {
        bank.reassign(&mut rng);
        *counts.entry(bank.assignment().to_vec()).or_default() += 1;
    }
    assert_eq!(counts.len(), 6);
    let mut observed: Vec<u64> = counts.into_values().collect();
    observed.sort_unstable();
    assert!(
        chi_square_gof(&observed, &[1.0 / 6.0; 6]) > 0.001,
        "{observed:?}"
    );
}

fn inferred_histogram(m: usize, results: &[(Permutation, AttackInference)]) -> Vec<u64> {
    let perms: Vec<Permutation> = all_permutations(m).collect();
    let mut counts = vec![0u64; perms.len() + 1];
    for (_, inf) in results {
        let slot = match inf {
            AttackInference::Inferred(q) => perms.iter().position(|p| p == q).unwrap(),
            AttackInference::Undetermined => perms.len(),
        };
        counts[slot] += 1;
    }
    counts
}

#[test]
fn bank_makes_timing_guess_independent_of_permutation() {
    let base = TimingTrials {
        m: 3,
        bank_size: 4,
        gap_ratio: 2.0,
        stagger: 1e-9,
        trials: 10_000,
        seed: 31,
    };
    let p1 = Permutation::identity(3);
    let p2 = Permutation::new(vec![2, 0, 1]).unwrap();
    let h1 = inferred_histogram(3, &base.run(Some(&p1)).unwrap());
    let h2 = inferred_histogram(
        3,
        &TimingTrials { seed: 32, ..base }.run(Some(&p2)).unwrap(),
    );
    let p = chi_square_homogeneity(&h1, &h2);
    assert!(p >= 0.01, "p = {p}, {h1:?} vs {h2:?}");
}

#[test]
fn bank_reduces_timing_attack_to_guessing() {
    let row = TimingTrials {
        m: 4,
        bank_size: 5,
        gap_ratio: 1.5,
        stagger: 1e-9,
        trials: 10_000,
        seed: 8,
    }
    .sweep_row()
    .unwrap();
    let hits = (row.success_rate * row.trials as f64).round() as u64;
    assert!(
        within_sigma(hits, row.trials, 1.0 / 24.0, 3.0),
        "{}",
        row.success_rate
    );
}

proptest! {
    #[test]
    fn shorter_slots_never_lose_security(
        tau in 1e-9f64..1e-3,
        shrink in 0.0f64..1.0,
        rate in 1e3f64..1e10,
        ports in 1usize..32,
        multiplexed in any::<bool>(),
    ) {
        let before = verdict(tau, rate, ports, multiplexed);
        let after = verdict(tau * shrink.max(1e-6), rate, ports, multiplexed);
        if before == TimingVerdict::Secure {
            prop_assert_eq!(after, TimingVerdict::Secure);
        }
    }

    #[test]
    fn filter_leaves_at_most_one_photon(
        injections in proptest::collection::vec((0usize..8, -1e-6f64..2e-6, 0u32..10), 0..20),
    ) {
        let slot = TimingConfig { tau: 1e-6, rate: 1e6, ports: 8, multiplexed: false };
        let injections: Vec<PortInjection> = injections
            .into_iter()
            .map(|(port, arrival_time, photon_count)| PortInjection { port, arrival_time, photon_count })
            .collect();
        let p = Permutation::identity(8);
        let kept = apply_filters(&injections, true, &slot);
        for e in route_through_bob(&p, None, &kept) {
            prop_assert!(e.photon_count <= 1);
        }
        for inj in &kept {
            prop_assert!(inj.arrival_time >= 0.0 && inj.arrival_time < slot.tau);
        }
    }

    #[test]
    fn exit_time_is_arrival_plus_delay(seed in any::<u64>(), t in 0.0f64..1e-6) {
        let mut rng = SeedTree::new(seed).rng();
        let bank = sample_delay_bank(4, 6, 1e-8, &mut rng).unwrap();
        let p = Permutation::random(4, &mut rng);
        let inj: Vec<PortInjection> = (0..4).map(|port| PortInjection { port, arrival_time: t, photon_count: 1 }).collect();
        for (i, e) in route_through_bob(&p, Some(&bank), &inj).iter().enumerate() {
            prop_assert_eq!(e.exit_time, t + bank.delay_for(i));
            prop_assert_eq!(e.output_port, p.image(i));
        }
    }
}
