use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn class(aifsn: u32, cw_min: u32, cw_max: u32, mcot_us: Micros) -> ClassParams {
    ClassParams {
        aifsn,
        cw_min,
        cw_max,
        mcot_us,
    }
}

fn coexistence_contenders() -> Vec<ContenderConfig> {
    vec![
        ContenderConfig::new(Tech::Nru, PriorityClass::Pc1, class(2, 3, 7, 2000)),
        ContenderConfig::new(Tech::Nru, PriorityClass::Pc3, class(3, 15, 63, 4000)),
        ContenderConfig::new(Tech::Wifi, PriorityClass::Pc3, class(3, 15, 63, 4000)),
    ]
}

fn data_outcomes(outcomes: &[TxOutcome]) -> impl Iterator<Item = &TxOutcome> {
    outcomes
        .iter()
        .filter(|o| matches!(o.kind, OutcomeKind::Success | OutcomeKind::Collision))
}

#[test]
fn builds_coexistence_scenario() {
    let sim = Simulator::new(MediumParams::default(), &coexistence_contenders(), false, 1).unwrap();
    assert_eq!(sim.node_count(), 3);
    let names: Vec<_> = sim.node_info().iter().map(|i| i.name.as_str()).collect();
    assert_eq!(names, ["gNB PC1", "gNB PC3", "AP PC3"]);
}

#[test]
fn rejects_empty_and_invalid_configs() {
    let err = Simulator::new(MediumParams::default(), &[], false, 1).err().unwrap();
    assert_eq!(err.field, "contenders");

    let mut bad = coexistence_contenders();
    bad[1].params.cw_max = 60;
    let err = Simulator::new(MediumParams::default(), &bad, false, 1).err().unwrap();
    assert_eq!(err.field, "contenders[1].cw_max");

    let medium = MediumParams {
        cr_slot_count: 40,
        ..MediumParams::default()
    };
    let err = Simulator::new(medium, &coexistence_contenders(), true, 1).err().unwrap();
    assert_eq!(err.field, "cr_slot_count");
}

#[test]
fn same_seed_same_trace() {
    for cr in [false, true] {
        let run = |seed| {
            let mut sim = Simulator::new(MediumParams::default(), &coexistence_contenders(), cr, seed).unwrap();
            let mut out = Vec::new();
            while out.len() < 1000 {
                out.extend(sim.run_for(2500).outcomes);
            }
            out.truncate(1000);
            out
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}

#[test]
fn backoff_mean_and_uniformity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 100_000;
    let mut bins = [0u64; 16];
    let mut sum = 0u64;
    for _ in 0..n {
        let b = draw_backoff(&mut rng, 15);
        bins[b as usize] += 1;
        sum += b as u64;
    }
    let mean = sum as f64 / n as f64;
    assert!((mean - 7.5).abs() < 0.1, "mean {mean}");
    let expected = n as f64 / 16.0;
    let chi2: f64 = bins
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    // chi-square critical value, 15 degrees of freedom, alpha = 0.01
    assert!(chi2 < 30.578, "chi2 {chi2}");
}

#[test]
fn lone_wifi_node_cycles_with_aifs_plus_frame() {
    let medium = MediumParams::default();
    let c = [ContenderConfig::new(Tech::Wifi, PriorityClass::Pc1, class(2, 0, 0, 2000))];
    let mut sim = Simulator::new(medium.clone(), &c, false, 5).unwrap();
    let out = sim.run_for(100_000).outcomes;
    let starts: Vec<_> = data_outcomes(&out).map(|o| o.start_us).collect();
    assert!(starts.len() > 40);
    assert_eq!(starts[0], medium.aifs_us(2));
    for w in starts.windows(2) {
        assert_eq!(w[1] - w[0], medium.aifs_us(2) + 2000);
    }
    assert!(out.iter().all(|o| o.kind == OutcomeKind::Success));
}

#[test]
fn lone_gnb_delay_is_one_nru_slot() {
    // Access at end + 34 us, reservation to the next boundary 500 us after the
    // previous end, so every access delay is exactly one NR-U slot.
    for reference in [DelayReference::TxStart, DelayReference::TxEnd] {
        let medium = MediumParams {
            delay_reference: reference,
            ..MediumParams::default()
        };
        let c = [ContenderConfig::new(Tech::Nru, PriorityClass::Pc1, class(2, 0, 0, 2000))];
        let mut sim = Simulator::new(medium, &c, false, 5).unwrap();
        let out = sim.run_for(1_000_000).outcomes;
        let expected = match reference {
            DelayReference::TxStart => 500,
            DelayReference::TxEnd => 2500,
        };
        let delays: Vec<_> = out.iter().filter_map(|o| o.access_delay_us).collect();
        assert_eq!(delays.len(), 400);
        assert!(delays.iter().all(|&d| d == expected));
        let rs: Vec<_> = out.iter().filter(|o| o.kind == OutcomeKind::Rs).collect();
        assert!(rs.iter().all(|o| o.duration_us() == 500 - 34));
    }
}

#[test]
fn reservation_gap_of_200us() {
    // AIFS of 300 us leaves a 200 us gap to the first boundary.
    let medium = MediumParams {
        sifs_us: 282, // AIFS(2) = 300
        ..MediumParams::default()
    };
    let c = [ContenderConfig::new(Tech::Nru, PriorityClass::Pc1, class(2, 0, 0, 2000))];
    let mut sim = Simulator::new(medium, &c, false, 1).unwrap();
    let out = sim.run_for(2600).outcomes;
    assert_eq!(out[0].kind, OutcomeKind::Rs);
    assert_eq!((out[0].start_us, out[0].end_us), (300, 500));
    assert_eq!(out[1].kind, OutcomeKind::Success);
    assert_eq!((out[1].start_us, out[1].end_us), (500, 2500));
}

#[test]
fn backoff_ending_on_boundary_transmits_at_once() {
    let medium = MediumParams {
        sifs_us: 491, // AIFS(1) = 500
        ..MediumParams::default()
    };
    let c = [ContenderConfig::new(Tech::Nru, PriorityClass::Pc1, class(1, 0, 0, 2000))];
    for cr in [false, true] {
        let mut sim = Simulator::new(medium.clone(), &c, cr, 1).unwrap();
        let out = sim.run_for(10_000).outcomes;
        assert!(out.iter().all(|o| o.kind == OutcomeKind::Success));
        assert_eq!(out[0].start_us, 500);
    }
}

#[test]
fn simultaneous_wifi_starts_collide() {
    let c = [ContenderConfig {
        count: 2,
        ..ContenderConfig::new(Tech::Wifi, PriorityClass::Pc3, class(3, 0, 0, 1000))
    }];
    let mut sim = Simulator::new(MediumParams::default(), &c, false, 3).unwrap();
    let out = sim.run_for(50_000).outcomes;
    assert!(!out.is_empty());
    assert!(out.iter().all(|o| o.kind == OutcomeKind::Collision));
}

#[test]
fn reservation_signal_blocks_wifi() {
    let c = [
        ContenderConfig::new(Tech::Nru, PriorityClass::Pc1, class(2, 3, 7, 2000)),
        ContenderConfig::new(Tech::Wifi, PriorityClass::Pc3, class(3, 15, 63, 4000)),
    ];
    let mut sim = Simulator::new(MediumParams::default(), &c, false, 9).unwrap();
    let out = sim.run_for(2_000_000).outcomes;
    let rs: Vec<_> = out.iter().filter(|o| o.kind == OutcomeKind::Rs).collect();
    let wifi_starts: Vec<_> = data_outcomes(&out).filter(|o| o.node == 1).map(|o| o.start_us).collect();
    assert!(!rs.is_empty() && !wifi_starts.is_empty());
    for r in &rs {
        assert!(
            wifi_starts.iter().all(|&s| s <= r.start_us || s >= r.end_us),
            "Wi-Fi started inside reservation {r:?}"
        );
    }
}

#[test]
fn collision_resolution_separates_tied_gnbs() {
    // Two gNBs with a zero window and equal AIFS finish every countdown together.
    let c = [ContenderConfig {
        count: 2,
        ..ContenderConfig::new(Tech::Nru, PriorityClass::Pc1, class(2, 0, 0, 2000))
    }];
    let mut plain = Simulator::new(MediumParams::default(), &c, false, 4).unwrap();
    let out = plain.run_for(1_000_000).outcomes;
    assert!(data_outcomes(&out).all(|o| o.kind == OutcomeKind::Collision));

    let mut cr = Simulator::new(MediumParams::default(), &c, true, 4).unwrap();
    let out = cr.run_for(1_000_000).outcomes;
    let data: Vec<_> = data_outcomes(&out).collect();
    let successes = data.iter().filter(|o| o.kind == OutcomeKind::Success).count();
    // Every boundary carries one transmitter, except for rare identical draws.
    assert!(successes as f64 > 0.95 * data.len() as f64, "{successes}/{}", data.len());
    let aborts: u64 = cr.nodes().iter().map(|n| n.stats.cr_aborts).sum();
    assert!(aborts as usize >= successes - 1);
    for w in data.windows(2) {
        assert!(w[0].end_us <= w[1].start_us);
    }
}

#[test]
fn single_gnb_never_defers_under_collision_resolution() {
    let c = [ContenderConfig::new(Tech::Nru, PriorityClass::Pc1, class(2, 3, 7, 2000))];
    let mut plain = Simulator::new(MediumParams::default(), &c, false, 8).unwrap();
    let mut cr = Simulator::new(MediumParams::default(), &c, true, 8).unwrap();
    let a = plain.run_for(5_000_000);
    let b = cr.run_for(5_000_000);
    assert_eq!(cr.nodes()[0].stats.cr_aborts, 0);
    let succ = |w: &WindowReport| w.ledger.per_node[0].success_us;
    assert_eq!(succ(&a), succ(&b));
}

#[test]
fn split_windows_compose() {
    for cr in [false, true] {
        let mut one = Simulator::new(MediumParams::default(), &coexistence_contenders(), cr, 21).unwrap();
        let mut two = Simulator::new(MediumParams::default(), &coexistence_contenders(), cr, 21).unwrap();
        for _ in 0..200 {
            let whole = one.run_for(2500);
            let a = two.run_for(1250);
            let b = two.run_for(1250);
            let joined: Vec<_> = a.outcomes.iter().chain(&b.outcomes).copied().collect();
            assert_eq!(whole.outcomes, joined);
            assert_eq!(whole.ledger.idle_us, a.ledger.idle_us + b.ledger.idle_us);
        }
        assert_eq!(one.clock_us(), 500_000);
    }
}

#[test]
fn saturated_channel_stays_busy() {
    let mut sim = Simulator::new(MediumParams::default(), &coexistence_contenders(), false, 2).unwrap();
    let w = sim.run_for(10_000_000);
    let busy = w.ledger.busy_us as f64 / w.duration_us() as f64;
    assert!(busy > 0.9, "busy fraction {busy}");
}

#[test]
fn idle_periods_are_bounded() {
    let contenders = coexistence_contenders();
    let medium = MediumParams::default();
    let max_aifs = contenders.iter().map(|c| medium.aifs_us(c.params.aifsn)).max().unwrap();
    let max_cw = contenders.iter().map(|c| c.params.cw_max).max().unwrap() as Micros;
    let bound = max_aifs + max_cw * medium.obs_slot_us + medium.nru_slot_boundary_us;
    for cr in [false, true] {
        let mut sim = Simulator::new(medium.clone(), &contenders, cr, 6).unwrap();
        let out = sim.run_for(3_000_000).outcomes;
        let mut busy: Vec<_> = out.iter().map(|o| (o.start_us, o.end_us)).collect();
        busy.sort_unstable();
        let mut reach = 0;
        for (s, e) in busy {
            if s > reach {
                assert!(s - reach <= bound, "idle {} > {bound}", s - reach);
            }
            reach = reach.max(e);
        }
    }
}

#[test]
fn new_windows_bound_later_draws() {
    let mut sim = Simulator::new(MediumParams::default(), &coexistence_contenders(), false, 13).unwrap();
    sim.run_for(50_000);
    sim.apply_mac_params(&[
        ClassUpdate {
            tech: Tech::Nru,
            pclass: PriorityClass::Pc1,
            params: class(2, 7, 7, 2000),
        },
        ClassUpdate {
            tech: Tech::Nru,
            pclass: PriorityClass::Pc3,
            params: class(3, 63, 63, 4000),
        },
    ])
    .unwrap();
    // Once each node finished one attempt the new windows are in force.
    sim.run_for(200_000);
    for _ in 0..200 {
        sim.run_for(2500);
        let n = &sim.nodes()[0];
        assert_eq!(n.active.cw_max, 7);
        assert!(n.backoff <= 7 && n.cw_current == 7);
        let n = &sim.nodes()[1];
        assert_eq!(n.active.cw_max, 63);
        assert!(n.backoff <= 63);
    }
}

#[test]
fn reapplying_same_params_changes_nothing() {
    let contenders = coexistence_contenders();
    let mut a = Simulator::new(MediumParams::default(), &contenders, true, 17).unwrap();
    let mut b = Simulator::new(MediumParams::default(), &contenders, true, 17).unwrap();
    for _ in 0..100 {
        let same: Vec<_> = contenders
            .iter()
            .map(|c| ClassUpdate {
                tech: c.tech,
                pclass: c.pclass,
                params: c.params,
            })
            .collect();
        b.apply_mac_params(&same).unwrap();
        assert_eq!(a.run_for(2500).outcomes, b.run_for(2500).outcomes);
    }
}

#[test]
fn short_mcot_is_rejected_without_side_effects() {
    let mut sim = Simulator::new(MediumParams::default(), &coexistence_contenders(), false, 1).unwrap();
    let err = sim
        .apply_mac_params(&[
            ClassUpdate {
                tech: Tech::Nru,
                pclass: PriorityClass::Pc3,
                params: class(3, 15, 63, 3000),
            },
            ClassUpdate {
                tech: Tech::Nru,
                pclass: PriorityClass::Pc1,
                params: class(2, 3, 7, 100),
            },
        ])
        .unwrap_err();
    assert_eq!(err.field, "gNB PC1.mcot_us");
    assert!(sim.nodes().iter().all(|n| n.pending.is_none()));
}

#[test]
fn defer_remaining_tracks_aifs() {
    let sim = Simulator::new(MediumParams::default(), &coexistence_contenders(), false, 1).unwrap();
    assert_eq!(sim.defer_remaining_us(0), Some(34));
    assert_eq!(sim.defer_remaining_us(1), Some(43));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exclusion_alignment_conservation(seed in any::<u64>(), cr in any::<bool>()) {
            let medium = MediumParams::default();
            let mut sim = Simulator::new(medium.clone(), &coexistence_contenders(), cr, seed).unwrap();
            let mut successes = Vec::new();
            let mut data = Vec::new();
            for _ in 0..80 {
                let w = sim.run_for(2500);
                let l = &w.ledger;
                prop_assert_eq!(l.busy_us + l.idle_us, w.duration_us());
                prop_assert_eq!(l.node_airtime_sum() - l.overlap_us + l.idle_us, w.duration_us());
                for o in data_outcomes(&w.outcomes) {
                    let info = &sim.node_info()[o.node];
                    if info.tech == Tech::Nru {
                        prop_assert_eq!(o.start_us % medium.nru_slot_boundary_us, 0);
                    }
                    if o.kind == OutcomeKind::Success {
                        successes.push(*o);
                    }
                    data.push(*o);
                }
            }
            for s in &successes {
                for d in &data {
                    if d != s {
                        prop_assert!(d.end_us <= s.start_us || d.start_us >= s.end_us);
                    }
                }
            }
        }
    }
}
