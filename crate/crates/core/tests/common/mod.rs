//! Fixtures shared by the integration test targets.

use std::path::PathBuf;

use proptest::prelude::*;
use ts_core::e2lite::{E2Message, Payload, BARRIER_UE};
use ts_core::sim::{CellKpm, KpmReport, UeKpm};

pub fn frames_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata/frames")
}

pub fn golden() -> Vec<(&'static str, E2Message)> {
    let report = KpmReport {
        node_id: 3,
        window_end_ms: 1200,
        cell: CellKpm {
            cell_id: 3,
            prb_util_pct: 42.5,
            active_ues: 2,
            tb_count: 150,
            share_qpsk: 0.25,
            share_16qam: 0.5,
            share_64qam: 0.25,
        },
        ues: vec![UeKpm { ue_id: 9, pdcp_throughput_bps: 1.5e6, sinr_db_by_cell: vec![(1, -3.0), (3, 12.25)] }],
    };
    vec![
        ("subscription_ack_node7.bin", E2Message::new(7, 0, Payload::SubscriptionAck)),
        (
            "subscription_request_node3.bin",
            E2Message::new(
                3,
                1_700_000_000_000,
                Payload::SubscriptionRequest {
                    report_period_ms: 100,
                    kpm_names: vec!["prb_util_pct".into(), "sinr_db".into()],
                },
            ),
        ),
        ("kpm_indication_node3.bin", E2Message::new(3, 1_700_000_001_200, Payload::KpmIndication(report))),
        (
            "ric_control_node2.bin",
            E2Message::new(2, 1_700_000_000_300, Payload::RicControl { ue_id: 17, target_cell_id: 5 }),
        ),
        (
            "control_ack_node2.bin",
            E2Message::new(2, 1_700_000_000_300, Payload::ControlAck { ue_id: 17, target_cell_id: 5 }),
        ),
        (
            "barrier_node8.bin",
            E2Message::new(8, 1_700_000_000_300, Payload::RicControl { ue_id: BARRIER_UE, target_cell_id: 0 }),
        ),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -50.0..150.0f64]
}

fn kpm_report() -> impl Strategy<Value = KpmReport> {
    let ue = (any::<u32>(), finite(), prop::collection::vec((any::<u32>(), finite()), 0..8))
        .prop_map(|(ue_id, pdcp_throughput_bps, sinr_db_by_cell)| UeKpm { ue_id, pdcp_throughput_bps, sinr_db_by_cell });
    (
        any::<u32>(),
        any::<u64>(),
        (any::<u32>(), finite(), any::<u32>(), any::<u32>(), finite(), finite(), finite()),
        prop::collection::vec(ue, 0..6),
    )
        .prop_map(|(node_id, window_end_ms, (cell_id, prb, act, tb, q, a, b), ues)| KpmReport {
            node_id,
            window_end_ms,
            cell: CellKpm {
                cell_id,
                prb_util_pct: prb,
                active_ues: act,
                tb_count: tb,
                share_qpsk: q,
                share_16qam: a,
                share_64qam: b,
            },
            ues,
        })
}

pub fn message() -> impl Strategy<Value = E2Message> {
    let payload = prop_oneof![
        (any::<u32>(), prop::collection::vec(".{0,12}", 0..5))
            .prop_map(|(report_period_ms, kpm_names)| Payload::SubscriptionRequest { report_period_ms, kpm_names }),
        Just(Payload::SubscriptionAck),
        kpm_report().prop_map(Payload::KpmIndication),
        (any::<u32>(), any::<u32>()).prop_map(|(ue_id, target_cell_id)| Payload::RicControl { ue_id, target_cell_id }),
        (any::<u32>(), any::<u32>()).prop_map(|(ue_id, target_cell_id)| Payload::ControlAck { ue_id, target_cell_id }),
    ];
    (any::<u32>(), any::<u64>(), payload).prop_map(|(node_id, timestamp_ms, mut payload)| {
        // The report's node id travels in the header.
        if let Payload::KpmIndication(r) = &mut payload {
            r.node_id = node_id;
        }
        E2Message::new(node_id, timestamp_ms, payload)
    })
}
