//! Acceptance gate: end-to-end checks that the simulator reproduces the
//! attack effects it models, at the tolerances the project commits to.
//!
//! Topology shared by the attack scenarios: a legitimate cell at 0 m
//! transmitting 30 dBm, a rogue clone at 200 m transmitting 35 dBm, and
//! the victim UE halfway between at 100 m. The rogue wins reselection by
//! 5 dB at the victim's position.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nrsim_core::batch::run_batch;
use nrsim_core::codec::{
    decode_rar, decode_sib1, encode_rar, encode_sib1, CodecError, Msg3Grant, PlmnId,
    RachConfigCommon, RarPdu, Sib1Message, SiWindowLength,
};
use nrsim_core::sim::event::{EventKind, EventLog};
use nrsim_core::timing::{quantize_ta, ta_to_time, uplink_arrival_offset_us, Numerology, TaState};
use nrsim_core::{run_scenario, Metrics, RunOutput, Scenario};

fn rogue_scenario(name: &str, duration_ms: u64, attack: &str, ue_lines: &str) -> String {
    format!(
        "[scenario]\nname = {name}\nduration_ms = {duration_ms}\nseed = 1\n\n\
         [cell]\nid = cell1\npos_m = 0\ntx_power_dbm = 30\ntac = 0x1000\n\n\
         [cell]\nid = rogue1\nclone_of = cell1\npos_m = 200\ntx_power_dbm = 35\n\n\
         [attack]\n{attack}\n\n\
         [ue]\nid = ue0\npos_m = 100\n{ue_lines}"
    )
}

fn benign_scenario(name: &str, duration_ms: u64, ue_lines: &str) -> String {
    format!(
        "[scenario]\nname = {name}\nduration_ms = {duration_ms}\nseed = 1\n\n\
         [cell]\nid = cell1\npos_m = 0\ntx_power_dbm = 30\ntac = 0x1000\n\n\
         [ue]\nid = ue0\npos_m = 100\n{ue_lines}"
    )
}

fn run_text(text: &str) -> RunOutput {
    run_scenario(&Scenario::parse(text).expect("acceptance scenario parses"))
}

fn times(log: &EventLog, kind: EventKind) -> Vec<u64> {
    log.events.iter().filter(|e| e.kind == kind).map(|e| e.time_ms).collect()
}

fn alert_times(log: &EventLog, detector: &str) -> Vec<u64> {
    log.events
        .iter()
        .filter(|e| e.kind == EventKind::DetectorAlert && e.get("detector") == Some(detector))
        .map(|e| e.time_ms)
        .collect()
}

fn unhex(s: &str) -> Vec<u8> {
    assert!(s.len().is_multiple_of(2), "hex string has even length");
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).expect("valid hex"))
        .collect()
}

#[test]
fn criterion_01_ta_tolerance_band() {
    let deltas = [5i32, 10, 20, 30, 40, 50, 60];
    let scenarios: Vec<Scenario> = deltas
        .iter()
        .map(|d| {
            let text = rogue_scenario(
                &format!("ta_{d}"),
                600_000,
                &format!("kind = ta_delta\ndelta_units = {d}"),
                "connect_at_ms = 1000\n",
            );
            Scenario::parse(&text).unwrap()
        })
        .collect();
    let outputs = run_batch(&scenarios);
    for (d, out) in deltas.iter().zip(&outputs) {
        let rlf = out.metrics.rlf_count;
        if *d <= 10 {
            assert_eq!(rlf, 0, "delta {d} must stay inside the decode tolerance");
        } else {
            assert!(rlf >= 1, "delta {d} must break the uplink, got {rlf} RLFs");
        }
    }
    let counts: Vec<u64> = outputs.iter().map(|o| o.metrics.rlf_count).collect();
    println!("PASS criterion 1: rlf counts over deltas {deltas:?} = {counts:?}, band edge at 10/20");
}

#[test]
fn criterion_02_time_to_first_rlf() {
    for d in [30, 60] {
        let out = run_text(&rogue_scenario(
            &format!("first_rlf_{d}"),
            600_000,
            &format!("kind = ta_delta\ndelta_units = {d}"),
            "connect_at_ms = 1000\n",
        ));
        let conn = times(&out.log, EventKind::ConnectionEstablished)[0];
        let rlf = times(&out.log, EventKind::Rlf)[0];
        let elapsed = rlf - conn;
        assert!(
            (30_000..=60_000).contains(&elapsed),
            "delta {d}: first RLF came {elapsed} ms after connection"
        );
        println!("PASS criterion 2: delta {d} first RLF at {elapsed} ms after connect");
    }
}

#[test]
fn criterion_03_persistent_reconnection_loop() {
    let started = Instant::now();
    let out = run_text(&rogue_scenario(
        "loop_1h",
        3_600_000,
        "kind = ta_delta\ndelta_units = 30",
        "connect_at_ms = 1000\n",
    ));
    let wall = started.elapsed();
    assert!(wall.as_secs_f64() < 10.0, "hour-long scenario took {wall:?}");

    let m = &out.metrics;
    assert!(m.connected_uptime_fraction < 0.1, "uptime {}", m.connected_uptime_fraction);
    assert!(m.reestablish_attempts >= 30, "only {} reestablishments", m.reestablish_attempts);

    for ev in out.log.events.iter().filter(|e| e.kind == EventKind::ReestablishReq) {
        assert_eq!(ev.get("cell"), Some("rogue1"), "reestablishment left the rogue cell");
    }
    for ev in out.log.events.iter().filter(|e| e.kind == EventKind::Rlf) {
        let connected_ms: u64 = ev.get("connected_ms").unwrap().parse().unwrap();
        assert!(connected_ms <= 120_000, "stable interval of {connected_ms} ms");
    }
    let rlfs = times(&out.log, EventKind::Rlf);
    for gap in rlfs.windows(2).map(|w| w[1] - w[0]) {
        assert!(gap <= 120_000, "RLF gap of {gap} ms");
    }
    assert!(3_600_000 - rlfs.last().unwrap() <= 120_000, "quiet tail after last RLF");
    println!(
        "PASS criterion 3: uptime {:.4}, {} reestablishments, all on rogue1, no interval > 120 s, wall {:?}",
        m.connected_uptime_fraction, m.reestablish_attempts, wall
    );
}

#[test]
fn criterion_04_valuetag_cadence() {
    let out = run_text(&rogue_scenario(
        "valuetag",
        600_000,
        "kind = value_tag_increment\nperiod_ms = 10000",
        "",
    ));
    let reacq: Vec<&nrsim_core::sim::event::SimEvent> = out
        .log
        .events
        .iter()
        .filter(|e| e.kind == EventKind::SiReacquisition)
        .collect();
    let n = reacq.len() as i64;
    assert!((n - 60).abs() <= 1, "expected 60 +/- 1 reacquisitions, got {n}");

    let mut gaps = Vec::new();
    for w in reacq.windows(2) {
        let gap = w[1].time_ms - w[0].time_ms;
        assert!(
            (10_000 - 160..=10_000 + 160).contains(&gap),
            "inter-acquisition gap {gap} ms is more than one broadcast period off"
        );
        gaps.push(gap);
    }

    // Everything but the tag must be bit-identical across acquisitions.
    let mut normalized: Vec<Vec<u8>> = Vec::new();
    for ev in &reacq {
        let frame = unhex(ev.get("sib1").expect("reacquisition carries the frame"));
        let mut msg = decode_sib1(&frame).expect("logged frame decodes");
        msg.value_tag = 0;
        normalized.push(encode_sib1(&msg).unwrap());
    }
    for other in &normalized[1..] {
        assert_eq!(other, &normalized[0], "non-tag SIB1 content changed between acquisitions");
    }
    let (min, max) = (gaps.iter().min().unwrap(), gaps.iter().max().unwrap());
    println!("PASS criterion 4: {n} reacquisitions, gaps within [{min}, {max}] ms, non-tag bits stable");
}

#[test]
fn criterion_05_duty_cycle_impact() {
    let baseline = run_text(&benign_scenario("duty_base", 600_000, ""));
    let attacked = run_text(&rogue_scenario(
        "duty_attack",
        600_000,
        "kind = value_tag_increment\nperiod_ms = 10000",
        "",
    ));
    let base = baseline.metrics.duty_cycle;
    let hit = attacked.metrics.duty_cycle;
    assert!(base < 0.01, "baseline duty {base}");
    assert!(hit >= 5.0 * base, "attack duty {hit} is under 5x baseline {base}");
    println!("PASS criterion 5: baseline duty {base:.6}, attacked {hit:.6} ({:.1}x)", hit / base);
}

#[test]
fn criterion_06_policy_dependent_negative_results() {
    let tac_attack = "kind = tac_cycle\nperiod_ms = 30000\ntac_list = 0x1000,0x2000,0x3000";
    let deferred = run_text(&rogue_scenario("tac_deferred", 600_000, tac_attack, ""));
    assert_eq!(deferred.metrics.registration_requests, 0);
    let mismatches = times(&deferred.log, EventKind::TacMismatchObserved).len();
    assert!(mismatches > 0, "TAC changes went unnoticed");

    let eager = run_text(&rogue_scenario(
        "tac_eager",
        600_000,
        tac_attack,
        "registration_policy = eager\n",
    ));
    assert!(eager.metrics.registration_requests >= 1);

    let toggle_attack = "kind = si_window_toggle\nwindow_seq = ms5,ms10,ms20";
    let refresh = run_text(&rogue_scenario("toggle_refresh", 600_000, toggle_attack, ""));
    assert_eq!(refresh.metrics.missed_si_windows, 0);

    let stale = run_text(&rogue_scenario(
        "toggle_stale",
        600_000,
        toggle_attack,
        "si_cache_policy = stale_cache\n",
    ));
    assert!(stale.metrics.missed_si_windows >= 1);

    println!(
        "PASS criterion 6: deferred regs 0 with {mismatches} mismatches, eager regs {}, \
         refresh misses 0, stale misses {}",
        eager.metrics.registration_requests, stale.metrics.missed_si_windows
    );
}

fn random_sib1(rng: &mut ChaCha8Rng) -> Sib1Message {
    let windows =
        [SiWindowLength::Ms5, SiWindowLength::Ms10, SiWindowLength::Ms15, SiWindowLength::Ms20];
    let plmn_list = (0..rng.gen_range(1..=4))
        .map(|_| {
            let mnc_length = if rng.gen_bool(0.5) { 2 } else { 3 };
            let mnc = if mnc_length == 2 { rng.gen_range(0..100) } else { rng.gen_range(0..1000) };
            PlmnId::new(rng.gen_range(0..1000), mnc, mnc_length).unwrap()
        })
        .collect();
    Sib1Message {
        value_tag: rng.gen_range(0..32),
        tracking_area_code: rng.gen_range(0..1 << 24),
        si_window_length: windows[rng.gen_range(0..4)],
        plmn_list,
        cell_identity: rng.gen_range(0..1u64 << 36),
        cell_barred: rng.gen_bool(0.5),
        rach_config: RachConfigCommon {
            preamble_format_id: rng.gen_range(0..16),
            ra_response_window_ms: rng.gen(),
            power_ramping_step_db: rng.gen_range(0..16),
            preamble_target_power_dbm: rng.gen(),
            prach_periodicity_ms: rng.gen(),
        },
        sib1_periodicity_ms: rng.gen_range(1..=u16::MAX) as u64,
    }
}

fn random_rar(rng: &mut ChaCha8Rng) -> RarPdu {
    RarPdu {
        rapid: rng.gen_range(0..64),
        ta_command: rng.gen_range(0..=3846),
        msg3_grant: Msg3Grant {
            freq_assign: rng.gen_range(0..1 << 14),
            time_assign: rng.gen_range(0..16),
            mcs: rng.gen_range(0..16),
        },
        tc_rnti: rng.gen(),
    }
}

#[test]
fn criterion_07_codec_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DEC);
    for _ in 0..10_000 {
        let sib1 = random_sib1(&mut rng);
        let bytes = encode_sib1(&sib1).unwrap();
        assert_eq!(decode_sib1(&bytes).unwrap(), sib1);
        let rar = random_rar(&mut rng);
        let bytes = encode_rar(&rar).unwrap();
        assert_eq!(decode_rar(&bytes).unwrap(), rar);
    }

    // TA range enforcement, both directions.
    for bad in [3847u16, 4000, 4095] {
        let mut rar = random_rar(&mut rng);
        rar.ta_command = bad;
        assert!(matches!(
            encode_rar(&rar),
            Err(CodecError::InvariantViolation { field: "ta_command", .. })
        ));
    }
    // The 12-bit TA field sits at payload bits 6..18; force it to 4095.
    let mut frame = encode_rar(&random_rar(&mut rng)).unwrap();
    frame[3] |= 0b0000_0011;
    frame[4] = 0xFF;
    frame[5] |= 0b1100_0000;
    assert!(matches!(
        decode_rar(&frame),
        Err(CodecError::InvariantViolation { field: "ta_command", .. })
    ));

    // Bit-flip fuzzing: mutated frames may fail to decode but never panic.
    let sib1_frame = encode_sib1(&random_sib1(&mut rng)).unwrap();
    let rar_frame = encode_rar(&random_rar(&mut rng)).unwrap();
    let mut mutated = 0usize;
    for base in [&sib1_frame, &rar_frame] {
        for _ in 0..5_000 {
            let mut bytes = (*base).clone();
            for _ in 0..rng.gen_range(1..=3) {
                let bit = rng.gen_range(0..bytes.len() * 8);
                bytes[bit / 8] ^= 1 << (bit % 8);
            }
            if rng.gen_bool(0.2) {
                bytes.truncate(rng.gen_range(0..=bytes.len()));
            }
            let _ = decode_sib1(&bytes);
            let _ = decode_rar(&bytes);
            mutated += 1;
        }
    }
    assert!(mutated >= 10_000);
    println!("PASS criterion 7: 10000 SIB1 + 10000 RAR roundtrips bit-exact, TA range enforced, {mutated} fuzz inputs survived");
}

#[test]
fn criterion_08_timing_oracle() {
    let mu = Numerology::default();
    let unit = mu.ta_unit_us();

    let top = 3846.0 * unit;
    let mut worst = 0f64;
    for i in 0..10_000 {
        let advance = top * i as f64 / 9_999.0;
        let ta = quantize_ta(advance, mu);
        let back = ta_to_time(ta, mu).unwrap();
        let err = (back - advance).abs();
        worst = worst.max(err);
        assert!(err <= unit / 2.0 + 1e-9, "advance {advance} quantized {err} us off");
    }

    let base: u16 = 100;
    let base_time = ta_to_time(base, mu).unwrap();
    for d in -60i32..=60 {
        let ta = (base as i32 + d) as u16;
        let t = ta_to_time(ta, mu).unwrap();
        assert!(
            (t - base_time - d as f64 * unit).abs() < 1e-9,
            "delta {d}: conversion is not linear"
        );
        let one_way = 10.0;
        let shift = uplink_arrival_offset_us(TaState { nta_us: t }, one_way)
            - uplink_arrival_offset_us(TaState { nta_us: base_time }, one_way);
        assert_eq!(shift > 0.0, d > 0, "delta {d}: sign convention broken");
        assert!((shift - d as f64 * unit).abs() < 1e-9);
    }
    println!("PASS criterion 8: worst grid error {worst:.6} us <= half unit {:.6}, linear and sign-correct over [-60, 60]", unit / 2.0);
}

#[test]
fn criterion_09_determinism() {
    let text = rogue_scenario(
        "determinism",
        600_000,
        "kind = ta_delta\ndelta_units = 30",
        "connect_at_ms = 1000\n",
    );
    let a = run_text(&text);
    let b = run_text(&text);
    assert_eq!(a.log.to_text(), b.log.to_text(), "same scenario and seed must match bytewise");

    let reparsed = EventLog::parse(&a.log.to_text()).unwrap();
    let recomputed = Metrics::derive(&reparsed).unwrap();
    assert_eq!(recomputed, a.metrics);
    assert_eq!(recomputed.to_csv(), a.metrics.to_csv());
    println!(
        "PASS criterion 9: {} bytes reproduced bitwise, recomputed metrics identical",
        a.log.to_text().len()
    );
}

#[test]
fn criterion_10_detector_coverage() {
    for (name, ue_lines) in [("quiet_idle", ""), ("quiet_connect", "connect_at_ms = 1000\n")] {
        let out = run_text(&benign_scenario(name, 600_000, ue_lines));
        let alerts = times(&out.log, EventKind::DetectorAlert);
        assert!(alerts.is_empty(), "benign scenario {name} raised {alerts:?}");
    }

    for d in [20, 30, 40, 50, 60] {
        let out = run_text(&rogue_scenario(
            &format!("alert_ta_{d}"),
            600_000,
            &format!("kind = ta_delta\ndelta_units = {d}"),
            "connect_at_ms = 1000\n",
        ));
        let first_alert = alert_times(&out.log, "ta_rsrp_check")
            .first()
            .copied()
            .unwrap_or_else(|| panic!("delta {d}: no TA alert"));
        let first_rlf = times(&out.log, EventKind::Rlf)[0];
        assert!(first_alert < first_rlf, "delta {d}: alert at {first_alert} not before RLF at {first_rlf}");
    }

    let out = run_text(&rogue_scenario(
        "alert_valuetag",
        600_000,
        "kind = value_tag_increment\nperiod_ms = 10000",
        "",
    ));
    let first = alert_times(&out.log, "valuetag_rate_check")
        .first()
        .copied()
        .expect("valuetag churn must alert");
    assert!(first <= 240_000, "first churn alert at {first} ms");
    println!("PASS criterion 10: benign runs silent, TA alerts precede every RLF, churn alert at {first} ms");
}
