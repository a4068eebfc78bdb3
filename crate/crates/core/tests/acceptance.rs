//! Acceptance gate: one test per release criterion, each printing a single
//! PASS line (run with `--nocapture` to see them; a failure panics with
//! context).

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use refab_core::asm::{assemble, disassemble};
use refab_core::benchmarks::harness::{
    report_json, run_cnn_comparison, run_sha3_comparison, run_sift_comparison,
    run_swe_comparison, CnnProblem, Sha3Problem,
};
use refab_core::benchmarks::{cnn, sha3, sift, swe};
use refab_core::controller::{
    eval_flow, ControllerConfig, FlowDecision, Machine, ParamSet, StepEvent, TrapKind,
};
use refab_core::fabric::FabricConfig;
use refab_core::isa::{
    decode_vliw, encode_vliw, AuxOp, AuxOpcode, DstKind, DstSel, FlowOp, FlowOpcode, OperandKind,
    OperandSel, ProgramImage, SlotInstr, Vliw,
};

fn boot(img: &ProgramImage) -> Machine {
    Machine::boot(img, ControllerConfig::default(), &FabricConfig::default()).unwrap()
}

fn run_ok(m: &mut Machine) {
    let out = m.run().unwrap();
    assert!(out.trap.is_none(), "unexpected trap: {:?}", out.trap);
}

fn assemble_ok(src: &str) -> ProgramImage {
    assemble(src).expect("fixture assembles").image
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_isa_round_trip() {
    let t0 = Instant::now();
    let zero = [0u8; 24];
    assert_eq!(decode_vliw(&zero).unwrap(), Vliw::default(), "all-zero word is the NOP VLIW");

    let flow_ops = [
        FlowOpcode::NoJmp,
        FlowOpcode::AlwJmp,
        FlowOpcode::JmpIfCntEq,
        FlowOpcode::JmpIfCntNeq,
        FlowOpcode::JmpIfCntLt,
        FlowOpcode::JmpIfCntGt,
        FlowOpcode::JmpIfAccEq,
        FlowOpcode::JmpIfAccNeq,
        FlowOpcode::JmpIfAccLt,
        FlowOpcode::JmpIfAccGt,
        FlowOpcode::TrapAlw,
        FlowOpcode::TrapIfAccEq,
        FlowOpcode::TrapIfAccNeq,
        FlowOpcode::TrapIfAccLt,
        FlowOpcode::TrapIfAccGt,
    ];
    let aux_ops = [
        AuxOpcode::Nop,
        AuxOpcode::PsSetDest,
        AuxOpcode::PsCntSet,
        AuxOpcode::PsCntInc,
        AuxOpcode::PsCntReset,
        AuxOpcode::AguSet,
        AuxOpcode::AguAdd,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce5);
    let rand_src = |rng: &mut ChaCha8Rng| {
        let kind = [
            OperandKind::None,
            OperandKind::MemAgu,
            OperandKind::SlotOut,
            OperandKind::Imm,
        ][rng.gen_range(0..4)];
        let index = match kind {
            OperandKind::MemAgu => rng.gen_range(0..8),
            OperandKind::SlotOut => rng.gen_range(0..5),
            _ => 0,
        };
        OperandSel { kind, index }
    };
    for i in 0..10_000 {
        let mut v = Vliw::default();
        for s in 0..5 {
            let dst_kind = [DstKind::None, DstKind::OutOnly, DstKind::MemAgu]
                [rng.gen_range(0..3)];
            v.slots[s] = SlotInstr {
                op: rng.gen_range(0..64),
                src_a: rand_src(&mut rng),
                src_b: rand_src(&mut rng),
                dst: DstSel {
                    kind: dst_kind,
                    index: if dst_kind == DstKind::MemAgu {
                        rng.gen_range(0..8)
                    } else {
                        0
                    },
                },
                imm: rng.gen_range(0..16),
            };
        }
        let opcode = flow_ops[rng.gen_range(0..flow_ops.len())];
        v.flow = FlowOp {
            opcode,
            param_set: rng.gen_range(0..4),
            operand: rng.gen_range(0..4096),
            acc_mask: if opcode.is_acc_conditioned() {
                rng.gen_range(1..32)
            } else {
                rng.gen_range(0..32)
            },
            trap_value: rng.gen_range(0..8),
        };
        let aux_opcode = aux_ops[rng.gen_range(0..aux_ops.len())];
        v.aux = AuxOp {
            opcode: aux_opcode,
            target: match aux_opcode {
                AuxOpcode::Nop => 0,
                AuxOpcode::AguSet | AuxOpcode::AguAdd => rng.gen_range(0..8),
                _ => rng.gen_range(0..4),
            },
            operand: rng.gen_range(0..4096),
        };
        let word = encode_vliw(&v).unwrap_or_else(|e| panic!("sample {i} encode: {e}"));
        let back = decode_vliw(&word).unwrap_or_else(|e| panic!("sample {i} decode: {e}"));
        assert_eq!(back, v, "sample {i} round-trips");
        assert_eq!(encode_vliw(&back).unwrap(), word, "sample {i} re-encodes bit-exactly");
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 5.0, "runtime {dt:?} exceeds 5 s");
    println!("criterion 1: PASS - 10000 random VLIWs encode/decode bit-exactly in {dt:?}");
}

fn benchmark_images() -> Vec<(String, ProgramImage)> {
    let mut images = Vec::new();
    let sp = sift::SiftProblem {
        a: (0..16).map(|i| i as f32).collect(),
        b: (0..16).map(|i| -(i as f32)).collect(),
    };
    images.push(("sift".into(), sift::gen_sift_program(&sp).unwrap()));
    let rp = swe::RiemannProblem {
        h_l: 1.0,
        hu_l: 0.5,
        b_l: 0.0,
        h_r: 2.0,
        hu_r: -0.5,
        b_r: 0.25,
    };
    images.push(("swe".into(), swe::gen_swe_program(&rp).unwrap().0));
    let cp = cnn::ConvLayerProblem {
        height: 8,
        width: 8,
        channels: 2,
        pixels: (0..2 * 64).map(|i| (i % 251) as u8 as i8).collect(),
        weights: (0..18).map(|i| (i as i8) - 9).collect(),
        scale: 0.5,
        zero_point: 0,
    };
    images.push(("cnn-1mac".into(), cnn::gen_cnn_program(&cp, 1).unwrap().0));
    images.push(("cnn-2mac".into(), cnn::gen_cnn_program(&cp, 2).unwrap().0));
    images.push(("sha3".into(), sha3::gen_sha3_program(b"round trip").unwrap().0));
    images.push((
        "sha3-dual".into(),
        sha3::gen_sha3_dual_program(b"left", b"right").unwrap().0,
    ));
    images
}

#[test]
fn criterion_02_assembler_round_trip() {
    let t0 = Instant::now();
    for (name, image) in benchmark_images() {
        let text = disassemble(&image).unwrap_or_else(|e| panic!("{name}: disasm: {e}"));
        let back = assemble(&text)
            .unwrap_or_else(|e| panic!("{name}: reassemble: {e:?}"))
            .image;
        assert_eq!(image.to_bytes(), back.to_bytes(), "{name}: bit-identical image");
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 5.0, "runtime {dt:?} exceeds 5 s");
    println!("criterion 2: PASS - disassemble/assemble bit-identical for all benchmark images in {dt:?}");
}

#[test]
fn criterion_03_jump_semantics() {
    // CNT comparators over boundary (operand, counter) pairs
    let cnt_ops = [
        (FlowOpcode::JmpIfCntEq, (|c: u16, o: u16| c == o) as fn(u16, u16) -> bool),
        (FlowOpcode::JmpIfCntNeq, |c, o| c != o),
        (FlowOpcode::JmpIfCntLt, |c, o| c < o),
        (FlowOpcode::JmpIfCntGt, |c, o| c > o),
    ];
    for (opcode, oracle) in cnt_ops {
        for operand in [0u16, 1, 2, 77, 4094, 4095] {
            let counters = [
                0,
                1,
                operand.saturating_sub(1),
                operand,
                (operand + 1).min(4095),
                4095,
            ];
            for counter in counters {
                let mut sets = [ParamSet::default(); 4];
                sets[1] = ParamSet {
                    destination: 9,
                    counter,
                };
                let f = FlowOp {
                    opcode,
                    param_set: 1,
                    operand,
                    acc_mask: 0,
                    trap_value: 0,
                };
                let got = eval_flow(&f, &sets, [0; 5]);
                let want = if oracle(counter, operand) {
                    FlowDecision::Jump(9)
                } else {
                    FlowDecision::Fallthrough
                };
                assert_eq!(got, want, "{opcode:?} counter={counter} operand={operand}");
            }
        }
    }

    // ACC comparators: AND over masked slots, all signal/operand combos
    let acc_ops = [
        (FlowOpcode::JmpIfAccEq, (|s: u8, c: u8| s == c) as fn(u8, u8) -> bool),
        (FlowOpcode::JmpIfAccNeq, |s, c| s != c),
        (FlowOpcode::JmpIfAccLt, |s, c| s < c),
        (FlowOpcode::JmpIfAccGt, |s, c| s > c),
    ];
    for mask in [0b00100u8, 0b01001, 0b11111] {
        let lanes: Vec<usize> = (0..5).filter(|i| mask >> i & 1 == 1).collect();
        for (opcode, oracle) in acc_ops {
            // operands beyond 3 exercise the mod-4 signal-code reduction
            for operand in [0u16, 1, 2, 3, 4, 7] {
                let code = (operand % 4) as u8;
                for combo in 0..(1u32 << (2 * lanes.len())) {
                    let mut signals = [3u8; 5];
                    for (bit, &lane) in lanes.iter().enumerate() {
                        signals[lane] = (combo >> (2 * bit) & 3) as u8;
                    }
                    let mut sets = [ParamSet::default(); 4];
                    sets[0].destination = 4;
                    let f = FlowOp {
                        opcode,
                        param_set: 0,
                        operand,
                        acc_mask: mask,
                        trap_value: 0,
                    };
                    let want = if lanes.iter().all(|&l| oracle(signals[l], code)) {
                        FlowDecision::Jump(4)
                    } else {
                        FlowDecision::Fallthrough
                    };
                    assert_eq!(
                        eval_flow(&f, &sets, signals),
                        want,
                        "{opcode:?} mask={mask:#07b} operand={operand} signals={signals:?}"
                    );
                }
            }
        }
    }
    println!("criterion 3: PASS - CNT and ACC comparator semantics match the brute-force oracle");
}

#[test]
fn criterion_04_trap_suite() {
    // (a) out-of-range destination
    let img = assemble_ok("ctrl: PS_SET_DEST p0, 1\nctrl: ALW_JMP p0\nnop\n");
    let mut m = boot(&img);
    assert_eq!(m.step().unwrap(), StepEvent::Retired { next_pc: 1 });
    m.param_sets[0].destination = 4095;
    match m.step().unwrap() {
        StepEvent::Trapped(t) => assert_eq!(t.kind, TrapKind::InvalidJumpTarget, "{t:?}"),
        e => panic!("expected trap, got {e:?}"),
    }

    // (b) starved stream: STALL_TIMEOUT at exactly 512, then at an override of 8
    let img = assemble_ok(".slotbind 0 SHA_BUFF\nslot0: POP -> out\n");
    let mut m = boot(&img);
    let out = m.run().unwrap();
    let t = out.trap.expect("stall trap");
    assert_eq!(t.kind, TrapKind::StallTimeout);
    assert_eq!(t.cycle, 512, "default threshold");
    let cfg = ControllerConfig {
        stall_threshold: 8,
        ..ControllerConfig::default()
    };
    let mut m = Machine::boot(&img, cfg, &FabricConfig::default()).unwrap();
    let t = m.run().unwrap().trap.expect("stall trap");
    assert_eq!(t.kind, TrapKind::StallTimeout);
    assert_eq!(t.cycle, 8, "override threshold");

    // (c) NaN-producing FP op reports the offending slot
    let img = assemble_ok(
        ".slotbind 2 UTIL\n.word 0x7fc00000\nctrl: AGU_SET a0, 0\nslot2: ABS mem[a0] -> out\nnop\nnop\n",
    );
    let mut m = boot(&img);
    let t = m.run().unwrap().trap.expect("NaN trap");
    match t.kind {
        TrapKind::AcceleratorError { slot, .. } => assert_eq!(slot, 2),
        k => panic!("expected ACCELERATOR_ERROR, got {k:?}"),
    }

    // (d) all 8 user trap values round-trip
    for v in 0..8u8 {
        let img = assemble_ok(&format!("ctrl: TRAP_ALW {v}\n"));
        let mut m = boot(&img);
        let t = m.run().unwrap().trap.expect("user trap");
        assert_eq!(t.kind, TrapKind::User { value: v });
    }
    println!("criterion 4: PASS - trap kinds, slot ids, thresholds and user values all observed");
}

#[test]
fn criterion_05_four_nested_loops() {
    let src = "\
ctrl: PS_SET_DEST p0, L0
ctrl: PS_CNT_SET p0, 0
L0:
ctrl: PS_SET_DEST p1, L1
ctrl: PS_CNT_SET p1, 0
L1:
ctrl: PS_SET_DEST p2, L2
ctrl: PS_CNT_SET p2, 0
L2:
ctrl: PS_SET_DEST p3, L3
ctrl: PS_CNT_SET p3, 0
L3:
nop
ctrl: PS_CNT_INC p3 ; JMP_IF_CNT_LT p3, 7
ctrl: PS_CNT_INC p2 ; JMP_IF_CNT_LT p2, 5
ctrl: PS_CNT_INC p1 ; JMP_IF_CNT_LT p1, 3
ctrl: PS_CNT_INC p0 ; JMP_IF_CNT_LT p0, 2
";
    let out = assemble(src).unwrap();
    let body_pc = out.labels["L3"] as u16;
    let mut m = boot(&out.image);
    let mut body_retires = 0u64;
    let outcome = m
        .run_with_trace(|r| {
            if r.event == "RETIRED" && r.pc == body_pc {
                body_retires += 1;
            }
        })
        .unwrap();
    assert!(outcome.trap.is_none());
    assert_eq!(body_retires, 2 * 3 * 5 * 7, "innermost body retirements");
    println!("criterion 5: PASS - 4-deep nested loop (2,3,5,7) retires the body exactly 210 times");
}

#[test]
fn criterion_06_sift() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x51f7);
    let ns: Vec<usize> = (1..=64).chain([128, 1000]).collect();
    for n in ns {
        let a: Vec<f32> = (0..n).map(|_| rng.gen_range(-8.0f32..8.0)).collect();
        let b: Vec<f32> = (0..n).map(|_| rng.gen_range(-8.0f32..8.0)).collect();
        let p = sift::SiftProblem { a, b };
        let want = sift::ref_sift_match(&p);
        let img = sift::gen_sift_program(&p).unwrap();
        let mut m = boot(&img);
        run_ok(&mut m);
        let got = f32::from_bits(m.fabric.memory[sift::RESULT_ADDR as usize]);
        assert_eq!(got.to_bits(), want.to_bits(), "n={n}");

        let v: Vec<f32> = (0..n).map(|_| rng.gen_range(-8.0f32..8.0)).collect();
        let same = sift::SiftProblem { a: v.clone(), b: v };
        let img = sift::gen_sift_program(&same).unwrap();
        let mut m = boot(&img);
        run_ok(&mut m);
        assert_eq!(
            m.fabric.memory[sift::RESULT_ADDR as usize],
            0.0f32.to_bits(),
            "a = b must give exactly 0.0 (n={n})"
        );
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 30.0, "runtime {dt:?} exceeds 30 s");
    println!("criterion 6: PASS - SIFT bit-exact for n in 1..=64, 128, 1000 in {dt:?}");
}

#[test]
fn criterion_07_swe() {
    let t0 = Instant::now();
    // 1000 random wet-wet problems within 1e-6 relative
    let mut rng = ChaCha8Rng::seed_from_u64(0x53e);
    for i in 0..1000 {
        let p = swe::RiemannProblem {
            h_l: rng.gen_range(0.001f32..10.0),
            hu_l: rng.gen_range(-5.0f32..5.0),
            b_l: rng.gen_range(-1.0f32..1.0),
            h_r: rng.gen_range(0.001f32..10.0),
            hu_r: rng.gen_range(-5.0f32..5.0),
            b_r: rng.gen_range(-1.0f32..1.0),
        };
        let want = swe::ref_swe_fwave(&p).unwrap().as_array();
        let (img, _) = swe::gen_swe_program(&p).unwrap();
        let mut m = boot(&img);
        run_ok(&mut m);
        let got = swe::read_si_result(&m.fabric.memory).as_array();
        for (g, w) in got.iter().zip(&want) {
            let err = (*g as f64 - *w as f64).abs() / (w.abs() as f64).max(1.0);
            assert!(err <= 1e-6, "case {i}: {p:?}: got {got:?} want {want:?}");
        }
    }

    // lake-at-rest: zero net updates
    for h in [1.0f32, 1.25, 1.5, 2.0] {
        let p = swe::RiemannProblem {
            h_l: h,
            hu_l: 0.0,
            b_l: 2.0 - h,
            h_r: 1.75,
            hu_r: 0.0,
            b_r: 0.25,
        };
        let (img, _) = swe::gen_swe_program(&p).unwrap();
        let mut m = boot(&img);
        run_ok(&mut m);
        let r = swe::read_si_result(&m.fabric.memory);
        assert_eq!(r.upd_l, [0.0; 2], "lake at rest h={h}");
        assert_eq!(r.upd_r, [0.0; 2], "lake at rest h={h}");
    }

    // dispatch: every wet/dry combination lands in its classified body
    let wet = |h_l: f32, h_r: f32| swe::RiemannProblem {
        h_l,
        hu_l: if h_l > 0.0 { 0.3 } else { 0.0 },
        b_l: 0.0,
        h_r,
        hu_r: if h_r > 0.0 { -0.4 } else { 0.0 },
        b_r: 0.0,
    };
    let cases = [
        (wet(1.0, 1.5), swe::WetDry::WetWet),
        (wet(1.0, 0.0), swe::WetDry::WetDry),
        (wet(0.0, 1.5), swe::WetDry::DryWet),
        (wet(0.0, 0.0), swe::WetDry::DryDry),
    ];
    for (p, want) in cases {
        let (img, markers) = swe::gen_swe_program(&p).unwrap();
        let mut m = boot(&img);
        let mut bodies = Vec::new();
        let out = m
            .run_with_trace(|r| {
                if r.event == "RETIRED" {
                    if let Some(b) = markers.body_for_pc(r.pc as u32) {
                        bodies.push(b);
                    }
                }
            })
            .unwrap();
        assert!(out.trap.is_none());
        assert!(!bodies.is_empty() && bodies.iter().all(|&b| b == want), "{p:?}: {bodies:?}");
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "runtime {dt:?} exceeds 60 s");
    println!("criterion 7: PASS - SWE oracle match, lake-at-rest balance and wet/dry dispatch in {dt:?}");
}

#[test]
fn criterion_08_cnn() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc44);
    for c in [1usize, 3, 8] {
        let p = cnn::ConvLayerProblem {
            height: 16,
            width: 16,
            channels: c,
            pixels: (0..c * 256).map(|_| rng.gen::<u8>() as i8).collect(),
            weights: (0..c * 9).map(|_| rng.gen::<u8>() as i8).collect(),
            scale: 0.015625,
            zero_point: 4,
        };
        let (img, streams, markers) = cnn::gen_cnn_program(&p, 1).unwrap();
        let mut m = boot(&img);
        for (slot, chan, words) in &streams {
            for &w in words {
                m.fabric.stream_push(*slot, *chan, w);
            }
        }
        let mut mac_retires = 0u64;
        let out = m
            .run_with_trace(|r| {
                if r.event == "RETIRED" && r.pc as u32 == markers.mac_pc {
                    mac_retires += 1;
                }
            })
            .unwrap();
        assert!(out.trap.is_none(), "C={c}: {:?}", out.trap);
        assert_eq!(
            cnn::read_pool_output(&m.fabric.memory, &p),
            cnn::ref_conv_layer(&p),
            "C={c} output"
        );
        assert_eq!(
            mac_retires,
            markers.windows_per_mac * c as u64,
            "C={c}: inner loop retires C times per window"
        );
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "runtime {dt:?} exceeds 60 s");
    println!("criterion 8: PASS - CNN exact for C in {{1,3,8}} on 16x16 with C inner-loop retires per window in {dt:?}");
}

#[test]
fn criterion_09_sha3() {
    let t0 = Instant::now();
    let empty = sha3::ref_sha3_256(b"");
    assert_eq!(
        empty[..8],
        [0xa7, 0xff, 0xc6, 0xf8, 0xbf, 0x1e, 0xd7, 0x66],
        "published empty-string vector"
    );
    assert_eq!(
        sha3::ref_sha3_256(b"abc")[..8],
        [0x3a, 0x98, 0x5d, 0xa7, 0x4f, 0xe2, 0x25, 0xb2],
        "published abc vector"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a3);
    for len in 0..=300usize {
        let msg: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let (img, streams) = sha3::gen_sha3_program(&msg).unwrap();
        let mut m = boot(&img);
        for (slot, chan, words) in &streams {
            for &w in words {
                m.fabric.stream_push(*slot, *chan, w);
            }
        }
        run_ok(&mut m);
        assert_eq!(
            sha3::read_digest(&m.fabric.memory, sha3::DIGEST_ADDR),
            sha3::ref_sha3_256(&msg),
            "len {len}"
        );
    }

    // dual-pipeline parallel == two sequential runs
    let a: Vec<u8> = (0..120).map(|i| i as u8).collect();
    let b: Vec<u8> = (0..7).map(|i| (i * 31) as u8).collect();
    let (img, streams) = sha3::gen_sha3_dual_program(&a, &b).unwrap();
    let mut m = boot(&img);
    for (slot, chan, words) in &streams {
        for &w in words {
            m.fabric.stream_push(*slot, *chan, w);
        }
    }
    run_ok(&mut m);
    assert_eq!(read_single(&a), sha3::read_digest(&m.fabric.memory, sha3::DIGEST_ADDR));
    assert_eq!(read_single(&b), sha3::read_digest(&m.fabric.memory, sha3::DIGEST_ADDR_B));

    fn read_single(msg: &[u8]) -> [u8; 32] {
        let (img, streams) = sha3::gen_sha3_program(msg).unwrap();
        let mut m = Machine::boot(&img, ControllerConfig::default(), &FabricConfig::default()).unwrap();
        for (slot, chan, words) in &streams {
            for &w in words {
                m.fabric.stream_push(*slot, *chan, w);
            }
        }
        m.run().unwrap();
        sha3::read_digest(&m.fabric.memory, sha3::DIGEST_ADDR)
    }

    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 60.0, "runtime {dt:?} exceeds 60 s");
    println!("criterion 9: PASS - SHA3-256 lengths 0..=300 vs independent reference, dual pipeline consistent, in {dt:?}");
}

#[test]
fn criterion_10_determinism() {
    let cfg = FabricConfig::default();
    let sift_p = sift::SiftProblem {
        a: (0..12).map(|i| i as f32 * 0.75).collect(),
        b: (0..12).map(|i| 3.0 - i as f32).collect(),
    };
    let swe_p = swe::RiemannProblem {
        h_l: 1.4,
        hu_l: 0.2,
        b_l: -0.1,
        h_r: 0.9,
        hu_r: -0.6,
        b_r: 0.3,
    };
    let cnn_p = CnnProblem {
        layer: cnn::ConvLayerProblem {
            height: 6,
            width: 8,
            channels: 2,
            pixels: (0..96).map(|i| (i as i8).wrapping_mul(5)).collect(),
            weights: (0..18).map(|i| 9 - i as i8).collect(),
            scale: 0.25,
            zero_point: -1,
        },
        macs: 1,
    };
    let sha_p = Sha3Problem {
        message: b"determinism".to_vec(),
    };
    let apps: [(&str, Box<dyn Fn() -> String>); 4] = [
        ("sift", Box::new(|| report_json(&[run_sift_comparison(&sift_p, &cfg).unwrap()]))),
        ("swe", Box::new(|| report_json(&[run_swe_comparison(&swe_p, &cfg).unwrap()]))),
        ("cnn", Box::new(|| report_json(&[run_cnn_comparison(&cnn_p, &cfg).unwrap()]))),
        ("sha3", Box::new(|| report_json(&[run_sha3_comparison(&sha_p, &cfg).unwrap()]))),
    ];
    for (name, run) in &apps {
        let first = run();
        assert!(first.contains("\"matched\": true"), "{name}: {first}");
        for i in 1..1000 {
            assert_eq!(run(), first, "{name}: repeat {i} differs");
        }
    }
    println!("criterion 10: PASS - 1000 repeats per app produce byte-identical reports");
}

#[test]
fn criterion_11_mac_slot_scaling() {
    let p = cnn::ConvLayerProblem {
        height: 16,
        width: 16,
        channels: 3,
        pixels: (0..3 * 256).map(|i| (i % 127) as i8).collect(),
        weights: (0..27).map(|i| (i as i8) - 13).collect(),
        scale: 0.03125,
        zero_point: 0,
    };
    let cycles = |macs: usize| {
        let (img, streams, _) = cnn::gen_cnn_program(&p, macs).unwrap();
        let mut m = boot(&img);
        for (slot, chan, words) in &streams {
            for &w in words {
                m.fabric.stream_push(*slot, *chan, w);
            }
        }
        let out = m.run().unwrap();
        assert!(out.trap.is_none());
        assert_eq!(cnn::read_pool_output(&m.fabric.memory, &p), cnn::ref_conv_layer(&p));
        out.cycles
    };
    let one = cycles(1);
    let two = cycles(2);
    assert!(two < one, "2-MAC ({two} cycles) must beat 1-MAC ({one} cycles)");
    println!("criterion 11: PASS - CNN with 2 MAC slots ({two} cycles) beats 1 MAC slot ({one} cycles)");
}
