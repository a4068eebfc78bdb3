//! Criterion microbenchmarks for the hot paths: VLIW codec, the Keccak
//! permutation model, and full SI runs of two benchmark apps.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use refab_core::benchmarks::{sha3, sift};
use refab_core::controller::{ControllerConfig, Machine};
use refab_core::fabric::FabricConfig;
use refab_core::isa::{decode_vliw, encode_vliw};
use refab_core::kernels::sha3::{keccak_f1600, KeccakState};

fn bench_vliw_codec(c: &mut Criterion) {
    // harvest structurally valid words from a real program image
    let p = sift::SiftProblem {
        a: (0..64).map(|i| i as f32).collect(),
        b: (0..64).map(|i| -(i as f32)).collect(),
    };
    let words = sift::gen_sift_program(&p).unwrap().words;
    c.bench_function("vliw_decode", |b| {
        b.iter(|| {
            for w in &words {
                black_box(decode_vliw(black_box(w)).unwrap());
            }
        })
    });
    let decoded: Vec<_> = words.iter().map(|w| decode_vliw(w).unwrap()).collect();
    c.bench_function("vliw_encode", |b| {
        b.iter(|| {
            for v in &decoded {
                black_box(encode_vliw(black_box(v)).unwrap());
            }
        })
    });
}

fn bench_keccak_permutation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut st = KeccakState::default();
    for lane in st.0.iter_mut() {
        *lane = rng.gen();
    }
    c.bench_function("keccak_f1600", |b| {
        b.iter(|| black_box(keccak_f1600(black_box(st))))
    });
}

fn bench_si_runs(c: &mut Criterion) {
    let p = sift::SiftProblem {
        a: (0..128).map(|i| (i as f32) * 0.1).collect(),
        b: (0..128).map(|i| 12.8 - (i as f32) * 0.1).collect(),
    };
    let sift_img = sift::gen_sift_program(&p).unwrap();
    c.bench_function("si_sift_128", |b| {
        b.iter(|| {
            let mut m =
                Machine::boot(&sift_img, ControllerConfig::default(), &FabricConfig::default())
                    .unwrap();
            black_box(m.run().unwrap())
        })
    });

    let msg = vec![0x5au8; 200];
    let (sha_img, streams) = sha3::gen_sha3_program(&msg).unwrap();
    c.bench_function("si_sha3_200b", |b| {
        b.iter(|| {
            let mut m =
                Machine::boot(&sha_img, ControllerConfig::default(), &FabricConfig::default())
                    .unwrap();
            for (slot, chan, words) in &streams {
                for &w in words {
                    m.fabric.stream_push(*slot, *chan, w);
                }
            }
            black_box(m.run().unwrap())
        })
    });
}

criterion_group!(benches, bench_vliw_codec, bench_keccak_permutation, bench_si_runs);
criterion_main!(benches);
