//! SHA3-256 accelerator models: SHA-Buff (streaming block fetcher) and
//! SHA-Comp (Keccak-f[1600] datapath with gamma/result memories and the
//! rho shift-register buffer).
//!
//! Lane (x, y) lives at index x + 5y. The behavioral contract is the
//! standard SHA3-256 construction; the rho buffer's splitter/7-register/
//! combiner structure is modeled, with the rotation result as its contract.

use crate::isa::KernelKind;

use super::{fault, Exec, Kernel, KernelFault, Streams};

pub const SHA3_256_RATE: usize = 136;
pub const SHA3_256_RATE_WORDS: usize = SHA3_256_RATE / 4;
pub const SHA3_256_DIGEST: usize = 32;
pub const KECCAK_ROUNDS: usize = 24;

// SHA_COMP opcodes
pub const COMP_INIT: u8 = 1;
pub const COMP_ABSORB: u8 = 2;
pub const COMP_ROUND: u8 = 3;
pub const COMP_SQUEEZE: u8 = 4;

// SHA_BUFF opcodes
pub const BUFF_POP: u8 = 1;

/// Per-lane left-rotation offsets of the rho step, indexed [x][y].
pub const RHO_OFFSETS: [[u32; 5]; 5] = [
    [0, 36, 3, 41, 18],
    [1, 44, 10, 45, 2],
    [62, 6, 43, 15, 61],
    [28, 55, 25, 21, 56],
    [27, 20, 39, 8, 14],
];

pub const ROUND_CONSTANTS: [u64; 24] = [
    0x0000000000000001,
    0x0000000000008082,
    0x800000000000808a,
    0x8000000080008000,
    0x000000000000808b,
    0x0000000080000001,
    0x8000000080008081,
    0x8000000000008009,
    0x000000000000008a,
    0x0000000000000088,
    0x0000000080008009,
    0x000000008000000a,
    0x000000008000808b,
    0x800000000000008b,
    0x8000000000008089,
    0x8000000000008003,
    0x8000000000008002,
    0x8000000000000080,
    0x000000000000800a,
    0x800000008000000a,
    0x8000000080008081,
    0x8000000000008080,
    0x0000000080000001,
    0x8000000080008008,
];

/// 1600-bit permutation state, 25 lanes of 64 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KeccakState(pub [u64; 25]);

impl KeccakState {
    pub fn lane(&self, x: usize, y: usize) -> u64 {
        self.0[x + 5 * y]
    }

    pub fn set_lane(&mut self, x: usize, y: usize, v: u64) {
        self.0[x + 5 * y] = v;
    }
}

/// The rho buffer: a splitter feeding up to four lanes through seven shift
/// registers (shifts 1,2,4,8,16,32 plus a pass-through stage), a selector
/// choosing the stages that compose each lane's offset, and a combiner.
/// Contract: each output lane equals the input rotated left by its offset.
pub const RHO_SHIFT_STAGES: [u32; 7] = [1, 2, 4, 8, 16, 32, 0];

pub fn rho_buffer_apply(lanes: &[u64], offsets: &[u32]) -> Vec<u64> {
    assert!(lanes.len() == offsets.len() && lanes.len() <= 4);
    lanes
        .iter()
        .zip(offsets)
        .map(|(&lane, &off)| {
            // selector: route through every stage whose shift is a set bit
            // of the offset; the pass-through stage carries the rest
            let mut v = lane;
            for &stage in &RHO_SHIFT_STAGES {
                if stage != 0 && off & stage != 0 {
                    v = v.rotate_left(stage);
                }
            }
            v
        })
        .collect()
}

fn theta(st: &mut KeccakState) {
    let mut c = [0u64; 5];
    for x in 0..5 {
        for y in 0..5 {
            c[x] ^= st.lane(x, y);
        }
    }
    for x in 0..5 {
        let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
        for y in 0..5 {
            let v = st.lane(x, y) ^ d;
            st.set_lane(x, y, v);
        }
    }
}

fn rho(st: &mut KeccakState) {
    // lanes pass through the rho buffer four at a time
    let mut out = [0u64; 25];
    for group in (0..25).step_by(4) {
        let end = (group + 4).min(25);
        let lanes: Vec<u64> = (group..end).map(|i| st.0[i]).collect();
        let offsets: Vec<u32> = (group..end).map(|i| RHO_OFFSETS[i % 5][i / 5]).collect();
        let rotated = rho_buffer_apply(&lanes, &offsets);
        out[group..end].copy_from_slice(&rotated);
    }
    st.0 = out;
}

fn pi(st: &mut KeccakState) {
    let old = *st;
    for x in 0..5 {
        for y in 0..5 {
            st.set_lane(y, (2 * x + 3 * y) % 5, old.lane(x, y));
        }
    }
}

/// The nonlinear step (the "gamma" unit's core).
fn chi(st: &mut KeccakState) {
    let old = *st;
    for y in 0..5 {
        for x in 0..5 {
            let v = old.lane(x, y) ^ (!old.lane((x + 1) % 5, y) & old.lane((x + 2) % 5, y));
            st.set_lane(x, y, v);
        }
    }
}

/// One standard Keccak-f[1600] round: theta, rho (via the rho buffer
/// model), pi, chi, iota.
pub fn keccak_round(mut st: KeccakState, round: usize) -> KeccakState {
    assert!(round < KECCAK_ROUNDS);
    theta(&mut st);
    rho(&mut st);
    pi(&mut st);
    chi(&mut st);
    st.0[0] ^= ROUND_CONSTANTS[round];
    st
}

pub fn keccak_f1600(mut st: KeccakState) -> KeccakState {
    for r in 0..KECCAK_ROUNDS {
        st = keccak_round(st, r);
    }
    st
}

/// Multi-rate padding with the SHA3 domain separation suffix (0b01 then
/// pad10*1). Always appends at least one bit, so the output is at least
/// one block.
pub fn pad10x1(msg: &[u8], rate_bytes: usize) -> Vec<Vec<u8>> {
    let nblocks = msg.len() / rate_bytes + 1;
    let mut padded = msg.to_vec();
    padded.resize(nblocks * rate_bytes, 0);
    padded[msg.len()] ^= 0x06;
    *padded.last_mut().unwrap() ^= 0x80;
    padded.chunks(rate_bytes).map(|c| c.to_vec()).collect()
}

fn absorb_block(st: &mut KeccakState, block: &[u8]) {
    for (i, chunk) in block.chunks(8).enumerate() {
        st.0[i] ^= u64::from_le_bytes(chunk.try_into().unwrap());
    }
    *st = keccak_f1600(*st);
}

/// Host-side behavioral SHA3-256 over the same permutation datapath the
/// SHA-Comp kernel uses.
pub fn sha3_256(msg: &[u8]) -> [u8; SHA3_256_DIGEST] {
    let mut st = KeccakState::default();
    for block in pad10x1(msg, SHA3_256_RATE) {
        absorb_block(&mut st, &block);
    }
    let mut digest = [0u8; SHA3_256_DIGEST];
    for i in 0..4 {
        digest[i * 8..(i + 1) * 8].copy_from_slice(&st.0[i].to_le_bytes());
    }
    digest
}

// ---------------------------------------------------------------------------
// Kernel impls

/// SHA-Comp: gamma memory holds the output of the nonlinear step of the
/// last round, result memory holds the running state.
#[derive(Debug, Default)]
pub struct ShaCompState {
    pub res_memory: KeccakState,
    pub gam_memory: KeccakState,
    pub round: usize,
    pub absorb_cursor: usize,
    pub squeeze_cursor: usize,
}

#[derive(Default)]
pub struct ShaCompKernel {
    pub state: ShaCompState,
}

impl Kernel for ShaCompKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::ShaComp
    }

    fn exec(&mut self, op: u8, a: u32, _b: u32, _s: &mut Streams) -> Result<Exec, KernelFault> {
        let st = &mut self.state;
        match op {
            COMP_INIT => {
                *st = ShaCompState::default();
                Ok(Exec::default())
            }
            COMP_ABSORB => {
                let lane = st.absorb_cursor / 2;
                let half = (st.absorb_cursor % 2) as u32;
                st.res_memory.0[lane] ^= (a as u64) << (32 * half);
                st.absorb_cursor = (st.absorb_cursor + 1) % SHA3_256_RATE_WORDS;
                st.squeeze_cursor = 0;
                Ok(Exec::default())
            }
            COMP_ROUND => {
                // keep the pre-iota nonlinear output visible in gamma memory
                let mut g = st.res_memory;
                theta(&mut g);
                rho(&mut g);
                pi(&mut g);
                chi(&mut g);
                st.gam_memory = g;
                st.res_memory = keccak_round(st.res_memory, st.round);
                st.round = (st.round + 1) % KECCAK_ROUNDS;
                Ok(Exec {
                    ctrl: (st.round == 0) as u8,
                    ..Exec::default()
                })
            }
            COMP_SQUEEZE => {
                let lane = st.squeeze_cursor / 2;
                let half = (st.squeeze_cursor % 2) as u32;
                let w = (st.res_memory.0[lane] >> (32 * half)) as u32;
                st.squeeze_cursor = (st.squeeze_cursor + 1) % (SHA3_256_DIGEST / 4);
                Ok(Exec {
                    out: w,
                    ..Exec::default()
                })
            }
            _ => Err(fault(format!("undefined SHA_COMP opcode {op}"))),
        }
    }
}

/// SHA-Buff: a word FIFO fed from stream channel 0; POP stalls while the
/// FIFO is empty.
pub struct ShaBuffKernel;

impl Kernel for ShaBuffKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::ShaBuff
    }

    fn would_stall(&self, op: u8, streams: &Streams) -> bool {
        op == BUFF_POP && streams[0].is_empty()
    }

    fn exec(&mut self, op: u8, _a: u32, _b: u32, streams: &mut Streams) -> Result<Exec, KernelFault> {
        match op {
            BUFF_POP => {
                let w = streams[0]
                    .pop_front()
                    .ok_or_else(|| fault("POP on empty stream".to_string()))?;
                Ok(Exec {
                    out: w,
                    ctrl: 1,
                    ..Exec::default()
                })
            }
            _ => Err(fault(format!("undefined SHA_BUFF opcode {op}"))),
        }
    }
}
