//! SHA3-256 benchmark: an independently written Keccak-f[1600] reference
//! (round constants from the LFSR definition, rotation offsets from the
//! (x, y) coordinate walk — deliberately not sharing code or tables with the
//! kernel models) plus single- and dual-pipeline SI generators.

use crate::isa::ProgramImage;

use super::builder::{param_err, Asm, GenError};
use super::cnn::StreamPayload;

pub const RATE_BYTES: usize = 136;
pub const RATE_WORDS: u32 = 34;
/// Word address of the (first) 8-word digest.
pub const DIGEST_ADDR: u32 = 16;
/// Second digest of the dual-pipeline SI.
pub const DIGEST_ADDR_B: u32 = 24;

// ---------------------------------------------------------------------------
// independent reference implementation

/// Round-constant bit b(t) from the degree-8 LFSR x^8+x^6+x^5+x^4+1.
fn rc_bit(t: usize) -> u64 {
    let mut r: u16 = 1;
    for _ in 0..t {
        r <<= 1;
        if r & 0x100 != 0 {
            r ^= 0x171;
        }
    }
    (r & 1) as u64
}

fn round_constant(ir: usize) -> u64 {
    let mut rc = 0u64;
    for j in 0..7 {
        rc |= rc_bit(j + 7 * ir) << ((1usize << j) - 1);
    }
    rc
}

/// Rotation offsets generated by the coordinate walk
/// (x, y) <- (y, 2x + 3y mod 5) starting from (1, 0).
fn rho_offsets() -> [[u32; 5]; 5] {
    let mut off = [[0u32; 5]; 5];
    let (mut x, mut y) = (1usize, 0usize);
    for t in 0..24u32 {
        off[x][y] = ((t + 1) * (t + 2) / 2) % 64;
        let nx = y;
        let ny = (2 * x + 3 * y) % 5;
        x = nx;
        y = ny;
    }
    off
}

fn keccak_f(a: &mut [[u64; 5]; 5]) {
    let rho = rho_offsets();
    for ir in 0..24 {
        // theta
        let mut c = [0u64; 5];
        for x in 0..5 {
            c[x] = a[x][0] ^ a[x][1] ^ a[x][2] ^ a[x][3] ^ a[x][4];
        }
        for x in 0..5 {
            let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
            for y in 0..5 {
                a[x][y] ^= d;
            }
        }
        // rho and pi combined
        let mut b = [[0u64; 5]; 5];
        for x in 0..5 {
            for y in 0..5 {
                b[y][(2 * x + 3 * y) % 5] = a[x][y].rotate_left(rho[x][y]);
            }
        }
        // chi
        for x in 0..5 {
            for y in 0..5 {
                a[x][y] = b[x][y] ^ (!b[(x + 1) % 5][y] & b[(x + 2) % 5][y]);
            }
        }
        // iota
        a[0][0] ^= round_constant(ir);
    }
}

/// SHA3-256 digest, computed byte-wise on the lane matrix.
pub fn ref_sha3_256(msg: &[u8]) -> [u8; 32] {
    let mut state = [[0u64; 5]; 5];
    let absorb_block = |st: &mut [[u64; 5]; 5], block: &[u8]| {
        for (i, &byte) in block.iter().enumerate() {
            let lane = i / 8;
            st[lane % 5][lane / 5] ^= (byte as u64) << (8 * (i % 8));
        }
        keccak_f(st);
    };
    let mut it = msg.chunks_exact(RATE_BYTES);
    for block in &mut it {
        absorb_block(&mut state, block);
    }
    let mut last = it.remainder().to_vec();
    last.push(0x06);
    last.resize(RATE_BYTES, 0);
    last[RATE_BYTES - 1] |= 0x80;
    absorb_block(&mut state, &last);

    let mut digest = [0u8; 32];
    for i in 0..32 {
        let lane = i / 8;
        digest[i] = (state[lane % 5][lane / 5] >> (8 * (i % 8))) as u8;
    }
    digest
}

/// Padded message as the little-endian u32 stream the buffer slot consumes.
pub fn padded_words(msg: &[u8]) -> Vec<u32> {
    let nblocks = msg.len() / RATE_BYTES + 1;
    let mut bytes = msg.to_vec();
    bytes.push(0x06);
    bytes.resize(nblocks * RATE_BYTES, 0);
    let last = bytes.len() - 1;
    bytes[last] |= 0x80;
    bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

pub fn num_blocks(msg_len: usize) -> u32 {
    (msg_len / RATE_BYTES + 1) as u32
}

// ---------------------------------------------------------------------------
// SI generators

/// Emit the per-pipeline absorb/permute block loop and the squeeze phase.
/// `pipes` lists (buffer slot, compressor slot, digest AGU register).
fn emit_sha_body(a: &mut Asm, pipes: &[(usize, usize, u8)], nblocks: u32) {
    let init: Vec<String> = pipes.iter().map(|&(_, c, _)| format!("slot{c}: INIT")).collect();
    a.stmt(init.join(" | "));
    a.set_dest(0, "BLOCK");
    a.cnt_reset(0);
    a.bind("BLOCK");
    a.set_dest(1, "ABSORB");
    a.cnt_reset(1);
    a.bind("ABSORB");
    let pops: Vec<String> = pipes.iter().map(|&(b, _, _)| format!("slot{b}: POP -> out")).collect();
    a.stmt(pops.join(" | "));
    let absorbs: Vec<String> = pipes
        .iter()
        .map(|&(b, c, _)| format!("slot{c}: ABSORB out[{b}]"))
        .collect();
    a.stmt(format!(
        "{} | ctrl: PS_CNT_INC p1 ; JMP_IF_CNT_LT p1, {RATE_WORDS}",
        absorbs.join(" | ")
    ));
    a.set_dest(2, "ROUND");
    a.cnt_reset(2);
    a.bind("ROUND");
    let rounds: Vec<String> = pipes.iter().map(|&(_, c, _)| format!("slot{c}: ROUND")).collect();
    a.stmt(format!(
        "{} | ctrl: PS_CNT_INC p2 ; JMP_IF_CNT_LT p2, 24",
        rounds.join(" | ")
    ));
    a.back_edge(0, nblocks);
    for _ in 0..8 {
        let sq: Vec<String> = pipes
            .iter()
            .map(|&(_, c, reg)| format!("slot{c}: SQUEEZE -> mem[a{reg}]"))
            .collect();
        a.stmt(sq.join(" | "));
    }
    a.stmt("nop");
}

pub fn gen_sha3_program(msg: &[u8]) -> Result<(ProgramImage, StreamPayload), GenError> {
    let mut a = Asm::new();
    a.slotbind(0, "SHA_BUFF");
    a.slotbind(1, "SHA_COMP");
    a.agu_set(0, DIGEST_ADDR);
    emit_sha_body(&mut a, &[(0, 1, 0)], num_blocks(msg.len()));
    let image = a.assemble()?.image;
    Ok((image, vec![(0, 0, padded_words(msg))]))
}

/// Two independent hash pipelines in one program; both messages must pad to
/// the same block count so the shared loop counters line up.
pub fn gen_sha3_dual_program(
    msg_a: &[u8],
    msg_b: &[u8],
) -> Result<(ProgramImage, StreamPayload), GenError> {
    let na = num_blocks(msg_a.len());
    let nb = num_blocks(msg_b.len());
    if na != nb {
        return Err(param_err(format!(
            "dual pipeline needs equal padded block counts, got {na} and {nb}"
        )));
    }
    let mut a = Asm::new();
    a.slotbind(0, "SHA_BUFF");
    a.slotbind(1, "SHA_COMP");
    a.slotbind(2, "SHA_BUFF");
    a.slotbind(3, "SHA_COMP");
    a.agu_set(0, DIGEST_ADDR);
    a.agu_set(1, DIGEST_ADDR_B);
    emit_sha_body(&mut a, &[(0, 1, 0), (2, 3, 1)], na);
    let image = a.assemble()?.image;
    Ok((
        image,
        vec![(0, 0, padded_words(msg_a)), (2, 0, padded_words(msg_b))],
    ))
}

pub fn read_digest(memory: &[u32], addr: u32) -> [u8; 32] {
    let mut d = [0u8; 32];
    for i in 0..8 {
        d[4 * i..4 * i + 4].copy_from_slice(&memory[addr as usize + i].to_le_bytes());
    }
    d
}
