//! SIFT feature-match benchmark: reference squared-distance oracle and the
//! four-slot microcode generator.
//!
//! The distance is accumulated in four stride-4 partitions (one per FMAV
//! slot) and combined with a two-level tree sum. The oracle applies the
//! identical binary32 operation order, so comparison is bit-exact.

use serde::{Deserialize, Serialize};

use crate::isa::ProgramImage;

use super::builder::{param_err, Asm, GenError};

/// Fixed capacity of one stride partition in fabric memory; bounds n.
pub const CHUNK_WORDS: u32 = 256;
pub const MAX_N: usize = (CHUNK_WORDS as usize) * 4;
/// Word address the SI writes the final distance to.
pub const RESULT_ADDR: u32 = 2048;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiftProblem {
    pub a: Vec<f32>,
    pub b: Vec<f32>,
}

impl SiftProblem {
    pub fn n(&self) -> usize {
        self.a.len()
    }
}

/// Reference squared euclidean distance with the partitioned summation
/// order of the four-slot SI: acc_k = sum over i = k mod 4 of (a_i-b_i)^2
/// (each subtract, square and add rounded to binary32), then
/// (acc0+acc1)+(acc2+acc3).
pub fn ref_sift_match(p: &SiftProblem) -> f32 {
    assert_eq!(p.a.len(), p.b.len(), "vectors equal length");
    let mut acc = [0f32; 4];
    for i in 0..p.a.len() {
        let d = p.a[i] - p.b[i];
        acc[i % 4] += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Generate the SIFT-match SI. Only the loop-trip operand depends on `n`
/// beyond the memory segment, so re-parameterizing the feature count never
/// changes the rest of the program.
pub fn gen_sift_program(p: &SiftProblem) -> Result<ProgramImage, GenError> {
    let n = p.n();
    if n == 0 || n > MAX_N {
        return Err(param_err(format!("feature count {n} outside 1..={MAX_N}")));
    }
    if p.a.len() != p.b.len() {
        return Err(param_err("feature vectors differ in length".to_string()));
    }
    let trips = n.div_ceil(4) as u32;

    let mut a = Asm::new();
    for slot in 0..4 {
        a.slotbind(slot, "FMAV");
    }
    // memory: four zero-padded a-partitions at 0,256,512,768; four
    // b-partitions at 1024..; result at 2048
    let mut memory = vec![0u32; (RESULT_ADDR + 1) as usize];
    for (i, (&av, &bv)) in p.a.iter().zip(&p.b).enumerate() {
        let base = (i % 4) as u32 * CHUNK_WORDS + (i / 4) as u32;
        memory[base as usize] = av.to_bits();
        memory[(base + 4 * CHUNK_WORDS) as usize] = bv.to_bits();
    }
    for w in &memory {
        a.word(*w);
    }

    for k in 0..4u8 {
        a.agu_set(k, k as u32 * CHUNK_WORDS);
        a.agu_set(k + 4, (k as u32 + 4) * CHUNK_WORDS);
    }
    a.set_dest(0, "LOOP");
    a.cnt_reset(0);
    a.bind("LOOP");
    a.stmt(format!(
        "slot0: SUBSQ_ACC mem[a0], mem[a4] | slot1: SUBSQ_ACC mem[a1], mem[a5] \
         | slot2: SUBSQ_ACC mem[a2], mem[a6] | slot3: SUBSQ_ACC mem[a3], mem[a7] \
         | ctrl: PS_CNT_INC p0 ; JMP_IF_CNT_LT p0, {trips}"
    ));
    // tree sum: read all four accumulators, pair-add, final add to memory
    a.agu_set(0, RESULT_ADDR);
    a.stmt("slot0: RD_ACC -> out | slot1: RD_ACC -> out | slot2: RD_ACC -> out | slot3: RD_ACC -> out");
    a.stmt("slot0: ADD out[0], out[1] -> out | slot1: ADD out[2], out[3] -> out");
    a.stmt("slot0: ADD out[0], out[1] -> mem[a0]");

    Ok(a.assemble()?.image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{ControllerConfig, Machine};
    use crate::fabric::FabricConfig;

    fn run_si(p: &SiftProblem) -> f32 {
        let img = gen_sift_program(p).unwrap();
        let mut m = Machine::boot(&img, ControllerConfig::default(), &FabricConfig::default()).unwrap();
        let out = m.run().unwrap();
        assert!(out.trap.is_none(), "trap: {:?}", out.trap);
        f32::from_bits(m.fabric.memory[RESULT_ADDR as usize])
    }

    #[test]
    fn oracle_identical_vectors_is_zero() {
        let v = vec![1.5f32, -2.0, 3.25, 0.0, 9.0];
        let p = SiftProblem { a: v.clone(), b: v };
        assert_eq!(ref_sift_match(&p), 0.0);
    }

    #[test]
    fn oracle_small_example() {
        let p = SiftProblem { a: vec![2.0, 0.0], b: vec![0.0, 1.0] };
        assert_eq!(ref_sift_match(&p), 5.0);
    }

    #[test]
    fn si_matches_oracle_small() {
        for n in [1usize, 2, 3, 4, 5, 7, 8, 9, 16] {
            let a: Vec<f32> = (0..n).map(|i| (i as f32) * 0.5 - 1.0).collect();
            let b: Vec<f32> = (0..n).map(|i| (i as f32) * -0.25 + 2.0).collect();
            let p = SiftProblem { a, b };
            let want = ref_sift_match(&p);
            let got = run_si(&p);
            assert_eq!(got.to_bits(), want.to_bits(), "n={n} got {got} want {want}");
        }
    }

    #[test]
    fn programs_differ_only_in_loop_operand() {
        let mk = |n: usize| {
            let a: Vec<f32> = (0..n).map(|i| i as f32).collect();
            let b = vec![0.0; n];
            gen_sift_program(&SiftProblem { a, b }).unwrap()
        };
        let p8 = mk(8);
        let p16 = mk(16);
        assert_eq!(p8.words.len(), p16.words.len());
        let diffs: Vec<usize> = (0..p8.words.len()).filter(|&i| p8.words[i] != p16.words[i]).collect();
        assert_eq!(diffs.len(), 1, "exactly one differing VLIW");
    }

    #[test]
    fn rejects_out_of_range_n() {
        let p = SiftProblem { a: vec![0.0; MAX_N + 1], b: vec![0.0; MAX_N + 1] };
        assert!(gen_sift_program(&p).is_err());
    }
}
