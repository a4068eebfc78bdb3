//! Quantized CNN layer benchmark: multi-channel 3x3 valid convolution,
//! ReLU, 2x2 max pooling (stride 2) and int8 quantization, computed by the
//! CNN-MAC/CNN-SUM slots with streamed line buffers, plus an exact integer
//! reference oracle.

use serde::{Deserialize, Serialize};

use crate::isa::ProgramImage;
use crate::kernels::cnn::{sum_step, QuantParams};

use super::builder::{param_err, Asm, GenError};

// fabric memory map
pub const ADDR_WEIGHTS: u32 = 0;
pub const ADDR_CFG: u32 = 128; // W, C, scale bits, zero point
pub const CONV_OUT_ADDR: u32 = 256;
pub const POOL_OUT_ADDR: u32 = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvLayerProblem {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Input pixels, channel-major: `pixels[ch*H*W + r*W + c]`.
    pub pixels: Vec<i8>,
    /// One 3x3 kernel per channel, row-major: `weights[ch*9 + i*3 + j]`.
    pub weights: Vec<i8>,
    pub scale: f32,
    pub zero_point: i8,
}

impl ConvLayerProblem {
    pub fn conv_dims(&self) -> (usize, usize) {
        (self.height - 2, self.width - 2)
    }

    pub fn pool_dims(&self) -> (usize, usize) {
        let (r, w) = self.conv_dims();
        (r / 2, w / 2)
    }

    fn px(&self, ch: usize, r: usize, c: usize) -> i8 {
        self.pixels[ch * self.height * self.width + r * self.width + c]
    }

    fn check(&self) -> Result<(), GenError> {
        if self.height < 4 || self.width < 4 {
            return Err(param_err("image must be at least 4x4"));
        }
        if self.channels == 0 || self.width * self.channels > crate::kernels::cnn::MAX_ROW_LEN {
            return Err(param_err(format!(
                "unsupported channel count {} for width {}",
                self.channels, self.width
            )));
        }
        if self.channels * 9 > ADDR_CFG as usize {
            return Err(param_err("weight table exceeds the config block address"));
        }
        let (rout, wout) = self.conv_dims();
        if (rout * wout) as u32 > POOL_OUT_ADDR - CONV_OUT_ADDR {
            return Err(param_err("conv plane exceeds the pool output address"));
        }
        if self.pixels.len() != self.channels * self.height * self.width {
            return Err(param_err("pixel buffer length mismatch"));
        }
        if self.weights.len() != self.channels * 9 {
            return Err(param_err("weight buffer length mismatch"));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(param_err("scale must be positive and finite"));
        }
        Ok(())
    }
}

/// Exact integer reference for the raw convolution: `out[r][c]` summed over
/// all channels, valid windows only (dims `(H-2) x (W-2)`).
pub fn ref_conv(p: &ConvLayerProblem) -> Vec<i32> {
    let (rout, wout) = p.conv_dims();
    let mut out = vec![0i32; rout * wout];
    for r in 0..rout {
        for c in 0..wout {
            let mut acc = 0i32;
            for ch in 0..p.channels {
                for i in 0..3 {
                    for j in 0..3 {
                        acc += p.weights[ch * 9 + i * 3 + j] as i32
                            * p.px(ch, r + i, c + j) as i32;
                    }
                }
            }
            out[r * wout + c] = acc;
        }
    }
    out
}

/// Full layer reference: convolution, then per-2x2-window ReLU, max pool and
/// quantization. Output is `(Rout/2) x (Wout/2)` row-major int8.
pub fn ref_conv_layer(p: &ConvLayerProblem) -> Vec<i8> {
    let conv = ref_conv(p);
    let (_, wout) = p.conv_dims();
    let (pr, pw) = p.pool_dims();
    let q = QuantParams {
        scale: p.scale,
        zero_point: p.zero_point,
    };
    let mut out = vec![0i8; pr * pw];
    for r in 0..pr {
        for c in 0..pw {
            let win = [
                conv[(2 * r) * wout + 2 * c],
                conv[(2 * r) * wout + 2 * c + 1],
                conv[(2 * r + 1) * wout + 2 * c],
                conv[(2 * r + 1) * wout + 2 * c + 1],
            ];
            out[r * pw + c] = sum_step(q, win);
        }
    }
    out
}

/// Stream payloads for the MAC line buffers: `(slot, channel, words)`.
pub type StreamPayload = Vec<(usize, usize, Vec<u32>)>;

#[derive(Debug, Clone, Copy)]
pub struct CnnMarkers {
    /// VLIW index of the channel-loop MAC step.
    pub mac_pc: u32,
    /// Windows computed per MAC slot over the whole layer.
    pub windows_per_mac: u64,
    /// Expected retirements of `mac_pc`: channels x windows_per_mac.
    pub expected_mac_retires: u64,
}

/// Line-buffer feed for one MAC slot: for each assigned output row `r`,
/// stream channel `k` carries input row `r + k` of every image channel back
/// to back (`W * C` words per output row).
fn mac_streams(p: &ConvLayerProblem, slot: usize, rows: impl Iterator<Item = usize> + Clone) -> StreamPayload {
    let mut payload = Vec::new();
    for k in 0..3 {
        let mut words = Vec::new();
        for r in rows.clone() {
            for ch in 0..p.channels {
                for c in 0..p.width {
                    words.push(p.px(ch, r + k, c) as u8 as u32);
                }
            }
        }
        payload.push((slot, k, words));
    }
    payload
}

/// Generate the CNN layer SI with one or two CNN-MAC slots. With two MACs
/// the even/odd output rows are computed in parallel, which requires an even
/// conv-row count.
pub fn gen_cnn_program(
    p: &ConvLayerProblem,
    macs: usize,
) -> Result<(ProgramImage, StreamPayload, CnnMarkers), GenError> {
    p.check()?;
    let (rout, wout) = p.conv_dims();
    let (pr, pw) = p.pool_dims();
    if pr == 0 || pw == 0 {
        return Err(param_err("layer too small for 2x2 pooling"));
    }
    let sum_slot = match macs {
        1 => 1,
        2 => {
            if rout % 2 != 0 {
                return Err(param_err(format!(
                    "two-MAC layout needs an even conv-row count, got {rout}"
                )));
            }
            2
        }
        _ => return Err(param_err(format!("MAC slot count {macs} not in 1..=2"))),
    };
    let row_trips = rout / macs;

    let mut a = Asm::new();
    for s in 0..macs {
        a.slotbind(s, "CNN_MAC");
    }
    a.slotbind(sum_slot, "CNN_SUM");

    // memory: per-channel weights at 0, config block at 16
    let mut mem = vec![0u32; ADDR_CFG as usize + 4];
    for (i, &w) in p.weights.iter().enumerate() {
        mem[ADDR_WEIGHTS as usize + i] = w as u8 as u32;
    }
    mem[ADDR_CFG as usize] = p.width as u32;
    mem[ADDR_CFG as usize + 1] = p.channels as u32;
    mem[ADDR_CFG as usize + 2] = p.scale.to_bits();
    mem[ADDR_CFG as usize + 3] = p.zero_point as u8 as u32;
    for w in &mem {
        a.word(*w);
    }

    // configure the kernels from the config block (a7 walks it)
    for s in 0..macs {
        a.agu_set(7, ADDR_CFG);
        a.stmt(format!("slot{s}: CFG mem[a7], mem[a7]"));
    }
    a.stmt(format!("slot{sum_slot}: SET_SCALE mem[a7]"));
    a.stmt(format!("slot{sum_slot}: SET_ZP mem[a7]"));

    // conv output cursors: slot s writes its rows interleaved at 256
    a.agu_set(2, CONV_OUT_ADDR);
    if macs == 2 {
        a.agu_set(3, CONV_OUT_ADDR + wout as u32);
    }

    a.set_dest(0, "ROW");
    a.cnt_reset(0);
    a.bind("ROW");
    a.set_dest(1, "COL");
    a.cnt_reset(1);
    a.bind("COL");
    for s in 0..macs {
        a.agu_set(s as u8, ADDR_WEIGHTS);
    }
    a.set_dest(2, "CH");
    a.cnt_reset(2);
    a.bind("CH");
    for k in 0..9 {
        let clauses: Vec<String> = (0..macs)
            .map(|s| format!("slot{s}: SET_WEIGHT imm[{k}], mem[a{s}]"))
            .collect();
        a.stmt(clauses.join(" | "));
    }
    let mac_clauses: Vec<String> = (0..macs).map(|s| format!("slot{s}: MAC_CH")).collect();
    let mac_pc = a.stmt(format!(
        "{} | ctrl: PS_CNT_INC p2 ; JMP_IF_CNT_LT p2, {}",
        mac_clauses.join(" | "),
        p.channels
    ));
    let rd: Vec<String> = (0..macs)
        .map(|s| format!("slot{s}: RD_ACC -> mem[a{}]", s + 2))
        .collect();
    a.stmt(rd.join(" | "));
    let nw: Vec<String> = (0..macs).map(|s| format!("slot{s}: NEXT_WIN")).collect();
    a.stmt(nw.join(" | "));
    a.back_edge(1, wout as u32);
    let nr: Vec<String> = (0..macs).map(|s| format!("slot{s}: NEXT_ROW")).collect();
    a.stmt(nr.join(" | "));
    if macs == 2 {
        // each cursor skips the row the other MAC wrote
        a.agu_add(2, wout as u32);
        a.agu_add(3, wout as u32);
    }
    a.back_edge(0, row_trips as u32);

    // pooling over the conv plane: a4/a5 walk a row pair, a6 the output
    a.agu_set(4, CONV_OUT_ADDR);
    a.agu_set(5, CONV_OUT_ADDR + wout as u32);
    a.agu_set(6, POOL_OUT_ADDR);
    let hop = (2 * wout - 2 * pw) as u32;
    a.set_dest(0, "PROW");
    a.cnt_reset(0);
    a.bind("PROW");
    a.set_dest(1, "PCOL");
    a.cnt_reset(1);
    a.bind("PCOL");
    for _ in 0..2 {
        a.stmt(format!("slot{sum_slot}: ACC_PUSH mem[a4]"));
    }
    for _ in 0..2 {
        a.stmt(format!("slot{sum_slot}: ACC_PUSH mem[a5]"));
    }
    a.stmt(format!("slot{sum_slot}: SUM_STEP -> mem[a6]"));
    a.back_edge(1, pw as u32);
    a.agu_add(4, hop);
    a.agu_add(5, hop);
    a.back_edge(0, pr as u32);
    a.stmt("nop");

    let image = a.assemble()?.image;
    let mut streams = Vec::new();
    for s in 0..macs {
        streams.extend(mac_streams(p, s, (0..rout).skip(s).step_by(macs)));
    }
    let windows = (row_trips * wout) as u64;
    let markers = CnnMarkers {
        mac_pc,
        windows_per_mac: windows,
        expected_mac_retires: windows * p.channels as u64,
    };
    Ok((image, streams, markers))
}

/// Read the quantized pooled output written by the SI.
pub fn read_pool_output(memory: &[u32], p: &ConvLayerProblem) -> Vec<i8> {
    let (pr, pw) = p.pool_dims();
    (0..pr * pw)
        .map(|i| memory[POOL_OUT_ADDR as usize + i] as u8 as i8)
        .collect()
}

pub fn read_conv_output(memory: &[u32], p: &ConvLayerProblem) -> Vec<i32> {
    let (rout, wout) = p.conv_dims();
    (0..rout * wout)
        .map(|i| memory[CONV_OUT_ADDR as usize + i] as i32)
        .collect()
}
