//! Quantized CNN accelerator models: CNN-MAC (3x3 window multiply-accumulate
//! fed by three streaming line buffers) and CNN-SUM (ReLU activation, 2x2 max
//! pooling, quantization).
//!
//! The datapath is int8 x int8 -> int32. Pixels arrive one per 32-bit stream
//! word (low byte, signed). With C input channels the row buffers hold the
//! rows of all channels back to back (channel-blocked, C*W pixels per row),
//! and MAC_CH walks the channel blocks with an internal offset cursor.

use std::io::{self, Read, Write};

use crate::isa::KernelKind;

use super::{fault, Exec, Kernel, KernelFault, Streams};

pub const MAX_ROW_LEN: usize = 2048;

// CNN_MAC opcodes
pub const MAC_CFG: u8 = 1;
pub const MAC_SET_WEIGHT: u8 = 2;
pub const MAC_MAC_CH: u8 = 3;
pub const MAC_RD_ACC: u8 = 4;
pub const MAC_NEXT_WIN: u8 = 5;
pub const MAC_NEXT_ROW: u8 = 6;

// CNN_SUM opcodes
pub const SUM_SET_SCALE: u8 = 1;
pub const SUM_SET_ZP: u8 = 2;
pub const SUM_ACC_PUSH: u8 = 3;
pub const SUM_SUM_STEP: u8 = 4;

/// Three row buffers of signed 8-bit pixels.
#[derive(Debug, Clone, Default)]
pub struct LineBufferBank {
    pub rows: [Vec<i8>; 3],
    pub row_len: usize,
}

impl LineBufferBank {
    pub fn new(row_len: usize) -> LineBufferBank {
        LineBufferBank {
            rows: Default::default(),
            row_len,
        }
    }

    pub fn push_pixel(&mut self, row: usize, px: i8) -> Result<(), KernelFault> {
        if self.rows[row].len() >= self.row_len {
            return Err(fault(format!("line buffer row {row} overflow past {}", self.row_len)));
        }
        self.rows[row].push(px);
        Ok(())
    }

    /// A 3x3 window at column x is readable iff all three rows hold at
    /// least x+3 pixels.
    pub fn window_ready(&self, x: usize) -> bool {
        self.rows.iter().all(|r| r.len() >= x + 3)
    }

    pub fn clear(&mut self) {
        for r in &mut self.rows {
            r.clear();
        }
    }
}

/// 3x3 weight set plus running accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct MacState {
    pub weights: [[i8; 3]; 3],
    pub acc: i32,
}

/// Accumulate one 3x3 window at column `x`. Exact integer arithmetic.
pub fn mac_window(st: &mut MacState, bank: &LineBufferBank, x: usize) -> Result<i32, KernelFault> {
    if !bank.window_ready(x) {
        return Err(fault(format!("window at column {x} not ready")));
    }
    for i in 0..3 {
        for j in 0..3 {
            st.acc += st.weights[i][j] as i32 * bank.rows[i][x + j] as i32;
        }
    }
    Ok(st.acc)
}

#[derive(Debug, Clone, Copy)]
pub struct QuantParams {
    pub scale: f32,
    pub zero_point: i8,
}

impl Default for QuantParams {
    fn default() -> Self {
        QuantParams {
            scale: 1.0,
            zero_point: 0,
        }
    }
}

/// ReLU each of the four pooled accumulators, 2x2 max pool, then quantize:
/// round-to-nearest-even(value * scale) + zero_point, clamped to [-128, 127].
pub fn sum_step(q: QuantParams, pool_window: [i32; 4]) -> i8 {
    let m = pool_window.iter().map(|&v| v.max(0)).max().unwrap();
    let scaled = (m as f32 * q.scale).round_ties_even() as i64 + q.zero_point as i64;
    scaled.clamp(-128, 127) as i8
}

// ---------------------------------------------------------------------------
// Kernel impls

#[derive(Default)]
pub struct CnnMacKernel {
    pub bank: LineBufferBank,
    pub mac: MacState,
    /// Image row length W (pixels per channel).
    pub width: usize,
    pub channels: usize,
    /// Current window column.
    pub col: usize,
    /// Channel-block offset inside the row buffers; MAC_CH advances it by W.
    pub ch_off: usize,
}

impl CnnMacKernel {
    fn drain(&mut self, streams: &mut Streams) {
        let cap = self.bank.row_len;
        for k in 0..3 {
            while self.bank.rows[k].len() < cap {
                match streams[k].pop_front() {
                    Some(w) => self.bank.rows[k].push(w as u8 as i8),
                    None => break,
                }
            }
        }
    }
}

impl Kernel for CnnMacKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::CnnMac
    }

    fn would_stall(&self, op: u8, streams: &Streams) -> bool {
        if op != MAC_MAC_CH {
            return false;
        }
        let need = self.ch_off + self.col + 3;
        // stall unless every row either holds the window already or can be
        // topped up from its stream this cycle
        (0..3).any(|k| self.bank.rows[k].len() + streams[k].len() < need)
    }

    fn exec(&mut self, op: u8, a: u32, b: u32, streams: &mut Streams) -> Result<Exec, KernelFault> {
        match op {
            MAC_CFG => {
                let w = a as usize;
                let c = b as usize;
                if w < 3 || c == 0 || w * c > MAX_ROW_LEN {
                    return Err(fault(format!("bad CNN_MAC config W={w} C={c}")));
                }
                self.width = w;
                self.channels = c;
                self.bank = LineBufferBank::new(w * c);
                self.mac = MacState::default();
                self.col = 0;
                self.ch_off = 0;
                Ok(Exec::default())
            }
            MAC_SET_WEIGHT => {
                let idx = a as usize;
                if idx > 8 {
                    return Err(fault(format!("weight index {idx} out of range")));
                }
                self.mac.weights[idx / 3][idx % 3] = b as u8 as i8;
                Ok(Exec::default())
            }
            MAC_MAC_CH => {
                self.drain(streams);
                let x = self.ch_off + self.col;
                let acc = mac_window(&mut self.mac, &self.bank, x)?;
                self.ch_off += self.width;
                Ok(Exec {
                    out: acc as u32,
                    ..Exec::default()
                })
            }
            MAC_RD_ACC => Ok(Exec {
                out: self.mac.acc as u32,
                ..Exec::default()
            }),
            MAC_NEXT_WIN => {
                self.mac.acc = 0;
                self.ch_off = 0;
                self.col += 1;
                Ok(Exec::default())
            }
            MAC_NEXT_ROW => {
                self.bank.clear();
                self.mac.acc = 0;
                self.ch_off = 0;
                self.col = 0;
                Ok(Exec::default())
            }
            _ => Err(fault(format!("undefined CNN_MAC opcode {op}"))),
        }
    }

    fn tick(&mut self, streams: &mut Streams) {
        if self.bank.row_len > 0 {
            self.drain(streams);
        }
    }
}

#[derive(Default)]
pub struct CnnSumKernel {
    pub quant: QuantParams,
    /// Last four pushed accumulators, oldest first.
    pub window: [i32; 4],
}

impl Kernel for CnnSumKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::CnnSum
    }

    fn exec(&mut self, op: u8, a: u32, _b: u32, _s: &mut Streams) -> Result<Exec, KernelFault> {
        match op {
            SUM_SET_SCALE => {
                let s = f32::from_bits(a);
                if !(s > 0.0) || !s.is_finite() {
                    return Err(fault(format!("quantization scale must be positive, got {s}")));
                }
                self.quant.scale = s;
                Ok(Exec::default())
            }
            SUM_SET_ZP => {
                self.quant.zero_point = a as u8 as i8;
                Ok(Exec::default())
            }
            SUM_ACC_PUSH => {
                self.window.rotate_left(1);
                self.window[3] = a as i32;
                Ok(Exec::default())
            }
            SUM_SUM_STEP => {
                let q = sum_step(self.quant, self.window);
                Ok(Exec {
                    out: q as i32 as u32,
                    ..Exec::default()
                })
            }
            _ => Err(fault(format!("undefined CNN_SUM opcode {op}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// pixel/weight container files: magic "RFNN" | H:u32 | W:u32 | C:u32 then
// C*H*W signed bytes, row-major per channel

pub const RFNN_MAGIC: [u8; 4] = *b"RFNN";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
    pub data: Vec<i8>,
}

pub fn write_rfnn(w: &mut impl Write, g: &PixelGrid) -> io::Result<()> {
    assert_eq!(g.data.len(), (g.height * g.width * g.channels) as usize);
    w.write_all(&RFNN_MAGIC)?;
    w.write_all(&g.height.to_le_bytes())?;
    w.write_all(&g.width.to_le_bytes())?;
    w.write_all(&g.channels.to_le_bytes())?;
    let bytes: Vec<u8> = g.data.iter().map(|&p| p as u8).collect();
    w.write_all(&bytes)
}

pub fn read_rfnn(r: &mut impl Read) -> io::Result<PixelGrid> {
    let mut hdr = [0u8; 16];
    r.read_exact(&mut hdr)?;
    if hdr[0..4] != RFNN_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad RFNN magic"));
    }
    let height = u32::from_le_bytes(hdr[4..8].try_into().unwrap());
    let width = u32::from_le_bytes(hdr[8..12].try_into().unwrap());
    let channels = u32::from_le_bytes(hdr[12..16].try_into().unwrap());
    let n = height
        .checked_mul(width)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "RFNN dims overflow"))?;
    let mut data = vec![0u8; n as usize];
    r.read_exact(&mut data)?;
    Ok(PixelGrid {
        height,
        width,
        channels,
        data: data.into_iter().map(|b| b as i8).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_ready_after_three_pixels_per_row() {
        let mut bank = LineBufferBank::new(8);
        for row in 0..3 {
            for _ in 0..3 {
                bank.push_pixel(row, 1).unwrap();
            }
        }
        assert!(bank.window_ready(0));
        assert!(!bank.window_ready(1));
    }

    #[test]
    fn two_rows_filled_is_not_ready() {
        let mut bank = LineBufferBank::new(8);
        for row in 0..2 {
            for _ in 0..3 {
                bank.push_pixel(row, 1).unwrap();
            }
        }
        assert!(!bank.window_ready(0));
    }

    #[test]
    fn push_past_row_len_faults() {
        let mut bank = LineBufferBank::new(2);
        bank.push_pixel(0, 1).unwrap();
        bank.push_pixel(0, 1).unwrap();
        assert!(bank.push_pixel(0, 1).is_err());
    }

    #[test]
    fn mac_window_all_ones_is_nine() {
        let mut bank = LineBufferBank::new(4);
        for row in 0..3 {
            for _ in 0..4 {
                bank.push_pixel(row, 1).unwrap();
            }
        }
        let mut st = MacState {
            weights: [[1; 3]; 3],
            acc: 0,
        };
        assert_eq!(mac_window(&mut st, &bank, 0).unwrap(), 9);
    }

    #[test]
    fn mac_window_identity_center() {
        let mut bank = LineBufferBank::new(4);
        let px = [[1i8, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12]];
        for row in 0..3 {
            for c in 0..4 {
                bank.push_pixel(row, px[row][c]).unwrap();
            }
        }
        let mut weights = [[0i8; 3]; 3];
        weights[1][1] = 1;
        let mut st = MacState { weights, acc: 10 };
        assert_eq!(mac_window(&mut st, &bank, 1).unwrap(), 10 + 7);
    }

    #[test]
    fn mac_window_matches_nine_term_sum() {
        // deterministic pseudo-random weights/pixels vs direct sum
        let mut seed = 0x12345678u32;
        let mut next = move || {
            seed = seed.wrapping_mul(1664525).wrapping_add(1013904223);
            (seed >> 16) as u8 as i8
        };
        for _ in 0..200 {
            let mut bank = LineBufferBank::new(8);
            let mut px = [[0i8; 8]; 3];
            for row in 0..3 {
                for c in 0..8 {
                    px[row][c] = next();
                    bank.push_pixel(row, px[row][c]).unwrap();
                }
            }
            let mut weights = [[0i8; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    weights[i][j] = next();
                }
            }
            let x = (next() as u8 % 6) as usize;
            let mut st = MacState { weights, acc: 0 };
            let got = mac_window(&mut st, &bank, x).unwrap();
            let mut want = 0i32;
            for i in 0..3 {
                for j in 0..3 {
                    want += weights[i][j] as i32 * px[i][x + j] as i32;
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn sum_step_all_negative_gives_zero_point() {
        let q = QuantParams {
            scale: 0.37,
            zero_point: 5,
        };
        assert_eq!(sum_step(q, [-5, -1, -9, -2]), 5);
    }

    #[test]
    fn sum_step_unit_scale() {
        let q = QuantParams {
            scale: 1.0,
            zero_point: 0,
        };
        assert_eq!(sum_step(q, [0, 10, 3, 7]), 10);
    }

    #[test]
    fn sum_step_clamps() {
        let q = QuantParams {
            scale: 1.0,
            zero_point: 0,
        };
        assert_eq!(sum_step(q, [1000, 0, 0, 0]), 127);
    }

    #[test]
    fn rfnn_round_trip() {
        let g = PixelGrid {
            height: 2,
            width: 3,
            channels: 2,
            data: vec![-1, 2, -3, 4, -5, 6, 7, -8, 9, -10, 11, -12],
        };
        let mut buf = Vec::new();
        write_rfnn(&mut buf, &g).unwrap();
        let back = read_rfnn(&mut buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }
}
