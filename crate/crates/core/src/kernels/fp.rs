//! IEEE-754 binary32 accelerator models: FMAV (add/sub/mul/accumulate),
//! DIV, SQRT and UTIL (min/max/abs/compare).
//!
//! All results are rounded to nearest-even binary32, one rounding per
//! arithmetic step. The error line is set iff the result is NaN or an
//! infinity produced from finite operands.

use crate::isa::KernelKind;

use super::{fault, Exec, Kernel, KernelFault, Streams};

// FMAV opcodes
pub const FMAV_ADD: u8 = 1;
pub const FMAV_SUB: u8 = 2;
pub const FMAV_MUL: u8 = 3;
pub const FMAV_SUBSQ_ACC: u8 = 4;
pub const FMAV_MAC: u8 = 5;
pub const FMAV_CLR_ACC: u8 = 6;
pub const FMAV_RD_ACC: u8 = 7;

// UTIL opcodes
pub const UTIL_MIN: u8 = 1;
pub const UTIL_MAX: u8 = 2;
pub const UTIL_ABS: u8 = 3;
pub const UTIL_CMP: u8 = 4;

/// UTIL 2-bit control codes.
pub const CTRL_EQ: u8 = 0b00;
pub const CTRL_LT: u8 = 0b01;
pub const CTRL_GT: u8 = 0b10;
pub const CTRL_NAN: u8 = 0b11;

fn error_line(out: f32, a: f32, b: f32) -> bool {
    out.is_nan() || (out.is_infinite() && a.is_finite() && b.is_finite())
}

fn fp_exec_result(out: f32, a: f32, b: f32) -> Exec {
    // ctrl bit1 = error line, bit0 = result is +/-0.
    let err = error_line(out, a, b);
    let zero = out.to_bits() & 0x7fff_ffff == 0;
    Exec {
        out: out.to_bits(),
        ctrl: ((err as u8) << 1) | zero as u8,
        error: err,
    }
}

/// FMAV accumulator state.
#[derive(Debug, Default, Clone, Copy)]
pub struct FmavState {
    pub acc: f32,
}

/// One FMAV operation. SUBSQ_ACC performs `acc += (a-b)*(a-b)` with a
/// rounding after the subtract, after the square and after the final add.
pub fn fmav_exec(op: u8, a: f32, b: f32, st: &mut FmavState) -> Result<Exec, KernelFault> {
    let out = match op {
        FMAV_ADD => a + b,
        FMAV_SUB => a - b,
        FMAV_MUL => a * b,
        FMAV_SUBSQ_ACC => {
            let d = a - b;
            st.acc += d * d;
            st.acc
        }
        FMAV_MAC => {
            st.acc += a * b;
            st.acc
        }
        FMAV_CLR_ACC => {
            st.acc = 0.0;
            st.acc
        }
        FMAV_RD_ACC => st.acc,
        _ => return Err(fault(format!("undefined FMAV opcode {op}"))),
    };
    Ok(fp_exec_result(out, a, b))
}

pub fn div_exec(a: f32, b: f32) -> Exec {
    fp_exec_result(a / b, a, b)
}

pub fn sqrt_exec(a: f32) -> Exec {
    fp_exec_result(a.sqrt(), a, 0.0)
}

/// Compare two binary32 values into a UTIL control code.
pub fn util_cmp_code(a: f32, b: f32) -> u8 {
    if a.is_nan() || b.is_nan() {
        CTRL_NAN
    } else if a < b {
        CTRL_LT
    } else if a > b {
        CTRL_GT
    } else {
        CTRL_EQ
    }
}

pub fn util_exec(op: u8, a: f32, b: f32) -> Result<Exec, KernelFault> {
    let code = util_cmp_code(a, b);
    let out = match op {
        UTIL_MIN => {
            if code == CTRL_NAN {
                f32::NAN
            } else if code == CTRL_GT {
                b
            } else {
                a
            }
        }
        UTIL_MAX => {
            if code == CTRL_NAN {
                f32::NAN
            } else if code == CTRL_LT {
                b
            } else {
                a
            }
        }
        UTIL_ABS => f32::from_bits(a.to_bits() & 0x7fff_ffff),
        UTIL_CMP => a,
        _ => return Err(fault(format!("undefined UTIL opcode {op}"))),
    };
    let ctrl = if op == UTIL_ABS {
        if out.is_nan() {
            CTRL_NAN
        } else {
            CTRL_EQ
        }
    } else {
        code
    };
    Ok(Exec {
        out: out.to_bits(),
        ctrl,
        error: out.is_nan(),
    })
}

// ---------------------------------------------------------------------------
// Kernel impls

#[derive(Default)]
pub struct FmavKernel {
    pub state: FmavState,
}

impl Kernel for FmavKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::Fmav
    }

    fn exec(&mut self, op: u8, a: u32, b: u32, _s: &mut Streams) -> Result<Exec, KernelFault> {
        fmav_exec(op, f32::from_bits(a), f32::from_bits(b), &mut self.state)
    }
}

pub struct DivKernel;

impl Kernel for DivKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::Div
    }

    fn exec(&mut self, op: u8, a: u32, b: u32, _s: &mut Streams) -> Result<Exec, KernelFault> {
        if op != 1 {
            return Err(fault(format!("undefined DIV opcode {op}")));
        }
        Ok(div_exec(f32::from_bits(a), f32::from_bits(b)))
    }
}

pub struct SqrtKernel;

impl Kernel for SqrtKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::Sqrt
    }

    fn exec(&mut self, op: u8, a: u32, _b: u32, _s: &mut Streams) -> Result<Exec, KernelFault> {
        if op != 1 {
            return Err(fault(format!("undefined SQRT opcode {op}")));
        }
        Ok(sqrt_exec(f32::from_bits(a)))
    }
}

pub struct UtilKernel;

impl Kernel for UtilKernel {
    fn kind(&self) -> KernelKind {
        KernelKind::Util
    }

    fn exec(&mut self, op: u8, a: u32, b: u32, _s: &mut Streams) -> Result<Exec, KernelFault> {
        util_exec(op, f32::from_bits(a), f32::from_bits(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(bits: u32) -> f32 {
        f32::from_bits(bits)
    }

    #[test]
    fn subsq_acc_identical_inputs_is_zero() {
        let mut st = FmavState::default();
        let e = fmav_exec(FMAV_SUBSQ_ACC, 1.0, 1.0, &mut st).unwrap();
        assert_eq!(f(e.out), 0.0);
        assert_eq!(e.ctrl & 1, 1); // zero flag
        assert!(!e.error);
    }

    #[test]
    fn subsq_acc_accumulates_squares() {
        let mut st = FmavState::default();
        fmav_exec(FMAV_SUBSQ_ACC, 2.0, 0.0, &mut st).unwrap();
        let e = fmav_exec(FMAV_SUBSQ_ACC, 0.0, 1.0, &mut st).unwrap();
        assert_eq!(f(e.out), 5.0);
    }

    #[test]
    fn div_by_zero_sets_error() {
        let e = div_exec(1.0, 0.0);
        assert_eq!(f(e.out), f32::INFINITY);
        assert!(e.error);
        let e = div_exec(0.0, 0.0);
        assert!(f(e.out).is_nan());
        assert!(e.error);
        let e = div_exec(6.0, 3.0);
        assert_eq!(f(e.out), 2.0);
        assert!(!e.error);
    }

    #[test]
    fn sqrt_negative_is_nan_error() {
        let e = sqrt_exec(-1.0);
        assert!(f(e.out).is_nan());
        assert!(e.error);
        let e = sqrt_exec(4.0);
        assert_eq!(f(e.out), 2.0);
        assert!(!e.error);
    }

    #[test]
    fn cmp_codes() {
        assert_eq!(util_exec(UTIL_CMP, 1.0, 1.0).unwrap().ctrl, CTRL_EQ);
        assert_eq!(util_exec(UTIL_CMP, -1.0, 1.0).unwrap().ctrl, CTRL_LT);
        assert_eq!(util_exec(UTIL_CMP, 2.0, 1.0).unwrap().ctrl, CTRL_GT);
        assert_eq!(util_exec(UTIL_CMP, f32::NAN, 1.0).unwrap().ctrl, CTRL_NAN);
    }

    #[test]
    fn max_reports_compare_code() {
        let e = util_exec(UTIL_MAX, -3.0, 2.0).unwrap();
        assert_eq!(f(e.out), 2.0);
        assert_eq!(e.ctrl, CTRL_LT);
    }

    #[test]
    fn abs_clears_sign_bit_only() {
        let e = util_exec(UTIL_ABS, -0.0, 0.0).unwrap();
        assert_eq!(e.out, 0.0f32.to_bits());
        let e = util_exec(UTIL_ABS, -3.5, 0.0).unwrap();
        assert_eq!(f(e.out), 3.5);
    }

    #[test]
    fn min_commutes_for_non_nan() {
        let vals = [-1.5f32, 0.0, 2.25, 1e30, -1e-30];
        for &a in &vals {
            for &b in &vals {
                let x = util_exec(UTIL_MIN, a, b).unwrap().out;
                let y = util_exec(UTIL_MIN, b, a).unwrap().out;
                assert_eq!(f32::from_bits(x), f32::from_bits(y));
            }
        }
    }

    #[test]
    fn cmp_antisymmetric_under_swap() {
        let vals = [-2.0f32, -0.0, 0.0, 3.0, f32::INFINITY, f32::NEG_INFINITY];
        for &a in &vals {
            for &b in &vals {
                let x = util_exec(UTIL_CMP, a, b).unwrap().ctrl;
                let y = util_exec(UTIL_CMP, b, a).unwrap().ctrl;
                match x {
                    CTRL_LT => assert_eq!(y, CTRL_GT),
                    CTRL_GT => assert_eq!(y, CTRL_LT),
                    c => assert_eq!(y, c),
                }
            }
        }
    }
}
