//! VLIW instruction format, sub-instruction encodings and the program
//! image container.
//!
//! One VLIW is 192 bits (24 bytes): five 28-bit slot sub-instructions,
//! a 48-bit controller sub-instruction and 4 reserved bits. Bit numbering
//! is little-endian across the whole word (bit k lives in byte k/8 at
//! position k%8, which matches little-endian bit numbering within three
//! consecutive little-endian u64 lanes).

use std::fmt;

use thiserror::Error;

pub const VLIW_BYTES: usize = 24;
pub const NUM_SLOTS: usize = 5;
pub const NUM_PARAM_SETS: usize = 4;
pub const NUM_AGU_REGS: usize = 8;
/// Destinations are 12-bit VLIW addresses, so a program holds at most 4096 words.
pub const MAX_VLIWS: usize = 4096;
pub const IMAGE_MAGIC: [u8; 4] = *b"RFSI";
pub const IMAGE_VERSION: u16 = 1;

pub type VliwWord = [u8; VLIW_BYTES];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("field {field} out of range: {value}")]
    FieldRange { field: &'static str, value: u32 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("undefined {what} value {value} at bit offset {bit_offset}")]
    Undefined {
        what: &'static str,
        value: u32,
        bit_offset: usize,
    },
    #[error("reserved bits nonzero at bit offset {bit_offset}")]
    ReservedBits { bit_offset: usize },
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("bad magic (expected \"RFSI\")")]
    BadMagic,
    #[error("unsupported image version {0}")]
    BadVersion(u16),
    #[error("truncated image: {0}")]
    Truncated(&'static str),
    #[error("vliw_count {0} exceeds {MAX_VLIWS}")]
    TooManyWords(u32),
    #[error("unknown kernel kind id {0}")]
    UnknownKind(u8),
}

// ---------------------------------------------------------------------------
// bit access helpers

pub fn get_bits(w: &VliwWord, off: usize, width: usize) -> u32 {
    debug_assert!(width <= 32 && off + width <= 192);
    let mut v = 0u32;
    for i in 0..width {
        let bit = off + i;
        if (w[bit / 8] >> (bit % 8)) & 1 != 0 {
            v |= 1 << i;
        }
    }
    v
}

pub fn set_bits(w: &mut VliwWord, off: usize, width: usize, v: u32) {
    debug_assert!(width <= 32 && off + width <= 192);
    debug_assert!(width == 32 || v < (1u32 << width));
    for i in 0..width {
        let bit = off + i;
        if (v >> i) & 1 != 0 {
            w[bit / 8] |= 1 << (bit % 8);
        }
    }
}

// ---------------------------------------------------------------------------
// controller flow sub-instruction

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowOpcode {
    NoJmp,
    AlwJmp,
    JmpIfCntEq,
    JmpIfCntNeq,
    JmpIfCntLt,
    JmpIfCntGt,
    JmpIfAccEq,
    JmpIfAccNeq,
    JmpIfAccLt,
    JmpIfAccGt,
    TrapAlw,
    TrapIfAccEq,
    TrapIfAccNeq,
    TrapIfAccLt,
    TrapIfAccGt,
}

impl FlowOpcode {
    pub fn code(self) -> u8 {
        match self {
            FlowOpcode::NoJmp => 0,
            FlowOpcode::AlwJmp => 1,
            FlowOpcode::JmpIfCntEq => 2,
            FlowOpcode::JmpIfCntNeq => 3,
            FlowOpcode::JmpIfCntLt => 4,
            FlowOpcode::JmpIfCntGt => 5,
            FlowOpcode::JmpIfAccEq => 6,
            FlowOpcode::JmpIfAccNeq => 7,
            FlowOpcode::JmpIfAccLt => 8,
            FlowOpcode::JmpIfAccGt => 9,
            FlowOpcode::TrapAlw => 11,
            FlowOpcode::TrapIfAccEq => 12,
            FlowOpcode::TrapIfAccNeq => 13,
            FlowOpcode::TrapIfAccLt => 14,
            FlowOpcode::TrapIfAccGt => 15,
        }
    }

    pub fn from_code(c: u8) -> Option<FlowOpcode> {
        Some(match c {
            0 => FlowOpcode::NoJmp,
            1 => FlowOpcode::AlwJmp,
            2 => FlowOpcode::JmpIfCntEq,
            3 => FlowOpcode::JmpIfCntNeq,
            4 => FlowOpcode::JmpIfCntLt,
            5 => FlowOpcode::JmpIfCntGt,
            6 => FlowOpcode::JmpIfAccEq,
            7 => FlowOpcode::JmpIfAccNeq,
            8 => FlowOpcode::JmpIfAccLt,
            9 => FlowOpcode::JmpIfAccGt,
            11 => FlowOpcode::TrapAlw,
            12 => FlowOpcode::TrapIfAccEq,
            13 => FlowOpcode::TrapIfAccNeq,
            14 => FlowOpcode::TrapIfAccLt,
            15 => FlowOpcode::TrapIfAccGt,
            _ => return None,
        })
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            FlowOpcode::NoJmp => "NO_JMP",
            FlowOpcode::AlwJmp => "ALW_JMP",
            FlowOpcode::JmpIfCntEq => "JMP_IF_CNT_EQ",
            FlowOpcode::JmpIfCntNeq => "JMP_IF_CNT_NEQ",
            FlowOpcode::JmpIfCntLt => "JMP_IF_CNT_LT",
            FlowOpcode::JmpIfCntGt => "JMP_IF_CNT_GT",
            FlowOpcode::JmpIfAccEq => "JMP_IF_ACC_EQ",
            FlowOpcode::JmpIfAccNeq => "JMP_IF_ACC_NEQ",
            FlowOpcode::JmpIfAccLt => "JMP_IF_ACC_LT",
            FlowOpcode::JmpIfAccGt => "JMP_IF_ACC_GT",
            FlowOpcode::TrapAlw => "TRAP_ALW",
            FlowOpcode::TrapIfAccEq => "TRAP_IF_ACC_EQ",
            FlowOpcode::TrapIfAccNeq => "TRAP_IF_ACC_NEQ",
            FlowOpcode::TrapIfAccLt => "TRAP_IF_ACC_LT",
            FlowOpcode::TrapIfAccGt => "TRAP_IF_ACC_GT",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<FlowOpcode> {
        Some(match s {
            "NO_JMP" => FlowOpcode::NoJmp,
            "ALW_JMP" => FlowOpcode::AlwJmp,
            "JMP_IF_CNT_EQ" => FlowOpcode::JmpIfCntEq,
            "JMP_IF_CNT_NEQ" => FlowOpcode::JmpIfCntNeq,
            "JMP_IF_CNT_LT" => FlowOpcode::JmpIfCntLt,
            "JMP_IF_CNT_GT" => FlowOpcode::JmpIfCntGt,
            "JMP_IF_ACC_EQ" => FlowOpcode::JmpIfAccEq,
            "JMP_IF_ACC_NEQ" => FlowOpcode::JmpIfAccNeq,
            "JMP_IF_ACC_LT" => FlowOpcode::JmpIfAccLt,
            "JMP_IF_ACC_GT" => FlowOpcode::JmpIfAccGt,
            "TRAP_ALW" => FlowOpcode::TrapAlw,
            "TRAP_IF_ACC_EQ" => FlowOpcode::TrapIfAccEq,
            "TRAP_IF_ACC_NEQ" => FlowOpcode::TrapIfAccNeq,
            "TRAP_IF_ACC_LT" => FlowOpcode::TrapIfAccLt,
            "TRAP_IF_ACC_GT" => FlowOpcode::TrapIfAccGt,
            _ => return None,
        })
    }

    /// Jump variants that read the parameter set's destination.
    pub fn is_jump(self) -> bool {
        matches!(
            self,
            FlowOpcode::AlwJmp
                | FlowOpcode::JmpIfCntEq
                | FlowOpcode::JmpIfCntNeq
                | FlowOpcode::JmpIfCntLt
                | FlowOpcode::JmpIfCntGt
                | FlowOpcode::JmpIfAccEq
                | FlowOpcode::JmpIfAccNeq
                | FlowOpcode::JmpIfAccLt
                | FlowOpcode::JmpIfAccGt
        )
    }

    /// Variants whose condition reads the 2-bit control signals of masked slots.
    pub fn is_acc_conditioned(self) -> bool {
        matches!(
            self,
            FlowOpcode::JmpIfAccEq
                | FlowOpcode::JmpIfAccNeq
                | FlowOpcode::JmpIfAccLt
                | FlowOpcode::JmpIfAccGt
                | FlowOpcode::TrapIfAccEq
                | FlowOpcode::TrapIfAccNeq
                | FlowOpcode::TrapIfAccLt
                | FlowOpcode::TrapIfAccGt
        )
    }

    pub fn is_trap(self) -> bool {
        matches!(
            self,
            FlowOpcode::TrapAlw
                | FlowOpcode::TrapIfAccEq
                | FlowOpcode::TrapIfAccNeq
                | FlowOpcode::TrapIfAccLt
                | FlowOpcode::TrapIfAccGt
        )
    }
}

/// Controller flow sub-instruction. NO_JMP ignores every other field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowOp {
    pub opcode: FlowOpcode,
    /// Parameter set id, 0..=3.
    pub param_set: u8,
    /// 12-bit comparison operand (counter value, or control-signal value mod 4).
    pub operand: u16,
    /// 5-bit slot selection mask for ACC-conditioned variants.
    pub acc_mask: u8,
    /// 3-bit user trap value.
    pub trap_value: u8,
}

impl FlowOp {
    pub const NOP: FlowOp = FlowOp {
        opcode: FlowOpcode::NoJmp,
        param_set: 0,
        operand: 0,
        acc_mask: 0,
        trap_value: 0,
    };
}

impl Default for FlowOp {
    fn default() -> Self {
        FlowOp::NOP
    }
}

// ---------------------------------------------------------------------------
// controller aux sub-instruction

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxOpcode {
    Nop,
    PsSetDest,
    PsCntSet,
    PsCntInc,
    PsCntReset,
    AguSet,
    AguAdd,
}

impl AuxOpcode {
    pub fn code(self) -> u8 {
        match self {
            AuxOpcode::Nop => 0,
            AuxOpcode::PsSetDest => 1,
            AuxOpcode::PsCntSet => 2,
            AuxOpcode::PsCntInc => 3,
            AuxOpcode::PsCntReset => 4,
            AuxOpcode::AguSet => 5,
            AuxOpcode::AguAdd => 6,
        }
    }

    pub fn from_code(c: u8) -> Option<AuxOpcode> {
        Some(match c {
            0 => AuxOpcode::Nop,
            1 => AuxOpcode::PsSetDest,
            2 => AuxOpcode::PsCntSet,
            3 => AuxOpcode::PsCntInc,
            4 => AuxOpcode::PsCntReset,
            5 => AuxOpcode::AguSet,
            6 => AuxOpcode::AguAdd,
            _ => return None,
        })
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            AuxOpcode::Nop => "AUX_NOP",
            AuxOpcode::PsSetDest => "PS_SET_DEST",
            AuxOpcode::PsCntSet => "PS_CNT_SET",
            AuxOpcode::PsCntInc => "PS_CNT_INC",
            AuxOpcode::PsCntReset => "PS_CNT_RESET",
            AuxOpcode::AguSet => "AGU_SET",
            AuxOpcode::AguAdd => "AGU_ADD",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<AuxOpcode> {
        Some(match s {
            "AUX_NOP" => AuxOpcode::Nop,
            "PS_SET_DEST" => AuxOpcode::PsSetDest,
            "PS_CNT_SET" => AuxOpcode::PsCntSet,
            "PS_CNT_INC" => AuxOpcode::PsCntInc,
            "PS_CNT_RESET" => AuxOpcode::PsCntReset,
            "AGU_SET" => AuxOpcode::AguSet,
            "AGU_ADD" => AuxOpcode::AguAdd,
            _ => return None,
        })
    }

    /// PS_* opcodes address parameter sets (target 0..=3); AGU_* address AGU
    /// registers (target 0..=7).
    pub fn is_param_set_op(self) -> bool {
        matches!(
            self,
            AuxOpcode::PsSetDest | AuxOpcode::PsCntSet | AuxOpcode::PsCntInc | AuxOpcode::PsCntReset
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxOp {
    pub opcode: AuxOpcode,
    /// Parameter set id (0..=3) for PS_* opcodes, AGU register id (0..=7)
    /// for AGU_* opcodes.
    pub target: u8,
    pub operand: u16,
}

impl AuxOp {
    pub const NOP: AuxOp = AuxOp {
        opcode: AuxOpcode::Nop,
        target: 0,
        operand: 0,
    };
}

impl Default for AuxOp {
    fn default() -> Self {
        AuxOp::NOP
    }
}

// ---------------------------------------------------------------------------
// slot sub-instruction

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandKind {
    None,
    /// Word read from data memory via the indexed AGU register; the register
    /// post-increments by one word.
    MemAgu,
    /// The indexed slot's output register as latched at the end of the
    /// previous cycle.
    SlotOut,
    /// The instruction's 4-bit immediate nibble.
    Imm,
}

impl OperandKind {
    pub fn code(self) -> u8 {
        match self {
            OperandKind::None => 0,
            OperandKind::MemAgu => 1,
            OperandKind::SlotOut => 2,
            OperandKind::Imm => 3,
        }
    }

    pub fn from_code(c: u8) -> OperandKind {
        match c & 3 {
            0 => OperandKind::None,
            1 => OperandKind::MemAgu,
            2 => OperandKind::SlotOut,
            _ => OperandKind::Imm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperandSel {
    pub kind: OperandKind,
    pub index: u8,
}

impl OperandSel {
    pub const NONE: OperandSel = OperandSel {
        kind: OperandKind::None,
        index: 0,
    };

    pub fn mem(agu: u8) -> OperandSel {
        OperandSel {
            kind: OperandKind::MemAgu,
            index: agu,
        }
    }

    pub fn slot_out(slot: u8) -> OperandSel {
        OperandSel {
            kind: OperandKind::SlotOut,
            index: slot,
        }
    }

    pub fn imm() -> OperandSel {
        OperandSel {
            kind: OperandKind::Imm,
            index: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DstKind {
    None,
    /// Result goes to the slot output register only.
    OutOnly,
    /// Result also written to data memory via the indexed AGU register
    /// (post-increment).
    MemAgu,
}

impl DstKind {
    pub fn code(self) -> u8 {
        match self {
            DstKind::None => 0,
            DstKind::OutOnly => 1,
            DstKind::MemAgu => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<DstKind> {
        Some(match c {
            0 => DstKind::None,
            1 => DstKind::OutOnly,
            2 => DstKind::MemAgu,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DstSel {
    pub kind: DstKind,
    pub index: u8,
}

impl DstSel {
    pub const NONE: DstSel = DstSel {
        kind: DstKind::None,
        index: 0,
    };

    pub fn out() -> DstSel {
        DstSel {
            kind: DstKind::OutOnly,
            index: 0,
        }
    }

    pub fn mem(agu: u8) -> DstSel {
        DstSel {
            kind: DstKind::MemAgu,
            index: agu,
        }
    }
}

/// One accelerator-slot sub-instruction. Opcode 0 is SLOT_NOP for every
/// kernel kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotInstr {
    /// 6-bit kernel-specific opcode.
    pub op: u8,
    pub src_a: OperandSel,
    pub src_b: OperandSel,
    pub dst: DstSel,
    /// 4-bit immediate fragment, paired with the IMM operand kind.
    pub imm: u8,
}

impl SlotInstr {
    pub const NOP: SlotInstr = SlotInstr {
        op: 0,
        src_a: OperandSel::NONE,
        src_b: OperandSel::NONE,
        dst: DstSel::NONE,
        imm: 0,
    };

    pub fn is_nop(&self) -> bool {
        self.op == 0
    }
}

impl Default for SlotInstr {
    fn default() -> Self {
        SlotInstr::NOP
    }
}

// ---------------------------------------------------------------------------
// VLIW

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Vliw {
    pub slots: [SlotInstr; NUM_SLOTS],
    pub flow: FlowOp,
    pub aux: AuxOp,
}

const SLOT_WIDTH: usize = 28;
const CTRL_OFF: usize = 140;

fn check(field: &'static str, value: u32, width: usize) -> Result<u32, EncodeError> {
    if width < 32 && value >= (1u32 << width) {
        Err(EncodeError::FieldRange { field, value })
    } else {
        Ok(value)
    }
}

fn encode_operand_sel(
    w: &mut VliwWord,
    off: usize,
    sel: OperandSel,
    name: &'static str,
) -> Result<(), EncodeError> {
    set_bits(w, off, 2, sel.kind.code() as u32);
    match sel.kind {
        OperandKind::MemAgu if sel.index >= NUM_AGU_REGS as u8 => {
            return Err(EncodeError::FieldRange {
                field: name,
                value: sel.index as u32,
            })
        }
        OperandKind::SlotOut if sel.index >= NUM_SLOTS as u8 => {
            return Err(EncodeError::FieldRange {
                field: name,
                value: sel.index as u32,
            })
        }
        _ => {}
    }
    set_bits(w, off + 2, 4, check(name, sel.index as u32, 4)?);
    Ok(())
}

/// Encode a VLIW into its 24-byte wire form.
pub fn encode_vliw(v: &Vliw) -> Result<VliwWord, EncodeError> {
    let mut w: VliwWord = [0; VLIW_BYTES];
    for (i, s) in v.slots.iter().enumerate() {
        let off = i * SLOT_WIDTH;
        set_bits(&mut w, off, 6, check("slot.op", s.op as u32, 6)?);
        encode_operand_sel(&mut w, off + 6, s.src_a, "slot.src_a.index")?;
        encode_operand_sel(&mut w, off + 12, s.src_b, "slot.src_b.index")?;
        set_bits(&mut w, off + 18, 2, s.dst.kind.code() as u32);
        set_bits(&mut w, off + 20, 3, check("slot.dst.index", s.dst.index as u32, 3)?);
        set_bits(&mut w, off + 23, 4, check("slot.imm", s.imm as u32, 4)?);
        // bit off+27 reserved
    }
    let f = &v.flow;
    set_bits(&mut w, CTRL_OFF, 4, f.opcode.code() as u32);
    set_bits(&mut w, CTRL_OFF + 4, 2, check("flow.param_set", f.param_set as u32, 2)?);
    set_bits(&mut w, CTRL_OFF + 6, 12, check("flow.operand", f.operand as u32, 12)?);
    set_bits(&mut w, CTRL_OFF + 18, 5, check("flow.acc_mask", f.acc_mask as u32, 5)?);
    set_bits(&mut w, CTRL_OFF + 23, 3, check("flow.trap_value", f.trap_value as u32, 3)?);
    let a = &v.aux;
    set_bits(&mut w, CTRL_OFF + 26, 3, a.opcode.code() as u32);
    if a.opcode.is_param_set_op() && a.target > 3 {
        return Err(EncodeError::FieldRange {
            field: "aux.target",
            value: a.target as u32,
        });
    }
    set_bits(&mut w, CTRL_OFF + 29, 3, check("aux.target", a.target as u32, 3)?);
    set_bits(&mut w, CTRL_OFF + 32, 12, check("aux.operand", a.operand as u32, 12)?);
    // bits 184..192 reserved
    Ok(w)
}

fn decode_operand_sel(w: &VliwWord, off: usize) -> Result<OperandSel, DecodeError> {
    let kind = OperandKind::from_code(get_bits(w, off, 2) as u8);
    let index = get_bits(w, off + 2, 4) as u8;
    match kind {
        OperandKind::MemAgu if index >= NUM_AGU_REGS as u8 => Err(DecodeError::Undefined {
            what: "MEM_AGU operand index",
            value: index as u32,
            bit_offset: off + 2,
        }),
        OperandKind::SlotOut if index >= NUM_SLOTS as u8 => Err(DecodeError::Undefined {
            what: "SLOT_OUT operand index",
            value: index as u32,
            bit_offset: off + 2,
        }),
        _ => Ok(OperandSel { kind, index }),
    }
}

/// Decode a 24-byte word. Total: every word either decodes or reports the
/// offending bit offset.
pub fn decode_vliw(w: &VliwWord) -> Result<Vliw, DecodeError> {
    let mut v = Vliw::default();
    for i in 0..NUM_SLOTS {
        let off = i * SLOT_WIDTH;
        let s = &mut v.slots[i];
        s.op = get_bits(w, off, 6) as u8;
        s.src_a = decode_operand_sel(w, off + 6)?;
        s.src_b = decode_operand_sel(w, off + 12)?;
        let dk = get_bits(w, off + 18, 2) as u8;
        s.dst = DstSel {
            kind: DstKind::from_code(dk).ok_or(DecodeError::Undefined {
                what: "dst selector kind",
                value: dk as u32,
                bit_offset: off + 18,
            })?,
            index: get_bits(w, off + 20, 3) as u8,
        };
        s.imm = get_bits(w, off + 23, 4) as u8;
        if get_bits(w, off + 27, 1) != 0 {
            return Err(DecodeError::ReservedBits { bit_offset: off + 27 });
        }
    }
    let fc = get_bits(w, CTRL_OFF, 4) as u8;
    v.flow = FlowOp {
        opcode: FlowOpcode::from_code(fc).ok_or(DecodeError::Undefined {
            what: "flow opcode",
            value: fc as u32,
            bit_offset: CTRL_OFF,
        })?,
        param_set: get_bits(w, CTRL_OFF + 4, 2) as u8,
        operand: get_bits(w, CTRL_OFF + 6, 12) as u16,
        acc_mask: get_bits(w, CTRL_OFF + 18, 5) as u8,
        trap_value: get_bits(w, CTRL_OFF + 23, 3) as u8,
    };
    let ac = get_bits(w, CTRL_OFF + 26, 3) as u8;
    let aux_opcode = AuxOpcode::from_code(ac).ok_or(DecodeError::Undefined {
        what: "aux opcode",
        value: ac as u32,
        bit_offset: CTRL_OFF + 26,
    })?;
    let aux_target = get_bits(w, CTRL_OFF + 29, 3) as u8;
    if aux_opcode.is_param_set_op() && aux_target > 3 {
        return Err(DecodeError::Undefined {
            what: "PS_* aux target",
            value: aux_target as u32,
            bit_offset: CTRL_OFF + 29,
        });
    }
    v.aux = AuxOp {
        opcode: aux_opcode,
        target: aux_target,
        operand: get_bits(w, CTRL_OFF + 32, 12) as u16,
    };
    if get_bits(w, CTRL_OFF + 44, 4) != 0 {
        return Err(DecodeError::ReservedBits { bit_offset: CTRL_OFF + 44 });
    }
    if get_bits(w, 188, 4) != 0 {
        return Err(DecodeError::ReservedBits { bit_offset: 188 });
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// kernel kinds

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelKind {
    None,
    Fmav,
    Div,
    Sqrt,
    Util,
    CnnMac,
    CnnSum,
    ShaBuff,
    ShaComp,
}

impl KernelKind {
    pub const ALL: [KernelKind; 9] = [
        KernelKind::None,
        KernelKind::Fmav,
        KernelKind::Div,
        KernelKind::Sqrt,
        KernelKind::Util,
        KernelKind::CnnMac,
        KernelKind::CnnSum,
        KernelKind::ShaBuff,
        KernelKind::ShaComp,
    ];

    pub fn id(self) -> u8 {
        match self {
            KernelKind::None => 0,
            KernelKind::Fmav => 1,
            KernelKind::Div => 2,
            KernelKind::Sqrt => 3,
            KernelKind::Util => 4,
            KernelKind::CnnMac => 5,
            KernelKind::CnnSum => 6,
            KernelKind::ShaBuff => 7,
            KernelKind::ShaComp => 8,
        }
    }

    pub fn from_id(id: u8) -> Option<KernelKind> {
        KernelKind::ALL.into_iter().find(|k| k.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::None => "NONE",
            KernelKind::Fmav => "FMAV",
            KernelKind::Div => "DIV",
            KernelKind::Sqrt => "SQRT",
            KernelKind::Util => "UTIL",
            KernelKind::CnnMac => "CNN_MAC",
            KernelKind::CnnSum => "CNN_SUM",
            KernelKind::ShaBuff => "SHA_BUFF",
            KernelKind::ShaComp => "SHA_COMP",
        }
    }

    pub fn from_name(s: &str) -> Option<KernelKind> {
        KernelKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Opcode mnemonics defined for this kind, indexed by opcode value.
    /// Opcode 0 (SLOT_NOP) is implicit and valid everywhere.
    pub fn op_table(self) -> &'static [(u8, &'static str)] {
        match self {
            KernelKind::None => &[],
            KernelKind::Fmav => &[
                (1, "ADD"),
                (2, "SUB"),
                (3, "MUL"),
                (4, "SUBSQ_ACC"),
                (5, "MAC"),
                (6, "CLR_ACC"),
                (7, "RD_ACC"),
            ],
            KernelKind::Div => &[(1, "DIV")],
            KernelKind::Sqrt => &[(1, "SQRT")],
            KernelKind::Util => &[(1, "MIN"), (2, "MAX"), (3, "ABS"), (4, "CMP")],
            KernelKind::CnnMac => &[
                (1, "CFG"),
                (2, "SET_WEIGHT"),
                (3, "MAC_CH"),
                (4, "RD_ACC"),
                (5, "NEXT_WIN"),
                (6, "NEXT_ROW"),
            ],
            KernelKind::CnnSum => &[
                (1, "SET_SCALE"),
                (2, "SET_ZP"),
                (3, "ACC_PUSH"),
                (4, "SUM_STEP"),
            ],
            KernelKind::ShaBuff => &[(1, "POP")],
            KernelKind::ShaComp => &[(1, "INIT"), (2, "ABSORB"), (3, "ROUND"), (4, "SQUEEZE")],
        }
    }

    pub fn op_defined(self, op: u8) -> bool {
        op == 0 || self.op_table().iter().any(|&(c, _)| c == op)
    }

    pub fn op_mnemonic(self, op: u8) -> Option<&'static str> {
        if op == 0 {
            return Some("NOP");
        }
        self.op_table().iter().find(|&&(c, _)| c == op).map(|&(_, n)| n)
    }

    pub fn op_from_mnemonic(self, s: &str) -> Option<u8> {
        if s == "NOP" {
            return Some(0);
        }
        self.op_table().iter().find(|&&(_, n)| n == s).map(|&(c, _)| c)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// program image

/// Binary container of assembled VLIWs plus slot-binding metadata and an
/// initial data-memory segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramImage {
    pub version: u16,
    pub slot_bindings: [KernelKind; NUM_SLOTS],
    pub entry_pc: u16,
    pub words: Vec<VliwWord>,
    pub memory: Vec<u32>,
}

impl Default for ProgramImage {
    fn default() -> Self {
        ProgramImage {
            version: IMAGE_VERSION,
            slot_bindings: [KernelKind::None; NUM_SLOTS],
            entry_pc: 0,
            words: Vec::new(),
            memory: Vec::new(),
        }
    }
}

impl ProgramImage {
    pub fn vliw_count(&self) -> u32 {
        self.words.len() as u32
    }

    /// Serialize to the on-disk layout:
    /// magic[4] | version:u16 | slot_bindings[5] | entry_pc:u16 |
    /// vliw_count:u32 | mem_words:u32 | words | memory (all little-endian).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(17 + self.words.len() * VLIW_BYTES + self.memory.len() * 4);
        out.extend_from_slice(&IMAGE_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        for k in &self.slot_bindings {
            out.push(k.id());
        }
        out.extend_from_slice(&self.entry_pc.to_le_bytes());
        out.extend_from_slice(&(self.words.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.memory.len() as u32).to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(w);
        }
        for m in &self.memory {
            out.extend_from_slice(&m.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<ProgramImage, ImageError> {
        if data.len() < 21 {
            return Err(ImageError::Truncated("header"));
        }
        if data[0..4] != IMAGE_MAGIC {
            return Err(ImageError::BadMagic);
        }
        let version = u16::from_le_bytes([data[4], data[5]]);
        if version != IMAGE_VERSION {
            return Err(ImageError::BadVersion(version));
        }
        let mut slot_bindings = [KernelKind::None; NUM_SLOTS];
        for i in 0..NUM_SLOTS {
            slot_bindings[i] =
                KernelKind::from_id(data[6 + i]).ok_or(ImageError::UnknownKind(data[6 + i]))?;
        }
        let entry_pc = u16::from_le_bytes([data[11], data[12]]);
        let vliw_count = u32::from_le_bytes([data[13], data[14], data[15], data[16]]);
        let mem_words = u32::from_le_bytes([data[17], data[18], data[19], data[20]]);
        if vliw_count as usize > MAX_VLIWS {
            return Err(ImageError::TooManyWords(vliw_count));
        }
        let body = &data[21..];
        let need = vliw_count as usize * VLIW_BYTES + mem_words as usize * 4;
        if body.len() < need {
            return Err(ImageError::Truncated("body"));
        }
        let mut words = Vec::with_capacity(vliw_count as usize);
        for i in 0..vliw_count as usize {
            let mut w = [0u8; VLIW_BYTES];
            w.copy_from_slice(&body[i * VLIW_BYTES..(i + 1) * VLIW_BYTES]);
            words.push(w);
        }
        let mem_base = vliw_count as usize * VLIW_BYTES;
        let mut memory = Vec::with_capacity(mem_words as usize);
        for i in 0..mem_words as usize {
            let o = mem_base + i * 4;
            memory.push(u32::from_le_bytes([
                body[o],
                body[o + 1],
                body[o + 2],
                body[o + 3],
            ]));
        }
        Ok(ProgramImage {
            version,
            slot_bindings,
            entry_pc,
            words,
            memory,
        })
    }
}

// ---------------------------------------------------------------------------
// static validation

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticDiagnostic {
    /// VLIW index the diagnostic refers to, if any.
    pub vliw: Option<u32>,
    pub message: String,
}

impl fmt::Display for StaticDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.vliw {
            Some(i) => write!(f, "vliw {}: {}", i, self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn diag(vliw: Option<u32>, message: impl Into<String>) -> StaticDiagnostic {
    StaticDiagnostic {
        vliw,
        message: message.into(),
    }
}

/// Static checks over a program image. Returns an empty list iff the image
/// is well-formed: all VLIWs decode, ACC-conditioned flow ops select at
/// least one slot, slot opcodes are defined for the bound kernels, and
/// statically known jump destinations are in range.
pub fn validate_program(p: &ProgramImage) -> Vec<StaticDiagnostic> {
    let mut out = Vec::new();
    let count = p.vliw_count();
    if p.entry_pc as u32 >= count {
        out.push(diag(None, format!("entry out of range: entry_pc {} with vliw_count {}", p.entry_pc, count)));
    }
    for (i, w) in p.words.iter().enumerate() {
        let i = i as u32;
        let v = match decode_vliw(w) {
            Ok(v) => v,
            Err(e) => {
                out.push(diag(Some(i), format!("does not decode: {e}")));
                continue;
            }
        };
        if v.flow.opcode.is_acc_conditioned() && v.flow.acc_mask == 0 {
            out.push(diag(Some(i), format!("{} with empty acc_mask", v.flow.opcode.mnemonic())));
        }
        for (s, instr) in v.slots.iter().enumerate() {
            let kind = p.slot_bindings[s];
            if !kind.op_defined(instr.op) {
                out.push(diag(
                    Some(i),
                    format!("slot {s}: opcode {} undefined for kernel {}", instr.op, kind),
                ));
            }
        }
        if v.aux.opcode == AuxOpcode::PsSetDest && v.aux.operand as u32 >= count {
            out.push(diag(
                Some(i),
                format!(
                    "static jump destination out of range: PS_SET_DEST {} with vliw_count {}",
                    v.aux.operand, count
                ),
            ));
        }
    }
    out
}
