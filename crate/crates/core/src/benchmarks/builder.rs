//! Small helper for emitting assembler text from benchmark generators,
//! tracking VLIW indices so generators can report marker PCs.

use thiserror::Error;

use crate::asm::{assemble, AsmOutput, Diagnostic};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("parameter out of range: {0}")]
    Param(String),
    #[error("generated program fails to assemble: {0}")]
    Assemble(String),
}

pub fn param_err(msg: impl Into<String>) -> GenError {
    GenError::Param(msg.into())
}

#[derive(Default)]
pub struct Asm {
    lines: Vec<String>,
    next_label: u32,
    vliw_count: u32,
}

impl Asm {
    pub fn new() -> Asm {
        Asm::default()
    }

    /// Emit a non-statement line (directive or comment).
    pub fn dir(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    /// Emit one VLIW statement; returns its index.
    pub fn stmt(&mut self, line: impl Into<String>) -> u32 {
        self.lines.push(line.into());
        self.vliw_count += 1;
        self.vliw_count - 1
    }

    /// Index of the next statement to be emitted.
    pub fn here(&self) -> u32 {
        self.vliw_count
    }

    pub fn fresh_label(&mut self, hint: &str) -> String {
        self.next_label += 1;
        format!("{hint}_{}", self.next_label)
    }

    /// Place `label` at the next statement.
    pub fn bind(&mut self, label: &str) {
        self.lines.push(format!("{label}:"));
    }

    pub fn slotbind(&mut self, slot: usize, kind: &str) {
        self.dir(format!(".slotbind {slot} {kind}"));
    }

    pub fn word(&mut self, v: u32) {
        self.dir(format!(".word 0x{v:x}"));
    }

    pub fn agu_set(&mut self, reg: u8, val: u32) -> u32 {
        self.stmt(format!("ctrl: AGU_SET a{reg}, {val}"))
    }

    pub fn agu_add(&mut self, reg: u8, val: u32) -> u32 {
        self.stmt(format!("ctrl: AGU_ADD a{reg}, {val}"))
    }

    /// `PS_SET_DEST pN, label` prologue for a loop or branch target.
    pub fn set_dest(&mut self, set: u8, label: &str) -> u32 {
        self.stmt(format!("ctrl: PS_SET_DEST p{set}, {label}"))
    }

    /// Loop entry: reset the counter of `set`. The back edge is emitted by
    /// `back_edge`.
    pub fn cnt_reset(&mut self, set: u8) -> u32 {
        self.stmt(format!("ctrl: PS_CNT_SET p{set}, 0"))
    }

    /// One-VLIW do-while back edge: increment, then jump while counter <
    /// `trips`. Requires trips >= 1.
    pub fn back_edge(&mut self, set: u8, trips: u32) -> u32 {
        self.stmt(format!("ctrl: PS_CNT_INC p{set} ; JMP_IF_CNT_LT p{set}, {trips}"))
    }

    /// Unconditional jump (two VLIWs: destination load + ALW_JMP).
    pub fn goto(&mut self, set: u8, label: &str) -> u32 {
        self.set_dest(set, label);
        self.stmt(format!("ctrl: ALW_JMP p{set}"))
    }

    /// Conditional branch on a latched 2-bit control signal: jump to
    /// `label` when slot `slot`'s signal equals `code` (two VLIWs).
    pub fn jif_sig_eq(&mut self, set: u8, slot: usize, code: u8, label: &str) -> u32 {
        self.set_dest(set, label);
        self.stmt(format!(
            "ctrl: JMP_IF_ACC_EQ p{set}, {code}, mask={}",
            1u8 << slot
        ))
    }

    pub fn text(&self) -> String {
        let mut t = self.lines.join("\n");
        t.push('\n');
        t
    }

    pub fn assemble(&self) -> Result<AsmOutput, GenError> {
        assemble(&self.text()).map_err(|errs: Vec<Diagnostic>| {
            GenError::Assemble(
                errs.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "),
            )
        })
    }
}
