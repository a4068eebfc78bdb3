//! Textual microcode assembler and disassembler.
//!
//! Line-oriented syntax:
//!   - `#` starts a comment.
//!   - Directives: `.slotbind N KIND`, `.entry LABEL`, `.word V`,
//!     `.raw 0x<48 hex digits>` (verbatim VLIW escape).
//!   - `NAME:` alone on a line labels the next statement.
//!   - A statement is `nop`, or clauses joined by `|`:
//!       `slotK: MNEM srcA, srcB -> dst` with operands `mem[aN]`, `out[N]`,
//!       `imm[V]`, `none` and destinations `mem[aN]`, `out`;
//!       `ctrl: AUXPART ; FLOWPART` with either part optional.
//!   - Numbers are decimal or 0x hex. Labels resolve to VLIW indices.

use std::collections::BTreeMap;
use std::fmt;

use crate::isa::{
    decode_vliw, encode_vliw, validate_program, AuxOp, AuxOpcode, DstKind, DstSel, FlowOp,
    FlowOpcode, KernelKind, OperandKind, OperandSel, ProgramImage, SlotInstr, Vliw, VliwWord,
    MAX_VLIWS, NUM_PARAM_SETS, NUM_SLOTS, VLIW_BYTES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// 1-based source line.
    pub line: u32,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.line, self.severity, self.message)
    }
}

#[derive(Debug)]
pub struct AsmOutput {
    pub image: ProgramImage,
    pub warnings: Vec<Diagnostic>,
    /// Label name -> VLIW index.
    pub labels: BTreeMap<String, u32>,
}

fn err(line: u32, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        severity: Severity::Error,
        line,
        message: message.into(),
    }
}

fn warn(line: u32, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        severity: Severity::Warning,
        line,
        message: message.into(),
    }
}

fn parse_num(s: &str) -> Option<u32> {
    let s = s.trim();
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u32::from_str_radix(hex, 16).ok()
    } else {
        s.parse().ok()
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A statement's encoded form before label patching.
enum PendingWord {
    Vliw(Vliw, Option<LabelRef>),
    Raw(VliwWord),
}

struct LabelRef {
    name: String,
    line: u32,
}

struct Assembler {
    bindings: [KernelKind; NUM_SLOTS],
    labels: BTreeMap<String, u32>,
    pending_labels: Vec<(String, u32)>,
    words: Vec<PendingWord>,
    lines: Vec<u32>,
    memory: Vec<u32>,
    entry: Option<(String, u32)>,
    errors: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
    /// param sets whose destination some PS_SET_DEST initializes
    dest_initialized: [bool; NUM_PARAM_SETS],
    /// (line, param_set) of jump flow ops, for the uninitialized-dest warning
    jump_uses: Vec<(u32, u8)>,
}

fn parse_operand(tok: &str) -> Result<(OperandSel, Option<u8>), String> {
    let tok = tok.trim();
    if tok == "none" {
        return Ok((OperandSel::NONE, None));
    }
    if let Some(inner) = tok.strip_prefix("mem[").and_then(|t| t.strip_suffix(']')) {
        let reg = inner
            .trim()
            .strip_prefix('a')
            .and_then(parse_num)
            .ok_or_else(|| format!("bad AGU register in {tok:?}"))?;
        if reg > 7 {
            return Err(format!("AGU register out of range in {tok:?}"));
        }
        return Ok((OperandSel::mem(reg as u8), None));
    }
    if let Some(inner) = tok.strip_prefix("out[").and_then(|t| t.strip_suffix(']')) {
        let slot = parse_num(inner).ok_or_else(|| format!("bad slot index in {tok:?}"))?;
        if slot as usize >= NUM_SLOTS {
            return Err(format!("slot index out of range in {tok:?}"));
        }
        return Ok((OperandSel::slot_out(slot as u8), None));
    }
    if let Some(inner) = tok.strip_prefix("imm[").and_then(|t| t.strip_suffix(']')) {
        let v = parse_num(inner).ok_or_else(|| format!("bad immediate in {tok:?}"))?;
        if v > 15 {
            return Err(format!("immediate out of nibble range in {tok:?}"));
        }
        return Ok((OperandSel::imm(), Some(v as u8)));
    }
    Err(format!("unrecognized operand {tok:?}"))
}

fn parse_dst(tok: &str) -> Result<DstSel, String> {
    let tok = tok.trim();
    if tok == "out" {
        return Ok(DstSel::out());
    }
    if let Some(inner) = tok.strip_prefix("mem[").and_then(|t| t.strip_suffix(']')) {
        let reg = inner
            .trim()
            .strip_prefix('a')
            .and_then(parse_num)
            .ok_or_else(|| format!("bad AGU register in {tok:?}"))?;
        if reg > 7 {
            return Err(format!("AGU register out of range in {tok:?}"));
        }
        return Ok(DstSel::mem(reg as u8));
    }
    Err(format!("unrecognized destination {tok:?}"))
}

fn parse_reg(tok: &str, prefix: char, max: u32, what: &str) -> Result<u8, String> {
    let t = tok.trim();
    t.strip_prefix(prefix)
        .and_then(parse_num)
        .filter(|&v| v <= max)
        .map(|v| v as u8)
        .ok_or_else(|| format!("expected {what} (e.g. {prefix}0), got {t:?}"))
}

impl Assembler {
    fn new() -> Self {
        Assembler {
            bindings: [KernelKind::None; NUM_SLOTS],
            labels: BTreeMap::new(),
            pending_labels: Vec::new(),
            words: Vec::new(),
            lines: Vec::new(),
            memory: Vec::new(),
            entry: None,
            errors: Vec::new(),
            warnings: Vec::new(),
            dest_initialized: [false; NUM_PARAM_SETS],
            jump_uses: Vec::new(),
        }
    }

    fn attach_labels(&mut self) {
        let idx = self.words.len() as u32;
        for (name, line) in self.pending_labels.drain(..) {
            if self.labels.insert(name.clone(), idx).is_some() {
                self.errors.push(err(line, format!("duplicate label {name:?}")));
            }
        }
    }

    fn directive(&mut self, line_no: u32, text: &str) {
        let mut parts = text.split_whitespace();
        let head = parts.next().unwrap();
        match head {
            ".slotbind" => {
                let (Some(n), Some(kind)) = (parts.next(), parts.next()) else {
                    self.errors.push(err(line_no, ".slotbind requires a slot number and a kernel kind"));
                    return;
                };
                let Some(n) = parse_num(n).filter(|&n| (n as usize) < NUM_SLOTS) else {
                    self.errors.push(err(line_no, format!("bad slot number {n:?}")));
                    return;
                };
                let Some(kind) = KernelKind::from_name(kind) else {
                    self.errors.push(err(line_no, format!("unknown kernel kind {kind:?}")));
                    return;
                };
                self.bindings[n as usize] = kind;
            }
            ".entry" => {
                let Some(label) = parts.next() else {
                    self.errors.push(err(line_no, ".entry requires a label"));
                    return;
                };
                self.entry = Some((label.to_string(), line_no));
            }
            ".word" => {
                let Some(v) = parts.next().and_then(parse_num) else {
                    self.errors.push(err(line_no, ".word requires a numeric value"));
                    return;
                };
                self.memory.push(v);
            }
            ".raw" => {
                let Some(hex) = parts.next().and_then(|t| t.strip_prefix("0x")) else {
                    self.errors.push(err(line_no, ".raw requires 0x<48 hex digits>"));
                    return;
                };
                if hex.len() != VLIW_BYTES * 2 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                    self.errors.push(err(line_no, ".raw requires exactly 48 hex digits"));
                    return;
                }
                let mut w: VliwWord = [0; VLIW_BYTES];
                for (i, b) in w.iter_mut().enumerate() {
                    *b = u8::from_str_radix(&hex[i * 2..i * 2 + 2], 16).unwrap();
                }
                self.attach_labels();
                self.words.push(PendingWord::Raw(w));
                self.lines.push(line_no);
            }
            _ => self.errors.push(err(line_no, format!("unknown directive {head:?}"))),
        }
        if parts.next().is_some() {
            self.errors.push(err(line_no, format!("trailing tokens after {head}")));
        }
    }

    fn slot_clause(&mut self, line_no: u32, slot: usize, body: &str, v: &mut Vliw) {
        let kind = self.bindings[slot];
        let (ops_part, dst_part) = match body.split_once("->") {
            Some((l, r)) => (l.trim(), Some(r.trim())),
            None => (body.trim(), None),
        };
        let mut toks = ops_part.splitn(2, char::is_whitespace);
        let mnem = toks.next().unwrap_or("").trim();
        let Some(op) = kind.op_from_mnemonic(mnem) else {
            self.errors.push(err(
                line_no,
                format!("unknown mnemonic {mnem:?} for slot {slot} kernel {kind}"),
            ));
            return;
        };
        let mut si = SlotInstr { op, ..SlotInstr::NOP };
        let mut imm: Option<u8> = None;
        if let Some(rest) = toks.next() {
            let operands: Vec<&str> = rest.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if operands.len() > 2 {
                self.errors.push(err(line_no, "at most two source operands"));
                return;
            }
            for (i, tok) in operands.iter().enumerate() {
                match parse_operand(tok) {
                    Ok((sel, tok_imm)) => {
                        if let Some(n) = tok_imm {
                            if imm.is_some_and(|prev| prev != n) {
                                self.errors.push(err(line_no, "conflicting immediate values in one slot"));
                                return;
                            }
                            imm = Some(n);
                        }
                        if i == 0 {
                            si.src_a = sel;
                        } else {
                            si.src_b = sel;
                        }
                    }
                    Err(m) => {
                        self.errors.push(err(line_no, m));
                        return;
                    }
                }
            }
        }
        if let Some(dst) = dst_part {
            match parse_dst(dst) {
                Ok(d) => si.dst = d,
                Err(m) => {
                    self.errors.push(err(line_no, m));
                    return;
                }
            }
        }
        si.imm = imm.unwrap_or(0);
        v.slots[slot] = si;
    }

    fn aux_part(&mut self, line_no: u32, opcode: AuxOpcode, rest: &str, v: &mut Vliw) -> Option<LabelRef> {
        let args: Vec<&str> = rest.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let mut aux = AuxOp { opcode, ..AuxOp::NOP };
        let mut label = None;
        let res = (|| -> Result<(), String> {
            match opcode {
                AuxOpcode::Nop => {
                    if !args.is_empty() {
                        return Err("AUX_NOP takes no arguments".into());
                    }
                }
                AuxOpcode::PsCntInc | AuxOpcode::PsCntReset => {
                    let [t] = args[..] else {
                        return Err(format!("{} takes a parameter set", opcode.mnemonic()));
                    };
                    aux.target = parse_reg(t, 'p', 3, "parameter set")?;
                }
                AuxOpcode::PsCntSet => {
                    let [t, n] = args[..] else {
                        return Err("PS_CNT_SET takes a parameter set and a value".into());
                    };
                    aux.target = parse_reg(t, 'p', 3, "parameter set")?;
                    aux.operand = parse_num(n).ok_or(format!("bad value {n:?}"))? as u16;
                }
                AuxOpcode::PsSetDest => {
                    let [t, d] = args[..] else {
                        return Err("PS_SET_DEST takes a parameter set and a destination".into());
                    };
                    aux.target = parse_reg(t, 'p', 3, "parameter set")?;
                    if let Some(n) = parse_num(d) {
                        aux.operand = n as u16;
                    } else if is_ident(d) {
                        label = Some(LabelRef { name: d.to_string(), line: line_no });
                    } else {
                        return Err(format!("bad destination {d:?}"));
                    }
                    self.dest_initialized[aux.target as usize] = true;
                }
                AuxOpcode::AguSet | AuxOpcode::AguAdd => {
                    let [t, n] = args[..] else {
                        return Err(format!("{} takes an AGU register and a value", opcode.mnemonic()));
                    };
                    aux.target = parse_reg(t, 'a', 7, "AGU register")?;
                    aux.operand = parse_num(n).ok_or(format!("bad value {n:?}"))? as u16;
                }
            }
            Ok(())
        })();
        if let Err(m) = res {
            self.errors.push(err(line_no, m));
            return None;
        }
        v.aux = aux;
        label
    }

    fn flow_part(&mut self, line_no: u32, opcode: FlowOpcode, rest: &str, v: &mut Vliw) {
        let mut flow = FlowOp { opcode, ..FlowOp::NOP };
        let res = (|| -> Result<(), String> {
            let mut positional = Vec::new();
            for arg in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                if let Some(m) = arg.strip_prefix("mask=") {
                    let m = parse_num(m).ok_or(format!("bad mask {arg:?}"))?;
                    if m > 31 {
                        return Err(format!("mask out of 5-bit range in {arg:?}"));
                    }
                    flow.acc_mask = m as u8;
                } else if let Some(t) = arg.strip_prefix("trap=") {
                    let t = parse_num(t).ok_or(format!("bad trap value {arg:?}"))?;
                    if t > 7 {
                        return Err(format!("trap value out of 3-bit range in {arg:?}"));
                    }
                    flow.trap_value = t as u8;
                } else {
                    positional.push(arg);
                }
            }
            let mut pos = positional.into_iter();
            let needs_set = opcode.is_jump();
            if needs_set {
                let t = pos.next().ok_or_else(|| format!("{} takes a parameter set", opcode.mnemonic()))?;
                flow.param_set = parse_reg(t, 'p', 3, "parameter set")?;
            }
            let needs_operand = !matches!(opcode, FlowOpcode::NoJmp | FlowOpcode::AlwJmp | FlowOpcode::TrapAlw);
            if needs_operand {
                let n = pos.next().ok_or_else(|| format!("{} takes an operand", opcode.mnemonic()))?;
                let n = parse_num(n).ok_or(format!("bad operand {n:?}"))?;
                if n > 4095 {
                    return Err("operand out of 12-bit range".into());
                }
                flow.operand = n as u16;
            }
            if opcode == FlowOpcode::TrapAlw {
                if let Some(t) = pos.next() {
                    let t = parse_num(t).ok_or(format!("bad trap value {t:?}"))?;
                    if t > 7 {
                        return Err("trap value out of 3-bit range".into());
                    }
                    flow.trap_value = t as u8;
                }
            }
            if let Some(extra) = pos.next() {
                return Err(format!("unexpected argument {extra:?}"));
            }
            if opcode.is_acc_conditioned() && flow.acc_mask == 0 {
                return Err(format!("{} requires a nonzero mask=", opcode.mnemonic()));
            }
            Ok(())
        })();
        if let Err(m) = res {
            self.errors.push(err(line_no, m));
            return;
        }
        if opcode.is_jump() {
            self.jump_uses.push((line_no, flow.param_set));
        }
        v.flow = flow;
    }

    fn ctrl_clause(&mut self, line_no: u32, body: &str, v: &mut Vliw) -> Option<LabelRef> {
        let mut label = None;
        let mut seen_aux = false;
        let mut seen_flow = false;
        for part in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (head, rest) = match part.split_once(char::is_whitespace) {
                Some((h, r)) => (h, r),
                None => (part, ""),
            };
            if let Some(opcode) = AuxOpcode::from_mnemonic(head) {
                if seen_aux {
                    self.errors.push(err(line_no, "multiple aux ops in one ctrl clause"));
                    return label;
                }
                seen_aux = true;
                if let Some(l) = self.aux_part(line_no, opcode, rest, v) {
                    label = Some(l);
                }
            } else if let Some(opcode) = FlowOpcode::from_mnemonic(head) {
                if seen_flow {
                    self.errors.push(err(line_no, "multiple flow ops in one ctrl clause"));
                    return label;
                }
                seen_flow = true;
                self.flow_part(line_no, opcode, rest, v);
            } else {
                self.errors.push(err(line_no, format!("unknown controller mnemonic {head:?}")));
                return label;
            }
        }
        label
    }

    fn statement(&mut self, line_no: u32, text: &str) {
        self.attach_labels();
        let mut v = Vliw::default();
        let mut label = None;
        if text.trim() == "nop" {
            self.words.push(PendingWord::Vliw(v, None));
            self.lines.push(line_no);
            return;
        }
        for clause in text.split('|').map(str::trim) {
            let Some((head, body)) = clause.split_once(':') else {
                self.errors.push(err(line_no, format!("expected `slotN:` or `ctrl:` clause, got {clause:?}")));
                return;
            };
            let head = head.trim();
            if head == "ctrl" {
                if let Some(l) = self.ctrl_clause(line_no, body, &mut v) {
                    label = Some(l);
                }
            } else if let Some(n) = head.strip_prefix("slot").and_then(parse_num) {
                if n as usize >= NUM_SLOTS {
                    self.errors.push(err(line_no, format!("slot index {n} out of range")));
                    return;
                }
                self.slot_clause(line_no, n as usize, body, &mut v);
            } else {
                self.errors.push(err(line_no, format!("unknown clause head {head:?}")));
                return;
            }
        }
        self.words.push(PendingWord::Vliw(v, label));
        self.lines.push(line_no);
    }
}

/// Two-pass assembly: parse statements, then patch label references.
/// Errors are collected and returned together; warnings accompany a
/// successful image.
pub fn assemble(src: &str) -> Result<AsmOutput, Vec<Diagnostic>> {
    let mut a = Assembler::new();
    for (i, raw_line) in src.lines().enumerate() {
        let line_no = i as u32 + 1;
        let text = raw_line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if let Some(name) = text.strip_suffix(':') {
            if is_ident(name) && !name.starts_with("slot") && name != "ctrl" {
                a.pending_labels.push((name.to_string(), line_no));
                continue;
            }
        }
        if text.starts_with('.') {
            a.directive(line_no, text);
        } else {
            a.statement(line_no, text);
        }
    }
    for (name, line) in a.pending_labels.drain(..) {
        a.errors.push(err(line, format!("label {name:?} attaches to no statement")));
    }
    if a.words.len() > MAX_VLIWS {
        a.errors.push(err(0, format!("program exceeds {MAX_VLIWS} VLIWs")));
    }

    // pass 2: resolve labels, encode
    let mut image = ProgramImage {
        slot_bindings: a.bindings,
        memory: std::mem::take(&mut a.memory),
        ..ProgramImage::default()
    };
    let mut vliw_lines = Vec::new();
    for (w, &line) in a.words.iter_mut().zip(&a.lines) {
        match w {
            PendingWord::Raw(raw) => {
                image.words.push(*raw);
                vliw_lines.push(line);
            }
            PendingWord::Vliw(v, label) => {
                if let Some(l) = label {
                    match a.labels.get(&l.name) {
                        Some(&idx) if idx < 4096 => v.aux.operand = idx as u16,
                        Some(&idx) => a.errors.push(err(l.line, format!("label index {idx} out of 12-bit range"))),
                        None => a.errors.push(err(l.line, format!("undefined label {:?}", l.name))),
                    }
                }
                match encode_vliw(v) {
                    Ok(word) => {
                        image.words.push(word);
                        vliw_lines.push(line);
                    }
                    Err(e) => a.errors.push(err(line, e.to_string())),
                }
            }
        }
    }
    if let Some((label, line)) = &a.entry {
        match parse_num(label).or_else(|| a.labels.get(label).copied()) {
            Some(idx) if idx <= u16::MAX as u32 => image.entry_pc = idx as u16,
            Some(_) => a.errors.push(err(*line, "entry index out of range")),
            None => a.errors.push(err(*line, format!("undefined entry label {label:?}"))),
        }
    }

    if a.errors.is_empty() {
        for d in validate_program(&image) {
            let line = d.vliw.map(|i| vliw_lines.get(i as usize).copied().unwrap_or(0)).unwrap_or(0);
            a.errors.push(err(line, d.message));
        }
    }
    if !a.errors.is_empty() {
        return Err(a.errors);
    }

    for &(line, set) in &a.jump_uses {
        if !a.dest_initialized[set as usize] {
            a.warnings.push(warn(
                line,
                format!("parameter set {set} destination never initialized"),
            ));
        }
    }
    a.warnings.sort_by_key(|d| d.line);
    a.warnings.dedup();
    Ok(AsmOutput {
        image,
        warnings: a.warnings,
        labels: a.labels,
    })
}

// ---------------------------------------------------------------------------
// disassembler

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisasmError {
    /// VLIW index that failed to decode.
    pub vliw: u32,
    pub message: String,
}

impl fmt::Display for DisasmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vliw {}: {}", self.vliw, self.message)
    }
}

impl std::error::Error for DisasmError {}

/// Zero every field the decoded semantics ignore, giving the encoding the
/// canonical text maps back to.
fn canonicalize(v: &Vliw) -> Vliw {
    let mut c = Vliw::default();
    for (i, s) in v.slots.iter().enumerate() {
        if s.is_nop() {
            continue;
        }
        let mut cs = *s;
        for sel in [&mut cs.src_a, &mut cs.src_b] {
            if sel.kind == OperandKind::None || sel.kind == OperandKind::Imm {
                sel.index = 0;
            }
        }
        if cs.dst.kind != DstKind::MemAgu {
            cs.dst.index = 0;
        }
        if cs.src_a.kind != OperandKind::Imm && cs.src_b.kind != OperandKind::Imm {
            cs.imm = 0;
        }
        c.slots[i] = cs;
    }
    c.aux = match v.aux.opcode {
        AuxOpcode::Nop => AuxOp::NOP,
        AuxOpcode::PsCntInc | AuxOpcode::PsCntReset => AuxOp { operand: 0, ..v.aux },
        _ => v.aux,
    };
    c.flow = {
        let f = v.flow;
        use FlowOpcode::*;
        match f.opcode {
            NoJmp => FlowOp::NOP,
            AlwJmp => FlowOp { operand: 0, acc_mask: 0, trap_value: 0, ..f },
            JmpIfCntEq | JmpIfCntNeq | JmpIfCntLt | JmpIfCntGt => {
                FlowOp { acc_mask: 0, trap_value: 0, ..f }
            }
            JmpIfAccEq | JmpIfAccNeq | JmpIfAccLt | JmpIfAccGt => FlowOp { trap_value: 0, ..f },
            TrapAlw => FlowOp { param_set: 0, operand: 0, acc_mask: 0, ..f },
            TrapIfAccEq | TrapIfAccNeq | TrapIfAccLt | TrapIfAccGt => FlowOp { param_set: 0, ..f },
        }
    };
    c
}

fn operand_text(sel: OperandSel, imm: u8) -> String {
    match sel.kind {
        OperandKind::None => "none".to_string(),
        OperandKind::MemAgu => format!("mem[a{}]", sel.index),
        OperandKind::SlotOut => format!("out[{}]", sel.index),
        OperandKind::Imm => format!("imm[{imm}]"),
    }
}

fn slot_text(slot: usize, kind: KernelKind, s: &SlotInstr) -> String {
    let mnem = kind.op_mnemonic(s.op).expect("validated opcode");
    let mut t = format!("slot{slot}: {mnem}");
    if s.src_a.kind != OperandKind::None || s.src_b.kind != OperandKind::None {
        t.push(' ');
        t.push_str(&operand_text(s.src_a, s.imm));
        if s.src_b.kind != OperandKind::None {
            t.push_str(", ");
            t.push_str(&operand_text(s.src_b, s.imm));
        }
    }
    match s.dst.kind {
        DstKind::None => {}
        DstKind::OutOnly => t.push_str(" -> out"),
        DstKind::MemAgu => t.push_str(&format!(" -> mem[a{}]", s.dst.index)),
    }
    t
}

fn aux_text(a: &AuxOp, labels: &BTreeMap<u32, String>) -> String {
    let m = a.opcode.mnemonic();
    match a.opcode {
        AuxOpcode::Nop => m.to_string(),
        AuxOpcode::PsCntInc | AuxOpcode::PsCntReset => format!("{m} p{}", a.target),
        AuxOpcode::PsCntSet => format!("{m} p{}, {}", a.target, a.operand),
        AuxOpcode::PsSetDest => match labels.get(&(a.operand as u32)) {
            Some(l) => format!("{m} p{}, {l}", a.target),
            None => format!("{m} p{}, {}", a.target, a.operand),
        },
        AuxOpcode::AguSet | AuxOpcode::AguAdd => format!("{m} a{}, {}", a.target, a.operand),
    }
}

fn flow_text(f: &FlowOp) -> String {
    use FlowOpcode::*;
    let m = f.opcode.mnemonic();
    match f.opcode {
        NoJmp => m.to_string(),
        AlwJmp => format!("{m} p{}", f.param_set),
        JmpIfCntEq | JmpIfCntNeq | JmpIfCntLt | JmpIfCntGt => {
            format!("{m} p{}, {}", f.param_set, f.operand)
        }
        JmpIfAccEq | JmpIfAccNeq | JmpIfAccLt | JmpIfAccGt => {
            format!("{m} p{}, {}, mask={}", f.param_set, f.operand, f.acc_mask)
        }
        TrapAlw => format!("{m} {}", f.trap_value),
        TrapIfAccEq | TrapIfAccNeq | TrapIfAccLt | TrapIfAccGt => {
            format!("{m} {}, mask={}, trap={}", f.operand, f.acc_mask, f.trap_value)
        }
    }
}

/// Render an image as canonical assembler text. Statically known jump
/// destinations and the entry point get synthetic `L<index>` labels.
/// Decodable words whose encoding is not canonical are emitted as `.raw`
/// escapes so the round trip stays bit-exact; undecodable words are an
/// error naming the VLIW index.
pub fn disassemble(p: &ProgramImage) -> Result<String, DisasmError> {
    let mut decoded = Vec::with_capacity(p.words.len());
    for (i, w) in p.words.iter().enumerate() {
        decoded.push(decode_vliw(w).map_err(|e| DisasmError {
            vliw: i as u32,
            message: e.to_string(),
        })?);
    }

    let mut label_targets: Vec<u32> = decoded
        .iter()
        .filter(|v| v.aux.opcode == AuxOpcode::PsSetDest)
        .map(|v| v.aux.operand as u32)
        .filter(|&t| t < p.words.len() as u32)
        .collect();
    if !p.words.is_empty() {
        label_targets.push(p.entry_pc as u32);
    }
    label_targets.sort_unstable();
    label_targets.dedup();
    let labels: BTreeMap<u32, String> = label_targets.iter().map(|&t| (t, format!("L{t}"))).collect();

    let mut out = String::new();
    for (i, kind) in p.slot_bindings.iter().enumerate() {
        if *kind != KernelKind::None {
            out.push_str(&format!(".slotbind {i} {kind}\n"));
        }
    }
    if !p.words.is_empty() {
        out.push_str(&format!(".entry L{}\n", p.entry_pc));
    }
    for m in &p.memory {
        out.push_str(&format!(".word 0x{m:x}\n"));
    }
    for (i, (v, word)) in decoded.iter().zip(&p.words).enumerate() {
        if let Some(l) = labels.get(&(i as u32)) {
            out.push_str(l);
            out.push_str(":\n");
        }
        let canon = canonicalize(v);
        if &encode_vliw(&canon).map_err(|e| DisasmError {
            vliw: i as u32,
            message: e.to_string(),
        })? != word
        {
            out.push_str(".raw 0x");
            for b in word {
                out.push_str(&format!("{b:02x}"));
            }
            out.push('\n');
            continue;
        }
        let mut clauses = Vec::new();
        for (s, si) in canon.slots.iter().enumerate() {
            if !si.is_nop() {
                clauses.push(slot_text(s, p.slot_bindings[s], si));
            }
        }
        let mut ctrl_parts = Vec::new();
        if canon.aux != AuxOp::NOP {
            clauses_push_label_aux(&mut ctrl_parts, &canon.aux, &labels);
        }
        if canon.flow != FlowOp::NOP {
            ctrl_parts.push(flow_text(&canon.flow));
        }
        if !ctrl_parts.is_empty() {
            clauses.push(format!("ctrl: {}", ctrl_parts.join(" ; ")));
        }
        if clauses.is_empty() {
            out.push_str("nop\n");
        } else {
            out.push_str(&clauses.join(" | "));
            out.push('\n');
        }
    }
    Ok(out)
}

fn clauses_push_label_aux(parts: &mut Vec<String>, a: &AuxOp, labels: &BTreeMap<u32, String>) {
    parts.push(aux_text(a, labels));
}
